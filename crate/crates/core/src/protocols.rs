//! Local wiring protocols stored extensionally as truth tables.
//!
//! A table over `k` input bits is a bit mask of length `2^k`. For a party's
//! strategy the lookup index is `w + 2·h`, where `w` is the party's original
//! input bit and `h = o₁ + 2·o₂ + …` is its outcome history read
//! little-endian, so extending the history appends high bits.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest depth a strategy may have; the output table then has 2^17 bits.
pub const MAX_DEPTH: usize = 16;

/// A Boolean function on `vars` bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    vars: u32,
    words: Vec<u64>,
}

impl TruthTable {
    pub fn zeros(vars: u32) -> Self {
        assert!(vars as usize <= MAX_DEPTH + 1, "truth table over {vars} bits is too large");
        let bits = 1usize << vars;
        Self { vars, words: vec![0; bits.div_ceil(64)] }
    }

    pub fn from_fn(vars: u32, f: impl Fn(usize) -> bool) -> Self {
        let mut t = Self::zeros(vars);
        for idx in 0..t.len() {
            if f(idx) {
                t.words[idx / 64] |= 1 << (idx % 64);
            }
        }
        t
    }

    /// Table whose entries are the low `2^vars` bits of `mask`.
    pub fn from_mask(vars: u32, mask: u64) -> Self {
        assert!(vars <= 6, "from_mask supports at most 6 variables");
        Self::from_fn(vars, |i| (mask >> i) & 1 == 1)
    }

    pub fn vars(&self) -> u32 {
        self.vars
    }

    pub fn len(&self) -> usize {
        1 << self.vars
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn get(&self, idx: usize) -> usize {
        ((self.words[idx / 64] >> (idx % 64)) & 1) as usize
    }

    /// The low word; the whole table when `vars <= 6`.
    pub fn mask(&self) -> u64 {
        self.words[0]
    }

    /// Fixed-width, most-significant-digit-first hex. Tables of equal arity
    /// compare lexicographically in numeric order.
    pub fn to_hex(&self) -> String {
        let digits = (self.len() / 4).max(1);
        let mut s = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let nibble = (self.words[d * 4 / 64] >> ((d * 4) % 64)) & 0xf;
            s.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        s
    }

    pub fn from_hex(vars: u32, hex: &str) -> Result<Self> {
        if vars as usize > MAX_DEPTH + 1 {
            return Err(Error::InvalidProtocol(format!("table over {vars} bits is too large")));
        }
        let mut t = Self::zeros(vars);
        let digits = (t.len() / 4).max(1);
        if hex.len() != digits {
            return Err(Error::InvalidProtocol(format!(
                "table over {vars} bits needs {digits} hex digits, got {:?}",
                hex
            )));
        }
        for (pos, ch) in hex.chars().enumerate() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| Error::InvalidProtocol(format!("bad hex digit {ch:?}")))? as u64;
            let d = digits - 1 - pos;
            if d * 4 + 4 > t.len() && nibble >> (t.len() - d * 4) != 0 {
                return Err(Error::InvalidProtocol(format!("{hex:?} sets bits beyond 2^{vars}")));
            }
            t.words[d * 4 / 64] |= nibble << ((d * 4) % 64);
        }
        Ok(t)
    }
}

/// One party's depth-`n` wiring.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LocalStrategy {
    steps: Vec<TruthTable>,
    output: TruthTable,
}

impl LocalStrategy {
    /// `steps[i]` must be a table over `i + 1` bits (input plus `i` outcomes)
    /// and `output` a table over `n + 1` bits.
    pub fn new(steps: Vec<TruthTable>, output: TruthTable) -> Result<Self> {
        let n = steps.len();
        if n == 0 || n > MAX_DEPTH {
            return Err(Error::InvalidProtocol(format!("depth {n} outside 1..={MAX_DEPTH}")));
        }
        for (i, t) in steps.iter().enumerate() {
            if t.vars() as usize != i + 1 {
                return Err(Error::InvalidProtocol(format!(
                    "step {} table has {} bits, expected {}",
                    i + 1,
                    t.len(),
                    1usize << (i + 1)
                )));
            }
        }
        if output.vars() as usize != n + 1 {
            return Err(Error::InvalidProtocol(format!(
                "output table has {} bits, expected {}",
                output.len(),
                1usize << (n + 1)
            )));
        }
        Ok(Self { steps, output })
    }

    /// Builds tables from closures. `step(i, w, history)` gives the input to
    /// box `i` (0-based) after outcomes `history` (length `i`); `output(w,
    /// history)` gives the final bit after all `depth` outcomes.
    pub fn from_fns(
        depth: usize,
        step: impl Fn(usize, usize, &[usize]) -> usize,
        output: impl Fn(usize, &[usize]) -> usize,
    ) -> Result<Self> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::InvalidProtocol(format!("depth {depth} outside 1..={MAX_DEPTH}")));
        }
        let decode = |idx: usize, len: usize| -> (usize, Vec<usize>) {
            (idx & 1, (0..len).map(|j| (idx >> (j + 1)) & 1).collect())
        };
        let steps = (0..depth)
            .map(|i| {
                TruthTable::from_fn(i as u32 + 1, |idx| {
                    let (w, h) = decode(idx, i);
                    step(i, w, &h) & 1 == 1
                })
            })
            .collect();
        let out = TruthTable::from_fn(depth as u32 + 1, |idx| {
            let (w, h) = decode(idx, depth);
            output(w, &h) & 1 == 1
        });
        Self::new(steps, out)
    }

    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[TruthTable] {
        &self.steps
    }

    pub fn output(&self) -> &TruthTable {
        &self.output
    }

    /// Input bit fed to box `step` (0-based) given input `w` and the
    /// little-endian outcome history `hist` of the previous `step` boxes.
    #[inline]
    pub fn step_input(&self, step: usize, w: usize, hist: usize) -> usize {
        self.steps[step].get(w | (hist << 1))
    }

    #[inline]
    pub fn output_bit(&self, w: usize, hist: usize) -> usize {
        self.output.get(w | (hist << 1))
    }

    /// Appends a box that always receives 0 and whose outcome is ignored.
    pub fn padded(&self) -> Self {
        let n = self.depth();
        let mut steps = self.steps.clone();
        steps.push(TruthTable::zeros(n as u32 + 1));
        let low = (1usize << (n + 1)) - 1;
        let output = TruthTable::from_fn(n as u32 + 2, |idx| self.output.get(idx & low) == 1);
        Self { steps, output }
    }
}

/// An Alice/Bob pair of strategies of equal depth.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Protocol {
    alice: LocalStrategy,
    bob: LocalStrategy,
}

impl Protocol {
    pub fn new(alice: LocalStrategy, bob: LocalStrategy) -> Result<Self> {
        if alice.depth() != bob.depth() {
            return Err(Error::InvalidProtocol(format!(
                "Alice uses {} boxes but Bob uses {}",
                alice.depth(),
                bob.depth()
            )));
        }
        Ok(Self { alice, bob })
    }

    pub fn depth(&self) -> usize {
        self.alice.depth()
    }

    pub fn alice(&self) -> &LocalStrategy {
        &self.alice
    }

    pub fn bob(&self) -> &LocalStrategy {
        &self.bob
    }

    pub fn padded(&self) -> Self {
        Self { alice: self.alice.padded(), bob: self.bob.padded() }
    }

    /// Concatenated hex of every table in serialization order; used to break
    /// ties between equally good protocols.
    pub fn serialized_key(&self) -> String {
        let f = ProtocolFile::from(self);
        let mut s = String::new();
        for part in [&f.alice, &f.bob] {
            for t in &part.steps {
                s.push_str(t);
            }
            s.push_str(&part.output);
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ProtocolFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<ProtocolFile>(text)?.build()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Every box receives the original inputs; only the final output tables
/// (one per value of the party's input) are free.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NonAdaptiveProtocol {
    depth: usize,
    alice_out: [TruthTable; 2],
    bob_out: [TruthTable; 2],
}

impl NonAdaptiveProtocol {
    pub fn new(depth: usize, alice_out: [TruthTable; 2], bob_out: [TruthTable; 2]) -> Result<Self> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::InvalidProtocol(format!("depth {depth} outside 1..={MAX_DEPTH}")));
        }
        if alice_out.iter().chain(bob_out.iter()).any(|t| t.vars() as usize != depth) {
            return Err(Error::InvalidProtocol(format!(
                "non-adaptive output tables must have 2^{depth} bits"
            )));
        }
        Ok(Self { depth, alice_out, bob_out })
    }

    /// Tables given as masks; `depth <= 6`.
    pub fn from_masks(depth: usize, alice: [u64; 2], bob: [u64; 2]) -> Result<Self> {
        if depth == 0 || depth > 6 {
            return Err(Error::InvalidProtocol(format!("mask form needs depth in 1..=6, got {depth}")));
        }
        let t = |m: u64| TruthTable::from_mask(depth as u32, m);
        Self::new(depth, [t(alice[0]), t(alice[1])], [t(bob[0]), t(bob[1])])
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn alice_out(&self) -> &[TruthTable; 2] {
        &self.alice_out
    }

    pub fn bob_out(&self) -> &[TruthTable; 2] {
        &self.bob_out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonAdaptiveFile {
    pub depth: usize,
    pub alice: [String; 2],
    pub bob: [String; 2],
}

impl From<&NonAdaptiveProtocol> for NonAdaptiveFile {
    fn from(p: &NonAdaptiveProtocol) -> Self {
        Self {
            depth: p.depth,
            alice: [p.alice_out[0].to_hex(), p.alice_out[1].to_hex()],
            bob: [p.bob_out[0].to_hex(), p.bob_out[1].to_hex()],
        }
    }
}

impl NonAdaptiveFile {
    pub fn build(&self) -> Result<NonAdaptiveProtocol> {
        let n = self.depth as u32;
        let t = |s: &String| TruthTable::from_hex(n, s);
        NonAdaptiveProtocol::new(
            self.depth,
            [t(&self.alice[0])?, t(&self.alice[1])?],
            [t(&self.bob[0])?, t(&self.bob[1])?],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyFile {
    pub steps: Vec<String>,
    pub output: String,
}

/// JSON form of a [`Protocol`]: depth plus hex masks for every table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolFile {
    pub depth: usize,
    pub alice: StrategyFile,
    pub bob: StrategyFile,
}

impl From<&LocalStrategy> for StrategyFile {
    fn from(s: &LocalStrategy) -> Self {
        Self { steps: s.steps.iter().map(TruthTable::to_hex).collect(), output: s.output.to_hex() }
    }
}

impl From<&Protocol> for ProtocolFile {
    fn from(p: &Protocol) -> Self {
        Self { depth: p.depth(), alice: (&p.alice).into(), bob: (&p.bob).into() }
    }
}

impl StrategyFile {
    fn build(&self, depth: usize) -> Result<LocalStrategy> {
        if self.steps.len() != depth {
            return Err(Error::InvalidProtocol(format!(
                "expected {depth} step tables, got {}",
                self.steps.len()
            )));
        }
        let steps = self
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| TruthTable::from_hex(i as u32 + 1, s))
            .collect::<Result<Vec<_>>>()?;
        LocalStrategy::new(steps, TruthTable::from_hex(depth as u32 + 1, &self.output)?)
    }
}

impl ProtocolFile {
    pub fn build(&self) -> Result<Protocol> {
        if self.depth == 0 || self.depth > MAX_DEPTH {
            return Err(Error::InvalidProtocol(format!("depth {} outside 1..={MAX_DEPTH}", self.depth)));
        }
        Protocol::new(self.alice.build(self.depth)?, self.bob.build(self.depth)?)
    }
}

fn parity(bits: &[usize]) -> usize {
    bits.iter().fold(0, |acc, b| acc ^ b)
}

/// Non-adaptive protocol outputting the XOR of all `n` outcomes.
pub fn parity_protocol(n: usize) -> Result<NonAdaptiveProtocol> {
    if n == 0 || n > MAX_DEPTH {
        return Err(Error::Domain(format!("parity protocol depth must be in 1..={MAX_DEPTH}, got {n}")));
    }
    let t = TruthTable::from_fn(n as u32, |idx| idx.count_ones() % 2 == 1);
    NonAdaptiveProtocol::new(n, [t.clone(), t.clone()], [t.clone(), t])
}

/// Box `i > 1` receives `w · (o₁ ⊕ … ⊕ o_{i−1})`; output is the parity of all
/// outcomes. Both parties run the same strategy.
pub fn adaptive_parity_protocol(k: usize) -> Result<Protocol> {
    if k == 0 || k > MAX_DEPTH {
        return Err(Error::Domain(format!("adaptive parity depth must be in 1..={MAX_DEPTH}, got {k}")));
    }
    let s = LocalStrategy::from_fns(
        k,
        |i, w, h| if i == 0 { w } else { w & parity(h) },
        |_, h| parity(h),
    )?;
    Protocol::new(s.clone(), s)
}

/// Depth-2 wiring of Allcock et al.: Alice feeds `x ⊕ a₁`, Bob feeds
/// `y·(1 ⊕ b₁)` to the second box.
pub fn allcock2_protocol() -> Protocol {
    allcock_generalized_protocol(2).expect("depth 2 is valid")
}

/// Local permutation of [`allcock2_protocol`]: second inputs `x·a₁` and
/// `1 ⊕ y ⊕ b₁`.
pub fn allcock_permuted_protocol() -> Protocol {
    let alice = LocalStrategy::from_fns(2, |i, w, h| if i == 0 { w } else { w & h[0] }, |_, h| parity(h));
    let bob = LocalStrategy::from_fns(2, |i, w, h| if i == 0 { w } else { 1 ^ w ^ h[0] }, |_, h| parity(h));
    Protocol::new(alice.unwrap(), bob.unwrap()).unwrap()
}

/// Box `k > 1` receives `x ⊕ a₁ ⊕ … ⊕ a_{k−1}` (Alice) and
/// `y·(1 ⊕ b₁ ⊕ … ⊕ b_{k−1})` (Bob).
pub fn allcock_generalized_protocol(n: usize) -> Result<Protocol> {
    if !(2..=MAX_DEPTH).contains(&n) {
        return Err(Error::Domain(format!("generalized Allcock depth must be in 2..={MAX_DEPTH}, got {n}")));
    }
    let alice = LocalStrategy::from_fns(n, |_, w, h| w ^ parity(h), |_, h| parity(h))?;
    let bob = LocalStrategy::from_fns(n, |_, w, h| w & (1 ^ parity(h)), |_, h| parity(h))?;
    Protocol::new(alice, bob)
}

/// Depth-3 wiring: the first two boxes as in [`allcock2_protocol`], third
/// inputs `a₂(a₁⊕1) ⊕ x(a₁⊕a₂⊕a₁a₂)` and
/// `1 ⊕ b₁ ⊕ b₂(1⊕b₁) ⊕ y(1⊕b₂⊕b₁b₂)`, parity outputs.
pub fn new_depth3_protocol() -> Protocol {
    let alice = LocalStrategy::from_fns(
        3,
        |i, x, h| match i {
            0 => x,
            1 => x ^ h[0],
            _ => (h[1] & (h[0] ^ 1)) ^ (x & (h[0] ^ h[1] ^ (h[0] & h[1]))),
        },
        |_, h| parity(h),
    );
    let bob = LocalStrategy::from_fns(
        3,
        |i, y, h| match i {
            0 => y,
            1 => y & (1 ^ h[0]),
            _ => 1 ^ h[0] ^ (h[1] & (1 ^ h[0])) ^ (y & (1 ^ h[1] ^ (h[0] & h[1]))),
        },
        |_, h| parity(h),
    );
    Protocol::new(alice.unwrap(), bob.unwrap()).unwrap()
}

/// Lifts a non-adaptive protocol into the general representation: every
/// step table returns the original input.
pub fn embed_nonadaptive(p: &NonAdaptiveProtocol) -> Protocol {
    let lift = |tables: &[TruthTable; 2]| {
        LocalStrategy::from_fns(
            p.depth(),
            |_, w, _| w,
            |w, h| tables[w].get(h.iter().rev().fold(0, |acc, &b| (acc << 1) | b)),
        )
        .expect("non-adaptive depth already validated")
    };
    Protocol::new(lift(&p.alice_out), lift(&p.bob_out)).expect("equal depths")
}

/// Protocols with a name, as used by the CLI, sweeps and comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedProtocol {
    Parity(usize),
    AdaptiveParity(usize),
    Allcock2,
    AllcockPermuted,
    AllcockGeneralized(usize),
    NewDepth3,
}

impl NamedProtocol {
    pub fn depth(&self) -> usize {
        match *self {
            NamedProtocol::Parity(n) | NamedProtocol::AdaptiveParity(n) | NamedProtocol::AllcockGeneralized(n) => n,
            NamedProtocol::Allcock2 | NamedProtocol::AllcockPermuted => 2,
            NamedProtocol::NewDepth3 => 3,
        }
    }

    pub fn build(&self) -> Result<Protocol> {
        Ok(match *self {
            NamedProtocol::Parity(n) => embed_nonadaptive(&parity_protocol(n)?),
            NamedProtocol::AdaptiveParity(k) => adaptive_parity_protocol(k)?,
            NamedProtocol::Allcock2 => allcock2_protocol(),
            NamedProtocol::AllcockPermuted => allcock_permuted_protocol(),
            NamedProtocol::AllcockGeneralized(n) => allcock_generalized_protocol(n)?,
            NamedProtocol::NewDepth3 => new_depth3_protocol(),
        })
    }

    /// Resolves a CLI protocol name; `depth` is required for the families.
    pub fn from_name(name: &str, depth: Option<usize>) -> Result<Self> {
        let need = |d: Option<usize>| {
            d.ok_or_else(|| Error::Domain(format!("protocol {name:?} needs a depth")))
        };
        match name {
            "parity" => Ok(NamedProtocol::Parity(need(depth)?)),
            "bs" | "adaptive-parity" => Ok(NamedProtocol::AdaptiveParity(need(depth)?)),
            "gen" | "allcock-gen" => Ok(NamedProtocol::AllcockGeneralized(need(depth)?)),
            "allcock2" => Ok(NamedProtocol::Allcock2),
            "perm" | "allcock-perm" => Ok(NamedProtocol::AllcockPermuted),
            "new3" => Ok(NamedProtocol::NewDepth3),
            other => other.parse(),
        }
    }

    /// Default protocol set for region sweeps.
    pub fn sweep_defaults() -> Vec<NamedProtocol> {
        let mut v: Vec<_> = (2..=6).map(NamedProtocol::Parity).collect();
        v.extend([NamedProtocol::AdaptiveParity(2), NamedProtocol::Allcock2, NamedProtocol::NewDepth3]);
        v
    }
}

impl fmt::Display for NamedProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedProtocol::Parity(n) => write!(f, "parity{n}"),
            NamedProtocol::AdaptiveParity(k) => write!(f, "bs{k}"),
            NamedProtocol::Allcock2 => f.write_str("allcock2"),
            NamedProtocol::AllcockPermuted => f.write_str("perm"),
            NamedProtocol::AllcockGeneralized(n) => write!(f, "gen{n}"),
            NamedProtocol::NewDepth3 => f.write_str("new3"),
        }
    }
}

impl FromStr for NamedProtocol {
    type Err = Error;

    /// Parses the display form (`parity3`, `bs2`, `gen6`, `allcock2`, `perm`, `new3`).
    fn from_str(s: &str) -> Result<Self> {
        let numbered = |prefix: &str| s.strip_prefix(prefix).and_then(|d| d.parse::<usize>().ok());
        let named = match s {
            "allcock2" => NamedProtocol::Allcock2,
            "perm" => NamedProtocol::AllcockPermuted,
            "new3" => NamedProtocol::NewDepth3,
            _ => {
                if let Some(n) = numbered("parity") {
                    NamedProtocol::Parity(n)
                } else if let Some(n) = numbered("bs") {
                    NamedProtocol::AdaptiveParity(n)
                } else if let Some(n) = numbered("gen") {
                    NamedProtocol::AllcockGeneralized(n)
                } else {
                    return Err(Error::Domain(format!("unknown protocol {s:?}")));
                }
            }
        };
        named.build()?;
        Ok(named)
    }
}
