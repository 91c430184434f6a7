//! Exhaustive and sampled searches over wiring space.
//!
//! Every search reduces `(value, key)` pairs with "higher value wins, then
//! lower key", where the key orders candidates exactly as their serialized
//! hex tables would sort. The reduction is associative and commutative, so
//! results do not depend on how rayon splits the work.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::formulas::{input_independent_bound, nonadaptive_bound};
use crate::boxes::{BoxParams, NoSignalingBox};
use crate::error::{Error, Result};
use crate::evaluator::{distilled_value, evaluate_nonadaptive, NonAdaptiveKernel};
use crate::protocols::{
    LocalStrategy, NamedProtocol, NonAdaptiveFile, NonAdaptiveProtocol, Protocol, ProtocolFile, TruthTable,
};
use crate::TOL;

/// Largest depth the exhaustive non-adaptive search accepts.
pub const MAX_EXHAUSTIVE_NONADAPTIVE: usize = 2;

const SAMPLE_CHUNK: u64 = 1 << 14;

/// The best protocol found, in whichever representation the search used.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    Adaptive(Protocol),
    NonAdaptive(NonAdaptiveProtocol),
}

impl Witness {
    /// Re-evaluates the witness through the general evaluator.
    pub fn evaluate(&self, bx: &NoSignalingBox) -> Result<f64> {
        match self {
            Witness::Adaptive(p) => distilled_value(p, bx),
            Witness::NonAdaptive(p) => Ok(evaluate_nonadaptive(p, bx)?.chsh_value()),
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum WitnessFile {
    Adaptive { protocol: ProtocolFile },
    NonAdaptive { protocol: NonAdaptiveFile },
}

impl Serialize for Witness {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Witness::Adaptive(p) => WitnessFile::Adaptive { protocol: p.into() },
            Witness::NonAdaptive(p) => WitnessFile::NonAdaptive { protocol: p.into() },
        }
        .serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub best_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_name: Option<String>,
    pub best_protocol: Witness,
    pub candidates_examined: u64,
    pub search_space_description: String,
    pub bound_used: Option<f64>,
    /// Whether `best_value <= bound_used + TOL`; `None` without a bound.
    pub bound_respected: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<NamedValue>,
}

impl SearchReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, Copy)]
struct Best<K> {
    value: f64,
    key: K,
}

fn better<K: Ord + Copy>(a: Best<K>, b: Best<K>) -> Best<K> {
    match a.value.total_cmp(&b.value) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => {
            if b.key < a.key {
                b
            } else {
                a
            }
        }
    }
}

/// Bound for boxes in the general family; `None` for raw boxes outside it,
/// where the non-adaptive bound is not established.
fn family_params(bx: &NoSignalingBox) -> Result<Option<BoxParams>> {
    let params = bx.correlators().to_params();
    let rebuilt = NoSignalingBox::general(params)?;
    let in_family = rebuilt.to_flat().iter().zip(bx.to_flat()).all(|(a, b)| (a - b).abs() <= TOL);
    Ok(in_family.then_some(params))
}

fn family_bound(bx: &NoSignalingBox, depth: usize) -> Result<Option<f64>> {
    family_params(bx)?
        .map(|p| Ok(nonadaptive_bound(&p, depth as u32)?.value))
        .transpose()
}

fn bound_respected(value: f64, bound: Option<f64>) -> Option<bool> {
    bound.map(|b| value <= b + TOL)
}

fn table_mask(depth: usize) -> u64 {
    let bits = 1u32 << depth;
    if bits == 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Enumerates every pair of non-adaptive output tables at depth `n ≤ 2`,
/// one table per value of each party's input.
///
/// For boxes in the general family the result is compared with
/// [`nonadaptive_bound`] and the outcome recorded in `bound_respected`.
/// Input-dependent outputs can beat that bound (constant outputs already
/// score 2, and relabelling outputs per input permutes the bias signs), so a
/// violation is reported, not raised.
pub fn search_nonadaptive(bx: &NoSignalingBox, n: usize) -> Result<SearchReport> {
    if n == 0 || n > MAX_EXHAUSTIVE_NONADAPTIVE {
        return Err(Error::Domain(format!(
            "exhaustive non-adaptive search supports depth 1..={MAX_EXHAUSTIVE_NONADAPTIVE}, got {n}; use sampled search"
        )));
    }
    let kernel = NonAdaptiveKernel::new(bx, n)?;
    let tables = 1u64 << (1u64 << n);
    let per_party = tables * tables;
    let best = (0..per_party)
        .into_par_iter()
        .map(|ai| {
            let alice = [ai / tables, ai % tables];
            let proj = kernel.alice_projection(alice);
            let mut local = Best { value: f64::NEG_INFINITY, key: (ai, 0) };
            for bi in 0..per_party {
                let v = NonAdaptiveKernel::bob_value(&proj, [bi / tables, bi % tables]);
                local = better(local, Best { value: v, key: (ai, bi) });
            }
            local
        })
        .reduce(|| Best { value: f64::NEG_INFINITY, key: (u64::MAX, u64::MAX) }, better);
    let (ai, bi) = best.key;
    let witness =
        NonAdaptiveProtocol::from_masks(n, [ai / tables, ai % tables], [bi / tables, bi % tables])?;
    let bound = family_bound(bx, n)?;
    Ok(SearchReport {
        best_value: best.value,
        best_name: None,
        best_protocol: Witness::NonAdaptive(witness),
        candidates_examined: per_party * per_party,
        search_space_description: format!(
            "all non-adaptive depth-{n} protocols: {per_party} Alice × {per_party} Bob output-table pairs"
        ),
        bound_used: bound,
        bound_respected: bound_respected(best.value, bound),
        seed: None,
        values: Vec::new(),
    })
}

/// Exhaustive search over non-adaptive wirings whose output table is the
/// same for both values of the party's input (`n ≤ 3`). For boxes in the
/// general family the result is compared against
/// [`input_independent_bound`], which includes the constant-output term.
pub fn search_nonadaptive_input_independent(bx: &NoSignalingBox, n: usize) -> Result<SearchReport> {
    if n == 0 || n > 3 {
        return Err(Error::Domain(format!(
            "input-independent non-adaptive search supports depth 1..=3, got {n}"
        )));
    }
    let kernel = NonAdaptiveKernel::new(bx, n)?;
    let tables = 1u64 << (1u64 << n);
    let best = (0..tables)
        .into_par_iter()
        .map(|a| {
            let proj = kernel.alice_projection([a, a]);
            let mut local = Best { value: f64::NEG_INFINITY, key: (a, 0) };
            for b in 0..tables {
                local = better(local, Best { value: NonAdaptiveKernel::bob_value(&proj, [b, b]), key: (a, b) });
            }
            local
        })
        .reduce(|| Best { value: f64::NEG_INFINITY, key: (u64::MAX, u64::MAX) }, better);
    let (a, b) = best.key;
    let witness = NonAdaptiveProtocol::from_masks(n, [a, a], [b, b])?;
    let bound = family_params(bx)?
        .map(|p| Ok::<_, Error>(input_independent_bound(&p, n as u32)?.value))
        .transpose()?;
    Ok(SearchReport {
        best_value: best.value,
        best_name: None,
        best_protocol: Witness::NonAdaptive(witness),
        candidates_examined: tables * tables,
        search_space_description: format!(
            "non-adaptive depth-{n} protocols with input-independent outputs: {tables} × {tables} table pairs"
        ),
        bound_used: bound,
        bound_respected: bound_respected(best.value, bound),
        seed: None,
        values: Vec::new(),
    })
}

/// Draws `samples` uniformly random non-adaptive table pairs at depth
/// `n ≤ 6`. Sample `i` comes from ChaCha8 stream `i / 2^14` seeded with
/// `seed`, so the report is reproducible for any thread count.
pub fn search_nonadaptive_sampled(bx: &NoSignalingBox, n: usize, samples: u64, seed: u64) -> Result<SearchReport> {
    if n == 0 || n > 6 {
        return Err(Error::Domain(format!("sampled non-adaptive search supports depth 1..=6, got {n}")));
    }
    if samples == 0 {
        return Err(Error::Domain("sample count must be at least 1".into()));
    }
    let kernel = NonAdaptiveKernel::new(bx, n)?;
    let mask = table_mask(n);
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = SAMPLE_CHUNK.min(samples - c * SAMPLE_CHUNK);
            let mut local = Best { value: f64::NEG_INFINITY, key: [u64::MAX; 4] };
            for _ in 0..count {
                let key: [u64; 4] = std::array::from_fn(|_| rng.gen::<u64>() & mask);
                let v = kernel.value([key[0], key[1]], [key[2], key[3]]);
                local = better(local, Best { value: v, key });
            }
            local
        })
        .reduce(|| Best { value: f64::NEG_INFINITY, key: [u64::MAX; 4] }, better);
    let k = best.key;
    let witness = NonAdaptiveProtocol::from_masks(n, [k[0], k[1]], [k[2], k[3]])?;
    let bound = family_bound(bx, n)?;
    Ok(SearchReport {
        best_value: best.value,
        best_name: None,
        best_protocol: Witness::NonAdaptive(witness),
        candidates_examined: samples,
        search_space_description: format!(
            "{samples} uniformly sampled non-adaptive depth-{n} output-table pairs"
        ),
        bound_used: bound,
        bound_respected: bound_respected(best.value, bound),
        seed: Some(seed),
        values: Vec::new(),
    })
}

/// Step-1 mask feeding the original input to the first box.
const IDENTITY_STEP: u64 = 0b10;

/// Key order matches serialization: Alice step 1, step 2, output, then Bob's.
type AdaptiveKey = (u64, u64, u64, u64, u64, u64);

fn depth2_strategy(step1: u64, step2: u64, output: u64) -> Result<LocalStrategy> {
    LocalStrategy::new(
        vec![TruthTable::from_mask(1, step1), TruthTable::from_mask(2, step2)],
        TruthTable::from_mask(3, output),
    )
}

/// Signed joint weights `W[i][j]` for fixed step tables, where `i = x + 2a₁ + 4a₂`
/// and `j = y + 2b₁ + 4b₂` index the parties' output tables. The CHSH value
/// of output signs `α, β` is `Σ_ij α_i W[i][j] β_j`.
fn depth2_weights(bx: &NoSignalingBox, f1: u64, f2: u64, g1: u64, g2: u64) -> [[f64; 8]; 8] {
    let bit = |m: u64, i: usize| ((m >> i) & 1) as usize;
    let mut w = [[0.0; 8]; 8];
    for i in 0..8 {
        let (x, a1, a2) = (i & 1, (i >> 1) & 1, i >> 2);
        for j in 0..8 {
            let (y, b1, b2) = (j & 1, (j >> 1) & 1, j >> 2);
            let p1 = bx.prob(bit(f1, x), bit(g1, y), a1, b1);
            let p2 = bx.prob(bit(f2, x | (a1 << 1)), bit(g2, y | (b1 << 1)), a2, b2);
            let sign = if x & y == 1 { -1.0 } else { 1.0 };
            w[i][j] = sign * p1 * p2;
        }
    }
    w
}

/// Exhaustive search over depth-2 adaptive wirings.
///
/// For fixed step tables and Alice output signs `α`, Bob's best output is
/// `β_j = sign(u_j)` with `u = αᵀW`, worth `Σ_j |u_j|`; that inner
/// maximisation is exact, so every Bob output table is covered. Ties
/// (`u_j = 0`) take the lower table bit. With `restrict_first_layer`, both
/// parties feed their original input to box 1 (4096 strategies each);
/// otherwise all 16384 strategies per party are covered.
pub fn search_adaptive_depth2(bx: &NoSignalingBox, restrict_first_layer: bool) -> Result<SearchReport> {
    let step1: Vec<u64> = if restrict_first_layer { vec![IDENTITY_STEP] } else { (0..4).collect() };
    let mut combos = Vec::new();
    for &f1 in &step1 {
        for f2 in 0..16 {
            for &g1 in &step1 {
                for g2 in 0..16 {
                    combos.push((f1, f2, g1, g2));
                }
            }
        }
    }
    let best = combos
        .par_iter()
        .map(|&(f1, f2, g1, g2)| {
            let w = depth2_weights(bx, f1, f2, g1, g2);
            let mut local = Best { value: f64::NEG_INFINITY, key: (u64::MAX, 0, 0, 0, 0, 0) };
            for aout in 0..256u64 {
                let mut u = [0.0; 8];
                for (i, row) in w.iter().enumerate() {
                    let s = if (aout >> i) & 1 == 1 { -1.0 } else { 1.0 };
                    for (uj, &wij) in u.iter_mut().zip(row) {
                        *uj += s * wij;
                    }
                }
                let value: f64 = u.iter().map(|v| v.abs()).sum();
                let bout = u.iter().enumerate().fold(0u64, |m, (j, &v)| if v < 0.0 { m | (1 << j) } else { m });
                local = better(local, Best { value, key: (f1, f2, aout, g1, g2, bout) });
            }
            local
        })
        .reduce(|| Best { value: f64::NEG_INFINITY, key: (u64::MAX, 0, 0, 0, 0, 0) }, better::<AdaptiveKey>);
    let (f1, f2, aout, g1, g2, bout) = best.key;
    let witness = Protocol::new(depth2_strategy(f1, f2, aout)?, depth2_strategy(g1, g2, bout)?)?;
    let per_party = step1.len() as u64 * 16 * 256;
    Ok(SearchReport {
        best_value: best.value,
        best_name: None,
        best_protocol: Witness::Adaptive(witness),
        candidates_examined: per_party * per_party,
        search_space_description: if restrict_first_layer {
            format!("depth-2 adaptive protocols with identity first layer: {per_party} strategies per party")
        } else {
            format!("all depth-2 adaptive protocols: {per_party} strategies per party")
        },
        bound_used: None,
        bound_respected: None,
        seed: None,
        values: Vec::new(),
    })
}

/// Named protocols compared by [`best_builtin`], in registration order.
pub fn builtin_registry(max_depth: usize) -> Vec<NamedProtocol> {
    let mut v: Vec<NamedProtocol> = (1..=max_depth).map(NamedProtocol::Parity).collect();
    v.extend((2..=max_depth).map(NamedProtocol::AdaptiveParity));
    if max_depth >= 2 {
        v.extend([NamedProtocol::Allcock2, NamedProtocol::AllcockPermuted]);
    }
    v.extend((3..=max_depth).map(NamedProtocol::AllcockGeneralized));
    if max_depth >= 3 {
        v.push(NamedProtocol::NewDepth3);
    }
    v
}

/// Evaluates every registered protocol of depth ≤ `max_depth`. A later
/// protocol replaces the current winner only if it is better by more than
/// `TOL`, so exact ties go to the earlier registration.
pub fn best_builtin(bx: &NoSignalingBox, max_depth: usize) -> Result<SearchReport> {
    if max_depth == 0 || max_depth > crate::protocols::MAX_DEPTH {
        return Err(Error::Domain(format!("max depth must be in 1..={}, got {max_depth}", crate::protocols::MAX_DEPTH)));
    }
    let registry = builtin_registry(max_depth);
    let evaluated: Vec<(NamedProtocol, Protocol, f64)> = registry
        .iter()
        .map(|named| {
            let p = named.build()?;
            let v = distilled_value(&p, bx)?;
            Ok((*named, p, v))
        })
        .collect::<Result<_>>()?;
    let mut winner = 0;
    for (i, (_, _, v)) in evaluated.iter().enumerate() {
        if *v > evaluated[winner].2 + TOL {
            winner = i;
        }
    }
    let (name, proto, value) = evaluated[winner].clone();
    Ok(SearchReport {
        best_value: value,
        best_name: Some(name.to_string()),
        best_protocol: Witness::Adaptive(proto),
        candidates_examined: evaluated.len() as u64,
        search_space_description: format!("built-in protocols of depth at most {max_depth}"),
        bound_used: None,
        bound_respected: None,
        seed: None,
        values: evaluated.iter().map(|(n, _, v)| NamedValue { name: n.to_string(), value: *v }).collect(),
    })
}

/// The non-adaptive bound for the box's correlators, for callers that want
/// to compare against search results.
pub fn bound_for(bx: &NoSignalingBox, depth: usize) -> Result<f64> {
    let params: BoxParams = bx.correlators().to_params();
    Ok(nonadaptive_bound(&params, depth as u32)?.value)
}
