//! Exact evaluation of a wiring on independent copies of a box.
//!
//! For each input pair the evaluator walks the tree of joint outcomes in
//! lexicographic `(a₁, b₁, …, a_n, b_n)` order, multiplying box probabilities
//! along the way, and accumulates each leaf into the distilled box in that
//! same order. Results are therefore bit-reproducible.

use rayon::prelude::*;

use crate::boxes::NoSignalingBox;
use crate::error::{Error, Result};
use crate::protocols::{NonAdaptiveProtocol, Protocol, MAX_DEPTH};

/// Depth from which the four input rows are evaluated on separate threads.
const PARALLEL_DEPTH: usize = 7;

/// The outcome bits of one execution branch, little-endian: bit `i` of
/// `alice` is `a_{i+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OutcomePath {
    pub depth: usize,
    pub alice: usize,
    pub bob: usize,
}

impl OutcomePath {
    pub fn alice_bit(&self, i: usize) -> usize {
        (self.alice >> i) & 1
    }

    pub fn bob_bit(&self, i: usize) -> usize {
        (self.bob >> i) & 1
    }
}

fn check_depth(depth: usize) -> Result<()> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::Domain(format!("evaluation depth must be in 1..={MAX_DEPTH}, got {depth}")));
    }
    Ok(())
}

struct Walker<'a, F> {
    proto: &'a Protocol,
    bx: &'a NoSignalingBox,
    x: usize,
    y: usize,
    leaf: F,
}

impl<F: FnMut(OutcomePath, f64)> Walker<'_, F> {
    fn walk(&mut self, step: usize, ha: usize, hb: usize, prob: f64) {
        let n = self.proto.depth();
        if step == n {
            (self.leaf)(OutcomePath { depth: n, alice: ha, bob: hb }, prob);
            return;
        }
        let xi = self.proto.alice().step_input(step, self.x, ha);
        let yi = self.proto.bob().step_input(step, self.y, hb);
        for a in 0..2 {
            for b in 0..2 {
                let p = self.bx.prob(xi, yi, a, b);
                // zero-probability subtrees only add +0.0
                if p == 0.0 {
                    continue;
                }
                self.walk(step + 1, ha | (a << step), hb | (b << step), prob * p);
            }
        }
    }
}

/// Calls `leaf(path, probability)` for every outcome path with nonzero
/// probability on inputs `(x, y)`, in lexicographic path order.
pub fn for_each_path(
    proto: &Protocol,
    bx: &NoSignalingBox,
    x: usize,
    y: usize,
    leaf: impl FnMut(OutcomePath, f64),
) -> Result<()> {
    check_depth(proto.depth())?;
    let mut w = Walker { proto, bx, x: x & 1, y: y & 1, leaf };
    w.walk(0, 0, 0, 1.0);
    Ok(())
}

fn distill_row(proto: &Protocol, bx: &NoSignalingBox, xy: usize) -> [f64; 4] {
    let (x, y) = (xy >> 1, xy & 1);
    let mut row = [0.0; 4];
    let mut w = Walker {
        proto,
        bx,
        x,
        y,
        leaf: |path: OutcomePath, p: f64| {
            let a = proto.alice().output_bit(x, path.alice);
            let b = proto.bob().output_bit(y, path.bob);
            row[2 * a + b] += p;
        },
    };
    w.walk(0, 0, 0, 1.0);
    row
}

/// The box obtained by running `proto` on `proto.depth()` independent copies
/// of `bx`.
pub fn distill(proto: &Protocol, bx: &NoSignalingBox) -> Result<NoSignalingBox> {
    check_depth(proto.depth())?;
    let rows: Vec<[f64; 4]> = if proto.depth() >= PARALLEL_DEPTH {
        (0..4).into_par_iter().map(|xy| distill_row(proto, bx, xy)).collect()
    } else {
        (0..4).map(|xy| distill_row(proto, bx, xy)).collect()
    };
    NoSignalingBox::from_rows([rows[0], rows[1], rows[2], rows[3]])
}

/// CHSH value of [`distill`]'s output.
pub fn distilled_value(proto: &Protocol, bx: &NoSignalingBox) -> Result<f64> {
    Ok(distill(proto, bx)?.chsh_value())
}

/// Evaluates a non-adaptive protocol directly: every box sees `(x, y)`, so
/// the outcome strings are i.i.d. draws from row `xy`.
pub fn evaluate_nonadaptive(p: &NonAdaptiveProtocol, bx: &NoSignalingBox) -> Result<NoSignalingBox> {
    check_depth(p.depth())?;
    let n = p.depth();
    let size = 1usize << n;
    let mut rows = [[0.0; 4]; 4];
    for (xy, row) in rows.iter_mut().enumerate() {
        let (x, y) = (xy >> 1, xy & 1);
        let probs = &bx.rows()[xy];
        for a in 0..size {
            let oa = p.alice_out()[x].get(a);
            for b in 0..size {
                let ob = p.bob_out()[y].get(b);
                let prob: f64 = (0..n).map(|i| probs[2 * ((a >> i) & 1) + ((b >> i) & 1)]).product();
                row[2 * oa + ob] += prob;
            }
        }
    }
    NoSignalingBox::from_rows(rows)
}

/// Joint outcome-string distributions `M_xy[a][b] = Π_i p(a_i b_i|xy)` for a
/// non-adaptive protocol of fixed depth. The CHSH value of output tables
/// `α_x`, `β_y` is then the bilinear form
/// `Σ_xy (−1)^{xy} Σ_ab (−1)^{α_x(a) ⊕ β_y(b)} M_xy[a][b]`.
#[derive(Debug, Clone)]
pub struct NonAdaptiveKernel {
    depth: usize,
    size: usize,
    joint: [Vec<f64>; 4],
}

impl NonAdaptiveKernel {
    /// Output tables are passed as `u64` masks, so `depth <= 6`.
    pub fn new(bx: &NoSignalingBox, depth: usize) -> Result<Self> {
        if depth == 0 || depth > 6 {
            return Err(Error::Domain(format!("non-adaptive kernel depth must be in 1..=6, got {depth}")));
        }
        let size = 1usize << depth;
        let joint = std::array::from_fn(|xy| {
            let mut m = vec![0.0; size * size];
            for a in 0..size {
                for b in 0..size {
                    let mut p = 1.0;
                    for i in 0..depth {
                        p *= bx.rows()[xy][2 * ((a >> i) & 1) + ((b >> i) & 1)];
                    }
                    m[a * size + b] = p;
                }
            }
            m
        });
        Ok(Self { depth, size, joint })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of outcome strings per party, `2^depth`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// For fixed Alice tables, the vector `u_y[b] = Σ_x (−1)^{xy} Σ_a α_x(a) M_xy[a][b]`
    /// (signs `α = ±1`); the value of Bob's tables is then `Σ_y Σ_b u_y[b] β_y(b)`.
    pub fn alice_projection(&self, alice: [u64; 2]) -> [Vec<f64>; 2] {
        std::array::from_fn(|y| {
            let mut u = vec![0.0; self.size];
            for x in 0..2 {
                let sign = if x & y == 1 { -1.0 } else { 1.0 };
                let m = &self.joint[2 * x + y];
                for a in 0..self.size {
                    let s = if (alice[x] >> a) & 1 == 1 { -sign } else { sign };
                    let row = &m[a * self.size..(a + 1) * self.size];
                    for (ub, &mv) in u.iter_mut().zip(row) {
                        *ub += s * mv;
                    }
                }
            }
            u
        })
    }

    pub fn bob_value(projection: &[Vec<f64>; 2], bob: [u64; 2]) -> f64 {
        let mut v = 0.0;
        for y in 0..2 {
            for (b, &ub) in projection[y].iter().enumerate() {
                if (bob[y] >> b) & 1 == 1 {
                    v -= ub;
                } else {
                    v += ub;
                }
            }
        }
        v
    }

    /// CHSH value of the output-table masks `alice[x]`, `bob[y]`.
    pub fn value(&self, alice: [u64; 2], bob: [u64; 2]) -> f64 {
        Self::bob_value(&self.alice_projection(alice), bob)
    }
}
