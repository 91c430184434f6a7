//! No-signalling correlation boxes.
//!
//! Rows are indexed by the joint input `2x + y`, columns by the joint output
//! `2a + b`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::TOL;

/// The four biases of the general box family. Row `xy` has the pattern
/// `(1+d, 1-d, 1-d, 1+d)/4` with `d = delta1, delta2, delta3, epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxParams {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub epsilon: f64,
}

impl BoxParams {
    pub fn new(delta1: f64, delta2: f64, delta3: f64, epsilon: f64) -> Result<Self> {
        Ok(Self {
            delta1: check_unit("delta1", delta1)?,
            delta2: check_unit("delta2", delta2)?,
            delta3: check_unit("delta3", delta3)?,
            epsilon: check_unit("epsilon", epsilon)?,
        })
    }

    pub fn symmetric(delta: f64, epsilon: f64) -> Result<Self> {
        Self::new(delta, delta, delta, epsilon)
    }

    /// `delta1 = delta2 = delta3 = 1`; only the `xy = 11` row is noisy.
    pub fn correlated(epsilon: f64) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, epsilon)
    }

    pub fn perfect() -> Self {
        Self { delta1: 1.0, delta2: 1.0, delta3: 1.0, epsilon: -1.0 }
    }

    pub fn uniform() -> Self {
        Self { delta1: 0.0, delta2: 0.0, delta3: 0.0, epsilon: 0.0 }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.delta1, self.delta2, self.delta3, self.epsilon]
    }

    /// CHSH value of the box these parameters describe.
    pub fn chsh_value(&self) -> f64 {
        self.delta1 + self.delta2 + self.delta3 - self.epsilon
    }
}

/// Correlators `E_xy = p(a=b|xy) - p(a≠b|xy)`. Note `E_11` enters the CHSH
/// value with a minus sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorVector {
    pub e00: f64,
    pub e01: f64,
    pub e10: f64,
    pub e11: f64,
}

impl CorrelatorVector {
    pub fn new(e00: f64, e01: f64, e10: f64, e11: f64) -> Result<Self> {
        Ok(Self {
            e00: check_unit("e00", e00)?,
            e01: check_unit("e01", e01)?,
            e10: check_unit("e10", e10)?,
            e11: check_unit("e11", e11)?,
        })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.e00, self.e01, self.e10, self.e11]
    }

    pub fn to_params(&self) -> BoxParams {
        BoxParams { delta1: self.e00, delta2: self.e01, delta3: self.e10, epsilon: self.e11 }
    }
}

/// A validated conditional distribution `p(ab|xy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoSignalingBox {
    p: [[f64; 4]; 4],
}

impl NoSignalingBox {
    /// Validates positivity, normalization and both no-signalling conditions.
    pub fn from_rows(p: [[f64; 4]; 4]) -> Result<Self> {
        for (xy, row) in p.iter().enumerate() {
            for (ab, &v) in row.iter().enumerate() {
                if !v.is_finite() || !(-TOL..=1.0 + TOL).contains(&v) {
                    return Err(Error::InvalidBox(format!(
                        "p[{xy}][{ab}] = {v} is not a probability"
                    )));
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > TOL {
                return Err(Error::InvalidBox(format!("row {xy} sums to {sum}")));
            }
        }
        // Alice's marginal must not depend on y.
        for x in 0..2 {
            for a in 0..2 {
                let m = |y: usize| p[2 * x + y][2 * a] + p[2 * x + y][2 * a + 1];
                if (m(0) - m(1)).abs() > TOL {
                    return Err(Error::InvalidBox(format!(
                        "signalling from Bob: p(a={a}|x={x},y) depends on y"
                    )));
                }
            }
        }
        // Bob's marginal must not depend on x.
        for y in 0..2 {
            for b in 0..2 {
                let m = |x: usize| p[2 * x + y][b] + p[2 * x + y][2 + b];
                if (m(0) - m(1)).abs() > TOL {
                    return Err(Error::InvalidBox(format!(
                        "signalling from Alice: p(b={b}|x,y={y}) depends on x"
                    )));
                }
            }
        }
        Ok(Self { p })
    }

    /// Builds a box from 16 row-major probabilities.
    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if values.len() != 16 {
            return Err(Error::InvalidBox(format!("expected 16 probabilities, got {}", values.len())));
        }
        let mut p = [[0.0; 4]; 4];
        for (i, &v) in values.iter().enumerate() {
            p[i / 4][i % 4] = v;
        }
        Self::from_rows(p)
    }

    pub fn general(params: BoxParams) -> Result<Self> {
        let params =
            BoxParams::new(params.delta1, params.delta2, params.delta3, params.epsilon)?;
        let row = |d: f64| [(1.0 + d) / 4.0, (1.0 - d) / 4.0, (1.0 - d) / 4.0, (1.0 + d) / 4.0];
        Self::from_rows(params.as_array().map(row))
    }

    pub fn symmetric(delta: f64, epsilon: f64) -> Result<Self> {
        Self::general(BoxParams::symmetric(delta, epsilon)?)
    }

    pub fn perfect() -> Self {
        Self::general(BoxParams::perfect()).expect("perfect box is valid")
    }

    pub fn uniform() -> Self {
        Self::general(BoxParams::uniform()).expect("uniform box is valid")
    }

    pub fn rows(&self) -> &[[f64; 4]; 4] {
        &self.p
    }

    /// `p(ab|xy)` for bits `x, y, a, b`.
    #[inline]
    pub fn prob(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.p[2 * x + y][2 * a + b]
    }

    pub fn to_flat(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for (i, v) in out.iter_mut().enumerate() {
            *v = self.p[i / 4][i % 4];
        }
        out
    }

    /// Winning minus losing probability mass, where winning means `a ⊕ b = x·y`.
    pub fn chsh_value(&self) -> f64 {
        let mut v = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let p = self.prob(x, y, a, b);
                        if a ^ b == x & y {
                            v += p;
                        } else {
                            v -= p;
                        }
                    }
                }
            }
        }
        v
    }

    pub fn correlators(&self) -> CorrelatorVector {
        let e = |r: &[f64; 4]| (r[0] + r[3] - r[1] - r[2]).clamp(-1.0, 1.0);
        CorrelatorVector { e00: e(&self.p[0]), e01: e(&self.p[1]), e10: e(&self.p[2]), e11: e(&self.p[3]) }
    }

    /// Relabels Alice's output `a -> 1 - a` on every input.
    pub fn flip_alice_output(&self) -> Self {
        let mut p = self.p;
        for row in p.iter_mut() {
            row.swap(0, 2);
            row.swap(1, 3);
        }
        Self { p }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str::<BoxSpec>(&text)?.build()
    }
}

pub fn make_general_nlb(params: BoxParams) -> Result<NoSignalingBox> {
    NoSignalingBox::general(params)
}

pub fn make_symmetric_nlb(delta: f64, epsilon: f64) -> Result<NoSignalingBox> {
    NoSignalingBox::symmetric(delta, epsilon)
}

pub fn chsh_value(b: &NoSignalingBox) -> f64 {
    b.chsh_value()
}

pub fn correlators(b: &NoSignalingBox) -> CorrelatorVector {
    b.correlators()
}

/// Landau's arcsine criterion for correlators with unbiased marginals: for
/// every choice of the odd index `j`,
/// `|Σ_{i≠j} asin E_i - asin E_j| ≤ π`.
pub fn is_quantum_boundary_inside(c: &CorrelatorVector) -> bool {
    let s = c.as_array().map(f64::asin);
    let total: f64 = s.iter().sum();
    s.iter().all(|&sj| (total - 2.0 * sj).abs() <= PI + TOL)
}

/// On-disk box description: either the four biases or 16 raw probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoxSpec {
    Params(BoxParams),
    Raw { p: Vec<f64> },
}

impl BoxSpec {
    pub fn build(&self) -> Result<NoSignalingBox> {
        match self {
            BoxSpec::Params(params) => NoSignalingBox::general(*params),
            BoxSpec::Raw { p } => NoSignalingBox::from_flat(p),
        }
    }
}

impl From<&NoSignalingBox> for BoxSpec {
    fn from(b: &NoSignalingBox) -> Self {
        BoxSpec::Raw { p: b.to_flat().to_vec() }
    }
}

impl Serialize for NoSignalingBox {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        BoxSpec::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for NoSignalingBox {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        BoxSpec::deserialize(deserializer)?.build().map_err(serde::de::Error::custom)
    }
}
