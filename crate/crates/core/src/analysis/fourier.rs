//! Fourier analysis of ±1-valued functions on the cube `{0,1}^n` and the
//! output probabilities of a non-adaptive wiring on a single-bias row.

use crate::error::{check_unit, Error, Result};

/// `coeffs[z] = 2^{-n} Σ_s (−1)^{z·s} f(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    n: u32,
    coeffs: Vec<f64>,
}

impl FourierSpectrum {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, z: usize) -> f64 {
        self.coeffs[z]
    }

    /// `Σ_z coeff_z²`; equals 1 for ±1-valued functions.
    pub fn parseval_sum(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Recovers `f(s) = Σ_z (−1)^{z·s} coeff_z`.
    pub fn inverse(&self) -> Vec<f64> {
        let mut v = self.coeffs.clone();
        walsh_hadamard(&mut v);
        v
    }
}

fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for chunk in v.chunks_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*a + *b, *a - *b);
                *a = s;
                *b = d;
            }
        }
        h *= 2;
    }
}

fn cube_dim(len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::Domain(format!("table length {len} is not a power of two")));
    }
    Ok(len.trailing_zeros())
}

/// Fast Walsh–Hadamard transform of a table of `2^n` values.
pub fn fourier_transform(f: &[f64]) -> Result<FourierSpectrum> {
    let n = cube_dim(f.len())?;
    let mut coeffs = f.to_vec();
    walsh_hadamard(&mut coeffs);
    let scale = 1.0 / f.len() as f64;
    coeffs.iter_mut().for_each(|c| *c *= scale);
    Ok(FourierSpectrum { n, coeffs })
}

/// `+1` on members of the set, `−1` elsewhere.
pub fn sign_function(set: &[bool]) -> Vec<f64> {
    set.iter().map(|&m| if m { 1.0 } else { -1.0 }).collect()
}

fn same_cube(a: &[bool], b: &[bool]) -> Result<u32> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!("sets live on cubes of size {} and {}", a.len(), b.len())));
    }
    cube_dim(a.len())
}

/// Probability that both parties output 1 when Alice outputs 1 exactly on
/// `a_set` and Bob on `b_set`, every box row having bias `delta`:
/// `4^{-n} Σ_{a∈A} Σ_{b∈B} (1−δ)^{|a⊕b|} (1+δ)^{n−|a⊕b|}`.
pub fn q_ab(a_set: &[bool], b_set: &[bool], delta: f64) -> Result<f64> {
    let n = same_cube(a_set, b_set)? as i32;
    let delta = check_unit("delta", delta)?;
    let mut total = 0.0;
    for (a, _) in a_set.iter().enumerate().filter(|(_, &m)| m) {
        for (b, _) in b_set.iter().enumerate().filter(|(_, &m)| m) {
            let d = (a ^ b).count_ones() as i32;
            total += (1.0 - delta).powi(d) * (1.0 + delta).powi(n - d);
        }
    }
    Ok(total / 4f64.powi(n))
}

/// The same probability through the spectra of the sign functions:
/// `Σ_z δ^{|z|}/4 · (f̂_z ĝ_z + (1 + f̂_0 + ĝ_0)[z=0])`.
pub fn q_ab_spectral(a_set: &[bool], b_set: &[bool], delta: f64) -> Result<f64> {
    same_cube(a_set, b_set)?;
    let delta = check_unit("delta", delta)?;
    let f = fourier_transform(&sign_function(a_set))?;
    let g = fourier_transform(&sign_function(b_set))?;
    let mut total = 0.0;
    for z in 0..f.coeffs.len() {
        let mut term = f.coeffs[z] * g.coeffs[z];
        if z == 0 {
            term += 1.0 + f.coeffs[0] + g.coeffs[0];
        }
        total += delta.powi(z.count_ones() as i32) / 4.0 * term;
    }
    Ok(total)
}

/// Probability that the two outputs agree: `½(1 + Σ_z f̂_z ĝ_z δ^{|z|})`.
pub fn r_ab(a_set: &[bool], b_set: &[bool], delta: f64) -> Result<f64> {
    same_cube(a_set, b_set)?;
    let delta = check_unit("delta", delta)?;
    let f = fourier_transform(&sign_function(a_set))?;
    let g = fourier_transform(&sign_function(b_set))?;
    let s: f64 = (0..f.coeffs.len())
        .map(|z| f.coeffs[z] * g.coeffs[z] * delta.powi(z.count_ones() as i32))
        .sum();
    Ok(0.5 * (1.0 + s))
}
