//! Closed-form CHSH values of the named wirings.

use serde::Serialize;

use crate::boxes::BoxParams;
use crate::error::{check_unit, Error, Result};

fn check_depth(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("depth must be at least 1".into()));
    }
    Ok(())
}

/// Value of the depth-`n` parity wiring: `δ₁ⁿ + δ₂ⁿ + δ₃ⁿ − εⁿ`.
pub fn parity_value(params: &BoxParams, n: u32) -> Result<f64> {
    check_depth(n)?;
    let k = n as i32;
    Ok(params.delta1.powi(k) + params.delta2.powi(k) + params.delta3.powi(k) - params.epsilon.powi(k))
}

/// Upper bound on any non-adaptive wiring of depth at most `max_depth`, with
/// the smallest parity depth attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonAdaptiveBound {
    pub value: f64,
    pub depth: u32,
}

/// `max_{1≤k≤n} |δ₁ᵏ + δ₂ᵏ + δ₃ᵏ − εᵏ|`.
pub fn nonadaptive_bound(params: &BoxParams, max_depth: u32) -> Result<NonAdaptiveBound> {
    check_depth(max_depth)?;
    let mut best = NonAdaptiveBound { value: f64::NEG_INFINITY, depth: 0 };
    for k in 1..=max_depth {
        let v = parity_value(params, k)?.abs();
        if v > best.value {
            best = NonAdaptiveBound { value: v, depth: k };
        }
    }
    Ok(best)
}

/// `max_{0≤k≤n} |δ₁ᵏ + δ₂ᵏ + δ₃ᵏ − εᵏ|`. The `k = 0` term is the value 2
/// of constant outputs. This is the exact optimum over non-adaptive wirings
/// whose output tables do not depend on the party's input; `depth = 0` means
/// constant outputs win.
pub fn input_independent_bound(params: &BoxParams, max_depth: u32) -> Result<NonAdaptiveBound> {
    let b = nonadaptive_bound(params, max_depth)?;
    Ok(if b.value < 2.0 { NonAdaptiveBound { value: 2.0, depth: 0 } } else { b })
}

/// Depth-`k` adaptive parity on the correlated family:
/// `4(1 − p(p + ½)^{k−1})` with `p = (1 + ε)/4`.
pub fn adaptive_parity_correlated_value(epsilon: f64, k: u32) -> Result<f64> {
    check_depth(k)?;
    let p = (1.0 + check_unit("epsilon", epsilon)?) / 4.0;
    Ok(4.0 * (1.0 - p * (p + 0.5).powi(k as i32 - 1)))
}

/// Bias of the `xy = 11` row after depth-2 adaptive parity (or the Allcock
/// wiring) on a symmetric box.
fn last_row_bias(delta: f64, epsilon: f64) -> f64 {
    (epsilon * epsilon + epsilon + 3.0 * epsilon * delta - delta) / 4.0
}

/// Image of a symmetric box under depth-2 adaptive parity, as biases:
/// rows 00, 01, 10 get `δ²`, row 11 gets `(ε² + ε + 3εδ − δ)/4`.
pub fn bs_map(delta: f64, epsilon: f64) -> Result<BoxParams> {
    let (d, e) = (check_unit("delta", delta)?, check_unit("epsilon", epsilon)?);
    BoxParams::new(d * d, d * d, d * d, last_row_bias(d, e))
}

/// `(12δ² + δ − 3εδ − ε − ε²)/4`.
pub fn bs_value(delta: f64, epsilon: f64) -> f64 {
    (12.0 * delta * delta + delta - 3.0 * epsilon * delta - epsilon - epsilon * epsilon) / 4.0
}

/// Image of a symmetric box under the depth-2 Allcock wiring, as biases:
/// `(δ², (3δ² + δ + εδ − ε)/4, δ², (ε² + ε + 3εδ − δ)/4)`.
pub fn allcock_map(delta: f64, epsilon: f64) -> Result<BoxParams> {
    let (d, e) = (check_unit("delta", delta)?, check_unit("epsilon", epsilon)?);
    let second = (3.0 * d * d + d + e * d - e) / 4.0;
    BoxParams::new(d * d, second, d * d, last_row_bias(d, e))
}

/// `(11δ² + 2δ − 2εδ − 2ε − ε²)/4`.
pub fn allcock_value(delta: f64, epsilon: f64) -> f64 {
    (11.0 * delta * delta + 2.0 * delta - 2.0 * epsilon * delta - 2.0 * epsilon - epsilon * epsilon) / 4.0
}

/// Advantage of the Allcock wiring over adaptive parity on symmetric boxes,
/// `(1 − δ)(δ − ε)/4`.
pub fn allcock_minus_bs(delta: f64, epsilon: f64) -> f64 {
    (1.0 - delta) * (delta - epsilon) / 4.0
}

/// Value of the new depth-3 wiring on symmetric boxes:
/// `(39δ³ + δ²(ε + 16) + δ(1 − 16ε − 8ε²) − ε)/16`.
pub fn depth3_value(delta: f64, epsilon: f64) -> f64 {
    let (d, e) = (delta, epsilon);
    (39.0 * d * d * d + d * d * (e + 16.0) + d * (1.0 - 16.0 * e - 8.0 * e * e) - e) / 16.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TOL;

    fn near4(a: f64, b: f64) -> bool {
        (a - b).abs() <= 5e-5
    }

    #[test]
    fn parity_table_values() {
        let p = BoxParams::symmetric(0.92, -0.22).unwrap();
        assert!(near4(parity_value(&p, 2).unwrap(), 2.4908));
        assert!(near4(parity_value(&BoxParams::symmetric(0.96, 0.60).unwrap(), 2).unwrap(), 2.4048));
        let g = BoxParams::new(0.3, -0.2, 0.9, 0.1).unwrap();
        assert!((parity_value(&g, 1).unwrap() - g.chsh_value()).abs() <= TOL);
        assert!(parity_value(&g, 0).is_err());
    }

    #[test]
    fn bound_examples() {
        let b = nonadaptive_bound(&BoxParams::symmetric(0.96, 0.60).unwrap(), 2).unwrap();
        assert!(near4(b.value, 2.4048) && b.depth == 2);
        for n in 1..=8 {
            let b = nonadaptive_bound(&BoxParams::symmetric(0.96, -0.48).unwrap(), n).unwrap();
            assert!((b.value - 3.36).abs() <= TOL && b.depth == 1);
        }
        let b = nonadaptive_bound(&BoxParams::perfect(), 3).unwrap();
        assert_eq!((b.value, b.depth), (4.0, 1));
        assert!(nonadaptive_bound(&BoxParams::perfect(), 0).is_err());
        let weak = BoxParams::new(0.5, 0.4, 0.3, 0.1).unwrap();
        assert_eq!(input_independent_bound(&weak, 2).unwrap(), NonAdaptiveBound { value: 2.0, depth: 0 });
        let strong = BoxParams::symmetric(0.96, 0.60).unwrap();
        assert_eq!(input_independent_bound(&strong, 2).unwrap(), nonadaptive_bound(&strong, 2).unwrap());
    }

    #[test]
    fn maps_reproduce_values() {
        let (d, e) = (0.92, -0.22);
        assert!(near4(bs_map(d, e).unwrap().chsh_value(), 2.9639));
        assert!(near4(allcock_map(d, e).unwrap().chsh_value(), 2.9867));
        assert!((bs_map(d, e).unwrap().chsh_value() - bs_value(d, e)).abs() <= TOL);
        assert!((allcock_map(d, e).unwrap().chsh_value() - allcock_value(d, e)).abs() <= TOL);
        assert!(bs_map(1.2, 0.0).is_err());
    }

    #[test]
    fn map_coincidences() {
        for e in [-1.0, -0.5, 0.0, 0.4, 1.0] {
            // δ = 1: the second row collapses onto adaptive parity's image
            let a = allcock_map(1.0, e).unwrap();
            assert!((a.delta2 - bs_map(1.0, e).unwrap().delta2).abs() <= TOL);
        }
        for d in [-0.8, 0.0, 0.3, 0.9] {
            // δ = ε: the second row equals rows 1 and 3
            let a = allcock_map(d, d).unwrap();
            assert!((a.delta2 - d * d).abs() <= TOL);
        }
    }

    #[test]
    fn depth3_landmarks() {
        assert!(near4(depth3_value(0.96, -0.48), 3.4907));
        assert!(near4(depth3_value(0.96, 0.60), 2.3864));
        assert!(near4(depth3_value(0.92, -0.22), 2.9842));
        assert!((depth3_value(1.0, -1.0) - 4.0).abs() <= TOL);
        let (d, e) = (35.0 / 37.0, -21.0 / 37.0);
        assert!((depth3_value(d, e) - 126.0 / 37.0).abs() <= 1e-12);
        assert!((allcock_value(d, e) - 126.0 / 37.0).abs() <= 1e-12);
    }

    #[test]
    fn theorem_two_endpoints() {
        for e in [-1.0, -0.2, 0.5] {
            assert!((adaptive_parity_correlated_value(e, 1).unwrap() - (3.0 - e)).abs() <= TOL);
            assert!((adaptive_parity_correlated_value(e, 2).unwrap() - (13.0 - 4.0 * e - e * e) / 4.0).abs() <= TOL);
        }
        assert!(adaptive_parity_correlated_value(0.0, 0).is_err());
    }

    #[test]
    fn gap_identity_and_sign() {
        for i in 0..=40 {
            for j in 0..=i {
                let d = -1.0 + 0.05 * i as f64;
                let e = -1.0 + 0.05 * j as f64;
                let gap = allcock_value(d, e) - bs_value(d, e);
                assert!((gap - allcock_minus_bs(d, e)).abs() <= TOL);
                assert!(gap >= -TOL);
            }
        }
    }
}
