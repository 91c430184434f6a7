//! Distillability sweeps over the symmetric `(δ, ε)` family.

use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::boxes::{is_quantum_boundary_inside, NoSignalingBox};
use crate::error::{Error, Result};
use crate::evaluator::distilled_value;
use crate::protocols::{NamedProtocol, Protocol};

/// A protocol distills a box when one application raises the CHSH value by
/// more than this.
pub const DISTILL_THRESHOLD: f64 = 1e-12;

/// Inclusive arithmetic grid `start, start + step, …, ≤ stop` inside [−1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Domain(format!("grid step must be positive, got {step}")));
        }
        for v in [start, stop] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("grid bound {v} outside [-1, 1]")));
            }
        }
        if stop < start {
            return Err(Error::Domain(format!("grid stop {stop} is below start {start}")));
        }
        Ok(Self { start, stop, step })
    }

    /// A single point.
    pub fn point(v: f64) -> Result<Self> {
        Self::new(v, v, 1.0)
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| (self.start + i as f64 * self.step).clamp(-1.0, 1.0)).collect()
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// `START:STOP:STEP`, or a single value.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| Error::Domain(format!("bad grid {s:?}"))))
            .collect::<Result<_>>()?;
        match parts[..] {
            [v] => Self::point(v),
            [start, stop, step] => Self::new(start, stop, step),
            _ => Err(Error::Domain(format!("grid must be START:STOP:STEP, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolOutcome {
    pub name: String,
    pub value: f64,
    pub distills: bool,
}

/// One symmetric grid point with every registered protocol's value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub delta: f64,
    pub epsilon: f64,
    pub v_in: f64,
    pub quantum: bool,
    pub outcomes: Vec<ProtocolOutcome>,
}

impl SweepRecord {
    pub fn outcome(&self, name: &str) -> Option<&ProtocolOutcome> {
        self.outcomes.iter().find(|o| o.name == name)
    }
}

fn evaluate_point(protocols: &[(String, Protocol)], delta: f64, epsilon: f64) -> Result<SweepRecord> {
    let bx = NoSignalingBox::symmetric(delta, epsilon)?;
    let v_in = bx.chsh_value();
    let outcomes = protocols
        .iter()
        .map(|(name, p)| {
            let value = distilled_value(p, &bx)?;
            Ok(ProtocolOutcome { name: name.clone(), value, distills: value - v_in > DISTILL_THRESHOLD })
        })
        .collect::<Result<_>>()?;
    Ok(SweepRecord { delta, epsilon, v_in, quantum: is_quantum_boundary_inside(&bx.correlators()), outcomes })
}

/// Evaluates every protocol on every `(δ, ε)` of the grid, δ-major. Runs on
/// the current rayon pool; output order does not depend on scheduling.
pub fn distillable_region(protocols: &[NamedProtocol], deltas: &[f64], epsilons: &[f64]) -> Result<Vec<SweepRecord>> {
    let built: Vec<(String, Protocol)> =
        protocols.iter().map(|p| Ok((p.to_string(), p.build()?))).collect::<Result<_>>()?;
    let points: Vec<(f64, f64)> =
        deltas.iter().flat_map(|&d| epsilons.iter().map(move |&e| (d, e))).collect();
    points.par_iter().map(|&(d, e)| evaluate_point(&built, d, e)).collect()
}

/// Smallest δ at which `name` distills some box in the sweep.
pub fn min_distillable_delta(records: &[SweepRecord], name: &str) -> Option<f64> {
    records
        .iter()
        .filter(|r| r.outcome(name).is_some_and(|o| o.distills))
        .map(|r| r.delta)
        .min_by(f64::total_cmp)
}

/// Formats with at most 10 significant digits.
pub fn format_sig10(v: f64) -> String {
    let rounded: f64 = format!("{v:.9e}").parse().unwrap_or(v);
    let s = format!("{rounded}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// CSV: `delta,epsilon,v_in,quantum`, then `v_<name>,distills_<name>` per
/// protocol in registration order.
pub fn write_csv(records: &[SweepRecord], protocols: &[NamedProtocol], out: &mut impl Write) -> Result<()> {
    let mut header = String::from("delta,epsilon,v_in,quantum");
    for p in protocols {
        header.push_str(&format!(",v_{p},distills_{p}"));
    }
    writeln!(out, "{header}")?;
    for r in records {
        let mut line = format!(
            "{},{},{},{}",
            format_sig10(r.delta),
            format_sig10(r.epsilon),
            format_sig10(r.v_in),
            u8::from(r.quantum)
        );
        for o in &r.outcomes {
            line.push_str(&format!(",{},{}", format_sig10(o.value), u8::from(o.distills)));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}
