//! Central finite-difference check of [`backward`](super::backward).

use rand::Rng;

use super::{backward, cross_entropy, forward, PolicyModel};
use crate::error::Result;
use crate::problems::Observation;

/// Floor of the relative-error denominator.
pub const DENOMINATOR_FLOOR: f64 = 1e-5;

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter index with the largest relative error.
    pub worst: usize,
    pub checked: usize,
    /// Coordinates skipped because a ±h move flips a ReLU.
    pub skipped: usize,
}

fn loss(model: &PolicyModel, batch: &[&Observation], targets: &[Vec<f64>]) -> Result<(f64, Vec<bool>)> {
    let tape = forward(model, batch)?;
    let inv = 1.0 / tape.batch() as f64;
    let l = tape.log_probs.iter().zip(targets).map(|(lp, t)| cross_entropy(lp, t) * inv).sum();
    Ok((l, tape.relu_pattern()))
}

/// Compares analytic and numerical gradients on every parameter.
pub fn check_gradients(
    model: &PolicyModel,
    batch: &[&Observation],
    targets: &[Vec<f64>],
    h: f64,
) -> Result<GradCheckReport> {
    let tape = forward(model, batch)?;
    let base_pattern = tape.relu_pattern();
    let (_, analytic) = backward(model, &tape, targets)?;
    let mut probe = model.clone();
    let mut report = GradCheckReport::default();
    for (i, &a) in analytic.iter().enumerate() {
        let orig = probe.params[i];
        probe.params[i] = orig + h;
        let (plus, pat_plus) = loss(&probe, batch, targets)?;
        probe.params[i] = orig - h;
        let (minus, pat_minus) = loss(&probe, batch, targets)?;
        probe.params[i] = orig;
        if pat_plus != base_pattern || pat_minus != base_pattern {
            report.skipped += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * h);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(DENOMINATOR_FLOOR);
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst = i;
        }
        report.checked += 1;
    }
    Ok(report)
}

/// Sets every ReZero scalar, bias and graph-convolution weight to random
/// nonzero values.
pub fn randomize_residuals(model: &mut PolicyModel, rng: &mut impl Rng) {
    let layers = model.layout.layers.clone();
    for l in &layers {
        model.params[l.alpha_att.offset] = rng.random_range(0.3..1.0);
        model.params[l.alpha_ff.offset] = rng.random_range(0.3..1.0);
        for b in [l.bo, l.b1, l.b2] {
            for v in &mut model.params[b.range()] {
                *v = rng.random_range(-0.1..0.1);
            }
        }
        if let Some(g) = l.graph {
            let bound = 1.0 / (g.rows as f64).sqrt();
            for v in &mut model.params[g.range()] {
                *v = rng.random_range(-bound..bound);
            }
        }
    }
    for b in [model.layout.embed_b, model.layout.head_b] {
        for v in &mut model.params[b.range()] {
            *v = rng.random_range(-0.1..0.1);
        }
    }
}
