//! Optimality gaps and run summaries.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::ResultRecord;
use crate::error::{CopError, Result};
use crate::problems::{ProblemKind, Sense};

/// Cost (minimization) or collected value (maximization) of a
/// minimization-form objective.
pub fn natural_value(kind: ProblemKind, objective: f64) -> f64 {
    match kind.sense() {
        Sense::Minimize => objective,
        Sense::Maximize => -objective,
    }
}

/// `(cost - ref) / ref` when minimizing, `(ref - value) / ref` when
/// maximizing, so beating the reference gives a negative gap.
pub fn signed_gap(sense: Sense, value: f64, reference: f64) -> f64 {
    let diff = match sense {
        Sense::Minimize => value - reference,
        Sense::Maximize => reference - value,
    };
    if reference == 0.0 {
        return if diff == 0.0 { 0.0 } else { f64::INFINITY };
    }
    diff / reference.abs()
}

/// Fills `reference` and `gap` of every record.
pub fn attach_references(sense: Sense, results: &mut [ResultRecord], references: &[Option<f64>]) -> Result<()> {
    for r in results.iter_mut() {
        let reference = references.get(r.index).copied().flatten().ok_or(CopError::MissingReference(r.index))?;
        r.reference = Some(reference);
        r.gap = Some(signed_gap(sense, r.value, reference));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean_value: f64,
    /// Mean gap over the records that carry one.
    pub mean_gap: Option<f64>,
    pub wall_time: f64,
}

pub fn summarize(results: &[ResultRecord], wall_time: f64) -> Summary {
    let count = results.len();
    let mean_value = results.iter().map(|r| r.value).sum::<f64>() / count.max(1) as f64;
    let gaps: Vec<f64> = results.iter().filter_map(|r| r.gap).collect();
    let mean_gap = (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64);
    Summary { count, mean_value, mean_gap, wall_time }
}

/// Plain-text table, one row per labelled summary.
pub fn format_table(rows: &[(String, Summary)]) -> String {
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(6);
    let mut s =
        format!("{:<width$}  {:>6}  {:>12}  {:>9}  {:>9}\n", "method", "count", "mean value", "gap", "time (s)");
    for (label, m) in rows {
        let gap = m.mean_gap.map_or("-".to_string(), |g| format!("{:.2}%", 100.0 * g));
        let _ = writeln!(s, "{label:<width$}  {:>6}  {:>12.4}  {gap:>9}  {:>9.2}", m.count, m.mean_value, m.wall_time);
    }
    s
}
