use std::io::Write;

use super::{Metric, MetricReport};
use crate::num::Score;

/// `metric<TAB>turn_id<TAB>value` lines, per turn then `all`, for each
/// selected metric.
pub fn write_tsv<S: Score, W: Write>(mut out: W, report: &MetricReport<S>, metrics: &[Metric]) -> std::io::Result<()> {
    for &m in metrics {
        for (turn, values) in &report.per_turn {
            writeln!(out, "{m}\t{turn}\t{:.4}", values.get(m))?;
        }
        writeln!(out, "{m}\tall\t{:.4}", report.mean.get(m))?;
    }
    Ok(())
}

/// Human-readable summary of the means.
pub fn write_table<S: Score, W: Write>(
    mut out: W,
    report: &MetricReport<S>,
    metrics: &[Metric],
) -> std::io::Result<()> {
    let width = metrics.iter().map(|m| m.name().len()).max().unwrap_or(6).max(6);
    writeln!(out, "{:<width$}  {:>8}", "metric", "mean")?;
    writeln!(out, "{}  {}", "-".repeat(width), "-".repeat(8))?;
    for &m in metrics {
        writeln!(out, "{:<width$}  {:>8.4}", m.name(), report.mean.get(m))?;
    }
    writeln!(out, "evaluated turns: {}", report.evaluated())?;
    if !report.unjudged.is_empty() {
        writeln!(out, "turns without relevant judgments: {}", report.unjudged.len())?;
    }
    Ok(())
}
