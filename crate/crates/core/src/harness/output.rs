use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use crate::harness::runner::ResultTable;
use crate::harness::HarnessError;
use crate::metrics::{regret_slope_vs_log_t, LogFit};

pub const CSV_HEADER: [&str; 8] = [
    "strategy",
    "theta_id",
    "horizon",
    "checkpoint",
    "trials",
    "mean_loss",
    "ci_half_width",
    "lower_bound_at_checkpoint",
];

fn fixed(value: Option<f64>) -> String {
    match value {
        Some(v) if v.is_finite() => format!("{v:.6}"),
        Some(v) if v.is_infinite() => if v > 0.0 { "inf" } else { "-inf" }.to_string(),
        _ => "nan".to_string(),
    }
}

/// Header plus one LF-terminated line per row.
pub fn write_csv<W: Write>(table: &ResultTable, writer: W) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    out.write_record(CSV_HEADER)?;
    for row in &table.rows {
        out.write_record([
            row.strategy.clone(),
            row.theta_id.clone(),
            row.horizon.to_string(),
            row.checkpoint.to_string(),
            row.trials.to_string(),
            fixed(Some(row.mean_loss)),
            fixed(row.ci_half_width),
            fixed(row.lower_bound_at_checkpoint),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn emit_csv(table: &ResultTable, path: &Path) -> Result<(), HarnessError> {
    let io_err = |source| HarnessError::Output {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    write_csv(table, std::io::BufWriter::new(file)).map_err(|e| io_err(e.into()))
}

#[derive(Debug, Clone)]
pub struct StrategySummary {
    pub theta_id: String,
    pub strategy: String,
    pub final_horizon: usize,
    pub final_mean_loss: f64,
    pub final_ci_half_width: Option<f64>,
    /// Fit of end-of-block loss against `ln T` across horizons.
    pub fit: Option<LogFit<f64>>,
    pub lower_bound: Option<f64>,
    pub wall_clock: Duration,
}

impl StrategySummary {
    pub fn slope_ratio(&self) -> Option<f64> {
        match (&self.fit, self.lower_bound) {
            (Some(fit), Some(c)) if c > 0.0 => Some(fit.slope / c),
            _ => None,
        }
    }
}

pub fn summarize(table: &ResultTable) -> Vec<StrategySummary> {
    let mut out = Vec::new();
    for ((theta_id, strategy), bound) in &table.lower_bounds {
        let mut curve: Vec<(usize, f64, Option<f64>)> = table
            .rows
            .iter()
            .filter(|r| {
                &r.theta_id == theta_id && &r.strategy == strategy && r.checkpoint == r.horizon
            })
            .map(|r| (r.horizon, r.mean_loss, r.ci_half_width))
            .collect();
        curve.sort_by_key(|c| c.0);
        let Some(&(final_horizon, final_mean_loss, final_ci_half_width)) = curve.last() else {
            continue;
        };
        let points: Vec<(usize, f64)> = curve.iter().map(|&(t, l, _)| (t, l)).collect();
        let wall_clock = table
            .wall_clock
            .iter()
            .find(|(s, _)| s == strategy)
            .map(|(_, d)| *d)
            .unwrap_or_default();
        out.push(StrategySummary {
            theta_id: theta_id.clone(),
            strategy: strategy.clone(),
            final_horizon,
            final_mean_loss,
            final_ci_half_width,
            fit: regret_slope_vs_log_t(&points).ok(),
            lower_bound: *bound,
            wall_clock,
        });
    }
    out
}

pub fn render_summary(summaries: &[StrategySummary]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<18} {:>8} {:>10} {:>14} {:>12} {:>10} {:>10}  notes",
        "strategy", "theta", "T", "final loss", "ln T slope", "bound", "ratio"
    );
    for m in summaries {
        let slope = m
            .fit
            .as_ref()
            .map_or("n/a".to_string(), |f| format!("{:.4}", f.slope));
        let bound = m
            .lower_bound
            .map_or("n/a".to_string(), |c| format!("{c:.4}"));
        let ratio = m
            .slope_ratio()
            .map_or("n/a".to_string(), |r| format!("{r:.3}"));
        let mut notes = Vec::new();
        if let Some(fit) = &m.fit {
            if fit.linear_growth() {
                notes.push("linear growth".to_string());
            } else if fit.poor_log_fit() {
                notes.push(format!("poor ln T fit (r2 {:.3})", fit.r_squared));
            }
        }
        notes.push(format!("{:.2?}", m.wall_clock));
        let loss = match m.final_ci_half_width {
            Some(h) => format!("{:.2}±{:.2}", m.final_mean_loss, h),
            None => format!("{:.2}", m.final_mean_loss),
        };
        let _ = writeln!(
            s,
            "{:<18} {:>8} {:>10} {:>14} {:>12} {:>10} {:>10}  {}",
            m.strategy,
            m.theta_id,
            m.final_horizon,
            loss,
            slope,
            bound,
            ratio,
            notes.join(", ")
        );
    }
    s
}
