//! Leakage grids and the per-`ε` rows of a bound sweep.

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Grid points are rounded to this resolution so that `0.1 + 0.2` becomes `0.3`.
pub const GRID_RESOLUTION: f64 = 1e-12;
const GRID_SCALE: f64 = 1e12;

/// Largest number of points a sweep may expand to.
pub const MAX_POINTS: usize = 1_000_000;

pub fn snap(x: f64) -> f64 {
    (x * GRID_SCALE).round() / GRID_SCALE
}

/// Parses `start:step:end` into the inclusive grid `start, start + step, ...`.
pub fn parse_sweep(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, s, b] = parts.as_slice() else {
        return Err(CliError::usage(format!(
            "sweep `{spec}` is not start:step:end"
        )));
    };
    let num = |t: &str| -> CliResult<f64> {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::usage(format!("sweep `{spec}`: `{t}` is not a number")))
    };
    let (start, step, end) = (num(a)?, num(s)?, num(b)?);
    if start < 0.0 {
        return Err(CliError::usage(format!(
            "sweep `{spec}`: epsilon must be non-negative"
        )));
    }
    if step <= 0.0 {
        return Err(CliError::usage(format!(
            "sweep `{spec}`: step must be positive"
        )));
    }
    if end < start {
        return Err(CliError::usage(format!(
            "sweep `{spec}`: end is below start"
        )));
    }
    let span = (end - start) / step;
    if span >= MAX_POINTS as f64 {
        return Err(CliError::usage(format!(
            "sweep `{spec}` has too many points"
        )));
    }
    let n = (span + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| snap(start + k as f64 * step)).collect())
}

/// Adds `x` (unrounded) to a sorted grid; a grid point within the grid
/// resolution is replaced by `x`.
pub fn insert_point(grid: &mut Vec<f64>, x: f64) {
    if let Some(g) = grid.iter_mut().find(|g| (**g - x).abs() < GRID_RESOLUTION) {
        *g = x;
        return;
    }
    let at = grid.partition_point(|&g| g < x);
    grid.insert(at, x);
}

pub fn validate_epsilon(eps: f64) -> CliResult<f64> {
    if eps.is_finite() && eps >= 0.0 {
        Ok(eps)
    } else {
        Err(CliError::usage(format!(
            "epsilon = {eps} must be a finite non-negative number"
        )))
    }
}

/// One `ε` of a sweep. Utility columns are empty for joints without a task axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    #[serde(rename = "L_h1")]
    pub l_h1: f64,
    #[serde(rename = "L_h2_clamped")]
    pub l_h2_clamped: Option<f64>,
    pub upper_h_eps: f64,
    #[serde(rename = "util_L1")]
    pub util_l1: Option<f64>,
    #[serde(rename = "util_L2_clamped")]
    pub util_l2_clamped: Option<f64>,
    pub util_upper: Option<f64>,
    pub gap: Option<f64>,
    pub mechanism_leakage: Option<f64>,
    pub mechanism_utility_task: Option<f64>,
}

pub const CSV_HEADER: &str = "epsilon,L_h1,L_h2_clamped,upper_h_eps,util_L1,util_L2_clamped,util_upper,gap,mechanism_leakage,mechanism_utility_task";

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12}")).unwrap_or_default()
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        [
            Some(self.epsilon),
            Some(self.l_h1),
            self.l_h2_clamped,
            Some(self.upper_h_eps),
            self.util_l1,
            self.util_l2_clamped,
            self.util_upper,
            self.gap,
            self.mechanism_leakage,
            self.mechanism_utility_task,
        ]
        .into_iter()
        .map(cell)
        .collect::<Vec<_>>()
        .join(",")
    }
}

/// Header plus one line per row, newline-terminated.
pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}
