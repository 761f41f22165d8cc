use serde::{Deserialize, Serialize};

use super::{Axis, MASS_TOLERANCE};
use crate::{Error, Result};

/// A conditional distribution `W(output | inputs)`.
///
/// Rows are indexed by the row-major position of the input tuple, so for
/// inputs `(S, F)` the row for `(s, f)` sits at `s * |F| + f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannel")]
pub struct Channel {
    inputs: Vec<Axis>,
    output: Axis,
    rows: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawChannel {
    inputs: Vec<Axis>,
    output: Axis,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<RawChannel> for Channel {
    type Error = Error;

    fn try_from(raw: RawChannel) -> Result<Self> {
        Channel::new(raw.inputs, raw.output, raw.rows)
    }
}

impl Channel {
    pub fn new(inputs: Vec<Axis>, output: Axis, rows: Vec<Vec<f64>>) -> Result<Self> {
        if output.is_empty() {
            return Err(Error::InvalidChannel("empty output alphabet".into()));
        }
        if inputs.iter().any(|a| a.name == output.name) {
            return Err(Error::AxisOverlap(output.name.clone()));
        }
        let n_rows: usize = inputs.iter().map(Axis::len).product();
        if rows.len() != n_rows {
            return Err(Error::InvalidChannel(format!(
                "expected {n_rows} rows, got {}",
                rows.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != output.len() {
                return Err(Error::InvalidChannel(format!(
                    "row {i} has {} entries, output alphabet has {}",
                    row.len(),
                    output.len()
                )));
            }
            if row.iter().any(|q| !q.is_finite() || *q < 0.0) {
                return Err(Error::InvalidChannel(format!(
                    "row {i} has a negative entry"
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > MASS_TOLERANCE {
                return Err(Error::InvalidChannel(format!("row {i} sums to {total}")));
            }
        }
        Ok(Self {
            inputs,
            output,
            rows,
        })
    }

    /// Copies `input` to a new axis named `output`.
    pub fn identity(input: Axis, output: &str) -> Self {
        let n = input.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let out = Axis::new(output, input.alphabet.clone());
        Self {
            inputs: vec![input],
            output: out,
            rows,
        }
    }

    /// Every input tuple maps to the same output distribution.
    pub fn constant(inputs: Vec<Axis>, output: Axis, row: &[f64]) -> Result<Self> {
        let n_rows: usize = inputs.iter().map(Axis::len).product();
        Self::new(inputs, output, vec![row.to_vec(); n_rows])
    }

    pub fn inputs(&self) -> &[Axis] {
        &self.inputs
    }

    pub fn output(&self) -> &Axis {
        &self.output
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.rows[index]
    }

    /// Row for an input tuple given as per-axis symbol indices.
    pub fn row_at(&self, coords: &[usize]) -> &[f64] {
        let mut flat = 0;
        for (c, axis) in coords.iter().zip(&self.inputs) {
            flat = flat * axis.len() + c;
        }
        &self.rows[flat]
    }
}
