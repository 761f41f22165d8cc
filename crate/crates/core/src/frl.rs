//! Functional representation of the semantic given the private data, and the
//! randomized-response extension that dials the leakage up to exactly `ε`.
//!
//! The representation `U0` is built by laying every conditional CDF of `F | S = s`
//! on `[0, 1)` and taking the common refinement of all breakpoints. Each
//! refinement cell is one symbol of `U0` with probability equal to its length,
//! so `U0` is independent of `S`, and `F` is recovered from `(U0, S)` by asking
//! which interval of `F | S = s` contains the cell.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::axes::{F, H, S, U};
use crate::probcore::{Axis, Channel, JointTable};
use crate::{Error, Result};

/// Breakpoints closer than this are treated as one.
const MERGE_TOLERANCE: f64 = 1e-13;

/// Maximum number of bisection steps when tuning the randomized response.
pub const MAX_BISECTION_STEPS: usize = 200;

/// Required agreement between the measured leakage and the target.
pub const LEAKAGE_TOLERANCE: f64 = 1e-9;

/// Output axis name of the bare representation channel.
pub const U0: &str = "U0";

/// Output axis name of the randomized-response channel.
pub const W: &str = "W";

/// The functional representation of `F` given `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrlOutput {
    u_alphabet: Vec<String>,
    cell_lengths: Vec<f64>,
    channel: Channel,
    /// `decoder[cell][s]` is the index of the recovered semantic symbol.
    decoder: Vec<Vec<usize>>,
}

impl FrlOutput {
    pub fn u_alphabet(&self) -> &[String] {
        &self.u_alphabet
    }

    /// `P(U0 = cell)`, the length of each refinement cell.
    pub fn cell_lengths(&self) -> &[f64] {
        &self.cell_lengths
    }

    /// `P(U0 | S, F)`, with inputs `(S, F)` and output axis `U0`.
    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    /// Index of the semantic symbol recovered from `(cell, s)`.
    pub fn decode(&self, cell: usize, s: usize) -> usize {
        self.decoder[cell][s]
    }
}

/// Builds the interval-refinement representation for the `(S, F)` marginal of `joint`.
pub fn construct_frl(joint: &JointTable) -> Result<FrlOutput> {
    let s_axis = joint.axis(S)?.clone();
    let f_axis = joint.axis(F)?.clone();
    let p_sf = joint.pair_matrix(S, F)?;
    let nf = f_axis.len();

    // Conditional CDF of F given each s with positive mass.
    let cdfs: Vec<Option<Vec<f64>>> = p_sf
        .iter()
        .map(|row| {
            let ps: f64 = row.iter().sum();
            (ps > 0.0).then(|| {
                let mut acc = 0.0;
                let mut cdf = Vec::with_capacity(nf + 1);
                cdf.push(0.0);
                for &v in row {
                    acc += v / ps;
                    cdf.push(acc);
                }
                cdf
            })
        })
        .collect();

    let mut points: Vec<f64> = cdfs
        .iter()
        .flatten()
        .flat_map(|cdf| cdf[1..nf].iter().copied())
        .filter(|&b| b > MERGE_TOLERANCE && b < 1.0 - MERGE_TOLERANCE)
        .collect();
    points.sort_by(f64::total_cmp);
    let mut boundaries = vec![0.0];
    for b in points {
        if b - boundaries.last().copied().unwrap_or(0.0) > MERGE_TOLERANCE {
            boundaries.push(b);
        }
    }
    boundaries.push(1.0);

    let n_cells = boundaries.len() - 1;
    let cell_lengths: Vec<f64> = boundaries.windows(2).map(|w| w[1] - w[0]).collect();
    let decoder: Vec<Vec<usize>> = (0..n_cells)
        .map(|c| {
            let mid = 0.5 * (boundaries[c] + boundaries[c + 1]);
            cdfs.iter()
                .map(|cdf| cdf.as_ref().map_or(0, |cdf| locate(cdf, mid)))
                .collect()
        })
        .collect();

    // P(U0 = c | s, y) = len(c) 1[g(c, s) = y] / P(y | s); unobservable rows are uniform.
    let mut rows = Vec::with_capacity(s_axis.len() * nf);
    for (s, row) in p_sf.iter().enumerate() {
        let ps: f64 = row.iter().sum();
        for (y, &mass) in row.iter().enumerate() {
            if mass <= 0.0 {
                rows.push(vec![1.0 / n_cells as f64; n_cells]);
                continue;
            }
            let mut q: Vec<f64> = (0..n_cells)
                .map(|c| {
                    if decoder[c][s] == y {
                        cell_lengths[c] / (mass / ps)
                    } else {
                        0.0
                    }
                })
                .collect();
            let total: f64 = q.iter().sum();
            if total <= 0.0 {
                return Err(Error::Internal(format!(
                    "semantic symbol {y} has mass {mass} under s = {s} but no refinement cell"
                )));
            }
            q.iter_mut().for_each(|v| *v /= total);
            rows.push(q);
        }
    }

    let u_alphabet: Vec<String> = (0..n_cells).map(|c| format!("c{c}")).collect();
    let channel = Channel::new(
        vec![s_axis, f_axis],
        Axis::new(U0, u_alphabet.clone()),
        rows,
    )?;
    Ok(FrlOutput {
        u_alphabet,
        cell_lengths,
        channel,
        decoder,
    })
}

/// Index `y` with `cdf[y] <= x < cdf[y + 1]`, falling back to the last symbol
/// with positive mass when round-off leaves `x` past the final value.
fn locate(cdf: &[f64], x: f64) -> usize {
    let n = cdf.len() - 1;
    (0..n)
        .find(|&y| x < cdf[y + 1] && cdf[y + 1] > cdf[y])
        .or_else(|| (0..n).rev().find(|&y| cdf[y + 1] > cdf[y]))
        .unwrap_or(0)
}

/// Generalized randomized response over `s_axis`: the true symbol with
/// probability `p`, each other symbol with probability `(1 - p) / (|S| - 1)`.
pub fn randomized_response(s_axis: &Axis, p: f64) -> Result<Channel> {
    let n = s_axis.len();
    let lo = 1.0 / n as f64;
    if !(p.is_finite() && p >= lo - 1e-15 && p <= 1.0) {
        return Err(Error::OutOfRange {
            name: "truth-telling probability",
            value: p,
            range: format!("[{lo}, 1]"),
        });
    }
    let other = if n > 1 {
        (1.0 - p) / (n - 1) as f64
    } else {
        0.0
    };
    let rows = (0..n)
        .map(|i| (0..n).map(|j| if i == j { p } else { other }).collect())
        .collect();
    Channel::new(
        vec![s_axis.clone()],
        Axis::new(W, s_axis.alphabet.clone()),
        rows,
    )
}

/// A disclosure channel `P(U | S, F)` with its measured leakage and semantic utility.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    pub channel: Channel,
    /// Measured `I(U; S)`.
    pub leakage: f64,
    /// Measured `I(U; F)`.
    pub utility_semantic: f64,
    /// Truth-telling probability of the randomized response; `None` when `S` is degenerate.
    pub rr_prob: Option<f64>,
    /// Leakage target after clamping to `H(S)`.
    pub epsilon: f64,
    /// Set when the requested leakage exceeded `H(S)`.
    pub epsilon_clamped: bool,
    /// Set when `H(S) = 0`; `U` is then the bare representation.
    pub degenerate_private: bool,
}

/// Serialized form: `{"u_alphabet", "rows": {"(s,f)": [...]}, "leakage", "utility_semantic", "rr_prob"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MechanismJson {
    pub u_alphabet: Vec<String>,
    pub rows: BTreeMap<String, Vec<f64>>,
    pub leakage: f64,
    pub utility_semantic: f64,
    pub rr_prob: Option<f64>,
    pub epsilon: f64,
    pub epsilon_clamped: bool,
    pub degenerate_private: bool,
}

impl Mechanism {
    pub fn to_json(&self) -> MechanismJson {
        let inputs = self.channel.inputs();
        let (s_axis, f_axis) = (&inputs[0], &inputs[1]);
        let mut rows = BTreeMap::new();
        for (si, s) in s_axis.alphabet.iter().enumerate() {
            for (fi, f) in f_axis.alphabet.iter().enumerate() {
                rows.insert(
                    format!("({s},{f})"),
                    self.channel.row_at(&[si, fi]).to_vec(),
                );
            }
        }
        MechanismJson {
            u_alphabet: self.channel.output().alphabet.clone(),
            rows,
            leakage: self.leakage,
            utility_semantic: self.utility_semantic,
            rr_prob: self.rr_prob,
            epsilon: self.epsilon,
            epsilon_clamped: self.epsilon_clamped,
            degenerate_private: self.degenerate_private,
        }
    }
}

/// Point of the bisection trace: truth-telling probability and the leakage it produced.
type TracePoint = (f64, f64);

/// Extends the representation with randomized response on `S` so that
/// `I(U; S) = ε`, with `U = (U0, W)` and `W` depending on `S` alone.
pub fn tune_leakage(joint: &JointTable, frl: &FrlOutput, epsilon: f64) -> Result<Mechanism> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::OutOfRange {
            name: "epsilon",
            value: epsilon,
            range: "[0, H(S)]".into(),
        });
    }
    let sf = joint.marginalize(&[S, F])?;
    let s_pmf = sf.pmf(S)?;
    let h_s = s_pmf.entropy();
    let s_axis = sf.axis(S)?.clone();

    if h_s <= 0.0 {
        let channel = frl.channel().clone();
        let channel = Channel::new(
            channel.inputs().to_vec(),
            Axis::new(U, channel.output().alphabet.clone()),
            channel.rows().to_vec(),
        )?;
        return finish(&sf, channel, None, 0.0, epsilon > 0.0, true);
    }

    let (target, clamped) = if epsilon > h_s {
        (h_s, true)
    } else {
        (epsilon, false)
    };
    let s_only = JointTable::new(vec![s_axis.clone()], s_pmf.probs().to_vec())?;
    let leakage_at = |p: f64| -> Result<f64> {
        let rr = randomized_response(&s_axis, p)?;
        s_only
            .extend_with_channel(&rr)?
            .mutual_information(&[S], &[W])
    };

    let p_min = 1.0 / s_axis.len() as f64;
    let p = if target == 0.0 {
        p_min
    } else if target == h_s {
        1.0
    } else {
        let mut trace: Vec<TracePoint> = Vec::new();
        let (mut lo, mut hi) = (p_min, 1.0);
        let mut best = (hi, f64::INFINITY);
        for _ in 0..MAX_BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let leak = leakage_at(mid)?;
            trace.push((mid, leak));
            if (leak - target).abs() < best.1 {
                best = (mid, (leak - target).abs());
            }
            if (leak - target).abs() <= 1e-13 {
                break;
            }
            if leak < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        check_monotone(&mut trace)?;
        best.0
    };

    let rr = randomized_response(&s_axis, p)?;
    let channel = combine(frl.channel(), &rr)?;
    finish(&sf, channel, Some(p), target, clamped, false)
}

/// Convenience: representation plus tuning in one call.
pub fn efrl_mechanism(joint: &JointTable, epsilon: f64) -> Result<Mechanism> {
    let frl = construct_frl(joint)?;
    tune_leakage(joint, &frl, epsilon)
}

fn check_monotone(trace: &mut [TracePoint]) -> Result<()> {
    trace.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in trace.windows(2) {
        let ((p_lo, leak_lo), (p_hi, leak_hi)) = (w[0], w[1]);
        if leak_lo > leak_hi + 1e-14 {
            return Err(Error::NonMonotoneLeakage {
                p_lo,
                leak_lo,
                p_hi,
                leak_hi,
            });
        }
    }
    Ok(())
}

/// `P(c, w | s, f) = P(c | s, f) · P(w | s)`.
fn combine(frl: &Channel, rr: &Channel) -> Result<Channel> {
    let inputs = frl.inputs().to_vec();
    let nf = inputs[1].len();
    let cells = &frl.output().alphabet;
    let ws = &rr.output().alphabet;
    let alphabet = cells
        .iter()
        .flat_map(|c| ws.iter().map(move |w| format!("{c}|{w}")))
        .collect();
    let rows = frl
        .rows()
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let r = rr.row(i / nf);
            q.iter()
                .flat_map(|&qc| r.iter().map(move |&rw| qc * rw))
                .collect()
        })
        .collect();
    Channel::new(inputs, Axis::new(U, alphabet), rows)
}

fn finish(
    sf: &JointTable,
    channel: Channel,
    rr_prob: Option<f64>,
    target: f64,
    clamped: bool,
    degenerate: bool,
) -> Result<Mechanism> {
    let ext = sf.extend_with_channel(&channel)?;
    let leakage = ext.mutual_information(&[U], &[S])?;
    let utility_semantic = ext.mutual_information(&[U], &[F])?;
    if (leakage - target).abs() > LEAKAGE_TOLERANCE {
        return Err(Error::TuningFailed {
            target,
            reached: leakage,
        });
    }
    Ok(Mechanism {
        channel,
        leakage,
        utility_semantic,
        rr_prob,
        epsilon: target,
        epsilon_clamped: clamped,
        degenerate_private: degenerate,
    })
}

/// Exact `I(U; F)` and `I(U; H)` of a mechanism on a joint over `(S, F, H)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismUtilities {
    pub semantic: f64,
    pub task: f64,
}

pub fn mechanism_utilities(joint3: &JointTable, m: &Mechanism) -> Result<MechanismUtilities> {
    let sfh = joint3.marginalize(&[S, F, H])?;
    let ext = sfh.extend_with_channel(&m.channel)?;
    Ok(MechanismUtilities {
        semantic: ext.mutual_information(&[U], &[F])?,
        task: ext.mutual_information(&[U], &[H])?,
    })
}
