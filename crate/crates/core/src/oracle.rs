//! Numerical lower-bound certifier for `h_ε` on small alphabets.
//!
//! The search maximizes `I(U; F)` over channels `P(U | S, F)` with a fixed
//! output size, subject to `I(U; S) <= ε`. Any feasible channel found is a
//! certified lower bound on `h_ε`; global optimality is never claimed.
//!
//! Each restart runs a pattern search over single-row mass transfers on the
//! exact-penalty objective `I(U;F) - λ [I(U;S) - ε]^+` for an increasing
//! sequence of `λ`. After every stage the iterate is pulled back into the
//! feasible set by mixing it with a leak-free anchor: either the channel that
//! ignores its input, or a copy of the iterate blended so that `P(U | S)` no
//! longer depends on `S`. Leakage is convex in the channel, so the largest
//! feasible mixing weight is found by bisection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::axes::{F, S, U};
use crate::bounds::{theorem1_bounds, TheoremBounds};
use crate::frl::efrl_mechanism;
use crate::probcore::{Axis, Channel, JointTable};
use crate::{Error, Result};

/// Largest `|S|·|F|` the search accepts.
pub const MAX_INPUT_CELLS: usize = 16;
/// Largest output alphabet the search accepts.
pub const MAX_U_SIZE: usize = 64;

pub const DEFAULT_RESTARTS: usize = 64;
pub const DEFAULT_MAX_SWEEPS: usize = 5000;
pub const DEFAULT_IMPROVEMENT_TOLERANCE: f64 = 1e-10;

/// Lower-side slack of the sandwich check.
pub const SANDWICH_LOWER_SLACK: f64 = 1e-6;
/// Upper-side slack of the sandwich check.
pub const SANDWICH_UPPER_SLACK: f64 = 1e-9;

const PENALTY_SCHEDULE: [f64; 5] = [1.0, 10.0, 100.0, 1e3, 1e4];
const MIN_STEP: f64 = 1e-9;

/// Leakage round-off tolerated when certifying feasibility.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-12;

/// `|S|·|F| + 1`.
pub fn default_u_size(joint: &JointTable) -> Result<usize> {
    Ok(joint.axis(S)?.len() * joint.axis(F)?.len() + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub u_size: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    pub improvement_tolerance: f64,
    /// Seed restart 0 with the randomized-response mechanism (compressed to `u_size`).
    pub seed_with_mechanism: bool,
}

impl OracleConfig {
    pub fn new(u_size: usize, restarts: usize, seed: u64) -> Self {
        Self {
            u_size,
            restarts,
            seed,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            improvement_tolerance: DEFAULT_IMPROVEMENT_TOLERANCE,
            seed_with_mechanism: true,
        }
    }
}

/// Best feasible point found by the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Exact `I(U; F)` of `channel`.
    pub value: f64,
    pub channel: Channel,
    /// Exact `I(U; S)` of `channel`.
    pub leakage: f64,
    pub epsilon: f64,
    pub u_size: usize,
    pub restarts_used: usize,
    /// Index of the restart that produced `channel`.
    pub best_restart: usize,
    pub seed: u64,
}

/// Searches with the default iteration cap and tolerance.
pub fn estimate_h_eps(
    joint: &JointTable,
    epsilon: f64,
    u_size: usize,
    restarts: usize,
    seed: u64,
) -> Result<OracleResult> {
    estimate_h_eps_with(
        joint,
        epsilon,
        &OracleConfig::new(u_size, restarts, seed),
        None,
    )
}

/// Full-control entry point. `warm` (same inputs, `u_size` outputs) is used as an
/// extra starting point; the result is never worse than a feasible warm start.
pub fn estimate_h_eps_with(
    joint: &JointTable,
    epsilon: f64,
    config: &OracleConfig,
    warm: Option<&Channel>,
) -> Result<OracleResult> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::OutOfRange {
            name: "epsilon",
            value: epsilon,
            range: "[0, inf)".into(),
        });
    }
    let sf = joint.marginalize(&[S, F])?;
    let s_axis = sf.axis(S)?.clone();
    let f_axis = sf.axis(F)?.clone();
    let cells = s_axis.len() * f_axis.len();
    if cells > MAX_INPUT_CELLS {
        return Err(Error::GuardExceeded(format!(
            "|S|·|F| = {cells} exceeds {MAX_INPUT_CELLS}"
        )));
    }
    if config.u_size == 0 || config.u_size > MAX_U_SIZE {
        return Err(Error::GuardExceeded(format!(
            "u_size = {} is outside 1..={MAX_U_SIZE}",
            config.u_size
        )));
    }
    if config.restarts == 0 {
        return Err(Error::GuardExceeded(
            "at least one restart is required".into(),
        ));
    }

    let problem = Problem::new(&sf, epsilon, config.u_size);
    let mut starts: Vec<Start> = Vec::new();
    if let Some(w) = warm {
        if w.inputs() != [s_axis.clone(), f_axis.clone()] || w.output().len() != config.u_size {
            return Err(Error::InvalidChannel(
                "warm start must map (S, F) to u_size symbols".into(),
            ));
        }
        starts.push(Start::Given(w.rows().concat()));
    }
    if config.seed_with_mechanism && starts.len() < config.restarts {
        let m = efrl_mechanism(&sf, epsilon)?;
        starts.push(Start::Given(
            problem.fit_columns(&m.channel.rows().concat(), m.channel.output().len()),
        ));
    }
    while starts.len() < config.restarts {
        starts.push(Start::Random);
    }

    let outcomes: Vec<(f64, Vec<f64>)> = starts
        .par_iter()
        .enumerate()
        .map(|(idx, start)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(idx as u64);
            let q = match start {
                Start::Given(q) => q.clone(),
                Start::Random => problem.random_channel(&mut rng),
            };
            problem.search(q, config)
        })
        .collect();

    // Highest value wins; ties go to the lowest restart index.
    let (best_restart, (_, q)) = outcomes
        .into_iter()
        .enumerate()
        .fold(
            None::<(usize, (f64, Vec<f64>))>,
            |best, (i, cand)| match best {
                Some((bi, b)) if b.0 >= cand.0 => Some((bi, b)),
                _ => Some((i, cand)),
            },
        )
        .ok_or_else(|| Error::Internal("no restart produced a channel".into()))?;

    let out_axis = Axis::new(U, (0..config.u_size).map(|i| format!("u{i}")).collect());
    let rows: Vec<Vec<f64>> = q.chunks(config.u_size).map(normalize_row).collect();
    let channel = Channel::new(vec![s_axis, f_axis], out_axis, rows)?;
    let ext = sf.extend_with_channel(&channel)?;
    let leakage = ext.mutual_information(&[U], &[S])?;
    let value = ext.mutual_information(&[U], &[F])?;
    if leakage > epsilon + SANDWICH_UPPER_SLACK {
        return Err(Error::Internal(format!(
            "oracle returned an infeasible channel: leakage {leakage} > {epsilon}"
        )));
    }
    Ok(OracleResult {
        value,
        channel,
        leakage,
        epsilon,
        u_size: config.u_size,
        restarts_used: config.restarts,
        best_restart,
        seed: config.seed,
    })
}

fn normalize_row(row: &[f64]) -> Vec<f64> {
    let total: f64 = row.iter().sum();
    row.iter().map(|v| v / total).collect()
}

enum Start {
    Given(Vec<f64>),
    Random,
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Flattened problem data: inputs `x = s·|F| + f`, outputs `u`.
struct Problem {
    ns: usize,
    nf: usize,
    nu: usize,
    p_x: Vec<f64>,
    /// Inputs with positive mass; the other rows never influence the objective.
    active: Vec<usize>,
    const_f: f64,
    const_s: f64,
    epsilon: f64,
}

/// Marginals `P(F, U)`, `P(S, U)`, `P(U)` of the current channel.
#[derive(Clone)]
struct Marginals {
    fu: Vec<f64>,
    su: Vec<f64>,
    u: Vec<f64>,
}

impl Problem {
    fn new(sf: &JointTable, epsilon: f64, nu: usize) -> Self {
        let ns = sf.axis(S).map(Axis::len).unwrap_or(1);
        let nf = sf.axis(F).map(Axis::len).unwrap_or(1);
        let m = sf.pair_matrix(S, F).expect("axes checked by caller");
        let p_x: Vec<f64> = m.concat();
        let active = (0..p_x.len()).filter(|&x| p_x[x] > 0.0).collect();
        let p_s: Vec<f64> = m.iter().map(|r| r.iter().sum()).collect();
        let p_f: Vec<f64> = (0..nf).map(|f| m.iter().map(|r| r[f]).sum()).collect();
        Self {
            ns,
            nf,
            nu,
            p_x,
            active,
            const_f: p_f.iter().map(|&v| xlogx(v)).sum(),
            const_s: p_s.iter().map(|&v| xlogx(v)).sum(),
            epsilon,
        }
    }

    fn random_channel(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut q = Vec::with_capacity(self.p_x.len() * self.nu);
        for _ in 0..self.p_x.len() {
            let w: Vec<f64> = (0..self.nu)
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            q.extend(normalize_row(&w));
        }
        q
    }

    /// Pads with empty outputs, or merges outputs greedily (smallest loss of
    /// `I(U; F)` first) until `nu` remain. Merging never raises the leakage.
    fn fit_columns(&self, q: &[f64], width: usize) -> Vec<f64> {
        let nx = self.p_x.len();
        let mut cols: Vec<Vec<f64>> = (0..width)
            .map(|u| (0..nx).map(|x| q[x * width + u]).collect())
            .collect();
        while cols.len() > self.nu {
            let fu: Vec<Vec<f64>> = cols.iter().map(|c| self.semantic_profile(c)).collect();
            let term = |v: &[f64]| -> f64 {
                let pu: f64 = v.iter().sum();
                v.iter().map(|&p| xlogx(p)).sum::<f64>() - xlogx(pu)
            };
            let mut best = (0, 1, f64::INFINITY);
            for a in 0..cols.len() {
                for b in a + 1..cols.len() {
                    let merged: Vec<f64> = fu[a].iter().zip(&fu[b]).map(|(x, y)| x + y).collect();
                    let loss = term(&fu[a]) + term(&fu[b]) - term(&merged);
                    if loss < best.2 {
                        best = (a, b, loss);
                    }
                }
            }
            let (a, b, _) = best;
            let col_b = cols.remove(b);
            for (x, v) in cols[a].iter_mut().zip(col_b) {
                *x += v;
            }
        }
        while cols.len() < self.nu {
            cols.push(vec![0.0; nx]);
        }
        let mut out = vec![0.0; nx * self.nu];
        for (u, col) in cols.iter().enumerate() {
            for x in 0..nx {
                out[x * self.nu + u] = col[x];
            }
        }
        out
    }

    /// `P(F = f, U = u)` for one output column.
    fn semantic_profile(&self, col: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.nf];
        for (x, &q) in col.iter().enumerate() {
            v[x % self.nf] += self.p_x[x] * q;
        }
        v
    }

    fn marginals(&self, q: &[f64]) -> Marginals {
        let nu = self.nu;
        let mut m = Marginals {
            fu: vec![0.0; self.nf * nu],
            su: vec![0.0; self.ns * nu],
            u: vec![0.0; nu],
        };
        for &x in &self.active {
            let (s, f) = (x / self.nf, x % self.nf);
            for u in 0..nu {
                let v = self.p_x[x] * q[x * nu + u];
                m.fu[f * nu + u] += v;
                m.su[s * nu + u] += v;
                m.u[u] += v;
            }
        }
        m
    }

    /// `(I(U;F), I(U;S))` from marginals.
    fn informations(&self, m: &Marginals) -> (f64, f64) {
        let a_f: f64 = m.fu.iter().map(|&v| xlogx(v)).sum();
        let a_s: f64 = m.su.iter().map(|&v| xlogx(v)).sum();
        let b: f64 = m.u.iter().map(|&v| xlogx(v)).sum();
        (a_f - b - self.const_f, a_s - b - self.const_s)
    }

    fn feasible(&self, info: (f64, f64)) -> bool {
        info.1 <= self.epsilon + FEASIBILITY_TOLERANCE
    }

    fn penalized(&self, info: (f64, f64), lambda: f64) -> f64 {
        info.0 - lambda * (info.1 - self.epsilon).max(0.0)
    }

    /// Change of `(I(U;F), I(U;S))` when mass `mass` of input `x` moves from output `a` to `b`.
    fn move_delta(&self, m: &Marginals, x: usize, a: usize, b: usize, mass: f64) -> (f64, f64) {
        let nu = self.nu;
        let (s, f) = (x / self.nf, x % self.nf);
        let shift = |from: f64, to: f64| {
            xlogx((from - mass).max(0.0)) - xlogx(from) + xlogx(to + mass) - xlogx(to)
        };
        let d_f = shift(m.fu[f * nu + a], m.fu[f * nu + b]);
        let d_s = shift(m.su[s * nu + a], m.su[s * nu + b]);
        let d_u = shift(m.u[a], m.u[b]);
        (d_f - d_u, d_s - d_u)
    }

    fn apply_move(&self, q: &mut [f64], m: &mut Marginals, x: usize, a: usize, b: usize, d: f64) {
        let nu = self.nu;
        let (s, f) = (x / self.nf, x % self.nf);
        let mass = self.p_x[x] * d;
        q[x * nu + a] = (q[x * nu + a] - d).max(0.0);
        q[x * nu + b] += d;
        for (arr, i) in [(&mut m.fu, f * nu), (&mut m.su, s * nu)] {
            arr[i + a] = (arr[i + a] - mass).max(0.0);
            arr[i + b] += mass;
        }
        m.u[a] = (m.u[a] - mass).max(0.0);
        m.u[b] += mass;
    }

    /// Channel `t·q + (1-t)·D_s` with `t = 1/Σ_u max_s P(u|s)` and `D_s`
    /// chosen so that `P(u|s)` no longer depends on `s`. Keeps part of `q`
    /// while leaking nothing.
    fn equalized(&self, q: &[f64], m: &Marginals) -> Vec<f64> {
        let nu = self.nu;
        let p_s: Vec<f64> = (0..self.ns)
            .map(|s| m.su[s * nu..(s + 1) * nu].iter().sum())
            .collect();
        let live: Vec<usize> = (0..self.ns).filter(|&s| p_s[s] > 0.0).collect();
        let cond = |s: usize, u: usize| m.su[s * nu + u] / p_s[s];
        let top: Vec<f64> = (0..nu)
            .map(|u| live.iter().map(|&s| cond(s, u)).fold(0.0, f64::max))
            .collect();
        let total: f64 = top.iter().sum();
        let t = 1.0 / total;
        if t >= 1.0 - 1e-15 || t.is_nan() {
            return q.to_vec();
        }
        let mut out = q.to_vec();
        for &x in &self.active {
            let s = x / self.nf;
            for u in 0..nu {
                let d = t * (top[u] - cond(s, u)) / (1.0 - t);
                out[x * nu + u] = t * q[x * nu + u] + (1.0 - t) * d.max(0.0);
            }
            let row = &mut out[x * nu..(x + 1) * nu];
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= sum);
        }
        out
    }

    /// Largest mixing weight `t` such that `t·q + (1-t)·anchor` is feasible,
    /// over two leak-free anchors: the constant channel `P(U)` and the
    /// equalized channel. Leakage is convex along each segment.
    fn project(&self, q: &[f64]) -> Vec<f64> {
        let m = self.marginals(q);
        if self.feasible(self.informations(&m)) {
            return q.to_vec();
        }
        let constant: Vec<f64> = q
            .chunks(self.nu)
            .flat_map(|_| m.u.iter().copied())
            .collect();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for anchor in [constant, self.equalized(q, &m)] {
            if !self.feasible(self.informations(&self.marginals(&anchor))) {
                continue;
            }
            let mix = |t: f64| -> Vec<f64> {
                q.iter()
                    .zip(&anchor)
                    .map(|(&a, &b)| t * a + (1.0 - t) * b)
                    .collect()
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if self.feasible(self.informations(&self.marginals(&mix(mid)))) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let cand = mix(lo);
            let value = self.informations(&self.marginals(&cand)).0;
            if best.as_ref().is_none_or(|(v, _)| value > *v) {
                best = Some((value, cand));
            }
        }
        best.map(|(_, c)| c).unwrap_or_else(|| {
            q.chunks(self.nu)
                .flat_map(|_| m.u.iter().copied())
                .collect()
        })
    }

    /// Best feasible `(I(U;F), channel)` reached from `q`.
    fn search(&self, mut q: Vec<f64>, config: &OracleConfig) -> (f64, Vec<f64>) {
        let mut best_q = self.project(&q);
        let mut best = self.informations(&self.marginals(&best_q)).0;
        let mut sweeps = 0;

        for &lambda in &PENALTY_SCHEDULE {
            let mut step = 0.5;
            while step >= MIN_STEP && sweeps < config.max_sweeps {
                sweeps += 1;
                let mut m = self.marginals(&q);
                let start_obj = self.penalized(self.informations(&m), lambda);
                let mut info = self.informations(&m);
                for &x in &self.active {
                    for a in 0..self.nu {
                        for b in 0..self.nu {
                            let avail = q[x * self.nu + a];
                            if a == b || avail <= 0.0 {
                                continue;
                            }
                            let base = self.penalized(info, lambda);
                            let mut chosen: Option<(f64, f64, (f64, f64))> = None;
                            let partial = (step < avail).then_some(step);
                            for d in std::iter::once(avail).chain(partial) {
                                let (df, ds) = self.move_delta(&m, x, a, b, self.p_x[x] * d);
                                let cand = (info.0 + df, info.1 + ds);
                                let gain = self.penalized(cand, lambda) - base;
                                if gain > 1e-15 && chosen.is_none_or(|c| gain > c.0) {
                                    chosen = Some((gain, d, cand));
                                }
                            }
                            if let Some((_, d, cand)) = chosen {
                                self.apply_move(&mut q, &mut m, x, a, b, d);
                                info = cand;
                            }
                        }
                    }
                }
                let m = self.marginals(&q);
                let info = self.informations(&m);
                if self.feasible(info) && info.0 > best {
                    best = info.0;
                    best_q = q.clone();
                }
                let gain = self.penalized(info, lambda) - start_obj;
                if gain < config.improvement_tolerance {
                    step *= 0.5;
                }
            }
            let p = self.project(&q);
            let v = self.informations(&self.marginals(&p)).0;
            if v > best {
                best = v;
                best_q = p;
            }
        }
        (best, best_q)
    }
}

/// One row of a sandwich check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub epsilon: f64,
    /// `max(L_h1, [L_h2]^+, 0)`.
    pub lower: f64,
    pub estimate: f64,
    /// `H(F|S) + ε`.
    pub upper: f64,
    /// `estimate - lower`; must be at least `-1e-6`.
    pub lower_margin: f64,
    /// `upper - estimate`; must be at least `-1e-9`.
    pub upper_margin: f64,
    pub tight: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub rows: Vec<SandwichRow>,
}

/// Checks one oracle result against the closed-form bounds.
pub fn sandwich_row(bounds: &TheoremBounds, result: &OracleResult) -> Result<SandwichRow> {
    let lower = bounds.best_lower();
    let row = SandwichRow {
        epsilon: bounds.epsilon,
        lower,
        estimate: result.value,
        upper: bounds.upper_h_eps,
        lower_margin: result.value - lower,
        upper_margin: bounds.upper_h_eps - result.value,
        tight: bounds.tight,
    };
    if row.lower_margin < -SANDWICH_LOWER_SLACK || row.upper_margin < -SANDWICH_UPPER_SLACK {
        return Err(Error::SandwichViolation {
            epsilon: row.epsilon,
            lower_margin: row.lower_margin,
            upper_margin: row.upper_margin,
        });
    }
    Ok(row)
}

/// Runs the oracle at every `ε` and checks `lower - 1e-6 <= estimate <= upper + 1e-9`.
pub fn verify_sandwich(
    joint: &JointTable,
    epsilons: &[f64],
    u_size: usize,
    restarts: usize,
    seed: u64,
) -> Result<SandwichReport> {
    let rows = epsilons
        .iter()
        .map(|&eps| {
            let bounds = theorem1_bounds(joint, eps)?;
            let result = estimate_h_eps(joint, eps, u_size, restarts, seed)?;
            sandwich_row(&bounds, &result)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SandwichReport { rows })
}
