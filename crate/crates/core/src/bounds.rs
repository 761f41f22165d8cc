//! Closed-form bounds on the privacy-utility trade-off
//!
//! `h_ε = sup { I(F; U) : P(U | S, F), I(U; S) <= ε }`
//!
//! and on the utility `I(U; H)` the user gets for its task.

use serde::{Deserialize, Serialize};

use crate::axes::{F, H, S};
use crate::probcore::JointTable;
use crate::{Error, Result};

/// Conditional entropies below this are treated as zero when detecting
/// deterministic relationships.
pub const DETERMINISM_TOLERANCE: f64 = 1e-10;

/// Additive constant of the strong-representation penalty, in nats.
const SFRL_CONSTANT: f64 = 4.0;

/// Bounds on `h_ε` for one `(S, F)` joint and leakage level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremBounds {
    pub epsilon: f64,
    /// `ε / H(S)`; absent when `H(S) = 0`.
    pub alpha: Option<f64>,
    /// `H(F|S) - H(S|F) + ε`.
    #[serde(rename = "L_h1")]
    pub l_h1: f64,
    /// `H(F|S) - α H(S|F) + ε - (1 - α)(ln(I(S;F) + 1) + 4)`; absent when `H(S) = 0`.
    #[serde(rename = "L_h2")]
    pub l_h2: Option<f64>,
    #[serde(rename = "L_h2_clamped")]
    pub l_h2_clamped: Option<f64>,
    /// `H(F|S) + ε`.
    pub upper_h_eps: f64,
    /// The upper bound is attained (deterministic special cases only).
    pub tight: bool,
    pub degenerate_private: bool,
    pub h_s: f64,
    pub h_f_given_s: f64,
    pub h_s_given_f: f64,
    pub i_sf: f64,
}

impl TheoremBounds {
    /// `max(L_h1, [L_h2]^+, 0)`, the best certified lower bound on `h_ε`.
    pub fn best_lower(&self) -> f64 {
        self.l_h1.max(self.l_h2_clamped.unwrap_or(0.0)).max(0.0)
    }
}

/// Entropic summary of an `(S, F)` joint; independent of `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivateSemanticProfile {
    pub h_s: f64,
    pub h_f: f64,
    pub h_f_given_s: f64,
    pub h_s_given_f: f64,
    pub i_sf: f64,
}

impl PrivateSemanticProfile {
    pub fn of(joint: &JointTable) -> Result<Self> {
        let sf = joint.marginalize(&[S, F])?;
        Ok(Self {
            h_s: sf.entropy_of(&[S])?,
            h_f: sf.entropy_of(&[F])?,
            h_f_given_s: sf.conditional_entropy(&[F], &[S])?,
            h_s_given_f: sf.conditional_entropy(&[S], &[F])?,
            i_sf: sf.mutual_information(&[S], &[F])?,
        })
    }

    pub fn bounds(&self, epsilon: f64) -> Result<TheoremBounds> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::OutOfRange {
                name: "epsilon",
                value: epsilon,
                range: "[0, inf)".into(),
            });
        }
        let p = self;
        let l_h1 = p.h_f_given_s - p.h_s_given_f + epsilon;
        let upper_h_eps = p.h_f_given_s + epsilon;
        let degenerate = p.h_s <= 0.0;
        let (alpha, l_h2) = if degenerate {
            (None, None)
        } else {
            let alpha = epsilon / p.h_s;
            let penalty = (p.i_sf + 1.0).ln() + SFRL_CONSTANT;
            let l_h2 = p.h_f_given_s - alpha * p.h_s_given_f + epsilon - (1.0 - alpha) * penalty;
            (Some(alpha), Some(l_h2))
        };
        // S = g(F) pins h_ε to the upper bound for ε <= H(S); F = g(S) pins it
        // to ε for ε <= H(F).
        let tol = DETERMINISM_TOLERANCE;
        let tight = (p.h_s_given_f <= tol && epsilon <= p.h_s + tol)
            || (p.h_f_given_s <= tol && epsilon <= p.h_f + tol);
        Ok(TheoremBounds {
            epsilon,
            alpha,
            l_h1,
            l_h2,
            l_h2_clamped: l_h2.map(|v| v.max(0.0)),
            upper_h_eps,
            tight,
            degenerate_private: degenerate,
            h_s: p.h_s,
            h_f_given_s: p.h_f_given_s,
            h_s_given_f: p.h_s_given_f,
            i_sf: p.i_sf,
        })
    }
}

/// Lower and upper bounds on `h_ε` for the `(S, F)` marginal of `joint`.
pub fn theorem1_bounds(joint: &JointTable, epsilon: f64) -> Result<TheoremBounds> {
    PrivateSemanticProfile::of(joint)?.bounds(epsilon)
}

/// Bounds on `h_ε` together with the induced bounds on the task utility `I(U; H)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    #[serde(flatten)]
    pub theorem: TheoremBounds,
    /// `L_h1 - H(F|H)`.
    #[serde(rename = "util_L1")]
    pub util_l1: f64,
    /// `L_h2 - H(F|H)`.
    #[serde(rename = "util_L2")]
    pub util_l2: Option<f64>,
    #[serde(rename = "util_L2_clamped")]
    pub util_l2_clamped: Option<f64>,
    /// `h_ε estimate - H(F|H)`, when an estimate was supplied.
    #[serde(rename = "util_L3")]
    pub util_l3: Option<f64>,
    /// `H(F|S) + ε + H(H|F)`.
    pub util_upper: f64,
    /// `H(F|H) + H(H|F)`, the distance between `util_upper` and `util_L1` when `H(S|F) = 0`.
    pub gap: f64,
    pub h_f_given_h: f64,
    pub h_h_given_f: f64,
    pub h_h: f64,
    pub corollary2_upper: Option<f64>,
}

impl BoundsReport {
    /// Fills in the semantic-agnostic utility bound for the given constraints.
    pub fn with_corollary2(mut self, constraints: &SemanticConstraints) -> Self {
        self.corollary2_upper = Some(corollary2_upper(
            constraints,
            self.h_h,
            self.theorem.epsilon,
        ));
        self
    }
}

/// Task-side entropies of an `(F, H)` joint; independent of `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskProfile {
    pub h_f_given_h: f64,
    pub h_h_given_f: f64,
    pub h_h: f64,
}

impl TaskProfile {
    pub fn of(joint: &JointTable) -> Result<Self> {
        let fh = joint.marginalize(&[F, H])?;
        Ok(Self {
            h_f_given_h: fh.conditional_entropy(&[F], &[H])?,
            h_h_given_f: fh.conditional_entropy(&[H], &[F])?,
            h_h: fh.entropy_of(&[H])?,
        })
    }

    pub fn gap(&self) -> f64 {
        self.h_f_given_h + self.h_h_given_f
    }

    pub fn report(&self, theorem: TheoremBounds, h_eps_estimate: Option<f64>) -> BoundsReport {
        let util_l2 = theorem.l_h2.map(|v| v - self.h_f_given_h);
        BoundsReport {
            util_l1: theorem.l_h1 - self.h_f_given_h,
            util_l2,
            util_l2_clamped: util_l2.map(|v| v.max(0.0)),
            util_l3: h_eps_estimate.map(|v| v - self.h_f_given_h),
            util_upper: theorem.upper_h_eps + self.h_h_given_f,
            gap: self.gap(),
            h_f_given_h: self.h_f_given_h,
            h_h_given_f: self.h_h_given_f,
            h_h: self.h_h,
            corollary2_upper: None,
            theorem,
        }
    }
}

/// Full report for a joint over `(S, F, H)`.
pub fn utility_bounds(
    joint3: &JointTable,
    epsilon: f64,
    h_eps_estimate: Option<f64>,
) -> Result<BoundsReport> {
    let theorem = theorem1_bounds(joint3, epsilon)?;
    Ok(TaskProfile::of(joint3)?.report(theorem, h_eps_estimate))
}

/// Design constraints on the semantic: `γ1 <= I(F;H) <= γ2 < H(H)` and a
/// compression budget `γ3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemanticConstraints {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

impl SemanticConstraints {
    pub fn new(gamma1: f64, gamma2: f64, gamma3: f64) -> Result<Self> {
        if ![gamma1, gamma2, gamma3].iter().all(|g| g.is_finite()) {
            return Err(Error::OutOfRange {
                name: "gamma",
                value: f64::NAN,
                range: "finite reals".into(),
            });
        }
        if gamma1 > gamma2 {
            return Err(Error::OutOfRange {
                name: "gamma1",
                value: gamma1,
                range: format!("(-inf, gamma2 = {gamma2}]"),
            });
        }
        Ok(Self {
            gamma1,
            gamma2,
            gamma3,
        })
    }
}

/// `ε + γ2 - γ1 + H(H)`: a utility bound that does not depend on the semantic.
pub fn corollary2_upper(constraints: &SemanticConstraints, h_h: f64, epsilon: f64) -> f64 {
    epsilon + constraints.gamma2 - constraints.gamma1 + h_h
}

/// Outcome of checking a semantic against its design constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub mutual_information: f64,
    pub task_entropy: f64,
    pub semantic_entropy: f64,
    /// `γ1 <= I(F;H)`.
    pub lower_ok: bool,
    /// `I(F;H) <= γ2`.
    pub upper_ok: bool,
    /// `γ2 < H(H)`.
    pub gamma2_below_task_entropy: bool,
    /// `H(F) <= γ3`.
    pub compression_ok: bool,
    /// How the compression budget was read.
    pub compression_measure: String,
}

impl ConstraintReport {
    pub fn all_ok(&self) -> bool {
        self.lower_ok && self.upper_ok && self.gamma2_below_task_entropy && self.compression_ok
    }
}

pub fn check_semantic_constraints(
    joint: &JointTable,
    c: &SemanticConstraints,
) -> Result<ConstraintReport> {
    let fh = joint.marginalize(&[F, H])?;
    let i = fh.mutual_information(&[F], &[H])?;
    let h_h = fh.entropy_of(&[H])?;
    let h_f = fh.entropy_of(&[F])?;
    Ok(ConstraintReport {
        mutual_information: i,
        task_entropy: h_h,
        semantic_entropy: h_f,
        lower_ok: c.gamma1 <= i,
        upper_ok: i <= c.gamma2,
        gamma2_below_task_entropy: c.gamma2 < h_h,
        compression_ok: h_f <= c.gamma3,
        compression_measure: "entropy H(F) of the semantic, in nats".into(),
    })
}
