//! Exact information measures over finite joint distributions.
//!
//! Everything here works in nats. Zero-mass cells contribute nothing
//! (`0 ln 0 = 0`), so deterministic joints are handled without special cases.

mod channel;
mod joint;
mod pmf;
pub mod random;

pub use channel::Channel;
pub use joint::{Axis, JointTable};
pub use pmf::{entropy, Pmf};

/// Allowed deviation of a table's total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Negative round-off below this magnitude is reported as zero information.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

/// Tolerance used when asserting information identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

/// `-Σ p ln p` over a slice of masses.
pub(crate) fn entropy_of_masses(masses: &[f64]) -> f64 {
    let h: f64 = masses
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    h.max(0.0)
}

pub(crate) fn check_masses(what: &str, masses: &[f64]) -> crate::Result<()> {
    if let Some(bad) = masses.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(crate::Error::InvalidDistribution(format!(
            "{what}: mass {bad} is negative or not finite"
        )));
    }
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(crate::Error::InvalidDistribution(format!(
            "{what}: total mass {total} is not 1"
        )));
    }
    Ok(())
}

pub(crate) fn clamp_information(value: f64) -> f64 {
    if value < 0.0 {
        debug_assert!(
            value >= -CLAMP_TOLERANCE,
            "information measure went negative beyond round-off: {value}"
        );
        0.0
    } else {
        value
    }
}
