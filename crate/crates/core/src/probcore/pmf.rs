use serde::{Deserialize, Serialize};

use super::{check_masses, entropy_of_masses};
use crate::{Error, Result};

/// A probability mass function over a labelled finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf")]
pub struct Pmf {
    alphabet: Vec<String>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPmf {
    alphabet: Vec<String>,
    probs: Vec<f64>,
}

impl TryFrom<RawPmf> for Pmf {
    type Error = Error;

    fn try_from(raw: RawPmf) -> Result<Self> {
        Pmf::new(raw.alphabet, raw.probs)
    }
}

impl Pmf {
    pub fn new(alphabet: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if alphabet.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} labels but {} probabilities",
                alphabet.len(),
                probs.len()
            )));
        }
        if alphabet.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        ensure_unique("pmf", &alphabet)?;
        check_masses("pmf", &probs)?;
        Ok(Self { alphabet, probs })
    }

    /// A pmf over the labels `0, 1, …, n-1`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let alphabet = (0..probs.len()).map(|i| i.to_string()).collect();
        Self::new(alphabet, probs)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob_of(&self, label: &str) -> Option<f64> {
        self.alphabet
            .iter()
            .position(|l| l == label)
            .map(|i| self.probs[i])
    }

    pub fn entropy(&self) -> f64 {
        entropy_of_masses(&self.probs)
    }
}

/// Shannon entropy of `p` in nats.
pub fn entropy(p: &Pmf) -> f64 {
    p.entropy()
}

pub(crate) fn ensure_unique(what: &str, labels: &[String]) -> Result<()> {
    let mut seen = std::collections::HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::InvalidDistribution(format!(
                "{what}: duplicate label `{l}`"
            )));
        }
    }
    Ok(())
}
