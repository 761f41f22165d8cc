use serde::{Deserialize, Serialize};

use super::pmf::ensure_unique;
use super::{check_masses, clamp_information, entropy_of_masses, Channel, Pmf};
use crate::{Error, Result};

/// A named random variable with its ordered alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub alphabet: Vec<String>,
}

impl Axis {
    pub fn new(name: impl Into<String>, alphabet: Vec<String>) -> Self {
        Self {
            name: name.into(),
            alphabet,
        }
    }

    /// An axis whose symbols are `0, 1, …, size-1`.
    pub fn indexed(name: impl Into<String>, size: usize) -> Self {
        Self::new(name, (0..size).map(|i| i.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.alphabet.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphabet.is_empty()
    }
}

/// Dense joint distribution over named axes, stored row-major
/// (the last axis varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJoint")]
pub struct JointTable {
    axes: Vec<Axis>,
    cells: Vec<f64>,
}

#[derive(Deserialize)]
struct RawJoint {
    axes: Vec<Axis>,
    cells: Vec<f64>,
}

impl TryFrom<RawJoint> for JointTable {
    type Error = Error;

    fn try_from(raw: RawJoint) -> Result<Self> {
        JointTable::new(raw.axes, raw.cells)
    }
}

impl JointTable {
    pub fn new(axes: Vec<Axis>, cells: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidDistribution("joint has no axes".into()));
        }
        let names: Vec<String> = axes.iter().map(|a| a.name.clone()).collect();
        ensure_unique("axis names", &names)?;
        for axis in &axes {
            if axis.is_empty() {
                return Err(Error::InvalidDistribution(format!(
                    "axis `{}` has an empty alphabet",
                    axis.name
                )));
            }
            ensure_unique(&axis.name, &axis.alphabet)?;
        }
        let size: usize = axes.iter().map(Axis::len).product();
        if size != cells.len() {
            return Err(Error::InvalidDistribution(format!(
                "axes describe {size} cells but {} were given",
                cells.len()
            )));
        }
        check_masses("joint", &cells)?;
        Ok(Self { axes, cells })
    }

    /// Two-axis table from a row-per-symbol matrix of the first axis.
    pub fn from_matrix(first: Axis, second: Axis, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != first.len() || rows.iter().any(|r| r.len() != second.len()) {
            return Err(Error::InvalidDistribution(format!(
                "matrix shape does not match {}x{}",
                first.len(),
                second.len()
            )));
        }
        let cells = rows.iter().flatten().copied().collect();
        Self::new(vec![first, second], cells)
    }

    /// Normalizes non-negative counts into a table. Probabilities are `count / total`.
    pub fn from_counts(axes: Vec<Axis>, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("all counts are zero".into()));
        }
        let total = total as f64;
        Self::new(axes, counts.iter().map(|&c| c as f64 / total).collect())
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::len).collect()
    }

    pub fn has_axis(&self, name: &str) -> bool {
        self.axes.iter().any(|a| a.name == name)
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    pub fn axis(&self, name: &str) -> Result<&Axis> {
        Ok(&self.axes[self.axis_index(name)?])
    }

    /// Probability of one cell addressed by per-axis symbol indices.
    pub fn get(&self, coords: &[usize]) -> f64 {
        let mut flat = 0;
        for (c, axis) in coords.iter().zip(&self.axes) {
            flat = flat * axis.len() + c;
        }
        self.cells[flat]
    }

    pub fn rename_axis(&self, from: &str, to: &str) -> Result<Self> {
        let idx = self.axis_index(from)?;
        if from != to && self.has_axis(to) {
            return Err(Error::AxisOverlap(to.to_string()));
        }
        let mut out = self.clone();
        out.axes[idx].name = to.to_string();
        Ok(out)
    }

    /// Sums out every axis not in `keep`. Surviving axes keep their original order.
    pub fn marginalize(&self, keep: &[&str]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidDistribution(
                "marginalization must keep at least one axis".into(),
            ));
        }
        let mut idx = self.indices(keep)?;
        idx.sort_unstable();
        idx.dedup();
        let (_, cells) = self.project(&idx);
        let axes = idx.iter().map(|&i| self.axes[i].clone()).collect();
        Ok(Self { axes, cells })
    }

    /// Marginal pmf of a single axis.
    pub fn pmf(&self, name: &str) -> Result<Pmf> {
        let i = self.axis_index(name)?;
        let (_, cells) = self.project(&[i]);
        Pmf::new(self.axes[i].alphabet.clone(), cells)
    }

    /// `P(a, b)` as one row per symbol of `a`.
    pub fn pair_matrix(&self, a: &str, b: &str) -> Result<Vec<Vec<f64>>> {
        let idx = self.disjoint_indices(&[&[a], &[b]])?;
        let nb = self.axes[idx[1]].len();
        let (_, cells) = self.project(&idx);
        Ok(cells.chunks(nb).map(<[f64]>::to_vec).collect())
    }

    /// Joint entropy of the named axes.
    pub fn entropy_of(&self, names: &[&str]) -> Result<f64> {
        let idx = self.disjoint_indices(&[names])?;
        if idx.is_empty() {
            return Ok(0.0);
        }
        let (_, cells) = self.project(&idx);
        Ok(entropy_of_masses(&cells))
    }

    /// `H(target | given)`, evaluated as `-Σ p(t,g) ln(p(t,g)/p(g))`.
    pub fn conditional_entropy(&self, target: &[&str], given: &[&str]) -> Result<f64> {
        let groups = self.disjoint_groups(&[target, given])?;
        let nt = self.group_size(&groups[0]);
        let ng = self.group_size(&groups[1]);
        let order: Vec<usize> = groups.concat();
        let (_, p) = self.project(&order);
        let mut pg = vec![0.0; ng];
        for (i, &v) in p.iter().enumerate() {
            pg[i % ng] += v;
        }
        let mut h = 0.0;
        for t in 0..nt {
            for g in 0..ng {
                let v = p[t * ng + g];
                if v > 0.0 {
                    h -= v * (v / pg[g]).ln();
                }
            }
        }
        Ok(h.max(0.0))
    }

    /// `I(a; b)` in nats.
    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        self.conditional_mutual_information(a, b, &[])
    }

    /// `I(a; b | c)` in nats, evaluated as
    /// `Σ p(a,b,c) ln(p(a,b,c) p(c) / (p(a,c) p(b,c)))`.
    pub fn conditional_mutual_information(
        &self,
        a: &[&str],
        b: &[&str],
        c: &[&str],
    ) -> Result<f64> {
        let groups = self.disjoint_groups(&[a, b, c])?;
        if groups[0].is_empty() || groups[1].is_empty() {
            return Err(Error::InvalidDistribution(
                "mutual information needs two non-empty axis sets".into(),
            ));
        }
        let na = self.group_size(&groups[0]);
        let nb = self.group_size(&groups[1]);
        let nc = self.group_size(&groups[2]);
        let order: Vec<usize> = groups.concat();
        let (_, p) = self.project(&order);

        let mut pac = vec![0.0; na * nc];
        let mut pbc = vec![0.0; nb * nc];
        let mut pc = vec![0.0; nc];
        for ia in 0..na {
            for ib in 0..nb {
                for ic in 0..nc {
                    let v = p[(ia * nb + ib) * nc + ic];
                    pac[ia * nc + ic] += v;
                    pbc[ib * nc + ic] += v;
                    pc[ic] += v;
                }
            }
        }
        let mut info = 0.0;
        for ia in 0..na {
            for ib in 0..nb {
                for ic in 0..nc {
                    let v = p[(ia * nb + ib) * nc + ic];
                    if v > 0.0 {
                        info += v * ((v * pc[ic]) / (pac[ia * nc + ic] * pbc[ib * nc + ic])).ln();
                    }
                }
            }
        }
        Ok(clamp_information(info))
    }

    /// Appends the channel's output axis, with `P(x, u) = P(x) · W(u | inputs(x))`.
    pub fn extend_with_channel(&self, channel: &Channel) -> Result<Self> {
        let out = channel.output();
        if self.has_axis(&out.name) {
            return Err(Error::AxisOverlap(out.name.clone()));
        }
        let mut input_idx = Vec::with_capacity(channel.inputs().len());
        for input in channel.inputs() {
            let i = self.axis_index(&input.name)?;
            if self.axes[i].alphabet != input.alphabet {
                return Err(Error::AlphabetMismatch {
                    axis: input.name.clone(),
                    detail: format!(
                        "table has {:?}, channel expects {:?}",
                        self.axes[i].alphabet, input.alphabet
                    ),
                });
            }
            input_idx.push(i);
        }
        let row_of_cell = self.index_map(&input_idx);
        let nu = out.len();
        let mut cells = Vec::with_capacity(self.cells.len() * nu);
        for (&mass, &row) in self.cells.iter().zip(&row_of_cell) {
            let w = channel.row(row);
            cells.extend(w.iter().map(|&q| mass * q));
        }
        let mut axes = self.axes.clone();
        axes.push(out.clone());
        Ok(Self { axes, cells })
    }

    /// Axis indices for the given names, in the given order.
    fn indices(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.axis_index(n)).collect()
    }

    fn disjoint_indices(&self, sets: &[&[&str]]) -> Result<Vec<usize>> {
        Ok(self.disjoint_groups(sets)?.concat())
    }

    fn disjoint_groups(&self, sets: &[&[&str]]) -> Result<Vec<Vec<usize>>> {
        let mut seen = vec![false; self.axes.len()];
        let mut groups = Vec::with_capacity(sets.len());
        for set in sets {
            let idx = self.indices(set)?;
            for &i in &idx {
                if seen[i] {
                    return Err(Error::AxisOverlap(self.axes[i].name.clone()));
                }
                seen[i] = true;
            }
            groups.push(idx);
        }
        Ok(groups)
    }

    fn group_size(&self, idx: &[usize]) -> usize {
        idx.iter().map(|&i| self.axes[i].len()).product()
    }

    /// For every cell, the flat index of its projection onto `idx` (in that order).
    fn index_map(&self, idx: &[usize]) -> Vec<usize> {
        let shape = self.shape();
        let mut coords = vec![0usize; shape.len()];
        let mut map = Vec::with_capacity(self.cells.len());
        for _ in 0..self.cells.len() {
            let mut flat = 0;
            for &i in idx {
                flat = flat * shape[i] + coords[i];
            }
            map.push(flat);
            for d in (0..shape.len()).rev() {
                coords[d] += 1;
                if coords[d] < shape[d] {
                    break;
                }
                coords[d] = 0;
            }
        }
        map
    }

    /// Marginal masses over `idx`, laid out row-major in that order.
    fn project(&self, idx: &[usize]) -> (Vec<usize>, Vec<f64>) {
        let dims: Vec<usize> = idx.iter().map(|&i| self.axes[i].len()).collect();
        let mut out = vec![0.0; dims.iter().product()];
        for (&flat, &mass) in self.index_map(idx).iter().zip(&self.cells) {
            out[flat] += mass;
        }
        (dims, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn pair(rows: &[Vec<f64>]) -> JointTable {
        JointTable::from_matrix(
            Axis::indexed("S", rows.len()),
            Axis::indexed("F", rows[0].len()),
            rows,
        )
        .unwrap()
    }

    fn correlated() -> JointTable {
        pair(&[vec![0.4, 0.1], vec![0.1, 0.4]])
    }

    fn binary_entropy(p: f64) -> f64 {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }

    #[test]
    fn marginalize_product_keeps_uniform() {
        let j = pair(&[vec![0.25, 0.25], vec![0.25, 0.25]]);
        let m = j.marginalize(&["S"]).unwrap();
        assert_eq!(m.cells(), &[0.5, 0.5]);
        assert_eq!(m.axes()[0].name, "S");
    }

    #[test]
    fn marginalize_all_axes_is_identity() {
        let j = correlated();
        assert_eq!(j.marginalize(&["F", "S"]).unwrap(), j);
    }

    #[test]
    fn marginalize_rows() {
        let m = correlated().marginalize(&["S"]).unwrap();
        assert_eq!(m.cells(), &[0.5, 0.5]);
        let f = correlated().pmf("F").unwrap();
        assert_eq!(f.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn marginalize_rejects_unknown_and_empty() {
        assert!(matches!(
            correlated().marginalize(&["Q"]),
            Err(Error::UnknownAxis(_))
        ));
        assert!(correlated().marginalize(&[]).is_err());
    }

    #[test]
    fn conditional_entropy_examples() {
        let indep = pair(&[vec![0.25, 0.25], vec![0.25, 0.25]]);
        assert!((indep.conditional_entropy(&["F"], &["S"]).unwrap() - LN_2).abs() < 1e-15);

        let diag = pair(&[vec![0.5, 0.0], vec![0.0, 0.5]]);
        assert_eq!(diag.conditional_entropy(&["F"], &["S"]).unwrap(), 0.0);

        // Each row of [[.4,.1],[.1,.4]] conditions to (0.8, 0.2).
        let expected = binary_entropy(0.8);
        let h = correlated().conditional_entropy(&["F"], &["S"]).unwrap();
        assert!((h - expected).abs() < 1e-15);
        assert!((h - 0.500402).abs() < 1e-6);
    }

    #[test]
    fn conditional_entropy_matches_difference_form() {
        let j = pair(&[vec![0.1, 0.2, 0.05], vec![0.3, 0.15, 0.2]]);
        let direct = j.conditional_entropy(&["F"], &["S"]).unwrap();
        let diff = j.entropy_of(&["S", "F"]).unwrap() - j.entropy_of(&["S"]).unwrap();
        assert!((direct - diff).abs() < 1e-14);
    }

    #[test]
    fn conditional_entropy_rejects_overlap() {
        assert!(matches!(
            correlated().conditional_entropy(&["F"], &["F"]),
            Err(Error::AxisOverlap(_))
        ));
    }

    #[test]
    fn mutual_information_examples() {
        let indep = pair(&[vec![0.25, 0.25], vec![0.25, 0.25]]);
        assert_eq!(indep.mutual_information(&["S"], &["F"]).unwrap(), 0.0);

        let diag = pair(&[vec![0.5, 0.0], vec![0.0, 0.5]]);
        assert!((diag.mutual_information(&["S"], &["F"]).unwrap() - LN_2).abs() < 1e-15);

        let i = correlated().mutual_information(&["S"], &["F"]).unwrap();
        assert!((i - (LN_2 - binary_entropy(0.8))).abs() < 1e-15);
        assert!((i - 0.192745).abs() < 1e-6);
    }

    #[test]
    fn mutual_information_matches_entropy_form() {
        let j = pair(&[vec![0.1, 0.2, 0.05], vec![0.3, 0.15, 0.2]]);
        let direct = j.mutual_information(&["S"], &["F"]).unwrap();
        let via_h = j.entropy_of(&["S"]).unwrap() + j.entropy_of(&["F"]).unwrap()
            - j.entropy_of(&["S", "F"]).unwrap();
        assert!((direct - via_h).abs() < 1e-14);
    }

    #[test]
    fn markov_chain_has_zero_conditional_information() {
        // Z uniform on 4 symbols, S = Z mod 2, H noisy in Z.
        let mut cells = Vec::new();
        let h_given_z = [[0.7, 0.3], [0.2, 0.8], [0.5, 0.5], [0.9, 0.1]];
        for s in 0..2 {
            for (z, row) in h_given_z.iter().enumerate() {
                let ps = if z % 2 == s { 1.0 } else { 0.0 };
                for &ph in row {
                    cells.push(0.25 * ps * ph);
                }
            }
        }
        let j = JointTable::new(
            vec![
                Axis::indexed("S", 2),
                Axis::indexed("Z", 4),
                Axis::indexed("H", 2),
            ],
            cells,
        )
        .unwrap();
        assert_eq!(
            j.conditional_mutual_information(&["S"], &["H"], &["Z"])
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn independent_conditioner_does_not_change_information() {
        let base = correlated();
        let c = [0.3, 0.7];
        let mut cells = Vec::new();
        for &m in base.cells() {
            for &pc in &c {
                cells.push(m * pc);
            }
        }
        let j = JointTable::new(
            vec![
                Axis::indexed("S", 2),
                Axis::indexed("F", 2),
                Axis::indexed("C", 2),
            ],
            cells,
        )
        .unwrap();
        let cond = j
            .conditional_mutual_information(&["S"], &["F"], &["C"])
            .unwrap();
        let plain = base.mutual_information(&["S"], &["F"]).unwrap();
        assert!((cond - plain).abs() < 1e-14);
    }

    #[test]
    fn extend_with_identity_copies_axis() {
        let ch = Channel::identity(Axis::indexed("F", 2), "U");
        let j = correlated().extend_with_channel(&ch).unwrap();
        assert_eq!(j.conditional_entropy(&["U"], &["F"]).unwrap(), 0.0);
        assert_eq!(j.conditional_entropy(&["F"], &["U"]).unwrap(), 0.0);
        assert_eq!(j.marginalize(&["S", "F"]).unwrap(), correlated());
    }

    #[test]
    fn extend_with_constant_leaks_nothing() {
        let ch = Channel::constant(
            vec![Axis::indexed("S", 2), Axis::indexed("F", 2)],
            Axis::indexed("U", 3),
            &[0.2, 0.3, 0.5],
        )
        .unwrap();
        let j = correlated().extend_with_channel(&ch).unwrap();
        assert!(j.mutual_information(&["U"], &["S"]).unwrap() < 1e-12);
        assert!(j.mutual_information(&["U"], &["S", "F"]).unwrap() < 1e-12);
    }

    #[test]
    fn extend_rejects_alphabet_mismatch_and_duplicate_output() {
        let ch = Channel::identity(Axis::indexed("F", 3), "U");
        assert!(matches!(
            correlated().extend_with_channel(&ch),
            Err(Error::AlphabetMismatch { .. })
        ));
        let ch = Channel::identity(Axis::indexed("F", 2), "S");
        assert!(matches!(
            correlated().extend_with_channel(&ch),
            Err(Error::AxisOverlap(_))
        ));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let j = correlated();
        let text = serde_json::to_string(&j).unwrap();
        assert!(text.starts_with(r#"{"axes":[{"name":"S","alphabet":["0","1"]}"#));
        let back: JointTable = serde_json::from_str(&text).unwrap();
        assert_eq!(back, j);
        let bad = r#"{"axes":[{"name":"S","alphabet":["0","1"]}],"cells":[0.2,0.2]}"#;
        assert!(serde_json::from_str::<JointTable>(bad).is_err());
        let short = r#"{"axes":[{"name":"S","alphabet":["0","1"]}],"cells":[1.0]}"#;
        assert!(serde_json::from_str::<JointTable>(short).is_err());
    }

    #[test]
    fn from_counts_is_exact_ratio() {
        let j = JointTable::from_counts(vec![Axis::indexed("Z", 3)], &[1, 1, 2]).unwrap();
        assert_eq!(j.cells(), &[0.25, 0.25, 0.5]);
    }
}
