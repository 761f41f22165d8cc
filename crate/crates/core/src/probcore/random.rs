//! Random tables for property campaigns. Weights are i.i.d. `Exp(1)`, so
//! normalized tables are uniform on the simplex (flat Dirichlet).

use rand::Rng;

use super::{Axis, Channel, JointTable};

fn exp_weight<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 1 - u lies in (0, 1], keeping the log finite.
    -(1.0 - rng.random::<f64>()).ln()
}

fn normalized(mut w: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

/// Flat-Dirichlet joint over `axes`.
pub fn random_joint<R: Rng + ?Sized>(rng: &mut R, axes: Vec<Axis>) -> JointTable {
    random_sparse_joint(rng, axes, 0.0)
}

/// Like [`random_joint`], but each cell is zeroed with probability `zero_prob`
/// (at least one cell always keeps mass).
pub fn random_sparse_joint<R: Rng + ?Sized>(
    rng: &mut R,
    axes: Vec<Axis>,
    zero_prob: f64,
) -> JointTable {
    let n: usize = axes.iter().map(Axis::len).product();
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            let keep = rng.random::<f64>() >= zero_prob;
            let v = exp_weight(rng);
            if keep {
                v
            } else {
                0.0
            }
        })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        let i = rng.random_range(0..n);
        w[i] = 1.0;
    }
    JointTable::new(axes, normalized(w)).expect("normalized weights form a valid joint")
}

/// Channel with independent flat-Dirichlet rows.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, inputs: Vec<Axis>, output: Axis) -> Channel {
    let n_rows: usize = inputs.iter().map(Axis::len).product();
    let rows = (0..n_rows)
        .map(|_| normalized((0..output.len()).map(|_| exp_weight(rng)).collect()))
        .collect();
    Channel::new(inputs, output, rows).expect("normalized rows form a valid channel")
}
