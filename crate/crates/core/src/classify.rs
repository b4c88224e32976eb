//! Latent attribute classification from a trained model's hidden-unit
//! posteriors, and the per-attribute classification accuracy after column
//! alignment.

use ndarray::Array2;

use crate::assignment::min_cost_assignment;
use crate::error::{Error, Result};
use crate::rbm::{cond_prob_hidden, RbmParams};
use crate::types::{AttributeMatrix, ResponseMatrix};

/// Classify each subject's attributes: `alpha_ik = 1` iff
/// `P(alpha_k = 1 | R_i) >= threshold`. Posterior ties at the threshold
/// classify as 1.
pub fn classify_attributes(
    params: &RbmParams,
    data: &ResponseMatrix,
    threshold: f64,
) -> Result<AttributeMatrix> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if data.n_items() != params.n_visible() {
        return Err(Error::DimensionMismatch(format!(
            "data has {} items, model has {} visible units",
            data.n_items(),
            params.n_visible()
        )));
    }
    let mut out = Array2::<u8>::zeros((data.n_subjects(), params.n_hidden()));
    for i in 0..data.n_subjects() {
        let posterior = cond_prob_hidden(params, data.row(i))?;
        for (x, &p) in out.row_mut(i).iter_mut().zip(posterior.iter()) {
            *x = u8::from(p >= threshold);
        }
    }
    AttributeMatrix::new(out)
}

/// Per-attribute agreement rate between classified and true patterns, after
/// aligning the estimate's columns to the truth by minimum Hamming cost.
/// `acc[k]` belongs to truth attribute `k`.
pub fn acc(a_hat: &AttributeMatrix, a_true: &AttributeMatrix) -> Result<Vec<f64>> {
    if a_hat.n_subjects() != a_true.n_subjects() || a_hat.n_attributes() != a_true.n_attributes() {
        return Err(Error::DimensionMismatch(format!(
            "estimate is {}x{}, truth is {}x{}",
            a_hat.n_subjects(),
            a_hat.n_attributes(),
            a_true.n_subjects(),
            a_true.n_attributes()
        )));
    }
    let n = a_true.n_subjects();
    let k_dim = a_true.n_attributes();
    let cost = Array2::from_shape_fn((k_dim, k_dim), |(truth_col, hat_col)| {
        a_true
            .as_array()
            .column(truth_col)
            .iter()
            .zip(a_hat.as_array().column(hat_col).iter())
            .filter(|(t, h)| t != h)
            .count() as f64
    });
    let perm = min_cost_assignment(&cost)?;
    Ok((0..k_dim)
        .map(|k| {
            let agree = a_true
                .as_array()
                .column(k)
                .iter()
                .zip(a_hat.as_array().column(perm[k]).iter())
                .filter(|(t, h)| t == h)
                .count();
            agree as f64 / n as f64
        })
        .collect())
}
