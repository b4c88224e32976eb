//! Q-matrix extraction from trained weights, optimal column alignment, the
//! OE/OTP/OTN error metrics, reconstruction error, and the closed-form
//! regression oracles used to verify recovery.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::assignment::min_cost_assignment;
use crate::error::{Error, Result};
use crate::types::{AttributeMatrix, QMatrix, ResponseMatrix};

/// Entry-wise error rates of an estimated Q-matrix against the truth,
/// together with the column permutation under which they were measured.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Overall fraction of disagreeing entries.
    pub oe: f64,
    /// Fraction of true 1-entries estimated as 0.
    pub otp: f64,
    /// Fraction of true 0-entries estimated as 1.
    pub otn: f64,
    /// `permutation[k]` is the estimate column aligned to truth column `k`.
    pub permutation: Vec<usize>,
    /// Reconstruction error of the run that produced the estimate, when one
    /// is associated.
    pub mean_batch_error: Option<f64>,
}

/// Threshold the weight matrix into a Q-matrix: `q_jk = 1` iff
/// `|w_jk| > tol`. The default tolerance 0 relies on the cumulative-L1
/// clipping producing exact zeros.
pub fn extract_q(w: ArrayView2<f64>, tol: f64) -> Result<QMatrix> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be non-negative, got {tol}"
        )));
    }
    QMatrix::new(w.mapv(|x| u8::from(x.abs() > tol)))
}

fn column_hamming(a: ArrayView1<u8>, b: ArrayView1<u8>) -> f64 {
    a.iter().zip(b.iter()).filter(|(x, y)| x != y).count() as f64
}

/// Column permutation minimizing the total Hamming distance between the
/// aligned estimate and the truth: `permutation[k]` is the estimate column
/// matched to truth column `k`.
pub fn hungarian_match(q_hat: &QMatrix, q_true: &QMatrix) -> Result<Vec<usize>> {
    if q_hat.n_items() != q_true.n_items() || q_hat.n_attributes() != q_true.n_attributes() {
        return Err(Error::DimensionMismatch(format!(
            "estimate is {}x{}, truth is {}x{}",
            q_hat.n_items(),
            q_hat.n_attributes(),
            q_true.n_items(),
            q_true.n_attributes()
        )));
    }
    let k = q_true.n_attributes();
    let cost = Array2::from_shape_fn((k, k), |(truth_col, hat_col)| {
        column_hamming(
            q_hat.as_array().column(hat_col),
            q_true.as_array().column(truth_col),
        )
    });
    min_cost_assignment(&cost)
}

/// Error rates under an explicit column permutation of the estimate.
pub fn q_errors_with_permutation(
    q_hat: &QMatrix,
    q_true: &QMatrix,
    permutation: &[usize],
) -> Result<ErrorReport> {
    let j_dim = q_true.n_items();
    let k_dim = q_true.n_attributes();
    if q_hat.n_items() != j_dim || q_hat.n_attributes() != k_dim {
        return Err(Error::DimensionMismatch(
            "estimate and truth shapes differ".into(),
        ));
    }
    if permutation.len() != k_dim {
        return Err(Error::DimensionMismatch(format!(
            "permutation has length {}, expected {k_dim}",
            permutation.len()
        )));
    }
    let mut seen = vec![false; k_dim];
    for &col in permutation {
        if col >= k_dim || seen[col] {
            return Err(Error::InvalidArgument(
                "column map is not a permutation".into(),
            ));
        }
        seen[col] = true;
    }

    let truth = q_true.as_array();
    let hat = q_hat.as_array();
    let mut ones = 0usize;
    let mut missed = 0usize;
    let mut spurious = 0usize;
    for k in 0..k_dim {
        let hat_col = hat.column(permutation[k]);
        for j in 0..j_dim {
            match (truth[[j, k]], hat_col[j]) {
                (1, 0) => {
                    ones += 1;
                    missed += 1;
                }
                (1, 1) => ones += 1,
                (0, 1) => spurious += 1,
                _ => {}
            }
        }
    }
    let total = j_dim * k_dim;
    let zeros = total - ones;
    if ones == 0 {
        return Err(Error::UndefinedRate(
            "truth has no positive entries, OTP is undefined".into(),
        ));
    }
    if zeros == 0 {
        return Err(Error::UndefinedRate(
            "truth has no zero entries, OTN is undefined".into(),
        ));
    }
    Ok(ErrorReport {
        oe: (missed + spurious) as f64 / total as f64,
        otp: missed as f64 / ones as f64,
        otn: spurious as f64 / zeros as f64,
        permutation: permutation.to_vec(),
        mean_batch_error: None,
    })
}

/// Error rates after optimal column alignment.
pub fn q_errors(q_hat: &QMatrix, q_true: &QMatrix) -> Result<ErrorReport> {
    let permutation = hungarian_match(q_hat, q_true)?;
    q_errors_with_permutation(q_hat, q_true, &permutation)
}

/// Mean batch reconstruction error: the squared difference summed over
/// items, averaged over all rows of all batches.
pub fn mean_batch_error(
    reconstructed: &[ResponseMatrix],
    observed: &[ResponseMatrix],
) -> Result<f64> {
    if reconstructed.len() != observed.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} reconstructed batches vs {} observed",
            reconstructed.len(),
            observed.len()
        )));
    }
    if reconstructed.is_empty() {
        return Err(Error::InvalidArgument("no batches".into()));
    }
    let mut total = 0.0;
    let mut rows = 0usize;
    for (rec, obs) in reconstructed.iter().zip(observed.iter()) {
        if rec.n_subjects() != obs.n_subjects() || rec.n_items() != obs.n_items() {
            return Err(Error::DimensionMismatch("batch shapes do not match".into()));
        }
        rows += obs.n_subjects();
        for (&a, &b) in rec.as_array().iter().zip(obs.as_array().iter()) {
            let d = f64::from(a) - f64::from(b);
            total += d * d;
        }
    }
    Ok(total / rows as f64)
}

fn solve_linear(mut a: Array2<f64>, mut y: Array1<f64>) -> Result<Array1<f64>> {
    let n = y.len();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::RankDeficient);
    }
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[[row, col]].abs() > a[[pivot, col]].abs() {
                pivot = row;
            }
        }
        if a[[pivot, col]].abs() <= 1e-12 * scale * n as f64 {
            return Err(Error::RankDeficient);
        }
        if pivot != col {
            for c in 0..n {
                let tmp = a[[col, c]];
                a[[col, c]] = a[[pivot, c]];
                a[[pivot, c]] = tmp;
            }
            y.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[[row, col]] / a[[col, col]];
            for c in col..n {
                a[[row, c]] -= f * a[[col, c]];
            }
            y[row] -= f * y[col];
        }
    }
    let mut x = Array1::<f64>::zeros(n);
    for row in (0..n).rev() {
        let mut acc = y[row];
        for c in row + 1..n {
            acc -= a[[row, c]] * x[c];
        }
        x[row] = acc / a[[row, row]];
    }
    Ok(x)
}

/// Least-squares coefficients of the response on `[1, A]`: intercept first,
/// then one coefficient per attribute.
pub fn ols_regression(response: ArrayView1<u8>, attrs: &AttributeMatrix) -> Result<Array1<f64>> {
    let n = attrs.n_subjects();
    if response.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "response has {} entries, attribute matrix has {n} rows",
            response.len()
        )));
    }
    let k = attrs.n_attributes();
    let dim = k + 1;
    // Normal equations on the [1, A] design.
    let mut xtx = Array2::<f64>::zeros((dim, dim));
    let mut xty = Array1::<f64>::zeros(dim);
    for i in 0..n {
        let row = attrs.row(i);
        let y = f64::from(response[i]);
        xtx[[0, 0]] += 1.0;
        xty[0] += y;
        for a in 0..k {
            let xa = f64::from(row[a]);
            if xa == 0.0 {
                continue;
            }
            xtx[[0, a + 1]] += xa;
            xtx[[a + 1, 0]] += xa;
            xty[a + 1] += xa * y;
            for b in 0..k {
                let xb = f64::from(row[b]);
                if xb != 0.0 {
                    xtx[[a + 1, b + 1]] += xa * xb;
                }
            }
        }
    }
    solve_linear(xtx, xty)
}

/// Population regression coefficients of a conjunctive-response item on the
/// attribute indicators: `beta_k = (1 - s - g) * prod_{i != k} p_i` over the
/// first `k_star` (required) attributes, zero for the rest.
pub fn closed_form_beta_dina(
    guess: f64,
    slip: f64,
    prevalences: &[f64],
    k_star: usize,
) -> Result<Vec<f64>> {
    if !(0.0 < guess && guess < 1.0 - slip && slip > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < g < 1 - s < 1, got g={guess}, s={slip}"
        )));
    }
    if k_star == 0 || k_star > prevalences.len() {
        return Err(Error::InvalidArgument(format!(
            "k_star {k_star} out of range for {} attributes",
            prevalences.len()
        )));
    }
    if prevalences.iter().any(|p| !(0.0 < *p && *p < 1.0)) {
        return Err(Error::InvalidArgument(
            "prevalences must lie in (0, 1)".into(),
        ));
    }
    let gap = 1.0 - slip - guess;
    Ok((0..prevalences.len())
        .map(|k| {
            if k < k_star {
                let product: f64 = (0..k_star)
                    .filter(|&i| i != k)
                    .map(|i| prevalences[i])
                    .product();
                gap * product
            } else {
                0.0
            }
        })
        .collect())
}
