//! Energy-based model over binary visible/hidden units, its conditional
//! distributions, Gibbs sampling primitives, and exact small-instance
//! oracles (partition function, marginal likelihood, exact gradient).
//!
//! The exact operations enumerate configurations literally and are guarded
//! by [`ENUMERATION_LIMIT`]; the conditional distributions are the closed
//! sigmoid forms. Tests check the two routes against each other.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::types::ResponseMatrix;

/// Exact enumeration refuses instances with more than this many total units.
pub const ENUMERATION_LIMIT: usize = 24;

/// Numerically stable logistic sigmoid.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Model parameters: interaction weights `w` (J x K), visible biases `b`
/// (length J) and hidden biases `c` (length K).
#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub c: Array1<f64>,
}

impl RbmParams {
    pub fn new(w: Array2<f64>, b: Array1<f64>, c: Array1<f64>) -> Result<Self> {
        if w.nrows() != b.len() || w.ncols() != c.len() {
            return Err(Error::DimensionMismatch(format!(
                "weights are {}x{} but biases have lengths {} and {}",
                w.nrows(),
                w.ncols(),
                b.len(),
                c.len()
            )));
        }
        if w.iter()
            .chain(b.iter())
            .chain(c.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument(
                "model parameters must be finite".into(),
            ));
        }
        Ok(Self { w, b, c })
    }

    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        Self {
            w: Array2::zeros((n_visible, n_hidden)),
            b: Array1::zeros(n_visible),
            c: Array1::zeros(n_hidden),
        }
    }

    pub fn n_visible(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_hidden(&self) -> usize {
        self.w.ncols()
    }

    fn check_visible(&self, r: ArrayView1<u8>) -> Result<()> {
        if r.len() != self.n_visible() {
            return Err(Error::DimensionMismatch(format!(
                "visible vector has length {}, expected {}",
                r.len(),
                self.n_visible()
            )));
        }
        Ok(())
    }

    fn check_hidden(&self, a: ArrayView1<u8>) -> Result<()> {
        if a.len() != self.n_hidden() {
            return Err(Error::DimensionMismatch(format!(
                "hidden vector has length {}, expected {}",
                a.len(),
                self.n_hidden()
            )));
        }
        Ok(())
    }

    fn check_enumerable(&self) -> Result<()> {
        let total = self.n_visible() + self.n_hidden();
        if total > ENUMERATION_LIMIT {
            return Err(Error::SizeLimit {
                actual: total,
                limit: ENUMERATION_LIMIT,
            });
        }
        Ok(())
    }
}

/// Gradient of the marginal log-likelihood with respect to (w, b, c).
#[derive(Debug, Clone, PartialEq)]
pub struct LoglikGradient {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub c: Array1<f64>,
}

/// Energy of a joint configuration: `-b'r - c'a - r'Wa`.
pub fn energy(params: &RbmParams, r: ArrayView1<u8>, a: ArrayView1<u8>) -> Result<f64> {
    params.check_visible(r)?;
    params.check_hidden(a)?;
    let mut e = 0.0;
    for (j, &rj) in r.iter().enumerate() {
        if rj == 1 {
            e -= params.b[j];
            for (k, &ak) in a.iter().enumerate() {
                if ak == 1 {
                    e -= params.w[[j, k]];
                }
            }
        }
    }
    for (k, &ak) in a.iter().enumerate() {
        if ak == 1 {
            e -= params.c[k];
        }
    }
    Ok(e)
}

// Negative energy of the configuration encoded by bit masks, reusing the
// per-hidden-mask quantities ca = c'a and wa = W a.
#[inline]
fn neg_energy_masked(params: &RbmParams, r_mask: u32, ca: f64, wa: &[f64]) -> f64 {
    let mut v = ca;
    let mut bits = r_mask;
    while bits != 0 {
        let j = bits.trailing_zeros() as usize;
        v += params.b[j] + wa[j];
        bits &= bits - 1;
    }
    v
}

fn hidden_mask_terms(params: &RbmParams, a_mask: u32) -> (f64, Vec<f64>) {
    let j_dim = params.n_visible();
    let mut ca = 0.0;
    let mut wa = vec![0.0; j_dim];
    let mut bits = a_mask;
    while bits != 0 {
        let k = bits.trailing_zeros() as usize;
        ca += params.c[k];
        for (acc, &w) in wa.iter_mut().zip(params.w.column(k).iter()) {
            *acc += w;
        }
        bits &= bits - 1;
    }
    (ca, wa)
}

// Streaming log-sum-exp accumulator.
struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    fn value(&self) -> f64 {
        if self.max.is_finite() {
            self.max + self.sum.ln()
        } else {
            self.max
        }
    }
}

/// Log of the partition function, summing over all `2^J * 2^K`
/// configurations in the log domain.
pub fn log_partition_function(params: &RbmParams) -> Result<f64> {
    params.check_enumerable()?;
    let j_dim = params.n_visible();
    let k_dim = params.n_hidden();
    let mut lse = LogSumExp::new();
    for a_mask in 0..(1u32 << k_dim) {
        let (ca, wa) = hidden_mask_terms(params, a_mask);
        for r_mask in 0..(1u32 << j_dim) {
            lse.add(neg_energy_masked(params, r_mask, ca, &wa));
        }
    }
    Ok(lse.value())
}

/// Partition function `Z = sum exp(-E)` over all configurations.
pub fn partition_function(params: &RbmParams) -> Result<f64> {
    Ok(log_partition_function(params)?.exp())
}

/// Joint probability of one configuration.
pub fn joint_prob(params: &RbmParams, r: ArrayView1<u8>, a: ArrayView1<u8>) -> Result<f64> {
    params.check_enumerable()?;
    let log_z = log_partition_function(params)?;
    let e = energy(params, r, a)?;
    Ok((-e - log_z).exp())
}

/// `P(R_j = 1 | a)` for every item j: `sigmoid(b_j + sum_k w_jk a_k)`.
pub fn cond_prob_visible(params: &RbmParams, a: ArrayView1<u8>) -> Result<Array1<f64>> {
    params.check_hidden(a)?;
    let mut out = Array1::zeros(params.n_visible());
    for j in 0..params.n_visible() {
        let mut x = params.b[j];
        for (k, &ak) in a.iter().enumerate() {
            if ak == 1 {
                x += params.w[[j, k]];
            }
        }
        out[j] = sigmoid(x);
    }
    Ok(out)
}

/// `P(alpha_k = 1 | r)` for every attribute k: `sigmoid(c_k + sum_j w_jk r_j)`.
pub fn cond_prob_hidden(params: &RbmParams, r: ArrayView1<u8>) -> Result<Array1<f64>> {
    params.check_visible(r)?;
    let mut out = Array1::zeros(params.n_hidden());
    for k in 0..params.n_hidden() {
        let mut x = params.c[k];
        for (j, &rj) in r.iter().enumerate() {
            if rj == 1 {
                x += params.w[[j, k]];
            }
        }
        out[k] = sigmoid(x);
    }
    Ok(out)
}

// One Bernoulli draw per entry, in index order, so that a seeded stream
// reproduces samples exactly.
pub(crate) fn bernoulli_vector<R: Rng>(probs: ArrayView1<f64>, rng: &mut R) -> Array1<u8> {
    Array1::from_iter(probs.iter().map(|&p| u8::from(rng.random::<f64>() < p)))
}

pub(crate) fn bernoulli_matrix<R: Rng>(probs: ArrayView2<f64>, rng: &mut R) -> Array2<f64> {
    let mut out = Array2::zeros(probs.raw_dim());
    for (o, &p) in out.iter_mut().zip(probs.iter()) {
        *o = f64::from(rng.random::<f64>() < p);
    }
    out
}

/// Draw a hidden configuration from `P(alpha | r)`.
pub fn sample_hidden<R: Rng>(
    params: &RbmParams,
    r: ArrayView1<u8>,
    rng: &mut R,
) -> Result<Array1<u8>> {
    let probs = cond_prob_hidden(params, r)?;
    Ok(bernoulli_vector(probs.view(), rng))
}

/// Draw a visible configuration from `P(r | alpha)`.
pub fn sample_visible<R: Rng>(
    params: &RbmParams,
    a: ArrayView1<u8>,
    rng: &mut R,
) -> Result<Array1<u8>> {
    let probs = cond_prob_visible(params, a)?;
    Ok(bernoulli_vector(probs.view(), rng))
}

// Batched conditional probabilities over 0/1 rows stored as f64; used by the
// training loop.
pub(crate) fn hidden_probs_batch(params: &RbmParams, visible: ArrayView2<f64>) -> Array2<f64> {
    let mut act = visible.dot(&params.w);
    for mut row in act.rows_mut() {
        row += &params.c;
    }
    act.mapv_inplace(sigmoid);
    act
}

pub(crate) fn visible_probs_batch(params: &RbmParams, hidden: ArrayView2<f64>) -> Array2<f64> {
    let mut act = hidden.dot(&params.w.t());
    for mut row in act.rows_mut() {
        row += &params.b;
    }
    act.mapv_inplace(sigmoid);
    act
}

/// Resolve the sign indeterminacy of the hidden units: flipping unit k
/// (`w_k -> -w_k`, `c_k -> -c_k`, `b -> b + w_k`) relabels `alpha_k` as
/// `1 - alpha_k` without changing the distribution of the visible units.
/// This picks the orientation with a non-negative weight column sum, so
/// "mastery" raises response probabilities (the monotonicity convention);
/// posteriors of flipped units complement accordingly.
pub fn orient_hidden_units(params: &RbmParams) -> RbmParams {
    let mut out = params.clone();
    for k in 0..out.n_hidden() {
        if out.w.column(k).sum() < 0.0 {
            for j in 0..out.n_visible() {
                out.b[j] += out.w[[j, k]];
                out.w[[j, k]] = -out.w[[j, k]];
            }
            out.c[k] = -out.c[k];
        }
    }
    out
}

fn check_data(params: &RbmParams, data: &ResponseMatrix) -> Result<()> {
    if data.n_items() != params.n_visible() {
        return Err(Error::DimensionMismatch(format!(
            "data has {} items, model has {} visible units",
            data.n_items(),
            params.n_visible()
        )));
    }
    Ok(())
}

// log sum_a exp(-E(r, a)) by enumeration over hidden configurations.
fn log_unnorm_marginal(params: &RbmParams, r: ArrayView1<u8>) -> f64 {
    let k_dim = params.n_hidden();
    let mut br = 0.0;
    let mut wtr = vec![0.0; k_dim];
    for (j, &rj) in r.iter().enumerate() {
        if rj == 1 {
            br += params.b[j];
            for (acc, &w) in wtr.iter_mut().zip(params.w.row(j).iter()) {
                *acc += w;
            }
        }
    }
    let mut lse = LogSumExp::new();
    for a_mask in 0..(1u32 << k_dim) {
        let mut v = br;
        let mut bits = a_mask;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            v += params.c[k] + wtr[k];
            bits &= bits - 1;
        }
        lse.add(v);
    }
    lse.value()
}

/// Marginal log-likelihood of the observed rows:
/// `sum_i log sum_a P(R_i, a)`, by enumeration.
pub fn marginal_loglik(params: &RbmParams, data: &ResponseMatrix) -> Result<f64> {
    params.check_enumerable()?;
    check_data(params, data)?;
    let log_z = log_partition_function(params)?;
    let mut total = 0.0;
    for i in 0..data.n_subjects() {
        total += log_unnorm_marginal(params, data.row(i)) - log_z;
    }
    Ok(total)
}

/// Exact gradient of [`marginal_loglik`]: the data-conditional expectation of
/// `-dE/dtheta` minus the model expectation, both by enumeration.
pub fn exact_loglik_gradient(params: &RbmParams, data: &ResponseMatrix) -> Result<LoglikGradient> {
    params.check_enumerable()?;
    check_data(params, data)?;
    let j_dim = params.n_visible();
    let k_dim = params.n_hidden();
    let n = data.n_subjects();

    let mut gw = Array2::<f64>::zeros((j_dim, k_dim));
    let mut gb = Array1::<f64>::zeros(j_dim);
    let mut gc = Array1::<f64>::zeros(k_dim);

    // Positive phase: for each row, expectation of alpha under P(alpha | r).
    for i in 0..n {
        let r = data.row(i);
        let mut lse = LogSumExp::new();
        let mut neg_energies = vec![0.0; 1usize << k_dim];
        for a_mask in 0..(1u32 << k_dim) {
            let (ca, wa) = hidden_mask_terms(params, a_mask);
            let mut v = ca;
            for (j, &rj) in r.iter().enumerate() {
                if rj == 1 {
                    v += params.b[j] + wa[j];
                }
            }
            neg_energies[a_mask as usize] = v;
            lse.add(v);
        }
        let log_norm = lse.value();
        let mut e_alpha = vec![0.0; k_dim];
        for a_mask in 0..(1u32 << k_dim) {
            let p = (neg_energies[a_mask as usize] - log_norm).exp();
            let mut bits = a_mask;
            while bits != 0 {
                let k = bits.trailing_zeros() as usize;
                e_alpha[k] += p;
                bits &= bits - 1;
            }
        }
        for (j, &rj) in r.iter().enumerate() {
            if rj == 1 {
                gb[j] += 1.0;
                for k in 0..k_dim {
                    gw[[j, k]] += e_alpha[k];
                }
            }
        }
        for k in 0..k_dim {
            gc[k] += e_alpha[k];
        }
    }

    // Negative phase: model expectations over the full joint enumeration,
    // scaled by the number of observations.
    let log_z = log_partition_function(params)?;
    let mut ew = Array2::<f64>::zeros((j_dim, k_dim));
    let mut eb = Array1::<f64>::zeros(j_dim);
    let mut ec = Array1::<f64>::zeros(k_dim);
    for a_mask in 0..(1u32 << k_dim) {
        let (ca, wa) = hidden_mask_terms(params, a_mask);
        for r_mask in 0..(1u32 << j_dim) {
            let p = (neg_energy_masked(params, r_mask, ca, &wa) - log_z).exp();
            let mut rbits = r_mask;
            while rbits != 0 {
                let j = rbits.trailing_zeros() as usize;
                eb[j] += p;
                let mut abits = a_mask;
                while abits != 0 {
                    let k = abits.trailing_zeros() as usize;
                    ew[[j, k]] += p;
                    abits &= abits - 1;
                }
                rbits &= rbits - 1;
            }
            let mut abits = a_mask;
            while abits != 0 {
                let k = abits.trailing_zeros() as usize;
                ec[k] += p;
                abits &= abits - 1;
            }
        }
    }

    let n = n as f64;
    Ok(LoglikGradient {
        w: gw - ew * n,
        b: gb - eb * n,
        c: gc - ec * n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    use rand_pcg::Pcg64;

    fn random_params(j: usize, k: usize, seed: u64) -> RbmParams {
        let mut rng = Pcg64::seed_from_u64(seed);
        let n = Normal::new(0.0, 0.8).unwrap();
        RbmParams::new(
            Array2::from_shape_fn((j, k), |_| n.sample(&mut rng)),
            Array1::from_shape_fn(j, |_| n.sample(&mut rng)),
            Array1::from_shape_fn(k, |_| n.sample(&mut rng)),
        )
        .unwrap()
    }

    fn all_vectors(len: usize) -> Vec<Array1<u8>> {
        (0..(1u32 << len))
            .map(|mask| Array1::from_shape_fn(len, |i| ((mask >> i) & 1) as u8))
            .collect()
    }

    // Second, independent enumeration of Z via the energy op directly.
    fn brute_force_z(params: &RbmParams) -> f64 {
        let mut z = 0.0;
        for r in all_vectors(params.n_visible()) {
            for a in all_vectors(params.n_hidden()) {
                z += (-energy(params, r.view(), a.view()).unwrap()).exp();
            }
        }
        z
    }

    #[test]
    fn energy_zero_params_is_zero() {
        let params = RbmParams::zeros(3, 2);
        let e = energy(&params, array![1, 0, 1].view(), array![1, 1].view()).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn energy_single_unit_case() {
        let params = RbmParams::new(array![[1.0]], array![0.5], array![-0.5]).unwrap();
        let e = energy(&params, array![1].view(), array![1].view()).unwrap();
        assert!((e - (-1.0)).abs() < 1e-15);
    }

    #[test]
    fn energy_zero_visible_leaves_hidden_term() {
        let params = random_params(3, 2, 11);
        let a = array![1, 0];
        let e = energy(&params, array![0, 0, 0].view(), a.view()).unwrap();
        assert!((e - (-params.c[0])).abs() < 1e-15);
    }

    #[test]
    fn energy_dimension_mismatch() {
        let params = RbmParams::zeros(3, 2);
        assert!(matches!(
            energy(&params, array![1, 0].view(), array![1, 1].view()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn partition_zero_params_counts_configurations() {
        assert!((partition_function(&RbmParams::zeros(1, 1)).unwrap() - 4.0).abs() < 1e-12);
        assert!((partition_function(&RbmParams::zeros(2, 1)).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn partition_matches_brute_force() {
        for seed in 0..5 {
            let params = random_params(3, 3, seed);
            let z = partition_function(&params).unwrap();
            let z_ref = brute_force_z(&params);
            assert!((z - z_ref).abs() / z_ref < 1e-12, "{z} vs {z_ref}");
        }
    }

    #[test]
    fn partition_guard() {
        let params = RbmParams::zeros(20, 5);
        assert!(matches!(
            partition_function(&params),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn joint_prob_uniform_at_zero_params() {
        let params = RbmParams::zeros(1, 1);
        for r in all_vectors(1) {
            for a in all_vectors(1) {
                let p = joint_prob(&params, r.view(), a.view()).unwrap();
                assert!((p - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn joint_prob_normalizes() {
        for seed in 0..5 {
            let params = random_params(3, 2, 100 + seed);
            let mut total = 0.0;
            for r in all_vectors(3) {
                for a in all_vectors(2) {
                    total += joint_prob(&params, r.view(), a.view()).unwrap();
                }
            }
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cond_prob_closed_forms() {
        let params = RbmParams::zeros(2, 2);
        let p = cond_prob_visible(&params, array![0, 1].view()).unwrap();
        assert!(p.iter().all(|&x| (x - 0.5).abs() < 1e-15));

        let params = RbmParams::new(array![[3f64.ln()]], array![0.0], array![0.0]).unwrap();
        let pv = cond_prob_visible(&params, array![1].view()).unwrap();
        assert!((pv[0] - 0.75).abs() < 1e-15);
        let ph = cond_prob_hidden(&params, array![1].view()).unwrap();
        assert!((ph[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn conditionals_match_enumeration_posteriors() {
        for seed in 0..5 {
            let params = random_params(3, 2, 200 + seed);
            // P(R_j = 1 | a) from the joint.
            for a in all_vectors(2) {
                let cond = cond_prob_visible(&params, a.view()).unwrap();
                for j in 0..3 {
                    let mut num = 0.0;
                    let mut den = 0.0;
                    for r in all_vectors(3) {
                        let p = joint_prob(&params, r.view(), a.view()).unwrap();
                        den += p;
                        if r[j] == 1 {
                            num += p;
                        }
                    }
                    assert!((cond[j] - num / den).abs() < 1e-12);
                }
            }
            // P(alpha_k = 1 | r) from the joint.
            for r in all_vectors(3) {
                let cond = cond_prob_hidden(&params, r.view()).unwrap();
                for k in 0..2 {
                    let mut num = 0.0;
                    let mut den = 0.0;
                    for a in all_vectors(2) {
                        let p = joint_prob(&params, r.view(), a.view()).unwrap();
                        den += p;
                        if a[k] == 1 {
                            num += p;
                        }
                    }
                    assert!((cond[k] - num / den).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sampling_saturated_probabilities() {
        // sigmoid(+-800) is exactly 1.0 / 0.0 in f64.
        let mut rng = Pcg64::seed_from_u64(5);
        let params = RbmParams::new(array![[0.0]], array![0.0], array![800.0]).unwrap();
        let a = sample_hidden(&params, array![0].view(), &mut rng).unwrap();
        assert_eq!(a, array![1]);
        let params = RbmParams::new(array![[0.0]], array![0.0], array![-800.0]).unwrap();
        let a = sample_hidden(&params, array![0].view(), &mut rng).unwrap();
        assert_eq!(a, array![0]);
    }

    #[test]
    fn sampling_frequencies_match_conditionals() {
        let params = random_params(2, 3, 77);
        let r = array![1, 0];
        let probs = cond_prob_hidden(&params, r.view()).unwrap();
        let n = 100_000usize;
        let mut rng = Pcg64::seed_from_u64(9);
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let a = sample_hidden(&params, r.view(), &mut rng).unwrap();
            for (c, &v) in counts.iter_mut().zip(a.iter()) {
                *c += v as usize;
            }
        }
        for k in 0..3 {
            let p = probs[k];
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let freq = counts[k] as f64 / n as f64;
            assert!(
                (freq - p).abs() <= 3.0 * se + 1e-9,
                "attribute {k}: {freq} vs {p}"
            );
        }
    }

    #[test]
    fn marginal_loglik_basics() {
        let params = RbmParams::zeros(1, 1);
        let one = ResponseMatrix::new(array![[1]]).unwrap();
        let ll = marginal_loglik(&params, &one).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-12);

        let two = ResponseMatrix::new(array![[1], [1]]).unwrap();
        let ll2 = marginal_loglik(&params, &two).unwrap();
        assert!((ll2 - 2.0 * ll).abs() < 1e-12);
    }

    #[test]
    fn marginal_loglik_matches_enumeration() {
        for seed in 0..3 {
            let params = random_params(3, 2, 300 + seed);
            let data = ResponseMatrix::new(array![[1, 0, 1], [0, 0, 1], [1, 1, 1]]).unwrap();
            let ll = marginal_loglik(&params, &data).unwrap();
            let mut reference = 0.0;
            for i in 0..data.n_subjects() {
                let mut p = 0.0;
                for a in all_vectors(2) {
                    p += joint_prob(&params, data.row(i), a.view()).unwrap();
                }
                reference += p.ln();
            }
            assert!((ll - reference).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_zero_params_single_row() {
        let params = RbmParams::zeros(3, 2);
        let data = ResponseMatrix::new(array![[1, 0, 1]]).unwrap();
        let g = exact_loglik_gradient(&params, &data).unwrap();
        for j in 0..3 {
            let expected = f64::from(data.row(0)[j]) - 0.5;
            assert!((g.b[j] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = ResponseMatrix::new(array![[1, 0, 1], [0, 1, 1], [0, 0, 0], [1, 1, 0]]).unwrap();
        for seed in 0..3 {
            let params = random_params(3, 2, 400 + seed);
            let grad = exact_loglik_gradient(&params, &data).unwrap();
            let h = 1e-5;
            let check =
                |get: &dyn Fn(&RbmParams) -> f64, set: &dyn Fn(&mut RbmParams, f64), g: f64| {
                    let x0 = get(&params);
                    let mut hi = params.clone();
                    set(&mut hi, x0 + h);
                    let mut lo = params.clone();
                    set(&mut lo, x0 - h);
                    let fd = (marginal_loglik(&hi, &data).unwrap()
                        - marginal_loglik(&lo, &data).unwrap())
                        / (2.0 * h);
                    let denom = fd.abs().max(1e-8);
                    assert!((g - fd).abs() / denom < 1e-6, "grad {g} vs fd {fd}");
                };
            for j in 0..3 {
                for k in 0..2 {
                    check(
                        &|p: &RbmParams| p.w[[j, k]],
                        &|p: &mut RbmParams, v| p.w[[j, k]] = v,
                        grad.w[[j, k]],
                    );
                }
                check(
                    &|p: &RbmParams| p.b[j],
                    &|p: &mut RbmParams, v| p.b[j] = v,
                    grad.b[j],
                );
            }
            for k in 0..2 {
                check(
                    &|p: &RbmParams| p.c[k],
                    &|p: &mut RbmParams, v| p.c[k] = v,
                    grad.c[k],
                );
            }
        }
    }

    #[test]
    fn orientation_preserves_visible_distribution() {
        let mut params = random_params(3, 2, 600);
        params.w.column_mut(0).mapv_inplace(|w| -w.abs());
        let oriented = orient_hidden_units(&params);
        assert!(oriented.w.column(0).sum() >= 0.0);

        let data = ResponseMatrix::new(array![[1, 0, 1], [0, 1, 0], [1, 1, 1]]).unwrap();
        let ll = marginal_loglik(&params, &data).unwrap();
        let ll_flip = marginal_loglik(&oriented, &data).unwrap();
        assert!((ll - ll_flip).abs() < 1e-10);

        // The flipped unit's posterior complements; untouched units keep theirs.
        let r = array![1, 0, 1];
        let before = cond_prob_hidden(&params, r.view()).unwrap();
        let after = cond_prob_hidden(&oriented, r.view()).unwrap();
        assert!((after[0] - (1.0 - before[0])).abs() < 1e-12);
        assert!((after[1] - before[1]).abs() < 1e-12);
    }

    #[test]
    fn orientation_is_idempotent_and_keeps_zero_pattern() {
        let mut params = random_params(4, 3, 601);
        params.w[[0, 1]] = 0.0;
        params.w.column_mut(2).mapv_inplace(|w| -w.abs());
        params.w[[2, 2]] = 0.0;
        let once = orient_hidden_units(&params);
        let twice = orient_hidden_units(&once);
        assert_eq!(once, twice);
        for (a, b) in params.w.iter().zip(once.w.iter()) {
            assert_eq!(*a == 0.0, *b == 0.0);
        }
    }

    #[test]
    fn hidden_permutation_symmetry() {
        let params = random_params(3, 3, 500);
        // Swap hidden units 0 and 2 (columns of w, entries of c).
        let mut permuted = params.clone();
        permuted.w.swap([0, 0], [0, 2]);
        permuted.w.swap([1, 0], [1, 2]);
        permuted.w.swap([2, 0], [2, 2]);
        permuted.c.swap(0, 2);

        let r = array![1, 0, 1];
        let base = cond_prob_hidden(&params, r.view()).unwrap();
        let perm = cond_prob_hidden(&permuted, r.view()).unwrap();
        assert!((base[0] - perm[2]).abs() < 1e-15);
        assert!((base[2] - perm[0]).abs() < 1e-15);
        assert!((base[1] - perm[1]).abs() < 1e-15);

        let data = ResponseMatrix::new(array![[1, 0, 1], [0, 1, 0]]).unwrap();
        let ll = marginal_loglik(&params, &data).unwrap();
        let ll_perm = marginal_loglik(&permuted, &data).unwrap();
        assert!((ll - ll_perm).abs() < 1e-12);
    }
}
