//! Simulators: Q-matrix designs, correlated latent attribute patterns, and
//! item responses under DINA, ACDM, GDINA, DINO, and item-level mixtures.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::types::{AttributeMatrix, QMatrix, ResponseMatrix};

/// Response model family with its noise parameters.
///
/// For DINA/DINO, `guess` and `slip` are the classical g and s. For
/// ACDM/GDINA, `delta0` is the intercept (pure-guess probability) and
/// `p_max` the success probability at full mastery; attribute contributions
/// split the gap `p_max - delta0` in equal shares.
#[derive(Debug, Clone, PartialEq)]
pub enum CdmSpec {
    Dina {
        guess: f64,
        slip: f64,
    },
    Acdm {
        delta0: f64,
        p_max: f64,
    },
    Gdina {
        delta0: f64,
        p_max: f64,
    },
    Dino {
        guess: f64,
        slip: f64,
    },
    /// Item-level mixture: each item is assigned one component model by a
    /// weighted draw, fixed across subjects.
    Mixture(Vec<(CdmSpec, f64)>),
}

impl CdmSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            CdmSpec::Dina { guess, slip } | CdmSpec::Dino { guess, slip } => {
                if !(0.0 < *guess && *guess < 1.0 - *slip && *slip > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "need 0 < g < 1 - s < 1, got g={guess}, s={slip}"
                    )));
                }
            }
            CdmSpec::Acdm { delta0, p_max } | CdmSpec::Gdina { delta0, p_max } => {
                if !(0.0 < *delta0 && *delta0 < *p_max && *p_max < 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "need 0 < delta0 < p_max < 1, got delta0={delta0}, p_max={p_max}"
                    )));
                }
            }
            CdmSpec::Mixture(components) => {
                if components.is_empty() {
                    return Err(Error::InvalidArgument(
                        "mixture needs at least one component".into(),
                    ));
                }
                let mut total = 0.0;
                for (spec, weight) in components {
                    if matches!(spec, CdmSpec::Mixture(_)) {
                        return Err(Error::InvalidArgument(
                            "nested mixtures are not supported".into(),
                        ));
                    }
                    spec.validate()?;
                    if weight.is_nan() || *weight <= 0.0 {
                        return Err(Error::InvalidArgument(
                            "mixture weights must be positive".into(),
                        ));
                    }
                    total += weight;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "mixture weights must sum to 1, got {total}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Settings for the Gaussian-threshold attribute sampler.
#[derive(Debug, Clone)]
pub struct AttributeSimConfig {
    pub n_subjects: usize,
    pub n_attributes: usize,
    /// Equicorrelation of the latent Gaussian vector, in `[0, 1)`.
    pub rho: f64,
}

impl AttributeSimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 || self.n_attributes == 0 {
            return Err(Error::InvalidArgument(
                "subject and attribute counts must be positive".into(),
            ));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "rho must be in [0, 1), got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// Structured 3K x K design: the identity stacked over a two-band and a
/// three-band block, so every attribute is measured by a single-attribute
/// item and each column carries at least three items.
pub fn build_structured_q(k: usize) -> Result<QMatrix> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "structured design needs K >= 2, got {k}"
        )));
    }
    let mut q = Array2::<u8>::zeros((3 * k, k));
    for i in 0..k {
        q[[i, i]] = 1;
    }
    for i in 0..k {
        q[[k + i, i]] = 1;
        if i + 1 < k {
            q[[k + i, i + 1]] = 1;
        }
    }
    for i in 0..k {
        q[[2 * k + i, i]] = 1;
        if i > 0 {
            q[[2 * k + i, i - 1]] = 1;
        }
        if i + 1 < k {
            q[[2 * k + i, i + 1]] = 1;
        }
    }
    QMatrix::new(q)
}

// Probabilities of an item requiring 1, 2, or 3 attributes in the random
// design: binomial-coefficient shares C(K,n) / (C(K,1)+C(K,2)+C(K,3)).
pub(crate) fn random_q_size_probs(k: usize) -> Result<[f64; 3]> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!(
            "random design needs K >= 3, got {k}"
        )));
    }
    let k = k as u64;
    let c1 = k;
    let c2 = k * (k - 1) / 2;
    let c3 = k * (k - 1) * (k - 2) / 6;
    let m = (c1 + c2 + c3) as f64;
    Ok([c1 as f64 / m, c2 as f64 / m, c3 as f64 / m])
}

/// Random 3K x K design: each item requires n in {1,2,3} attributes with
/// probabilities proportional to C(K,n), at positions sampled without
/// replacement.
pub fn build_random_q<R: Rng>(k: usize, rng: &mut R) -> Result<QMatrix> {
    let probs = random_q_size_probs(k)?;
    let mut q = Array2::<u8>::zeros((3 * k, k));
    for j in 0..3 * k {
        let draw: f64 = rng.random();
        let n = if draw < probs[0] {
            1
        } else if draw < probs[0] + probs[1] {
            2
        } else {
            3
        };
        // Partial Fisher-Yates: the first n slots become the sampled positions.
        let mut pool: Vec<usize> = (0..k).collect();
        for slot in 0..n {
            let pick = slot + rng.random_range(0..k - slot);
            pool.swap(slot, pick);
            q[[j, pool[slot]]] = 1;
        }
    }
    QMatrix::new(q)
}

/// Per-attribute thresholds of the Gaussian sampler: evenly spaced from
/// -0.5 to 0.5. A single attribute uses the midpoint 0.
pub fn attribute_thresholds(k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.0];
    }
    (0..k).map(|i| -0.5 + i as f64 / (k - 1) as f64).collect()
}

/// Draw latent attribute patterns: an equicorrelated Gaussian vector per
/// subject (`z = sqrt(rho) u 1 + sqrt(1-rho) eps`, unit variances), then
/// `alpha_k = 1` iff `z_k` exceeds its threshold.
pub fn sample_attributes<R: Rng>(
    config: &AttributeSimConfig,
    rng: &mut R,
) -> Result<AttributeMatrix> {
    config.validate()?;
    let k = config.n_attributes;
    let thresholds = attribute_thresholds(k);
    let shared = config.rho.sqrt();
    let own = (1.0 - config.rho).sqrt();
    let mut out = Array2::<u8>::zeros((config.n_subjects, k));
    for mut row in out.rows_mut() {
        let u: f64 = rng.sample(StandardNormal);
        for (x, &tau) in row.iter_mut().zip(thresholds.iter()) {
            let eps: f64 = rng.sample(StandardNormal);
            let z = shared * u + own * eps;
            *x = u8::from(z > tau);
        }
    }
    AttributeMatrix::new(out)
}

/// Coefficient table of the equal-contribution design for an item requiring
/// `k_star` attributes: one coefficient per non-empty subset of the required
/// attributes, all equal to `(p_max - delta0) / (2^k_star - 1)`.
pub fn gdina_deltas(k_star: usize, delta0: f64, p_max: f64) -> Result<Vec<f64>> {
    if k_star == 0 || k_star > 3 {
        return Err(Error::InvalidArgument(format!(
            "gdina designs cover 1..=3 required attributes, got {k_star}"
        )));
    }
    if !(0.0 < delta0 && delta0 < p_max && p_max < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < delta0 < p_max < 1, got delta0={delta0}, p_max={p_max}"
        )));
    }
    let terms = (1usize << k_star) - 1;
    Ok(vec![(p_max - delta0) / terms as f64; terms])
}

/// Success probability of one item under the given model.
pub fn item_response_prob(
    spec: &CdmSpec,
    q_row: ndarray::ArrayView1<u8>,
    alpha: ndarray::ArrayView1<u8>,
) -> Result<f64> {
    spec.validate()?;
    if q_row.len() != alpha.len() {
        return Err(Error::DimensionMismatch(format!(
            "q-row has length {}, attribute pattern {}",
            q_row.len(),
            alpha.len()
        )));
    }
    let k_star = q_row.iter().filter(|&&q| q == 1).count();
    if k_star == 0 {
        return Err(Error::InvalidArgument("item requires no attributes".into()));
    }
    let mastered = q_row
        .iter()
        .zip(alpha.iter())
        .filter(|(&q, &a)| q == 1 && a == 1)
        .count();
    let prob = match spec {
        CdmSpec::Dina { guess, slip } => {
            if mastered == k_star {
                1.0 - slip
            } else {
                *guess
            }
        }
        CdmSpec::Dino { guess, slip } => {
            if mastered > 0 {
                1.0 - slip
            } else {
                *guess
            }
        }
        CdmSpec::Acdm { delta0, p_max } => {
            let per_attr = (p_max - delta0) / k_star as f64;
            delta0 + per_attr * mastered as f64
        }
        CdmSpec::Gdina { delta0, p_max } => {
            let deltas = gdina_deltas(k_star, *delta0, *p_max)?;
            // All non-empty subsets of the mastered required attributes
            // contribute, with equal coefficients.
            let active = (1usize << mastered) - 1;
            delta0 + deltas[0] * active as f64
        }
        CdmSpec::Mixture(_) => {
            return Err(Error::InvalidArgument(
                "mixture must be resolved to a per-item component first".into(),
            ));
        }
    };
    if !(0.0 < prob && prob < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "response probability {prob} outside (0, 1)"
        )));
    }
    Ok(prob)
}

/// Simulate binary responses for every (subject, item) pair. Mixture specs
/// first assign each item a component model by weighted draw.
pub fn simulate_responses<R: Rng>(
    q: &QMatrix,
    attributes: &AttributeMatrix,
    spec: &CdmSpec,
    rng: &mut R,
) -> Result<ResponseMatrix> {
    spec.validate()?;
    if q.n_attributes() != attributes.n_attributes() {
        return Err(Error::DimensionMismatch(format!(
            "Q has {} attributes, pattern matrix has {}",
            q.n_attributes(),
            attributes.n_attributes()
        )));
    }
    let n = attributes.n_subjects();
    let j_dim = q.n_items();

    let item_specs: Vec<&CdmSpec> = match spec {
        CdmSpec::Mixture(components) => (0..j_dim)
            .map(|_| {
                let draw: f64 = rng.random();
                let mut acc = 0.0;
                for (component, weight) in components {
                    acc += weight;
                    if draw < acc {
                        return component;
                    }
                }
                &components.last().expect("non-empty mixture").0
            })
            .collect(),
        other => vec![other; j_dim],
    };

    let mut probs = Array2::<f64>::zeros((n, j_dim));
    for i in 0..n {
        for j in 0..j_dim {
            probs[[i, j]] = item_response_prob(item_specs[j], q.row(j), attributes.row(i))?;
        }
    }
    let mut out = Array2::<u8>::zeros((n, j_dim));
    for (x, &p) in out.iter_mut().zip(probs.iter()) {
        *x = u8::from(rng.random::<f64>() < p);
    }
    ResponseMatrix::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_pcg::Pcg64;

    #[test]
    fn structured_q_layout() {
        let q = build_structured_q(3).unwrap();
        assert_eq!(q.n_items(), 9);
        for i in 0..3 {
            for k in 0..3 {
                assert_eq!(q.as_array()[[i, k]], u8::from(i == k));
            }
        }
        assert_eq!(q.row(3).to_vec(), vec![1, 1, 0]);
        assert_eq!(q.row(8).to_vec(), vec![0, 1, 1]);
    }

    #[test]
    fn structured_q_columns_have_three_ones() {
        for k in 2..=10 {
            let q = build_structured_q(k).unwrap();
            for col in q.as_array().columns() {
                let ones: usize = col.iter().map(|&v| v as usize).sum();
                assert!(ones >= 3, "K={k}: column with {ones} ones");
            }
        }
        assert!(build_structured_q(1).is_err());
    }

    #[test]
    fn random_q_size_probabilities() {
        let p5 = random_q_size_probs(5).unwrap();
        assert!((p5[0] - 0.2).abs() < 1e-12);
        assert!((p5[1] - 0.4).abs() < 1e-12);
        assert!((p5[2] - 0.4).abs() < 1e-12);
        let p15 = random_q_size_probs(15).unwrap();
        assert!((p15[0] - 15.0 / 575.0).abs() < 1e-12);
        assert!(random_q_size_probs(2).is_err());
    }

    #[test]
    fn random_q_rows_have_one_to_three_ones() {
        let mut rng = Pcg64::seed_from_u64(4);
        let q = build_random_q(6, &mut rng).unwrap();
        assert_eq!(q.n_items(), 18);
        for row in q.as_array().rows() {
            let ones: usize = row.iter().map(|&v| v as usize).sum();
            assert!((1..=3).contains(&ones));
        }
    }

    #[test]
    fn threshold_grid() {
        let t = attribute_thresholds(5);
        let expected = [-0.5, -0.25, 0.0, 0.25, 0.5];
        for (a, b) in t.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(attribute_thresholds(1), vec![0.0]);
    }

    #[test]
    fn independent_attribute_marginals() {
        let config = AttributeSimConfig {
            n_subjects: 100_000,
            n_attributes: 5,
            rho: 0.0,
        };
        let mut rng = Pcg64::seed_from_u64(10);
        let a = sample_attributes(&config, &mut rng).unwrap();
        // P(alpha_1 = 1) = P(z > -0.5) ~= 0.6915.
        let rate = a
            .as_array()
            .column(0)
            .iter()
            .map(|&v| v as usize)
            .sum::<usize>() as f64
            / 100_000.0;
        assert!((rate - 0.6915).abs() < 0.01, "rate {rate}");
    }

    fn pairwise_corr(a: &AttributeMatrix) -> f64 {
        let m = a.as_array();
        let n = m.nrows() as f64;
        let mut total = 0.0;
        let mut pairs = 0.0;
        for k1 in 0..m.ncols() {
            for k2 in (k1 + 1)..m.ncols() {
                let x: Vec<f64> = m.column(k1).iter().map(|&v| f64::from(v)).collect();
                let y: Vec<f64> = m.column(k2).iter().map(|&v| f64::from(v)).collect();
                let mx = x.iter().sum::<f64>() / n;
                let my = y.iter().sum::<f64>() / n;
                let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
                let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
                let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
                total += cov / (vx.sqrt() * vy.sqrt());
                pairs += 1.0;
            }
        }
        total / pairs
    }

    #[test]
    fn correlation_orders_with_rho() {
        let mut rng = Pcg64::seed_from_u64(20);
        let low = sample_attributes(
            &AttributeSimConfig {
                n_subjects: 20_000,
                n_attributes: 4,
                rho: 0.25,
            },
            &mut rng,
        )
        .unwrap();
        let high = sample_attributes(
            &AttributeSimConfig {
                n_subjects: 20_000,
                n_attributes: 4,
                rho: 0.75,
            },
            &mut rng,
        )
        .unwrap();
        assert!(pairwise_corr(&high) > pairwise_corr(&low));
    }

    #[test]
    fn dina_response_probabilities() {
        let spec = CdmSpec::Dina {
            guess: 0.1,
            slip: 0.1,
        };
        let q = array![1, 1, 0];
        let full = array![1, 1, 0];
        let partial = array![1, 0, 1];
        assert!((item_response_prob(&spec, q.view(), full.view()).unwrap() - 0.9).abs() < 1e-12);
        assert!((item_response_prob(&spec, q.view(), partial.view()).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn dino_fires_on_any_required_attribute() {
        let spec = CdmSpec::Dino {
            guess: 0.2,
            slip: 0.1,
        };
        let q = array![1, 1, 0];
        assert!(
            (item_response_prob(&spec, q.view(), array![0, 1, 0].view()).unwrap() - 0.9).abs()
                < 1e-12
        );
        assert!(
            (item_response_prob(&spec, q.view(), array![0, 0, 1].view()).unwrap() - 0.2).abs()
                < 1e-12
        );
    }

    #[test]
    fn acdm_equal_shares() {
        let spec = CdmSpec::Acdm {
            delta0: 0.1,
            p_max: 0.9,
        };
        let q = array![1, 1, 0, 0, 0];
        let one = array![1, 0, 0, 0, 0];
        assert!((item_response_prob(&spec, q.view(), one.view()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gdina_two_of_three_mastered() {
        let spec = CdmSpec::Gdina {
            delta0: 0.1,
            p_max: 0.9,
        };
        let q = array![1, 1, 1, 0, 0];
        let alpha = array![1, 1, 0, 0, 0];
        let p = item_response_prob(&spec, q.view(), alpha.view()).unwrap();
        assert!((p - (0.1 + 3.0 * 0.8 / 7.0)).abs() < 1e-12);
    }

    #[test]
    fn gdina_delta_table() {
        assert_eq!(gdina_deltas(1, 0.1, 0.9).unwrap(), vec![0.8]);
        let d3 = gdina_deltas(3, 0.1, 0.9).unwrap();
        assert_eq!(d3.len(), 7);
        assert!(d3.iter().all(|&d| (d - 0.8 / 7.0).abs() < 1e-15));
        let total: f64 = d3.iter().sum();
        assert!((0.1 + total - 0.9).abs() < 1e-12);
        assert!(gdina_deltas(4, 0.1, 0.9).is_err());
        assert!(gdina_deltas(0, 0.1, 0.9).is_err());
    }

    #[test]
    fn response_prob_monotone_in_alpha() {
        let specs = [
            CdmSpec::Dina {
                guess: 0.2,
                slip: 0.2,
            },
            CdmSpec::Acdm {
                delta0: 0.1,
                p_max: 0.9,
            },
            CdmSpec::Gdina {
                delta0: 0.2,
                p_max: 0.8,
            },
        ];
        let q = array![1, 1, 1];
        let patterns = [
            array![0, 0, 0],
            array![1, 0, 0],
            array![1, 1, 0],
            array![1, 1, 1],
        ];
        for spec in &specs {
            let mut last = 0.0;
            for alpha in &patterns {
                let p = item_response_prob(spec, q.view(), alpha.view()).unwrap();
                assert!(p >= last);
                last = p;
            }
        }
    }

    #[test]
    fn zero_q_row_rejected() {
        let spec = CdmSpec::Dina {
            guess: 0.1,
            slip: 0.1,
        };
        assert!(item_response_prob(&spec, array![0, 0].view(), array![1, 0].view()).is_err());
    }

    #[test]
    fn simulated_rates_match_noise_levels() {
        let q = build_structured_q(4).unwrap();
        let n = 20_000;
        let ones = AttributeMatrix::new(Array2::ones((n, 4))).unwrap();
        let zeros = AttributeMatrix::new(Array2::zeros((n, 4))).unwrap();
        let spec = CdmSpec::Dina {
            guess: 0.1,
            slip: 0.1,
        };
        let mut rng = Pcg64::seed_from_u64(30);
        let r_full = simulate_responses(&q, &ones, &spec, &mut rng).unwrap();
        let r_none = simulate_responses(&q, &zeros, &spec, &mut rng).unwrap();
        let se = 3.0 * (0.1f64 * 0.9 / n as f64).sqrt();
        for j in 0..q.n_items() {
            let full_rate = r_full
                .as_array()
                .column(j)
                .iter()
                .map(|&v| v as usize)
                .sum::<usize>() as f64
                / n as f64;
            let none_rate = r_none
                .as_array()
                .column(j)
                .iter()
                .map(|&v| v as usize)
                .sum::<usize>() as f64
                / n as f64;
            assert!((full_rate - 0.9).abs() < se, "item {j}: {full_rate}");
            assert!((none_rate - 0.1).abs() < se, "item {j}: {none_rate}");
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let q = build_structured_q(3).unwrap();
        let config = AttributeSimConfig {
            n_subjects: 50,
            n_attributes: 3,
            rho: 0.25,
        };
        let spec = CdmSpec::Mixture(vec![
            (
                CdmSpec::Dina {
                    guess: 0.1,
                    slip: 0.1,
                },
                0.35,
            ),
            (
                CdmSpec::Acdm {
                    delta0: 0.1,
                    p_max: 0.9,
                },
                0.35,
            ),
            (
                CdmSpec::Dino {
                    guess: 0.1,
                    slip: 0.1,
                },
                0.3,
            ),
        ]);
        let run = |seed: u64| {
            let mut rng = Pcg64::seed_from_u64(seed);
            let a = sample_attributes(&config, &mut rng).unwrap();
            let r = simulate_responses(&q, &a, &spec, &mut rng).unwrap();
            (a, r)
        };
        assert_eq!(run(77), run(77));
    }

    #[test]
    fn mixture_weight_validation() {
        let bad = CdmSpec::Mixture(vec![(
            CdmSpec::Dina {
                guess: 0.1,
                slip: 0.1,
            },
            0.7,
        )]);
        assert!(bad.validate().is_err());
        assert!(CdmSpec::Mixture(vec![]).validate().is_err());
    }
}
