//! Penalized CD-1 training: batched Gibbs reconstruction, gradient-style
//! updates with a linearly decaying learning rate, and cumulative-L1
//! clipping that drives weights to exact zeros.
//!
//! One inner iteration samples `alpha0 ~ P(alpha | R0)` and
//! `R1 ~ P(R | alpha0)`, forms the weight update from conditional
//! probabilities in both phases, tracks the total penalty `u` and the
//! per-entry applied penalty, and clips each weight by the gap between the
//! two. Visible and hidden biases are updated every iteration; all updates
//! are normalized by the true batch size (a raw-sum weight update is
//! available via `normalize_w_update = false`).

use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_pcg::Pcg64;

use crate::error::{Error, Result};
use crate::rbm::{self, RbmParams};
use crate::types::{QMatrix, ResponseMatrix};

/// How the weight matrix is initialized before training.
#[derive(Debug, Clone)]
pub enum InitScheme {
    /// Weights i.i.d. standard normal, visible biases i.i.d. Uniform(-5, 0),
    /// hidden biases zero. Unit-scale weights break the symmetry between
    /// hidden units; near-zero initializations leave them interchangeable
    /// and the learned structure smeared across duplicated units.
    Default,
    /// Weights set to the provided 0/1 Q-matrix entrywise; biases as in
    /// [`InitScheme::Default`].
    WarmStart(QMatrix),
}

/// Learning-rate decay over the training run.
///
/// `Linear` ramps from `gamma0` down to `gamma0 / T` across the planned `T`
/// inner iterations and is the default: it spends enough of its budget after
/// the early epochs for the weight structure to emerge, which the harmonic
/// schedule does not. `Harmonic` is the classical `gamma0 / (t + 1)` decay,
/// kept as an explicit variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateSchedule {
    #[default]
    Linear,
    Harmonic,
}

#[derive(Debug, Clone)]
pub struct TrainerConfig {
    /// L1 penalty coefficient, `>= 0`.
    pub lambda: f64,
    /// Base learning rate of the `gamma0 / (t + 1)` schedule.
    pub gamma0: f64,
    pub batch_size: usize,
    pub n_epochs: usize,
    /// Number of hidden units (latent attributes) of the trained model.
    pub n_hidden: usize,
    pub init: InitScheme,
    pub seed: u64,
    /// Divide the weight update by the batch size like the bias updates.
    /// On by default: with raw batch sums the gradient noise scales with
    /// the batch size and the penalty grid loses all effect.
    pub normalize_w_update: bool,
    pub schedule: RateSchedule,
}

impl TrainerConfig {
    pub fn new(n_hidden: usize) -> Self {
        Self {
            lambda: 0.0,
            gamma0: 1.0,
            batch_size: 50,
            n_epochs: 300,
            n_hidden,
            init: InitScheme::Default,
            seed: 0,
            normalize_w_update: true,
            schedule: RateSchedule::Linear,
        }
    }

    pub fn validate(&self, n_subjects: usize, n_items: usize) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.gamma0.is_finite() && self.gamma0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma0 must be finite and positive, got {}",
                self.gamma0
            )));
        }
        if self.batch_size == 0 || self.batch_size > n_subjects {
            return Err(Error::InvalidArgument(format!(
                "batch size {} must be in 1..={n_subjects}",
                self.batch_size
            )));
        }
        if self.n_epochs == 0 {
            return Err(Error::InvalidArgument("n_epochs must be positive".into()));
        }
        if self.n_hidden == 0 {
            return Err(Error::InvalidArgument("n_hidden must be positive".into()));
        }
        if let InitScheme::WarmStart(q) = &self.init {
            if q.n_items() != n_items || q.n_attributes() != self.n_hidden {
                return Err(Error::DimensionMismatch(format!(
                    "warm-start Q is {}x{}, expected {}x{}",
                    q.n_items(),
                    q.n_attributes(),
                    n_items,
                    self.n_hidden
                )));
            }
        }
        Ok(())
    }
}

/// Mutable training state: parameters plus the cumulative-penalty ledger.
#[derive(Debug, Clone)]
pub struct TrainerState {
    pub params: RbmParams,
    /// Total penalty each weight could have received so far.
    pub u: f64,
    /// Penalty actually applied per weight, folded with the one-step lag of
    /// the update rule.
    pub applied_penalty: Array2<f64>,
    /// The previous iteration's clip difference, not yet folded into
    /// `applied_penalty`.
    pub(crate) pending_penalty: Array2<f64>,
    /// Inner iteration counter across epochs.
    pub t: usize,
    /// Planned total number of inner iterations; sets the slope of the
    /// linear rate schedule.
    pub horizon: usize,
}

impl TrainerState {
    pub fn new(params: RbmParams, horizon: usize) -> Self {
        let dim = params.w.raw_dim();
        Self {
            params,
            u: 0.0,
            applied_penalty: Array2::zeros(dim),
            pending_penalty: Array2::zeros(dim),
            t: 0,
            horizon,
        }
    }
}

/// Result of a training run: final parameters and the per-epoch mean batch
/// reconstruction error.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: RbmParams,
    pub error_trace: Vec<f64>,
}

/// Draw initial parameters for a `n_visible x n_hidden` model.
pub fn init_params<R: Rng>(
    n_visible: usize,
    n_hidden: usize,
    scheme: &InitScheme,
    rng: &mut R,
) -> Result<RbmParams> {
    if n_visible == 0 || n_hidden == 0 {
        return Err(Error::InvalidArgument(
            "model dimensions must be positive".into(),
        ));
    }
    let mut w = Array2::<f64>::zeros((n_visible, n_hidden));
    match scheme {
        InitScheme::Default => {
            let normal = Normal::new(0.0, 1.0).expect("valid normal");
            for j in 0..n_visible {
                for k in 0..n_hidden {
                    w[[j, k]] = normal.sample(rng);
                }
            }
        }
        InitScheme::WarmStart(q) => {
            if q.n_items() != n_visible || q.n_attributes() != n_hidden {
                return Err(Error::DimensionMismatch(format!(
                    "warm-start Q is {}x{}, expected {n_visible}x{n_hidden}",
                    q.n_items(),
                    q.n_attributes()
                )));
            }
            for j in 0..n_visible {
                for k in 0..n_hidden {
                    w[[j, k]] = f64::from(q.as_array()[[j, k]]);
                }
            }
        }
    }
    let uniform = rand::distr::Uniform::new(-5.0f64, 0.0).expect("valid range");
    let mut b = ndarray::Array1::<f64>::zeros(n_visible);
    for j in 0..n_visible {
        b[j] = uniform.sample(rng);
    }
    let c = ndarray::Array1::<f64>::zeros(n_hidden);
    RbmParams::new(w, b, c)
}

/// Harmonic learning rate at inner iteration `t`: `gamma0 / (t + 1)`.
pub fn learning_rate(t: usize, gamma0: f64) -> f64 {
    gamma0 / (t as f64 + 1.0)
}

/// Linearly decaying rate over a planned horizon of `total` iterations:
/// `gamma0 * (total - t) / total`, held at the final step's value once the
/// horizon is exhausted.
pub fn learning_rate_linear(t: usize, total: usize, gamma0: f64) -> f64 {
    let total = total.max(1);
    let remaining = total.saturating_sub(t).max(1);
    gamma0 * remaining as f64 / total as f64
}

fn rate_at(schedule: RateSchedule, t: usize, horizon: usize, gamma0: f64) -> f64 {
    match schedule {
        RateSchedule::Linear => learning_rate_linear(t, horizon, gamma0),
        RateSchedule::Harmonic => learning_rate(t, gamma0),
    }
}

/// Clip one intermediate weight by the gap between the total available
/// penalty `u` and the penalty `c_jk` already applied to this entry.
pub fn apply_cumulative_l1(w_prime: f64, u: f64, c_jk: f64) -> f64 {
    if w_prime > 0.0 {
        (w_prime - (u + c_jk)).max(0.0)
    } else {
        (w_prime + (u - c_jk)).min(0.0)
    }
}

/// Which entries of the weight matrix an update run may modify.
#[derive(Debug, Clone, Copy)]
pub(crate) enum WeightUpdate<'a> {
    /// All entries.
    Full,
    /// Only entries where the mask is 1; the rest keep their value exactly.
    Masked(&'a Array2<f64>),
    /// No weight update at all (bias adaptation only).
    Frozen,
}

/// Fixed random partition of the rows into `ceil(N / batch_size)` batches,
/// stored as 0/1 matrices in f64 for the batched linear algebra. The last
/// batch keeps its true (possibly smaller) size.
pub(crate) fn partition_batches<R: Rng>(
    data: &ResponseMatrix,
    batch_size: usize,
    rng: &mut R,
) -> Vec<Array2<f64>> {
    let n = data.n_subjects();
    let j_dim = data.n_items();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
        .chunks(batch_size)
        .map(|chunk| {
            let mut m = Array2::<f64>::zeros((chunk.len(), j_dim));
            for (dst, &src) in chunk.iter().enumerate() {
                for (x, &v) in m.row_mut(dst).iter_mut().zip(data.row(src).iter()) {
                    *x = f64::from(v);
                }
            }
            m
        })
        .collect()
}

// CD-loop settings shared by training, debiasing, and validation passes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LoopSpec {
    pub lambda: f64,
    pub gamma0: f64,
    pub n_epochs: usize,
    pub normalize_w: bool,
    pub schedule: RateSchedule,
}

// One full inner iteration of the update rule on a 0/1 batch; returns the
// summed squared reconstruction error of the batch.
fn cd1_step_batch(
    state: &mut TrainerState,
    batch: ArrayView2<f64>,
    spec: &LoopSpec,
    mode: WeightUpdate<'_>,
    rng: &mut Pcg64,
) -> f64 {
    let n_b = batch.nrows() as f64;
    let gamma = rate_at(spec.schedule, state.t, state.horizon, spec.gamma0);

    let h0 = rbm::hidden_probs_batch(&state.params, batch);
    let a0 = rbm::bernoulli_matrix(h0.view(), rng);
    let v1 = rbm::visible_probs_batch(&state.params, a0.view());
    let r1 = rbm::bernoulli_matrix(v1.view(), rng);
    let h1 = rbm::hidden_probs_batch(&state.params, r1.view());

    let diff = &batch.to_owned() - &r1;
    let sq_err = diff.iter().map(|d| d * d).sum::<f64>();

    match mode {
        WeightUpdate::Frozen => {}
        WeightUpdate::Full | WeightUpdate::Masked(_) => {
            state.u += spec.lambda * gamma;
            let mut grad = batch.t().dot(&h0) - r1.t().dot(&h1);
            if spec.normalize_w {
                grad /= n_b;
            }
            if let WeightUpdate::Masked(mask) = mode {
                grad *= mask;
            }
            let w_prime = &state.params.w + &(grad * gamma);
            if state.t >= 2 {
                state.applied_penalty += &state.pending_penalty;
            }
            let mut w_new = Array2::<f64>::zeros(w_prime.raw_dim());
            Zip::from(&mut w_new)
                .and(&w_prime)
                .and(&state.applied_penalty)
                .for_each(|out, &wp, &c_jk| *out = apply_cumulative_l1(wp, state.u, c_jk));
            if let WeightUpdate::Masked(mask) = mode {
                Zip::from(&mut w_new)
                    .and(&state.params.w)
                    .and(mask)
                    .for_each(|out, &old, &m| {
                        if m == 0.0 {
                            *out = old;
                        }
                    });
            }
            state.pending_penalty = &w_new - &w_prime;
            state.params.w = w_new;
        }
    }

    let db = diff.sum_axis(Axis(0)) * (gamma / n_b);
    state.params.b += &db;
    let dc = (&h0 - &h1).sum_axis(Axis(0)) * (gamma / n_b);
    state.params.c += &dc;
    state.t += 1;
    sq_err
}

/// One inner iteration of the training loop on an explicit batch, mutating
/// the state in place; returns the batch's summed squared reconstruction
/// error.
pub fn cd1_step(
    state: &mut TrainerState,
    batch: &ResponseMatrix,
    config: &TrainerConfig,
    rng: &mut Pcg64,
) -> Result<f64> {
    if batch.n_items() != state.params.n_visible() {
        return Err(Error::DimensionMismatch(format!(
            "batch has {} items, model has {} visible units",
            batch.n_items(),
            state.params.n_visible()
        )));
    }
    let mut m = Array2::<f64>::zeros((batch.n_subjects(), batch.n_items()));
    for (mut row, src) in m.rows_mut().into_iter().zip(batch.as_array().rows()) {
        for (x, &v) in row.iter_mut().zip(src.iter()) {
            *x = f64::from(v);
        }
    }
    Ok(cd1_step_batch(
        state,
        m.view(),
        &LoopSpec {
            lambda: config.lambda,
            gamma0: config.gamma0,
            n_epochs: config.n_epochs,
            normalize_w: config.normalize_w_update,
            schedule: config.schedule,
        },
        WeightUpdate::Full,
        rng,
    ))
}

// Epochs x batches of cd1 steps; returns final parameters and the per-epoch
// mean batch error (squared reconstruction error per subject).
pub(crate) fn run_cd_loop(
    initial: RbmParams,
    batches: &[Array2<f64>],
    spec: LoopSpec,
    mode: WeightUpdate<'_>,
    rng: &mut Pcg64,
) -> (RbmParams, Vec<f64>) {
    let total_rows: f64 = batches.iter().map(|b| b.nrows() as f64).sum();
    let mut state = TrainerState::new(initial, spec.n_epochs * batches.len());
    let mut trace = Vec::with_capacity(spec.n_epochs);
    for _ in 0..spec.n_epochs {
        let mut sq = 0.0;
        for batch in batches {
            sq += cd1_step_batch(&mut state, batch.view(), &spec, mode, rng);
        }
        trace.push(sq / total_rows);
    }
    (state.params, trace)
}

/// Train a model on the full data set: draw initial parameters, partition
/// the rows into batches once, and run the penalized CD-1 loop.
pub fn train(data: &ResponseMatrix, config: &TrainerConfig) -> Result<TrainOutcome> {
    config.validate(data.n_subjects(), data.n_items())?;
    let mut rng = Pcg64::seed_from_u64(config.seed);
    let initial = init_params(data.n_items(), config.n_hidden, &config.init, &mut rng)?;
    let batches = partition_batches(data, config.batch_size, &mut rng);
    let (params, error_trace) = run_cd_loop(
        initial,
        &batches,
        LoopSpec {
            lambda: config.lambda,
            gamma0: config.gamma0,
            n_epochs: config.n_epochs,
            normalize_w: config.normalize_w_update,
            schedule: config.schedule,
        },
        WeightUpdate::Full,
        &mut rng,
    );
    Ok(TrainOutcome {
        params,
        error_trace,
    })
}
