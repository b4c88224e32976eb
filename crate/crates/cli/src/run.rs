//! Dispatch a loaded experiment configuration: run the requested mode and
//! write its artifacts. Every command is a pure function of (input files,
//! config, seed); reruns produce byte-identical outputs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use qrbm::classify::{acc, classify_attributes};
use qrbm::cv::{cv_select, CvConfig};
use qrbm::eval::{q_errors, q_errors_with_permutation};
use qrbm::io;
use qrbm::sim::{
    build_random_q, build_structured_q, sample_attributes, simulate_responses, AttributeSimConfig,
};
use qrbm::trainer::{train, InitScheme, TrainerConfig};
use qrbm::{AttributeMatrix, QMatrix, RbmParams, ResponseMatrix};
use rand::SeedableRng;
use rand_pcg::Pcg64;

use crate::config::{parse_schedule, ExperimentConfig, Mode};

pub struct RunContext {
    /// Directory against which relative input paths resolve (the config
    /// file's parent).
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
    pub threads: usize,
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn read_responses(path: &Path) -> Result<ResponseMatrix> {
    let m = io::read_binary_matrix(path)?;
    ResponseMatrix::new(m).with_context(|| format!("invalid response matrix {}", path.display()))
}

fn read_q(path: &Path) -> Result<QMatrix> {
    let m = io::read_binary_matrix(path)?;
    QMatrix::new(m).with_context(|| format!("invalid Q-matrix {}", path.display()))
}

fn wrote(path: &Path) {
    println!("wrote {}", path.display());
}

pub fn run(config: &ExperimentConfig, ctx: &RunContext) -> Result<()> {
    std::fs::create_dir_all(&ctx.out_dir)
        .with_context(|| format!("cannot create output directory {}", ctx.out_dir.display()))?;
    match config.mode {
        Mode::Simulate => simulate(config, ctx),
        Mode::Train => run_train(config, ctx),
        Mode::Cv => run_cv(config, ctx),
        Mode::Evaluate => evaluate(config, ctx),
        Mode::Classify => classify(config, ctx),
        Mode::Compare => compare(config, ctx),
    }
}

fn simulate(config: &ExperimentConfig, ctx: &RunContext) -> Result<()> {
    let section = config
        .simulate
        .as_ref()
        .context("mode \"simulate\" needs a [simulate] section")?;
    let spec = section.model.to_spec()?;
    let mut rng = Pcg64::seed_from_u64(config.seed);

    let q = if let Some(q_file) = &section.q_file {
        read_q(&resolve(&ctx.base_dir, q_file))?
    } else {
        match section.q_design.as_deref().unwrap_or("structured") {
            "structured" => build_structured_q(section.n_attributes)?,
            "random" => build_random_q(section.n_attributes, &mut rng)?,
            other => bail!("unknown q_design {other:?} (expected \"structured\" or \"random\")"),
        }
    };
    if q.n_attributes() != section.n_attributes {
        bail!(
            "Q-matrix has {} attributes but n_attributes = {}",
            q.n_attributes(),
            section.n_attributes
        );
    }

    let attributes = sample_attributes(
        &AttributeSimConfig {
            n_subjects: section.n_subjects,
            n_attributes: section.n_attributes,
            rho: section.rho,
        },
        &mut rng,
    )?;
    let responses = simulate_responses(&q, &attributes, &spec, &mut rng)?;

    let q_path = ctx.out_dir.join("Q.csv");
    io::write_binary_matrix(q.as_array(), &q_path)?;
    wrote(&q_path);
    let a_path = ctx.out_dir.join("A.csv");
    io::write_binary_matrix(attributes.as_array(), &a_path)?;
    wrote(&a_path);
    let r_path = ctx.out_dir.join("R.csv");
    io::write_binary_matrix(responses.as_array(), &r_path)?;
    wrote(&r_path);
    Ok(())
}

fn write_params(params: &RbmParams, ctx: &RunContext) -> Result<()> {
    let w_path = ctx.out_dir.join("W.csv");
    io::write_real_matrix(params.w.view(), &w_path)?;
    wrote(&w_path);
    let b_path = ctx.out_dir.join("b.csv");
    io::write_real_vector(params.b.view(), &b_path)?;
    wrote(&b_path);
    let c_path = ctx.out_dir.join("c.csv");
    io::write_real_vector(params.c.view(), &c_path)?;
    wrote(&c_path);
    Ok(())
}

fn run_train(config: &ExperimentConfig, ctx: &RunContext) -> Result<()> {
    let section = config
        .train
        .as_ref()
        .context("mode \"train\" needs a [train] section")?;
    let data = read_responses(&resolve(&ctx.base_dir, &section.responses))?;
    let warm_start = section
        .warm_start
        .as_ref()
        .map(|path| read_q(&resolve(&ctx.base_dir, path)).map(InitScheme::WarmStart))
        .transpose()?;
    let trainer = section.to_trainer_config(config.seed, warm_start)?;
    let outcome = train(&data, &trainer)?;

    write_params(&outcome.params, ctx)?;
    let trace_path = ctx.out_dir.join("error_trace.csv");
    io::write_error_trace(&outcome.error_trace, &trace_path)?;
    wrote(&trace_path);
    Ok(())
}

fn run_cv(config: &ExperimentConfig, ctx: &RunContext) -> Result<()> {
    let section = config
        .cv
        .as_ref()
        .context("mode \"cv\" needs a [cv] section")?;
    let data = read_responses(&resolve(&ctx.base_dir, &section.responses))?;

    let mut trainer = TrainerConfig::new(section.n_attributes);
    if let Some(batch) = section.batch_size {
        trainer.batch_size = batch;
    }
    if let Some(epochs) = section.n_epochs {
        trainer.n_epochs = epochs;
    }
    if let Some(normalize) = section.normalize_w_update {
        trainer.normalize_w_update = normalize;
    }
    trainer.schedule = parse_schedule(section.schedule.as_deref())?;

    let cv_config = CvConfig {
        folds: section.folds,
        lambda_grid: section.lambda_grid.clone(),
        gamma0_grid: section.gamma0_grid.clone(),
        trainer,
        validation_epochs: section.validation_epochs,
        seed: config.seed,
    };
    let outcome = cv_select(&data, &cv_config, ctx.threads)?;

    let report_path = ctx.out_dir.join("cv_report.csv");
    io::write_cv_report(&outcome.records, &report_path)?;
    wrote(&report_path);
    let q_path = ctx.out_dir.join("Q_hat.csv");
    io::write_binary_matrix(outcome.q.as_array(), &q_path)?;
    wrote(&q_path);
    write_params(&outcome.params, ctx)?;
    let selection_path = ctx.out_dir.join("selection.txt");
    io::write_key_values(
        &[
            ("lambda", outcome.lambda.to_string()),
            ("gamma0", outcome.gamma0.to_string()),
            ("fold", outcome.fold.to_string()),
            ("val_error", outcome.val_error.to_string()),
        ],
        &selection_path,
    )?;
    wrote(&selection_path);
    Ok(())
}

fn evaluate(config: &ExperimentConfig, ctx: &RunContext) -> Result<()> {
    let section = config
        .evaluate
        .as_ref()
        .context("mode \"evaluate\" needs an [evaluate] section")?;
    let estimated = read_q(&resolve(&ctx.base_dir, &section.estimated))?;
    let truth = read_q(&resolve(&ctx.base_dir, &section.truth))?;
    let report = q_errors(&estimated, &truth)?;
    let report_path = ctx.out_dir.join("report.txt");
    io::write_error_report(&report, &report_path)?;
    wrote(&report_path);
    Ok(())
}

fn classify(config: &ExperimentConfig, ctx: &RunContext) -> Result<()> {
    let section = config
        .classify
        .as_ref()
        .context("mode \"classify\" needs a [classify] section")?;
    let w = io::read_real_matrix(&resolve(&ctx.base_dir, &section.weights))?;
    let b = io::read_real_vector(&resolve(&ctx.base_dir, &section.visible_bias))?;
    let c = io::read_real_vector(&resolve(&ctx.base_dir, &section.hidden_bias))?;
    let params = RbmParams::new(w, b, c)?;
    let data = read_responses(&resolve(&ctx.base_dir, &section.responses))?;
    let threshold = section.threshold.unwrap_or(0.5);
    let a_hat = classify_attributes(&params, &data, threshold)?;

    let a_path = ctx.out_dir.join("A_hat.csv");
    io::write_binary_matrix(a_hat.as_array(), &a_path)?;
    wrote(&a_path);

    if let Some(truth_path) = &section.truth {
        let truth =
            AttributeMatrix::new(io::read_binary_matrix(&resolve(&ctx.base_dir, truth_path))?)?;
        let accs = acc(&a_hat, &truth)?;
        let acc_path = ctx.out_dir.join("acc.csv");
        io::write_real_vector(ndarray::Array1::from_vec(accs).view(), &acc_path)?;
        wrote(&acc_path);
    }
    Ok(())
}

fn compare(config: &ExperimentConfig, ctx: &RunContext) -> Result<()> {
    let section = config
        .compare
        .as_ref()
        .context("mode \"compare\" needs a [compare] section")?;
    let estimated = read_q(&resolve(&ctx.base_dir, &section.estimated))?;
    let reference = read_q(&resolve(&ctx.base_dir, &section.reference))?;
    let report = if section.match_columns.unwrap_or(false) {
        q_errors(&estimated, &reference)?
    } else {
        let identity: Vec<usize> = (0..reference.n_attributes()).collect();
        q_errors_with_permutation(&estimated, &reference, &identity)?
    };
    let report_path = ctx.out_dir.join("report.txt");
    io::write_error_report(&report, &report_path)?;
    wrote(&report_path);
    Ok(())
}
