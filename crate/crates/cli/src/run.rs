//! Subcommand bodies. Each returns `(config hash, results payload)`.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use wpfair::ingest::{load_csv, rank_features, write_dataset_csv, ColumnKind, Loaded, Schema, SensitiveRule};
use wpfair::sim::{power_specificity_experiment, validate_limiting, ExperimentOptions, PowerRow, SimConfig};
use wpfair::{
    fit, permutation_test, relative_mae, run_test, CostParams, Dataset, ErrorFn, FairnessCriterion, FitConfig,
    FitMethod, LinearModel, Mode, PermutationConfig, SolverOptions, TestConfig, ThetaForm,
};

use crate::args::{
    CriterionArgs, CriterionKind, DataArgs, ErrorKind, FitKind, LimitingArgs, ModelArgs, PerturbArgs, PowerArgs,
    TestArgs, ThetaKind,
};
use crate::error::CliError;
use crate::report::{config_hash, write_json};

pub type Outcome = Result<(String, Value), CliError>;

struct Input {
    loaded: Loaded,
    sensitive_name: String,
}

fn load(args: &DataArgs) -> Result<Input, CliError> {
    let mut schema = Schema::from_file(&args.schema).map_err(|e| match e {
        wpfair::Error::Io(io) => CliError::io(&args.schema, io),
        other => other.into(),
    })?;
    if let Some(spec) = &args.sensitive {
        let (column, rule) = match spec.split_once('=') {
            Some((c, level)) => (c.trim(), SensitiveRule::Reference(level.trim().to_string())),
            None => match schema.column(spec).map(|c| &c.kind) {
                Some(ColumnKind::SensitiveBinary(rule)) => (spec.as_str(), rule.clone()),
                _ => {
                    return Err(CliError::Usage(format!(
                        "--sensitive {spec}: the schema gives no rule for this column, use {spec}=LEVEL"
                    )))
                }
            },
        };
        schema = schema.with_sensitive(column, rule)?;
    }
    if let Some(column) = &args.split_median {
        schema = schema.with_sensitive(column, SensitiveRule::AboveMedian)?;
    }
    if !args.data.exists() {
        return Err(CliError::io(&args.data, std::io::ErrorKind::NotFound.into()));
    }
    let sensitive_name = schema.sensitive().0.name.clone();
    Ok(Input {
        loaded: load_csv(&args.data, &schema)?,
        sensitive_name,
    })
}

fn model(args: &ModelArgs, ds: &Dataset) -> Result<LinearModel, CliError> {
    if let Some(path) = &args.model_file {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m: LinearModel = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: not a model file: {e}", path.display())))?;
        if m.rho.len() != ds.dim() {
            return Err(CliError::Usage(format!(
                "model has {} coefficients but the data has {} features",
                m.rho.len(),
                ds.dim()
            )));
        }
        return Ok(m);
    }
    let method = match args.fit.expect("clap requires a model source") {
        FitKind::Ols => FitMethod::Ols,
        FitKind::Ridge => FitMethod::Ridge(args.lambda),
        FitKind::Lasso => FitMethod::Lasso(args.lambda),
    };
    Ok(fit(ds.features(), ds.labels(), &FitConfig::new(method))?)
}

fn criterion(args: &CriterionArgs) -> Result<(FairnessCriterion, CostParams), CliError> {
    let e = match args.error {
        ErrorKind::Absolute => ErrorFn::Absolute,
        ErrorKind::Squared => ErrorFn::Squared,
    };
    let base = match args.criterion {
        CriterionKind::EqualMean => FairnessCriterion::equal_mean(),
        CriterionKind::AccuracyParity => FairnessCriterion::accuracy_parity(e),
        CriterionKind::BoundedLoss => {
            let (e0, e1) = args
                .tolerance
                .ok_or_else(|| CliError::Usage("bounded-loss needs --tolerance e0,e1".into()))?;
            FairnessCriterion::bounded_group_loss(e, e0, e1)
        }
    };
    let crit = match args.tolerance {
        Some((eps0, eps1)) => base.with_mode(Mode::Tolerance { eps0, eps1 }),
        None => base,
    };
    crit.validate()?;
    let beta = args
        .beta
        .unwrap_or(if crit.discrepancy.is_label_free() { 0.0 } else { 1.0 });
    let cost = CostParams::new(args.alpha, beta);
    cost.validate(&crit)?;
    Ok((crit, cost))
}

fn theta_form(k: ThetaKind) -> ThetaForm {
    match k {
        ThetaKind::SecondMoment => ThetaForm::SecondMoment,
        ThetaKind::Centered => ThetaForm::Centered,
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn data_summary(input: &Input) -> Value {
    let ds = &input.loaded.dataset;
    let (n0, n1) = ds.group_counts();
    json!({
        "n": ds.len(),
        "dropped_rows": input.loaded.dropped_rows,
        "features": ds.feature_names(),
        "label": input.loaded.label_name,
        "sensitive": input.sensitive_name,
        "group_sizes": [n0, n1],
    })
}

pub fn test(args: &TestArgs) -> Outcome {
    let hash = config_hash(args, &input_files(&args.data, &args.model))?;
    let input = load(&args.data)?;
    let ds = &input.loaded.dataset;
    let m = model(&args.model, ds)?;
    let (crit, cost) = criterion(&args.criterion)?;
    let cfg = TestConfig {
        criterion: crit,
        cost,
        solver: SolverOptions::default(),
        theta_form: theta_form(args.theta),
        force_dual: args.criterion.force_dual,
    };
    let r = run_test(ds, &m, &cfg)?;
    let permutation_p = if args.baseline {
        let perm = PermutationConfig {
            n_permutations: args.permutations,
            seed: args.seed,
            ..Default::default()
        };
        Some(permutation_test(ds, &m, &crit, &perm)?)
    } else {
        None
    };
    let results = json!({
        "data": data_summary(&input),
        "model": m,
        "criterion": crit,
        "cost": cost,
        "statistic": r.statistic,
        "scaled_statistic": r.scaled_statistic,
        "theta": r.theta,
        "theta_form": args.theta,
        "p_value": r.p_value,
        "level": args.level,
        "reject": r.p_value <= args.level,
        "conservative": r.conservative,
        "violation": r.violation,
        "method": r.method,
        "diagnostics": r.diagnostics,
        "relative_mae": relative_mae(&m, ds.features(), ds.labels())?,
        "permutation_p_value": permutation_p,
    });
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_json(&out.join("results.json"), &results)?;
        write_json(&out.join("model.json"), &m)?;
    }
    Ok((hash, results))
}

fn input_files<'a>(data: &'a DataArgs, model: &'a ModelArgs) -> Vec<&'a Path> {
    let mut files = vec![data.data.as_path(), data.schema.as_path()];
    files.extend(model.model_file.as_deref());
    files
}

pub fn perturb(args: &PerturbArgs) -> Outcome {
    let hash = config_hash(args, &input_files(&args.data, &args.model))?;
    let input = load(&args.data)?;
    let ds = &input.loaded.dataset;
    let m = model(&args.model, ds)?;
    let (crit, cost) = criterion(&args.criterion)?;
    let r = wpfair::perturb(ds, &m, &crit, cost, args.eta, &SolverOptions::default(), args.force_generic)?;
    let repaired = r.dataset(ds)?;
    let ranking = rank_features(&m, ds, &r)?;

    ensure_dir(&args.out)?;
    let path = args.out.join("perturbed.csv");
    let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    write_dataset_csv(BufWriter::new(file), &repaired, &input.sensitive_name, &input.loaded.label_name)?;
    let path = args.out.join("ranking.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for row in &ranking.rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;

    let results = json!({
        "data": data_summary(&input),
        "model": m,
        "criterion": crit,
        "cost": cost,
        "eta": r.eta,
        "gamma_star": r.gamma_star,
        "violation_before": r.violation_before,
        "violation_after": r.violation_after,
        "total_displacement": r.total_displacement(),
        "relative_mae_before": relative_mae(&m, ds.features(), ds.labels())?,
        "relative_mae_after": relative_mae(&m, &r.features_eta, ds.labels())?,
        "top_feature": ranking.top(),
        "ranking": ranking.rows,
        "files": ["perturbed.csv", "ranking.csv"],
    });
    write_json(&args.out.join("results.json"), &results)?;
    Ok((hash, results))
}

fn power_grid(args: &PowerArgs) -> Result<Vec<SimConfig>, CliError> {
    let grid: Vec<SimConfig> = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: not a simulation grid: {e}", path.display())))?
        }
        None => {
            let mut g = Vec::new();
            for &n_total in &args.n {
                for &effect in &args.effect {
                    for &alpha in &args.level {
                        g.push(SimConfig {
                            n_total,
                            effect,
                            alpha,
                            n_trials: args.trials,
                            seed: args.seed,
                            p0: args.p0,
                        });
                    }
                }
            }
            g
        }
    };
    if grid.is_empty() {
        return Err(CliError::Usage("the simulation grid is empty".into()));
    }
    for cfg in &grid {
        cfg.validate().map_err(|e| CliError::Usage(format!("bad grid entry: {e}")))?;
        if cfg.n_trials == 0 {
            return Err(CliError::Usage("bad grid entry: n_trials must be positive".into()));
        }
    }
    Ok(grid)
}

#[derive(Serialize)]
struct TidyRow {
    n: usize,
    effect: f64,
    alpha: f64,
    method: &'static str,
    power: f64,
    specificity: f64,
}

fn tidy(rows: &[PowerRow]) -> Vec<TidyRow> {
    rows.iter()
        .flat_map(|r| {
            [
                TidyRow {
                    n: r.n,
                    effect: r.effect,
                    alpha: r.alpha,
                    method: "wproj",
                    power: r.power_wproj,
                    specificity: r.specificity_wproj,
                },
                TidyRow {
                    n: r.n,
                    effect: r.effect,
                    alpha: r.alpha,
                    method: "permutation",
                    power: r.power_perm,
                    specificity: r.specificity_perm,
                },
            ]
        })
        .collect()
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One file per panel: power against n, effect and level, and specificity
/// against level. Rows are sorted so the x-axis varies fastest.
fn write_panels(dir: &Path, rows: &[TidyRow]) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Curve<'a> {
        series: String,
        method: &'a str,
        x: f64,
        y: f64,
    }
    let panel = |name: &str, series: &dyn Fn(&TidyRow) -> String, x: &dyn Fn(&TidyRow) -> f64, y: &dyn Fn(&TidyRow) -> f64| {
        let mut pts: Vec<Curve> = rows
            .iter()
            .map(|r| Curve {
                series: series(r),
                method: r.method,
                x: x(r),
                y: y(r),
            })
            .collect();
        pts.sort_by(|a, b| {
            (a.method, &a.series)
                .cmp(&(b.method, &b.series))
                .then(a.x.total_cmp(&b.x))
        });
        pts.dedup_by(|a, b| a.method == b.method && a.series == b.series && a.x == b.x);
        write_csv(&dir.join(name), &pts)
    };
    panel(
        "panel_a_power_vs_n.csv",
        &|r| format!("effect={} alpha={}", r.effect, r.alpha),
        &|r| r.n as f64,
        &|r| r.power,
    )?;
    panel(
        "panel_b_power_vs_effect.csv",
        &|r| format!("n={} alpha={}", r.n, r.alpha),
        &|r| r.effect,
        &|r| r.power,
    )?;
    panel(
        "panel_c_power_vs_alpha.csv",
        &|r| format!("n={} effect={}", r.n, r.effect),
        &|r| r.alpha,
        &|r| r.power,
    )?;
    // specificity does not depend on the effect size
    panel(
        "panel_d_specificity_vs_alpha.csv",
        &|r| format!("n={}", r.n),
        &|r| r.alpha,
        &|r| r.specificity,
    )
}

pub fn power(args: &PowerArgs) -> Outcome {
    let files: Vec<&Path> = args.config.as_deref().into_iter().collect();
    let hash = config_hash(args, &files)?;
    let grid = power_grid(args)?;
    let opts = ExperimentOptions {
        n_permutations: args.permutations,
        theta_form: theta_form(args.theta),
    };
    if opts.n_permutations == 0 {
        return Err(CliError::Usage("--permutations must be positive".into()));
    }
    let result = power_specificity_experiment(&grid, &opts)?;
    let results = json!({
        "grid": grid,
        "n_permutations": args.permutations,
        "theta_form": args.theta,
        "rows": result.rows,
    });
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        let rows = tidy(&result.rows);
        write_csv(&out.join("power.csv"), &rows)?;
        if args.plot_data {
            write_panels(out, &rows)?;
        }
        write_json(&out.join("results.json"), &results)?;
    }
    Ok((hash, results))
}

pub fn limiting(args: &LimitingArgs) -> Outcome {
    let hash = config_hash(args, &[])?;
    if args.n < 100 || args.reps < 100 {
        return Err(CliError::Usage(format!(
            "need --n >= 100 and --reps >= 100, got {} and {}",
            args.n, args.reps
        )));
    }
    let r = validate_limiting(args.n, args.reps, args.seed, theta_form(args.theta))?;
    let mean = r.samples.iter().sum::<f64>() / r.samples.len() as f64;
    let results = json!({
        "n": args.n,
        "reps": args.reps,
        "seed": args.seed,
        "theta_form": args.theta,
        "ks_distance": r.ks_distance,
        "sample_mean": mean,
    });
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        #[derive(Serialize)]
        struct Sample {
            scaled_statistic: f64,
        }
        let rows: Vec<Sample> = r.samples.iter().map(|&s| Sample { scaled_statistic: s }).collect();
        write_csv(&out.join("samples.csv"), &rows)?;
        write_json(&out.join("results.json"), &results)?;
    }
    Ok((hash, results))
}
