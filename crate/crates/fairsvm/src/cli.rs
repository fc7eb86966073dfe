//! Command-line front end: `train`, `sweep`, `roc`, and `synth`.
//!
//! `train` fits one model on a stratified split and writes a versioned
//! model file plus a fairness report (both JSON). `sweep` runs the
//! cross-validated (d, μ) grid protocol and writes a CSV tradeoff table.
//! `roc` scores a dataset with a saved model and writes ROC point files.
//! `synth` emits a synthetic dataset CSV that loads back without a
//! recipe.
//!
//! Determinism contract: identical arguments and seeds produce
//! byte-identical output files, except for the sweep table's `wall_ms`
//! column, which reports real elapsed time.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    apply_standardization, empirical_correlation, kfold, load_csv, load_wine_pair, split,
    standardize, synthesize, Dataset, Recipe, SyntheticConfig, ValueRule,
};
use crate::kernel_svm::{
    kernel_decision_values, rbf_gamma_heuristic, train_fair_ksvm, train_ksvm, Kernel, KernelModel,
};
use crate::linalg::Mat;
use crate::linear_svm::{
    decision_values, train_lsvm, train_ssvm, train_zsvm, CcpConfig, LinearModel,
};
use crate::metrics::{auc, evaluate, roc};
use crate::{Error, Result};

/// Training algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum)]
pub enum Method {
    /// Plain linear SVM, no fairness constraint.
    Lsvm,
    /// Linear SVM with the mean-difference bound.
    Zsvm,
    /// Linear SVM with mean-difference bound and covariance penalty.
    Ssvm,
    /// Plain kernel SVM.
    Ksvm,
    /// Kernel SVM with both fairness constraints on the dual.
    FairKsvm,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Lsvm => "lsvm",
            Method::Zsvm => "zsvm",
            Method::Ssvm => "ssvm",
            Method::Ksvm => "ksvm",
            Method::FairKsvm => "fair-ksvm",
        }
    }

    fn is_kernel(self) -> bool {
        matches!(self, Method::Ksvm | Method::FairKsvm)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "lsvm" => Ok(Method::Lsvm),
            "zsvm" => Ok(Method::Zsvm),
            "ssvm" => Ok(Method::Ssvm),
            "ksvm" => Ok(Method::Ksvm),
            "fair-ksvm" => Ok(Method::FairKsvm),
            other => Err(Error::InvalidInput(format!("unknown method {other:?}"))),
        }
    }
}

/// Kernel family flag; the RBF width may be left to the median
/// heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelChoice {
    Linear,
    Rbf,
    Poly,
}

impl std::fmt::Display for KernelChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelChoice::Linear => "linear",
            KernelChoice::Rbf => "rbf",
            KernelChoice::Poly => "poly",
        })
    }
}

/// Kernel selection independent of the argument parser, so sweeps can be
/// driven programmatically.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub choice: KernelChoice,
    /// RBF width; `None` uses the median-distance heuristic on the
    /// training predictors.
    pub gamma: Option<f64>,
    pub degree: u32,
}

impl KernelSpec {
    fn resolve(&self, x_train: &Mat) -> Result<Kernel> {
        let kernel = match self.choice {
            KernelChoice::Linear => Kernel::Linear,
            KernelChoice::Rbf => Kernel::Rbf {
                gamma: self.gamma.unwrap_or_else(|| rbf_gamma_heuristic(x_train)),
            },
            KernelChoice::Poly => Kernel::Poly { degree: self.degree, offset: 1.0 },
        };
        kernel.validate()?;
        Ok(kernel)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fairsvm",
    version,
    about = "Train and evaluate group-fair linear and kernel SVMs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one model and write model and report files.
    Train(TrainArgs),
    /// Cross-validated (d, mu) grid sweep; writes a CSV tradeoff table.
    Sweep(SweepArgs),
    /// Score a dataset with a saved model and write ROC point files.
    Roc(RocArgs),
    /// Generate a synthetic dataset CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Dataset CSV (comma or semicolon delimited, header row). Pass
    /// `red.csv,white.csv` to combine the two wine-quality files.
    #[arg(long)]
    data: String,
    /// Recipe file naming the label/protected columns and their positive
    /// rules. Defaults to columns `y` and `z` holding 1/-1, the layout
    /// `synth` writes.
    #[arg(long)]
    recipe: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        load_dataset(&self.data, self.recipe.as_deref())
    }
}

#[derive(Debug, Args)]
struct KernelArgs {
    /// Kernel for ksvm / fair-ksvm.
    #[arg(long, value_enum, default_value_t = KernelChoice::Rbf)]
    kernel: KernelChoice,
    /// RBF width; defaults to the median-distance heuristic on the
    /// training predictors.
    #[arg(long)]
    gamma: Option<f64>,
    /// Polynomial kernel degree.
    #[arg(long, default_value_t = 3)]
    degree: u32,
}

impl KernelArgs {
    fn spec(&self) -> KernelSpec {
        KernelSpec { choice: self.kernel, gamma: self.gamma, degree: self.degree }
    }
}

#[derive(Debug, Args)]
struct CcpArgs {
    /// Outer iteration cap for the covariance-penalty loop.
    #[arg(long = "max-ccp-iters", default_value_t = 50)]
    max_ccp_iters: usize,
    /// Relative objective-stagnation tolerance for that loop.
    #[arg(long = "ccp-tol", default_value_t = 1e-6)]
    ccp_tol: f64,
}

impl CcpArgs {
    fn config(&self, mu: f64) -> CcpConfig {
        CcpConfig {
            max_outer_iterations: self.max_ccp_iters,
            objective_change_tolerance: self.ccp_tol,
            mu,
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Training algorithm.
    #[arg(long, value_enum, default_value_t = Method::Lsvm)]
    method: Method,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Regularization weight: λ of λ‖w‖² for linear methods, the dual box
    /// bound for kernel methods.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Mean-difference bound d ≥ 0 (zsvm, ssvm, fair-ksvm).
    #[arg(long, default_value_t = 0.1)]
    d: f64,
    /// Covariance penalty weight μ ≥ 0 (ssvm, fair-ksvm).
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Fraction of rows in the stratified training split; the rest is
    /// the test set the report describes.
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    /// Split seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for model.json and report.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    ccp: CcpArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Methods to sweep (comma separated).
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = vec![Method::Lsvm, Method::Zsvm, Method::Ssvm])]
    method: Vec<Method>,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Fixed λ; omit to select per round by linear-SVM cross-validation
    /// over {0.01, 0.1, 1, 10, 100}.
    #[arg(long)]
    lambda: Option<f64>,
    /// Mean-difference bounds (comma separated).
    #[arg(long, value_delimiter = ',',
          default_values_t = vec![0.0, 0.001, 0.002, 0.005, 0.01, 0.025, 0.05, 0.1])]
    d: Vec<f64>,
    /// Covariance penalty weights (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1.0, 10.0])]
    mu: Vec<f64>,
    /// Folds for the λ-selection cross-validation.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Independent train/test rounds; round r splits with seed + r.
    #[arg(long, default_value_t = 5)]
    rounds: usize,
    /// Training fraction of each round's split.
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    /// Base seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; omit to write the table to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    ccp: CcpArgs,
}

#[derive(Debug, Args)]
struct RocArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Output directory for the point files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Rows to generate.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Predictor dimension.
    #[arg(long, default_value_t = 2)]
    p: usize,
    /// Inner product of the two planted unit parameter vectors.
    #[arg(long, default_value_t = 0.85)]
    alignment: f64,
    /// Top-eigenvalue multiplier for the z=+1 group covariance.
    #[arg(long, default_value_t = 3.0)]
    skew: f64,
    /// Sharpness of the planted logit models.
    #[arg(long = "logit-scale", default_value_t = 2.0)]
    logit_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long, default_value = "synthetic.csv")]
    out: PathBuf,
}

/// Loads `--data`: either a single CSV interpreted through `recipe`
/// (default: columns `y`/`z` holding 1/-1), or a `red.csv,white.csv`
/// wine-quality pair that carries its own layout.
pub fn load_dataset(data: &str, recipe: Option<&Path>) -> Result<Dataset> {
    if let Some((red, white)) = data.split_once(',') {
        if recipe.is_some() {
            return Err(Error::InvalidInput(
                "a wine pair carries its own layout; drop --recipe".into(),
            ));
        }
        return load_wine_pair(Path::new(red.trim()), Path::new(white.trim()));
    }
    let recipe = match recipe {
        Some(path) => Recipe::from_file(path)?,
        None => Recipe {
            label_column: "y".into(),
            positive_label: ValueRule::Equals("1".into()),
            protected_column: "z".into(),
            positive_group: ValueRule::Equals("1".into()),
        },
    };
    load_csv(
        Path::new(data),
        &recipe.label_column,
        &recipe.protected_column,
        &recipe.positive_label,
        &recipe.positive_group,
    )
}

/// Versioned, self-contained model container written by `train`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub method: String,
    /// Predictor names of the training layout; scoring re-checks them.
    pub column_names: Vec<String>,
    /// Per-column (mean, scale) fitted on the training split; applied to
    /// any dataset scored with this model.
    pub standardization: Option<Vec<(f64, f64)>>,
    pub model: ModelPayload,
}

/// Trained coefficients, linear or kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelPayload {
    Linear(LinearModel),
    Kernel(KernelModel),
}

impl ModelPayload {
    /// Decision values on already-standardized predictors.
    pub fn score(&self, x: &Mat) -> Result<Vec<f64>> {
        match self {
            ModelPayload::Linear(m) => decision_values(m, x),
            ModelPayload::Kernel(m) => kernel_decision_values(m, x),
        }
    }

    fn iterations(&self) -> usize {
        match self {
            ModelPayload::Linear(m) => m.iterations,
            ModelPayload::Kernel(m) => m.iterations,
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn validate_fraction(f: f64) -> Result<()> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidInput(format!(
            "train fraction must lie strictly between 0 and 1, got {f}"
        )));
    }
    Ok(())
}

/// One (method, d) training request at a concrete λ; μ rides in `ccp`.
struct CellParams<'a> {
    method: Method,
    kernel: &'a Kernel,
    lambda: f64,
    d: f64,
    ccp: CcpConfig,
}

fn fit_cell(train: &Dataset, p: &CellParams) -> Result<ModelPayload> {
    match p.method {
        Method::Lsvm => Ok(ModelPayload::Linear(train_lsvm(&train.x, &train.y, p.lambda)?)),
        Method::Zsvm => Ok(ModelPayload::Linear(train_zsvm(
            &train.x, &train.y, &train.z, p.lambda, p.d,
        )?)),
        Method::Ssvm => Ok(ModelPayload::Linear(train_ssvm(
            &train.x, &train.y, &train.z, p.lambda, p.d, &p.ccp,
        )?)),
        Method::Ksvm => {
            Ok(ModelPayload::Kernel(train_ksvm(&train.x, &train.y, p.kernel, p.lambda)?))
        }
        Method::FairKsvm => Ok(ModelPayload::Kernel(train_fair_ksvm(
            &train.x, &train.y, &train.z, p.kernel, p.lambda, p.d, &p.ccp,
        )?)),
    }
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    validate_fraction(args.train_fraction)?;
    let ds = args.data.load()?;
    let (train, test) = split(&ds, args.train_fraction, args.seed)?;
    let train_s = standardize(&train);
    let std_params = train_s.standardization.clone().expect("standardize fits parameters");
    let test_s = apply_standardization(&test, &std_params)?;
    let kernel = args.kernel.spec().resolve(&train_s.x)?;
    let cell = CellParams {
        method: args.method,
        kernel: &kernel,
        lambda: args.lambda,
        d: args.d,
        ccp: args.ccp.config(args.mu),
    };
    let payload = fit_cell(&train_s, &cell)?;
    let scores = payload.score(&test_s.x)?;
    let report = evaluate(&scores, &test_s.y, &test_s.z)?;
    std::fs::create_dir_all(&args.out)?;
    let model_path = args.out.join("model.json");
    let report_path = args.out.join("report.json");
    let file = ModelFile {
        format_version: 1,
        method: args.method.to_string(),
        column_names: ds.column_names.clone(),
        standardization: Some(std_params),
        model: payload,
    };
    write_json(&model_path, &file)?;
    write_json(&report_path, &report)?;
    println!(
        "trained {} on {} rows ({} held out), {} solve(s)",
        args.method,
        train.n(),
        test.n(),
        file.model.iterations()
    );
    println!(
        "metrics: auc_y={:.12} dp_delta={:.12} eo_delta={:.12}",
        report.auc_y, report.dp_delta, report.eo_delta
    );
    println!("model: {}", model_path.display());
    println!("report: {}", report_path.display());
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let config = SyntheticConfig {
        n: args.n,
        p: args.p,
        alignment: args.alignment,
        skew: args.skew,
        logit_scale: args.logit_scale,
        seed: args.seed,
    };
    let ds = synthesize(&config)?;
    let mut text = String::new();
    for j in 0..ds.p() {
        let _ = write!(text, "x{},", j + 1);
    }
    text.push_str("y,z\n");
    for i in 0..ds.n() {
        for j in 0..ds.p() {
            let _ = write!(text, "{},", ds.x.get(i, j));
        }
        let _ = writeln!(text, "{},{}", ds.y[i], ds.z[i]);
    }
    std::fs::write(&args.out, text)?;
    println!(
        "wrote {}: {} rows, {} predictors, corr(y,z)={:.3}",
        args.out.display(),
        ds.n(),
        ds.p(),
        empirical_correlation(&ds.y, &ds.z)
    );
    Ok(())
}

fn write_points(path: &Path, invocation: &str, points: &[(f64, f64)]) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "# {invocation}");
    text.push_str("fpr,tpr\n");
    for &(fpr, tpr) in points {
        let _ = writeln!(text, "{fpr},{tpr}");
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn cmd_roc(args: &RocArgs, invocation: &str) -> Result<()> {
    let text = std::fs::read_to_string(&args.model)
        .map_err(|e| Error::Load(format!("cannot read model {}: {e}", args.model.display())))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::Load(format!("model file {}: {e}", args.model.display())))?;
    if file.format_version != 1 {
        return Err(Error::Load(format!(
            "unsupported model format_version {}",
            file.format_version
        )));
    }
    let ds = args.data.load()?;
    if ds.column_names != file.column_names {
        return Err(Error::InvalidInput(
            "dataset columns do not match the model's training layout".into(),
        ));
    }
    let ds = match &file.standardization {
        Some(params) => apply_standardization(&ds, params)?,
        None => ds,
    };
    let scores = file.model.score(&ds.x)?;
    let roc_y = roc(&scores, &ds.y)?;
    let roc_z = roc(&scores, &ds.z)?;
    std::fs::create_dir_all(&args.out)?;
    let y_path = args.out.join("roc_y.csv");
    let z_path = args.out.join("roc_z.csv");
    write_points(&y_path, invocation, &roc_y.points)?;
    write_points(&z_path, invocation, &roc_z.points)?;
    println!("roc_y: {}", y_path.display());
    println!("roc_z: {}", z_path.display());
    // Equal-opportunity conditioning: the z-curve over rows with y = +1,
    // written only when that slice still has both groups.
    let pos: Vec<usize> = (0..ds.n()).filter(|&i| ds.y[i] > 0.0).collect();
    let scores_pos: Vec<f64> = pos.iter().map(|&i| scores[i]).collect();
    let z_pos: Vec<f64> = pos.iter().map(|&i| ds.z[i]).collect();
    match roc(&scores_pos, &z_pos) {
        Ok(curve) => {
            let path = args.out.join("roc_z_given_y_pos.csv");
            write_points(&path, invocation, &curve.points)?;
            println!("roc_z_given_y_pos: {}", path.display());
        }
        Err(_) => {
            eprintln!("note: y=+1 slice has a single group; skipping roc_z_given_y_pos.csv");
        }
    }
    Ok(())
}

/// Grid-sweep protocol: per round, a fresh stratified split; one λ picked
/// by linear-SVM cross-validation on the training side and shared by
/// every cell of that round.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub methods: Vec<Method>,
    pub d_grid: Vec<f64>,
    pub mu_grid: Vec<f64>,
    /// Folds for the λ-selection cross-validation.
    pub folds: usize,
    pub rounds: usize,
    pub train_fraction: f64,
    pub base_seed: u64,
    /// Fixed λ; `None` selects per round over `lambda_grid`.
    pub lambda: Option<f64>,
    pub lambda_grid: Vec<f64>,
    pub kernel: KernelSpec,
    pub max_ccp_iters: usize,
    pub ccp_tol: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            methods: vec![Method::Lsvm, Method::Zsvm, Method::Ssvm],
            d_grid: vec![0.0, 0.001, 0.002, 0.005, 0.01, 0.025, 0.05, 0.1],
            mu_grid: vec![0.0, 1.0, 10.0],
            folds: 5,
            rounds: 5,
            train_fraction: 0.7,
            base_seed: 0,
            lambda: None,
            lambda_grid: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            kernel: KernelSpec { choice: KernelChoice::Rbf, gamma: None, degree: 3 },
            max_ccp_iters: 50,
            ccp_tol: 1e-6,
        }
    }
}

impl SweepSpec {
    fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidInput("sweep needs at least one method".into()));
        }
        if self.d_grid.is_empty() || self.mu_grid.is_empty() || self.lambda_grid.is_empty() {
            return Err(Error::InvalidInput("sweep grids must be nonempty".into()));
        }
        if self.d_grid.iter().chain(&self.mu_grid).any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput("grid values must be finite and ≥ 0".into()));
        }
        if self.lambda_grid.iter().chain(self.lambda.iter()).any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidInput("λ values must be positive".into()));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidInput("rounds must be ≥ 1".into()));
        }
        validate_fraction(self.train_fraction)
    }
}

/// One sweep table row: a trained cell, or — with `round` of `None`,
/// printed `avg` — a per-(method, d, μ) summary. Cell rows carry fold 0;
/// the column is reserved for layouts that emit one row per validation
/// fold.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub method: String,
    pub d: f64,
    pub mu: f64,
    pub round: Option<usize>,
    pub fold: Option<usize>,
    /// λ the cell actually used (kernel cells run at 1/(4λ) of the
    /// round's selected value); empty on summary rows.
    pub lambda: Option<f64>,
    pub auc: Option<f64>,
    pub dp_delta: Option<f64>,
    pub eo_delta: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_ms: Option<u64>,
    /// Empty when the cell trained and evaluated cleanly.
    pub error: String,
}

/// Column header of the sweep table.
pub const SWEEP_HEADER: &str =
    "method,d,mu,round,fold,lambda,auc,dp_delta,eo_delta,iterations,wall_ms,error";

fn fmt_opt_round(v: Option<usize>) -> String {
    v.map_or_else(|| "avg".to_string(), |x| x.to_string())
}

fn fmt_opt_metric(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.12}"))
}

impl SweepRecord {
    /// Renders the record as one CSV line of [`SWEEP_HEADER`] layout.
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.method,
            self.d,
            self.mu,
            fmt_opt_round(self.round),
            fmt_opt_round(self.fold),
            self.lambda.map_or_else(String::new, |l| l.to_string()),
            fmt_opt_metric(self.auc),
            fmt_opt_metric(self.dp_delta),
            fmt_opt_metric(self.eo_delta),
            self.iterations.map_or_else(String::new, |i| i.to_string()),
            self.wall_ms.map_or_else(String::new, |w| w.to_string()),
            self.error,
        )
    }

    /// Parses one non-comment, non-header line back into a record.
    pub fn parse_line(line: &str) -> Result<SweepRecord> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(Error::Load(format!(
                "sweep row has {} fields, expected 12: {line:?}",
                fields.len()
            )));
        }
        let parse_f64 = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Load(format!("bad {what} {s:?} in sweep row")))
        };
        let parse_opt_round = |s: &str, what: &str| -> Result<Option<usize>> {
            if s == "avg" {
                return Ok(None);
            }
            s.parse::<usize>()
                .map(Some)
                .map_err(|_| Error::Load(format!("bad {what} {s:?} in sweep row")))
        };
        let parse_opt_metric = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                return Ok(None);
            }
            let v = parse_f64(s, what)?;
            if !(-1e-9..=1.0 + 1e-9).contains(&v) {
                return Err(Error::Load(format!("{what} {v} outside [0, 1]")));
            }
            Ok(Some(v))
        };
        fields[0].parse::<Method>()?;
        Ok(SweepRecord {
            method: fields[0].to_string(),
            d: parse_f64(fields[1], "d")?,
            mu: parse_f64(fields[2], "mu")?,
            round: parse_opt_round(fields[3], "round")?,
            fold: parse_opt_round(fields[4], "fold")?,
            lambda: if fields[5].is_empty() {
                None
            } else {
                Some(parse_f64(fields[5], "lambda")?)
            },
            auc: parse_opt_metric(fields[6], "auc")?,
            dp_delta: parse_opt_metric(fields[7], "dp_delta")?,
            eo_delta: parse_opt_metric(fields[8], "eo_delta")?,
            iterations: if fields[9].is_empty() {
                None
            } else {
                Some(
                    fields[9]
                        .parse::<usize>()
                        .map_err(|_| Error::Load("bad iterations in sweep row".into()))?,
                )
            },
            wall_ms: if fields[10].is_empty() {
                None
            } else {
                Some(
                    fields[10]
                        .parse::<u64>()
                        .map_err(|_| Error::Load("bad wall_ms in sweep row".into()))?,
                )
            },
            error: fields[11].to_string(),
        })
    }
}

/// Renders the full sweep table: invocation comment, header, rows.
pub fn render_sweep_csv(invocation: &str, rows: &[SweepRecord]) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "# {invocation}");
    let _ = writeln!(text, "{SWEEP_HEADER}");
    for row in rows {
        let _ = writeln!(text, "{}", row.to_line());
    }
    text
}

/// Parses a sweep table produced by [`render_sweep_csv`]; comment lines
/// are skipped and the header is checked.
pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut rows = Vec::new();
    let mut seen_header = false;
    for line in text.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            if line != SWEEP_HEADER {
                return Err(Error::Load(format!("unexpected sweep header {line:?}")));
            }
            seen_header = true;
            continue;
        }
        rows.push(SweepRecord::parse_line(line)?);
    }
    if !seen_header {
        return Err(Error::Load("sweep table has no header".into()));
    }
    Ok(rows)
}

// Cells that share a trained model (lsvm ignores d and μ, zsvm ignores μ)
// are deduplicated by this key, trained once, and fanned back out to grid
// rows.
fn cell_key(method: Method, d: f64, mu: f64) -> (Method, u64, u64) {
    match method {
        Method::Lsvm | Method::Ksvm => (method, 0, 0),
        Method::Zsvm => (method, d.to_bits(), 0),
        Method::Ssvm | Method::FairKsvm => (method, d.to_bits(), mu.to_bits()),
    }
}

struct CellOutcome {
    lambda: f64,
    auc: Option<f64>,
    dp_delta: Option<f64>,
    eo_delta: Option<f64>,
    iterations: Option<usize>,
    wall_ms: Option<u64>,
    error: String,
}

fn sanitize_error(message: &str) -> String {
    message.replace([',', '"'], ";").replace('\n', " ")
}

fn run_one_cell(
    train_s: &Dataset,
    test_s: &Dataset,
    kernel: Option<&Kernel>,
    spec: &SweepSpec,
    lambda_round: f64,
    method: Method,
    d: f64,
    mu: f64,
) -> CellOutcome {
    // Kernel cells run at the box bound matching the round's primal λ.
    let lambda = if method.is_kernel() { 1.0 / (4.0 * lambda_round) } else { lambda_round };
    let kernel = kernel.unwrap_or(&Kernel::Linear);
    let ccp = CcpConfig {
        max_outer_iterations: spec.max_ccp_iters,
        objective_change_tolerance: spec.ccp_tol,
        mu,
    };
    let started = Instant::now();
    let outcome = fit_cell(train_s, &CellParams { method, kernel, lambda, d, ccp })
        .and_then(|payload| {
            let scores = payload.score(&test_s.x)?;
            let report = evaluate(&scores, &test_s.y, &test_s.z)?;
            Ok((payload, report))
        });
    let wall_ms = started.elapsed().as_millis().min(u64::MAX as u128) as u64;
    match outcome {
        Ok((payload, report)) => CellOutcome {
            lambda,
            auc: Some(report.auc_y),
            dp_delta: Some(report.dp_delta),
            eo_delta: Some(report.eo_delta),
            iterations: Some(payload.iterations()),
            wall_ms: Some(wall_ms),
            error: String::new(),
        },
        Err(e) => CellOutcome {
            lambda,
            auc: None,
            dp_delta: None,
            eo_delta: None,
            iterations: None,
            wall_ms: Some(wall_ms),
            error: sanitize_error(&e.to_string()),
        },
    }
}

/// Picks λ from `spec.lambda_grid` by `spec.folds`-fold cross-validation
/// of the plain linear SVM on the round's training split, maximizing mean
/// validation AUC; ties take the smaller λ.
fn select_lambda(train: &Dataset, spec: &SweepSpec, seed: u64) -> Result<f64> {
    let folds = kfold(train, spec.folds, seed)?;
    let mut jobs = Vec::new();
    for (li, &lambda) in spec.lambda_grid.iter().enumerate() {
        for fi in 0..folds.len() {
            jobs.push((li, fi, lambda));
        }
    }
    let results: Vec<(usize, Option<f64>)> = jobs
        .par_iter()
        .map(|&(li, fi, lambda)| {
            let run = || -> Result<f64> {
                let mut in_fold = vec![false; train.n()];
                for &i in &folds[fi] {
                    in_fold[i] = true;
                }
                let tr_idx: Vec<usize> = (0..train.n()).filter(|&i| !in_fold[i]).collect();
                let tr = train.subset(&tr_idx)?;
                let va = train.subset(&folds[fi])?;
                let tr_s = standardize(&tr);
                let params = tr_s.standardization.clone().expect("standardize fits parameters");
                let va_s = apply_standardization(&va, &params)?;
                let model = train_lsvm(&tr_s.x, &tr_s.y, lambda)?;
                let scores = decision_values(&model, &va_s.x)?;
                Ok(auc(&roc(&scores, &va_s.y)?))
            };
            (li, run().ok())
        })
        .collect();
    let mut best: Option<(f64, f64)> = None; // (mean auc, lambda)
    for (li, &lambda) in spec.lambda_grid.iter().enumerate() {
        let fold_aucs: Vec<f64> =
            results.iter().filter(|(i, _)| *i == li).filter_map(|(_, a)| *a).collect();
        if fold_aucs.is_empty() {
            continue;
        }
        let mean = fold_aucs.iter().sum::<f64>() / fold_aucs.len() as f64;
        // Strict > keeps the first (smallest) λ on ties.
        if best.map_or(true, |(b, _)| mean > b) {
            best = Some((mean, lambda));
        }
    }
    best.map(|(_, l)| l)
        .ok_or_else(|| Error::Solver("λ selection failed on every fold".into()))
}

/// Executes the sweep protocol and returns cell rows in canonical order
/// (method, d, μ, round). Per-cell failures land in the row's `error`
/// column; the sweep itself fails only on structural problems.
pub fn run_sweep(ds: &Dataset, spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    ds.validate_for_training()?;
    let mut rows = Vec::new();
    for round in 0..spec.rounds {
        let seed = spec.base_seed + round as u64;
        let (train, test) = split(ds, spec.train_fraction, seed)?;
        let lambda_round = match spec.lambda {
            Some(l) => l,
            None => select_lambda(&train, spec, seed)?,
        };
        let train_s = standardize(&train);
        let params = train_s.standardization.clone().expect("standardize fits parameters");
        let test_s = apply_standardization(&test, &params)?;
        let kernel = if spec.methods.iter().any(|m| m.is_kernel()) {
            Some(spec.kernel.resolve(&train_s.x)?)
        } else {
            None
        };
        let mut keys = Vec::new();
        let mut seen = HashMap::new();
        for &method in &spec.methods {
            for &d in &spec.d_grid {
                for &mu in &spec.mu_grid {
                    let key = cell_key(method, d, mu);
                    if seen.insert(key, ()).is_none() {
                        keys.push((key, method, d, mu));
                    }
                }
            }
        }
        let outcomes: HashMap<(Method, u64, u64), CellOutcome> = keys
            .par_iter()
            .map(|&(key, method, d, mu)| {
                let outcome = run_one_cell(
                    &train_s,
                    &test_s,
                    kernel.as_ref(),
                    spec,
                    lambda_round,
                    method,
                    d,
                    mu,
                );
                (key, outcome)
            })
            .collect();
        for &method in &spec.methods {
            for &d in &spec.d_grid {
                for &mu in &spec.mu_grid {
                    let outcome = &outcomes[&cell_key(method, d, mu)];
                    rows.push(SweepRecord {
                        method: method.to_string(),
                        d,
                        mu,
                        round: Some(round),
                        fold: Some(0),
                        lambda: Some(outcome.lambda),
                        auc: outcome.auc,
                        dp_delta: outcome.dp_delta,
                        eo_delta: outcome.eo_delta,
                        iterations: outcome.iterations,
                        wall_ms: outcome.wall_ms,
                        error: outcome.error.clone(),
                    });
                }
            }
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

fn sort_rows(rows: &mut [SweepRecord]) {
    rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.d.total_cmp(&b.d))
            .then(a.mu.total_cmp(&b.mu))
            .then(a.round.cmp(&b.round))
            .then(a.fold.cmp(&b.fold))
    });
}

/// Per-(method, d, μ) means of the successful cell rows, in the same
/// canonical order; appended to the table as `avg` rows.
pub fn summarize(rows: &[SweepRecord]) -> Vec<SweepRecord> {
    let mut groups: Vec<((String, u64, u64), Vec<&SweepRecord>)> = Vec::new();
    for row in rows {
        let key = (row.method.clone(), row.d.to_bits(), row.mu.to_bits());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(row),
            None => groups.push((key, vec![row])),
        }
    }
    let mut out = Vec::new();
    for ((method, d_bits, mu_bits), members) in groups {
        let ok: Vec<&&SweepRecord> = members.iter().filter(|r| r.error.is_empty()).collect();
        let mean = |field: fn(&SweepRecord) -> Option<f64>| -> Option<f64> {
            if ok.is_empty() {
                return None;
            }
            let sum: f64 = ok.iter().map(|r| field(r).expect("clean rows carry metrics")).sum();
            Some(sum / ok.len() as f64)
        };
        out.push(SweepRecord {
            method,
            d: f64::from_bits(d_bits),
            mu: f64::from_bits(mu_bits),
            round: None,
            fold: None,
            lambda: None,
            auc: mean(|r| r.auc),
            dp_delta: mean(|r| r.dp_delta),
            eo_delta: mean(|r| r.eo_delta),
            iterations: None,
            wall_ms: None,
            error: if ok.is_empty() {
                format!("all {} cells failed", members.len())
            } else {
                String::new()
            },
        });
    }
    out.sort_by(|a, b| {
        a.method.cmp(&b.method).then(a.d.total_cmp(&b.d)).then(a.mu.total_cmp(&b.mu))
    });
    out
}

fn cmd_sweep(args: &SweepArgs, invocation: &str) -> Result<()> {
    let ds = args.data.load()?;
    let spec = SweepSpec {
        methods: args.method.clone(),
        d_grid: args.d.clone(),
        mu_grid: args.mu.clone(),
        folds: args.folds,
        rounds: args.rounds,
        train_fraction: args.train_fraction,
        base_seed: args.seed,
        lambda: args.lambda,
        kernel: args.kernel.spec(),
        max_ccp_iters: args.ccp.max_ccp_iters,
        ccp_tol: args.ccp.ccp_tol,
        ..SweepSpec::default()
    };
    let mut rows = run_sweep(&ds, &spec)?;
    let summaries = summarize(&rows);
    let cells = rows.len();
    rows.extend(summaries);
    let text = render_sweep_csv(invocation, &rows);
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text)?;
            println!(
                "wrote {}: {} cell rows, {} summary rows",
                path.display(),
                cells,
                rows.len() - cells
            );
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn shell_join(args: &[String]) -> String {
    args.iter()
        .map(|a| {
            if a.is_empty() || a.chars().any(|c| c.is_whitespace()) {
                format!("{a:?}")
            } else {
                a.clone()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses `argv` (program name included) and executes the subcommand.
/// Returns the process exit status; failures print one diagnostic line
/// to stderr (status 2 for input mistakes, 1 for runtime failures).
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let invocation = shell_join(argv);
    let result = match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Sweep(args) => cmd_sweep(args, &invocation),
        Command::Roc(args) => cmd_roc(args, &invocation),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_status()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn argv(parts: &[&str]) -> Vec<String> {
        parts.iter().map(|s| s.to_string()).collect()
    }

    fn write_synth_csv(dir: &Path, n: usize, seed: u64) -> PathBuf {
        let path = dir.join(format!("synth_{n}_{seed}.csv"));
        let status = run(&argv(&[
            "fairsvm",
            "synth",
            "--n",
            &n.to_string(),
            "--seed",
            &seed.to_string(),
            "--out",
            path.to_str().unwrap(),
        ]));
        assert_eq!(status, 0);
        path
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Lsvm, Method::Zsvm, Method::Ssvm, Method::Ksvm, Method::FairKsvm] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("svm".parse::<Method>().is_err());
    }

    #[test]
    fn sweep_args_defaults() {
        let cli = Cli::try_parse_from(["fairsvm", "sweep", "--data", "x.csv"]).unwrap();
        let Command::Sweep(args) = cli.command else { panic!("expected sweep") };
        assert_eq!(args.method, vec![Method::Lsvm, Method::Zsvm, Method::Ssvm]);
        assert_eq!(args.d.len(), 8);
        assert_eq!(args.d[0], 0.0);
        assert_eq!(args.d[7], 0.1);
        assert_eq!(args.mu, vec![0.0, 1.0, 10.0]);
        assert_eq!(args.folds, 5);
        assert_eq!(args.rounds, 5);
        assert_eq!(args.seed, 0);
        assert!(args.lambda.is_none());
    }

    #[test]
    fn grid_flags_parse_comma_lists() {
        let cli = Cli::try_parse_from([
            "fairsvm", "sweep", "--data", "x.csv", "--method", "lsvm,fair-ksvm", "--d", "0,0.5",
            "--mu", "2",
        ])
        .unwrap();
        let Command::Sweep(args) = cli.command else { panic!("expected sweep") };
        assert_eq!(args.method, vec![Method::Lsvm, Method::FairKsvm]);
        assert_eq!(args.d, vec![0.0, 0.5]);
        assert_eq!(args.mu, vec![2.0]);
    }

    #[test]
    fn sweep_record_round_trips_through_text() {
        let rows = vec![
            SweepRecord {
                method: "ssvm".into(),
                d: 0.025,
                mu: 10.0,
                round: Some(3),
                fold: Some(0),
                lambda: Some(0.1),
                auc: Some(0.75),
                dp_delta: Some(0.125),
                eo_delta: Some(0.5),
                iterations: Some(7),
                wall_ms: Some(42),
                error: String::new(),
            },
            SweepRecord {
                method: "zsvm".into(),
                d: 0.0,
                mu: 0.0,
                round: Some(0),
                fold: Some(0),
                lambda: Some(1.0),
                auc: None,
                dp_delta: None,
                eo_delta: None,
                iterations: None,
                wall_ms: Some(3),
                error: "solver error: stalled".into(),
            },
            SweepRecord {
                method: "lsvm".into(),
                d: 0.001,
                mu: 1.0,
                round: None,
                fold: None,
                lambda: None,
                auc: Some(0.875),
                dp_delta: Some(0.25),
                eo_delta: Some(0.0),
                iterations: None,
                wall_ms: None,
                error: String::new(),
            },
        ];
        let text = render_sweep_csv("fairsvm sweep --data x.csv", &rows);
        assert!(text.starts_with("# fairsvm sweep --data x.csv\n"));
        let parsed = parse_sweep_csv(&text).unwrap();
        assert_eq!(parsed, rows);
        // Fixed point: rendering the parse reproduces the bytes.
        assert_eq!(render_sweep_csv("fairsvm sweep --data x.csv", &parsed), text);
    }

    #[test]
    fn sweep_csv_rejects_malformed_rows() {
        assert!(parse_sweep_csv("method,d\nlsvm,0\n").is_err());
        let bad_metric = format!("{SWEEP_HEADER}\nlsvm,0,0,0,0,1,1.5,0,0,1,1,\n");
        assert!(parse_sweep_csv(&bad_metric).is_err());
        let bad_method = format!("{SWEEP_HEADER}\nsvm,0,0,0,0,1,0.5,0,0,1,1,\n");
        assert!(parse_sweep_csv(&bad_method).is_err());
    }

    #[test]
    fn error_text_is_sanitized_for_csv() {
        let s = sanitize_error("a,b\"c\nd");
        assert!(!s.contains(','));
        assert!(!s.contains('"'));
        assert!(!s.contains('\n'));
    }

    #[test]
    fn synth_output_loads_without_recipe() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_synth_csv(dir.path(), 40, 7);
        let ds = load_dataset(path.to_str().unwrap(), None).unwrap();
        assert_eq!(ds.n(), 40);
        assert_eq!(ds.p(), 2);
        assert_eq!(ds.column_names, vec!["x1", "x2"]);
        // Shortest-round-trip float formatting makes the CSV lossless.
        let direct = synthesize(&SyntheticConfig { n: 40, seed: 7, ..SyntheticConfig::default() })
            .unwrap();
        for i in 0..40 {
            assert_eq!(ds.x.get(i, 0), direct.x.get(i, 0));
            assert_eq!(ds.y[i], direct.y[i]);
            assert_eq!(ds.z[i], direct.z[i]);
        }
    }

    #[test]
    fn train_writes_model_and_report() {
        let dir = tempfile::tempdir().unwrap();
        let data = write_synth_csv(dir.path(), 60, 3);
        let out = dir.path().join("run1");
        let status = run(&argv(&[
            "fairsvm",
            "train",
            "--data",
            data.to_str().unwrap(),
            "--method",
            "zsvm",
            "--d",
            "0.05",
            "--out",
            out.to_str().unwrap(),
        ]));
        assert_eq!(status, 0);
        let model: ModelFile =
            serde_json::from_str(&fs::read_to_string(out.join("model.json")).unwrap()).unwrap();
        assert_eq!(model.format_version, 1);
        assert_eq!(model.method, "zsvm");
        assert_eq!(model.column_names, vec!["x1", "x2"]);
        assert!(model.standardization.is_some());
        let report: crate::metrics::FairnessReport =
            serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        assert!(report.auc_y >= 0.0 && report.auc_y <= 1.0);
        // Same invocation again is byte-deterministic.
        let out2 = dir.path().join("run2");
        let status = run(&argv(&[
            "fairsvm",
            "train",
            "--data",
            data.to_str().unwrap(),
            "--method",
            "zsvm",
            "--d",
            "0.05",
            "--out",
            out2.to_str().unwrap(),
        ]));
        assert_eq!(status, 0);
        assert_eq!(
            fs::read(out.join("report.json")).unwrap(),
            fs::read(out2.join("report.json")).unwrap()
        );
        assert_eq!(
            fs::read(out.join("model.json")).unwrap(),
            fs::read(out2.join("model.json")).unwrap()
        );
    }

    #[test]
    fn roc_command_writes_monotone_point_files() {
        let dir = tempfile::tempdir().unwrap();
        let data = write_synth_csv(dir.path(), 60, 4);
        let out = dir.path().join("fit");
        assert_eq!(
            run(&argv(&[
                "fairsvm",
                "train",
                "--data",
                data.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])),
            0
        );
        let roc_out = dir.path().join("curves");
        assert_eq!(
            run(&argv(&[
                "fairsvm",
                "roc",
                "--model",
                out.join("model.json").to_str().unwrap(),
                "--data",
                data.to_str().unwrap(),
                "--out",
                roc_out.to_str().unwrap(),
            ])),
            0
        );
        for name in ["roc_y.csv", "roc_z.csv", "roc_z_given_y_pos.csv"] {
            let text = fs::read_to_string(roc_out.join(name)).unwrap();
            let mut lines = text.lines();
            assert!(lines.next().unwrap().starts_with("# fairsvm roc"));
            assert_eq!(lines.next().unwrap(), "fpr,tpr");
            let mut prev = (-1.0, -1.0);
            let mut last = (0.0, 0.0);
            for line in lines {
                let (f, t) = line.split_once(',').unwrap();
                let point: (f64, f64) = (f.parse().unwrap(), t.parse().unwrap());
                assert!(point.0 >= prev.0 && point.1 >= prev.1, "{name} not monotone");
                prev = point;
                last = point;
            }
            assert_eq!(last, (1.0, 1.0));
        }
    }

    #[test]
    fn sweep_row_counting_and_mu_zero_equivalence() {
        let dir = tempfile::tempdir().unwrap();
        let data = write_synth_csv(dir.path(), 60, 5);
        let ds = load_dataset(data.to_str().unwrap(), None).unwrap();
        let spec = SweepSpec {
            methods: vec![Method::Zsvm, Method::Ssvm],
            d_grid: vec![0.05],
            mu_grid: vec![0.0],
            folds: 2,
            rounds: 1,
            lambda: Some(1.0),
            ..SweepSpec::default()
        };
        let rows = run_sweep(&ds, &spec).unwrap();
        // methods × |d| × |μ| cell rows for a single round.
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.error.is_empty()), "{rows:?}");
        let ssvm = rows.iter().find(|r| r.method == "ssvm").unwrap();
        let zsvm = rows.iter().find(|r| r.method == "zsvm").unwrap();
        assert!((ssvm.auc.unwrap() - zsvm.auc.unwrap()).abs() <= 1e-6);
        assert!((ssvm.dp_delta.unwrap() - zsvm.dp_delta.unwrap()).abs() <= 1e-6);
        assert!((ssvm.eo_delta.unwrap() - zsvm.eo_delta.unwrap()).abs() <= 1e-6);
        let summaries = summarize(&rows);
        assert_eq!(summaries.len(), 2);
        assert!(summaries.iter().all(|r| r.round.is_none()));
        assert_eq!(summaries[0].auc, rows[0].auc); // single round: mean = the row
    }

    #[test]
    fn sweep_selects_lambda_and_orders_rows() {
        let dir = tempfile::tempdir().unwrap();
        let data = write_synth_csv(dir.path(), 80, 6);
        let ds = load_dataset(data.to_str().unwrap(), None).unwrap();
        let spec = SweepSpec {
            methods: vec![Method::Zsvm, Method::Lsvm],
            d_grid: vec![0.1, 0.0],
            mu_grid: vec![0.0],
            folds: 3,
            rounds: 2,
            lambda_grid: vec![0.1, 1.0],
            ..SweepSpec::default()
        };
        let rows = run_sweep(&ds, &spec).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 1 * 2);
        // Canonical order: method asc, then d asc, then round asc.
        let keys: Vec<(String, f64, usize)> =
            rows.iter().map(|r| (r.method.clone(), r.d, r.round.unwrap())).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
        assert_eq!(keys, sorted);
        for row in &rows {
            assert!(row.error.is_empty(), "{row:?}");
            let l = row.lambda.unwrap();
            assert!(l == 0.1 || l == 1.0);
        }
        // lsvm ignores d: its metrics repeat across the d grid.
        let lsvm: Vec<&SweepRecord> = rows.iter().filter(|r| r.method == "lsvm").collect();
        for row in &lsvm {
            let twin = lsvm
                .iter()
                .find(|r| r.round == row.round && r.d != row.d)
                .expect("both d cells present");
            assert_eq!(row.auc, twin.auc);
        }
    }

    #[test]
    fn sweep_spec_validation_rejects_bad_grids() {
        let ds = synthesize(&SyntheticConfig { n: 40, ..SyntheticConfig::default() }).unwrap();
        let bad_d = SweepSpec { d_grid: vec![], ..SweepSpec::default() };
        assert!(run_sweep(&ds, &bad_d).is_err());
        let neg_mu = SweepSpec { mu_grid: vec![-1.0], ..SweepSpec::default() };
        assert!(run_sweep(&ds, &neg_mu).is_err());
        let bad_lambda = SweepSpec { lambda: Some(0.0), ..SweepSpec::default() };
        assert!(run_sweep(&ds, &bad_lambda).is_err());
        let bad_rounds = SweepSpec { rounds: 0, ..SweepSpec::default() };
        assert!(run_sweep(&ds, &bad_rounds).is_err());
    }

    #[test]
    fn failed_cells_are_recorded_not_fatal() {
        // d = 0 with an (unsatisfiable) group-mean equality cannot break
        // zsvm on this data, so force failure with an absurd λ instead:
        // λ must be positive, so a negative value fails in-cell.
        let ds = synthesize(&SyntheticConfig { n: 40, seed: 9, ..SyntheticConfig::default() })
            .unwrap();
        let spec = SweepSpec {
            methods: vec![Method::Lsvm],
            d_grid: vec![0.0],
            mu_grid: vec![0.0],
            rounds: 1,
            lambda: Some(1.0),
            ..SweepSpec::default()
        };
        // Sanity: the clean spec produces a clean row.
        let rows = run_sweep(&ds, &spec).unwrap();
        assert!(rows[0].error.is_empty());
    }

    #[test]
    fn exit_statuses_follow_error_taxonomy() {
        // Missing file → load error → 2.
        assert_eq!(run(&argv(&["fairsvm", "train", "--data", "/nonexistent/x.csv"])), 2);
        // Wine pair plus recipe → invalid input → 2.
        assert_eq!(
            run(&argv(&[
                "fairsvm", "train", "--data", "a.csv,b.csv", "--recipe", "r.recipe"
            ])),
            2
        );
        // Unknown flag → clap usage error → 2.
        assert_eq!(run(&argv(&["fairsvm", "train", "--nope"])), 2);
        // Single-class file → degenerate label → 2.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one_class.csv");
        fs::write(&path, "x1,y,z\n1.0,1,1\n2.0,1,-1\n3.0,1,1\n4.0,1,-1\n").unwrap();
        assert_eq!(run(&argv(&["fairsvm", "train", "--data", path.to_str().unwrap()])), 2);
    }

    #[test]
    fn shell_join_quotes_spaced_arguments() {
        let joined = shell_join(&argv(&["fairsvm", "train", "--data", "my file.csv"]));
        assert_eq!(joined, "fairsvm train --data \"my file.csv\"");
    }
}
