//! Dataset ingestion, synthesis, standardization, and splitting.
//!
//! A [`Dataset`] couples a predictor matrix with a ±1 label vector `y`
//! and a ±1 protected-group vector `z`. CSV loading one-hot encodes
//! categorical predictors (full indicator set, no dropped category) and
//! maps the label/protected columns through caller-supplied
//! [`ValueRule`]s, usually read from a small `key = value` recipe file.
//!
//! All randomness flows through ChaCha12 seeded explicitly, so every
//! split, fold assignment, and synthetic draw is reproducible from its
//! seed alone.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, sample_covariance, sym_eig, Mat};
use crate::{Error, Result};

/// Immutable supervised dataset with a binary protected attribute.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    /// n×p predictor matrix.
    pub x: Mat,
    /// Labels, each −1 or +1, both values present.
    pub y: Vec<f64>,
    /// Protected group, each −1 or +1, both values present.
    pub z: Vec<f64>,
    /// One name per predictor column (indicators named `column=value`).
    pub column_names: Vec<String>,
    /// Per-column (mean, scale) when the predictors have been
    /// standardized; apply as (value − mean) / scale.
    pub standardization: Option<Vec<(f64, f64)>>,
}

impl Dataset {
    /// Validates lengths, the ±1 domains, finiteness, and that both
    /// labels and both groups are present.
    pub fn new(
        x: Mat,
        y: Vec<f64>,
        z: Vec<f64>,
        column_names: Vec<String>,
        standardization: Option<Vec<(f64, f64)>>,
    ) -> Result<Self> {
        let n = x.rows();
        if n == 0 {
            return Err(Error::InvalidInput("empty dataset".into()));
        }
        if y.len() != n || z.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} rows but {} labels and {} group values",
                n,
                y.len(),
                z.len()
            )));
        }
        if column_names.len() != x.cols() {
            return Err(Error::InvalidInput("column name count mismatch".into()));
        }
        if x.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite predictor value".into()));
        }
        if y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidInput("labels must be -1 or +1".into()));
        }
        if z.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidInput("groups must be -1 or +1".into()));
        }
        if !y.contains(&1.0) || !y.contains(&-1.0) {
            return Err(Error::DegenerateLabel("only one label value present".into()));
        }
        if !z.contains(&1.0) || !z.contains(&-1.0) {
            return Err(Error::DegenerateGroup("only one protected group present".into()));
        }
        Ok(Dataset { x, y, z, column_names, standardization })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// Extra conditions required before handing the data to a trainer.
    pub fn validate_for_training(&self) -> Result<()> {
        if self.n() < 4 {
            return Err(Error::InvalidInput(format!(
                "need at least 4 rows to train, got {}",
                self.n()
            )));
        }
        Ok(())
    }

    /// Row subset in the given index order; re-validates the result.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.iter().any(|&i| i >= self.n()) {
            return Err(Error::InvalidInput("subset index out of range".into()));
        }
        Dataset::new(
            self.x.select_rows(indices),
            indices.iter().map(|&i| self.y[i]).collect(),
            indices.iter().map(|&i| self.z[i]).collect(),
            self.column_names.clone(),
            self.standardization.clone(),
        )
    }
}

/// Maps a raw CSV cell to the positive class of a binary column.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueRule {
    /// +1 when the cell parses as a number ≥ the threshold.
    GreaterEq(f64),
    /// +1 when the trimmed cell equals the string exactly.
    Equals(String),
}

impl ValueRule {
    /// Parses `gte:<number>` or `equals:<text>`.
    pub fn parse(text: &str) -> Result<ValueRule> {
        let text = text.trim();
        if let Some(rest) = text.strip_prefix("gte:") {
            let v: f64 = rest
                .trim()
                .parse()
                .map_err(|_| Error::Load(format!("bad gte threshold {rest:?}")))?;
            Ok(ValueRule::GreaterEq(v))
        } else if let Some(rest) = text.strip_prefix("equals:") {
            Ok(ValueRule::Equals(rest.trim().to_string()))
        } else {
            Err(Error::Load(format!(
                "rule {text:?} must start with gte: or equals:"
            )))
        }
    }

    fn apply(&self, cell: &str, column: &str) -> Result<f64> {
        let cell = cell.trim();
        match self {
            ValueRule::GreaterEq(t) => {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::Load(format!("non-numeric value {cell:?} in column {column:?}"))
                })?;
                Ok(if v >= *t { 1.0 } else { -1.0 })
            }
            ValueRule::Equals(s) => Ok(if cell == s { 1.0 } else { -1.0 }),
        }
    }
}

/// Column choices and mapping rules for one CSV layout.
#[derive(Debug, Clone)]
pub struct Recipe {
    pub label_column: String,
    pub positive_label: ValueRule,
    pub protected_column: String,
    pub positive_group: ValueRule,
}

impl Recipe {
    /// Reads a `key = value` file with `#` comments. Required keys:
    /// label_column, positive_label, protected_column, positive_group.
    pub fn from_file(path: &Path) -> Result<Recipe> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Load(format!("cannot read recipe {}: {e}", path.display())))?;
        let mut label_column = None;
        let mut positive_label = None;
        let mut protected_column = None;
        let mut positive_group = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Load(format!("recipe line {} is not key = value", lineno + 1))
            })?;
            match key.trim() {
                "label_column" => label_column = Some(value.trim().to_string()),
                "positive_label" => positive_label = Some(ValueRule::parse(value)?),
                "protected_column" => protected_column = Some(value.trim().to_string()),
                "positive_group" => positive_group = Some(ValueRule::parse(value)?),
                other => {
                    return Err(Error::Load(format!("unknown recipe key {other:?}")));
                }
            }
        }
        Ok(Recipe {
            label_column: label_column.ok_or_else(|| Error::Load("recipe missing label_column".into()))?,
            positive_label: positive_label.ok_or_else(|| Error::Load("recipe missing positive_label".into()))?,
            protected_column: protected_column.ok_or_else(|| Error::Load("recipe missing protected_column".into()))?,
            positive_group: positive_group.ok_or_else(|| Error::Load("recipe missing positive_group".into()))?,
        })
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c == "NA" || c == "?"
}

fn sniff_delimiter(text: &str) -> u8 {
    let first = text.lines().next().unwrap_or("");
    let semis = first.matches(';').count();
    let commas = first.matches(',').count();
    if semis > commas {
        b';'
    } else {
        b','
    }
}

/// Loads a delimiter-separated file (comma or semicolon, auto-detected)
/// with a header row. Predictor columns that parse as numbers in every
/// row stay numeric; all others are one-hot encoded with one indicator
/// per distinct value (none dropped). Row order is preserved.
pub fn load_csv(
    path: &Path,
    label_column: &str,
    protected_column: &str,
    positive_label_rule: &ValueRule,
    positive_group_rule: &ValueRule,
) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Load(format!("cannot read {}: {e}", path.display())))?;
    load_csv_str(&text, label_column, protected_column, positive_label_rule, positive_group_rule)
}

/// [`load_csv`] over in-memory text; used directly by tests and by the
/// wine-pair combinator.
pub fn load_csv_str(
    text: &str,
    label_column: &str,
    protected_column: &str,
    positive_label_rule: &ValueRule,
    positive_group_rule: &ValueRule,
) -> Result<Dataset> {
    let delimiter = sniff_delimiter(text);
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Load(format!("bad header: {e}")))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Load(format!("unknown column {label_column:?}")))?;
    let protected_idx = headers
        .iter()
        .position(|h| h == protected_column)
        .ok_or_else(|| Error::Load(format!("unknown column {protected_column:?}")))?;
    if label_idx == protected_idx {
        return Err(Error::Load("label and protected columns must differ".into()));
    }

    let mut cells: Vec<Vec<String>> = Vec::new();
    for (rowno, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Load(format!("row {}: {e}", rowno + 2)))?;
        if record.len() != headers.len() {
            return Err(Error::Load(format!(
                "row {} has {} fields, header has {}",
                rowno + 2,
                record.len(),
                headers.len()
            )));
        }
        let row: Vec<String> = record.iter().map(|c| c.trim().to_string()).collect();
        for (ci, cell) in row.iter().enumerate() {
            if is_missing(cell) {
                return Err(Error::Load(format!(
                    "missing value at row {}, column {:?}",
                    rowno + 2,
                    headers[ci]
                )));
            }
        }
        cells.push(row);
    }
    if cells.is_empty() {
        return Err(Error::Load("no data rows".into()));
    }

    let mut y = Vec::with_capacity(cells.len());
    let mut z = Vec::with_capacity(cells.len());
    for row in &cells {
        y.push(positive_label_rule.apply(&row[label_idx], label_column)?);
        z.push(positive_group_rule.apply(&row[protected_idx], protected_column)?);
    }

    // Predictor encoding: numeric iff every cell parses.
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for ci in 0..headers.len() {
        if ci == label_idx || ci == protected_idx {
            continue;
        }
        let parsed: Option<Vec<f64>> = cells
            .iter()
            .map(|row| row[ci].parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        if let Some(values) = parsed {
            names.push(headers[ci].clone());
            columns.push(values);
        } else {
            let mut levels: Vec<&str> = Vec::new();
            for row in &cells {
                if !levels.contains(&row[ci].as_str()) {
                    levels.push(&row[ci]);
                }
            }
            for level in levels {
                names.push(format!("{}={}", headers[ci], level));
                columns.push(
                    cells
                        .iter()
                        .map(|row| if row[ci] == level { 1.0 } else { 0.0 })
                        .collect(),
                );
            }
        }
    }
    let n = cells.len();
    let p = columns.len();
    let mut x = Mat::zeros(n, p);
    for (j, col) in columns.iter().enumerate() {
        for i in 0..n {
            x.set(i, j, col[i]);
        }
    }
    Dataset::new(x, y, z, names, None)
}

/// Combines the two single-color wine-quality files (semicolon CSVs with
/// a `quality` column) into one dataset: quality ≥ 6 → y = +1, rows from
/// `white_path` get z = +1.
pub fn load_wine_pair(red_path: &Path, white_path: &Path) -> Result<Dataset> {
    let red = std::fs::read_to_string(red_path)
        .map_err(|e| Error::Load(format!("cannot read {}: {e}", red_path.display())))?;
    let white = std::fs::read_to_string(white_path)
        .map_err(|e| Error::Load(format!("cannot read {}: {e}", white_path.display())))?;
    let combined = combine_wine_texts(&red, &white)?;
    load_csv_str(
        &combined,
        "quality",
        "type",
        &ValueRule::GreaterEq(6.0),
        &ValueRule::Equals("white".into()),
    )
}

/// Appends a `type` column (red/white) and concatenates the two files.
fn combine_wine_texts(red: &str, white: &str) -> Result<String> {
    let mut out = String::new();
    let mut header: Option<String> = None;
    for (text, tag) in [(red, "red"), (white, "white")] {
        let mut lines = text.lines();
        let h = lines
            .next()
            .ok_or_else(|| Error::Load("empty wine file".into()))?;
        match &header {
            None => {
                header = Some(h.to_string());
                out.push_str(h);
                out.push_str(";type\n");
            }
            Some(prev) => {
                if prev != h {
                    return Err(Error::Load("wine file headers differ".into()));
                }
            }
        }
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            out.push_str(line);
            out.push(';');
            out.push_str(tag);
            out.push('\n');
        }
    }
    Ok(out)
}

/// Returns a copy whose predictor columns have mean 0 and standard
/// deviation 1 (population convention); constant columns become all
/// zeros. The fitted (mean, scale) pairs are stored on the result for
/// test-set application. Idempotent up to roundoff.
pub fn standardize(ds: &Dataset) -> Dataset {
    let n = ds.n();
    let p = ds.p();
    let mut params = Vec::with_capacity(p);
    let mut x = Mat::zeros(n, p);
    for j in 0..p {
        let mean = (0..n).map(|i| ds.x.get(i, j)).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (ds.x.get(i, j) - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        let scale = if sd > 1e-12 { sd } else { 1.0 };
        params.push((mean, scale));
        for i in 0..n {
            x.set(i, j, (ds.x.get(i, j) - mean) / scale);
        }
    }
    Dataset {
        x,
        y: ds.y.clone(),
        z: ds.z.clone(),
        column_names: ds.column_names.clone(),
        standardization: Some(params),
    }
}

/// Applies previously fitted standardization parameters (e.g. the
/// training set's) to another dataset with the same columns.
pub fn apply_standardization(ds: &Dataset, params: &[(f64, f64)]) -> Result<Dataset> {
    if params.len() != ds.p() {
        return Err(Error::InvalidInput(format!(
            "{} standardization parameters for {} columns",
            params.len(),
            ds.p()
        )));
    }
    let mut x = Mat::zeros(ds.n(), ds.p());
    for i in 0..ds.n() {
        for j in 0..ds.p() {
            let (mean, scale) = params[j];
            x.set(i, j, (ds.x.get(i, j) - mean) / scale);
        }
    }
    Ok(Dataset {
        x,
        y: ds.y.clone(),
        z: ds.z.clone(),
        column_names: ds.column_names.clone(),
        standardization: Some(params.to_vec()),
    })
}

/// The four (y, z) strata in a fixed order, each listing row indices.
fn strata(ds: &Dataset) -> Vec<Vec<usize>> {
    let mut buckets = vec![Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for i in 0..ds.n() {
        let key = match (ds.y[i] > 0.0, ds.z[i] > 0.0) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        buckets[key].push(i);
    }
    buckets
}

/// Stratified train/test split on the joint (y, z) strata. The train
/// size is round(train_fraction · n); per-stratum counts follow the
/// largest-remainder rule so each stratum is represented proportionally.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "train fraction must lie in (0,1), got {train_fraction}"
        )));
    }
    let n = ds.n();
    let total_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let buckets = strata(ds);
    let quotas: Vec<f64> = buckets.iter().map(|b| train_fraction * b.len() as f64).collect();
    let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut remaining = total_train.saturating_sub(take.iter().sum::<usize>());
    let mut order: Vec<usize> = (0..buckets.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &s in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        if take[s] < buckets[s].len() {
            take[s] += 1;
            remaining -= 1;
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (s, bucket) in buckets.iter().enumerate() {
        let mut shuffled = bucket.clone();
        shuffled.shuffle(&mut rng);
        train_idx.extend_from_slice(&shuffled[..take[s]]);
        test_idx.extend_from_slice(&shuffled[take[s]..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let train = ds.subset(&train_idx).map_err(stratification_error)?;
    let test = ds.subset(&test_idx).map_err(stratification_error)?;
    Ok((train, test))
}

fn stratification_error(e: Error) -> Error {
    match e {
        Error::DegenerateGroup(m) | Error::DegenerateLabel(m) => {
            Error::DegenerateGroup(format!("stratification impossible: {m}"))
        }
        other => other,
    }
}

/// Stratified k-fold assignment: returns k disjoint, covering index
/// sets. Rows are shuffled within each (y, z) stratum and dealt to folds
/// with a single rotating cursor, so fold sizes differ by at most one.
pub fn kfold(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = ds.n();
    if k < 2 || k > n {
        return Err(Error::InvalidInput(format!("k must lie in [2, {n}], got {k}")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut cursor = 0usize;
    for bucket in strata(ds) {
        let mut shuffled = bucket;
        shuffled.shuffle(&mut rng);
        for idx in shuffled {
            folds[cursor].push(idx);
            cursor = (cursor + 1) % k;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Configuration for the synthetic generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticConfig {
    /// Number of rows (≥ 10).
    pub n: usize,
    /// Predictor dimension.
    pub p: usize,
    /// Inner product between the two unit-norm logit parameter vectors,
    /// in [−1, 1].
    pub alignment: f64,
    /// Multiplier applied to the top eigenvalue of the z = +1 group's
    /// predictor covariance.
    pub skew: f64,
    /// Sharpness of both logit models; larger means labels follow the
    /// linear scores more deterministically.
    pub logit_scale: f64,
    /// Base-predictor variance along the label-exclusive direction (the
    /// unit vector in span{v_y, v_z} orthogonal to v_z). Values above 1
    /// concentrate label signal where the group-mean direction carries
    /// none, so fair models can keep accuracy; 1 leaves x isotropic.
    #[serde(default = "default_signal_var")]
    pub signal_var: f64,
    pub seed: u64,
}

fn default_signal_var() -> f64 {
    1.0
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n: 200,
            p: 2,
            alignment: 0.85,
            skew: 3.0,
            logit_scale: 2.0,
            signal_var: 1.0,
            seed: 0,
        }
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn unit_normal_vec(rng: &mut ChaCha12Rng, p: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// Draws a dataset where both labels follow logit models whose unit-norm
/// parameter vectors have the configured inner product, then inflates
/// the top eigenvalue of the z = +1 rows' covariance by the skew factor.
///
/// Deterministic for a fixed config. The label draw is retried with a
/// shifted seed in the (astronomically unlikely) event that a single
/// label or group value comes out; the retry count is part of the
/// deterministic output.
pub fn synthesize(config: &SyntheticConfig) -> Result<Dataset> {
    if config.n < 10 {
        return Err(Error::InvalidInput(format!("n must be ≥ 10, got {}", config.n)));
    }
    if config.p == 0 {
        return Err(Error::InvalidInput("p must be positive".into()));
    }
    if !(config.alignment >= -1.0 && config.alignment <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "alignment must lie in [-1,1], got {}",
            config.alignment
        )));
    }
    if !(config.skew > 0.0) || !(config.logit_scale >= 0.0) {
        return Err(Error::InvalidInput("skew must be > 0 and logit_scale ≥ 0".into()));
    }
    if !(config.signal_var > 0.0) || !config.signal_var.is_finite() {
        return Err(Error::InvalidInput(format!(
            "signal_var must be finite and > 0, got {}",
            config.signal_var
        )));
    }

    for attempt in 0..100u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(config.seed.wrapping_add(attempt));

        // Unit-norm parameter pair with exact inner product: v_z is a
        // Gram–Schmidt mix of v_y and an orthogonal unit vector.
        let v_y = unit_normal_vec(&mut rng, config.p);
        let v_z = if config.p == 1 {
            vec![if config.alignment >= 0.0 { v_y[0] } else { -v_y[0] }]
        } else {
            let mut w = unit_normal_vec(&mut rng, config.p);
            let proj = dot(&w, &v_y);
            for j in 0..config.p {
                w[j] -= proj * v_y[j];
            }
            let norm = dot(&w, &w).sqrt();
            if norm <= 1e-9 {
                continue; // w collinear with v_y; redraw
            }
            let a = config.alignment;
            let b = (1.0 - a * a).max(0.0).sqrt();
            (0..config.p).map(|j| a * v_y[j] + b * w[j] / norm).collect()
        };

        let mut x = Mat::zeros(config.n, config.p);
        for i in 0..config.n {
            for j in 0..config.p {
                x.set(i, j, StandardNormal.sample(&mut rng));
            }
        }
        let mut y = Vec::with_capacity(config.n);
        let mut z = Vec::with_capacity(config.n);
        for i in 0..config.n {
            let sy = sigmoid(config.logit_scale * dot(x.row(i), &v_y));
            y.push(if rng.gen_bool(sy) { 1.0 } else { -1.0 });
            let sz = sigmoid(config.logit_scale * dot(x.row(i), &v_z));
            z.push(if rng.gen_bool(sz) { 1.0 } else { -1.0 });
        }
        if !y.contains(&1.0) || !y.contains(&-1.0) || !z.contains(&1.0) || !z.contains(&-1.0) {
            continue;
        }

        // Inflate the z = +1 group's leading covariance direction:
        // scaling centered coordinates along the top eigenvector by
        // sqrt(skew) multiplies that eigenvalue by skew and leaves the
        // orthogonal complement unchanged.
        let plus_rows: Vec<usize> = (0..config.n).filter(|&i| z[i] > 0.0).collect();
        if plus_rows.len() >= 2 && config.skew != 1.0 {
            let block = x.select_rows(&plus_rows);
            let cov = sample_covariance(&block)?;
            let eig = sym_eig(&cov)?;
            let e = eig.vector(0);
            let mean = block.column_means();
            let factor = config.skew.sqrt() - 1.0;
            for &i in &plus_rows {
                let mut centered = vec![0.0; config.p];
                for j in 0..config.p {
                    centered[j] = x.get(i, j) - mean[j];
                }
                let along = dot(&centered, &e);
                for j in 0..config.p {
                    x.set(i, j, mean[j] + centered[j] + factor * along * e[j]);
                }
            }
        }

        let names = (0..config.p).map(|j| format!("x{}", j + 1)).collect();
        return Dataset::new(x, y, z, names, None);
    }
    Err(Error::InvalidInput(
        "synthetic draw degenerate after 100 attempts; raise n or logit_scale".into(),
    ))
}

/// Pearson correlation between two equal-length vectors.
pub fn empirical_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for i in 0..a.len() {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma).powi(2);
        vb += (b[i] - mb).powi(2);
    }
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}
