//! Small classifiers trained with cross-entropy plus a λ-weighted
//! information penalty, and sweeps over λ.
//!
//! Training uses full-batch or mini-batch Adam on standardized features.
//! The penalty is computed on the model's sigmoid output (not the
//! thresholded decision) so it stays differentiable. When the data come
//! from a catalog model, each trained classifier is also audited on the
//! enumerated joint with its thresholded decision as the output.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    cmi_binned_gradient, mi_gauss_gradient, uni_gauss_gradient, BinAssignment, BinningSpec, PenaltyValue,
};
use crate::measures::{decompose, DisparityReport, Roles};
use crate::scm::{enumerate, sample, scenario, Dataset, Enumeration, Scm};
use crate::tolerance::Tolerances;

/// Name given to the model's decision inside the enumerated joint.
pub const MODEL_OUTPUT: &str = "Yhat";
pub const DEFAULT_LAMBDAS: [f64; 6] = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0];
pub const MAX_HIDDEN_WIDTH: usize = 32;
const TRAIN_FRACTION: f64 = 0.8;
const PATIENCE: usize = 50;
const MIN_IMPROVEMENT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "x_prime")]
pub enum Regularizer {
    None,
    /// `Ĩ(Z;Ŷ)`.
    Mi,
    /// `Ĩ(Z;Ŷ) − min(Ĩ(Z;Ŷ), Ĩ(Z;X_c))`.
    Uniq,
    /// Binned `Ĩ(Z;Ŷ|X_c)`.
    Cmi,
    /// Binned `Ĩ(Z;Ŷ|X_c,X')`.
    CmiExtended(Vec<String>),
    /// Binned `Ĩ(Z;Ŷ|Y)`.
    Eo,
}

impl Regularizer {
    /// Parse `none`, `mi`, `uniq`, `cmi`, `eo` or `cmi_extended`; the last
    /// takes its extra conditioning columns from `x_prime`.
    pub fn parse(name: &str, x_prime: &[String]) -> Result<Regularizer> {
        match name.to_ascii_lowercase().as_str() {
            "none" => Ok(Regularizer::None),
            "mi" => Ok(Regularizer::Mi),
            "uniq" | "uni" => Ok(Regularizer::Uniq),
            "cmi" => Ok(Regularizer::Cmi),
            "cmi_extended" | "cmi-extended" | "cmi'" => {
                if x_prime.is_empty() {
                    Err(Error::Config("cmi_extended needs at least one x' column".into()))
                } else {
                    Ok(Regularizer::CmiExtended(x_prime.to_vec()))
                }
            }
            "eo" => Ok(Regularizer::Eo),
            other => Err(Error::Config(format!(
                "unknown regularizer `{other}`; expected none, mi, uniq, cmi, cmi_extended or eo"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::None => "none",
            Regularizer::Mi => "mi",
            Regularizer::Uniq => "uniq",
            Regularizer::Cmi => "cmi",
            Regularizer::CmiExtended(_) => "cmi_extended",
            Regularizer::Eo => "eo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelShape {
    Linear,
    Hidden { width: usize },
}

impl ModelShape {
    fn parameter_count(&self, inputs: usize) -> usize {
        match *self {
            ModelShape::Linear => inputs + 1,
            ModelShape::Hidden { width } => width * (inputs + 1) + width + 1,
        }
    }
}

/// Where training rows come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DataSource {
    /// A catalog model (or a model file), sampled with the run seed.
    Scenario { name: String, samples: usize },
    ScmFile { path: PathBuf, samples: usize },
    /// A CSV table with explicit roles. No causal audit is possible.
    Csv {
        path: PathBuf,
        protected: String,
        critical: Vec<String>,
        general: Vec<String>,
        label: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub source: DataSource,
    pub regularizer: Regularizer,
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub shape: ModelShape,
    pub bins: usize,
    pub threshold: f64,
}

impl TrainConfig {
    pub fn scenario(name: &str) -> TrainConfig {
        TrainConfig {
            source: DataSource::Scenario {
                name: name.to_string(),
                samples: 10_000,
            },
            regularizer: Regularizer::None,
            lambda: 0.0,
            learning_rate: 0.01,
            epochs: 150,
            batch_size: Some(500),
            seed: 0,
            shape: ModelShape::Hidden { width: 16 },
            bins: 8,
            threshold: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("λ must be finite and non-negative, got {}", self.lambda));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if let ModelShape::Hidden { width } = self.shape {
            if width == 0 || width > MAX_HIDDEN_WIDTH {
                return bad(format!("hidden width must lie in 1..={MAX_HIDDEN_WIDTH}, got {width}"));
            }
        }
        if self.batch_size == Some(0) {
            return bad("batch size must be at least 1".into());
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!("threshold must lie in (0, 1), got {}", self.threshold));
        }
        if self.bins < 2 {
            return bad(format!("bin count must be at least 2, got {}", self.bins));
        }
        Ok(())
    }
}

/// A trained (or freshly initialised) classifier with its input scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub shape: ModelShape,
    pub inputs: Vec<String>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub parameters: Vec<f64>,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Model {
    /// Small random weights; scaling fitted to `rows`.
    pub fn init(shape: ModelShape, inputs: Vec<String>, rows: &[Vec<f64>], seed: u64) -> Model {
        let k = inputs.len();
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; k];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x / n;
            }
        }
        let mut scale = vec![0.0; k];
        for r in rows {
            for ((s, x), m) in scale.iter_mut().zip(r).zip(&mean) {
                *s += (x - m) * (x - m) / n;
            }
        }
        let scale = scale.into_iter().map(|v| if v > 1e-12 { v.sqrt() } else { 1.0 }).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let bound = 1.0 / (k.max(1) as f64).sqrt();
        let parameters = (0..shape.parameter_count(k))
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Model {
            shape,
            inputs,
            mean,
            scale,
            parameters,
        }
    }

    fn standardize(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    fn hidden_width(&self) -> usize {
        match self.shape {
            ModelShape::Linear => 0,
            ModelShape::Hidden { width } => width,
        }
    }

    /// Logit for an already standardized row; hidden activations are left
    /// in `h` for [`Model::backprop`].
    fn logit(&self, params: &[f64], x: &[f64], h: &mut [f64]) -> f64 {
        let k = x.len();
        match self.shape {
            ModelShape::Linear => params[k] + x.iter().zip(params).map(|(a, w)| a * w).sum::<f64>(),
            ModelShape::Hidden { width } => {
                // Layout: W1 (width × k), b1 (width), w2 (width), b2.
                let (w1, rest) = params.split_at(width * k);
                let (b1, rest) = rest.split_at(width);
                let (w2, b2) = rest.split_at(width);
                let mut t = b2[0];
                for j in 0..width {
                    let row = &w1[j * k..(j + 1) * k];
                    let pre = b1[j] + row.iter().zip(x).map(|(w, a)| w * a).sum::<f64>();
                    h[j] = pre.tanh();
                    t += w2[j] * h[j];
                }
                t
            }
        }
    }

    /// Accumulate `s · ∂logit/∂θ` into `grad`.
    fn backprop(&self, params: &[f64], x: &[f64], h: &[f64], s: f64, grad: &mut [f64]) {
        let k = x.len();
        match self.shape {
            ModelShape::Linear => {
                for (gi, a) in grad.iter_mut().zip(x) {
                    *gi += s * a;
                }
                grad[k] += s;
            }
            ModelShape::Hidden { width } => {
                let w2 = &params[width * (k + 1)..width * (k + 2)];
                let (gw1, grest) = grad.split_at_mut(width * k);
                let (gb1, grest) = grest.split_at_mut(width);
                let (gw2, gb2) = grest.split_at_mut(width);
                gb2[0] += s;
                for j in 0..width {
                    gw2[j] += s * h[j];
                    let back = s * w2[j] * (1.0 - h[j] * h[j]);
                    gb1[j] += back;
                    for (g, a) in gw1[j * k..(j + 1) * k].iter_mut().zip(x) {
                        *g += back * a;
                    }
                }
            }
        }
    }

    /// Probability of the positive class for a raw feature row.
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let mut h = [0.0; MAX_HIDDEN_WIDTH];
        sigmoid(self.logit(&self.parameters, &self.standardize(row), &mut h))
    }

    pub fn decide(&self, row: &[f64], threshold: f64) -> f64 {
        f64::from(u8::from(self.predict_proba(row) >= threshold))
    }
}

/// Columns of a dataset arranged for training.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub feature_names: Vec<String>,
    pub critical: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub protected: Vec<f64>,
    pub label: Vec<f64>,
    /// Extra named columns available for conditioning.
    pub extra: Vec<(String, Vec<f64>)>,
}

impl TrainingData {
    /// Pull the named roles out of a dataset. Labels must be 0 or 1.
    pub fn from_dataset(
        data: &Dataset,
        protected: &str,
        critical: &[String],
        general: &[String],
        label: &str,
    ) -> Result<TrainingData> {
        let mut feature_names: Vec<String> = critical.to_vec();
        feature_names.extend(general.iter().cloned());
        let mut seen = std::collections::HashSet::new();
        for n in feature_names.iter().chain([&protected.to_string(), &label.to_string()]) {
            if !seen.insert(n.clone()) {
                return Err(Error::Binding(format!("`{n}` is bound to more than one role")));
            }
        }
        if feature_names.is_empty() {
            return Err(Error::Binding("at least one feature column is needed".into()));
        }
        let idx: Vec<usize> = feature_names.iter().map(|n| data.column_index(n)).collect::<Result<_>>()?;
        let label_col = data.column(label)?;
        if label_col.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::Binding(format!("label `{label}` must take values 0 and 1 only")));
        }
        let extra = data
            .columns
            .iter()
            .filter(|c| !seen.contains(*c))
            .map(|c| Ok((c.clone(), data.column(c)?)))
            .collect::<Result<_>>()?;
        Ok(TrainingData {
            features: data.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
            protected: data.column(protected)?,
            label: label_col,
            critical: critical.to_vec(),
            feature_names,
            extra,
        })
    }

    pub fn len(&self) -> usize {
        self.label.len()
    }

    pub fn is_empty(&self) -> bool {
        self.label.is_empty()
    }

    fn column(&self, name: &str) -> Result<Vec<f64>> {
        if let Some(i) = self.feature_names.iter().position(|n| n == name) {
            return Ok(self.features.iter().map(|r| r[i]).collect());
        }
        self.extra
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.clone())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    fn subset(&self, rows: std::ops::Range<usize>) -> TrainingData {
        TrainingData {
            feature_names: self.feature_names.clone(),
            critical: self.critical.clone(),
            features: self.features[rows.clone()].to_vec(),
            protected: self.protected[rows.clone()].to_vec(),
            label: self.label[rows.clone()].to_vec(),
            extra: self.extra.iter().map(|(n, c)| (n.clone(), c[rows.clone()].to_vec())).collect(),
        }
    }
}

enum PenaltyKind {
    None,
    Mi,
    Uniq(Vec<Vec<f64>>),
    Binned(BinAssignment),
}

/// Training loss on fixed data: mean cross-entropy plus `λ ·` penalty.
/// Exposed so gradients can be checked against finite differences.
pub struct Objective {
    model: Model,
    x: Vec<Vec<f64>>,
    z: Vec<f64>,
    y: Vec<f64>,
    lambda: f64,
    penalty: PenaltyKind,
}

impl Objective {
    pub fn new(model: &Model, data: &TrainingData, regularizer: &Regularizer, lambda: f64, bins: usize) -> Result<Objective> {
        let conditioning = |names: Vec<String>| -> Result<PenaltyKind> {
            if names.is_empty() {
                return Ok(PenaltyKind::Binned(BinAssignment::single(data.len())));
            }
            let cols: Vec<Vec<f64>> = names.iter().map(|n| data.column(n)).collect::<Result<_>>()?;
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let spec = BinningSpec::quantile(&names.iter().map(String::as_str).collect::<Vec<_>>(), bins);
            Ok(PenaltyKind::Binned(BinAssignment::fit(&refs, &spec)?))
        };
        let penalty = match regularizer {
            Regularizer::None => PenaltyKind::None,
            Regularizer::Mi => PenaltyKind::Mi,
            Regularizer::Uniq => {
                PenaltyKind::Uniq(data.critical.iter().map(|n| data.column(n)).collect::<Result<_>>()?)
            }
            Regularizer::Cmi => conditioning(data.critical.clone())?,
            Regularizer::CmiExtended(x_prime) => {
                let mut names = data.critical.clone();
                names.extend(x_prime.iter().cloned());
                conditioning(names)?
            }
            Regularizer::Eo => {
                let spec = BinningSpec::quantile(&["label"], bins);
                PenaltyKind::Binned(BinAssignment::fit(&[&data.label], &spec)?)
            }
        };
        Ok(Objective {
            x: data.features.iter().map(|r| model.standardize(r)).collect(),
            z: data.protected.clone(),
            y: data.label.clone(),
            model: model.clone(),
            lambda,
            penalty,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.model.parameters.len()
    }

    fn penalty_on(&self, p: &[f64], rows: Option<&[usize]>) -> Result<(PenaltyValue, Vec<f64>)> {
        let pick = |v: &[f64]| -> Vec<f64> { rows.map_or_else(|| v.to_vec(), |r| r.iter().map(|&i| v[i]).collect()) };
        let z = pick(&self.z);
        match &self.penalty {
            PenaltyKind::None => Ok((
                PenaltyValue {
                    value: 0.0,
                    per_bin: None,
                    warning: None,
                },
                vec![0.0; p.len()],
            )),
            PenaltyKind::Mi => mi_gauss_gradient(&z, p),
            PenaltyKind::Uniq(xc) => {
                let cols: Vec<Vec<f64>> = xc.iter().map(|c| pick(c)).collect();
                let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
                uni_gauss_gradient(&z, p, &refs)
            }
            PenaltyKind::Binned(cells) => match rows {
                None => cmi_binned_gradient(&z, p, cells),
                Some(r) => cmi_binned_gradient(&z, p, &cells.restrict(r)),
            },
        }
    }

    /// Loss, penalty and gradient with respect to the parameters, over the
    /// given rows (all rows when `None`).
    pub fn evaluate(&self, params: &[f64], rows: Option<&[usize]>) -> Result<(f64, PenaltyValue, Vec<f64>)> {
        let idx: Vec<usize> = rows.map_or_else(|| (0..self.y.len()).collect(), <[usize]>::to_vec);
        let n = idx.len() as f64;
        let width = self.model.hidden_width();
        let mut hidden = vec![0.0; idx.len() * width];
        let logits: Vec<f64> = idx
            .iter()
            .enumerate()
            .map(|(k, &i)| self.model.logit(params, &self.x[i], &mut hidden[k * width..(k + 1) * width]))
            .collect();
        let p: Vec<f64> = logits.iter().map(|&t| sigmoid(t)).collect();
        let mut ce = 0.0;
        for (&i, &t) in idx.iter().zip(&logits) {
            // log(1 + e^t) − y t, computed stably.
            ce += t.max(0.0) + (-t.abs()).exp().ln_1p() - self.y[i] * t;
        }
        ce /= n;
        let (penalty, dp) = self.penalty_on(&p, rows)?;
        let mut grad = vec![0.0; params.len()];
        for (k, &i) in idx.iter().enumerate() {
            let d = (p[k] - self.y[i]) / n + self.lambda * dp[k] * p[k] * (1.0 - p[k]);
            if d != 0.0 {
                let h = &hidden[k * width..(k + 1) * width];
                self.model.backprop(params, &self.x[i], h, d, &mut grad);
            }
        }
        Ok((ce + self.lambda * penalty.value, penalty, grad))
    }

    pub fn loss(&self, params: &[f64]) -> Result<f64> {
        Ok(self.evaluate(params, None)?.0)
    }

    pub fn gradient(&self, params: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate(params, None)?.2)
    }
}

/// One trained model and how it scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub lambda: f64,
    pub model: Option<Model>,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// Selected penalty on the training rows at the final parameters.
    pub penalty: Option<f64>,
    pub epochs_run: usize,
    pub converged: bool,
    pub m_ne_star: Option<f64>,
    pub causal: Option<DisparityReport>,
    pub error: Option<String>,
}

impl TrainRecord {
    fn failed(lambda: f64, e: &Error) -> TrainRecord {
        TrainRecord {
            lambda,
            model: None,
            train_accuracy: None,
            test_accuracy: None,
            penalty: None,
            epochs_run: 0,
            converged: false,
            m_ne_star: None,
            causal: None,
            error: Some(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub config: TrainConfig,
    pub records: Vec<TrainRecord>,
}

impl TrainTrace {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// One row per λ: `lambda,test_accuracy,penalty,m_ne_star`, blank when
    /// unavailable.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "train_accuracy", "test_accuracy", "penalty", "m_ne_star", "error"])?;
        let f = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
        for r in &self.records {
            w.write_record([
                format!("{}", r.lambda),
                f(r.train_accuracy),
                f(r.test_accuracy),
                f(r.penalty),
                f(r.m_ne_star),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Data and, when known, the generating model for one config.
struct Prepared {
    train: TrainingData,
    test: TrainingData,
    scm: Option<Scm>,
}

fn prepare(config: &TrainConfig) -> Result<Prepared> {
    let from_scm = |scm: Scm, samples: usize| -> Result<Prepared> {
        let label = scm
            .label()
            .ok_or_else(|| Error::Binding("the model has no label to train on".into()))?
            .name
            .clone();
        let data = sample(&scm, samples, config.seed)?;
        let critical: Vec<String> = scm.critical().into_iter().map(String::from).collect();
        let general: Vec<String> = scm.general().into_iter().map(String::from).collect();
        let all = TrainingData::from_dataset(&data, scm.protected_name(), &critical, &general, &label)?;
        split(all, Some(scm))
    };
    match &config.source {
        DataSource::Scenario { name, samples } => from_scm(scenario(name)?, *samples),
        DataSource::ScmFile { path, samples } => from_scm(Scm::parse(&std::fs::read_to_string(path)?)?, *samples),
        DataSource::Csv {
            path,
            protected,
            critical,
            general,
            label,
        } => {
            let data = crate::ingest::read_csv(path)?;
            split(TrainingData::from_dataset(&data, protected, critical, general, label)?, None)
        }
    }
}

fn split(all: TrainingData, scm: Option<Scm>) -> Result<Prepared> {
    if all.len() < 10 {
        return Err(Error::Config(format!("need at least 10 rows to train, got {}", all.len())));
    }
    let cut = ((all.len() as f64) * TRAIN_FRACTION).round() as usize;
    Ok(Prepared {
        train: all.subset(0..cut),
        test: all.subset(cut..all.len()),
        scm,
    })
}

fn accuracy(model: &Model, data: &TrainingData, threshold: f64) -> f64 {
    let hits = data
        .features
        .iter()
        .zip(&data.label)
        .filter(|(x, &y)| model.decide(x, threshold) == y)
        .count();
    hits as f64 / data.len().max(1) as f64
}

struct Fit {
    model: Model,
    penalty: f64,
    epochs_run: usize,
    converged: bool,
}

fn fit(config: &TrainConfig, data: &TrainingData) -> Result<Fit> {
    let mut model = Model::init(config.shape, data.feature_names.clone(), &data.features, config.seed);
    let objective = Objective::new(&model, data, &config.regularizer, config.lambda, config.bins)?;
    let (beta1, beta2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let np = model.parameters.len();
    let (mut m, mut v) = (vec![0.0; np], vec![0.0; np]);
    let mut params = model.parameters.clone();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut best = f64::INFINITY;
    let mut best_epoch = 0;
    let mut step = 0i32;
    let mut last_finite = 0;
    let mut converged = false;
    let mut epochs_run = 0;
    for epoch in 1..=config.epochs {
        epochs_run = epoch;
        let batches: Vec<Option<Vec<usize>>> = match config.batch_size {
            Some(b) if b < data.len() => {
                for i in (1..order.len()).rev() {
                    order.swap(i, rng.random_range(0..=i));
                }
                order.chunks(b).map(|c| Some(c.to_vec())).collect()
            }
            _ => vec![None],
        };
        let mut epoch_loss = 0.0;
        for batch in &batches {
            let (loss, _, grad) = objective.evaluate(&params, batch.as_deref())?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged {
                    last_finite_epoch: last_finite,
                });
            }
            epoch_loss += loss / batches.len() as f64;
            step += 1;
            let (c1, c2) = (1.0 - beta1.powi(step), 1.0 - beta2.powi(step));
            for j in 0..np {
                m[j] = beta1 * m[j] + (1.0 - beta1) * grad[j];
                v[j] = beta2 * v[j] + (1.0 - beta2) * grad[j] * grad[j];
                params[j] -= config.learning_rate * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
            }
        }
        last_finite = epoch;
        if epoch_loss < best - MIN_IMPROVEMENT {
            best = epoch_loss;
            best_epoch = epoch;
        } else if epoch - best_epoch >= PATIENCE {
            converged = true;
            break;
        }
    }
    let (_, penalty, _) = objective.evaluate(&params, None)?;
    model.parameters = params;
    Ok(Fit {
        model,
        penalty: penalty.value,
        epochs_run,
        converged,
    })
}

fn roles_for(scm: &Scm) -> Roles {
    Roles {
        protected: scm.protected_name().to_string(),
        latents: scm.latent_names().into_iter().map(String::from).collect(),
        critical: scm.critical().into_iter().map(String::from).collect(),
        output: MODEL_OUTPUT.to_string(),
        x_prime: Vec::new(),
    }
}

fn audit_on(model: &Model, scm: &Scm, e: &Enumeration, threshold: f64, tolerances: &Tolerances) -> Result<DisparityReport> {
    let feature_names = scm.feature_names();
    if model.inputs.len() != model.mean.len() || model.inputs.iter().any(|n| !feature_names.contains(&n.as_str())) {
        return Err(Error::Binding(format!(
            "model inputs {:?} do not match the model features {:?}",
            model.inputs, feature_names
        )));
    }
    let cols: Vec<Vec<f64>> = model.inputs.iter().map(|n| e.values(n)).collect::<Result<_>>()?;
    let decisions: Vec<f64> = (0..e.atom_count())
        .map(|a| {
            let row: Vec<f64> = cols.iter().map(|c| c[a]).collect();
            model.decide(&row, threshold)
        })
        .collect();
    let roles = roles_for(scm);
    let joint = e.with_variable(MODEL_OUTPUT, &decisions)?.joint_over(&roles.causal_variables())?;
    decompose(&joint, &roles, tolerances)
}

/// Audit a trained model on the generating model's enumerated joint, with
/// `1[model(x) ≥ threshold]` as the output.
pub fn evaluate_causal(model: &Model, scm: &Scm, threshold: f64) -> Result<DisparityReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let bare = scm.with_output(None)?;
    let e = enumerate(&bare)?;
    audit_on(model, &bare, &e, threshold, &Tolerances::default())
}

fn record(config: &TrainConfig, prepared: &Prepared, enumeration: Option<&(Scm, Enumeration)>) -> Result<TrainRecord> {
    let fit = fit(config, &prepared.train)?;
    let causal = match enumeration {
        Some((scm, e)) => Some(audit_on(&fit.model, scm, e, config.threshold, &Tolerances::default())?),
        None => None,
    };
    Ok(TrainRecord {
        lambda: config.lambda,
        train_accuracy: Some(accuracy(&fit.model, &prepared.train, config.threshold)),
        test_accuracy: Some(accuracy(&fit.model, &prepared.test, config.threshold)),
        penalty: Some(fit.penalty),
        epochs_run: fit.epochs_run,
        converged: fit.converged,
        m_ne_star: causal.as_ref().map(|r| r.m_ne_star),
        causal,
        model: Some(fit.model),
        error: None,
    })
}

fn enumerated(prepared: &Prepared) -> Result<Option<(Scm, Enumeration)>> {
    match &prepared.scm {
        Some(scm) => {
            let bare = scm.with_output(None)?;
            let e = enumerate(&bare)?;
            Ok(Some((bare, e)))
        }
        None => Ok(None),
    }
}

/// Train one model.
pub fn train(config: &TrainConfig) -> Result<TrainRecord> {
    config.validate()?;
    let prepared = prepare(config)?;
    let e = enumerated(&prepared)?;
    record(config, &prepared, e.as_ref())
}

/// Train one model per λ on shared data, in parallel. Failures are kept
/// in the trace as records carrying an error message.
pub fn sweep(base: &TrainConfig, lambdas: &[f64]) -> Result<TrainTrace> {
    if lambdas.is_empty() {
        return Err(Error::Config("the λ list is empty".into()));
    }
    base.validate()?;
    let mut lambdas = lambdas.to_vec();
    lambdas.sort_by(f64::total_cmp);
    for &l in &lambdas {
        TrainConfig { lambda: l, ..base.clone() }.validate()?;
    }
    let prepared = prepare(base)?;
    let e = enumerated(&prepared)?;
    let records = lambdas
        .par_iter()
        .map(|&lambda| {
            let config = TrainConfig { lambda, ..base.clone() };
            record(&config, &prepared, e.as_ref()).unwrap_or_else(|err| TrainRecord::failed(lambda, &err))
        })
        .collect();
    Ok(TrainTrace {
        config: base.clone(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> TrainingData {
        let scm = Scm::parse(
            "protected Z bernoulli 0.5\nlatent U bernoulli 0.5\nlatent N gaussian 0 0.5 bins=4\n\
             feature X1 critical = Z + U + N\nfeature X2 general = U - Z + N\nlabel Y = ind(X1 + X2 >= 1)\n",
        )
        .unwrap();
        let d = sample(&scm, 300, 4).unwrap();
        TrainingData::from_dataset(&d, "Z", &["X1".into()], &["X2".into()], "Y").unwrap()
    }

    fn check_gradient(shape: ModelShape, reg: Regularizer) {
        let data = toy();
        let model = Model::init(shape, data.feature_names.clone(), &data.features, 7);
        let obj = Objective::new(&model, &data, &reg, 1.5, 4).unwrap();
        let g = obj.gradient(&model.parameters).unwrap();
        let h = 1e-5;
        for j in 0..model.parameters.len() {
            let mut a = model.parameters.clone();
            let mut b = model.parameters.clone();
            a[j] += h;
            b[j] -= h;
            let fd = (obj.loss(&a).unwrap() - obj.loss(&b).unwrap()) / (2.0 * h);
            let err = (fd - g[j]).abs() / fd.abs().max(g[j].abs()).max(1e-6);
            assert!(err < 1e-4, "{reg:?} {shape:?} parameter {j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn gradients_linear() {
        for reg in [Regularizer::None, Regularizer::Mi, Regularizer::Uniq, Regularizer::Cmi, Regularizer::Eo] {
            check_gradient(ModelShape::Linear, reg);
        }
    }

    #[test]
    fn gradients_hidden() {
        check_gradient(ModelShape::Hidden { width: 3 }, Regularizer::CmiExtended(vec!["X2".into()]));
        check_gradient(ModelShape::Hidden { width: 3 }, Regularizer::Mi);
    }

    #[test]
    fn regularizer_names_round_trip() {
        for name in ["none", "mi", "uniq", "cmi", "eo"] {
            assert_eq!(Regularizer::parse(name, &[]).unwrap().name(), name);
        }
        assert!(Regularizer::parse("cmi_extended", &[]).is_err());
        assert!(Regularizer::parse("l2", &[]).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = TrainConfig::scenario("exp-1");
        c.lambda = -1.0;
        assert!(c.validate().is_err());
        c.lambda = 0.0;
        c.shape = ModelShape::Hidden { width: 33 };
        assert!(c.validate().is_err());
        c.shape = ModelShape::Linear;
        c.epochs = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn constant_model_has_zero_report() {
        let scm = scenario("exp-4").unwrap();
        let inputs: Vec<String> = scm.feature_names().into_iter().map(String::from).collect();
        let k = inputs.len();
        let model = Model {
            shape: ModelShape::Linear,
            mean: vec![0.0; k],
            scale: vec![1.0; k],
            parameters: vec![0.0; k + 1],
            inputs,
        };
        let r = evaluate_causal(&model, &scm, 0.7).unwrap();
        assert_eq!(r.total, 0.0);
        assert_eq!(r.m_ne_star, 0.0);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let scm = scenario("exp-4").unwrap();
        let model = Model {
            shape: ModelShape::Linear,
            inputs: vec!["Q".into()],
            mean: vec![0.0],
            scale: vec![1.0],
            parameters: vec![0.0, 0.0],
        };
        assert!(matches!(evaluate_causal(&model, &scm, 0.5), Err(Error::Binding(_))));
    }
}
