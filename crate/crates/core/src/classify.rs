//! Per-category binary classifiers over normalized paragraph vectors.
//!
//! Each risk category gets its own [`CategoryClassifier`]. SVM scores are
//! mapped to probabilities by a fitted sigmoid; naive Bayes models return
//! their exact posterior.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::objective::sigmoid;
use crate::error::{Error, Result};
use crate::wire::{Reader, Writer};

pub const CLASSIFIER_MAGIC: &[u8; 8] = b"LXRSKCLF";
pub const CLASSIFIER_FORMAT_VERSION: u32 = 1;

pub const GAUSSIAN_VAR_FLOOR: f64 = 1e-9;
pub const BERNOULLI_ALPHA: f64 = 1.0;

/// A unit-norm feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    /// Euclidean norm of the raw vector before normalization.
    norm: f64,
}

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn raw_norm(&self) -> f64 {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Scales `raw` to unit Euclidean norm.
pub fn normalize<T: Copy + Into<f64>>(raw: &[T]) -> Result<FeatureVector> {
    let values: Vec<f64> = raw.iter().map(|&x| x.into()).collect();
    let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(FeatureVector {
        values: values.into_iter().map(|x| x / norm).collect(),
        norm,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    SvmLinear,
    SvmRbf,
    NbGaussian,
    NbBernoulli,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::SvmLinear,
        ClassifierKind::SvmRbf,
        ClassifierKind::NbGaussian,
        ClassifierKind::NbBernoulli,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ClassifierKind::SvmLinear => "SVM-Linear",
            ClassifierKind::SvmRbf => "SVM-RBF",
            ClassifierKind::NbGaussian => "NB-Gaussian",
            ClassifierKind::NbBernoulli => "NB-Bernoulli",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "svm_linear" | "linear" | "svm" => Ok(ClassifierKind::SvmLinear),
            "svm_rbf" | "rbf" => Ok(ClassifierKind::SvmRbf),
            "nb_gaussian" | "gaussian" => Ok(ClassifierKind::NbGaussian),
            "nb_bernoulli" | "bernoulli" => Ok(ClassifierKind::NbBernoulli),
            _ => Err(Error::InvalidArgument(format!("unknown classifier kind `{s}`"))),
        }
    }

    fn is_svm(self) -> bool {
        matches!(self, ClassifierKind::SvmLinear | ClassifierKind::SvmRbf)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    /// Weight of the hinge penalty; larger values fit the training data
    /// more tightly.
    pub c: f64,
    /// RBF kernel width; `None` means `1 / dim`.
    pub gamma: Option<f64>,
    pub max_epochs: usize,
    /// Stopping tolerance on the projected-gradient gap of the dual.
    pub tol: f64,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            c: 1.0,
            gamma: None,
            max_epochs: 1000,
            tol: 1e-6,
            seed: 0,
            threshold: 0.5,
        }
    }
}

/// Maps a raw score to a probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Calibrator {
    /// The score already is a probability.
    Identity,
    /// `sigmoid(slope * score + offset)` with `slope > 0`.
    Sigmoid { slope: f64, offset: f64 },
}

impl Calibrator {
    pub fn apply(&self, score: f64) -> f64 {
        match *self {
            Calibrator::Identity => score.clamp(0.0, 1.0),
            Calibrator::Sigmoid { slope, offset } => sigmoid(slope * score + offset),
        }
    }

    /// Fits a sigmoid to `(score, label)` pairs by regularized maximum
    /// likelihood (Newton's method with backtracking, using the smoothed
    /// targets `(n+ + 1)/(n+ + 2)` and `1/(n- + 2)`).
    ///
    /// A non-positive fitted slope would make the map decreasing; in that
    /// case the plain logistic `sigmoid(score)` is used.
    pub fn fit_sigmoid(scores: &[f64], labels: &[bool]) -> Self {
        let fallback = Calibrator::Sigmoid {
            slope: 1.0,
            offset: 0.0,
        };
        let n_pos = labels.iter().filter(|&&l| l).count() as f64;
        let n_neg = labels.len() as f64 - n_pos;
        if n_pos == 0.0 || n_neg == 0.0 {
            return fallback;
        }
        let hi = (n_pos + 1.0) / (n_pos + 2.0);
        let lo = 1.0 / (n_neg + 2.0);
        let targets: Vec<f64> = labels.iter().map(|&l| if l { hi } else { lo }).collect();

        // Parametrized as p = sigmoid(a * f + b).
        let nll = |a: f64, b: f64| -> f64 {
            scores
                .iter()
                .zip(&targets)
                .map(|(&f, &t)| {
                    let z = a * f + b;
                    // -(t log s(z) + (1 - t) log s(-z))
                    -(t * crate::embedding::objective::log_sigmoid(z)
                        + (1.0 - t) * crate::embedding::objective::log_sigmoid(-z))
                })
                .sum()
        };

        let (mut a, mut b) = (0.0, ((n_pos + 1.0) / (n_neg + 1.0)).ln());
        let mut value = nll(a, b);
        for _ in 0..100 {
            let (mut ga, mut gb) = (0.0, 0.0);
            let (mut haa, mut hab, mut hbb) = (1e-12, 0.0, 1e-12);
            for (&f, &t) in scores.iter().zip(&targets) {
                let p = sigmoid(a * f + b);
                let d = p - t;
                ga += d * f;
                gb += d;
                let w = p * (1.0 - p);
                haa += w * f * f;
                hab += w * f;
                hbb += w;
            }
            if ga.abs() < 1e-10 && gb.abs() < 1e-10 {
                break;
            }
            let det = haa * hbb - hab * hab;
            if det.abs() < 1e-300 {
                break;
            }
            let da = -(hbb * ga - hab * gb) / det;
            let db = -(-hab * ga + haa * gb) / det;
            let gd = ga * da + gb * db;
            let mut step = 1.0;
            let mut improved = false;
            while step >= 1e-10 {
                let (na, nb) = (a + step * da, b + step * db);
                let nv = nll(na, nb);
                if nv < value + 1e-4 * step * gd {
                    a = na;
                    b = nb;
                    value = nv;
                    improved = true;
                    break;
                }
                step /= 2.0;
            }
            if !improved {
                break;
            }
        }
        if a > 0.0 && a.is_finite() && b.is_finite() {
            Calibrator::Sigmoid {
                slope: a,
                offset: b,
            }
        } else {
            fallback
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Params {
    /// Single-class training data: always answers that class.
    Constant { label: bool },
    Linear { weights: Vec<f64>, bias: f64 },
    Rbf {
        gamma: f64,
        support: Vec<Vec<f64>>,
        /// `alpha_i * y_i` per support vector.
        coef: Vec<f64>,
        bias: f64,
    },
    Gaussian {
        /// Index 0 is the negative class, 1 the positive class.
        priors: [f64; 2],
        means: [Vec<f64>; 2],
        variances: [Vec<f64>; 2],
    },
    Bernoulli {
        priors: [f64; 2],
        /// Smoothed `P(feature > 0 | class)`.
        rates: [Vec<f64>; 2],
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryClassifier {
    pub category: String,
    pub kind: ClassifierKind,
    pub dim: usize,
    pub c: f64,
    pub params: Params,
    pub calibrator: Calibrator,
    pub threshold: f64,
    /// Set when training data held a single class.
    pub degenerate: bool,
}

fn check_xy<X: AsRef<[f64]>>(x: &[X], y: &[bool]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let dim = x[0].as_ref().len();
    for row in x {
        if row.as_ref().len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: row.as_ref().len(),
            });
        }
    }
    Ok(dim)
}

fn sign(label: bool) -> f64 {
    if label {
        1.0
    } else {
        -1.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dual coordinate descent for the L1-loss soft-margin SVM. The bias is
/// learned as the weight of a constant feature 1 (and so is regularized).
/// `kernel(i, j)` must already include that constant.
fn dual_cd<K: Fn(usize, usize) -> f64>(
    n: usize,
    y: &[bool],
    kernel: K,
    c: f64,
    params: &ClassifierParams,
    mut on_update: impl FnMut(usize, f64),
    decision: impl Fn(usize) -> f64,
) -> Vec<f64> {
    let mut alpha = vec![0.0; n];
    let diag: Vec<f64> = (0..n).map(|i| kernel(i, i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for _ in 0..params.max_epochs {
        order.shuffle(&mut rng);
        let (mut max_pg, mut min_pg) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let yi = sign(y[i]);
            let g = yi * decision(i) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            max_pg = max_pg.max(pg);
            min_pg = min_pg.min(pg);
            if pg != 0.0 && diag[i] > 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, c);
                let delta = (alpha[i] - old) * yi;
                if delta != 0.0 {
                    on_update(i, delta);
                }
            }
        }
        if max_pg - min_pg <= params.tol {
            break;
        }
    }
    alpha
}

fn train_linear<X: AsRef<[f64]>>(x: &[X], y: &[bool], dim: usize, params: &ClassifierParams) -> Params {
    // w has dim + 1 entries; the last multiplies the constant feature.
    let w = std::cell::RefCell::new(vec![0.0; dim + 1]);
    let sq: Vec<f64> = x.iter().map(|r| dot(r.as_ref(), r.as_ref()) + 1.0).collect();
    dual_cd(
        x.len(),
        y,
        |i, j| {
            debug_assert_eq!(i, j);
            sq[i]
        },
        params.c,
        params,
        |i, delta| {
            let mut w = w.borrow_mut();
            for (wk, &xk) in w.iter_mut().zip(x[i].as_ref()) {
                *wk += delta * xk;
            }
            w[dim] += delta;
        },
        |i| {
            let w = w.borrow();
            dot(&w[..dim], x[i].as_ref()) + w[dim]
        },
    );
    let mut weights = w.into_inner();
    let bias = weights.pop().unwrap();
    Params::Linear { weights, bias }
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

fn train_rbf<X: AsRef<[f64]>>(x: &[X], y: &[bool], gamma: f64, params: &ClassifierParams) -> Params {
    let n = x.len();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let k = rbf(gamma, x[i].as_ref(), x[j].as_ref()) + 1.0;
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
    }
    // decision(i) = sum_j alpha_j y_j K(i, j), maintained incrementally.
    let f = std::cell::RefCell::new(vec![0.0; n]);
    let alpha = dual_cd(
        n,
        y,
        |i, j| gram[i * n + j],
        params.c,
        params,
        |i, delta| {
            let mut f = f.borrow_mut();
            for (k, fk) in f.iter_mut().enumerate() {
                *fk += delta * gram[i * n + k];
            }
        },
        |i| f.borrow()[i],
    );
    let mut support = Vec::new();
    let mut coef = Vec::new();
    let mut bias = 0.0;
    for i in 0..n {
        if alpha[i] > 0.0 {
            let c = alpha[i] * sign(y[i]);
            support.push(x[i].as_ref().to_vec());
            coef.push(c);
            bias += c;
        }
    }
    Params::Rbf {
        gamma,
        support,
        coef,
        bias,
    }
}

fn class_rows<'a, X: AsRef<[f64]>>(x: &'a [X], y: &'a [bool], class: bool) -> Vec<&'a [f64]> {
    x.iter()
        .zip(y)
        .filter(|(_, &l)| l == class)
        .map(|(r, _)| r.as_ref())
        .collect()
}

fn train_gaussian<X: AsRef<[f64]>>(x: &[X], y: &[bool], dim: usize) -> Params {
    let n = x.len() as f64;
    let mut priors = [0.0; 2];
    let mut means: [Vec<f64>; 2] = [vec![0.0; dim], vec![0.0; dim]];
    let mut variances: [Vec<f64>; 2] = [vec![0.0; dim], vec![0.0; dim]];
    for class in [false, true] {
        let c = class as usize;
        let rows = class_rows(x, y, class);
        let m = rows.len() as f64;
        priors[c] = m / n;
        for r in &rows {
            for (mu, &v) in means[c].iter_mut().zip(*r) {
                *mu += v;
            }
        }
        means[c].iter_mut().for_each(|mu| *mu /= m);
        for r in &rows {
            for ((var, &mu), &v) in variances[c].iter_mut().zip(&means[c]).zip(*r) {
                *var += (v - mu) * (v - mu);
            }
        }
        variances[c]
            .iter_mut()
            .for_each(|var| *var = *var / m + GAUSSIAN_VAR_FLOOR);
    }
    Params::Gaussian {
        priors,
        means,
        variances,
    }
}

fn train_bernoulli<X: AsRef<[f64]>>(x: &[X], y: &[bool], dim: usize) -> Params {
    let n = x.len() as f64;
    let mut priors = [0.0; 2];
    let mut rates: [Vec<f64>; 2] = [vec![0.0; dim], vec![0.0; dim]];
    for class in [false, true] {
        let c = class as usize;
        let rows = class_rows(x, y, class);
        let m = rows.len() as f64;
        priors[c] = m / n;
        let mut ones = vec![0.0; dim];
        for r in &rows {
            for (o, &v) in ones.iter_mut().zip(*r) {
                if v > 0.0 {
                    *o += 1.0;
                }
            }
        }
        rates[c] = ones
            .into_iter()
            .map(|k| (k + BERNOULLI_ALPHA) / (m + 2.0 * BERNOULLI_ALPHA))
            .collect();
    }
    Params::Bernoulli { priors, rates }
}

fn gaussian_log_likelihood(x: &[f64], means: &[f64], variances: &[f64]) -> f64 {
    x.iter()
        .zip(means)
        .zip(variances)
        .map(|((&v, &mu), &var)| {
            -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (v - mu) * (v - mu) / var)
        })
        .sum()
}

fn bernoulli_log_likelihood(x: &[f64], rates: &[f64]) -> f64 {
    x.iter()
        .zip(rates)
        .map(|(&v, &p)| if v > 0.0 { p.ln() } else { (1.0 - p).ln() })
        .sum()
}

impl CategoryClassifier {
    /// Trains one binary classifier. SVM calibration is fitted on the
    /// training scores; call [`CategoryClassifier::calibrate`] with
    /// held-out data to refit it.
    pub fn train<X: AsRef<[f64]>>(
        category: &str,
        kind: ClassifierKind,
        x: &[X],
        y: &[bool],
        params: &ClassifierParams,
    ) -> Result<Self> {
        let dim = check_xy(x, y)?;
        if !(params.c > 0.0) {
            return Err(Error::InvalidArgument(format!("C must be positive, got {}", params.c)));
        }
        if !(0.0..=1.0).contains(&params.threshold) {
            return Err(Error::BadThreshold(params.threshold));
        }
        let n_pos = y.iter().filter(|&&l| l).count();
        let base = |params_: Params, calibrator: Calibrator, degenerate: bool| CategoryClassifier {
            category: category.to_string(),
            kind,
            dim,
            c: params.c,
            params: params_,
            calibrator,
            threshold: params.threshold,
            degenerate,
        };
        if n_pos == 0 || n_pos == y.len() {
            return Ok(base(
                Params::Constant { label: n_pos > 0 },
                Calibrator::Identity,
                true,
            ));
        }

        let trained = match kind {
            ClassifierKind::SvmLinear => train_linear(x, y, dim, params),
            ClassifierKind::SvmRbf => {
                let gamma = params.gamma.unwrap_or(1.0 / dim.max(1) as f64);
                if !(gamma > 0.0) {
                    return Err(Error::InvalidArgument("gamma must be positive".into()));
                }
                train_rbf(x, y, gamma, params)
            }
            ClassifierKind::NbGaussian => train_gaussian(x, y, dim),
            ClassifierKind::NbBernoulli => train_bernoulli(x, y, dim),
        };
        let mut clf = base(trained, Calibrator::Identity, false);
        if kind.is_svm() {
            let scores = x
                .iter()
                .map(|r| clf.decision_function(r.as_ref()))
                .collect::<Result<Vec<_>>>()?;
            clf.calibrator = Calibrator::fit_sigmoid(&scores, y);
        }
        Ok(clf)
    }

    /// Refits the SVM score-to-probability map on held-out data. No-op for
    /// naive Bayes and degenerate classifiers.
    pub fn calibrate<X: AsRef<[f64]>>(&mut self, x: &[X], y: &[bool]) -> Result<()> {
        check_xy(x, y)?;
        if !self.kind.is_svm() || self.degenerate {
            return Ok(());
        }
        let scores = x
            .iter()
            .map(|r| self.decision_function(r.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        self.calibrator = Calibrator::fit_sigmoid(&scores, y);
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Raw score: SVM margin, or posterior log-odds for naive Bayes.
    pub fn decision_function(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match &self.params {
            Params::Constant { label } => sign(*label),
            Params::Linear { weights, bias } => dot(weights, x) + bias,
            Params::Rbf {
                gamma,
                support,
                coef,
                bias,
            } => {
                support
                    .iter()
                    .zip(coef)
                    .map(|(s, &c)| c * rbf(*gamma, s, x))
                    .sum::<f64>()
                    + bias
            }
            Params::Gaussian { .. } | Params::Bernoulli { .. } => {
                let [l0, l1] = self.log_joint(x);
                l1 - l0
            }
        })
    }

    fn log_joint(&self, x: &[f64]) -> [f64; 2] {
        match &self.params {
            Params::Gaussian {
                priors,
                means,
                variances,
            } => [0, 1].map(|c| priors[c].ln() + gaussian_log_likelihood(x, &means[c], &variances[c])),
            Params::Bernoulli { priors, rates } => {
                [0, 1].map(|c| priors[c].ln() + bernoulli_log_likelihood(x, &rates[c]))
            }
            _ => unreachable!("log_joint on a non-Bayes model"),
        }
    }

    /// `[P(not risk | x), P(risk | x)]`.
    pub fn posteriors(&self, x: &[f64]) -> Result<[f64; 2]> {
        self.check_dim(x)?;
        Ok(match &self.params {
            Params::Gaussian { .. } | Params::Bernoulli { .. } => {
                let [l0, l1] = self.log_joint(x);
                [sigmoid(l0 - l1), sigmoid(l1 - l0)]
            }
            Params::Constant { label } => {
                let p = if *label { 1.0 } else { 0.0 };
                [1.0 - p, p]
            }
            _ => {
                let p = self.calibrator.apply(self.decision_function(x)?);
                [1.0 - p, p]
            }
        })
    }

    /// Probability that `x` belongs to this classifier's category.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(self.posteriors(x)?[1])
    }

    /// Flags `x` iff its probability reaches `threshold`.
    pub fn decide(&self, x: &[f64], threshold: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::BadThreshold(threshold));
        }
        Ok(self.predict_proba(x)? >= threshold)
    }

    /// Average hinge loss `max(0, 1 - y f(x))` on labeled data.
    pub fn hinge_loss<X: AsRef<[f64]>>(&self, x: &[X], y: &[bool]) -> Result<f64> {
        check_xy(x, y)?;
        let mut total = 0.0;
        for (r, &l) in x.iter().zip(y) {
            total += (1.0 - sign(l) * self.decision_function(r.as_ref())?).max(0.0);
        }
        Ok(total / x.len() as f64)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(CLASSIFIER_MAGIC, CLASSIFIER_FORMAT_VERSION);
        w.bytes(&serde_json::to_vec(self).expect("classifier serializes"));
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, CLASSIFIER_MAGIC, CLASSIFIER_FORMAT_VERSION, "classifier")?;
        let clf: CategoryClassifier = serde_json::from_slice(r.bytes()?)?;
        r.finish()?;
        Ok(clf)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ClassifierParams {
        ClassifierParams::default()
    }

    #[test]
    fn normalize_cases() {
        let v = normalize(&[3.0f64, 4.0]).unwrap();
        assert_eq!(v.values(), &[0.6, 0.8]);
        assert_eq!(v.raw_norm(), 5.0);
        let u = normalize(&[0.0f64, 1.0, 0.0]).unwrap();
        assert_eq!(u.values(), &[0.0, 1.0, 0.0]);
        assert!(matches!(normalize(&[0.0f32; 4]), Err(Error::ZeroVector)));
    }

    #[test]
    fn separable_1d_linear_svm_has_zero_hinge_loss() {
        let x = vec![vec![-1.0], vec![1.0]];
        let y = vec![false, true];
        let clf = CategoryClassifier::train("T", ClassifierKind::SvmLinear, &x, &y, &params()).unwrap();
        assert_eq!(clf.hinge_loss(&x, &y).unwrap(), 0.0);
        assert!(!clf.decide(&[-1.0], 0.5).unwrap());
        assert!(clf.decide(&[1.0], 0.5).unwrap());
        // symmetric data: the midpoint maps to probability one half
        assert!((clf.predict_proba(&[0.0]).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn gaussian_nb_midpoint_is_half() {
        let x = vec![vec![-1.0], vec![1.0], vec![3.0], vec![5.0]];
        let y = vec![false, false, true, true];
        let clf = CategoryClassifier::train("T", ClassifierKind::NbGaussian, &x, &y, &params()).unwrap();
        assert!((clf.predict_proba(&[2.0]).unwrap() - 0.5).abs() < 1e-9);
        let [p0, p1] = clf.posteriors(&[4.2]).unwrap();
        assert!((p0 + p1 - 1.0).abs() < 1e-12);
        assert!(p1 > 0.9);
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = vec![vec![0.1, 0.2], vec![0.3, 0.1]];
        for kind in ClassifierKind::ALL {
            let clf = CategoryClassifier::train("Insurance", kind, &x, &[false, false], &params()).unwrap();
            assert!(clf.degenerate);
            assert_eq!(clf.predict_proba(&[0.5, 0.5]).unwrap(), 0.0);
            let clf = CategoryClassifier::train("Insurance", kind, &x, &[true, true], &params()).unwrap();
            assert_eq!(clf.predict_proba(&[0.5, 0.5]).unwrap(), 1.0);
        }
    }

    #[test]
    fn training_errors() {
        let x: Vec<Vec<f64>> = vec![];
        assert!(CategoryClassifier::train("T", ClassifierKind::SvmLinear, &x, &[], &params()).is_err());
        let x = vec![vec![1.0], vec![1.0, 2.0]];
        assert!(CategoryClassifier::train("T", ClassifierKind::SvmLinear, &x, &[true, false], &params()).is_err());
        let x = vec![vec![1.0], vec![-1.0]];
        assert!(CategoryClassifier::train("T", ClassifierKind::SvmLinear, &x, &[true], &params()).is_err());
        let bad_c = ClassifierParams { c: 0.0, ..params() };
        assert!(CategoryClassifier::train("T", ClassifierKind::SvmLinear, &x, &[true, false], &bad_c).is_err());
        let clf = CategoryClassifier::train("T", ClassifierKind::SvmLinear, &x, &[true, false], &params()).unwrap();
        assert!(matches!(
            clf.predict_proba(&[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(clf.decide(&[1.0], 1.5).is_err());
    }

    #[test]
    fn decide_thresholds() {
        let x = vec![vec![-1.0, 0.2], vec![1.0, 0.1], vec![-0.8, -0.3], vec![0.9, 0.0]];
        let y = vec![false, true, false, true];
        for kind in ClassifierKind::ALL {
            let clf = CategoryClassifier::train("T", kind, &x, &y, &params()).unwrap();
            for probe in [[-2.0, 0.0], [0.0, 0.0], [0.3, 0.5]] {
                assert!(clf.decide(&probe, 0.0).unwrap());
                if clf.predict_proba(&probe).unwrap() < 1.0 {
                    assert!(!clf.decide(&probe, 1.0).unwrap());
                }
            }
        }
    }

    #[test]
    fn rbf_svm_separates_rings() {
        // inner cluster positive, outer ring negative: not linearly separable
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..24 {
            let t = i as f64 / 24.0 * std::f64::consts::TAU;
            x.push(vec![0.2 * t.cos(), 0.2 * t.sin()]);
            y.push(true);
            x.push(vec![2.0 * t.cos(), 2.0 * t.sin()]);
            y.push(false);
        }
        let p = ClassifierParams {
            c: 10.0,
            gamma: Some(1.0),
            ..params()
        };
        let clf = CategoryClassifier::train("T", ClassifierKind::SvmRbf, &x, &y, &p).unwrap();
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(r, &l)| clf.decide(r, 0.5).unwrap() == l)
            .count();
        assert_eq!(correct, x.len());
    }

    #[test]
    fn calibrator_is_increasing() {
        let scores = [-2.0, -1.5, -0.3, 0.1, 0.4, 1.1, 2.5, -0.1];
        let labels = [false, false, false, true, false, true, true, true];
        let cal = Calibrator::fit_sigmoid(&scores, &labels);
        match cal {
            Calibrator::Sigmoid { slope, .. } => assert!(slope > 0.0),
            _ => panic!("expected sigmoid"),
        }
        // anti-correlated scores fall back to the plain logistic
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let cal = Calibrator::fit_sigmoid(&scores, &flipped);
        assert_eq!(
            cal,
            Calibrator::Sigmoid {
                slope: 1.0,
                offset: 0.0
            }
        );
    }

    #[test]
    fn classifier_bytes_round_trip() {
        let x = vec![vec![-1.0, 0.5], vec![1.0, 0.25], vec![-0.5, -0.5], vec![0.7, 0.1]];
        let y = vec![false, true, false, true];
        for kind in ClassifierKind::ALL {
            let clf = CategoryClassifier::train("Indemnity", kind, &x, &y, &params()).unwrap();
            let bytes = clf.to_bytes();
            let back = CategoryClassifier::from_bytes(&bytes).unwrap();
            assert_eq!(back, clf);
            assert_eq!(back.to_bytes(), bytes);
        }
        assert!(CategoryClassifier::from_bytes(b"LXRSKCLF").is_err());
    }

    #[test]
    fn kind_parsing() {
        for kind in ClassifierKind::ALL {
            let name = serde_json::to_value(kind).unwrap();
            assert_eq!(ClassifierKind::parse(name.as_str().unwrap()).unwrap(), kind);
        }
        assert!(ClassifierKind::parse("tree").is_err());
    }
}
