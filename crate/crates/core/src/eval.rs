//! Confusion counts, classification metrics, rank AUC and the
//! hyperparameter sweep harness.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::classify::ClassifierKind;
use crate::corpus::{DatasetSplit, Split};
use crate::embedding::{Architecture, Combine, Objective};
use crate::error::{Error, Result};
use crate::recipe::Recipe;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(predictions: &[bool], labels: &[bool]) -> Result<Confusion> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch(predictions.len(), labels.len()));
    }
    let mut c = Confusion::default();
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Ratios with an undefined denominator are `None` and render as `-`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

pub fn metrics(c: &Confusion) -> Result<Metrics> {
    let total = c.total();
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = match (precision, recall) {
        (Some(_), Some(_)) => ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        _ => None,
    };
    Ok(Metrics {
        accuracy: (c.tp + c.tn) as f64 / total as f64,
        precision,
        recall,
        f1,
    })
}

/// Probability that a random positive is scored above a random negative,
/// ties counting one half. Computed from tie-grouped ranks in
/// O(n log n) with integer counts.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("scores contain NaN".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the number of (positive, negative) pairs won by the positive,
    // plus one per tied pair.
    let mut doubled: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u64, 0u64);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        doubled += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
        i = j;
    }
    Ok(doubled as f64 / (2 * n_pos * n_neg) as f64)
}

/// A sweepable hyperparameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Architecture,
    Objective,
    Negative,
    Subsample,
    Window,
    Dim,
    Combine,
    Epochs,
    MinCount,
    Classifier,
    C,
}

impl SweepParam {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "arch" | "architecture" => SweepParam::Architecture,
            "objective" => SweepParam::Objective,
            "k" | "negative" => SweepParam::Negative,
            "t" | "subsample" => SweepParam::Subsample,
            "window" => SweepParam::Window,
            "dim" | "vector_size" => SweepParam::Dim,
            "combine" => SweepParam::Combine,
            "epochs" => SweepParam::Epochs,
            "min_count" => SweepParam::MinCount,
            "classifier" => SweepParam::Classifier,
            "c" => SweepParam::C,
            _ => return Err(Error::InvalidArgument(format!("unknown sweep parameter `{name}`"))),
        })
    }

    /// Column header used in reports.
    pub fn header(self) -> &'static str {
        match self {
            SweepParam::Architecture => "Architecture",
            SweepParam::Objective => "Objective",
            SweepParam::Negative => "No. of samples K",
            SweepParam::Subsample => "Subsampling Threshold (T)",
            SweepParam::Window => "Context window",
            SweepParam::Dim => "Vector size",
            SweepParam::Combine => "Combine",
            SweepParam::Epochs => "Epochs",
            SweepParam::MinCount => "Min count",
            SweepParam::Classifier => "Classifier",
            SweepParam::C => "C value",
        }
    }

    /// Sets this parameter on `recipe` from its textual value.
    pub fn apply(self, recipe: &mut Recipe, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(param: SweepParam, value: &str) -> Result<T> {
            value.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("bad value `{value}` for {}", param.header()))
            })
        }
        let h = &mut recipe.hyper;
        match self {
            SweepParam::Architecture => {
                h.architecture = match value.to_ascii_lowercase().as_str() {
                    "dm" => Architecture::Dm,
                    "dbow" => Architecture::Dbow,
                    _ => return Err(Error::InvalidArgument(format!("unknown architecture `{value}`"))),
                }
            }
            SweepParam::Objective => {
                h.objective = match value.to_ascii_lowercase().as_str() {
                    "neg" => Objective::Neg,
                    "hs" => Objective::Hs,
                    _ => return Err(Error::InvalidArgument(format!("unknown objective `{value}`"))),
                }
            }
            SweepParam::Combine => {
                h.combine = match value.to_ascii_lowercase().as_str() {
                    "concat" => Combine::Concat,
                    "mean" => Combine::Mean,
                    _ => return Err(Error::InvalidArgument(format!("unknown combine mode `{value}`"))),
                }
            }
            SweepParam::Negative => h.negative = num(self, value)?,
            SweepParam::Subsample => h.subsample = num(self, value)?,
            SweepParam::Window => h.window = num(self, value)?,
            SweepParam::Dim => h.dim = num(self, value)?,
            SweepParam::Epochs => h.epochs = num(self, value)?,
            SweepParam::MinCount => h.min_count = num(self, value)?,
            SweepParam::Classifier => recipe.classifier = ClassifierKind::parse(value)?,
            SweepParam::C => recipe.classifier_params.c = num(self, value)?,
        }
        Ok(())
    }
}

/// One axis of the sweep lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: SweepParam,
    pub values: Vec<String>,
}

impl Axis {
    pub fn new<S: Into<String>>(param: SweepParam, values: impl IntoIterator<Item = S>) -> Self {
        Axis {
            param,
            values: values.into_iter().map(Into::into).collect(),
        }
    }
}

/// Which held-out split a sweep scores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSplit {
    Validation,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: String,
    pub assignment: Vec<(SweepParam, String)>,
    pub confusion: Confusion,
    pub metrics: Metrics,
    /// Absent when the scored split holds a single class.
    pub auc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub category: String,
    pub split: EvalSplit,
    pub params: Vec<SweepParam>,
    pub rows: Vec<SweepRow>,
}

/// All assignments of the lattice; the first axis varies slowest.
pub fn lattice(axes: &[Axis]) -> Vec<Vec<(SweepParam, String)>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((axis.param, v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

fn category_labels(split: &Split, category: &str) -> Vec<bool> {
    let mut labels = vec![false; split.paragraphs.len()];
    for e in split.examples_for(category) {
        labels[e.paragraph] = e.label;
    }
    labels
}

fn texts(split: &Split) -> Vec<String> {
    split.paragraphs.iter().map(|p| p.text.clone()).collect()
}

/// Fits and scores one assignment.
pub fn evaluate_point(
    base: &Recipe,
    assignment: &[(SweepParam, String)],
    data: &DatasetSplit,
    category: &str,
    split: EvalSplit,
) -> Result<SweepRow> {
    let mut recipe = base.clone();
    for (param, value) in assignment {
        param.apply(&mut recipe, value)?;
    }
    let fitted = recipe.fit(
        category,
        &texts(&data.train),
        &category_labels(&data.train, category),
    )?;
    let held_out = match split {
        EvalSplit::Validation => &data.validation,
        EvalSplit::Test => &data.test,
    };
    let labels = category_labels(held_out, category);
    let threshold = recipe.classifier_params.threshold;
    let mut scores = Vec::with_capacity(labels.len());
    for p in &held_out.paragraphs {
        // An uninferable paragraph gets probability 0: never flagged.
        scores.push(match fitted.score(&p.text) {
            Ok(s) => s,
            Err(Error::Uninferable) => 0.0,
            Err(e) => return Err(e),
        });
    }
    let predictions: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
    let confusion = confusion(&predictions, &labels)?;
    Ok(SweepRow {
        method: format!("{category} with {}", recipe.hyper.method_label()),
        assignment: assignment.to_vec(),
        confusion,
        metrics: metrics(&confusion)?,
        auc: auc(&scores, &labels).ok(),
    })
}

/// Trains and scores every lattice point end to end. Rows follow lattice
/// order and each point depends only on its own assignment, so results do
/// not depend on scheduling.
pub fn sweep(
    base: &Recipe,
    axes: &[Axis],
    data: &DatasetSplit,
    category: &str,
    split: EvalSplit,
) -> Result<SweepReport> {
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    if !data.has_category(category) {
        return Err(Error::UnknownCategory(category.to_string()));
    }
    let held_out = match split {
        EvalSplit::Validation => &data.validation,
        EvalSplit::Test => &data.test,
    };
    if held_out.paragraphs.is_empty() || data.train.paragraphs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let points = lattice(axes);
    let slots: Vec<Mutex<Option<Result<SweepRow>>>> = points.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(points.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= points.len() {
                    break;
                }
                let row = evaluate_point(base, &points[i], data, category, split);
                *slots[i].lock().unwrap() = Some(row);
            });
        }
    });
    let rows = slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every point evaluated"))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        category: category.to_string(),
        split,
        params: axes.iter().map(|a| a.param).collect(),
        rows,
    })
}

fn percent(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{:.1}%", 100.0 * v))
}

fn exact(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Column layout of a rendered sweep report.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Every metric, AUC included.
    #[default]
    Full,
    /// Accuracy, precision, recall and F1 only.
    Compact,
}

impl SweepReport {
    pub const METHOD_COLUMN: &'static str = "Risk Category and Method";
    pub const METRIC_COLUMNS: [&'static str; 5] = ["AUC", "Accuracy", "Precision", "Recall", "F1-score"];

    pub fn columns(&self) -> Vec<String> {
        self.columns_in(Layout::Full)
    }

    pub fn columns_in(&self, layout: Layout) -> Vec<String> {
        let mut cols = vec![Self::METHOD_COLUMN.to_string()];
        cols.extend(self.params.iter().map(|p| p.header().to_string()));
        let skip = usize::from(layout == Layout::Compact);
        cols.extend(Self::METRIC_COLUMNS[skip..].iter().map(|c| c.to_string()));
        cols
    }

    fn cells(&self, exact_values: bool, layout: Layout) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| {
                let mut cells = vec![row.method.clone()];
                cells.extend(row.assignment.iter().map(|(_, v)| v.clone()));
                let m = &row.metrics;
                let rates = [Some(m.accuracy), m.precision, m.recall, m.f1];
                if exact_values {
                    if layout == Layout::Full {
                        cells.push(exact(row.auc));
                    }
                    cells.extend(rates.map(exact));
                } else {
                    if layout == Layout::Full {
                        cells.push(row.auc.map_or_else(|| "-".to_string(), |a| format!("{a:.3}")));
                    }
                    cells.extend(rates.map(percent));
                }
                cells
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        self.to_text_in(Layout::Full)
    }

    pub fn to_csv(&self) -> String {
        self.to_csv_in(Layout::Full)
    }

    /// Human-readable table with aligned columns.
    pub fn to_text_in(&self, layout: Layout) -> String {
        let header = self.columns_in(layout);
        let body = self.cells(false, layout);
        let widths: Vec<usize> = (0..header.len())
            .map(|i| {
                body.iter()
                    .map(|r| r[i].chars().count())
                    .chain([header[i].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let split = match self.split {
            EvalSplit::Validation => "validation",
            EvalSplit::Test => "test",
        };
        let mut out = format!("Risk category: {} ({split} split)\n", self.category);
        for line in std::iter::once(&header).chain(body.iter()) {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }

    /// Comma-separated values with full-precision numbers.
    pub fn to_csv_in(&self, layout: Layout) -> String {
        let mut out = String::new();
        for line in std::iter::once(self.columns_in(layout)).chain(self.cells(true, layout)) {
            let fields: Vec<String> = line.iter().map(|f| csv_field(f)).collect();
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }
}
