//! Paragraph vectors: distributed-memory (DM) and distributed bag of words
//! (DBOW) architectures trained by SGD with negative sampling or
//! hierarchical softmax.

mod huffman;
mod io;
pub mod objective;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{NoiseTable, Subsampler, Vocabulary, DEFAULT_NOISE_EXPONENT};
use crate::error::{Error, Result};

pub use huffman::HuffmanTree;
pub use objective::ObjectiveGradients;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Dm,
    Dbow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Neg,
    Hs,
}

/// How DM combines the paragraph vector with the context word vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    Concat,
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub architecture: Architecture,
    pub objective: Objective,
    /// Noise words per observation (K).
    pub negative: usize,
    /// Subsampling threshold on relative frequency; 0 disables it.
    pub subsample: f64,
    /// Context words on each side of the target.
    pub window: usize,
    pub dim: usize,
    pub min_count: u64,
    pub combine: Combine,
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub noise_exponent: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            architecture: Architecture::Dm,
            objective: Objective::Neg,
            negative: 10,
            subsample: 1e-6,
            window: 10,
            dim: 100,
            min_count: crate::corpus::DEFAULT_MIN_COUNT,
            combine: Combine::Concat,
            epochs: 20,
            lr_start: 0.025,
            lr_end: 0.0001,
            noise_exponent: DEFAULT_NOISE_EXPONENT,
            seed: 1,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.objective == Objective::Neg && self.negative == 0 {
            return bad("negative sampling needs K >= 1");
        }
        if !(self.subsample >= 0.0) {
            return bad("subsample threshold must be non-negative");
        }
        if !(self.lr_start > 0.0) || !(self.lr_end >= 0.0) {
            return bad("learning rates must be positive");
        }
        if !(self.noise_exponent > 0.0) {
            return bad("noise exponent must be positive");
        }
        Ok(())
    }

    /// Width of the hidden layer fed to the output matrix.
    pub fn hidden_width(&self) -> usize {
        match (self.architecture, self.combine) {
            (Architecture::Dm, Combine::Concat) => (2 * self.window + 1) * self.dim,
            _ => self.dim,
        }
    }

    /// Short method label in the style `DM-NEG`.
    pub fn method_label(&self) -> &'static str {
        match (self.architecture, self.objective) {
            (Architecture::Dm, Objective::Neg) => "DM-NEG",
            (Architecture::Dm, Objective::Hs) => "DM-HS",
            (Architecture::Dbow, Objective::Neg) => "DBOW-NEG",
            (Architecture::Dbow, Objective::Hs) => "DBOW-HS",
        }
    }
}

/// Dense row-major f32 matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn uniform<R: Rng>(rows: usize, cols: usize, half_width: f32, rng: &mut R) -> Self {
        let data = (0..rows * cols)
            .map(|_| (rng.gen::<f32>() * 2.0 - 1.0) * half_width)
            .collect();
        Matrix { rows, cols, data }
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f32>) -> Self {
        assert_eq!(rows * cols, data.len());
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// One prediction problem: a target word, its ordered neighbours within
/// the window, and the paragraph it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextSample {
    pub target: u32,
    /// Words preceding the target, in text order.
    pub before: Vec<u32>,
    /// Words following the target, in text order.
    pub after: Vec<u32>,
    pub doc: usize,
}

impl ContextSample {
    pub fn at(tokens: &[u32], pos: usize, window: usize, doc: usize) -> Self {
        let lo = pos.saturating_sub(window);
        let hi = (pos + window + 1).min(tokens.len());
        ContextSample {
            target: tokens[pos],
            before: tokens[lo..pos].to_vec(),
            after: tokens[pos + 1..hi].to_vec(),
            doc,
        }
    }

    pub fn context(&self) -> impl Iterator<Item = u32> + '_ {
        self.before.iter().chain(&self.after).copied()
    }

    pub fn context_len(&self) -> usize {
        self.before.len() + self.after.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Slot {
    Doc,
    Word(u32),
    Pad,
}

/// Per-epoch training summary.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-observation objective (log-likelihood, higher is better).
    pub mean_objective: f64,
    pub updates: usize,
    pub learning_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InferOptions {
    pub epochs: usize,
    pub seed: u64,
    /// Lets the unseen paragraph's words adapt during inference, on a
    /// private copy of the word matrix. The model itself is never touched.
    pub adapt_words: bool,
}

impl InferOptions {
    pub fn new(epochs: usize, seed: u64) -> Self {
        InferOptions {
            epochs,
            seed,
            adapt_words: false,
        }
    }
}

/// Output rows touched by one observation together with the sign
/// convention of each (NEG: positive first; HS: code bits).
struct Outputs {
    rows: Vec<u32>,
    codes: Vec<bool>,
}

/// Result of the forward/backward pass for one observation; updates are
/// applied separately so inference can run against frozen weights.
struct Step {
    value: f64,
    hidden: Vec<f64>,
    coeffs: Vec<f64>,
    hidden_grad: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    hyper: Hyperparams,
    vocab: Vocabulary,
    words: Matrix,
    padding: Vec<f32>,
    outputs: Matrix,
    docs: Matrix,
    tree: Option<HuffmanTree>,
}

impl EmbeddingModel {
    /// Initializes a model for `num_paragraphs` documents. Word, padding and
    /// paragraph vectors are uniform in `±0.5/dim`; output weights are zero.
    pub fn new(vocab: Vocabulary, num_paragraphs: usize, hyper: Hyperparams) -> Result<Self> {
        hyper.validate()?;
        if vocab.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let dim = hyper.dim;
        let half = 0.5 / dim as f32;
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let words = Matrix::uniform(vocab.len(), dim, half, &mut rng);
        let padding = Matrix::uniform(1, dim, half, &mut rng).data;
        let docs = Matrix::uniform(num_paragraphs, dim, half, &mut rng);

        let (tree, output_rows) = match hyper.objective {
            Objective::Neg => (None, vocab.len()),
            Objective::Hs => {
                let tree = HuffmanTree::build(vocab.counts());
                let n = tree.num_internal();
                (Some(tree), n)
            }
        };
        let outputs = Matrix::zeros(output_rows, hyper.hidden_width());
        assert_eq!(outputs.cols(), hyper.hidden_width());

        Ok(EmbeddingModel {
            hyper,
            vocab,
            words,
            padding,
            outputs,
            docs,
            tree,
        })
    }

    pub(crate) fn from_parts(
        hyper: Hyperparams,
        vocab: Vocabulary,
        words: Matrix,
        padding: Vec<f32>,
        outputs: Matrix,
        docs: Matrix,
    ) -> Result<Self> {
        hyper.validate()?;
        let tree = match hyper.objective {
            Objective::Neg => None,
            Objective::Hs => Some(HuffmanTree::build(vocab.counts())),
        };
        let expected_out = tree.as_ref().map_or(vocab.len(), |t| t.num_internal());
        let consistent = words.rows() == vocab.len()
            && words.cols() == hyper.dim
            && padding.len() == hyper.dim
            && docs.cols() == hyper.dim
            && outputs.rows() == expected_out
            && outputs.cols() == hyper.hidden_width();
        if !consistent {
            return Err(Error::format("model", "matrix shapes disagree with hyperparameters"));
        }
        Ok(EmbeddingModel {
            hyper,
            vocab,
            words,
            padding,
            outputs,
            docs,
            tree,
        })
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn words(&self) -> &Matrix {
        &self.words
    }

    pub fn padding(&self) -> &[f32] {
        &self.padding
    }

    pub fn outputs(&self) -> &Matrix {
        &self.outputs
    }

    pub fn docs(&self) -> &Matrix {
        &self.docs
    }

    pub fn tree(&self) -> Option<&HuffmanTree> {
        self.tree.as_ref()
    }

    pub fn num_paragraphs(&self) -> usize {
        self.docs.rows()
    }

    pub fn doc_vector(&self, doc: usize) -> &[f32] {
        self.docs.row(doc)
    }

    pub fn word_vector(&self, token: &str) -> Option<&[f32]> {
        self.vocab
            .index_of(token)
            .map(|i| self.words.row(i as usize))
    }

    pub fn hidden_width(&self) -> usize {
        self.outputs.cols()
    }

    fn slots(&self, sample: &ContextSample) -> Vec<Slot> {
        match (self.hyper.architecture, self.hyper.combine) {
            (Architecture::Dbow, _) => vec![Slot::Doc],
            (Architecture::Dm, Combine::Mean) => std::iter::once(Slot::Doc)
                .chain(sample.context().map(Slot::Word))
                .collect(),
            (Architecture::Dm, Combine::Concat) => {
                let n = self.hyper.window;
                let mut slots = Vec::with_capacity(2 * n + 1);
                slots.push(Slot::Doc);
                let before = &sample.before[sample.before.len().saturating_sub(n)..];
                slots.extend(std::iter::repeat(Slot::Pad).take(n - before.len()));
                slots.extend(before.iter().map(|&w| Slot::Word(w)));
                let after = &sample.after[..sample.after.len().min(n)];
                slots.extend(after.iter().map(|&w| Slot::Word(w)));
                slots.extend(std::iter::repeat(Slot::Pad).take(n - after.len()));
                slots
            }
        }
    }

    fn check_sample(&self, sample: &ContextSample) -> Result<()> {
        let v = self.vocab.len();
        for w in std::iter::once(sample.target).chain(sample.context()) {
            if w as usize >= v {
                return Err(Error::IndexOutOfRange {
                    index: w as usize,
                    len: v,
                });
            }
        }
        if sample.doc >= self.docs.rows() {
            return Err(Error::IndexOutOfRange {
                index: sample.doc,
                len: self.docs.rows(),
            });
        }
        Ok(())
    }

    /// The combined hidden vector for a sample, using the trained
    /// paragraph vector of `sample.doc`.
    pub fn hidden(&self, sample: &ContextSample) -> Result<Vec<f64>> {
        self.check_sample(sample)?;
        let slots = self.slots(sample);
        Ok(combine(
            &slots,
            self.hyper.combine_mode(),
            self.docs.row(sample.doc),
            &self.words,
            &self.padding,
        ))
    }

    /// Exact softmax probability of `sample.target` over the whole
    /// vocabulary. Only available for negative-sampling models, whose
    /// output matrix has one row per word. Cost is O(|V|).
    pub fn softmax_probability(&self, sample: &ContextSample) -> Result<f64> {
        if self.hyper.objective != Objective::Neg {
            return Err(Error::InvalidArgument(
                "exact softmax needs one output row per word (NEG model)".into(),
            ));
        }
        if self.hyper.architecture == Architecture::Dm && sample.context_len() == 0 {
            return Err(Error::EmptyContext);
        }
        let h = self.hidden(sample)?;
        let scores: Vec<f64> = (0..self.outputs.rows())
            .map(|w| objective::dot(&h, self.outputs.row(w)))
            .collect();
        Ok(objective::softmax(&scores)[sample.target as usize])
    }

    /// Negative-sampling objective for one observation and its gradients
    /// with respect to the hidden vector, the target's output row and each
    /// negative's output row.
    pub fn neg_objective_and_gradients(
        &self,
        sample: &ContextSample,
        negatives: &[u32],
    ) -> Result<ObjectiveGradients> {
        if negatives.is_empty() {
            return Err(Error::InvalidArgument("at least one negative is required".into()));
        }
        if self.hyper.objective != Objective::Neg {
            return Err(Error::InvalidArgument("model was built for hierarchical softmax".into()));
        }
        let h = self.hidden(sample)?;
        let mut rows = Vec::with_capacity(negatives.len());
        for &n in negatives {
            if n == sample.target {
                return Err(Error::InvalidArgument("negative equals the target".into()));
            }
            if n as usize >= self.outputs.rows() {
                return Err(Error::IndexOutOfRange {
                    index: n as usize,
                    len: self.outputs.rows(),
                });
            }
            rows.push(self.outputs.row(n as usize));
        }
        Ok(objective::neg_objective_and_gradients(
            &h,
            self.outputs.row(sample.target as usize),
            &rows,
        ))
    }

    /// Hierarchical-softmax probability of `sample.target` and the
    /// gradients of its log with respect to the hidden vector and the node
    /// vectors along the target's Huffman path.
    pub fn hs_probability_and_gradients(
        &self,
        sample: &ContextSample,
    ) -> Result<(f64, ObjectiveGradients)> {
        let tree = self.tree.as_ref().ok_or(Error::MissingTree)?;
        let h = self.hidden(sample)?;
        let path = tree.path(sample.target);
        let nodes: Vec<&[f32]> = path
            .iter()
            .map(|&(node, _)| self.outputs.row(node as usize))
            .collect();
        let codes: Vec<bool> = path.iter().map(|&(_, b)| b).collect();
        let grads = objective::hs_log_prob_and_gradients(&h, &nodes, &codes);
        Ok((grads.value.exp(), grads))
    }

    fn output_rows(
        &self,
        target: u32,
        noise: Option<&NoiseTable>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Outputs> {
        match self.hyper.objective {
            Objective::Neg => {
                let noise = noise.expect("noise table for NEG");
                let mut rows = Vec::with_capacity(self.hyper.negative + 1);
                rows.push(target);
                rows.extend(draw_negatives(noise, self.hyper.negative, target, rng)?);
                Ok(Outputs {
                    rows,
                    codes: Vec::new(),
                })
            }
            Objective::Hs => {
                let path = self.tree.as_ref().ok_or(Error::MissingTree)?.path(target);
                Ok(Outputs {
                    rows: path.iter().map(|&(n, _)| n).collect(),
                    codes: path.iter().map(|&(_, b)| b).collect(),
                })
            }
        }
    }

    fn forward_backward(
        &self,
        slots: &[Slot],
        doc: &[f32],
        words: &Matrix,
        padding: &[f32],
        out: &Outputs,
    ) -> Step {
        let h = combine(slots, self.hyper.combine_mode(), doc, words, padding);
        let scores: Vec<f64> = out
            .rows
            .iter()
            .map(|&r| objective::dot(&h, self.outputs.row(r as usize)))
            .collect();
        let (value, coeffs) = match self.hyper.objective {
            Objective::Neg => objective::neg_coefficients(scores[0], &scores[1..]),
            Objective::Hs => objective::hs_coefficients(&scores, &out.codes),
        };
        let mut hidden_grad = vec![0.0; h.len()];
        for (&r, &c) in out.rows.iter().zip(&coeffs) {
            for (g, &o) in hidden_grad.iter_mut().zip(self.outputs.row(r as usize)) {
                *g += c * o as f64;
            }
        }
        Step {
            value,
            hidden: h,
            coeffs,
            hidden_grad,
        }
    }

    fn sampling_tables(&self) -> Result<(Option<NoiseTable>, Subsampler)> {
        let noise = match self.hyper.objective {
            Objective::Neg => Some(NoiseTable::new(&self.vocab, self.hyper.noise_exponent)?),
            Objective::Hs => None,
        };
        Ok((noise, Subsampler::new(&self.vocab, self.hyper.subsample)?))
    }

    /// Trains word, paragraph and output vectors on encoded paragraphs.
    ///
    /// `paragraphs[i]` is the token sequence of paragraph vector `i`. The
    /// learning rate decays linearly from `lr_start` to `lr_end` over
    /// `epochs * total tokens`; subsampling is redrawn on every epoch.
    pub fn train<F>(&mut self, paragraphs: &[Vec<u32>], mut on_epoch: F) -> Result<Vec<EpochStats>>
    where
        F: FnMut(&EpochStats),
    {
        if paragraphs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if paragraphs.len() != self.docs.rows() {
            return Err(Error::LengthMismatch(paragraphs.len(), self.docs.rows()));
        }
        if let Some(&bad) = paragraphs.iter().flatten().find(|&&t| t as usize >= self.vocab.len()) {
            return Err(Error::IndexOutOfRange {
                index: bad as usize,
                len: self.vocab.len(),
            });
        }
        let (noise, subsampler) = self.sampling_tables()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.hyper.seed.wrapping_add(0x9e37_79b9));
        let schedule = Schedule::new(&self.hyper, paragraphs.iter().map(Vec::len).sum());
        let mut processed = 0usize;
        let mut trace = Vec::with_capacity(self.hyper.epochs);
        let mut doc_buf = vec![0f32; self.hyper.dim];

        for epoch in 0..self.hyper.epochs {
            let mut total = 0.0;
            let mut updates = 0usize;
            let mut lr = schedule.at(processed);
            for (doc, tokens) in paragraphs.iter().enumerate() {
                lr = schedule.at(processed);
                processed += tokens.len();
                let kept = subsampler.filter(tokens, &mut rng);
                for pos in 0..kept.len() {
                    let sample = ContextSample::at(&kept, pos, self.hyper.window, doc);
                    let out = self.output_rows(sample.target, noise.as_ref(), &mut rng)?;
                    total += self.sgd_step(&sample, &out, lr, &mut doc_buf);
                    updates += 1;
                }
            }
            let stats = EpochStats {
                epoch,
                mean_objective: if updates > 0 { total / updates as f64 } else { 0.0 },
                updates,
                learning_rate: lr,
            };
            on_epoch(&stats);
            trace.push(stats);
        }
        Ok(trace)
    }

    /// One SGD ascent step on the observation `sample` against the given
    /// output rows. Returns the objective before the update.
    fn sgd_step(&mut self, sample: &ContextSample, out: &Outputs, lr: f64, doc_buf: &mut [f32]) -> f64 {
        let slots = self.slots(sample);
        doc_buf.copy_from_slice(self.docs.row(sample.doc));
        let step = self.forward_backward(&slots, doc_buf, &self.words, &self.padding, out);
        apply_outputs(&mut self.outputs, &out.rows, &step, lr);
        let mode = self.hyper.combine_mode();
        let EmbeddingModel {
            words,
            padding,
            docs,
            ..
        } = self;
        apply_inputs(
            &slots,
            mode,
            &step.hidden_grad,
            lr,
            docs.row_mut(sample.doc),
            Some((words, padding.as_mut_slice())),
        );
        step.value
    }

    /// Computes a paragraph vector for an unseen paragraph by running the
    /// training procedure on a fresh vector while word and output weights
    /// stay fixed.
    pub fn infer_vector(&self, tokens: &[u32], opts: &InferOptions) -> Result<Vec<f32>> {
        if tokens.is_empty() {
            return Err(Error::Uninferable);
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t as usize >= self.vocab.len()) {
            return Err(Error::IndexOutOfRange {
                index: bad as usize,
                len: self.vocab.len(),
            });
        }
        let (noise, subsampler) = self.sampling_tables()?;
        let dim = self.hyper.dim;
        let half = 0.5 / dim as f32;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut doc = Matrix::uniform(1, dim, half, &mut rng).data;

        let mut local = opts
            .adapt_words
            .then(|| (self.words.clone(), self.padding.clone()));

        let hyper = Hyperparams {
            epochs: opts.epochs,
            ..self.hyper.clone()
        };
        let schedule = Schedule::new(&hyper, tokens.len());
        let mode = self.hyper.combine_mode();
        let mut processed = 0usize;
        for _ in 0..opts.epochs {
            let lr = schedule.at(processed);
            processed += tokens.len();
            let kept = subsampler.filter(tokens, &mut rng);
            for pos in 0..kept.len() {
                let sample = ContextSample::at(&kept, pos, self.hyper.window, 0);
                let slots = self.slots(&sample);
                let out = self.output_rows(sample.target, noise.as_ref(), &mut rng)?;
                let (words, padding) = match &local {
                    Some((w, p)) => (w, p.as_slice()),
                    None => (&self.words, self.padding.as_slice()),
                };
                let step = self.forward_backward(&slots, &doc, words, padding, &out);
                let shared = local.as_mut().map(|(w, p)| (w, p.as_mut_slice()));
                apply_inputs(&slots, mode, &step.hidden_grad, lr, &mut doc, shared);
            }
        }
        Ok(doc)
    }

    /// Convenience wrapper: tokenizes raw text and infers its vector.
    pub fn infer_text(&self, text: &str, opts: &InferOptions) -> Result<Vec<f32>> {
        let tokens = self
            .vocab
            .encode(&crate::corpus::tokenize(text, true));
        self.infer_vector(&tokens, opts)
    }

    /// The `k` words whose input vectors have the highest cosine similarity
    /// with `token`'s, excluding the token itself, best first.
    pub fn most_similar(&self, token: &str, k: usize) -> Result<Vec<(String, f64)>> {
        let query = self
            .vocab
            .index_of(token)
            .ok_or_else(|| Error::InvalidArgument(format!("`{token}` is not in the vocabulary")))?;
        if k >= self.vocab.len() {
            return Err(Error::InvalidArgument(format!(
                "k = {k} must be smaller than the vocabulary size {}",
                self.vocab.len()
            )));
        }
        let q = self.words.row(query as usize);
        let mut scored: Vec<(u32, f64)> = (0..self.vocab.len() as u32)
            .filter(|&i| i != query)
            .map(|i| (i, cosine(q, self.words.row(i as usize))))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(i, s)| (self.vocab.token(i).unwrap().to_string(), s))
            .collect())
    }
}

impl Hyperparams {
    fn combine_mode(&self) -> Combine {
        match self.architecture {
            Architecture::Dm => self.combine,
            Architecture::Dbow => Combine::Mean,
        }
    }
}

struct Schedule {
    start: f64,
    end: f64,
    total: f64,
}

impl Schedule {
    fn new(hyper: &Hyperparams, tokens_per_epoch: usize) -> Self {
        Schedule {
            start: hyper.lr_start,
            end: hyper.lr_end.min(hyper.lr_start),
            total: (hyper.epochs * tokens_per_epoch).max(1) as f64,
        }
    }

    fn at(&self, processed: usize) -> f64 {
        let progress = (processed as f64 / self.total).min(1.0);
        self.start - (self.start - self.end) * progress
    }
}

fn combine(slots: &[Slot], mode: Combine, doc: &[f32], words: &Matrix, padding: &[f32]) -> Vec<f64> {
    let dim = doc.len();
    let row = |slot: Slot| -> &[f32] {
        match slot {
            Slot::Doc => doc,
            Slot::Word(w) => words.row(w as usize),
            Slot::Pad => padding,
        }
    };
    match mode {
        Combine::Concat => slots
            .iter()
            .flat_map(|&s| row(s).iter().map(|&x| x as f64))
            .collect(),
        Combine::Mean => {
            let mut h = vec![0.0; dim];
            for &s in slots {
                for (acc, &x) in h.iter_mut().zip(row(s)) {
                    *acc += x as f64;
                }
            }
            let m = slots.len() as f64;
            h.iter_mut().for_each(|x| *x /= m);
            h
        }
    }
}

fn apply_outputs(outputs: &mut Matrix, rows: &[u32], step: &Step, lr: f64) {
    for (&r, &c) in rows.iter().zip(&step.coeffs) {
        let scale = lr * c;
        for (o, &x) in outputs.row_mut(r as usize).iter_mut().zip(&step.hidden) {
            *o += (scale * x) as f32;
        }
    }
}

/// Gradient ascent on the input side: each slot receives its share of the
/// hidden-layer gradient. Without `shared`, only the paragraph vector moves.
fn apply_inputs(
    slots: &[Slot],
    mode: Combine,
    hidden_grad: &[f64],
    lr: f64,
    doc: &mut [f32],
    mut shared: Option<(&mut Matrix, &mut [f32])>,
) {
    let dim = doc.len();
    let mean_scale = 1.0 / slots.len() as f64;
    for (j, &slot) in slots.iter().enumerate() {
        let (grad, scale) = match mode {
            Combine::Concat => (&hidden_grad[j * dim..(j + 1) * dim], lr),
            Combine::Mean => (hidden_grad, lr * mean_scale),
        };
        let target: &mut [f32] = match (slot, shared.as_mut()) {
            (Slot::Doc, _) => &mut *doc,
            (Slot::Word(w), Some((words, _))) => words.row_mut(w as usize),
            (Slot::Pad, Some((_, padding))) => padding,
            (_, None) => continue,
        };
        for (t, &g) in target.iter_mut().zip(grad) {
            *t += (scale * g) as f32;
        }
    }
}

/// Draws `k` words from the noise distribution, redrawing any draw equal
/// to `exclude`.
pub fn draw_negatives<R: Rng + ?Sized>(
    noise: &NoiseTable,
    k: usize,
    exclude: u32,
    rng: &mut R,
) -> Result<Vec<u32>> {
    if noise.len() < 2 {
        return Err(Error::InvalidArgument(
            "negative sampling needs at least two words".into(),
        ));
    }
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let w = noise.sample(rng);
        if w != exclude {
            out.push(w);
        }
    }
    Ok(out)
}

pub fn cosine<A, B>(a: &[A], b: &[B]) -> f64
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x.into(), y.into());
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return 0.0;
    }
    (ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0)
}
