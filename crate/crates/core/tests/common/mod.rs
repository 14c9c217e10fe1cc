#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lexrisk::corpus::{ingest_labeled, tokenize, Vocabulary};
use lexrisk::embedding::objective::{hs_log_prob_and_gradients, neg_objective_and_gradients};
use lexrisk::embedding::{EmbeddingModel, HuffmanTree, Hyperparams};
use lexrisk::recipe::Recipe;
use lexrisk::synthetic::TopicCorpus;

pub fn sigmoid_direct(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ln s(t·h) + sum ln s(-n·h)` written out directly.
pub fn neg_objective_direct(h: &[f64], target: &[f64], negatives: &[Vec<f64>]) -> f64 {
    sigmoid_direct(dot(target, h)).ln()
        + negatives
            .iter()
            .map(|n| sigmoid_direct(-dot(n, h)).ln())
            .sum::<f64>()
}

/// Log of the product of branch probabilities along a Huffman path; bit 0
/// takes `s(node·h)`, bit 1 takes `1 - s(node·h)`.
pub fn hs_objective_direct(h: &[f64], nodes: &[Vec<f64>], codes: &[bool]) -> f64 {
    nodes
        .iter()
        .zip(codes)
        .map(|(n, &bit)| {
            let p = sigmoid_direct(dot(n, h));
            if bit { 1.0 - p } else { p }.ln()
        })
        .sum()
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n) * (a - n))
        .sum::<f64>()
        .sqrt();
    let scale = dot(analytic, analytic).sqrt().max(dot(numeric, numeric).sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Central differences of `f` at `x`.
fn numeric_gradient(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let eps = 1e-5;
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + eps;
            let up = f(&probe);
            probe[i] = orig - eps;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Worst relative gradient error of the NEG objective over one random
/// instance (dim ≤ 8, |V| ≤ 20), across the hidden vector and every
/// output row involved.
pub fn neg_fd_instance(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.gen_range(1..=8);
    let vocab = rng.gen_range(2..=20usize);
    let k = rng.gen_range(1..vocab.min(11));
    let h = random_vec(&mut rng, dim);
    let target = random_vec(&mut rng, dim);
    let negatives: Vec<Vec<f64>> = (0..k).map(|_| random_vec(&mut rng, dim)).collect();
    let neg_refs: Vec<&[f64]> = negatives.iter().map(Vec::as_slice).collect();
    let grads = neg_objective_and_gradients(&h, &target, &neg_refs);

    let mut worst = rel_error(
        &grads.hidden,
        &numeric_gradient(&h, |x| neg_objective_direct(x, &target, &negatives)),
    );
    worst = worst.max(rel_error(
        &grads.outputs[0],
        &numeric_gradient(&target, |t| neg_objective_direct(&h, t, &negatives)),
    ));
    for i in 0..k {
        let numeric = numeric_gradient(&negatives[i], |n| {
            let mut negs = negatives.clone();
            negs[i] = n.to_vec();
            neg_objective_direct(&h, &target, &negs)
        });
        worst = worst.max(rel_error(&grads.outputs[i + 1], &numeric));
    }
    worst
}

/// Same as [`neg_fd_instance`] for the hierarchical-softmax objective on a
/// Huffman tree over random counts.
pub fn hs_fd_instance(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.gen_range(1..=8);
    let vocab = rng.gen_range(2..=20usize);
    let counts: Vec<u64> = (0..vocab).map(|_| rng.gen_range(1..100)).collect();
    let tree = HuffmanTree::build(&counts);
    let leaf = rng.gen_range(0..vocab as u32);
    let path = tree.path(leaf);
    let h = random_vec(&mut rng, dim);
    let nodes: Vec<Vec<f64>> = path.iter().map(|_| random_vec(&mut rng, dim)).collect();
    let codes: Vec<bool> = path.iter().map(|&(_, b)| b).collect();
    let node_refs: Vec<&[f64]> = nodes.iter().map(Vec::as_slice).collect();
    let grads = hs_log_prob_and_gradients(&h, &node_refs, &codes);

    let mut worst = rel_error(
        &grads.hidden,
        &numeric_gradient(&h, |x| hs_objective_direct(x, &nodes, &codes)),
    );
    for i in 0..nodes.len() {
        let numeric = numeric_gradient(&nodes[i], |n| {
            let mut ns = nodes.clone();
            ns[i] = n.to_vec();
            hs_objective_direct(&h, &ns, &codes)
        });
        worst = worst.max(rel_error(&grads.outputs[i], &numeric));
    }
    worst
}

/// `count^e / sum count^e`, straight from the definition.
pub fn noise_direct(counts: &[u64], exponent: f64) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    let f: Vec<f64> = counts.iter().map(|&c| (c as f64 / total as f64).powf(exponent)).collect();
    let z: f64 = f.iter().sum();
    f.into_iter().map(|x| x / z).collect()
}

/// Vocabulary whose token `w{i}` occurs exactly `counts[i]` times.
pub fn vocab_with_counts(counts: &[u64]) -> Vocabulary {
    let mut tokens = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            tokens.push(format!("w{i}"));
        }
    }
    Vocabulary::build([tokens], 1).unwrap()
}

/// The O(n²) definition of AUC: wins plus half ties over all pairs.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Posterior `P(class 1 | x)` of a Bernoulli naive Bayes fitted with
/// Laplace smoothing, by Bayes' rule over explicit products.
pub fn bernoulli_posterior(x_train: &[Vec<f64>], y: &[bool], x: &[f64]) -> f64 {
    let dim = x.len();
    let mut joint = [0.0; 2];
    for class in [false, true] {
        let rows: Vec<&Vec<f64>> = x_train.iter().zip(y).filter(|(_, &l)| l == class).map(|(r, _)| r).collect();
        let n = rows.len() as f64;
        let mut p = n / x_train.len() as f64;
        for j in 0..dim {
            let ones = rows.iter().filter(|r| r[j] > 0.0).count() as f64;
            let theta = (ones + 1.0) / (n + 2.0);
            p *= if x[j] > 0.0 { theta } else { 1.0 - theta };
        }
        joint[class as usize] = p;
    }
    joint[1] / (joint[0] + joint[1])
}

/// A model trained briefly on random text so all weights are non-trivial.
pub fn random_model(hyper: Hyperparams, vocab_size: usize, seed: u64) -> (EmbeddingModel, Vec<Vec<u32>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paragraphs: Vec<Vec<String>> = (0..6)
        .map(|_| {
            (0..12)
                .map(|_| format!("w{}", rng.gen_range(0..vocab_size)))
                .collect()
        })
        .collect();
    let mut all: Vec<Vec<String>> = paragraphs.clone();
    all.push((0..vocab_size).map(|i| format!("w{i}")).collect());
    let vocab = Vocabulary::build(&all, 1).unwrap();
    let encoded: Vec<Vec<u32>> = all.iter().map(|p| vocab.encode(p)).collect();
    let mut model = EmbeddingModel::new(vocab, encoded.len(), hyper).unwrap();
    model.train(&encoded, |_| {}).unwrap();
    (model, encoded)
}

/// The recommended embedding configuration with the given epoch count.
pub fn final_config(epochs: usize) -> Recipe {
    Recipe {
        hyper: Hyperparams {
            negative: 10,
            subsample: 1e-6,
            window: 10,
            dim: 100,
            epochs,
            ..Hyperparams::default()
        },
        ..Recipe::default()
    }
}

/// Held-out accuracy of `recipe` on the default two-topic corpus, with an
/// 80/20 split.
pub fn synthetic_accuracy(recipe: &Recipe, seed: u64) -> (f64, usize) {
    let records = TopicCorpus::default().generate();
    let split = ingest_labeled(&records, (0.8, 0.0, 0.2), seed, None).unwrap();
    let texts: Vec<String> = split.train.paragraphs.iter().map(|p| p.text.clone()).collect();
    let labels: Vec<bool> = split.train.paragraphs.iter().map(|p| !p.categories.is_empty()).collect();
    let fitted = recipe.fit("Termination", &texts, &labels).unwrap();
    let mut correct = 0;
    for p in &split.test.paragraphs {
        let flagged = fitted.score(&p.text).unwrap() >= 0.5;
        if flagged == !p.categories.is_empty() {
            correct += 1;
        }
    }
    let n = split.test.paragraphs.len();
    (correct as f64 / n as f64, n)
}

pub fn vocab_size_of_corpus() -> usize {
    let records = TopicCorpus::default().generate();
    let tokens: Vec<Vec<String>> = records.iter().map(|r| tokenize(&r.text, true)).collect();
    Vocabulary::build(&tokens, 5).unwrap().len()
}
