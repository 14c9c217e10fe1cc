//! Objective functions for a single training observation and their
//! analytic gradients, in f64.
//!
//! Every objective here is a sum of terms `log sigmoid(±score_i)` with
//! `score_i = out_i · h`. The derivative with respect to `score_i` is a
//! scalar coefficient `c_i`; then `d/d out_i = c_i * h` and
//! `d/dh = sum_i c_i * out_i`. Training applies exactly these
//! coefficients, so the finite-difference tests on this module cover
//! the update rule as well.

/// Logistic function, evaluated without overflow for any finite input.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(sigmoid(x))`, stable for large `|x|`.
pub fn log_sigmoid(x: f64) -> f64 {
    x.min(0.0) - (-x.abs()).exp().ln_1p()
}

pub fn dot<T: Copy + Into<f64>>(a: &[f64], b: &[T]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y.into()).sum()
}

/// Negative-sampling objective from precomputed scores.
///
/// Returns the objective `log s(pos) + sum log s(-neg_i)` and the
/// per-score coefficients, positive first.
pub fn neg_coefficients(positive: f64, negatives: &[f64]) -> (f64, Vec<f64>) {
    let mut objective = log_sigmoid(positive);
    let mut coeffs = Vec::with_capacity(negatives.len() + 1);
    coeffs.push(1.0 - sigmoid(positive));
    for &s in negatives {
        objective += log_sigmoid(-s);
        coeffs.push(-sigmoid(s));
    }
    (objective, coeffs)
}

/// Hierarchical-softmax log probability of one leaf from the scores of the
/// internal nodes on its path and the code bits.
pub fn hs_coefficients(scores: &[f64], codes: &[bool]) -> (f64, Vec<f64>) {
    debug_assert_eq!(scores.len(), codes.len());
    let mut log_prob = 0.0;
    let coeffs = scores
        .iter()
        .zip(codes)
        .map(|(&s, &bit)| {
            if bit {
                log_prob += log_sigmoid(-s);
                -sigmoid(s)
            } else {
                log_prob += log_sigmoid(s);
                1.0 - sigmoid(s)
            }
        })
        .collect();
    (log_prob, coeffs)
}

/// Objective value with gradients for the hidden vector and each output
/// row involved (in the order the rows were given).
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveGradients {
    pub value: f64,
    pub hidden: Vec<f64>,
    pub outputs: Vec<Vec<f64>>,
}

fn expand<T: Copy + Into<f64>>(
    value: f64,
    h: &[f64],
    rows: &[&[T]],
    coeffs: &[f64],
) -> ObjectiveGradients {
    let mut hidden = vec![0.0; h.len()];
    for (row, &c) in rows.iter().zip(coeffs) {
        for (g, &o) in hidden.iter_mut().zip(row.iter()) {
            *g += c * o.into();
        }
    }
    let outputs = coeffs
        .iter()
        .map(|&c| h.iter().map(|&x| c * x).collect())
        .collect();
    ObjectiveGradients {
        value,
        hidden,
        outputs,
    }
}

/// `log s(t·h) + sum_i log s(-n_i·h)` and its partials with respect to
/// `h`, `t` and every `n_i`. Output gradients are ordered target first.
pub fn neg_objective_and_gradients<T: Copy + Into<f64>>(
    h: &[f64],
    target: &[T],
    negatives: &[&[T]],
) -> ObjectiveGradients {
    let pos = dot(h, target);
    let negs: Vec<f64> = negatives.iter().map(|n| dot(h, n)).collect();
    let (value, coeffs) = neg_coefficients(pos, &negs);
    let mut rows: Vec<&[T]> = Vec::with_capacity(negatives.len() + 1);
    rows.push(target);
    rows.extend_from_slice(negatives);
    expand(value, h, &rows, &coeffs)
}

/// Hierarchical-softmax log probability of a leaf and its partials with
/// respect to `h` and every node vector on the path.
pub fn hs_log_prob_and_gradients<T: Copy + Into<f64>>(
    h: &[f64],
    nodes: &[&[T]],
    codes: &[bool],
) -> ObjectiveGradients {
    let scores: Vec<f64> = nodes.iter().map(|n| dot(h, n)).collect();
    let (value, coeffs) = hs_coefficients(&scores, codes);
    expand(value, h, nodes, &coeffs)
}

/// Softmax over raw scores, shifted by the maximum.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}
