//! Reference implementations used as oracles by the integration tests.
//! Everything here is deliberately naive and shares no code with the crate
//! beyond the data types.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use embr_core::{build_score_fst, compose, Edge, Label, LogitMatrix, Wfst, EPSILON};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// Every initial-to-final edge sequence with its summed log weight.
pub fn all_paths(fst: &Wfst) -> Vec<(Vec<usize>, f64)> {
    fn go(fst: &Wfst, s: usize, prefix: &mut Vec<usize>, w: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        if s == fst.final_state() {
            out.push((prefix.clone(), w));
            return;
        }
        for (id, e) in fst.edges().iter().enumerate() {
            if e.src == s {
                prefix.push(id);
                go(fst, e.dst, prefix, w + e.log_weight, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(fst, fst.initial(), &mut Vec::new(), 0.0, &mut out);
    out
}

/// Normalized path probabilities, keyed by edge sequence.
pub fn path_probabilities(fst: &Wfst) -> HashMap<Vec<usize>, f64> {
    let paths = all_paths(fst);
    let max = paths.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = paths.iter().map(|p| (p.1 - max).exp()).sum();
    paths
        .into_iter()
        .map(|(edges, w)| (edges, (w - max).exp() / z))
        .collect()
}

pub fn input_labels(fst: &Wfst, edges: &[usize]) -> Vec<Label> {
    edges
        .iter()
        .map(|&i| fst.edges()[i].ilabel)
        .filter(|&l| l != EPSILON)
        .collect()
}

pub fn output_labels(fst: &Wfst, edges: &[usize]) -> Vec<Label> {
    edges
        .iter()
        .map(|&i| fst.edges()[i].olabel)
        .filter(|&l| l != EPSILON)
        .collect()
}

/// Plain recursive Levenshtein distance, memoized on suffix positions.
pub fn levenshtein_recursive<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(
        a: &[T],
        b: &[T],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = (go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]))
            .min(go(a, b, i + 1, j, memo) + 1)
            .min(go(a, b, i, j + 1, memo) + 1);
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// Expected loss of the lattice `score(z) ∘ graph`, computed by brute force
/// with `loss` applied to (frame labels, word labels).
pub fn brute_expected_loss(
    graph: &Wfst,
    z: &LogitMatrix,
    loss: &dyn Fn(&[Label], &[Label]) -> f64,
) -> f64 {
    let u = compose(&build_score_fst(z), graph).unwrap();
    path_probabilities(&u)
        .iter()
        .map(|(edges, p)| p * loss(&input_labels(&u, edges), &output_labels(&u, edges)))
        .sum()
}

/// Central differences of `f` over every logit.
pub fn central_differences(z: &LogitMatrix, eps: f64, f: &dyn Fn(&LogitMatrix) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(z.frames() * z.clusters());
    for t in 0..z.frames() {
        for q in 0..z.clusters() {
            let mut plus = z.clone();
            plus.set(t, q, z.get(t, q) + eps);
            let mut minus = z.clone();
            minus.set(t, q, z.get(t, q) - eps);
            out.push((f(&plus) - f(&minus)) / (2.0 * eps));
        }
    }
    out
}

/// Random DAG over `n` states with state 0 initial and `n - 1` final. Every
/// non-final state has at least one edge to a later state, so all states
/// lie on some complete path.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, extra_edges: usize, labels: Label) -> Wfst {
    let mut edges = Vec::new();
    let mut push = |rng: &mut R, src: usize, dst: usize| {
        edges.push(Edge {
            src,
            dst,
            ilabel: rng.random_range(0..=labels),
            olabel: rng.random_range(0..=labels),
            log_weight: rng.random_range(-3.0..3.0),
        });
    };
    for s in 0..n - 1 {
        let dst = rng.random_range(s + 1..n);
        push(rng, s, dst);
    }
    for _ in 0..extra_edges {
        let src = rng.random_range(0..n - 1);
        let dst = rng.random_range(src + 1..n);
        push(rng, src, dst);
    }
    Wfst::new(n, 0, n - 1, edges).unwrap()
}

pub fn random_logits<R: Rng>(
    rng: &mut R,
    frames: usize,
    clusters: usize,
    scale: f64,
) -> LogitMatrix {
    let values = (0..frames * clusters)
        .map(|_| rng.random_range(-scale..scale))
        .collect();
    LogitMatrix::from_flat(frames, clusters, values).unwrap()
}

pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub fn sample_mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
