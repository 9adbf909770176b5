//! Scalar-loop reference implementations and random fixture generators.
//! Nothing here touches the tape; every quantity is computed element by
//! element straight from its definition.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use srlgnn::srl::{Span, SrlFrame};

pub type Mat = Vec<Vec<f64>>;

pub fn random_mat<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn flatten(m: &Mat) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}

/// Random frames over `token_count` tokens: up to `max_frames` frames with
/// up to three arguments each.
pub fn random_frames<R: Rng>(rng: &mut R, token_count: usize, max_frames: usize) -> Vec<SrlFrame> {
    let span = |rng: &mut R| {
        let start = rng.gen_range(0..token_count);
        let end = rng.gen_range(start + 1..=token_count.min(start + 4));
        Span::new(start, end)
    };
    (0..rng.gen_range(0..=max_frames))
        .map(|_| {
            let predicate = span(rng);
            let arguments = (0..rng.gen_range(0..=3)).map(|_| span(rng)).collect();
            SrlFrame { predicate, arguments }
        })
        .collect()
}

/// Distinct spans in ascending order, the node order of the graph.
pub fn oracle_nodes(frames: &[SrlFrame]) -> Vec<Span> {
    let set: BTreeSet<Span> = frames
        .iter()
        .flat_map(|f| std::iter::once(f.predicate).chain(f.arguments.iter().copied()))
        .collect();
    set.into_iter().collect()
}

/// Every unordered node pair, tested against both edge rules directly.
pub fn oracle_edges(frames: &[SrlFrame]) -> BTreeSet<(usize, usize)> {
    let nodes = oracle_nodes(frames);
    let mut edges = BTreeSet::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let (a, b) = (nodes[i], nodes[j]);
            let pred_arg = frames.iter().any(|f| {
                (f.predicate == a && f.arguments.contains(&b)) || (f.predicate == b && f.arguments.contains(&a))
            });
            let inside = |x: Span, y: Span| x != y && y.start <= x.start && x.end <= y.end;
            if pred_arg || inside(a, b) || inside(b, a) {
                edges.insert((i, j));
            }
        }
    }
    edges
}

pub fn oracle_neighbors(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| edges.contains(&(i.min(j), i.max(j))) && i != j)
                .collect()
        })
        .collect()
}

/// `h_i = act(sum_k mean_tok[k] * W[k][c])` with `mean_tok` the average of
/// the token rows at `offset + span`.
pub fn oracle_init_nodes(tokens: &Mat, spans: &[Span], offset: usize, w: &Mat, act: fn(f64) -> f64) -> Mat {
    let d_lm = w.len();
    let d_gcn = w[0].len();
    spans
        .iter()
        .map(|s| {
            let mut mean = vec![0.0; d_lm];
            for t in s.start..s.end {
                for k in 0..d_lm {
                    mean[k] += tokens[offset + t][k];
                }
            }
            let len = (s.end - s.start) as f64;
            (0..d_gcn)
                .map(|c| act((0..d_lm).map(|k| mean[k] / len * w[k][c]).sum()))
                .collect()
        })
        .collect()
}

/// `z_i = mean_{j in N_i} (h_j V)`, `h'_i = act(h_i W + z_i)`; `v = None`
/// means the identity.
pub fn oracle_gcn_layer(h: &Mat, nbrs: &[Vec<usize>], v: Option<&Mat>, w: &Mat, act: fn(f64) -> f64) -> Mat {
    let d = w.len();
    let apply = |x: &[f64], m: &Mat| -> Vec<f64> { (0..d).map(|c| (0..d).map(|k| x[k] * m[k][c]).sum()).collect() };
    (0..h.len())
        .map(|i| {
            let mut z = vec![0.0; d];
            for &j in &nbrs[i] {
                let msg = match v {
                    Some(v) => apply(&h[j], v),
                    None => h[j].clone(),
                };
                for c in 0..d {
                    z[c] += msg[c] / nbrs[i].len() as f64;
                }
            }
            let own = apply(&h[i], w);
            (0..d).map(|c| act(own[c] + z[c])).collect()
        })
        .collect()
}

/// `score_i = sum_c cls[c] * act(h_i W1)[c]`, then softmax (or the plain
/// ratio when `literal`), then the weighted node sum.
pub fn oracle_readout(h: &Mat, cls: &[f64], w1: &Mat, literal: bool, act: fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
    let d_gcn = w1.len();
    let d_lm = w1[0].len();
    let scores: Vec<f64> = h
        .iter()
        .map(|hi| {
            (0..d_lm)
                .map(|c| cls[c] * act((0..d_gcn).map(|k| hi[k] * w1[k][c]).sum()))
                .sum()
        })
        .collect();
    let alpha: Vec<f64> = if literal {
        let total: f64 = scores.iter().sum();
        scores.iter().map(|s| s / total).collect()
    } else {
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.iter().map(|e| e / total).collect()
    };
    let mut hg = vec![0.0; d_gcn];
    for (i, hi) in h.iter().enumerate() {
        for c in 0..d_gcn {
            hg[c] += alpha[i] * hi[c];
        }
    }
    (alpha, hg)
}

/// `sum_k [cls ; hg][k] * w[k] + b`
pub fn oracle_head(cls: &[f64], hg: &[f64], w: &[f64], b: f64) -> f64 {
    cls.iter().chain(hg).zip(w).map(|(x, y)| x * y).sum::<f64>() + b
}

pub mod fidelity;
