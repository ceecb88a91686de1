//! Minimum-weight perfect matching decoding of the syndrome difference,
//! post-selection on the estimated error weight, and the logical verdict.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::blossom::min_weight_perfect_matching;
use crate::code::{syndrome, CheckKind, CodeLayout, SyndromeBits};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliFrame};

/// Edge-weight choice for the decoding graphs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weighting {
    #[default]
    Uniform,
    /// Log-likelihood weights from each qubit's marginal error rate.
    PerQubit,
}

/// Weights handed to [`build_decoding_graphs`].
#[derive(Debug, Clone, PartialEq)]
pub enum QubitWeights {
    Uniform,
    /// Total depolarizing probability of each data qubit.
    Depolarizing(Vec<f64>),
}

/// Integer resolution of log-likelihood weights.
const WEIGHT_SCALE: f64 = 1000.0;

fn log_likelihood_weight(p_total: f64) -> i64 {
    // X (or Z) component of a depolarizing marginal
    let p = (2.0 / 3.0 * p_total).clamp(1e-12, 0.5);
    (((1.0 - p) / p).ln() * WEIGHT_SCALE).round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub weight: i64,
    /// Data qubit whose error flips both endpoints.
    pub qubit: usize,
}

/// Check graph of one type. Node `num_checks` is the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingGraph {
    kind: CheckKind,
    num_checks: usize,
    edges: Vec<GraphEdge>,
    /// Shortest-path distances, `dist[s * nodes + t]`.
    dist: Vec<i64>,
    /// Last edge on the shortest path from `s` to `t`, `pred[s * nodes + t]`.
    pred: Vec<usize>,
}

impl DecodingGraph {
    fn new(layout: &CodeLayout, kind: CheckKind, weight_of: &dyn Fn(usize) -> i64) -> Self {
        let num_checks = layout.checks(kind).len();
        let boundary = num_checks;
        let edges: Vec<GraphEdge> = (0..layout.num_data())
            .map(|q| {
                let adj = layout.adjacent_checks(kind, q);
                let (a, b) = match adj {
                    [a] => (*a, boundary),
                    [a, b] => (*a, *b),
                    _ => unreachable!("data qubit touches one or two checks of each type"),
                };
                GraphEdge {
                    a,
                    b,
                    weight: weight_of(q),
                    qubit: q,
                }
            })
            .collect();

        let nodes = num_checks + 1;
        let mut adjacency = vec![Vec::new(); nodes];
        for (e, edge) in edges.iter().enumerate() {
            adjacency[edge.a].push(e);
            adjacency[edge.b].push(e);
        }
        let mut dist = vec![i64::MAX; nodes * nodes];
        let mut pred = vec![usize::MAX; nodes * nodes];
        let mut heap = BinaryHeap::new();
        for s in 0..nodes {
            let row = s * nodes;
            dist[row + s] = 0;
            heap.push(Reverse((0i64, s)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[row + u] {
                    continue;
                }
                for &e in &adjacency[u] {
                    let edge = &edges[e];
                    let v = if edge.a == u { edge.b } else { edge.a };
                    let nd = d + edge.weight;
                    if nd < dist[row + v] {
                        dist[row + v] = nd;
                        pred[row + v] = e;
                        heap.push(Reverse((nd, v)));
                    }
                }
            }
        }
        DecodingGraph {
            kind,
            num_checks,
            edges,
            dist,
            pred,
        }
    }

    pub fn kind(&self) -> CheckKind {
        self.kind
    }

    pub fn num_checks(&self) -> usize {
        self.num_checks
    }

    pub fn boundary(&self) -> usize {
        self.num_checks
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn distance(&self, s: usize, t: usize) -> i64 {
        self.dist[s * (self.num_checks + 1) + t]
    }

    /// Flips the qubits along the stored shortest path `s -> t`.
    fn flip_path(&self, s: usize, t: usize, out: &mut [bool]) {
        let nodes = self.num_checks + 1;
        let mut cur = t;
        while cur != s {
            let e = self.pred[s * nodes + cur];
            let edge = &self.edges[e];
            out[edge.qubit] ^= true;
            cur = if edge.a == cur { edge.b } else { edge.a };
        }
    }

    /// Minimum-weight set of qubits whose flips reproduce `defects`.
    fn match_defects(&self, defects: &[usize], num_qubits: usize) -> Vec<bool> {
        let mut flips = vec![false; num_qubits];
        let k = defects.len();
        if k == 0 {
            return flips;
        }
        let b = self.boundary();
        // defects 0..k, boundary copies k..2k; copies pair freely at zero cost
        let mut edges = Vec::with_capacity(k * k);
        for i in 0..k {
            let bi = self.distance(defects[i], b);
            edges.push((i, k + i, bi));
            for j in i + 1..k {
                let dij = self.distance(defects[i], defects[j]);
                if dij < bi + self.distance(defects[j], b) {
                    edges.push((i, j, dij));
                }
                edges.push((k + i, k + j, 0));
            }
        }
        let mate = min_weight_perfect_matching(2 * k, &edges).expect("boundary copies guarantee a perfect matching");
        for i in 0..k {
            let m = mate[i];
            if m == k + i {
                self.flip_path(defects[i], b, &mut flips);
            } else if m < k && i < m {
                self.flip_path(defects[i], defects[m], &mut flips);
            }
        }
        flips
    }
}

/// X-check graph (corrects Z) and Z-check graph (corrects X).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingGraphs {
    pub x_graph: DecodingGraph,
    pub z_graph: DecodingGraph,
    num_qubits: usize,
}

pub fn build_decoding_graphs(layout: &CodeLayout, weights: &QubitWeights) -> DecodingGraphs {
    let weight_of = |q: usize| match weights {
        QubitWeights::Uniform => 1,
        QubitWeights::Depolarizing(p) => log_likelihood_weight(p[q]),
    };
    DecodingGraphs {
        x_graph: DecodingGraph::new(layout, CheckKind::X, &weight_of),
        z_graph: DecodingGraph::new(layout, CheckKind::Z, &weight_of),
        num_qubits: layout.num_data(),
    }
}

/// Estimated error to undo on Bob's side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    pub z_correction: Vec<bool>,
    pub x_correction: Vec<bool>,
}

impl Correction {
    pub fn identity(n: usize) -> Self {
        Correction {
            z_correction: vec![false; n],
            x_correction: vec![false; n],
        }
    }

    /// Number of distinct qubits touched; an estimated Y counts once.
    pub fn estimated_weight(&self) -> usize {
        self.z_correction
            .iter()
            .zip(&self.x_correction)
            .filter(|(z, x)| **z || **x)
            .count()
    }

    pub fn as_frame(&self) -> PauliFrame {
        PauliFrame::from_labels(
            self.x_correction
                .iter()
                .zip(&self.z_correction)
                .map(|(&x, &z)| match (x, z) {
                    (false, false) => Pauli::I,
                    (true, false) => Pauli::X,
                    (false, true) => Pauli::Z,
                    (true, true) => Pauli::Y,
                })
                .collect(),
        )
    }
}

pub fn decode(graphs: &DecodingGraphs, syndrome: &SyndromeBits) -> Correction {
    Correction {
        z_correction: graphs.x_graph.match_defects(&syndrome.x_defects, graphs.num_qubits),
        x_correction: graphs.z_graph.match_defects(&syndrome.z_defects, graphs.num_qubits),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Accept,
    Abort,
}

/// Accepts iff the estimated weight does not exceed `w_thr`.
pub fn post_select(correction: &Correction, w_thr: usize) -> Decision {
    if correction.estimated_weight() <= w_thr {
        Decision::Accept
    } else {
        Decision::Abort
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogicalOutcome {
    NoLogicalError,
    LogicalError,
}

/// Whether the residual error after correction flips a logical operator.
/// The residual must have trivial syndrome.
pub fn logical_verdict(frame: &PauliFrame, correction: &Correction, layout: &CodeLayout) -> Result<LogicalOutcome> {
    let residual = frame.compose(&correction.as_frame());
    if !syndrome(layout, &residual).is_trivial() {
        return Err(Error::SyndromeMismatch);
    }
    Ok(residual_verdict(&residual, layout))
}

/// Logical verdict of a residual assumed to commute with every check.
pub(crate) fn residual_verdict(residual: &PauliFrame, layout: &CodeLayout) -> LogicalOutcome {
    let z_flip = layout.logical_x_support().iter().filter(|&&q| residual.has_z(q)).count() % 2 == 1;
    let x_flip = layout.logical_z_support().iter().filter(|&&q| residual.has_x(q)).count() % 2 == 1;
    if z_flip || x_flip {
        LogicalOutcome::LogicalError
    } else {
        LogicalOutcome::NoLogicalError
    }
}
