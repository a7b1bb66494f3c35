//! Token IOU and deterministic maximum bipartite matching of argument spans.
//!
//! Edges connect predicted and reference spans whose IOU reaches the
//! threshold. The chosen matching has maximum cardinality; among those, the
//! largest total IOU; with [`align_labeled`], then the most label-agreeing
//! pairs; among those, the lexicographically smallest assignment when
//! predicted spans are visited in `(start, end, index)` order and each takes
//! the earliest feasible reference span in the same order.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Span;

/// Tolerance for comparing sums of IOU values.
const EPS: f64 = 1e-9;

pub fn iou(a: Span, b: Span) -> f64 {
    let inter = a.intersection_len(&b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("IOU threshold must lie in (0, 1], got {0}")]
pub struct InvalidThreshold(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct IouThreshold(f64);

impl IouThreshold {
    pub fn new(value: f64) -> Result<Self, InvalidThreshold> {
        if value > 0.0 && value <= 1.0 {
            Ok(IouThreshold(value))
        } else {
            Err(InvalidThreshold(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn accepts(self, a: Span, b: Span) -> bool {
        let inter = a.intersection_len(&b);
        let union = a.len() + b.len() - inter;
        // inter/union >= t without a division
        inter > 0 && inter as f64 >= self.0 * union as f64
    }
}

impl Default for IouThreshold {
    fn default() -> Self {
        IouThreshold(0.5)
    }
}

impl TryFrom<f64> for IouThreshold {
    type Error = InvalidThreshold;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        IouThreshold::new(value)
    }
}

impl From<IouThreshold> for f64 {
    fn from(t: IouThreshold) -> f64 {
        t.0
    }
}

impl fmt::Display for IouThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlignedPair {
    pub pred: usize,
    pub gold: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MatchResult {
    /// Sorted by predicted index.
    pub pairs: Vec<AlignedPair>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_gold: Vec<usize>,
}

impl MatchResult {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn gold_for(&self, pred: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.pred == pred).map(|p| p.gold)
    }

    pub fn total_iou(&self) -> f64 {
        self.pairs.iter().map(|p| p.iou).sum()
    }
}

/// Edge weight: IOU, then label agreement as a secondary criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Gain {
    iou: f64,
    agree: i64,
}

impl Gain {
    const ZERO: Gain = Gain { iou: 0.0, agree: 0 };

    fn plus(self, o: Gain) -> Gain {
        Gain {
            iou: self.iou + o.iou,
            agree: self.agree + o.agree,
        }
    }

    fn minus(self, o: Gain) -> Gain {
        Gain {
            iou: self.iou - o.iou,
            agree: self.agree - o.agree,
        }
    }

    fn beats(self, o: Gain) -> bool {
        if (self.iou - o.iou).abs() > EPS {
            self.iou > o.iou
        } else {
            self.agree > o.agree
        }
    }

    fn same(self, o: Gain) -> bool {
        (self.iou - o.iou).abs() <= EPS && self.agree == o.agree
    }
}

/// Value of a matching: cardinality first, then total weight.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Value {
    size: usize,
    weight: Gain,
}

impl Value {
    fn same(self, other: Value) -> bool {
        self.size == other.size && self.weight.same(other.weight)
    }
}

/// Weighted bipartite graph restricted to active rows and columns.
struct Graph<'a> {
    weights: &'a [Vec<Option<Gain>>],
    rows: Vec<bool>,
    cols: Vec<bool>,
}

impl Graph<'_> {
    /// Maximum-weight matching among maximum-cardinality matchings, via
    /// successive longest augmenting paths. Each augmentation keeps the
    /// matching heaviest for its size, so the last one is the optimum.
    #[allow(clippy::needless_range_loop)]
    fn optimum(&self) -> Value {
        let (n, m) = (self.rows.len(), self.cols.len());
        let mut row_match: Vec<Option<usize>> = vec![None; n];
        let mut col_match: Vec<Option<usize>> = vec![None; m];
        let mut value = Value {
            size: 0,
            weight: Gain::ZERO,
        };

        loop {
            // Bellman-Ford over rows: dist[r] is the best gain of an
            // alternating path from a free row ending at row r.
            let mut dist: Vec<Option<Gain>> = vec![None; n];
            let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
            for r in 0..n {
                if self.rows[r] && row_match[r].is_none() {
                    dist[r] = Some(Gain::ZERO);
                }
            }
            for _ in 0..=n {
                let mut changed = false;
                for r in 0..n {
                    let Some(d) = dist[r] else { continue };
                    for c in 0..m {
                        let Some(w) = self.edge(r, c) else { continue };
                        if row_match[r] == Some(c) {
                            continue;
                        }
                        if let Some(next) = col_match[c] {
                            let back = self.weights[next][c].unwrap_or(Gain::ZERO);
                            let gain = d.plus(w).minus(back);
                            if dist[next].is_none_or(|old| gain.beats(old)) {
                                dist[next] = Some(gain);
                                parent[next] = Some((r, c));
                                changed = true;
                            }
                        }
                    }
                }
                if !changed {
                    break;
                }
            }

            let mut best: Option<(Gain, usize, usize)> = None;
            for r in 0..n {
                let Some(d) = dist[r] else { continue };
                for c in 0..m {
                    if col_match[c].is_some() {
                        continue;
                    }
                    if let Some(w) = self.edge(r, c) {
                        let gain = d.plus(w);
                        if best.is_none_or(|(g, _, _)| gain.beats(g)) {
                            best = Some((gain, r, c));
                        }
                    }
                }
            }
            let Some((gain, mut r, mut c)) = best else {
                return value;
            };

            loop {
                let previous = row_match[r];
                row_match[r] = Some(c);
                col_match[c] = Some(r);
                match (previous, parent[r]) {
                    (Some(_), Some((pr, pc))) => {
                        r = pr;
                        c = pc;
                    }
                    _ => break,
                }
            }
            value.size += 1;
            value.weight = value.weight.plus(gain);
        }
    }

    fn edge(&self, r: usize, c: usize) -> Option<Gain> {
        if self.rows[r] && self.cols[c] {
            self.weights[r][c]
        } else {
            None
        }
    }
}

fn order(spans: &[Span]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..spans.len()).collect();
    idx.sort_by_key(|&i| (spans[i].start, spans[i].end, i));
    idx
}

/// Align predicted spans to reference spans under the IOU threshold.
pub fn align(pred: &[Span], gold: &[Span], threshold: IouThreshold) -> MatchResult {
    align_labeled(pred, gold, threshold, |_, _| false)
}

/// Like [`align`], but among matchings of equal size and total IOU prefer
/// the one with the most pairs for which `agree(pred, gold)` holds. The
/// chosen matching is the same whichever side is the reference, up to
/// order-based ties that cannot change the number of agreeing pairs.
pub fn align_labeled(
    pred: &[Span],
    gold: &[Span],
    threshold: IouThreshold,
    agree: impl Fn(usize, usize) -> bool,
) -> MatchResult {
    let weights: Vec<Vec<Option<Gain>>> = pred
        .iter()
        .enumerate()
        .map(|(pi, &p)| {
            gold.iter()
                .enumerate()
                .map(|(gi, &g)| {
                    threshold.accepts(p, g).then(|| Gain {
                        iou: iou(p, g),
                        agree: agree(pi, gi) as i64,
                    })
                })
                .collect()
        })
        .collect();

    let mut graph = Graph {
        weights: &weights,
        rows: vec![true; pred.len()],
        cols: vec![true; gold.len()],
    };
    let target = graph.optimum();

    let mut committed = Value {
        size: 0,
        weight: Gain::ZERO,
    };
    let mut pairs = Vec::with_capacity(target.size);
    let gold_order = order(gold);

    for r in order(pred) {
        if committed.size == target.size {
            break;
        }
        graph.rows[r] = false;
        for &c in &gold_order {
            let Some(w) = weights[r][c].filter(|_| graph.cols[c]) else {
                continue;
            };
            graph.cols[c] = false;
            let rest = graph.optimum();
            let total = Value {
                size: committed.size + 1 + rest.size,
                weight: committed.weight.plus(w).plus(rest.weight),
            };
            if total.same(target) {
                committed.size += 1;
                committed.weight = committed.weight.plus(w);
                pairs.push(AlignedPair {
                    pred: r,
                    gold: c,
                    iou: w.iou,
                });
                break;
            }
            graph.cols[c] = true;
        }
    }

    pairs.sort_by_key(|p| p.pred);
    let mut used_pred = vec![false; pred.len()];
    let mut used_gold = vec![false; gold.len()];
    for p in &pairs {
        used_pred[p.pred] = true;
        used_gold[p.gold] = true;
    }
    MatchResult {
        pairs,
        unmatched_pred: (0..pred.len()).filter(|&i| !used_pred[i]).collect(),
        unmatched_gold: (0..gold.len()).filter(|&i| !used_gold[i]).collect(),
    }
}
