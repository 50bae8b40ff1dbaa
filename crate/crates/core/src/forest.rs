//! Multi-target random-forest regression.
//!
//! Each tree is a CART regressor whose leaves store the mean output
//! vector of their samples. Splits minimize the summed squared error of
//! the two children over all output dimensions; candidate thresholds
//! are midpoints between consecutive distinct feature values.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{RandomSource, Stream};

/// Paired input/output rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingDataset {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

impl TrainingDataset {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::Training(format!(
                "{} input rows but {} output rows",
                inputs.len(),
                outputs.len()
            )));
        }
        let ok = |rows: &[Vec<f64>]| rows.windows(2).all(|w| w[0].len() == w[1].len());
        if !ok(&inputs) || !ok(&outputs) {
            return Err(Error::Training("ragged dataset rows".into()));
        }
        Ok(Self { inputs, outputs })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub n_features: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
}

impl ForestParams {
    /// One tree per archive row and every variable considered at each split.
    pub fn for_dataset(n_samples: usize, n_var: usize) -> Self {
        Self {
            n_trees: n_samples,
            n_features: n_var,
            ..Self::default()
        }
    }
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            n_features: usize::MAX,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_depth: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Root is node 0. `x[feature] <= threshold` routes left.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_for(&self, x: &[f64]) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn from_leaf(value: Vec<f64>) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<Tree>,
    params: ForestParams,
    seed: u64,
    n_inputs: usize,
    n_outputs: usize,
}

/// Chosen split of a node's samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Summed squared error of both children across all outputs.
    pub score: f64,
}

/// Dataset in scan-friendly layout: inputs column-major, outputs row-major.
struct Matrix {
    n: usize,
    n_out: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    sq_norms: Vec<f64>,
}

impl Matrix {
    fn new(data: &TrainingDataset) -> Self {
        let n = data.len();
        let n_in = data.n_inputs();
        let mut x = vec![0.0; n * n_in];
        for (r, row) in data.inputs.iter().enumerate() {
            for (f, v) in row.iter().enumerate() {
                x[f * n + r] = *v;
            }
        }
        let y: Vec<f64> = data.outputs.iter().flatten().copied().collect();
        let sq_norms = data.outputs.iter().map(|y| y.iter().map(|v| v * v).sum()).collect();
        Self {
            n,
            n_out: data.n_outputs(),
            x,
            y,
            sq_norms,
        }
    }

    #[inline]
    fn xv(&self, feature: usize, row: usize) -> f64 {
        self.x[feature * self.n + row]
    }

    #[inline]
    fn yr(&self, row: usize) -> &[f64] {
        &self.y[row * self.n_out..(row + 1) * self.n_out]
    }

    /// Weighted output sum, weighted squared norm and total weight.
    fn moments(&self, rows: &[u32], w: &[f64]) -> (Vec<f64>, f64, f64) {
        let mut sum = vec![0.0; self.n_out];
        let (mut sq, mut total) = (0.0, 0.0);
        for &r in rows {
            let r = r as usize;
            axpy(&mut sum, w[r], self.yr(r));
            sq += w[r] * self.sq_norms[r];
            total += w[r];
        }
        (sum, sq, total)
    }

    /// Best split of the rows in `sorted` (one ascending row list per
    /// feature, all holding the same rows) over `features`.
    fn best_split(&self, sorted: &[&[u32]], features: &[usize], w: &[f64], min_leaf: f64) -> Option<Split> {
        let rows = sorted[features[0]];
        let n = rows.len();
        if n < 2 {
            return None;
        }
        let (total, total_sq, total_w) = self.moments(rows, w);
        let total_norm = dot(&total, &total);
        let mut best: Option<Split> = None;
        let ty: Vec<f64> = rows.iter().map(|&r| (r, dot(&total, self.yr(r as usize)))).fold(
            vec![0.0; self.n],
            |mut acc, (r, v)| {
                acc[r as usize] = v;
                acc
            },
        );
        let mut left = vec![0.0; self.n_out];
        for &feature in features {
            let order = sorted[feature];
            let first = self.xv(feature, order[0] as usize);
            if first == self.xv(feature, order[n - 1] as usize) {
                continue;
            }
            left.iter_mut().for_each(|v| *v = 0.0);
            let (mut left_sq, mut left_w, mut left_norm, mut cross) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..n - 1 {
                let r = order[i] as usize;
                let wr = w[r];
                let y = self.yr(r);
                // |L + w y|^2 incrementally
                let mut ly = 0.0;
                for (l, v) in left.iter_mut().zip(y) {
                    ly += *l * v;
                    *l += wr * v;
                }
                left_norm += 2.0 * wr * ly + wr * wr * self.sq_norms[r];
                cross += wr * ty[r];
                left_sq += wr * self.sq_norms[r];
                left_w += wr;
                let v = self.xv(feature, r);
                let next = self.xv(feature, order[i + 1] as usize);
                if v == next {
                    continue;
                }
                let right_w = total_w - left_w;
                if left_w < min_leaf || right_w < min_leaf {
                    continue;
                }
                let right_norm = total_norm - 2.0 * cross + left_norm;
                let sse_l = (left_sq - left_norm / left_w).max(0.0);
                let sse_r = ((total_sq - left_sq) - right_norm / right_w).max(0.0);
                let score = sse_l + sse_r;
                if best.map_or(true, |b| score < b.score) {
                    let mut threshold = 0.5 * (v + next);
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(Split {
                        feature,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }
}

#[inline]
fn axpy(acc: &mut [f64], a: f64, row: &[f64]) {
    for (s, v) in acc.iter_mut().zip(row) {
        *s += a * v;
    }
}

/// Weighted mean taken as offsets from the first row and clamped to the
/// observed range, so equal rows average to themselves exactly.
fn anchored_mean<'a>(rows: impl Iterator<Item = (&'a [f64], f64)>, n_out: usize) -> Vec<f64> {
    let mut rows = rows.peekable();
    let first = rows.peek().expect("mean of no rows").0.to_vec();
    let (mut lo, mut hi) = (first.clone(), first.clone());
    let mut acc = vec![0.0; n_out];
    let mut total = 0.0;
    for (y, w) in rows {
        for k in 0..n_out {
            acc[k] += w * (y[k] - first[k]);
            lo[k] = lo[k].min(y[k]);
            hi[k] = hi[k].max(y[k]);
        }
        total += w;
    }
    (0..n_out).map(|k| (first[k] + acc[k] / total).clamp(lo[k], hi[k])).collect()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-feature ascending row order (ties by row index) of the rows with
/// positive weight.
fn presort(m: &Matrix, n_in: usize, w: &[f64]) -> Vec<Vec<u32>> {
    let rows: Vec<u32> = (0..m.n as u32).filter(|&r| w[r as usize] > 0.0).collect();
    (0..n_in)
        .map(|f| {
            let mut o = rows.clone();
            o.sort_by(|&a, &b| m.xv(f, a as usize).total_cmp(&m.xv(f, b as usize)).then(a.cmp(&b)));
            o
        })
        .collect()
}

/// Best split of the given rows over every feature, as used at each node.
/// Repeated rows count with their multiplicity.
pub fn best_split(data: &TrainingDataset, rows: &[usize], min_samples_leaf: usize) -> Option<Split> {
    let m = Matrix::new(data);
    let mut w = vec![0.0; m.n];
    rows.iter().for_each(|&r| w[r] += 1.0);
    let n_in = data.n_inputs();
    let sorted = presort(&m, n_in, &w);
    let views: Vec<&[u32]> = sorted.iter().map(Vec::as_slice).collect();
    let features: Vec<usize> = (0..n_in).collect();
    m.best_split(&views, &features, &w, min_samples_leaf.max(1) as f64)
}

/// Grows one tree on row weights `w` (bootstrap multiplicities).
fn grow_tree(m: &Matrix, n_in: usize, w: &[f64], params: &ForestParams, rng: &mut Stream) -> Tree {
    let n_feat = params.n_features.min(n_in).max(1);
    let all: Vec<usize> = (0..n_in).collect();
    let mut sorted = presort(m, n_in, w);
    let mut goes_left = vec![false; m.n];
    let mut scratch: Vec<u32> = Vec::with_capacity(sorted[0].len());
    let mut nodes = vec![Node::Leaf { value: Vec::new() }];
    let mut stack = vec![(0usize, 0usize, sorted[0].len(), 0usize)];
    let min_leaf = params.min_samples_leaf.max(1) as f64;
    while let Some((slot, start, end, depth)) = stack.pop() {
        let rows = &sorted[0][start..end];
        let (sum, sq, weight) = m.moments(rows, w);
        let parent_sse = (sq - dot(&sum, &sum) / weight).max(0.0);
        let depth_ok = params.max_depth.map_or(true, |d| depth < d);
        let split = if weight >= params.min_samples_split as f64 && depth_ok && parent_sse > 1e-14 {
            let features = if n_feat == n_in {
                all.clone()
            } else {
                let mut f = sample(rng, n_in, n_feat).into_vec();
                f.sort_unstable();
                f
            };
            let views: Vec<&[u32]> = sorted.iter().map(|o| &o[start..end]).collect();
            m.best_split(&views, &features, w, min_leaf)
                .filter(|s| s.score < parent_sse * (1.0 - 1e-12))
        } else {
            None
        };
        match split {
            None => {
                let rows = &sorted[0][start..end];
                let value = anchored_mean(rows.iter().map(|&r| (m.yr(r as usize), w[r as usize])), m.n_out);
                nodes[slot] = Node::Leaf { value };
            }
            Some(s) => {
                let mut n_left = 0;
                for &r in &sorted[0][start..end] {
                    let l = m.xv(s.feature, r as usize) <= s.threshold;
                    goes_left[r as usize] = l;
                    n_left += l as usize;
                }
                for order in sorted.iter_mut() {
                    let seg = &mut order[start..end];
                    scratch.clear();
                    let mut k = 0;
                    for i in 0..seg.len() {
                        let r = seg[i];
                        if goes_left[r as usize] {
                            seg[k] = r;
                            k += 1;
                        } else {
                            scratch.push(r);
                        }
                    }
                    seg[k..].copy_from_slice(&scratch);
                }
                let left = nodes.len();
                nodes.push(Node::Leaf { value: Vec::new() });
                let right = nodes.len();
                nodes.push(Node::Leaf { value: Vec::new() });
                nodes[slot] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                };
                let mid = start + n_left;
                stack.push((right, mid, end, depth + 1));
                stack.push((left, start, mid, depth + 1));
            }
        }
    }
    Tree { nodes }
}

impl Forest {
    /// Trains `params.n_trees` trees. Tree `i` draws from its own stream,
    /// so the result does not depend on how trees are scheduled.
    pub fn fit(data: &TrainingDataset, params: ForestParams, rng: &RandomSource) -> Result<Forest> {
        if data.is_empty() {
            return Err(Error::Training("empty dataset".into()));
        }
        if params.n_trees == 0 || params.min_samples_split < 2 || params.n_features == 0 {
            return Err(Error::Training(format!("invalid forest parameters {params:?}")));
        }
        let m = Matrix::new(data);
        let n = data.len();
        let n_in = data.n_inputs();
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut stream = rng.indexed_stream("tree", t as u64);
                let mut w = vec![0.0; n];
                if params.bootstrap {
                    (0..n).for_each(|_| w[stream.gen_range(0..n)] += 1.0);
                } else {
                    w.iter_mut().for_each(|v| *v = 1.0);
                }
                grow_tree(&m, n_in, &w, &params, &mut stream)
            })
            .collect();
        Ok(Forest {
            trees,
            params,
            seed: rng.seed(),
            n_inputs: data.n_inputs(),
            n_outputs: data.n_outputs(),
        })
    }

    /// Forest built from pre-made trees.
    pub fn from_trees(trees: Vec<Tree>, n_inputs: usize, n_outputs: usize) -> Result<Forest> {
        if trees.is_empty() {
            return Err(Error::contract("forest without trees"));
        }
        Ok(Forest {
            params: ForestParams {
                n_trees: trees.len(),
                ..ForestParams::default()
            },
            trees,
            seed: 0,
            n_inputs,
            n_outputs,
        })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Mean of the per-tree leaf outputs.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.trees.is_empty() {
            return Err(Error::contract("predict on an unfitted forest"));
        }
        if x.len() != self.n_inputs {
            return Err(Error::contract(format!("expected {} inputs, got {}", self.n_inputs, x.len())));
        }
        let leaves: Vec<&[f64]> = self.trees.iter().map(|t| t.leaf_for(x)).collect();
        Ok(anchored_mean(leaves.iter().map(|l| (*l, 1.0)), self.n_outputs))
    }

    /// Text dump (JSON) of the whole model.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("forest serializes")
    }

    pub fn from_json(s: &str) -> Result<Forest> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};
    use rand::Rng;

    fn dataset(n: usize, seed: u64) -> TrainingDataset {
        let mut rng = RandomSource::new(seed).stream("data");
        let inputs: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
        let outputs = inputs
            .iter()
            .map(|x| vec![x[0] * x[1], (x[2] - 0.5).abs(), if x[0] > 0.4 { 1.0 } else { 0.0 }])
            .collect();
        TrainingDataset::new(inputs, outputs).unwrap()
    }

    #[test]
    fn single_sample_is_exact() {
        let data = TrainingDataset::new(vec![vec![0.3, 0.7]], vec![vec![0.9, 0.1]]).unwrap();
        let f = Forest::fit(&data, ForestParams::for_dataset(1, 2), &RandomSource::new(3)).unwrap();
        for q in [[0.0, 0.0], [5.0, -2.0], [0.3, 0.7]] {
            assert_eq!(f.predict(&q).unwrap(), vec![0.9, 0.1]);
        }
    }

    #[test]
    fn constant_outputs_are_exact() {
        let mut data = dataset(30, 1);
        data.outputs.iter_mut().for_each(|y| *y = vec![0.25, 0.5, 0.75]);
        let f = Forest::fit(&data, ForestParams::for_dataset(30, 3), &RandomSource::new(3)).unwrap();
        assert_eq!(f.predict(&[0.1, 0.9, 2.0]).unwrap(), vec![0.25, 0.5, 0.75]);
        assert!(f.trees().iter().all(|t| t.nodes().len() == 1));
    }

    #[test]
    fn averaging_hand_built_trees() {
        let f = Forest::from_trees(vec![Tree::from_leaf(vec![1.0, 0.0]), Tree::from_leaf(vec![0.0, 3.0])], 2, 2).unwrap();
        assert_eq!(f.predict(&[0.5, 0.5]).unwrap(), vec![0.5, 1.5]);
        let same = Forest::from_trees(vec![Tree::from_leaf(vec![0.4]); 5], 1, 1).unwrap();
        assert_eq!(same.predict(&[9.0]).unwrap(), vec![0.4]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            Forest::fit(&TrainingDataset::default(), ForestParams::default(), &RandomSource::new(0)),
            Err(Error::Training(_))
        ));
        assert!(TrainingDataset::new(vec![vec![0.0]], vec![]).is_err());
        let f = Forest::fit(&dataset(5, 0), ForestParams::for_dataset(5, 3), &RandomSource::new(0)).unwrap();
        assert!(f.predict(&[0.0]).is_err());
    }

    #[test]
    fn unbootstrapped_tree_interpolates_training_data() {
        let data = dataset(40, 8);
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            ..ForestParams::for_dataset(40, 3)
        };
        let f = Forest::fit(&data, params, &RandomSource::new(0)).unwrap();
        for (x, y) in data.inputs.iter().zip(&data.outputs) {
            let p = f.predict(x).unwrap();
            for (a, b) in p.iter().zip(y) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        // root split of the grown tree is the exhaustive best split
        let rows: Vec<usize> = (0..40).collect();
        let best = best_split(&data, &rows, 1).unwrap();
        match &f.trees()[0].nodes()[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!((*feature, *threshold), (best.feature, best.threshold));
            }
            Node::Leaf { .. } => panic!("root should split"),
        }
    }

    #[test]
    fn depth_limit_and_serialization() {
        let data = dataset(50, 2);
        let params = ForestParams {
            max_depth: Some(2),
            n_trees: 4,
            ..ForestParams::default()
        };
        let f = Forest::fit(&data, params, &RandomSource::new(4)).unwrap();
        assert!(f.trees().iter().all(|t| t.depth() <= 2));
        let back = Forest::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn feature_subsampling_is_seeded() {
        let data = dataset(50, 2);
        let params = ForestParams {
            n_features: 1,
            n_trees: 6,
            ..ForestParams::default()
        };
        let a = Forest::fit(&data, params, &RandomSource::new(4)).unwrap();
        let b = Forest::fit(&data, params, &RandomSource::new(4)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn predictions_stay_within_training_range(seed in 0u64..1000, q in proptest::collection::vec(-1.0f64..2.0, 3)) {
            let data = dataset(25, seed);
            let f = Forest::fit(&data, ForestParams::for_dataset(25, 3), &RandomSource::new(seed)).unwrap();
            let p = f.predict(&q).unwrap();
            for d in 0..3 {
                let lo = data.outputs.iter().map(|y| y[d]).fold(f64::INFINITY, f64::min);
                let hi = data.outputs.iter().map(|y| y[d]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(p[d] >= lo - 1e-12 && p[d] <= hi + 1e-12);
            }
        }
    }
}
