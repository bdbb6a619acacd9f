//! From-scratch random forest over sparse count vectors.
//!
//! Trees split on per-feature count thresholds chosen by entropy gain,
//! with candidate thresholds at midpoints between consecutive distinct
//! observed counts (zero included for documents lacking the feature).
//! Split search is sparse-aware: for each candidate feature only rows
//! with a nonzero count are materialized, zeros are handled in aggregate.
//!
//! Training is deterministic: each tree derives its RNG from
//! `seed + tree_index`, so results are identical at any parallelism level.
//! Ties are fixed — equal-gain splits resolve to the lowest feature index
//! then lowest threshold, and tied votes resolve to the smaller class.

use std::io::{Read, Write};

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::PolarityClass;
use crate::features::CountVector;
use crate::seed::seeded_rng;

pub const FOREST_SCHEMA_VERSION: u32 = 1;

/// Splits with gain at or below this are treated as zero-gain and rejected.
const GAIN_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("entropy of an empty node is undefined")]
    EmptyNode,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid forest parameters: {0}")]
    InvalidParams(&'static str),
    #[error("unsupported forest schema version {got} (expected {expected})")]
    SchemaVersion { expected: u32, got: u32 },
    #[error(transparent)]
    Serde(#[from] serde_json::Error),
}

/// How many candidate features each node draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureRule {
    #[serde(rename = "sqrt")]
    Sqrt,
    #[serde(rename = "all")]
    All,
    #[serde(rename = "fixed")]
    Fixed(usize),
}

impl FeatureRule {
    /// Candidate count for a vocabulary of `dim` features, at least 1, at most `dim`.
    pub fn count(self, dim: usize) -> usize {
        let k = match self {
            FeatureRule::Sqrt => (dim as f64).sqrt().floor() as usize,
            FeatureRule::All => dim,
            FeatureRule::Fixed(k) => k,
        };
        k.max(1).min(dim)
    }
}

impl std::str::FromStr for FeatureRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sqrt" => Ok(FeatureRule::Sqrt),
            "all" => Ok(FeatureRule::All),
            other => other
                .parse::<usize>()
                .map(FeatureRule::Fixed)
                .map_err(|_| format!("expected `sqrt`, `all`, or an integer, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Unbounded when absent.
    pub max_depth: Option<u32>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub features_per_split: FeatureRule,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            features_per_split: FeatureRule::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<(), ForestError> {
        if self.n_trees == 0 {
            return Err(ForestError::InvalidParams("n_trees must be at least 1"));
        }
        if self.min_samples_split < 2 {
            return Err(ForestError::InvalidParams(
                "min_samples_split must be at least 2",
            ));
        }
        if self.min_samples_leaf < 1 {
            return Err(ForestError::InvalidParams(
                "min_samples_leaf must be at least 1",
            ));
        }
        if let FeatureRule::Fixed(0) = self.features_per_split {
            return Err(ForestError::InvalidParams(
                "features_per_split must be at least 1",
            ));
        }
        Ok(())
    }
}

/// A threshold split: rows with `count(feature) <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: u32,
    pub threshold: f64,
    /// Information gain in bits at training time.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split { split: Split, left: u32, right: u32 },
    Leaf { counts: [u32; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
    root: u32,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> u32 {
        self.root
    }

    /// Training class counts at the leaf this vector routes to.
    pub fn leaf_counts(&self, x: &CountVector) -> &[u32; 3] {
        let mut at = self.root;
        loop {
            match &self.nodes[at as usize] {
                Node::Leaf { counts } => return counts,
                Node::Split { split, left, right } => {
                    at = if f64::from(x.get(split.feature)) <= split.threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Majority class at the routed leaf; ties go to the smaller class.
    pub fn predict(&self, x: &CountVector) -> PolarityClass {
        PolarityClass::from_index(argmax(self.leaf_counts(x)))
    }

    pub fn depth(&self) -> u32 {
        fn walk(nodes: &[Node], at: u32) -> u32 {
            match &nodes[at as usize] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, self.root)
    }
}

/// First index of the maximum, i.e. ties resolve to the smaller class.
fn argmax(counts: &[u32; 3]) -> usize {
    let mut best = 0;
    for i in 1..3 {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    schema_version: u32,
    params: ForestParams,
    dim: usize,
    trees: Vec<Tree>,
}

impl Forest {
    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    fn check_dim(&self, x: &CountVector) -> Result<(), ForestError> {
        if x.dim() != self.dim {
            return Err(ForestError::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(())
    }

    fn votes(&self, x: &CountVector) -> [u32; 3] {
        let mut votes = [0u32; 3];
        for tree in &self.trees {
            votes[tree.predict(x).index()] += 1;
        }
        votes
    }

    /// Modal vote over all trees; ties resolve to the smaller class.
    pub fn predict(&self, x: &CountVector) -> Result<PolarityClass, ForestError> {
        self.check_dim(x)?;
        Ok(PolarityClass::from_index(argmax(&self.votes(x))))
    }

    /// Vote share per class.
    pub fn predict_distribution(&self, x: &CountVector) -> Result<[f64; 3], ForestError> {
        self.check_dim(x)?;
        let votes = self.votes(x);
        let n = self.trees.len() as f64;
        Ok([
            f64::from(votes[0]) / n,
            f64::from(votes[1]) / n,
            f64::from(votes[2]) / n,
        ])
    }

    /// Per-feature sums of entropy gain over every stored split.
    pub fn feature_importance(&self) -> Vec<f64> {
        let mut importance = vec![0.0; self.dim];
        for tree in &self.trees {
            for node in &tree.nodes {
                if let Node::Split { split, .. } = node {
                    importance[split.feature as usize] += split.gain;
                }
            }
        }
        importance
    }

    pub fn save_json<W: Write>(&self, w: W) -> Result<(), ForestError> {
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn load_json<R: Read>(r: R) -> Result<Forest, ForestError> {
        let forest: Forest = serde_json::from_reader(r)?;
        if forest.schema_version != FOREST_SCHEMA_VERSION {
            return Err(ForestError::SchemaVersion {
                expected: FOREST_SCHEMA_VERSION,
                got: forest.schema_version,
            });
        }
        Ok(forest)
    }
}

/// Shannon entropy of a class-count distribution, in bits.
pub fn entropy(class_counts: &[u64]) -> Result<f64, ForestError> {
    let total: u64 = class_counts.iter().sum();
    if total == 0 {
        return Err(ForestError::EmptyNode);
    }
    Ok(entropy_unchecked(class_counts, total))
}

fn entropy_unchecked(class_counts: &[u64], total: u64) -> f64 {
    let total = total as f64;
    let mut h = 0.0;
    for &count in class_counts {
        if count > 0 {
            let p = count as f64 / total;
            h -= p * p.log2();
        }
    }
    h
}

fn hist_entropy(hist: &[u32; 3]) -> f64 {
    let counts = [u64::from(hist[0]), u64::from(hist[1]), u64::from(hist[2])];
    let total: u64 = counts.iter().sum();
    entropy_unchecked(&counts, total)
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Column-major view of the training rows: per feature, the (row, count)
/// pairs with nonzero count, sorted by row.
struct ColumnStore {
    cols: Vec<Vec<(u32, u32)>>,
    dim: usize,
}

impl ColumnStore {
    fn build(rows: &[CountVector], dim: usize) -> ColumnStore {
        let mut cols: Vec<Vec<(u32, u32)>> = vec![Vec::new(); dim];
        for (row, vector) in rows.iter().enumerate() {
            for &(feature, count) in vector.entries() {
                cols[feature as usize].push((row as u32, count));
            }
        }
        ColumnStore { cols, dim }
    }

    fn col(&self, feature: u32) -> &[(u32, u32)] {
        &self.cols[feature as usize]
    }
}

/// For each position in `sample` whose row has a nonzero count in `col`,
/// the (position, count) pair. `sample` is sorted and may repeat rows.
fn nonzero_matches(col: &[(u32, u32)], sample: &[u32]) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    if col.is_empty() || sample.is_empty() {
        return out;
    }
    if sample.len() * 8 < col.len() {
        // Few sample rows against a dense column: search per row.
        let mut last: Option<(u32, u32)> = None;
        for (i, &row) in sample.iter().enumerate() {
            let value = match last {
                Some((r, v)) if r == row => v,
                _ => {
                    let v = col
                        .binary_search_by_key(&row, |e| e.0)
                        .map(|j| col[j].1)
                        .unwrap_or(0);
                    last = Some((row, v));
                    v
                }
            };
            if value > 0 {
                out.push((i as u32, value));
            }
        }
    } else if col.len() * 8 < sample.len() {
        // Sparse column against a large sample: locate each row's run.
        for &(row, value) in col {
            let start = sample.partition_point(|&r| r < row);
            let end = sample.partition_point(|&r| r <= row);
            for i in start..end {
                out.push((i as u32, value));
            }
        }
    } else {
        let mut j = 0;
        for (i, &row) in sample.iter().enumerate() {
            while j < col.len() && col[j].0 < row {
                j += 1;
            }
            if j < col.len() && col[j].0 == row {
                out.push((i as u32, col[j].1));
            }
        }
    }
    out
}

/// Distinct observed counts with their class histograms, ascending by
/// count. The zero bucket aggregates every sample row absent from the
/// column.
fn value_histograms(
    matches: &[(u32, u32)],
    sample: &[u32],
    y: &[PolarityClass],
    node_hist: &[u32; 3],
) -> Vec<(u32, [u32; 3])> {
    let mut pairs: Vec<(u32, u8)> = matches
        .iter()
        .map(|&(pos, value)| (value, y[sample[pos as usize] as usize].index() as u8))
        .collect();
    pairs.sort_unstable();

    let mut hists: Vec<(u32, [u32; 3])> = Vec::new();
    let mut nonzero = [0u32; 3];
    for (value, class) in pairs {
        nonzero[class as usize] += 1;
        match hists.last_mut() {
            Some((v, h)) if *v == value => h[class as usize] += 1,
            _ => {
                let mut h = [0u32; 3];
                h[class as usize] += 1;
                hists.push((value, h));
            }
        }
    }
    let zeros = [
        node_hist[0] - nonzero[0],
        node_hist[1] - nonzero[1],
        node_hist[2] - nonzero[2],
    ];
    if zeros.iter().any(|&z| z > 0) {
        hists.insert(0, (0, zeros));
    }
    hists
}

fn split_gain(parent_entropy: f64, left: &[u32; 3], right: &[u32; 3]) -> f64 {
    let left_n: u32 = left.iter().sum();
    let right_n: u32 = right.iter().sum();
    let n = f64::from(left_n + right_n);
    parent_entropy
        - f64::from(left_n) / n * hist_entropy(left)
        - f64::from(right_n) / n * hist_entropy(right)
}

/// Best (feature, threshold) over the candidates for one node, or None
/// when no split has positive gain. Candidates must be sorted ascending
/// so that equal gains resolve to the lowest feature index.
fn best_split_for_node(
    store: &ColumnStore,
    y: &[PolarityClass],
    sample: &[u32],
    node_hist: &[u32; 3],
    candidates: &[u32],
    min_samples_leaf: usize,
) -> Option<Split> {
    let parent_entropy = hist_entropy(node_hist);
    if parent_entropy == 0.0 {
        return None;
    }
    let node_n: u32 = node_hist.iter().sum();
    let mut best: Option<Split> = None;
    for &feature in candidates {
        let matches = nonzero_matches(store.col(feature), sample);
        let hists = value_histograms(&matches, sample, y, node_hist);
        if hists.len() < 2 {
            continue;
        }
        let mut left = [0u32; 3];
        for window in 0..hists.len() - 1 {
            let (value, ref hist) = hists[window];
            for c in 0..3 {
                left[c] += hist[c];
            }
            let left_n: u32 = left.iter().sum();
            let right_n = node_n - left_n;
            if (left_n as usize) < min_samples_leaf || (right_n as usize) < min_samples_leaf {
                continue;
            }
            let right = [
                node_hist[0] - left[0],
                node_hist[1] - left[1],
                node_hist[2] - left[2],
            ];
            let gain = split_gain(parent_entropy, &left, &right);
            let threshold = (f64::from(value) + f64::from(hists[window + 1].0)) / 2.0;
            if gain > GAIN_EPSILON && best.is_none_or(|b| gain > b.gain) {
                best = Some(Split {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

/// Best split over full rows with the given candidate features.
pub fn best_split(
    x: &[CountVector],
    y: &[PolarityClass],
    candidate_features: &[u32],
) -> Option<Split> {
    if x.is_empty() || x.len() != y.len() {
        return None;
    }
    let dim = x[0].dim();
    let store = ColumnStore::build(x, dim);
    let sample: Vec<u32> = (0..x.len() as u32).collect();
    let node_hist = sample_hist(&sample, y);
    let mut candidates = candidate_features.to_vec();
    candidates.sort_unstable();
    candidates.dedup();
    best_split_for_node(&store, y, &sample, &node_hist, &candidates, 1)
}

fn sample_hist(sample: &[u32], y: &[PolarityClass]) -> [u32; 3] {
    let mut hist = [0u32; 3];
    for &row in sample {
        hist[y[row as usize].index()] += 1;
    }
    hist
}

/// Partition sample positions by the split; both halves stay sorted.
fn partition_sample(col: &[(u32, u32)], sample: &[u32], threshold: f64) -> (Vec<u32>, Vec<u32>) {
    let matches = nonzero_matches(col, sample);
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut m = 0;
    for (i, &row) in sample.iter().enumerate() {
        let value = if m < matches.len() && matches[m].0 == i as u32 {
            let v = matches[m].1;
            m += 1;
            v
        } else {
            0
        };
        if f64::from(value) <= threshold {
            left.push(row);
        } else {
            right.push(row);
        }
    }
    (left, right)
}

fn grow_node(
    store: &ColumnStore,
    y: &[PolarityClass],
    sample: Vec<u32>,
    depth: u32,
    params: &ForestParams,
    rng: &mut ChaCha8Rng,
    nodes: &mut Vec<Node>,
) -> u32 {
    let node_hist = sample_hist(&sample, y);
    let n = sample.len();
    let pure = node_hist.iter().filter(|&&c| c > 0).count() <= 1;
    let depth_stop = params.max_depth.is_some_and(|d| depth >= d);

    if !pure && !depth_stop && n >= params.min_samples_split {
        let k = params.features_per_split.count(store.dim);
        let mut candidates = index::sample(rng, store.dim, k).into_vec();
        candidates.sort_unstable();
        let candidates: Vec<u32> = candidates.into_iter().map(|c| c as u32).collect();
        if let Some(split) = best_split_for_node(
            store,
            y,
            &sample,
            &node_hist,
            &candidates,
            params.min_samples_leaf,
        ) {
            let (left_sample, right_sample) =
                partition_sample(store.col(split.feature), &sample, split.threshold);
            drop(sample);
            let left = grow_node(store, y, left_sample, depth + 1, params, rng, nodes);
            let right = grow_node(store, y, right_sample, depth + 1, params, rng, nodes);
            let at = nodes.len() as u32;
            nodes.push(Node::Split { split, left, right });
            return at;
        }
    }
    let at = nodes.len() as u32;
    nodes.push(Node::Leaf { counts: node_hist });
    at
}

fn check_training_input(x: &[CountVector], y: &[PolarityClass]) -> Result<usize, ForestError> {
    if x.is_empty() {
        return Err(ForestError::EmptyTrainingSet);
    }
    if x.len() != y.len() {
        return Err(ForestError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let dim = x[0].dim();
    for row in x {
        if row.dim() != dim {
            return Err(ForestError::DimensionMismatch {
                expected: dim,
                got: row.dim(),
            });
        }
    }
    Ok(dim)
}

/// Grow a single tree on the full sample (no bootstrap).
pub fn grow_tree(
    x: &[CountVector],
    y: &[PolarityClass],
    params: &ForestParams,
    rng: &mut ChaCha8Rng,
) -> Result<Tree, ForestError> {
    params.validate()?;
    let dim = check_training_input(x, y)?;
    let store = ColumnStore::build(x, dim);
    let sample: Vec<u32> = (0..x.len() as u32).collect();
    let mut nodes = Vec::new();
    let root = grow_node(&store, y, sample, 0, params, rng, &mut nodes);
    Ok(Tree { nodes, root })
}

/// Train `n_trees` trees, each on its own bootstrap resample (when
/// enabled) with an RNG derived from `seed + tree_index`.
pub fn train_forest(
    x: &[CountVector],
    y: &[PolarityClass],
    params: &ForestParams,
) -> Result<Forest, ForestError> {
    params.validate()?;
    let dim = check_training_input(x, y)?;
    let store = ColumnStore::build(x, dim);
    let n = x.len();

    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded_rng(params.seed.wrapping_add(t as u64));
            let sample: Vec<u32> = if params.bootstrap {
                let mut s: Vec<u32> = (0..n).map(|_| rng.gen_range(0..n) as u32).collect();
                s.sort_unstable();
                s
            } else {
                (0..n as u32).collect()
            };
            let mut nodes = Vec::new();
            let root = grow_node(&store, y, sample, 0, params, &mut rng, &mut nodes);
            Tree { nodes, root }
        })
        .collect();

    Ok(Forest {
        schema_version: FOREST_SCHEMA_VERSION,
        params: params.clone(),
        dim,
        trees,
    })
}
