//! Random forest of CART trees, grown from scratch.
//!
//! Each tree is fitted on a bootstrap resample drawn from a ChaCha8 stream
//! derived from (master seed, tree index), so results are reproducible
//! regardless of how many worker threads grow trees. At every node a
//! without-replacement sample of floor(sqrt(p)) features is scanned;
//! candidate thresholds are the midpoints between consecutive distinct
//! values observed in the node, scored by Gini impurity (classification)
//! or by the summed squared error of the children (regression). Trees are
//! grown to minimum node size 1 (classification) or 5 (regression) with
//! no pruning.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TREES: usize = 500;
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestTask {
    Classification,
    Regression,
}

impl ForestTask {
    pub fn default_min_leaf(self) -> usize {
        match self {
            ForestTask::Classification => 1,
            ForestTask::Regression => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ForestTask::Classification => "classification",
            ForestTask::Regression => "regression",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForestConfig {
    pub task: ForestTask,
    pub n_trees: usize,
    pub seed: u64,
    /// Nodes at or below this size become leaves.
    pub min_leaf: usize,
}

impl ForestConfig {
    pub fn new(task: ForestTask, seed: u64) -> Self {
        ForestConfig {
            task,
            n_trees: DEFAULT_TREES,
            seed,
            min_leaf: task.default_min_leaf(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    LeafMean(f64),
    LeafVotes {
        n0: u32,
        n1: u32,
    },
}

#[derive(Debug, Clone)]
pub struct Forest {
    task: ForestTask,
    trees: Vec<Node>,
    feature_names: Vec<String>,
    mtry: usize,
    seed: u64,
    min_leaf: usize,
    n_train: usize,
    /// Majority class of the full training set; breaks vote ties. 0 wins
    /// when the training classes are themselves balanced.
    default_class: u8,
    oob_error: Option<f64>,
}

struct GrowContext<'a> {
    columns: &'a [Vec<f64>],
    target: &'a [f64],
    task: ForestTask,
    min_leaf: usize,
    mtry: usize,
}

/// Fit a forest on named feature columns. Classification targets must be
/// coded 0/1.
pub fn fit_forest(
    features: &[(String, Vec<f64>)],
    target: &[f64],
    config: &ForestConfig,
) -> Result<Forest> {
    if features.is_empty() {
        return Err(Error::InvalidArgument(
            "forest needs at least one feature".to_string(),
        ));
    }
    if config.n_trees == 0 {
        return Err(Error::InvalidArgument("forest needs at least one tree".to_string()));
    }
    let n = target.len();
    if n == 0 {
        return Err(Error::EmptySeries("forest target".to_string()));
    }
    if n < config.min_leaf {
        return Err(Error::InvalidArgument(format!(
            "{n} training rows is fewer than the minimum node size {}",
            config.min_leaf
        )));
    }
    for (name, col) in features {
        if col.len() != n {
            return Err(Error::Misaligned(format!(
                "feature {name} has {} rows, target has {n}",
                col.len()
            )));
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "feature {name} contains non-finite values"
            )));
        }
    }
    if config.task == ForestTask::Classification
        && target.iter().any(|&v| v != 0.0 && v != 1.0)
    {
        return Err(Error::InvalidArgument(
            "classification target must be coded 0/1".to_string(),
        ));
    }
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "target contains non-finite values".to_string(),
        ));
    }

    let p = features.len();
    let mtry = (p as f64).sqrt().floor().max(1.0) as usize;
    let columns: Vec<Vec<f64>> = features.iter().map(|(_, v)| v.clone()).collect();
    let ctx = GrowContext {
        columns: &columns,
        target,
        task: config.task,
        min_leaf: config.min_leaf,
        mtry,
    };

    let grown: Vec<(Node, Vec<bool>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|tree_idx| grow_tree(&ctx, config.seed, tree_idx, n))
        .collect();

    let n1 = target.iter().filter(|&&v| v == 1.0).count();
    let default_class = if config.task == ForestTask::Classification && n1 * 2 > n {
        1
    } else {
        0
    };

    let mut forest = Forest {
        task: config.task,
        trees: Vec::with_capacity(config.n_trees),
        feature_names: features.iter().map(|(name, _)| name.clone()).collect(),
        mtry,
        seed: config.seed,
        min_leaf: config.min_leaf,
        n_train: n,
        default_class,
        oob_error: None,
    };
    let in_bags: Vec<Vec<bool>> = grown
        .into_iter()
        .map(|(tree, in_bag)| {
            forest.trees.push(tree);
            in_bag
        })
        .collect();
    forest.oob_error = forest.compute_oob(&columns, target, &in_bags);
    Ok(forest)
}

fn grow_tree(ctx: &GrowContext<'_>, seed: u64, tree_idx: usize, n: usize) -> (Node, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree_idx as u64 + 1);
    let mut in_bag = vec![false; n];
    let mut rows: Vec<u32> = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.gen_range(0..n);
        in_bag[r] = true;
        rows.push(r as u32);
    }
    let tree = grow_node(ctx, &mut rng, rows);
    (tree, in_bag)
}

fn grow_node(ctx: &GrowContext<'_>, rng: &mut ChaCha8Rng, rows: Vec<u32>) -> Node {
    debug_assert!(!rows.is_empty());
    if rows.len() <= ctx.min_leaf || node_is_pure(ctx, &rows) {
        return make_leaf(ctx, &rows);
    }

    let p = ctx.columns.len();
    let mut pool: Vec<usize> = (0..p).collect();
    for k in 0..ctx.mtry {
        let j = rng.gen_range(k..p);
        pool.swap(k, j);
    }

    let mut best: Option<(f64, usize, f64)> = None; // (score, feature, threshold)
    let mut scratch: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
    for &feature in &pool[..ctx.mtry] {
        scratch.clear();
        let col = &ctx.columns[feature];
        for &r in &rows {
            scratch.push((col[r as usize], ctx.target[r as usize]));
        }
        scratch.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));
        if let Some((score, threshold)) = best_split_for_feature(ctx.task, &scratch) {
            let better = match best {
                None => true,
                Some((s, _, _)) => score < s,
            };
            if better {
                best = Some((score, feature, threshold));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        // Every sampled feature is constant within this node.
        return make_leaf(ctx, &rows);
    };

    let col = &ctx.columns[feature];
    let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows
        .iter()
        .partition(|&&r| col[r as usize] <= threshold);
    debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());
    Node::Split {
        feature,
        threshold,
        left: Box::new(grow_node(ctx, rng, left_rows)),
        right: Box::new(grow_node(ctx, rng, right_rows)),
    }
}

fn node_is_pure(ctx: &GrowContext<'_>, rows: &[u32]) -> bool {
    let first = ctx.target[rows[0] as usize];
    rows.iter().all(|&r| ctx.target[r as usize] == first)
}

fn make_leaf(ctx: &GrowContext<'_>, rows: &[u32]) -> Node {
    match ctx.task {
        ForestTask::Classification => {
            let n1 = rows
                .iter()
                .filter(|&&r| ctx.target[r as usize] == 1.0)
                .count() as u32;
            Node::LeafVotes {
                n0: rows.len() as u32 - n1,
                n1,
            }
        }
        ForestTask::Regression => {
            let sum: f64 = rows.iter().map(|&r| ctx.target[r as usize]).sum();
            Node::LeafMean(sum / rows.len() as f64)
        }
    }
}

/// Scan sorted (value, target) pairs for the best midpoint threshold.
/// Returns (score, threshold) where lower scores are better: the weighted
/// Gini impurity of the children for classification, or their summed
/// squared error for regression. Earlier thresholds win exact ties.
fn best_split_for_feature(task: ForestTask, sorted: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = sorted.len();
    let mut best: Option<(f64, f64)> = None;

    match task {
        ForestTask::Classification => {
            let total1: u32 = sorted.iter().filter(|&&(_, t)| t == 1.0).count() as u32;
            let mut left1 = 0u32;
            for i in 1..n {
                if sorted[i - 1].1 == 1.0 {
                    left1 += 1;
                }
                let (prev, cur) = (sorted[i - 1].0, sorted[i].0);
                if cur <= prev {
                    continue;
                }
                let threshold = prev + (cur - prev) / 2.0;
                if !(threshold > prev && threshold < cur) {
                    continue;
                }
                let nl = i as f64;
                let nr = (n - i) as f64;
                let l1 = left1 as f64;
                let r1 = (total1 - left1) as f64;
                let gini_l = 1.0 - ((l1 / nl).powi(2) + ((nl - l1) / nl).powi(2));
                let gini_r = 1.0 - ((r1 / nr).powi(2) + ((nr - r1) / nr).powi(2));
                let score = nl * gini_l + nr * gini_r;
                if best.is_none_or(|(s, _)| score < s) {
                    best = Some((score, threshold));
                }
            }
        }
        ForestTask::Regression => {
            let total_sum: f64 = sorted.iter().map(|&(_, t)| t).sum();
            let total_sq: f64 = sorted.iter().map(|&(_, t)| t * t).sum();
            let mut left_sum = 0.0;
            let mut left_sq = 0.0;
            for i in 1..n {
                left_sum += sorted[i - 1].1;
                left_sq += sorted[i - 1].1 * sorted[i - 1].1;
                let (prev, cur) = (sorted[i - 1].0, sorted[i].0);
                if cur <= prev {
                    continue;
                }
                let threshold = prev + (cur - prev) / 2.0;
                if !(threshold > prev && threshold < cur) {
                    continue;
                }
                let nl = i as f64;
                let nr = (n - i) as f64;
                let sse_l = left_sq - left_sum * left_sum / nl;
                let sse_r = (total_sq - left_sq) - (total_sum - left_sum).powi(2) / nr;
                let score = sse_l + sse_r;
                if best.is_none_or(|(s, _)| score < s) {
                    best = Some((score, threshold));
                }
            }
        }
    }
    best
}

impl Forest {
    pub fn task(&self) -> ForestTask {
        self.task
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn mtry(&self) -> usize {
        self.mtry
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Out-of-bag error estimated during fitting: misclassification rate
    /// for classification, mean squared error for regression. None when no
    /// training row was ever out of bag.
    pub fn oob_error(&self) -> Option<f64> {
        self.oob_error
    }

    /// Predict one value per row. Columns are matched to the training
    /// features by name and must all be present and equally long.
    pub fn predict(&self, features: &[(String, Vec<f64>)]) -> Result<Vec<f64>> {
        let cols: Vec<&[f64]> = self
            .feature_names
            .iter()
            .map(|name| {
                features
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, v)| v.as_slice())
                    .ok_or_else(|| Error::ColumnMismatch(format!("missing feature {name}")))
            })
            .collect::<Result<_>>()?;
        let n = cols.first().map(|c| c.len()).unwrap_or(0);
        if n == 0 {
            return Err(Error::EmptySeries("prediction rows".to_string()));
        }
        for c in &cols {
            if c.len() != n {
                return Err(Error::Misaligned(
                    "prediction columns have unequal lengths".to_string(),
                ));
            }
        }
        Ok((0..n)
            .map(|i| self.predict_one(|feature| cols[feature][i]))
            .collect())
    }

    fn predict_one(&self, value: impl Fn(usize) -> f64 + Copy) -> f64 {
        match self.task {
            ForestTask::Classification => {
                let mut votes1 = 0usize;
                for tree in &self.trees {
                    if self.tree_class(tree, value) == 1 {
                        votes1 += 1;
                    }
                }
                let votes0 = self.trees.len() - votes1;
                f64::from(self.vote_winner(votes0, votes1))
            }
            ForestTask::Regression => {
                let sum: f64 = self
                    .trees
                    .iter()
                    .map(|tree| Self::tree_mean(tree, value))
                    .sum();
                sum / self.trees.len() as f64
            }
        }
    }

    fn vote_winner(&self, votes0: usize, votes1: usize) -> u8 {
        match votes1.cmp(&votes0) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => self.default_class,
        }
    }

    fn tree_class(&self, tree: &Node, value: impl Fn(usize) -> f64 + Copy) -> u8 {
        let mut node = tree;
        loop {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if value(*feature) <= *threshold {
                        left
                    } else {
                        right
                    };
                }
                Node::LeafVotes { n0, n1 } => {
                    return match n1.cmp(n0) {
                        std::cmp::Ordering::Greater => 1,
                        std::cmp::Ordering::Less => 0,
                        std::cmp::Ordering::Equal => self.default_class,
                    };
                }
                Node::LeafMean(_) => unreachable!("classification tree with mean leaf"),
            }
        }
    }

    fn tree_mean(tree: &Node, value: impl Fn(usize) -> f64 + Copy) -> f64 {
        let mut node = tree;
        loop {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if value(*feature) <= *threshold {
                        left
                    } else {
                        right
                    };
                }
                Node::LeafMean(m) => return *m,
                Node::LeafVotes { .. } => unreachable!("regression tree with vote leaf"),
            }
        }
    }

    fn compute_oob(
        &self,
        columns: &[Vec<f64>],
        target: &[f64],
        in_bags: &[Vec<bool>],
    ) -> Option<f64> {
        let n = target.len();
        let mut covered = 0usize;
        let mut err_acc = 0.0;
        for i in 0..n {
            let value = |feature: usize| columns[feature][i];
            match self.task {
                ForestTask::Classification => {
                    let mut v0 = 0usize;
                    let mut v1 = 0usize;
                    for (tree, in_bag) in self.trees.iter().zip(in_bags) {
                        if !in_bag[i] {
                            if self.tree_class(tree, value) == 1 {
                                v1 += 1;
                            } else {
                                v0 += 1;
                            }
                        }
                    }
                    if v0 + v1 == 0 {
                        continue;
                    }
                    covered += 1;
                    let pred = f64::from(self.vote_winner(v0, v1));
                    if pred != target[i] {
                        err_acc += 1.0;
                    }
                }
                ForestTask::Regression => {
                    let mut sum = 0.0;
                    let mut count = 0usize;
                    for (tree, in_bag) in self.trees.iter().zip(in_bags) {
                        if !in_bag[i] {
                            sum += Self::tree_mean(tree, value);
                            count += 1;
                        }
                    }
                    if count == 0 {
                        continue;
                    }
                    covered += 1;
                    let diff = sum / count as f64 - target[i];
                    err_acc += diff * diff;
                }
            }
        }
        (covered > 0).then(|| err_acc / covered as f64)
    }

    /// Serialize to a versioned JSON artifact: a header followed by each
    /// tree as a preorder node list.
    pub fn to_artifact_json(&self) -> String {
        let trees = self
            .trees
            .iter()
            .map(|tree| {
                let mut nodes = Vec::new();
                encode_preorder(tree, &mut nodes);
                nodes
            })
            .collect();
        let artifact = ForestArtifact {
            version: ARTIFACT_VERSION,
            task: self.task,
            n_trees: self.trees.len(),
            mtry: self.mtry,
            seed: self.seed,
            min_leaf: self.min_leaf,
            n_train: self.n_train,
            default_class: self.default_class,
            oob_error: self.oob_error,
            feature_names: self.feature_names.clone(),
            trees,
        };
        serde_json::to_string(&artifact).expect("forest artifact serializes")
    }

    pub fn from_artifact_json(text: &str) -> Result<Forest> {
        let artifact: ForestArtifact = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("bad forest artifact: {e}")))?;
        if artifact.version != ARTIFACT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported forest artifact version {}",
                artifact.version
            )));
        }
        let mut trees = Vec::with_capacity(artifact.trees.len());
        for nodes in &artifact.trees {
            let mut cursor = 0usize;
            let tree = decode_preorder(nodes, &mut cursor, artifact.feature_names.len())?;
            if cursor != nodes.len() {
                return Err(Error::InvalidArgument(
                    "trailing nodes in forest artifact tree".to_string(),
                ));
            }
            trees.push(tree);
        }
        Ok(Forest {
            task: artifact.task,
            trees,
            feature_names: artifact.feature_names,
            mtry: artifact.mtry,
            seed: artifact.seed,
            min_leaf: artifact.min_leaf,
            n_train: artifact.n_train,
            default_class: artifact.default_class,
            oob_error: artifact.oob_error,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ForestArtifact {
    version: u32,
    task: ForestTask,
    n_trees: usize,
    mtry: usize,
    seed: u64,
    min_leaf: usize,
    n_train: usize,
    default_class: u8,
    oob_error: Option<f64>,
    feature_names: Vec<String>,
    trees: Vec<Vec<ArtifactNode>>,
}

#[derive(Serialize, Deserialize)]
enum ArtifactNode {
    #[serde(rename = "s")]
    Split { f: usize, t: f64 },
    #[serde(rename = "m")]
    Mean(f64),
    #[serde(rename = "v")]
    Votes(u32, u32),
}

fn encode_preorder(node: &Node, out: &mut Vec<ArtifactNode>) {
    match node {
        Node::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            out.push(ArtifactNode::Split {
                f: *feature,
                t: *threshold,
            });
            encode_preorder(left, out);
            encode_preorder(right, out);
        }
        Node::LeafMean(m) => out.push(ArtifactNode::Mean(*m)),
        Node::LeafVotes { n0, n1 } => out.push(ArtifactNode::Votes(*n0, *n1)),
    }
}

fn decode_preorder(nodes: &[ArtifactNode], cursor: &mut usize, p: usize) -> Result<Node> {
    let node = nodes
        .get(*cursor)
        .ok_or_else(|| Error::InvalidArgument("truncated forest artifact tree".to_string()))?;
    *cursor += 1;
    match node {
        ArtifactNode::Split { f, t } => {
            if *f >= p {
                return Err(Error::InvalidArgument(format!(
                    "forest artifact references feature {f} of {p}"
                )));
            }
            let left = decode_preorder(nodes, cursor, p)?;
            let right = decode_preorder(nodes, cursor, p)?;
            Ok(Node::Split {
                feature: *f,
                threshold: *t,
                left: Box::new(left),
                right: Box::new(right),
            })
        }
        ArtifactNode::Mean(m) => Ok(Node::LeafMean(*m)),
        ArtifactNode::Votes(n0, n1) => Ok(Node::LeafVotes { n0: *n0, n1: *n1 }),
    }
}
