//! Server-side regressors predicting PM2.5 from PM10.
//!
//! Three model families are provided: ordinary least squares, a CART
//! regression tree and a bagged forest of such trees. With a single input
//! feature every tree node owns a contiguous run of the x-sorted training
//! data, so splits are found with prefix sums in linear time per node.
//!
//! Models serialize to a line-oriented text format (see [`Model::to_text`]).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub trait Predictor {
    fn predict(&self, x: f64) -> f64;

    fn predict_many(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.predict(x)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearModel {
    pub slope: f64,
    pub intercept: f64,
}

impl Predictor for LinearModel {
    fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

impl LinearModel {
    /// Classical standard error of the slope estimate on the training data.
    pub fn slope_standard_error(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = mean(x);
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let sse: f64 = x.iter().zip(y).map(|(&a, &b)| (b - self.predict(a)).powi(2)).sum();
        (sse / (n - 2.0) / sxx).sqrt()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("x has {} values but y has {}", x.len(), y.len())));
    }
    Ok(())
}

pub fn fit_ols(x: &[f64], y: &[f64]) -> Result<LinearModel> {
    check_lengths(x, y)?;
    if x.len() < 2 {
        return Err(Error::invalid("least squares needs at least two points"));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateInput);
    }
    let slope = sxy / sxx;
    Ok(LinearModel { slope, intercept: my - slope * mx })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: 10, min_samples_split: 5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Node {
    Leaf { value: f64 },
    /// `x <= threshold` goes left.
    Split { threshold: f64, left: usize, right: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionTree {
    pub params: TreeParams,
    nodes: Vec<Node>,
}

impl Predictor for RegressionTree {
    fn predict(&self, x: f64) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { threshold, left, right } => i = if x <= threshold { left } else { right },
            }
        }
    }
}

impl RegressionTree {
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Split thresholds in pre-order.
    pub fn thresholds(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { threshold, .. } => Some(*threshold),
                Node::Leaf { .. } => None,
            })
            .collect()
    }

    fn write_text(&self, out: &mut String) {
        out.push_str(&format!("tree {} {}\n", self.params.max_depth, self.params.min_samples_split));
        fn walk(nodes: &[Node], i: usize, out: &mut String) {
            match nodes[i] {
                Node::Leaf { value } => out.push_str(&format!("L {value}\n")),
                Node::Split { threshold, left, right } => {
                    out.push_str(&format!("S {threshold}\n"));
                    walk(nodes, left, out);
                    walk(nodes, right, out);
                }
            }
        }
        walk(&self.nodes, 0, out);
    }

    fn read_text<'a>(header: &str, lines: &mut impl Iterator<Item = &'a str>) -> Result<Self> {
        let bad = |m: &str| Error::ModelFormat(m.to_owned());
        let mut h = header.split_whitespace().skip(1);
        let mut num = || h.next().and_then(|v| v.parse::<usize>().ok()).ok_or_else(|| bad("bad tree header"));
        let params = TreeParams { max_depth: num()?, min_samples_split: num()? };

        fn node<'a>(nodes: &mut Vec<Node>, lines: &mut impl Iterator<Item = &'a str>) -> Result<usize> {
            let line = lines.next().ok_or_else(|| Error::ModelFormat("truncated tree".into()))?;
            let (kind, val) = line.split_once(' ').ok_or_else(|| Error::ModelFormat(format!("bad node {line:?}")))?;
            let v: f64 = val.trim().parse().map_err(|_| Error::ModelFormat(format!("bad number in {line:?}")))?;
            let idx = nodes.len();
            match kind {
                "L" => nodes.push(Node::Leaf { value: v }),
                "S" => {
                    nodes.push(Node::Leaf { value: f64::NAN });
                    let left = node(nodes, lines)?;
                    let right = node(nodes, lines)?;
                    nodes[idx] = Node::Split { threshold: v, left, right };
                }
                _ => return Err(Error::ModelFormat(format!("unknown node kind {kind:?}"))),
            }
            Ok(idx)
        }
        let mut nodes = Vec::new();
        node(&mut nodes, lines)?;
        Ok(RegressionTree { params, nodes })
    }
}

/// Greedy variance-reduction CART on a single feature.
///
/// Candidate thresholds are midpoints between consecutive distinct sorted x
/// values; among equal-gain candidates the lowest threshold wins. A node
/// becomes a leaf at the depth limit, below `min_samples_split` samples,
/// at zero target variance, or when no split reduces the squared error.
pub fn fit_tree(x: &[f64], y: &[f64], params: TreeParams) -> Result<RegressionTree> {
    check_lengths(x, y)?;
    if x.is_empty() {
        return Err(Error::invalid("tree needs at least one point"));
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut nodes = Vec::new();
    build(&pairs, 0, params, &mut nodes);
    Ok(RegressionTree { params, nodes })
}

fn build(data: &[(f64, f64)], depth: usize, params: TreeParams, nodes: &mut Vec<Node>) -> usize {
    let idx = nodes.len();
    let n = data.len();
    let m = data.iter().map(|p| p.1).sum::<f64>() / n as f64;
    nodes.push(Node::Leaf { value: m });

    if depth >= params.max_depth || n < params.min_samples_split.max(2) {
        return idx;
    }
    let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    if lo == hi {
        return idx;
    }

    // centred targets keep the prefix sums well conditioned
    let total_sq: f64 = data.iter().map(|p| (p.1 - m).powi(2)).sum();
    let mut best: Option<(f64, usize)> = None;
    let (mut s, mut sq) = (0.0, 0.0);
    for i in 0..n - 1 {
        let d = data[i].1 - m;
        s += d;
        sq += d * d;
        if data[i].0 == data[i + 1].0 {
            continue;
        }
        let nl = (i + 1) as f64;
        let nr = (n - i - 1) as f64;
        let sr = -s;
        let sqr = total_sq - sq;
        let sse = (sq - s * s / nl) + (sqr - sr * sr / nr);
        if best.is_none_or(|(b, _)| sse < b) {
            best = Some((sse, i));
        }
    }
    let Some((sse, i)) = best else { return idx };
    if !(sse < total_sq) {
        return idx;
    }
    let threshold = 0.5 * (data[i].0 + data[i + 1].0);
    let left = build(&data[..=i], depth + 1, params, nodes);
    let right = build(&data[i + 1..], depth + 1, params, nodes);
    nodes[idx] = Node::Split { threshold, left, right };
    idx
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_estimators: usize,
    #[serde(flatten)]
    pub tree: TreeParams,
    /// When false every tree sees the full training set.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_estimators: 100, tree: TreeParams::default(), bootstrap: true, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<RegressionTree>,
}

impl Predictor for ForestModel {
    fn predict(&self, x: f64) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Bagged regression trees. Tree `k` draws its bootstrap sample from the
/// stream `(seed, k)`, so results do not depend on the thread count.
pub fn fit_forest(x: &[f64], y: &[f64], params: ForestParams) -> Result<ForestModel> {
    use rand::Rng;

    check_lengths(x, y)?;
    if x.is_empty() {
        return Err(Error::invalid("forest needs at least one point"));
    }
    if params.n_estimators == 0 {
        return Err(Error::invalid("forest needs at least one estimator"));
    }
    let n = x.len();
    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|k| {
            if !params.bootstrap {
                return fit_tree(x, y, params.tree);
            }
            let mut rng = crate::seeded_rng(params.seed, k as u64);
            let (mut bx, mut by) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for _ in 0..n {
                let j = rng.random_range(0..n);
                bx.push(x[j]);
                by.push(y[j]);
            }
            fit_tree(&bx, &by, params.tree)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel { trees })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitReport {
    pub rmse: f64,
    /// `None` when the validation targets have zero variance.
    pub r_squared: Option<f64>,
}

pub fn evaluate(model: &(impl Predictor + ?Sized), x_val: &[f64], y_val: &[f64]) -> Result<FitReport> {
    check_lengths(x_val, y_val)?;
    if x_val.is_empty() {
        return Err(Error::invalid("validation set is empty"));
    }
    let n = y_val.len() as f64;
    let my = mean(y_val);
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (&x, &y) in x_val.iter().zip(y_val) {
        ss_res += (model.predict(x) - y).powi(2);
        ss_tot += (y - my).powi(2);
    }
    Ok(FitReport {
        rmse: (ss_res / n).sqrt(),
        r_squared: (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot),
    })
}

pub type XySlices<'a> = (&'a [f64], &'a [f64]);

/// First `train_fraction` of the samples for training, the rest for
/// validation (no shuffling).
pub fn chronological_split<'a>(x: &'a [f64], y: &'a [f64], train_fraction: f64) -> (XySlices<'a>, XySlices<'a>) {
    let cut = ((x.len() as f64) * train_fraction.clamp(0.0, 1.0)).round() as usize;
    let cut = cut.min(x.len());
    ((&x[..cut], &y[..cut]), (&x[cut..], &y[cut..]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Tree,
    Forest,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Linear(LinearModel),
    Tree(RegressionTree),
    Forest(ForestModel),
}

impl Predictor for Model {
    fn predict(&self, x: f64) -> f64 {
        match self {
            Model::Linear(m) => m.predict(x),
            Model::Tree(m) => m.predict(x),
            Model::Forest(m) => m.predict(x),
        }
    }
}

impl Model {
    pub fn fit(kind: ModelKind, x: &[f64], y: &[f64], forest: ForestParams) -> Result<Model> {
        Ok(match kind {
            ModelKind::Linear => Model::Linear(fit_ols(x, y)?),
            ModelKind::Tree => Model::Tree(fit_tree(x, y, forest.tree)?),
            ModelKind::Forest => Model::Forest(fit_forest(x, y, forest)?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Linear(_) => ModelKind::Linear,
            Model::Tree(_) => ModelKind::Tree,
            Model::Forest(_) => ModelKind::Forest,
        }
    }

    /// Line-oriented dump:
    ///
    /// ```text
    /// linear <slope> <intercept>
    /// tree <max_depth> <min_samples_split>   followed by pre-order
    ///   S <threshold> / L <value> node lines
    /// forest <n>                             followed by n tree blocks
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            Model::Linear(m) => out.push_str(&format!("linear {} {}\n", m.slope, m.intercept)),
            Model::Tree(t) => t.write_text(&mut out),
            Model::Forest(f) => {
                out.push_str(&format!("forest {}\n", f.trees.len()));
                for t in &f.trees {
                    t.write_text(&mut out);
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Model> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::ModelFormat("empty model file".into()))?;
        let kind = header.split_whitespace().next().unwrap_or_default();
        let model = match kind {
            "linear" => {
                let v: Vec<f64> = header.split_whitespace().skip(1).filter_map(|s| s.parse().ok()).collect();
                match v[..] {
                    [slope, intercept] => Model::Linear(LinearModel { slope, intercept }),
                    _ => return Err(Error::ModelFormat("linear needs slope and intercept".into())),
                }
            }
            "tree" => Model::Tree(RegressionTree::read_text(header, &mut lines)?),
            "forest" => {
                let n: usize = header
                    .split_whitespace()
                    .nth(1)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::ModelFormat("bad forest header".into()))?;
                let mut trees = Vec::with_capacity(n);
                for _ in 0..n {
                    let h = lines.next().ok_or_else(|| Error::ModelFormat("truncated forest".into()))?;
                    trees.push(RegressionTree::read_text(h, &mut lines)?);
                }
                Model::Forest(ForestModel { trees })
            }
            other => return Err(Error::ModelFormat(format!("unknown model kind {other:?}"))),
        };
        if let Some(extra) = lines.next() {
            return Err(Error::ModelFormat(format!("trailing content {extra:?}")));
        }
        Ok(model)
    }
}
