//! Hoeffding tree (VFDT) with binary numeric splits and majority-class
//! leaves.
//!
//! Each leaf keeps per-(class, attribute) running Gaussians. Every
//! `grace_period` instances the leaf scores ten equal-width candidate
//! thresholds per attribute by information gain, using the Gaussians to
//! estimate class mass on each side of a threshold. It splits when the best
//! gain beats the runner-up (or the null split) by more than the Hoeffding
//! bound, or when the bound has shrunk below the tie threshold.

use std::fmt::Write as _;

use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::learner::Classifier;
use crate::stream::ClassId;

const CANDIDATE_THRESHOLDS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    /// Instances a leaf absorbs between split attempts.
    pub grace_period: usize,
    /// Split confidence, the `delta` of the Hoeffding bound.
    pub split_confidence: f64,
    pub tie_threshold: f64,
    pub max_depth: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            grace_period: 200,
            split_confidence: 1e-7,
            tie_threshold: 0.05,
            max_depth: None,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.grace_period == 0 {
            return Err(Error::config("grace_period must be at least 1"));
        }
        if !(self.split_confidence > 0.0 && self.split_confidence < 1.0) {
            return Err(Error::config("split_confidence must lie in (0, 1)"));
        }
        if self.tie_threshold < 0.0 {
            return Err(Error::config("tie_threshold must be non-negative"));
        }
        Ok(())
    }
}

/// `sqrt(R^2 ln(1/delta) / (2n))`.
pub fn hoeffding_bound(range: f64, confidence: f64, n: f64) -> f64 {
    (range * range * (1.0 / confidence).ln() / (2.0 * n)).sqrt()
}

/// Single-pass mean and variance (Welford).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningGaussian {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningGaussian {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population variance (divides by n); zero when empty.
    pub fn variance(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.m2 / self.n as f64).max(0.0)
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Gaussian estimate of `P(X <= t)`. A zero-variance estimate is a step.
    pub fn cdf(&self, t: f64) -> f64 {
        let sd = self.std_dev();
        if sd <= 1e-12 {
            return if t >= self.mean { 1.0 } else { 0.0 };
        }
        0.5 * (1.0 + erf((t - self.mean) / (sd * std::f64::consts::SQRT_2)))
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Leaf {
    class_counts: Vec<u64>,
    /// `stats[class][attribute]`
    stats: Vec<Vec<RunningGaussian>>,
    ranges: Vec<(f64, f64)>,
    since_eval: usize,
    /// Prediction while the leaf is still empty, inherited from the split.
    fallback: Option<ClassId>,
    depth: usize,
}

impl Leaf {
    fn new(dim: usize, depth: usize, fallback: Option<ClassId>) -> Self {
        Self {
            class_counts: Vec::new(),
            stats: Vec::new(),
            ranges: vec![(f64::INFINITY, f64::NEG_INFINITY); dim],
            since_eval: 0,
            fallback,
            depth,
        }
    }

    fn absorb(&mut self, x: &[f64], y: ClassId) {
        let c = y.index();
        if self.class_counts.len() <= c {
            self.class_counts.resize(c + 1, 0);
            self.stats
                .resize(c + 1, vec![RunningGaussian::default(); x.len()]);
        }
        self.class_counts[c] += 1;
        for (i, &v) in x.iter().enumerate() {
            self.stats[c][i].push(v);
            let r = &mut self.ranges[i];
            r.0 = r.0.min(v);
            r.1 = r.1.max(v);
        }
    }

    fn total(&self) -> u64 {
        self.class_counts.iter().sum()
    }

    fn majority(&self) -> Option<ClassId> {
        if self.total() == 0 {
            return self.fallback;
        }
        Some(argmax(self.class_counts.iter().map(|&c| c as f64)))
    }

    /// Best-gain candidate per attribute, sorted by gain, descending.
    fn candidates(&self) -> Vec<SplitCandidate> {
        let parent: Vec<f64> = self.class_counts.iter().map(|&c| c as f64).collect();
        let parent_entropy = entropy(&parent);
        let n: f64 = parent.iter().sum();
        let mut out = Vec::new();
        for (attr, &(lo, hi)) in self.ranges.iter().enumerate() {
            if !(hi > lo) {
                continue;
            }
            let mut best: Option<SplitCandidate> = None;
            for k in 1..=CANDIDATE_THRESHOLDS {
                let t = lo + (hi - lo) * k as f64 / (CANDIDATE_THRESHOLDS + 1) as f64;
                let left: Vec<f64> = parent
                    .iter()
                    .zip(&self.stats)
                    .map(|(&count, per_attr)| count * per_attr[attr].cdf(t))
                    .collect();
                let right: Vec<f64> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
                let nl: f64 = left.iter().sum();
                let nr: f64 = right.iter().sum();
                let gain = parent_entropy - (nl / n) * entropy(&left) - (nr / n) * entropy(&right);
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(SplitCandidate {
                        attribute: attr,
                        threshold: t,
                        gain,
                        left,
                        right,
                    });
                }
            }
            out.extend(best);
        }
        out.sort_by(|a, b| b.gain.total_cmp(&a.gain));
        out
    }
}

struct SplitCandidate {
    attribute: usize,
    threshold: f64,
    gain: f64,
    left: Vec<f64>,
    right: Vec<f64>,
}

fn entropy(dist: &[f64]) -> f64 {
    let total: f64 = dist.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    dist.iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

/// Index of the largest value; ties go to the lowest index.
fn argmax(values: impl Iterator<Item = f64>) -> ClassId {
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    ClassId(best.0 as u32)
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Leaf(Leaf),
    Split {
        attribute: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// A prediction plus whether it came from an untrained tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Prediction {
    pub class: ClassId,
    pub low_confidence: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HoeffdingTree {
    params: TreeParams,
    root: Node,
    dim: Option<usize>,
    seen: u64,
    classes_seen: usize,
}

impl Default for HoeffdingTree {
    fn default() -> Self {
        Self::new(TreeParams::default())
    }
}

impl HoeffdingTree {
    pub fn new(params: TreeParams) -> Self {
        Self {
            params,
            root: Node::Leaf(Leaf::new(0, 0, None)),
            dim: None,
            seen: 0,
            classes_seen: 0,
        }
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    /// Total `train_one` calls absorbed.
    pub fn instances_seen(&self) -> u64 {
        self.seen
    }

    pub fn train(&mut self, x: &[f64], y: ClassId) -> Result<()> {
        match self.dim {
            None => {
                self.dim = Some(x.len());
                self.root = Node::Leaf(Leaf::new(x.len(), 0, None));
            }
            Some(d) if d != x.len() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: x.len(),
                });
            }
            Some(_) => {}
        }
        self.seen += 1;
        self.classes_seen = self.classes_seen.max(y.index() + 1);

        let mut node = &mut self.root;
        while let Node::Split {
            attribute,
            threshold,
            left,
            right,
        } = node
        {
            node = if x[*attribute] <= *threshold { left } else { right };
        }
        let Node::Leaf(leaf) = node else {
            unreachable!("descent stops at a leaf")
        };
        leaf.absorb(x, y);
        leaf.since_eval += 1;
        if leaf.since_eval < self.params.grace_period {
            return Ok(());
        }
        leaf.since_eval = 0;
        if let Some(split) = attempt_split(leaf, &self.params, self.classes_seen) {
            *node = split;
        }
        Ok(())
    }

    pub fn predict_detailed(&self, x: &[f64]) -> Prediction {
        if self.seen == 0 {
            return Prediction {
                class: ClassId(0),
                low_confidence: true,
            };
        }
        let leaf = self.leaf_for(x);
        Prediction {
            class: leaf.majority().unwrap_or_default(),
            low_confidence: false,
        }
    }

    fn leaf_for(&self, x: &[f64]) -> &Leaf {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(leaf) => return leaf,
                Node::Split {
                    attribute,
                    threshold,
                    left,
                    right,
                } => {
                    // a short query vector falls to the left branch
                    node = if x.get(*attribute).is_none_or(|v| v <= threshold) {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn split_count(&self) -> usize {
        fn walk(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(left) + walk(right),
            }
        }
        walk(&self.root)
    }

    pub fn leaf_count(&self) -> usize {
        self.split_count() + 1
    }

    pub fn depth(&self) -> usize {
        fn walk(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }

    /// Per-leaf class counts in left-to-right order.
    pub fn leaf_class_counts(&self) -> Vec<Vec<u64>> {
        fn walk(n: &Node, out: &mut Vec<Vec<u64>>) {
            match n {
                Node::Leaf(l) => out.push(l.class_counts.clone()),
                Node::Split { left, right, .. } => {
                    walk(left, out);
                    walk(right, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// Indented text dump of the tree structure.
    pub fn render(&self) -> String {
        fn walk(n: &Node, depth: usize, out: &mut String) {
            let pad = "  ".repeat(depth);
            match n {
                Node::Leaf(l) => {
                    let _ = writeln!(
                        out,
                        "{pad}leaf counts={:?} predict={}",
                        l.class_counts,
                        l.majority().map_or("-".to_string(), |c| c.to_string())
                    );
                }
                Node::Split {
                    attribute,
                    threshold,
                    left,
                    right,
                } => {
                    let _ = writeln!(out, "{pad}x{attribute} <= {threshold:.6}");
                    walk(left, depth + 1, out);
                    let _ = writeln!(out, "{pad}x{attribute} > {threshold:.6}");
                    walk(right, depth + 1, out);
                }
            }
        }
        let mut out = String::new();
        walk(&self.root, 0, &mut out);
        out
    }
}

fn attempt_split(leaf: &Leaf, params: &TreeParams, classes_seen: usize) -> Option<Node> {
    if leaf.class_counts.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    if params.max_depth.is_some_and(|d| leaf.depth >= d) {
        return None;
    }
    let candidates = leaf.candidates();
    let best = candidates.first()?;
    // the null split (no split, zero gain) always competes
    let second = candidates.get(1).map_or(0.0, |c| c.gain.max(0.0));
    let range = (classes_seen.max(2) as f64).log2();
    let eps = hoeffding_bound(range, params.split_confidence, leaf.total() as f64);
    if best.gain <= 0.0 || !(best.gain - second > eps || eps < params.tie_threshold) {
        return None;
    }
    let dim = leaf.ranges.len();
    let child = |dist: &[f64]| {
        let fallback = if dist.iter().sum::<f64>() > 0.0 {
            Some(argmax(dist.iter().copied()))
        } else {
            leaf.majority()
        };
        Box::new(Node::Leaf(Leaf::new(dim, leaf.depth + 1, fallback)))
    };
    Some(Node::Split {
        attribute: best.attribute,
        threshold: best.threshold,
        left: child(&best.left),
        right: child(&best.right),
    })
}

impl Classifier for HoeffdingTree {
    fn train_one(&mut self, features: &[f64], label: ClassId) -> Result<()> {
        self.train(features, label)
    }

    fn predict(&self, features: &[f64]) -> ClassId {
        self.predict_detailed(features).class
    }

    fn is_trained(&self) -> bool {
        self.seen > 0
    }

    fn fresh(&self) -> Self {
        Self::new(self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn separable(seed: u64, n: usize) -> Vec<(Vec<f64>, ClassId)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x: f64 = rng.gen_range(0.0..10.0);
                (vec![x], ClassId(u32::from(x > 5.0)))
            })
            .collect()
    }

    fn trained_on(data: &[(Vec<f64>, ClassId)]) -> HoeffdingTree {
        let mut t = HoeffdingTree::default();
        for (x, y) in data {
            t.train(x, *y).unwrap();
        }
        t
    }

    #[test]
    fn single_instance_predicts_its_class() {
        let mut t = HoeffdingTree::default();
        t.train(&[1.0, 2.0], ClassId(0)).unwrap();
        assert_eq!(t.predict(&[9.0, -3.0]), ClassId(0));
    }

    #[test]
    fn untrained_defaults_to_class_zero_low_confidence() {
        let t = HoeffdingTree::default();
        let p = t.predict_detailed(&[1.0]);
        assert_eq!(p.class, ClassId(0));
        assert!(p.low_confidence);
        assert!(!t.is_trained());
    }

    #[test]
    fn majority_and_tie_rule() {
        let mut t = HoeffdingTree::default();
        for _ in 0..7 {
            t.train(&[1.0], ClassId(0)).unwrap();
        }
        for _ in 0..3 {
            t.train(&[1.0], ClassId(1)).unwrap();
        }
        assert_eq!(t.predict(&[1.0]), ClassId(0));

        let mut t = HoeffdingTree::default();
        for _ in 0..5 {
            t.train(&[1.0], ClassId(1)).unwrap();
            t.train(&[1.0], ClassId(0)).unwrap();
        }
        assert_eq!(t.predict(&[1.0]), ClassId(0));
    }

    #[test]
    fn separable_data_is_learned() {
        let data = separable(11, 2000);
        let t = trained_on(&data);
        assert!(t.split_count() >= 1);
        let acc = data.iter().filter(|(x, y)| t.predict(x) == *y).count() as f64 / 2000.0;
        assert!(acc >= 0.99, "training accuracy {acc}");
        assert_eq!(t.predict(&[9.0]), ClassId(1));
    }

    #[test]
    fn identical_features_never_split() {
        let mut t = HoeffdingTree::default();
        for i in 0..5000 {
            t.train(&[3.0, 3.0], ClassId(i % 2)).unwrap();
        }
        assert_eq!(t.split_count(), 0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mut t = HoeffdingTree::default();
        t.train(&[1.0, 2.0], ClassId(0)).unwrap();
        assert!(matches!(
            t.train(&[1.0], ClassId(0)),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn batch_equals_sequential() {
        let data = separable(5, 700);
        let seq = trained_on(&data);
        let mut batch = HoeffdingTree::default();
        batch
            .train_batch(data.iter().map(|(x, y)| (x.as_slice(), *y)))
            .unwrap();
        assert_eq!(seq, batch);

        let mut empty = seq.clone();
        empty.train_batch(std::iter::empty()).unwrap();
        assert_eq!(empty, seq);
    }

    #[test]
    fn max_depth_is_respected() {
        let params = TreeParams {
            max_depth: Some(1),
            grace_period: 50,
            ..TreeParams::default()
        };
        let mut t = HoeffdingTree::new(params);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20_000 {
            let x = [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)];
            let y = ClassId(u32::from(x[0] + x[1] <= 8.0));
            t.train(&x, y).unwrap();
        }
        assert!(t.depth() <= 1);
    }

    #[test]
    fn hoeffding_bound_values() {
        let e = hoeffding_bound(1.0, 1e-7, 1000.0);
        let expected = ((1e7f64).ln() / 2000.0).sqrt();
        assert!((e - expected).abs() < 1e-15);
        assert!((e - 0.08977).abs() < 1e-5);
        assert!(hoeffding_bound(1.0, 1e-7, 1e8) < 1e-3);
        assert_eq!(hoeffding_bound(1.0, 1.0, 10.0), 0.0);
    }

    #[test]
    fn leaf_counts_sum_to_calls_without_splits() {
        let mut t = HoeffdingTree::new(TreeParams {
            grace_period: 10_000,
            ..TreeParams::default()
        });
        for i in 0..777u32 {
            t.train(&[f64::from(i)], ClassId(i % 3)).unwrap();
        }
        let total: u64 = t.leaf_class_counts().iter().flatten().sum();
        assert_eq!(total, 777);
        assert_eq!(t.instances_seen(), 777);
    }

    #[test]
    fn render_mentions_split_attribute() {
        let t = trained_on(&separable(1, 2000));
        assert!(t.render().contains("x0 <="));
    }

    proptest! {
        #[test]
        fn running_gaussian_matches_two_pass(values in prop::collection::vec(-1e3f64..1e3, 1..200)) {
            let mut g = RunningGaussian::default();
            for &v in &values {
                g.push(v);
            }
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            prop_assert!((g.mean() - mean).abs() < 1e-9);
            prop_assert!((g.variance() - var).abs() < 1e-9 * var.max(1.0));
            prop_assert!(g.variance() >= 0.0);
        }

        #[test]
        fn same_sequence_same_predictions(seed in 0u64..50) {
            let data = separable(seed, 600);
            let a = trained_on(&data);
            let b = trained_on(&data);
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.instances_seen(), 600);
        }
    }
}
