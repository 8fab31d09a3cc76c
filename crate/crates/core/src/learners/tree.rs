use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::error::{Error, Result};

/// Columns with at most this many distinct values split exactly.
const MAX_BINS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeKind {
    /// Leaves hold the weighted frequency of class 1.
    Classifier,
    /// Leaves hold a Newton step on the logistic loss.
    Regressor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    Best,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub split_mode: SplitMode,
    /// Features considered per split; None means all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 20,
            min_samples_leaf: 1,
            split_mode: SplitMode::Best,
            max_features: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { value: f64, weight: f64 },
}

/// Node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub max_depth: usize,
    pub kind: TreeKind,
}

impl DecisionTree {
    /// Single-leaf classifier with P(class 1) = `p`.
    pub fn constant(n_features: usize, p: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value: p, weight: 1.0 }],
            n_features,
            max_depth: 0,
            kind: TreeKind::Classifier,
        }
    }

    pub fn predict_value(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
                Node::Leaf { value, .. } => return value,
            }
        }
    }

    /// (P(class 0), P(class 1)) at the leaf reached by `x`.
    pub fn leaf_probabilities(&self, x: &[f64]) -> (f64, f64) {
        let p = self.predict_value(x);
        (1.0 - p, p)
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Column-wise bin codes shared by every tree grown on one training set.
pub(crate) struct Binned {
    pub n: usize,
    pub d: usize,
    codes: Vec<Vec<u16>>,
    lo: Vec<Vec<f64>>,
    hi: Vec<Vec<f64>>,
}

impl Binned {
    pub fn new(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        let mut codes = Vec::with_capacity(d);
        let mut lo = Vec::with_capacity(d);
        let mut hi = Vec::with_capacity(d);
        for j in 0..d {
            let mut distinct: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let m = distinct.len();
            let groups = m.min(MAX_BINS);
            // Group g holds distinct[start(g)..start(g + 1)].
            let start = |g: usize| g * m / groups;
            let starts: Vec<f64> = (0..groups).map(|g| distinct[start(g)]).collect();
            lo.push(starts.clone());
            hi.push((0..groups).map(|g| distinct[start(g + 1) - 1]).collect());
            codes.push(
                rows.iter()
                    .map(|r| (starts.partition_point(|s| *s <= r[j]) - 1) as u16)
                    .collect(),
            );
        }
        Self { n, d, codes, lo, hi }
    }

    fn n_bins(&self, j: usize) -> usize {
        self.lo[j].len()
    }
}

/// Per-sample weight `w`, weighted target `a` and weighted curvature `h`.
pub(crate) struct Stats {
    pub w: Vec<f64>,
    pub a: Vec<f64>,
    pub h: Vec<f64>,
}

impl Stats {
    pub fn classification(labels: &[u8], weights: &[f64]) -> Self {
        Self {
            w: weights.to_vec(),
            a: labels.iter().zip(weights).map(|(y, w)| f64::from(*y) * w).collect(),
            h: weights.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Default)]
struct Acc {
    w: f64,
    a: f64,
    h: f64,
}

impl Acc {
    fn add(&mut self, o: &Acc) {
        self.w += o.w;
        self.a += o.a;
        self.h += o.h;
    }

    fn minus(&self, o: &Acc) -> Acc {
        Acc {
            w: self.w - o.w,
            a: self.a - o.a,
            h: self.h - o.h,
        }
    }
}

struct Candidate {
    score: f64,
    feature: usize,
    cut_bin: usize,
    threshold: f64,
}

struct Grower<'a> {
    data: &'a Binned,
    stats: &'a Stats,
    params: &'a TreeParams,
    kind: TreeKind,
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn score(&self, s: &Acc) -> f64 {
        match self.kind {
            TreeKind::Classifier => (s.a * s.a + (s.w - s.a) * (s.w - s.a)) / s.w,
            TreeKind::Regressor => s.a * s.a / s.w,
        }
    }

    fn leaf_value(&self, s: &Acc) -> f64 {
        match self.kind {
            TreeKind::Classifier => {
                if s.w > 0.0 {
                    (s.a / s.w).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            }
            TreeKind::Regressor => {
                if s.h > 1e-12 {
                    s.a / s.h
                } else {
                    0.0
                }
            }
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.data.d;
        match self.params.max_features {
            Some(k) if k < d => {
                let mut all: Vec<usize> = (0..d).collect();
                all.shuffle(self.rng);
                all
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, idx: &[usize], total: &Acc) -> Option<Candidate> {
        let min_leaf = self.params.min_samples_leaf.max(1) as f64;
        let order = self.candidate_features();
        let wanted = self.params.max_features.unwrap_or(self.data.d).max(1);
        let mut evaluated = 0;
        let mut feats = Vec::new();
        let mut hists = Vec::new();
        for &j in &order {
            if evaluated >= wanted {
                break;
            }
            let mut hist = vec![Acc::default(); self.data.n_bins(j)];
            let codes = &self.data.codes[j];
            for &i in idx {
                let b = &mut hist[codes[i] as usize];
                b.w += self.stats.w[i];
                b.a += self.stats.a[i];
                b.h += self.stats.h[i];
            }
            if hist.iter().filter(|b| b.w > 0.0).count() < 2 {
                continue;
            }
            evaluated += 1;
            feats.push(j);
            hists.push(hist);
        }
        // Ascending feature order makes the first strictly better candidate
        // the lowest index on ties.
        let mut by_feature: Vec<(usize, Vec<Acc>)> = feats.into_iter().zip(hists).collect();
        by_feature.sort_by_key(|(j, _)| *j);

        let mut best: Option<Candidate> = None;
        for (j, hist) in by_feature {
            let nonempty: Vec<usize> = (0..hist.len()).filter(|&b| hist[b].w > 0.0).collect();
            let cuts: Vec<usize> = match self.params.split_mode {
                SplitMode::Best => (1..nonempty.len()).collect(),
                SplitMode::Random => {
                    let lo = self.data.lo[j][nonempty[0]];
                    let hi = self.data.lo[j][*nonempty.last().unwrap()];
                    let u = self.rng.gen_range(lo..hi);
                    let c = nonempty.iter().filter(|&&b| self.data.lo[j][b] <= u).count();
                    vec![c.clamp(1, nonempty.len() - 1)]
                }
            };
            let mut left = Acc::default();
            let mut consumed = 0;
            for c in cuts {
                while consumed < c {
                    left.add(&hist[nonempty[consumed]]);
                    consumed += 1;
                }
                let right = total.minus(&left);
                if left.w < min_leaf || right.w < min_leaf {
                    continue;
                }
                let score = self.score(&left) + self.score(&right);
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let below = nonempty[c - 1];
                    let above = nonempty[c];
                    best = Some(Candidate {
                        score,
                        feature: j,
                        cut_bin: below,
                        threshold: 0.5 * (self.data.hi[j][below] + self.data.lo[j][above]),
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let mut total = Acc::default();
        for &i in idx.iter() {
            total.add(&Acc {
                w: self.stats.w[i],
                a: self.stats.a[i],
                h: self.stats.h[i],
            });
        }
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: self.leaf_value(&total),
            weight: total.w,
        });
        let pure = match self.kind {
            TreeKind::Classifier => total.a <= 0.0 || total.a >= total.w,
            TreeKind::Regressor => false,
        };
        let min_leaf = self.params.min_samples_leaf.max(1) as f64;
        if depth >= self.params.max_depth || pure || total.w < 2.0 * min_leaf {
            return at;
        }
        let Some(split) = self.best_split(idx, &total) else {
            return at;
        };
        let codes = &self.data.codes[split.feature];
        let mut mid = 0;
        for k in 0..idx.len() {
            if (codes[idx[k]] as usize) <= split.cut_bin {
                idx.swap(k, mid);
                mid += 1;
            }
        }
        let (l, r) = idx.split_at_mut(mid);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

/// Grows one tree on the samples with positive weight.
pub(crate) fn grow(
    data: &Binned,
    stats: &Stats,
    params: &TreeParams,
    kind: TreeKind,
    rng: &mut ChaCha8Rng,
) -> DecisionTree {
    let mut idx: Vec<usize> = (0..data.n).filter(|&i| stats.w[i] > 0.0).collect();
    let mut g = Grower {
        data,
        stats,
        params,
        kind,
        rng,
        nodes: Vec::new(),
    };
    g.grow(&mut idx, 0);
    DecisionTree {
        nodes: g.nodes,
        n_features: data.d,
        max_depth: params.max_depth,
        kind,
    }
}

/// Greedy CART classifier minimizing weighted Gini impurity. Ties go to
/// the lowest feature index, then the lowest threshold.
pub fn train_tree(ds: &Dataset, params: &TreeParams, seed: u64) -> Result<DecisionTree> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows = ds.rows();
    let data = Binned::new(&rows);
    let stats = Stats::classification(&ds.labels(), &vec![1.0; ds.len()]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(grow(&data, &stats, params, TreeKind::Classifier, &mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::Provenance;

    fn ds(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Dataset {
        let d = rows[0].len();
        Dataset::from_rows("t", (0..d).map(|j| format!("f{j}")).collect(), rows, labels, Provenance::Unknown).unwrap()
    }

    fn accuracy(t: &DecisionTree, ds: &Dataset) -> f64 {
        let hits = ds
            .samples
            .iter()
            .filter(|s| u8::from(t.predict_value(&s.features) >= 0.5) == s.label)
            .count();
        hits as f64 / ds.len() as f64
    }

    #[test]
    fn threshold_at_zero_gives_depth_one() {
        let data = ds(vec![vec![-2.0], vec![-1.0], vec![-0.5], vec![0.5], vec![1.0], vec![3.0]], vec![0, 0, 0, 1, 1, 1]);
        let t = train_tree(&data, &TreeParams::default(), 0).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(accuracy(&t, &data), 1.0);
        match t.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(threshold, 0.0),
            _ => panic!("root should split"),
        }
    }

    #[test]
    fn depth_zero_predicts_majority() {
        let data = ds(vec![vec![0.0], vec![1.0], vec![2.0]], vec![1, 1, 0]);
        let t = train_tree(&data, &TreeParams { max_depth: 0, ..TreeParams::default() }, 0).unwrap();
        assert_eq!(t.n_leaves(), 1);
        assert!((t.predict_value(&[9.0]) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn xor_is_fit_at_depth_two() {
        let data = ds(vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]], vec![0, 1, 1, 0]);
        let t = train_tree(&data, &TreeParams { max_depth: 2, ..TreeParams::default() }, 0).unwrap();
        assert_eq!(accuracy(&t, &data), 1.0);
        assert_eq!(t.depth(), 2);
        // No first split reduces impurity, so the tie rule picks feature 0.
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn leaf_probabilities_sum_to_one() {
        let data = ds(vec![vec![0.0], vec![0.0], vec![1.0]], vec![0, 1, 1]);
        let t = train_tree(&data, &TreeParams::default(), 0).unwrap();
        let (p0, p1) = t.leaf_probabilities(&[0.0]);
        assert_eq!(p0 + p1, 1.0);
        assert_eq!(p1, 0.5);
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let data = ds((0..10).map(|i| vec![i as f64]).collect(), (0..10).map(|i| u8::from(i == 9)).collect());
        let t = train_tree(&data, &TreeParams { min_samples_leaf: 3, ..TreeParams::default() }, 0).unwrap();
        for n in &t.nodes {
            if let Node::Leaf { weight, .. } = n {
                assert!(*weight >= 3.0);
            }
        }
    }

    #[test]
    fn wide_columns_are_binned() {
        let rows: Vec<&[f64]> = Vec::new();
        assert_eq!(Binned::new(&rows).d, 0);
        let data: Vec<Vec<f64>> = (0..1000).map(|i| vec![i as f64]).collect();
        let refs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let b = Binned::new(&refs);
        assert_eq!(b.n_bins(0), MAX_BINS);
        assert_eq!(b.codes[0][0], 0);
        assert_eq!(b.codes[0][999] as usize, MAX_BINS - 1);
    }
}
