use rand::seq::SliceRandom;

use crate::sampling::RngStream;

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Leaf {
        /// Weighted class counts `[n_0, n_1]` of the training rows reaching
        /// the leaf.
        counts: [f64; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Axis-aligned binary tree; rows with `x[feature] <= threshold` go left.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

pub(crate) struct TreeSettings {
    pub max_depth: usize,
    pub min_samples_leaf: f64,
    pub features_per_split: usize,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    decrease: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    /// Larger decrease wins; ties go to the lower feature index, then the
    /// lower threshold.
    fn beats(&self, other: &Candidate) -> bool {
        if self.decrease != other.decrease {
            return self.decrease > other.decrease;
        }
        if self.feature != other.feature {
            return self.feature < other.feature;
        }
        self.threshold < other.threshold
    }
}

fn gini_sum(c0: f64, c1: f64) -> f64 {
    // n * gini(node) = n - (c0^2 + c1^2) / n
    let n = c0 + c1;
    if n <= 0.0 {
        0.0
    } else {
        n - (c0 * c0 + c1 * c1) / n
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

struct Builder<'a> {
    features: &'a [Vec<f64>],
    labels: &'a [u8],
    weights: &'a [f64],
    settings: &'a TreeSettings,
    rng: &'a mut RngStream,
    nodes: Vec<Node>,
    scratch: Vec<(f64, u8, f64)>,
}

impl DecisionTree {
    /// Single-leaf tree that always predicts `label`.
    pub fn constant(label: u8) -> DecisionTree {
        let mut counts = [0.0; 2];
        counts[usize::from(label.min(1))] = 1.0;
        DecisionTree {
            nodes: vec![Node::Leaf { counts }],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Fits on the rows with positive weight. `features` is column-major.
    pub(crate) fn fit(
        features: &[Vec<f64>],
        labels: &[u8],
        weights: &[f64],
        settings: &TreeSettings,
        rng: &mut RngStream,
    ) -> DecisionTree {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| weights[i] > 0.0).collect();
        let mut b = Builder {
            features,
            labels,
            weights,
            settings,
            rng,
            nodes: Vec::new(),
            scratch: Vec::with_capacity(rows.len()),
        };
        b.build(&mut rows, 0);
        DecisionTree { nodes: b.nodes }
    }

    /// Leaf reached by `row`, a slice of feature values in training order.
    fn leaf(&self, row: &[f64]) -> [f64; 2] {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Majority class of the leaf; an exact tie votes 0.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let c = self.leaf(row);
        u8::from(c[1] > c[0])
    }
}

impl Builder<'_> {
    fn build(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let mut counts = [0.0f64; 2];
        for &i in rows.iter() {
            counts[self.labels[i] as usize] += self.weights[i];
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });

        let total = counts[0] + counts[1];
        let pure = counts[0] == 0.0 || counts[1] == 0.0;
        if pure || depth >= self.settings.max_depth || total < 2.0 * self.settings.min_samples_leaf {
            return id;
        }
        let Some(best) = self.best_split(rows, counts) else {
            return id;
        };

        let col = &self.features[best.feature];
        let mut mid = 0;
        for j in 0..rows.len() {
            if col[rows[j]] <= best.threshold {
                rows.swap(mid, j);
                mid += 1;
            }
        }
        let (l, r) = rows.split_at_mut(mid);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Evaluates `features_per_split` randomly chosen features; if none of
    /// them admits a valid split, keeps drawing from the remaining ones.
    fn best_split(&mut self, rows: &[usize], counts: [f64; 2]) -> Option<Candidate> {
        let mut order: Vec<usize> = (0..self.features.len()).collect();
        order.shuffle(self.rng);
        let parent = gini_sum(counts[0], counts[1]);
        let mut best: Option<Candidate> = None;
        for (visited, &f) in order.iter().enumerate() {
            if visited >= self.settings.features_per_split && best.is_some() {
                break;
            }
            if let Some(c) = self.best_split_on(f, rows, counts, parent) {
                if best.is_none_or(|b| c.beats(&b)) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn best_split_on(
        &mut self,
        feature: usize,
        rows: &[usize],
        counts: [f64; 2],
        parent: f64,
    ) -> Option<Candidate> {
        let col = &self.features[feature];
        self.scratch.clear();
        self.scratch
            .extend(rows.iter().map(|&i| (col[i], self.labels[i], self.weights[i])));
        self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));

        let min_leaf = self.settings.min_samples_leaf;
        let mut left = [0.0f64; 2];
        let mut best: Option<Candidate> = None;
        for j in 0..self.scratch.len() - 1 {
            let (x, y, w) = self.scratch[j];
            left[y as usize] += w;
            let next = self.scratch[j + 1].0;
            if next <= x {
                continue;
            }
            let n_left = left[0] + left[1];
            let n_right = counts[0] + counts[1] - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let decrease = parent
                - gini_sum(left[0], left[1])
                - gini_sum(counts[0] - left[0], counts[1] - left[1]);
            let cand = Candidate {
                decrease,
                feature,
                threshold: midpoint(x, next),
            };
            if best.is_none_or(|b| cand.beats(&b)) {
                best = Some(cand);
            }
        }
        best
    }
}
