//! CART classification trees with Gini impurity.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_split: usize,
    /// Candidate features per split; `None` means all, visited in column order.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_split: 2,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        score: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
    /// Weighted Gini decrease per feature, unnormalized.
    impurity_decrease: Vec<f64>,
}

fn gini(pos: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

struct Builder<'a, R> {
    rows: &'a [&'a [f64]],
    labels: &'a [bool],
    params: TreeParams,
    n_features: usize,
    n_total: f64,
    rng: &'a mut R,
    tree: Tree,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl<R: Rng> Builder<'_, R> {
    fn build(&mut self, samples: &mut [usize], depth: usize) -> usize {
        let n = samples.len() as f64;
        let pos = samples.iter().filter(|&&i| self.labels[i]).count() as f64;
        let id = self.tree.nodes.len();
        self.tree.nodes.push(Node::Leaf { score: pos / n });

        let pure = pos == 0.0 || pos == n;
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        if pure || samples.len() < self.params.min_split || !depth_ok {
            return id;
        }
        let Some(best) = self.best_split(samples, pos) else {
            return id;
        };

        self.tree.impurity_decrease[best.feature] += n / self.n_total * best.decrease;
        let mid = partition(samples, |&i| self.rows[i][best.feature] <= best.threshold);
        let (l, r) = samples.split_at_mut(mid);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.tree.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, samples: &[usize], pos: f64) -> Option<BestSplit> {
        let n = samples.len() as f64;
        let parent = gini(pos, n);
        let mut features: Vec<usize> = (0..self.n_features).collect();
        let budget = match self.params.max_features {
            Some(m) if m < self.n_features => {
                features.shuffle(self.rng);
                m.max(1)
            }
            _ => self.n_features,
        };

        let mut best: Option<BestSplit> = None;
        let mut order: Vec<usize> = samples.to_vec();
        for (visited, &f) in features.iter().enumerate() {
            // keep drawing past the budget until some valid split turns up
            if visited >= budget && best.is_some() {
                break;
            }
            order.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]));
            let mut left_pos = 0.0;
            for k in 1..order.len() {
                if self.labels[order[k - 1]] {
                    left_pos += 1.0;
                }
                let lo = self.rows[order[k - 1]][f];
                let hi = self.rows[order[k]][f];
                if lo == hi {
                    continue;
                }
                let nl = k as f64;
                let nr = n - nl;
                let child = (nl * gini(left_pos, nl) + nr * gini(pos - left_pos, nr)) / n;
                let decrease = parent - child;
                if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        decrease,
                    });
                }
            }
        }
        best
    }
}

fn partition<T, F: Fn(&T) -> bool>(v: &mut [T], pred: F) -> usize {
    let mut next = 0;
    for i in 0..v.len() {
        if pred(&v[i]) {
            v.swap(i, next);
            next += 1;
        }
    }
    next
}

impl Tree {
    /// Grow a tree on the given sample indices (repeats allowed, for bootstrap).
    pub fn fit<R: Rng>(
        rows: &[&[f64]],
        labels: &[bool],
        samples: &[usize],
        params: TreeParams,
        rng: &mut R,
    ) -> Self {
        let n_features = rows.first().map_or(0, |r| r.len());
        let mut builder = Builder {
            rows,
            labels,
            params,
            n_features,
            n_total: samples.len() as f64,
            rng,
            tree: Tree {
                nodes: Vec::new(),
                impurity_decrease: vec![0.0; n_features],
            },
        };
        let mut samples = samples.to_vec();
        builder.build(&mut samples, 0);
        builder.tree
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { score } => return score,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn impurity_decrease(&self) -> &[f64] {
        &self.impurity_decrease
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
