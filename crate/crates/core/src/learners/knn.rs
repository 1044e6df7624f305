/// k-nearest neighbours under Euclidean distance. Equal distances favour the
/// lower training row index.
#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    k: usize,
    rows: Vec<Vec<f64>>,
    labels: Vec<bool>,
}

impl Knn {
    pub fn fit(rows: &[&[f64]], labels: &[bool], k: usize) -> Self {
        Self {
            k: k.min(rows.len()).max(1),
            rows: rows.iter().map(|r| r.to_vec()).collect(),
            labels: labels.to_vec(),
        }
    }

    /// Fraction of positive labels among the k nearest training rows.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let d: f64 = r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let pos = dist[..self.k].iter().filter(|(_, i)| self.labels[*i]).count();
        pos as f64 / self.k as f64
    }
}
