/// Gaussian naive Bayes with a variance floor of `var_smoothing` times the
/// largest feature variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Gnb {
    log_prior: [f64; 2],
    mean: [Vec<f64>; 2],
    var: [Vec<f64>; 2],
}

pub const DEFAULT_VAR_SMOOTHING: f64 = 1e-9;

fn mean_var(rows: &[&[f64]], p: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; p];
    for r in rows {
        mean.iter_mut().zip(r.iter()).for_each(|(m, x)| *m += x / n);
    }
    let mut var = vec![0.0; p];
    for r in rows {
        var.iter_mut()
            .zip(r.iter().zip(&mean))
            .for_each(|(v, (x, m))| *v += (x - m) * (x - m) / n);
    }
    (mean, var)
}

impl Gnb {
    /// Both classes must be present; the caller handles the one-class case.
    pub fn fit(rows: &[&[f64]], labels: &[bool], var_smoothing: f64) -> Self {
        let p = rows.first().map_or(0, |r| r.len());
        let (_, all_var) = mean_var(rows, p);
        let max_var = all_var.iter().copied().fold(0.0, f64::max);
        let floor = if max_var > 0.0 { var_smoothing * max_var } else { var_smoothing };

        let class_rows = |c: bool| -> Vec<&[f64]> {
            rows.iter().zip(labels).filter(|(_, &y)| y == c).map(|(r, _)| *r).collect()
        };
        let neg = class_rows(false);
        let pos = class_rows(true);
        let n = rows.len() as f64;
        let (m0, mut v0) = mean_var(&neg, p);
        let (m1, mut v1) = mean_var(&pos, p);
        v0.iter_mut().chain(v1.iter_mut()).for_each(|v| *v += floor);
        Self {
            log_prior: [(neg.len() as f64 / n).ln(), (pos.len() as f64 / n).ln()],
            mean: [m0, m1],
            var: [v0, v1],
        }
    }

    fn joint_log_likelihood(&self, c: usize, row: &[f64]) -> f64 {
        let mut ll = self.log_prior[c];
        for ((x, m), v) in row.iter().zip(&self.mean[c]).zip(&self.var[c]) {
            ll -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m) * (x - m) / v);
        }
        ll
    }

    /// Posterior probability of the positive class.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let l0 = self.joint_log_likelihood(0, row);
        let l1 = self.joint_log_likelihood(1, row);
        let hi = l0.max(l1);
        let e0 = (l0 - hi).exp();
        let e1 = (l1 - hi).exp();
        e1 / (e0 + e1)
    }
}
