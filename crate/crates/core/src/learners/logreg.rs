//! L2-regularized logistic regression fitted with L-BFGS.
//!
//! Minimizes `sum_i log(1 + exp(-s_i (w.x_i + b))) + l2/2 * |w|^2` with
//! `s_i = +-1`; the intercept is not penalized.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogregParams {
    pub l2: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for LogregParams {
    fn default() -> Self {
        Self {
            l2: 1.0,
            tolerance: 1e-6,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Logreg {
    weights: Vec<f64>,
    intercept: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(-z)) without overflow.
fn log_loss(z: f64) -> f64 {
    if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

struct Problem<'a> {
    rows: &'a [&'a [f64]],
    signs: Vec<f64>,
    l2: f64,
}

impl Problem<'_> {
    /// Objective and gradient; `theta` holds the weights followed by the intercept.
    fn eval(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let p = theta.len() - 1;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut f = 0.0;
        for (row, &s) in self.rows.iter().zip(&self.signs) {
            let z = row.iter().zip(theta).map(|(x, w)| x * w).sum::<f64>() + theta[p];
            let margin = s * z;
            f += log_loss(margin);
            // d/dz log(1 + exp(-s z)) = -s * sigmoid(-s z)
            let coef = -s * sigmoid(-margin);
            for (g, x) in grad.iter_mut().zip(row.iter()) {
                *g += coef * x;
            }
            grad[p] += coef;
        }
        for j in 0..p {
            f += 0.5 * self.l2 * theta[j] * theta[j];
            grad[j] += self.l2 * theta[j];
        }
        f
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

const HISTORY: usize = 10;

impl Logreg {
    pub fn fit(rows: &[&[f64]], labels: &[bool], params: &LogregParams) -> Self {
        let p = rows.first().map_or(0, |r| r.len());
        let problem = Problem {
            rows,
            signs: labels.iter().map(|&y| if y { 1.0 } else { -1.0 }).collect(),
            l2: params.l2,
        };

        let mut theta = vec![0.0; p + 1];
        let mut grad = vec![0.0; p + 1];
        let mut f = problem.eval(&theta, &mut grad);
        let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        let mut iterations = 0;
        let mut converged = max_abs(&grad) <= params.tolerance;

        while !converged && iterations < params.max_iter {
            iterations += 1;

            // two-loop recursion
            let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
            let mut alphas = Vec::with_capacity(history.len());
            for (s, y, rho) in history.iter().rev() {
                let a = rho * dot(s, &dir);
                dir.iter_mut().zip(y).for_each(|(d, yi)| *d -= a * yi);
                alphas.push(a);
            }
            if let Some((s, y, _)) = history.back() {
                let gamma = dot(s, y) / dot(y, y);
                dir.iter_mut().for_each(|d| *d *= gamma);
            }
            for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
                let b = rho * dot(y, &dir);
                dir.iter_mut().zip(s).for_each(|(d, si)| *d += (a - b) * si);
            }
            let mut slope = dot(&grad, &dir);
            if slope >= 0.0 {
                history.clear();
                dir = grad.iter().map(|g| -g).collect();
                slope = dot(&grad, &dir);
            }

            // backtracking Armijo search
            let mut step = if history.is_empty() {
                (1.0 / max_abs(&grad)).min(1.0)
            } else {
                1.0
            };
            let mut next = vec![0.0; p + 1];
            let mut next_grad = vec![0.0; p + 1];
            let mut next_f;
            loop {
                for j in 0..=p {
                    next[j] = theta[j] + step * dir[j];
                }
                next_f = problem.eval(&next, &mut next_grad);
                if next_f <= f + 1e-4 * step * slope || step < 1e-20 {
                    break;
                }
                step *= 0.5;
            }

            let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 {
                if history.len() == HISTORY {
                    history.pop_front();
                }
                history.push_back((s, y, 1.0 / sy));
            }
            let stalled = (f - next_f).abs() <= f64::EPSILON * f.abs().max(1.0) && step < 1e-20;
            theta = next;
            grad = next_grad;
            f = next_f;
            converged = max_abs(&grad) <= params.tolerance;
            if stalled {
                break;
            }
        }

        let intercept = theta.pop().unwrap_or(0.0);
        Self {
            weights: theta,
            intercept,
            iterations,
            converged,
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, row) + self.intercept)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }
}
