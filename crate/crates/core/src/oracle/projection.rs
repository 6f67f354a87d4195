//! Weighted projection onto `{x : G x <= h}` by a primal active-set method.
//!
//! Solves `min 1/2 (x - y)' D (x - y)` for diagonal `D > 0`, starting from a
//! feasible point. Each iteration solves the equality-constrained problem on
//! the working set in closed form through the small Gram system
//! `G_W D^-1 G_W' lambda = G_W y - h_W`.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub(crate) struct Polytope {
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl Polytope {
    pub fn new() -> Self {
        Polytope {
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>, rhs: f64) {
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn slack(&self, i: usize, x: &[f64]) -> f64 {
        self.rhs[i] - dot(&self.rows[i], x)
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        (0..self.rows.len())
            .map(|i| -self.slack(i, x))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projects `y` onto `poly` in the metric `diag(weights)`. `start` must be feasible.
pub(crate) fn project(poly: &Polytope, weights: &[f64], y: &[f64], start: &[f64]) -> Vec<f64> {
    let n = y.len();
    let m = poly.rows.len();
    let scale = 1.0
        + y.iter()
            .chain(start)
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let step_eps = 1e-15 * scale;
    let mult_eps = 1e-13;

    let mut x = start.to_vec();
    let mut working: Vec<usize> = Vec::new();
    let max_iter = 4 * (m + n) + 32;

    for _ in 0..max_iter {
        let (target, lambda) = solve_equality(poly, &working, weights, y);
        let d: Vec<f64> = target.iter().zip(&x).map(|(t, xi)| t - xi).collect();
        let step = d.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));

        if step <= step_eps {
            // Stationary on the working face; drop a constraint with a negative multiplier.
            let worst = lambda
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(k, &l)| (k, l));
            match worst {
                Some((k, l)) if l < -mult_eps => {
                    working.remove(k);
                }
                _ => return x,
            }
            continue;
        }

        let mut t = 1.0;
        let mut blocking = None;
        for i in 0..m {
            if working.contains(&i) {
                continue;
            }
            let gd = dot(&poly.rows[i], &d);
            if gd > 1e-14 * scale {
                let ti = poly.slack(i, &x).max(0.0) / gd;
                if ti < t {
                    t = ti;
                    blocking = Some(i);
                }
            }
        }
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += t * di;
        }
        if let Some(i) = blocking {
            working.push(i);
        }
    }
    x
}

fn solve_equality(
    poly: &Polytope,
    working: &[usize],
    weights: &[f64],
    y: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    if working.is_empty() {
        return (y.to_vec(), Vec::new());
    }
    let k = working.len();
    let n = y.len();
    let g = DMatrix::from_fn(k, n, |r, c| poly.rows[working[r]][c]);
    let dinv = DVector::from_iterator(n, weights.iter().map(|w| 1.0 / w));
    let gd = DMatrix::from_fn(k, n, |r, c| g[(r, c)] * dinv[c]);
    let gram = &gd * g.transpose();
    let rhs = DVector::from_fn(k, |r, _| {
        dot(&poly.rows[working[r]], y) - poly.rhs[working[r]]
    });
    let lambda = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(k)),
    };
    let correction = gd.transpose() * &lambda;
    let x = (0..n).map(|c| y[c] - correction[c]).collect();
    (x, lambda.iter().copied().collect())
}
