//! Derivative-free minimizers over unconstrained real vectors.
//!
//! [`Cobyla`] is the unconstrained form of Powell's linear-approximation trust-region
//! method: it keeps `n+1` interpolation points, fits a linear model, steps to the edge of
//! a trust region of radius `rho`, and halves `rho` once the model stops paying off and the
//! simplex is well shaped. It stops when `rho` falls below the tolerance.
//! [`NelderMead`] is the usual reflect/expand/contract/shrink simplex.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeOptions {
    pub max_evals: usize,
    /// Initial trust-region radius / simplex edge.
    pub initial_step: f64,
    /// Final trust-region radius / simplex diameter.
    pub tolerance: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { max_evals: 500, initial_step: 0.5, tolerance: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    /// `false` when the budget ran out before the stopping rule fired.
    pub converged: bool,
}

pub trait Minimizer: Send + Sync {
    fn minimize(&self, f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], options: &MinimizeOptions) -> MinimizeOutcome;
}

/// Counts evaluations and remembers the best point.
struct Tracker<'a> {
    f: &'a mut dyn FnMut(&[f64]) -> f64,
    evals: usize,
    budget: usize,
    best: (Vec<f64>, f64),
}

impl<'a> Tracker<'a> {
    fn new(f: &'a mut dyn FnMut(&[f64]) -> f64, x0: &[f64], budget: usize) -> Self {
        Tracker { f, evals: 0, budget, best: (x0.to_vec(), f64::INFINITY) }
    }

    /// `None` once the budget is spent.
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.evals >= self.budget {
            return None;
        }
        self.evals += 1;
        let v = (self.f)(x);
        // NaN never wins.
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < self.best.1 {
            self.best = (x.to_vec(), v);
        }
        Some(v)
    }

    fn outcome(self, converged: bool) -> MinimizeOutcome {
        MinimizeOutcome { x: self.best.0, f: self.best.1, evals: self.evals, converged }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Cobyla;

/// Inverse of a square matrix by Gauss-Jordan with partial pivoting; `None` if singular.
fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        a.swap(col, pivot);
        let p = a[col][col];
        a[col].iter_mut().for_each(|v| *v /= p);
        for r in 0..n {
            if r != col {
                let factor = a[r][col];
                if factor != 0.0 {
                    let pivot = a[col].clone();
                    for (x, p) in a[r].iter_mut().zip(&pivot) {
                        *x -= factor * p;
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Minimizer for Cobyla {
    fn minimize(&self, f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], options: &MinimizeOptions) -> MinimizeOutcome {
        let n = x0.len();
        let mut t = Tracker::new(f, x0, options.max_evals.max(1));
        if n == 0 {
            let done = t.eval(x0).is_some();
            return t.outcome(done);
        }
        let rho_end = options.tolerance.min(options.initial_step);
        let mut rho = options.initial_step;

        let mut points: Vec<Vec<f64>> = vec![x0.to_vec()];
        for i in 0..n {
            let mut p = x0.to_vec();
            p[i] += rho;
            points.push(p);
        }
        let mut values = Vec::with_capacity(n + 1);
        for p in &points {
            let Some(v) = t.eval(p) else {
                return t.outcome(false);
            };
            values.push(v);
        }

        loop {
            if t.evals >= options.max_evals {
                return t.outcome(false);
            }
            let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("nonempty");
            let others: Vec<usize> = (0..=n).filter(|&i| i != best).collect();
            let displacement: Vec<Vec<f64>> =
                others.iter().map(|&i| (0..n).map(|k| points[i][k] - points[best][k]).collect()).collect();
            let inverse = match invert(&displacement) {
                Some(inv) => inv,
                None => {
                    // Collapsed simplex: rebuild around the best point.
                    let centre = points[best].clone();
                    let f_centre = values[best];
                    points = vec![centre.clone()];
                    values = vec![f_centre];
                    for i in 0..n {
                        let mut p = centre.clone();
                        p[i] += rho;
                        let Some(v) = t.eval(&p) else {
                            return t.outcome(false);
                        };
                        values.push(v);
                        points.push(p);
                    }
                    continue;
                }
            };
            // inverse[k][j]: column j is orthogonal to every displacement but the j-th.
            let column = |j: usize| -> Vec<f64> { (0..n).map(|k| inverse[k][j]).collect() };
            let gradient: Vec<f64> = (0..n)
                .map(|k| others.iter().enumerate().map(|(j, &i)| inverse[k][j] * (values[i] - values[best])).sum())
                .collect();

            // Geometry: the vertex farthest from the best point, if it has drifted beyond 2ρ.
            let (far_j, far_dist) = displacement
                .iter()
                .enumerate()
                .map(|(j, d)| (j, norm(d)))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("n >= 1");

            let g_norm = norm(&gradient);
            let mut improved = false;
            if g_norm > 0.0 && g_norm.is_finite() {
                let step: Vec<f64> = gradient.iter().map(|g| -rho * g / g_norm).collect();
                let predicted = rho * g_norm;
                let trial: Vec<f64> = (0..n).map(|k| points[best][k] + step[k]).collect();
                let Some(f_trial) = t.eval(&trial) else {
                    return t.outcome(false);
                };
                // Replace the vertex whose removal keeps the simplex volume largest.
                let j = (0..n)
                    .max_by(|&a, &b| {
                        let sa: f64 = column(a).iter().zip(&step).map(|(x, y)| x * y).sum::<f64>().abs();
                        let sb: f64 = column(b).iter().zip(&step).map(|(x, y)| x * y).sum::<f64>().abs();
                        (sa * norm(&displacement[a]).max(rho)).total_cmp(&(sb * norm(&displacement[b]).max(rho)))
                    })
                    .expect("n >= 1");
                points[others[j]] = trial;
                values[others[j]] = f_trial;
                improved = values[best] - f_trial > 0.1 * predicted;
            }
            if improved {
                continue;
            }
            if far_dist > 2.0 * rho {
                let a = column(far_j);
                let a_norm = norm(&a);
                let sign = if a.iter().zip(&gradient).map(|(x, g)| x * g).sum::<f64>() > 0.0 { -1.0 } else { 1.0 };
                let p: Vec<f64> = (0..n).map(|k| points[best][k] + sign * rho * a[k] / a_norm).collect();
                let Some(v) = t.eval(&p) else {
                    return t.outcome(false);
                };
                values[others[far_j]] = v;
                points[others[far_j]] = p;
                continue;
            }
            if rho <= rho_end {
                return t.outcome(true);
            }
            rho = (rho * 0.5).max(rho_end);
            if rho < 2.0 * rho_end {
                rho = rho_end;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NelderMead;

impl Minimizer for NelderMead {
    fn minimize(&self, f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], options: &MinimizeOptions) -> MinimizeOutcome {
        let n = x0.len();
        let mut t = Tracker::new(f, x0, options.max_evals.max(1));
        if n == 0 {
            let done = t.eval(x0).is_some();
            return t.outcome(done);
        }
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let Some(f0) = t.eval(x0) else {
            return t.outcome(false);
        };
        simplex.push((x0.to_vec(), f0));
        for i in 0..n {
            let mut p = x0.to_vec();
            p[i] += options.initial_step;
            let Some(v) = t.eval(&p) else {
                return t.outcome(false);
            };
            simplex.push((p, v));
        }
        let point =
            |c: &[f64], d: &[f64], s: f64| -> Vec<f64> { c.iter().zip(d).map(|(a, b)| a + s * (b - a)).collect() };
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let diameter = simplex[1..]
                .iter()
                .map(|(p, _)| norm(&p.iter().zip(&simplex[0].0).map(|(a, b)| a - b).collect::<Vec<_>>()))
                .fold(0.0, f64::max);
            if diameter < options.tolerance {
                return t.outcome(true);
            }
            if t.evals >= options.max_evals {
                return t.outcome(false);
            }
            let centroid: Vec<f64> =
                (0..n).map(|k| simplex[..n].iter().map(|(p, _)| p[k]).sum::<f64>() / n as f64).collect();
            let worst = simplex[n].clone();
            let reflected = point(&centroid, &worst.0, -1.0);
            let Some(fr) = t.eval(&reflected) else {
                return t.outcome(false);
            };
            if fr < simplex[0].1 {
                let expanded = point(&centroid, &worst.0, -2.0);
                let Some(fe) = t.eval(&expanded) else {
                    return t.outcome(false);
                };
                simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (reflected, fr);
            } else {
                let (target, ft) = if fr < worst.1 { (&reflected, fr) } else { (&worst.0, worst.1) };
                let contracted = point(&centroid, target, 0.5);
                let Some(fc) = t.eval(&contracted) else {
                    return t.outcome(false);
                };
                if fc < ft {
                    simplex[n] = (contracted, fc);
                } else {
                    let best = simplex[0].0.clone();
                    for entry in simplex.iter_mut().skip(1) {
                        let p = point(&best, &entry.0, 0.5);
                        let Some(v) = t.eval(&p) else {
                            return t.outcome(false);
                        };
                        *entry = (p, v);
                    }
                }
            }
        }
    }
}
