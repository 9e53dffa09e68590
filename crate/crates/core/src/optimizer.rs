//! Nelder-Mead simplex minimisation for noisy, derivative-free objectives.

use crate::error::{Error, Result};

/// Result of a minimisation run.
#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    /// Best vertex seen over the whole run (not necessarily the final simplex's best).
    pub point: Vec<f64>,
    pub value: f64,
    /// Objective at the starting point.
    pub initial_value: f64,
    /// Best value seen after each iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMead {
    pub max_iters: usize,
    /// Stop once the simplex diameter falls below this; `0` disables the check.
    pub tol: f64,
    pub step: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl NelderMead {
    pub fn new(max_iters: usize) -> Self {
        Self { max_iters, tol: 0.0, step: 0.25, reflection: 1.0, expansion: 2.0, contraction: 0.5, shrink: 0.5 }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("Nelder-Mead needs at least one iteration"));
        }
        if !(self.tol >= 0.0) || !(self.step > 0.0) {
            return Err(Error::invalid("tolerance must be non-negative and step positive"));
        }
        Ok(())
    }

    pub fn minimize<F>(&self, mut f: F, x0: &[f64]) -> Result<Minimum>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        self.validate()?;
        let dim = x0.len();
        let mut evaluations = 0;
        let mut eval = |x: &[f64]| -> Result<f64> {
            evaluations += 1;
            let v = f(x)?;
            if !v.is_finite() {
                return Err(Error::NonFiniteObjective { value: v, point: x.to_vec() });
            }
            Ok(v)
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        let initial_value = eval(x0)?;
        simplex.push((x0.to_vec(), initial_value));
        for i in 0..dim {
            let mut x = x0.to_vec();
            x[i] += self.step;
            let v = eval(&x)?;
            simplex.push((x, v));
        }
        let mut best = simplex.iter().min_by(|a, b| a.1.total_cmp(&b.1)).cloned().expect("non-empty simplex");
        let mut trace = Vec::with_capacity(self.max_iters);
        let mut converged = false;
        let mut iterations = 0;

        if dim == 0 {
            trace.push(best.1);
            iterations = 1;
        }
        while dim > 0 && iterations < self.max_iters {
            if self.tol > 0.0 && diameter(&simplex) < self.tol {
                converged = true;
                break;
            }
            iterations += 1;
            // stable sort keeps the older vertex first among ties
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let centroid = centroid(&simplex[..dim]);
            let worst = simplex[dim].clone();
            let second_worst = simplex[dim - 1].1;
            let lowest = simplex[0].1;

            let xr = along(&centroid, &worst.0, -self.reflection);
            let fr = eval(&xr)?;
            if fr < lowest {
                let xe = along(&centroid, &worst.0, -self.expansion);
                let fe = eval(&xe)?;
                simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < second_worst {
                simplex[dim] = (xr, fr);
            } else {
                let (xc, fc, accept) = if fr < worst.1 {
                    let xc = along(&centroid, &xr, self.contraction);
                    let fc = eval(&xc)?;
                    (xc, fc, fc <= fr)
                } else {
                    let xc = along(&centroid, &worst.0, self.contraction);
                    let fc = eval(&xc)?;
                    (xc, fc, fc < worst.1)
                };
                if accept {
                    simplex[dim] = (xc, fc);
                } else {
                    let anchor = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let x = along(&anchor, &vertex.0, self.shrink);
                        let v = eval(&x)?;
                        *vertex = (x, v);
                    }
                }
            }
            for vertex in &simplex {
                if vertex.1 < best.1 {
                    best = vertex.clone();
                }
            }
            trace.push(best.1);
        }

        Ok(Minimum { point: best.0, value: best.1, initial_value, trace, iterations, evaluations, converged })
    }
}

/// `from + t (to - from)`.
fn along(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

fn centroid(vertices: &[(Vec<f64>, f64)]) -> Vec<f64> {
    let n = vertices.len() as f64;
    let mut c = vec![0.0; vertices[0].0.len()];
    for (x, _) in vertices {
        for (ci, xi) in c.iter_mut().zip(x) {
            *ci += xi / n;
        }
    }
    c
}

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in simplex.iter().enumerate() {
        for b in &simplex[i + 1..] {
            let dist = a.0.iter().zip(&b.0).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            d = d.max(dist);
        }
    }
    d
}
