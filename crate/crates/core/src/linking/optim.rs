//! Unconstrained minimizers for the linker classifiers.

use std::collections::VecDeque;

/// Objective returning `(loss, gradient)` at a parameter vector.
pub trait Objective {
    fn eval(&mut self, params: &[f64], grad: &mut [f64]) -> f64;
}

impl<F: FnMut(&[f64], &mut [f64]) -> f64> Objective for F {
    fn eval(&mut self, params: &[f64], grad: &mut [f64]) -> f64 {
        self(params, grad)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimReport {
    pub iterations: usize,
    pub evaluations: usize,
    pub loss_trace: Vec<f64>,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Limited-memory BFGS with a backtracking Armijo line search.
#[derive(Debug, Clone)]
pub struct Lbfgs {
    pub max_iter: usize,
    pub memory: usize,
    /// Stop once the largest gradient component falls below this.
    pub gtol: f64,
}

impl Default for Lbfgs {
    fn default() -> Self {
        Lbfgs {
            max_iter: 600,
            memory: 10,
            gtol: 1e-5,
        }
    }
}

impl Lbfgs {
    pub fn minimize<O: Objective>(&self, obj: &mut O, x: &mut [f64]) -> OptimReport {
        let n = x.len();
        let mut g = vec![0.0; n];
        let mut f = obj.eval(x, &mut g);
        let mut evaluations = 1;
        let mut trace = vec![f];
        let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(self.memory);
        let mut x_new = vec![0.0; n];
        let mut g_new = vec![0.0; n];
        let mut dir = vec![0.0; n];
        let mut alpha = vec![0.0; self.memory];

        for iter in 0..self.max_iter {
            if inf_norm(&g) <= self.gtol {
                return OptimReport {
                    iterations: iter,
                    evaluations,
                    loss_trace: trace,
                    converged: true,
                };
            }
            // Two-loop recursion for dir = -H g.
            dir.iter_mut().zip(&g).for_each(|(d, gi)| *d = -gi);
            for (k, (s, y, rho)) in history.iter().enumerate().rev() {
                alpha[k] = rho * dot(s, &dir);
                dir.iter_mut()
                    .zip(y)
                    .for_each(|(d, yi)| *d -= alpha[k] * yi);
            }
            let gamma = match history.back() {
                Some((s, y, _)) => dot(s, y) / dot(y, y),
                None => 1.0 / inf_norm(&g).max(1.0),
            };
            dir.iter_mut().for_each(|d| *d *= gamma);
            for (k, (s, y, rho)) in history.iter().enumerate() {
                let beta = rho * dot(y, &dir);
                dir.iter_mut()
                    .zip(s)
                    .for_each(|(d, si)| *d += (alpha[k] - beta) * si);
            }
            let mut slope = dot(&g, &dir);
            if slope >= 0.0 {
                // Not a descent direction: restart from steepest descent.
                history.clear();
                dir.iter_mut()
                    .zip(&g)
                    .for_each(|(d, gi)| *d = -gi / inf_norm(&g).max(1.0));
                slope = dot(&g, &dir);
            }

            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                x_new
                    .iter_mut()
                    .zip(x.iter().zip(&dir))
                    .for_each(|(xn, (xi, di))| *xn = xi + step * di);
                let f_new = obj.eval(&x_new, &mut g_new);
                evaluations += 1;
                if f_new.is_finite() && f_new <= f + 1e-4 * step * slope {
                    accepted = Some(f_new);
                    break;
                }
                step *= 0.5;
            }
            let Some(f_new) = accepted else {
                return OptimReport {
                    iterations: iter,
                    evaluations,
                    loss_trace: trace,
                    converged: false,
                };
            };

            let s: Vec<f64> = x_new.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 {
                if history.len() == self.memory {
                    history.pop_front();
                }
                history.push_back((s, y, 1.0 / sy));
            }
            x.copy_from_slice(&x_new);
            g.copy_from_slice(&g_new);
            let improvement = f - f_new;
            f = f_new;
            trace.push(f);
            if improvement.abs() <= 1e-12 * f.abs().max(1.0) {
                return OptimReport {
                    iterations: iter + 1,
                    evaluations,
                    loss_trace: trace,
                    converged: true,
                };
            }
        }
        OptimReport {
            iterations: self.max_iter,
            evaluations,
            loss_trace: trace,
            converged: false,
        }
    }
}

/// Plain full-batch gradient descent.
#[derive(Debug, Clone)]
pub struct GradientDescent {
    pub steps: usize,
    pub learning_rate: f64,
}

impl Default for GradientDescent {
    fn default() -> Self {
        GradientDescent {
            steps: 2000,
            learning_rate: 0.1,
        }
    }
}

impl GradientDescent {
    pub fn minimize<O: Objective>(&self, obj: &mut O, x: &mut [f64]) -> OptimReport {
        let mut g = vec![0.0; x.len()];
        let mut trace = Vec::with_capacity(self.steps + 1);
        for _ in 0..self.steps {
            trace.push(obj.eval(x, &mut g));
            x.iter_mut()
                .zip(&g)
                .for_each(|(xi, gi)| *xi -= self.learning_rate * gi);
        }
        trace.push(obj.eval(x, &mut g));
        OptimReport {
            iterations: self.steps,
            evaluations: self.steps + 1,
            loss_trace: trace,
            converged: true,
        }
    }
}
