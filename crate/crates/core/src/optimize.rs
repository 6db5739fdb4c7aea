//! Derivative-free local search and deterministic random substreams.

use std::cell::Cell;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Restart and convergence settings shared by all settings searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    /// Objective evaluations allowed per restart.
    pub max_iterations: usize,
    /// Convergence threshold on the spread of objective values in the simplex.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { restarts: 8, max_iterations: 20_000, tolerance: 1e-11, seed: 0x5eed }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be at least 1".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_restarts(self, restarts: usize) -> Self {
        Self { restarts, ..self }
    }
}

/// Independent ChaCha stream `stream` under `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs two indices into one stream id.
pub fn stream_id(outer: u64, inner: u64) -> u64 {
    (outer << 32) ^ (inner & 0xffff_ffff)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Nelder-Mead with dimension-adaptive coefficients (Gao & Han, 2012).
///
/// After the simplex collapses it is rebuilt around the incumbent and the
/// search continues until a rebuild no longer improves the value by more than
/// the tolerance.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_evals: usize,
    pub tolerance: f64,
}

impl NelderMead {
    pub fn new(max_evals: usize, tolerance: f64) -> Self {
        Self { max_evals, tolerance }
    }

    pub fn maximize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64], step: f64) -> Minimum {
        let mut m = self.minimize(|x| -f(x), x0, step);
        m.value = -m.value;
        m
    }

    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64], step: f64) -> Minimum {
        let evals = Cell::new(0usize);
        let mut eval = |x: &[f64]| {
            evals.set(evals.get() + 1);
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let mut best_x = x0.to_vec();
        let mut best_v = eval(&best_x);
        if x0.is_empty() {
            return Minimum { x: best_x, value: best_v, evaluations: evals.get() };
        }
        let mut step = step;
        for _ in 0..8 {
            if evals.get() >= self.max_evals {
                break;
            }
            let before = best_v;
            let (x, v) = self.run(&mut eval, &best_x, best_v, step, &|| evals.get());
            if v <= best_v {
                best_x = x;
                best_v = v;
            }
            if before - best_v <= self.tolerance {
                break;
            }
            step *= 0.5;
        }
        Minimum { x: best_x, value: best_v, evaluations: evals.get() }
    }

    fn run(
        &self,
        f: &mut dyn FnMut(&[f64]) -> f64,
        x0: &[f64],
        f0: f64,
        step: f64,
        used: &dyn Fn() -> usize,
    ) -> (Vec<f64>, f64) {
        let n = x0.len();
        let nf = n as f64;
        let (alpha, gamma, rho, sigma) = if n >= 2 {
            (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
        } else {
            (1.0, 2.0, 0.5, 0.5)
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), f0));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += step;
            let v = f(&x);
            simplex.push((x, v));
        }

        let mut centroid = vec![0.0; n];
        let mut trial = vec![0.0; n];
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[n].1 - simplex[0].1;
            if used() >= self.max_evals || spread.abs() <= self.tolerance {
                break;
            }

            centroid.iter_mut().for_each(|c| *c = 0.0);
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / nf;
                }
            }
            let worst = simplex[n].0.clone();
            let toward = |coef: f64, out: &mut Vec<f64>| {
                for k in 0..n {
                    out[k] = centroid[k] + coef * (worst[k] - centroid[k]);
                }
            };

            toward(-alpha, &mut trial);
            let fr = f(&trial);
            if fr < simplex[0].1 {
                let mut expanded = vec![0.0; n];
                toward(-alpha * gamma, &mut expanded);
                let fe = f(&expanded);
                simplex[n] = if fe < fr { (expanded, fe) } else { (trial.clone(), fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (trial.clone(), fr);
                continue;
            }
            let (coef, reference) = if fr < simplex[n].1 { (-alpha * rho, fr) } else { (rho, simplex[n].1) };
            toward(coef, &mut trial);
            let fc = f(&trial);
            if fc <= reference {
                simplex[n] = (trial.clone(), fc);
                continue;
            }
            let best = simplex[0].0.clone();
            for (x, v) in simplex.iter_mut().skip(1) {
                for k in 0..n {
                    x[k] = best[k] + sigma * (x[k] - best[k]);
                }
                *v = f(x);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        simplex.swap_remove(0)
    }
}
