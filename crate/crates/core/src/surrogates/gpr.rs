//! Gaussian process regression with a c·Matérn-3/2 + RBF + white-noise kernel,
//! one shared kernel for all outputs.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, Side};
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lbfgsb::{minimize, LbfgsOptions};
use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;
const LN_2PI: f64 = 1.837_877_066_409_345_5;
const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

/// Kernel hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub amplitude: f64,
    pub matern_length: f64,
    pub rbf_length: f64,
    pub noise: f64,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel {
            amplitude: 1.0,
            matern_length: 1.0,
            rbf_length: 1.0,
            noise: 1.0,
        }
    }
}

impl Kernel {
    fn to_log(self) -> [f64; 4] {
        [self.amplitude.ln(), self.matern_length.ln(), self.rbf_length.ln(), self.noise.ln()]
    }

    fn from_log(p: &[f64]) -> Kernel {
        Kernel {
            amplitude: p[0].exp(),
            matern_length: p[1].exp(),
            rbf_length: p[2].exp(),
            noise: p[3].exp(),
        }
    }

    /// Covariance between distinct inputs at distance `r` (no noise term).
    pub fn cov(&self, r: f64) -> f64 {
        let s = SQRT3 * r / self.matern_length;
        self.amplitude * (1.0 + s) * (-s).exp() + (-0.5 * (r / self.rbf_length).powi(2)).exp()
    }

    /// k(x, x') including the white-noise term when the inputs coincide.
    pub fn eval(&self, x: &[f64], xp: &[f64]) -> f64 {
        let noise = if x == xp { self.noise } else { 0.0 };
        self.cov(dist(x, xp)) + noise
    }
}

/// Clears the upper halves of the vector registers after the dense kernels run.
/// Some hosts otherwise penalise every later SSE instruction on the thread.
fn settle_vector_state() {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx") {
        // SAFETY: vzeroupper only zeroes bits 128.. of the vector registers,
        // which no live value depends on between these calls.
        unsafe { std::arch::asm!("vzeroupper", clobber_abi("C"), options(nomem, nostack, preserves_flags)) };
    }
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GprConfig {
    /// Starting point of the first optimisation (and the fixed kernel when not optimising).
    pub initial: Kernel,
    pub optimize: bool,
    /// Additional starts drawn log-uniformly inside the bounds.
    pub restarts: usize,
    pub bounds: (f64, f64),
    pub max_iter: usize,
}

impl Default for GprConfig {
    fn default() -> Self {
        GprConfig {
            initial: Kernel::default(),
            optimize: true,
            restarts: 10,
            bounds: (1e-5, 1e5),
            max_iter: 200,
        }
    }
}

impl GprConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bounds;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::validation("bounds", "need 0 < lower < upper"));
        }
        let k = self.initial;
        for v in [k.amplitude, k.matern_length, k.rbf_length, k.noise] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation("kernel", "hyperparameters must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// Pairwise distances of the training inputs plus targets, reused across evaluations.
pub(crate) struct Evidence {
    n: usize,
    dist: Vec<f64>,
    y: Mat<f64>,
}

pub(crate) struct Factor {
    llt: faer::linalg::solvers::Llt<f64>,
    jitter: f64,
}

impl Evidence {
    pub(crate) fn new(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Self {
        let n = x.nrows();
        let rows: Vec<Vec<f64>> = x.outer_iter().map(|r| r.to_vec()).collect();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let r = dist(&rows[i], &rows[j]);
                d[i * n + j] = r;
                d[j * n + i] = r;
            }
        }
        Evidence {
            n,
            dist: d,
            y: Mat::from_fn(n, y.ncols(), |i, j| y[[i, j]]),
        }
    }

    fn factor(&self, k: &Kernel) -> Result<Factor> {
        let n = self.n;
        settle_vector_state();
        let base = Mat::from_fn(n, n, |i, j| {
            if i == j {
                k.amplitude + 1.0 + k.noise
            } else {
                k.cov(self.dist[i * n + j])
            }
        });
        if let Ok(llt) = base.llt(Side::Lower) {
            return Ok(Factor { llt, jitter: 0.0 });
        }
        let mut jitter = JITTER_START;
        while jitter <= JITTER_MAX * (1.0 + 1e-9) {
            let mut kj = base.clone();
            for i in 0..n {
                kj[(i, i)] += jitter;
            }
            if let Ok(llt) = kj.llt(Side::Lower) {
                return Ok(Factor { llt, jitter });
            }
            jitter *= 10.0;
        }
        let diag_min = (0..n).map(|i| base[(i, i)]).fold(f64::INFINITY, f64::min);
        Err(Error::Numeric(format!(
            "kernel matrix ({n}×{n}, diagonal {diag_min:e}) not positive definite even with jitter {JITTER_MAX:e}; \
             kernel {k:?}"
        )))
    }

    /// Log marginal likelihood summed over outputs, and its gradient with
    /// respect to the log hyperparameters.
    pub(crate) fn lml_and_grad(&self, k: &Kernel) -> Result<(f64, [f64; 4])> {
        let n = self.n;
        let outputs = self.y.ncols() as f64;
        let f = self.factor(k)?;
        let mut alpha = self.y.clone();
        f.llt.solve_in_place(alpha.as_mut());
        settle_vector_state();
        let l = f.llt.L();
        let logdet: f64 = 2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>();
        let fit: f64 = (0..self.y.ncols())
            .map(|j| (0..n).map(|i| self.y[(i, j)] * alpha[(i, j)]).sum::<f64>())
            .sum();
        let lml = -0.5 * fit - 0.5 * outputs * logdet - 0.5 * n as f64 * outputs * LN_2PI;

        let kinv = f.llt.inverse();
        let aat = &alpha * alpha.transpose();
        settle_vector_state();
        let (mut g_amp, mut g_mat, mut g_rbf, mut trace) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                let w = aat[(i, j)] - outputs * kinv[(i, j)];
                if i == j {
                    g_amp += w * k.amplitude;
                    trace += w;
                    continue;
                }
                let r = self.dist[i * n + j];
                let s = SQRT3 * r / k.matern_length;
                let e = (-s).exp();
                let q = (r / k.rbf_length).powi(2);
                g_amp += w * k.amplitude * (1.0 + s) * e;
                g_mat += w * k.amplitude * s * s * e;
                g_rbf += w * q * (-0.5 * q).exp();
            }
        }
        Ok((lml, [0.5 * g_amp, 0.5 * g_mat, 0.5 * g_rbf, 0.5 * trace * k.noise]))
    }
}

/// Log marginal likelihood of `y` (summed over columns) under `kernel`, with
/// its gradient in (ln c, ln ℓ_M, ln ℓ_R, ln σ²).
pub fn log_marginal_likelihood(x: ArrayView2<f64>, y: ArrayView2<f64>, kernel: &Kernel) -> Result<(f64, [f64; 4])> {
    if x.nrows() == 0 || x.nrows() != y.nrows() {
        return Err(Error::validation("training data", format!("{} input rows, {} target rows", x.nrows(), y.nrows())));
    }
    Evidence::new(x, y).lml_and_grad(kernel)
}

/// Fitted process: kernel, training inputs and dual coefficients K⁻¹Y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianProcess {
    pub kernel: Kernel,
    pub log_marginal_likelihood: f64,
    pub jitter: f64,
    pub x_train: Array2<f64>,
    pub alpha: Array2<f64>,
}

impl GaussianProcess {
    pub fn fit(x: ArrayView2<f64>, y: ArrayView2<f64>, cfg: &GprConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if x.nrows() == 0 || x.nrows() != y.nrows() {
            return Err(Error::validation("training data", format!("{} input rows, {} target rows", x.nrows(), y.nrows())));
        }
        faer::set_global_parallelism(faer::Par::Seq);
        let ev = Evidence::new(x, y);

        let kernel = if cfg.optimize {
            let (lo, hi) = (cfg.bounds.0.ln(), cfg.bounds.1.ln());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut starts = vec![cfg.initial.to_log()];
            for _ in 0..cfg.restarts {
                starts.push(std::array::from_fn(|_| rng.random_range(lo..hi)));
            }
            let opts = LbfgsOptions {
                max_iter: cfg.max_iter,
                ..Default::default()
            };
            let best = starts
                .par_iter()
                .map(|x0| {
                    let objective = |p: &[f64]| match ev.lml_and_grad(&Kernel::from_log(p)) {
                        Ok((v, g)) => (-v, g.iter().map(|x| -x).collect()),
                        Err(_) => (f64::INFINITY, vec![0.0; 4]),
                    };
                    minimize(objective, x0, &[lo; 4], &[hi; 4], &opts)
                })
                .collect::<Vec<_>>()
                .into_iter()
                .filter(|m| m.f.is_finite())
                .reduce(|a, b| if b.f < a.f { b } else { a })
                .ok_or_else(|| Error::Numeric("no hyperparameter start produced a finite likelihood".into()))?;
            Kernel::from_log(&best.x)
        } else {
            cfg.initial
        };

        let f = ev.factor(&kernel)?;
        let mut alpha = ev.y.clone();
        f.llt.solve_in_place(alpha.as_mut());
        settle_vector_state();
        let (lml, _) = ev.lml_and_grad(&kernel)?;
        Ok(GaussianProcess {
            kernel,
            log_marginal_likelihood: lml,
            jitter: f.jitter,
            x_train: x.to_owned(),
            alpha: Array2::from_shape_fn((alpha.nrows(), alpha.ncols()), |(i, j)| alpha[(i, j)]),
        })
    }

    /// Posterior mean.
    pub fn predict(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let train: Vec<Vec<f64>> = self.x_train.outer_iter().map(|r| r.to_vec()).collect();
        let kstar = Array2::from_shape_fn((x.nrows(), train.len()), |(i, j)| {
            let xi = x.row(i);
            let r = xi.iter().zip(&train[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            self.kernel.cov(r)
        });
        kstar.dot(&self.alpha)
    }
}
