//! Symbol detectors for `y = H x + w` with QPSK `x`.
//!
//! [`gabp_detect`] is Gaussian belief propagation with soft interference
//! cancellation and a QPSK tanh denoiser, on a Jacobi schedule: every message
//! of an iteration is computed from the previous iterate. Leave-one-out sums
//! are formed as a full sum minus one term so an iteration costs `O(N̄ M̄)`.

use std::io::Write;

use nalgebra::linalg::Cholesky;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};

/// Floor on extrinsic precisions.
const MIN_PRECISION: f64 = 1e-12;

/// ZF refuses channels whose condition number exceeds this.
pub const ZF_MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GabpConfig {
    pub max_iters: usize,
    /// Weight `β_x` of the new estimate in the damped update.
    pub damping: f64,
    pub symbol_energy: f64,
    pub noise_var: f64,
}

impl GabpConfig {
    pub fn new(noise_var: f64) -> Self {
        Self {
            max_iters: 20,
            damping: 0.5,
            symbol_energy: 1.0,
            noise_var,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("GaBP needs at least one iteration".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.symbol_energy > 0.0 && self.symbol_energy.is_finite()) {
            return Err(Error::Config(format!("symbol energy must be positive, got {}", self.symbol_energy)));
        }
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return Err(Error::Config(format!("GaBP needs a positive noise variance, got {}", self.noise_var)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GabpTraceRow {
    pub iteration: usize,
    /// Mean of `|y_n - Σ_m h_{n,m} x̂_{n,m}|²` before the update.
    pub mean_residual: f64,
    /// Mean of `σ̂²` after the update.
    pub mean_variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GabpOutput {
    /// Consensus estimates, one per column of `H`.
    pub estimate: CVector,
    pub trace: Vec<GabpTraceRow>,
    /// Per-edge message updates executed, summed over iterations.
    pub operations: u64,
    pub iterations: usize,
}

impl GabpOutput {
    pub fn operations_per_iteration(&self) -> f64 {
        self.operations as f64 / self.iterations as f64
    }

    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", crate::harness::SCHEMA_LINE)?;
        writeln!(w, "iteration,mean_residual,mean_variance")?;
        for r in &self.trace {
            writeln!(w, "{},{:.12e},{:.12e}", r.iteration, r.mean_residual, r.mean_variance)?;
        }
        Ok(())
    }
}

/// GaBP detection with dense `N̄ × M̄` message arrays.
pub fn gabp_detect(h: &CMatrix, y: &CVector, cfg: &GabpConfig) -> Result<GabpOutput> {
    cfg.validate()?;
    let (nr, nc) = h.shape();
    if y.len() != nr {
        return Err(Error::dim("gabp_detect", nr, y.len()));
    }
    let es = cfg.symbol_energy;
    let cx = (es / 2.0).sqrt();
    let beta = cfg.damping;
    let nv = cfg.noise_var;

    // column-major like H: entry (n, m) at n + nr * m
    let idx = |n: usize, m: usize| n + nr * m;
    let habs: Vec<f64> = h.iter().map(|z| z.norm_sqr()).collect();
    let mut xhat = vec![C64::new(0.0, 0.0); nr * nc];
    let mut var = vec![es; nr * nc];
    let mut ytil = vec![C64::new(0.0, 0.0); nr * nc];
    let mut vtil = vec![0.0; nr * nc];
    let mut row_sum = vec![C64::new(0.0, 0.0); nr];
    let mut row_var = vec![0.0; nr];
    let mut trace = Vec::with_capacity(cfg.max_iters);
    let mut ops = 0u64;

    for it in 0..cfg.max_iters {
        // soft interference cancellation
        row_sum.fill(C64::new(0.0, 0.0));
        row_var.fill(0.0);
        for m in 0..nc {
            for n in 0..nr {
                let k = idx(n, m);
                row_sum[n] += h[k] * xhat[k];
                row_var[n] += habs[k] * var[k];
            }
            ops += nr as u64;
        }
        let mean_residual = (0..nr).map(|n| (y[n] - row_sum[n]).norm_sqr()).sum::<f64>() / nr as f64;
        for m in 0..nc {
            for n in 0..nr {
                let k = idx(n, m);
                ytil[k] = y[n] - row_sum[n] + h[k] * xhat[k];
                vtil[k] = (row_var[n] - habs[k] * var[k]).max(0.0) + nv;
            }
            ops += nr as u64;
        }

        // extrinsic beliefs, denoising and damping
        let mut var_total = 0.0;
        for m in 0..nc {
            let mut num = C64::new(0.0, 0.0);
            for n in 0..nr {
                let k = idx(n, m);
                num += h[k].conj() * ytil[k] / vtil[k];
            }
            ops += nr as u64;
            for n in 0..nr {
                let k = idx(n, m);
                // x̄ / σ̄², the only form the denoiser needs; it stays finite
                // even when the extrinsic precision is clamped
                let ratio = num - h[k].conj() * ytil[k] / vtil[k];
                let new = C64::new(cx * (2.0 * cx * ratio.re).tanh(), cx * (2.0 * cx * ratio.im).tanh());
                let damped = beta * new + (1.0 - beta) * xhat[k];
                let v = (es - damped.norm_sqr()).max(0.0);
                xhat[k] = damped;
                var[k] = beta * v + (1.0 - beta) * var[k];
                var_total += var[k];
            }
            ops += nr as u64;
        }

        if xhat.iter().any(|z| !z.is_finite()) || var.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("GaBP beliefs became non-finite at iteration {}", it + 1)));
        }
        trace.push(GabpTraceRow {
            iteration: it + 1,
            mean_residual,
            mean_variance: var_total / (nr * nc) as f64,
        });
    }

    // consensus over every observation, from the last sIC signals
    let estimate = CVector::from_fn(nc, |m, _| {
        let mut prec = 0.0;
        let mut num = C64::new(0.0, 0.0);
        for n in 0..nr {
            let k = idx(n, m);
            prec += habs[k] / vtil[k];
            num += h[k].conj() * ytil[k] / vtil[k];
        }
        num / prec.max(MIN_PRECISION)
    });
    if estimate.iter().any(|z| !z.is_finite()) {
        return Err(Error::Numerical("GaBP consensus is non-finite".into()));
    }
    Ok(GabpOutput {
        estimate,
        trace,
        operations: ops,
        iterations: cfg.max_iters,
    })
}

/// `(Hᴴ H + σ² I)⁻¹ Hᴴ y`, or with `σ²/E_S` as the regularizer when
/// `scaled` is set.
pub fn lmmse_detect(h: &CMatrix, y: &CVector, noise_var: f64, symbol_energy: f64, scaled: bool) -> Result<CVector> {
    if y.len() != h.nrows() {
        return Err(Error::dim("lmmse_detect", h.nrows(), y.len()));
    }
    if !(noise_var > 0.0) || !(symbol_energy > 0.0) {
        return Err(Error::Config(format!(
            "LMMSE needs positive noise variance and symbol energy, got {noise_var} and {symbol_energy}"
        )));
    }
    let reg = if scaled { noise_var / symbol_energy } else { noise_var };
    let hh = h.adjoint();
    let mut gram = &hh * h;
    for i in 0..gram.nrows() {
        gram[(i, i)] += reg;
    }
    let rhs = hh * y;
    let chol = Cholesky::new(gram).ok_or_else(|| Error::Numerical("LMMSE Gram matrix is not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

/// `(Hᴴ H)⁻¹ Hᴴ y` through the SVD of `H`.
pub fn zf_detect(h: &CMatrix, y: &CVector) -> Result<CVector> {
    if y.len() != h.nrows() {
        return Err(Error::dim("zf_detect", h.nrows(), y.len()));
    }
    if h.nrows() < h.ncols() {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    let svd = h.clone().svd(true, true);
    let sv = &svd.singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= ZF_MAX_CONDITION) {
        return Err(Error::Singular { condition });
    }
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested Vᴴ");
    let mut c = u.adjoint() * y;
    for (ci, s) in c.iter_mut().zip(sv.iter()) {
        *ci /= *s;
    }
    Ok(vt.adjoint() * c)
}
