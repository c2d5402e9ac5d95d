//! Receive-power maximization over SIM phases by normalized steepest ascent.
//!
//! The objective is `O = Σ_p ‖h̃_p Υ_R R_RX^{1/2} B_p R_TX^{1/2} Υ_T‖_F²`
//! with `h̃_p = h_p √(M M̃ / P)` and `B_p = b_R b_Tᴴ`. Gradients are closed
//! form: with `O_p = W Ψ_q S` for the layer-`q` phases `ψ = e^{jζ}`,
//!
//! `∂O/∂ζ_m = 2 Im{ e^{-jζ_m} Σ_c conj(S[m, c]) (Wᴴ O_p)[m, c] }`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::channel::DdPath;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::metasurface::{scale_cols, scale_rows, sim_transfer, Side, SimStack};

/// Fixed channel data plus the TX and RX stacks being optimized.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    tx: SimStack,
    rx: SimStack,
    /// `h̃_p R_RX^{1/2} b_R b_Tᴴ R_TX^{1/2}`, `M̃ × M`
    cores: Vec<CMatrix>,
}

/// Objective and per-layer gradients at one phase configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub objective: f64,
    pub tx: Vec<Vec<f64>>,
    pub rx: Vec<Vec<f64>>,
}

impl ObjectiveContext {
    /// Direct paths only; beamformers are identities.
    pub fn new(tx: SimStack, rx: SimStack, paths: &[DdPath]) -> Result<Self> {
        if tx.side() != Side::Tx || rx.side() != Side::Rx {
            return Err(Error::Config("objective needs a TX stack and an RX stack".into()));
        }
        let (m, mr) = (tx.num_atoms() as f64, rx.num_atoms() as f64);
        let p = paths.len().max(1) as f64;
        let cores = paths
            .iter()
            .map(|path| {
                let a = &path.angles;
                let b_r = rx.steering(a.azimuth_in, a.elevation_in);
                let b_t = tx.steering(a.azimuth_out, a.elevation_out);
                let h = path.gain * (m * mr / p).sqrt();
                let left = rx.correlation_root() * b_r * h;
                let right = b_t.adjoint() * tx.correlation_root();
                left * right
            })
            .collect();
        Ok(Self { tx, rx, cores })
    }

    pub fn tx(&self) -> &SimStack {
        &self.tx
    }

    pub fn rx(&self) -> &SimStack {
        &self.rx
    }

    pub fn into_stacks(self) -> (SimStack, SimStack) {
        (self.tx, self.rx)
    }

    pub fn num_paths(&self) -> usize {
        self.cores.len()
    }

    pub fn set_phases(&mut self, tx: &[Vec<f64>], rx: &[Vec<f64>]) -> Result<()> {
        self.tx.set_all_phases(tx)?;
        self.rx.set_all_phases(rx)
    }

    /// Per-path end-to-end matrices `O_p` (`N_R × N_T`).
    pub fn path_outputs(&self) -> Vec<CMatrix> {
        let (ut, ur) = (sim_transfer(&self.tx), sim_transfer(&self.rx));
        self.cores.iter().map(|c| &ur * c * &ut).collect()
    }

    pub fn objective(&self) -> f64 {
        self.path_outputs().iter().map(|o| o.norm_squared()).sum()
    }

    /// Objective plus all TX and RX layer gradients, sharing the chain
    /// products between layers.
    pub fn gradients(&self) -> Gradients {
        let (tx, rx) = (&self.tx, &self.rx);
        let (ut, ur) = (sim_transfer(tx), sim_transfer(rx));
        let outputs: Vec<CMatrix> = self.cores.iter().map(|c| &ur * c * &ut).collect();
        let objective = outputs.iter().map(|o| o.norm_squared()).sum();

        // TX: S_0 = Γ_0, S_{q+1} = Γ_{q+1} Ψ_q S_q
        let qt = tx.num_layers();
        let mut s = Vec::with_capacity(qt);
        s.push(tx.diffraction(0).clone());
        for q in 1..qt {
            let mut x = s[q - 1].clone();
            scale_rows(&mut x, &tx.layer_phasors(q - 1));
            s.push(tx.diffraction(q) * x);
        }
        let mut grad_tx = vec![vec![0.0; tx.num_atoms()]; qt];
        for (core, o) in self.cores.iter().zip(&outputs) {
            // back_{Q-1} = Υ_R core, back_{q-1} = back_q Ψ_q Γ_q
            let mut back = &ur * core;
            for q in (0..qt).rev() {
                accumulate(&mut grad_tx[q], &tx.layer_phasors(q), &back, &s[q], o);
                if q > 0 {
                    scale_cols(&mut back, &tx.layer_phasors(q));
                    back *= tx.diffraction(q);
                }
            }
        }

        // RX: P_0 = Ξ_0, P_{q+1} = P_q Δ_q Ξ_{q+1}
        let qr = rx.num_layers();
        let mut prefix = Vec::with_capacity(qr);
        prefix.push(rx.diffraction(0).clone());
        for q in 1..qr {
            let mut x = prefix[q - 1].clone();
            scale_cols(&mut x, &rx.layer_phasors(q - 1));
            prefix.push(x * rx.diffraction(q));
        }
        let mut grad_rx = vec![vec![0.0; rx.num_atoms()]; qr];
        for (core, o) in self.cores.iter().zip(&outputs) {
            // S̃_{Q̃-1} = core Υ_T, S̃_{q-1} = Ξ_q Δ_q S̃_q
            let mut suffix = core * &ut;
            for q in (0..qr).rev() {
                accumulate(&mut grad_rx[q], &rx.layer_phasors(q), &prefix[q], &suffix, o);
                if q > 0 {
                    scale_rows(&mut suffix, &rx.layer_phasors(q));
                    suffix = rx.diffraction(q) * suffix;
                }
            }
        }

        Gradients {
            objective,
            tx: grad_tx,
            rx: grad_rx,
        }
    }

    pub fn grad_tx(&self, layer: usize) -> Result<Vec<f64>> {
        if layer >= self.tx.num_layers() {
            return Err(Error::Config(format!("TX layer {layer} out of range")));
        }
        Ok(self.gradients().tx.swap_remove(layer))
    }

    pub fn grad_rx(&self, layer: usize) -> Result<Vec<f64>> {
        if layer >= self.rx.num_layers() {
            return Err(Error::Config(format!("RX layer {layer} out of range")));
        }
        Ok(self.gradients().rx.swap_remove(layer))
    }
}

/// `grad[m] += 2 Im{ conj(ψ_m) Σ_c conj(S[m,c]) (Wᴴ O)[m,c] }`
fn accumulate(grad: &mut [f64], phasors: &[C64], w: &CMatrix, s: &CMatrix, o: &CMatrix) {
    let wo = w.adjoint() * o;
    for (m, (g, psi)) in grad.iter_mut().zip(phasors).enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..s.ncols() {
            acc += s[(m, c)].conj() * wo[(m, c)];
        }
        *g += 2.0 * (psi.conj() * acc).im;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AscentConfig {
    /// `i_GD`
    pub max_iters: usize,
    /// `λ^{(0)}`
    pub initial_rate: f64,
    /// Per-iteration decay `κ` of the learning rate.
    pub decay: f64,
    /// Relative objective gain below which an iteration counts as stalled.
    pub tol: f64,
    /// Consecutive stalled iterations before stopping.
    pub patience: usize,
    /// Step halvings tried when a full step would lower the objective.
    pub max_backtracks: usize,
    /// Halve steps that would lower the objective. When off, every full
    /// step is taken and the trace may decrease.
    pub backtrack: bool,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            initial_rate: 0.9,
            decay: 0.98,
            tol: 1e-8,
            patience: 5,
            max_backtracks: 30,
            backtrack: true,
        }
    }
}

impl AscentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.initial_rate) {
            return Err(Error::Config(format!("initial learning rate must lie in [0, 1), got {}", self.initial_rate)));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::Config(format!("learning-rate decay must lie in (0, 1], got {}", self.decay)));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Config(format!("tolerance must be non-negative, got {}", self.tol)));
        }
        Ok(())
    }

    pub fn rate(&self, iteration: usize) -> f64 {
        self.initial_rate * self.decay.powi(iteration as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    /// Euclidean norm of the applied phase update.
    pub step_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult {
    /// Row 0 is the starting point.
    pub trace: Vec<TraceRow>,
    pub converged: bool,
}

impl AscentResult {
    pub fn initial(&self) -> f64 {
        self.trace[0].objective
    }

    pub fn final_objective(&self) -> f64 {
        self.trace.last().expect("trace has a starting row").objective
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", crate::harness::SCHEMA_LINE)?;
        writeln!(w, "iteration,objective,step_norm")?;
        for r in &self.trace {
            writeln!(w, "{},{:.12e},{:.6e}", r.iteration, r.objective, r.step_norm)?;
        }
        Ok(())
    }
}

fn wrap(phase: f64) -> f64 {
    let w = phase.rem_euclid(2.0 * PI);
    // rem_euclid can round up to exactly 2π
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

fn max_abs(layers: &[Vec<f64>]) -> f64 {
    layers.iter().flatten().fold(0.0, |a, &g| a.max(g.abs()))
}

fn stepped(phases: &[Vec<f64>], grad: &[Vec<f64>], scale: f64) -> Vec<Vec<f64>> {
    phases
        .iter()
        .zip(grad)
        .map(|(p, g)| p.iter().zip(g).map(|(z, d)| wrap(z + scale * d)).collect())
        .collect()
}

/// Runs normalized steepest ascent on the phases of `ctx` in place.
///
/// Each iteration moves every phase by `λ_i ρ ∇` with `ρ = π / max|∇|`
/// taken per side, so the largest single-phase move is `λ_i π`. A step that
/// would lower the objective is halved until it does not (at most
/// `max_backtracks` times), so the trace is non-decreasing.
pub fn ascend(ctx: &mut ObjectiveContext, cfg: &AscentConfig) -> Result<AscentResult> {
    cfg.validate()?;
    let mut current = ctx.objective();
    if !current.is_finite() {
        return Err(Error::Numerical(format!("objective is {current} at the starting point")));
    }
    let mut trace = vec![TraceRow {
        iteration: 0,
        objective: current,
        step_norm: 0.0,
    }];
    let mut stalled = 0;
    let mut converged = false;

    for i in 0..cfg.max_iters {
        let lambda = cfg.rate(i);
        if lambda == 0.0 {
            break;
        }
        let g = ctx.gradients();
        if g.tx.iter().chain(&g.rx).flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite gradient at iteration {i}")));
        }
        let (gt, gr) = (max_abs(&g.tx), max_abs(&g.rx));
        let rho_t = if gt > 0.0 { PI / gt } else { 0.0 };
        let rho_r = if gr > 0.0 { PI / gr } else { 0.0 };

        let old_tx = ctx.tx.all_phases().to_vec();
        let old_rx = ctx.rx.all_phases().to_vec();
        let mut step = lambda;
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let new_tx = stepped(&old_tx, &g.tx, step * rho_t);
            let new_rx = stepped(&old_rx, &g.rx, step * rho_r);
            ctx.set_phases(&new_tx, &new_rx)?;
            let value = ctx.objective();
            if !value.is_finite() {
                return Err(Error::Numerical(format!("objective became {value} at iteration {i}")));
            }
            if value >= current || !cfg.backtrack {
                accepted = Some(value);
                break;
            }
            step *= 0.5;
        }

        let (value, step_norm) = match accepted {
            Some(v) => {
                let norm = (g.tx.iter().flatten().map(|d| (step * rho_t * d).powi(2)).sum::<f64>()
                    + g.rx.iter().flatten().map(|d| (step * rho_r * d).powi(2)).sum::<f64>())
                .sqrt();
                (v, norm)
            }
            None => {
                ctx.set_phases(&old_tx, &old_rx)?;
                (current, 0.0)
            }
        };
        let gain = (value - current) / current.abs().max(f64::MIN_POSITIVE);
        current = value;
        trace.push(TraceRow {
            iteration: i + 1,
            objective: value,
            step_norm,
        });
        log::debug!("ascent iteration {}: objective {value:.6e}, step {step_norm:.3e}", i + 1);

        if gain.abs() < cfg.tol {
            stalled += 1;
            if stalled >= cfg.patience {
                converged = true;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    Ok(AscentResult { trace, converged })
}
