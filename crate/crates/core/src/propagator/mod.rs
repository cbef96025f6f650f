//! Free and forced evolution of the truncated modal system.
//!
//! The generator is block diagonal, so every block is advanced on its own
//! with its exact exponential. The forced term of the mild solution,
//! `int_0^t exp((t - s) A) B u(s) ds`, is evaluated with composite
//! Gauss-Legendre panels; the control is sampled once at all nodes and shared
//! across blocks.

mod block;

pub use block::{block_expm, BlockKind, BlockMatrix2};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modal_model::ModalSystem;
use crate::quadrature::{panels_for_rate, CompositeRule, DEFAULT_NODES};
use crate::state::StateVector;

/// Discretization of the forced term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    /// Flexible blocks simulated (blocks `0..=truncation`).
    pub truncation: usize,
    /// Gauss-Legendre panels over the horizon.
    pub steps: usize,
    /// Nodes per panel.
    pub nodes: usize,
}

impl PropagationConfig {
    pub fn new(truncation: usize, steps: usize, nodes: usize) -> Result<Self> {
        let cfg = Self {
            truncation,
            steps,
            nodes,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Enough panels to resolve the fastest simulated block combined with a
    /// control whose own rate is `control_rate`.
    pub fn resolved(system: &ModalSystem, truncation: usize, control_rate: f64, tau: f64) -> Self {
        let block_rate = (0..=truncation.min(system.mode_count()))
            .map(|k| system.block_kind(k).rate())
            .fold(0.0, f64::max);
        Self {
            truncation,
            steps: panels_for_rate(block_rate + control_rate, tau),
            nodes: DEFAULT_NODES,
        }
    }

    /// Same truncation and nodes, `factor` times as many panels.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            steps: self.steps * factor,
            ..*self
        }
    }

    fn validate(&self) -> Result<()> {
        if self.truncation < 1 {
            return Err(Error::InvalidParameter("truncation must be at least 1".into()));
        }
        if self.steps < 1 {
            return Err(Error::InvalidParameter("steps must be at least 1".into()));
        }
        if self.nodes < 2 {
            return Err(Error::InvalidParameter("need at least 2 nodes per panel".into()));
        }
        Ok(())
    }
}

impl ModalSystem {
    /// Block `k` of the generator; block 0 is rigid.
    pub fn block_kind(&self, k: usize) -> BlockKind {
        if k == 0 {
            BlockKind::Rigid
        } else {
            BlockKind::Mode {
                omega: self.modes()[k - 1].omega,
                kappa: self.kappa(),
            }
        }
    }

    /// Component of `B` on the velocity coordinate of block `k`.
    pub fn block_input(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.modes()[k - 1].b
        }
    }
}

fn check_support(system: &ModalSystem, truncation: usize, x: &StateVector) -> Result<()> {
    if truncation > system.mode_count() {
        return Err(Error::ModeCountExceeded {
            requested: truncation,
            available: system.mode_count(),
        });
    }
    if let Some(top) = x.max_block() {
        if top > truncation {
            return Err(Error::TruncationTooSmall {
                needed: top,
                available: truncation,
            });
        }
    }
    if x.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite("state vector entry".into()));
    }
    Ok(())
}

/// `exp(tA) x` over blocks `0..=truncation`.
pub fn transition(
    system: &ModalSystem,
    t: f64,
    truncation: usize,
    x: &StateVector,
) -> Result<StateVector> {
    if !t.is_finite() {
        return Err(Error::NonFinite(format!("transition time {t}")));
    }
    check_support(system, truncation, x)?;
    let mut out = StateVector::zeros();
    let top = x.max_block().unwrap_or(0);
    for k in 0..=top {
        let v = x.block(k);
        if v == [0.0, 0.0] {
            continue;
        }
        let y = system.block_kind(k).expm_unchecked(t).apply(v);
        out.set(2 * k, y[0]);
        out.set(2 * k + 1, y[1]);
    }
    Ok(out)
}

/// Forced response of block `k` over `[t0, t1]` from control samples taken
/// at `points` (which must cover `[t0, t1]`).
fn forced_block(
    kind: BlockKind,
    input: f64,
    t1: f64,
    points: &[(f64, f64)],
    samples: &[f64],
) -> [f64; 2] {
    let mut acc = [0.0, 0.0];
    for (&(s, w), &u) in points.iter().zip(samples) {
        let e = kind.expm_unchecked(t1 - s).0;
        let g = w * input * u;
        acc[0] += e[0][1] * g;
        acc[1] += e[1][1] * g;
    }
    acc
}

fn sample_control<U>(u: &U, points: &[(f64, f64)]) -> Result<Vec<f64>>
where
    U: Fn(f64) -> f64 + Sync + ?Sized,
{
    let samples: Vec<f64> = points.par_iter().map(|&(s, _)| u(s)).collect();
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("control value at t = {}", points[i].0)));
    }
    Ok(samples)
}

/// One interval `[t0, t1]` of the mild solution over blocks
/// `0..=truncation`.
fn advance<U>(
    system: &ModalSystem,
    x: &StateVector,
    u: &U,
    t0: f64,
    t1: f64,
    truncation: usize,
    rule: &CompositeRule,
) -> Result<StateVector>
where
    U: Fn(f64) -> f64 + Sync + ?Sized,
{
    let points = rule.points(t0, t1);
    let samples = sample_control(u, &points)?;
    let dt = t1 - t0;
    let blocks: Vec<[f64; 2]> = (0..=truncation)
        .into_par_iter()
        .map(|k| {
            let kind = system.block_kind(k);
            let free = kind.expm_unchecked(dt).apply(x.block(k));
            let forced = forced_block(kind, system.block_input(k), t1, &points, &samples);
            [free[0] + forced[0], free[1] + forced[1]]
        })
        .collect();
    let mut out = StateVector::zeros();
    for (k, v) in blocks.into_iter().enumerate() {
        out.set(2 * k, v[0]);
        out.set(2 * k + 1, v[1]);
    }
    Ok(out)
}

/// `x(tau) = exp(tau A) x0 + int_0^tau exp((tau - s) A) B u(s) ds` over
/// blocks `0..=cfg.truncation`.
pub fn propagate<U>(
    system: &ModalSystem,
    x0: &StateVector,
    u: &U,
    tau: f64,
    cfg: &PropagationConfig,
) -> Result<StateVector>
where
    U: Fn(f64) -> f64 + Sync + ?Sized,
{
    cfg.validate()?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {tau}")));
    }
    check_support(system, cfg.truncation, x0)?;
    let rule = CompositeRule::new(cfg.steps, cfg.nodes)?;
    advance(system, x0, u, 0.0, tau, cfg.truncation, &rule)
}

/// The state at `samples + 1` equally spaced times on `[0, tau]`, advanced
/// interval by interval with about `cfg.steps / samples` panels each.
pub fn trajectory<U>(
    system: &ModalSystem,
    x0: &StateVector,
    u: &U,
    tau: f64,
    cfg: &PropagationConfig,
    samples: usize,
) -> Result<Vec<(f64, StateVector)>>
where
    U: Fn(f64) -> f64 + Sync + ?Sized,
{
    cfg.validate()?;
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample interval".into()));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {tau}")));
    }
    check_support(system, cfg.truncation, x0)?;
    let rule = CompositeRule::new(cfg.steps.div_ceil(samples), cfg.nodes)?;
    let mut out = Vec::with_capacity(samples + 1);
    let mut x = x0.clone();
    out.push((0.0, x.clone()));
    for j in 0..samples {
        let t0 = tau * j as f64 / samples as f64;
        let t1 = if j + 1 == samples {
            tau
        } else {
            tau * (j + 1) as f64 / samples as f64
        };
        x = advance(system, &x, u, t0, t1, cfg.truncation, &rule)?;
        out.push((t1, x.clone()));
    }
    Ok(out)
}
