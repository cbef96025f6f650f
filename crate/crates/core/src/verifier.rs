//! Numerical evidence that the truncated minimum-energy controls solve the
//! approximate steering problem for the full system.
//!
//! A law synthesized at order `N` is applied to an order-`M` simulation
//! (`M >= N`). The residual on blocks `0..=N` must vanish; the residual on
//! blocks `N+1..=M` is measured; blocks beyond `M` are covered by an
//! analytic bound.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modal_model::ModalSystem;
use crate::propagator::{propagate, PropagationConfig};
use crate::state::StateVector;
use crate::synthesis::{synthesize, ControlLaw, SynthesisOptions, WeightMatrix};

/// Measured quantities for one design order.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringReport {
    pub order: usize,
    pub truncation: usize,
    /// `||P_N (x(tau) - x1)||`.
    pub projected_residual: f64,
    /// `||x(tau) - x1||` over blocks `0..=M`.
    pub full_residual: f64,
    /// Bound on the forced response of the stored blocks above `M`.
    pub tail_bound: f64,
    /// `||Q_N B||`.
    pub qnb_norm: f64,
    /// `||u||_{L2(0, tau)}`.
    pub u_l2: f64,
    pub product: f64,
    pub cost: f64,
    pub condition_estimate: f64,
    pub epsilon: f64,
    /// Whether the law was regularized.
    pub approximate: bool,
    /// `x(tau) - x1` over blocks `0..=M`.
    pub terminal_error: StateVector,
}

impl SteeringReport {
    pub fn dim(&self) -> usize {
        2 * (self.order + 1)
    }

    /// `full_residual + tail_bound < epsilon`.
    pub fn pass(&self) -> bool {
        self.full_residual + self.tail_bound < self.epsilon
    }
}

/// `sqrt(sum_{n > M} b_n^2 (omega_n / mu_n)^2) * ||u||_{L2} * sqrt(tau)`
/// over the stored modes, `mu_n = sqrt(omega_n^2 - kappa^2)`.
///
/// Modes that are not underdamped use the factor 1; every block semigroup is
/// a contraction because `A_n + A_n'` is negative semidefinite.
pub fn tail_bound(system: &ModalSystem, truncation: usize, u_l2: f64, tau: f64) -> f64 {
    let kappa = system.kappa();
    let sum: f64 = system
        .modes()
        .iter()
        .skip(truncation)
        .map(|m| {
            let disc = (m.omega - kappa) * (m.omega + kappa);
            let gain = if disc > 0.0 { m.omega / disc.sqrt() } else { 1.0 };
            (m.b * gain).powi(2)
        })
        .sum();
    sum.sqrt() * u_l2 * tau.sqrt()
}

fn check_endpoint(x: &StateVector, truncation: usize) -> Result<()> {
    match x.max_block() {
        Some(top) if top > truncation => Err(Error::TruncationTooSmall {
            needed: top,
            available: truncation,
        }),
        _ => Ok(()),
    }
}

/// Synthesizes at `order`, simulates `cfg.truncation` blocks, and measures.
#[allow(clippy::too_many_arguments)]
pub fn steer_and_verify(
    system: &ModalSystem,
    order: usize,
    tau: f64,
    weight: &WeightMatrix,
    x0: &StateVector,
    x1: &StateVector,
    cfg: &PropagationConfig,
    epsilon: f64,
    options: &SynthesisOptions,
) -> Result<SteeringReport> {
    if order > cfg.truncation {
        return Err(Error::InvalidParameter(format!(
            "design order {order} exceeds simulation truncation {}",
            cfg.truncation
        )));
    }
    if cfg.truncation > system.mode_count() {
        return Err(Error::ModeCountExceeded {
            requested: cfg.truncation,
            available: system.mode_count(),
        });
    }
    check_endpoint(x0, cfg.truncation)?;
    check_endpoint(x1, cfg.truncation)?;
    let law = synthesize(system, order, tau, weight, x0, x1, options)?;
    report_for_law(system, &law, x0, x1, cfg, epsilon)
}

/// Measurements for an existing law.
pub fn report_for_law(
    system: &ModalSystem,
    law: &ControlLaw,
    x0: &StateVector,
    x1: &StateVector,
    cfg: &PropagationConfig,
    epsilon: f64,
) -> Result<SteeringReport> {
    let order = law.order();
    let x_tau = propagate(system, x0, &law.as_fn(), law.tau, cfg)?;
    let terminal_error = x_tau.sub(x1);
    let u_l2 = law.l2_norm();
    let qnb_norm = system.tail_input_norm(order)?;
    Ok(SteeringReport {
        order,
        truncation: cfg.truncation,
        projected_residual: terminal_error.project(order).norm(),
        full_residual: terminal_error.norm(),
        tail_bound: tail_bound(system, cfg.truncation, u_l2, law.tau),
        qnb_norm,
        u_l2,
        product: qnb_norm * u_l2,
        cost: law.control_cost(),
        condition_estimate: law.gramian.condition_estimate,
        epsilon,
        approximate: law.approximate,
        terminal_error,
    })
}

/// Reports for a strictly increasing list of design orders sharing one
/// simulation setup.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<SteeringReport>,
    pub tau: f64,
    pub kappa: f64,
    pub truncation: usize,
}

pub const REPORT_HEADER: [&str; 11] = [
    "N",
    "d_N",
    "projected_residual",
    "full_residual",
    "tail_bound",
    "qnb_norm",
    "u_l2",
    "product",
    "cost_J",
    "cond_estimate",
    "pass",
];

/// 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl ConvergenceReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Serialization(e.to_string());
        w.write_record(REPORT_HEADER).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.order.to_string(),
                r.dim().to_string(),
                format_float(r.projected_residual),
                format_float(r.full_residual),
                format_float(r.tail_bound),
                format_float(r.qnb_norm),
                format_float(r.u_l2),
                format_float(r.product),
                format_float(r.cost),
                format_float(r.condition_estimate),
                r.pass().to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// One [`steer_and_verify`] per order; rows may run concurrently but come
/// back ordered by `N`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_sweep(
    system: &ModalSystem,
    orders: &[usize],
    tau: f64,
    weight: &WeightMatrix,
    x0: &StateVector,
    x1: &StateVector,
    cfg: &PropagationConfig,
    epsilon: f64,
    options: &SynthesisOptions,
) -> Result<ConvergenceReport> {
    if orders.is_empty() {
        return Err(Error::InvalidParameter("empty order range".into()));
    }
    if orders.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidParameter("orders must be strictly increasing".into()));
    }
    let rows = orders
        .par_iter()
        .map(|&n| steer_and_verify(system, n, tau, weight, x0, x1, cfg, epsilon, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport {
        rows,
        tau,
        kappa: system.kappa(),
        truncation: cfg.truncation,
    })
}
