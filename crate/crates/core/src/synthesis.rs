//! Minimum-energy steering of the truncated system.
//!
//! For the reduced pair `(A_N, B_N)` on blocks `0..=N` the control
//!
//! ```text
//! u(t) = Q^{-1} B_N' exp((tau - t) A_N') nu,
//! W nu = x1_N - exp(tau A_N) x0_N,
//! W    = int_0^tau exp(s A_N) B_N Q^{-1} B_N' exp(s A_N') ds
//! ```
//!
//! steers `x0_N` to `x1_N` in time `tau` with the least `int u' Q u dt`,
//! which equals `nu' W nu`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modal_model::ModalSystem;
use crate::propagator::BlockKind;
use crate::quadrature::{panels_for_rate, CompositeRule, DEFAULT_NODES};
use crate::state::StateVector;

/// Blocks `0..=order` of the generator and the matching rows of the input
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    order: usize,
    blocks: Vec<BlockKind>,
    input: DMatrix<f64>,
}

impl ReducedSystem {
    /// General constructor; `input` must have `2 * blocks.len()` rows.
    pub fn new(blocks: Vec<BlockKind>, input: DMatrix<f64>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("reduced system needs a block".into()));
        }
        if input.nrows() != 2 * blocks.len() || input.ncols() == 0 {
            return Err(Error::InvalidParameter(format!(
                "input matrix is {}x{}, expected {} rows",
                input.nrows(),
                input.ncols(),
                2 * blocks.len()
            )));
        }
        Ok(Self {
            order: blocks.len() - 1,
            blocks,
            input,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// State dimension `2 (N + 1)`.
    pub fn dim(&self) -> usize {
        2 * self.blocks.len()
    }

    pub fn input_dim(&self) -> usize {
        self.input.ncols()
    }

    pub fn blocks(&self) -> &[BlockKind] {
        &self.blocks
    }

    pub fn input(&self) -> &DMatrix<f64> {
        &self.input
    }

    /// Dense generator, block diagonal.
    pub fn a_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut a = DMatrix::zeros(d, d);
        for (k, b) in self.blocks.iter().enumerate() {
            let g = b.generator().0;
            for i in 0..2 {
                for j in 0..2 {
                    a[(2 * k + i, 2 * k + j)] = g[i][j];
                }
            }
        }
        a
    }

    /// Fastest block rate.
    pub fn rate(&self) -> f64 {
        self.blocks.iter().map(BlockKind::rate).fold(0.0, f64::max)
    }

    /// `exp(tA) x`.
    pub fn transition(&self, t: f64, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (k, b) in self.blocks.iter().enumerate() {
            let y = b.expm_unchecked(t).apply([x[2 * k], x[2 * k + 1]]);
            out[2 * k] = y[0];
            out[2 * k + 1] = y[1];
        }
        out
    }

    /// `exp(tA) B`.
    pub fn propagated_input(&self, t: f64) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim(), self.input_dim());
        for (k, b) in self.blocks.iter().enumerate() {
            let e = b.expm_unchecked(t).0;
            for c in 0..self.input_dim() {
                let (p, v) = (self.input[(2 * k, c)], self.input[(2 * k + 1, c)]);
                out[(2 * k, c)] = e[0][0] * p + e[0][1] * v;
                out[(2 * k + 1, c)] = e[1][0] * p + e[1][1] * v;
            }
        }
        out
    }

    fn coordinates(&self, x: &StateVector) -> DVector<f64> {
        DVector::from_vec(x.to_dense(self.dim()))
    }
}

/// Blocks `0..=order` of the modal system.
pub fn reduced_matrices(system: &ModalSystem, order: usize) -> Result<ReducedSystem> {
    if order > system.mode_count() {
        return Err(Error::ModeCountExceeded {
            requested: order,
            available: system.mode_count(),
        });
    }
    let blocks = (0..=order).map(|k| system.block_kind(k)).collect();
    let mut input = DMatrix::zeros(2 * (order + 1), 1);
    for k in 0..=order {
        input[(2 * k + 1, 0)] = system.block_input(k);
    }
    ReducedSystem::new(blocks, input)
}

/// Symmetric positive definite control weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    q: DMatrix<f64>,
    q_inv: DMatrix<f64>,
}

impl WeightMatrix {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() || q.nrows() == 0 || q != q.transpose() {
            return Err(Error::WeightNotPositiveDefinite);
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::WeightNotPositiveDefinite);
        }
        let chol = Cholesky::new(q.clone()).ok_or(Error::WeightNotPositiveDefinite)?;
        let q_inv = chol.inverse();
        let q_inv = (&q_inv + q_inv.transpose()) * 0.5;
        Ok(Self { q, q_inv })
    }

    pub fn scalar(q: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, q))
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.q_inv
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.q.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::WeightNotPositiveDefinite);
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }
}

impl Default for WeightMatrix {
    fn default() -> Self {
        Self::scalar(1.0).expect("unit weight")
    }
}

/// Composite Gauss-Legendre layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub panels: usize,
    pub nodes: usize,
}

impl QuadratureSpec {
    /// Resolves the Gramian integrand, whose entries oscillate at up to twice
    /// the fastest block rate.
    pub fn resolved(reduced: &ReducedSystem, tau: f64) -> Self {
        Self {
            panels: panels_for_rate(2.0 * reduced.rate(), tau),
            nodes: DEFAULT_NODES,
        }
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self {
            panels: self.panels * factor,
            nodes: self.nodes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gramian {
    pub matrix: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Spectral condition number; infinite if the matrix is not positive
    /// definite.
    pub condition_estimate: f64,
    pub quadrature: QuadratureSpec,
}

impl Gramian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

fn check_horizon(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("horizon must be positive, got {tau}")))
    }
}

/// `int_0^tau exp(sA) B Q^{-1} B' exp(sA') ds`, symmetrized.
pub fn gramian(
    reduced: &ReducedSystem,
    tau: f64,
    weight: &WeightMatrix,
    quadrature: QuadratureSpec,
) -> Result<Gramian> {
    check_horizon(tau)?;
    if weight.dim() != reduced.input_dim() {
        return Err(Error::InvalidParameter(format!(
            "weight is {0}x{0} but the system has {1} inputs",
            weight.dim(),
            reduced.input_dim()
        )));
    }
    let rule = CompositeRule::new(quadrature.panels, quadrature.nodes)?;
    let d = reduced.dim();
    let partials: Vec<DMatrix<f64>> = (0..rule.panels())
        .into_par_iter()
        .map(|k| {
            let mut acc = DMatrix::zeros(d, d);
            for (s, w) in rule.panel(0.0, tau, k) {
                let g = reduced.propagated_input(s);
                let gq = &g * weight.inverse();
                acc.gemm(w, &gq, &g.transpose(), 1.0);
            }
            acc
        })
        .collect();
    // fixed-order reduction keeps the result independent of scheduling
    let mut w = DMatrix::zeros(d, d);
    for p in &partials {
        w += p;
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("Gramian entry".into()));
    }
    let w = (&w + w.transpose()) * 0.5;
    let eig = SymmetricEigen::new(w.clone()).eigenvalues;
    let min_eigenvalue = eig.min();
    let max_eigenvalue = eig.max();
    let condition_estimate = if min_eigenvalue > 0.0 {
        max_eigenvalue / min_eigenvalue
    } else {
        f64::INFINITY
    };
    Ok(Gramian {
        matrix: w,
        min_eigenvalue,
        max_eigenvalue,
        condition_estimate,
        quadrature,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SynthesisOptions {
    /// Gramian quadrature; resolved from the block rates when absent.
    pub quadrature: Option<QuadratureSpec>,
    /// Adds `ridge * I` before the solve. The resulting law no longer
    /// interpolates the projected target exactly.
    pub ridge: Option<f64>,
}

/// The synthesized control together with everything needed to evaluate and
/// audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlLaw {
    pub nu: DVector<f64>,
    pub tau: f64,
    pub weight: WeightMatrix,
    pub reduced: ReducedSystem,
    pub gramian: Gramian,
    /// `||W nu - rhs|| / ||rhs||`, zero for the zero law.
    pub residual: f64,
    /// Set when ridge regularization was used.
    pub approximate: bool,
    pub fingerprint: String,
}

/// Steers `P_N x0` to `P_N x1` over `[0, tau]` with the minimum-energy
/// control of the order-`order` truncation.
pub fn synthesize(
    system: &ModalSystem,
    order: usize,
    tau: f64,
    weight: &WeightMatrix,
    x0: &StateVector,
    x1: &StateVector,
    options: &SynthesisOptions,
) -> Result<ControlLaw> {
    check_horizon(tau)?;
    if x0.iter().chain(x1.iter()).any(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite("endpoint state entry".into()));
    }
    let reduced = reduced_matrices(system, order)?;
    let quadrature = options
        .quadrature
        .unwrap_or_else(|| QuadratureSpec::resolved(&reduced, tau));
    let gram = gramian(&reduced, tau, weight, quadrature)?;

    let start = reduced.coordinates(&x0.project(order));
    let target = reduced.coordinates(&x1.project(order));
    let rhs = target - reduced.transition(tau, &start);

    let singular = |gram: &Gramian| Error::GramianSingular {
        order,
        tau,
        kappa: system.kappa(),
        condition: gram.condition_estimate,
    };

    let (nu, residual) = if rhs.iter().all(|&x| x == 0.0) {
        (DVector::zeros(reduced.dim()), 0.0)
    } else {
        let mut m = gram.matrix.clone();
        match options.ridge {
            Some(r) if r > 0.0 => {
                for i in 0..m.nrows() {
                    m[(i, i)] += r;
                }
            }
            Some(r) => {
                return Err(Error::InvalidParameter(format!("ridge must be positive, got {r}")))
            }
            None if gram.min_eigenvalue <= 0.0 => return Err(singular(&gram)),
            None => {}
        }
        let chol = Cholesky::new(m).ok_or_else(|| singular(&gram))?;
        let nu = chol.solve(&rhs);
        if nu.iter().any(|x| !x.is_finite()) {
            return Err(singular(&gram));
        }
        let residual = (&gram.matrix * &nu - &rhs).norm() / rhs.norm();
        (nu, residual)
    };

    Ok(ControlLaw {
        nu,
        tau,
        weight: weight.clone(),
        reduced,
        gramian: gram,
        residual,
        approximate: options.ridge.is_some(),
        fingerprint: system.fingerprint(),
    })
}

impl ControlLaw {
    pub fn order(&self) -> usize {
        self.reduced.order()
    }

    pub fn is_zero(&self) -> bool {
        self.nu.iter().all(|&x| x == 0.0)
    }

    /// `Q^{-1} B' exp((tau - t) A') nu` for `t` in `[0, tau]`.
    pub fn eval(&self, t: f64) -> Result<DVector<f64>> {
        if !(0.0..=self.tau).contains(&t) {
            return Err(Error::TimeOutOfRange { t, tau: self.tau });
        }
        Ok(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: f64) -> DVector<f64> {
        let g = self.reduced.propagated_input(self.tau - t);
        self.weight.inverse() * (g.transpose() * &self.nu)
    }

    /// Scalar control value for single-input systems.
    pub fn eval_scalar(&self, t: f64) -> Result<f64> {
        if self.reduced.input_dim() != 1 {
            return Err(Error::InvalidParameter(format!(
                "law has {} inputs, scalar evaluation needs 1",
                self.reduced.input_dim()
            )));
        }
        Ok(self.eval(t)?[0])
    }

    /// The control as a plain function of time for propagation. Times
    /// outside the horizon are clamped.
    pub fn as_fn(&self) -> impl Fn(f64) -> f64 + Sync + '_ {
        move |t: f64| self.eval_unchecked(t.clamp(0.0, self.tau))[0]
    }

    /// Closed-form cost `nu' W nu`.
    pub fn control_cost(&self) -> f64 {
        self.nu.dot(&(&self.gramian.matrix * &self.nu))
    }

    fn integrate(&self, f: impl Fn(&DVector<f64>) -> f64 + Sync) -> f64 {
        let q = self.gramian.quadrature;
        let rule = CompositeRule::new(q.panels, q.nodes).expect("validated at synthesis");
        let partials: Vec<f64> = (0..rule.panels())
            .into_par_iter()
            .map(|k| {
                rule.panel(0.0, self.tau, k)
                    .map(|(t, w)| w * f(&self.eval_unchecked(t)))
                    .sum()
            })
            .collect();
        partials.iter().sum()
    }

    /// `(int_0^tau |u(t)|^2 dt)^(1/2)` by quadrature.
    pub fn l2_norm(&self) -> f64 {
        self.integrate(|u| u.norm_squared()).sqrt()
    }

    /// `int_0^tau u' Q u dt` by quadrature; equals [`Self::control_cost`] up
    /// to quadrature error.
    pub fn quadrature_cost(&self) -> f64 {
        let q = self.weight.matrix();
        self.integrate(|u| u.dot(&(q * u)))
    }

    pub fn to_file(&self) -> LawFile {
        LawFile {
            order: self.order(),
            tau: self.tau,
            nu: self.nu.iter().copied().collect(),
            q: self.weight.rows(),
            fingerprint: self.fingerprint.clone(),
            residual: self.residual,
            condition_estimate: self.gramian.condition_estimate,
            quadrature: self.gramian.quadrature,
            approximate: self.approximate,
        }
    }

    /// Rebuilds a law from its file against the system it was made for.
    /// The Gramian is recomputed with the recorded quadrature; `nu` is taken
    /// verbatim.
    pub fn from_file(file: &LawFile, system: &ModalSystem) -> Result<Self> {
        let found = system.fingerprint();
        if file.fingerprint != found {
            return Err(Error::FingerprintMismatch {
                expected: file.fingerprint.clone(),
                found,
            });
        }
        check_horizon(file.tau)?;
        let reduced = reduced_matrices(system, file.order)?;
        if file.nu.len() != reduced.dim() {
            return Err(Error::Serialization(format!(
                "nu has {} entries, order {} needs {}",
                file.nu.len(),
                file.order,
                reduced.dim()
            )));
        }
        let weight = WeightMatrix::from_rows(&file.q)?;
        let gramian = gramian(&reduced, file.tau, &weight, file.quadrature)?;
        Ok(Self {
            nu: DVector::from_column_slice(&file.nu),
            tau: file.tau,
            weight,
            reduced,
            gramian,
            residual: file.residual,
            approximate: file.approximate,
            fingerprint: file.fingerprint.clone(),
        })
    }
}

/// On-disk form of a [`ControlLaw`]. Floats are written in shortest
/// round-trip form, so decoding reproduces every bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawFile {
    #[serde(rename = "N")]
    pub order: usize,
    pub tau: f64,
    pub nu: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub fingerprint: String,
    pub residual: f64,
    pub condition_estimate: f64,
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub approximate: bool,
}

impl LawFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
