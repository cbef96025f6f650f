//! Closed-form exponentials of the 2x2 diagonal blocks.

use std::ops::Mul;

use crate::error::{Error, Result};

/// Row-major 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockMatrix2(pub [[f64; 2]; 2]);

impl BlockMatrix2 {
    pub const IDENTITY: BlockMatrix2 = BlockMatrix2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn transpose(&self) -> Self {
        let m = self.0;
        BlockMatrix2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn det(&self) -> f64 {
        let m = self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        d
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}

impl Mul for BlockMatrix2 {
    type Output = BlockMatrix2;

    fn mul(self, rhs: BlockMatrix2) -> BlockMatrix2 {
        let (a, b) = (self.0, rhs.0);
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        BlockMatrix2(out)
    }
}

/// One diagonal block of the generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockKind {
    /// `[[0, 1], [0, 0]]`.
    Rigid,
    /// `[[0, omega], [-omega, -2 kappa]]`.
    Mode { omega: f64, kappa: f64 },
}

impl BlockKind {
    pub fn generator(&self) -> BlockMatrix2 {
        match *self {
            BlockKind::Rigid => BlockMatrix2([[0.0, 1.0], [0.0, 0.0]]),
            BlockKind::Mode { omega, kappa } => {
                BlockMatrix2([[0.0, omega], [-omega, -2.0 * kappa]])
            }
        }
    }

    /// Upper bound on the oscillation or decay rate of `exp(tA)` entries.
    pub fn rate(&self) -> f64 {
        match *self {
            BlockKind::Rigid => 0.0,
            BlockKind::Mode { omega, kappa } => omega + 2.0 * kappa,
        }
    }

    /// `exp(tA)` for the block. Errors only on non-finite `t`.
    pub fn expm(&self, t: f64) -> Result<BlockMatrix2> {
        if !t.is_finite() {
            return Err(Error::NonFinite(format!("block exponential at t = {t}")));
        }
        Ok(self.expm_unchecked(t))
    }

    /// `exp(tA)` without validating `t`.
    ///
    /// For a mode block, `(A + kappa I)^2 = (kappa^2 - omega^2) I`, so
    /// `exp(tA) = e^{-kappa t} (c(t) I + s(t) (A + kappa I))` where `(c, s)` is
    /// `(cos mu t, sin(mu t)/mu)` with `mu^2 = omega^2 - kappa^2`, its
    /// hyperbolic analogue when `kappa > omega`, or `(1, t)` at `kappa = omega`.
    pub fn expm_unchecked(&self, t: f64) -> BlockMatrix2 {
        match *self {
            BlockKind::Rigid => BlockMatrix2([[1.0, t], [0.0, 1.0]]),
            BlockKind::Mode { omega, kappa } => {
                // (omega - kappa)(omega + kappa) avoids cancellation near critical damping
                let disc = (omega - kappa) * (omega + kappa);
                let (c, s) = if disc > 0.0 {
                    let mu = disc.sqrt();
                    let decay = (-kappa * t).exp();
                    (decay * (mu * t).cos(), decay * (mu * t).sin() / mu)
                } else if disc < 0.0 {
                    let nu = (-disc).sqrt();
                    if nu * t.abs() < 1.0 {
                        let decay = (-kappa * t).exp();
                        (decay * (nu * t).cosh(), decay * (nu * t).sinh() / nu)
                    } else {
                        // split into two exponentials to avoid cosh overflow
                        let slow = ((nu - kappa) * t).exp();
                        let fast = ((-nu - kappa) * t).exp();
                        (0.5 * (slow + fast), 0.5 * (slow - fast) / nu)
                    }
                } else {
                    let decay = (-kappa * t).exp();
                    (decay, decay * t)
                };
                BlockMatrix2([
                    [c + s * kappa, s * omega],
                    [-s * omega, c - s * kappa],
                ])
            }
        }
    }
}

/// Free-function form of [`BlockKind::expm`].
pub fn block_expm(kind: BlockKind, t: f64) -> Result<BlockMatrix2> {
    kind.expm(t)
}
