//! Composite Gauss-Legendre rules.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Target phase advance per panel, in radians, when resolving an oscillatory
/// integrand. Eight-node panels integrate `exp(i x)` over 1 rad to roughly
/// machine precision.
pub const PHASE_PER_PANEL: f64 = 1.0;

/// Lower bound on automatically chosen panel counts.
pub const MIN_PANELS: usize = 16;

pub const DEFAULT_NODES: usize = 8;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Tricomi initial guesses.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("quadrature needs at least one node".into()));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let pn = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * pn - p0) / (x * x - 1.0);
    (pn, dp)
}

/// `panels` equal panels over `[a, b]`, each with the same rule.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRule {
    rule: GaussLegendre,
    panels: usize,
}

impl CompositeRule {
    pub fn new(panels: usize, nodes: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::InvalidParameter("quadrature needs at least one panel".into()));
        }
        Ok(Self {
            rule: GaussLegendre::new(nodes)?,
            panels,
        })
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.rule.len()
    }

    /// Nodes and weights of panel `k` over `[a, b]`.
    pub fn panel(&self, a: f64, b: f64, k: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = (b - a) / self.panels as f64;
        let lo = a + h * k as f64;
        let hi = if k + 1 == self.panels { b } else { lo + h };
        self.rule.mapped(lo, hi)
    }

    /// All nodes and weights over `[a, b]`, panel by panel.
    pub fn points(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        (0..self.panels).flat_map(|k| self.panel(a, b, k)).collect()
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.points(a, b).into_iter().map(|(t, w)| w * f(t)).sum()
    }
}

/// Panels needed so that an integrand oscillating or decaying at `rate`
/// (rad per unit time) advances at most [`PHASE_PER_PANEL`] per panel.
pub fn panels_for_rate(rate: f64, length: f64) -> usize {
    let needed = (rate.abs() * length.abs() / PHASE_PER_PANEL).ceil();
    if needed.is_finite() {
        (needed as usize).max(MIN_PANELS)
    } else {
        MIN_PANELS
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn known_rules() {
        let r = GaussLegendre::new(2).unwrap();
        let inv = 1.0 / 3f64.sqrt();
        assert_relative_eq!(r.nodes[0], -inv, epsilon = 1e-15);
        assert_relative_eq!(r.nodes[1], inv, epsilon = 1e-15);
        assert_relative_eq!(r.weights[0], 1.0, epsilon = 1e-15);
        let r = GaussLegendre::new(3).unwrap();
        assert_eq!(r.nodes[1], 0.0);
        assert_relative_eq!(r.weights[1], 8.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(r.nodes[2], 0.6f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        for n in 1..=20 {
            let rule = CompositeRule::new(1, n).unwrap();
            let deg = 2 * n - 1;
            let got = rule.integrate(0.0, 1.0, |x| x.powi(deg as i32));
            assert_relative_eq!(got, 1.0 / (deg as f64 + 1.0), max_relative = 1e-13);
            let wsum: f64 = rule.points(-1.0, 1.0).iter().map(|p| p.1).sum();
            assert_relative_eq!(wsum, 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn resolved_oscillatory_integral() {
        let omega = 300.0;
        let len = 5.0;
        let rule = CompositeRule::new(panels_for_rate(omega, len), DEFAULT_NODES).unwrap();
        let got = rule.integrate(0.0, len, |t| (omega * t).cos());
        assert_relative_eq!(got, (omega * len).sin() / omega, epsilon = 1e-14);
    }

    #[test]
    fn rejects_empty_rules() {
        assert!(GaussLegendre::new(0).is_err());
        assert!(CompositeRule::new(0, 4).is_err());
        assert_eq!(panels_for_rate(0.0, 1.0), MIN_PANELS);
    }
}
