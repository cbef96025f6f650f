//! Block-diagonal modal model of a rigid body carrying a damped flexible
//! appendage.
//!
//! Block 0 is the rigid-body double integrator with input component 1.
//! Block `n >= 1` is the damped oscillator `[[0, w_n], [-w_n, -2 kappa]]`
//! with input component `b_n` on the velocity coordinate.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::state::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub omega: f64,
    pub b: f64,
}

/// How the control coefficients `b_n` are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum CoefficientRule {
    /// `b_n = beta * n^(-p)`.
    PowerLaw { beta: f64, p: f64 },
    List { values: Vec<f64> },
}

impl Default for CoefficientRule {
    fn default() -> Self {
        CoefficientRule::PowerLaw { beta: 1.0, p: 2.0 }
    }
}

impl CoefficientRule {
    fn coefficient(&self, n: usize) -> Result<f64> {
        match self {
            CoefficientRule::PowerLaw { beta, p } => {
                if *beta == 0.0 || !beta.is_finite() || !p.is_finite() || *p < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "power law needs beta != 0 and p >= 0, got beta = {beta}, p = {p}"
                    )));
                }
                Ok(beta * (n as f64).powf(-p))
            }
            CoefficientRule::List { values } => values.get(n - 1).copied().ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "coefficient list has {} entries, mode {n} requested",
                    values.len()
                ))
            }),
        }
    }
}

/// Generator for modal frequencies and coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrequencyPreset {
    /// `omega_n = scale * n^2`.
    EulerBernoulli {
        scale: f64,
        #[serde(default)]
        b_rule: CoefficientRule,
    },
    /// `omega_n = scale * n`.
    Harmonic {
        scale: f64,
        #[serde(default)]
        b_rule: CoefficientRule,
    },
    Explicit { omega: Vec<f64>, b: Vec<f64> },
}

impl FrequencyPreset {
    pub fn euler_bernoulli(scale: f64) -> Self {
        FrequencyPreset::EulerBernoulli {
            scale,
            b_rule: CoefficientRule::default(),
        }
    }

    pub fn harmonic(scale: f64) -> Self {
        FrequencyPreset::Harmonic {
            scale,
            b_rule: CoefficientRule::default(),
        }
    }

    pub fn explicit(omega: Vec<f64>, b: Vec<f64>) -> Self {
        FrequencyPreset::Explicit { omega, b }
    }

    /// The first `count` modes (1-based `n`).
    pub fn generate(&self, count: usize) -> Result<Vec<Mode>> {
        let scaled = |scale: f64, rule: &CoefficientRule, law: fn(f64) -> f64| {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "frequency scale must be positive, got {scale}"
                )));
            }
            (1..=count)
                .map(|n| {
                    Ok(Mode {
                        omega: scale * law(n as f64),
                        b: rule.coefficient(n)?,
                    })
                })
                .collect()
        };
        match self {
            FrequencyPreset::EulerBernoulli { scale, b_rule } => scaled(*scale, b_rule, |n| n * n),
            FrequencyPreset::Harmonic { scale, b_rule } => scaled(*scale, b_rule, |n| n),
            FrequencyPreset::Explicit { omega, b } => {
                if omega.len() != b.len() {
                    return Err(Error::InvalidParameter(format!(
                        "explicit preset has {} frequencies but {} coefficients",
                        omega.len(),
                        b.len()
                    )));
                }
                if count > omega.len() {
                    return Err(Error::ModeCountExceeded {
                        requested: count,
                        available: omega.len(),
                    });
                }
                Ok(omega
                    .iter()
                    .zip(b)
                    .take(count)
                    .map(|(&omega, &b)| Mode { omega, b })
                    .collect())
            }
        }
    }
}

/// The rigid block plus `modes.len()` flexible blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalSystem {
    kappa: f64,
    modes: Vec<Mode>,
}

impl ModalSystem {
    /// Validates `kappa >= 0`, `omega_n > 0`, `b_n != 0`, distinct
    /// frequencies, and (unless `allow_overdamped`) `kappa < min omega_n`.
    pub fn new(kappa: f64, modes: Vec<Mode>, allow_overdamped: bool) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "damping must be finite and nonnegative, got {kappa}"
            )));
        }
        for (i, m) in modes.iter().enumerate() {
            if !(m.omega > 0.0 && m.omega.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "omega[{}] must be positive, got {}",
                    i + 1,
                    m.omega
                )));
            }
            if m.b == 0.0 || !m.b.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "b[{}] must be finite and nonzero, got {}",
                    i + 1,
                    m.b
                )));
            }
        }
        check_distinct(modes.iter().map(|m| m.omega))?;
        if let Some(min_omega) = modes.iter().map(|m| m.omega).reduce(f64::min) {
            if kappa >= min_omega && !allow_overdamped {
                return Err(Error::NotUnderdamped { kappa, min_omega });
            }
        }
        Ok(Self { kappa, modes })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// The model always carries the rigid-body block.
    pub fn has_rigid_block(&self) -> bool {
        true
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.omega).collect()
    }

    /// Mode `n` (1-based).
    pub fn mode(&self, n: usize) -> Option<Mode> {
        n.checked_sub(1).and_then(|i| self.modes.get(i)).copied()
    }

    /// The input column `B = (0, 1, 0, b_1, ...)` over all stored blocks.
    pub fn input_vector(&self) -> StateVector {
        let mut b = StateVector::unit(1);
        for (i, m) in self.modes.iter().enumerate() {
            b.set(2 * (i + 1) + 1, m.b);
        }
        b
    }

    /// SHA-256 over the bit patterns of `kappa` and every `(omega_n, b_n)`.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.kappa.to_bits().to_le_bytes());
        h.update((self.modes.len() as u64).to_le_bytes());
        for m in &self.modes {
            h.update(m.omega.to_bits().to_le_bytes());
            h.update(m.b.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// `||Q_N B||`: l2 norm of the input column above block `order`, over
    /// the stored modes.
    pub fn tail_input_norm(&self, order: usize) -> Result<f64> {
        if order > self.modes.len() {
            return Err(Error::ModeCountExceeded {
                requested: order,
                available: self.modes.len(),
            });
        }
        Ok(self.modes[order..]
            .iter()
            .map(|m| m.b * m.b)
            .sum::<f64>()
            .sqrt())
    }
}

/// Builds the system from a preset, checking the usual invariants.
pub fn build_system(
    preset: &FrequencyPreset,
    mode_count: usize,
    kappa: f64,
    allow_overdamped: bool,
) -> Result<ModalSystem> {
    if mode_count == 0 {
        return Err(Error::InvalidParameter("mode_count must be at least 1".into()));
    }
    ModalSystem::new(kappa, preset.generate(mode_count)?, allow_overdamped)
}

fn check_distinct(omegas: impl Iterator<Item = f64>) -> Result<()> {
    let mut sorted: Vec<(f64, usize)> = omegas.enumerate().map(|(i, w)| (w, i + 1)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for pair in sorted.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::DegenerateSpectrum {
                first: pair[0].1.min(pair[1].1),
                second: pair[0].1.max(pair[1].1),
                omega: pair[0].0,
            });
        }
    }
    Ok(())
}

/// A partial sum of the frequency-gap series together with its last step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSum {
    pub terms: usize,
    /// `S_K = sum over i != j <= K of 1 / (omega_i - omega_j)^2`.
    pub value: f64,
    /// `S_K - S_{K-1}`.
    pub increment: f64,
}

/// `S_K` for the first `k` frequencies.
pub fn gap_series_partial_sum(omegas: &[f64], k: usize) -> Result<GapSum> {
    let sums = gap_series_partial_sums(omegas, &[k])?;
    Ok(sums[0])
}

/// `S_K` at each checkpoint, computed in one incremental pass.
pub fn gap_series_partial_sums(omegas: &[f64], checkpoints: &[usize]) -> Result<Vec<GapSum>> {
    let top = checkpoints.iter().copied().max().unwrap_or(0);
    if checkpoints.contains(&0) {
        return Err(Error::InvalidParameter("gap series needs K >= 1".into()));
    }
    if top > omegas.len() {
        return Err(Error::ModeCountExceeded {
            requested: top,
            available: omegas.len(),
        });
    }
    check_distinct(omegas[..top].iter().copied())?;

    let mut running = Vec::with_capacity(top + 1);
    running.push((0.0, 0.0));
    let mut total = 0.0;
    for j in 0..top {
        let increment = 2.0
            * omegas[..j]
                .iter()
                .map(|wi| {
                    let d = wi - omegas[j];
                    1.0 / (d * d)
                })
                .sum::<f64>();
        total += increment;
        running.push((total, increment));
    }
    Ok(checkpoints
        .iter()
        .map(|&k| GapSum {
            terms: k,
            value: running[k].0,
            increment: running[k].1,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn brute_force(omegas: &[f64], k: usize) -> f64 {
        let mut s = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    s += 1.0 / (omegas[i] - omegas[j]).powi(2);
                }
            }
        }
        s
    }

    fn squares(k: usize) -> Vec<f64> {
        (1..=k).map(|n| (n * n) as f64).collect()
    }

    #[test]
    fn euler_bernoulli_preset_values() {
        let sys = build_system(&FrequencyPreset::euler_bernoulli(1.0), 3, 0.0, false).unwrap();
        assert_eq!(sys.omegas(), vec![1.0, 4.0, 9.0]);
        let b: Vec<f64> = sys.modes().iter().map(|m| m.b).collect();
        assert_eq!(b[0], 1.0);
        assert_eq!(b[1], 0.25);
        assert_relative_eq!(b[2], 1.0 / 9.0, max_relative = 1e-15);
        assert!(sys.has_rigid_block());
    }

    #[test]
    fn underdamped_guard() {
        let p = FrequencyPreset::explicit(vec![2.0], vec![1.0]);
        let sys = build_system(&p, 1, 0.1, false).unwrap();
        assert_eq!(sys.mode_count(), 1);

        let p = FrequencyPreset::explicit(vec![1.0], vec![1.0]);
        let err = build_system(&p, 1, 1.5, false).unwrap_err();
        assert!(err.to_string().contains("not underdamped"));
        assert!(build_system(&p, 1, 1.5, true).is_ok());
        assert!(build_system(&p, 1, 1.0, false).is_err());
    }

    #[test]
    fn rejects_bad_modes() {
        let p = FrequencyPreset::explicit(vec![1.0, 2.0], vec![1.0, 0.0]);
        assert!(matches!(build_system(&p, 2, 0.0, false), Err(Error::InvalidParameter(_))));
        let p = FrequencyPreset::explicit(vec![1.0, -2.0], vec![1.0, 1.0]);
        assert!(build_system(&p, 2, 0.0, false).is_err());
        let p = FrequencyPreset::explicit(vec![3.0, 1.0, 3.0], vec![1.0, 1.0, 1.0]);
        assert!(matches!(
            build_system(&p, 3, 0.0, false),
            Err(Error::DegenerateSpectrum { first: 1, second: 3, .. })
        ));
        let p = FrequencyPreset::EulerBernoulli {
            scale: 1.0,
            b_rule: CoefficientRule::PowerLaw { beta: 0.0, p: 1.0 },
        };
        assert!(build_system(&p, 2, 0.0, false).is_err());
        assert!(build_system(&FrequencyPreset::harmonic(1.0), 0, 0.0, false).is_err());
    }

    #[test]
    fn gap_series_small_cases() {
        let s = gap_series_partial_sum(&squares(2), 2).unwrap();
        assert_relative_eq!(s.value, 2.0 / 9.0, max_relative = 1e-15);
        assert_eq!(s.increment, s.value);
        let s1 = gap_series_partial_sum(&squares(1), 1).unwrap();
        assert_eq!(s1.value, 0.0);
        assert!(matches!(
            gap_series_partial_sum(&[1.0, 2.0, 1.0], 3),
            Err(Error::DegenerateSpectrum { .. })
        ));
        // repetition beyond K is irrelevant
        assert!(gap_series_partial_sum(&[1.0, 2.0, 1.0], 2).is_ok());
    }

    #[test]
    fn gap_series_matches_double_loop() {
        let w = squares(200);
        let s = gap_series_partial_sum(&w, 200).unwrap();
        assert_relative_eq!(s.value, brute_force(&w, 200), max_relative = 1e-12);
        let prev = gap_series_partial_sum(&w, 199).unwrap();
        assert_relative_eq!(s.increment, s.value - prev.value, max_relative = 1e-9);
    }

    #[test]
    fn harmonic_gap_series_keeps_growing() {
        let w: Vec<f64> = (1..=400).map(|n| n as f64).collect();
        let s200 = brute_force(&w, 200);
        let s400 = brute_force(&w, 400);
        let sums = gap_series_partial_sums(&w, &[200, 400]).unwrap();
        assert_relative_eq!(sums[0].value, s200, max_relative = 1e-12);
        assert_relative_eq!(sums[1].value, s400, max_relative = 1e-12);
        assert!(sums[1].value - sums[0].value > 100.0);
    }

    #[test]
    fn gap_series_is_permutation_symmetric_and_monotone() {
        let w = squares(30);
        let mut shuffled = w.clone();
        shuffled.reverse();
        shuffled.swap(3, 17);
        let a = gap_series_partial_sum(&w, 30).unwrap().value;
        let b = gap_series_partial_sum(&shuffled, 30).unwrap().value;
        assert_relative_eq!(a, b, max_relative = 1e-13);
        let ks: Vec<usize> = (1..=30).collect();
        let sums = gap_series_partial_sums(&w, &ks).unwrap();
        assert!(sums.windows(2).all(|p| p[1].value >= p[0].value));
    }

    #[test]
    fn tail_input_norms() {
        let p = FrequencyPreset::explicit(vec![1.0, 2.0], vec![1.0, 0.5]);
        let sys = build_system(&p, 2, 0.0, false).unwrap();
        assert_eq!(sys.tail_input_norm(2).unwrap(), 0.0);
        assert_eq!(sys.tail_input_norm(1).unwrap(), 0.5);
        assert!(sys.tail_input_norm(3).is_err());

        let sys = build_system(&FrequencyPreset::euler_bernoulli(1.0), 50, 0.0, false).unwrap();
        let expected = (2..=50).map(|n| (n as f64).powi(-4)).sum::<f64>().sqrt();
        assert_relative_eq!(sys.tail_input_norm(1).unwrap(), expected, max_relative = 1e-14);
        let norms: Vec<f64> = (0..=50).map(|n| sys.tail_input_norm(n).unwrap()).collect();
        assert!(norms.windows(2).all(|p| p[1] <= p[0]));
        assert_eq!(norms[50], 0.0);
    }

    #[test]
    fn input_vector_layout() {
        let p = FrequencyPreset::explicit(vec![2.0, 3.0], vec![0.5, -0.25]);
        let sys = build_system(&p, 2, 0.1, false).unwrap();
        assert_eq!(
            sys.input_vector(),
            StateVector::from_entries([(1, 1.0), (3, 0.5), (5, -0.25)])
        );
        assert_eq!(sys.input_vector().project(1), StateVector::from_entries([(1, 1.0), (3, 0.5)]));
    }

    #[test]
    fn preset_json_forms() {
        let p: FrequencyPreset = serde_json::from_str(
            r#"{"kind": "euler_bernoulli", "scale": 1.0, "b_rule": {"beta": 1.0, "p": 2.0}}"#,
        )
        .unwrap();
        assert_eq!(p, FrequencyPreset::euler_bernoulli(1.0));
        let p: FrequencyPreset =
            serde_json::from_str(r#"{"kind": "explicit", "omega": [2.0], "b": [1.0]}"#).unwrap();
        assert_eq!(p, FrequencyPreset::explicit(vec![2.0], vec![1.0]));
        assert!(serde_json::from_str::<FrequencyPreset>(
            r#"{"kind": "harmonic", "scale": 1.0, "extra": 3}"#
        )
        .is_err());
    }

    #[test]
    fn fingerprint_tracks_parameters() {
        let a = build_system(&FrequencyPreset::euler_bernoulli(1.0), 4, 0.01, false).unwrap();
        let b = build_system(&FrequencyPreset::euler_bernoulli(1.0), 4, 0.02, false).unwrap();
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
