//! Physical and laser parameters of the ion chain.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used to decide whether per-ion parameters coincide.
pub const HOMOGENEITY_TOL: f64 = 1e-12;

/// Per-ion couplings, Lamb-Dicke parameters and detunings of an `N`-ion chain.
///
/// Only the primary quantities are stored. The effective sideband coupling
/// `Ω_eff^j = 2i η₂ Ω₁ⱼ Ω₂ⱼ* / Δ` and the Stark-shift rate
/// `Ω₀^j = 2 η₁² |Ω₁ⱼ|² / Δ` are always recomputed from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonChainConfig {
    n_ions: usize,
    omega1: Vec<Complex64>,
    omega2: Vec<Complex64>,
    delta: f64,
    eta1: f64,
    eta2: f64,
    nu: f64,
    n_max: usize,
    delta0: Vec<f64>,
}

impl IonChainConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        omega1: Vec<Complex64>,
        omega2: Vec<Complex64>,
        delta: f64,
        eta1: f64,
        eta2: f64,
        nu: f64,
        n_max: usize,
        delta0: Vec<f64>,
    ) -> Result<Self> {
        let n_ions = omega1.len();
        if n_ions == 0 {
            return Err(Error::Parameter("the chain needs at least one ion".into()));
        }
        if omega2.len() != n_ions || delta0.len() != n_ions {
            return Err(Error::Parameter(format!(
                "per-ion lists disagree in length: omega1 {}, omega2 {}, delta0 {}",
                n_ions,
                omega2.len(),
                delta0.len()
            )));
        }
        if n_max < 1 {
            return Err(Error::Parameter("n_max must be at least 1".into()));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Parameter(format!("Raman detuning must be positive, got {delta}")));
        }
        for (name, eta) in [("eta1", eta1), ("eta2", eta2)] {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(Error::Parameter(format!("{name} must lie in (0, 1), got {eta}")));
            }
        }
        let finite = omega1
            .iter()
            .chain(&omega2)
            .all(|c| c.re.is_finite() && c.im.is_finite())
            && delta0.iter().all(|d| d.is_finite())
            && nu.is_finite();
        if !finite {
            return Err(Error::Parameter("non-finite coupling or offset".into()));
        }
        Ok(Self {
            n_ions,
            omega1,
            omega2,
            delta,
            eta1,
            eta2,
            nu,
            n_max,
            delta0,
        })
    }

    /// Homogeneous chain in the dimensionless unit system: `|Ω_eff| = 1`,
    /// `Ω₀ = ratio`, real positive `Ω_eff`, all `δ₀ʲ = 0`.
    pub fn dimensionless(n_ions: usize, n_max: usize, ratio: f64) -> Result<Self> {
        ConfigSpec::new(n_ions, n_max).ratio(ratio).build()
    }

    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn omega1(&self) -> &[Complex64] {
        &self.omega1
    }

    pub fn omega2(&self) -> &[Complex64] {
        &self.omega2
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta1(&self) -> f64 {
        self.eta1
    }

    pub fn eta2(&self) -> f64 {
        self.eta2
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn delta0(&self) -> &[f64] {
        &self.delta0
    }

    /// `Ω_eff^j = 2i η₂ Ω₁ⱼ Ω₂ⱼ* / Δ`.
    pub fn omega_eff(&self, j: usize) -> Complex64 {
        Complex64::i() * 2.0 * self.eta2 * self.omega1[j] * self.omega2[j].conj() / self.delta
    }

    pub fn omega_eff_all(&self) -> Vec<Complex64> {
        (0..self.n_ions).map(|j| self.omega_eff(j)).collect()
    }

    /// `Ω₀^j = 2 η₁² |Ω₁ⱼ|² / Δ`.
    pub fn omega0(&self, j: usize) -> f64 {
        2.0 * self.eta1 * self.eta1 * self.omega1[j].norm_sqr() / self.delta
    }

    pub fn omega0_all(&self) -> Vec<f64> {
        (0..self.n_ions).map(|j| self.omega0(j)).collect()
    }

    pub fn is_homogeneous(&self) -> bool {
        let c1 = self.omega1[0];
        let c2 = self.omega2[0];
        let d0 = self.delta0[0];
        self.omega1.iter().all(|&c| complex_close(c, c1))
            && self.omega2.iter().all(|&c| complex_close(c, c2))
            && self.delta0.iter().all(|&d| real_close(d, d0))
    }

    /// Homogeneity of `Ω_eff^j` and `Ω₀ʲ` alone, ignoring `δ₀ʲ`.
    pub fn has_homogeneous_couplings(&self) -> bool {
        self.with_uniform_delta0(0.0).is_homogeneous()
    }

    /// Errors unless all `Ω_eff^j` and all `Ω₀ʲ` agree.
    pub fn require_homogeneous_couplings(&self) -> Result<()> {
        if self.has_homogeneous_couplings() {
            Ok(())
        } else {
            Err(Error::InvalidBasis("this operation needs homogeneous couplings".into()))
        }
    }

    /// Common `Ω_eff` of a homogeneous chain.
    pub fn homogeneous_omega_eff(&self) -> Result<Complex64> {
        self.require_homogeneous()?;
        Ok(self.omega_eff(0))
    }

    /// Common `Ω₀` of a homogeneous chain.
    pub fn homogeneous_omega0(&self) -> Result<f64> {
        self.require_homogeneous()?;
        Ok(self.omega0(0))
    }

    pub(crate) fn require_homogeneous(&self) -> Result<()> {
        if self.is_homogeneous() {
            Ok(())
        } else {
            Err(Error::InvalidBasis(
                "the symmetric Dicke reduction requires homogeneous couplings".into(),
            ))
        }
    }

    /// Mean `|Ω_eff^j|`, the frequency unit of the dimensionless system.
    pub fn mean_coupling(&self) -> f64 {
        self.omega_eff_all().iter().map(|c| c.norm()).sum::<f64>() / self.n_ions as f64
    }

    /// `Ω₀ / |Ω_eff|` averaged over ions.
    pub fn stark_ratio(&self) -> f64 {
        let omega0 = self.omega0_all().iter().sum::<f64>() / self.n_ions as f64;
        omega0 / self.mean_coupling()
    }

    pub fn with_delta0(&self, delta0: Vec<f64>) -> Result<Self> {
        if delta0.len() != self.n_ions {
            return Err(Error::Parameter(format!(
                "expected {} offsets, got {}",
                self.n_ions,
                delta0.len()
            )));
        }
        let mut out = self.clone();
        out.delta0 = delta0;
        Ok(out)
    }

    pub fn with_uniform_delta0(&self, delta0: f64) -> Self {
        let mut out = self.clone();
        out.delta0 = vec![delta0; self.n_ions];
        out
    }

    /// Adds `shift` to every `δ₀ʲ`.
    pub fn shifted_delta0(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for d in &mut out.delta0 {
            *d += shift;
        }
        out
    }

    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::Parameter("n_max must be at least 1".into()));
        }
        let mut out = self.clone();
        out.n_max = n_max;
        Ok(out)
    }

    /// Rescales `Ω₁ⱼ` by `a` and `Ω₂ⱼ` by `1/a` so that the mean `Ω₀/|Ω_eff|`
    /// equals `ratio` while every `Ω_eff^j` stays unchanged.
    pub fn with_stark_ratio(&self, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::Parameter(format!("Stark ratio must be positive, got {ratio}")));
        }
        let current = self.stark_ratio();
        if !(current > 0.0 && current.is_finite()) {
            return Err(Error::Parameter("cannot rescale a chain with zero coupling".into()));
        }
        let scale = (ratio / current).sqrt();
        let mut out = self.clone();
        for c in &mut out.omega1 {
            *c *= scale;
        }
        for c in &mut out.omega2 {
            *c /= scale;
        }
        Ok(out)
    }
}

fn real_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= HOMOGENEITY_TOL * a.abs().max(b.abs())
}

fn complex_close(a: Complex64, b: Complex64) -> bool {
    a == b || (a - b).norm() <= HOMOGENEITY_TOL * a.norm().max(b.norm())
}

/// Chain description in the dimensionless unit system, as written in
/// schedule files. [`ConfigSpec::build`] turns it into an [`IonChainConfig`].
///
/// `Ω₁` is real positive and `Ω₂` carries the phase, chosen so that
/// `Ω_eff = |Ω_eff| e^{-iφ}`. `inhom` scales `Ω₂ⱼ` (and hence `|Ω_eff^j|`)
/// per ion without touching `Ω₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSpec {
    pub n_ions: usize,
    pub n_max: usize,
    pub ratio: Option<f64>,
    pub omega0: Option<f64>,
    pub omega_eff: Option<f64>,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub delta: Option<f64>,
    pub nu: Option<f64>,
    pub phase: Option<f64>,
    pub inhom: Option<Vec<f64>>,
    pub delta0: Option<Vec<f64>>,
}

impl ConfigSpec {
    pub const DEFAULT_ETA: f64 = 0.1;
    pub const DEFAULT_DELTA: f64 = 1000.0;
    pub const DEFAULT_NU: f64 = 100.0;

    pub fn new(n_ions: usize, n_max: usize) -> Self {
        Self {
            n_ions,
            n_max,
            ratio: None,
            omega0: None,
            omega_eff: None,
            eta1: None,
            eta2: None,
            delta: None,
            nu: None,
            phase: None,
            inhom: None,
            delta0: None,
        }
    }

    pub fn ratio(mut self, ratio: f64) -> Self {
        self.ratio = Some(ratio);
        self.omega0 = None;
        self
    }

    pub fn phase(mut self, phase: f64) -> Self {
        self.phase = Some(phase);
        self
    }

    pub fn inhom(mut self, scales: Vec<f64>) -> Self {
        self.inhom = Some(scales);
        self
    }

    pub fn build(&self) -> Result<IonChainConfig> {
        let n = self.n_ions;
        if n == 0 {
            return Err(Error::Parameter("N must be at least 1".into()));
        }
        let omega_eff = self.omega_eff.unwrap_or(1.0);
        if !(omega_eff > 0.0 && omega_eff.is_finite()) {
            return Err(Error::Parameter(format!("omega_eff must be positive, got {omega_eff}")));
        }
        let omega0 = match (self.ratio, self.omega0) {
            (Some(_), Some(_)) => {
                return Err(Error::Parameter("give either ratio or omega0, not both".into()))
            }
            (Some(r), None) => r * omega_eff,
            (None, Some(o)) => o,
            (None, None) => {
                return Err(Error::Parameter("the chain needs ratio or omega0".into()))
            }
        };
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::Parameter(format!("omega0 must be positive, got {omega0}")));
        }
        let eta1 = self.eta1.unwrap_or(Self::DEFAULT_ETA);
        let eta2 = self.eta2.unwrap_or(Self::DEFAULT_ETA);
        let delta = self.delta.unwrap_or(Self::DEFAULT_DELTA);
        let phase = self.phase.unwrap_or(0.0);
        if delta.is_nan() || delta <= 0.0 || !in_open_unit(eta1) || !in_open_unit(eta2) {
            return Err(Error::Parameter(
                "need delta > 0 and Lamb-Dicke parameters in (0, 1)".into(),
            ));
        }
        let scales = match &self.inhom {
            Some(s) if s.len() != n => {
                return Err(Error::Parameter(format!(
                    "inhom lists {} scale factors for N = {}",
                    s.len(),
                    n
                )))
            }
            Some(s) => s.clone(),
            None => vec![1.0; n],
        };
        let delta0 = match &self.delta0 {
            Some(d) if d.len() == 1 => vec![d[0]; n],
            Some(d) if d.len() != n => {
                return Err(Error::Parameter(format!(
                    "delta0 lists {} offsets for N = {}",
                    d.len(),
                    n
                )))
            }
            Some(d) => d.clone(),
            None => vec![0.0; n],
        };
        // Ω₀ = 2η₁²|Ω₁|²/Δ and |Ω_eff| = 2η₂|Ω₁||Ω₂|/Δ
        let omega1_mag = (omega0 * delta / (2.0 * eta1 * eta1)).sqrt();
        let omega2_mag = omega_eff * delta / (2.0 * eta2 * omega1_mag);
        let omega2_phase = Complex64::from_polar(1.0, FRAC_PI_2 + phase);
        let omega1 = vec![Complex64::new(omega1_mag, 0.0); n];
        let omega2 = scales.iter().map(|s| omega2_phase * omega2_mag * *s).collect();
        IonChainConfig::new(
            omega1,
            omega2,
            delta,
            eta1,
            eta2,
            self.nu.unwrap_or(Self::DEFAULT_NU),
            self.n_max,
            delta0,
        )
    }
}

fn in_open_unit(x: f64) -> bool {
    x > 0.0 && x < 1.0
}
