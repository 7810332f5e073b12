//! Fidelities, Rabi traces, symmetric-subspace leakage, selectivity sweeps
//! and the pulse-time budget.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{BasisKind, BasisTag, CVector, StateVector};
use crate::config::IonChainConfig;
use crate::dynamics::Propagator;
use crate::error::{Error, Result};
use crate::hamiltonians::{
    doublet_coupling, inhomogeneous_hamiltonian, inhomogeneous_resonance_shift, resonance_delta0,
    sideband_hamiltonian, DoubletTarget,
};
use crate::protocols::{dicke_ladder, prepare_w_state, run_schedule, FidelityModel, RunOptions};
use crate::spaces::{build_collective_number_basis, dicke_state, DEFAULT_DROP_TOL};

/// Ratios used when a sweep names none.
pub const DEFAULT_RATIOS: [f64; 5] = [10.0, 30.0, 100.0, 300.0, 1000.0];
/// Pulse-time budget from the required operation speed, in seconds.
pub const PULSE_BUDGET_S: f64 = 1e-4;
/// Motional decoherence time, in seconds.
pub const DECOHERENCE_BUDGET_S: f64 = 1e-2;

/// `|⟨φ|ψ⟩|²`.
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(phi.inner(psi)?.norm_sqr().min(1.0))
}

/// How a Rabi trace tunes `δ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Tuning {
    /// Resonant with the addressed doublet (uniform shift for inhomogeneous chains).
    Resonant,
    /// Uniform `δ₀` given explicitly.
    Delta0(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RabiTrace {
    pub times: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Population of the whole basis at each time (1 up to round-off).
    pub total: Vec<f64>,
    /// `|g|`, so the two-level law is `cos²(|g|t)`.
    pub coupling: f64,
    pub delta0: Vec<f64>,
}

impl RabiTrace {
    /// Largest population transferred to the upper member.
    pub fn max_transfer(&self) -> f64 {
        self.upper.iter().copied().fold(0.0, f64::max)
    }
}

/// Populations of the doublet members over time, starting in the lower one.
pub fn rabi_trace(
    config: &IonChainConfig,
    target: &DoubletTarget,
    model: FidelityModel,
    times: &[f64],
) -> Result<RabiTrace> {
    rabi_trace_tuned(config, target, model, Tuning::Resonant, times)
}

pub fn rabi_trace_tuned(
    config: &IonChainConfig,
    target: &DoubletTarget,
    model: FidelityModel,
    tuning: Tuning,
    times: &[f64],
) -> Result<RabiTrace> {
    let n = config.n_ions();
    target.validate(n, config.n_max())?;
    let homogeneous = config.has_homogeneous_couplings();
    let base = config.with_uniform_delta0(0.0);
    let (fock_lo, k_lo) = target.ion_lower();
    let (fock_hi, k_hi) = target.ion_upper();

    let (coupling, ion_lo, ion_hi, resonant) = if homogeneous {
        if target.branch_index() != 0 {
            return Err(Error::domain("branch", target.branch_index(), "homogeneous chains have one branch"));
        }
        let g = doublet_coupling(config, target)?.norm();
        let lo = dicke_state(n, k_lo)?.into_amplitudes();
        let hi = dicke_state(n, k_hi)?.into_amplitudes();
        (g, lo, hi, resonance_delta0(target, n))
    } else {
        let cnb = build_collective_number_basis(&base, n, DEFAULT_DROP_TOL)?;
        let h = inhomogeneous_hamiltonian(&base, &cnb)?;
        let branch = target.branch_index();
        let g = h
            .coupling(target.k0, branch)
            .ok_or_else(|| Error::NoSolution(format!("branch {branch} has no coupling at k = {}", target.k0)))?;
        let member = |k| {
            cnb.get(k, branch)
                .map(|m| m.state.amplitudes().clone())
                .ok_or_else(|| Error::domain("branch", branch, format!("level k = {k} has {} branches", cnb.branches(k))))
        };
        let shift = inhomogeneous_resonance_shift(&base, &cnb, target)?;
        (g.norm() * ((target.n0 + 1) as f64).sqrt(), member(k_lo)?, member(k_hi)?, shift)
    };
    let tuned = base.with_uniform_delta0(match tuning {
        Tuning::Resonant => resonant,
        Tuning::Delta0(d) => d,
    });

    let mut trace = RabiTrace {
        times: times.to_vec(),
        lower: Vec::with_capacity(times.len()),
        upper: Vec::with_capacity(times.len()),
        total: Vec::with_capacity(times.len()),
        coupling,
        delta0: tuned.delta0().to_vec(),
    };
    match model {
        FidelityModel::TwoLevel => {
            if !homogeneous && matches!(tuning, Tuning::Delta0(_)) {
                return Err(Error::Parameter("the two-level model is always resonant".into()));
            }
            for &t in times {
                let c = (coupling * t).cos().powi(2);
                trace.lower.push(c);
                trace.upper.push(1.0 - c);
                trace.total.push(1.0);
            }
        }
        FidelityModel::FullSymmetric | FidelityModel::FullRegister => {
            let basis = if model == FidelityModel::FullSymmetric {
                config.require_homogeneous_couplings()?;
                BasisTag::dicke_fock(n, config.n_max())
            } else {
                BasisTag::full_register(n, config.n_max())
            };
            let embed = |ion: &CVector, k: usize, fock: usize| -> CVector {
                let mut v = CVector::zeros(basis.dim());
                if basis.kind == BasisKind::DickeFock {
                    v[basis.index(0, k, fock)] = num_complex::Complex64::new(1.0, 0.0);
                } else {
                    for (x, a) in ion.iter().enumerate() {
                        v[basis.index(0, x, fock)] = *a;
                    }
                }
                v
            };
            let lo = embed(&ion_lo, k_lo, fock_lo);
            let hi = embed(&ion_hi, k_hi, fock_hi);
            let h = sideband_hamiltonian(&tuned, &basis, target.sideband, 0.0)?;
            let prop = Propagator::new(&h)?;
            let psi0 = StateVector::new(basis, lo.clone())?;
            for &t in times {
                let psi = prop.apply(&psi0, t)?;
                trace.lower.push(lo.dotc(psi.amplitudes()).norm_sqr());
                trace.upper.push(hi.dotc(psi.amplitudes()).norm_sqr());
                trace.total.push(psi.norm().powi(2));
            }
        }
    }
    Ok(trace)
}

/// `1 - ‖(P_sym ⊗ I)ψ‖²` for a state on the full register.
pub fn symmetric_leakage(psi: &StateVector) -> Result<f64> {
    let b = *psi.basis();
    if b.kind != BasisKind::FullRegister {
        return Err(Error::InvalidBasis(format!("symmetric leakage needs the full register, got {b}")));
    }
    let dicke: Vec<CVector> = (0..=b.n_ions)
        .map(|k| dicke_state(b.n_ions, k).map(StateVector::into_amplitudes))
        .collect::<Result<_>>()?;
    let mut kept = 0.0;
    for a in 0..b.ancilla_dim() {
        for n in 0..b.fock_dim() {
            let slice = CVector::from_iterator(
                b.ion_dim(),
                (0..b.ion_dim()).map(|x| psi.amplitudes()[b.index(a, x, n)]),
            );
            kept += dicke.iter().map(|d| d.dotc(&slice).norm_sqr()).sum::<f64>();
        }
    }
    Ok((psi.norm().powi(2) - kept).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepProtocol {
    WState,
    /// Dicke ladder up to the given level.
    Ladder(usize),
}

impl SweepProtocol {
    pub fn name(&self) -> String {
        match self {
            SweepProtocol::WState => "w".to_string(),
            SweepProtocol::Ladder(k) => format!("ladder:{k}"),
        }
    }

    /// Parses `w` or `ladder:K`.
    pub fn parse(text: &str) -> Option<Self> {
        if text == "w" {
            return Some(SweepProtocol::WState);
        }
        text.strip_prefix("ladder:")
            .and_then(|k| k.parse().ok())
            .map(SweepProtocol::Ladder)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub protocol: SweepProtocol,
    pub axis: Vec<f64>,
    pub infidelity: Vec<f64>,
    pub wall_ms: Vec<f64>,
    pub config: IonChainConfig,
}

/// Checks that `ratios` is non-empty, positive and strictly increasing.
pub fn validate_ratios(ratios: &[f64]) -> Result<()> {
    if ratios.is_empty() {
        return Err(Error::Parameter("at least one ratio is needed".into()));
    }
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::Parameter(format!("ratios must be positive, got {r}")));
    }
    if let Some(w) = ratios.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Parameter(format!(
            "ratios must be strictly increasing, but {} follows {}",
            w[1], w[0]
        )));
    }
    Ok(())
}

fn sweep_point(template: &IonChainConfig, protocol: SweepProtocol, ratio: f64) -> Result<f64> {
    let config = template.with_stark_ratio(ratio)?;
    let schedule = match protocol {
        SweepProtocol::WState => prepare_w_state(&config)?,
        SweepProtocol::Ladder(k) => dicke_ladder(&config, k)?,
    };
    let options = RunOptions {
        model: Some(FidelityModel::FullSymmetric),
        ..RunOptions::default()
    };
    let result = run_schedule(&schedule, &options)?;
    Ok((1.0 - result.fidelity_vs_ideal).clamp(0.0, 1.0))
}

/// Runs `protocol` in the symmetric model for every `Ω₀/|Ω_eff|` in
/// `ratios` (in parallel) and records the infidelity against the ideal
/// two-level output, relative phases included.
pub fn selectivity_sweep(template: &IonChainConfig, protocol: SweepProtocol, ratios: &[f64]) -> Result<SweepResult> {
    validate_ratios(ratios)?;
    let points: Vec<(f64, f64)> = ratios
        .par_iter()
        .map(|&ratio| {
            let start = Instant::now();
            let inf = sweep_point(template, protocol, ratio).map_err(|e| Error::AtRatio {
                ratio,
                source: Box::new(e),
            })?;
            Ok((inf, start.elapsed().as_secs_f64() * 1e3))
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        protocol,
        axis: ratios.to_vec(),
        infidelity: points.iter().map(|p| p.0).collect(),
        wall_ms: points.iter().map(|p| p.1).collect(),
        config: template.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Timescale {
    /// `π / (2√N Ω_eff)` in seconds.
    pub pulse_time: f64,
    pub fits_pulse_budget: bool,
    pub fits_decoherence_budget: bool,
}

/// Duration of the W-state `π` pulse for `omega_eff_hz` (angular units, s⁻¹).
pub fn timescale_check(omega_eff_hz: f64, n_ions: usize) -> Result<Timescale> {
    if !(omega_eff_hz > 0.0 && omega_eff_hz.is_finite()) {
        return Err(Error::Parameter(format!("omega_eff must be positive, got {omega_eff_hz}")));
    }
    if n_ions == 0 {
        return Err(Error::Parameter("N must be at least 1".into()));
    }
    let t = std::f64::consts::PI / (2.0 * (n_ions as f64).sqrt() * omega_eff_hz);
    Ok(Timescale {
        pulse_time: t,
        fits_pulse_budget: t <= PULSE_BUDGET_S,
        fits_decoherence_budget: t <= DECOHERENCE_BUDGET_S,
    })
}
