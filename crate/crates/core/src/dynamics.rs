//! Time evolution, frame changes and ancilla measurement.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{CMatrix, CVector, OperatorMatrix, StateVector};
use crate::error::{Error, Result};

pub const DEFAULT_NORM_TOL: f64 = 1e-9;
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-8;
/// Name of the generator behind [`measure_ancilla`], recorded in run metadata.
pub const RNG_NAME: &str = "ChaCha8Rng";

const MINUS_I: Complex64 = Complex64 { re: 0.0, im: -1.0 };

/// Time-indexed Hamiltonian builder for [`evolve_timedep`].
pub trait TimeDependentHamiltonian {
    fn at(&self, t: f64) -> Result<OperatorMatrix>;
}

/// Adapts a closure into a [`TimeDependentHamiltonian`].
pub struct FnHamiltonian<F>(pub F);

impl<F> TimeDependentHamiltonian for FnHamiltonian<F>
where
    F: Fn(f64) -> Result<OperatorMatrix>,
{
    fn at(&self, t: f64) -> Result<OperatorMatrix> {
        (self.0)(t)
    }
}

/// A static Hamiltonian seen as a constant builder.
impl TimeDependentHamiltonian for OperatorMatrix {
    fn at(&self, _t: f64) -> Result<OperatorMatrix> {
        Ok(self.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EvolutionMode {
    StaticExpm,
    TimeDependentIntegrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolutionSpec {
    pub mode: EvolutionMode,
    pub dt: f64,
    pub norm_tol: f64,
    pub truncation_tol: f64,
}

impl EvolutionSpec {
    pub fn static_expm() -> Self {
        Self {
            mode: EvolutionMode::StaticExpm,
            dt: 1e-3,
            norm_tol: DEFAULT_NORM_TOL,
            truncation_tol: DEFAULT_TRUNCATION_TOL,
        }
    }

    pub fn integrate(dt: f64) -> Result<Self> {
        let spec = Self {
            mode: EvolutionMode::TimeDependentIntegrate,
            dt,
            norm_tol: DEFAULT_NORM_TOL,
            truncation_tol: DEFAULT_TRUNCATION_TOL,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Parameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.norm_tol > 0.0 && self.norm_tol < 1.0) {
            return Err(Error::Parameter(format!("norm_tol must lie in (0, 1), got {}", self.norm_tol)));
        }
        if self.truncation_tol.is_nan() || self.truncation_tol <= 0.0 {
            return Err(Error::Parameter(format!(
                "truncation_tol must be positive, got {}",
                self.truncation_tol
            )));
        }
        Ok(())
    }
}

impl Default for EvolutionSpec {
    fn default() -> Self {
        Self::static_expm()
    }
}

/// Spectral decomposition of a static Hamiltonian, reusable across times.
#[derive(Debug, Clone)]
pub struct Propagator {
    hamiltonian: OperatorMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl Propagator {
    pub fn new(h: &OperatorMatrix) -> Result<Self> {
        let dev = h.max_hermitian_deviation();
        if !h.is_hermitian() {
            return Err(Error::NotHermitian(dev));
        }
        let eig = SymmetricEigen::new(h.entries().clone());
        Ok(Self {
            hamiltonian: h.clone(),
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `exp(-iHt)` as a dense matrix.
    pub fn matrix(&self, t: f64) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, e) in self.eigenvalues.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -e * t);
            let mut column = scaled.column_mut(j);
            column *= phase;
        }
        scaled * self.eigenvectors.adjoint()
    }

    pub fn apply(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        self.hamiltonian.basis().require_same(psi.basis())?;
        let mut coeffs = self.eigenvectors.adjoint() * psi.amplitudes();
        for (c, e) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= Complex64::from_polar(1.0, -e * t);
        }
        StateVector::new(*psi.basis(), &self.eigenvectors * coeffs)
    }
}

/// `exp(-iHt)ψ` by Hermitian eigendecomposition.
pub fn evolve_static(h: &OperatorMatrix, psi: &StateVector, t: f64) -> Result<StateVector> {
    h.basis().require_same(psi.basis())?;
    if t == 0.0 {
        if !h.is_hermitian() {
            return Err(Error::NotHermitian(h.max_hermitian_deviation()));
        }
        return Ok(psi.clone());
    }
    Propagator::new(h)?.apply(psi, t)
}

/// Samples `exp(-iHt)ψ` at every entry of `times`, diagonalizing once.
pub fn evolve_static_trace(h: &OperatorMatrix, psi: &StateVector, times: &[f64]) -> Result<Vec<StateVector>> {
    let prop = Propagator::new(h)?;
    times.iter().map(|&t| prop.apply(psi, t)).collect()
}

/// Number of fixed RK4 steps covering `span`: `span/dt` when it is an
/// integer up to rounding, otherwise the next integer.
pub fn step_count(span: f64, dt: f64) -> usize {
    if span <= 0.0 {
        return 0;
    }
    let r = span / dt;
    let rounded = r.round();
    if (r - rounded).abs() <= 1e-9 * r.max(1.0) {
        rounded.max(1.0) as usize
    } else {
        r.ceil() as usize
    }
}

fn derivative(h: &OperatorMatrix, psi: &CVector) -> CVector {
    (h.entries() * psi) * MINUS_I
}

fn top_fock_population(psi: &StateVector) -> Option<f64> {
    let b = psi.basis();
    if !b.has_fock() || b.n_max < 2 {
        return None;
    }
    let pop = psi
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| b.decompose(*i).2 + 1 >= b.n_max)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    Some(pop)
}

fn rk4_step(h: &dyn TimeDependentHamiltonian, psi: &CVector, t: f64, step: f64) -> Result<CVector> {
    let h0 = h.at(t)?;
    let hm = h.at(t + 0.5 * step)?;
    let h1 = h.at(t + step)?;
    let k1 = derivative(&h0, psi);
    let half = Complex64::new(0.5 * step, 0.0);
    let k2 = derivative(&hm, &(psi + &k1 * half));
    let k3 = derivative(&hm, &(psi + &k2 * half));
    let k4 = derivative(&h1, &(psi + &k3 * Complex64::new(step, 0.0)));
    let two = Complex64::new(2.0, 0.0);
    Ok(psi + (k1 + k2 * two + k3 * two + k4) * Complex64::new(step / 6.0, 0.0))
}

/// Integrates `i dψ/dt = H(t)ψ` from `t0` to `t_final`, invoking `observe`
/// after every step with the current time and state.
///
/// The state is never renormalized. The run fails when the norm drifts by
/// more than `spec.norm_tol`, or when the top two Fock levels hold more
/// than `spec.truncation_tol` (checked only for cutoffs `n_max >= 2`).
pub fn evolve_timedep_observed(
    h: &dyn TimeDependentHamiltonian,
    psi: &StateVector,
    t0: f64,
    t_final: f64,
    spec: &EvolutionSpec,
    mut observe: impl FnMut(f64, &StateVector),
) -> Result<StateVector> {
    spec.validate()?;
    let basis = *psi.basis();
    let probe = h.at(t0)?;
    basis.require_same(probe.basis())?;
    let n0 = psi.norm();
    let steps = step_count(t_final - t0, spec.dt);
    if steps == 0 {
        return Ok(psi.clone());
    }
    let step = (t_final - t0) / steps as f64;
    let mut amps = psi.amplitudes().clone();
    for i in 0..steps {
        let t = t0 + step * i as f64;
        amps = rk4_step(h, &amps, t, step)?;
        let drift = (amps.norm() - n0).abs();
        if drift > spec.norm_tol {
            return Err(Error::NormDrift {
                drift,
                tol: spec.norm_tol,
            });
        }
        let state = StateVector::new(basis, amps.clone())?;
        if let Some(pop) = top_fock_population(&state) {
            if pop > spec.truncation_tol {
                return Err(Error::FockTruncation {
                    population: pop,
                    tol: spec.truncation_tol,
                });
            }
        }
        observe(t0 + step * (i + 1) as f64, &state);
    }
    StateVector::new(basis, amps)
}

/// Fourth-order fixed-step integration from `t = 0` to `t_final`.
pub fn evolve_timedep(
    h: &dyn TimeDependentHamiltonian,
    psi: &StateVector,
    t_final: f64,
    spec: &EvolutionSpec,
) -> Result<StateVector> {
    evolve_timedep_observed(h, psi, 0.0, t_final, spec, |_, _| {})
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FrameDirection {
    /// `ψ_I = exp(+iH₀t) ψ_S`
    ToInteraction,
    /// `ψ_S = exp(-iH₀t) ψ_I`
    FromInteraction,
}

/// Multiplies each amplitude by `exp(±iE t)` for the diagonal `H₀`.
pub fn frame_transform(
    psi: &StateVector,
    h0_diag: &OperatorMatrix,
    t: f64,
    direction: FrameDirection,
) -> Result<StateVector> {
    if !h0_diag.is_diagonal() {
        return Err(Error::Contract(format!(
            "frame generator must be diagonal (largest off-diagonal {:e})",
            h0_diag.max_off_diagonal()
        )));
    }
    h0_diag.basis().require_same(psi.basis())?;
    frame_transform_diagonal(psi, &h0_diag.diagonal_real(), t, direction)
}

pub(crate) fn frame_transform_diagonal(
    psi: &StateVector,
    diag: &[f64],
    t: f64,
    direction: FrameDirection,
) -> Result<StateVector> {
    let sign = match direction {
        FrameDirection::ToInteraction => 1.0,
        FrameDirection::FromInteraction => -1.0,
    };
    let amps = CVector::from_iterator(
        psi.dim(),
        psi.amplitudes()
            .iter()
            .zip(diag)
            .map(|(a, e)| a * Complex64::from_polar(1.0, sign * e * t)),
    );
    StateVector::new(*psi.basis(), amps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AncillaOutcome {
    AncillaExcited,
    AncillaGround,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub outcome: AncillaOutcome,
    /// Born weight of the observed branch.
    pub probability: f64,
    pub post_state: StateVector,
    pub seed_used: u64,
}

/// `(p_excited, p_ground)` of the ancilla factor.
pub fn ancilla_probabilities(psi: &StateVector) -> Result<(f64, f64)> {
    let b = psi.basis();
    if !b.ancilla {
        return Err(Error::InvalidBasis(format!("{b} has no ancilla factor")));
    }
    let half = b.dim() / 2;
    let pops = psi.populations();
    let p_g: f64 = pops[..half].iter().sum();
    let p_e: f64 = pops[half..].iter().sum();
    Ok((p_e, p_g))
}

/// Projective ancilla readout drawn from a `ChaCha8Rng` seeded with `seed`.
pub fn measure_ancilla(psi: &StateVector, seed: u64) -> Result<MeasurementRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut record = measure_ancilla_with(psi, &mut rng, DEFAULT_NORM_TOL)?;
    record.seed_used = seed;
    Ok(record)
}

/// Projective ancilla readout with a caller-owned generator. `seed_used`
/// is left at 0.
pub fn measure_ancilla_with(psi: &StateVector, rng: &mut impl Rng, norm_tol: f64) -> Result<MeasurementRecord> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > norm_tol {
        return Err(Error::Contract(format!("measured state has norm {norm}, expected 1")));
    }
    let (p_e, p_g) = ancilla_probabilities(psi)?;
    let u: f64 = rng.random();
    let excited = u < p_e;
    let (outcome, probability) = if excited {
        (AncillaOutcome::AncillaExcited, p_e)
    } else {
        (AncillaOutcome::AncillaGround, p_g)
    };
    let half = psi.dim() / 2;
    let mut amps = psi.amplitudes().clone();
    for (i, a) in amps.iter_mut().enumerate() {
        if (i >= half) != excited {
            *a = Complex64::new(0.0, 0.0);
        }
    }
    let post = StateVector::new(*psi.basis(), amps.unscale(probability.sqrt()))?;
    Ok(MeasurementRecord {
        outcome,
        probability,
        post_state: post,
        seed_used: 0,
    })
}
