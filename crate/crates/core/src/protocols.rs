//! Pulse schedules, their compilation into executable segments, and the
//! named protocols: W states, the hybrid `W_{N+1}` state, the Dicke ladder,
//! excitation-number discrimination and atomic coherent states.
//!
//! Every selective step is tuned to resonance by compilation: `δ₀` comes
//! from [`resonance_delta0`] for homogeneous chains and from
//! [`inhomogeneous_resonance_shift`] otherwise. Durations follow from the
//! coupling of the addressed doublet, `t = angle / (2|g|)`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{BasisKind, BasisTag, CMatrix, CVector, OperatorMatrix, StateVector};
use crate::config::IonChainConfig;
use crate::dynamics::{
    self, frame_transform_diagonal, measure_ancilla_with, AncillaOutcome, FrameDirection, MeasurementRecord,
    Propagator, DEFAULT_NORM_TOL,
};
use crate::error::{Error, Result};
use crate::hamiltonians::{
    carrier_generator_phased, doublet_coupling, free_diagonal, inhomogeneous_hamiltonian,
    inhomogeneous_resonance_shift, resonance_delta0, sideband_hamiltonian, DoubletTarget, InhomogeneousHamiltonian,
};
use crate::spaces::{build_collective_number_basis, dicke_state, CollectiveNumberBasis, DEFAULT_DROP_TOL};

/// Smallest doublet population that counts as reachable.
pub const REACHABILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FidelityModel {
    /// Ideal rotation inside the addressed doublet.
    TwoLevel,
    /// Stark-compensated Hamiltonian in the symmetric Dicke basis.
    FullSymmetric,
    /// Stark-compensated Hamiltonian on all `2^N` ion states.
    FullRegister,
}

impl FidelityModel {
    pub fn name(&self) -> &'static str {
        match self {
            FidelityModel::TwoLevel => "two-level",
            FidelityModel::FullSymmetric => "symmetric",
            FidelityModel::FullRegister => "full",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "two-level" => Some(FidelityModel::TwoLevel),
            "symmetric" => Some(FidelityModel::FullSymmetric),
            "full" => Some(FidelityModel::FullRegister),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PulseKind {
    SelectiveSideband { target: DoubletTarget },
    /// `exp(iθĴ̃x)` with `θ = rabi_angle`.
    Carrier,
    /// Ancilla red sideband `|n0+1⟩|g⟩_A ↔ |n0⟩|e⟩_A`.
    AncillaRedSideband { n0: usize },
    Measure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseStep {
    pub kind: PulseKind,
    pub rabi_angle: f64,
    pub phase: f64,
    /// `None` defers to the run-wide model (two-level by default).
    pub model: Option<FidelityModel>,
}

impl PulseStep {
    pub fn sideband(target: DoubletTarget, rabi_angle: f64, phase: f64) -> Self {
        Self {
            kind: PulseKind::SelectiveSideband { target },
            rabi_angle,
            phase,
            model: None,
        }
    }

    pub fn carrier(theta: f64, phase: f64) -> Self {
        Self {
            kind: PulseKind::Carrier,
            rabi_angle: theta,
            phase,
            model: None,
        }
    }

    pub fn ancilla_red(n0: usize, rabi_angle: f64, phase: f64) -> Self {
        Self {
            kind: PulseKind::AncillaRedSideband { n0 },
            rabi_angle,
            phase,
            model: None,
        }
    }

    pub fn measure() -> Self {
        Self {
            kind: PulseKind::Measure,
            rabi_angle: 0.0,
            phase: 0.0,
            model: None,
        }
    }

    pub fn with_model(mut self, model: FidelityModel) -> Self {
        self.model = Some(model);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum IonicState {
    Dicke(usize),
    /// Entry `j` is `true` when ion `j` is excited.
    Bits(Vec<bool>),
    /// `Σ_k c_k |D_k⟩`.
    DickeCoefficients(Vec<Complex64>),
    /// Amplitudes over the `2^N` product states.
    Register(Vec<Complex64>),
}

/// Product of a Fock state, an ionic state and (optionally) an ancilla state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSpec {
    pub fock: usize,
    pub ionic: IonicState,
    /// `Some(true)` for `|e⟩_A`; `None` leaves the ancilla in `|g⟩_A`
    /// and, for expectations, sums over it.
    pub ancilla: Option<bool>,
}

impl StateSpec {
    pub fn dicke(fock: usize, k: usize) -> Self {
        Self {
            fock,
            ionic: IonicState::Dicke(k),
            ancilla: None,
        }
    }

    fn needs_register(&self) -> bool {
        matches!(self.ionic, IonicState::Bits(_) | IonicState::Register(_))
    }

    fn ion_vector(&self, config: &IonChainConfig, basis: &BasisTag) -> Result<CVector> {
        let n = config.n_ions();
        let register = basis.kind == BasisKind::FullRegister;
        let v = match &self.ionic {
            IonicState::Dicke(k) => {
                if *k > n {
                    return Err(Error::domain("dicke", *k, format!("0 <= k <= N = {n}")));
                }
                if register {
                    dicke_state(n, *k)?.into_amplitudes()
                } else {
                    unit(n + 1, *k)
                }
            }
            IonicState::Bits(bits) => {
                if bits.len() != n {
                    return Err(Error::Parameter(format!("bit string has {} ions, N = {n}", bits.len())));
                }
                if !register {
                    return Err(Error::InvalidBasis("bit strings need the full register".into()));
                }
                let x = bits.iter().enumerate().filter(|(_, b)| **b).map(|(j, _)| 1usize << j).sum();
                unit(1 << n, x)
            }
            IonicState::DickeCoefficients(c) => {
                if c.len() != n + 1 {
                    return Err(Error::Parameter(format!("{} Dicke coefficients for N = {n}", c.len())));
                }
                if register {
                    let mut v = CVector::zeros(1 << n);
                    for (k, ck) in c.iter().enumerate() {
                        v += dicke_state(n, k)?.amplitudes() * *ck;
                    }
                    v
                } else {
                    CVector::from_column_slice(c)
                }
            }
            IonicState::Register(a) => {
                if a.len() != 1 << n {
                    return Err(Error::Parameter(format!("{} amplitudes for 2^{n} product states", a.len())));
                }
                if !register {
                    return Err(Error::InvalidBasis("register amplitudes need the full register".into()));
                }
                CVector::from_column_slice(a)
            }
        };
        let norm = v.norm();
        if (norm - 1.0).abs() > DEFAULT_NORM_TOL {
            return Err(Error::Parameter(format!("ionic state has norm {norm}, expected 1")));
        }
        Ok(v)
    }

    /// The state in `basis`; the ancilla defaults to `|g⟩_A`.
    pub fn build(&self, config: &IonChainConfig, basis: &BasisTag) -> Result<StateVector> {
        if self.fock > basis.n_max {
            return Err(Error::domain("fock", self.fock, format!("0 <= n <= n_max = {}", basis.n_max)));
        }
        if self.ancilla.is_some() && !basis.ancilla {
            return Err(Error::InvalidBasis("state names an ancilla but the schedule has none".into()));
        }
        let ion = self.ion_vector(config, basis)?;
        let a = usize::from(self.ancilla.unwrap_or(false));
        let mut v = CVector::zeros(basis.dim());
        for (x, amp) in ion.iter().enumerate() {
            v[basis.index(a, x, self.fock)] = *amp;
        }
        StateVector::new(*basis, v)
    }

    /// `|⟨target|ψ⟩|²`, summed over the ancilla when its level is left open.
    pub fn fidelity(&self, config: &IonChainConfig, psi: &StateVector) -> Result<f64> {
        let basis = *psi.basis();
        if self.ancilla.is_some() || !basis.ancilla {
            let target = self.build(config, &basis)?;
            return Ok(target.inner(psi)?.norm_sqr());
        }
        let mut total = 0.0;
        for excited in [false, true] {
            let spec = StateSpec {
                ancilla: Some(excited),
                ..self.clone()
            };
            total += spec.build(config, &basis)?.inner(psi)?.norm_sqr();
        }
        Ok(total)
    }
}

fn unit(dim: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[i] = Complex64::new(1.0, 0.0);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseSchedule {
    pub config: IonChainConfig,
    pub initial: StateSpec,
    pub steps: Vec<PulseStep>,
    pub seed: u64,
    /// Declared target states, reported as fidelities after a run.
    pub expect: Vec<StateSpec>,
    /// Reject selective steps whose doublet is empty in the ideal run.
    /// Discrimination turns this off because a zero weight is a valid input.
    pub require_reachable: bool,
}

impl PulseSchedule {
    pub fn new(config: IonChainConfig, initial: StateSpec) -> Self {
        Self {
            config,
            initial,
            steps: Vec::new(),
            seed: 0,
            expect: Vec::new(),
            require_reachable: true,
        }
    }

    pub fn step(mut self, step: PulseStep) -> Self {
        self.steps.push(step);
        self
    }

    pub fn expecting(mut self, spec: StateSpec) -> Self {
        self.expect.push(spec);
        self
    }

    pub fn has_ancilla(&self) -> bool {
        self.steps
            .iter()
            .any(|s| matches!(s.kind, PulseKind::AncillaRedSideband { .. } | PulseKind::Measure))
            || self.initial.ancilla.is_some()
            || self.expect.iter().any(|e| e.ancilla.is_some())
    }
}

/// How interaction-picture phases are handled across segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum FrameMode {
    /// Free-evolution phases accumulate over the whole schedule.
    #[default]
    Carry,
    /// Each segment starts with the frame aligned to the lab frame.
    Reset,
}

impl FrameMode {
    pub fn name(&self) -> &'static str {
        match self {
            FrameMode::Carry => "carry",
            FrameMode::Reset => "reset",
        }
    }
}

#[derive(Debug, Clone)]
pub enum SegmentAction {
    /// Rotation `exp(-iGt)` inside each `(lower, upper)` pair; identity elsewhere.
    Doublet { generator: CMatrix, pairs: Vec<(CVector, CVector)> },
    /// `exp(-iHt)`, viewed in the interaction picture of `frame` when given.
    Static {
        hamiltonian: OperatorMatrix,
        frame: Option<Vec<f64>>,
    },
    MeasureAncilla,
}

#[derive(Debug, Clone)]
pub struct Segment {
    pub step: usize,
    pub model: FidelityModel,
    pub duration: f64,
    /// Per-ion retuning in effect during the segment.
    pub delta0: Option<Vec<f64>>,
    pub action: SegmentAction,
}

#[derive(Debug, Clone)]
pub struct CompiledSchedule {
    pub basis: BasisTag,
    pub initial: StateVector,
    pub segments: Vec<Segment>,
    pub seed: u64,
    /// Run-wide model used for steps without their own.
    pub default_model: FidelityModel,
    ideal: Vec<Segment>,
}

impl CompiledSchedule {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// The same schedule executed with ideal two-level steps.
    pub fn ideal_segments(&self) -> &[Segment] {
        &self.ideal
    }
}

struct DoubletData {
    coupling: Complex64,
    lower: (usize, CVector),
    upper: (usize, CVector),
    step_config: IonChainConfig,
}

struct Compiler<'a> {
    schedule: &'a PulseSchedule,
    basis: BasisTag,
    homogeneous: bool,
    collective: Option<(CollectiveNumberBasis, InhomogeneousHamiltonian)>,
}

fn resolve_model(step: &PulseStep, default: FidelityModel, force: bool) -> FidelityModel {
    if force {
        default
    } else {
        step.model.unwrap_or(default)
    }
}

impl<'a> Compiler<'a> {
    fn new(schedule: &'a PulseSchedule, models: &[FidelityModel]) -> Result<Self> {
        let config = &schedule.config;
        let homogeneous = config.has_homogeneous_couplings();
        let register = !homogeneous
            || schedule.initial.needs_register()
            || schedule.expect.iter().any(StateSpec::needs_register)
            || models.contains(&FidelityModel::FullRegister);
        if !homogeneous && models.contains(&FidelityModel::FullSymmetric) {
            return Err(Error::InvalidBasis(
                "the symmetric model needs homogeneous couplings; use model=full".into(),
            ));
        }
        let mut basis = if register {
            BasisTag::full_register(config.n_ions(), config.n_max())
        } else {
            BasisTag::dicke_fock(config.n_ions(), config.n_max())
        };
        if schedule.has_ancilla() {
            basis = basis.with_ancilla();
        }
        let collective = if homogeneous {
            None
        } else {
            let base = config.with_uniform_delta0(0.0);
            let cnb = build_collective_number_basis(&base, config.n_ions(), DEFAULT_DROP_TOL)?;
            let h = inhomogeneous_hamiltonian(&base, &cnb)?;
            Some((cnb, h))
        };
        Ok(Self {
            schedule,
            basis,
            homogeneous,
            collective,
        })
    }

    fn embed_ion(&self, ancilla: usize, ion: &CVector, fock: usize) -> CVector {
        let mut v = CVector::zeros(self.basis.dim());
        for (x, a) in ion.iter().enumerate() {
            v[self.basis.index(ancilla, x, fock)] = *a;
        }
        v
    }

    fn doublet(&self, index: usize, target: &DoubletTarget, phase: f64) -> Result<DoubletData> {
        let config = &self.schedule.config;
        let n = config.n_ions();
        target.validate(n, config.n_max())?;
        let (fock_lo, k_lo) = target.ion_lower();
        let (fock_hi, k_hi) = target.ion_upper();
        let laser = Complex64::from_polar(1.0, -phase);
        if self.homogeneous {
            if target.branch_index() != 0 {
                return Err(Error::domain("branch", target.branch_index(), "homogeneous chains have one branch"));
            }
            let ion = |k: usize| -> Result<CVector> {
                if self.basis.kind == BasisKind::FullRegister {
                    Ok(dicke_state(n, k)?.into_amplitudes())
                } else {
                    Ok(unit(n + 1, k))
                }
            };
            let coupling = doublet_coupling(config, target)? * laser;
            let step_config = config.with_uniform_delta0(resonance_delta0(target, n));
            Ok(DoubletData {
                coupling,
                lower: (fock_lo, ion(k_lo)?),
                upper: (fock_hi, ion(k_hi)?),
                step_config,
            })
        } else {
            let (cnb, h) = self.collective.as_ref().ok_or_else(|| {
                Error::Consistency("collective basis missing for an inhomogeneous chain".into())
            })?;
            let branch = target.branch_index();
            let member = |k: usize| {
                cnb.get(k, branch).ok_or_else(|| Error::Unreachable {
                    step: index,
                    reason: format!("level k = {k} has no branch {branch}"),
                })
            };
            let lo = member(k_lo)?;
            let hi = member(k_hi)?;
            let g = h.coupling(target.k0, branch).ok_or_else(|| Error::Unreachable {
                step: index,
                reason: format!("no coupling between branches {branch} of levels {k_lo} and {k_hi}"),
            })?;
            let base = config.with_uniform_delta0(0.0);
            let shift = inhomogeneous_resonance_shift(&base, cnb, target)?;
            Ok(DoubletData {
                coupling: g * ((target.n0 + 1) as f64).sqrt() * laser,
                lower: (fock_lo, lo.state.amplitudes().clone()),
                upper: (fock_hi, hi.state.amplitudes().clone()),
                step_config: base.shifted_delta0(shift),
            })
        }
    }

    fn duration(index: usize, angle: f64, coupling: f64) -> Result<f64> {
        let t = angle / (2.0 * coupling);
        if !t.is_finite() {
            return Err(Error::Unreachable {
                step: index,
                reason: "the addressed transition has zero coupling, so the pulse duration overflows".into(),
            });
        }
        Ok(t)
    }

    fn two_level_generator(g: Complex64) -> CMatrix {
        let mut m = CMatrix::zeros(2, 2);
        m[(1, 0)] = g;
        m[(0, 1)] = g.conj();
        m
    }

    fn segment(&self, index: usize, step: &PulseStep, model: FidelityModel) -> Result<Segment> {
        let config = &self.schedule.config;
        if !(step.rabi_angle >= 0.0 && step.rabi_angle.is_finite()) {
            return Err(Error::Parameter(format!(
                "step {index}: rabi angle must be finite and non-negative, got {}",
                step.rabi_angle
            )));
        }
        let ancillas = self.basis.ancilla_dim();
        match step.kind {
            PulseKind::SelectiveSideband { target } => {
                let d = self.doublet(index, &target, step.phase)?;
                let duration = Self::duration(index, step.rabi_angle, d.coupling.norm())?;
                let delta0 = Some(d.step_config.delta0().to_vec());
                let action = match model {
                    FidelityModel::TwoLevel => SegmentAction::Doublet {
                        generator: Self::two_level_generator(d.coupling),
                        pairs: (0..ancillas)
                            .map(|a| {
                                (
                                    self.embed_ion(a, &d.lower.1, d.lower.0),
                                    self.embed_ion(a, &d.upper.1, d.upper.0),
                                )
                            })
                            .collect(),
                    },
                    FidelityModel::FullSymmetric | FidelityModel::FullRegister => {
                        let h = sideband_hamiltonian(&d.step_config, &self.basis, target.sideband, step.phase)?;
                        let frame = free_diagonal(&d.step_config, &self.basis)?;
                        SegmentAction::Static {
                            hamiltonian: h,
                            frame: Some(frame),
                        }
                    }
                };
                Ok(Segment {
                    step: index,
                    model,
                    duration,
                    delta0,
                    action,
                })
            }
            PulseKind::Carrier => {
                let jx = carrier_generator_phased(config, &self.basis, step.phase)?;
                let h = OperatorMatrix::hermitian(self.basis, -jx.into_entries())?;
                Ok(Segment {
                    step: index,
                    model,
                    duration: step.rabi_angle,
                    delta0: None,
                    action: SegmentAction::Static { hamiltonian: h, frame: None },
                })
            }
            PulseKind::AncillaRedSideband { n0 } => {
                if n0 + 1 > self.basis.n_max {
                    return Err(Error::domain("n0", n0, format!("n0 exceeds n_max-1 = {}", self.basis.n_max as i64 - 1)));
                }
                let g_a = config.mean_coupling();
                let g = Complex64::from_polar(g_a, -step.phase);
                let duration = Self::duration(index, step.rabi_angle, g_a * ((n0 + 1) as f64).sqrt())?;
                let action = match model {
                    FidelityModel::TwoLevel => SegmentAction::Doublet {
                        generator: Self::two_level_generator(g * ((n0 + 1) as f64).sqrt()),
                        pairs: (0..self.basis.ion_dim())
                            .map(|x| {
                                (
                                    unit(self.basis.dim(), self.basis.index(0, x, n0 + 1)),
                                    unit(self.basis.dim(), self.basis.index(1, x, n0)),
                                )
                            })
                            .collect(),
                    },
                    _ => SegmentAction::Static {
                        hamiltonian: ancilla_red_hamiltonian(&self.basis, g)?,
                        frame: None,
                    },
                };
                Ok(Segment {
                    step: index,
                    model,
                    duration,
                    delta0: None,
                    action,
                })
            }
            PulseKind::Measure => Ok(Segment {
                step: index,
                model,
                duration: 0.0,
                delta0: None,
                action: SegmentAction::MeasureAncilla,
            }),
        }
    }
}

/// `g â σ̂_A⁺ + h.c.` on a basis with an ancilla factor.
pub fn ancilla_red_hamiltonian(basis: &BasisTag, g: Complex64) -> Result<OperatorMatrix> {
    if !basis.ancilla {
        return Err(Error::InvalidBasis(format!("{basis} has no ancilla")));
    }
    let mut m = CMatrix::zeros(basis.dim(), basis.dim());
    for x in 0..basis.ion_dim() {
        for n in 0..basis.n_max {
            let v = g * ((n + 1) as f64).sqrt();
            let (e, gr) = (basis.index(1, x, n), basis.index(0, x, n + 1));
            m[(e, gr)] = v;
            m[(gr, e)] = v.conj();
        }
    }
    OperatorMatrix::hermitian(*basis, m)
}

/// Compiles with each step's own model, two-level where unset.
pub fn compile_schedule(schedule: &PulseSchedule) -> Result<CompiledSchedule> {
    compile_schedule_with(schedule, None)
}

/// Compiles the schedule; `model_override` replaces every step's model.
///
/// The ideal two-level run is executed as part of compilation to check
/// that every selective step addresses a populated doublet.
pub fn compile_schedule_with(schedule: &PulseSchedule, model_override: Option<FidelityModel>) -> Result<CompiledSchedule> {
    let default = model_override.unwrap_or(FidelityModel::TwoLevel);
    let force = model_override.is_some();
    let models: Vec<FidelityModel> = schedule.steps.iter().map(|s| resolve_model(s, default, force)).collect();
    let compiler = Compiler::new(schedule, &models)?;
    let initial = schedule.initial.build(&schedule.config, &compiler.basis)?;
    let ideal = schedule
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| compiler.segment(i, s, FidelityModel::TwoLevel))
        .collect::<Result<Vec<_>>>()?;
    let segments = if models.iter().all(|m| *m == FidelityModel::TwoLevel) {
        ideal.clone()
    } else {
        schedule
            .steps
            .iter()
            .zip(&models)
            .enumerate()
            .map(|(i, (s, m))| compiler.segment(i, s, *m))
            .collect::<Result<Vec<_>>>()?
    };
    if schedule.require_reachable {
        let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
        run_segments(&initial, &ideal, FrameMode::Carry, &mut rng, true, None)?;
    }
    Ok(CompiledSchedule {
        basis: compiler.basis,
        initial,
        segments,
        seed: schedule.seed,
        default_model: default,
        ideal,
    })
}

/// Population time series with one column per basis state.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trace {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
}

impl Trace {
    fn push(&mut self, t: f64, psi: &StateVector) {
        self.times.push(t);
        self.populations.push(psi.populations());
    }
}

struct Recorder<'a> {
    trace: &'a mut Trace,
    samples: usize,
}

fn doublet_rotation(generator: &CMatrix, t: f64) -> CMatrix {
    let g = generator[(1, 0)];
    let w = g.norm();
    let mut r = CMatrix::identity(2, 2) * Complex64::new((w * t).cos(), 0.0);
    if w > 0.0 {
        r -= generator * Complex64::new(0.0, (w * t).sin() / w);
    }
    r
}

fn apply_doublet(psi: &StateVector, generator: &CMatrix, pairs: &[(CVector, CVector)], t: f64) -> Result<StateVector> {
    let r = doublet_rotation(generator, t);
    let mut amps = psi.amplitudes().clone();
    for (lo, hi) in pairs {
        let c_lo = lo.dotc(psi.amplitudes());
        let c_hi = hi.dotc(psi.amplitudes());
        let n_lo = r[(0, 0)] * c_lo + r[(0, 1)] * c_hi;
        let n_hi = r[(1, 0)] * c_lo + r[(1, 1)] * c_hi;
        amps += lo * (n_lo - c_lo) + hi * (n_hi - c_hi);
    }
    StateVector::new(*psi.basis(), amps)
}

fn doublet_population(psi: &StateVector, pairs: &[(CVector, CVector)]) -> f64 {
    pairs
        .iter()
        .map(|(lo, hi)| lo.dotc(psi.amplitudes()).norm_sqr() + hi.dotc(psi.amplitudes()).norm_sqr())
        .sum()
}

fn check_norm(psi: &StateVector) -> Result<()> {
    let drift = (psi.norm() - 1.0).abs();
    if drift > DEFAULT_NORM_TOL {
        return Err(Error::NormDrift {
            drift,
            tol: DEFAULT_NORM_TOL,
        });
    }
    Ok(())
}

/// State in the reference frame at time `t` into a static segment.
fn static_state(
    prop: &Propagator,
    frame: Option<&[f64]>,
    accumulated: &[f64],
    start_lab: &StateVector,
    start_ref: &StateVector,
    t: f64,
) -> Result<StateVector> {
    match frame {
        None => prop.apply(start_ref, t),
        Some(diag) => {
            let lab = prop.apply(start_lab, t)?;
            let total: Vec<f64> = accumulated.iter().zip(diag).map(|(a, e)| a + e * t).collect();
            frame_transform_diagonal(&lab, &total, 1.0, FrameDirection::ToInteraction)
        }
    }
}

fn run_segments(
    initial: &StateVector,
    segments: &[Segment],
    frame_mode: FrameMode,
    rng: &mut ChaCha8Rng,
    check_reachable: bool,
    mut recorder: Option<Recorder<'_>>,
) -> Result<(StateVector, Vec<MeasurementRecord>)> {
    let mut psi = initial.clone();
    let mut accumulated = vec![0.0; psi.dim()];
    let mut clock = 0.0;
    let mut records = Vec::new();
    if let Some(r) = recorder.as_mut() {
        r.trace.push(0.0, &psi);
    }
    for seg in segments {
        match &seg.action {
            SegmentAction::Doublet { generator, pairs } => {
                if check_reachable
                    && seg.delta0.is_some()
                    && doublet_population(&psi, pairs) <= REACHABILITY_TOL
                {
                    return Err(Error::Unreachable {
                        step: seg.step,
                        reason: "the addressed doublet holds no population in the ideal evolution".into(),
                    });
                }
                if let Some(r) = recorder.as_mut() {
                    for j in 1..r.samples {
                        let t = seg.duration * j as f64 / r.samples as f64;
                        r.trace.push(clock + t, &apply_doublet(&psi, generator, pairs, t)?);
                    }
                }
                psi = apply_doublet(&psi, generator, pairs, seg.duration)?;
            }
            SegmentAction::Static { hamiltonian, frame } => {
                if frame_mode == FrameMode::Reset {
                    accumulated.iter_mut().for_each(|a| *a = 0.0);
                }
                let prop = Propagator::new(hamiltonian)?;
                let lab = frame_transform_diagonal(&psi, &accumulated, 1.0, FrameDirection::FromInteraction)?;
                let frame = frame.as_deref();
                if let Some(r) = recorder.as_mut() {
                    for j in 1..r.samples {
                        let t = seg.duration * j as f64 / r.samples as f64;
                        r.trace.push(clock + t, &static_state(&prop, frame, &accumulated, &lab, &psi, t)?);
                    }
                }
                psi = static_state(&prop, frame, &accumulated, &lab, &psi, seg.duration)?;
                if let Some(diag) = frame {
                    for (a, e) in accumulated.iter_mut().zip(diag) {
                        *a += e * seg.duration;
                    }
                }
            }
            SegmentAction::MeasureAncilla => {
                let mut record = measure_ancilla_with(&psi, rng, DEFAULT_NORM_TOL)?;
                psi = record.post_state.clone();
                record.seed_used = 0;
                records.push(record);
            }
        }
        check_norm(&psi)?;
        clock += seg.duration;
        if let Some(r) = recorder.as_mut() {
            r.trace.push(clock, &psi);
        }
    }
    Ok((psi, records))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunOptions {
    pub model: Option<FidelityModel>,
    pub frame: FrameMode,
    /// Trace samples per segment; 0 disables the trace.
    pub trace_samples: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            model: None,
            frame: FrameMode::Carry,
            trace_samples: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub basis: BasisTag,
    pub final_state: StateVector,
    pub ideal_state: StateVector,
    /// `|⟨ideal|final⟩|²`.
    pub fidelity_vs_ideal: f64,
    /// Fidelity against each declared expectation, in order.
    pub expectations: Vec<f64>,
    pub measurements: Vec<MeasurementRecord>,
    pub trace: Option<Trace>,
    pub seed: u64,
    pub models: Vec<FidelityModel>,
    pub frame: FrameMode,
    pub total_duration: f64,
}

impl SimulationResult {
    /// First declared expectation, or the ideal-run fidelity if none.
    pub fn headline_fidelity(&self) -> f64 {
        self.expectations.first().copied().unwrap_or(self.fidelity_vs_ideal)
    }
}

/// Executes a compiled schedule. Measurements draw from a `ChaCha8Rng`
/// seeded with the schedule seed; the ideal reference run uses its own
/// generator with the same seed.
pub fn execute(schedule: &PulseSchedule, compiled: &CompiledSchedule, options: &RunOptions) -> Result<SimulationResult> {
    let mut trace = Trace {
        labels: (0..compiled.basis.dim()).map(|i| compiled.basis.label(i)).collect(),
        ..Trace::default()
    };
    let recorder = (options.trace_samples > 0).then_some(Recorder {
        trace: &mut trace,
        samples: options.trace_samples,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(compiled.seed);
    let (final_state, mut measurements) =
        run_segments(&compiled.initial, &compiled.segments, options.frame, &mut rng, false, recorder)?;
    for m in &mut measurements {
        m.seed_used = compiled.seed;
    }
    let mut ideal_rng = ChaCha8Rng::seed_from_u64(compiled.seed);
    let (ideal_state, _) = run_segments(&compiled.initial, &compiled.ideal, options.frame, &mut ideal_rng, false, None)?;
    let fidelity_vs_ideal = ideal_state.inner(&final_state)?.norm_sqr();
    let expectations = schedule
        .expect
        .iter()
        .map(|e| e.fidelity(&schedule.config, &final_state))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationResult {
        basis: compiled.basis,
        final_state,
        ideal_state,
        fidelity_vs_ideal,
        expectations,
        measurements,
        trace: (options.trace_samples > 0).then_some(trace),
        seed: compiled.seed,
        models: compiled.segments.iter().map(|s| s.model).collect(),
        frame: options.frame,
        total_duration: compiled.total_duration(),
    })
}

pub fn run_schedule(schedule: &PulseSchedule, options: &RunOptions) -> Result<SimulationResult> {
    let compiled = compile_schedule_with(schedule, options.model)?;
    execute(schedule, &compiled, options)
}

fn require_protocol_config(config: &IonChainConfig) -> Result<()> {
    config.require_homogeneous_couplings()?;
    if config.n_max() < 2 {
        return Err(Error::Parameter("protocols need n_max >= 2".into()));
    }
    Ok(())
}

/// Blue `π` pulse on `{|0⟩|D₀⟩, |1⟩|D₁⟩}` with `φ = π/2`; ideal output `|1⟩|W_N⟩`.
pub fn prepare_w_state(config: &IonChainConfig) -> Result<PulseSchedule> {
    require_protocol_config(config)?;
    Ok(PulseSchedule::new(config.clone(), StateSpec::dicke(0, 0))
        .step(PulseStep::sideband(DoubletTarget::blue(0, 0), PI, FRAC_PI_2))
        .expecting(StateSpec::dicke(1, 1)))
}

/// Rabi angle that leaves amplitude `1/√(N+1)` on `|0⟩|D₀⟩`.
pub fn w_n_plus_1_angle(n_ions: usize) -> f64 {
    2.0 * (1.0 / ((n_ions + 1) as f64).sqrt()).acos()
}

/// Partial blue pulse producing the `(N+1)`-qubit W state, with the phonon
/// doublet `{|0⟩, |1⟩}` acting as the extra qubit.
pub fn prepare_w_n_plus_1(config: &IonChainConfig) -> Result<PulseSchedule> {
    require_protocol_config(config)?;
    Ok(PulseSchedule::new(config.clone(), StateSpec::dicke(0, 0)).step(PulseStep::sideband(
        DoubletTarget::blue(0, 0),
        w_n_plus_1_angle(config.n_ions()),
        FRAC_PI_2,
    )))
}

/// Alternating blue and red `π` pulses from `|0⟩|D₀⟩` to `|k mod 2⟩|D_k⟩`.
pub fn dicke_ladder(config: &IonChainConfig, k_target: usize) -> Result<PulseSchedule> {
    require_protocol_config(config)?;
    let n = config.n_ions();
    if k_target > n {
        return Err(Error::domain("k_target", k_target, format!("0 <= k_target <= N = {n}")));
    }
    let mut schedule = PulseSchedule::new(config.clone(), StateSpec::dicke(0, 0));
    for k in 0..k_target {
        let target = if k % 2 == 0 {
            DoubletTarget::blue(0, k)
        } else {
            DoubletTarget::red(0, k)
        };
        schedule = schedule.step(PulseStep::sideband(target, PI, FRAC_PI_2));
    }
    Ok(schedule.expecting(StateSpec::dicke(k_target % 2, k_target)))
}

/// Blue `π` pulse on `{|N₀⟩|D_{k₀-1}⟩, |N₀+1⟩|D_{k₀}⟩}`, ancilla red `π`
/// pulse, ancilla readout.
pub fn discrimination_schedule(
    config: &IonChainConfig,
    coeffs: &[Complex64],
    k0: usize,
    n0: usize,
    seed: u64,
) -> Result<PulseSchedule> {
    config.require_homogeneous_couplings()?;
    let n = config.n_ions();
    if k0 == 0 || k0 > n {
        return Err(Error::domain("k0", k0, format!("1 <= k0 <= N = {n}")));
    }
    if config.n_max() < n0 + 2 {
        return Err(Error::domain("n0", n0, format!("needs n_max >= n0 + 2, n_max = {}", config.n_max())));
    }
    let mut schedule = PulseSchedule::new(
        config.clone(),
        StateSpec {
            fock: n0,
            ionic: IonicState::DickeCoefficients(coeffs.to_vec()),
            ancilla: None,
        },
    )
    .step(PulseStep::sideband(DoubletTarget::blue(n0, k0 - 1), PI, FRAC_PI_2))
    .step(PulseStep::ancilla_red(n0, PI, FRAC_PI_2))
    .step(PulseStep::measure());
    schedule.seed = seed;
    schedule.require_reachable = false;
    Ok(schedule)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discrimination {
    pub record: MeasurementRecord,
    pub result: SimulationResult,
}

pub fn discriminate_excitation(
    config: &IonChainConfig,
    coeffs: &[Complex64],
    k0: usize,
    n0: usize,
    seed: u64,
    model: Option<FidelityModel>,
) -> Result<Discrimination> {
    let schedule = discrimination_schedule(config, coeffs, k0, n0, seed)?;
    let result = run_schedule(
        &schedule,
        &RunOptions {
            model,
            ..RunOptions::default()
        },
    )?;
    let record = result
        .measurements
        .first()
        .cloned()
        .ok_or_else(|| Error::Consistency("discrimination produced no measurement".into()))?;
    Ok(Discrimination { record, result })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscriminationStats {
    pub trials: u64,
    pub excited: u64,
    pub frequency: f64,
    /// Born probability of `AncillaExcited` in the simulated state.
    pub probability: f64,
    pub seed: u64,
}

/// Repeats the readout `trials` times on the same pre-measurement state,
/// drawing every outcome from one `ChaCha8Rng` seeded with `seed`.
pub fn discrimination_trials(
    config: &IonChainConfig,
    coeffs: &[Complex64],
    k0: usize,
    n0: usize,
    model: Option<FidelityModel>,
    trials: u64,
    seed: u64,
) -> Result<DiscriminationStats> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }
    let mut schedule = discrimination_schedule(config, coeffs, k0, n0, seed)?;
    schedule.steps.pop();
    let compiled = compile_schedule_with(&schedule, model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (state, _) = run_segments(&compiled.initial, &compiled.segments, FrameMode::Carry, &mut rng, false, None)?;
    let (p_e, _) = dynamics::ancilla_probabilities(&state)?;
    let mut excited = 0;
    for _ in 0..trials {
        if measure_ancilla_with(&state, &mut rng, DEFAULT_NORM_TOL)?.outcome == AncillaOutcome::AncillaExcited {
            excited += 1;
        }
    }
    Ok(DiscriminationStats {
        trials,
        excited,
        frequency: excited as f64 / trials as f64,
        probability: p_e,
        seed,
    })
}

/// `exp(iθĴ̃x)|g…g⟩` on the ion register (no motional factor).
pub fn atomic_coherent_prep(config: &IonChainConfig, theta: f64) -> Result<StateVector> {
    let basis = BasisTag::ion_register(config.n_ions());
    let jx = carrier_generator_phased(config, &basis, 0.0)?;
    let h = OperatorMatrix::hermitian(basis, -jx.into_entries())?;
    let ground = StateVector::basis_state(basis, 0)?;
    dynamics::evolve_static(&h, &ground, theta)
}

/// `c_k = ⟨D_k|ψ⟩` for an ion-register state.
pub fn dicke_coefficients(psi: &StateVector) -> Result<Vec<Complex64>> {
    let b = psi.basis();
    if b.kind != BasisKind::FullRegister || b.has_fock() || b.ancilla {
        return Err(Error::InvalidBasis(format!("expected an ion register, got {b}")));
    }
    (0..=b.n_ions)
        .map(|k| Ok(dicke_state(b.n_ions, k)?.amplitudes().dotc(psi.amplitudes())))
        .collect()
}
