//! Hamiltonian builders and resonance tuning.
//!
//! Sign convention: the free part is `H₀ = -Δ̂_c = Σⱼ Ω₀ʲ (n̂ - δ₀ʲ)|gⱼ⟩⟨gⱼ|`,
//! where `Δ̂_c` is the motion-dependent Stark shift after the constant
//! per-ion offsets have been replaced by the retuning `δ₀ʲ`. With this sign
//! the interaction picture of a blue sideband carries the phase
//! `exp(iΩ₀(-n + N - 1 - k + δ₀)t)` on `|n+1⟩|D_{k+1}⟩⟨n|⟨D_k|`, and the
//! doublet `{|N₀⟩|D_{k₀}⟩, |N₀+1⟩|D_{k₀+1}⟩}` is resonant at
//! `δ₀ = k₀ + N₀ - N + 1`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, BasisTag, CMatrix, OperatorMatrix};
use crate::config::IonChainConfig;
use crate::dynamics::TimeDependentHamiltonian;
use crate::error::{Error, Result};
use crate::spaces::{
    self, check_basis_ions, dicke_ladder_coeff, embed, raising_ion_part, CollectiveNumberBasis,
};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sideband {
    /// `â† Ĵ̃⁺ + h.c.`: raises ions and phonon together.
    Blue,
    /// `â Ĵ̃⁺ + h.c.`: raises ions while removing a phonon.
    Red,
}

/// A selected doublet, stored by its lowest Fock number and lowest
/// excitation number.
///
/// - Blue `(n0, k0)`: `|n0⟩|D_k0⟩ ↔ |n0+1⟩|D_{k0+1}⟩`
/// - Red `(n0, k0)`: `|n0+1⟩|D_k0⟩ ↔ |n0⟩|D_{k0+1}⟩`
///
/// `branch` selects `|D̃ℓ_k⟩` on both levels for inhomogeneous chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubletTarget {
    pub n0: usize,
    pub k0: usize,
    pub sideband: Sideband,
    pub branch: Option<usize>,
}

impl DoubletTarget {
    pub fn blue(n0: usize, k0: usize) -> Self {
        Self {
            n0,
            k0,
            sideband: Sideband::Blue,
            branch: None,
        }
    }

    pub fn red(n0: usize, k0: usize) -> Self {
        Self {
            n0,
            k0,
            sideband: Sideband::Red,
            branch: None,
        }
    }

    pub fn with_branch(mut self, branch: usize) -> Self {
        self.branch = Some(branch);
        self
    }

    /// Canonical doublet that moves `|fock⟩|D_k⟩` up the ionic ladder.
    pub fn from_initial(sideband: Sideband, fock: usize, k: usize) -> Result<Self> {
        match sideband {
            Sideband::Blue => Ok(Self::blue(fock, k)),
            Sideband::Red if fock == 0 => Err(Error::domain(
                "fock",
                0,
                "a red sideband needs at least one phonon in the initial ket",
            )),
            Sideband::Red => Ok(Self::red(fock - 1, k)),
        }
    }

    /// `(fock, k)` of the member with fewer ionic excitations.
    pub fn ion_lower(&self) -> (usize, usize) {
        match self.sideband {
            Sideband::Blue => (self.n0, self.k0),
            Sideband::Red => (self.n0 + 1, self.k0),
        }
    }

    /// `(fock, k)` of the member with more ionic excitations.
    pub fn ion_upper(&self) -> (usize, usize) {
        match self.sideband {
            Sideband::Blue => (self.n0 + 1, self.k0 + 1),
            Sideband::Red => (self.n0, self.k0 + 1),
        }
    }

    pub fn branch_index(&self) -> usize {
        self.branch.unwrap_or(0)
    }

    pub fn validate(&self, n_ions: usize, n_max: usize) -> Result<()> {
        if self.k0 + 1 > n_ions {
            return Err(Error::domain(
                "k0",
                self.k0,
                format!("k0 exceeds N-1 = {}", n_ions as i64 - 1),
            ));
        }
        if self.n0 + 1 > n_max {
            return Err(Error::domain(
                "n0",
                self.n0,
                format!("n0 exceeds n_max-1 = {}", n_max as i64 - 1),
            ));
        }
        Ok(())
    }

    pub fn basis_tag(&self, n_ions: usize) -> BasisTag {
        BasisTag::two_level(n_ions, self.n0, self.k0, self.sideband)
    }
}

fn require_fock(basis: &BasisTag) -> Result<()> {
    if basis.n_max < 1 {
        return Err(Error::Parameter("n_max must be at least 1".into()));
    }
    Ok(())
}

fn diagonal_operator(basis: BasisTag, diag: impl Fn(usize) -> f64) -> Result<OperatorMatrix> {
    let d = DVector::from_fn(basis.dim(), |i, _| Complex64::new(diag(i), 0.0));
    OperatorMatrix::hermitian(basis, CMatrix::from_diagonal(&d))
}

/// Motion-dependent AC Stark shift
/// `Δ̂ = (1/Δ)Σⱼ[1 - η₁²(2n̂+1)]|Ω₁ⱼ|²|gⱼ⟩⟨gⱼ| + (1/Δ)Σⱼ|Ω₂ⱼ|²|eⱼ⟩⟨eⱼ|`
/// on the full register with the configured Fock cutoff.
pub fn stark_shift_operator(config: &IonChainConfig) -> Result<OperatorMatrix> {
    let basis = BasisTag::full_register(config.n_ions(), config.n_max());
    let eta1 = config.eta1();
    let delta = config.delta();
    let g_weight: Vec<f64> = config.omega1().iter().map(|c| c.norm_sqr() / delta).collect();
    let e_weight: Vec<f64> = config.omega2().iter().map(|c| c.norm_sqr() / delta).collect();
    diagonal_operator(basis, |i| {
        let (_, x, n) = basis.decompose(i);
        let motional = 1.0 - eta1 * eta1 * (2.0 * n as f64 + 1.0);
        (0..config.n_ions())
            .map(|j| {
                if x >> j & 1 == 0 {
                    motional * g_weight[j]
                } else {
                    e_weight[j]
                }
            })
            .sum()
    })
}

/// Laser retuning that turns [`stark_shift_operator`] into
/// [`compensated_stark_operator`]: it removes the constant per-ion offsets
/// and imposes `Ω₀ʲ δ₀ʲ |gⱼ⟩⟨gⱼ|`.
pub fn retuning_operator(config: &IonChainConfig) -> Result<OperatorMatrix> {
    let basis = BasisTag::full_register(config.n_ions(), config.n_max());
    let delta = config.delta();
    let eta1 = config.eta1();
    let constant: f64 = config.omega2().iter().map(|c| c.norm_sqr() / delta).sum();
    let per_ion: Vec<f64> = (0..config.n_ions())
        .map(|j| {
            let b = ((1.0 - eta1 * eta1) * config.omega1()[j].norm_sqr()
                - config.omega2()[j].norm_sqr())
                / delta;
            b - config.omega0(j) * config.delta0()[j]
        })
        .collect();
    diagonal_operator(basis, |i| {
        let (_, x, _) = basis.decompose(i);
        -constant
            - (0..config.n_ions())
                .filter(|j| x >> j & 1 == 0)
                .map(|j| per_ion[j])
                .sum::<f64>()
    })
}

/// `Δ̂_c = -Σⱼ Ω₀ʲ(n̂ - δ₀ʲ)|gⱼ⟩⟨gⱼ|`, the Stark shift after retuning.
pub fn compensated_stark_operator(config: &IonChainConfig) -> Result<OperatorMatrix> {
    let basis = BasisTag::full_register(config.n_ions(), config.n_max());
    let free = free_diagonal(config, &basis)?;
    diagonal_operator(basis, |i| -free[i])
}

/// Diagonal of `H₀ = Σⱼ Ω₀ʲ (n̂ - δ₀ʲ)|gⱼ⟩⟨gⱼ|` in `basis`.
pub fn free_diagonal(config: &IonChainConfig, basis: &BasisTag) -> Result<Vec<f64>> {
    check_basis_ions(config, basis)?;
    let n_ions = config.n_ions();
    match basis.kind {
        BasisKind::FullRegister => {
            let omega0 = config.omega0_all();
            let delta0 = config.delta0();
            Ok((0..basis.dim())
                .map(|i| {
                    let (_, x, n) = basis.decompose(i);
                    (0..n_ions)
                        .filter(|j| x >> j & 1 == 0)
                        .map(|j| omega0[j] * (n as f64 - delta0[j]))
                        .sum()
                })
                .collect())
        }
        BasisKind::DickeFock => {
            let omega0 = config.homogeneous_omega0()?;
            let delta0 = config.delta0()[0];
            Ok((0..basis.dim())
                .map(|i| {
                    let (_, k, n) = basis.decompose(i);
                    omega0 * (n_ions - k) as f64 * (n as f64 - delta0)
                })
                .collect())
        }
        _ => Err(Error::InvalidBasis(format!(
            "free Hamiltonian is built on FullRegister or DickeFock, not {basis}"
        ))),
    }
}

pub fn free_hamiltonian(config: &IonChainConfig, basis: &BasisTag) -> Result<OperatorMatrix> {
    let d = free_diagonal(config, basis)?;
    diagonal_operator(*basis, |i| d[i])
}

/// Sideband coupling `â†Ĵ̃⁺ + h.c.` (blue) or `âĴ̃⁺ + h.c.` (red), with every
/// `Ω_eff^j` multiplied by the laser phase factor `e^{-iφ}`.
pub fn sideband_coupling(
    config: &IonChainConfig,
    basis: &BasisTag,
    sideband: Sideband,
    phase: f64,
) -> Result<OperatorMatrix> {
    require_fock(basis)?;
    let weight = Complex64::from_polar(1.0, -phase);
    let ion = raising_ion_part(config, basis, weight)?;
    let fock = match sideband {
        Sideband::Blue => spaces::creation(basis.n_max),
        Sideband::Red => spaces::annihilation(basis.n_max),
    };
    let up = embed(basis, &ion, &fock);
    let m = &up + up.adjoint();
    OperatorMatrix::hermitian(*basis, m)
}

/// `H = H₀ + sideband coupling` in a `FullRegister` or `DickeFock` basis.
pub fn sideband_hamiltonian(
    config: &IonChainConfig,
    basis: &BasisTag,
    sideband: Sideband,
    phase: f64,
) -> Result<OperatorMatrix> {
    let coupling = sideband_coupling(config, basis, sideband, phase)?;
    let free = free_diagonal(config, basis)?;
    let mut m = coupling.into_entries();
    for (i, e) in free.iter().enumerate() {
        m[(i, i)] += e;
    }
    OperatorMatrix::hermitian(*basis, m)
}

/// Stark-compensated blue-sideband Hamiltonian on the full register,
/// `H = Σⱼ Ω₀ʲ(n̂ - δ₀ʲ)|gⱼ⟩⟨gⱼ| + â†Ĵ̃⁺ + âĴ̃⁻` (`ħ = 1`).
pub fn effective_hamiltonian(config: &IonChainConfig) -> Result<OperatorMatrix> {
    let basis = BasisTag::full_register(config.n_ions(), config.n_max());
    sideband_hamiltonian(config, &basis, Sideband::Blue, 0.0)
}

/// [`effective_hamiltonian`] written in the symmetric Dicke basis.
pub fn symmetric_effective_hamiltonian(config: &IonChainConfig) -> Result<OperatorMatrix> {
    let basis = BasisTag::dicke_fock(config.n_ions(), config.n_max());
    sideband_hamiltonian(config, &basis, Sideband::Blue, 0.0)
}

/// Symmetric interaction-picture blue-sideband Hamiltonian at time `t`:
/// `⟨n+1, D_{k+1}|H(t)|n, D_k⟩ = Ω_eff √(n+1) f_k exp(iΩ₀(-n + N - 1 - k + δ₀)t)`.
pub fn symmetric_interaction_hamiltonian(config: &IonChainConfig, t: f64) -> Result<OperatorMatrix> {
    let omega_eff = config.homogeneous_omega_eff()?;
    let omega0 = config.homogeneous_omega0()?;
    let delta0 = config.delta0()[0];
    let n_ions = config.n_ions();
    let basis = BasisTag::dicke_fock(n_ions, config.n_max());
    require_fock(&basis)?;
    let mut m = CMatrix::zeros(basis.dim(), basis.dim());
    for k in 0..n_ions {
        let f = dicke_ladder_coeff(n_ions, k)?;
        for n in 0..basis.n_max {
            let exponent = omega0 * (-(n as f64) + n_ions as f64 - 1.0 - k as f64 + delta0) * t;
            let value = omega_eff * ((n + 1) as f64).sqrt() * f * Complex64::from_polar(1.0, exponent);
            let row = basis.index(0, k + 1, n + 1);
            let col = basis.index(0, k, n);
            m[(row, col)] = value;
            m[(col, row)] = value.conj();
        }
    }
    OperatorMatrix::hermitian(basis, m)
}

/// Interaction picture of a sideband Hamiltonian with respect to its free
/// part, stored as `(row, col, coupling, frequency)` so that the matrix at
/// time `t` is assembled without rebuilding operators.
#[derive(Debug, Clone)]
pub struct InteractionPicture {
    basis: BasisTag,
    terms: Vec<(usize, usize, Complex64, f64)>,
}

impl InteractionPicture {
    pub fn new(config: &IonChainConfig, basis: &BasisTag, sideband: Sideband, phase: f64) -> Result<Self> {
        let coupling = sideband_coupling(config, basis, sideband, phase)?;
        let free = free_diagonal(config, basis)?;
        let m = coupling.entries();
        let mut terms = Vec::new();
        for c in 0..basis.dim() {
            for r in 0..basis.dim() {
                let v = m[(r, c)];
                if v != ZERO {
                    terms.push((r, c, v, free[r] - free[c]));
                }
            }
        }
        Ok(Self { basis: *basis, terms })
    }

    pub fn basis(&self) -> &BasisTag {
        &self.basis
    }

    pub fn matrix_at(&self, t: f64) -> Result<OperatorMatrix> {
        let mut m = CMatrix::zeros(self.basis.dim(), self.basis.dim());
        for &(r, c, v, w) in &self.terms {
            m[(r, c)] = v * Complex64::from_polar(1.0, w * t);
        }
        OperatorMatrix::hermitian(self.basis, m)
    }
}

impl TimeDependentHamiltonian for InteractionPicture {
    fn at(&self, t: f64) -> Result<OperatorMatrix> {
        self.matrix_at(t)
    }
}

/// `δ₀` that makes a homogeneous doublet resonant.
///
/// Blue: `k₀ + N₀ - N + 1`. Red: `N₀ + N - k₀`, from the same free
/// Hamiltonian applied to `|N₀+1⟩|D_{k₀}⟩ ↔ |N₀⟩|D_{k₀+1}⟩`.
pub fn resonance_delta0(target: &DoubletTarget, n_ions: usize) -> f64 {
    let (n0, k0, n) = (target.n0 as f64, target.k0 as f64, n_ions as f64);
    match target.sideband {
        Sideband::Blue => k0 + n0 - n + 1.0,
        Sideband::Red => n0 + n - k0,
    }
}

/// `E_upper - E_lower` of a homogeneous doublet under the free Hamiltonian,
/// the phase frequency of its coupling in the interaction picture.
pub fn doublet_detuning(config: &IonChainConfig, target: &DoubletTarget) -> Result<f64> {
    let omega0 = config.homogeneous_omega0()?;
    let n = config.n_ions() as f64;
    let delta0 = config.delta0()[0];
    let energy = |(fock, k): (usize, usize)| omega0 * (n - k as f64) * (fock as f64 - delta0);
    Ok(energy(target.ion_upper()) - energy(target.ion_lower()))
}

/// Coupling `⟨upper|H|lower⟩` of a homogeneous doublet: `√(N₀+1) f_{k₀} Ω_eff`.
pub fn doublet_coupling(config: &IonChainConfig, target: &DoubletTarget) -> Result<Complex64> {
    let omega = config.homogeneous_omega_eff()?;
    target.validate(config.n_ions(), config.n_max())?;
    let f = dicke_ladder_coeff(config.n_ions(), target.k0)?;
    Ok(omega * ((target.n0 + 1) as f64).sqrt() * f)
}

/// Two-level reduction on `{lower, upper}` with the laser phase factor `e^{-iφ}`.
pub fn two_level_matrix(basis: BasisTag, coupling: Complex64) -> Result<OperatorMatrix> {
    let mut m = CMatrix::zeros(2, 2);
    m[(1, 0)] = coupling;
    m[(0, 1)] = coupling.conj();
    OperatorMatrix::hermitian(basis, m)
}

/// Selective two-level Hamiltonian `√(N₀+1)(Ω_eff f_{k₀} σ̂⁺ + Ω_eff* f_{k₀} σ̂⁻)`.
/// Its Rabi frequency is `2√(N₀+1)|Ω_eff| f_{k₀}`.
pub fn selective_two_level(config: &IonChainConfig, target: &DoubletTarget) -> Result<OperatorMatrix> {
    selective_two_level_phased(config, target, 0.0)
}

pub fn selective_two_level_phased(
    config: &IonChainConfig,
    target: &DoubletTarget,
    phase: f64,
) -> Result<OperatorMatrix> {
    let g = doublet_coupling(config, target)? * Complex64::from_polar(1.0, -phase);
    two_level_matrix(target.basis_tag(config.n_ions()), g)
}

/// Carrier generator `Ĵ̃x = Ĵ̃⁺ + Ĵ̃⁻` (no factor 1/2), identity on Fock and ancilla.
pub fn carrier_generator(config: &IonChainConfig, basis: &BasisTag) -> Result<OperatorMatrix> {
    carrier_generator_phased(config, basis, 0.0)
}

pub fn carrier_generator_phased(
    config: &IonChainConfig,
    basis: &BasisTag,
    phase: f64,
) -> Result<OperatorMatrix> {
    let ion = raising_ion_part(config, basis, Complex64::from_polar(1.0, -phase))?;
    let fock = CMatrix::identity(basis.fock_dim(), basis.fock_dim());
    let up = embed(basis, &ion, &fock);
    OperatorMatrix::hermitian(*basis, &up + up.adjoint())
}

/// `⟨D̃^{to}_{k+1}|Ĵ̃⁺|D̃^{from}_k⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchCoupling {
    pub k: usize,
    pub from_branch: usize,
    pub to_branch: usize,
    pub value: Complex64,
}

/// Hamiltonian in the collective number basis: diagonal Stark part plus
/// `â† Σ Ω̃ |D̃_{k+1}⟩⟨D̃_k| + h.c.`
#[derive(Debug, Clone)]
pub struct InhomogeneousHamiltonian {
    /// `-⟨D̃ℓ_k|Δ̂_c(n)|D̃ℓ_k⟩` on `CollectiveNumberFock`.
    pub diag: OperatorMatrix,
    /// All nonzero raising matrix elements, same-branch and cross-branch.
    pub couplings: Vec<BranchCoupling>,
    /// Largest `|⟨D̃ℓ_k|Δ̂_c(n)|D̃ℓ'_k⟩|` with `ℓ ≠ ℓ'`, dropped by the diagonal form.
    pub stark_mixing: f64,
}

impl InhomogeneousHamiltonian {
    /// Same-branch coupling `Ω̃_eff^{k,ℓ}`.
    pub fn coupling(&self, k: usize, branch: usize) -> Option<Complex64> {
        self.couplings
            .iter()
            .find(|c| c.k == k && c.from_branch == branch && c.to_branch == branch)
            .map(|c| c.value)
    }

    /// Assembles diagonal and couplings into one matrix.
    pub fn to_matrix(&self, basis: &CollectiveNumberBasis) -> Result<OperatorMatrix> {
        let tag = *self.diag.basis();
        let mut m = self.diag.entries().clone();
        for c in &self.couplings {
            let from = basis.position(c.k, c.from_branch).ok_or_else(|| {
                Error::Consistency(format!("no member k={} branch={}", c.k, c.from_branch))
            })?;
            let to = basis.position(c.k + 1, c.to_branch).ok_or_else(|| {
                Error::Consistency(format!("no member k={} branch={}", c.k + 1, c.to_branch))
            })?;
            for n in 0..tag.n_max {
                let amp = c.value * ((n + 1) as f64).sqrt();
                let row = tag.index(0, to, n + 1);
                let col = tag.index(0, from, n);
                m[(row, col)] += amp;
                m[(col, row)] += amp.conj();
            }
        }
        OperatorMatrix::hermitian(tag, m)
    }
}

fn require_same_config(config: &IonChainConfig, basis: &CollectiveNumberBasis) -> Result<()> {
    if basis.config() != config {
        return Err(Error::Consistency(
            "collective number basis was built from a different configuration".into(),
        ));
    }
    Ok(())
}

/// `⟨v|⊗⟨n| Δ̂_c |v⟩⊗|n⟩` for an ion-register state `v`.
fn compensated_expectation(diag: &[f64], basis: &BasisTag, ion: &crate::basis::CVector, fock: usize) -> f64 {
    ion.iter()
        .enumerate()
        .map(|(x, a)| a.norm_sqr() * diag[basis.index(0, x, fock)])
        .sum()
}

/// Builds the collective-number-basis Hamiltonian of an (in)homogeneous chain.
pub fn inhomogeneous_hamiltonian(
    config: &IonChainConfig,
    basis: &CollectiveNumberBasis,
) -> Result<InhomogeneousHamiltonian> {
    require_same_config(config, basis)?;
    let n_max = config.n_max();
    let stark = compensated_stark_operator(config)?;
    let stark_diag = stark.diagonal_real();
    let reg = *stark.basis();
    let tag = basis.basis_tag();
    let members = basis.members();

    let mut diag = vec![0.0; tag.dim()];
    let mut stark_mixing = 0.0f64;
    for (i, m) in members.iter().enumerate() {
        for n in 0..=n_max {
            diag[tag.index(0, i, n)] = -compensated_expectation(&stark_diag, &reg, m.state.amplitudes(), n);
        }
        for (i2, m2) in members.iter().enumerate() {
            if i2 <= i || m2.k != m.k {
                continue;
            }
            for n in 0..=n_max {
                let el: Complex64 = m
                    .state
                    .amplitudes()
                    .iter()
                    .zip(m2.state.amplitudes().iter())
                    .enumerate()
                    .map(|(x, (a, b))| a.conj() * b * stark_diag[reg.index(0, x, n)])
                    .sum();
                stark_mixing = stark_mixing.max(el.norm());
            }
        }
    }

    let raising = spaces::weighted_raising_register(config, ONE)?;
    let scale = config.mean_coupling().max(f64::MIN_POSITIVE);
    let mut couplings = Vec::new();
    for from in members {
        let image = &raising * from.state.amplitudes();
        for to in members.iter().filter(|t| t.k == from.k + 1) {
            let value = to.state.amplitudes().dotc(&image);
            if value.norm() > 1e-14 * scale {
                couplings.push(BranchCoupling {
                    k: from.k,
                    from_branch: from.branch,
                    to_branch: to.branch,
                    value,
                });
            }
        }
    }

    let diag = diagonal_operator(tag, |i| diag[i])?;
    Ok(InhomogeneousHamiltonian {
        diag,
        couplings,
        stark_mixing,
    })
}

fn doublet_members<'a>(
    basis: &'a CollectiveNumberBasis,
    target: &DoubletTarget,
) -> Result<(&'a crate::spaces::CollectiveState, &'a crate::spaces::CollectiveState)> {
    let branch = target.branch_index();
    let (_, k_lo) = target.ion_lower();
    let (_, k_hi) = target.ion_upper();
    let lo = basis
        .get(k_lo, branch)
        .ok_or_else(|| Error::domain("branch", branch, format!("level k = {k_lo} has {} branches", basis.branches(k_lo))))?;
    let hi = basis
        .get(k_hi, branch)
        .ok_or_else(|| Error::domain("branch", branch, format!("level k = {k_hi} has {} branches", basis.branches(k_hi))))?;
    Ok((lo, hi))
}

/// `⟨D̃ℓ_{k₀+1}|Δ̂_c(N_upper)|D̃ℓ_{k₀+1}⟩ - ⟨D̃ℓ_{k₀}|Δ̂_c(N_lower)|D̃ℓ_{k₀}⟩` after adding
/// `shift` to every `δ₀ʲ`.
pub fn resonance_difference(
    config: &IonChainConfig,
    basis: &CollectiveNumberBasis,
    target: &DoubletTarget,
    shift: f64,
) -> Result<f64> {
    require_same_config(config, basis)?;
    target.validate(config.n_ions(), config.n_max())?;
    let (lo, hi) = doublet_members(basis, target)?;
    let shifted = config.shifted_delta0(shift);
    let stark = compensated_stark_operator(&shifted)?;
    let d = stark.diagonal_real();
    let reg = *stark.basis();
    let e_hi = compensated_expectation(&d, &reg, hi.state.amplitudes(), target.ion_upper().0);
    let e_lo = compensated_expectation(&d, &reg, lo.state.amplitudes(), target.ion_lower().0);
    Ok(e_hi - e_lo)
}

/// Uniform retuning `s` (added to every `δ₀ʲ`) that makes the selected
/// collective doublet resonant. The difference is affine in `s`, so the
/// root follows from two evaluations.
pub fn inhomogeneous_resonance_shift(
    config: &IonChainConfig,
    basis: &CollectiveNumberBasis,
    target: &DoubletTarget,
) -> Result<f64> {
    require_same_config(config, basis)?;
    target.validate(config.n_ions(), config.n_max())?;
    let (lo, hi) = doublet_members(basis, target)?;
    let n_ions = config.n_ions();
    let ground_weight = |v: &crate::basis::CVector, j: usize| -> f64 {
        v.iter()
            .enumerate()
            .filter(|(x, _)| x >> j & 1 == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    };
    // d/ds ⟨Δ̂_c⟩ = Σⱼ Ω₀ʲ ⟨|gⱼ⟩⟨gⱼ|⟩
    let slope: f64 = (0..n_ions)
        .map(|j| {
            config.omega0(j)
                * (ground_weight(hi.state.amplitudes(), j) - ground_weight(lo.state.amplitudes(), j))
        })
        .sum();
    let scale: f64 = config.omega0_all().iter().sum();
    if slope.abs() <= 1e-12 * scale {
        return Err(Error::NoSolution(
            "a uniform retuning does not change the doublet detuning".into(),
        ));
    }
    let d0 = resonance_difference(config, basis, target, 0.0)?;
    Ok(-d0 / slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigSpec;
    use crate::spaces::{build_collective_number_basis, dicke_isometry, DEFAULT_DROP_TOL};

    fn homogeneous(n: usize, n_max: usize, ratio: f64) -> IonChainConfig {
        IonChainConfig::dimensionless(n, n_max, ratio).unwrap()
    }

    #[test]
    fn stark_single_ion_vacuum() {
        let c = homogeneous(1, 2, 10.0);
        let s = stark_shift_operator(&c).unwrap();
        let b = s.basis();
        let expected = (1.0 - c.eta1().powi(2)) * c.omega1()[0].norm_sqr() / c.delta();
        let got = s.entries()[(b.index(0, 0, 0), b.index(0, 0, 0))].re;
        assert!((got - expected).abs() < 1e-12 * expected.abs());
        assert_eq!(s.max_off_diagonal(), 0.0);
    }

    #[test]
    fn stark_two_ions_one_phonon() {
        let c = homogeneous(2, 2, 10.0);
        let s = stark_shift_operator(&c).unwrap();
        let b = s.basis();
        let eta = c.eta1();
        let expected = 2.0 * (1.0 - 3.0 * eta * eta) * c.omega1()[0].norm_sqr() / c.delta();
        let got = s.entries()[(b.index(0, 0, 1), b.index(0, 0, 1))].re;
        assert!((got - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn retuning_reconciles_stark_and_compensated() {
        let c = ConfigSpec::new(3, 3).ratio(50.0).inhom(vec![1.0, 1.2, 0.7]).build().unwrap();
        let c = c.with_delta0(vec![0.3, -1.0, 2.0]).unwrap();
        let s = stark_shift_operator(&c).unwrap();
        let r = retuning_operator(&c).unwrap();
        let comp = compensated_stark_operator(&c).unwrap();
        let diff = (s.entries() + r.entries() - comp.entries()).norm();
        assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn effective_zero_couplings() {
        let zero = vec![Complex64::new(0.0, 0.0); 2];
        let c = IonChainConfig::new(zero.clone(), zero, 10.0, 0.1, 0.1, 1.0, 2, vec![0.0; 2]).unwrap();
        let h = effective_hamiltonian(&c).unwrap();
        assert_eq!(h.entries().norm(), 0.0);
    }

    #[test]
    fn effective_doublet_element_and_diagonal() {
        let c = homogeneous(3, 4, 20.0).with_uniform_delta0(0.4);
        let h = effective_hamiltonian(&c).unwrap();
        let b = *h.basis();
        let iso = dicke_isometry(3).unwrap();
        for (n0, k0) in [(0usize, 0usize), (1, 1), (2, 0), (3, 2)] {
            let lo = iso.column(k0).kronecker(&fock_ket(4, n0));
            let hi = iso.column(k0 + 1).kronecker(&fock_ket(4, n0 + 1));
            let el = hi.dotc(&(h.entries() * &lo));
            let expected = ((n0 + 1) as f64).sqrt() * dicke_ladder_coeff(3, k0).unwrap() * c.omega_eff(0);
            assert!((el - expected).norm() < 1e-10);
        }
        for n in 0..=4 {
            let i = b.index(0, 0, n);
            let expected = 3.0 * c.omega0(0) * (n as f64 - 0.4);
            assert!((h.entries()[(i, i)].re - expected).abs() < 1e-9);
        }
    }

    fn fock_ket(n_max: usize, n: usize) -> crate::basis::CVector {
        let mut v = crate::basis::CVector::zeros(n_max + 1);
        v[n] = ONE;
        v
    }

    #[test]
    fn symmetric_restriction_matches_dicke_form() {
        for n in 1..=5 {
            let c = homogeneous(n, 3, 7.0).with_uniform_delta0(-0.5);
            let full = effective_hamiltonian(&c).unwrap();
            let sym = symmetric_effective_hamiltonian(&c).unwrap();
            let iso = dicke_isometry(n).unwrap().kronecker(&CMatrix::identity(4, 4));
            let restricted = iso.adjoint() * full.entries() * &iso;
            assert!((restricted - sym.entries()).norm() < 1e-9, "N = {n}");

            let coupling = sideband_coupling(&c, &BasisTag::dicke_fock(n, 3), Sideband::Blue, 0.0).unwrap();
            let at_zero = symmetric_interaction_hamiltonian(&c, 0.0).unwrap();
            assert!((coupling.entries() - at_zero.entries()).norm() < 1e-12);
        }
    }

    #[test]
    fn interaction_picture_reproduces_explicit_phase() {
        let c = homogeneous(3, 4, 30.0).with_uniform_delta0(-1.3);
        let b = BasisTag::dicke_fock(3, 4);
        let ip = InteractionPicture::new(&c, &b, Sideband::Blue, 0.0).unwrap();
        for t in [0.0, 0.013, 0.4, 2.7] {
            let a = ip.matrix_at(t).unwrap();
            let e = symmetric_interaction_hamiltonian(&c, t).unwrap();
            assert!((a.entries() - e.entries()).norm() < 1e-9);
        }
    }

    #[test]
    fn resonance_values() {
        assert_eq!(resonance_delta0(&DoubletTarget::blue(0, 0), 4), -3.0);
        assert_eq!(resonance_delta0(&DoubletTarget::blue(1, 1), 4), -1.0);
        for n in 1..=6 {
            for k0 in 0..n {
                for n0 in 0..3 {
                    for t in [DoubletTarget::blue(n0, k0), DoubletTarget::red(n0, k0)] {
                        let c = homogeneous(n, 4, 10.0).with_uniform_delta0(resonance_delta0(&t, n));
                        assert!(doublet_detuning(&c, &t).unwrap().abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn resonant_element_is_static() {
        let n = 4;
        for (n0, k0) in [(0, 0), (1, 2), (2, 1)] {
            let t = DoubletTarget::blue(n0, k0);
            let c = homogeneous(n, 4, 25.0).with_uniform_delta0(resonance_delta0(&t, n));
            let b = BasisTag::dicke_fock(n, 4);
            let (row, col) = (b.index(0, k0 + 1, n0 + 1), b.index(0, k0, n0));
            let h0 = symmetric_interaction_hamiltonian(&c, 0.0).unwrap().entries()[(row, col)];
            for i in 0..100 {
                let time = i as f64 / c.omega0(0);
                let h = symmetric_interaction_hamiltonian(&c, time).unwrap();
                assert_eq!(h.entries()[(row, col)], h0);
            }
        }
    }

    #[test]
    fn two_level_reduction() {
        let c = homogeneous(4, 3, 10.0);
        let h = selective_two_level(&c, &DoubletTarget::blue(0, 0)).unwrap();
        assert!((h.entries()[(1, 0)].norm() - 2.0).abs() < 1e-14);
        let t = DoubletTarget::blue(1, 2);
        let h = selective_two_level(&c, &t).unwrap();
        let g = 2f64.sqrt() * dicke_ladder_coeff(4, 2).unwrap();
        let eig = h.entries().clone().symmetric_eigen().eigenvalues;
        let mut e: Vec<f64> = eig.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        assert!((e[0] + g).abs() < 1e-12 && (e[1] - g).abs() < 1e-12);
        assert!(selective_two_level(&c, &DoubletTarget::blue(0, 4)).is_err());
        assert!(selective_two_level(&c, &DoubletTarget::blue(3, 0)).is_err());
    }

    #[test]
    fn carrier_single_ion() {
        let c = ConfigSpec::new(1, 2).ratio(10.0).phase(0.3).build().unwrap();
        let b = BasisTag::full_register(1, 2);
        let jx = carrier_generator(&c, &b).unwrap();
        assert!(jx.is_hermitian());
        let w = c.omega_eff(0);
        let mut ion = CMatrix::zeros(2, 2);
        ion[(1, 0)] = w;
        ion[(0, 1)] = w.conj();
        let expected = ion.kronecker(&CMatrix::identity(3, 3));
        assert!((jx.entries() - expected).norm() < 1e-14);
    }

    #[test]
    fn inhomogeneous_reduces_to_dicke_couplings() {
        let c = homogeneous(4, 2, 10.0);
        let basis = build_collective_number_basis(&c, 4, DEFAULT_DROP_TOL).unwrap();
        let h = inhomogeneous_hamiltonian(&c, &basis).unwrap();
        for k in 0..4 {
            let expected = c.omega_eff(0) * dicke_ladder_coeff(4, k).unwrap();
            let got = h.coupling(k, 0).unwrap();
            // basis vectors are real positive here, so no phase ambiguity
            assert!((got - expected).norm() < 1e-10, "k = {k}");
        }
        assert!(h.stark_mixing < 1e-12);
    }

    #[test]
    fn inhomogeneous_projection_matches_full_matrix() {
        let c = ConfigSpec::new(2, 3).ratio(20.0).inhom(vec![1.0, 1.3]).build().unwrap();
        let c = c.with_uniform_delta0(0.25);
        let basis = build_collective_number_basis(&c, 2, DEFAULT_DROP_TOL).unwrap();
        let h = inhomogeneous_hamiltonian(&c, &basis).unwrap();
        let assembled = h.to_matrix(&basis).unwrap();
        let iso = basis.isometry().kronecker(&CMatrix::identity(4, 4));
        let full = effective_hamiltonian(&c).unwrap();
        let projected = iso.adjoint() * full.entries() * &iso;
        assert!((projected - assembled.entries()).norm() < 1e-10);
        assert!(h.stark_mixing < 1e-10);
    }

    #[test]
    fn inhomogeneous_stark_mixing_reported() {
        let one = Complex64::new(1.0, 0.0);
        let c = IonChainConfig::new(
            vec![one * 100.0, one * 130.0],
            vec![one, one * 1.1],
            1000.0,
            0.1,
            0.1,
            1.0,
            2,
            vec![0.0, 0.0],
        )
        .unwrap();
        let basis = build_collective_number_basis(&c, 2, DEFAULT_DROP_TOL).unwrap();
        let h = inhomogeneous_hamiltonian(&c, &basis).unwrap();
        assert!(h.stark_mixing > 1e-6);
        let assembled = h.to_matrix(&basis).unwrap();
        let iso = basis.isometry().kronecker(&CMatrix::identity(3, 3));
        let projected = iso.adjoint() * effective_hamiltonian(&c).unwrap().entries() * &iso;
        let resid = (projected - assembled.entries()).norm();
        assert!(resid > 1e-6 && resid < 10.0 * h.stark_mixing * 3.0);
    }

    #[test]
    fn zero_eta1_makes_stark_fock_independent() {
        let c = ConfigSpec::new(2, 2).ratio(10.0).inhom(vec![1.0, 1.3]).build().unwrap();
        // η₁ → 0 removes Ω₀ entirely
        let zero_eta = IonChainConfig::new(
            c.omega1().iter().map(|_| Complex64::new(0.0, 0.0)).collect(),
            c.omega2().to_vec(),
            c.delta(),
            c.eta1(),
            c.eta2(),
            c.nu(),
            c.n_max(),
            c.delta0().to_vec(),
        )
        .unwrap();
        let basis = build_collective_number_basis(&zero_eta, 2, DEFAULT_DROP_TOL).unwrap();
        let h = inhomogeneous_hamiltonian(&zero_eta, &basis).unwrap();
        let tag = *h.diag.basis();
        for i in 0..basis.len() {
            let first = h.diag.entries()[(tag.index(0, i, 0), tag.index(0, i, 0))];
            for n in 1..=2 {
                assert_eq!(h.diag.entries()[(tag.index(0, i, n), tag.index(0, i, n))], first);
            }
        }
    }

    #[test]
    fn inhomogeneous_shift_homogeneous_limit() {
        for n in 2..=4 {
            for (n0, k0) in [(0, 0), (1, 1), (0, n - 1)] {
                let base = 0.7;
                let c = homogeneous(n, 3, 15.0).with_uniform_delta0(base);
                let basis = build_collective_number_basis(&c, n, DEFAULT_DROP_TOL).unwrap();
                let t = DoubletTarget::blue(n0, k0);
                let s = inhomogeneous_resonance_shift(&c, &basis, &t).unwrap();
                assert!((base + s - resonance_delta0(&t, n)).abs() < 1e-10);
                let resid = resonance_difference(&c, &basis, &t, s).unwrap();
                assert!(resid.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inhomogeneous_shift_residual_is_affine() {
        let c = ConfigSpec::new(3, 3).ratio(40.0).inhom(vec![1.0, 1.3, 0.8]).build().unwrap();
        let basis = build_collective_number_basis(&c, 3, DEFAULT_DROP_TOL).unwrap();
        let t = DoubletTarget::blue(0, 1);
        let s = inhomogeneous_resonance_shift(&c, &basis, &t).unwrap();
        let r1 = resonance_difference(&c, &basis, &t, s + 0.1).unwrap();
        let r2 = resonance_difference(&c, &basis, &t, s + 0.2).unwrap();
        assert!((r2 - 2.0 * r1).abs() < 1e-9 * r1.abs().max(1.0));
        assert!(r1.abs() > 1e-3);
    }

    #[test]
    fn mismatched_basis_rejected() {
        let c = homogeneous(2, 2, 10.0);
        let other = homogeneous(2, 2, 11.0);
        let basis = build_collective_number_basis(&other, 2, DEFAULT_DROP_TOL).unwrap();
        assert!(matches!(inhomogeneous_hamiltonian(&c, &basis), Err(Error::Consistency(_))));
    }
}
