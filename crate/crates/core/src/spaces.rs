//! Bases and collective operators: the `2^N` ion register, the symmetric
//! Dicke ladder and the collective number states generated by weighted
//! collective operators.

use std::collections::VecDeque;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::basis::{BasisKind, BasisTag, CMatrix, CVector, OperatorMatrix, StateVector};
use crate::config::IonChainConfig;
use crate::error::{Error, Result};

/// Largest register handled by the dense `2^N` representation.
pub const MAX_REGISTER_IONS: usize = 16;

/// Default discard threshold for collective number state candidates.
pub const DEFAULT_DROP_TOL: f64 = 1e-12;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Truncated `â` on `0..=n_max`.
pub fn annihilation(n_max: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n_max + 1, n_max + 1);
    for n in 1..=n_max {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Truncated `â†`; the column of `|n_max⟩` is zero (hard cutoff).
pub fn creation(n_max: usize) -> CMatrix {
    annihilation(n_max).adjoint()
}

pub fn number(n_max: usize) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_fn(n_max + 1, |n, _| Complex64::new(n as f64, 0.0)))
}

/// `σ̂ⱼ† = |eⱼ⟩⟨gⱼ|` on the `2^N` register.
pub fn sigma_raising(n_ions: usize, j: usize) -> CMatrix {
    let dim = 1usize << n_ions;
    let mut m = CMatrix::zeros(dim, dim);
    for x in 0..dim {
        if x >> j & 1 == 0 {
            m[(x | 1 << j, x)] = ONE;
        }
    }
    m
}

/// `|gⱼ⟩⟨gⱼ|` on the `2^N` register.
pub fn ground_projector(n_ions: usize, j: usize) -> CMatrix {
    let dim = 1usize << n_ions;
    CMatrix::from_diagonal(&DVector::from_fn(dim, |x, _| {
        if x >> j & 1 == 0 {
            ONE
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

fn check_register(n_ions: usize) -> Result<()> {
    if n_ions == 0 {
        return Err(Error::Parameter("N must be at least 1".into()));
    }
    if n_ions > MAX_REGISTER_IONS {
        return Err(Error::Parameter(format!(
            "a dense register of N = {n_ions} ions exceeds the supported N <= {MAX_REGISTER_IONS}"
        )));
    }
    Ok(())
}

/// Symmetric Dicke state `|D_k⟩` on the bare ion register.
pub fn dicke_state(n_ions: usize, k: usize) -> Result<StateVector> {
    check_register(n_ions)?;
    if k > n_ions {
        return Err(Error::domain("k", k, format!("0 <= k <= N = {n_ions}")));
    }
    let basis = BasisTag::ion_register(n_ions);
    let members: Vec<usize> = (0..basis.dim())
        .filter(|x| x.count_ones() as usize == k)
        .collect();
    let amp = Complex64::new(1.0 / (members.len() as f64).sqrt(), 0.0);
    let mut v = CVector::zeros(basis.dim());
    for x in members {
        v[x] = amp;
    }
    StateVector::new(basis, v)
}

/// Ladder coefficient `f_k = √((k+1)(N-k))`.
pub fn dicke_ladder_coeff(n_ions: usize, k: usize) -> Result<f64> {
    if k >= n_ions {
        return Err(Error::domain(
            "k",
            k,
            format!("0 <= k <= N-1 = {}", n_ions as i64 - 1),
        ));
    }
    Ok((((k + 1) * (n_ions - k)) as f64).sqrt())
}

/// `2^N × (N+1)` matrix whose columns are `|D_0⟩ … |D_N⟩`.
pub fn dicke_isometry(n_ions: usize) -> Result<CMatrix> {
    check_register(n_ions)?;
    let dim = 1usize << n_ions;
    let mut m = CMatrix::zeros(dim, n_ions + 1);
    for k in 0..=n_ions {
        m.set_column(k, dicke_state(n_ions, k)?.amplitudes());
    }
    Ok(m)
}

/// `Σ_k |D_k⟩⟨D_k|` on the ion register.
pub fn symmetric_projector(n_ions: usize) -> Result<OperatorMatrix> {
    let iso = dicke_isometry(n_ions)?;
    OperatorMatrix::hermitian(BasisTag::ion_register(n_ions), &iso * iso.adjoint())
}

/// Unweighted `Ĵ⁺ = Σ_k f_k |D_{k+1}⟩⟨D_k|` in the Dicke basis.
pub fn dicke_raising(n_ions: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n_ions + 1, n_ions + 1);
    for k in 0..n_ions {
        m[(k + 1, k)] = Complex64::new((((k + 1) * (n_ions - k)) as f64).sqrt(), 0.0);
    }
    m
}

/// `Σⱼ|gⱼ⟩⟨gⱼ| → Σ_k (N-k)|D_k⟩⟨D_k|` in the Dicke basis.
pub fn dicke_ground_count(n_ions: usize) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_fn(n_ions + 1, |k, _| {
        Complex64::new((n_ions - k) as f64, 0.0)
    }))
}

/// `Ĵ̃⁺ = Σⱼ Ω_eff^j σ̂ⱼ†` on the bare register, each coupling multiplied by `weight`.
pub(crate) fn weighted_raising_register(config: &IonChainConfig, weight: Complex64) -> Result<CMatrix> {
    let n = config.n_ions();
    check_register(n)?;
    let dim = 1usize << n;
    let couplings = config.omega_eff_all();
    let mut m = CMatrix::zeros(dim, dim);
    for x in 0..dim {
        for (j, c) in couplings.iter().enumerate() {
            if x >> j & 1 == 0 {
                m[(x | 1 << j, x)] += c * weight;
            }
        }
    }
    Ok(m)
}

/// `ancilla ⊗ ion ⊗ fock` in the layout of `basis`.
pub(crate) fn embed(basis: &BasisTag, ion: &CMatrix, fock: &CMatrix) -> CMatrix {
    let inner = ion.kronecker(fock);
    if basis.ancilla {
        CMatrix::identity(2, 2).kronecker(&inner)
    } else {
        inner
    }
}

/// Ion-space representation of `Ĵ̃⁺` for a `FullRegister` or `DickeFock` basis.
pub(crate) fn raising_ion_part(
    config: &IonChainConfig,
    basis: &BasisTag,
    weight: Complex64,
) -> Result<CMatrix> {
    check_basis_ions(config, basis)?;
    match basis.kind {
        BasisKind::FullRegister => weighted_raising_register(config, weight),
        BasisKind::DickeFock => {
            let c = config.homogeneous_omega_eff()?;
            Ok(dicke_raising(config.n_ions()) * (c * weight))
        }
        _ => Err(Error::InvalidBasis(format!(
            "collective operators are built on FullRegister or DickeFock, not {basis}"
        ))),
    }
}

pub(crate) fn check_basis_ions(config: &IonChainConfig, basis: &BasisTag) -> Result<()> {
    if basis.n_ions != config.n_ions() {
        return Err(Error::Consistency(format!(
            "basis {basis} does not describe the configured N = {}",
            config.n_ions()
        )));
    }
    Ok(())
}

/// Weighted collective raising operator `Ĵ̃⁺` (identity on Fock and ancilla).
///
/// On `DickeFock` the chain must be homogeneous; the result is
/// `Ω_eff Σ_k f_k |D_{k+1}⟩⟨D_k|`.
pub fn collective_raising(config: &IonChainConfig, basis: &BasisTag) -> Result<OperatorMatrix> {
    let ion = raising_ion_part(config, basis, ONE)?;
    let fock = CMatrix::identity(basis.fock_dim(), basis.fock_dim());
    OperatorMatrix::general(*basis, embed(basis, &ion, &fock))
}

/// `Ĵ̃⁻ = (Ĵ̃⁺)†`.
pub fn collective_lowering(config: &IonChainConfig, basis: &BasisTag) -> Result<OperatorMatrix> {
    Ok(collective_raising(config, basis)?.adjoint())
}

/// One member `|D̃ℓ_k⟩` of a [`CollectiveNumberBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveState {
    pub k: usize,
    pub branch: usize,
    pub state: StateVector,
}

/// Orthonormal collective number states reachable from `|g…g⟩` through
/// repeated application of the weighted `Ĵ̃⁺` and `Ĵ̃⁻`.
///
/// Branches `ℓ` are numbered per excitation level in discovery order of a
/// FIFO worklist seeded with `|g…g⟩`; each member is expanded with `Ĵ̃⁺`
/// first, then `Ĵ̃⁻`. Unreachable nonsymmetric states are not part of the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveNumberBasis {
    config: IonChainConfig,
    k_max: usize,
    drop_tol: f64,
    members: Vec<CollectiveState>,
}

impl CollectiveNumberBasis {
    pub fn config(&self) -> &IonChainConfig {
        &self.config
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn drop_tol(&self) -> f64 {
        self.drop_tol
    }

    pub fn members(&self) -> &[CollectiveState] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members with `k` excitations, in branch order.
    pub fn level(&self, k: usize) -> impl Iterator<Item = &CollectiveState> {
        self.members.iter().filter(move |m| m.k == k)
    }

    pub fn branches(&self, k: usize) -> usize {
        self.level(k).count()
    }

    pub fn position(&self, k: usize, branch: usize) -> Option<usize> {
        self.members.iter().position(|m| m.k == k && m.branch == branch)
    }

    pub fn get(&self, k: usize, branch: usize) -> Option<&CollectiveState> {
        self.position(k, branch).map(|i| &self.members[i])
    }

    /// `2^N × M` matrix with the members as columns.
    pub fn isometry(&self) -> CMatrix {
        let dim = 1usize << self.config.n_ions();
        let mut m = CMatrix::zeros(dim, self.members.len());
        for (i, s) in self.members.iter().enumerate() {
            m.set_column(i, s.state.amplitudes());
        }
        m
    }

    pub fn basis_tag(&self) -> BasisTag {
        BasisTag::collective_number_fock(self.members.len(), self.config.n_ions(), self.config.n_max())
    }
}

/// Builds the reachable collective number basis up to `k_max` excitations.
///
/// Candidates are normalized before projection, so `drop_tol` is a relative
/// threshold on the part of a candidate outside the current span.
pub fn build_collective_number_basis(
    config: &IonChainConfig,
    k_max: usize,
    drop_tol: f64,
) -> Result<CollectiveNumberBasis> {
    if drop_tol.is_nan() || drop_tol <= 0.0 {
        return Err(Error::Parameter(format!("drop_tol must be positive, got {drop_tol}")));
    }
    let n = config.n_ions();
    if k_max > n {
        return Err(Error::domain("k_max", k_max, format!("0 <= k_max <= N = {n}")));
    }
    let raising = weighted_raising_register(config, ONE)?;
    let lowering = raising.adjoint();
    let register = BasisTag::ion_register(n);

    let mut levels: Vec<Vec<CVector>> = vec![Vec::new(); n + 1];
    let mut members = Vec::new();
    let mut queue = VecDeque::new();

    let mut ground = CVector::zeros(register.dim());
    ground[0] = ONE;
    levels[0].push(ground.clone());
    members.push(CollectiveState {
        k: 0,
        branch: 0,
        state: StateVector::new(register, ground)?,
    });
    queue.push_back(0usize);

    while let Some(idx) = queue.pop_front() {
        let k = members[idx].k;
        let v = members[idx].state.amplitudes().clone();
        let mut candidates = Vec::with_capacity(2);
        if k < k_max {
            candidates.push((k + 1, &raising * &v));
        }
        if k > 0 {
            candidates.push((k - 1, &lowering * &v));
        }
        for (level, cand) in candidates {
            let norm = cand.norm();
            if norm == 0.0 {
                continue;
            }
            let mut residual = cand.unscale(norm);
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for b in &levels[level] {
                    let overlap = b.dotc(&residual);
                    residual -= b * overlap;
                }
            }
            let rnorm = residual.norm();
            if rnorm < drop_tol {
                continue;
            }
            residual.unscale_mut(rnorm);
            let branch = levels[level].len();
            levels[level].push(residual.clone());
            members.push(CollectiveState {
                k: level,
                branch,
                state: StateVector::new(register, residual)?,
            });
            queue.push_back(members.len() - 1);
        }
    }

    Ok(CollectiveNumberBasis {
        config: config.clone(),
        k_max,
        drop_tol,
        members,
    })
}
