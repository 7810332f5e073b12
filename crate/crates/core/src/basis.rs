//! Basis tags, state vectors and operator matrices.
//!
//! Composite index ordering is ancilla-major, then ion, then Fock:
//! `index = (ancilla * ion_dim + ion) * fock_dim + n`. In the full register
//! bit `j` of the ion index is 1 when ion `j` is in `|e⟩`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonians::Sideband;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tolerance on `‖M - M†‖_max` for matrices flagged Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BasisKind {
    /// `2^N` ion product states.
    FullRegister,
    /// `N + 1` symmetric Dicke states.
    DickeFock,
    /// Orthonormal collective number states `|D̃ℓ_k⟩`.
    CollectiveNumberFock { members: usize },
    /// The two members of a selected doublet, lower member first.
    TwoLevelDoublet {
        n0: usize,
        k0: usize,
        sideband: Sideband,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BasisTag {
    pub kind: BasisKind,
    pub n_ions: usize,
    /// Fock cutoff; `0` means no motional factor.
    pub n_max: usize,
    /// Extra ancilla qubit as the most significant factor.
    pub ancilla: bool,
}

impl BasisTag {
    pub fn full_register(n_ions: usize, n_max: usize) -> Self {
        Self {
            kind: BasisKind::FullRegister,
            n_ions,
            n_max,
            ancilla: false,
        }
    }

    /// Ion register without a Fock factor.
    pub fn ion_register(n_ions: usize) -> Self {
        Self::full_register(n_ions, 0)
    }

    pub fn dicke_fock(n_ions: usize, n_max: usize) -> Self {
        Self {
            kind: BasisKind::DickeFock,
            n_ions,
            n_max,
            ancilla: false,
        }
    }

    pub fn collective_number_fock(members: usize, n_ions: usize, n_max: usize) -> Self {
        Self {
            kind: BasisKind::CollectiveNumberFock { members },
            n_ions,
            n_max,
            ancilla: false,
        }
    }

    pub fn two_level(n_ions: usize, n0: usize, k0: usize, sideband: Sideband) -> Self {
        Self {
            kind: BasisKind::TwoLevelDoublet { n0, k0, sideband },
            n_ions,
            n_max: 0,
            ancilla: false,
        }
    }

    pub fn with_ancilla(mut self) -> Self {
        self.ancilla = true;
        self
    }

    pub fn without_ancilla(mut self) -> Self {
        self.ancilla = false;
        self
    }

    pub fn ion_dim(&self) -> usize {
        match self.kind {
            BasisKind::FullRegister => 1usize << self.n_ions,
            BasisKind::DickeFock => self.n_ions + 1,
            BasisKind::CollectiveNumberFock { members } => members,
            BasisKind::TwoLevelDoublet { .. } => 2,
        }
    }

    pub fn fock_dim(&self) -> usize {
        match self.kind {
            BasisKind::TwoLevelDoublet { .. } => 1,
            _ => self.n_max + 1,
        }
    }

    pub fn ancilla_dim(&self) -> usize {
        if self.ancilla {
            2
        } else {
            1
        }
    }

    pub fn dim(&self) -> usize {
        self.ancilla_dim() * self.ion_dim() * self.fock_dim()
    }

    pub fn index(&self, ancilla: usize, ion: usize, fock: usize) -> usize {
        (ancilla * self.ion_dim() + ion) * self.fock_dim() + fock
    }

    /// Inverse of [`BasisTag::index`]: `(ancilla, ion, fock)`.
    pub fn decompose(&self, index: usize) -> (usize, usize, usize) {
        let fock = index % self.fock_dim();
        let rest = index / self.fock_dim();
        (rest / self.ion_dim(), rest % self.ion_dim(), fock)
    }

    pub fn has_fock(&self) -> bool {
        self.fock_dim() > 1
    }

    /// Human-readable label of a basis index, used as CSV column name.
    pub fn label(&self, index: usize) -> String {
        let (anc, ion, fock) = self.decompose(index);
        let ion_part = match self.kind {
            BasisKind::FullRegister => {
                let bits: String = (0..self.n_ions)
                    .map(|j| if ion >> j & 1 == 1 { 'e' } else { 'g' })
                    .collect();
                bits
            }
            BasisKind::DickeFock => format!("D{ion}"),
            BasisKind::CollectiveNumberFock { .. } => format!("C{ion}"),
            BasisKind::TwoLevelDoublet { .. } => {
                return if ion == 0 { "lower".into() } else { "upper".into() }
            }
        };
        let mut label = if self.has_fock() {
            format!("n{fock}_{ion_part}")
        } else {
            ion_part
        };
        if self.ancilla {
            label.push_str(if anc == 1 { "_Ae" } else { "_Ag" });
        }
        label
    }

    pub(crate) fn require_same(&self, other: &BasisTag) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::BasisMismatch {
                expected: self.to_string(),
                found: other.to_string(),
            })
        }
    }
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            BasisKind::FullRegister => write!(f, "FullRegister(N={}", self.n_ions)?,
            BasisKind::DickeFock => write!(f, "DickeFock(N={}", self.n_ions)?,
            BasisKind::CollectiveNumberFock { members } => {
                write!(f, "CollectiveNumberFock(N={}, members={}", self.n_ions, members)?
            }
            BasisKind::TwoLevelDoublet { n0, k0, sideband } => {
                write!(f, "TwoLevelDoublet({sideband:?}, n0={n0}, k0={k0}")?
            }
        }
        if self.has_fock() {
            write!(f, ", n_max={}", self.n_max)?;
        }
        if self.ancilla {
            write!(f, ", ancilla")?;
        }
        write!(f, ")")
    }
}

/// Complex amplitudes over a tagged basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    basis: BasisTag,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(basis: BasisTag, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::Parameter(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn from_vec(basis: BasisTag, amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::new(basis, CVector::from_vec(amplitudes))
    }

    pub fn basis_state(basis: BasisTag, index: usize) -> Result<Self> {
        if index >= basis.dim() {
            return Err(Error::domain("basis index", index, format!("< {}", basis.dim())));
        }
        let mut v = CVector::zeros(basis.dim());
        v[index] = Complex64::new(1.0, 0.0);
        Ok(Self { basis, amplitudes: v })
    }

    pub fn basis(&self) -> &BasisTag {
        &self.basis
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::Parameter("cannot normalize the zero vector".into()));
        }
        Ok(Self {
            basis: self.basis,
            amplitudes: self.amplitudes.unscale(n),
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.basis.require_same(&other.basis)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `self ⊗ |n⟩` for an ion-only state.
    pub fn with_fock(&self, n_max: usize, n: usize) -> Result<Self> {
        if self.basis.has_fock() || self.basis.ancilla {
            return Err(Error::InvalidBasis(format!("{} already has a motional factor", self.basis)));
        }
        if n > n_max {
            return Err(Error::domain("fock", n, format!("0 <= n <= n_max = {n_max}")));
        }
        let mut basis = self.basis;
        basis.n_max = n_max;
        let mut v = CVector::zeros(basis.dim());
        for (i, a) in self.amplitudes.iter().enumerate() {
            v[basis.index(0, i, n)] = *a;
        }
        Ok(Self { basis, amplitudes: v })
    }

    /// Adds an ancilla factor in `|g⟩_A` (or `|e⟩_A` when `excited`).
    pub fn with_ancilla(&self, excited: bool) -> Result<Self> {
        if self.basis.ancilla {
            return Err(Error::InvalidBasis(format!("{} already has an ancilla", self.basis)));
        }
        let basis = self.basis.with_ancilla();
        let mut v = CVector::zeros(basis.dim());
        let offset = if excited { self.dim() } else { 0 };
        v.rows_mut(offset, self.dim()).copy_from(&self.amplitudes);
        Ok(Self { basis, amplitudes: v })
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            basis: self.basis,
            amplitudes: self.amplitudes.map(|a| a * factor),
        }
    }
}

/// Dense complex matrix tagged with its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    basis: BasisTag,
    entries: CMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Wraps a matrix that must be Hermitian to [`HERMITIAN_TOL`].
    pub fn hermitian(basis: BasisTag, entries: CMatrix) -> Result<Self> {
        check_square(&basis, &entries)?;
        let dev = hermitian_deviation(&entries);
        if dev >= HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self {
            basis,
            entries,
            hermitian: true,
        })
    }

    pub fn general(basis: BasisTag, entries: CMatrix) -> Result<Self> {
        check_square(&basis, &entries)?;
        Ok(Self {
            basis,
            entries,
            hermitian: false,
        })
    }

    pub fn basis(&self) -> &BasisTag {
        &self.basis
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn max_hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.entries)
    }

    pub fn is_diagonal(&self) -> bool {
        self.max_off_diagonal() == 0.0
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for c in 0..n {
            for r in 0..n {
                if r != c {
                    m = m.max(self.entries[(r, c)].norm());
                }
            }
        }
        m
    }

    /// Real parts of the diagonal.
    pub fn diagonal_real(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.basis.require_same(psi.basis())?;
        Ok(StateVector {
            basis: self.basis,
            amplitudes: &self.entries * psi.amplitudes(),
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            basis: self.basis,
            entries: self.entries.adjoint(),
            hermitian: self.hermitian,
        }
    }

    /// `⟨ψ|M|ψ⟩`.
    pub fn expectation(&self, psi: &StateVector) -> Result<Complex64> {
        self.basis.require_same(psi.basis())?;
        Ok(psi.amplitudes().dotc(&(&self.entries * psi.amplitudes())))
    }

    /// `I₂ ⊗ M` on the basis extended by an ancilla.
    pub fn with_ancilla(&self) -> Result<Self> {
        if self.basis.ancilla {
            return Err(Error::InvalidBasis(format!("{} already has an ancilla", self.basis)));
        }
        Ok(Self {
            basis: self.basis.with_ancilla(),
            entries: CMatrix::identity(2, 2).kronecker(&self.entries),
            hermitian: self.hermitian,
        })
    }
}

fn check_square(basis: &BasisTag, m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() != basis.dim() {
        return Err(Error::Parameter(format!(
            "{}x{} matrix for a basis of dimension {}",
            m.nrows(),
            m.ncols(),
            basis.dim()
        )));
    }
    Ok(())
}

pub(crate) fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for c in 0..n {
        for r in 0..=c {
            dev = dev.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    dev
}
