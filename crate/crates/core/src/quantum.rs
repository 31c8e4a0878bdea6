//! Operator algebra on the truncated composite space `mode ⊗ qubit 1 ⊗ qubit 2`.
//!
//! Basis index of `|n, q1, q2⟩` is `n · 2^N + q1 · 2^(N-1) + q2` with `N` the
//! number of qubits. Qubit level `0` is the ground state.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("bosonic truncation n_fock = {0} is below the minimum of 2")]
    FockTooSmall(usize),
    #[error("n_qubits = {0} is unsupported (expected 1 or 2)")]
    QubitCount(usize),
    #[error("operator {kind:?} cannot act on {target:?}")]
    TargetMismatch {
        kind: OperatorKind,
        target: Subsystem,
    },
    #[error("qubit index {index} out of range for a space with {n_qubits} qubit(s)")]
    QubitIndex { index: usize, n_qubits: usize },
    #[error("space mismatch: {left:?} vs {right:?}")]
    SpaceMismatch {
        left: SpaceDescriptor,
        right: SpaceDescriptor,
    },
    #[error("matrix is {rows}x{cols}, space dimension is {dim}")]
    Shape {
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
}

/// One bosonic mode truncated to `n_fock` levels followed by `n_qubits` two-level systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpaceDescriptor {
    n_fock: usize,
    n_qubits: usize,
}

impl SpaceDescriptor {
    pub fn n_fock(&self) -> usize {
        self.n_fock
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.n_fock << self.n_qubits
    }

    /// Basis index of `|n, qubits⟩`; `qubits[j]` is 0 or 1.
    pub fn index(&self, n: usize, qubits: &[usize]) -> usize {
        debug_assert_eq!(qubits.len(), self.n_qubits);
        qubits.iter().fold(n, |acc, &q| (acc << 1) | q)
    }
}

pub fn build_space(n_fock: usize, n_qubits: usize) -> Result<SpaceDescriptor, QuantumError> {
    if n_fock < 2 {
        return Err(QuantumError::FockTooSmall(n_fock));
    }
    if !(1..=2).contains(&n_qubits) {
        return Err(QuantumError::QubitCount(n_qubits));
    }
    Ok(SpaceDescriptor { n_fock, n_qubits })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Mode,
    /// Zero-based qubit index.
    Qubit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Annihilate,
    Create,
    Number,
    SigmaX,
    SigmaY,
    SigmaZ,
    /// `|0⟩⟨1|`
    SigmaMinus,
    /// `|1⟩⟨0|`
    SigmaPlus,
    Identity,
}

impl OperatorKind {
    fn is_bosonic(self) -> bool {
        matches!(self, Self::Annihilate | Self::Create | Self::Number)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: SpaceDescriptor,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: SpaceDescriptor, matrix: CMatrix) -> Result<Self, QuantumError> {
        check_shape(&space, &matrix)?;
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: SpaceDescriptor) -> Self {
        let d = space.dim();
        Self {
            space,
            matrix: CMatrix::zeros(d, d),
        }
    }

    pub fn space(&self) -> SpaceDescriptor {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            space: self.space,
            matrix: &self.matrix * factor,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, QuantumError> {
        same_space(self.space, other.space)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self, QuantumError> {
        same_space(self.space, other.space)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn commutator(&self, other: &Self) -> Result<Self, QuantumError> {
        same_space(self.space, other.space)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// `max|H - H†| / max(‖H‖, tiny)`.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = &self.matrix - self.matrix.adjoint();
        max_abs(&diff) / self.matrix.norm().max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: SpaceDescriptor,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-9;
    pub const POSITIVITY_TOL: f64 = 1e-8;

    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(space: SpaceDescriptor, matrix: CMatrix) -> Result<Self, QuantumError> {
        check_shape(&space, &matrix)?;
        let rho = Self { space, matrix };
        rho.validate()?;
        Ok(rho)
    }

    /// Skips validation; used on integrator output where checks are done by the caller.
    pub(crate) fn from_matrix_unchecked(space: SpaceDescriptor, matrix: CMatrix) -> Self {
        Self { space, matrix }
    }

    /// `|n, qubits⟩⟨n, qubits|`.
    pub fn basis_state(
        space: SpaceDescriptor,
        n: usize,
        qubits: &[usize],
    ) -> Result<Self, QuantumError> {
        if n >= space.n_fock || qubits.len() != space.n_qubits || qubits.iter().any(|&q| q > 1) {
            return Err(QuantumError::InvalidState(format!(
                "basis label |{n}, {qubits:?}⟩ outside {space:?}"
            )));
        }
        let d = space.dim();
        let k = space.index(n, qubits);
        let mut m = CMatrix::zeros(d, d);
        m[(k, k)] = ONE;
        Ok(Self { space, matrix: m })
    }

    pub fn ground(space: SpaceDescriptor) -> Self {
        Self::basis_state(space, 0, &vec![0; space.n_qubits]).expect("ground state is in range")
    }

    pub fn maximally_mixed(space: SpaceDescriptor) -> Self {
        let d = space.dim();
        Self {
            space,
            matrix: CMatrix::identity(d, d) * C64::from(1.0 / d as f64),
        }
    }

    pub fn space(&self) -> SpaceDescriptor {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        let herm = max_abs(&(&self.matrix - self.matrix.adjoint()));
        if herm > Self::HERMITIAN_TOL {
            return Err(QuantumError::InvalidState(format!(
                "Hermiticity defect {herm:e}"
            )));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > Self::TRACE_TOL {
            return Err(QuantumError::InvalidState(format!("trace {tr}")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -Self::POSITIVITY_TOL {
            return Err(QuantumError::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.matrix + self.matrix.adjoint()) * C64::from(0.5);
        sym.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_shape(space: &SpaceDescriptor, m: &CMatrix) -> Result<(), QuantumError> {
    let d = space.dim();
    if m.nrows() != d || m.ncols() != d {
        return Err(QuantumError::Shape {
            rows: m.nrows(),
            cols: m.ncols(),
            dim: d,
        });
    }
    Ok(())
}

fn same_space(a: SpaceDescriptor, b: SpaceDescriptor) -> Result<(), QuantumError> {
    if a != b {
        return Err(QuantumError::SpaceMismatch { left: a, right: b });
    }
    Ok(())
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn local_mode(kind: OperatorKind, n_fock: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n_fock, n_fock);
    for n in 0..n_fock {
        match kind {
            OperatorKind::Annihilate if n > 0 => m[(n - 1, n)] = C64::from((n as f64).sqrt()),
            OperatorKind::Create if n + 1 < n_fock => {
                m[(n + 1, n)] = C64::from(((n + 1) as f64).sqrt())
            }
            OperatorKind::Number => m[(n, n)] = C64::from(n as f64),
            OperatorKind::Identity => m[(n, n)] = ONE,
            _ => {}
        }
    }
    m
}

fn local_qubit(kind: OperatorKind) -> CMatrix {
    let (a, b, c, d) = match kind {
        OperatorKind::SigmaX => (ZERO, ONE, ONE, ZERO),
        OperatorKind::SigmaY => (ZERO, -I, I, ZERO),
        OperatorKind::SigmaZ => (ONE, ZERO, ZERO, -ONE),
        OperatorKind::SigmaMinus => (ZERO, ONE, ZERO, ZERO),
        OperatorKind::SigmaPlus => (ZERO, ZERO, ONE, ZERO),
        _ => (ONE, ZERO, ZERO, ONE),
    };
    CMatrix::from_row_slice(2, 2, &[a, b, c, d])
}

/// Embeds a single-subsystem operator into the full space (identity elsewhere).
pub fn embed_operator(
    kind: OperatorKind,
    target: Subsystem,
    space: SpaceDescriptor,
) -> Result<Operator, QuantumError> {
    let mode = match (kind, target) {
        (OperatorKind::Identity, _) => {
            let d = space.dim();
            return Ok(Operator {
                space,
                matrix: CMatrix::identity(d, d),
            });
        }
        (k, Subsystem::Mode) if k.is_bosonic() => local_mode(k, space.n_fock),
        (k, Subsystem::Qubit(j)) if !k.is_bosonic() => {
            if j >= space.n_qubits {
                return Err(QuantumError::QubitIndex {
                    index: j,
                    n_qubits: space.n_qubits,
                });
            }
            let mut m = local_mode(OperatorKind::Identity, space.n_fock);
            for q in 0..space.n_qubits {
                let factor = if q == j {
                    local_qubit(k)
                } else {
                    CMatrix::identity(2, 2)
                };
                m = m.kronecker(&factor);
            }
            return Ok(Operator { space, matrix: m });
        }
        _ => return Err(QuantumError::TargetMismatch { kind, target }),
    };
    let qubit_dim = 1 << space.n_qubits;
    Ok(Operator {
        space,
        matrix: mode.kronecker(&CMatrix::identity(qubit_dim, qubit_dim)),
    })
}

/// `tr(op · ρ)`.
pub fn expectation(state: &DensityMatrix, op: &Operator) -> Result<C64, QuantumError> {
    same_space(state.space, op.space)?;
    let d = state.space.dim();
    let mut acc = ZERO;
    for i in 0..d {
        for k in 0..d {
            acc += op.matrix[(i, k)] * state.matrix[(k, i)];
        }
    }
    Ok(acc)
}

/// Reduced excited-state population of qubit `j`.
pub fn excited_population(state: &DensityMatrix, qubit: usize) -> Result<f64, QuantumError> {
    let space = state.space;
    if qubit >= space.n_qubits {
        return Err(QuantumError::QubitIndex {
            index: qubit,
            n_qubits: space.n_qubits,
        });
    }
    let bit = space.n_qubits - 1 - qubit;
    Ok((0..space.dim())
        .filter(|k| (k >> bit) & 1 == 1)
        .map(|k| state.matrix[(k, k)].re)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_space_dimensions() {
        assert_eq!(build_space(5, 1).unwrap().dim(), 10);
        assert_eq!(build_space(6, 2).unwrap().dim(), 24);
        assert_eq!(build_space(1, 1), Err(QuantumError::FockTooSmall(1)));
        assert_eq!(build_space(3, 3), Err(QuantumError::QubitCount(3)));
        assert_eq!(build_space(3, 0), Err(QuantumError::QubitCount(0)));
    }

    #[test]
    fn lowering_projector_spectrum() {
        let space = build_space(2, 1).unwrap();
        let sm = embed_operator(OperatorKind::SigmaMinus, Subsystem::Qubit(0), space).unwrap();
        let proj = sm.adjoint().mul(&sm).unwrap();
        let mut eig: Vec<f64> = proj
            .matrix()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .collect();
        eig.sort_by(f64::total_cmp);
        for (k, e) in eig.iter().enumerate() {
            let want = if k < 2 { 0.0 } else { 1.0 };
            assert!((e - want).abs() < 1e-14);
        }
    }

    #[test]
    fn truncated_commutator_top_level() {
        for n_fock in 2..7 {
            let space = build_space(n_fock, 1).unwrap();
            let a = embed_operator(OperatorKind::Annihilate, Subsystem::Mode, space).unwrap();
            let ad = embed_operator(OperatorKind::Create, Subsystem::Mode, space).unwrap();
            let comm = a.commutator(&ad).unwrap();
            for n in 0..n_fock {
                for q in 0..2 {
                    let k = space.index(n, &[q]);
                    let want = if n + 1 == n_fock {
                        -((n_fock - 1) as f64)
                    } else {
                        1.0
                    };
                    assert!((comm.matrix()[(k, k)] - C64::from(want)).norm() < 1e-12);
                }
            }
            let off = comm.matrix().clone() - CMatrix::from_diagonal(&comm.matrix().diagonal());
            assert!(max_abs(&off) < 1e-12);
        }
    }

    #[test]
    fn create_is_adjoint_and_kills_top_level() {
        let space = build_space(4, 2).unwrap();
        let a = embed_operator(OperatorKind::Annihilate, Subsystem::Mode, space).unwrap();
        let ad = embed_operator(OperatorKind::Create, Subsystem::Mode, space).unwrap();
        assert!(max_abs(&(a.adjoint().matrix() - ad.matrix())) < 1e-15);
        let top = DensityMatrix::basis_state(space, 3, &[0, 1]).unwrap();
        let out = ad.matrix() * top.matrix();
        assert!(max_abs(&out) == 0.0);
    }

    #[test]
    fn pauli_involutions() {
        let space = build_space(3, 2).unwrap();
        let id = embed_operator(OperatorKind::Identity, Subsystem::Mode, space).unwrap();
        for kind in [
            OperatorKind::SigmaX,
            OperatorKind::SigmaY,
            OperatorKind::SigmaZ,
        ] {
            for j in 0..2 {
                let s = embed_operator(kind, Subsystem::Qubit(j), space).unwrap();
                let sq = s.mul(&s).unwrap();
                assert!(max_abs(&(sq.matrix() - id.matrix())) < 1e-15);
            }
        }
    }

    #[test]
    fn number_operator_is_exact_diagonal() {
        let space = build_space(6, 2).unwrap();
        let n = embed_operator(OperatorKind::Number, Subsystem::Mode, space).unwrap();
        for level in 0..6 {
            for q1 in 0..2 {
                for q2 in 0..2 {
                    let k = space.index(level, &[q1, q2]);
                    assert_eq!(n.matrix()[(k, k)], C64::from(level as f64));
                }
            }
        }
    }

    #[test]
    fn kind_target_mismatch_rejected() {
        let space = build_space(3, 1).unwrap();
        assert!(matches!(
            embed_operator(OperatorKind::SigmaX, Subsystem::Mode, space),
            Err(QuantumError::TargetMismatch { .. })
        ));
        assert!(matches!(
            embed_operator(OperatorKind::Annihilate, Subsystem::Qubit(0), space),
            Err(QuantumError::TargetMismatch { .. })
        ));
        assert!(matches!(
            embed_operator(OperatorKind::SigmaZ, Subsystem::Qubit(1), space),
            Err(QuantumError::QubitIndex { .. })
        ));
    }

    #[test]
    fn expectation_examples() {
        let space = build_space(4, 1).unwrap();
        let n = embed_operator(OperatorKind::Number, Subsystem::Mode, space).unwrap();
        let g = DensityMatrix::ground(space);
        assert_eq!(expectation(&g, &n).unwrap(), ZERO);
        let fock2 = DensityMatrix::basis_state(space, 2, &[0]).unwrap();
        assert!((expectation(&fock2, &n).unwrap() - C64::from(2.0)).norm() < 1e-15);

        let q = build_space(2, 1).unwrap();
        let sz = embed_operator(OperatorKind::SigmaZ, Subsystem::Qubit(0), q).unwrap();
        let mixed = DensityMatrix::maximally_mixed(q);
        assert!(expectation(&mixed, &sz).unwrap().norm() < 1e-15);

        let other = build_space(3, 1).unwrap();
        assert!(matches!(
            expectation(&DensityMatrix::ground(other), &n),
            Err(QuantumError::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn density_matrix_validation() {
        let space = build_space(2, 1).unwrap();
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = C64::from(0.5);
        assert!(DensityMatrix::new(space, m.clone()).is_err());
        m[(1, 1)] = C64::from(0.5);
        assert!(DensityMatrix::new(space, m.clone()).is_ok());
        m[(0, 1)] = C64::from(0.6);
        m[(1, 0)] = C64::from(0.6);
        assert!(DensityMatrix::new(space, m).is_err());
    }

    #[test]
    fn excited_population_reads_correct_qubit() {
        let space = build_space(3, 2).unwrap();
        let rho = DensityMatrix::basis_state(space, 1, &[0, 1]).unwrap();
        assert_eq!(excited_population(&rho, 0).unwrap(), 0.0);
        assert_eq!(excited_population(&rho, 1).unwrap(), 1.0);
    }
}
