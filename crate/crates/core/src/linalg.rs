//! Dense complex linear algebra for qubit registers.
//!
//! [`PureState`] and [`DensityMatrix`] validate their invariants on
//! construction and are immutable afterwards. All operations are pure
//! functions returning new values.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;

use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest register a [`PureState`] may span.
pub const MAX_PURE_QUBITS: usize = 20;
/// Largest register a [`DensityMatrix`] may span.
pub const MAX_DENSITY_QUBITS: usize = 12;

pub const NORM_TOL: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues in `[-POSITIVITY_TOL, 0)` are treated as zero.
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Eigenvalues below this contribute nothing to the entropy.
pub const ENTROPY_CUTOFF: f64 = 1e-12;
pub const IDEMPOTENT_TOL: f64 = 1e-10;
/// Rank threshold for span and intersection constructions.
pub const RANK_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Largest element-wise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest element-wise modulus.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn check_hermitian(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let d = hermitian_defect(m);
    if d > HERMITIAN_TOL {
        return Err(Error::NotHermitian(d));
    }
    Ok(())
}

pub(crate) fn check_unitary(u: &CMatrix) -> Result<()> {
    if !u.is_square() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows(),
            got: u.ncols(),
        });
    }
    let id = CMatrix::identity(u.nrows(), u.ncols());
    let d = max_abs_diff(&(u.adjoint() * u), &id);
    if d > NORM_TOL {
        return Err(Error::NotUnitary(d));
    }
    Ok(())
}

/// Real spectrum of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut vals = if m.nrows() == 2 {
        // closed form avoids an iterative solve in the hot sieve loop
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let b = m[(0, 1)];
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        vec![mean - r, mean + r]
    } else if m.nrows() == 1 {
        vec![m[(0, 0)].re]
    } else {
        m.clone().symmetric_eigenvalues().iter().copied().collect()
    };
    vals.sort_by(f64::total_cmp);
    vals
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues and the unitary of
/// column eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// `exp(-i H t)` for Hermitian `H`, built from its spectral decomposition.
pub fn unitary_evolution(h: &CMatrix, t: f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(h);
    let phases = CMatrix::from_diagonal(&CVector::from_iterator(
        vals.len(),
        vals.iter().map(|&e| C64::from_polar(1.0, -e * t)),
    ));
    &vecs * phases * vecs.adjoint()
}

/// Single-qubit Pauli and Hadamard matrices.
pub mod gates {
    use super::{c, CMatrix};

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }
    pub fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
    }
    pub fn pauli_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
    }
    pub fn pauli_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
    }
    pub fn hadamard() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)])
    }
    /// `m` tensored with itself `n` times.
    pub fn tensor_power(m: &CMatrix, n: usize) -> CMatrix {
        (0..n).fold(CMatrix::identity(1, 1), |acc, _| acc.kronecker(m))
    }
}

/// Ordered list of distinct qubit indices naming a subsystem.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QubitSet(Vec<usize>);

impl QubitSet {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let indices: Vec<usize> = indices.into_iter().collect();
        for (i, q) in indices.iter().enumerate() {
            if indices[..i].contains(q) {
                return Err(Error::DuplicateQubit(*q));
            }
        }
        Ok(QubitSet(indices))
    }

    /// Qubits `start..end`.
    pub fn range(start: usize, end: usize) -> Self {
        QubitSet((start..end).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.0.contains(&q)
    }

    pub fn check_within(&self, width: usize) -> Result<()> {
        match self.0.iter().find(|&&q| q >= width) {
            Some(&index) => Err(Error::QubitOutOfRange { index, width }),
            None => Ok(()),
        }
    }

    /// Qubits of a `width`-qubit register not in this set, ascending.
    pub fn complement(&self, width: usize) -> QubitSet {
        QubitSet((0..width).filter(|q| !self.contains(*q)).collect())
    }

    /// Full-register index offsets for every basis index of this subsystem,
    /// in the subsystem's own big-endian order.
    pub(crate) fn offsets(&self, width: usize) -> Vec<usize> {
        let k = self.0.len();
        (0..1usize << k)
            .map(|a| {
                self.0
                    .iter()
                    .enumerate()
                    .map(|(j, &q)| ((a >> (k - 1 - j)) & 1) << (width - 1 - q))
                    .sum()
            })
            .collect()
    }
}

/// Normalized state vector over `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
    num_qubits: usize,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        Self::from_vector(CVector::from_vec(amplitudes))
    }

    pub fn from_vector(amplitudes: CVector) -> Result<Self> {
        let num_qubits = qubits_for_dim(amplitudes.len())?;
        if num_qubits > MAX_PURE_QUBITS {
            return Err(Error::RegisterTooLarge {
                what: "pure-state",
                qubits: num_qubits,
                cap: MAX_PURE_QUBITS,
            });
        }
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(PureState { amplitudes, num_qubits })
    }

    /// Normalizes `amplitudes` first; fails only on a zero vector or a bad length.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let mut v = CVector::from_vec(amplitudes);
        let norm = v.norm();
        if norm < 1e-300 {
            return Err(Error::NotNormalized(0.0));
        }
        v.unscale_mut(norm);
        Self::from_vector(v)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: index,
            });
        }
        let mut v = CVector::zeros(dim);
        v[index] = c(1.0, 0.0);
        Self::from_vector(v)
    }

    /// `|0...0>` on `num_qubits` qubits.
    pub fn zeros(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    /// `alpha|0> + beta|1>`.
    pub fn qubit(alpha: C64, beta: C64) -> Result<Self> {
        Self::new(vec![alpha, beta])
    }

    pub fn plus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState::from_raw(CVector::from_vec(vec![c(s, 0.), c(s, 0.)]), 1)
    }

    pub fn minus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState::from_raw(CVector::from_vec(vec![c(s, 0.), c(-s, 0.)]), 1)
    }

    /// Single-qubit state at Bloch angles `(theta, phi)`.
    pub fn bloch(theta: f64, phi: f64) -> Self {
        let a = c((theta / 2.0).cos(), 0.0);
        let b = C64::from_polar((theta / 2.0).sin(), phi);
        PureState::from_raw(CVector::from_vec(vec![a, b]), 1)
    }

    /// `|s...s>` on `n` qubits, with `s` given as a single-qubit state.
    pub fn repeated(single: &PureState, n: usize) -> Result<Self> {
        let mut out = single.clone();
        for _ in 1..n {
            out = out.tensor(single)?;
        }
        Ok(out)
    }

    pub(crate) fn from_raw(amplitudes: CVector, num_qubits: usize) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << num_qubits);
        PureState { amplitudes, num_qubits }
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_PURE_QUBITS {
            return Err(Error::RegisterTooLarge {
                what: "pure-state",
                qubits: n,
                cap: MAX_PURE_QUBITS,
            });
        }
        Ok(PureState::from_raw(self.amplitudes.kronecker(&other.amplitudes), n))
    }

    /// `U|psi>` for a full-register unitary `U`.
    pub fn evolve(&self, u: &CMatrix) -> Result<PureState> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.nrows(),
            });
        }
        PureState::from_vector(u * &self.amplitudes)
    }

    /// Computational-basis probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }
}

/// Hermitian, unit-trace, positive operator over `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: CMatrix,
    num_qubits: usize,
}

impl DensityMatrix {
    pub fn new(elements: CMatrix) -> Result<Self> {
        let rho = Self::unchecked(elements)?;
        rho.validate()?;
        Ok(rho)
    }

    fn unchecked(elements: CMatrix) -> Result<Self> {
        if !elements.is_square() {
            return Err(Error::DimensionMismatch {
                expected: elements.nrows(),
                got: elements.ncols(),
            });
        }
        let num_qubits = qubits_for_dim(elements.nrows())?;
        if num_qubits > MAX_DENSITY_QUBITS {
            return Err(Error::RegisterTooLarge {
                what: "density-matrix",
                qubits: num_qubits,
                cap: MAX_DENSITY_QUBITS,
            });
        }
        Ok(DensityMatrix { elements, num_qubits })
    }

    /// Checks Hermiticity, unit trace and positivity.
    pub fn validate(&self) -> Result<()> {
        check_hermitian(&self.elements)?;
        let tr = self.elements.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::TraceNotOne(tr.re));
        }
        let min = hermitian_eigenvalues(&self.elements)[0];
        if min < -POSITIVITY_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }

    /// For matrices that are valid by construction (channel outputs, partial
    /// traces). Debug builds still check Hermiticity and trace, and
    /// positivity for small registers.
    pub(crate) fn from_raw(elements: CMatrix) -> Self {
        let rho = Self::unchecked(elements).expect("density matrix dimension");
        #[cfg(debug_assertions)]
        {
            let check = if rho.num_qubits <= 6 {
                rho.validate()
            } else {
                rho.validate_cheap()
            };
            debug_assert!(check.is_ok(), "{check:?}");
        }
        rho
    }

    #[cfg(debug_assertions)]
    fn validate_cheap(&self) -> Result<()> {
        check_hermitian(&self.elements)?;
        let tr = self.elements.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceNotOne(tr.re));
        }
        Ok(())
    }

    /// Convex mixture of states that are known to be valid; only the weights
    /// are checked.
    pub(crate) fn mixture_of_valid(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let dim = parts.first().map(|(_, r)| r.dim()).unwrap_or(1);
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::TraceNotOne(total));
        }
        let mut acc = CMatrix::zeros(dim, dim);
        for (w, r) in parts {
            if r.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.dim(),
                });
            }
            acc += r.matrix() * c(*w, 0.0);
        }
        Ok(Self::from_raw(acc))
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = psi.amplitudes();
        Self::from_raw(v * v.adjoint())
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let d = CVector::from_iterator(diag.len(), diag.iter().map(|&x| c(x, 0.0)));
        Self::new(CMatrix::from_diagonal(&d))
    }

    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        let dim = 1usize << num_qubits;
        Self::from_diagonal(&vec![1.0 / dim as f64; dim])
    }

    /// Convex mixture `sum_k w_k rho_k` of equal-dimension states.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let dim = parts.first().map(|(_, r)| r.dim()).unwrap_or(1);
        let mut acc = CMatrix::zeros(dim, dim);
        for (w, r) in parts {
            if r.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.dim(),
                });
            }
            acc += r.matrix() * c(*w, 0.0);
        }
        Self::new(acc)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.elements
    }

    pub fn element(&self, i: usize, j: usize) -> C64 {
        self.elements[(i, j)]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.elements[(i, i)].re).collect()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    /// `U rho U^dagger`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<DensityMatrix> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.nrows(),
            });
        }
        Ok(Self::from_raw(u * &self.elements * u.adjoint()))
    }

    /// Spectrum with tolerated negative round-off clipped to zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.elements)
            .into_iter()
            .map(|x| if (-POSITIVITY_TOL..0.0).contains(&x) { 0.0 } else { x })
            .collect()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_DENSITY_QUBITS {
            return Err(Error::RegisterTooLarge {
                what: "density-matrix",
                qubits: n,
                cap: MAX_DENSITY_QUBITS,
            });
        }
        Ok(Self::from_raw(self.elements.kronecker(&other.elements)))
    }

    /// Largest element-wise distance to another density matrix.
    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        max_abs_diff(&self.elements, &other.elements)
    }
}

/// Composition of two registers; the left operand's qubits come first.
pub trait TensorProduct: Sized {
    fn tensor_with(&self, other: &Self) -> Result<Self>;
}

impl TensorProduct for PureState {
    fn tensor_with(&self, other: &Self) -> Result<Self> {
        self.tensor(other)
    }
}

impl TensorProduct for DensityMatrix {
    fn tensor_with(&self, other: &Self) -> Result<Self> {
        self.tensor(other)
    }
}

pub fn tensor_product<T: TensorProduct>(a: &T, b: &T) -> Result<T> {
    a.tensor_with(b)
}

/// Reduced state on `keep`, in the order the qubits are listed there.
pub fn partial_trace(rho: &DensityMatrix, keep: &QubitSet) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptyQubitSet);
    }
    let width = rho.num_qubits();
    keep.check_within(width)?;
    let kept = keep.offsets(width);
    let traced = keep.complement(width).offsets(width);
    let dk = kept.len();
    let m = rho.matrix();
    let out = CMatrix::from_fn(dk, dk, |a, b| {
        traced.iter().map(|&t| m[(kept[a] + t, kept[b] + t)]).sum()
    });
    Ok(DensityMatrix::from_raw(out))
}

/// Entropy in bits of a spectrum, ignoring eigenvalues below the cutoff.
pub(crate) fn entropy_bits(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&p| p > ENTROPY_CUTOFF)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_bits(&rho.eigenvalues())
}

/// `Tr rho^2`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().iter().map(|x| x.norm_sqr()).sum()
}

/// `1 - Tr rho^2`.
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    1.0 - purity(rho)
}

/// `Tr(rho P)`.
pub fn born_probability(rho: &DensityMatrix, p: &Projector) -> Result<f64> {
    if rho.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: p.dim(),
        });
    }
    let (r, q) = (rho.matrix(), p.matrix());
    let n = rho.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (r[(i, j)] * q[(j, i)]).re;
        }
    }
    Ok(acc)
}

/// Orthogonal projector.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    elements: CMatrix,
    rank: usize,
}

impl Projector {
    pub fn new(elements: CMatrix) -> Result<Self> {
        check_hermitian(&elements)?;
        let sq = &elements * &elements;
        let d = max_abs_diff(&sq, &elements);
        if d > IDEMPOTENT_TOL {
            return Err(Error::NotIdempotent(d));
        }
        let rank = elements.trace().re.round() as usize;
        Ok(Projector { elements, rank })
    }

    /// Projector onto the span of `vectors` in a `dim`-dimensional space,
    /// built by Gram-Schmidt with a [`RANK_TOL`] cut-off.
    pub fn onto_span(vectors: &[CVector], dim: usize) -> Result<Self> {
        let mut basis: Vec<CVector> = Vec::new();
        for v in vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            let mut w = v.clone();
            // two passes keep the basis orthogonal to working precision
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dotc(&w);
                    w -= b * proj;
                }
            }
            let norm = w.norm();
            if norm > RANK_TOL.sqrt() * v.norm().max(1.0) {
                basis.push(w.unscale(norm));
            }
        }
        Ok(Self::from_orthonormal(&basis, dim))
    }

    pub(crate) fn from_orthonormal(basis: &[CVector], dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        for b in basis {
            m += b * b.adjoint();
        }
        Projector {
            elements: m,
            rank: basis.len(),
        }
    }

    pub fn from_state(psi: &PureState) -> Self {
        let v = psi.amplitudes();
        Projector {
            elements: v * v.adjoint(),
            rank: 1,
        }
    }

    /// Sum of computational-basis projectors `|k><k|` for `k` in `indices`.
    pub fn basis(num_qubits: usize, indices: &[usize]) -> Result<Self> {
        let dim = 1usize << num_qubits;
        let mut m = CMatrix::zeros(dim, dim);
        let mut rank = 0;
        for &k in indices {
            if k >= dim {
                return Err(Error::DimensionMismatch { expected: dim, got: k });
            }
            if m[(k, k)].re == 0.0 {
                m[(k, k)] = c(1.0, 0.0);
                rank += 1;
            }
        }
        Ok(Projector { elements: m, rank })
    }

    /// Projector onto `qubit = value` in an `num_qubits` register.
    pub fn qubit_value(num_qubits: usize, qubit: usize, value: u8) -> Result<Self> {
        if qubit >= num_qubits {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                width: num_qubits,
            });
        }
        let shift = num_qubits - 1 - qubit;
        let idx: Vec<usize> = (0..1usize << num_qubits)
            .filter(|k| ((k >> shift) & 1) as u8 == value)
            .collect();
        Self::basis(num_qubits, &idx)
    }

    pub fn identity(dim: usize) -> Self {
        Projector {
            elements: CMatrix::identity(dim, dim),
            rank: dim,
        }
    }

    pub fn complement(&self) -> Projector {
        let dim = self.dim();
        Projector {
            elements: CMatrix::identity(dim, dim) - &self.elements,
            rank: dim - self.rank,
        }
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &Projector) -> Projector {
        Projector {
            elements: self.elements.kronecker(&other.elements),
            rank: self.rank * other.rank,
        }
    }

    /// Largest element of `[self, other]`.
    pub fn commutator_norm(&self, other: &Projector) -> f64 {
        let ab = &self.elements * &other.elements;
        let ba = &other.elements * &self.elements;
        max_abs_diff(&ab, &ba)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.elements
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Haar-random pure state.
pub fn random_state<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> PureState {
    let dim = 1usize << num_qubits;
    let amps = (0..dim).map(|_| c(gaussian(rng), gaussian(rng))).collect();
    PureState::normalized(amps).expect("gaussian vector is non-zero")
}

/// Haar-random unitary (QR of a complex Ginibre matrix with phase fix).
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| c(gaussian(rng), gaussian(rng)));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CVector::from_iterator(
        dim,
        (0..dim).map(|i| {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                c(1.0, 0.0)
            }
        }),
    );
    q * CMatrix::from_diagonal(&phases)
}

/// Random full-rank mixed state `G G^dagger / Tr`.
pub fn random_density<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> DensityMatrix {
    let dim = 1usize << num_qubits;
    let g = CMatrix::from_fn(dim, dim, |_, _| c(gaussian(rng), gaussian(rng)));
    let mut m = &g * g.adjoint();
    let tr = m.trace();
    m.unscale_mut(tr.re);
    // exact Hermitian symmetrisation
    let m = (&m + m.adjoint()) * c(0.5, 0.0);
    DensityMatrix::from_raw(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(d: &[f64]) -> DensityMatrix {
        DensityMatrix::from_diagonal(d).unwrap()
    }

    #[test]
    fn basis_states_compose() {
        let z = PureState::zeros(1).unwrap();
        let zz = tensor_product(&z, &z).unwrap();
        assert_eq!(zz.num_qubits(), 2);
        assert_eq!(zz.probabilities(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn superposition_tensor_zero() {
        let psi = PureState::qubit(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let out = psi.tensor(&PureState::zeros(1).unwrap()).unwrap();
        assert_eq!(out.amplitude(0), c(0.6, 0.0));
        assert_eq!(out.amplitude(1), c(0.0, 0.0));
        assert_eq!(out.amplitude(2), c(0.0, 0.8));
        assert_eq!(out.amplitude(3), c(0.0, 0.0));
    }

    #[test]
    fn diagonal_kronecker() {
        let out = tensor_product(&diag(&[0.5, 0.5]), &diag(&[1.0, 0.0])).unwrap();
        assert_eq!(out.diagonal(), vec![0.5, 0.0, 0.5, 0.0]);
        assert_eq!(
            max_abs(&(out.matrix() - CMatrix::from_diagonal(&out.matrix().diagonal()))),
            0.0
        );
    }

    #[test]
    fn rejects_bad_states() {
        assert!(matches!(
            PureState::new(vec![c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            PureState::new(vec![c(1.0, 0.0); 3]),
            Err(Error::NotPowerOfTwo(3))
        ));
        let not_herm = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.), c(0.1, 0.), c(0.2, 0.), c(0.5, 0.)]);
        assert!(matches!(DensityMatrix::new(not_herm), Err(Error::NotHermitian(_))));
        assert!(matches!(
            DensityMatrix::from_diagonal(&[0.5, 0.6]),
            Err(Error::TraceNotOne(_))
        ));
        assert!(matches!(
            DensityMatrix::from_diagonal(&[1.5, -0.5]),
            Err(Error::NotPositive(_))
        ));
        assert!(matches!(PureState::zeros(21), Err(Error::RegisterTooLarge { .. })));
    }

    #[test]
    fn ghz_branch_reduction_keeps_pointer_correlation() {
        let (a, b) = (0.6, 0.8);
        let mut v = CVector::zeros(8);
        v[0] = c(a, 0.0);
        v[7] = c(b, 0.0);
        let rho = PureState::from_vector(v).unwrap().density();
        let sa = partial_trace(&rho, &QubitSet::range(0, 2)).unwrap();
        let expected = diag(&[a * a, 0.0, 0.0, b * b]);
        assert!(sa.distance(&expected) < 1e-15);
    }

    #[test]
    fn product_state_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ra = random_density(1, &mut rng);
        let rb = random_density(2, &mut rng);
        let ab = ra.tensor(&rb).unwrap();
        let back = partial_trace(&ab, &QubitSet::range(0, 1)).unwrap();
        assert!(back.distance(&ra) < 1e-12);
        let back_b = partial_trace(&ab, &QubitSet::range(1, 3)).unwrap();
        assert!(back_b.distance(&rb) < 1e-12);
    }

    #[test]
    fn partial_trace_matches_index_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let psi = random_state(3, &mut rng);
        let rho = psi.density();
        // element-wise oracle: <i| Tr_{12} rho |j> = sum_{k} rho[(i k), (j k)]
        let mut oracle = [[c(0., 0.); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..4 {
                    oracle[i][j] += psi.amplitude(i * 4 + k) * psi.amplitude(j * 4 + k).conj();
                }
            }
        }
        let red = partial_trace(&rho, &QubitSet::new([0]).unwrap()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((red.element(i, j) - oracle[i][j]).norm() < 1e-12);
            }
        }
        assert!((red.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_respects_listed_order() {
        // |01>: keeping (1, 0) should give |10>
        let rho = PureState::basis(2, 1).unwrap().density();
        let red = partial_trace(&rho, &QubitSet::new([1, 0]).unwrap()).unwrap();
        assert_eq!(red.diagonal(), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn partial_trace_rejects_empty_and_out_of_range() {
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        assert_eq!(
            partial_trace(&rho, &QubitSet::new([]).unwrap()),
            Err(Error::EmptyQubitSet)
        );
        assert!(matches!(
            partial_trace(&rho, &QubitSet::new([2]).unwrap()),
            Err(Error::QubitOutOfRange { .. })
        ));
        assert_eq!(QubitSet::new([1, 1]), Err(Error::DuplicateQubit(1)));
    }

    #[test]
    fn entropy_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(von_neumann_entropy(&random_state(3, &mut rng).density()) < 1e-9);
        assert!((von_neumann_entropy(&diag(&[0.5, 0.5])) - 1.0).abs() < 1e-15);
        // -(1/4) log2(1/4) - (3/4) log2(3/4)
        let expected = 0.25 * 2.0 + 0.75 * (4.0f64 / 3.0).log2();
        assert!((von_neumann_entropy(&diag(&[0.25, 0.75])) - expected).abs() < 1e-14);
        assert!((expected - 0.811_278_124_459_132_8).abs() < 1e-15);
        let mixed3 = DensityMatrix::maximally_mixed(3).unwrap();
        assert!((von_neumann_entropy(&mixed3) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn purity_values() {
        assert!((purity(&PureState::plus().density()) - 1.0).abs() < 1e-15);
        assert!((purity(&diag(&[0.5, 0.5])) - 0.5).abs() < 1e-15);
        assert!((purity(&diag(&[0.36, 0.64])) - 0.5392).abs() < 1e-15);
    }

    #[test]
    fn born_values() {
        let rho = PureState::zeros(1).unwrap().density();
        let p0 = Projector::basis(1, &[0]).unwrap();
        assert_eq!(born_probability(&rho, &p0).unwrap(), 1.0);

        let mixed = DensityMatrix::maximally_mixed(3).unwrap();
        let one = Projector::basis(3, &[5]).unwrap();
        assert!((born_probability(&mixed, &one).unwrap() - 0.125).abs() < 1e-15);
        let three = Projector::basis(3, &[0, 2, 7]).unwrap();
        assert!((born_probability(&mixed, &three).unwrap() - 3.0 / 8.0).abs() < 1e-15);

        assert!(matches!(
            born_probability(&mixed, &p0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projector_validation() {
        let not_idem = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.5, 0.), c(1., 0.)]));
        assert!(matches!(Projector::new(not_idem), Err(Error::NotIdempotent(_))));
        let p = Projector::onto_span(
            &[
                PureState::zeros(1).unwrap().amplitudes().clone(),
                PureState::plus().amplitudes().clone(),
            ],
            2,
        )
        .unwrap();
        assert_eq!(p.rank(), 2);
        assert!(max_abs_diff(p.matrix(), &CMatrix::identity(2, 2)) < 1e-12);
        assert!(Projector::new(p.matrix().clone()).is_ok());
    }

    #[test]
    fn unitary_evolution_matches_rotation() {
        // exp(-i X t) = cos t I - i sin t X
        let t = 0.37;
        let u = unitary_evolution(&gates::pauli_x(), t);
        let expected = gates::identity() * c(t.cos(), 0.0) - gates::pauli_x() * c(0.0, t.sin());
        assert!(max_abs_diff(&u, &expected) < 1e-14);
        assert!(check_unitary(&random_unitary(4, &mut ChaCha8Rng::seed_from_u64(1))).is_ok());
    }
}
