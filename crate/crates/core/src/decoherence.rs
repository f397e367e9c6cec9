//! Pure-decoherence dynamics and the pointer-observable criterion.
//!
//! A [`DephasingChannel`] damps every off-diagonal element of the density
//! matrix, written in its pointer basis, by `exp(-t / t_D)` and leaves the
//! diagonal alone. `t = 0` is the identity, `t -> inf` is the projection onto
//! the pointer diagonal ([`decohered_limit`]), and the family is a semigroup.

use serde::{Deserialize, Serialize};

use crate::linalg::{c, check_hermitian, check_unitary, gates, max_abs, CMatrix, DensityMatrix, HERMITIAN_TOL};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BasisKind {
    Computational,
    Hadamard,
    Custom,
}

/// Orthonormal basis, stored as the unitary whose columns are the basis
/// vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerBasis {
    unitary: CMatrix,
    kind: BasisKind,
    num_qubits: usize,
}

impl PointerBasis {
    pub fn computational(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        PointerBasis {
            unitary: CMatrix::identity(dim, dim),
            kind: BasisKind::Computational,
            num_qubits,
        }
    }

    /// `{|+>, |->}` on every qubit.
    pub fn hadamard(num_qubits: usize) -> Self {
        PointerBasis {
            unitary: gates::tensor_power(&gates::hadamard(), num_qubits),
            kind: BasisKind::Hadamard,
            num_qubits,
        }
    }

    pub fn from_unitary(unitary: CMatrix) -> Result<Self> {
        check_unitary(&unitary).map_err(|e| match e {
            Error::NotUnitary(d) => Error::NotOrthonormal(d),
            other => other,
        })?;
        let num_qubits = crate::linalg::qubits_for_dim(unitary.nrows())?;
        Ok(PointerBasis {
            unitary,
            kind: BasisKind::Custom,
            num_qubits,
        })
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.unitary.nrows()
    }

    pub fn is_computational(&self) -> bool {
        self.kind == BasisKind::Computational
    }

    /// The same basis conjugated by `u`, i.e. with basis vectors `u|i>`.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        Self::from_unitary(u * &self.unitary)
    }
}

/// Pointer basis plus decoherence timescale (seconds).
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingChannel {
    basis: PointerBasis,
    t_d: f64,
}

impl DephasingChannel {
    pub fn new(basis: PointerBasis, t_d: f64) -> Result<Self> {
        if !(t_d > 0.0 && t_d.is_finite()) {
            return Err(Error::NonPositiveTimescale(t_d));
        }
        Ok(DephasingChannel { basis, t_d })
    }

    pub fn basis(&self) -> &PointerBasis {
        &self.basis
    }

    pub fn t_d(&self) -> f64 {
        self.t_d
    }

    pub fn num_qubits(&self) -> usize {
        self.basis.num_qubits
    }

    /// Off-diagonal survival factor after time `t`.
    pub fn coherence_factor(&self, t: f64) -> f64 {
        (-t / self.t_d).exp()
    }
}

/// Multiplies by `factor` every element whose leading `sys_qubits` indices
/// differ, in the basis `basis ⊗ 1`.
fn damp(rho: &DensityMatrix, basis: &PointerBasis, factor: f64, sys_qubits: usize) -> Result<DensityMatrix> {
    let n = rho.num_qubits();
    if sys_qubits != basis.num_qubits || sys_qubits > n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            got: basis.dim(),
        });
    }
    let rest = n - sys_qubits;
    let full_u = if basis.is_computational() {
        None
    } else if rest == 0 {
        Some(basis.unitary.clone())
    } else {
        let id = CMatrix::identity(1 << rest, 1 << rest);
        Some(basis.unitary.kronecker(&id))
    };
    let mut m = match &full_u {
        Some(u) => u.adjoint() * rho.matrix() * u,
        None => rho.matrix().clone(),
    };
    let dim = m.nrows();
    let f = c(factor, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            if (i >> rest) != (j >> rest) {
                m[(i, j)] *= f;
            }
        }
    }
    if let Some(u) = &full_u {
        m = u * m * u.adjoint();
        // conjugation round-off can leave a tiny anti-Hermitian part
        m = (&m + m.adjoint()) * c(0.5, 0.0);
    }
    Ok(DensityMatrix::from_raw(m))
}

/// Evolves `rho` for time `t` under the channel.
pub fn dephase(rho: &DensityMatrix, ch: &DephasingChannel, t: f64) -> Result<DensityMatrix> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    damp(rho, &ch.basis, ch.coherence_factor(t), rho.num_qubits())
}

/// Applies the channel to the leading qubits of a larger register (the
/// remaining qubits are left alone).
pub fn dephase_subsystem(rho: &DensityMatrix, ch: &DephasingChannel, t: f64) -> Result<DensityMatrix> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    damp(rho, &ch.basis, ch.coherence_factor(t), ch.num_qubits())
}

/// Exact projection onto the pointer-basis diagonal.
pub fn decohered_limit(rho: &DensityMatrix, ch: &DephasingChannel) -> Result<DensityMatrix> {
    damp(rho, &ch.basis, 0.0, rho.num_qubits())
}

/// Pointer-basis populations `<i|rho|i>`.
pub fn pointer_populations(rho: &DensityMatrix, basis: &PointerBasis) -> Result<Vec<f64>> {
    if rho.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: basis.dim(),
        });
    }
    if basis.is_computational() {
        return Ok(rho.diagonal());
    }
    let u = &basis.unitary;
    // <b_i|rho|b_i> column by column, without forming the full product
    let ru = rho.matrix() * u;
    Ok((0..u.ncols()).map(|i| u.column(i).dotc(&ru.column(i)).re).collect())
}

/// Self-Hamiltonian of the apparatus and its coupling to the environment
/// (`hbar = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    self_hamiltonian: CMatrix,
    interaction: CMatrix,
}

impl HamiltonianSpec {
    /// `self_hamiltonian` acts on the apparatus (or on the whole register
    /// when it has the interaction's dimension).
    pub fn new(self_hamiltonian: CMatrix, interaction: CMatrix) -> Result<Self> {
        check_hermitian(&self_hamiltonian)?;
        check_hermitian(&interaction)?;
        let (da, dae) = (self_hamiltonian.nrows(), interaction.nrows());
        if da == 0 || dae % da != 0 {
            return Err(Error::DimensionMismatch { expected: dae, got: da });
        }
        Ok(HamiltonianSpec {
            self_hamiltonian,
            interaction,
        })
    }

    /// `H_A ⊗ 1 + H_AE`.
    pub fn total(&self) -> CMatrix {
        extend(&self.self_hamiltonian, self.interaction.nrows()) + &self.interaction
    }
}

fn extend(op: &CMatrix, dim: usize) -> CMatrix {
    let d = op.nrows();
    if d == dim {
        op.clone()
    } else {
        op.kronecker(&CMatrix::identity(dim / d, dim / d))
    }
}

/// Largest element of `[H_A + H_AE, O]`; zero certifies a pointer
/// observable. `o` acts on the apparatus factor or on the full register.
pub fn pointer_commutator_defect(h: &HamiltonianSpec, o: &CMatrix) -> Result<f64> {
    let dim = h.interaction.nrows();
    if !o.is_square() || o.nrows() == 0 || !dim.is_multiple_of(o.nrows()) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: o.nrows(),
        });
    }
    check_hermitian(o)?;
    let total = h.total();
    let o = extend(o, dim);
    Ok(max_abs(&(&total * &o - &o * &total)))
}

/// Whether the commutator defect is zero to [`HERMITIAN_TOL`] precision.
pub fn is_pointer_observable(h: &HamiltonianSpec, o: &CMatrix) -> Result<bool> {
    Ok(pointer_commutator_defect(h, o)? <= HERMITIAN_TOL)
}

/// Pointer basis as written in experiment configs: a name or a unitary in
/// row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BasisSpec {
    Named(String),
    Unitary(Vec<Vec<[f64; 2]>>),
}

impl Default for BasisSpec {
    fn default() -> Self {
        BasisSpec::Named("computational".into())
    }
}

impl BasisSpec {
    pub fn build(&self, num_qubits: usize) -> Result<PointerBasis> {
        match self {
            BasisSpec::Named(name) => match name.as_str() {
                "computational" => Ok(PointerBasis::computational(num_qubits)),
                "hadamard" => Ok(PointerBasis::hadamard(num_qubits)),
                other => Err(Error::param(
                    "pointer_basis",
                    format!("unknown basis `{other}` (expected computational or hadamard)"),
                )),
            },
            BasisSpec::Unitary(rows) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(Error::param("pointer_basis", "unitary must be square"));
                }
                let m = CMatrix::from_fn(n, n, |i, j| c(rows[i][j][0], rows[i][j][1]));
                let basis = PointerBasis::from_unitary(m).map_err(|e| Error::param("pointer_basis", e.to_string()))?;
                if basis.num_qubits != num_qubits {
                    return Err(Error::param(
                        "pointer_basis",
                        format!("unitary acts on {} qubits, expected {num_qubits}", basis.num_qubits),
                    ));
                }
                Ok(basis)
            }
        }
    }
}

/// Channel section of an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default)]
    pub pointer_basis: BasisSpec,
    #[serde(rename = "t_D", alias = "t_d")]
    pub t_d: f64,
}

impl ChannelSpec {
    pub fn build(&self, num_qubits: usize) -> Result<DephasingChannel> {
        DephasingChannel::new(self.pointer_basis.build(num_qubits)?, self.t_d)
            .map_err(|e| Error::param("t_D", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gates, max_abs_diff, PureState};

    fn z_channel(n: usize) -> DephasingChannel {
        DephasingChannel::new(PointerBasis::computational(n), 1.0).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let rho = PureState::plus().density();
        assert_eq!(dephase(&rho, &z_channel(1), 0.0).unwrap(), rho);
    }

    #[test]
    fn long_time_reaches_diagonal() {
        let psi = PureState::normalized(vec![c(0.3, 0.1), c(-0.5, 0.2), c(0.1, 0.7), c(0.2, -0.2)]).unwrap();
        let rho = psi.density();
        let out = dephase(&rho, &z_channel(2), 40.0).unwrap();
        let probs = psi.probabilities();
        let expected = DensityMatrix::from_diagonal(&probs).unwrap();
        assert!(out.distance(&expected) < 1e-12);
    }

    #[test]
    fn plus_state_at_one_decoherence_time() {
        let out = dephase(&PureState::plus().density(), &z_channel(1), 1.0).unwrap();
        assert!((out.element(0, 1).re - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((out.element(0, 1).re - 0.183_939_720_585_721_17).abs() < 1e-14);
        assert!((out.element(0, 0).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hadamard_basis_dephasing_fixes_plus() {
        let ch = DephasingChannel::new(PointerBasis::hadamard(1), 0.5).unwrap();
        let plus = PureState::plus().density();
        assert!(dephase(&plus, &ch, 3.0).unwrap().distance(&plus) < 1e-15);
        let zero = PureState::zeros(1).unwrap().density();
        let out = decohered_limit(&zero, &ch).unwrap();
        assert!(out.distance(&DensityMatrix::maximally_mixed(1).unwrap()) < 1e-15);
    }

    #[test]
    fn rejects_negative_time_and_bad_timescale() {
        let rho = PureState::plus().density();
        assert_eq!(dephase(&rho, &z_channel(1), -1.0), Err(Error::NegativeTime(-1.0)));
        assert!(DephasingChannel::new(PointerBasis::computational(1), 0.0).is_err());
        let not_unitary = CMatrix::from_diagonal_element(2, 2, c(2.0, 0.0));
        assert!(matches!(
            PointerBasis::from_unitary(not_unitary),
            Err(Error::NotOrthonormal(_))
        ));
    }

    #[test]
    fn limit_examples() {
        let diag = DensityMatrix::from_diagonal(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(decohered_limit(&diag, &z_channel(2)).unwrap(), diag);

        // equal-magnitude superposition with phases -> 1/N on the diagonal
        let phases = [0.3, 1.9, -2.2, 0.7];
        let psi = PureState::new(
            phases
                .iter()
                .map(|&p| num_complex::Complex::from_polar(0.5, p))
                .collect(),
        )
        .unwrap();
        let lim = decohered_limit(&psi.density(), &z_channel(2)).unwrap();
        for p in lim.diagonal() {
            assert!((p - 0.25).abs() < 1e-15);
        }
        assert!(max_abs_diff(lim.matrix(), &CMatrix::from_diagonal(&lim.matrix().diagonal())) < 1e-15);

        let (a, b) = (0.6, 0.8);
        let bell = PureState::new(vec![c(a, 0.), c(0., 0.), c(0., 0.), c(b, 0.)]).unwrap();
        let lim = decohered_limit(&bell.density(), &z_channel(2)).unwrap();
        assert_eq!(lim.diagonal(), vec![a * a, 0.0, 0.0, b * b]);
        assert_eq!(lim.element(0, 3), c(0., 0.));
    }

    #[test]
    fn subsystem_dephasing_leaves_other_factor() {
        // |+>|+>: dephase only the first qubit
        let psi = PureState::plus().tensor(&PureState::plus()).unwrap();
        let out = dephase_subsystem(
            &psi.density(),
            &DephasingChannel::new(PointerBasis::computational(1), 1.0).unwrap(),
            100.0,
        )
        .unwrap();
        let expected = DensityMatrix::from_diagonal(&[0.5, 0.5])
            .unwrap()
            .tensor(&PureState::plus().density())
            .unwrap();
        assert!(out.distance(&expected) < 1e-15);
    }

    #[test]
    fn commutator_defect_examples() {
        let zz = gates::pauli_z().kronecker(&gates::pauli_z());
        let zero = CMatrix::zeros(2, 2);
        let h = HamiltonianSpec::new(zero, zz.clone()).unwrap();
        let z1 = gates::pauli_z().kronecker(&gates::identity());
        assert!(pointer_commutator_defect(&h, &z1).unwrap() <= 1e-12);
        assert!(is_pointer_observable(&h, &gates::pauli_z()).unwrap());

        // [Z⊗Z, X⊗1] = 2i Y⊗Z: every non-zero entry has modulus 2
        let x1 = gates::pauli_x().kronecker(&gates::identity());
        let defect = pointer_commutator_defect(&h, &x1).unwrap();
        assert!((defect - 2.0).abs() < 1e-15);

        let h = HamiltonianSpec::new(gates::pauli_x(), zz).unwrap();
        assert!(pointer_commutator_defect(&h, &z1).unwrap() > 1.0);

        let not_herm = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(matches!(
            pointer_commutator_defect(&h, &not_herm),
            Err(Error::NotHermitian(_))
        ));
        assert!(HamiltonianSpec::new(not_herm, CMatrix::zeros(4, 4)).is_err());
    }

    #[test]
    fn channel_spec_json() {
        let spec: ChannelSpec = serde_json::from_str(r#"{"pointer_basis":"hadamard","t_D":2.0}"#).unwrap();
        let ch = spec.build(1).unwrap();
        assert_eq!(ch.t_d(), 2.0);
        assert_eq!(ch.basis(), &PointerBasis::hadamard(1));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let json = format!(r#"{{"pointer_basis":[[[{s},0],[{s},0]],[[{s},0],[-{s},0]]],"t_D":1}}"#);
        let spec: ChannelSpec = serde_json::from_str(&json).unwrap();
        let ch = spec.build(1).unwrap();
        assert!(max_abs_diff(ch.basis().unitary(), &gates::hadamard()) < 1e-15);

        let bad: ChannelSpec = serde_json::from_str(r#"{"pointer_basis":"diagonal","t_D":1}"#).unwrap();
        assert!(matches!(bad.build(1), Err(Error::InvalidParameter { .. })));
        let bad: ChannelSpec = serde_json::from_str(r#"{"t_D":-1}"#).unwrap();
        assert!(matches!(bad.build(1), Err(Error::InvalidParameter { .. })));
    }
}
