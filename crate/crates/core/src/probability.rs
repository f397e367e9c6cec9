//! Probabilities from decoherence: equal-weight outcomes after dephasing,
//! label permutations that are only harmless once the state is decohered,
//! the ancilla coarse-graining that turns rational probabilities into
//! equal-weight ones, and numerical checks of the classical sum and product
//! rules.

use serde::Serialize;

use crate::decoherence::{decohered_limit, pointer_populations, DephasingChannel};
use crate::linalg::{born_probability, c, hermitian_eigen, CMatrix, CVector, RANK_TOL};
use crate::{DensityMatrix, Error, Projector, PureState, Result};

/// Tolerance on `sum p_k = 1`.
pub const SUM_TOL: f64 = 1e-12;
/// Magnitudes within this count as equal.
pub const MAGNITUDE_TOL: f64 = 1e-10;
/// Projectors commute when `max |[P, Q]|` is at most this.
pub const COMMUTE_TOL: f64 = 1e-12;
/// Events with less probability than this cannot be conditioned on.
pub const UNDEFINED_CONDITIONAL: f64 = 1e-12;
/// Largest ancilla dimension `M` the coarse-graining will expand to.
pub const MAX_ANCILLA_DIM: usize = 1 << 24;

/// Probabilities of mutually exclusive outcomes.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidProbabilities("no outcomes".into()));
        }
        if let Some(x) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidProbabilities(format!("{x} is outside [0, 1]")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidProbabilities(format!("sum is {sum}")));
        }
        Ok(ProbabilityVector(p))
    }

    /// Builds from values that may carry round-off just outside `[0, 1]`.
    fn from_born(p: Vec<f64>) -> Result<Self> {
        Self::new(p.into_iter().map(|x| x.clamp(0.0, 1.0)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `max_k |p_k - q_k|`; vectors of different length are padded with 0.
    pub fn max_deviation(&self, other: &ProbabilityVector) -> f64 {
        let n = self.len().max(other.len());
        (0..n)
            .map(|k| (self.0.get(k).unwrap_or(&0.0) - other.0.get(k).unwrap_or(&0.0)).abs())
            .fold(0.0, f64::max)
    }
}

/// Outcome probabilities of an equal-magnitude superposition after it has
/// decohered in the channel's pointer basis.
pub fn uniform_outcome_probabilities(psi: &PureState, ch: &DephasingChannel) -> Result<ProbabilityVector> {
    if psi.num_qubits() != ch.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: ch.basis().dim(),
            got: psi.dim(),
        });
    }
    let rho = psi.density();
    let mags: Vec<f64> = pointer_populations(&rho, ch.basis())?
        .into_iter()
        .map(|p| p.max(0.0).sqrt())
        .collect();
    let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mags.iter().cloned().fold(0.0, f64::max);
    if hi - lo > MAGNITUDE_TOL {
        return Err(Error::UnequalMagnitudes(hi - lo));
    }
    let limit = decohered_limit(&rho, ch)?;
    ProbabilityVector::from_born(pointer_populations(&limit, ch.basis())?)
}

fn check_permutation(perm: &[usize], dim: usize) -> Result<()> {
    if perm.len() != dim {
        return Err(Error::InvalidPermutation(format!(
            "{} labels for a {dim}-dimensional space",
            perm.len()
        )));
    }
    let mut seen = vec![false; dim];
    for &k in perm {
        if k >= dim || std::mem::replace(&mut seen[k], true) {
            return Err(Error::InvalidPermutation(format!(
                "label {k} is out of range or repeated"
            )));
        }
    }
    Ok(())
}

/// Relabels basis vectors, `|k> -> |perm[k]>`.
pub fn permute_labels(rho: &DensityMatrix, perm: &[usize]) -> Result<DensityMatrix> {
    check_permutation(perm, rho.dim())?;
    let n = rho.dim();
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(perm[i], perm[j])] = rho.element(i, j);
        }
    }
    Ok(DensityMatrix::from_raw(m))
}

fn check_orthonormal(vectors: &[CVector], dim: usize) -> Result<()> {
    let mut worst: f64 = 0.0;
    for (i, a) in vectors.iter().enumerate() {
        if a.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: a.len(),
            });
        }
        for (j, b) in vectors.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.dotc(b) - c(target, 0.0)).norm());
        }
    }
    if worst > MAGNITUDE_TOL {
        return Err(Error::NotOrthonormal(worst));
    }
    Ok(())
}

fn measure(rho: &DensityMatrix, measurement: &[CVector]) -> Result<ProbabilityVector> {
    let p = measurement
        .iter()
        .map(|v| (v.adjoint() * rho.matrix() * v)[(0, 0)].re)
        .collect();
    ProbabilityVector::from_born(p).map_err(|e| match e {
        Error::InvalidProbabilities(why) => {
            Error::InvalidProbabilities(format!("measurement does not cover the state: {why}"))
        }
        other => other,
    })
}

/// Outcome distributions of `rho` and of its label-permuted copy under the
/// same orthonormal measurement. The measurement may be an incomplete set as
/// long as it covers the support of both states.
pub fn permutation_distinguishability(
    rho: &DensityMatrix,
    perm: &[usize],
    measurement: &[CVector],
) -> Result<(ProbabilityVector, ProbabilityVector)> {
    check_orthonormal(measurement, rho.dim())?;
    let permuted = permute_labels(rho, perm)?;
    Ok((measure(rho, measurement)?, measure(&permuted, measurement)?))
}

/// Equal-weight expansion of a probability vector: outcome `k` is split into
/// `n_k` of `M` ancilla-resolved outcomes of weight `1/M` each.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoarseGraining {
    pub p: ProbabilityVector,
    pub m: usize,
    pub degeneracies: Vec<usize>,
    /// Outcomes with `p_k > 0` that received no ancilla states.
    pub deficit: Vec<usize>,
}

impl CoarseGraining {
    /// `max_k |p_k - n_k / M|`.
    pub fn deviation(&self) -> f64 {
        self.p
            .values()
            .iter()
            .zip(&self.degeneracies)
            .map(|(p, &n)| (p - n as f64 / self.m as f64).abs())
            .fold(0.0, f64::max)
    }

    pub fn has_deficit(&self) -> bool {
        !self.deficit.is_empty()
    }
}

/// Largest-remainder apportionment of `M` equal-weight states to `p`;
/// remainder ties go to the lower index.
pub fn coarse_grain(p: &ProbabilityVector, m: usize) -> Result<CoarseGraining> {
    if m == 0 {
        return Err(Error::param("M", "must be positive"));
    }
    if m > MAX_ANCILLA_DIM {
        return Err(Error::param("M", format!("exceeds the cap of {MAX_ANCILLA_DIM}")));
    }
    let total: f64 = p.values().iter().sum();
    let quotas: Vec<f64> = p.values().iter().map(|x| x / total * m as f64).collect();
    let mut n: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = n.iter().sum();
    let mut order: Vec<usize> = (0..n.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - n[a] as f64, quotas[b] - n[b] as f64);
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(m.saturating_sub(assigned)) {
        n[k] += 1;
    }
    let deficit = (0..n.len()).filter(|&k| n[k] == 0 && p.values()[k] > 0.0).collect();
    Ok(CoarseGraining {
        p: p.clone(),
        m,
        degeneracies: n,
        deficit,
    })
}

/// Builds the flat `M`-outcome distribution and sums it back over each
/// outcome's group, giving `diag(n_k / M)` (zero-padded to a whole number of
/// qubits) and its deviation from `p`.
pub fn reconstruct_reduced(cg: &CoarseGraining) -> Result<(DensityMatrix, f64)> {
    let flat = vec![1.0 / cg.m as f64; cg.m];
    let mut reduced = Vec::with_capacity(cg.degeneracies.len().next_power_of_two());
    let mut start = 0;
    for &nk in &cg.degeneracies {
        reduced.push(flat[start..start + nk].iter().sum::<f64>());
        start += nk;
    }
    if start != cg.m {
        return Err(Error::param(
            "degeneracies",
            format!("sum to {start}, expected {}", cg.m),
        ));
    }
    let deviation =
        cg.p.values()
            .iter()
            .zip(&reduced)
            .map(|(p, r)| (p - r).abs())
            .fold(0.0, f64::max);
    reduced.resize(reduced.len().next_power_of_two().max(2), 0.0);
    Ok((DensityMatrix::from_diagonal(&reduced)?, deviation))
}

fn check_dims(rho: &DensityMatrix, ps: &[&Projector]) -> Result<()> {
    for p in ps {
        if p.dim() != rho.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                got: p.dim(),
            });
        }
    }
    Ok(())
}

/// Projector onto the eigenvectors of `m` whose eigenvalue passes `keep`.
fn spectral_projector(m: &CMatrix, keep: impl Fn(f64) -> bool) -> Projector {
    let (vals, vecs) = hermitian_eigen(m);
    let basis: Vec<CVector> = vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| keep(v))
        .map(|(i, _)| vecs.column(i).into_owned())
        .collect();
    Projector::from_orthonormal(&basis, m.nrows())
}

/// Projector onto the closed span of both ranges.
pub fn union(b: &Projector, c: &Projector) -> Projector {
    spectral_projector(&(b.matrix() + c.matrix()), |v| v > RANK_TOL)
}

/// Projector onto the intersection of both ranges: the kernel of
/// `(1 - b) + (1 - c)`.
pub fn intersection(b: &Projector, c: &Projector) -> Projector {
    let n = b.dim();
    let m = CMatrix::identity(n, n) * c64(2.0) - b.matrix() - c.matrix();
    spectral_projector(&m, |v| v < RANK_TOL)
}

fn c64(x: f64) -> crate::C64 {
    c(x, 0.0)
}

/// `|mu(b or c) - mu(b) - mu(c) + mu(b and c)|`, with the lattice operations
/// of subspaces.
pub fn sum_rule_violation(rho: &DensityMatrix, b: &Projector, c: &Projector) -> Result<f64> {
    check_dims(rho, &[b, c])?;
    let mu = |p: &Projector| born_probability(rho, p);
    Ok((mu(&union(b, c))? - mu(b)? - mu(c)? + mu(&intersection(b, c))?).abs())
}

fn product(a: &Projector, b: &Projector) -> Result<Projector> {
    let m = a.matrix() * b.matrix();
    // commuting projectors: symmetrize away the residual commutator
    Projector::new((&m + m.adjoint()) * c64(0.5))
}

/// `|mu(c b | a) - mu(c | b a) mu(b | a)|` for pairwise commuting
/// projectors, conditionals being ratios of Born probabilities. `None` when
/// `mu(a)` is too small to condition on. If `mu(b a)` vanishes the product
/// side is taken as 0, since `mu(b | a)` is then 0.
pub fn conditional_product_check(
    rho: &DensityMatrix,
    a: &Projector,
    b: &Projector,
    c: &Projector,
) -> Result<Option<f64>> {
    check_dims(rho, &[a, b, c])?;
    let worst = [a.commutator_norm(b), a.commutator_norm(c), b.commutator_norm(c)]
        .into_iter()
        .fold(0.0, f64::max);
    if worst > COMMUTE_TOL {
        return Err(Error::NonCommuting(worst));
    }
    let mu_a = born_probability(rho, a)?;
    if mu_a < UNDEFINED_CONDITIONAL {
        return Ok(None);
    }
    let ba = product(b, a)?;
    let cba = product(c, &ba)?;
    let mu_ba = born_probability(rho, &ba)?;
    let mu_cba = born_probability(rho, &cba)?;
    let lhs = mu_cba / mu_a;
    let rhs = if mu_ba < UNDEFINED_CONDITIONAL {
        0.0
    } else {
        (mu_cba / mu_ba) * (mu_ba / mu_a)
    };
    Ok(Some((lhs - rhs).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoherence::PointerBasis;
    use crate::linalg::CVector;
    use crate::C64;

    fn z_channel(n: usize) -> DephasingChannel {
        DephasingChannel::new(PointerBasis::computational(n), 1.0).unwrap()
    }

    fn vector(re: &[f64]) -> CVector {
        CVector::from_iterator(re.len(), re.iter().map(|&x| c(x, 0.0)))
    }

    #[test]
    fn probability_vector_validation() {
        assert!(ProbabilityVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbabilityVector::new(vec![]).is_err());
        assert!(ProbabilityVector::new(vec![1.2, -0.2]).is_err());
        assert!(ProbabilityVector::new(vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn uniform_outcomes() {
        let phases = [0.3, 1.7, -2.2, 0.9];
        let amps = phases.iter().map(|&f: &f64| C64::from_polar(0.5, f)).collect();
        let psi = PureState::new(amps).unwrap();
        let p = uniform_outcome_probabilities(&psi, &z_channel(2)).unwrap();
        assert!(p.values().iter().all(|x| (x - 0.25).abs() < 1e-12));

        let p = uniform_outcome_probabilities(&PureState::plus(), &z_channel(1)).unwrap();
        assert!(p.values().iter().all(|x| (x - 0.5).abs() < 1e-12));

        let s = 1.0 / 8f64.sqrt();
        let alt = (0..8).map(|k| c(if k % 2 == 0 { s } else { -s }, 0.0)).collect();
        let p = uniform_outcome_probabilities(&PureState::new(alt).unwrap(), &z_channel(3)).unwrap();
        assert!(p.values().iter().all(|x| (x - 0.125).abs() < 1e-12));

        let uneven = PureState::qubit(c(0.6, 0.0), c(0.8, 0.0)).unwrap();
        assert!(matches!(
            uniform_outcome_probabilities(&uneven, &z_channel(1)),
            Err(Error::UnequalMagnitudes(_))
        ));
    }

    fn permutation_example() -> (DensityMatrix, Vec<CVector>) {
        let s = 1.0 / 3f64.sqrt();
        let r = 1.0 / 2f64.sqrt();
        let psi = PureState::new(vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]).unwrap();
        let meas = vec![
            vector(&[0.0, 1.0, 0.0, 0.0]),
            vector(&[0.0, 0.0, r, r]),
            vector(&[0.0, 0.0, r, -r]),
        ];
        (psi.density(), meas)
    }

    #[test]
    fn permutation_changes_undecohered_outcomes() {
        let (rho, meas) = permutation_example();
        let (p, q) = permutation_distinguishability(&rho, &[0, 3, 2, 1], &meas).unwrap();
        let expect_p = ProbabilityVector::new(vec![1.0 / 3.0, 0.0, 2.0 / 3.0]).unwrap();
        let expect_q = ProbabilityVector::new(vec![1.0 / 3.0, 2.0 / 3.0, 0.0]).unwrap();
        assert!(p.max_deviation(&expect_p) < 1e-12);
        assert!(q.max_deviation(&expect_q) < 1e-12);

        let (p, q) = permutation_distinguishability(&rho, &[0, 1, 2, 3], &meas).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn permutation_is_harmless_after_decoherence() {
        let (rho, _) = permutation_example();
        let rho = decohered_limit(&rho, &z_channel(2)).unwrap();
        let pointer: Vec<CVector> = (1..4)
            .map(|k| CVector::from_fn(4, |i, _| c((i == k) as u8 as f64, 0.0)))
            .collect();
        // permutations of the three occupied labels
        for perm in [[0, 1, 3, 2], [0, 2, 1, 3], [0, 3, 2, 1], [0, 2, 3, 1], [0, 3, 1, 2]] {
            let (p, q) = permutation_distinguishability(&rho, &perm, &pointer).unwrap();
            assert!(p.max_deviation(&q) < 1e-15);
        }
    }

    #[test]
    fn permutation_errors() {
        let (rho, meas) = permutation_example();
        assert!(matches!(
            permutation_distinguishability(&rho, &[0, 1, 1, 3], &meas),
            Err(Error::InvalidPermutation(_))
        ));
        assert!(permutation_distinguishability(&rho, &[0, 1, 2], &meas).is_err());
        let bad = vec![vector(&[0.0, 1.0, 0.0, 0.0]), vector(&[0.0, 1.0, 0.0, 0.0])];
        assert!(matches!(
            permutation_distinguishability(&rho, &[0, 1, 2, 3], &bad),
            Err(Error::NotOrthonormal(_))
        ));
        let partial = vec![vector(&[0.0, 1.0, 0.0, 0.0])];
        assert!(permutation_distinguishability(&rho, &[0, 1, 2, 3], &partial).is_err());
    }

    #[test]
    fn coarse_graining_examples() {
        let p = ProbabilityVector::new(vec![0.25, 0.75]).unwrap();
        let cg = coarse_grain(&p, 4).unwrap();
        assert_eq!(cg.degeneracies, vec![1, 3]);
        assert_eq!(reconstruct_reduced(&cg).unwrap().1, 0.0);

        let p = ProbabilityVector::new(vec![1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let cg = coarse_grain(&p, 4).unwrap();
        assert_eq!(cg.degeneracies, vec![1, 3]);
        let (rho, dev) = reconstruct_reduced(&cg).unwrap();
        assert!((dev - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(rho.diagonal(), vec![0.25, 0.75]);

        let cg = coarse_grain(&ProbabilityVector::new(vec![1.0]).unwrap(), 7).unwrap();
        assert_eq!(cg.degeneracies, vec![7]);
        let (rho, dev) = reconstruct_reduced(&cg).unwrap();
        assert!((rho.diagonal()[0] - 1.0).abs() < 1e-15 && rho.diagonal()[1] == 0.0);
        assert!(dev < 1e-15);
    }

    #[test]
    fn coarse_graining_converges() {
        let p = ProbabilityVector::new(vec![1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let mut last = f64::INFINITY;
        for m in (2..=10).map(|e| 1usize << e) {
            let cg = coarse_grain(&p, m).unwrap();
            let (_, dev) = reconstruct_reduced(&cg).unwrap();
            assert!(dev <= 1.0 / m as f64 && dev <= last, "M = {m}");
            assert_eq!(cg.degeneracies.iter().sum::<usize>(), m);
            last = dev;
        }
    }

    #[test]
    fn coarse_graining_flags_deficit() {
        let p = ProbabilityVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let cg = coarse_grain(&p, 2).unwrap();
        assert_eq!(cg.degeneracies.iter().sum::<usize>(), 2);
        assert!(cg.has_deficit());
        assert!(!coarse_grain(&p, 10).unwrap().has_deficit());
        assert!(coarse_grain(&p, 0).is_err());
        // equal remainders: the lower index wins
        let half = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(coarse_grain(&half, 1).unwrap().degeneracies, vec![1, 0]);
    }

    #[test]
    fn sum_rule_examples() {
        let zero = PureState::zeros(1).unwrap().density();
        let b = Projector::basis(1, &[0]).unwrap();
        let c_plus = Projector::from_state(&PureState::plus());
        let v = sum_rule_violation(&zero, &b, &c_plus).unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{v}");
        assert!(sum_rule_violation(&zero, &c_plus, &c_plus).unwrap() < 1e-12);

        let rho = DensityMatrix::from_diagonal(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let b = Projector::basis(2, &[i]).unwrap();
                let c = Projector::basis(2, &[j]).unwrap();
                assert!(sum_rule_violation(&rho, &b, &c).unwrap() < 1e-12);
            }
        }
        assert_eq!(intersection(&b, &c_plus).rank(), 0);
        assert_eq!(union(&b, &c_plus).rank(), 2);
    }

    #[test]
    fn conditional_products() {
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        let a = Projector::qubit_value(2, 0, 0).unwrap();
        let b = Projector::qubit_value(2, 1, 0).unwrap();
        assert!(conditional_product_check(&rho, &a, &b, &a).unwrap().unwrap() < 1e-15);

        let id = Projector::identity(4);
        let rho = DensityMatrix::from_diagonal(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let c = Projector::basis(2, &[1, 2]).unwrap();
        assert!(conditional_product_check(&rho, &id, &b, &c).unwrap().unwrap() < 1e-15);

        let empty = DensityMatrix::from_diagonal(&[0.0, 0.0, 0.5, 0.5]).unwrap();
        assert_eq!(conditional_product_check(&empty, &a, &b, &c).unwrap(), None);

        let plus = Projector::from_state(&PureState::plus()).tensor(&Projector::identity(2));
        assert!(matches!(
            conditional_product_check(&rho, &a, &plus, &c),
            Err(Error::NonCommuting(_))
        ));
    }
}
