//! Environment as a witness: conditional environment records, their
//! redundancy distance, and how well a record survives errors.
//!
//! The redundancy distance between two records is the least number of
//! single-qubit Pauli flips (X, Y and Z each count one) that turns one record
//! into the other up to a global phase.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuits::{self, decoherence_chain, Gate};
use crate::linalg::{c, CVector, PureState, QubitSet, C64};
use crate::{par, Error, Result};

/// Records with weight at or below this are null.
pub const NULL_WEIGHT: f64 = 1e-12;
/// Records "coincide" when their overlap modulus reaches `1 - OVERLAP_TOL`.
pub const OVERLAP_TOL: f64 = 1e-9;
/// Exhaustive flip search is limited to this many environment qubits.
pub const MAX_SEARCH_QUBITS: usize = 8;

/// Pure state of system and environment with the split between them.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    state: PureState,
    system: QubitSet,
    environment: QubitSet,
}

impl JointState {
    pub fn new(state: PureState, system: QubitSet, environment: QubitSet) -> Result<Self> {
        let width = state.num_qubits();
        system.check_within(width)?;
        environment.check_within(width)?;
        if let Some(&q) = system.indices().iter().find(|q| environment.contains(**q)) {
            return Err(Error::Overlap(q));
        }
        if system.len() + environment.len() != width || system.is_empty() {
            return Err(Error::NotAPartition);
        }
        Ok(JointState {
            state,
            system,
            environment,
        })
    }

    /// `(|0>|0...0> + |1>|1...1>)/sqrt 2` with the system on qubit 0, built
    /// by c-nots from the system onto each environment qubit.
    pub fn ghz_branches(env_qubits: usize) -> Result<Self> {
        let input = PureState::plus().tensor(&PureState::zeros(env_qubits)?)?;
        let env = QubitSet::range(1, 1 + env_qubits);
        let state = decoherence_chain(0, &env)?.apply(&input)?;
        JointState::new(state, QubitSet::range(0, 1), env)
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn system(&self) -> &QubitSet {
        &self.system
    }

    pub fn environment(&self) -> &QubitSet {
        &self.environment
    }

    fn with_state(&self, state: PureState) -> JointState {
        JointState {
            state,
            system: self.system.clone(),
            environment: self.environment.clone(),
        }
    }
}

/// Conditional environment state `<phi|Psi_SE>`, normalized, with its weight.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentRecord {
    amplitudes: CVector,
    weight: f64,
    num_qubits: usize,
}

impl EnvironmentRecord {
    /// Record from explicit amplitudes (normalized here).
    pub fn from_state(state: &PureState) -> Self {
        EnvironmentRecord {
            amplitudes: state.amplitudes().clone(),
            weight: 1.0,
            num_qubits: state.num_qubits(),
        }
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn is_null(&self) -> bool {
        self.weight <= NULL_WEIGHT
    }

    /// The normalized record as a state; `None` for a null record.
    pub fn state(&self) -> Option<PureState> {
        (!self.is_null()).then(|| PureState::from_raw(self.amplitudes.clone(), self.num_qubits))
    }

    /// `|<self|other>|`.
    pub fn overlap(&self, other: &EnvironmentRecord) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm()
    }
}

/// Conditions the joint state on the system being in `phi`.
pub fn environment_record(j: &JointState, phi: &PureState) -> Result<EnvironmentRecord> {
    if phi.num_qubits() != j.system.len() {
        return Err(Error::DimensionMismatch {
            expected: 1 << j.system.len(),
            got: phi.dim(),
        });
    }
    let width = j.state.num_qubits();
    let sys = j.system.offsets(width);
    let env = j.environment.offsets(width);
    let psi = j.state.amplitudes();
    let mut amps = CVector::from_iterator(
        env.len(),
        env.iter().map(|&e| {
            sys.iter()
                .enumerate()
                .map(|(s, &off)| phi.amplitude(s).conj() * psi[off + e])
                .sum::<C64>()
        }),
    );
    let weight = amps.norm_squared();
    if weight > NULL_WEIGHT {
        amps.unscale_mut(weight.sqrt());
    } else {
        amps.fill(c(0.0, 0.0));
    }
    Ok(EnvironmentRecord {
        amplitudes: amps,
        weight,
        num_qubits: j.environment.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        };
        f.write_str(s)
    }
}

/// Per-qubit Pauli assignment on the environment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlipSequence {
    labels: Vec<Pauli>,
}

impl FlipSequence {
    pub fn new(labels: Vec<Pauli>) -> Self {
        FlipSequence { labels }
    }

    pub fn identity(n: usize) -> Self {
        FlipSequence {
            labels: vec![Pauli::I; n],
        }
    }

    pub fn labels(&self) -> &[Pauli] {
        &self.labels
    }

    fn count(&self, p: Pauli) -> usize {
        self.labels.iter().filter(|&&l| l == p).count()
    }

    pub fn n_x(&self) -> usize {
        self.count(Pauli::X)
    }

    pub fn n_y(&self) -> usize {
        self.count(Pauli::Y)
    }

    pub fn n_z(&self) -> usize {
        self.count(Pauli::Z)
    }

    /// `n_x + n_y + n_z`.
    pub fn total(&self) -> usize {
        self.labels.len() - self.count(Pauli::I)
    }

    /// Bit masks (big-endian over the labels) of the X part and Z part,
    /// `Y = i X Z`.
    fn masks(&self) -> (usize, usize) {
        let n = self.labels.len();
        let mut x = 0;
        let mut z = 0;
        for (q, l) in self.labels.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match l {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit
                }
                Pauli::Z => z |= bit,
            }
        }
        (x, z)
    }

    /// `|<b| P |a>|` without materialising `P|a>`.
    fn overlap(&self, a: &CVector, b: &CVector) -> f64 {
        let (xm, zm) = self.masks();
        let mut acc = c(0.0, 0.0);
        for k in 0..a.len() {
            let amp = a[k];
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            let term = b[k ^ xm].conj() * amp;
            if (k & zm).count_ones() % 2 == 1 {
                acc -= term;
            } else {
                acc += term;
            }
        }
        acc.norm()
    }
}

impl fmt::Display for FlipSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.labels {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// All `k`-element subsets of `0..n`, lexicographic.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

fn check_pair(a: &EnvironmentRecord, b: &EnvironmentRecord) -> Result<()> {
    if a.is_null() || b.is_null() {
        return Err(Error::NullRecord);
    }
    if a.num_qubits != b.num_qubits {
        return Err(Error::DimensionMismatch {
            expected: a.amplitudes.len(),
            got: b.amplitudes.len(),
        });
    }
    if a.num_qubits > MAX_SEARCH_QUBITS {
        return Err(Error::RegisterTooLarge {
            what: "flip-search",
            qubits: a.num_qubits,
            cap: MAX_SEARCH_QUBITS,
        });
    }
    Ok(())
}

/// A cheapest flip sequence mapping `a` onto `b`, or `None` when no Pauli
/// string does.
///
/// Candidates are tried in order of increasing weight, so the first hit is
/// minimal; the search over supports of a given weight runs in parallel.
pub fn min_flip_sequence(a: &EnvironmentRecord, b: &EnvironmentRecord) -> Result<Option<FlipSequence>> {
    check_pair(a, b)?;
    let n = a.num_qubits;
    for weight in 0..=n {
        let supports = combinations(n, weight);
        let hit = par::find_map_first(&supports, |support| {
            let combos = 3usize.pow(weight as u32);
            (0..combos).find_map(|mut code| {
                let mut labels = vec![Pauli::I; n];
                for &q in support {
                    labels[q] = [Pauli::X, Pauli::Y, Pauli::Z][code % 3];
                    code /= 3;
                }
                let seq = FlipSequence::new(labels);
                (seq.overlap(&a.amplitudes, &b.amplitudes) >= 1.0 - OVERLAP_TOL).then_some(seq)
            })
        });
        if hit.is_some() {
            return Ok(hit);
        }
    }
    Ok(None)
}

/// Least number of flips; `None` stands for "unreachable" (infinite).
pub fn redundancy_distance(a: &EnvironmentRecord, b: &EnvironmentRecord) -> Result<Option<usize>> {
    Ok(min_flip_sequence(a, b)?.map(|s| s.total()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum MetricViolation {
    /// `d(a, a) != 0`.
    NonZeroSelfDistance { a: usize },
    /// `d(a, b) != d(b, a)`.
    Asymmetric { a: usize, b: usize },
    /// `d(a, b) + d(b, c) < d(a, c)`.
    Triangle { a: usize, b: usize, c: usize },
}

/// Pairwise distances and any axiom violations found among them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetricReport {
    pub distances: Vec<Vec<Option<usize>>>,
    pub triples_checked: usize,
    pub violations: Vec<MetricViolation>,
}

impl MetricReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

fn sum_inf(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    Some(a? + b?)
}

/// `a >= b` with `None` as infinity.
fn ge_inf(a: Option<usize>, b: Option<usize>) -> bool {
    match (a, b) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(x), Some(y)) => x >= y,
    }
}

/// Computes every ordered pairwise distance and checks the metric axioms
/// over all pairs and triples. Non-negativity holds by type.
pub fn verify_metric_axioms(records: &[EnvironmentRecord]) -> Result<MetricReport> {
    let n = records.len();
    let flat = par::map_range(n * n, |idx| redundancy_distance(&records[idx / n], &records[idx % n]));
    let flat = flat.into_iter().collect::<Result<Vec<_>>>()?;
    let distances: Vec<Vec<Option<usize>>> = flat.chunks(n.max(1)).map(<[_]>::to_vec).collect();
    let mut violations = Vec::new();
    for a in 0..n {
        if distances[a][a] != Some(0) {
            violations.push(MetricViolation::NonZeroSelfDistance { a });
        }
        for b in a + 1..n {
            if distances[a][b] != distances[b][a] {
                violations.push(MetricViolation::Asymmetric { a, b });
            }
        }
    }
    let mut triples_checked = 0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                triples_checked += 1;
                if !ge_inf(sum_inf(distances[a][b], distances[b][c]), distances[a][c]) {
                    violations.push(MetricViolation::Triangle { a, b, c });
                }
            }
        }
    }
    Ok(MetricReport {
        distances,
        triples_checked,
        violations,
    })
}

/// Majority symbol of an odd-length bit list.
pub fn majority_decode(bits: &[u8]) -> Result<u8> {
    if bits.len().is_multiple_of(2) {
        return Err(Error::EvenLength(bits.len()));
    }
    let ones = bits.iter().filter(|&&b| b != 0).count();
    Ok(u8::from(2 * ones > bits.len()))
}

/// Sign estimate from `|+/->` outcomes: even number of `-` means `+` (0).
pub fn parity_decode(bits: &[u8]) -> u8 {
    (bits.iter().filter(|&&b| b != 0).count() % 2) as u8
}

/// Which system observable the environment is asked about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordBasis {
    /// `{|0>, |1>}`, read by majority vote; errors are bit flips.
    Pointer,
    /// `{|+>, |->}`, read by parity of `|+/->` outcomes; errors are phase flips.
    #[serde(alias = "conjugate")]
    Hadamard,
}

impl fmt::Display for RecordBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordBasis::Pointer => "pointer",
            RecordBasis::Hadamard => "hadamard",
        })
    }
}

impl RecordBasis {
    fn system_states(self) -> [PureState; 2] {
        match self {
            RecordBasis::Pointer => [PureState::basis(1, 0).unwrap(), PureState::basis(1, 1).unwrap()],
            RecordBasis::Hadamard => [PureState::plus(), PureState::minus()],
        }
    }

    fn error_gate(self, q: usize) -> Gate {
        match self {
            RecordBasis::Pointer => Gate::x(q),
            RecordBasis::Hadamard => Gate::z(q),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustnessReport {
    /// Number of `k`-qubit error placements.
    pub placements: usize,
    /// Placements times flip/no-flip choices on the afflicted qubits.
    pub patterns: usize,
    pub success_rate: f64,
}

/// Probability that the decoder reads the right system state off the
/// environment, given the joint state after errors.
fn decode_success(j: &JointState, basis: RecordBasis) -> Result<f64> {
    let n = j.environment.len();
    let mut total_weight = 0.0;
    let mut success = 0.0;
    for (branch, phi) in basis.system_states().iter().enumerate() {
        let rec = environment_record(j, phi)?;
        if rec.is_null() {
            continue;
        }
        let mut amps = rec.amplitudes.clone();
        if basis == RecordBasis::Hadamard {
            let mut st = PureState::from_raw(amps, n);
            for q in 0..n {
                st = circuits::apply(&st, &Gate::h(q))?;
            }
            amps = st.amplitudes().clone();
        }
        let mut p_ok = 0.0;
        for (outcome, a) in amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let bits: Vec<u8> = (0..n).map(|q| ((outcome >> (n - 1 - q)) & 1) as u8).collect();
            let guess = match basis {
                RecordBasis::Pointer => majority_decode(&bits)?,
                RecordBasis::Hadamard => parity_decode(&bits),
            };
            if guess as usize == branch {
                p_ok += p;
            }
        }
        total_weight += rec.weight;
        success += rec.weight * p_ok;
    }
    Ok(success / total_weight)
}

/// Exhaustive error-robustness of a two-branch record state.
///
/// Each of the `k` afflicted environment qubits suffers an unknown flip of
/// the type that threatens `basis` (bit flip for pointer decoding, phase flip
/// for the Hadamard sector), i.e. the flip happens or not with equal odds.
/// Every placement and every flip/no-flip choice is enumerated and the mean
/// decoding success returned.
pub fn error_robustness(j: &JointState, basis: RecordBasis, k: usize) -> Result<RobustnessReport> {
    let n = j.environment.len();
    if k > n {
        return Err(Error::TooManyErrors { errors: k, size: n });
    }
    if j.system.len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: 1 << j.system.len(),
        });
    }
    if basis == RecordBasis::Pointer && n.is_multiple_of(2) {
        return Err(Error::EvenLength(n));
    }
    let placements = combinations(n, k);
    let env = j.environment.indices();
    let per_placement = par::map_slice(&placements, |support| -> Result<f64> {
        let mut acc = 0.0;
        for mask in 0..1usize << k {
            let mut state = j.state.clone();
            for (bit, &q) in support.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    state = circuits::apply(&state, &basis.error_gate(env[q]))?;
                }
            }
            acc += decode_success(&j.with_state(state), basis)?;
        }
        Ok(acc / (1usize << k) as f64)
    });
    let per_placement = per_placement.into_iter().collect::<Result<Vec<_>>>()?;
    let success_rate = per_placement.iter().sum::<f64>() / per_placement.len() as f64;
    Ok(RobustnessReport {
        placements: placements.len(),
        patterns: placements.len() << k,
        success_rate,
    })
}

/// Records of the two pointer states and of the two conjugate states.
pub fn branch_records(j: &JointState) -> Result<([EnvironmentRecord; 2], [EnvironmentRecord; 2])> {
    let [z0, z1] = RecordBasis::Pointer.system_states();
    let [p, m] = RecordBasis::Hadamard.system_states();
    Ok((
        [environment_record(j, &z0)?, environment_record(j, &z1)?],
        [environment_record(j, &p)?, environment_record(j, &m)?],
    ))
}
