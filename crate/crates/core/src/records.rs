//! Observer memories as records: correlating a memory with a system,
//! predicting with the record (`g(t)`), per-outcome horizons, redundant
//! multi-cell records, branch counting, and a compressor used as a stand-in
//! for the algorithmic complexity of a record sequence.
//!
//! Joint states are laid out system first, memory second.

use rand::Rng;
use serde::Serialize;

use crate::decoherence::{decohered_limit, pointer_populations, DephasingChannel, PointerBasis};
use crate::linalg::{c, gates, hermitian_eigen, CMatrix, CVector, MAX_DENSITY_QUBITS, RANK_TOL};
use crate::probability::{ProbabilityVector, UNDEFINED_CONDITIONAL};
use crate::redundancy::RecordBasis;
use crate::sieve::{predictability_horizon_with, trajectory_of, DynamicsSpec, EntropyMeasure, Horizon};
use crate::{par, DensityMatrix, Error, Projector, PureState, Result};

/// Records overlapping by more than this (`Tr rho_i rho_j`) are rejected.
pub const RECORD_ORTHOGONALITY_TOL: f64 = 1e-10;
/// Default weight a diagonal entry needs to count as a branch.
pub const DEFAULT_BRANCH_THRESHOLD: f64 = 1e-6;
/// Shortest sequence the compressibility proxy accepts.
pub const MIN_SEQUENCE_LEN: usize = 16;

/// Outcome probabilities, the system state each outcome leaves behind, and
/// the memory state that records it.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryModel {
    probabilities: ProbabilityVector,
    system_states: Vec<PureState>,
    records: Vec<DensityMatrix>,
    /// Orthonormal basis of each record's support.
    supports: Vec<Vec<CVector>>,
}

fn support(rho: &DensityMatrix) -> Vec<CVector> {
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    vals.iter()
        .enumerate()
        .filter(|(_, &v)| v > RANK_TOL)
        .map(|(i, _)| vecs.column(i).into_owned())
        .collect()
}

impl MemoryModel {
    pub fn new(
        probabilities: ProbabilityVector,
        system_states: Vec<PureState>,
        records: Vec<DensityMatrix>,
    ) -> Result<Self> {
        let n = probabilities.len();
        if system_states.len() != n || records.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: system_states.len().min(records.len()),
            });
        }
        for s in &system_states[1..] {
            if s.dim() != system_states[0].dim() {
                return Err(Error::DimensionMismatch {
                    expected: system_states[0].dim(),
                    got: s.dim(),
                });
            }
        }
        for r in &records[1..] {
            if r.dim() != records[0].dim() {
                return Err(Error::DimensionMismatch {
                    expected: records[0].dim(),
                    got: r.dim(),
                });
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let overlap = (records[i].matrix() * records[j].matrix()).trace().re.abs();
                if overlap > RECORD_ORTHOGONALITY_TOL {
                    return Err(Error::NonOrthogonalRecords(overlap));
                }
            }
        }
        let total = system_states[0].num_qubits() + records[0].num_qubits();
        if total > MAX_DENSITY_QUBITS {
            return Err(Error::RegisterTooLarge {
                what: "system+memory",
                qubits: total,
                cap: MAX_DENSITY_QUBITS,
            });
        }
        let supports = records.iter().map(support).collect();
        Ok(MemoryModel {
            probabilities,
            system_states,
            records,
            supports,
        })
    }

    /// Pure records `|mu_i>`.
    pub fn pure(
        probabilities: ProbabilityVector,
        system_states: Vec<PureState>,
        records: Vec<PureState>,
    ) -> Result<Self> {
        let records = records.iter().map(PureState::density).collect();
        Self::new(probabilities, system_states, records)
    }

    /// One system qubit in the pointer basis, recorded by one memory qubit:
    /// outcome `i` leaves `|i>` and writes `|i>`.
    pub fn pointer_qubit(probabilities: ProbabilityVector) -> Result<Self> {
        if probabilities.len() != 2 {
            return Err(Error::param("probabilities", "a qubit has two outcomes"));
        }
        let basis = || (0..2).map(|i| PureState::basis(1, i).unwrap()).collect();
        Self::pure(probabilities, basis(), basis())
    }

    pub fn probabilities(&self) -> &ProbabilityVector {
        &self.probabilities
    }

    pub fn system_states(&self) -> &[PureState] {
        &self.system_states
    }

    pub fn records(&self) -> &[DensityMatrix] {
        &self.records
    }

    pub fn num_outcomes(&self) -> usize {
        self.records.len()
    }

    pub fn system_qubits(&self) -> usize {
        self.system_states[0].num_qubits()
    }

    pub fn memory_qubits(&self) -> usize {
        self.records[0].num_qubits()
    }

    /// Projector onto record `i`'s support, on the memory alone.
    pub fn record_projector(&self, i: usize) -> Result<Projector> {
        let basis = self
            .supports
            .get(i)
            .ok_or_else(|| Error::param("outcome", format!("no outcome {i}")))?;
        Ok(Projector::from_orthonormal(basis, self.records[0].dim()))
    }

    /// Projector onto system state `i`.
    pub fn proposition(&self, i: usize) -> Result<Projector> {
        let s = self
            .system_states
            .get(i)
            .ok_or_else(|| Error::param("outcome", format!("no outcome {i}")))?;
        Ok(Projector::from_state(s))
    }
}

/// `sum_i p_i |s_i><s_i| ⊗ rho_mu_i`.
pub fn correlate(m: &MemoryModel) -> Result<DensityMatrix> {
    let parts = m
        .probabilities
        .values()
        .iter()
        .zip(&m.system_states)
        .zip(&m.records)
        .map(|((&p, s), r)| Ok((p, s.density().tensor(r)?)))
        .collect::<Result<Vec<_>>>()?;
    DensityMatrix::mixture_of_valid(&parts)
}

/// Dephasing in the memory's record basis: coherences between different
/// record blocks (and the block outside every record) are multiplied by
/// `factor`. `factor = 0` is full decoherence.
pub fn dephase_records(rho: &DensityMatrix, m: &MemoryModel, factor: f64) -> Result<DensityMatrix> {
    let dm = m.records[0].dim();
    if !rho.dim().is_multiple_of(dm) {
        return Err(Error::DimensionMismatch {
            expected: dm,
            got: rho.dim(),
        });
    }
    let id_s = CMatrix::identity(rho.dim() / dm, rho.dim() / dm);
    let mut blocks: Vec<CMatrix> = (0..m.num_outcomes())
        .map(|i| Ok(id_s.kronecker(m.record_projector(i)?.matrix())))
        .collect::<Result<_>>()?;
    let rest = CMatrix::identity(rho.dim(), rho.dim())
        - blocks.iter().fold(CMatrix::zeros(rho.dim(), rho.dim()), |a, b| a + b);
    blocks.push(rest);
    let r = rho.matrix();
    let diag = blocks
        .iter()
        .fold(CMatrix::zeros(rho.dim(), rho.dim()), |acc, p| acc + p * r * p);
    let out = &diag + (r - &diag) * c(factor, 0.0);
    DensityMatrix::new((&out + out.adjoint()) * c(0.5, 0.0))
}

fn system_dim(rho: &DensityMatrix, record: &Projector) -> Result<usize> {
    if record.dim() == 0 || !rho.dim().is_multiple_of(record.dim()) {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: record.dim(),
        });
    }
    Ok(rho.dim() / record.dim())
}

/// `g = p(proposition, record) / p(record)`, with the proposition acting on
/// the system and the record projector on the memory. `None` when the record
/// has (numerically) zero probability.
pub fn conditional_g(rho: &DensityMatrix, record: &Projector, proposition: &Projector) -> Result<Option<f64>> {
    let ds = system_dim(rho, record)?;
    if proposition.dim() != ds {
        return Err(Error::DimensionMismatch {
            expected: ds,
            got: proposition.dim(),
        });
    }
    let mem = Projector::identity(ds).tensor(record);
    let joint = proposition.tensor(record);
    let p_record = crate::linalg::born_probability(rho, &mem)?;
    if p_record < UNDEFINED_CONDITIONAL {
        return Ok(None);
    }
    Ok(Some(crate::linalg::born_probability(rho, &joint)? / p_record))
}

/// Symmetric bit-flip mixing on each of the leading `sys_qubits` qubits:
/// `rho -> (1 - q) rho + q X rho X` with `q = (1 - e^{-2 gamma t}) / 2`.
pub fn flip_mixing(rho: &DensityMatrix, sys_qubits: usize, gamma: f64, t: f64) -> Result<DensityMatrix> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::param("gamma", "mixing rate must be finite and non-negative"));
    }
    let n = rho.num_qubits();
    if sys_qubits > n {
        return Err(Error::QubitOutOfRange {
            index: sys_qubits,
            width: n,
        });
    }
    let q = 0.5 * (1.0 - (-2.0 * gamma * t).exp());
    let mut m = rho.matrix().clone();
    for qubit in 0..sys_qubits {
        let mask = 1usize << (n - 1 - qubit);
        let flipped = CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i ^ mask, j ^ mask)]);
        m = m * c(1.0 - q, 0.0) + flipped * c(q, 0.0);
    }
    Ok(DensityMatrix::from_raw(m))
}

/// System dynamics for the predictive probability: pointer dephasing plus
/// optional symmetric bit-flip mixing at rate `gamma`. Both are Pauli
/// channels, so they commute and can be applied in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingDynamics {
    pub channel: DephasingChannel,
    pub gamma: f64,
}

impl MixingDynamics {
    pub fn evolve(&self, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        let dephased = crate::decoherence::dephase_subsystem(rho, &self.channel, t)?;
        flip_mixing(&dephased, self.channel.num_qubits(), self.gamma, t)
    }
}

/// `g(t)` for outcome `i` at each time, the proposition being the system
/// state that outcome left behind.
pub fn predictive_g(
    m: &MemoryModel,
    dynamics: &MixingDynamics,
    outcome: usize,
    times: &[f64],
) -> Result<Vec<Option<f64>>> {
    if dynamics.channel.num_qubits() != m.system_qubits() {
        return Err(Error::DimensionMismatch {
            expected: m.system_states[0].dim(),
            got: dynamics.channel.basis().dim(),
        });
    }
    let rho0 = correlate(m)?;
    let record = m.record_projector(outcome)?;
    let prop = m.proposition(outcome)?;
    times
        .iter()
        .map(|&t| conditional_g(&dynamics.evolve(&rho0, t)?, &record, &prop))
        .collect()
}

/// Renormalized system state conditioned on record `i`:
/// `Tr_M[(1 ⊗ P_i) rho (1 ⊗ P_i)] / p_i`.
pub fn conditional_state(rho: &DensityMatrix, m: &MemoryModel, i: usize) -> Result<DensityMatrix> {
    let dm = m.records[0].dim();
    if !rho.dim().is_multiple_of(dm) {
        return Err(Error::DimensionMismatch {
            expected: dm,
            got: rho.dim(),
        });
    }
    let ds = rho.dim() / dm;
    let id_s = CMatrix::identity(ds, ds);
    let basis = m
        .supports
        .get(i)
        .ok_or_else(|| Error::param("outcome", format!("no outcome {i}")))?;
    let mut out = CMatrix::zeros(ds, ds);
    for v in basis {
        let lift = id_s.kronecker(&CMatrix::from_column_slice(dm, 1, v.as_slice()));
        out += lift.adjoint() * rho.matrix() * &lift;
    }
    let p = out.trace().re;
    if p < UNDEFINED_CONDITIONAL {
        return Err(Error::param("outcome", format!("record {i} has zero probability")));
    }
    out.unscale_mut(p);
    DensityMatrix::new((&out + out.adjoint()) * c(0.5, 0.0))
}

/// Predictability horizon of outcome `i`: the joint state evolves under
/// `dynamics` (acting on the system) and the entropy is that of the
/// conditional system state.
pub fn outcome_horizon(m: &MemoryModel, dynamics: &DynamicsSpec, outcome: usize) -> Result<Horizon> {
    outcome_horizon_with(m, dynamics, outcome, EntropyMeasure::VonNeumann)
}

pub fn outcome_horizon_with(
    m: &MemoryModel,
    dynamics: &DynamicsSpec,
    outcome: usize,
    measure: EntropyMeasure,
) -> Result<Horizon> {
    if dynamics.channel().num_qubits() != m.system_qubits() {
        return Err(Error::DimensionMismatch {
            expected: m.system_states[0].dim(),
            got: dynamics.channel().basis().dim(),
        });
    }
    let rho0 = correlate(m)?;
    let traj = trajectory_of(&rho0, dynamics, |rho| conditional_state(rho, m, outcome))?;
    Ok(predictability_horizon_with(&traj, measure))
}

fn power(rho: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    for _ in 1..n {
        out = out.tensor(rho)?;
    }
    Ok(out)
}

/// Each outcome's record copied into `n` memory cells:
/// `sum_i p_i |s_i><s_i| ⊗ rho_mu_i^{⊗n}`.
pub fn redundant_records(m: &MemoryModel, n: usize) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(Error::param("n", "need at least one memory cell"));
    }
    let total = m.system_qubits() + n * m.memory_qubits();
    if total > MAX_DENSITY_QUBITS {
        return Err(Error::RegisterTooLarge {
            what: "system+memory",
            qubits: total,
            cap: MAX_DENSITY_QUBITS,
        });
    }
    let parts = m
        .probabilities
        .values()
        .iter()
        .zip(&m.system_states)
        .zip(&m.records)
        .map(|((&p, s), r)| Ok((p, s.density().tensor(&power(r, n)?)?)))
        .collect::<Result<Vec<_>>>()?;
    DensityMatrix::mixture_of_valid(&parts)
}

/// Probability that all `cells` memory cells show the same value when each
/// is read out in `basis` (`{|0>,|1>}` or `{|+>,|->}` on every qubit).
pub fn consensus_probability(
    rho: &DensityMatrix,
    system_qubits: usize,
    cells: usize,
    basis: RecordBasis,
) -> Result<f64> {
    let n = rho.num_qubits();
    if cells == 0 || system_qubits > n || !(n - system_qubits).is_multiple_of(cells) {
        return Err(Error::param("cells", "memory does not split into equal cells"));
    }
    let mem = n - system_qubits;
    let cell = mem / cells;
    let readout = match basis {
        RecordBasis::Pointer => PointerBasis::computational(n),
        RecordBasis::Hadamard => PointerBasis::from_unitary(
            CMatrix::identity(1 << system_qubits, 1 << system_qubits)
                .kronecker(&gates::tensor_power(&gates::hadamard(), mem)),
        )?,
    };
    let pops = pointer_populations(rho, &readout)?;
    let cell_mask = (1usize << cell) - 1;
    Ok(pops
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let m = k & ((1usize << mem) - 1);
            let first = m & cell_mask;
            (1..cells).all(|j| (m >> (j * cell)) & cell_mask == first)
        })
        .map(|(_, p)| p)
        .sum())
}

/// The `N`-cell record register `sum_i p_i rho_i^{⊗N}` (system traced out),
/// with each cell's record taken from `m` as is (`Pointer`) or rotated by a
/// Hadamard on every qubit (`Hadamard`).
pub fn record_register(m: &MemoryModel, basis: RecordBasis, cells: usize) -> Result<DensityMatrix> {
    if cells == 0 {
        return Err(Error::param("N", "need at least one cell"));
    }
    let total = cells * m.memory_qubits();
    if total > MAX_DENSITY_QUBITS {
        return Err(Error::RegisterTooLarge {
            what: "record",
            qubits: total,
            cap: MAX_DENSITY_QUBITS,
        });
    }
    let h = gates::tensor_power(&gates::hadamard(), m.memory_qubits());
    let parts = m
        .probabilities
        .values()
        .iter()
        .zip(&m.records)
        .map(|(&p, r)| {
            let cell = match basis {
                RecordBasis::Pointer => r.clone(),
                RecordBasis::Hadamard => r.conjugate_by(&h)?,
            };
            Ok((p, power(&cell, cells)?))
        })
        .collect::<Result<Vec<_>>>()?;
    DensityMatrix::mixture_of_valid(&parts)
}

/// Number of branches: diagonal entries of the decohered `N`-cell record
/// register with weight above `threshold`. `ch` is the single-cell channel;
/// the register decoheres in the tensor power of its basis.
pub fn branch_count(
    m: &MemoryModel,
    basis: RecordBasis,
    cells: usize,
    ch: &DephasingChannel,
    threshold: f64,
) -> Result<usize> {
    let min_p = m
        .probabilities
        .values()
        .iter()
        .cloned()
        .filter(|&p| p > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !(threshold > 0.0 && threshold < min_p) {
        return Err(Error::param("threshold", format!("must lie in (0, {min_p})")));
    }
    if ch.num_qubits() != m.memory_qubits() {
        return Err(Error::DimensionMismatch {
            expected: m.records[0].dim(),
            got: ch.basis().dim(),
        });
    }
    let register = record_register(m, basis, cells)?;
    let reg_basis = if ch.basis().is_computational() {
        PointerBasis::computational(register.num_qubits())
    } else {
        PointerBasis::from_unitary(gates::tensor_power(ch.basis().unitary(), cells))?
    };
    let reg_channel = DephasingChannel::new(reg_basis.clone(), ch.t_d())?;
    let decohered = decohered_limit(&register, &reg_channel)?;
    Ok(pointer_populations(&decohered, &reg_basis)?
        .into_iter()
        .filter(|&w| w > threshold)
        .count())
}

/// `branch_count` for each `N` in `cells`, evaluated in parallel.
pub fn branch_sweep(
    m: &MemoryModel,
    basis: RecordBasis,
    cells: &[usize],
    ch: &DephasingChannel,
    threshold: f64,
) -> Result<Vec<usize>> {
    par::map_slice(cells, |&n| branch_count(m, basis, n, ch, threshold))
        .into_iter()
        .collect()
}

/// A time-ordered list of record symbols drawn from `0..alphabet`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordSequence {
    symbols: Vec<u32>,
    alphabet: u32,
}

impl RecordSequence {
    pub fn new(symbols: Vec<u32>, alphabet: u32) -> Result<Self> {
        if alphabet < 2 {
            return Err(Error::param("alphabet", "need at least two symbols"));
        }
        if let Some(s) = symbols.iter().find(|&&s| s >= alphabet) {
            return Err(Error::param(
                "symbols",
                format!("{s} is outside the alphabet of {alphabet}"),
            ));
        }
        Ok(RecordSequence { symbols, alphabet })
    }

    pub fn constant(len: usize, symbol: u32, alphabet: u32) -> Result<Self> {
        Self::new(vec![symbol; len], alphabet)
    }

    /// `0, 1, 0, 1, ...`
    pub fn alternating(len: usize) -> Self {
        RecordSequence {
            symbols: (0..len).map(|i| (i % 2) as u32).collect(),
            alphabet: 2,
        }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, alphabet: u32, rng: &mut R) -> Result<Self> {
        if alphabet < 2 {
            return Err(Error::param("alphabet", "need at least two symbols"));
        }
        Ok(RecordSequence {
            symbols: (0..len).map(|_| rng.random_range(0..alphabet)).collect(),
            alphabet,
        })
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Bits of the plain fixed-width encoding.
    pub fn raw_bits(&self) -> f64 {
        self.len() as f64 * bits_per_symbol(self.alphabet as usize)
    }
}

fn bits_per_symbol(k: usize) -> f64 {
    (usize::BITS - (k - 1).leading_zeros()) as f64
}

fn log2_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).log2()).sum()
}

/// Code length of an adaptive order-0 coder with Laplace (add-one) counts:
/// `log2((L + K - 1)! / ((K - 1)! prod c_k!))`.
fn laplace_bits(counts: &[usize]) -> f64 {
    let k = counts.len();
    if k <= 1 {
        return 0.0;
    }
    let l: usize = counts.iter().sum();
    log2_factorial(l + k - 1) - log2_factorial(k - 1) - counts.iter().map(|&c| log2_factorial(c)).sum::<f64>()
}

/// Which encoding [`compressed_bits`] picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CompressionMode {
    Literal,
    Order0,
    RunLength,
}

/// Compressed size in bits and the mode that achieved it. The compressor
/// takes the best of three encodings plus a 2-bit mode tag; the sequence
/// length is assumed known to the decoder.
///
/// * literal: fixed-width symbols;
/// * order-0: adaptive Laplace coding of the symbols;
/// * run-length: first symbol fixed-width, then for each run the change of
///   symbol (mod `K`, adaptive Laplace over `K - 1` values) and the run
///   length as an Elias-gamma bucket (adaptive Laplace) plus its mantissa.
pub fn compressed_bits(r: &RecordSequence) -> (f64, CompressionMode) {
    let k = r.alphabet as usize;
    let literal = r.raw_bits();

    let mut counts = vec![0usize; k];
    for &s in &r.symbols {
        counts[s as usize] += 1;
    }
    let order0 = laplace_bits(&counts);

    let mut runs: Vec<(u32, usize)> = Vec::new();
    for &s in &r.symbols {
        match runs.last_mut() {
            Some((sym, len)) if *sym == s => *len += 1,
            _ => runs.push((s, 1)),
        }
    }
    let run_length = if runs.is_empty() {
        0.0
    } else {
        let mut deltas = vec![0usize; k - 1];
        for w in runs.windows(2) {
            let d = (w[1].0 + r.alphabet - w[0].0) % r.alphabet;
            deltas[d as usize - 1] += 1;
        }
        let max_bucket = usize::BITS - 1 - r.len().leading_zeros();
        let mut buckets = vec![0usize; max_bucket as usize + 1];
        let mut mantissa = 0.0;
        for &(_, len) in &runs {
            let b = usize::BITS - 1 - len.leading_zeros();
            buckets[b as usize] += 1;
            mantissa += b as f64;
        }
        bits_per_symbol(k) + laplace_bits(&deltas) + laplace_bits(&buckets) + mantissa
    };

    let (bits, mode) = [
        (literal, CompressionMode::Literal),
        (order0, CompressionMode::Order0),
        (run_length, CompressionMode::RunLength),
    ]
    .into_iter()
    .fold((f64::INFINITY, CompressionMode::Literal), |best, x| {
        if x.0 < best.0 {
            x
        } else {
            best
        }
    });
    (bits + 2.0, mode)
}

/// Compressed size over raw size. Bounded by `(raw + 2) / raw`, at most
/// 1.125 for the shortest accepted binary sequence. Only a proxy: it
/// upper-bounds, and does not compute, algorithmic complexity.
pub fn compressibility_proxy(r: &RecordSequence) -> Result<f64> {
    if r.len() < MIN_SEQUENCE_LEN {
        return Err(Error::param(
            "sequence",
            format!("length {} is below the minimum of {MIN_SEQUENCE_LEN}", r.len()),
        ));
    }
    Ok(compressed_bits(r).0 / r.raw_bits())
}
