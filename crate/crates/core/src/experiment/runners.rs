use std::f64::consts::PI;

use rand::Rng;
use serde::Deserialize;
use serde_json::json;

use super::output::{Cell, Table};
use super::{item_rng, Check, Format, Outcome};
use crate::circuits::{measurement_register, measurement_with_decoherence, EnvironmentInit};
use crate::decoherence::{decohered_limit, BasisSpec, DephasingChannel, PointerBasis};
use crate::linalg::{born_probability, c, random_state, CMatrix, CVector, MAX_PURE_QUBITS};
use crate::probability::{
    coarse_grain, conditional_product_check, permutation_distinguishability, reconstruct_reduced, sum_rule_violation,
    uniform_outcome_probabilities, ProbabilityVector,
};
use crate::records::{
    branch_count, compressibility_proxy, outcome_horizon, predictive_g, MemoryModel, MixingDynamics, RecordSequence,
};
use crate::redundancy::{
    branch_records, error_robustness, redundancy_distance, verify_metric_axioms, EnvironmentRecord, JointState,
    RecordBasis, MAX_SEARCH_QUBITS,
};
use crate::sieve::{bloch_grid, sieve_bloch, DynamicsSpec, Horizon, DEFAULT_CAP_FACTOR, DEFAULT_STEPS};
use crate::{par, DensityMatrix, Error, Projector, PureState, Result};

const CAPPED: &str = "capped";

fn horizon_cell(h: &Horizon) -> Cell {
    match h {
        Horizon::Finite { value, .. } => Cell::Float(*value),
        Horizon::Capped => CAPPED.into(),
    }
}

fn horizon_flag(h: &Horizon) -> &'static str {
    match h {
        Horizon::Finite {
            cap_dominated: false, ..
        } => "finite",
        Horizon::Finite {
            cap_dominated: true, ..
        } => "cap_dominated",
        Horizon::Capped => CAPPED,
    }
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub(crate) struct PremeasureParams {
    trials: usize,
    env_qubits: usize,
}

impl Default for PremeasureParams {
    fn default() -> Self {
        PremeasureParams {
            trials: 100,
            env_qubits: 2,
        }
    }
}

/// Reduced state of the leading `k` qubits of a pure state.
fn reduce_leading(psi: &PureState, k: usize) -> CMatrix {
    let lead = 1usize << k;
    let rest = psi.dim() / lead;
    let a = psi.amplitudes();
    CMatrix::from_fn(lead, lead, |i, j| {
        (0..rest).map(|e| a[i * rest + e] * a[j * rest + e].conj()).sum()
    })
}

/// Random system states premeasured by an apparatus and decohered by an
/// environment; the system-apparatus state must be diagonal.
pub(crate) fn premeasure(p: &PremeasureParams, seed: u64) -> Result<Outcome> {
    if p.trials == 0 {
        return Err(Error::param("trials", "must be positive"));
    }
    if p.env_qubits == 0 || p.env_qubits + 2 > MAX_PURE_QUBITS {
        return Err(Error::param(
            "env_qubits",
            format!("must lie in 1..={}", MAX_PURE_QUBITS - 2),
        ));
    }
    let circuit = measurement_with_decoherence(p.env_qubits)?;
    let rows = par::map_range(p.trials, |i| -> Result<[f64; 8]> {
        let sigma = random_state(1, &mut item_rng(seed, i as u64));
        let out = circuit.apply(&measurement_register(&sigma, p.env_qubits, EnvironmentInit::Zeros)?)?;
        let rho = reduce_leading(&out, 2);
        let (a, b) = (sigma.amplitude(0), sigma.amplitude(1));
        let expected = [a.norm_sqr(), 0.0, 0.0, b.norm_sqr()];
        let diag_err = max_of((0..4).map(|k| (rho[(k, k)].re - expected[k]).abs()));
        let off = max_of(
            (0..4)
                .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|ij| rho[ij].norm()),
        );
        Ok([a.re, a.im, b.re, b.im, rho[(0, 0)].re, rho[(3, 3)].re, diag_err, off])
    });
    let mut table = Table::new(&[
        "trial",
        "alpha_re",
        "alpha_im",
        "beta_re",
        "beta_im",
        "p_00",
        "p_11",
        "diag_error",
        "max_offdiag",
    ]);
    let (mut worst_diag, mut worst_off) = (0.0f64, 0.0f64);
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        worst_diag = worst_diag.max(row[6]);
        worst_off = worst_off.max(row[7]);
        let mut cells = vec![Cell::from(i)];
        cells.extend(row.iter().map(|&x| Cell::Float(x)));
        table.push(cells);
    }
    Ok(Outcome {
        table,
        details: None,
        checks: vec![
            Check::new(
                "diagonal_matches_born_weights",
                worst_diag <= 1e-12,
                format!("max error {worst_diag:e}"),
            ),
            Check::new(
                "offdiagonal_vanishes",
                worst_off == 0.0,
                format!("max |element| {worst_off:e}"),
            ),
        ],
        default_format: Format::Csv,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub(crate) struct RedundancyParams {
    n_min: usize,
    n_max: usize,
    metric_max_n: usize,
    robustness_n: Vec<usize>,
}

impl Default for RedundancyParams {
    fn default() -> Self {
        RedundancyParams {
            n_min: 3,
            n_max: 8,
            metric_max_n: 4,
            robustness_n: vec![3, 5, 7],
        }
    }
}

/// Redundancy distances of GHZ-branch records, metric axioms on basis
/// records, and decoding robustness.
pub(crate) fn redundancy(p: &RedundancyParams) -> Result<Outcome> {
    if p.n_min == 0 || p.n_min > p.n_max || p.n_max > MAX_SEARCH_QUBITS {
        return Err(Error::param(
            "n_max",
            format!("need 1 <= n_min <= n_max <= {MAX_SEARCH_QUBITS}"),
        ));
    }
    if p.metric_max_n > 6 {
        return Err(Error::param("metric_max_n", "at most 6 (triples grow as 8^N)"));
    }
    if let Some(&n) = p.robustness_n.iter().find(|&&n| n % 2 == 0 || n > MAX_PURE_QUBITS - 1) {
        return Err(Error::param(
            "robustness_n",
            format!("{n} is not an odd size up to {}", MAX_PURE_QUBITS - 1),
        ));
    }
    let mut table = Table::new(&["section", "N", "basis", "k", "value"]);
    let mut checks = Vec::new();
    let dist = |d: Option<usize>| d.map_or(Cell::from("inf"), Cell::from);

    let mut pattern_ok = true;
    for n in p.n_min..=p.n_max {
        let (pointer, conjugate) = branch_records(&JointState::ghz_branches(n)?)?;
        let dp = redundancy_distance(&pointer[0], &pointer[1])?;
        let dc = redundancy_distance(&conjugate[0], &conjugate[1])?;
        pattern_ok &= dp == Some(n) && dc == Some(1);
        table.push(vec![
            "distance".into(),
            n.into(),
            "pointer".into(),
            Cell::Empty,
            dist(dp),
        ]);
        table.push(vec![
            "distance".into(),
            n.into(),
            "hadamard".into(),
            Cell::Empty,
            dist(dc),
        ]);
    }
    checks.push(Check::new(
        "distance_pattern",
        pattern_ok,
        "pointer records at distance N, conjugate at 1",
    ));

    let mut violations = 0;
    for n in 1..=p.metric_max_n {
        let records: Vec<EnvironmentRecord> = (0..1usize << n)
            .map(|k| Ok(EnvironmentRecord::from_state(&PureState::basis(n, k)?)))
            .collect::<Result<_>>()?;
        let report = verify_metric_axioms(&records)?;
        violations += report.violations.len();
        table.push(vec![
            "metric_triples".into(),
            n.into(),
            "pointer".into(),
            Cell::Empty,
            report.triples_checked.into(),
        ]);
        table.push(vec![
            "metric_violations".into(),
            n.into(),
            "pointer".into(),
            Cell::Empty,
            report.violations.len().into(),
        ]);
    }
    checks.push(Check::new(
        "metric_axioms",
        violations == 0,
        format!("{violations} violations"),
    ));

    let (mut pointer_ok, mut conj_ok) = (true, true);
    for &n in &p.robustness_n {
        let j = JointState::ghz_branches(n)?;
        for k in 1..n.div_ceil(2) {
            let r = error_robustness(&j, RecordBasis::Pointer, k)?;
            pointer_ok &= r.success_rate == 1.0;
            table.push(vec![
                "robustness".into(),
                n.into(),
                "pointer".into(),
                k.into(),
                r.success_rate.into(),
            ]);
        }
        let r = error_robustness(&j, RecordBasis::Hadamard, 1)?;
        conj_ok &= (r.success_rate - 0.5).abs() <= 1e-12;
        table.push(vec![
            "robustness".into(),
            n.into(),
            "hadamard".into(),
            1usize.into(),
            r.success_rate.into(),
        ]);
    }
    checks.push(Check::new(
        "pointer_decoding_within_half",
        pointer_ok,
        "k <= ceil(N/2)-1 always decodes",
    ));
    checks.push(Check::new(
        "conjugate_single_flip_is_coin_toss",
        conj_ok,
        "one unknown phase flip gives 1/2",
    ));
    Ok(Outcome {
        table,
        details: None,
        checks,
        default_format: Format::Csv,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub(crate) struct SieveParams {
    #[serde(rename = "t_D", alias = "t_d")]
    t_d: f64,
    pointer_basis: BasisSpec,
    /// Angular step of the Bloch grid, radians.
    grid: f64,
    /// Horizon cap; defaults to `50 t_D`.
    #[serde(rename = "T_max", alias = "t_max")]
    t_max: Option<f64>,
    steps: usize,
}

impl Default for SieveParams {
    fn default() -> Self {
        SieveParams {
            t_d: 1.0,
            pointer_basis: BasisSpec::default(),
            grid: PI / 36.0,
            t_max: None,
            steps: DEFAULT_STEPS,
        }
    }
}

/// Bloch-sphere sieve ranking of single-qubit states.
pub(crate) fn sieve(p: &SieveParams) -> Result<Outcome> {
    let basis = p.pointer_basis.build(1)?;
    let ch = DephasingChannel::new(basis, p.t_d).map_err(|e| Error::param("t_D", e.to_string()))?;
    let cap = p.t_max.unwrap_or(DEFAULT_CAP_FACTOR * p.t_d);
    if !(cap > 0.0) || !cap.is_finite() {
        return Err(Error::param("T_max", "must be positive and finite"));
    }
    if p.steps == 0 || p.steps > 1_000_000 {
        return Err(Error::param("steps", "must lie in 1..=1000000"));
    }
    if !(p.grid > 0.0 && p.grid <= PI) {
        return Err(Error::param("grid", "angular step must lie in (0, pi]"));
    }
    let dynamics = DynamicsSpec::uniform(ch, None, cap, p.steps)?;
    let reports = sieve_bloch(&bloch_grid(p.grid, p.grid)?, &dynamics)?;
    let mut table = Table::new(&[
        "rank",
        "index",
        "theta",
        "phi",
        "t_prime_p",
        "t_prime_p_cap_dominated",
        "t_p",
        "t_p_flag",
        "t_p_linear",
        "final_entropy",
    ]);
    let mut entropy_ok = true;
    let mut purity_ok = true;
    for (rank, r) in reports.iter().enumerate() {
        entropy_ok &= (-1e-12..=1.0 + 1e-12).contains(&r.final_entropy);
        purity_ok &= r.t_prime_p.value >= -1e-12;
        table.push(vec![
            (rank + 1).into(),
            r.index.into(),
            r.theta.into(),
            r.phi.into(),
            r.t_prime_p.value.into(),
            r.t_prime_p.cap_dominated.into(),
            horizon_cell(&r.t_p),
            horizon_flag(&r.t_p).into(),
            horizon_cell(&r.t_p_linear),
            r.final_entropy.into(),
        ]);
    }
    Ok(Outcome {
        table,
        details: None,
        checks: vec![
            Check::new("entropy_within_bounds", entropy_ok, "0 <= H <= 1 bit"),
            Check::new("purity_above_equilibrium", purity_ok, "t'_p >= 0"),
        ],
        default_format: Format::Csv,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub(crate) struct ProbabilityParams {
    /// Outcome count of the equal-weight superposition (a power of two).
    #[serde(rename = "N", alias = "n")]
    n: usize,
    /// Largest ancilla dimension; the sweep doubles from 4 up to it.
    #[serde(rename = "M", alias = "m")]
    m: usize,
    p: Vec<f64>,
    /// Largest outcome count in the exhaustive sum-rule sweep.
    sum_rule_max_n: usize,
}

impl Default for ProbabilityParams {
    fn default() -> Self {
        ProbabilityParams {
            n: 4,
            m: 1024,
            p: vec![1.0 / 3.0, 2.0 / 3.0],
            sum_rule_max_n: 8,
        }
    }
}

fn real_vector(xs: &[f64]) -> CVector {
    CVector::from_iterator(xs.len(), xs.iter().map(|&x| c(x, 0.0)))
}

/// Random diagonal state on the first `n` of `2^q` levels.
fn random_diagonal<R: Rng>(n: usize, rng: &mut R) -> Result<DensityMatrix> {
    let dim = n.next_power_of_two().max(2);
    let mut w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w.resize(dim, 0.0);
    DensityMatrix::from_diagonal(&w)
}

fn subset_projector(num_qubits: usize, mask: usize) -> Result<Projector> {
    let idx: Vec<usize> = (0..usize::BITS as usize).filter(|k| mask >> k & 1 == 1).collect();
    Projector::basis(num_qubits, &idx)
}

/// The probability constructions: equal weights after decoherence, the
/// permutation example, coarse-graining, and the sum and product rules.
pub(crate) fn probability(p: &ProbabilityParams, seed: u64) -> Result<Outcome> {
    if p.n < 2 || !p.n.is_power_of_two() || p.n > 1 << 10 {
        return Err(Error::param("N", "must be a power of two in 2..=1024"));
    }
    if p.m < 4 {
        return Err(Error::param("M", "must be at least 4"));
    }
    if !(1..=8).contains(&p.sum_rule_max_n) {
        return Err(Error::param("sum_rule_max_n", "must lie in 1..=8"));
    }
    let pv = ProbabilityVector::new(p.p.clone()).map_err(|e| Error::param("p", e.to_string()))?;
    let mut table = Table::new(&["subexperiment", "quantity", "value"]);
    let mut checks = Vec::new();
    let mut subs = Vec::new();

    // equal-magnitude superposition with random phases
    let q = p.n.trailing_zeros() as usize;
    let mut rng = item_rng(seed, 0);
    let phases: Vec<f64> = (0..p.n).map(|_| 2.0 * PI * rng.random::<f64>()).collect();
    let amp = 1.0 / (p.n as f64).sqrt();
    let psi = PureState::normalized(phases.iter().map(|&f| crate::C64::from_polar(amp, f)).collect())?;
    let ch = DephasingChannel::new(PointerBasis::computational(q), 1.0)?;
    let uniform = uniform_outcome_probabilities(&psi, &ch)?;
    let uniform_dev = max_of(uniform.values().iter().map(|x| (x - 1.0 / p.n as f64).abs()));
    table.push(vec![
        "uniform_outcomes".into(),
        "max_deviation".into(),
        uniform_dev.into(),
    ]);
    checks.push(Check::new(
        "uniform_outcomes",
        uniform_dev <= 1e-12,
        format!("max |p_k - 1/N| = {uniform_dev:e}"),
    ));
    subs.push(json!({
        "name": "uniform_outcomes",
        "inputs": { "N": p.n, "phases": phases },
        "outputs": { "p": uniform },
        "violation": uniform_dev,
    }));

    // three-level permutation example, embedded in two qubits
    let s = 1.0 / 3f64.sqrt();
    let r = 1.0 / 2f64.sqrt();
    let psi3 = PureState::new(vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])?;
    let meas = [
        real_vector(&[0.0, 1.0, 0.0, 0.0]),
        real_vector(&[0.0, 0.0, r, r]),
        real_vector(&[0.0, 0.0, r, -r]),
    ];
    let perm = [0, 3, 2, 1];
    let (before, after) = permutation_distinguishability(&psi3.density(), &perm, &meas)?;
    let expect_b = ProbabilityVector::new(vec![1.0 / 3.0, 0.0, 2.0 / 3.0])?;
    let expect_a = ProbabilityVector::new(vec![1.0 / 3.0, 2.0 / 3.0, 0.0])?;
    let perm_err = before.max_deviation(&expect_b).max(after.max_deviation(&expect_a));
    let z2 = DephasingChannel::new(PointerBasis::computational(2), 1.0)?;
    let pointer: Vec<CVector> = (1..4)
        .map(|k| CVector::from_fn(4, |i, _| c((i == k) as u8 as f64, 0.0)))
        .collect();
    let (dec_b, dec_a) = permutation_distinguishability(&decohered_limit(&psi3.density(), &z2)?, &perm, &pointer)?;
    let dec_diff = dec_b.max_deviation(&dec_a);
    table.push(vec![
        "permutation".into(),
        "distinguishability".into(),
        before.max_deviation(&after).into(),
    ]);
    table.push(vec!["permutation".into(), "example_error".into(), perm_err.into()]);
    table.push(vec![
        "permutation_decohered".into(),
        "distinguishability".into(),
        dec_diff.into(),
    ]);
    checks.push(Check::new(
        "permutation_example",
        perm_err <= 1e-12,
        format!("error {perm_err:e}"),
    ));
    checks.push(Check::new(
        "decohered_permutation_invariance",
        dec_diff <= 1e-12,
        format!("difference {dec_diff:e}"),
    ));
    subs.push(json!({
        "name": "permutation",
        "inputs": { "psi": [0.0, s, s, -s], "perm": perm, "measurement": "|1>, (|2>+|3>)/sqrt2, (|2>-|3>)/sqrt2" },
        "outputs": { "p": before, "p_permuted": after, "p_decohered": dec_b, "p_decohered_permuted": dec_a },
        "violation": before.max_deviation(&after),
    }));

    // coarse-graining sweep M = 4, 8, ..., up to M
    let mut ms: Vec<usize> = std::iter::successors(Some(4usize), |&m| m.checked_mul(2))
        .take_while(|&m| m <= p.m)
        .collect();
    if ms.last() != Some(&p.m) {
        ms.push(p.m);
    }
    let mut sweep = Vec::new();
    let (mut bound_ok, mut monotone_ok, mut last) = (true, true, f64::INFINITY);
    for &m in &ms {
        let cg = coarse_grain(&pv, m)?;
        let (_, dev) = reconstruct_reduced(&cg)?;
        bound_ok &= dev <= 1.0 / m as f64;
        if m.is_power_of_two() {
            monotone_ok &= dev <= last;
            last = dev;
        }
        table.push(vec![
            "coarse_grain".into(),
            format!("deviation_M{m}").into(),
            dev.into(),
        ]);
        sweep.push(json!({ "M": m, "degeneracies": cg.degeneracies, "deficit": cg.deficit, "deviation": dev }));
    }
    checks.push(Check::new("coarse_grain_bound", bound_ok, "deviation <= 1/M"));
    checks.push(Check::new(
        "coarse_grain_monotone",
        monotone_ok,
        "deviation non-increasing under doubling",
    ));
    subs.push(json!({ "name": "coarse_grain", "inputs": { "p": pv, "M": ms }, "outputs": sweep, "violation": last }));

    // sum rule over all pairs of pointer events
    let sweep: Vec<Result<(usize, usize, f64, f64)>> = par::map_range(p.sum_rule_max_n, |i| {
        let n = i + 1;
        let rho = random_diagonal(n, &mut item_rng(seed, 1 + n as u64))?;
        let nq = rho.num_qubits();
        let (mut worst, mut norm_err) = (0.0f64, 0.0f64);
        for b in 0..1usize << n {
            let pb = subset_projector(nq, b)?;
            norm_err =
                norm_err.max((born_probability(&rho, &pb)? + born_probability(&rho, &pb.complement())? - 1.0).abs());
            for cm in 0..1usize << n {
                worst = worst.max(sum_rule_violation(&rho, &pb, &subset_projector(nq, cm)?)?);
            }
        }
        Ok((n, 1usize << (2 * n), worst, norm_err))
    });
    let (mut worst, mut norm_worst, mut pairs) = (0.0f64, 0.0f64, 0usize);
    for r in sweep {
        let (n, count, w, ne) = r?;
        worst = worst.max(w);
        norm_worst = norm_worst.max(ne);
        pairs += count;
        table.push(vec![
            "sum_rule_commuting".into(),
            format!("max_violation_N{n}").into(),
            w.into(),
        ]);
    }
    let zero = PureState::zeros(1)?.density();
    let noncommuting = sum_rule_violation(
        &zero,
        &Projector::basis(1, &[0])?,
        &Projector::from_state(&PureState::plus()),
    )?;
    table.push(vec![
        "sum_rule_noncommuting".into(),
        "violation".into(),
        noncommuting.into(),
    ]);
    checks.push(Check::new(
        "sum_rule_commuting",
        worst <= 1e-12,
        format!("max violation {worst:e} over {pairs} pairs"),
    ));
    checks.push(Check::new(
        "normalization",
        norm_worst <= 1e-12,
        format!("max |mu(P)+mu(1-P)-1| = {norm_worst:e}"),
    ));
    subs.push(json!({
        "name": "sum_rule",
        "inputs": { "max_outcomes": p.sum_rule_max_n, "pairs": pairs, "noncommuting": "|0>, span{|0>} vs span{|+>}" },
        "outputs": { "commuting_max_violation": worst, "noncommuting_violation": noncommuting },
        "violation": worst,
    }));

    // product rule on the decohered random-phase state
    let rho = decohered_limit(&psi.density(), &ch)?;
    let mut product_worst = 0.0f64;
    let events = 1usize << p.n.min(4);
    for a in 1..events {
        for b in 0..events {
            for cm in 0..events {
                let check = conditional_product_check(
                    &rho,
                    &subset_projector(q, a)?,
                    &subset_projector(q, b)?,
                    &subset_projector(q, cm)?,
                )?;
                product_worst = product_worst.max(check.unwrap_or(0.0));
            }
        }
    }
    table.push(vec![
        "conditional_product".into(),
        "max_violation".into(),
        product_worst.into(),
    ]);
    checks.push(Check::new(
        "conditional_product",
        product_worst <= 1e-12,
        format!("max {product_worst:e}"),
    ));
    subs.push(json!({
        "name": "conditional_product",
        "inputs": { "N": p.n, "events": events },
        "outputs": {},
        "violation": product_worst,
    }));

    Ok(Outcome {
        table,
        details: Some(json!({ "subexperiments": subs })),
        checks,
        default_format: Format::Json,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub(crate) struct RecordsParams {
    /// A single cell count; overrides the `n_max` sweep.
    #[serde(rename = "N", alias = "n")]
    n: Option<usize>,
    n_max: usize,
    /// `pointer`, `conjugate`, or absent for both.
    basis: Option<RecordBasis>,
    p: Vec<f64>,
    #[serde(rename = "t_D", alias = "t_d")]
    t_d: f64,
    /// Bit-flip mixing rate.
    gamma: f64,
    /// Time at which `g` is reported.
    t: f64,
    threshold: f64,
    sequence_length: usize,
    /// Time between successive readouts of the record sequence.
    readout_interval: f64,
    steps: usize,
}

impl Default for RecordsParams {
    fn default() -> Self {
        RecordsParams {
            n: None,
            n_max: 10,
            basis: None,
            p: vec![0.5, 0.5],
            t_d: 1.0,
            gamma: 0.0,
            t: 1.0,
            threshold: crate::records::DEFAULT_BRANCH_THRESHOLD,
            sequence_length: 1024,
            readout_interval: 50.0,
            steps: DEFAULT_STEPS,
        }
    }
}

fn basis_label(b: RecordBasis) -> &'static str {
    match b {
        RecordBasis::Pointer => "pointer",
        RecordBasis::Hadamard => "conjugate",
    }
}

/// Memory model whose outcome states are pointer states or their conjugates.
fn qubit_model(p: &ProbabilityVector, basis: RecordBasis) -> Result<MemoryModel> {
    let system = match basis {
        RecordBasis::Pointer => vec![PureState::basis(1, 0)?, PureState::basis(1, 1)?],
        RecordBasis::Hadamard => vec![PureState::plus(), PureState::minus()],
    };
    MemoryModel::pure(
        p.clone(),
        system,
        vec![PureState::basis(1, 0)?, PureState::basis(1, 1)?],
    )
}

/// Readouts at fixed intervals: a readout repeats the previous record with
/// the model's predictive probability over the interval, and otherwise
/// flips it.
fn readout_sequence(
    m: &MemoryModel,
    dynamics: &MixingDynamics,
    interval: f64,
    len: usize,
    rng: &mut impl Rng,
) -> Result<RecordSequence> {
    let stay: Vec<f64> = (0..2)
        .map(|i| Ok(predictive_g(m, dynamics, i, &[interval])?[0].unwrap_or(0.5)))
        .collect::<Result<_>>()?;
    let mut cur = (rng.random::<f64>() >= m.probabilities().values()[0]) as u32;
    let mut symbols = Vec::with_capacity(len);
    for _ in 0..len {
        symbols.push(cur);
        if rng.random::<f64>() >= stay[cur as usize] {
            cur ^= 1;
        }
    }
    RecordSequence::new(symbols, 2)
}

/// Branch counts, predictive probability, outcome horizon and record-sequence
/// compressibility, for pointer and conjugate records.
pub(crate) fn records(p: &RecordsParams, seed: u64) -> Result<Outcome> {
    let pv = ProbabilityVector::new(p.p.clone()).map_err(|e| Error::param("p", e.to_string()))?;
    if pv.len() != 2 {
        return Err(Error::param("p", "records are qubits: give two probabilities"));
    }
    let ns: Vec<usize> = match p.n {
        Some(n) => vec![n],
        None => (1..=p.n_max).collect(),
    };
    if ns.iter().any(|&n| n == 0 || n > 12) {
        return Err(Error::param("N", "cell counts must lie in 1..=12"));
    }
    if !(p.t >= 0.0) || !(p.readout_interval >= 0.0) {
        return Err(Error::param("t", "times must be non-negative"));
    }
    if p.steps == 0 {
        return Err(Error::param("steps", "must be positive"));
    }
    let ch =
        DephasingChannel::new(PointerBasis::computational(1), p.t_d).map_err(|e| Error::param("t_D", e.to_string()))?;
    let mixing = MixingDynamics {
        channel: ch.clone(),
        gamma: p.gamma,
    };
    let horizon_dyn = DynamicsSpec::uniform(ch.clone(), None, DEFAULT_CAP_FACTOR * p.t_d, p.steps)?;
    let bases: Vec<RecordBasis> = match p.basis {
        Some(b) => vec![b],
        None => vec![RecordBasis::Pointer, RecordBasis::Hadamard],
    };

    let mut table = Table::new(&[
        "experiment",
        "N",
        "basis",
        "branches",
        "g_t",
        "horizon",
        "compress_ratio",
    ]);
    let mut checks = Vec::new();
    let mut ratios = Vec::new();
    for (bi, &basis) in bases.iter().enumerate() {
        let m = qubit_model(&pv, basis)?;
        let g = predictive_g(&m, &mixing, 0, &[p.t])?[0];
        let horizon = outcome_horizon(&m, &horizon_dyn, 0)?;
        let seq = readout_sequence(
            &m,
            &mixing,
            p.readout_interval,
            p.sequence_length,
            &mut item_rng(seed, bi as u64),
        )?;
        let ratio = compressibility_proxy(&seq)?;
        ratios.push((basis, ratio));
        let counts = par::map_slice(&ns, |&n| {
            branch_count(&qubit_model(&pv, RecordBasis::Pointer)?, basis, n, &ch, p.threshold)
        });
        let mut exact = true;
        for (&n, count) in ns.iter().zip(counts) {
            let count = count?;
            let expected = match basis {
                RecordBasis::Pointer => Some(2),
                RecordBasis::Hadamard if p.threshold < 0.5f64.powi(n as i32) => Some(1 << n),
                RecordBasis::Hadamard => None,
            };
            exact &= expected.is_none_or(|e| e == count);
            table.push(vec![
                "records".into(),
                n.into(),
                basis_label(basis).into(),
                count.into(),
                g.into(),
                horizon_cell(&horizon),
                ratio.into(),
            ]);
        }
        checks.push(Check::new(
            &format!("branch_count_{}", basis_label(basis)),
            exact,
            match basis {
                RecordBasis::Pointer => "2 branches for every N",
                RecordBasis::Hadamard => "2^N branches",
            },
        ));
    }
    Ok(Outcome {
        table,
        details: None,
        checks,
        default_format: Format::Csv,
    })
}
