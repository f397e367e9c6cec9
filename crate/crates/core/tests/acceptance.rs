//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line
//! with its runtime; the process fails if any criterion does.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use einsel::circuits::{measurement_register, measurement_with_decoherence, EnvironmentInit};
use einsel::decoherence::{DephasingChannel, PointerBasis};
use einsel::experiment::{run, simulate_observers, BAccess, ExperimentConfig, ObserverParams, EXPERIMENTS};
use einsel::linalg::{gates, partial_trace, random_state, CVector};
use einsel::probability::{
    coarse_grain, permutation_distinguishability, reconstruct_reduced, sum_rule_violation,
    uniform_outcome_probabilities, ProbabilityVector,
};
use einsel::records::{
    branch_count, compressibility_proxy, predictive_g, MemoryModel, MixingDynamics, RecordSequence,
    DEFAULT_BRANCH_THRESHOLD,
};
use einsel::redundancy::{
    branch_records, error_robustness, redundancy_distance, verify_metric_axioms, EnvironmentRecord, JointState,
    RecordBasis,
};
use einsel::sieve::{
    bloch_grid, evolve_entropy, predictability_horizon, purity_horizon, sieve_bloch, sieve_rank, DynamicsSpec,
    SieveReport,
};
use einsel::{DensityMatrix, Projector, PureState, QubitSet, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
/// Name, check, and runtime limit in seconds.
type Criterion = (&'static str, fn() -> Outcome, Option<f64>);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn z_channel(n: usize, t_d: f64) -> DephasingChannel {
    DephasingChannel::new(PointerBasis::computational(n), t_d).unwrap()
}

fn premeasurement() -> Outcome {
    let circuit = measurement_with_decoherence(2).map_err(e)?;
    let mut r = rng(1);
    let (mut diag, mut off) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let sigma = random_state(1, &mut r);
        let out = circuit
            .apply(&measurement_register(&sigma, 2, EnvironmentInit::Zeros).map_err(e)?)
            .map_err(e)?;
        let rho = partial_trace(&out.density(), &QubitSet::range(0, 2)).map_err(e)?;
        let expected = [sigma.amplitude(0).norm_sqr(), 0.0, 0.0, sigma.amplitude(1).norm_sqr()];
        for (i, want) in expected.iter().enumerate() {
            diag = diag.max((rho.element(i, i).re - want).abs());
            for j in (0..4).filter(|&j| j != i) {
                off = off.max(rho.element(i, j).norm());
            }
        }
    }
    ensure(diag <= 1e-12, format!("diagonal error {diag:e}"))?;
    ensure(off == 0.0, format!("off-diagonal {off:e}"))?;
    let art = run(&ExperimentConfig::new("premeasure", serde_json::json!({"trials": 100})).with_seed(1)).map_err(e)?;
    ensure(art.passed(), art.summary())?;
    Ok(format!("100 trials, diagonal error {diag:.1e}, off-diagonals 0"))
}

fn basis_record(n: usize, k: usize) -> EnvironmentRecord {
    EnvironmentRecord::from_state(&PureState::basis(n, k).unwrap())
}

fn redundancy_distances() -> Outcome {
    let d = redundancy_distance(&basis_record(3, 0), &basis_record(3, 7)).map_err(e)?;
    ensure(d == Some(3), format!("d(|000>,|111>) = {d:?}"))?;
    for n in 3..=8 {
        let (pointer, conjugate) = branch_records(&JointState::ghz_branches(n).map_err(e)?).map_err(e)?;
        let dp = redundancy_distance(&pointer[0], &pointer[1]).map_err(e)?;
        let dc = redundancy_distance(&conjugate[0], &conjugate[1]).map_err(e)?;
        ensure(
            dp == Some(n) && dc == Some(1),
            format!("N={n}: pointer {dp:?}, conjugate {dc:?}"),
        )?;
    }
    let mut triples = 0;
    for n in 1..=4 {
        let records: Vec<_> = (0..1usize << n).map(|k| basis_record(n, k)).collect();
        let report = verify_metric_axioms(&records).map_err(e)?;
        ensure(report.holds(), format!("N={n}: {:?}", report.violations))?;
        triples += report.triples_checked;
    }
    Ok(format!("d = N vs 1 for N=3..8; metric axioms over {triples} triples"))
}

fn error_robustness_check() -> Outcome {
    let mut patterns = 0;
    for n in [3, 5, 7] {
        let j = JointState::ghz_branches(n).map_err(e)?;
        for k in 1..n.div_ceil(2) {
            let r = error_robustness(&j, RecordBasis::Pointer, k).map_err(e)?;
            ensure(
                r.success_rate == 1.0,
                format!("N={n} k={k}: pointer success {}", r.success_rate),
            )?;
            patterns += r.patterns;
        }
        let r = error_robustness(&j, RecordBasis::Hadamard, 1).map_err(e)?;
        // exhaustive, so no sampling slack: only rounding of the 1/sqrt2 amplitudes
        ensure(
            (r.success_rate - 0.5).abs() <= 4.0 * f64::EPSILON,
            format!("N={n}: conjugate success {}", r.success_rate),
        )?;
    }
    Ok(format!(
        "{patterns} pointer error patterns all decoded; conjugate sector 0.5 to machine precision"
    ))
}

fn probabilities() -> Outcome {
    let mut r = rng(4);
    let mut uniform = 0.0f64;
    for q in 1..=4 {
        let n = 1usize << q;
        let amps = (0..n)
            .map(|_| C64::from_polar(1.0 / (n as f64).sqrt(), 2.0 * PI * r.random::<f64>()))
            .collect();
        let p = uniform_outcome_probabilities(&PureState::new(amps).map_err(e)?, &z_channel(q, 1.0)).map_err(e)?;
        uniform = uniform.max(
            p.values()
                .iter()
                .map(|x| (x - 1.0 / n as f64).abs())
                .fold(0.0, f64::max),
        );
    }
    ensure(uniform <= 1e-12, format!("uniform deviation {uniform:e}"))?;

    let s = 1.0 / 3f64.sqrt();
    let h = 1.0 / 2f64.sqrt();
    let real = |xs: [f64; 4]| CVector::from_iterator(4, xs.into_iter().map(|x| c(x, 0.0)));
    let psi = PureState::new(vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]).map_err(e)?;
    let meas = [
        real([0.0, 1.0, 0.0, 0.0]),
        real([0.0, 0.0, h, h]),
        real([0.0, 0.0, h, -h]),
    ];
    let (before, after) = permutation_distinguishability(&psi.density(), &[0, 3, 2, 1], &meas).map_err(e)?;
    let err = before
        .max_deviation(&ProbabilityVector::new(vec![1.0 / 3.0, 0.0, 2.0 / 3.0]).map_err(e)?)
        .max(after.max_deviation(&ProbabilityVector::new(vec![1.0 / 3.0, 2.0 / 3.0, 0.0]).map_err(e)?));
    ensure(err <= 1e-12, format!("permutation example error {err:e}"))?;

    let p = ProbabilityVector::new(vec![1.0 / 3.0, 2.0 / 3.0]).map_err(e)?;
    let mut last = f64::INFINITY;
    for m in (2..=10).map(|k| 1usize << k) {
        let (_, dev) = reconstruct_reduced(&coarse_grain(&p, m).map_err(e)?).map_err(e)?;
        ensure(dev <= 1.0 / m as f64, format!("M={m}: deviation {dev:e} above 1/M"))?;
        ensure(dev <= last, format!("M={m}: deviation {dev:e} grew from {last:e}"))?;
        last = dev;
    }
    Ok(format!(
        "uniform {uniform:.1e}, permutation {err:.1e}, coarse-grain at M=1024 {last:.2e}"
    ))
}

fn sum_rules() -> Outcome {
    let mut r = rng(5);
    let (mut worst, mut pairs) = (0.0f64, 0usize);
    for n in 1..=8usize {
        let dim = n.next_power_of_two().max(2);
        let mut w: Vec<f64> = (0..n).map(|_| r.random::<f64>() + 0.05).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        w.resize(dim, 0.0);
        let rho = DensityMatrix::from_diagonal(&w).map_err(e)?;
        let q = rho.num_qubits();
        let events: Vec<Projector> = (0..1usize << n)
            .map(|mask| Projector::basis(q, &(0..n).filter(|k| mask >> k & 1 == 1).collect::<Vec<_>>()))
            .collect::<Result<_, _>>()
            .map_err(e)?;
        for b in &events {
            for cc in &events {
                worst = worst.max(sum_rule_violation(&rho, b, cc).map_err(e)?);
                pairs += 1;
            }
        }
    }
    ensure(worst <= 1e-12, format!("commuting violation {worst:e}"))?;
    let zero = PureState::zeros(1).map_err(e)?.density();
    let v = sum_rule_violation(
        &zero,
        &Projector::basis(1, &[0]).map_err(e)?,
        &Projector::from_state(&PureState::plus()),
    )
    .map_err(e)?;
    ensure((v - 0.5).abs() <= 1e-12, format!("noncommuting violation {v}"))?;
    Ok(format!(
        "{pairs} commuting pairs, max violation {worst:.1e}; noncommuting {v}"
    ))
}

fn horizons() -> Outcome {
    let mut summary = Vec::new();
    for t_d in [1.0, 2.5] {
        let dynamics = DynamicsSpec::pure_dephasing(z_channel(1, t_d)).map_err(e)?;
        let coarse = purity_horizon(&evolve_entropy(&PureState::plus(), &dynamics).map_err(e)?).value;
        let fine = purity_horizon(&evolve_entropy(&PureState::plus(), &dynamics.refined()).map_err(e)?).value;
        let (err, err_fine) = ((coarse - t_d / 4.0).abs(), (fine - t_d / 4.0).abs());
        ensure(err <= 1e-4 * t_d, format!("t_D={t_d}: t'_p = {coarse}"))?;
        ensure(
            err_fine < err,
            format!("t_D={t_d}: refinement error {err_fine:e} vs {err:e}"),
        )?;
        for k in 0..2 {
            let traj = evolve_entropy(&PureState::basis(1, k).map_err(e)?, &dynamics).map_err(e)?;
            ensure(
                predictability_horizon(&traj).is_capped(),
                format!("|{k}> is not capped"),
            )?;
        }
        summary.push(format!("t_D={t_d}: {coarse:.8} -> {fine:.8}"));
    }
    Ok(summary.join(", "))
}

fn sieve() -> Outcome {
    let grid = bloch_grid(PI / 36.0, PI / 36.0).map_err(e)?;
    let dynamics = DynamicsSpec::pure_dephasing(z_channel(1, 1.0)).map_err(e)?;
    let z = sieve_bloch(&grid, &dynamics).map_err(e)?;
    let poles = grid.iter().filter(|c| c.theta == 0.0 || c.theta == PI).count();
    for r in &z[..poles] {
        let theta = r.theta.unwrap();
        ensure(
            theta == 0.0 || theta == PI,
            format!("rank {} has theta {theta}", r.index),
        )?;
        ensure(
            r.final_entropy.abs() <= f64::EPSILON,
            format!("pole entropy {}", r.final_entropy),
        )?;
    }
    ensure(
        z[poles].t_prime_p.value < z[poles - 1].t_prime_p.value,
        "poles are not strictly ahead of the rest",
    )?;

    // same states and channel, both rotated by the Hadamard
    let h = gates::hadamard();
    let rotated: Vec<PureState> = grid
        .iter()
        .map(|c| c.state.evolve(&h))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    let hdyn = dynamics
        .with_channel(DephasingChannel::new(PointerBasis::hadamard(1), 1.0).map_err(e)?)
        .map_err(e)?;
    let x = sieve_rank(&rotated, &hdyn).map_err(e)?;
    let by_index = |rs: &[SieveReport]| {
        let mut v = rs.to_vec();
        v.sort_by_key(|r| r.index);
        v
    };
    let (zs, xs) = (by_index(&z), by_index(&x));
    let drift = zs
        .iter()
        .zip(&xs)
        .map(|(a, b)| {
            (a.t_prime_p.value - b.t_prime_p.value)
                .abs()
                .max((a.final_entropy - b.final_entropy).abs())
        })
        .fold(0.0, f64::max);
    ensure(drift <= 1e-9, format!("rotated ranking drifts by {drift:e}"))?;
    let top = |rs: &[SieveReport]| {
        let mut v: Vec<usize> = rs[..poles].iter().map(|r| r.index).collect();
        v.sort_unstable();
        v
    };
    ensure(top(&z) == top(&x), "rotated ranking has a different leading set")?;
    Ok(format!(
        "{} candidates; {poles} poles lead with zero entropy; Hadamard drift {drift:.1e}",
        grid.len()
    ))
}

fn records() -> Outcome {
    let p = ProbabilityVector::new(vec![0.5, 0.5]).map_err(e)?;
    let z0 = PureState::basis(1, 0).map_err(e)?;
    let z1 = PureState::basis(1, 1).map_err(e)?;
    let m = MemoryModel::pure(p, vec![z0.clone(), z1.clone()], vec![z0, z1]).map_err(e)?;
    let ch = z_channel(1, 1.0);
    for n in 1..=10 {
        let pointer = branch_count(&m, RecordBasis::Pointer, n, &ch, DEFAULT_BRANCH_THRESHOLD).map_err(e)?;
        let conj = branch_count(&m, RecordBasis::Hadamard, n, &ch, DEFAULT_BRANCH_THRESHOLD).map_err(e)?;
        ensure(
            pointer == 2 && conj == 1 << n,
            format!("N={n}: {pointer} vs {conj} branches"),
        )?;
    }
    let dynamics = MixingDynamics {
        channel: ch,
        gamma: 0.0,
    };
    let times: Vec<f64> = (0..=500).map(|k| 0.1 * k as f64).collect();
    for outcome in 0..2 {
        for (t, g) in times
            .iter()
            .zip(predictive_g(&m, &dynamics, outcome, &times).map_err(e)?)
        {
            ensure(g.is_some_and(|g| (g - 1.0).abs() <= 1e-12), format!("g({t}) = {g:?}"))?;
        }
    }
    let constant = compressibility_proxy(&RecordSequence::constant(1024, 0, 2).map_err(e)?).map_err(e)?;
    let random = compressibility_proxy(&RecordSequence::random(1024, 2, &mut rng(8)).map_err(e)?).map_err(e)?;
    ensure(
        random >= 10.0 * constant,
        format!("constant {constant} vs random {random}"),
    )?;
    Ok(format!(
        "2 vs 2^N branches for N<=10; g = 1; compression {constant:.4} vs {random:.4}"
    ))
}

fn observers() -> Outcome {
    let pointer = ObserverParams {
        ensemble: 1000,
        ..ObserverParams::default()
    };
    let r = simulate_observers(&pointer, 2024).map_err(e)?;
    ensure(
        r.a_vs_b == 1.0 && r.a_vs_a_again == 1.0 && r.b_vs_a_again == 1.0,
        format!("pointer agreement {} {} {}", r.a_vs_b, r.a_vs_a_again, r.b_vs_a_again),
    )?;
    let conjugate = ObserverParams {
        a_basis: RecordBasis::Hadamard,
        b_access: BAccess::Environment,
        ..pointer
    };
    let r = simulate_observers(&conjugate, 2024).map_err(e)?;
    ensure(
        (r.a_vs_a_again - 0.5).abs() <= 0.05,
        format!("conjugate remeasure agreement {}", r.a_vs_a_again),
    )?;
    Ok(format!(
        "pointer lists identical; conjugate remeasure agreement {}",
        r.a_vs_a_again
    ))
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(e)?;
    for name in EXPERIMENTS {
        let mut bytes = Vec::new();
        for attempt in 0..2 {
            let path = dir.path().join(format!("{name}.{attempt}.out"));
            let cfg = ExperimentConfig::parse(&format!("{{\"experiment\": \"{name}\", \"seed\": 99}}")).map_err(e)?;
            run(&cfg).map_err(e)?.write(&path).map_err(e)?;
            let meta = einsel::experiment::ResultArtifact::metadata_path(&path);
            bytes.push((std::fs::read(&path).map_err(e)?, std::fs::read(&meta).ok()));
        }
        ensure(bytes[0] == bytes[1], format!("{name} artifacts differ between runs"))?;
    }
    Ok(format!(
        "{} experiments byte-identical across reruns",
        EXPERIMENTS.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 premeasurement and decoherence", premeasurement, Some(1.0)),
        ("2 redundancy distances", redundancy_distances, Some(10.0)),
        ("3 error robustness", error_robustness_check, Some(5.0)),
        ("4 probabilities", probabilities, Some(2.0)),
        ("5 sum rules", sum_rules, Some(2.0)),
        ("6 horizons", horizons, Some(2.0)),
        ("7 sieve", sieve, Some(30.0)),
        ("8 records", records, Some(5.0)),
        ("9 observer lists", observers, Some(5.0)),
        ("10 reproducibility", reproducibility, None),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(l)) if took > Duration::from_secs_f64(l) => {
                Err(format!("took {:.2} s, limit {l} s", took.as_secs_f64()))
            }
            (r, _) => r,
        };
        match result {
            Ok(msg) => println!("PASS {name} ({:.2} s): {msg}", took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name} ({:.2} s): {msg}", took.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
