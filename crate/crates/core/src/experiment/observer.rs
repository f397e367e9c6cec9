//! Two observers and a hidden list: A prepares a qubit in one of two states
//! and writes the choice down, the environment decoheres it, B measures
//! (through the environment or on the system), the environment decoheres it
//! again, and A measures once more. Comparing the three lists shows whether
//! B's look disturbed what A will find.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::output::Table;
use super::{item_rng, run, Check, ExperimentConfig, Format, Outcome, ResultArtifact};
use crate::circuits::{self, decoherence_chain, Gate};
use crate::linalg::{c, MAX_PURE_QUBITS};
use crate::redundancy::RecordBasis;
use crate::{par, Error, PureState, QubitSet, Result};

/// What B gets to measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BAccess {
    /// One environment qubit that has recorded the system.
    #[default]
    Environment,
    /// The system itself.
    System,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObserverParams {
    pub ensemble: usize,
    /// Environment qubits per decoherence step.
    pub env_qubits: usize,
    pub a_basis: RecordBasis,
    pub b_basis: RecordBasis,
    pub b_access: BAccess,
}

impl Default for ObserverParams {
    fn default() -> Self {
        ObserverParams {
            ensemble: 1000,
            env_qubits: 3,
            a_basis: RecordBasis::Pointer,
            b_basis: RecordBasis::Pointer,
            b_access: BAccess::Environment,
        }
    }
}

/// The three lists and their pairwise agreement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObserverReport {
    pub list_a: Vec<u8>,
    pub list_b: Vec<u8>,
    pub list_a_again: Vec<u8>,
    /// Fraction of entries equal in L_A and L_B.
    pub a_vs_b: f64,
    /// L_A against L_A'.
    pub a_vs_a_again: f64,
    /// L_B against L_A'.
    pub b_vs_a_again: f64,
}

fn agreement(x: &[u8], y: &[u8]) -> f64 {
    x.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / x.len() as f64
}

/// Projective measurement of one qubit in `basis`, sampled and collapsed.
fn measure<R: Rng>(state: &PureState, qubit: usize, basis: RecordBasis, rng: &mut R) -> Result<(u8, PureState)> {
    let rotate = |s: &PureState| -> Result<PureState> {
        match basis {
            RecordBasis::Pointer => Ok(s.clone()),
            RecordBasis::Hadamard => circuits::apply(s, &Gate::h(qubit)),
        }
    };
    let rotated = rotate(state)?;
    let shift = state.num_qubits() - 1 - qubit;
    let p0: f64 = rotated
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(k, _)| (k >> shift) & 1 == 0)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    let bit = u8::from(rng.random::<f64>() >= p0);
    let kept = rotated
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            if ((k >> shift) & 1) as u8 == bit {
                a
            } else {
                c(0.0, 0.0)
            }
        })
        .collect();
    let collapsed = PureState::normalized(kept)?;
    Ok((bit, rotate(&collapsed)?))
}

fn prepared(basis: RecordBasis, bit: u8) -> PureState {
    match (basis, bit) {
        (RecordBasis::Pointer, b) => PureState::basis(1, b as usize).unwrap(),
        (RecordBasis::Hadamard, 0) => PureState::plus(),
        (RecordBasis::Hadamard, _) => PureState::minus(),
    }
}

/// Runs the protocol on every ensemble member; member `i` draws from random
/// stream `i` of `seed`.
pub fn simulate_observers(p: &ObserverParams, seed: u64) -> Result<ObserverReport> {
    if p.ensemble == 0 {
        return Err(Error::param("ensemble", "must be positive"));
    }
    if p.env_qubits == 0 || 1 + 2 * p.env_qubits > MAX_PURE_QUBITS {
        return Err(Error::param(
            "env_qubits",
            format!("must lie in 1..={}", (MAX_PURE_QUBITS - 1) / 2),
        ));
    }
    let n = p.env_qubits;
    let first = decoherence_chain(0, &QubitSet::range(1, 1 + n))?;
    let second = decoherence_chain(0, &QubitSet::range(1 + n, 1 + 2 * n))?;
    let b_qubit = match p.b_access {
        BAccess::Environment => 1,
        BAccess::System => 0,
    };
    let rows = par::map_range(p.ensemble, |i| -> Result<(u8, u8, u8)> {
        let mut rng = item_rng(seed, i as u64);
        let a = u8::from(rng.random::<bool>());
        let state = prepared(p.a_basis, a).tensor(&PureState::zeros(2 * n)?)?;
        let state = first.apply(&state)?;
        let (b, state) = measure(&state, b_qubit, p.b_basis, &mut rng)?;
        let state = second.apply(&state)?;
        let (a_again, _) = measure(&state, 0, p.a_basis, &mut rng)?;
        Ok((a, b, a_again))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let list_a: Vec<u8> = rows.iter().map(|r| r.0).collect();
    let list_b: Vec<u8> = rows.iter().map(|r| r.1).collect();
    let list_a_again: Vec<u8> = rows.iter().map(|r| r.2).collect();
    Ok(ObserverReport {
        a_vs_b: agreement(&list_a, &list_b),
        a_vs_a_again: agreement(&list_a, &list_a_again),
        b_vs_a_again: agreement(&list_b, &list_a_again),
        list_a,
        list_b,
        list_a_again,
    })
}

fn bits(xs: &[u8]) -> String {
    xs.iter().map(|b| char::from(b'0' + b)).collect()
}

pub(crate) fn outcome(p: &ObserverParams, seed: u64) -> Result<Outcome> {
    let r = simulate_observers(p, seed)?;
    let mut table = Table::new(&["pair", "agreement"]);
    table.push(vec!["L_A~L_B".into(), r.a_vs_b.into()]);
    table.push(vec!["L_A~L_A'".into(), r.a_vs_a_again.into()]);
    table.push(vec!["L_B~L_A'".into(), r.b_vs_a_again.into()]);
    let mut checks = Vec::new();
    if p.a_basis == RecordBasis::Pointer && p.b_basis == RecordBasis::Pointer {
        let all = r.a_vs_b == 1.0 && r.a_vs_a_again == 1.0 && r.b_vs_a_again == 1.0;
        checks.push(Check::new(
            "pointer_lists_identical",
            all,
            "pointer-basis lists must all agree",
        ));
    }
    Ok(Outcome {
        table,
        details: Some(json!({
            "params": p,
            "lists": { "A": bits(&r.list_a), "B": bits(&r.list_b), "A_again": bits(&r.list_a_again) },
        })),
        checks,
        default_format: Format::Json,
    })
}

/// [`run`] restricted to the observer-lists experiment.
pub fn observer_lists(config: &ExperimentConfig) -> Result<ResultArtifact> {
    if config.experiment != "observer-lists" {
        return Err(Error::param("experiment", "expected observer-lists"));
    }
    run(config)
}
