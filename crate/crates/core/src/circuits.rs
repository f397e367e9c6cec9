//! Gate-level c-not circuits: premeasurement, decoherence and noise.
//!
//! Gates are plain data. [`apply`] works by index arithmetic on the state
//! vector; [`Gate::matrix`] expands a gate to the full register when a
//! matrix is wanted.

use std::fmt;
use std::str::FromStr;

use crate::linalg::{c, gates, CMatrix, CVector, PureState, QubitSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    PauliX,
    PauliY,
    PauliZ,
    Hadamard,
    CNot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gate {
    kind: GateKind,
    target: usize,
    control: Option<usize>,
}

impl Gate {
    pub fn x(target: usize) -> Self {
        Gate::single(GateKind::PauliX, target)
    }
    pub fn y(target: usize) -> Self {
        Gate::single(GateKind::PauliY, target)
    }
    pub fn z(target: usize) -> Self {
        Gate::single(GateKind::PauliZ, target)
    }
    pub fn h(target: usize) -> Self {
        Gate::single(GateKind::Hadamard, target)
    }

    fn single(kind: GateKind, target: usize) -> Self {
        Gate {
            kind,
            target,
            control: None,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Result<Self> {
        if control == target {
            return Err(Error::SameQubit(control));
        }
        Ok(Gate {
            kind: GateKind::CNot,
            target,
            control: Some(control),
        })
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn control(&self) -> Option<usize> {
        self.control
    }

    fn max_index(&self) -> usize {
        self.control.map_or(self.target, |c| c.max(self.target))
    }

    fn check(&self, width: usize) -> Result<()> {
        let index = self.max_index();
        if index >= width {
            return Err(Error::QubitOutOfRange { index, width });
        }
        Ok(())
    }

    /// Full-register matrix of this gate on `width` qubits.
    pub fn matrix(&self, width: usize) -> Result<CMatrix> {
        self.check(width)?;
        let dim = 1usize << width;
        let mut m = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut e = CVector::zeros(dim);
            e[col] = c(1.0, 0.0);
            let out = apply_raw(self, e, width);
            m.set_column(col, &out);
        }
        Ok(m)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.control) {
            (GateKind::CNot, Some(ctl)) => write!(f, "CNOT {} {}", ctl, self.target),
            (GateKind::PauliX, _) => write!(f, "X {}", self.target),
            (GateKind::PauliY, _) => write!(f, "Y {}", self.target),
            (GateKind::PauliZ, _) => write!(f, "Z {}", self.target),
            (GateKind::Hadamard, _) => write!(f, "H {}", self.target),
            (GateKind::CNot, None) => unreachable!("c-not without control"),
        }
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::param("gate", format!("cannot parse `{line}`"));
        let mut parts = line.split_whitespace();
        let name = parts.next().ok_or_else(bad)?;
        let mut next_index = || -> Result<usize> { parts.next().ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let gate = match name {
            "X" => Gate::x(next_index()?),
            "Y" => Gate::y(next_index()?),
            "Z" => Gate::z(next_index()?),
            "H" => Gate::h(next_index()?),
            "CNOT" => {
                let ctl = next_index()?;
                Gate::cnot(ctl, next_index()?)?
            }
            _ => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(gate)
    }
}

fn apply_raw(g: &Gate, mut v: CVector, width: usize) -> CVector {
    let tbit = 1usize << (width - 1 - g.target);
    match g.kind {
        GateKind::CNot => {
            let cbit = 1usize << (width - 1 - g.control.expect("c-not control"));
            for i in 0..v.len() {
                if i & cbit != 0 && i & tbit == 0 {
                    v.swap_rows(i, i | tbit);
                }
            }
        }
        GateKind::PauliX => {
            for i in (0..v.len()).filter(|i| i & tbit == 0) {
                v.swap_rows(i, i | tbit);
            }
        }
        GateKind::PauliY => {
            for i in (0..v.len()).filter(|i| i & tbit == 0) {
                let (a0, a1) = (v[i], v[i | tbit]);
                v[i] = c(0.0, -1.0) * a1;
                v[i | tbit] = c(0.0, 1.0) * a0;
            }
        }
        GateKind::PauliZ => {
            for i in (0..v.len()).filter(|i| i & tbit != 0) {
                v[i] = -v[i];
            }
        }
        GateKind::Hadamard => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for i in (0..v.len()).filter(|i| i & tbit == 0) {
                let (a0, a1) = (v[i], v[i | tbit]);
                v[i] = (a0 + a1) * s;
                v[i | tbit] = (a0 - a1) * s;
            }
        }
    }
    v
}

/// Applies one gate to a state.
pub fn apply(state: &PureState, g: &Gate) -> Result<PureState> {
    g.check(state.num_qubits())?;
    let out = apply_raw(g, state.amplitudes().clone(), state.num_qubits());
    Ok(PureState::from_raw(out, state.num_qubits()))
}

/// Ordered gate list on a register of `width` qubits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Circuit {
            width,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        g.check(self.width)?;
        self.gates.push(g);
        Ok(())
    }

    /// Circuit just wide enough for `gates`.
    pub fn from_gates(gates: Vec<Gate>) -> Self {
        let width = gates.iter().map(|g| g.max_index() + 1).max().unwrap_or(0);
        Circuit { width, gates }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Runs the circuit on a state at least as wide as the circuit.
    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        if state.num_qubits() < self.width {
            return Err(Error::QubitOutOfRange {
                index: self.width - 1,
                width: state.num_qubits(),
            });
        }
        let width = state.num_qubits();
        let out = self
            .gates
            .iter()
            .fold(state.amplitudes().clone(), |v, g| apply_raw(g, v, width));
        Ok(PureState::from_raw(out, width))
    }

    /// Concatenation; the result is as wide as the wider circuit.
    pub fn then(mut self, other: &Circuit) -> Circuit {
        self.width = self.width.max(other.width);
        self.gates.extend_from_slice(&other.gates);
        self
    }

    /// Parses the one-gate-per-line text format. Blank lines and `#`
    /// comments are skipped.
    pub fn parse(text: &str) -> Result<Circuit> {
        let gates = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(Gate::from_str)
            .collect::<Result<Vec<_>>>()?;
        Ok(Circuit::from_gates(gates))
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

/// C-not from the system (control) onto the apparatus (target).
pub fn premeasurement(system: usize, apparatus: usize) -> Result<Circuit> {
    Ok(Circuit::from_gates(vec![Gate::cnot(system, apparatus)?]))
}

/// C-nots from the apparatus onto every environment qubit.
pub fn decoherence_chain(apparatus: usize, environment: &QubitSet) -> Result<Circuit> {
    if environment.contains(apparatus) {
        return Err(Error::Overlap(apparatus));
    }
    let gates = environment
        .indices()
        .iter()
        .map(|&e| Gate::cnot(apparatus, e))
        .collect::<Result<Vec<_>>>()?;
    Ok(Circuit::from_gates(gates))
}

/// C-nots with the environment as control, flipping the apparatus.
pub fn noise_chain(environment: &QubitSet, apparatus: usize) -> Result<Circuit> {
    if environment.contains(apparatus) {
        return Err(Error::Overlap(apparatus));
    }
    let gates = environment
        .indices()
        .iter()
        .map(|&e| Gate::cnot(e, apparatus))
        .collect::<Result<Vec<_>>>()?;
    Ok(Circuit::from_gates(gates))
}

/// Initial environment state for measurement registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnvironmentInit {
    #[default]
    Zeros,
    Plus,
}

/// `|sigma>_S |0>_A |env>_E` with `env_qubits` environment qubits.
pub fn measurement_register(sigma: &PureState, env_qubits: usize, init: EnvironmentInit) -> Result<PureState> {
    let sa = sigma.tensor(&PureState::zeros(1)?)?;
    if env_qubits == 0 {
        return Ok(sa);
    }
    let single = match init {
        EnvironmentInit::Zeros => PureState::zeros(1)?,
        EnvironmentInit::Plus => PureState::plus(),
    };
    sa.tensor(&PureState::repeated(&single, env_qubits)?)
}

/// Premeasurement followed by the decoherence chain, for a register laid
/// out as system 0, apparatus 1, environment `2..2+env_qubits`.
pub fn measurement_with_decoherence(env_qubits: usize) -> Result<Circuit> {
    let pre = premeasurement(0, 1)?;
    let env = QubitSet::range(2, 2 + env_qubits);
    Ok(pre.then(&decoherence_chain(1, &env)?))
}

/// Hadamard on every qubit of a `width`-qubit register, as a matrix.
pub fn hadamard_all(width: usize) -> CMatrix {
    gates::tensor_power(&gates::hadamard(), width)
}
