//! The predictability sieve.
//!
//! Candidate initial states are evolved under dephasing (optionally
//! interleaved with a self-Hamiltonian), their entropy and purity are tracked
//! on a time grid, and two horizons are integrated from the trajectories:
//!
//! * `t_p`, the normalized time integral of `H_EQ - H(t)`, where `H_EQ` is
//!   the entropy of the decohered limit (or of the state at the horizon cap
//!   when a self-Hamiltonian is present);
//! * `t'_p`, the time integral of `Tr rho_t^2 - Tr rho_eq^2` with the
//!   maximally mixed state as the equilibrium reference.
//!
//! States that keep their purity the longest rank first.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::Serialize;

use crate::decoherence::{dephase_subsystem, DephasingChannel};
use crate::linalg::{
    check_hermitian, entropy_bits, hermitian_eigenvalues, purity, unitary_evolution, von_neumann_entropy, CMatrix,
    DensityMatrix, PureState,
};
use crate::{par, Error, Result};

/// Default horizon cap in units of `t_D`.
pub const DEFAULT_CAP_FACTOR: f64 = 50.0;
/// Default number of grid intervals up to the cap.
pub const DEFAULT_STEPS: usize = 5000;
/// An integrand still above this at the cap marks the integral as
/// cap-dominated.
pub const CAP_DOMINATED_LEVEL: f64 = 1e-3;
/// A normalized entropy integrand above this at the cap means `t_p` did not
/// converge.
pub const NON_CONVERGENT_LEVEL: f64 = 0.5;
/// Entropy gains at or below this count as no gain.
pub const DEGENERATE_GAIN: f64 = 1e-9;

/// Open-system dynamics: pointer-basis dephasing, an optional self-Hamiltonian
/// and the grid the trajectory is sampled on.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSpec {
    channel: DephasingChannel,
    self_hamiltonian: Option<CMatrix>,
    time_grid: Vec<f64>,
    horizon_cap: f64,
}

impl DynamicsSpec {
    pub fn new(
        channel: DephasingChannel,
        self_hamiltonian: Option<CMatrix>,
        time_grid: Vec<f64>,
        horizon_cap: f64,
    ) -> Result<Self> {
        if time_grid.first() != Some(&0.0) {
            return Err(Error::InvalidGrid("grid must start at 0".into()));
        }
        if time_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
        }
        let last = *time_grid.last().unwrap();
        if !(horizon_cap >= last) || !horizon_cap.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "horizon cap {horizon_cap} is below the last grid point {last}"
            )));
        }
        if let Some(h) = &self_hamiltonian {
            check_hermitian(h)?;
            if h.nrows() != channel.basis().dim() {
                return Err(Error::DimensionMismatch {
                    expected: channel.basis().dim(),
                    got: h.nrows(),
                });
            }
        }
        Ok(DynamicsSpec {
            channel,
            self_hamiltonian,
            time_grid,
            horizon_cap,
        })
    }

    /// Uniform grid of `steps` intervals on `[0, horizon_cap]`.
    pub fn uniform(
        channel: DephasingChannel,
        self_hamiltonian: Option<CMatrix>,
        horizon_cap: f64,
        steps: usize,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidGrid("need at least one step".into()));
        }
        let grid = (0..=steps).map(|i| horizon_cap * i as f64 / steps as f64).collect();
        Self::new(channel, self_hamiltonian, grid, horizon_cap)
    }

    /// Pure dephasing with the default cap (`50 t_D`) and grid.
    pub fn pure_dephasing(channel: DephasingChannel) -> Result<Self> {
        let cap = DEFAULT_CAP_FACTOR * channel.t_d();
        Self::uniform(channel, None, cap, DEFAULT_STEPS)
    }

    /// Same dynamics on a grid with every interval halved.
    pub fn refined(&self) -> DynamicsSpec {
        let mut grid = Vec::with_capacity(2 * self.time_grid.len());
        for w in self.time_grid.windows(2) {
            grid.push(w[0]);
            grid.push(0.5 * (w[0] + w[1]));
        }
        grid.push(*self.time_grid.last().unwrap());
        DynamicsSpec {
            time_grid: grid,
            ..self.clone()
        }
    }

    /// Same dynamics with a different channel (grid and Hamiltonian kept).
    pub fn with_channel(&self, channel: DephasingChannel) -> Result<DynamicsSpec> {
        Self::new(
            channel,
            self.self_hamiltonian.clone(),
            self.time_grid.clone(),
            self.horizon_cap,
        )
    }

    pub fn channel(&self) -> &DephasingChannel {
        &self.channel
    }

    pub fn self_hamiltonian(&self) -> Option<&CMatrix> {
        self.self_hamiltonian.as_ref()
    }

    pub fn time_grid(&self) -> &[f64] {
        &self.time_grid
    }

    pub fn horizon_cap(&self) -> f64 {
        self.horizon_cap
    }

    /// One step of length `dt`: unitary first, then dephasing. The dynamics
    /// act on the leading qubits of `rho`; anything after them is a spectator.
    fn step(&self, rho: &DensityMatrix, dt: f64) -> Result<DensityMatrix> {
        let mut out = rho.clone();
        if let Some(h) = &self.self_hamiltonian {
            let mut u = unitary_evolution(h, dt);
            let rest = rho.num_qubits() - self.channel.num_qubits();
            if rest > 0 {
                u = u.kronecker(&CMatrix::identity(1 << rest, 1 << rest));
            }
            out = out.conjugate_by(&u)?;
        }
        dephase_subsystem(&out, &self.channel, dt)
    }

    /// States at every grid time plus the state at the horizon cap.
    pub fn evolve(&self, rho0: &DensityMatrix) -> Result<(Vec<DensityMatrix>, DensityMatrix)> {
        if rho0.num_qubits() < self.channel.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.channel.basis().dim(),
                got: rho0.dim(),
            });
        }
        if self.self_hamiltonian.is_none() {
            // the dephasing semigroup is evaluated in closed form at each time
            let states = self
                .time_grid
                .iter()
                .map(|&t| dephase_subsystem(rho0, &self.channel, t))
                .collect::<Result<Vec<_>>>()?;
            let end = dephase_subsystem(rho0, &self.channel, self.horizon_cap)?;
            return Ok((states, end));
        }
        let mut states = Vec::with_capacity(self.time_grid.len());
        let mut rho = rho0.clone();
        states.push(rho.clone());
        for w in self.time_grid.windows(2) {
            rho = self.step(&rho, w[1] - w[0])?;
            states.push(rho.clone());
        }
        let last = *self.time_grid.last().unwrap();
        let end = if self.horizon_cap > last {
            self.step(&rho, self.horizon_cap - last)?
        } else {
            rho
        };
        Ok((states, end))
    }

    /// Long-time state used for `H_EQ`: the decohered limit for pure
    /// dephasing, otherwise the state at the cap.
    fn equilibrium(&self, rho0: &DensityMatrix, at_cap: &DensityMatrix) -> Result<DensityMatrix> {
        match self.self_hamiltonian {
            None => dephase_subsystem(rho0, &self.channel, f64::INFINITY),
            Some(_) => Ok(at_cap.clone()),
        }
    }
}

/// Entropy and purity sampled along an evolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyTrajectory {
    pub times: Vec<f64>,
    /// Von Neumann entropy in bits.
    pub entropy: Vec<f64>,
    pub purity: Vec<f64>,
    /// `H_EQ` in bits.
    pub equilibrium_entropy: f64,
    /// Purity of the long-time state of this trajectory.
    pub limit_purity: f64,
    /// Purity of the maximally mixed state, the reference for `t'_p`.
    pub equilibrium_purity: f64,
    pub horizon_cap: f64,
}

impl EntropyTrajectory {
    pub fn linear_entropy(&self) -> Vec<f64> {
        self.purity.iter().map(|p| 1.0 - p).collect()
    }

    pub fn equilibrium_linear_entropy(&self) -> f64 {
        1.0 - self.limit_purity
    }

    pub fn final_entropy(&self) -> f64 {
        *self.entropy.last().unwrap()
    }
}

/// Trajectory of an initial pure state.
pub fn evolve_entropy(psi0: &PureState, dynamics: &DynamicsSpec) -> Result<EntropyTrajectory> {
    if psi0.num_qubits() != dynamics.channel.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: dynamics.channel.basis().dim(),
            got: psi0.dim(),
        });
    }
    evolve_density_entropy(&psi0.density(), dynamics)
}

/// Trajectory of an initial density matrix on the channel's register.
pub fn evolve_density_entropy(rho0: &DensityMatrix, dynamics: &DynamicsSpec) -> Result<EntropyTrajectory> {
    if dynamics.self_hamiltonian.is_none() && rho0.num_qubits() == dynamics.channel.num_qubits() {
        return dephasing_trajectory(rho0, dynamics);
    }
    trajectory_of(rho0, dynamics, |rho| Ok(rho.clone()))
}

/// Pure dephasing of the whole register. Entropy and purity do not depend on
/// the basis, so the state stays in the pointer frame and only the damped
/// coherences change from one grid time to the next.
fn dephasing_trajectory(rho0: &DensityMatrix, dynamics: &DynamicsSpec) -> Result<EntropyTrajectory> {
    let ch = &dynamics.channel;
    let frame = if ch.basis().is_computational() {
        rho0.matrix().clone()
    } else {
        let u = ch.basis().unitary();
        u.adjoint() * rho0.matrix() * u
    };
    let dim = frame.nrows();
    let diag_weight: f64 = (0..dim).map(|i| frame[(i, i)].norm_sqr()).sum();
    let coherence_weight = frame.iter().map(|x| x.norm_sqr()).sum::<f64>() - diag_weight;
    let sample = |t: f64| -> (f64, f64) {
        let f = ch.coherence_factor(t);
        let m = CMatrix::from_fn(dim, dim, |i, j| if i == j { frame[(i, j)] } else { frame[(i, j)] * f });
        (
            entropy_bits(&hermitian_eigenvalues(&m)),
            diag_weight + f * f * coherence_weight,
        )
    };
    let (entropy, purity): (Vec<f64>, Vec<f64>) = dynamics.time_grid.iter().map(|&t| sample(t)).unzip();
    let (equilibrium_entropy, limit_purity) = sample(f64::INFINITY);
    Ok(EntropyTrajectory {
        times: dynamics.time_grid.clone(),
        entropy,
        purity,
        equilibrium_entropy,
        limit_purity,
        equilibrium_purity: 1.0 / dim as f64,
        horizon_cap: dynamics.horizon_cap,
    })
}

/// Shared driver: evolves `rho0` and records entropy and purity of
/// `observe(rho_t)` at every grid time.
pub(crate) fn trajectory_of<F>(rho0: &DensityMatrix, dynamics: &DynamicsSpec, observe: F) -> Result<EntropyTrajectory>
where
    F: Fn(&DensityMatrix) -> Result<DensityMatrix>,
{
    let (states, at_cap) = dynamics.evolve(rho0)?;
    let observed = states.iter().map(&observe).collect::<Result<Vec<_>>>()?;
    let eq = observe(&dynamics.equilibrium(rho0, &at_cap)?)?;
    let dim = observed[0].dim();
    Ok(EntropyTrajectory {
        times: dynamics.time_grid.clone(),
        entropy: observed.iter().map(von_neumann_entropy).collect(),
        purity: observed.iter().map(purity).collect(),
        equilibrium_entropy: von_neumann_entropy(&eq),
        limit_purity: purity(&eq),
        equilibrium_purity: 1.0 / dim as f64,
        horizon_cap: dynamics.horizon_cap,
    })
}

/// Which information measure a horizon is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMeasure {
    VonNeumann,
    /// `1 - Tr rho^2`.
    Linear,
}

/// Outcome of the `t_p` integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Horizon {
    Finite {
        value: f64,
        cap_dominated: bool,
    },
    /// No entropy is produced, or too little has been by the cap.
    Capped,
}

impl Horizon {
    pub fn value(&self) -> Option<f64> {
        match self {
            Horizon::Finite { value, .. } => Some(*value),
            Horizon::Capped => None,
        }
    }

    pub fn is_capped(&self) -> bool {
        matches!(self, Horizon::Capped)
    }

    /// Total order with `Capped` as +infinity.
    pub fn cmp_value(&self, other: &Horizon) -> Ordering {
        match (self.value(), other.value()) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Greater,
            (Some(_), None) => Ordering::Less,
            (Some(a), Some(b)) => a.total_cmp(&b),
        }
    }
}

/// Outcome of the `t'_p` integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorizonIntegral {
    pub value: f64,
    pub cap_dominated: bool,
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// `t_p` from the von Neumann entropy.
pub fn predictability_horizon(traj: &EntropyTrajectory) -> Horizon {
    predictability_horizon_with(traj, EntropyMeasure::VonNeumann)
}

/// `t_p = int_0^T (H_EQ - H(t)) / (H_EQ - H(0)) dt`, trapezoid rule on the
/// grid.
pub fn predictability_horizon_with(traj: &EntropyTrajectory, measure: EntropyMeasure) -> Horizon {
    let (h, h_eq) = match measure {
        EntropyMeasure::VonNeumann => (traj.entropy.clone(), traj.equilibrium_entropy),
        EntropyMeasure::Linear => (traj.linear_entropy(), traj.equilibrium_linear_entropy()),
    };
    let gain = h_eq - h[0];
    if gain <= DEGENERATE_GAIN {
        return Horizon::Capped;
    }
    let integrand: Vec<f64> = h.iter().map(|x| (h_eq - x) / gain).collect();
    let tail = *integrand.last().unwrap();
    if tail > NON_CONVERGENT_LEVEL {
        return Horizon::Capped;
    }
    Horizon::Finite {
        value: trapezoid(&traj.times, &integrand),
        cap_dominated: tail > CAP_DOMINATED_LEVEL,
    }
}

/// `t'_p = int_0^T (Tr rho_t^2 - Tr rho_eq^2) dt`.
pub fn purity_horizon(traj: &EntropyTrajectory) -> HorizonIntegral {
    let integrand: Vec<f64> = traj.purity.iter().map(|p| p - traj.equilibrium_purity).collect();
    HorizonIntegral {
        value: trapezoid(&traj.times, &integrand),
        cap_dominated: *integrand.last().unwrap() > CAP_DOMINATED_LEVEL,
    }
}

/// One candidate's sieve result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SieveReport {
    /// Position in the candidate list.
    pub index: usize,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub t_p: Horizon,
    pub t_p_linear: Horizon,
    pub t_prime_p: HorizonIntegral,
    pub final_entropy: f64,
    pub final_linear_entropy: f64,
}

/// Sort key that ignores rounding noise, so exact ties fall back to input
/// position instead of the last few bits of the quadrature.
fn tie_key(x: f64) -> f64 {
    (x * 1e10).round()
}

fn sieve_order(a: &SieveReport, b: &SieveReport) -> Ordering {
    tie_key(b.t_prime_p.value)
        .total_cmp(&tie_key(a.t_prime_p.value))
        .then(tie_key(a.final_entropy).total_cmp(&tie_key(b.final_entropy)))
        .then(a.index.cmp(&b.index))
}

fn report_for(index: usize, psi: &PureState, dynamics: &DynamicsSpec) -> Result<SieveReport> {
    let traj = evolve_entropy(psi, dynamics)?;
    Ok(SieveReport {
        index,
        theta: None,
        phi: None,
        t_p: predictability_horizon(&traj),
        t_p_linear: predictability_horizon_with(&traj, EntropyMeasure::Linear),
        t_prime_p: purity_horizon(&traj),
        final_entropy: traj.final_entropy(),
        final_linear_entropy: 1.0 - traj.purity.last().unwrap(),
    })
}

/// Ranks candidates by descending `t'_p`, ties by ascending final entropy
/// then by input position. Candidates are evaluated in parallel; the order
/// does not depend on evaluation order.
pub fn sieve_rank(candidates: &[PureState], dynamics: &DynamicsSpec) -> Result<Vec<SieveReport>> {
    if candidates.is_empty() {
        return Err(Error::param("candidates", "no candidate states"));
    }
    let reports = par::map_range(candidates.len(), |i| report_for(i, &candidates[i], dynamics));
    let mut reports = reports.into_iter().collect::<Result<Vec<_>>>()?;
    reports.sort_by(sieve_order);
    Ok(reports)
}

/// Single-qubit candidate on the Bloch sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochCandidate {
    pub theta: f64,
    pub phi: f64,
    pub state: PureState,
}

/// `theta` over `[0, pi]` inclusive and `phi` over `[0, 2 pi)`, with the
/// steps rounded to divide the ranges evenly.
pub fn bloch_grid(theta_step: f64, phi_step: f64) -> Result<Vec<BlochCandidate>> {
    if !(theta_step > 0.0 && phi_step > 0.0) {
        return Err(Error::param("grid", "angular steps must be positive"));
    }
    let nt = (PI / theta_step).round().max(1.0) as usize;
    let np = (2.0 * PI / phi_step).round().max(1.0) as usize;
    let mut out = Vec::with_capacity((nt + 1) * np);
    for i in 0..=nt {
        let theta = PI * i as f64 / nt as f64;
        for k in 0..np {
            let phi = 2.0 * PI * k as f64 / np as f64;
            out.push(BlochCandidate {
                theta,
                phi,
                state: PureState::bloch(theta, phi),
            });
        }
    }
    Ok(out)
}

/// [`sieve_rank`] over Bloch candidates, with the angles filled in.
pub fn sieve_bloch(grid: &[BlochCandidate], dynamics: &DynamicsSpec) -> Result<Vec<SieveReport>> {
    let states: Vec<PureState> = grid.iter().map(|c| c.state.clone()).collect();
    let mut reports = sieve_rank(&states, dynamics)?;
    for r in &mut reports {
        r.theta = Some(grid[r.index].theta);
        r.phi = Some(grid[r.index].phi);
    }
    Ok(reports)
}
