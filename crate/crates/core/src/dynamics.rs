//! Fixed-step RK4 integration of `i dψ/dt = H(t) ψ` and of the Lindblad
//! master equation
//!
//! ```text
//! dρ/dt = −i[H(t), ρ] + Σ_c (r_c/2) (2 L_c ρ L_c† − L_c†L_c ρ − ρ L_c†L_c).
//! ```
//!
//! Observables are evaluated on the fly at sample steps so a trajectory only
//! stores `O(samples)` numbers plus the final state.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{annihilation_operator, transition_operator, Basis, Level};
use crate::model::{HamiltonianGenerator, SystemParams};
use crate::operator::Operator;
use crate::state::{DensityMatrix, StateVector};

/// Drift beyond which an integration is aborted.
pub const ABORT_DRIFT: f64 = 1e-6;

const I: C64 = C64::new(0.0, 1.0);
const MINUS_I: C64 = C64::new(0.0, -1.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Record observables every `sample_stride` steps (the last step is
    /// always recorded).
    pub sample_stride: usize,
}

impl TimeGrid {
    pub const DEFAULT_DT: f64 = 0.0025;

    pub fn new(t_start: f64, t_end: f64, dt: f64, sample_stride: usize) -> Self {
        TimeGrid { t_start, t_end, dt, sample_stride }
    }

    /// `[0, t_end]` at the default step, sampled once per unit time.
    pub fn until(t_end: f64) -> Self {
        let dt = Self::DEFAULT_DT;
        TimeGrid { t_start: 0.0, t_end, dt, sample_stride: (1.0 / dt).round() as usize }
    }

    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidGrid("sample_stride must be at least 1".into()));
        }
        let ratio = (self.t_end - self.t_start) / self.dt;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "(t_end - t_start)/dt = {ratio} is not a positive integer"
            )));
        }
        Ok(n as usize)
    }

    pub fn time(&self, step: usize) -> f64 {
        self.t_start + step as f64 * self.dt
    }

    fn is_sample(&self, step: usize, n_steps: usize) -> bool {
        step.is_multiple_of(self.sample_stride) || step == n_steps
    }
}

/// A quantity recorded at every sample.
#[derive(Clone, Debug)]
pub enum Observable {
    /// `|⟨target|ψ⟩|` or `√⟨target|ρ|target⟩`.
    Fidelity(StateVector),
    /// Weight on one basis index.
    Population(usize),
    /// `Re⟨ψ|O|ψ⟩` or `Re tr(Oρ)`, not renormalized.
    Expectation(Operator),
}

impl Observable {
    fn check(&self, basis: &Basis) -> Result<()> {
        let ok = match self {
            Observable::Fidelity(target) => basis.is_compatible(target.basis()),
            Observable::Expectation(op) => basis.is_compatible(op.basis()),
            Observable::Population(i) => *i < basis.dimension(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    fn eval_pure(&self, psi: &StateVector) -> Result<f64> {
        Ok(match self {
            Observable::Fidelity(target) => target.inner(psi)?.norm(),
            Observable::Population(i) => psi.population(*i),
            Observable::Expectation(op) => psi.expectation(op)?,
        })
    }

    fn eval_mixed(&self, rho: &DensityMatrix) -> Result<f64> {
        Ok(match self {
            Observable::Fidelity(target) => rho.expectation_in(target)?.max(0.0).sqrt(),
            Observable::Population(i) => rho.population(*i),
            Observable::Expectation(op) => rho.expectation(op)?,
        })
    }
}

#[derive(Clone, Debug)]
pub enum FinalState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `values[sample][observable]`.
    pub values: Vec<Vec<f64>>,
    /// `‖ψ‖` (pure) or `Re tr ρ` (mixed) at each sample.
    pub norms: Vec<f64>,
    /// Largest `|‖ψ‖ − 1|` or `|tr ρ − 1|` seen at any step.
    pub max_norm_drift: f64,
    /// Largest `max|ρ − ρ†|` removed by symmetrization (zero for pure states).
    pub max_hermiticity_defect: f64,
    /// Smallest eigenvalue of `ρ` over the samples (mixed states only).
    pub min_eigenvalue: Option<f64>,
    pub final_state: FinalState,
}

impl Trajectory {
    /// Time series of observable `index`.
    pub fn series(&self, index: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[index]).collect()
    }

    /// Value of observable `index` at the last sample.
    pub fn last(&self, index: usize) -> f64 {
        self.values.last().map(|row| row[index]).unwrap_or(f64::NAN)
    }
}

/// Classical fourth-order Runge–Kutta on a flat complex state.
struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    fn new(len: usize) -> Self {
        let z = vec![C64::default(); len];
        Rk4 { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    /// `rhs(t, y, dy)` must overwrite `dy` with `dy/dt`.
    fn step<F>(&mut self, t: f64, dt: f64, y: &mut [C64], mut rhs: F)
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let half = 0.5 * dt;
        rhs(t, y, &mut self.k1);
        for ((tmp, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *tmp = y + k * half;
        }
        rhs(t + half, &self.tmp, &mut self.k2);
        for ((tmp, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *tmp = y + k * half;
        }
        rhs(t + half, &self.tmp, &mut self.k3);
        for ((tmp, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *tmp = y + k * dt;
        }
        rhs(t + dt, &self.tmp, &mut self.k4);
        let sixth = dt / 6.0;
        for (i, y) in y.iter_mut().enumerate() {
            *y += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
    }
}

fn check_observables(basis: &Basis, observables: &[Observable]) -> Result<()> {
    observables.iter().try_for_each(|o| o.check(basis))
}

/// Integrate the Schrödinger equation from `psi0` over `grid`.
pub fn evolve_schrodinger(
    hgen: &HamiltonianGenerator,
    psi0: &StateVector,
    grid: &TimeGrid,
    observables: &[Observable],
) -> Result<Trajectory> {
    let basis = hgen.basis();
    if !basis.is_compatible(psi0.basis()) {
        return Err(Error::BasisMismatch);
    }
    check_observables(basis, observables)?;
    if !psi0.is_normalized() {
        return Err(Error::UnphysicalState(format!("initial state has norm {}", psi0.norm())));
    }
    let n_steps = grid.steps()?;

    let mut psi = psi0.clone();
    let mut rk = Rk4::new(basis.dimension());
    let mut traj = Trajectory {
        times: Vec::new(),
        values: Vec::new(),
        norms: Vec::new(),
        max_norm_drift: 0.0,
        max_hermiticity_defect: 0.0,
        min_eigenvalue: None,
        final_state: FinalState::Pure(psi0.clone()),
    };

    for step in 0..=n_steps {
        let t = grid.time(step);
        let norm = psi.norm();
        let drift = (norm - 1.0).abs();
        traj.max_norm_drift = traj.max_norm_drift.max(drift);
        if drift > ABORT_DRIFT || !norm.is_finite() {
            return Err(Error::NormDrift { drift, time: t, limit: ABORT_DRIFT, dt: grid.dt, suggested: grid.dt / 2.0 });
        }
        if grid.is_sample(step, n_steps) {
            traj.times.push(t);
            traj.norms.push(norm);
            traj.values.push(observables.iter().map(|o| o.eval_pure(&psi)).collect::<Result<_>>()?);
        }
        if step == n_steps {
            break;
        }
        rk.step(t, grid.dt, psi.as_mut_slice(), |t, y, dy| {
            dy.fill(C64::default());
            hgen.apply_add(t, MINUS_I, y, dy);
        });
    }
    traj.final_state = FinalState::Pure(psi);
    Ok(traj)
}

#[derive(Clone, Debug)]
pub struct CollapseChannel {
    pub label: String,
    pub operator: Operator,
    pub rate: f64,
}

/// Dissipation channels: cavity loss `a_k` at `κ_c`, fiber loss `b` at
/// `κ_f`, and emitter decay `|j⟩⟨e|` for `j ∈ {g, f}` at `γ` on every site.
///
/// A basis without the excited level gets no emitter channels; asking for
/// `γ > 0` there is an error.
pub fn collapse_channels(params: &SystemParams, basis: &Arc<Basis>) -> Result<Vec<CollapseChannel>> {
    let n = basis.n_sites();
    let mut channels = Vec::with_capacity(3 * n + 1);
    for k in 0..n {
        channels.push(CollapseChannel {
            label: format!("a_{k}"),
            operator: annihilation_operator(basis, k)?,
            rate: params.kappa_c,
        });
    }
    channels.push(CollapseChannel {
        label: "b".into(),
        operator: annihilation_operator(basis, basis.fiber_mode())?,
        rate: params.kappa_f,
    });
    if !basis.spec().has_level(Level::E) {
        if params.gamma > 0.0 {
            return Err(Error::MissingLevel(Level::E));
        }
        return Ok(channels);
    }
    for k in 0..n {
        for to in [Level::G, Level::F] {
            channels.push(CollapseChannel {
                label: format!("sigma_{to}e_{k}"),
                operator: transition_operator(basis, k, Level::E, to)?,
                rate: params.gamma,
            });
        }
    }
    Ok(channels)
}

/// Integrate the Lindblad master equation from `rho0` over `grid`.
///
/// `ρ` is symmetrized at every sample; the removed defect is reported in
/// [`Trajectory::max_hermiticity_defect`].
pub fn evolve_lindblad(
    hgen: &HamiltonianGenerator,
    channels: &[CollapseChannel],
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    observables: &[Observable],
) -> Result<Trajectory> {
    let basis = hgen.basis();
    if !basis.is_compatible(rho0.basis()) || channels.iter().any(|c| !basis.is_compatible(c.operator.basis())) {
        return Err(Error::BasisMismatch);
    }
    check_observables(basis, observables)?;
    rho0.check_physical()?;
    if let Some(c) = channels.iter().find(|c| !(c.rate >= 0.0)) {
        return Err(Error::param(c.label.clone(), "collapse rates must be non-negative"));
    }
    let n_steps = grid.steps()?;
    let dim = basis.dimension();

    let active: Vec<&CollapseChannel> = channels.iter().filter(|c| c.rate > 0.0).collect();
    // Γ = Σ r L†L enters as the anti-Hermitian part of K = H − (i/2)Γ.
    let mut decay = Operator::zero(basis.clone());
    for c in &active {
        decay = decay.add(&c.operator.adjoint().compose(&c.operator)?.scale(C64::new(c.rate, 0.0)))?;
    }

    let mut rho = rho0.clone();
    let mut rk = Rk4::new(dim * dim);
    let mut k_rho = vec![C64::default(); dim * dim];
    let mut jump = vec![C64::default(); dim * dim];
    let mut traj = Trajectory {
        times: Vec::new(),
        values: Vec::new(),
        norms: Vec::new(),
        max_norm_drift: 0.0,
        max_hermiticity_defect: 0.0,
        min_eigenvalue: Some(f64::INFINITY),
        final_state: FinalState::Mixed(rho0.clone()),
    };

    for step in 0..=n_steps {
        let t = grid.time(step);
        let trace = rho.trace().re;
        let drift = (trace - 1.0).abs();
        traj.max_norm_drift = traj.max_norm_drift.max(drift);
        if drift > ABORT_DRIFT || !trace.is_finite() {
            return Err(Error::TraceDrift { drift, time: t, limit: ABORT_DRIFT, dt: grid.dt, suggested: grid.dt / 2.0 });
        }
        if grid.is_sample(step, n_steps) {
            let defect = rho.symmetrize();
            traj.max_hermiticity_defect = traj.max_hermiticity_defect.max(defect);
            let min_eig = rho.min_eigenvalue();
            traj.min_eigenvalue = traj.min_eigenvalue.map(|m| m.min(min_eig));
            traj.times.push(t);
            traj.norms.push(trace);
            traj.values.push(observables.iter().map(|o| o.eval_mixed(&rho)).collect::<Result<_>>()?);
        }
        if step == n_steps {
            break;
        }
        rk.step(t, grid.dt, rho.as_mut_slice(), |t, r, dr| {
            k_rho.fill(C64::default());
            hgen.left_mul_add(t, C64::new(1.0, 0.0), r, &mut k_rho);
            decay.left_mul_add(C64::new(0.0, -0.5), r, &mut k_rho);
            // −i(Kρ − ρK†) with ρK† = (Kρ)†
            for j in 0..dim {
                for i in 0..dim {
                    dr[i + j * dim] = MINUS_I * k_rho[i + j * dim] + I * k_rho[j + i * dim].conj();
                }
            }
            for c in &active {
                jump.fill(C64::default());
                c.operator.left_mul_add(C64::new(1.0, 0.0), r, &mut jump);
                c.operator.right_mul_adjoint_add(C64::new(c.rate, 0.0), &jump, dr);
            }
        });
    }
    traj.final_state = FinalState::Mixed(rho);
    Ok(traj)
}
