//! W-state preparation and 1→N phase-covariant cloning.
//!
//! Both experiments start with one excitation on site 0 and let the
//! counterintuitive pulses spread it over all emitters. For cloning the
//! initial qubit `(|g⟩ + e^{iδ}|f⟩)/√2` on site 0 adds an `|all g⟩` branch
//! that the Hamiltonian leaves untouched, so the relative phase survives and
//! ends up shared by all copies.

use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{collapse_channels, evolve_lindblad, evolve_schrodinger, FinalState, Observable, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::hilbert::{build_basis, Basis, BasisSpec, BasisState, Level};
use crate::model::{hamiltonian, FullModelOptions, ModelKind, SystemParams};
use crate::pulses::{PulseParams, Schedule, SiteDrive};
use crate::state::{DensityMatrix, StateVector};

/// Borrowed pure or mixed state.
#[derive(Clone, Copy, Debug)]
pub enum StateRef<'a> {
    Pure(&'a StateVector),
    Mixed(&'a DensityMatrix),
}

impl StateRef<'_> {
    pub fn basis(&self) -> &Arc<Basis> {
        match self {
            StateRef::Pure(psi) => psi.basis(),
            StateRef::Mixed(rho) => rho.basis(),
        }
    }
}

impl<'a> From<&'a StateVector> for StateRef<'a> {
    fn from(psi: &'a StateVector) -> Self {
        StateRef::Pure(psi)
    }
}

impl<'a> From<&'a DensityMatrix> for StateRef<'a> {
    fn from(rho: &'a DensityMatrix) -> Self {
        StateRef::Mixed(rho)
    }
}

impl<'a> From<&'a FinalState> for StateRef<'a> {
    fn from(state: &'a FinalState) -> Self {
        match state {
            FinalState::Pure(psi) => StateRef::Pure(psi),
            FinalState::Mixed(rho) => StateRef::Mixed(rho),
        }
    }
}

/// `|⟨target|ψ⟩|` for pure states, `√⟨target|ρ|target⟩` for mixed ones.
pub fn fidelity<'a>(state: impl Into<StateRef<'a>>, target: &StateVector) -> Result<f64> {
    match state.into() {
        StateRef::Pure(psi) => Ok(target.inner(psi)?.norm()),
        StateRef::Mixed(rho) => Ok(rho.expectation_in(target)?.max(0.0).sqrt()),
    }
}

fn single_f_states(n: usize) -> Vec<BasisState> {
    (0..n).map(|k| BasisState::single(n, k, Level::F)).collect()
}

/// `(1/√N) Σ_k |g…f_k…g⟩` with every mode in vacuum.
pub fn w_target(basis: &Arc<Basis>) -> Result<StateVector> {
    let n = basis.n_sites();
    let singles = single_f_states(n);
    StateVector::superposition(basis.clone(), singles.iter().map(|s| (s, C64::new(1.0, 0.0))))
}

/// `(1/√2)[|g…g⟩ + (e^{iδ}/√N) Σ_k |g…f_k…g⟩]` with every mode in vacuum.
pub fn cloning_target(basis: &Arc<Basis>, delta: f64) -> Result<StateVector> {
    let n = basis.n_sites();
    let ground = BasisState::ground(n);
    let singles = single_f_states(n);
    let weight = C64::from_polar(1.0 / (n as f64).sqrt(), delta);
    let terms = std::iter::once((&ground, C64::new(1.0, 0.0))).chain(singles.iter().map(|s| (s, weight)));
    StateVector::superposition(basis.clone(), terms)
}

/// The equatorial input qubit `(|g⟩ + e^{iδ}|f⟩)/√2` on site 0, rest of the
/// network in `|g⟩` and vacuum.
pub fn cloning_input(basis: &Arc<Basis>, delta: f64) -> Result<StateVector> {
    let n = basis.n_sites();
    let ground = BasisState::ground(n);
    let excited = BasisState::single(n, 0, Level::F);
    StateVector::superposition(
        basis.clone(),
        [(&ground, C64::new(FRAC_1_SQRT_2, 0.0)), (&excited, C64::from_polar(FRAC_1_SQRT_2, delta))],
    )
}

/// Basis of a single emitter with the given levels and no field.
fn site_basis(levels: &[Level]) -> Result<Arc<Basis>> {
    build_basis(BasisSpec::with_levels(1, levels, 0))
}

/// State of emitter `site` after tracing out every other emitter and all
/// modes. The result lives on a one-site basis with the same levels.
pub fn reduced_density<'a>(state: impl Into<StateRef<'a>>, site: usize) -> Result<DensityMatrix> {
    let state = state.into();
    let basis = state.basis();
    basis.check_site(site)?;
    let levels = basis.spec().site_levels.clone();
    let local = site_basis(&levels)?;
    let pos = |l: Level| levels.iter().position(|&x| x == l).expect("level belongs to the basis");

    // group basis indices by everything except the kept site
    let mut groups: HashMap<BasisState, Vec<(usize, usize)>> = HashMap::new();
    for (i, s) in basis.states().iter().enumerate() {
        let mut env = s.clone();
        let here = env.levels[site];
        env.levels[site] = Level::G;
        groups.entry(env).or_default().push((i, pos(here)));
    }

    let d = levels.len();
    let mut out = DMatrix::<C64>::zeros(d, d);
    for members in groups.values() {
        for &(i, a) in members {
            for &(j, b) in members {
                out[(a, b)] += match state {
                    StateRef::Pure(psi) => psi.amplitudes()[i] * psi.amplitudes()[j].conj(),
                    StateRef::Mixed(rho) => rho.matrix()[(i, j)],
                };
            }
        }
    }
    DensityMatrix::new(local, out)
}

/// `⟨ψ_in|ρ_k|ψ_in⟩` for every site, `ψ_in` the equatorial qubit with phase
/// `delta`.
pub fn per_copy_fidelities<'a>(state: impl Into<StateRef<'a>>, delta: f64) -> Result<Vec<f64>> {
    let state = state.into();
    let n = state.basis().n_sites();
    (0..n)
        .map(|k| {
            let rho = reduced_density(state, k)?;
            let qubit = StateVector::superposition(
                rho.basis().clone(),
                [
                    (&BasisState::ground(1), C64::new(FRAC_1_SQRT_2, 0.0)),
                    (&BasisState::single(1, 0, Level::F), C64::from_polar(FRAC_1_SQRT_2, delta)),
                ],
            )?;
            rho.expectation_in(&qubit)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloningInput {
    /// Azimuthal phase `δ` of the input qubit.
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    WState,
    CloningState,
}

#[derive(Clone, Debug)]
pub struct ProtocolResult {
    /// Observable 0 is the fidelity against the target.
    pub trajectory: Trajectory,
    pub final_fidelity: f64,
    pub target: TargetKind,
    /// `⟨ψ_in|ρ_k|ψ_in⟩` per site (cloning only).
    pub per_copy: Option<Vec<f64>>,
}

impl ProtocolResult {
    pub fn fidelity_series(&self) -> Vec<f64> {
        self.trajectory.series(0)
    }
}

/// Truncation of the field and optional excitation cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisOptions {
    #[serde(default = "BasisOptions::default_n_max")]
    pub n_max: u32,
    #[serde(default)]
    pub excitation_cap: Option<u32>,
}

impl BasisOptions {
    fn default_n_max() -> u32 {
        1
    }
}

impl Default for BasisOptions {
    fn default() -> Self {
        BasisOptions { n_max: 1, excitation_cap: None }
    }
}

/// Which equation of motion to integrate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Evolution {
    /// Master equation if any decay rate is non-zero, Schrödinger otherwise.
    #[default]
    Auto,
    Schrodinger,
    Lindblad,
}

/// Everything needed to run one protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct Setup {
    pub system: SystemParams,
    pub pulses: PulseParams,
    pub model: ModelKind,
    pub dt: f64,
    pub sample_stride: usize,
    pub basis: BasisOptions,
    pub full_model: FullModelOptions,
    /// Per-site drive assignment; `None` means the standard mapping.
    pub drives: Option<Vec<SiteDrive>>,
    pub evolution: Evolution,
}

impl Default for Setup {
    fn default() -> Self {
        Setup {
            system: SystemParams::default(),
            pulses: PulseParams::default(),
            model: ModelKind::Effective,
            dt: TimeGrid::DEFAULT_DT,
            sample_stride: (1.0 / TimeGrid::DEFAULT_DT).round() as usize,
            basis: BasisOptions::default(),
            full_model: FullModelOptions::default(),
            drives: None,
            evolution: Evolution::Auto,
        }
    }
}

impl Setup {
    /// `[0, T]` at the configured step.
    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(0.0, self.pulses.total_time, self.dt, self.sample_stride)
    }

    pub fn schedule(&self) -> Schedule {
        match &self.drives {
            Some(drives) => Schedule { pulses: self.pulses, drives: drives.clone() },
            None => Schedule::standard(self.pulses, self.system.n_sites),
        }
    }

    pub fn build_basis(&self) -> Result<Arc<Basis>> {
        let mut spec = BasisSpec::with_levels(self.system.n_sites, self.model.levels(), self.basis.n_max);
        spec.excitation_cap = self.basis.excitation_cap;
        build_basis(spec)
    }

    pub fn uses_lindblad(&self) -> bool {
        match self.evolution {
            Evolution::Auto => self.system.has_decay(),
            Evolution::Schrodinger => false,
            Evolution::Lindblad => true,
        }
    }

    fn run(&self, basis: &Arc<Basis>, psi0: &StateVector, target: StateVector) -> Result<Trajectory> {
        let hgen = hamiltonian(self.model, &self.system, &self.schedule(), basis, self.full_model)?;
        let observables = [Observable::Fidelity(target)];
        if self.uses_lindblad() {
            let channels = collapse_channels(&self.system, basis)?;
            evolve_lindblad(&hgen, &channels, &psi0.to_density(), &self.grid(), &observables)
        } else {
            if self.system.has_decay() {
                return Err(Error::param("evolution", "decay rates require the master equation"));
            }
            evolve_schrodinger(&hgen, psi0, &self.grid(), &observables)
        }
    }
}

/// Start from `|f g…g⟩` and drive toward the W state.
pub fn prepare_w_state(setup: &Setup) -> Result<ProtocolResult> {
    let basis = setup.build_basis()?;
    let n = basis.n_sites();
    let psi0 = StateVector::basis_state(basis.clone(), &BasisState::single(n, 0, Level::F))?;
    let trajectory = setup.run(&basis, &psi0, w_target(&basis)?)?;
    let final_fidelity = trajectory.last(0);
    Ok(ProtocolResult { trajectory, final_fidelity, target: TargetKind::WState, per_copy: None })
}

/// Clone the equatorial qubit on site 0 onto all `N` emitters.
pub fn clone_phase_covariant(setup: &Setup, input: CloningInput) -> Result<ProtocolResult> {
    let basis = setup.build_basis()?;
    let psi0 = cloning_input(&basis, input.delta)?;
    let trajectory = setup.run(&basis, &psi0, cloning_target(&basis, input.delta)?)?;
    let final_fidelity = trajectory.last(0);
    let per_copy = per_copy_fidelities(&trajectory.final_state, input.delta)?;
    Ok(ProtocolResult { trajectory, final_fidelity, target: TargetKind::CloningState, per_copy: Some(per_copy) })
}
