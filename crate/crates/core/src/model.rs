//! Hamiltonians of the fiber-coupled NV/nanocavity network.
//!
//! Two models share the fiber coupling `ν Σ_k (b† a_k + h.c.)`:
//!
//! * **Full**: every emitter keeps its excited level. Site `k` has a
//!   bichromatic drive on `f ↔ e` and its cavity on `g ↔ e`, both in the
//!   interaction picture:
//!   `Ω_k(t)(e^{iΔt} + e^{−iΔt}) |e⟩⟨f| + g a_k e^{iΔt} |e⟩⟨g| + h.c.`
//!   The second tone sits at the opposite detuning so that the two
//!   drive-induced light shifts of `f` cancel.
//! * **Effective**: `e` eliminated, leaving the Raman coupling
//!   `λ_k(t) (a_k |f⟩⟨g| + h.c.)` with `λ_k = g Ω_k / Δ`.
//!
//! The effective model has an exact zero-energy dark state, see
//! [`dark_state`].

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{annihilation_operator, transition_operator, Basis, BasisState, Level};
use crate::operator::Operator;
use crate::pulses::{Schedule, SiteDrive};
use crate::state::StateVector;

/// Physical constants, frequencies in units of `g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Emitter–cavity coupling; the reference unit.
    pub g: f64,
    /// Common detuning `Δ = Δ_c = Δ_d`.
    pub delta: f64,
    /// Cavity–fiber coupling `ν`.
    pub nu: f64,
    pub n_sites: usize,
    #[serde(default)]
    pub kappa_c: f64,
    #[serde(default)]
    pub kappa_f: f64,
    /// Decay rate of `e` into each of `g` and `f`.
    #[serde(default)]
    pub gamma: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams { g: 1.0, delta: 10.0, nu: 10.0, n_sites: 3, kappa_c: 0.0, kappa_f: 0.0, gamma: 0.0 }
    }
}

impl SystemParams {
    pub fn validate(&self, kind: ModelKind) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(Error::param("system.g", "coupling g must be positive"));
        }
        if self.n_sites == 0 {
            return Err(Error::param("system.n_sites", "at least one emitter is required"));
        }
        if !self.delta.is_finite() || (kind == ModelKind::Effective && self.delta == 0.0) {
            return Err(Error::param("system.delta", "the effective model needs a non-zero detuning"));
        }
        if !self.nu.is_finite() {
            return Err(Error::param("system.nu", "must be finite"));
        }
        for (name, rate) in [("system.kappa_c", self.kappa_c), ("system.kappa_f", self.kappa_f), ("system.gamma", self.gamma)] {
            if !(rate >= 0.0) || !rate.is_finite() {
                return Err(Error::param(name, "decay rates must be finite and non-negative"));
            }
        }
        Ok(())
    }

    /// Effective Raman coupling for Rabi frequency `omega`.
    pub fn raman_coupling(&self, omega: f64) -> f64 {
        self.g * omega / self.delta
    }

    pub fn has_decay(&self) -> bool {
        self.kappa_c > 0.0 || self.kappa_f > 0.0 || self.gamma > 0.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Full,
    #[default]
    Effective,
}

impl ModelKind {
    pub fn levels(self) -> &'static [Level] {
        match self {
            ModelKind::Full => &[Level::G, Level::F, Level::E],
            ModelKind::Effective => &[Level::G, Level::F],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Full => "full",
            ModelKind::Effective => "effective",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullModelOptions {
    /// Include the drive tone at `−Δ`. Without it the light shift of `f` is
    /// left uncompensated.
    pub second_tone: bool,
}

impl Default for FullModelOptions {
    fn default() -> Self {
        FullModelOptions { second_tone: true }
    }
}

type Coefficient = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

#[derive(Clone)]
struct TimeTerm {
    op: Operator,
    coeff: Coefficient,
}

/// `H(t) = H_static + Σ_i c_i(t) O_i`, with fixed sparse `O_i`.
#[derive(Clone)]
pub struct HamiltonianGenerator {
    basis: Arc<Basis>,
    static_part: Operator,
    terms: Vec<TimeTerm>,
}

impl fmt::Debug for HamiltonianGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianGenerator")
            .field("dimension", &self.basis.dimension())
            .field("static_nnz", &self.static_part.nnz())
            .field("time_terms", &self.terms.len())
            .finish()
    }
}

impl HamiltonianGenerator {
    pub fn new(static_part: Operator) -> Self {
        HamiltonianGenerator { basis: static_part.basis().clone(), static_part, terms: Vec::new() }
    }

    /// Add `c(t)·op`. The caller is responsible for adding the Hermitian
    /// conjugate term.
    pub fn push_term<F>(&mut self, op: Operator, coeff: F) -> Result<()>
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        if !self.basis.is_compatible(op.basis()) {
            return Err(Error::BasisMismatch);
        }
        if op.nnz() > 0 {
            self.terms.push(TimeTerm { op, coeff: Arc::new(coeff) });
        }
        Ok(())
    }

    /// Add `c(t)·op + conj(c(t))·op†`.
    pub fn push_hermitian_pair<F>(&mut self, op: Operator, coeff: F) -> Result<()>
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        let coeff = Arc::new(coeff);
        let c2 = coeff.clone();
        let adj = op.adjoint();
        self.push_term(op, move |t| coeff(t))?;
        self.push_term(adj, move |t| c2(t).conj())
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn static_part(&self) -> &Operator {
        &self.static_part
    }

    /// Assemble `H(t)` as a sparse operator.
    pub fn at(&self, t: f64) -> Operator {
        let triplets = self
            .terms
            .iter()
            .flat_map(|term| {
                let c = (term.coeff)(t);
                term.op.entries().iter().map(move |&(r, col, v)| (r, col, c * v))
            })
            .chain(self.static_part.entries().iter().copied());
        Operator::from_triplets(self.basis.clone(), triplets)
    }

    /// `y += coeff · H(t) x`.
    pub fn apply_add(&self, t: f64, coeff: C64, x: &[C64], y: &mut [C64]) {
        self.static_part.apply_add(coeff, x, y);
        for term in &self.terms {
            term.op.apply_add(coeff * (term.coeff)(t), x, y);
        }
    }

    /// `out += coeff · H(t) M` for a column-major square matrix `m`.
    pub(crate) fn left_mul_add(&self, t: f64, coeff: C64, m: &[C64], out: &mut [C64]) {
        self.static_part.left_mul_add(coeff, m, out);
        for term in &self.terms {
            term.op.left_mul_add(coeff * (term.coeff)(t), m, out);
        }
    }
}

fn check_inputs(params: &SystemParams, schedule: &Schedule, basis: &Basis, kind: ModelKind) -> Result<()> {
    params.validate(kind)?;
    for &level in kind.levels() {
        basis.check_level(level)?;
    }
    if kind == ModelKind::Effective && basis.spec().has_level(Level::E) {
        return Err(Error::InvalidBasis("the effective model acts on levels {g, f} only".into()));
    }
    if basis.n_sites() != params.n_sites {
        return Err(Error::param(
            "system.n_sites",
            format!("basis has {} sites, parameters say {}", basis.n_sites(), params.n_sites),
        ));
    }
    if schedule.n_sites() != basis.n_sites() {
        return Err(Error::param(
            "pulses",
            format!("{} site drives given for {} sites", schedule.n_sites(), basis.n_sites()),
        ));
    }
    schedule.pulses.validate()
}

/// `ν Σ_k (b† a_k + a_k† b)`.
pub fn fiber_coupling(params: &SystemParams, basis: &Arc<Basis>) -> Result<Operator> {
    let b = annihilation_operator(basis, basis.fiber_mode())?;
    let b_dag = b.adjoint();
    let mut total = Operator::zero(basis.clone());
    for k in 0..basis.n_sites() {
        let a = annihilation_operator(basis, k)?;
        let hop = b_dag.compose(&a)?;
        total = total.add(&hop)?.add(&hop.adjoint())?;
    }
    Ok(total.scale(C64::new(params.nu, 0.0)))
}

/// Sum of `op_k` over the sites driven by `drive`.
fn sum_over_drive<F>(basis: &Arc<Basis>, schedule: &Schedule, drive: SiteDrive, op_k: F) -> Result<Operator>
where
    F: Fn(usize) -> Result<Operator>,
{
    let mut total = Operator::zero(basis.clone());
    for (k, &d) in schedule.drives.iter().enumerate() {
        if d == drive {
            total = total.add(&op_k(k)?)?;
        }
    }
    Ok(total)
}

/// The full interaction-picture Hamiltonian with explicit excited levels.
pub fn full_hamiltonian(
    params: &SystemParams,
    schedule: &Schedule,
    basis: &Arc<Basis>,
    options: FullModelOptions,
) -> Result<HamiltonianGenerator> {
    check_inputs(params, schedule, basis, ModelKind::Full)?;
    let mut hgen = HamiltonianGenerator::new(fiber_coupling(params, basis)?);
    let delta = params.delta;
    let second = if options.second_tone { 1.0 } else { 0.0 };

    for drive in [SiteDrive::Omega0, SiteDrive::Omega] {
        let raise = sum_over_drive(basis, schedule, drive, |k| transition_operator(basis, k, Level::F, Level::E))?;
        let pulses = schedule.pulses;
        hgen.push_hermitian_pair(raise, move |t| {
            let phase = C64::from_polar(1.0, delta * t) + second * C64::from_polar(1.0, -delta * t);
            phase * pulses.envelope(drive, t)
        })?;
    }

    let mut cavity = Operator::zero(basis.clone());
    for k in 0..basis.n_sites() {
        let a = annihilation_operator(basis, k)?;
        cavity = cavity.add(&transition_operator(basis, k, Level::G, Level::E)?.compose(&a)?)?;
    }
    let g = params.g;
    hgen.push_hermitian_pair(cavity, move |t| C64::from_polar(g, delta * t))?;
    Ok(hgen)
}

/// The effective Raman Hamiltonian on levels `{g, f}`.
pub fn effective_hamiltonian(
    params: &SystemParams,
    schedule: &Schedule,
    basis: &Arc<Basis>,
) -> Result<HamiltonianGenerator> {
    check_inputs(params, schedule, basis, ModelKind::Effective)?;
    let mut hgen = HamiltonianGenerator::new(fiber_coupling(params, basis)?);
    let params = *params;
    for drive in [SiteDrive::Omega0, SiteDrive::Omega] {
        let raman = sum_over_drive(basis, schedule, drive, |k| {
            let a = annihilation_operator(basis, k)?;
            transition_operator(basis, k, Level::G, Level::F)?.compose(&a)
        })?;
        let pulses = schedule.pulses;
        hgen.push_hermitian_pair(raman, move |t| C64::new(params.raman_coupling(pulses.envelope(drive, t)), 0.0))?;
    }
    Ok(hgen)
}

/// Build whichever model `kind` names; `options` only affects the full model.
pub fn hamiltonian(
    kind: ModelKind,
    params: &SystemParams,
    schedule: &Schedule,
    basis: &Arc<Basis>,
    options: FullModelOptions,
) -> Result<HamiltonianGenerator> {
    match kind {
        ModelKind::Full => full_hamiltonian(params, schedule, basis, options),
        ModelKind::Effective => effective_hamiltonian(params, schedule, basis),
    }
}

#[derive(Clone, Debug)]
pub struct DarkState {
    pub state: StateVector,
    /// Set when some `λ_k(t)` vanished and the limiting configuration was
    /// returned instead of the regular dark state.
    pub degenerate: bool,
}

/// The instantaneous zero-energy eigenvector of the effective Hamiltonian,
///
/// `(1/√K) [Σ_k (1/λ_k) |…f_k…⟩|vac⟩ − (1/ν) |g…g⟩|0…0⟩|1⟩_f]`,
/// `K = Σ_k 1/λ_k² + 1/ν²`.
///
/// If some `λ_k(t)` is exactly zero its weight diverges; the result is then
/// the normalized sum of those single-`f` configurations, flagged as
/// degenerate. With `ν = 0` the fiber term is dropped the same way.
pub fn dark_state(params: &SystemParams, schedule: &Schedule, basis: &Arc<Basis>, t: f64) -> Result<DarkState> {
    basis.check_level(Level::G)?;
    basis.check_level(Level::F)?;
    let n = basis.n_sites();
    if schedule.n_sites() != n {
        return Err(Error::param("pulses", "one site drive per emitter is required"));
    }
    if params.delta == 0.0 {
        return Err(Error::param("system.delta", "the effective model needs a non-zero detuning"));
    }
    let lambdas: Vec<f64> = (0..n).map(|k| params.raman_coupling(schedule.rabi(k, t))).collect();
    let singles: Vec<BasisState> = (0..n).map(|k| BasisState::single(n, k, Level::F)).collect();
    let fiber = BasisState::photon(n, basis.fiber_mode());
    let one = C64::new(1.0, 0.0);

    if lambdas.contains(&0.0) {
        let terms = singles.iter().zip(&lambdas).filter(|(_, &l)| l == 0.0).map(|(s, _)| (s, one));
        return Ok(DarkState { state: StateVector::superposition(basis.clone(), terms)?, degenerate: true });
    }

    let mut terms: Vec<(&BasisState, C64)> = singles.iter().zip(&lambdas).map(|(s, &l)| (s, C64::new(1.0 / l, 0.0))).collect();
    if params.nu != 0.0 {
        terms.push((&fiber, C64::new(-1.0 / params.nu, 0.0)));
    }
    Ok(DarkState { state: StateVector::superposition(basis.clone(), terms)?, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_basis, excitation_operator, BasisSpec};
    use crate::pulses::PulseParams;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn setup(kind: ModelKind, cap: Option<u32>) -> (SystemParams, Schedule, Arc<Basis>) {
        let params = SystemParams::default();
        let schedule = Schedule::standard(PulseParams::default(), 3);
        let mut spec = BasisSpec::with_levels(3, kind.levels(), 1);
        spec.excitation_cap = cap;
        (params, schedule, build_basis(spec).unwrap())
    }

    fn idx(basis: &Basis, s: BasisState) -> usize {
        basis.lookup(&s).unwrap()
    }

    #[test]
    fn zero_couplings_give_zero_operator() {
        let (_, _, basis) = setup(ModelKind::Full, None);
        let params = SystemParams { g: 1e-300, nu: 0.0, ..Default::default() };
        let schedule = Schedule::standard(PulseParams { omega_m: 0.0, ..Default::default() }, 3);
        let h = full_hamiltonian(&params, &schedule, &basis, FullModelOptions::default()).unwrap();
        for t in [0.0, 37.5, 150.0] {
            assert!(h.at(t).max_abs() < 1e-299);
        }
        let h = effective_hamiltonian(&params, &schedule, &setup(ModelKind::Effective, None).2).unwrap();
        assert_eq!(h.at(12.0).max_abs(), 0.0);
    }

    #[test]
    fn fiber_hop_matrix_element() {
        for kind in [ModelKind::Full, ModelKind::Effective] {
            let (params, schedule, basis) = setup(kind, Some(1));
            let h = hamiltonian(kind, &params, &schedule, &basis, FullModelOptions::default()).unwrap();
            let phi1 = idx(&basis, BasisState::photon(3, 0));
            let phi2 = idx(&basis, BasisState::photon(3, 3));
            for t in [0.0, 81.3, 200.0] {
                assert_eq!(h.at(t).element(phi1, phi2), c(params.nu));
            }
        }
    }

    #[test]
    fn bichromatic_drive_element() {
        let (params, schedule, basis) = setup(ModelKind::Full, None);
        let h = full_hamiltonian(&params, &schedule, &basis, FullModelOptions::default()).unwrap();
        let e0 = idx(&basis, BasisState::single(3, 0, Level::E));
        let f0 = idx(&basis, BasisState::single(3, 0, Level::F));
        for t in [0.0, 0.1, 3.7, 149.9, 150.0, 199.3] {
            let got = h.at(t).element(e0, f0).norm();
            let expected = 2.0 * schedule.pulses.omega0(t) * (params.delta * t).cos().abs();
            assert!((got - expected).abs() < 1e-14, "t={t}: {got} vs {expected}");
        }
    }

    #[test]
    fn single_tone_option_drops_counter_rotating_term() {
        let (params, schedule, basis) = setup(ModelKind::Full, Some(1));
        let h = full_hamiltonian(&params, &schedule, &basis, FullModelOptions { second_tone: false }).unwrap();
        let e1 = idx(&basis, BasisState::single(3, 1, Level::E));
        let f1 = idx(&basis, BasisState::single(3, 1, Level::F));
        let t = 0.3;
        assert!((h.at(t).element(e1, f1) - C64::from_polar(schedule.pulses.omega(t), params.delta * t)).norm() < 1e-15);
    }

    #[test]
    fn raman_coupling_value_and_element() {
        let params = SystemParams::default();
        assert!((params.raman_coupling(1.0) - 0.1).abs() < 1e-15);
        let (params, schedule, basis) = setup(ModelKind::Effective, Some(1));
        let h = effective_hamiltonian(&params, &schedule, &basis).unwrap();
        let phi0 = idx(&basis, BasisState::single(3, 0, Level::F));
        let phi1 = idx(&basis, BasisState::photon(3, 0));
        for t in [0.0, 120.0, 150.0] {
            let lambda0 = params.raman_coupling(schedule.pulses.omega0(t));
            assert!((h.at(t).element(phi1, phi0) - c(lambda0)).norm() < 1e-16);
        }
    }

    #[test]
    fn effective_model_rejects_zero_detuning_and_excited_basis() {
        let (mut params, schedule, basis) = setup(ModelKind::Effective, None);
        params.delta = 0.0;
        assert!(effective_hamiltonian(&params, &schedule, &basis).is_err());
        let (params, schedule, full_basis) = setup(ModelKind::Full, None);
        assert!(effective_hamiltonian(&params, &schedule, &full_basis).is_err());
        assert!(matches!(
            full_hamiltonian(&params, &schedule, &basis, FullModelOptions::default()),
            Err(Error::MissingLevel(Level::E))
        ));
    }

    #[test]
    fn excitation_number_is_conserved_by_full_model() {
        for cap in [None, Some(1), Some(2)] {
            let (params, schedule, basis) = setup(ModelKind::Full, cap);
            let h = full_hamiltonian(&params, &schedule, &basis, FullModelOptions::default()).unwrap();
            let exc = excitation_operator(&basis);
            for t in [0.0, 55.5, 150.0, 200.0] {
                assert!(h.at(t).commutator(&exc).unwrap().max_abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn dark_state_is_null_vector() {
        let (params, schedule, basis) = setup(ModelKind::Effective, None);
        let h = effective_hamiltonian(&params, &schedule, &basis).unwrap();
        for i in 0..=200 {
            let t = i as f64;
            let dark = dark_state(&params, &schedule, &basis, t).unwrap();
            assert!(!dark.degenerate);
            let residual = dark.state.apply(&h.at(t)).unwrap().norm();
            assert!(residual <= 1e-12, "t={t}: residual {residual:e}");
        }
    }

    #[test]
    fn dark_state_fiber_amplitude() {
        // λ = 0.1 on every site, ν = 10: |amp| = (1/10)/sqrt(3·100 + 0.01)
        let params = SystemParams::default();
        let pulses = PulseParams { omega_m: 1.0, t0: 0.0, t1: -1e6, ..Default::default() };
        let schedule = Schedule { pulses, drives: vec![SiteDrive::Omega0; 3] };
        let basis = setup(ModelKind::Effective, Some(1)).2;
        let dark = dark_state(&params, &schedule, &basis, 0.0).unwrap();
        let amp = dark.state.amplitude(&BasisState::photon(3, 3)).unwrap();
        let expected = 0.1 / 300.01f64.sqrt();
        assert!((amp.norm() - expected).abs() < 1e-15);
        assert!((amp.norm() - 5.77e-3).abs() < 1e-5);
        assert!(amp.re < 0.0);
    }

    #[test]
    fn dark_state_limits() {
        let basis = setup(ModelKind::Effective, Some(1)).2;
        let w = StateVector::superposition(
            basis.clone(),
            (0..3).map(|k| BasisState::single(3, k, Level::F)).collect::<Vec<_>>().iter().map(|s| (s, c(1.0))),
        )
        .unwrap();
        let params = SystemParams { nu: 1e9, ..Default::default() };
        let pulses = PulseParams { t0: 0.0, t1: -1e6, ..Default::default() };
        let equal = Schedule { pulses, drives: vec![SiteDrive::Omega0; 3] };
        let dark = dark_state(&params, &equal, &basis, 0.0).unwrap();
        assert!((dark.state.inner(&w).unwrap().norm() - 1.0).abs() < 1e-12);

        // Ω₀(0) underflows to exactly zero: limiting configuration |φ0⟩
        let off = Schedule::standard(PulseParams { t0: 1e6, ..Default::default() }, 3);
        let dark = dark_state(&params, &off, &basis, 0.0).unwrap();
        assert!(dark.degenerate);
        let phi0 = StateVector::basis_state(basis.clone(), &BasisState::single(3, 0, Level::F)).unwrap();
        assert!((dark.state.inner(&phi0).unwrap().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dark_state_endpoints_for_reference_pulses() {
        let (params, schedule, basis) = setup(ModelKind::Effective, Some(1));
        let phi0 = StateVector::basis_state(basis.clone(), &BasisState::single(3, 0, Level::F)).unwrap();
        let start = dark_state(&params, &schedule, &basis, 0.0).unwrap().state;
        assert!(phi0.inner(&start).unwrap().norm() >= 0.999);
        let singles: Vec<_> = (0..3).map(|k| BasisState::single(3, k, Level::F)).collect();
        let w = StateVector::superposition(basis.clone(), singles.iter().map(|s| (s, c(1.0)))).unwrap();
        let end = dark_state(&params, &schedule, &basis, 200.0).unwrap().state;
        assert!(w.inner(&end).unwrap().norm() >= 0.99);
    }

    proptest! {
        #[test]
        fn hamiltonians_are_hermitian(t in -50.0f64..300.0) {
            for kind in [ModelKind::Full, ModelKind::Effective] {
                let (params, schedule, basis) = setup(kind, None);
                let h = hamiltonian(kind, &params, &schedule, &basis, FullModelOptions::default()).unwrap();
                prop_assert!(h.at(t).hermiticity_defect() <= 1e-12);
            }
        }

        #[test]
        fn dark_state_is_scale_covariant(t in 0.0f64..200.0, factor in 0.1f64..10.0) {
            let (params, schedule, basis) = setup(ModelKind::Effective, Some(1));
            let scaled_params = SystemParams { nu: params.nu * factor, ..params };
            let scaled_pulses = PulseParams { omega_m: schedule.pulses.omega_m * factor, ..schedule.pulses };
            let scaled = Schedule { pulses: scaled_pulses, ..schedule.clone() };
            let a = dark_state(&params, &schedule, &basis, t).unwrap().state;
            let b = dark_state(&scaled_params, &scaled, &basis, t).unwrap().state;
            let diff = (a.amplitudes() - b.amplitudes()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(diff < 1e-12);
        }
    }
}
