//! Product bases for `N` three-level emitters and `N + 1` truncated bosonic
//! modes (one cavity per emitter plus the shared fiber mode, stored last).
//!
//! Basis states are enumerated lexicographically over
//! `(site_0, ..., site_{N-1}, cavity_0, ..., cavity_{N-1}, fiber)` with the
//! level order `g < f < e` and the last factor varying fastest. With an
//! excitation cap only configurations whose excitation number
//! (`#f + #e + total photons`) does not exceed the cap are kept, in the same
//! relative order.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::Operator;

/// One of the three NV-center levels.
///
/// `g` (m_s = 0) and `f` (m_s = -1) are the ground-manifold qubit levels, `e`
/// is the optically excited level eliminated in the effective model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    G,
    F,
    E,
}

impl Level {
    /// Contribution of this level to the excitation number.
    pub fn excitation(self) -> u32 {
        match self {
            Level::G => 0,
            Level::F | Level::E => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Level::G => 'g',
            Level::F => 'f',
            Level::E => 'e',
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisSpec {
    pub n_sites: usize,
    /// Emitter levels kept in the basis; stored sorted and deduplicated.
    pub site_levels: Vec<Level>,
    pub n_modes: usize,
    pub n_max: u32,
    pub excitation_cap: Option<u32>,
}

impl BasisSpec {
    /// All three levels, `n_sites + 1` modes: the basis of the full model.
    pub fn full(n_sites: usize, n_max: u32) -> Self {
        Self::with_levels(n_sites, &[Level::G, Level::F, Level::E], n_max)
    }

    /// Only `g` and `f`: the basis of the effective Raman model.
    pub fn effective(n_sites: usize, n_max: u32) -> Self {
        Self::with_levels(n_sites, &[Level::G, Level::F], n_max)
    }

    pub fn with_levels(n_sites: usize, levels: &[Level], n_max: u32) -> Self {
        let mut site_levels = levels.to_vec();
        site_levels.sort();
        site_levels.dedup();
        BasisSpec { n_sites, site_levels, n_modes: n_sites + 1, n_max, excitation_cap: None }
    }

    pub fn capped(mut self, cap: u32) -> Self {
        self.excitation_cap = Some(cap);
        self
    }

    pub fn has_level(&self, level: Level) -> bool {
        self.site_levels.contains(&level)
    }

    fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::InvalidBasis("n_sites must be at least 1".into()));
        }
        if self.n_modes != self.n_sites + 1 {
            return Err(Error::InvalidBasis(format!(
                "n_modes must equal n_sites + 1 = {}, got {}",
                self.n_sites + 1,
                self.n_modes
            )));
        }
        if self.site_levels.is_empty() {
            return Err(Error::InvalidBasis("site_levels must not be empty".into()));
        }
        let mut sorted = self.site_levels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != self.site_levels {
            return Err(Error::InvalidBasis("site_levels must be sorted and unique".into()));
        }
        Ok(())
    }
}

/// A configuration label: one level per site and one occupation per mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    pub levels: Vec<Level>,
    /// Cavity occupations followed by the fiber occupation.
    pub photons: Vec<u32>,
}

impl BasisState {
    /// All emitters in `g`, all modes empty.
    pub fn ground(n_sites: usize) -> Self {
        BasisState { levels: vec![Level::G; n_sites], photons: vec![0; n_sites + 1] }
    }

    /// `site` in `level`, every other emitter in `g`, all modes empty.
    pub fn single(n_sites: usize, site: usize, level: Level) -> Self {
        let mut s = Self::ground(n_sites);
        s.levels[site] = level;
        s
    }

    /// All emitters in `g` with one photon in `mode`.
    pub fn photon(n_sites: usize, mode: usize) -> Self {
        let mut s = Self::ground(n_sites);
        s.photons[mode] = 1;
        s
    }

    pub fn excitation(&self) -> u32 {
        self.levels.iter().map(|l| l.excitation()).sum::<u32>() + self.photons.iter().sum::<u32>()
    }

    pub fn is_vacuum(&self) -> bool {
        self.photons.iter().all(|&n| n == 0)
    }
}

impl fmt::Display for BasisState {
    /// Printed as `|fgg000⟩|0⟩_f`: emitters, cavities, then the fiber.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wide = self.photons.iter().any(|&n| n > 9);
        let sep = if wide { "," } else { "" };
        let (cavities, fiber) = self.photons.split_at(self.photons.len() - 1);
        let sites: String = self.levels.iter().map(|l| l.symbol()).collect();
        let cav: Vec<String> = cavities.iter().map(|n| n.to_string()).collect();
        write!(f, "|{}{}{}⟩|{}⟩_f", sites, sep, cav.join(sep), fiber[0])
    }
}

#[derive(Debug)]
pub struct Basis {
    spec: BasisSpec,
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

/// Enumerate the basis described by `spec`.
pub fn build_basis(spec: BasisSpec) -> Result<Arc<Basis>> {
    spec.validate()?;
    let n_levels = spec.site_levels.len();
    let n_occ = spec.n_max as usize + 1;
    let radices: Vec<usize> = std::iter::repeat_n(n_levels, spec.n_sites)
        .chain(std::iter::repeat_n(n_occ, spec.n_modes))
        .collect();

    let mut states = Vec::new();
    let mut digits = vec![0usize; radices.len()];
    'outer: loop {
        let state = BasisState {
            levels: digits[..spec.n_sites].iter().map(|&d| spec.site_levels[d]).collect(),
            photons: digits[spec.n_sites..].iter().map(|&d| d as u32).collect(),
        };
        if spec.excitation_cap.is_none_or(|cap| state.excitation() <= cap) {
            states.push(state);
        }
        // odometer, last digit fastest
        for pos in (0..digits.len()).rev() {
            digits[pos] += 1;
            if digits[pos] < radices[pos] {
                continue 'outer;
            }
            digits[pos] = 0;
        }
        break;
    }

    if states.is_empty() {
        return Err(Error::InvalidBasis("no admissible configurations".into()));
    }
    let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    Ok(Arc::new(Basis { spec, states, index }))
}

impl Basis {
    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn n_sites(&self) -> usize {
        self.spec.n_sites
    }

    pub fn n_modes(&self) -> usize {
        self.spec.n_modes
    }

    /// Index of the fiber mode.
    pub fn fiber_mode(&self) -> usize {
        self.spec.n_modes - 1
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &BasisState {
        &self.states[index]
    }

    pub fn lookup(&self, state: &BasisState) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// States whose excitation number is exactly `n`, in basis order.
    pub fn states_with_excitation(&self, n: u32) -> Vec<&BasisState> {
        self.states.iter().filter(|s| s.excitation() == n).collect()
    }

    pub fn is_compatible(&self, other: &Basis) -> bool {
        std::ptr::eq(self, other) || self.spec == other.spec
    }

    pub(crate) fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.spec.n_sites {
            return Err(Error::SiteOutOfRange { index: site, n_sites: self.spec.n_sites });
        }
        Ok(())
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.spec.n_modes {
            return Err(Error::ModeOutOfRange { index: mode, n_modes: self.spec.n_modes });
        }
        Ok(())
    }

    pub(crate) fn check_level(&self, level: Level) -> Result<()> {
        if !self.spec.has_level(level) {
            return Err(Error::MissingLevel(level));
        }
        Ok(())
    }
}

/// Build the operator sending each basis state `s` to `map(s)`; images that
/// fall outside the basis (beyond `n_max` or the excitation cap) are dropped.
pub fn map_operator<F>(basis: &Arc<Basis>, map: F) -> Operator
where
    F: Fn(&BasisState) -> Option<(BasisState, C64)>,
{
    let mut entries = Vec::new();
    for (col, s) in basis.states.iter().enumerate() {
        if let Some((image, amp)) = map(s) {
            if let Some(row) = basis.lookup(&image) {
                entries.push((row, col, amp));
            }
        }
    }
    Operator::from_triplets(basis.clone(), entries)
}

/// Truncated bosonic lowering operator on `mode` (fiber is the last mode).
pub fn annihilation_operator(basis: &Arc<Basis>, mode: usize) -> Result<Operator> {
    basis.check_mode(mode)?;
    Ok(map_operator(basis, |s| {
        let n = s.photons[mode];
        (n > 0).then(|| {
            let mut t = s.clone();
            t.photons[mode] -= 1;
            (t, C64::new((n as f64).sqrt(), 0.0))
        })
    }))
}

pub fn creation_operator(basis: &Arc<Basis>, mode: usize) -> Result<Operator> {
    Ok(annihilation_operator(basis, mode)?.adjoint())
}

/// Photon number `a†a` on `mode`, built directly as a diagonal.
pub fn number_operator(basis: &Arc<Basis>, mode: usize) -> Result<Operator> {
    basis.check_mode(mode)?;
    Ok(map_operator(basis, |s| Some((s.clone(), C64::new(s.photons[mode] as f64, 0.0)))))
}

/// `|to⟩⟨from|` on `site`, identity on every other factor.
pub fn transition_operator(basis: &Arc<Basis>, site: usize, from: Level, to: Level) -> Result<Operator> {
    basis.check_site(site)?;
    basis.check_level(from)?;
    basis.check_level(to)?;
    Ok(map_operator(basis, |s| {
        (s.levels[site] == from).then(|| {
            let mut t = s.clone();
            t.levels[site] = to;
            (t, C64::new(1.0, 0.0))
        })
    }))
}

/// Diagonal operator holding each configuration's excitation number.
pub fn excitation_operator(basis: &Arc<Basis>) -> Operator {
    map_operator(basis, |s| Some((s.clone(), C64::new(s.excitation() as f64, 0.0))))
}
