//! Gaussian Rabi-frequency schedules for the counterintuitive pulse sequence.
//!
//! The initially excited emitter (site 0) sees a single Gaussian `Ω₀(t)`
//! centred at `t0`; every other emitter sees `Ω(t)`, the same Gaussian plus an
//! earlier one centred at `t1`. Starting from `Ω₀ ≪ Ω` and ending with
//! `Ω/Ω₀ → 1` carries the dark state from the single-excitation
//! configuration onto the symmetric W state. All times are in units of `1/g`
//! and all frequencies in units of `g`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseParams {
    /// Peak Rabi frequency `Ω_m`.
    pub omega_m: f64,
    /// Centre of the late Gaussian shared by both schedules.
    pub t0: f64,
    /// Centre of the early Gaussian present only in `Ω(t)`.
    pub t1: f64,
    /// Gaussian width `t_p`.
    pub tp: f64,
    /// Total evolution time; simulations run on `[0, T]`.
    #[serde(rename = "T")]
    pub total_time: f64,
}

impl Default for PulseParams {
    /// `Ω_m = g`, `g t0 = 150`, `g t1 = 90`, `g tp = 50`, `g T = 200`.
    fn default() -> Self {
        PulseParams { omega_m: 1.0, t0: 150.0, t1: 90.0, tp: 50.0, total_time: 200.0 }
    }
}

impl PulseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tp > 0.0) {
            return Err(Error::param("pulses.tp", "pulse width must be positive"));
        }
        if !(self.total_time > 0.0) {
            return Err(Error::param("pulses.T", "evolution time must be positive"));
        }
        if !(self.omega_m >= 0.0) {
            return Err(Error::param("pulses.omega_m", "peak Rabi frequency must be non-negative"));
        }
        if !self.t0.is_finite() || !self.t1.is_finite() {
            return Err(Error::param("pulses.t0", "pulse centres must be finite"));
        }
        Ok(())
    }

    fn gaussian(&self, t: f64, centre: f64) -> f64 {
        let x = (t - centre) / self.tp;
        (-x * x).exp()
    }

    fn gaussian_slope(&self, t: f64, centre: f64) -> f64 {
        -2.0 * (t - centre) / (self.tp * self.tp) * self.gaussian(t, centre)
    }

    /// `Ω(t) = Ω_m [exp(−(t−t1)²/tp²) + exp(−(t−t0)²/tp²)]`.
    pub fn omega(&self, t: f64) -> f64 {
        self.omega_m * (self.gaussian(t, self.t1) + self.gaussian(t, self.t0))
    }

    /// `Ω₀(t) = Ω_m exp(−(t−t0)²/tp²)`.
    pub fn omega0(&self, t: f64) -> f64 {
        self.omega_m * self.gaussian(t, self.t0)
    }

    pub fn omega_derivative(&self, t: f64) -> f64 {
        self.omega_m * (self.gaussian_slope(t, self.t1) + self.gaussian_slope(t, self.t0))
    }

    pub fn omega0_derivative(&self, t: f64) -> f64 {
        self.omega_m * self.gaussian_slope(t, self.t0)
    }

    pub fn envelope(&self, drive: SiteDrive, t: f64) -> f64 {
        match drive {
            SiteDrive::Omega => self.omega(t),
            SiteDrive::Omega0 => self.omega0(t),
        }
    }
}

/// Which schedule drives a given emitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteDrive {
    /// The two-Gaussian schedule `Ω(t)`.
    Omega,
    /// The single late Gaussian `Ω₀(t)`.
    Omega0,
}

/// Pulse parameters together with the per-site schedule assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub pulses: PulseParams,
    pub drives: Vec<SiteDrive>,
}

impl Schedule {
    /// Site 0 on `Ω₀(t)`, every other site on `Ω(t)`.
    pub fn standard(pulses: PulseParams, n_sites: usize) -> Self {
        let drives = (0..n_sites).map(|k| if k == 0 { SiteDrive::Omega0 } else { SiteDrive::Omega }).collect();
        Schedule { pulses, drives }
    }

    pub fn rabi(&self, site: usize, t: f64) -> f64 {
        self.pulses.envelope(self.drives[site], t)
    }

    pub fn n_sites(&self) -> usize {
        self.drives.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitThresholds {
    /// Upper bound on `Ω₀(0)/Ω(0)`.
    pub start_max: f64,
    /// Allowed `|Ω(T)/Ω₀(T) − 1|`.
    pub end_tolerance: f64,
}

impl Default for LimitThresholds {
    fn default() -> Self {
        LimitThresholds { start_max: 0.05, end_tolerance: 0.05 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitReport {
    /// `Ω₀(0)/Ω(0)`, should be much smaller than one.
    pub start_ratio: f64,
    /// `Ω(T)/Ω₀(T)`, should be close to one.
    pub end_ratio: f64,
    pub start_ok: bool,
    pub end_ok: bool,
}

impl LimitReport {
    pub fn passed(&self) -> bool {
        self.start_ok && self.end_ok
    }
}

/// Check the boundary behaviour of the schedules on `[0, T]`.
pub fn check_adiabatic_limits(p: &PulseParams, thresholds: LimitThresholds) -> LimitReport {
    let start_ratio = p.omega0(0.0) / p.omega(0.0);
    let end_ratio = p.omega(p.total_time) / p.omega0(p.total_time);
    LimitReport {
        start_ratio,
        end_ratio,
        start_ok: start_ratio <= thresholds.start_max,
        end_ok: (end_ratio - 1.0).abs() <= thresholds.end_tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> PulseParams {
        PulseParams::default()
    }

    #[test]
    fn omega_at_late_centre() {
        // 1 + exp(-(60/50)^2)
        let expected = 1.0 + (-1.44f64).exp();
        assert!((reference().omega(150.0) - expected).abs() < 1e-15);
        assert!((reference().omega(150.0) - 1.23693).abs() < 1e-5);
    }

    #[test]
    fn omega0_values() {
        let p = reference();
        assert_eq!(p.omega0(150.0), 1.0);
        assert!((p.omega0(0.0) - (-9.0f64).exp()).abs() < 1e-18);
        assert!((p.omega0(0.0) - 1.234e-4).abs() < 1e-7);
        let ratio = p.omega0(0.0) / p.omega(0.0);
        let expected = (-9.0f64).exp() / ((-3.24f64).exp() + (-9.0f64).exp());
        assert!((ratio - expected).abs() < 1e-15);
        assert!((ratio - 3.1e-3).abs() < 5e-5);
    }

    #[test]
    fn zero_peak_vanishes() {
        let p = PulseParams { omega_m: 0.0, ..reference() };
        for t in [-10.0, 0.0, 90.0, 150.0, 400.0] {
            assert_eq!(p.omega(t), 0.0);
            assert_eq!(p.omega0(t), 0.0);
        }
    }

    #[test]
    fn well_separated_early_peak() {
        let p = PulseParams { t1: 0.0, t0: 1000.0, tp: 10.0, ..reference() };
        assert!((p.omega(0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn limits_for_reference_pulses() {
        let r = check_adiabatic_limits(&reference(), LimitThresholds::default());
        assert!((r.start_ratio - 3.1e-3).abs() < 5e-5);
        let expected_end = 1.0 + (-3.84f64).exp();
        assert!((r.end_ratio - expected_end).abs() < 1e-12);
        assert!((r.end_ratio - 1.0215).abs() < 1e-4);
        assert!(r.passed());
    }

    #[test]
    fn coincident_centres_fail_start_condition() {
        let p = PulseParams { t1: 150.0, ..reference() };
        let r = check_adiabatic_limits(&p, LimitThresholds::default());
        assert!((r.start_ratio - 0.5).abs() < 1e-15);
        assert!(!r.start_ok);
        assert!(!r.passed());
    }

    #[test]
    fn very_wide_pulses_fail_end_condition() {
        let p = PulseParams { tp: 500.0, ..reference() };
        let r = check_adiabatic_limits(&p, LimitThresholds::default());
        assert!(!r.end_ok);
        assert!(r.end_ratio > 1.9);
    }

    #[test]
    fn standard_schedule_mapping() {
        let s = Schedule::standard(reference(), 4);
        assert_eq!(s.drives, [SiteDrive::Omega0, SiteDrive::Omega, SiteDrive::Omega, SiteDrive::Omega]);
        assert_eq!(s.rabi(0, 150.0), 1.0);
    }

    #[test]
    fn validation() {
        assert!(PulseParams { tp: 0.0, ..reference() }.validate().is_err());
        assert!(PulseParams { total_time: -1.0, ..reference() }.validate().is_err());
        assert!(PulseParams { omega_m: -0.1, ..reference() }.validate().is_err());
        assert!(reference().validate().is_ok());
    }

    proptest! {
        #[test]
        fn omega_dominates_omega0_when_early(
            t in -100.0f64..400.0,
            t0 in 50.0f64..250.0,
            gap in 0.0f64..150.0,
            tp in 5.0f64..100.0,
        ) {
            let p = PulseParams { t0, t1: t0 - gap, tp, ..reference() };
            prop_assert!(p.omega(t) >= p.omega0(t));
        }

        #[test]
        fn finite_difference_matches_derivative(t in 0.0f64..200.0, tp in 20.0f64..80.0) {
            let p = PulseParams { tp, ..reference() };
            let h = 1e-4;
            for (f, df) in [
                (PulseParams::omega as fn(&PulseParams, f64) -> f64, PulseParams::omega_derivative as fn(&PulseParams, f64) -> f64),
                (PulseParams::omega0, PulseParams::omega0_derivative),
            ] {
                let fd = (f(&p, t + h) - f(&p, t - h)) / (2.0 * h);
                let exact = df(&p, t);
                prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3));
            }
        }

        #[test]
        fn translation_invariance(t in 0.0f64..200.0, shift in -500.0f64..500.0) {
            let p = reference();
            let q = PulseParams { t0: p.t0 + shift, t1: p.t1 + shift, ..p };
            prop_assert!((p.omega(t) - q.omega(t + shift)).abs() < 1e-12);
            prop_assert!((p.omega0(t) - q.omega0(t + shift)).abs() < 1e-12);
        }
    }
}
