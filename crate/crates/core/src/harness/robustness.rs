//! Criticality-front checks across the three spatial geometries.

use crate::equilibrium::{criticality_profile, linspace, radial_steady_profiles, RadialProfile};
use crate::model::{ModelParams, SpatialProfile, TaxSchedule};

use super::scenario::{Scenario, TaxMode};

/// Rates at which the criticality front is reported for every profile, in
/// addition to the scenario sweep.
pub const CRITICALITY_RATES: [f64; 3] = [0.12, 0.16, 0.22];

#[derive(Debug, Clone, PartialEq)]
pub struct FrontCheck {
    pub tau: f64,
    pub crossings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileReport {
    pub profile: SpatialProfile,
    pub tau_c_min: f64,
    pub tau_c_max: f64,
    /// Midpoint of the `tau_c` range, where the margin must cross zero.
    pub tau_mid: f64,
    pub crossings_at_mid: Vec<f64>,
    pub pass: bool,
    /// Front positions at each sweep and reference rate.
    pub fronts: Vec<FrontCheck>,
    /// Radial steady states at `tau_mid`.
    pub radial: RadialProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub profiles: Vec<ProfileReport>,
}

impl RobustnessReport {
    pub fn all_pass(&self) -> bool {
        self.profiles.iter().all(|p| p.pass)
    }
}

pub fn geometries() -> [SpatialProfile; 3] {
    [
        SpatialProfile::ExponentialBaseline,
        SpatialProfile::polycentric(),
        SpatialProfile::suburban_flat(),
    ]
}

fn profile_report(
    p: &ModelParams,
    prof: SpatialProfile,
    mode: TaxMode,
    sweep: &[f64],
    distances: &[f64],
) -> ProfileReport {
    let base = criticality_profile(p, &prof, TaxSchedule::uniform(0.0), distances);
    let tau_c_min = base.tau_c.iter().copied().fold(f64::INFINITY, f64::min);
    let tau_c_max = base.tau_c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tau_mid = 0.5 * (tau_c_min + tau_c_max);

    let front = |tau: f64| {
        let tax = mode.schedule(tau);
        criticality_profile(p, &prof, tax, distances).crossings(p, &prof, tax)
    };
    let crossings_at_mid = front(tau_mid);
    let d_end = *distances.last().expect("distances");
    let pass = !crossings_at_mid.is_empty() && crossings_at_mid.iter().all(|&d| d > 0.0 && d < d_end);
    let fronts = sweep
        .iter()
        .chain(CRITICALITY_RATES.iter())
        .map(|&tau| FrontCheck {
            tau,
            crossings: front(tau),
        })
        .collect();
    ProfileReport {
        profile: prof,
        tau_c_min,
        tau_c_max,
        tau_mid,
        crossings_at_mid,
        pass,
        fronts,
        radial: radial_steady_profiles(p, &prof, mode.schedule(tau_mid), distances),
    }
}

/// Runs the criticality analysis on every geometry with the scenario's
/// parameters, tax mode and sweep.
pub fn robustness_suite(base: &Scenario) -> RobustnessReport {
    let distances = linspace(0.0, base.d_max(), base.analysis.radial_samples);
    let profiles = geometries()
        .into_iter()
        .map(|prof| profile_report(&base.params, prof, base.tax_mode, &base.tau_values, &distances))
        .collect();
    RobustnessReport { profiles }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_geometry_crosses_at_mid_range() {
        let r = robustness_suite(&Scenario::default());
        assert_eq!(r.profiles.len(), 3);
        for p in &r.profiles {
            assert!(p.pass, "{:?}", p.profile);
        }
        assert!(r.all_pass());
    }

    #[test]
    fn baseline_crossing_counts() {
        let r = robustness_suite(&Scenario::default());
        let base = &r.profiles[0];
        assert_eq!(base.crossings_at_mid.len(), 1);
        for f in &base.fronts {
            if f.tau < base.tau_c_min || f.tau > base.tau_c_max {
                assert!(f.crossings.is_empty(), "tau {}", f.tau);
            }
        }
    }
}
