//! Pointwise steady states of the reaction system, their local stability,
//! the critical tax rate and the radial/criticality profiles built on them.

use serde::{Deserialize, Serialize};

use crate::error::{LvtError, Result};
use crate::model::{alpha, theta, ModelParams, SpatialProfile, TaxSchedule};

/// Tolerance in `d` for locating the activation front.
pub const THRESHOLD_TOL: f64 = 1e-8;

/// Trace-determinant classification of a planar fixed point.
///
/// The node/focus distinctions extend the saddle-vs-boundary dichotomy of the
/// closed-form analysis; with the model's Jacobian only `Saddle`,
/// `NonHyperbolic` and `BoundaryOnly` actually occur.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    Saddle,
    StableNode,
    UnstableNode,
    StableFocus,
    UnstableFocus,
    BoundaryOnly,
    NonHyperbolic,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Saddle => "Saddle",
            Classification::StableNode => "StableNode",
            Classification::UnstableNode => "UnstableNode",
            Classification::StableFocus => "StableFocus",
            Classification::UnstableFocus => "UnstableFocus",
            Classification::BoundaryOnly => "BoundaryOnly",
            Classification::NonHyperbolic => "NonHyperbolic",
        }
    }

    /// Standard planar chart.
    pub fn from_trace_det(trace: f64, det: f64) -> Self {
        if det < 0.0 {
            return Classification::Saddle;
        }
        if det == 0.0 || trace == 0.0 {
            return Classification::NonHyperbolic;
        }
        let focus = trace * trace - 4.0 * det < 0.0;
        match (trace < 0.0, focus) {
            (true, false) => Classification::StableNode,
            (true, true) => Classification::StableFocus,
            (false, false) => Classification::UnstableNode,
            (false, true) => Classification::UnstableFocus,
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Interior steady state, or the boundary state `(0, 0)` when none exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPoint {
    pub v_star: f64,
    pub k_star: f64,
    pub exists: bool,
    pub trace_j: Option<f64>,
    pub det_j: Option<f64>,
    pub classification: Classification,
}

impl EquilibriumPoint {
    fn boundary(classification: Classification) -> Self {
        EquilibriumPoint {
            v_star: 0.0,
            k_star: 0.0,
            exists: false,
            trace_j: None,
            det_j: None,
            classification,
        }
    }
}

/// Closed-form trace/determinant of the reaction Jacobian at the interior point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianSummary {
    pub trace: f64,
    pub det: f64,
    pub classification: Classification,
}

/// Fixed point for productivity `a` and effective decay `alpha_v`.
///
/// `theta` and the Jacobian entries come from `p`; `p.tau` is not used.
pub fn fixed_point(p: &ModelParams, a: f64, alpha_v: f64) -> EquilibriumPoint {
    let th = theta(p);
    if alpha_v == th {
        return EquilibriumPoint::boundary(Classification::NonHyperbolic);
    }
    if !(alpha_v > th) {
        return EquilibriumPoint::boundary(Classification::BoundaryOnly);
    }
    let gap = alpha_v - th;
    let k_pow = p.c_b * alpha_v * th / (a * gap);
    let k_star = k_pow.powf(1.0 / p.beta);
    let v_star = p.c_b * th / gap;
    let js = jacobian_summary(p, alpha_v).expect("alpha > theta");
    EquilibriumPoint {
        v_star,
        k_star,
        exists: true,
        trace_j: Some(js.trace),
        det_j: Some(js.det),
        classification: js.classification,
    }
}

/// Fixed point at a location with productivity `a` and centrality `mu`
/// under tax rate `tau`.
pub fn equilibrium_at(p: &ModelParams, a: f64, mu: f64, tau: f64) -> EquilibriumPoint {
    fixed_point(p, a, alpha(&p.with_tau(tau), mu))
}

/// `tr(J) = -alpha + beta (I_0 kappa + delta)`, `det(J) = beta I_0 theta (theta - alpha)`.
pub fn jacobian_summary(p: &ModelParams, alpha_v: f64) -> Result<JacobianSummary> {
    let th = theta(p);
    if alpha_v < th {
        return Err(LvtError::NoInteriorPoint { alpha: alpha_v, theta: th });
    }
    let trace = -alpha_v + p.beta * (p.i_0 * p.kappa + p.delta);
    let det = p.beta * p.i_0 * th * (th - alpha_v);
    Ok(JacobianSummary {
        trace,
        det,
        classification: Classification::from_trace_det(trace, det),
    })
}

/// Trace of the linearization at wavenumber `q`; the determinant is unchanged.
pub fn dispersion_trace(trace_j: f64, d_v: f64, q: f64) -> f64 {
    trace_j - d_v * q * q
}

/// `tau_c = theta - r + mu`, the rate at which the interior point appears.
pub fn tau_critical(p: &ModelParams, mu: f64) -> f64 {
    theta(p) - p.r + mu
}

/// `tau - tau_c(d)` along the given distances.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityProfile {
    pub distances: Vec<f64>,
    pub tau_c: Vec<f64>,
    pub margin: Vec<f64>,
}

pub fn criticality_profile(
    p: &ModelParams,
    prof: &SpatialProfile,
    tax: TaxSchedule,
    distances: &[f64],
) -> CriticalityProfile {
    let tau_c: Vec<f64> = distances
        .iter()
        .map(|&d| tau_critical(p, prof.eval(p, d).1))
        .collect();
    let margin = distances
        .iter()
        .zip(&tau_c)
        .map(|(&d, tc)| tax.rate(d) - tc)
        .collect();
    CriticalityProfile {
        distances: distances.to_vec(),
        tau_c,
        margin,
    }
}

impl CriticalityProfile {
    /// Sign changes of the margin, located by bisection on the continuous profile.
    pub fn crossings(&self, p: &ModelParams, prof: &SpatialProfile, tax: TaxSchedule) -> Vec<f64> {
        let margin_at = |d: f64| tax.rate(d) - tau_critical(p, prof.eval(p, d).1);
        self.distances
            .windows(2)
            .zip(self.margin.windows(2))
            .filter(|(_, m)| (m[0] > 0.0) != (m[1] > 0.0))
            .map(|(d, _)| bisect(margin_at, d[0], d[1], THRESHOLD_TOL))
            .collect()
    }
}

/// Steady states sampled along the radial coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub distances: Vec<f64>,
    pub a: Vec<f64>,
    pub mu: Vec<f64>,
    pub tau: Vec<f64>,
    pub tau_c: Vec<f64>,
    pub points: Vec<EquilibriumPoint>,
    /// Smallest distance at which existence of the interior point flips.
    pub d_threshold: Option<f64>,
}

impl RadialProfile {
    pub fn v_star(&self) -> Vec<f64> {
        self.points.iter().map(|e| e.v_star).collect()
    }

    pub fn k_star(&self) -> Vec<f64> {
        self.points.iter().map(|e| e.k_star).collect()
    }

    pub fn margin(&self) -> Vec<f64> {
        self.tau.iter().zip(&self.tau_c).map(|(t, c)| t - c).collect()
    }
}

pub fn radial_steady_profiles(
    p: &ModelParams,
    prof: &SpatialProfile,
    tax: TaxSchedule,
    distances: &[f64],
) -> RadialProfile {
    let mut out = RadialProfile {
        distances: distances.to_vec(),
        a: Vec::with_capacity(distances.len()),
        mu: Vec::with_capacity(distances.len()),
        tau: Vec::with_capacity(distances.len()),
        tau_c: Vec::with_capacity(distances.len()),
        points: Vec::with_capacity(distances.len()),
        d_threshold: None,
    };
    for &d in distances {
        let (a, mu) = prof.eval(p, d);
        let tau = tax.rate(d);
        out.a.push(a);
        out.mu.push(mu);
        out.tau.push(tau);
        out.tau_c.push(tau_critical(p, mu));
        out.points.push(equilibrium_at(p, a, mu, tau));
    }
    let existence_margin = |d: f64| {
        let (_, mu) = prof.eval(p, d);
        alpha(&p.with_tau(tax.rate(d)), mu) - theta(p)
    };
    out.d_threshold = distances
        .windows(2)
        .zip(out.points.windows(2))
        .find(|(_, e)| e[0].exists != e[1].exists)
        .map(|(d, _)| bisect(existence_margin, d[0], d[1], THRESHOLD_TOL));
    out
}

/// Root of `f` on `[lo, hi]` given a sign change of `f > 0` across the interval.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let lo_pos = f(lo) > 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == lo_pos {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Evenly spaced distances `0, h, ..., d_max` (`n >= 2` samples).
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two samples");
    let h = (end - start) / (n - 1) as f64;
    (0..n)
        .map(|k| if k == n - 1 { end } else { start + k as f64 * h })
        .collect()
}
