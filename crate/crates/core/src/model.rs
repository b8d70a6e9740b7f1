//! Domain types shared by every module: grid geometry, model constants,
//! spatial productivity/centrality profiles and the pointwise derived
//! quantities (effective decay rate, profitability threshold, attractiveness).

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{LvtError, Result};

/// A scalar field sampled on the grid, indexed `[i, j]` with `i` along x.
pub type Grid = Array2<f64>;

/// Rectangular domain `[0, lx] x [0, ly]` sampled on `nx * ny` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lx: 10.0,
            ly: 10.0,
            nx: 61,
            ny: 61,
        }
    }
}

impl GridSpec {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        let gs = GridSpec { lx, ly, nx, ny };
        gs.validate()?;
        Ok(gs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 3 || self.ny < 3 {
            return Err(LvtError::param(
                "grid",
                format!("need at least 3 points per axis, got {}x{}", self.nx, self.ny),
            ));
        }
        if !(self.lx > 0.0 && self.lx.is_finite()) {
            return Err(LvtError::param("lx", format!("must be positive, got {}", self.lx)));
        }
        if !(self.ly > 0.0 && self.ly.is_finite()) {
            return Err(LvtError::param("ly", format!("must be positive, got {}", self.ly)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.lx / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy()
    }

    pub fn center(&self) -> (f64, f64) {
        (self.lx / 2.0, self.ly / 2.0)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn zeros(&self) -> Grid {
        Grid::zeros(self.shape())
    }

    pub fn filled(&self, value: f64) -> Grid {
        Grid::from_elem(self.shape(), value)
    }

    /// Builds a grid by evaluating `f(x, y)` at every node.
    pub fn map_xy(&self, mut f: impl FnMut(f64, f64) -> f64) -> Grid {
        Grid::from_shape_fn(self.shape(), |(i, j)| f(self.x(i), self.y(j)))
    }

    /// Builds a grid by evaluating `f(d)` at every node's distance to the center.
    pub fn map_radial(&self, mut f: impl FnMut(f64) -> f64) -> Grid {
        Grid::from_shape_fn(self.shape(), |(i, j)| f(radial_distance(self, i, j)))
    }

    pub fn check_shape(&self, g: &Grid) -> Result<()> {
        if g.dim() != self.shape() {
            return Err(LvtError::ShapeMismatch {
                expected: self.shape(),
                got: g.dim(),
            });
        }
        Ok(())
    }
}

/// Distance from node `(i, j)` to the domain center.
pub fn radial_distance(gs: &GridSpec, i: usize, j: usize) -> f64 {
    let (cx, cy) = gs.center();
    (gs.x(i) - cx).hypot(gs.y(j) - cy)
}

/// Scalar constants of the coupled land-value / built-capital system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Discount rate.
    pub r: f64,
    /// Ad valorem land value tax rate.
    pub tau: f64,
    /// Diffusion coefficient of land value.
    pub d_v: f64,
    /// Elasticity of rent with respect to built capital, in (0, 1).
    pub beta: f64,
    /// Baseline construction cost.
    pub c_b: f64,
    /// Investment sensitivity to profitability.
    pub i_0: f64,
    /// Profitability threshold.
    pub kappa: f64,
    /// Depreciation rate.
    pub delta: f64,
    /// Peak productivity.
    pub a_0: f64,
    /// Peak centrality effect.
    pub mu_0: f64,
    /// Productivity decay with distance.
    pub gamma: f64,
    /// Centrality decay with distance.
    pub lambda: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            r: 0.05,
            tau: 0.0,
            d_v: 0.1,
            beta: 0.5,
            c_b: 1.0,
            i_0: 1.0,
            kappa: 0.05,
            delta: 0.05,
            a_0: 1.0,
            mu_0: 0.05,
            gamma: 0.3,
            lambda: 0.3,
        }
    }
}

impl ModelParams {
    pub fn with_tau(self, tau: f64) -> Self {
        ModelParams { tau, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(LvtError::param(name, format!("must be positive and finite, got {v}")))
            }
        }
        positive("r", self.r)?;
        positive("d_v", self.d_v)?;
        positive("c_b", self.c_b)?;
        positive("i_0", self.i_0)?;
        positive("kappa", self.kappa)?;
        positive("delta", self.delta)?;
        positive("a_0", self.a_0)?;
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(LvtError::param("beta", format!("must lie in (0, 1), got {}", self.beta)));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(LvtError::param("tau", format!("must be >= 0, got {}", self.tau)));
        }
        for (name, v) in [("mu_0", self.mu_0), ("gamma", self.gamma), ("lambda", self.lambda)] {
            if !v.is_finite() {
                return Err(LvtError::param(name, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Shape of the productivity `A(d)` and centrality `mu(d)` profiles.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpatialProfile {
    /// `A = A_0 exp(-gamma d)`, `mu = mu_0 exp(-lambda d)`.
    #[default]
    ExponentialBaseline,
    /// Exponential baseline plus a Gaussian productivity bump of height
    /// `secondary_ratio * A_0` centered at `d_peak`.
    Polycentric {
        secondary_ratio: f64,
        d_peak: f64,
        width: f64,
    },
    /// Nearly flat productivity `A_0 (plateau + (1 - plateau) exp(-gamma d))`
    /// and a sharply decaying centrality `mu_0 exp(-mu_decay_factor lambda d)`.
    SuburbanFlat { plateau: f64, mu_decay_factor: f64 },
}

impl SpatialProfile {
    pub fn polycentric() -> Self {
        SpatialProfile::Polycentric {
            secondary_ratio: 0.5,
            d_peak: 5.0,
            width: 1.0,
        }
    }

    pub fn suburban_flat() -> Self {
        SpatialProfile::SuburbanFlat {
            plateau: 0.9,
            mu_decay_factor: 3.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SpatialProfile::ExponentialBaseline => "exponential",
            SpatialProfile::Polycentric { .. } => "polycentric",
            SpatialProfile::SuburbanFlat { .. } => "suburban",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SpatialProfile::ExponentialBaseline => Ok(()),
            SpatialProfile::Polycentric {
                secondary_ratio,
                d_peak,
                width,
            } => {
                if !(secondary_ratio >= 0.0 && secondary_ratio.is_finite()) {
                    return Err(LvtError::param("secondary_ratio", "must be >= 0"));
                }
                if !d_peak.is_finite() {
                    return Err(LvtError::param("d_peak", "must be finite"));
                }
                if !(width > 0.0 && width.is_finite()) {
                    return Err(LvtError::param("width", "must be positive"));
                }
                Ok(())
            }
            SpatialProfile::SuburbanFlat {
                plateau,
                mu_decay_factor,
            } => {
                if !(plateau > 0.0 && plateau <= 1.0) {
                    return Err(LvtError::param("plateau", "must lie in (0, 1]"));
                }
                if !mu_decay_factor.is_finite() {
                    return Err(LvtError::param("mu_decay_factor", "must be finite"));
                }
                Ok(())
            }
        }
    }

    /// `(A(d), mu(d))` at distance `d` from the center.
    pub fn eval(&self, p: &ModelParams, d: f64) -> (f64, f64) {
        let base_a = p.a_0 * (-p.gamma * d).exp();
        let base_mu = p.mu_0 * (-p.lambda * d).exp();
        match *self {
            SpatialProfile::ExponentialBaseline => (base_a, base_mu),
            SpatialProfile::Polycentric {
                secondary_ratio,
                d_peak,
                width,
            } => {
                let bump = secondary_ratio
                    * p.a_0
                    * (-(d - d_peak).powi(2) / (2.0 * width * width)).exp();
                (base_a + bump, base_mu)
            }
            SpatialProfile::SuburbanFlat {
                plateau,
                mu_decay_factor,
            } => (
                p.a_0 * (plateau + (1.0 - plateau) * (-p.gamma * d).exp()),
                p.mu_0 * (-mu_decay_factor * p.lambda * d).exp(),
            ),
        }
    }
}

/// `A` and `mu` sampled on every grid node.
pub fn eval_profiles(gs: &GridSpec, p: &ModelParams, prof: &SpatialProfile) -> Result<(Grid, Grid)> {
    prof.validate()?;
    let mut a = gs.zeros();
    let mut mu = gs.zeros();
    for ((i, j), av) in a.indexed_iter_mut() {
        let (ad, mud) = prof.eval(p, radial_distance(gs, i, j));
        *av = ad;
        mu[[i, j]] = mud;
    }
    if let Some(bad) = a.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(LvtError::param(
            "profile",
            format!("productivity must be positive everywhere, found {bad}"),
        ));
    }
    Ok((a, mu))
}

/// Effective decay rate `r + tau - mu` at one location.
pub fn alpha(p: &ModelParams, mu: f64) -> f64 {
    p.r + p.tau - mu
}

/// Effective decay rate on the grid. Negative values are allowed and counted.
#[derive(Debug, Clone)]
pub struct AlphaField {
    pub values: Grid,
    pub negative_count: usize,
}

impl AlphaField {
    pub fn has_negative(&self) -> bool {
        self.negative_count > 0
    }
}

pub fn alpha_field(p: &ModelParams, mu: &Grid) -> AlphaField {
    let values = mu.mapv(|m| alpha(p, m));
    let negative_count = values.iter().filter(|a| **a < 0.0).count();
    AlphaField {
        values,
        negative_count,
    }
}

/// Profitability threshold `kappa + delta / I_0`.
pub fn theta(p: &ModelParams) -> f64 {
    p.kappa + p.delta / p.i_0
}

/// `K^beta`, with `0^beta = 0` (and negative inputs treated as 0).
#[inline]
pub fn capital_power(k: f64, beta: f64) -> f64 {
    if k > 0.0 {
        k.powf(beta)
    } else {
        0.0
    }
}

/// Instantaneous profitability `A K^beta / (V + c_b)`.
pub fn profitability(p: &ModelParams, a: f64, k: f64, v: f64) -> f64 {
    a * capital_power(k, p.beta) / (v + p.c_b)
}

/// Attractiveness ratio `A / alpha`; undefined where `alpha <= 0`.
pub fn psi(a: f64, alpha: f64) -> Option<f64> {
    (alpha > 0.0).then(|| a / alpha)
}

#[derive(Debug, Clone)]
pub struct PsiField {
    pub values: Array2<Option<f64>>,
    pub undefined_count: usize,
}

impl PsiField {
    /// Defined values paired with the matching entries of `weights`.
    pub fn defined_with<'a>(&'a self, weights: &'a Grid) -> impl Iterator<Item = (f64, f64)> + 'a {
        self.values
            .iter()
            .zip(weights.iter())
            .filter_map(|(v, w)| v.map(|v| (v, *w)))
    }
}

pub fn psi_field(p: &ModelParams, a: &Grid, mu: &Grid) -> PsiField {
    let values = ndarray::Zip::from(a)
        .and(mu)
        .map_collect(|&a, &m| psi(a, alpha(p, m)));
    let undefined_count = values.iter().filter(|v| v.is_none()).count();
    PsiField {
        values,
        undefined_count,
    }
}

/// Tax rate as a function of distance to the center: `tau0 + eta * d`.
/// `eta = 0` is the uniform tax.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaxSchedule {
    pub tau0: f64,
    pub eta: f64,
}

impl TaxSchedule {
    pub fn uniform(tau: f64) -> Self {
        TaxSchedule { tau0: tau, eta: 0.0 }
    }

    pub fn radial_linear(tau0: f64, eta: f64) -> Self {
        TaxSchedule { tau0, eta }
    }

    pub fn rate(&self, d: f64) -> f64 {
        self.tau0 + self.eta * d
    }

    pub fn grid(&self, gs: &GridSpec) -> Grid {
        gs.map_radial(|d| self.rate(d))
    }

    pub fn is_uniform(&self) -> bool {
        self.eta == 0.0
    }
}

/// Land value and built capital on the grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub v: Grid,
    pub k: Grid,
    pub t: f64,
}

impl FieldPair {
    pub fn new(gs: &GridSpec, v: Grid, k: Grid, t: f64) -> Result<Self> {
        gs.check_shape(&v)?;
        gs.check_shape(&k)?;
        if v.iter().chain(k.iter()).any(|x| *x < 0.0) {
            return Err(LvtError::param("state", "V and K must be non-negative"));
        }
        Ok(FieldPair { v, k, t })
    }

    pub fn mean_v(&self) -> f64 {
        self.v.mean().unwrap_or(0.0)
    }

    pub fn mean_k(&self) -> f64 {
        self.k.mean().unwrap_or(0.0)
    }
}
