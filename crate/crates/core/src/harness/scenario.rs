//! Scenario configuration: a single TOML document with nested sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LvtError, Result};
use crate::indicators::WeightSet;
use crate::model::{Grid, GridSpec, ModelParams, SpatialProfile, TaxSchedule};
use crate::pde::SimConfig;
use crate::stochastic::StochasticParams;

/// Uniform tax, or a rate rising linearly with distance. The base rate comes
/// from the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaxMode {
    #[default]
    Uniform,
    RadialLinear { eta: f64 },
}

impl TaxMode {
    pub fn schedule(&self, tau0: f64) -> TaxSchedule {
        match *self {
            TaxMode::Uniform => TaxSchedule::uniform(tau0),
            TaxMode::RadialLinear { eta } => TaxSchedule::radial_linear(tau0, eta),
        }
    }
}

/// A scalar field over the grid defined by distance to the center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { value: f64 },
    /// `base + amplitude * exp(-decay * d)`.
    RadialExp { base: f64, amplitude: f64, decay: f64 },
}

impl FieldSpec {
    pub fn build(&self, gs: &GridSpec) -> Grid {
        match *self {
            FieldSpec::Constant { value } => gs.filled(value),
            FieldSpec::RadialExp { base, amplitude, decay } => {
                gs.map_radial(|d| base + amplitude * (-decay * d).exp())
            }
        }
    }
}

/// Overrides for the indicator weights; missing entries keep their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct WeightSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w1: Option<FieldSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w2: Option<FieldSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w3: Option<FieldSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w4: Option<FieldSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_density: Option<FieldSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invest_intensity: Option<FieldSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub risk_sigma: Option<FieldSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality: Option<FieldSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub risk_premium: Option<FieldSpec>,
}

impl WeightSpec {
    pub fn build(&self, gs: &GridSpec) -> WeightSet {
        let mut w = WeightSet::uniform(gs);
        let slots = [
            (&self.w1, &mut w.w1),
            (&self.w2, &mut w.w2),
            (&self.w3, &mut w.w3),
            (&self.w4, &mut w.w4),
            (&self.p_density, &mut w.p_density),
            (&self.invest_intensity, &mut w.invest_intensity),
            (&self.risk_sigma, &mut w.risk_sigma),
            (&self.quality, &mut w.quality),
            (&self.risk_premium, &mut w.risk_premium),
        ];
        for (spec, slot) in slots {
            if let Some(s) = spec {
                *slot = s.build(gs);
            }
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapFormat {
    #[default]
    Pgm,
    Svg,
    Both,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub dir: PathBuf,
    pub heatmaps: HeatmapFormat,
    /// Write every recorded field snapshot as `i,j,x,y,V,K`.
    pub field_csv: bool,
    /// Keep every n-th recorded time in the stochastic path export; 0 skips it.
    pub path_thin: usize,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            dir: PathBuf::from("outputs"),
            heatmaps: HeatmapFormat::Pgm,
            field_csv: false,
            path_thin: 1,
        }
    }
}

/// Which products a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Analysis {
    pub simulate: bool,
    pub equilibrium: bool,
    pub indicators: bool,
    pub stochastic: bool,
    /// Samples along the radial ray for closed-form products.
    pub radial_samples: usize,
    /// Look-ahead window for the dynamic indicators; defaults to half the
    /// simulated horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub indicator_horizon: Option<f64>,
    /// Distance at which the stochastic ensemble runs.
    pub stochastic_distance: f64,
}

impl Default for Analysis {
    fn default() -> Self {
        Analysis {
            simulate: true,
            equilibrium: true,
            indicators: true,
            stochastic: false,
            radial_samples: 201,
            indicator_horizon: None,
            stochastic_distance: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RingMode {
    /// Steady state from `A` and `mu` averaged over the ring's distance interval.
    #[default]
    IntervalMean,
    /// Steady state at the ring midpoint.
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RingDiscretization {
    pub n_rings: usize,
    /// Continuum oracle resolution relative to the ring spacing.
    pub refine: usize,
    pub mode: RingMode,
}

impl Default for RingDiscretization {
    fn default() -> Self {
        RingDiscretization {
            n_rings: 18,
            refine: 10,
            mode: RingMode::IntervalMean,
        }
    }
}

impl RingDiscretization {
    pub fn validate(&self) -> Result<()> {
        if self.n_rings < 2 {
            return Err(LvtError::param("n_rings", "need at least 2 rings"));
        }
        if self.refine < 1 {
            return Err(LvtError::param("refine", "must be >= 1"));
        }
        Ok(())
    }

    /// Ring edges `0 = e_0 < ... < e_n = d_max`.
    pub fn edges(&self, d_max: f64) -> Vec<f64> {
        crate::equilibrium::linspace(0.0, d_max, self.n_rings + 1)
    }

    pub fn midpoints(&self, d_max: f64) -> Vec<f64> {
        self.edges(d_max).windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub tau_values: Vec<f64>,
    /// Base seed; stochastic runs use it unless the CLI overrides it.
    pub seed: u64,
    pub grid: GridSpec,
    pub params: ModelParams,
    pub profile: SpatialProfile,
    pub sim: SimConfig,
    pub tax_mode: TaxMode,
    pub weights: WeightSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stochastic: Option<StochasticParams>,
    pub outputs: Outputs,
    pub analysis: Analysis,
    pub rings: RingDiscretization,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            name: "baseline".into(),
            tau_values: vec![0.0, 0.005, 0.01, 0.02],
            seed: 42,
            grid: GridSpec::default(),
            params: ModelParams::default(),
            profile: SpatialProfile::ExponentialBaseline,
            sim: SimConfig::default(),
            tax_mode: TaxMode::Uniform,
            weights: WeightSpec::default(),
            stochastic: None,
            outputs: Outputs::default(),
            analysis: Analysis::default(),
            rings: RingDiscretization::default(),
        }
    }
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(s).map_err(|e| LvtError::Config(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LvtError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| LvtError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(LvtError::param("name", "must be a non-empty plain file name"));
        }
        if self.tau_values.is_empty() {
            return Err(LvtError::param("tau_values", "sweep must not be empty"));
        }
        if self.tau_values.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(LvtError::param("tau_values", "rates must be finite and >= 0"));
        }
        if let TaxMode::RadialLinear { eta } = self.tax_mode {
            if !(eta.is_finite() && eta >= 0.0) {
                return Err(LvtError::param("eta", "must be finite and >= 0"));
            }
        }
        self.grid.validate()?;
        self.params.validate()?;
        self.profile.validate()?;
        self.sim.validate()?;
        self.weights().validate(&self.grid)?;
        if let Some(sp) = &self.stochastic {
            sp.validate()?;
        }
        if self.analysis.radial_samples < 2 {
            return Err(LvtError::param("radial_samples", "need at least 2 samples"));
        }
        if let Some(h) = self.analysis.indicator_horizon {
            if !(h.is_finite() && h >= 0.0) {
                return Err(LvtError::param("indicator_horizon", "must be finite and >= 0"));
            }
        }
        if !(self.analysis.stochastic_distance.is_finite() && self.analysis.stochastic_distance >= 0.0) {
            return Err(LvtError::param("stochastic_distance", "must be finite and >= 0"));
        }
        self.rings.validate()?;
        Ok(())
    }

    pub fn weights(&self) -> WeightSet {
        self.weights.build(&self.grid)
    }

    pub fn stochastic_params(&self) -> StochasticParams {
        self.stochastic.clone().unwrap_or(StochasticParams {
            seed: self.seed,
            ..StochasticParams::default()
        })
    }

    /// Largest distance on every ray from the center.
    pub fn d_max(&self) -> f64 {
        0.5 * self.grid.lx.min(self.grid.ly)
    }

    pub fn indicator_horizon(&self) -> f64 {
        self.analysis.indicator_horizon.unwrap_or(0.5 * self.sim.t_final)
    }

    /// Directory label for one sweep member.
    pub fn tau_label(tau: f64) -> String {
        format!("tau_{tau}")
    }
}
