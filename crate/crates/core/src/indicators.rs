//! Fiscal, investment and distributive indicators over simulated states.
//!
//! Spatial integrals use the tensor trapezoid rule on the simulation grid
//! (edge nodes weighted 1/2, corners 1/4), so uniform fields integrate to
//! `value * area` exactly. Time integrals interpolate the undiscounted flow
//! linearly between snapshots and integrate the exponential discount factor
//! exactly on each interval; for zero discounting this is the ordinary
//! trapezoid rule.

use ndarray::{Array2, Zip};

use crate::error::{LvtError, Result};
use crate::model::{capital_power, FieldPair, Grid, GridSpec};

/// Tolerance when matching snapshot times against an integration window.
const TIME_EPS: f64 = 1e-9;

/// Trapezoid cell weights (including `dx * dy`).
pub fn quadrature_weights(gs: &GridSpec) -> Grid {
    let edge = |k: usize, n: usize| if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
    let cell = gs.dx() * gs.dy();
    Grid::from_shape_fn(gs.shape(), |(i, j)| edge(i, gs.nx) * edge(j, gs.ny) * cell)
}

/// `∬ f dx dy` by the trapezoid rule.
pub fn integrate(gs: &GridSpec, f: &Grid) -> f64 {
    integrate_product(gs, &[f])
}

/// `∬ f_1 f_2 ... f_n dx dy`.
pub fn integrate_product(gs: &GridSpec, factors: &[&Grid]) -> f64 {
    let (nx, ny) = gs.shape();
    let edge = |k: usize, n: usize| if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
    let mut total = 0.0;
    for i in 0..nx {
        let wi = edge(i, nx);
        let mut row = 0.0;
        for j in 0..ny {
            let prod: f64 = factors.iter().map(|f| f[[i, j]]).product();
            row += edge(j, ny) * prod;
        }
        total += wi * row;
    }
    total * gs.dx() * gs.dy()
}

/// Spatial weighting and adjustment fields.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    /// Revenue weight.
    pub w1: Grid,
    /// Mean-value weight.
    pub w2: Grid,
    /// K/V ratio weight.
    pub w3: Grid,
    /// NPV weight.
    pub w4: Grid,
    /// Population or activity density; also weights mean profitability.
    pub p_density: Grid,
    pub invest_intensity: Grid,
    pub risk_sigma: Grid,
    pub quality: Grid,
    pub risk_premium: Grid,
}

impl WeightSet {
    /// Unit weights, zero risk, zero quality, zero premium.
    pub fn uniform(gs: &GridSpec) -> Self {
        let one = gs.filled(1.0);
        let zero = gs.zeros();
        WeightSet {
            w1: one.clone(),
            w2: one.clone(),
            w3: one.clone(),
            w4: one.clone(),
            p_density: one.clone(),
            invest_intensity: one,
            risk_sigma: zero.clone(),
            quality: zero.clone(),
            risk_premium: zero,
        }
    }

    pub fn validate(&self, gs: &GridSpec) -> Result<()> {
        let named = [
            ("w1", &self.w1),
            ("w2", &self.w2),
            ("w3", &self.w3),
            ("w4", &self.w4),
            ("p_density", &self.p_density),
            ("invest_intensity", &self.invest_intensity),
            ("risk_sigma", &self.risk_sigma),
            ("quality", &self.quality),
            ("risk_premium", &self.risk_premium),
        ];
        for (name, g) in named {
            gs.check_shape(g)?;
            if g.iter().any(|x| !x.is_finite()) {
                return Err(LvtError::param(name, "must be finite"));
            }
        }
        for (name, g) in &named[..6] {
            if g.iter().any(|x| *x < 0.0) {
                return Err(LvtError::param(name, "weights must be non-negative"));
            }
        }
        if integrate_product(gs, &[&self.p_density, &self.w2]) <= 0.0 {
            return Err(LvtError::param("w2", "p_density * w2 has zero mass"));
        }
        if integrate(gs, &self.w4) <= 0.0 {
            return Err(LvtError::param("w4", "zero mass"));
        }
        let ok = Zip::from(&self.risk_sigma)
            .and(&self.quality)
            .fold(true, |acc, s, q| acc && *s < 1.0 + *q);
        if !ok {
            return Err(LvtError::param("risk_sigma", "must stay below 1 + quality"));
        }
        Ok(())
    }
}

/// Instantaneous revenue `tau ∬ V`.
pub fn tax_revenue(tau: f64, state: &FieldPair, gs: &GridSpec) -> f64 {
    tau * integrate(gs, &state.v)
}

/// Instantaneous revenue for a spatially varying rate, `∬ tau(x, y) V`.
pub fn tax_revenue_field(tax: &Grid, state: &FieldPair, gs: &GridSpec) -> f64 {
    integrate_product(gs, &[tax, &state.v])
}

/// Weights `(left, right)` such that
/// `∫_a^b e^{-c (s - a)} f(s) ds = e^0 * (left f(a) + right f(b))`
/// for linear `f` on an interval of length `h`.
fn discounted_linear_weights(c: f64, h: f64) -> (f64, f64) {
    let x = c * h;
    if x.abs() < 1e-2 {
        let x2 = x * x;
        let x3 = x2 * x;
        let x4 = x2 * x2;
        let left = 0.5 - x / 6.0 + x2 / 24.0 - x3 / 120.0 + x4 / 720.0;
        let right = 0.5 - x / 3.0 + x2 / 8.0 - x3 / 30.0 + x4 / 144.0;
        (h * left, h * right)
    } else {
        let one_minus = -(-x).exp_m1();
        let g = one_minus / (x * x);
        (h * (1.0 / x - g), h * (g - (-x).exp() / x))
    }
}

/// `∫_{t0}^{t0+horizon} e^{-rate (t - t0)} f(t) dt` for `f` sampled at
/// `times`, linearly interpolated.
pub fn discounted_integral(times: &[f64], values: &[f64], t0: f64, horizon: f64, rate: f64) -> Result<f64> {
    if times.len() != values.len() {
        return Err(LvtError::param("values", "length differs from times"));
    }
    if times.is_empty() {
        return Err(LvtError::EmptyInput("discounted_integral"));
    }
    let t1 = t0 + horizon;
    let (first, last) = (times[0], times[times.len() - 1]);
    if first > t0 + TIME_EPS || last < t1 - TIME_EPS || horizon < 0.0 {
        return Err(LvtError::InsufficientCoverage {
            have_from: first,
            have_to: last,
            need_from: t0,
            need_to: t1,
        });
    }
    if horizon == 0.0 {
        return Ok(0.0);
    }
    let interp = |t: f64| -> f64 {
        let k = times.partition_point(|&s| s <= t);
        if k == 0 {
            return values[0];
        }
        if k >= times.len() {
            return values[times.len() - 1];
        }
        let (ta, tb) = (times[k - 1], times[k]);
        let w = (t - ta) / (tb - ta);
        values[k - 1] * (1.0 - w) + values[k] * w
    };

    let mut knots = vec![(t0, interp(t0))];
    for (&t, &v) in times.iter().zip(values) {
        if t > t0 + TIME_EPS && t < t1 - TIME_EPS {
            knots.push((t, v));
        }
    }
    knots.push((t1, interp(t1)));

    let mut total = 0.0;
    for w in knots.windows(2) {
        let ((ta, fa), (tb, fb)) = (w[0], w[1]);
        let (wl, wr) = discounted_linear_weights(rate, tb - ta);
        total += (-rate * (ta - t0)).exp() * (wl * fa + wr * fb);
    }
    Ok(total)
}

/// Discounted revenue `∫_0^T e^{-r s} tau ∬ V(t0 + s) w1 ds`.
pub fn tax_revenue_dynamic(
    tau: f64,
    snapshots: &[FieldPair],
    t0: f64,
    gs: &GridSpec,
    w1: &Grid,
    r: f64,
    horizon: f64,
) -> Result<f64> {
    let tax = gs.filled(tau);
    tax_revenue_dynamic_field(&tax, snapshots, t0, gs, w1, r, horizon)
}

pub fn tax_revenue_dynamic_field(
    tax: &Grid,
    snapshots: &[FieldPair],
    t0: f64,
    gs: &GridSpec,
    w1: &Grid,
    r: f64,
    horizon: f64,
) -> Result<f64> {
    let times: Vec<f64> = snapshots.iter().map(|s| s.t).collect();
    let flow: Vec<f64> = snapshots
        .iter()
        .map(|s| integrate_product(gs, &[tax, &s.v, w1]))
        .collect();
    discounted_integral(&times, &flow, t0, horizon, r)
}

/// `∬ p V w2 / ∬ p w2`.
pub fn weighted_mean_value(state: &FieldPair, p_density: &Grid, w2: &Grid, gs: &GridSpec) -> Result<f64> {
    let den = integrate_product(gs, &[p_density, w2]);
    if den <= 0.0 {
        return Err(LvtError::ZeroDenominator("weighted_mean_value"));
    }
    Ok(integrate_product(gs, &[p_density, &state.v, w2]) / den)
}

/// `∬ K / ∬ V`.
pub fn kv_ratio(state: &FieldPair, gs: &GridSpec) -> Result<f64> {
    let den = integrate(gs, &state.v);
    if den <= 0.0 {
        return Err(LvtError::ZeroDenominator("kv_ratio"));
    }
    Ok(integrate(gs, &state.k) / den)
}

/// `∬ I K w3 / ∬ I V w3`.
pub fn kv_ratio_adjusted(state: &FieldPair, invest: &Grid, w3: &Grid, gs: &GridSpec) -> Result<f64> {
    let den = integrate_product(gs, &[invest, &state.v, w3]);
    if den <= 0.0 {
        return Err(LvtError::ZeroDenominator("kv_ratio_adjusted"));
    }
    Ok(integrate_product(gs, &[invest, &state.k, w3]) / den)
}

/// Risk- and quality-adjusted profitability; cells with `V = 0` are undefined.
#[derive(Debug, Clone)]
pub struct ProfitabilityField {
    pub values: Array2<Option<f64>>,
    pub excluded: usize,
}

/// `(A K^beta / V) (1 - sigma / (1 + quality))`.
pub fn adjusted_profitability(
    state: &FieldPair,
    a: &Grid,
    risk_sigma: &Grid,
    quality: &Grid,
    beta: f64,
) -> ProfitabilityField {
    let values = Zip::from(&state.v)
        .and(&state.k)
        .and(a)
        .and(risk_sigma)
        .and(quality)
        .map_collect(|&v, &k, &a, &s, &q| {
            (v > 0.0).then(|| a * capital_power(k, beta) / v * (1.0 - s / (1.0 + q)))
        });
    let excluded = values.iter().filter(|x| x.is_none()).count();
    ProfitabilityField { values, excluded }
}

/// `∬ w Y_adj / ∬ w` over the cells where `Y_adj` is defined.
pub fn adjusted_profitability_mean(field: &ProfitabilityField, w: &Grid, gs: &GridSpec) -> Result<f64> {
    if field.excluded == field.values.len() {
        return Err(LvtError::AllExcluded {
            what: "adjusted_profitability_mean",
            total: field.values.len(),
        });
    }
    let mask = field.values.mapv(|y| if y.is_some() { 1.0 } else { 0.0 });
    let y = field.values.mapv(|y| y.unwrap_or(0.0));
    let den = integrate_product(gs, &[w, &mask]);
    if den <= 0.0 {
        return Err(LvtError::ZeroDenominator("adjusted_profitability_mean"));
    }
    Ok(integrate_product(gs, &[w, &y]) / den)
}

/// Local NPV `∫_0^T e^{-(r + rho) s} [A K(t0+s)^beta - tau V(t0+s)] ds`.
#[allow(clippy::too_many_arguments)]
pub fn npv_local(
    a: f64,
    times: &[f64],
    k_path: &[f64],
    v_path: &[f64],
    tau: f64,
    r: f64,
    rho: f64,
    beta: f64,
    t0: f64,
    horizon: f64,
) -> Result<f64> {
    if k_path.len() != times.len() || v_path.len() != times.len() {
        return Err(LvtError::param("path", "length differs from times"));
    }
    if !(r + rho > 0.0) {
        return Err(LvtError::param("rho", "r + rho must be positive"));
    }
    let flow: Vec<f64> = k_path
        .iter()
        .zip(v_path)
        .map(|(&k, &v)| a * capital_power(k, beta) - tau * v)
        .collect();
    discounted_integral(times, &flow, t0, horizon, r + rho)
}

/// Local NPV at every grid node from the recorded snapshots.
#[allow(clippy::too_many_arguments)]
pub fn npv_grid(
    snapshots: &[FieldPair],
    a: &Grid,
    tax: &Grid,
    r: f64,
    risk_premium: &Grid,
    beta: f64,
    t0: f64,
    horizon: f64,
    gs: &GridSpec,
) -> Result<Grid> {
    let times: Vec<f64> = snapshots.iter().map(|s| s.t).collect();
    let mut out = gs.zeros();
    let mut k_path = vec![0.0; snapshots.len()];
    let mut v_path = vec![0.0; snapshots.len()];
    for ((i, j), o) in out.indexed_iter_mut() {
        for (n, s) in snapshots.iter().enumerate() {
            k_path[n] = s.k[[i, j]];
            v_path[n] = s.v[[i, j]];
        }
        *o = npv_local(
            a[[i, j]],
            &times,
            &k_path,
            &v_path,
            tax[[i, j]],
            r,
            risk_premium[[i, j]],
            beta,
            t0,
            horizon,
        )?;
    }
    Ok(out)
}

/// `∬ NPV w4 / ∬ w4`.
pub fn npv_mean(npv: &Grid, w4: &Grid, gs: &GridSpec) -> Result<f64> {
    let den = integrate(gs, w4);
    if den <= 0.0 {
        return Err(LvtError::ZeroDenominator("npv_mean"));
    }
    Ok(integrate_product(gs, &[npv, w4]) / den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lorenz {
    /// `(population share, value share)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub gini: f64,
}

/// Weighted Lorenz curve and Gini index of non-negative `values`.
pub fn lorenz_gini(values: &[f64], weights: &[f64]) -> Result<Lorenz> {
    if values.is_empty() {
        return Err(LvtError::EmptyInput("lorenz_gini"));
    }
    if values.len() != weights.len() {
        return Err(LvtError::param("weights", "length differs from values"));
    }
    if values.iter().chain(weights).any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(LvtError::param("values", "values and weights must be finite and non-negative"));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let total_w: f64 = weights.iter().sum();
    let total_v: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
    if total_w <= 0.0 {
        return Err(LvtError::ZeroDenominator("lorenz_gini weights"));
    }
    if total_v <= 0.0 {
        return Err(LvtError::ZeroDenominator("lorenz_gini values"));
    }

    let mut points = Vec::with_capacity(values.len() + 1);
    points.push((0.0, 0.0));
    let (mut cw, mut cv) = (0.0, 0.0);
    let mut area = 0.0;
    for &k in &order {
        let (px, py) = (cw / total_w, cv / total_v);
        cw += weights[k];
        cv += values[k] * weights[k];
        let (x, y) = (cw / total_w, cv / total_v);
        area += 0.5 * (x - px) * (y + py);
        points.push((x, y));
    }
    let gini = (1.0 - 2.0 * area).max(0.0);
    Ok(Lorenz { points, gini })
}

/// All indicators at the recorded times that leave a full `horizon` ahead.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IndicatorSeries {
    pub times: Vec<f64>,
    pub r_tax: Vec<f64>,
    pub r_tax_ad: Vec<f64>,
    pub v_bar: Vec<f64>,
    pub r_kv: Vec<f64>,
    pub r_kv_adj: Vec<f64>,
    pub y_adj_bar: Vec<f64>,
    pub npv_bar: Vec<f64>,
    /// Cells excluded from `y_adj_bar` (V = 0), summed over rows.
    pub excluded_cells: usize,
}

pub struct IndicatorInputs<'a> {
    pub gs: &'a GridSpec,
    pub a: &'a Grid,
    pub tax: &'a Grid,
    pub r: f64,
    pub beta: f64,
    pub weights: &'a WeightSet,
    pub horizon: f64,
}

pub fn indicator_series(inp: &IndicatorInputs<'_>, snapshots: &[FieldPair]) -> Result<IndicatorSeries> {
    let gs = inp.gs;
    let w = inp.weights;
    let mut out = IndicatorSeries::default();
    let Some(last) = snapshots.last() else {
        return Ok(out);
    };
    for (n, s) in snapshots.iter().enumerate() {
        if s.t + inp.horizon > last.t + TIME_EPS {
            break;
        }
        let ahead = &snapshots[n..];
        out.times.push(s.t);
        out.r_tax.push(tax_revenue_field(inp.tax, s, gs));
        out.r_tax_ad
            .push(tax_revenue_dynamic_field(inp.tax, ahead, s.t, gs, &w.w1, inp.r, inp.horizon)?);
        out.v_bar.push(weighted_mean_value(s, &w.p_density, &w.w2, gs)?);
        out.r_kv.push(kv_ratio(s, gs)?);
        out.r_kv_adj.push(kv_ratio_adjusted(s, &w.invest_intensity, &w.w3, gs)?);
        let y = adjusted_profitability(s, inp.a, &w.risk_sigma, &w.quality, inp.beta);
        out.excluded_cells += y.excluded;
        out.y_adj_bar.push(adjusted_profitability_mean(&y, &w.p_density, gs)?);
        let npv = npv_grid(ahead, inp.a, inp.tax, inp.r, &w.risk_premium, inp.beta, s.t, inp.horizon, gs)?;
        out.npv_bar.push(npv_mean(&npv, &w.w4, gs)?);
    }
    Ok(out)
}
