//! Explicit-Euler integration of the coupled land-value / built-capital
//! reaction-diffusion system on the rectangular grid.
//!
//! Only `V` diffuses. Boundaries are homogeneous Neumann, realized by
//! mirroring the first interior node across the edge. Both fields are
//! advanced simultaneously from the previous state.

use ndarray::{Axis, Zip};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FieldName, LvtError, Result};
use crate::model::{
    capital_power, eval_profiles, radial_distance, FieldPair, Grid, GridSpec, ModelParams,
    SpatialProfile, TaxSchedule,
};

/// Safety factor applied to the explicit stability bound.
pub const STABILITY_SAFETY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Centered Gaussian bump in `V`, uniform `K = k0`.
    GaussianPeak { amplitude: f64, width: f64, k0: f64 },
    UniformConstant { v0: f64, k0: f64 },
    /// Explicit grids, outer index along x.
    Custom { v: Vec<Vec<f64>>, k: Vec<Vec<f64>> },
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::GaussianPeak {
            amplitude: 1.0,
            width: GridSpec::default().lx / 8.0,
            k0: 0.1,
        }
    }
}

impl InitialCondition {
    pub fn build(&self, gs: &GridSpec) -> Result<FieldPair> {
        match self {
            InitialCondition::GaussianPeak {
                amplitude,
                width,
                k0,
            } => {
                if !(*width > 0.0) {
                    return Err(LvtError::param("width", "must be positive"));
                }
                let v = gs.map_radial(|d| amplitude * (-d * d / (2.0 * width * width)).exp());
                FieldPair::new(gs, v, gs.filled(*k0), 0.0)
            }
            InitialCondition::UniformConstant { v0, k0 } => {
                FieldPair::new(gs, gs.filled(*v0), gs.filled(*k0), 0.0)
            }
            InitialCondition::Custom { v, k } => {
                FieldPair::new(gs, nested_to_grid(v)?, nested_to_grid(k)?, 0.0)
            }
        }
    }
}

fn nested_to_grid(rows: &[Vec<f64>]) -> Result<Grid> {
    let nx = rows.len();
    let ny = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ny) {
        return Err(LvtError::param("initial_condition", "ragged custom grid"));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Grid::from_shape_vec((nx, ny), flat)
        .map_err(|e| LvtError::param("initial_condition", e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Steps between recorded spatial averages (and snapshots).
    pub record_every: usize,
    /// Keep full-field snapshots at every recorded time.
    pub keep_snapshots: bool,
    pub initial_condition: InitialCondition,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.05,
            t_final: 50.0,
            record_every: 20,
            keep_snapshots: true,
            initial_condition: InitialCondition::default(),
        }
    }
}

impl SimConfig {
    pub fn n_steps(&self) -> usize {
        ((self.t_final / self.dt).round() as usize).max(1)
    }

    /// Step size, horizon and recording interval; stability is checked per run.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(LvtError::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(LvtError::param(
                "t_final",
                format!("must be positive, got {}", self.t_final),
            ));
        }
        if self.record_every == 0 {
            return Err(LvtError::param("record_every", "must be at least 1"));
        }
        Ok(())
    }
}

/// Largest admissible explicit step given the fastest diffusion and reaction rates.
pub fn max_stable_dt(gs: &GridSpec, p: &ModelParams, tau_max: f64, a_max: f64, k_max: f64) -> f64 {
    let dx = gs.dx();
    let dy = gs.dy();
    let diffusion = 2.0 * p.d_v * (1.0 / (dx * dx) + 1.0 / (dy * dy));
    let profit_max = a_max * capital_power(k_max, p.beta) / p.c_b;
    STABILITY_SAFETY / (diffusion + p.r + tau_max + p.i_0 * profit_max)
}

/// Five-point Laplacian with mirrored ghost nodes (zero normal derivative).
pub fn laplacian(gs: &GridSpec, field: &Grid) -> Result<Grid> {
    gs.check_shape(field)?;
    let mut out = gs.zeros();
    let (inv_dx2, inv_dy2) = inverse_squares(gs);
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            for (j, o) in row.iter_mut().enumerate() {
                *o = laplacian_at(field, i, j, inv_dx2, inv_dy2);
            }
        });
    Ok(out)
}

fn inverse_squares(gs: &GridSpec) -> (f64, f64) {
    let dx = gs.dx();
    let dy = gs.dy();
    (1.0 / (dx * dx), 1.0 / (dy * dy))
}

#[inline]
fn mirror(idx: usize, n: usize) -> (usize, usize) {
    let lo = if idx == 0 { 1 } else { idx - 1 };
    let hi = if idx + 1 == n { n - 2 } else { idx + 1 };
    (lo, hi)
}

#[inline]
fn laplacian_at(f: &Grid, i: usize, j: usize, inv_dx2: f64, inv_dy2: f64) -> f64 {
    let (nx, ny) = f.dim();
    let (il, ih) = mirror(i, nx);
    let (jl, jh) = mirror(j, ny);
    let c = f[[i, j]];
    (f[[ih, j]] - 2.0 * c + f[[il, j]]) * inv_dx2 + (f[[i, jh]] - 2.0 * c + f[[i, jl]]) * inv_dy2
}

/// Coefficient grids that stay fixed during a run.
#[derive(Debug, Clone)]
struct Coefficients<'a> {
    a: &'a Grid,
    /// `r + tau(x, y) - mu(x, y)`
    decay: &'a Grid,
}

/// Advances one explicit step; returns the new state and the number of
/// clamped (negative) values.
fn advance(
    gs: &GridSpec,
    p: &ModelParams,
    coef: &Coefficients<'_>,
    state: &FieldPair,
    dt: f64,
    step_index: usize,
) -> Result<(FieldPair, usize)> {
    let (inv_dx2, inv_dy2) = inverse_squares(gs);
    let mut v_new = gs.zeros();
    let mut k_new = gs.zeros();
    let v = &state.v;
    let k = &state.k;

    let clamps: usize = v_new
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(k_new.axis_iter_mut(Axis(0)).into_par_iter())
        .enumerate()
        .map(|(i, (mut vrow, mut krow))| {
            let mut clamped = 0usize;
            for j in 0..vrow.len() {
                let vij = v[[i, j]];
                let kij = k[[i, j]];
                let a = coef.a[[i, j]];
                let rent = a * capital_power(kij, p.beta);
                let lap = laplacian_at(v, i, j, inv_dx2, inv_dy2);
                let dv = -coef.decay[[i, j]] * vij + p.d_v * lap + rent;
                let dk = p.i_0 * (rent / (vij + p.c_b) - p.kappa) * kij - p.delta * kij;
                let vn = vij + dt * dv;
                let kn = kij + dt * dk;
                if vn < 0.0 {
                    clamped += 1;
                }
                if kn < 0.0 {
                    clamped += 1;
                }
                // `<` keeps NaN so the finiteness check below sees it
                vrow[j] = if vn < 0.0 { 0.0 } else { vn };
                krow[j] = if kn < 0.0 { 0.0 } else { kn };
            }
            clamped
        })
        .sum();

    for (field, grid) in [(FieldName::V, &v_new), (FieldName::K, &k_new)] {
        if let Some(((i, j), _)) = grid.indexed_iter().find(|(_, x)| !x.is_finite()) {
            return Err(LvtError::NonFiniteGrid {
                field,
                step: step_index,
                i,
                j,
            });
        }
    }

    let next = FieldPair {
        v: v_new,
        k: k_new,
        t: state.t + dt,
    };
    Ok((next, clamps))
}

/// One explicit step with the uniform tax `p.tau`.
pub fn step(
    gs: &GridSpec,
    p: &ModelParams,
    a: &Grid,
    mu: &Grid,
    state: &FieldPair,
    dt: f64,
) -> Result<FieldPair> {
    gs.check_shape(a)?;
    gs.check_shape(mu)?;
    gs.check_shape(&state.v)?;
    gs.check_shape(&state.k)?;
    let decay = mu.mapv(|m| p.r + p.tau - m);
    let coef = Coefficients { a, decay: &decay };
    advance(gs, p, &coef, state, dt, 0).map(|(s, _)| s)
}

#[derive(Debug, Clone)]
pub struct SimTrace {
    pub times: Vec<f64>,
    pub mean_v: Vec<f64>,
    pub mean_k: Vec<f64>,
    /// Full fields at each recorded time (empty unless requested).
    pub snapshots: Vec<FieldPair>,
    pub final_state: FieldPair,
    /// Number of negative values clamped to zero over the run.
    pub clamp_count: usize,
}

impl SimTrace {
    pub fn final_means(&self) -> (f64, f64) {
        (self.final_state.mean_v(), self.final_state.mean_k())
    }
}

/// A fully prepared run: coefficient grids, tax field and validated step size.
#[derive(Debug, Clone)]
pub struct Simulation {
    gs: GridSpec,
    p: ModelParams,
    a: Grid,
    mu: Grid,
    decay: Grid,
    config: SimConfig,
    initial: FieldPair,
}

impl Simulation {
    /// Uniform tax taken from `p.tau`.
    pub fn new(gs: &GridSpec, p: &ModelParams, prof: &SpatialProfile, sc: &SimConfig) -> Result<Self> {
        Self::with_tax(gs, p, prof, TaxSchedule::uniform(p.tau), sc)
    }

    pub fn with_tax(
        gs: &GridSpec,
        p: &ModelParams,
        prof: &SpatialProfile,
        tax: TaxSchedule,
        sc: &SimConfig,
    ) -> Result<Self> {
        gs.validate()?;
        p.validate()?;
        sc.validate()?;
        let (a, mu) = eval_profiles(gs, p, prof)?;
        let tax_grid = tax.grid(gs);
        if tax_grid.iter().any(|t| *t < 0.0) {
            return Err(LvtError::param("tax", "tax rate must be non-negative everywhere"));
        }
        let decay = Zip::from(&tax_grid).and(&mu).map_collect(|&t, &m| p.r + t - m);
        let initial = sc.initial_condition.build(gs)?;

        let a_max = a.iter().copied().fold(0.0, f64::max);
        let k_max = initial.k.iter().copied().fold(0.0, f64::max);
        let tau_max = tax_grid.iter().copied().fold(0.0, f64::max);
        let max_dt = max_stable_dt(gs, p, tau_max, a_max, k_max);
        if sc.dt > max_dt {
            return Err(LvtError::UnstableTimeStep { dt: sc.dt, max_dt });
        }

        Ok(Simulation {
            gs: *gs,
            p: *p,
            a,
            mu,
            decay,
            config: sc.clone(),
            initial,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.gs
    }

    pub fn productivity(&self) -> &Grid {
        &self.a
    }

    pub fn centrality(&self) -> &Grid {
        &self.mu
    }

    pub fn initial_state(&self) -> &FieldPair {
        &self.initial
    }

    pub fn run(&self) -> Result<SimTrace> {
        let sc = &self.config;
        let n_steps = sc.n_steps();
        let coef = Coefficients {
            a: &self.a,
            decay: &self.decay,
        };

        let mut trace = SimTrace {
            times: Vec::new(),
            mean_v: Vec::new(),
            mean_k: Vec::new(),
            snapshots: Vec::new(),
            final_state: self.initial.clone(),
            clamp_count: 0,
        };
        let record = |trace: &mut SimTrace, state: &FieldPair| {
            trace.times.push(state.t);
            trace.mean_v.push(state.mean_v());
            trace.mean_k.push(state.mean_k());
            if sc.keep_snapshots {
                trace.snapshots.push(state.clone());
            }
        };

        let mut state = self.initial.clone();
        record(&mut trace, &state);
        for n in 1..=n_steps {
            let (mut next, clamped) = advance(&self.gs, &self.p, &coef, &state, sc.dt, n)?;
            next.t = n as f64 * sc.dt;
            trace.clamp_count += clamped;
            state = next;
            if n % sc.record_every == 0 || n == n_steps {
                record(&mut trace, &state);
            }
        }
        trace.final_state = state;
        Ok(trace)
    }
}

pub fn run(gs: &GridSpec, p: &ModelParams, prof: &SpatialProfile, sc: &SimConfig) -> Result<SimTrace> {
    Simulation::new(gs, p, prof, sc)?.run()
}

/// Values along the horizontal ray from the center (`j` at the center row,
/// `x >= Lx/2`), paired with their distance to the center.
pub fn center_ray(gs: &GridSpec, field: &Grid) -> Vec<(f64, f64)> {
    let jc = gs.ny / 2;
    let ic = gs.nx / 2;
    (ic..gs.nx)
        .map(|i| ((gs.x(i) - gs.lx / 2.0).max(0.0), field[[i, jc]]))
        .collect()
}

/// Trapezoid-weighted sum, the discrete integral that the mirrored
/// Neumann stencil conserves.
pub fn weighted_total(gs: &GridSpec, field: &Grid) -> f64 {
    crate::indicators::integrate(gs, field)
}

#[doc(hidden)]
pub fn radial_grid(gs: &GridSpec) -> Grid {
    Grid::from_shape_fn(gs.shape(), |(i, j)| radial_distance(gs, i, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_grid(n: usize) -> GridSpec {
        GridSpec::new((n - 1) as f64, (n - 1) as f64, n, n).unwrap()
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let gs = GridSpec::new(3.0, 2.0, 7, 5).unwrap();
        let lap = laplacian(&gs, &gs.filled(4.2)).unwrap();
        assert!(lap.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn laplacian_exact_on_quadratics_in_the_interior() {
        let gs = GridSpec::new(2.0, 1.0, 9, 5).unwrap();
        let f = gs.map_xy(|x, _| x * x);
        let lap = laplacian(&gs, &f).unwrap();
        for i in 1..gs.nx - 1 {
            for j in 0..gs.ny {
                assert_relative_eq!(lap[[i, j]], 2.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_of_spike() {
        let gs = unit_grid(5);
        let mut f = gs.zeros();
        f[[2, 2]] = 3.0;
        let lap = laplacian(&gs, &f).unwrap();
        assert_eq!(lap[[2, 2]], -12.0);
        for (i, j) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
            assert_eq!(lap[[i, j]], 3.0);
        }
        assert_eq!(lap[[0, 0]], 0.0);
        assert_eq!(lap.sum(), 0.0);
    }

    #[test]
    fn laplacian_mirrors_at_edges() {
        let gs = unit_grid(4);
        let mut f = gs.zeros();
        f[[1, 0]] = 1.0;
        let lap = laplacian(&gs, &f).unwrap();
        // ghost at i = -1 mirrors i = 1
        assert_eq!(lap[[0, 0]], 2.0);
    }

    #[test]
    fn laplacian_shape_mismatch() {
        let gs = unit_grid(4);
        let bad = Grid::zeros((3, 4));
        assert!(matches!(laplacian(&gs, &bad), Err(LvtError::ShapeMismatch { .. })));
    }

    #[test]
    fn step_decoupled_decay() {
        let gs = unit_grid(5);
        let p = ModelParams {
            d_v: 0.0,
            tau: 0.02,
            ..Default::default()
        };
        let a = gs.zeros();
        let mu = gs.zeros();
        let state = FieldPair::new(&gs, gs.filled(2.0), gs.filled(0.5), 0.0).unwrap();
        let dt = 0.1;
        let next = step(&gs, &p, &a, &mu, &state, dt).unwrap();
        let ev = 2.0 * (1.0 - dt * (p.r + p.tau));
        let ek = 0.5 * (1.0 - dt * (p.i_0 * p.kappa + p.delta));
        assert!(next.v.iter().all(|v| (v - ev).abs() < 1e-14));
        assert!(next.k.iter().all(|k| (k - ek).abs() < 1e-14));
        assert_relative_eq!(next.t, 0.1);
    }

    #[test]
    fn zero_capital_is_invariant() {
        let gs = unit_grid(5);
        let p = ModelParams::default();
        let (a, mu) = eval_profiles(&gs, &p, &SpatialProfile::ExponentialBaseline).unwrap();
        let state = FieldPair::new(&gs, gs.map_radial(|d| 1.0 / (1.0 + d)), gs.zeros(), 0.0).unwrap();
        let next = step(&gs, &p, &a, &mu, &state, 0.01).unwrap();
        assert!(next.k.iter().all(|k| *k == 0.0));
    }

    #[test]
    fn step_uniform_state_by_hand() {
        let gs = unit_grid(5);
        let p = ModelParams {
            r: 0.05,
            tau: 0.0,
            d_v: 0.7,
            beta: 0.5,
            c_b: 1.0,
            i_0: 1.0,
            kappa: 0.05,
            delta: 0.05,
            ..Default::default()
        };
        let a = gs.filled(1.0);
        let mu = gs.zeros();
        let state = FieldPair::new(&gs, gs.filled(1.0), gs.filled(1.0), 0.0).unwrap();
        let next = step(&gs, &p, &a, &mu, &state, 0.1).unwrap();
        for (v, k) in next.v.iter().zip(next.k.iter()) {
            assert_relative_eq!(*v, 1.095, max_relative = 1e-14);
            assert_relative_eq!(*k, 1.04, max_relative = 1e-14);
        }
    }

    #[test]
    fn step_clamps_negative_overshoot() {
        let gs = unit_grid(3);
        let p = ModelParams {
            d_v: 0.0,
            ..Default::default()
        };
        let state = FieldPair::new(&gs, gs.filled(1.0), gs.filled(1.0), 0.0).unwrap();
        let next = step(&gs, &p, &gs.zeros(), &gs.zeros(), &state, 100.0).unwrap();
        assert!(next.v.iter().all(|v| *v == 0.0));
        assert!(next.k.iter().all(|k| *k == 0.0));
    }

    #[test]
    fn step_reports_non_finite_cell() {
        let gs = unit_grid(3);
        let p = ModelParams::default();
        let mut v = gs.filled(1.0);
        v[[1, 2]] = f64::INFINITY;
        let state = FieldPair { v, k: gs.filled(1.0), t: 0.0 };
        let err = step(&gs, &p, &gs.filled(1.0), &gs.zeros(), &state, 0.01).unwrap_err();
        assert!(matches!(err, LvtError::NonFiniteGrid { .. }), "{err}");
    }

    #[test]
    fn minimal_run_records_initial_and_one_step() {
        let gs = GridSpec::new(10.0, 10.0, 11, 11).unwrap();
        let sc = SimConfig {
            dt: 0.01,
            t_final: 0.01,
            record_every: 5,
            ..Default::default()
        };
        let trace = run(&gs, &ModelParams::default(), &SpatialProfile::ExponentialBaseline, &sc).unwrap();
        assert_eq!(trace.times, vec![0.0, 0.01]);
        assert_eq!(trace.snapshots.len(), 2);
        assert_eq!(trace.mean_v.len(), 2);
    }

    #[test]
    fn unstable_dt_is_rejected_with_bound() {
        let gs = GridSpec::default();
        let sc = SimConfig {
            dt: 0.5,
            ..Default::default()
        };
        match Simulation::new(&gs, &ModelParams::default(), &SpatialProfile::ExponentialBaseline, &sc) {
            Err(LvtError::UnstableTimeStep { max_dt, .. }) => {
                assert!(max_dt > 0.05 && max_dt < 0.07, "{max_dt}");
            }
            other => panic!("expected stability error, got {other:?}"),
        }
    }

    #[test]
    fn default_config_is_stable_across_default_sweep() {
        let gs = GridSpec::default();
        for tau in [0.0, 0.005, 0.01, 0.02] {
            let p = ModelParams::default().with_tau(tau);
            Simulation::new(&gs, &p, &SpatialProfile::ExponentialBaseline, &SimConfig::default()).unwrap();
        }
    }

    #[test]
    fn symmetric_state_stays_symmetric() {
        let gs = GridSpec::new(10.0, 10.0, 21, 21).unwrap();
        let sc = SimConfig {
            dt: 0.05,
            t_final: 10.0,
            record_every: 1000,
            keep_snapshots: false,
            ..Default::default()
        };
        let trace = run(&gs, &ModelParams::default().with_tau(0.01), &SpatialProfile::ExponentialBaseline, &sc)
            .unwrap();
        let n = gs.nx;
        for f in [&trace.final_state.v, &trace.final_state.k] {
            let scale = f.iter().copied().fold(0.0, f64::max);
            for i in 0..n {
                for j in 0..n {
                    let x = f[[i, j]];
                    for y in [f[[n - 1 - i, j]], f[[i, n - 1 - j]], f[[j, i]], f[[n - 1 - j, n - 1 - i]]] {
                        assert!((x - y).abs() <= 1e-10 * scale, "asymmetry at ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn center_ray_starts_at_center() {
        let gs = GridSpec::new(10.0, 10.0, 11, 11).unwrap();
        let ray = center_ray(&gs, &radial_grid(&gs));
        assert_eq!(ray.len(), 6);
        assert_eq!(ray[0], (0.0, 0.0));
        assert_eq!(ray[5], (5.0, 5.0));
    }
}
