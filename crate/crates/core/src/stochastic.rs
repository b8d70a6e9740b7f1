//! Pointwise stochastic dynamics: mean-reverting productivity and centrality
//! driving multiplicative-noise land value and capital, integrated by
//! Euler–Maruyama over an ensemble of independent paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::equilibrium_at;
use crate::error::{FieldName, LvtError, Result};
use crate::model::{capital_power, ModelParams, SpatialProfile};

/// Initial `(V, K)` used when no interior fixed point exists.
pub const LOW_CAPITAL_START: (f64, f64) = (0.1, 0.1);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StochasticParams {
    pub kappa_a: f64,
    pub kappa_mu: f64,
    pub sigma_a: f64,
    pub sigma_mu: f64,
    pub sigma_v: f64,
    pub sigma_k: f64,
    /// Correlation between the productivity and centrality shocks.
    pub correlation: f64,
    /// Positivity barrier.
    pub floor: f64,
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Keep every n-th step in the bundle.
    pub record_every: usize,
}

impl Default for StochasticParams {
    fn default() -> Self {
        StochasticParams {
            kappa_a: 0.5,
            kappa_mu: 0.5,
            sigma_a: 0.1,
            sigma_mu: 0.1,
            sigma_v: 0.05,
            sigma_k: 0.05,
            correlation: 0.0,
            floor: 1e-6,
            dt: 1.0 / 12.0,
            horizon: 30.0,
            n_paths: 1000,
            seed: 0,
            record_every: 1,
        }
    }
}

impl StochasticParams {
    /// All volatilities zero.
    pub fn noiseless(self) -> Self {
        StochasticParams {
            sigma_a: 0.0,
            sigma_mu: 0.0,
            sigma_v: 0.0,
            sigma_k: 0.0,
            ..self
        }
    }

    pub fn n_steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("kappa_a", self.kappa_a),
            ("kappa_mu", self.kappa_mu),
            ("sigma_a", self.sigma_a),
            ("sigma_mu", self.sigma_mu),
            ("sigma_v", self.sigma_v),
            ("sigma_k", self.sigma_k),
        ];
        for (name, x) in nonneg {
            if !(x.is_finite() && x >= 0.0) {
                return Err(LvtError::param(name, format!("must be finite and >= 0, got {x}")));
            }
        }
        if !(self.correlation.abs() <= 1.0) {
            return Err(LvtError::param("correlation", "must lie in [-1, 1]"));
        }
        if !(self.floor.is_finite() && self.floor > 0.0) {
            return Err(LvtError::param("floor", "must be > 0"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(LvtError::param("dt", "must be > 0"));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(LvtError::param("horizon", "must be >= dt"));
        }
        if self.n_paths == 0 {
            return Err(LvtError::param("n_paths", "must be >= 1"));
        }
        if self.record_every == 0 {
            return Err(LvtError::param("record_every", "must be >= 1"));
        }
        Ok(())
    }
}

/// One location's state `(A, mu, V, K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeState {
    pub a: f64,
    pub mu: f64,
    pub v: f64,
    pub k: f64,
}

impl SdeState {
    pub fn first_non_finite(&self) -> Option<FieldName> {
        [
            (FieldName::A, self.a),
            (FieldName::Mu, self.mu),
            (FieldName::V, self.v),
            (FieldName::K, self.k),
        ]
        .into_iter()
        .find(|(_, x)| !x.is_finite())
        .map(|(f, _)| f)
    }
}

/// Long-run means of the drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drivers {
    pub a_bar: f64,
    pub mu_bar: f64,
}

/// One Euler–Maruyama step. `normals` are independent unit draws for
/// `(A, mu, V, K)`; the centrality shock is mixed with the productivity shock
/// according to `sp.correlation`. Every component is reflected to `sp.floor`.
/// Returns the offending component if the update is not finite.
pub fn em_step(
    state: SdeState,
    drivers: Drivers,
    sp: &StochasticParams,
    p: &ModelParams,
    normals: [f64; 4],
) -> std::result::Result<SdeState, FieldName> {
    let SdeState { a, mu, v, k } = state;
    let dt = sp.dt;
    let sq = dt.sqrt();
    let rho = sp.correlation;
    let xi_a = normals[0];
    let xi_mu = rho * normals[0] + (1.0 - rho * rho).sqrt() * normals[1];

    let alpha_t = p.r + p.tau - mu;
    let output = a * capital_power(k, p.beta);

    let next = SdeState {
        a: a + sp.kappa_a * (drivers.a_bar - a) * dt + sp.sigma_a * a * sq * xi_a,
        mu: mu + sp.kappa_mu * (drivers.mu_bar - mu) * dt + sp.sigma_mu * mu * sq * xi_mu,
        v: v + (-alpha_t * v + output) * dt + sp.sigma_v * v * sq * normals[2],
        k: k + (p.i_0 * (output / (v + p.c_b) - p.kappa) * k - p.delta * k) * dt + sp.sigma_k * k * sq * normals[3],
    };
    if let Some(f) = next.first_non_finite() {
        return Err(f);
    }
    let floor = sp.floor;
    Ok(SdeState {
        a: next.a.max(floor),
        mu: next.mu.max(floor),
        v: next.v.max(floor),
        k: next.k.max(floor),
    })
}

/// One recorded trajectory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Path {
    pub a: Vec<f64>,
    pub mu: Vec<f64>,
    pub v: Vec<f64>,
    pub k: Vec<f64>,
}

impl Path {
    fn with_capacity(n: usize) -> Self {
        Path {
            a: Vec::with_capacity(n),
            mu: Vec::with_capacity(n),
            v: Vec::with_capacity(n),
            k: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, s: SdeState) {
        self.a.push(s.a);
        self.mu.push(s.mu);
        self.v.push(s.v);
        self.k.push(s.k);
    }

    pub fn state(&self, n: usize) -> SdeState {
        SdeState {
            a: self.a[n],
            mu: self.mu[n],
            v: self.v[n],
            k: self.k[n],
        }
    }
}

/// Per-time ensemble statistics of one component.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub mean: Vec<f64>,
    /// Sample variance (zero for a single path).
    pub var: Vec<f64>,
    pub q05: Vec<f64>,
    pub q95: Vec<f64>,
}

impl Summary {
    /// Standard error of the mean at each time.
    pub fn std_error(&self, n_paths: usize) -> Vec<f64> {
        self.var.iter().map(|v| (v / n_paths as f64).sqrt()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub times: Vec<f64>,
    pub paths: Vec<Path>,
    pub drivers: Drivers,
    pub initial: SdeState,
    pub a: Summary,
    pub mu: Summary,
    pub v: Summary,
    pub k: Summary,
}

impl PathBundle {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// Relative change of the ensemble means of `(V, K)` over the final
    /// quarter of the horizon.
    pub fn final_quarter_drift(&self) -> (f64, f64) {
        let n = self.times.len();
        let t_end = self.times[n - 1];
        let t_q = self.times[0] + 0.75 * (t_end - self.times[0]);
        let start = self.times.partition_point(|&t| t < t_q).min(n - 1);
        let rel = |m: &[f64]| {
            let (a, b) = (m[start], m[n - 1]);
            let window = &m[start..];
            let hi = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
            let scale = a.abs().max(b.abs());
            if scale == 0.0 {
                0.0
            } else {
                (hi - lo) / scale
            }
        };
        (rel(&self.v.mean), rel(&self.k.mean))
    }
}

/// Initial `(V, K)` at a location: the interior fixed point if one exists,
/// else the low-capital start.
pub fn initial_values(p: &ModelParams, a_bar: f64, mu_bar: f64) -> (f64, f64) {
    let eq = equilibrium_at(p, a_bar, mu_bar, p.tau);
    if eq.exists {
        (eq.v_star, eq.k_star)
    } else {
        LOW_CAPITAL_START
    }
}

fn simulate_one(
    path_index: usize,
    init: SdeState,
    drivers: Drivers,
    sp: &StochasticParams,
    p: &ModelParams,
) -> Result<Path> {
    let mut rng = ChaCha8Rng::seed_from_u64(sp.seed);
    rng.set_stream(path_index as u64);
    let n_steps = sp.n_steps();
    let mut path = Path::with_capacity(n_steps / sp.record_every + 2);
    let mut s = init;
    path.push(s);
    for n in 1..=n_steps {
        let normals: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        s = em_step(s, drivers, sp, p, normals).map_err(|field| LvtError::NonFinitePath {
            field,
            path: path_index,
            step: n,
        })?;
        if n % sp.record_every == 0 || n == n_steps {
            path.push(s);
        }
    }
    Ok(path)
}

fn recorded_times(sp: &StochasticParams) -> Vec<f64> {
    let n_steps = sp.n_steps();
    let mut t = vec![0.0];
    for n in 1..=n_steps {
        if n % sp.record_every == 0 || n == n_steps {
            t.push(n as f64 * sp.dt);
        }
    }
    t
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

fn summarize(paths: &[Path], n_times: usize, pick: impl Fn(&Path) -> &[f64]) -> Summary {
    let n = paths.len();
    let mut out = Summary::default();
    let mut column = vec![0.0; n];
    for t in 0..n_times {
        for (c, p) in column.iter_mut().zip(paths) {
            *c = pick(p)[t];
        }
        let shift = column[0];
        let mean = shift + column.iter().map(|x| x - shift).sum::<f64>() / n as f64;
        let var = if n > 1 {
            column.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        column.sort_by(f64::total_cmp);
        out.mean.push(mean);
        out.var.push(var);
        out.q05.push(quantile_sorted(&column, 0.05));
        out.q95.push(quantile_sorted(&column, 0.95));
    }
    out
}

/// Monte Carlo ensemble at distance `d` from the center. Path `i` draws from
/// stream `i` of a generator seeded with `sp.seed`, so results do not depend
/// on scheduling.
pub fn simulate_paths(sp: &StochasticParams, p: &ModelParams, d: f64, prof: &SpatialProfile) -> Result<PathBundle> {
    sp.validate()?;
    p.validate()?;
    prof.validate()?;
    if !(d.is_finite() && d >= 0.0) {
        return Err(LvtError::param("distance", "must be finite and >= 0"));
    }
    let (a_bar, mu_bar) = prof.eval(p, d);
    if !(a_bar > 0.0 && mu_bar > 0.0) {
        return Err(LvtError::param("profile", "drivers must be positive at the chosen distance"));
    }
    let drivers = Drivers { a_bar, mu_bar };
    let (v0, k0) = initial_values(p, a_bar, mu_bar);
    let init = SdeState {
        a: a_bar,
        mu: mu_bar,
        v: v0.max(sp.floor),
        k: k0.max(sp.floor),
    };
    simulate_from(sp, p, init, drivers)
}

/// Ensemble from an explicit initial state and driver means.
pub fn simulate_from(sp: &StochasticParams, p: &ModelParams, init: SdeState, drivers: Drivers) -> Result<PathBundle> {
    sp.validate()?;
    let paths: Vec<Path> = (0..sp.n_paths)
        .into_par_iter()
        .map(|i| simulate_one(i, init, drivers, sp, p))
        .collect::<Result<_>>()?;
    let times = recorded_times(sp);
    let nt = times.len();
    Ok(PathBundle {
        a: summarize(&paths, nt, |p| &p.a),
        mu: summarize(&paths, nt, |p| &p.mu),
        v: summarize(&paths, nt, |p| &p.v),
        k: summarize(&paths, nt, |p| &p.k),
        times,
        paths,
        drivers,
        initial: init,
    })
}

/// Explicit-Euler trajectory of the noise-free system with the drivers held
/// at `(a, mu)`, recorded at every `record_every` steps and at the end.
#[allow(clippy::too_many_arguments)]
pub fn deterministic_path(
    p: &ModelParams,
    a: f64,
    mu: f64,
    v0: f64,
    k0: f64,
    dt: f64,
    horizon: f64,
    record_every: usize,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let sp = StochasticParams {
        dt,
        horizon,
        n_paths: 1,
        record_every,
        floor: f64::MIN_POSITIVE,
        ..StochasticParams::default()
    }
    .noiseless();
    let b = simulate_from(&sp, p, SdeState { a, mu, v: v0, k: k0 }, Drivers { a_bar: a, mu_bar: mu })?;
    let path = b.paths.into_iter().next().expect("one path");
    Ok((b.times, path.v, path.k))
}

/// Geometric Brownian motion `dX = m X dt + s X dW` used to measure strong
/// convergence against the exact solution.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricProbe {
    pub drift: f64,
    pub volatility: f64,
    pub x0: f64,
    pub horizon: f64,
    /// Step sizes are `2^-e` for each exponent.
    pub exponents: Vec<u32>,
    pub n_paths: usize,
    pub n_batches: usize,
    pub seed: u64,
}

impl Default for GeometricProbe {
    fn default() -> Self {
        GeometricProbe {
            drift: 1.0,
            volatility: 1.0,
            x0: 1.0,
            horizon: 1.0,
            exponents: (4..=8).collect(),
            n_paths: 2000,
            n_batches: 20,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongOrder {
    pub dts: Vec<f64>,
    /// Mean absolute terminal error per step size.
    pub errors: Vec<f64>,
    pub slope: f64,
    /// Standard error of the slope across path batches.
    pub slope_se: f64,
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Absolute terminal errors of one path at every level.
fn probe_path(g: &GeometricProbe, index: usize, finest: u32) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    rng.set_stream(index as u64);
    let n_fine = ((g.horizon * (1u64 << finest) as f64).round() as usize).max(1);
    let h = g.horizon / n_fine as f64;
    let dw: Vec<f64> = (0..n_fine)
        .map(|_| h.sqrt() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let w_total: f64 = dw.iter().sum();
    let exact = g.x0 * ((g.drift - 0.5 * g.volatility * g.volatility) * g.horizon + g.volatility * w_total).exp();
    g.exponents
        .iter()
        .map(|&e| {
            let ratio = 1usize << (finest - e);
            let dt = h * ratio as f64;
            let mut x = g.x0;
            for chunk in dw.chunks(ratio) {
                let inc: f64 = chunk.iter().sum();
                x += g.drift * x * dt + g.volatility * x * inc;
            }
            (x - exact).abs()
        })
        .collect()
}

/// Empirical strong order of Euler–Maruyama on geometric Brownian motion.
/// All step sizes of a path share one Brownian path sampled at the finest
/// resolution.
pub fn strong_order_probe(g: &GeometricProbe) -> Result<StrongOrder> {
    if g.exponents.len() < 2 {
        return Err(LvtError::param("exponents", "need at least two step sizes"));
    }
    if g.n_paths == 0 || g.n_batches == 0 || g.n_batches > g.n_paths {
        return Err(LvtError::param("n_paths", "need n_paths >= n_batches >= 1"));
    }
    if !(g.horizon > 0.0 && g.x0 > 0.0 && g.volatility >= 0.0) {
        return Err(LvtError::param("probe", "need horizon > 0, x0 > 0, volatility >= 0"));
    }
    let finest = *g.exponents.iter().max().expect("non-empty");
    let per_path: Vec<Vec<f64>> = (0..g.n_paths)
        .into_par_iter()
        .map(|i| probe_path(g, i, finest))
        .collect();

    let levels = g.exponents.len();
    let dts: Vec<f64> = g.exponents.iter().map(|&e| (-(e as f64)).exp2()).collect();
    let log_dt: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let mean_errors = |rows: &[Vec<f64>]| -> Vec<f64> {
        let mut acc = vec![0.0; levels];
        for row in rows {
            for (a, e) in acc.iter_mut().zip(row) {
                *a += e;
            }
        }
        acc.iter().map(|a| a / rows.len() as f64).collect()
    };
    let slope_of = |errs: &[f64]| {
        let ly: Vec<f64> = errs.iter().map(|e| e.max(f64::MIN_POSITIVE).ln()).collect();
        ls_slope(&log_dt, &ly)
    };

    let errors = mean_errors(&per_path);
    let slope = slope_of(&errors);

    let batch = g.n_paths / g.n_batches;
    let batch_slopes: Vec<f64> = (0..g.n_batches)
        .map(|b| slope_of(&mean_errors(&per_path[b * batch..(b + 1) * batch])))
        .collect();
    let nb = batch_slopes.len() as f64;
    let mean_b = batch_slopes.iter().sum::<f64>() / nb;
    let slope_se = if nb > 1.0 {
        (batch_slopes.iter().map(|s| (s - mean_b).powi(2)).sum::<f64>() / (nb - 1.0) / nb).sqrt()
    } else {
        0.0
    };
    Ok(StrongOrder {
        dts,
        errors,
        slope,
        slope_se,
    })
}
