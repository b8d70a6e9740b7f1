//! Sweep orchestration: one isolated job per tax rate, then the combined
//! files and the manifest.

use std::path::Path;

use ndarray::Zip;
use rayon::prelude::*;

use crate::equilibrium::{equilibrium_at, linspace, radial_steady_profiles, tau_critical};
use crate::error::Result;
use crate::indicators::{indicator_series, lorenz_gini, quadrature_weights, IndicatorInputs, Lorenz};
use crate::model::{eval_profiles, psi, Grid, GridSpec, ModelParams, SpatialProfile};
use crate::pde::Simulation;
use crate::stochastic::simulate_paths;

use super::export::{self, OutputDir};
use super::scenario::Scenario;

/// Samples in the closed-form tax-rate scan at the center.
const SCAN_SAMPLES: usize = 201;

/// Outcome of one sweep member.
#[derive(Debug)]
pub struct MemberResult {
    pub tau: f64,
    /// Final spatial means `(V, K)` when a simulation ran.
    pub final_means: Option<(f64, f64)>,
}

#[derive(Debug, Default)]
pub struct RunReport {
    pub members: Vec<MemberResult>,
    pub failures: Vec<(f64, String)>,
    /// Relative paths of every file written, as listed in the manifest.
    pub files: Vec<std::path::PathBuf>,
}

impl RunReport {
    /// 0 on full success, 2 when some sweep member failed.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            2
        }
    }
}

/// Lorenz curve of the attractiveness ratio `A / (r + tau - mu)` over the
/// grid, weighted by `density` times the trapezoid cell weights. Cells
/// where the ratio is undefined are left out.
pub fn attractiveness_lorenz(
    gs: &GridSpec,
    p: &ModelParams,
    a: &Grid,
    mu: &Grid,
    tax: &Grid,
    density: &Grid,
) -> Result<Lorenz> {
    let psi_grid = Zip::from(a).and(mu).and(tax).map_collect(|&a, &m, &t| psi(a, p.r + t - m));
    let w = quadrature_weights(gs) * density;
    let (vals, wts): (Vec<f64>, Vec<f64>) = psi_grid
        .iter()
        .zip(w.iter())
        .filter_map(|(v, w)| v.map(|v| (v, *w)))
        .unzip();
    lorenz_gini(&vals, &wts)
}

fn run_member(sc: &Scenario, tau: f64, out: &mut OutputDir) -> Result<MemberResult> {
    let gs = sc.grid;
    let p = sc.params.with_tau(tau);
    let tax = sc.tax_mode.schedule(tau);
    let tax_grid = tax.grid(&gs);
    let weights = sc.weights();
    let (a, mu) = eval_profiles(&gs, &p, &sc.profile)?;
    let mut result = MemberResult {
        tau,
        final_means: None,
    };

    if sc.analysis.equilibrium {
        let distances = linspace(0.0, sc.d_max(), sc.analysis.radial_samples);
        let radial = radial_steady_profiles(&p, &sc.profile, tax, &distances);
        let scan: Vec<Vec<String>> = (0..distances.len())
            .map(|n| export::scan_row(radial.tau[n], radial.mu[n], radial.a[n], &radial.points[n]))
            .collect();
        out.write_csv("equilibrium.csv", &export::SCAN_HEADER, &scan)?;
        out.write_csv("radial.csv", &export::RADIAL_HEADER, &export::radial_rows(&radial))?;
        let lorenz = attractiveness_lorenz(&gs, &p, &a, &mu, &tax_grid, &weights.p_density)?;
        out.write_bytes("lorenz.csv", &export::lorenz_bytes(&lorenz)?)?;
    }

    if sc.analysis.simulate && sc.sim.t_final > 0.0 {
        let sim = Simulation::with_tax(&gs, &p, &sc.profile, tax, &sc.sim)?;
        let trace = sim.run()?;
        out.write_csv("trace.csv", &export::TRACE_HEADER, &export::trace_rows(&trace))?;
        let first = trace.snapshots.first().unwrap_or(sim.initial_state());
        for s in [first, &trace.final_state] {
            export::write_heatmaps(out, sc.outputs.heatmaps, tau, s)?;
            if sc.outputs.field_csv {
                out.write_csv(format!("field_{}.csv", s.t), &export::FIELD_HEADER, &export::field_rows(&gs, s))?;
            }
        }
        if sc.analysis.indicators && !trace.snapshots.is_empty() {
            let inp = IndicatorInputs {
                gs: &gs,
                a: &a,
                tax: &tax_grid,
                r: p.r,
                beta: p.beta,
                weights: &weights,
                horizon: sc.indicator_horizon(),
            };
            let series = indicator_series(&inp, &trace.snapshots)?;
            out.write_csv("indicators.csv", &export::INDICATOR_HEADER, &export::indicator_rows(&series))?;
        }
        result.final_means = Some(trace.final_means());
    }

    if sc.analysis.stochastic {
        let sp = sc.stochastic_params();
        let p_loc = sc.params.with_tau(tax.rate(sc.analysis.stochastic_distance));
        let bundle = simulate_paths(&sp, &p_loc, sc.analysis.stochastic_distance, &sc.profile)?;
        if sc.outputs.path_thin > 0 {
            out.write_csv("paths.csv", &export::PATH_HEADER, &export::path_rows(&bundle, sc.outputs.path_thin))?;
        }
        out.write_csv("stochastic_summary.csv", &export::SUMMARY_HEADER, &export::summary_rows(&bundle))?;
    }
    Ok(result)
}

/// Closed-form equilibrium at the center for tax rates from 0 past the
/// largest of the sweep and twice the central critical rate.
fn center_scan(p: &ModelParams, prof: &SpatialProfile, sweep: &[f64]) -> Vec<Vec<String>> {
    let (a, mu) = prof.eval(p, 0.0);
    let hi = sweep
        .iter()
        .copied()
        .fold(2.0 * tau_critical(p, mu).max(0.0), f64::max)
        .max(1e-3);
    linspace(0.0, hi, SCAN_SAMPLES)
        .into_iter()
        .map(|tau| export::scan_row(tau, mu, a, &equilibrium_at(p, a, mu, tau)))
        .collect()
}

/// Runs every sweep member under `root/{name}/{tau}/`, then writes the
/// combined files and `manifest.txt` in `root/{name}/`.
pub fn run_scenario(sc: &Scenario, root: &Path) -> Result<RunReport> {
    sc.validate()?;
    let mut top = OutputDir::create(root.join(&sc.name))?;
    let jobs: Vec<(f64, Result<(MemberResult, OutputDir)>)> = sc
        .tau_values
        .par_iter()
        .map(|&tau| {
            let run = || {
                let mut out = OutputDir::create(top.root().join(format!("{tau}")))?;
                let res = run_member(sc, tau, &mut out)?;
                Ok((res, out))
            };
            (tau, run())
        })
        .collect();

    let mut report = RunReport::default();
    for (tau, job) in jobs {
        match job {
            Ok((res, out)) => {
                top.absorb(out);
                report.members.push(res);
            }
            Err(e) => report.failures.push((tau, e.to_string())),
        }
    }

    if sc.analysis.equilibrium {
        top.write_csv("bifurcation_scan.csv", &export::SCAN_HEADER, &center_scan(&sc.params, &sc.profile, &sc.tau_values))?;
    }
    let bif: Vec<Vec<String>> = report
        .members
        .iter()
        .filter_map(|m| m.final_means.map(|(v, k)| vec![format!("{}", m.tau), format!("{v}"), format!("{k}")]))
        .collect();
    if !bif.is_empty() {
        top.write_csv("bifurcation.csv", &export::BIFURCATION_HEADER, &bif)?;
    }
    if !report.failures.is_empty() {
        let text: String = report
            .failures
            .iter()
            .map(|(tau, msg)| format!("{tau}\t{msg}\n"))
            .collect();
        top.write_bytes("failures.txt", text.as_bytes())?;
    }
    top.write_manifest()?;
    report.files = top.files().to_vec();
    Ok(report)
}
