use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lvt_core::harness::export::{self, OutputDir};
use lvt_core::harness::{rings_vs_continuum, robustness_suite, run_scenario, Scenario};
use lvt_core::incidence::{incidence_table, IncidenceInputs, DENOMINATOR_NOTE};
use lvt_core::LvtError;

#[derive(Parser, Debug)]
#[command(name = "lvt", version, about = "Spatial-dynamic land value tax model")]
struct Cli {
    /// Scenario file (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root; overrides `outputs.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for stochastic runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full sweep: simulation, indicators and closed-form products.
    Simulate,
    /// Closed-form equilibria, radial profiles and Lorenz curves only.
    Equilibrium,
    /// Final spatial means against the tax rate.
    Bifurcation,
    /// Simulation with the fiscal and distributive indicators.
    Indicators,
    /// Monte Carlo ensemble at one distance.
    Stochastic {
        #[arg(long)]
        distance: Option<f64>,
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Commodity tax incidence and land value capitalization.
    Incidence(IncidenceArgs),
    /// Criticality fronts on the three spatial geometries.
    Robustness,
    /// Ring discretization against the continuum steady states.
    Rings {
        #[arg(long)]
        n_rings: Option<usize>,
    },
    /// Print the default scenario.
    Defaults,
}

#[derive(Args, Debug)]
struct IncidenceArgs {
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    d_prime: f64,
    #[arg(long, default_value_t = 1.0)]
    s_prime: f64,
    #[arg(long, default_value_t = 100.0)]
    p0: f64,
    #[arg(long, default_value_t = 0.2)]
    tau: f64,
    #[arg(long, default_value_t = 0.1)]
    t_adval: f64,
    #[arg(long, default_value_t = 100.0)]
    rent: f64,
    #[arg(long, default_value_t = 0.05)]
    r: f64,
    #[arg(long, default_value_t = 0.05)]
    tau_v: f64,
}

enum Failure {
    Config(LvtError),
    Partial,
}

impl From<LvtError> for Failure {
    fn from(e: LvtError) -> Self {
        Failure::Config(e)
    }
}

fn load(cli: &Cli) -> Result<Scenario, LvtError> {
    let mut sc = match &cli.config {
        Some(path) => Scenario::load(path)?,
        None => Scenario::default(),
    };
    if let Some(out) = &cli.out {
        sc.outputs.dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        sc.seed = seed;
        if let Some(sp) = sc.stochastic.as_mut() {
            sp.seed = seed;
        }
    }
    sc.validate()?;
    Ok(sc)
}

fn sweep(sc: Scenario) -> Result<(), Failure> {
    let report = run_scenario(&sc, &sc.outputs.dir)?;
    let base = sc.outputs.dir.join(&sc.name);
    for m in &report.members {
        match m.final_means {
            Some((v, k)) => println!("tau={}\tmean_V={v:.6}\tmean_K={k:.6}", m.tau),
            None => println!("tau={}\tdone", m.tau),
        }
    }
    for (tau, msg) in &report.failures {
        eprintln!("tau={tau}\tFAILED\t{msg}");
    }
    println!("{} files under {}", report.files.len(), base.display());
    if report.exit_code() == 0 {
        Ok(())
    } else {
        Err(Failure::Partial)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Defaults => {
            print!("{}", Scenario::default().to_toml_string()?);
            Ok(())
        }
        Command::Incidence(a) => {
            let inp = IncidenceInputs {
                d_prime: a.d_prime,
                s_prime: a.s_prime,
                p0: a.p0,
                tau_unit: a.tau,
                t_adval: a.t_adval,
            };
            let rows = incidence_table(&inp, a.rent, a.r, a.tau_v)?;
            println!(
                "{:<11} {:>12} {:>14} {:>14} {:>12} {:>14}",
                "case", "tax", "buyer_change", "seller_change", "pass_through", "deadweight"
            );
            for r in rows {
                println!(
                    "{:<11} {:>12.6} {:>14.6} {:>14.6} {:>12.6} {:>14.6}",
                    r.case, r.tax, r.buyer_change, r.seller_net_change, r.pass_through, r.deadweight_loss
                );
            }
            println!("note: {DENOMINATOR_NOTE}");
            Ok(())
        }
        Command::Simulate => sweep(load(&cli)?),
        Command::Equilibrium => {
            let mut sc = load(&cli)?;
            sc.analysis.simulate = false;
            sc.analysis.indicators = false;
            sc.analysis.stochastic = false;
            sweep(sc)
        }
        Command::Bifurcation => {
            let mut sc = load(&cli)?;
            sc.analysis.indicators = false;
            sc.analysis.stochastic = false;
            sweep(sc)
        }
        Command::Indicators => {
            let mut sc = load(&cli)?;
            sc.analysis.simulate = true;
            sc.analysis.indicators = true;
            sc.analysis.stochastic = false;
            sweep(sc)
        }
        Command::Stochastic { distance, paths } => {
            let mut sc = load(&cli)?;
            sc.analysis.simulate = false;
            sc.analysis.equilibrium = false;
            sc.analysis.indicators = false;
            sc.analysis.stochastic = true;
            if let Some(d) = distance {
                sc.analysis.stochastic_distance = *d;
            }
            let mut sp = sc.stochastic_params();
            if let Some(n) = paths {
                sp.n_paths = *n;
            }
            sc.stochastic = Some(sp);
            sc.validate()?;
            sweep(sc)
        }
        Command::Robustness => {
            let sc = load(&cli)?;
            let report = robustness_suite(&sc);
            let mut out = OutputDir::create(sc.outputs.dir.join(&sc.name).join("robustness"))?;
            for p in &report.profiles {
                out.write_csv(
                    format!("{}.csv", p.profile.name()),
                    &export::RADIAL_HEADER,
                    &export::radial_rows(&p.radial),
                )?;
                println!(
                    "{}\ttau_c=[{:.6}, {:.6}]\ttau={:.6}\tcrossings={:?}\t{}",
                    p.profile.name(),
                    p.tau_c_min,
                    p.tau_c_max,
                    p.tau_mid,
                    p.crossings_at_mid,
                    if p.pass { "PASS" } else { "FAIL" }
                );
            }
            out.write_csv("summary.csv", &export::ROBUSTNESS_HEADER, &export::robustness_rows(&report))?;
            out.write_manifest()?;
            if report.all_pass() {
                Ok(())
            } else {
                Err(Failure::Partial)
            }
        }
        Command::Rings { n_rings } => {
            let mut sc = load(&cli)?;
            if let Some(n) = n_rings {
                sc.rings.n_rings = *n;
            }
            sc.rings.validate()?;
            let mut out = OutputDir::create(sc.outputs.dir.join(&sc.name).join("rings"))?;
            let mut any_failed = false;
            for &tau in &sc.tau_values {
                match rings_vs_continuum(&sc.params, &sc.profile, sc.tax_mode.schedule(tau), &sc.rings, sc.d_max()) {
                    Ok(c) => {
                        out.write_csv(format!("rings_{tau}.csv"), &export::RINGS_HEADER, &export::ring_rows(&c))?;
                        println!("tau={tau}\tmax_rel_dev={:.6e}\tmean_rel_dev={:.6e}", c.max_rel_dev, c.mean_rel_dev);
                    }
                    Err(e) => {
                        any_failed = true;
                        eprintln!("tau={tau}\t{e}");
                    }
                }
            }
            out.write_manifest()?;
            if any_failed {
                Err(Failure::Partial)
            } else {
                Ok(())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build();
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Partial) => ExitCode::from(2),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
