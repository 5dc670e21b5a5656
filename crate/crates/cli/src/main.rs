mod config;
mod oracle_check;
mod output;
mod state_spec;

use std::path::PathBuf;
use std::process::ExitCode;

use bosonic_snr::error::Error;
use bosonic_snr::figures::{
    coherent_fock_curve, crossing_temperatures, kitten_curve, snr_surface_photon_added, sweep_mode_count,
    sweep_snr_vs_budget, sweep_snr_vs_temperature, sweep_two_mode_entanglement,
};
use bosonic_snr::gaussian::{is_antibunched, photon_moments, thermal_occupation, GaussianState, NuConvention, Snr};
use bosonic_snr::gaussian_opt::{g2_boundary, sweep_gaussian_optimum};
use bosonic_snr::sweep::{linspace, SweepTable};
use bosonic_snr::variational::OptimizerBudget;
use bosonic_snr::wick::{ng_photon_moments_with_reference, NonGaussianState};
use clap::{Parser, Subcommand};
use serde_json::{Map, Value};

use crate::config::{parse_convention, RunConfig, SCHEMA_VERSION};
use crate::oracle_check::OracleCheckOptions;

#[derive(Parser, Debug)]
#[command(name = "bosonic-snr", version, about = "Charging precision of bosonic batteries: sweeps, evaluators and oracle checks")]
struct Cli {
    /// JSON run configuration (schema_version 1).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV tables and JSON sidecars.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the variational optimizer; required by fig5 to fig8.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Temperature to nu map: coth-half (default) or coth-full.
    #[arg(long, global = true, value_parser = parse_convention)]
    nu_convention: Option<NuConvention>,
    /// Run the Wick-vs-oracle suite before the command; abort on mismatch.
    #[arg(long, global = true)]
    oracle_check: bool,
    /// Keep the displacement of photon-added states at zero (fig5).
    #[arg(long, global = true)]
    freeze_displacement: bool,
    #[arg(long, global = true, hide = true)]
    inject_flipped_i1: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal Gaussian SNR over temperature and budget, with the g2 = 1 boundary.
    Fig2,
    /// One-photon-added squeezed thermal SNR over (nu, z).
    Fig3,
    /// Optimal photon-added SNR against temperature, kitten and coherent/Fock curves.
    Fig5,
    /// Two-mode separable vs entangled photon addition.
    Fig6,
    /// Optimal SNR against the number of modes.
    Fig7,
    /// Optimal photon-added SNR against the budget.
    Fig8,
    /// Photon statistics of one single-mode state, e.g. "squeezed(nu=1.2, z=0.5) > add".
    Eval {
        state: String,
        /// Harvester efficiency mu in (0, 1].
        #[arg(long, default_value_t = 1.0)]
        efficiency: f64,
        /// Harvester repetition rate f.
        #[arg(long, default_value_t = 1.0)]
        rate: f64,
    },
    /// Wick engine vs truncated Fock-space oracle, plus the truncation demo.
    OracleCheck,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Fig2 => "fig2",
            Command::Fig3 => "fig3",
            Command::Fig5 => "fig5",
            Command::Fig6 => "fig6",
            Command::Fig7 => "fig7",
            Command::Fig8 => "fig8",
            Command::Eval { .. } => "eval",
            Command::OracleCheck => "oracle-check",
        }
    }
}

enum Failure {
    Config(String),
    Infeasible(String),
    Oracle(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Config(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Oracle(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Infeasible(m) | Failure::Oracle(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Unphysical(_) => Failure::Config(e.to_string()),
            Error::Infeasible { .. } => Failure::Infeasible(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

struct Run {
    config: RunConfig,
    convention: NuConvention,
    out: PathBuf,
    command: &'static str,
}

impl Run {
    fn budget(&mut self) -> Result<OptimizerBudget, Failure> {
        let seed = self
            .config
            .seed
            .ok_or_else(|| Failure::Config(format!("'{}' needs a seed (--seed or \"seed\" in the config)", self.command)))?;
        let d = OptimizerBudget::default();
        let budget = OptimizerBudget {
            restarts: *self.config.restarts.get_or_insert(d.restarts),
            max_evals: *self.config.max_evals.get_or_insert(d.max_evals),
            seed,
        };
        if budget.restarts == 0 || budget.max_evals == 0 {
            return Err(Failure::Config("restarts and max_evals must be positive".into()));
        }
        Ok(budget)
    }

    fn write(&self, tables: &[SweepTable]) -> Result<(), Failure> {
        let mut extra = Map::new();
        extra.insert("command".into(), Value::from(self.command));
        extra.insert("code_version".into(), Value::from(env!("CARGO_PKG_VERSION")));
        extra.insert("nu_convention".into(), Value::from(self.convention.label()));
        extra.insert("config".into(), serde_json::to_value(&self.config).expect("config serializes"));
        for t in tables {
            let path = output::write_table(&self.out, t, &extra)
                .map_err(|e| Failure::Runtime(format!("cannot write to {}: {e}", self.out.display())))?;
            println!("wrote {} ({} rows)", path.display(), t.len());
        }
        let feasible: Vec<&SweepTable> = tables.iter().filter(|t| t.column_index("feasible").is_some()).collect();
        if !feasible.is_empty()
            && feasible
                .iter()
                .all(|t| t.column("feasible").unwrap().iter().all(|&f| f == 0.0))
        {
            return Err(Failure::Infeasible("no feasible cell in the requested grid".into()));
        }
        Ok(())
    }
}

fn grid(slot: &mut Option<Vec<f64>>, default: Vec<f64>, name: &str) -> Result<Vec<f64>, Failure> {
    let v = slot.get_or_insert(default).clone();
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(Failure::Config(format!("'{name}' must be a nonempty list of finite numbers")));
    }
    Ok(v)
}

fn list<T: Clone>(slot: &mut Option<Vec<T>>, default: Vec<T>, name: &str) -> Result<Vec<T>, Failure> {
    let v = slot.get_or_insert(default).clone();
    if v.is_empty() {
        return Err(Failure::Config(format!("'{name}' must not be empty")));
    }
    Ok(v)
}

fn scalar(slot: &mut Option<f64>, default: f64, name: &str) -> Result<f64, Failure> {
    let v = *slot.get_or_insert(default);
    if !v.is_finite() {
        return Err(Failure::Config(format!("'{name}' must be finite")));
    }
    Ok(v)
}

fn run_oracle(opts: &OracleCheckOptions) -> Result<(), Failure> {
    let report = oracle_check::run(opts).map_err(Failure::Runtime)?;
    print!("{}", report.render(opts.tolerance));
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Oracle(format!(
            "{} of {} states disagree with the oracle",
            report.mismatches.len(),
            report.cases
        )))
    }
}

fn fmt_snr(s: Snr) -> String {
    match s {
        Snr::Finite(v) => format!("{v:.12}"),
        Snr::Divergent => "divergent".into(),
        Snr::Undefined => "undefined".into(),
    }
}

fn eval(input: &str, convention: NuConvention, efficiency: f64, rate: f64) -> Result<(), Failure> {
    let spec = state_spec::parse(input, convention).map_err(|e| Failure::Config(e.render(input)))?;
    let harvester = bosonic_snr::gaussian::HarvesterModel::new(efficiency, rate)?;
    let base = GaussianState::single_mode(spec.nu, spec.z, spec.phi, spec.alpha)?;
    let n0 = thermal_occupation(spec.nu)?;
    let m = if spec.ops.is_empty() {
        photon_moments(&base)?.with_reference(n0)
    } else {
        ng_photon_moments_with_reference(&NonGaussianState::new(base, spec.ops.clone())?, n0)?
    };
    println!("state: {input}");
    println!("nu: {:.12}", spec.nu);
    println!("mean_n: {:.12}", m.mean_n);
    println!("reference_n0: {:.12}", m.reference_n0);
    println!("delta_n: {:.12}", m.delta_n);
    println!("var_n: {:.12}", m.var_n);
    println!("std_n: {:.12}", m.std_dev());
    println!("gamma: {}", fmt_snr(m.snr));
    println!("g2: {}", m.g2.map_or("undefined".into(), |g| format!("{g:.12}")));
    println!("antibunched: {}", is_antibunched(&m, n0));
    println!(
        "harvester_current: {:.12}",
        bosonic_snr::gaussian::harvester_current(&m, &harvester)
    );
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let command = cli.command.name();
    let mut config = match &cli.config {
        Some(path) => config::load(path, command).map_err(Failure::Config)?,
        None => RunConfig {
            schema_version: SCHEMA_VERSION,
            ..Default::default()
        },
    };
    config.command = Some(command.to_string());
    let convention = match (cli.nu_convention, &config.nu_convention) {
        (Some(c), _) => c,
        (None, Some(name)) => parse_convention(name).map_err(Failure::Config)?,
        (None, None) => NuConvention::default(),
    };
    config.nu_convention = Some(
        match convention {
            NuConvention::CothHalf => "coth-half",
            NuConvention::CothFull => "coth-full",
        }
        .into(),
    );
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if cli.freeze_displacement {
        config.freeze_displacement = Some(true);
    }
    let out = cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    config.out = None;

    let default_oracle = OracleCheckOptions {
        flip_i1: cli.inject_flipped_i1,
        ..Default::default()
    };
    if cli.oracle_check && !matches!(cli.command, Command::OracleCheck) {
        run_oracle(&default_oracle)?;
    }

    let mut run = Run {
        config,
        convention,
        out,
        command,
    };
    let c = convention;
    match cli.command {
        Command::Fig2 => {
            let ts = grid(&mut run.config.temperatures, linspace(0.05, 3.0, 30), "temperatures")?;
            let es = grid(&mut run.config.epsilons, linspace(0.25, 20.0, 40), "epsilons")?;
            let tables = [sweep_gaussian_optimum(&ts, &es, c)?, g2_boundary(&ts, &es, c)?];
            run.write(&tables)
        }
        Command::Fig3 => {
            let nus = grid(&mut run.config.nus, linspace(1.0, 4.0, 31), "nus")?;
            let zs = grid(&mut run.config.zs, linspace(0.05, 1.0, 39), "zs")?;
            run.write(&[snr_surface_photon_added(&nus, &zs, c)?])
        }
        Command::Fig5 => {
            let budget = run.budget()?;
            let eps = scalar(&mut run.config.epsilon, 5.0, "epsilon")?;
            let ts = grid(&mut run.config.temperatures, linspace(0.05, 5.0, 34), "temperatures")?;
            let ms = list(&mut run.config.ms, vec![0, 1, 2, 3], "ms")?;
            let subs = list(&mut run.config.kitten_subtractions, vec![1, 2], "kitten_subtractions")?;
            let fock_n = *run.config.fock_n.get_or_insert(5);
            let freeze = *run.config.freeze_displacement.get_or_insert(false);
            let curves = sweep_snr_vs_temperature(&ms, eps, &ts, c, &budget, freeze)?;
            let crossings = crossing_temperatures(&curves, eps, c, &budget, freeze)?;
            let tables = [
                curves,
                crossings,
                kitten_curve(&ts, eps, &subs, c)?,
                coherent_fock_curve(&ts, eps, fock_n, c)?,
            ];
            run.write(&tables)
        }
        Command::Fig6 => {
            let budget = run.budget()?;
            let eps = scalar(&mut run.config.epsilon, 5.0, "epsilon")?;
            let ts = grid(&mut run.config.temperatures, linspace(0.05, 3.0, 20), "temperatures")?;
            run.write(&[sweep_two_mode_entanglement(&ts, eps, c, &budget)?])
        }
        Command::Fig7 => {
            let budget = run.budget()?;
            let eps = scalar(&mut run.config.epsilon, 10.0, "epsilon")?;
            let t = scalar(&mut run.config.temperature, 0.5, "temperature")?;
            let ms = list(&mut run.config.ms, vec![0, 1, 2], "ms")?;
            let ns = list(&mut run.config.mode_counts, vec![1, 2, 3, 4, 5], "mode_counts")?;
            run.write(&[sweep_mode_count(&ns, &ms, t, eps, c, &budget)?])
        }
        Command::Fig8 => {
            let budget = run.budget()?;
            let t = scalar(&mut run.config.temperature, 0.5, "temperature")?;
            let es = grid(&mut run.config.epsilons, linspace(0.5, 20.0, 40), "epsilons")?;
            let ms = list(&mut run.config.ms, vec![0, 1, 2, 3], "ms")?;
            run.write(&[sweep_snr_vs_budget(&es, &ms, t, c, &budget)?])
        }
        Command::Eval { state, efficiency, rate } => eval(&state, c, efficiency, rate),
        Command::OracleCheck => {
            let d = OracleCheckOptions::default();
            let opts = OracleCheckOptions {
                nus: run.config.nus.clone().unwrap_or(d.nus),
                zs: run.config.zs.clone().unwrap_or(d.zs),
                max_m: run.config.max_m.unwrap_or(d.max_m),
                tolerance: run.config.tolerance.unwrap_or(d.tolerance),
                ..default_oracle
            };
            run_oracle(&opts)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let kind = match f {
                Failure::Config(_) => "config error",
                Failure::Infeasible(_) => "infeasible",
                Failure::Oracle(_) => "oracle mismatch",
                Failure::Runtime(_) => "error",
            };
            eprintln!("{kind}: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
