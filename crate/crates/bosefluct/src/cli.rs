//! Command line front end. `run` parses arguments, executes one
//! subcommand and returns the process exit code.

use std::path::PathBuf;

use bosefluct_core::bogoliubov::{covariance_matrix, mu_on_lattice, sigma_f};
use bosefluct_core::scattering::{scattering_length_integral, solve_zero_energy};
use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::error::{AppError, AppResult};
use crate::experiments::{self, ExperimentConfig, ObservableSpec};
use crate::functions::TestFunction;
use crate::io::{self, OutputDir};
use crate::plot;

#[derive(Debug, Parser)]
#[command(name = "bosefluct", version, about = "Measurement statistics of small Bose gases")]
pub struct Cli {
    /// Configuration file (INI).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `[output] directory`.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Master seed; overrides `[experiment] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Zero-energy scattering solution and scattering length.
    Scattering,
    /// Bogoliubov σ vectors and their Gram matrix.
    Covariance,
    /// Law of large numbers run: W1 to the reference law along the N grid.
    Lln,
    /// Fluctuation run: linear statistics and their covariance.
    Clt,
    /// Exact variance against the Bogoliubov prediction.
    Variance,
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> AppResult<Vec<PathBuf>> {
    let path = cli.config.as_ref().ok_or_else(|| AppError::config("--config is required"))?;
    let mut config = Config::load(path)?;
    if let Some(seed) = cli.seed {
        if let Some(exp) = config.experiment.as_mut() {
            exp.seed = seed;
        }
    }
    if let Some(dir) = &cli.out_dir {
        config.output.directory = dir.clone();
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    match cli.threads {
        Some(0) => return Err(AppError::config("--threads must be positive")),
        Some(k) => builder = builder.num_threads(k),
        None => {}
    }
    let pool = builder.build().map_err(|e| AppError::config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command, &config))
}

fn dispatch(command: Command, config: &Config) -> AppResult<Vec<PathBuf>> {
    // Validate everything the command needs before touching the disk.
    let prepared = match command {
        Command::Scattering => {
            config.potential()?;
            None
        }
        Command::Covariance => {
            config.observable()?;
            Some(experiments::model_lattice(config)?)
        }
        Command::Lln | Command::Clt | Command::Variance => None,
    };
    let exp = match command {
        Command::Lln | Command::Clt | Command::Variance => Some(ExperimentConfig::from_config(config)?),
        _ => None,
    };
    let out = OutputDir::create(&config.output.directory)?;
    let mut paths = vec![out.write_text("config_used.ini", &config.to_string())?];
    match command {
        Command::Scattering => paths.extend(cmd_scattering(config, &out)?),
        Command::Covariance => paths.extend(cmd_covariance(config, prepared.expect("lattice"), &out)?),
        Command::Lln => paths.extend(cmd_lln(config, &exp.expect("experiment"), &out)?),
        Command::Clt => paths.extend(cmd_clt(config, &exp.expect("experiment"), &out)?),
        Command::Variance => paths.extend(cmd_variance(&exp.expect("experiment"), &out)?),
    }
    Ok(paths)
}

fn cmd_scattering(config: &Config, out: &OutputDir) -> AppResult<Vec<PathBuf>> {
    let v = experiments::build_potential(config.potential()?)?;
    if v.is_zero() {
        return Ok(vec![
            out.write_csv("scattering.csv", &["r", "f", "V"], &[])?,
            out.write_text("a0.txt", "a0_tail 0\na0_integral 0\ndifference 0\nresidual 0\n")?,
        ]);
    }
    let sol = solve_zero_energy(&v, 4.0 * v.support_radius(), 256)?;
    let a0_integral = scattering_length_integral(&sol, &v)?;
    println!("a0 = {} (integral {a0_integral})", sol.a0);
    io::write_scattering(out, &sol, a0_integral)
}

fn functions_or_identity(config: &Config) -> Vec<TestFunction> {
    config.experiment.as_ref().map_or_else(|| vec![TestFunction::Identity], |e| e.functions.clone())
}

fn cmd_covariance(
    config: &Config,
    lattice: bosefluct_core::bogoliubov::MomentumLattice,
    out: &OutputDir,
) -> AppResult<Vec<PathBuf>> {
    let ObservableSpec::Matrix(o) = experiments::build_observable(config.observable()?, &lattice)? else {
        return Err(AppError::config("covariance needs a matrix observable"));
    };
    let a0 = match &config.potential {
        Some(p) => experiments::scattering_length(&experiments::build_potential(p)?)?,
        None => 0.0,
    };
    let functions = functions_or_identity(config);
    let sigmas =
        functions.iter().map(|f| sigma_f(&o, &f.as_fn(), a0, &lattice)).collect::<bosefluct_core::Result<Vec<_>>>()?;
    let cov = covariance_matrix(&sigmas)?;
    let mu = mu_on_lattice(a0, &lattice)?;
    println!("a0 = {a0}; smallest eigenvalue of Sigma = {}", cov.min_eigenvalue());
    let mut paths =
        vec![io::write_sigma(out, &lattice, &mu, &sigmas)?, io::write_covariance(out, "covariance.csv", &cov)?];
    if config.output.plot {
        let pts: Vec<(f64, f64)> = lattice.indices().map(|i| (lattice.norm(i), mu[i])).collect();
        paths.push(out.write_text("mu.svg", &plot::mu_profile(&pts))?);
    }
    Ok(paths)
}

fn cmd_lln(config: &Config, exp: &ExperimentConfig, out: &OutputDir) -> AppResult<Vec<PathBuf>> {
    let rec = experiments::lln_run(exp)?;
    let mut paths = io::write_lln(out, &rec)?;
    if rec.w1.len() >= 4 {
        let fit = experiments::scaling_fit(&rec)?;
        let text = format!(
            "slope {}\nintercept {}\nslope_stderr {}\nci95 {} {}\nsqrtN_nonincreasing {}\ntop_half_spread {}\n",
            fit.fit.slope,
            fit.fit.intercept,
            fit.fit.slope_stderr,
            fit.fit.ci.0,
            fit.fit.ci.1,
            fit.sqrt_n_nonincreasing,
            fit.top_half_spread
        );
        print!("{text}");
        paths.push(out.write_text("lln_fit.txt", &text)?);
    }
    if config.output.plot {
        let pts: Vec<(usize, f64)> = rec.w1.iter().map(|(n, w)| (*n, crate::stats::mean(w))).collect();
        if pts.iter().all(|p| p.1 > 0.0) {
            paths.push(out.write_text("w1.svg", &plot::w1_loglog(&pts))?);
        }
    }
    Ok(paths)
}

fn cmd_clt(config: &Config, exp: &ExperimentConfig, out: &OutputDir) -> AppResult<Vec<PathBuf>> {
    let rec = experiments::clt_run(exp)?;
    for row in rec.summary.iter().filter(|r| r.j == r.k) {
        println!("j={} sigma_model={} sigma_sample={} +- {}", row.j, row.sigma_model, row.sigma_sample, row.stderr);
    }
    let mut paths = io::write_clt(out, &rec)?;
    if config.output.plot {
        let top = rec.values.last().expect("nonempty grid");
        for (j, vals) in top.iter().enumerate() {
            let var = rec.summary.iter().find(|r| r.j == j && r.k == j).map_or(0.0, |r| r.sigma_model);
            paths.push(out.write_text(&format!("clt_hist_{j}.svg"), &plot::histogram(vals, var, 30))?);
        }
    }
    Ok(paths)
}

fn cmd_variance(exp: &ExperimentConfig, out: &OutputDir) -> AppResult<Vec<PathBuf>> {
    let g = exp.functions.first().cloned().unwrap_or(TestFunction::Identity);
    let rep = experiments::variance_comparison(exp, &g)?;
    if let Some(fit) = &rep.decay {
        println!("gap decay exponent {} +- {}", fit.slope, fit.slope_stderr);
    }
    io::write_variance(out, &rep)
}
