//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::experiment::{records_to_csv, run_experiment, ExperimentConfig, LPolicy};
use crate::io::{
    coefficients_to_json, instance_to_json, parse_coefficients, parse_experiment_config, parse_instance,
    parse_k_list, result_to_json,
};
use crate::model::{forward_sh_coefficients, generate_instance, render_grid, InstanceGenConfig};
use crate::recovery::{recover_with, required_bandlimit};
use crate::tolerance::{Tolerances, ENV_PREFIX};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fri-sphere", version, about = "Recover Diracs on the sphere from spherical-harmonic coefficients")]
struct Cli {
    /// Tolerance override `key=value` (repeatable); applied after FRI_SPHERE_TOL_* variables.
    #[arg(long = "tolerance", global = true, value_name = "KEY=VALUE")]
    tolerance: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a random instance and write it as JSON.
    Synthesize {
        #[arg(long = "K")]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Minimum great-circle separation; defaults to π/(3K).
        #[arg(long)]
        min_separation: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compute the spherical-harmonic coefficients of an instance.
    Shc {
        input: PathBuf,
        /// Bandlimit; defaults to the smallest one that supports recovery.
        #[arg(long = "L")]
        l: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Recover K Diracs from a coefficient file.
    Recover {
        input: PathBuf,
        #[arg(long = "K")]
        k: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the bandlimit needed for K Diracs next to 2K and ⌈K+√K⌉.
    Bandlimit {
        /// One K or a list such as `2-20:2`.
        #[arg(long = "K")]
        k: String,
    },
    /// Run the accuracy sweep and write a CSV of mean-squared errors.
    Experiment {
        /// JSON configuration; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// K values, e.g. `2-20:2` or `2,5,10`.
        #[arg(long = "K")]
        k: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fixed bandlimit for every K.
        #[arg(long = "L")]
        l: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sample the bandlimited signal of an instance on a grid (CSV).
    Render {
        input: PathBuf,
        #[arg(long = "L")]
        l: usize,
        #[arg(long, default_value_t = 90)]
        n_theta: usize,
        #[arg(long, default_value_t = 180)]
        n_phi: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn numerical(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_NUMERICAL,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn emit(output: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| usage(format!("cannot write to stdout: {e}"))),
    }
}

fn env_overrides() -> Vec<String> {
    std::env::vars()
        .filter_map(|(name, value)| name.strip_prefix(ENV_PREFIX).map(|key| format!("{key}={value}")))
        .collect()
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    let mut overrides = env_overrides();
    overrides.extend(cli.tolerance.iter().cloned());
    let mut tol = Tolerances::default();
    for o in &overrides {
        tol.apply_override(o).map_err(|e| usage(format!("[tolerance] {e}")))?;
    }

    match cli.command {
        Command::Synthesize {
            k,
            seed,
            min_separation,
            output,
        } => {
            let mut cfg = InstanceGenConfig::new(k, seed);
            cfg.min_separation = min_separation;
            cfg.validate().map_err(|e| usage(format!("[synthesize] {e}")))?;
            let ensemble = generate_instance(&cfg).map_err(|e| numerical(format!("[synthesize] {e}")))?;
            emit(&output, &instance_to_json(&ensemble), stdout)
        }
        Command::Shc { input, l, output } => {
            let diracs = parse_instance(&read(&input)?).map_err(|e| usage(format!("[shc] {e}")))?;
            let bandlimit = l.unwrap_or_else(|| required_bandlimit(diracs.len()).l_required);
            if bandlimit == 0 {
                return Err(usage("[shc] L must be at least 1"));
            }
            emit(&output, &coefficients_to_json(&forward_sh_coefficients(&diracs, bandlimit)), stdout)
        }
        Command::Recover { input, k, output } => {
            let flm = parse_coefficients(&read(&input)?).map_err(|e| usage(format!("[recover] {e}")))?;
            if k == 0 {
                return Err(usage("[recover] K must be at least 1"));
            }
            let result = recover_with(&flm, k, tol).map_err(|e| numerical(format!("[{}] {e}", e.stage())))?;
            emit(&output, &result_to_json(&result), stdout)
        }
        Command::Bandlimit { k } => {
            let ks = parse_k_list(&k).map_err(|e| usage(format!("[bandlimit] {e}")))?;
            let mut text = String::new();
            for &k in &ks {
                let plan = required_bandlimit(k);
                let line = format!(
                    "L={} (proposed), {} (2K), {} (K+√K)",
                    plan.l_required, plan.l_two_k, plan.l_k_plus_sqrt_k
                );
                if ks.len() == 1 {
                    text.push_str(&line);
                } else {
                    text.push_str(&format!("K={k}: {line}"));
                }
                text.push('\n');
            }
            emit(&None, &text, stdout)
        }
        Command::Experiment {
            config,
            k,
            trials,
            seed,
            l,
            workers,
            output,
        } => {
            let mut cfg = match config {
                Some(path) => parse_experiment_config(&read(&path)?).map_err(|e| usage(format!("[experiment] {e}")))?,
                None => ExperimentConfig::default(),
            };
            if let Some(k) = k {
                cfg.k_values = parse_k_list(&k).map_err(|e| usage(format!("[experiment] {e}")))?;
            }
            if let Some(trials) = trials {
                cfg.trials = trials;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(l) = l {
                cfg.l_policy = LPolicy::Fixed(l);
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            if output.is_some() {
                cfg.output_path = output;
            }
            let mut merged = overrides.clone();
            merged.extend(std::mem::take(&mut cfg.tolerance));
            cfg.tolerance = merged;
            cfg.validate().map_err(|e| usage(format!("[experiment] {e}")))?;
            let records = run_experiment(&cfg).map_err(|e| usage(format!("[experiment] {e}")))?;
            if cfg.output_path.is_none() {
                emit(&None, &records_to_csv(&records), stdout)?;
            }
            Ok(())
        }
        Command::Render {
            input,
            l,
            n_theta,
            n_phi,
            output,
        } => {
            let diracs = parse_instance(&read(&input)?).map_err(|e| usage(format!("[render] {e}")))?;
            if l == 0 || n_theta == 0 || n_phi == 0 {
                return Err(usage("[render] L and grid sizes must be at least 1"));
            }
            let mut text = String::from("theta,phi,re,im\n");
            for (t, p, v) in render_grid(&diracs, l, n_theta, n_phi) {
                text.push_str(&format!("{t:.16e},{p:.16e},{:.16e},{:.16e}\n", v.re, v.im));
            }
            emit(&output, &text, stdout)
        }
    }
}

/// Runs the command line with explicit output streams and returns the exit
/// code: 0 on success, 1 for usage or I/O errors, 2 for numerical failures.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

/// [`run`] against the process's standard streams.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}
