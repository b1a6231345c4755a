use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use duality_cli::execute::{execute, ExecuteOptions, ScenarioOutcome};
use duality_cli::scenario::{load_config, ScenarioKind};
use duality_core::qrng::{
    autocorrelation_test, bias_test, dump_bits, NoiseModel, ShotNoiseQrng, DEFAULT_TEST_SIGMA,
};

#[derive(Parser)]
#[command(
    name = "duality",
    version,
    about = "Delayed-choice single-photon complementarity simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config; writes event logs, tables, and a summary.
    ///
    /// Exit status: 0 when every scientific pass flag holds, 1 when a check
    /// fails (duality bound, causality, sub-Poissonian alpha), 2 on errors.
    Run {
        /// Scenario TOML file.
        #[arg(long)]
        config: PathBuf,
        /// Output root; results land in <out-dir>/<scenario name>/.
        #[arg(long, env = "DUALITY_OUT_DIR", default_value = "runs")]
        out_dir: PathBuf,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Trigger override: per point for scan kinds, total otherwise.
        #[arg(long)]
        triggers: Option<u64>,
        #[arg(short, long)]
        verbose: bool,
    },
    /// Generate a seeded QRNG stream, self-test it, and dump one byte per
    /// bit for external test suites. Exit 1 if a self-test fails.
    QrngDump {
        #[arg(long, default_value_t = 1_000_000)]
        bits: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comparator offset in noise-sigma units.
        #[arg(long, default_value_t = 0.0)]
        offset: f64,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
        /// Highest autocorrelation lag to test.
        #[arg(long, default_value_t = 10)]
        max_lag: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> duality_core::Result<bool> {
    match cli.command {
        Command::Run {
            config,
            out_dir,
            seed,
            triggers,
            verbose,
        } => run_command(config, out_dir, seed, triggers, verbose),
        Command::QrngDump {
            bits,
            seed,
            offset,
            out,
            max_lag,
        } => qrng_dump_command(bits, seed, offset, out, max_lag),
    }
}

fn run_command(
    config: PathBuf,
    out_dir: PathBuf,
    seed: Option<u64>,
    triggers: Option<u64>,
    verbose: bool,
) -> duality_core::Result<bool> {
    let scenario = load_config(&config)?;
    println!("scenario '{}' ({})", scenario.name, scenario.kind.as_str());
    if scenario.kind == ScenarioKind::DualitySweep {
        for (v_eom, r) in scenario.sweep_reflectivities()? {
            println!("  sweep: V_EOM = {v_eom:.1} V -> R = {r:.3}");
        }
    }

    let opts = ExecuteOptions {
        out_dir: out_dir.join(&scenario.name),
        seed_override: seed,
        triggers_override: triggers,
        verbose,
    };
    let report = execute(&scenario, &opts)?;

    match &report.outcome {
        ScenarioOutcome::Causality(c) => {
            println!(
                "geometry: {} (margin {:.2} ns)",
                c.report.class, c.report.margin_ns
            );
        }
        ScenarioOutcome::Fringe(f) => {
            println!("R_nominal = {:.3}", f.r_nominal);
            println!("visibility = {}", f.fit.visibility);
            if let Some(control) = &f.control_fit {
                println!("control (bit 0) visibility = {}", control.visibility);
            }
        }
        ScenarioOutcome::Blocked(b) => {
            println!("R_nominal = {:.3}", b.r_nominal);
            println!("distinguishability = {}", b.distinguishability);
        }
        ScenarioOutcome::Alpha(a) => {
            println!("alpha = {} (model value {:.4})", a.alpha, a.alpha_expected);
        }
        ScenarioOutcome::Sweep(s) => {
            for p in &s.points {
                println!(
                    "V_EOM = {:6.1} V  R = {:.3}  V^2+D^2 = {}  [{}]",
                    p.v_eom,
                    p.result.r_nominal.unwrap_or(f64::NAN),
                    p.result.duality,
                    if p.result.pass { "ok" } else { "VIOLATION" }
                );
            }
            println!("ensemble mean V^2+D^2 = {}", s.mean_duality);
        }
    }
    println!(
        "{}: outputs in {}",
        if report.passed { "PASS" } else { "FAIL" },
        report.out_dir.display()
    );
    Ok(report.passed)
}

fn qrng_dump_command(
    bits: u64,
    seed: u64,
    offset: f64,
    out: PathBuf,
    max_lag: usize,
) -> duality_core::Result<bool> {
    let model = NoiseModel {
        mean_offset: offset,
        seed,
    };
    let stream = ShotNoiseQrng::new(&model).take_bits(bits);
    let mut file = File::create(&out)?;
    dump_bits(&stream, &mut file)?;

    let bias = bias_test(&stream, DEFAULT_TEST_SIGMA)?;
    println!(
        "bias: frequency = {:.6}, z = {:+.3} [{}]",
        bias.frequency,
        bias.z_score,
        if bias.pass { "pass" } else { "FAIL" }
    );
    let autocorr = autocorrelation_test(&stream, max_lag)?;
    for lag in &autocorr.lags {
        println!(
            "autocorrelation lag {:2}: r = {:+.6} [{}]",
            lag.lag,
            lag.correlation,
            if lag.pass { "pass" } else { "FAIL" }
        );
    }
    println!("{} bits written to {}", bits, out.display());
    Ok(bias.pass && autocorr.pass)
}
