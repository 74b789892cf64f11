use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use biaslab::dataset::write_csv;
use biaslab::generator::{apply_representation_bias, generate_population, scenario_params};
use biaslab::harness::report::{render_summary, render};
use biaslab::harness::{
    calibrate, run_cells, run_repeats, summarize_repeats, CalibrationOptions, CalibrationTargets,
    ExperimentCell, ExperimentConfig, ReportFormat,
};
use biaslab::{Error, PipelineBias, RngStream, ScenarioId};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "biaslab", version, about = "Synthetic bias scenarios and fairness experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat key = value config; the shipped calibrated config when omitted.
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
    /// Use the quick-mode row count from the config.
    #[arg(long)]
    quick: bool,
    /// Override the number of generated rows.
    #[arg(long)]
    n_samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one scenario's population and write it as CSV.
    Generate {
        #[arg(long)]
        scenario: ScenarioId,
        /// Only `representation-a` changes the rows; other biases act on model views.
        #[arg(long, default_value = "none")]
        bias: PipelineBias,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Run a single experiment cell and print its report.
    RunCell {
        #[arg(long)]
        scenario: ScenarioId,
        #[arg(long, default_value = "none")]
        bias: PipelineBias,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "md")]
        format: String,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Run all 25 cells and write a report.
    RunMatrix {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        /// Run the matrix K times with derived seeds and add a mean ± sd summary.
        #[arg(long, default_value_t = 1)]
        repeats: usize,
    },
    /// Tune s_bar and the per-scenario bias magnitudes to target gaps of Y.
    Calibrate {
        /// Flat `SCENARIO = pp` file; the reference targets when omitted.
        #[arg(long, value_name = "FILE")]
        targets: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = CalibrationOptions::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = CalibrationOptions::default().n_samples)]
        n_samples: usize,
        /// Where to write the calibrated config; printed to stdout when omitted.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

fn config_err(e: Error) -> Failure {
    Failure::Config(e)
}

fn runtime_err(e: Error) -> Failure {
    Failure::Runtime(e)
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, Failure> {
    let mut config = match &args.params {
        Some(path) => ExperimentConfig::load(path).map_err(config_err)?,
        None => ExperimentConfig::shipped(),
    };
    if args.quick {
        config = config.quick();
    }
    if let Some(n) = args.n_samples {
        config.generator.n_samples = n;
    }
    config.validate().map_err(config_err)?;
    Ok(config)
}

fn parse_format(s: &str) -> Result<ReportFormat, Failure> {
    s.parse().map_err(config_err)
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Runtime(Error::Io { path: path.into(), source: e }))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate {
            scenario,
            bias,
            config,
            seed,
            out,
        } => {
            let config = load_config(&config)?;
            let cell = ExperimentCell {
                scenario,
                pipeline_bias: bias,
            };
            let stream = RngStream::new(seed, cell.stream_label());
            let params = scenario_params(scenario, &config.generator, &config.presets);
            let mut pop = generate_population(&params, &mut stream.derive("gen")).map_err(runtime_err)?;
            if bias == PipelineBias::RepresentationA {
                pop = apply_representation_bias(
                    &pop,
                    params.p_u,
                    params.conditioned_undersampling,
                    &mut stream.derive("undersample"),
                )
                .map_err(runtime_err)?;
            }
            write_csv(&pop.to_table(), &out).map_err(runtime_err)?;
            eprintln!("wrote {} rows to {}", pop.len(), out.display());
        }
        Command::RunCell {
            scenario,
            bias,
            config,
            seed,
            format,
            out,
        } => {
            let config = load_config(&config)?;
            let format = parse_format(&format)?;
            let cell = ExperimentCell {
                scenario,
                pipeline_bias: bias,
            };
            let rows = run_cells(&[cell], &config, seed, rayon::current_num_threads()).map_err(runtime_err)?;
            let text = render(&rows, format).map_err(runtime_err)?;
            match out {
                Some(path) => write_text(&path, &text)?,
                None => print!("{text}"),
            }
        }
        Command::RunMatrix {
            config,
            seed,
            out_dir,
            format,
            parallelism,
            repeats,
        } => {
            let config = load_config(&config)?;
            let format = parse_format(&format)?;
            if parallelism == 0 || repeats == 0 {
                return Err(Failure::Config(Error::Config(
                    "parallelism and repeats must be >= 1".into(),
                )));
            }
            fs::create_dir_all(&out_dir).map_err(|e| Failure::Runtime(Error::Io { path: out_dir.clone(), source: e }))?;
            let runs = run_repeats(&config, seed, parallelism, repeats).map_err(runtime_err)?;
            let ext = format.extension();
            for (k, rows) in runs.iter().enumerate() {
                let name = if repeats == 1 {
                    format!("results.{ext}")
                } else {
                    format!("results_rep{k}.{ext}")
                };
                let path = out_dir.join(name);
                write_text(&path, &render(rows, format).map_err(runtime_err)?)?;
                eprintln!("wrote {}", path.display());
            }
            if repeats > 1 {
                let summary = summarize_repeats(&runs);
                let path = out_dir.join(format!("summary.{ext}"));
                write_text(&path, &render_summary(&summary, format).map_err(runtime_err)?)?;
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Calibrate {
            targets,
            params,
            seed,
            n_samples,
            out,
        } => {
            let base = match &params {
                Some(path) => ExperimentConfig::load(path).map_err(config_err)?,
                None => ExperimentConfig::shipped(),
            };
            let targets = match &targets {
                Some(path) => CalibrationTargets::load(path).map_err(config_err)?,
                None => CalibrationTargets::reference(),
            };
            let opts = CalibrationOptions {
                n_samples,
                seed,
                ..CalibrationOptions::default()
            };
            let (calibrated, outcomes) = calibrate(&base, &targets, &opts).map_err(runtime_err)?;
            eprintln!("s_bar = {}", calibrated.generator.s_bar);
            for o in &outcomes {
                eprintln!(
                    "scenario {:>3}: target {:>5.2} pp, achieved {:>6.3} pp, magnitude {:.6}",
                    o.scenario, o.target_pp, o.achieved_pp, o.magnitude
                );
            }
            match out {
                Some(path) => calibrated.save(&path).map_err(runtime_err)?,
                None => print!("{}", calibrated.to_text()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
