use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ising_mimo::harness::{
    read_instances, read_summary, report_csv, run_bench, run_on_instances, run_scenario, scenario_instances,
    write_campaign, write_instances, BenchConfig, Detector, MetricsReport, Scenario, SUMMARY_FILE,
};
use ising_mimo::two_round::CthSchedule;
use ising_mimo::Constellation;
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(
    name = "ising-mimo",
    version,
    about = "MIMO ML detection via Ising parallel tempering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the instances of a scenario as JSON Lines.
    Gen {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output file; stdout when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run one detector over one scenario and print its metrics.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Detect these instances (JSON Lines) instead of generating them.
        #[arg(long)]
        instances: Option<PathBuf>,
        /// Directory for records.jsonl, summary.json and latency.json.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Sweep a grid of scenarios; flags override the config's base scenario.
    Bench {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Aggregate summary files (or directories holding them) into CSV.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// CSV destination; stdout when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Also write all reports as one JSON array.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args, Default)]
struct ScenarioArgs {
    /// Scenario (or bench grid) file, JSON or TOML.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    id: Option<String>,
    #[arg(long)]
    n_users: Option<usize>,
    #[arg(long)]
    n_rx: Option<usize>,
    /// bpsk, qpsk, 16qam or 64qam.
    #[arg(long)]
    constellation: Option<Constellation>,
    /// SNR in dB; `inf` for noise-free.
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    n_instances: Option<usize>,
    /// Runs per instance.
    #[arg(long)]
    runs: Option<usize>,
    /// BER curve points, comma separated.
    #[arg(long, value_delimiter = ',')]
    n_pe: Option<Vec<usize>>,
    /// paramax, 2r-paramax, sa, zf, zf-sic, fcsd, sd or bruteforce.
    #[arg(long)]
    detector: Option<Detector>,
    /// Fully enumerated users for fcsd.
    #[arg(long)]
    n_fs: Option<usize>,
    /// Sweeps per run (the annealer's when the detector is sa).
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    t_low: Option<f64>,
    #[arg(long)]
    t_high: Option<f64>,
    #[arg(long)]
    exchange_interval: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Shorthand for --detector 2r-paramax.
    #[arg(long)]
    two_round: bool,
    /// Pre-decision threshold for the two-round detector.
    #[arg(long)]
    c_th: Option<f64>,
    #[arg(long)]
    runs_round2: Option<usize>,
    /// Skip the exact sphere-decoder oracle (no P_ML).
    #[arg(long)]
    no_oracle: bool,
    /// Latency budget per detection, microseconds.
    #[arg(long)]
    time_budget_us: Option<f64>,
}

fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let parsed = match ext {
        "json" => serde_json::from_str(&text).map_err(anyhow::Error::from),
        "toml" => toml::from_str(&text).map_err(anyhow::Error::from),
        _ => serde_json::from_str(&text)
            .or_else(|_| toml::from_str(&text))
            .map_err(anyhow::Error::from),
    };
    parsed.with_context(|| format!("parsing {}", path.display()))
}

impl ScenarioArgs {
    fn apply(&self, s: &mut Scenario) -> Result<()> {
        macro_rules! set {
            ($($flag:ident => $field:expr),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() { $field = v; })*
            };
        }
        set! {
            id => s.id,
            n_users => s.n_users,
            n_rx => s.n_rx,
            constellation => s.constellation,
            snr => s.snr_db,
            n_instances => s.n_instances,
            runs => s.n_runs,
            n_pe => s.n_pe,
            detector => s.detector,
            n_fs => s.n_fs,
            exchange_interval => s.solver.exchange_interval,
            seed => s.seed,
        }
        if self.two_round {
            if self.detector.is_some_and(|d| d != Detector::TwoRound) {
                bail!("--two-round conflicts with --detector {}", self.detector.unwrap());
            }
            s.detector = Detector::TwoRound;
        }
        if s.detector == Detector::Sa {
            set! { sweeps => s.sa.n_sweeps, t_low => s.sa.t_low, t_high => s.sa.t_high }
        } else {
            set! { sweeps => s.solver.n_sweeps, t_low => s.solver.t_low, t_high => s.solver.t_high }
        }
        if let Some(c) = self.c_th {
            s.two_round.c_th = CthSchedule::constant(c);
        }
        if let Some(n) = self.runs_round2 {
            s.two_round.n_runs_round2 = Some(n);
        }
        if self.no_oracle {
            s.oracle = false;
        }
        if let Some(b) = self.time_budget_us {
            s.time_budget_us = Some(b);
        }
        Ok(())
    }

    fn scenario(&self) -> Result<Scenario> {
        let mut s = match &self.config {
            Some(p) => load_config(p)?,
            None => Scenario::default(),
        };
        self.apply(&mut s)?;
        s.validate()?;
        Ok(s)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn summaries(inputs: &[PathBuf]) -> Result<Vec<MetricsReport>> {
    let mut reports = Vec::new();
    for input in inputs {
        let path = if input.is_dir() {
            input.join(SUMMARY_FILE)
        } else {
            input.clone()
        };
        reports.extend(read_summary(&path).with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(reports)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { scenario, out } => {
            let instances = scenario_instances(&scenario.scenario()?)?;
            match out {
                Some(path) => write_instances(&path, &instances)?,
                None => {
                    let mut stdout = std::io::stdout().lock();
                    for inst in &instances {
                        serde_json::to_writer(&mut stdout, inst)?;
                        writeln!(stdout)?;
                    }
                }
            }
        }
        Command::Run {
            scenario,
            instances,
            out,
        } => {
            let mut s = scenario.scenario()?;
            let campaign = match instances {
                Some(path) => {
                    let loaded = read_instances(&path)?;
                    if loaded.is_empty() {
                        bail!("{} holds no instances", path.display());
                    }
                    s.n_instances = loaded.len();
                    run_on_instances(&s, &loaded)?
                }
                None => run_scenario(&s)?,
            };
            if let Some(dir) = out {
                write_campaign(&dir, &campaign)?;
            }
            print_json(&campaign.report)?;
            eprintln!(
                "latency: median {:.1} us, p99.5 {:.1} us over {} samples",
                campaign.latency.median_us, campaign.latency.p995_us, campaign.latency.n_samples
            );
            if campaign.latency.within_budget == Some(false) {
                eprintln!("warning: p99.5 latency exceeds the time budget");
            }
        }
        Command::Bench { scenario, out } => {
            let mut config: BenchConfig = match &scenario.config {
                Some(p) => load_config(p)?,
                None => BenchConfig::default(),
            };
            scenario.apply(&mut config.base)?;
            let reports = run_bench(&config, &out)?;
            print!("{}", report_csv(&reports));
        }
        Command::Report { inputs, out, json } => {
            let reports = summaries(&inputs)?;
            let csv = report_csv(&reports);
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            if let Some(path) = json {
                let mut text = serde_json::to_string_pretty(&reports)?;
                text.push('\n');
                std::fs::write(path, text)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
