use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spdea::pipeline::{self, parse_years, Command, RunConfig};
use spdea::{Error, Result};

#[derive(Parser)]
#[command(name = "spdea", version, about = "Spatially conditioned DEA and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate inputs and write dataset.json and validation.json
    Ingest(Flags),
    /// Full analysis: scores, summaries, effects, modes, Moran
    Run(Flags),
    /// Unconditional DEA scores
    Dea(Flags),
    /// Spatially conditioned DEA scores
    Spdea(Flags),
    /// Moran's I and scatterplot quadrants of both score vectors
    Moran(Flags),
    /// Frontier-shift ratios, partial regressions and significance tests
    Effects(Flags),
    /// Excess-mass mode tests and density grids
    Modes(Flags),
    /// Cross-check the estimators against brute-force oracles
    Oracle(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    panel: Option<PathBuf>,
    #[arg(long)]
    coords: Option<PathBuf>,
    #[arg(long)]
    adjacency: Option<PathBuf>,
    #[arg(long)]
    benchmarks: Option<PathBuf>,
    /// e.g. 2000,2005-2007
    #[arg(long)]
    years: Option<String>,
    /// knn, contiguity or invdist
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    cutoff: Option<f64>,
    /// crs or vrs
    #[arg(long)]
    rts: Option<String>,
    /// lscv, rot, or comma-separated values
    #[arg(long)]
    bandwidth: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sig_reps: Option<usize>,
    #[arg(long)]
    mode_reps: Option<usize>,
    #[arg(long)]
    perms: Option<usize>,
    #[arg(long)]
    max_modes: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Build capital stocks from investment
    #[arg(long)]
    pim: bool,
    #[arg(long)]
    delta: Option<f64>,
    /// Accumulation window, e.g. 1990-2000
    #[arg(long)]
    pim_window: Option<String>,
    /// Score file to verify (oracle)
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
}

impl Flags {
    fn into_config(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field { cfg.$field = v; }
            )*};
        }
        set!(k, seed, sig_reps, mode_reps, perms, max_modes, alpha, delta, out);
        for (field, value) in [
            (&mut cfg.panel, self.panel),
            (&mut cfg.coords, self.coords),
            (&mut cfg.adjacency, self.adjacency),
            (&mut cfg.benchmarks, self.benchmarks),
            (&mut cfg.scores, self.scores),
        ] {
            if value.is_some() {
                *field = value;
            }
        }
        if self.cutoff.is_some() {
            cfg.cutoff = self.cutoff;
        }
        if let Some(y) = self.years {
            cfg.years = parse_years(&y)?;
        }
        if let Some(w) = self.weights {
            cfg.weights = w.parse()?;
        }
        if let Some(r) = self.rts {
            cfg.rts = r.parse()?;
        }
        if let Some(b) = self.bandwidth {
            cfg.bandwidth = b.parse()?;
        }
        if let Some(f) = self.format {
            cfg.format = f.parse()?;
        }
        if self.pim {
            cfg.pim = true;
        }
        if let Some(w) = self.pim_window {
            let years = parse_years(&w)?;
            match (years.first(), years.last()) {
                (Some(&a), Some(&b)) => cfg.pim_window = [a, b],
                _ => return Err(Error::Config(format!("bad window `{w}`"))),
            }
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (command, flags) = match cli.command {
        Cmd::Ingest(f) => (Command::Ingest, f),
        Cmd::Run(f) => (Command::Run, f),
        Cmd::Dea(f) => (Command::Dea, f),
        Cmd::Spdea(f) => (Command::Spdea, f),
        Cmd::Moran(f) => (Command::Moran, f),
        Cmd::Effects(f) => (Command::Effects, f),
        Cmd::Modes(f) => (Command::Modes, f),
        Cmd::Oracle(f) => (Command::Oracle, f),
    };
    let cfg = flags.into_config()?;
    match command {
        Command::Ingest => {
            let report = pipeline::cmd_ingest(&cfg)?;
            println!(
                "{} regions, {}-{}, {} observations",
                report.regions, report.first_year, report.last_year, report.observations
            );
            Ok(true)
        }
        Command::Oracle => {
            let report = pipeline::cmd_oracle(&cfg)?;
            for c in &report.checks {
                match &c.skipped {
                    Some(why) => println!("skip {}: {why}", c.what),
                    None => println!("ok   {}: max {:.3e} (tol {:.0e})", c.what, c.max_discrepancy, c.tolerance),
                }
            }
            Ok(true)
        }
        _ => {
            let outcome = pipeline::run_command(command, &cfg)?;
            for (year, status) in &outcome.manifest.years {
                match status {
                    pipeline::YearStatus::Ok { n, .. } => eprintln!("{year}: ok ({n} regions)"),
                    pipeline::YearStatus::Error { error, .. } => eprintln!("{year}: failed: {error}"),
                }
            }
            Ok(outcome.failed_years().is_empty())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
