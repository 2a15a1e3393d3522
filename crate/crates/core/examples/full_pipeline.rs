//! The complete analysis on the bundled synthetic panel, as `spdea run` does
//! it, followed by the oracle cross-checks.
//!
//! cargo run --release --example full_pipeline -- [output dir]

use std::path::PathBuf;

use spdea::pipeline::{cmd_oracle, run_command, Command, RunConfig, YearStatus};

fn main() -> spdea::Result<()> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("spdea-example"), PathBuf::from);
    let cfg = RunConfig {
        panel: Some(PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data/two_clubs_panel.csv"))),
        years: vec![2000, 2003],
        sig_reps: 199,
        mode_reps: 999,
        out: out.clone(),
        ..RunConfig::default()
    };

    let outcome = run_command(Command::Run, &cfg)?;
    for (year, status) in &outcome.manifest.years {
        match status {
            YearStatus::Ok { n, bandwidths } => println!("{year}: {n} regions, bandwidths {bandwidths:?}"),
            YearStatus::Error { error, .. } => println!("{year}: {error}"),
        }
    }
    println!("{} files in {}", outcome.manifest.files.len(), out.display());

    let report = cmd_oracle(&RunConfig {
        out: out.join("oracle"),
        ..cfg
    })?;
    for c in &report.checks {
        println!("{:<55} max |diff| {:.2e}", c.what, c.max_discrepancy);
    }
    Ok(())
}
