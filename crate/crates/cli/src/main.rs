use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use mevclus::ingest::{load_panel, load_scenario, write_panel};
use mevclus::report::{
    compare_files, emit_outputs, read_json, scenario_report, write_json, ResultFile, RunOptions,
};
use mevclus::synth::{factor_panel, FactorPanelSpec};
use mevclus::{run_rolling_clustering, ClusteringConfig, Error, Month, SplitOrder};

#[derive(Parser)]
#[command(name = "mevclus", version, about = "Rolling-window clustering of macroeconomic variables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster every rolling window of a historical panel.
    Run {
        #[command(flatten)]
        input: PanelArgs,
        #[command(flatten)]
        clustering: ClusteringArgs,
        #[arg(long, default_value_t = 12)]
        step_months: usize,
        #[arg(long)]
        out: PathBuf,
        /// Plot-data CSV with columns start_year,n_clusters.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Cluster the window that follows a scenario's launch month.
    Scenario {
        #[command(flatten)]
        input: PanelArgs,
        #[command(flatten)]
        clustering: ClusteringArgs,
        #[arg(long)]
        launch: Month,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Compare two reports (or single-window results) window by window.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic random-walk factor panel.
    Synth {
        #[arg(long)]
        factors: usize,
        #[arg(long)]
        vars: usize,
        #[arg(long)]
        months: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "2002-01")]
        start: Month,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        meta: PathBuf,
    },
}

#[derive(Args)]
struct PanelArgs {
    #[arg(long)]
    panel: PathBuf,
    #[arg(long)]
    meta: PathBuf,
}

#[derive(Args)]
struct ClusteringArgs {
    #[arg(long, default_value_t = 24)]
    window_months: usize,
    #[arg(long, default_value_t = 1.0)]
    stop_lambda2: f64,
    #[arg(long)]
    max_clusters: Option<usize>,
    #[arg(long, default_value_t = SplitOrder::LargestLambda2)]
    split_order: SplitOrder,
    #[arg(long, default_value_t = 1)]
    stop_min_size: usize,
    #[arg(long)]
    stop_min_avg_sim: Option<f64>,
    #[arg(long)]
    stop_min_min_sim: Option<f64>,
    /// File with one favorable label per line.
    #[arg(long)]
    favorable: Option<PathBuf>,
}

impl ClusteringArgs {
    fn options(&self, step_months: usize) -> Result<RunOptions, Error> {
        let clustering = ClusteringConfig {
            stop_lambda2: self.stop_lambda2,
            stop_min_size: self.stop_min_size,
            stop_min_avg_sim: self.stop_min_avg_sim,
            stop_min_min_sim: self.stop_min_min_sim,
            max_clusters: self.max_clusters,
            split_order: self.split_order,
        };
        clustering.validate()?;
        let favorable = self.favorable.as_deref().map(read_favorable).transpose()?;
        Ok(RunOptions {
            clustering,
            window_months: self.window_months,
            step_months,
            favorable,
        })
    }
}

fn read_favorable(path: &Path) -> Result<HashSet<String>, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run {
            input,
            clustering,
            step_months,
            out,
            plot,
        } => {
            let opts = clustering.options(step_months)?;
            let panel = load_panel(&input.panel, &input.meta)?;
            let report = run_rolling_clustering(&panel, &opts)?;
            info!(
                "{} windows, cluster counts {}..{} (mean {})",
                report.windows.len(),
                report.summary.min_count,
                report.summary.max_count,
                report.summary.mean_count
            );
            emit_outputs(&report, &out, plot.as_deref())
        }
        Command::Scenario {
            input,
            clustering,
            launch,
            out,
            plot,
        } => {
            let opts = clustering.options(clustering.window_months)?;
            let scenario = load_scenario(&input.panel, &input.meta, launch)?;
            let report = scenario_report(&scenario, &opts)?;
            info!("scenario window {}: {} clusters", report.windows[0].window, report.windows[0].n_clusters);
            emit_outputs(&report, &out, plot.as_deref())
        }
        Command::Compare { a, b, out } => {
            let ra: ResultFile = read_json(&a)?;
            let rb: ResultFile = read_json(&b)?;
            write_json(&compare_files(ra, rb)?, &out)
        }
        Command::Synth {
            factors,
            vars,
            months,
            noise,
            seed,
            start,
            out,
            meta,
        } => {
            let s = factor_panel(&FactorPanelSpec {
                n_factors: factors,
                n_vars: vars,
                n_months: months,
                noise,
                seed,
                start,
            })?;
            write_panel(&s.panel, &out, &meta)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
