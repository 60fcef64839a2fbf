use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use leoiot_cli::{run, Command, Scenario};
use leoiot_core::mlpredict::ModelKind;

/// Sensor-to-satellite NB-IoT experiments: transmission modes, traffic,
/// link budget, access collisions and battery lifetime.
#[derive(Parser, Debug)]
#[command(name = "leoiot", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Scenario JSON file; defaults apply when omitted.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Master seed (overrides the scenario).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the scenario).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Do not print tables to stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Ingest, grid and smooth a sensor CSV.
    Preprocess {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Generate synthetic devices.
    Generate {
        #[arg(long)]
        devices: Option<usize>,
        #[arg(long)]
        days: Option<u64>,
    },
    /// Reduction, RMSE and simultaneity per transmission mode.
    Modes(DataArgs),
    /// Inter-transmission times against the exponential model.
    Traffic(DataArgs),
    /// Collision probability sweep, analytic and Monte-Carlo.
    Collision {
        #[arg(long)]
        trials: Option<u32>,
        #[arg(long)]
        p_bo: Option<f64>,
        #[arg(long)]
        subcarriers: Option<u32>,
    },
    /// Uplink SNR for both configuration sets.
    Linkbudget,
    /// Visibility duration curves.
    Visibility {
        #[arg(long)]
        altitude: Option<f64>,
        #[arg(long)]
        inclination: Option<f64>,
    },
    /// Effective data delivered per pass.
    EffectiveData {
        /// Aggregate uplink rate, bit/s.
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Battery lifetime grid.
    Lifetime {
        #[arg(long)]
        battery: Option<f64>,
        /// Extra energy per pass, mWs.
        #[arg(long)]
        overhead: Option<f64>,
    },
    /// Everything above.
    Report(DataArgs),
    /// Print the default scenario as JSON.
    Template,
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind)]
    model: Option<ModelKind>,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    match s {
        "linear" => Ok(ModelKind::Linear),
        "tree" => Ok(ModelKind::Tree),
        "forest" => Ok(ModelKind::Forest),
        _ => Err(format!("unknown model {s:?} (linear, tree, forest)")),
    }
}

fn apply_data(sc: &mut Scenario, d: &DataArgs) {
    if let Some(p) = &d.input {
        sc.data.input = Some(p.clone());
    }
    if let Some(k) = d.model {
        sc.model.kind = k;
    }
}

/// Writes to stdout; a closed pipe (`leoiot template | head`) is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let mut sc = match &cli.global.scenario {
        Some(p) => Scenario::load(p)?,
        None => Scenario::default(),
    };
    if let Some(s) = cli.global.seed {
        sc.seed = s;
    }
    if let Some(o) = &cli.global.out {
        sc.out_dir = o.clone();
    }

    let command = match &cli.command {
        Cmd::Template => {
            return emit(&format!("{}\n", serde_json::to_string_pretty(&sc)?));
        }
        Cmd::Preprocess { input } => {
            if let Some(p) = input {
                sc.data.input = Some(p.clone());
            }
            Command::Preprocess
        }
        Cmd::Generate { devices, days } => {
            if let Some(n) = devices {
                sc.data.synthetic.n_devices = *n;
            }
            if let Some(d) = days {
                sc.data.synthetic.duration = d * 86_400;
            }
            Command::Generate
        }
        Cmd::Modes(d) => {
            apply_data(&mut sc, d);
            Command::Modes
        }
        Cmd::Traffic(d) => {
            apply_data(&mut sc, d);
            Command::Traffic
        }
        Cmd::Collision { trials, p_bo, subcarriers } => {
            if let Some(t) = trials {
                sc.collision.trials = *t;
            }
            if let Some(p) = p_bo {
                sc.rach.p_bo = *p;
            }
            if let Some(m) = subcarriers {
                sc.rach.m_rao = *m;
            }
            Command::Collision
        }
        Cmd::Linkbudget => Command::Linkbudget,
        Cmd::Visibility { altitude, inclination } => {
            if let Some(h) = altitude {
                sc.orbit.altitude = *h;
            }
            if let Some(i) = inclination {
                sc.orbit.inclination = *i;
            }
            Command::Visibility
        }
        Cmd::EffectiveData { rate } => {
            if let Some(r) = rate {
                sc.effective_data.aggregate_rate = *r;
            }
            Command::EffectiveData
        }
        Cmd::Lifetime { battery, overhead } => {
            if let Some(b) = battery {
                sc.energy.battery_mwh = *b;
            }
            if let Some(o) = overhead {
                sc.energy.duty.overhead = *o;
            }
            Command::Lifetime
        }
        Cmd::Report(d) => {
            apply_data(&mut sc, d);
            Command::Report
        }
    };

    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    let report = run(command, &sc)?;
    report.write(&sc.out_dir)?;
    if !cli.global.quiet {
        emit(&report.text)?;
    }
    eprintln!("wrote {} files to {}", report.files.len(), sc.out_dir.display());
    Ok(())
}
