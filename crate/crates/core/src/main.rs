//! Command-line front end: missions, baselines, parameter sweeps and the
//! surrogate validity audits, all emitting plot-ready CSV/JSON.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

use uavsim::baselines::{run_offline_joint, run_offline_mpc, BaselineKind};
use uavsim::experiments::{self, Scheme, SweepParam, SweepSpec};
use uavsim::mpc::run_mission;
use uavsim::scenario::{default_scenario, load_scenario, place_users, stream, StreamKind};
use uavsim::surrogate::audit::{
    audit_beam_surrogates, audit_traj_surrogates, realistic_distance_models,
};

#[derive(Parser)]
#[command(
    name = "uavsim",
    about = "UAV downlink mission simulator with joint trajectory and beamforming optimization under finite-blocklength rate constraints"
)]
struct Cli {
    /// Scenario config file (flat key = value; defaults when omitted)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Scenario seed override
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Disturbance bound override, meters
    #[arg(long, global = true)]
    disturbance: Option<f64>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Output format for single-run traces
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-loop mission with the receding-horizon controller
    Run,
    /// One comparison scheme (offline-mpc, offline-joint, bf-*)
    Baseline {
        /// Scheme name
        #[arg(long)]
        scheme: String,
    },
    /// Parameter sweep over missions or fixed-trajectory beamformers
    Sweep {
        /// Swept key: p_com_max_w | num_antennas | blocklength | r_min_npcu | disturbance_m
        #[arg(long)]
        param: String,
        /// Comma-separated grid values
        #[arg(long)]
        values: String,
        /// Comma-separated schemes (online, offline-mpc, offline-joint, bf-mrt, bf-zf, bf-equal, bf-proposed)
        #[arg(long, default_value = "online")]
        schemes: String,
        /// Comma-separated seeds
        #[arg(long, default_value = "1,2,3")]
        seeds: String,
        /// Evaluate transmission schemes on a frozen optimized trajectory
        #[arg(long)]
        fixed_trajectory: bool,
    },
    /// Surrogate validity and curvature audits
    Audit {
        /// Samples per family
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        let record = serde_json::json!({ "error": format!("{e:#}") });
        eprintln!("{record}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            load_scenario(&text).map_err(|e| anyhow!("config: {e}"))?
        }
        None => default_scenario(),
    };
    if let Some(seed) = cli.seed {
        cfg.rng_seed = seed;
    }
    if let Some(d) = cli.disturbance {
        cfg.disturbance_m = d;
    }
    cfg.validate().map_err(|e| anyhow!("config: {e}"))?;
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating {}", cli.out.display()))?;

    match &cli.command {
        Command::Run => {
            let users = place_users(&cfg, &mut stream(cfg.rng_seed, StreamKind::UserPlacement));
            let trace = run_mission(&cfg, &users);
            emit_trace(&cli, &cfg, "mission", &trace)?;
            println!(
                "mission: {:?} terminal {:.2} m energy {:.0} J steps {}",
                trace.termination,
                trace.terminal_distance_m,
                trace.energy_j,
                trace.steps.len()
            );
        }
        Command::Baseline { scheme } => {
            let kind = BaselineKind::parse(scheme)
                .ok_or_else(|| anyhow!("unknown scheme `{scheme}`"))?;
            let users = place_users(&cfg, &mut stream(cfg.rng_seed, StreamKind::UserPlacement));
            match kind {
                BaselineKind::OfflineMpc | BaselineKind::OfflineJoint => {
                    let trace = if kind == BaselineKind::OfflineMpc {
                        run_offline_mpc(&cfg, &users)
                    } else {
                        run_offline_joint(&cfg, &users)
                    };
                    emit_trace(&cli, &cfg, kind.name(), &trace)?;
                    println!(
                        "{}: {:?} terminal {:.2} m energy {:.0} J",
                        kind.name(),
                        trace.termination,
                        trace.terminal_distance_m,
                        trace.energy_j
                    );
                }
                _ => {
                    // fixed-trajectory transmission scheme on the frozen
                    // optimized path
                    let positions = experiments::reference_trajectory(&cfg, cfg.rng_seed);
                    if positions.is_empty() {
                        bail!("reference trajectory is empty");
                    }
                    let (rates, _) =
                        experiments::evaluate_fixed(&cfg, kind, &positions, cfg.rng_seed, None);
                    let min_rates: Vec<f64> = rates
                        .iter()
                        .map(|r| r.iter().cloned().fold(f64::INFINITY, f64::min))
                        .collect();
                    let sat =
                        uavsim::baselines::qos_satisfaction(&min_rates, cfg.r_min_npcu);
                    let avg: f64 = rates.iter().map(|r| r.iter().sum::<f64>()).sum::<f64>()
                        / rates.len().max(1) as f64;
                    let record = serde_json::json!({
                        "schema_version": "uavsim-bf-v1",
                        "scheme": kind.name(),
                        "steps": rates.len(),
                        "time_avg_sum_rate_npcu": avg,
                        "satisfaction_pct": sat,
                        "r_min_npcu": cfg.r_min_npcu,
                    });
                    let path = cli.out.join(format!("{}.json", kind.name()));
                    std::fs::write(&path, serde_json::to_vec_pretty(&record)?)?;
                    println!("{}: sum rate {avg:.3} npcu, satisfaction {sat:.1}%", kind.name());
                }
            }
        }
        Command::Sweep { param, values, schemes, seeds, fixed_trajectory } => {
            let param = SweepParam::parse(param)
                .ok_or_else(|| anyhow!("unknown sweep parameter `{param}`"))?;
            let values: Vec<f64> = values
                .split(',')
                .map(|v| v.trim().parse().map_err(|_| anyhow!("bad grid value `{v}`")))
                .collect::<Result<_>>()?;
            let schemes: Vec<Scheme> = schemes
                .split(',')
                .map(|s| {
                    Scheme::parse(s.trim()).ok_or_else(|| anyhow!("unknown scheme `{s}`"))
                })
                .collect::<Result<_>>()?;
            let seeds: Vec<u64> = seeds
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| anyhow!("bad seed `{s}`")))
                .collect::<Result<_>>()?;
            let spec = SweepSpec { param, values, schemes, seeds, fixed_trajectory: *fixed_trajectory };
            let table = experiments::run_sweep(&spec, &cfg).map_err(|e| anyhow!(e))?;
            experiments::emit(&table, &cli.out, "sweep")?;
            println!(
                "sweep: {} rows -> {}/sweep.csv, {}/sweep.json",
                table.rows.len(),
                cli.out.display(),
                cli.out.display()
            );
        }
        Command::Audit { samples } => {
            let per_point = (*samples / 36).max(50);
            let beam = audit_beam_surrogates(&cfg, cfg.rng_seed, 12, per_point);
            let models = realistic_distance_models(&cfg, cfg.rng_seed, 120);
            let traj = audit_traj_surrogates(
                &models,
                [cfg.d_min_m, cfg.d_max_m],
                1.0,
                3,
                cfg.rng_seed,
            );
            let text = format!("{}\n{}", beam.to_text(), traj.to_text());
            std::fs::write(cli.out.join("audit.txt"), &text)?;
            print!("{text}");
        }
    }
    Ok(())
}

fn emit_trace(
    cli: &Cli,
    cfg: &uavsim::scenario::ScenarioConfig,
    base: &str,
    trace: &uavsim::mpc::MissionTrace,
) -> Result<()> {
    match cli.format {
        Format::Csv => {
            let mut f = std::fs::File::create(cli.out.join(format!("{base}.csv")))?;
            trace.write_csv(&mut f)?;
        }
        Format::Json => {
            let f = std::fs::File::create(cli.out.join(format!("{base}.json")))?;
            serde_json::to_writer_pretty(f, &trace.summary(cfg.r_min_npcu))?;
        }
    }
    // the summary is cheap and always useful next to the full trace
    let f = std::fs::File::create(cli.out.join(format!("{base}_summary.json")))?;
    serde_json::to_writer_pretty(f, &trace.summary(cfg.r_min_npcu))?;
    Ok(())
}
