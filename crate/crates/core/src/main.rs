use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use cogroup::beamforming::{run_policy, ProtocolRng};
use cogroup::formation::run_joint;
use cogroup::gain::{coherent_gain, AmplitudeVector};
use cogroup::harness::presets::{preset, PRESET_NAMES};
use cogroup::harness::{load_spec, run_experiment, ExperimentSpec, Format, Protocol};
use cogroup::linkbudget::{
    crossovers, distance_grid, doppler_tolerance_with, rate_comparison, BitRounding, LinkBudgetParams, RateModel,
};
use cogroup::rng::{SeedStreams, Substream};
use cogroup::scenario::{build_channels, place_nodes};

#[derive(Parser)]
#[command(name = "cogroup", version, about = "Coherent group communication experiments")]
struct Cli {
    /// Seed override (base seed for tables, instance seed for `gain`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gain of every configured protocol on one placement.
    Gain {
        #[arg(long)]
        config: PathBuf,
    },
    /// Reproduce a built-in table, or run the table described by a config file.
    Table {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES), required_unless_present = "config", conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed count (presets default to 100).
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Joint formation-plus-beamforming table from a config file.
    Formation {
        #[arg(long)]
        config: PathBuf,
    },
    /// Tolerable Doppler spread against group distance.
    Doppler {
        #[arg(long, default_value_t = 0.1)]
        fo: f64,
        #[arg(long, default_value_t = 1000.0)]
        dmin: f64,
        #[arg(long, default_value_t = 10000.0)]
        dmax: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Round bit counts up to whole bits.
        #[arg(long)]
        ceil_bits: bool,
    },
    /// Coherent against point-to-point throughput (model, not measured data).
    Rate {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 100.0)]
        coherence_ms: f64,
        #[arg(long, default_value_t = 1000.0)]
        dmin: f64,
        #[arg(long, default_value_t = 10000.0)]
        dmax: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Hop length inside each group; 0 drops the intra-group exchange.
        #[arg(long, default_value_t = 100.0)]
        exchange_radius: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: &Cli) -> Result<()> {
    let text = match &cli.command {
        Command::Gain { config } => {
            let spec = load_spec(config)?;
            gain_report(&spec, cli.seed.unwrap_or(spec.scenario.seed), cli.format)?
        }
        Command::Table { preset: name, config, seeds } => {
            let mut spec = match (name, config) {
                (Some(name), _) => preset(name, 100, 1)?,
                (None, Some(path)) => load_spec(path)?,
                (None, None) => bail!("give --preset or --config"),
            };
            if let Some(n) = seeds {
                spec.n_seeds = *n;
            }
            if let Some(s) = cli.seed {
                spec.base_seed = s;
            }
            run_table(&spec, cli)?
        }
        Command::Formation { config } => {
            let mut spec = load_spec(config)?;
            if let Some(p) = spec.protocols.iter().find(|p| !p.is_joint()) {
                bail!("formation needs joint protocols such as DBT, got {p}");
            }
            if let Some(s) = cli.seed {
                spec.base_seed = s;
            }
            run_table(&spec, cli)?
        }
        Command::Doppler {
            fo,
            dmin,
            dmax,
            steps,
            ceil_bits,
        } => {
            let params = LinkBudgetParams {
                overhead_fraction: *fo,
                ..LinkBudgetParams::default()
            };
            let rounding = if *ceil_bits { BitRounding::Ceil } else { BitRounding::Continuous };
            let mut out = String::from("D_m,S_Hz\n");
            for d in distance_grid(*dmin, *dmax, *steps)? {
                let r = doppler_tolerance_with(&params, d, rounding)?;
                writeln!(out, "{d},{}", r.doppler_spread)?;
            }
            out
        }
        Command::Rate {
            n,
            coherence_ms,
            dmin,
            dmax,
            steps,
            exchange_radius,
        } => {
            let mut model = RateModel::new(coherence_ms * 1e-3);
            model.exchange_radius = (*exchange_radius > 0.0).then_some(*exchange_radius);
            let params = LinkBudgetParams::default();
            let points = distance_grid(*dmin, *dmax, *steps)?
                .into_iter()
                .map(|d| rate_comparison(&params, d, *n, &model))
                .collect::<cogroup::Result<Vec<_>>>()?;
            let mut out = String::from("D_m,rate_coherent,rate_p2p\n");
            for p in &points {
                writeln!(out, "{},{},{}", p.distance, p.coherent_rate, p.p2p_rate)?;
            }
            for (d, up) in crossovers(&points) {
                let dir = if up { "coherent overtakes" } else { "point-to-point overtakes" };
                eprintln!("crossover near {d:.1} m: {dir}");
            }
            out
        }
    };
    write_out(cli.out.as_deref(), &text)
}

fn run_table(spec: &ExperimentSpec, cli: &Cli) -> Result<String> {
    let table = run_experiment(spec)?;
    if let Some(path) = &spec.outputs.csv_path {
        if cli.out.is_none() {
            cogroup::harness::emit(&table, Format::Csv, path)?;
        }
    }
    let format = if spec.outputs.markdown { Format::Md } else { cli.format };
    Ok(table.render(format)?)
}

fn gain_report(spec: &ExperimentSpec, seed: u64, format: Format) -> Result<String> {
    let row = spec.scenario.clone();
    let streams = SeedStreams::new(seed);
    let layout = place_nodes(&row, &mut streams.stream(Substream::Placement))?;
    let ch = build_channels(&layout, &row)?;
    let amps = AmplitudeVector::uniform(row.n_transmitters);

    let mut lines: Vec<(String, String, f64)> = Vec::new();
    for protocol in spec.resolved_protocols() {
        let name = protocol.name();
        match protocol {
            Protocol::Beam(policy) => {
                let mut rng = ProtocolRng::from_streams(&streams);
                let phases = run_policy(policy, &ch, &amps, &spec.beamforming.beam_options(), &mut rng)
                    .with_context(|| format!("protocol {name}"))?;
                let report = coherent_gain(&ch, &phases, &amps)?;
                lines.push((name.clone(), "gain".into(), report.gain));
                lines.push((name.clone(), "upper_bound".into(), report.upper_bound));
                for (m, b) in report.per_receiver_beta.iter().enumerate() {
                    lines.push((name.clone(), format!("beta_{m}"), *b));
                }
                for (n, p) in phases.as_slice().iter().enumerate() {
                    lines.push((name.clone(), format!("theta_{n}"), *p));
                }
            }
            Protocol::Joint(joint) => {
                let opts = spec.beamforming.joint_options();
                let out = run_joint(joint, row.n_streams, &ch, &layout, &amps, &opts, &streams)
                    .with_context(|| format!("protocol {name}"))?;
                lines.push((name.clone(), "objective".into(), out.report.objective));
                for (k, g) in out.report.stream_gains.iter().enumerate() {
                    lines.push((name.clone(), format!("gain_{k}"), *g));
                }
                for (k, r) in out.report.rho.iter().enumerate() {
                    lines.push((name.clone(), format!("rho_{k}"), *r));
                }
            }
        }
    }

    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str("protocol,metric,value\n");
            for (p, m, v) in &lines {
                writeln!(out, "{p},{m},{v}")?;
            }
        }
        Format::Md => {
            writeln!(
                out,
                "{} channel, N={} M={} K={}, D={} m, r={} m, seed {seed}\n",
                row.channel_model.label(),
                row.n_transmitters,
                row.n_receivers,
                row.n_streams,
                row.distance,
                row.group_radius
            )?;
            for (p, m, v) in &lines {
                writeln!(out, "{p:>4}  {m:<12} {v:.6}")?;
            }
        }
    }
    Ok(out)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
