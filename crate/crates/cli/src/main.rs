//! polarcast: construction, simulation, rate regions, and channel
//! classification for polarization-based broadcast codes.

use clap::{Args, Parser, Subcommand};
use polarcast_core::channels::{classify, ModelDoc};
use polarcast_core::detbc::{DetCodeSpec, DetMode};
use polarcast_core::error::Error;
use polarcast_core::harness::{
    cached_build_sets, region, run, selftest, write_outputs, ExperimentConfig, RegionGrid,
    SchemeConfig,
};
use polarcast_core::prob::Pmf;
use polarcast_core::seeding::{master_from, substream};
use polarcast_core::synthesis::{BuildOptions, ContextBundle, Estimator, SelectionRule};
use rand::Rng;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "polarcast",
    about = "Polarization-based codes for broadcast channels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic broadcast-channel binning code.
    Detbc {
        #[command(subcommand)]
        action: DetbcAction,
    },
    /// Two-user superposition code.
    Sp {
        #[command(subcommand)]
        action: SpAction,
    },
    /// Two-user Marton code with genie-bit accounting.
    Marton {
        #[command(subcommand)]
        action: MartonAction,
    },
    /// Run a full experiment described by a JSON config document instead
    /// of inline flags.
    Run {
        /// ExperimentConfig JSON: scheme, model document, n_list, beta,
        /// samples, trials, master_seed, selection.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit rate-region boundary points for a channel document.
    Region {
        /// Channel / chain / configuration JSON document.
        #[arg(long)]
        channel: PathBuf,
        /// Satellite flip probabilities for the alpha sweep.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Place a two-user noisy channel in the degradation hierarchy.
    Classify {
        #[arg(long)]
        channel: PathBuf,
    },
    /// Quick library sanity battery.
    Selftest,
}

#[derive(Args)]
struct BuildArgs {
    /// Block length(s), powers of two.
    #[arg(long, value_delimiter = ',', default_value = "1024")]
    n: Vec<usize>,
    /// Polarization exponent in (0, 1/2).
    #[arg(long, default_value_t = 0.3)]
    beta: f64,
    /// Monte-Carlo construction samples.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Master seed for construction and simulation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rank-based selection with this rate backoff instead of the
    /// delta_n threshold.
    #[arg(long)]
    quantile_backoff: Option<f64>,
}

impl BuildArgs {
    fn selection(&self) -> SelectionRule {
        match self.quantile_backoff {
            Some(backoff) => SelectionRule::Quantile { backoff },
            None => SelectionRule::Threshold,
        }
    }
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    build: BuildArgs,
    /// Simulated blocks per block length.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Output directory for CSV and summary; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DetbcAction {
    /// Build and store the polarization sets.
    Construct {
        #[arg(long)]
        channel: PathBuf,
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode seeded random messages and print the block as JSON.
    Encode {
        #[arg(long)]
        channel: PathBuf,
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long, value_enum, default_value = "random")]
        mode: CliDetMode,
    },
    /// Decode one receiver's observations from an encode document.
    Decode {
        #[arg(long)]
        channel: PathBuf,
        #[command(flatten)]
        build: BuildArgs,
        /// JSON document produced by `detbc encode`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        receiver: usize,
    },
    /// Seeded block-error simulation; emits CSV and a JSON summary.
    Simulate {
        #[arg(long)]
        channel: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_enum, default_value = "random")]
        mode: CliDetMode,
    },
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum CliDetMode {
    Map,
    Random,
}

impl From<CliDetMode> for DetMode {
    fn from(m: CliDetMode) -> Self {
        match m {
            CliDetMode::Map => DetMode::Map,
            CliDetMode::Random => DetMode::Random,
        }
    }
}

#[derive(Subcommand)]
enum SpAction {
    Construct {
        #[arg(long)]
        chain: PathBuf,
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Simulate {
        #[arg(long)]
        chain: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
}

#[derive(Subcommand)]
enum MartonAction {
    Construct {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        /// Partial-polarization budget to compare |Delta_1 u Delta_2|/n
        /// against.
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Buffered two-phase run: genie bits delivered after the last block,
    /// charged one bit each against R2.
    TwoPhase {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long, default_value_t = 50)]
        blocks: usize,
        #[arg(long)]
        eta: Option<f64>,
    },
}

fn read_doc(path: &PathBuf) -> Result<ModelDoc, Error> {
    let text = std::fs::read_to_string(path)?;
    ModelDoc::from_json(&text)
}

fn build_options(args: &BuildArgs) -> BuildOptions {
    BuildOptions {
        beta: args.beta,
        estimator: Estimator::MonteCarlo {
            samples: args.samples,
            seed: args.seed,
        },
        selection: args.selection(),
    }
}

fn single_n(args: &BuildArgs) -> Result<usize, Error> {
    if args.n.len() != 1 {
        return Err(Error::Config("this action takes exactly one --n".into()));
    }
    Ok(args.n[0])
}

fn construct_cmd(
    doc: &ModelDoc,
    bundle: &ContextBundle,
    args: &BuildArgs,
    out: &Option<PathBuf>,
) -> Result<(), Error> {
    let n = single_n(args)?;
    let sets = cached_build_sets(bundle, &doc.to_json(), n, &build_options(args))?;
    let text = sets.to_json();
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn emit_run(config: &ExperimentConfig, out_dir: &Option<PathBuf>, stem: &str) -> Result<(), Error> {
    let output = run(config)?;
    match out_dir {
        Some(dir) => {
            let (csv, json) = write_outputs(&output, dir, stem)?;
            eprintln!("wrote {} and {}", csv.display(), json.display());
        }
        None => {
            print!("{}", output.csv);
            println!(
                "{}",
                serde_json::to_string_pretty(&output.summary).expect("summary serializes")
            );
        }
    }
    Ok(())
}

fn detbc_spec(doc: &ModelDoc, args: &BuildArgs) -> Result<DetCodeSpec, Error> {
    let n = single_n(args)?;
    let channel = doc.as_deterministic()?;
    let px = Pmf::uniform(channel.x_size());
    let order: Vec<usize> = (0..channel.receivers()).collect();
    let bundle = ContextBundle::DetBc {
        channel: channel.clone(),
        px: px.clone(),
        order: order.clone(),
    };
    let sets = cached_build_sets(&bundle, &doc.to_json(), n, &build_options(args))?;
    DetCodeSpec::from_sets(channel, px, order, &sets, args.seed)
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Detbc { action } => match action {
            DetbcAction::Construct { channel, build, out } => {
                let doc = read_doc(&channel)?;
                let ch = doc.as_deterministic()?;
                let px = Pmf::uniform(ch.x_size());
                let bundle = ContextBundle::det_bc(ch, px);
                construct_cmd(&doc, &bundle, &build, &out)
            }
            DetbcAction::Encode { channel, build, mode } => {
                let doc = read_doc(&channel)?;
                let spec = detbc_spec(&doc, &build)?;
                let master = master_from(build.seed, "cli-detbc-encode");
                let mut rng = substream(&master, 0);
                let messages: Vec<Vec<u8>> = (0..spec.receivers())
                    .map(|r| {
                        (0..spec.message_len(r))
                            .map(|_| rng.gen_range(0..2u8))
                            .collect()
                    })
                    .collect();
                let result = spec.encode(&messages, mode.into())?;
                let doc = serde_json::json!({
                    "n": spec.n(),
                    "messages": messages,
                    "x": result.x,
                    "y_rows": result.y_rows,
                });
                println!("{}", serde_json::to_string_pretty(&doc).expect("encode doc"));
                Ok(())
            }
            DetbcAction::Decode {
                channel,
                build,
                input,
                receiver,
            } => {
                let doc = read_doc(&channel)?;
                let spec = detbc_spec(&doc, &build)?;
                let text = std::fs::read_to_string(input)?;
                let parsed: serde_json::Value = serde_json::from_str(&text)?;
                let y: Vec<u8> = serde_json::from_value(
                    parsed
                        .get("y_rows")
                        .and_then(|rows| rows.get(receiver))
                        .cloned()
                        .ok_or_else(|| Error::Config("input lacks y_rows for receiver".into()))?,
                )?;
                let bits = spec.decode(receiver, &y)?;
                println!(
                    "{}",
                    serde_json::to_string(&serde_json::json!({
                        "receiver": receiver,
                        "message": bits
                    }))
                    .expect("decode doc")
                );
                Ok(())
            }
            DetbcAction::Simulate { channel, sim, mode } => {
                let config = ExperimentConfig {
                    scheme: SchemeConfig::Detbc {
                        channel: read_doc(&channel)?,
                        px: None,
                        order: None,
                        mode: mode.into(),
                    },
                    n_list: sim.build.n.clone(),
                    beta: sim.build.beta,
                    samples: sim.build.samples,
                    trials: sim.trials,
                    master_seed: sim.build.seed,
                    selection: sim.build.selection(),
                };
                emit_run(&config, &sim.out, "detbc_simulate")
            }
        },
        Command::Sp { action } => match action {
            SpAction::Construct { chain, build, out } => {
                let doc = read_doc(&chain)?;
                let bundle = ContextBundle::Superposition {
                    chain: doc.as_chain()?,
                };
                construct_cmd(&doc, &bundle, &build, &out)
            }
            SpAction::Simulate { chain, sim } => {
                let config = ExperimentConfig {
                    scheme: SchemeConfig::Sp {
                        chain: read_doc(&chain)?,
                    },
                    n_list: sim.build.n.clone(),
                    beta: sim.build.beta,
                    samples: sim.build.samples,
                    trials: sim.trials,
                    master_seed: sim.build.seed,
                    selection: sim.build.selection(),
                };
                emit_run(&config, &sim.out, "sp_simulate")
            }
        },
        Command::Marton { action } => match action {
            MartonAction::Construct { config, build, out } => {
                let doc = read_doc(&config)?;
                let bundle = ContextBundle::Marton {
                    config: doc.as_marton()?,
                };
                construct_cmd(&doc, &bundle, &build, &out)
            }
            MartonAction::Simulate { config, sim, eta } => {
                let config = ExperimentConfig {
                    scheme: SchemeConfig::Marton {
                        config: read_doc(&config)?,
                        eta,
                    },
                    n_list: sim.build.n.clone(),
                    beta: sim.build.beta,
                    samples: sim.build.samples,
                    trials: sim.trials,
                    master_seed: sim.build.seed,
                    selection: sim.build.selection(),
                };
                emit_run(&config, &sim.out, "marton_simulate")
            }
            MartonAction::TwoPhase {
                config,
                build,
                blocks,
                eta,
            } => {
                let doc = read_doc(&config)?;
                let cfg = doc.as_marton()?;
                let n = single_n(&build)?;
                let bundle = ContextBundle::Marton {
                    config: cfg.clone(),
                };
                let sets = cached_build_sets(&bundle, &doc.to_json(), n, &build_options(&build))?;
                let spec = polarcast_core::marton::MaCodeSpec::from_sets_with_repair(
                    cfg, &sets, build.seed,
                )?;
                let report = spec.two_phase_simulate(blocks, build.seed)?;
                let mut doc = serde_json::to_value(&report).expect("report serializes");
                if let Some(eta_budget) = eta {
                    doc["eta_budget"] = serde_json::json!(eta_budget);
                    doc["eta_within_budget"] = serde_json::json!(report.eta <= eta_budget);
                }
                println!("{}", serde_json::to_string_pretty(&doc).expect("report doc"));
                Ok(())
            }
        },
        Command::Run { config, out } => {
            let text = std::fs::read_to_string(&config)?;
            let config = ExperimentConfig::from_json(&text)?;
            let stem = format!("{}_simulate", match config.scheme {
                SchemeConfig::Detbc { .. } => "detbc",
                SchemeConfig::Sp { .. } => "sp",
                SchemeConfig::Marton { .. } => "marton",
            });
            emit_run(&config, &out, &stem)
        }
        Command::Region {
            channel,
            alphas,
            out,
        } => {
            let doc = read_doc(&channel)?;
            let grid = RegionGrid {
                alphas,
                px_list: None,
            };
            let csv = region(&doc, &grid)?;
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Classify { channel } => {
            let doc = read_doc(&channel)?;
            let report = classify(&doc.as_noisy()?)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            Ok(())
        }
        Command::Selftest => {
            let results = selftest();
            let mut ok = true;
            for (name, pass) in &results {
                println!("{} {name}", if *pass { "PASS" } else { "FAIL" });
                ok &= pass;
            }
            if ok {
                Ok(())
            } else {
                Err(Error::Construction("selftest failed".into()))
            }
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Construction(_) | Error::TooLarge { .. } | Error::EncoderBlock { .. } => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
