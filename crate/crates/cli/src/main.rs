//! Command-line front end: runs experiments, anchors and audits client
//! record files, compares aggregation modes on one scenario, verifies chain
//! snapshots, and materializes datasets.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 training
//! divergence, 3 integrity failure (audit mismatch or invalid chain),
//! 4 no anchor found for the requested period.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fedchain_core::anchoring::{anchor_period, resolve_dispute, AnchorError, AnchorPeriod,
    DisputeOutcome};
use fedchain_core::coordinator::AggregationMode;
use fedchain_core::datagen::load_records;
use fedchain_core::experiment::{compare_experiments, run_experiment, ExperimentConfig,
    ExperimentError};
use fedchain_core::ledger::{verify_snapshot, ChainSnapshot, Ledger, VerifyOutcome};
use fedchain_core::model::ModelKind;

const EXIT_USAGE: i32 = 1;
const EXIT_DIVERGENCE: i32 = 2;
const EXIT_INTEGRITY: i32 = 3;
const EXIT_NO_ANCHOR: i32 = 4;

#[derive(Parser)]
#[command(
    name = "fedchain",
    version,
    about = "Deterministic federated learning simulator with a blockchain audit trail"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run(RunArgs),
    /// Commit the Merkle root of a record file to a chain snapshot.
    Anchor(AnchorArgs),
    /// Check a record file against its anchored Merkle root.
    Audit(AuditArgs),
    /// Run one scenario under several aggregation modes and tabulate metrics.
    Compare(CompareArgs),
    /// Re-verify every block and the cached state of a chain snapshot.
    VerifyChain(VerifyChainArgs),
    /// Write a configuration's datasets as per-client CSV directories.
    GenData(GenDataArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration JSON; the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory receiving config.json, rounds.csv, summary.json,
    /// chain.json, and tokens.csv.
    #[arg(long)]
    out: PathBuf,
    /// Aggregation mode: cdw_fedavg, fedavg, centralized, or local.
    #[arg(long, required_unless_present = "config")]
    mode: Option<AggregationMode>,
    /// Model kind: lr or nn.
    #[arg(long, required_unless_present = "config")]
    model: Option<ModelKind>,
    /// Training rounds.
    #[arg(long)]
    rounds: Option<u64>,
    /// Local epochs per round.
    #[arg(long)]
    epochs: Option<usize>,
    /// Minibatch size.
    #[arg(long)]
    batch_size: Option<usize>,
    /// SGD step size.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Clients selected per round (default: all).
    #[arg(long)]
    clients_per_round: Option<usize>,
    /// Token reward per unit of centroid distance.
    #[arg(long)]
    incentive_constant: Option<f64>,
    /// Anchor every client's records each time this many rounds pass.
    #[arg(long)]
    anchor_every: Option<u64>,
    /// Seed fixing selections, initialization, minibatches, and data.
    #[arg(long)]
    master_seed: Option<u64>,
    /// Seal blocks with proof-of-work at this difficulty.
    #[arg(long)]
    pow_difficulty: Option<u64>,
    /// Worker threads for client training within a round.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct AnchorArgs {
    /// Chain snapshot to update; created with this client as its only
    /// organization when absent.
    #[arg(long)]
    chain: PathBuf,
    /// Client committing the records.
    #[arg(long)]
    client: String,
    /// Period time being anchored.
    #[arg(long)]
    period: u64,
    /// Record file, one record per line in canonical field order.
    #[arg(long)]
    csv: PathBuf,
    /// Proof-of-work difficulty when creating a new chain.
    #[arg(long)]
    pow_difficulty: Option<u64>,
}

#[derive(Args)]
struct AuditArgs {
    /// Chain snapshot holding the anchored root.
    #[arg(long)]
    chain: PathBuf,
    /// Client whose records are in dispute.
    #[arg(long)]
    client: String,
    /// Period time the records claim to cover.
    #[arg(long)]
    period: u64,
    /// Claimed record file to check against the anchor.
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Two or more configuration files differing only in mode.
    #[arg(required = true, num_args = 2..)]
    configs: Vec<PathBuf>,
    /// Directory receiving comparison.csv and one artifact set per mode.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyChainArgs {
    /// Chain snapshot to verify.
    #[arg(long)]
    chain: PathBuf,
}

#[derive(Args)]
struct GenDataArgs {
    /// Configuration whose data source is materialized; defaults to the
    /// built-in four-client scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory receiving one train.csv/test.csv subdirectory per client.
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn usage_failure(err: impl std::fmt::Display) -> Failure {
    fail(EXIT_USAGE, err.to_string())
}

fn read_failure(path: &Path, err: &std::io::Error) -> Failure {
    fail(EXIT_USAGE, format!("cannot read {}: {err}", path.display()))
}

fn experiment_failure(err: ExperimentError) -> Failure {
    let code = match &err {
        ExperimentError::Diverged { .. } => EXIT_DIVERGENCE,
        _ => EXIT_USAGE,
    };
    fail(code, err.to_string())
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|err| read_failure(path, &err))?;
    ExperimentConfig::from_json(&text).map_err(experiment_failure)
}

/// Loads and re-verifies a snapshot; any rejection is an integrity failure.
fn load_ledger(path: &Path) -> Result<Ledger, Failure> {
    let text = fs::read_to_string(path).map_err(|err| read_failure(path, &err))?;
    let snapshot = ChainSnapshot::from_json(&text)
        .map_err(|err| fail(EXIT_INTEGRITY, format!("{}: {err}", path.display())))?;
    Ledger::from_snapshot(snapshot)
        .map_err(|err| fail(EXIT_INTEGRITY, format!("{}: {err}", path.display())))
}

impl RunArgs {
    fn build_config(&self) -> Result<ExperimentConfig, Failure> {
        let mut config = match &self.config {
            Some(path) => load_config(path)?,
            // clap enforces mode and model whenever --config is absent.
            None => ExperimentConfig::new(
                self.mode.expect("mode required without a config file"),
                self.model.expect("model required without a config file"),
            ),
        };
        if let Some(mode) = self.mode {
            config.mode = mode;
        }
        if let Some(model) = self.model {
            config.model = model;
        }
        if let Some(rounds) = self.rounds {
            config.rounds = rounds;
        }
        if let Some(epochs) = self.epochs {
            config.epochs = epochs;
        }
        if let Some(batch_size) = self.batch_size {
            config.batch_size = batch_size;
        }
        if let Some(learning_rate) = self.learning_rate {
            config.learning_rate = learning_rate;
        }
        if let Some(k) = self.clients_per_round {
            config.clients_per_round = Some(k);
        }
        if let Some(c) = self.incentive_constant {
            config.incentive_constant = c;
        }
        if let Some(every) = self.anchor_every {
            config.anchor_every = every;
        }
        if let Some(seed) = self.master_seed {
            config.master_seed = seed;
        }
        if let Some(difficulty) = self.pow_difficulty {
            config.pow_difficulty = Some(difficulty);
        }
        if let Some(workers) = self.workers {
            config.workers = workers;
        }
        config.validate().map_err(experiment_failure)?;
        Ok(config)
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let config = args.build_config()?;
    let output = run_experiment(&config, &args.out).map_err(experiment_failure)?;
    let s = &output.summary;
    println!(
        "{} rounds of {}/{} across {} clients: mean final accuracy {:.4}, \
         {} payload bytes moved, chain height {}",
        s.rounds,
        s.mode,
        s.model,
        s.clients.len(),
        s.mean_final_accuracy,
        s.comm_total,
        s.chain_height,
    );
    println!("artifacts in {}", args.out.display());
    Ok(())
}

fn cmd_anchor(args: &AnchorArgs) -> Result<(), Failure> {
    let records = load_records(&args.csv).map_err(usage_failure)?;
    if records.is_empty() {
        return Err(fail(EXIT_USAGE, "record file is empty; nothing to anchor"));
    }
    let mut ledger = if args.chain.exists() {
        load_ledger(&args.chain)?
    } else {
        Ledger::new([args.client.as_str()], args.pow_difficulty).map_err(usage_failure)?
    };
    let mut period =
        AnchorPeriod::new(&args.client, args.period, args.period, args.period)
            .map_err(usage_failure)?;
    period.record_count = records.len() as u64;
    let (root, _) = anchor_period(&mut ledger, &period, &records).map_err(usage_failure)?;
    let json = ledger.snapshot().to_json();
    fs::write(&args.chain, json)
        .map_err(|err| fail(EXIT_USAGE, format!("cannot write {}: {err}", args.chain.display())))?;
    println!(
        "anchored {} records for {} at period {}: root {root}",
        records.len(),
        args.client,
        args.period,
    );
    Ok(())
}

fn cmd_audit(args: &AuditArgs) -> Result<(), Failure> {
    if !args.chain.exists() {
        return Err(fail(
            EXIT_USAGE,
            format!("chain snapshot {} does not exist", args.chain.display()),
        ));
    }
    let ledger = load_ledger(&args.chain)?;
    let records = load_records(&args.csv).map_err(usage_failure)?;
    match resolve_dispute(&ledger, &args.client, args.period, &records) {
        Ok(DisputeOutcome::Verified) => {
            println!(
                "verified: {} records match the anchored root for {} at period {}",
                records.len(),
                args.client,
                args.period,
            );
            Ok(())
        }
        Ok(DisputeOutcome::Mismatch { recomputed, anchored }) => Err(fail(
            EXIT_INTEGRITY,
            format!(
                "audit mismatch for {} at period {}: recomputed {recomputed}, anchored {anchored}",
                args.client, args.period,
            ),
        )),
        Err(err @ AnchorError::NoAnchor { .. }) => Err(fail(EXIT_NO_ANCHOR, err.to_string())),
        Err(err) => Err(usage_failure(err)),
    }
}

fn cmd_compare(args: &CompareArgs) -> Result<(), Failure> {
    let mut configs = Vec::with_capacity(args.configs.len());
    for path in &args.configs {
        configs.push(load_config(path)?);
    }
    let outputs = compare_experiments(&configs, &args.out).map_err(experiment_failure)?;
    println!(
        "compared {} modes over {} rounds; table in {}",
        outputs.len(),
        configs[0].rounds,
        args.out.join("comparison.csv").display(),
    );
    Ok(())
}

fn cmd_verify_chain(args: &VerifyChainArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.chain).map_err(|err| read_failure(&args.chain, &err))?;
    let snapshot = ChainSnapshot::from_json(&text)
        .map_err(|err| fail(EXIT_INTEGRITY, format!("snapshot rejected: {err}")))?;
    match verify_snapshot(&snapshot) {
        VerifyOutcome::Ok => {
            println!(
                "ok: {} blocks across {} organizations, cached state replays exactly",
                snapshot.blocks.len(),
                snapshot.organizations.len(),
            );
            Ok(())
        }
        VerifyOutcome::BadBlock { height, reason } => {
            Err(fail(EXIT_INTEGRITY, format!("invalid chain at height {height}: {reason}")))
        }
        VerifyOutcome::StateMismatch => Err(fail(
            EXIT_INTEGRITY,
            "cached contract state does not match chain replay",
        )),
    }
}

fn cmd_gen_data(args: &GenDataArgs) -> Result<(), Failure> {
    let config = match &args.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::new(AggregationMode::CdwFedavg, ModelKind::Lr),
    };
    let clients = config.load_clients().map_err(experiment_failure)?;
    for dataset in &clients {
        let dir = args.out.join(&dataset.client_id);
        dataset.save_dir(&dir).map_err(usage_failure)?;
        println!(
            "wrote {} train and {} test records to {}",
            dataset.train.len(),
            dataset.test.len(),
            dir.display(),
        );
    }
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // --help and --version also land here; only real errors exit 1.
        Err(err) => {
            let code = if err.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Anchor(args) => cmd_anchor(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Compare(args) => cmd_compare(args),
        Command::VerifyChain(args) => cmd_verify_chain(args),
        Command::GenData(args) => cmd_gen_data(args),
    };
    if let Err(failure) = result {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code);
    }
}
