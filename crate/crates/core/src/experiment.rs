//! End-to-end experiment driver: a declarative run configuration, data
//! sourcing (built-in scenario, synthesized, or CSV), the full multi-round
//! loop with per-round anchoring, and deterministic artifact emission
//! (config echo, round CSV, summary JSON, chain snapshot, token report).
//! Reruns of the same configuration produce byte-identical artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coordinator::{
    derive_seed, select_clients, AggregationMode, ClientRoundMetrics, Coordinator,
    CoordinatorError, RoundPlan, RoundReport,
};
use crate::datagen::{load_records, reference_scenario, synthesize, ClientDataset, DataError,
    DataGenSpec};
use crate::incentive::{token_report, IncentiveEngine, IncentiveError};
use crate::ledger::{Ledger, LedgerError, VerifyOutcome};
use crate::model::{ModelError, ModelKind, ModelParams, SgdConfig};

/// Ledger identity of the coordinator/aggregator organization.
pub const CENTRAL_ORG: &str = "central";

/// Errors from configuration validation, data loading, and run execution.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config field '{field}' {requirement}")]
    Config { field: &'static str, requirement: &'static str },
    #[error("training diverged in round {round_no} (epoch {epoch})")]
    Diverged { round_no: u64, epoch: usize },
    #[error("configs are not comparable: {reason}")]
    Incomparable { reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Coordinator(#[from] CoordinatorError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Incentive(#[from] IncentiveError),
}

// Divergence gets the round number attached; everything else passes through.
fn at_round(round_no: u64, err: CoordinatorError) -> ExperimentError {
    match err {
        CoordinatorError::Model(ModelError::Diverged { epoch }) => {
            ExperimentError::Diverged { round_no, epoch }
        }
        other => ExperimentError::Coordinator(other),
    }
}

/// One client loaded from CSV files on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvClient {
    pub client_id: String,
    /// Directory holding this client's `train.csv` and `test.csv`.
    pub dir: PathBuf,
}

/// Where a run's client datasets come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// The built-in four-client scenario with one far-separated client.
    Reference,
    /// Synthesize every client from an explicit generation spec.
    Generate { clients: Vec<DataGenSpec> },
    /// Load every client's `train.csv` and `test.csv` from a directory.
    Csv { clients: Vec<CsvClient> },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Reference
    }
}

fn default_rounds() -> u64 {
    100
}
fn default_epochs() -> usize {
    40
}
fn default_batch_size() -> usize {
    32
}
fn default_learning_rate() -> f64 {
    0.005
}
fn default_incentive_constant() -> f64 {
    100.0
}
fn default_anchor_every() -> u64 {
    1
}
fn default_master_seed() -> u64 {
    42
}
fn default_workers() -> usize {
    1
}

/// A complete, self-contained description of one run. Unspecified fields
/// take the reference defaults (100 rounds of 40-epoch minibatch SGD,
/// batches of 32, learning rate 0.005, incentive constant 100, anchoring
/// every round).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: AggregationMode,
    pub model: ModelKind,
    #[serde(default = "default_rounds")]
    pub rounds: u64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    /// Clients trained per federated round (K); absent means all of them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clients_per_round: Option<usize>,
    #[serde(default = "default_incentive_constant")]
    pub incentive_constant: f64,
    /// Anchor every client's training data each time this many rounds have
    /// elapsed, starting at round 1; the period time is the round number.
    #[serde(default = "default_anchor_every")]
    pub anchor_every: u64,
    #[serde(default = "default_master_seed")]
    pub master_seed: u64,
    /// Enables sealing proof-of-work at this difficulty when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pow_difficulty: Option<u64>,
    /// Training thread pool size; never affects results.
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub data: DataSource,
}

impl ExperimentConfig {
    /// Minimal config for `mode` and `model` with every default applied.
    pub fn new(mode: AggregationMode, model: ModelKind) -> ExperimentConfig {
        ExperimentConfig {
            mode,
            model,
            rounds: default_rounds(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            learning_rate: default_learning_rate(),
            clients_per_round: None,
            incentive_constant: default_incentive_constant(),
            anchor_every: default_anchor_every(),
            master_seed: default_master_seed(),
            pow_difficulty: None,
            workers: default_workers(),
            data: DataSource::default(),
        }
    }

    pub fn from_json(json: &str) -> Result<ExperimentConfig, ExperimentError> {
        let cfg: ExperimentConfig = serde_json::from_str(json)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |field, requirement| Err(ExperimentError::Config { field, requirement });
        if self.rounds == 0 {
            return fail("rounds", "must be at least 1");
        }
        if self.batch_size == 0 {
            return fail("batch_size", "must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return fail("learning_rate", "must be finite and non-negative");
        }
        if self.clients_per_round == Some(0) {
            return fail("clients_per_round", "must be at least 1 when set");
        }
        if !(self.incentive_constant.is_finite() && self.incentive_constant >= 0.0) {
            return fail("incentive_constant", "must be finite and non-negative");
        }
        if self.anchor_every == 0 {
            return fail("anchor_every", "must be at least 1");
        }
        if self.pow_difficulty == Some(0) {
            return fail("pow_difficulty", "must be at least 1 when set");
        }
        if self.workers == 0 {
            return fail("workers", "must be at least 1");
        }
        let ids: Vec<&str> = match &self.data {
            DataSource::Reference => Vec::new(),
            DataSource::Generate { clients } => {
                clients.iter().map(|c| c.client_id.as_str()).collect()
            }
            DataSource::Csv { clients } => {
                clients.iter().map(|c| c.client_id.as_str()).collect()
            }
        };
        match &self.data {
            DataSource::Reference => {}
            DataSource::Generate { clients } if clients.is_empty() => {
                return fail("data.clients", "must list at least one client");
            }
            DataSource::Csv { clients } if clients.is_empty() => {
                return fail("data.clients", "must list at least one client");
            }
            _ => {}
        }
        for id in ids {
            // Ids flow into CSV columns and file paths unquoted.
            if id.is_empty() || id.contains([',', '"', '\n', '\r', '/']) {
                return fail(
                    "data.clients.client_id",
                    "must be non-empty without commas, quotes, newlines, or slashes",
                );
            }
        }
        Ok(())
    }

    /// Loads or synthesizes every client's dataset, in configured order.
    pub fn load_clients(&self) -> Result<Vec<ClientDataset>, ExperimentError> {
        match &self.data {
            DataSource::Reference => Ok(reference_scenario()
                .iter()
                .map(synthesize)
                .collect::<Result<Vec<_>, DataError>>()?),
            DataSource::Generate { clients } => Ok(clients
                .iter()
                .map(synthesize)
                .collect::<Result<Vec<_>, DataError>>()?),
            DataSource::Csv { clients } => clients
                .iter()
                .map(|c| {
                    Ok(ClientDataset {
                        client_id: c.client_id.clone(),
                        train: load_records(&c.dir.join("train.csv"))?,
                        test: load_records(&c.dir.join("test.csv"))?,
                    })
                })
                .collect(),
        }
    }
}

/// End-of-run totals written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub mode: AggregationMode,
    pub model: ModelKind,
    pub rounds: u64,
    pub clients: Vec<String>,
    /// Cumulative model/data traffic in payload bytes, both directions.
    pub comm_total: u64,
    pub comm_uplink: u64,
    pub comm_downlink: u64,
    /// Every client's evaluation after the final round.
    pub final_metrics: Vec<ClientRoundMetrics>,
    /// Mean final-round accuracy over clients (undefined metrics count 0).
    pub mean_final_accuracy: f64,
    pub token_balances: BTreeMap<String, f64>,
    pub chain_height: u64,
    pub chain_verified: bool,
}

/// A finished run: its summary plus every round report, in round order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub reports: Vec<RoundReport>,
}

fn anchor_due(round_no: u64, anchor_every: u64) -> bool {
    (round_no - 1) % anchor_every == 0
}

/// Runs one experiment and writes `config.json`, `rounds.csv`,
/// `summary.json`, `chain.json`, and `tokens.csv` into `out_dir`.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<RunOutput, ExperimentError> {
    config.validate()?;
    let clients = config.load_clients()?;
    let ids: Vec<String> = clients.iter().map(|c| c.client_id.clone()).collect();
    let mut organizations = vec![CENTRAL_ORG.to_string()];
    organizations.extend(ids.iter().cloned());
    let ledger = Ledger::new(organizations, config.pow_difficulty)?;
    let engine = IncentiveEngine::new(CENTRAL_ORG, config.incentive_constant)?;
    let mut coordinator = Coordinator::new(clients, ledger, engine)?;
    coordinator.set_workers(config.workers);

    let initial =
        ModelParams::init(config.model, derive_seed(config.master_seed, "init", 0, 0));
    let sgd = SgdConfig {
        batch_size: config.batch_size,
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        seed: config.master_seed,
    };
    let k = config.clients_per_round.unwrap_or(ids.len());

    let mut reports = Vec::with_capacity(config.rounds as usize);
    match config.mode {
        AggregationMode::CdwFedavg | AggregationMode::Fedavg => {
            let mut global = initial;
            for round_no in 1..=config.rounds {
                if anchor_due(round_no, config.anchor_every) {
                    coordinator.anchor_all_clients(round_no, round_no, round_no)?;
                }
                let selected = select_clients(&ids, k, round_no, config.master_seed)
                    .map_err(|e| at_round(round_no, e))?;
                let plan = RoundPlan { round_no, selected, sgd: sgd.clone() };
                let (next, report) = coordinator
                    .run_round(&plan, &global, config.mode)
                    .map_err(|e| at_round(round_no, e))?;
                global = next;
                reports.push(report);
            }
        }
        AggregationMode::Centralized => {
            coordinator.record_centralized_upload();
            let mut params = initial;
            for round_no in 1..=config.rounds {
                if anchor_due(round_no, config.anchor_every) {
                    coordinator.anchor_all_clients(round_no, round_no, round_no)?;
                }
                let (next, report) = coordinator
                    .run_centralized_round(round_no, &params, &sgd)
                    .map_err(|e| at_round(round_no, e))?;
                params = next;
                reports.push(report);
            }
        }
        AggregationMode::Local => {
            let mut models = vec![initial; ids.len()];
            for round_no in 1..=config.rounds {
                if anchor_due(round_no, config.anchor_every) {
                    coordinator.anchor_all_clients(round_no, round_no, round_no)?;
                }
                let report = coordinator
                    .run_local_round(round_no, &mut models, &sgd)
                    .map_err(|e| at_round(round_no, e))?;
                reports.push(report);
            }
        }
    }

    let final_metrics = reports
        .last()
        .map(|r| r.client_metrics.clone())
        .expect("rounds >= 1 is validated");
    let mean_final_accuracy = final_metrics
        .iter()
        .map(|m| m.metrics.accuracy.value)
        .sum::<f64>()
        / final_metrics.len().max(1) as f64;
    let token_balances: BTreeMap<String, f64> = token_report(&coordinator.ledger)
        .into_iter()
        .map(|row| (row.address, row.balance))
        .collect();
    let summary = RunSummary {
        mode: config.mode,
        model: config.model,
        rounds: config.rounds,
        clients: ids,
        comm_total: coordinator.comm().total(),
        comm_uplink: coordinator.comm().uplink_total(),
        comm_downlink: coordinator.comm().downlink_total(),
        final_metrics,
        mean_final_accuracy,
        token_balances,
        chain_height: coordinator.ledger.height(),
        chain_verified: coordinator.ledger.verify_chain() == VerifyOutcome::Ok,
    };

    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("config.json"), to_pretty_json(config)?)?;
    fs::write(out_dir.join("rounds.csv"), rounds_csv(&reports))?;
    fs::write(out_dir.join("summary.json"), to_pretty_json(&summary)?)?;
    fs::write(out_dir.join("chain.json"), coordinator.ledger.snapshot().to_json())?;
    fs::write(out_dir.join("tokens.csv"), tokens_csv(&coordinator.ledger))?;
    Ok(RunOutput { summary, reports })
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// One row per (round, client): confusion counts, metrics, this client's
/// aggregation weight and token payout (blank when not applicable), and the
/// round's traffic totals.
pub fn rounds_csv(reports: &[RoundReport]) -> String {
    let mut out = String::from(
        "round,mode,client_id,true_positives,false_positives,true_negatives,\
         false_negatives,accuracy,precision,recall,f1,undefined,weight,tokens,\
         uplink_bytes,downlink_bytes\n",
    );
    for report in reports {
        for m in &report.client_metrics {
            let weight = report
                .aggregation_weights
                .iter()
                .find(|w| w.client_id == m.client_id)
                .map(|w| w.weight.to_string())
                .unwrap_or_default();
            let tokens = report
                .token_events
                .iter()
                .find(|e| e.address == m.client_id)
                .map(|e| e.tokens.to_string())
                .unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                report.round_no,
                report.mode,
                m.client_id,
                m.confusion.true_positives,
                m.confusion.false_positives,
                m.confusion.true_negatives,
                m.confusion.false_negatives,
                m.metrics.accuracy.value,
                m.metrics.precision.value,
                m.metrics.recall.value,
                m.metrics.f1.value,
                m.metrics.undefined_flags(),
                weight,
                tokens,
                report.uplink_bytes,
                report.downlink_bytes,
            )
            .expect("writing to a String cannot fail");
        }
    }
    out
}

/// One row per client: participation, contributed data, mean distance, and
/// final token balance, all derived from the sealed chain.
pub fn tokens_csv(ledger: &Ledger) -> String {
    let mut out =
        String::from("address,rounds_participated,total_data_size,mean_distance,balance\n");
    for row in token_report(ledger) {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.address, row.rounds_participated, row.total_data_size, row.mean_distance,
            row.balance,
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Checks that a set of configs is a valid cross-mode comparison: at least
/// two, all valid, identical except for `mode`, and no repeated mode.
pub fn check_comparable(configs: &[ExperimentConfig]) -> Result<(), ExperimentError> {
    if configs.len() < 2 {
        return Err(ExperimentError::Incomparable {
            reason: "need at least two configs".into(),
        });
    }
    let mut modes = Vec::new();
    for config in configs {
        config.validate()?;
        if modes.contains(&config.mode) {
            return Err(ExperimentError::Incomparable {
                reason: format!("mode {} appears twice", config.mode),
            });
        }
        modes.push(config.mode);
        let mut aligned = config.clone();
        aligned.mode = configs[0].mode;
        if aligned != configs[0] {
            return Err(ExperimentError::Incomparable {
                reason: format!(
                    "config for mode {} differs from the first beyond its mode",
                    config.mode
                ),
            });
        }
    }
    Ok(())
}

/// Runs every config (artifacts land in `out_dir/<mode>/`) and writes the
/// aligned per-round metric table to `out_dir/comparison.csv`.
pub fn compare_experiments(
    configs: &[ExperimentConfig],
    out_dir: &Path,
) -> Result<Vec<RunOutput>, ExperimentError> {
    check_comparable(configs)?;
    let mut outputs = Vec::with_capacity(configs.len());
    for config in configs {
        let sub = out_dir.join(config.mode.to_string());
        outputs.push(run_experiment(config, &sub)?);
    }
    let mut csv = String::from("mode,round,client_id,accuracy,precision,recall,f1\n");
    for (config, output) in configs.iter().zip(&outputs) {
        for report in &output.reports {
            for m in &report.client_metrics {
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{}",
                    config.mode,
                    report.round_no,
                    m.client_id,
                    m.metrics.accuracy.value,
                    m.metrics.precision.value,
                    m.metrics.recall.value,
                    m.metrics.f1.value,
                )
                .expect("writing to a String cannot fail");
            }
        }
    }
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("comparison.csv"), csv)?;
    Ok(outputs)
}
