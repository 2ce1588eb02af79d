//! Round orchestration: client selection, local training, the two federated
//! aggregations (uniform FedAvg and centroid-distance-weighted CDW), the
//! centralized and local baselines, byte-exact communication accounting, and
//! the ledger/incentive choreography of one training round. Rounds are
//! atomic: a client failure aborts before any ledger write.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::anchoring::{anchor_period, AnchorError, AnchorPeriod};
use crate::datagen::ClientDataset;
use crate::incentive::{IncentiveEngine, IncentiveError, PayoutEvent};
use crate::ledger::{Hash32, Ledger, LedgerError};
use crate::metrics::{confusion, centroid_distance, ConfusionCounts, MetricSet, MetricsError};
use crate::model::{ModelError, ModelParams, SgdConfig, RECORD_PAYLOAD_BYTES};

/// Classification decision threshold used for all evaluations.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Errors from aggregation and round orchestration.
#[derive(Debug, Error)]
pub enum CoordinatorError {
    #[error("coordinator requires at least one client")]
    NoClients,
    #[error("client ids must be distinct")]
    DuplicateClientIds,
    #[error("client '{client}' is not in the registry")]
    UnknownClient { client: String },
    #[error("client '{client}' is not a registered ledger organization")]
    UnregisteredClient { client: String },
    #[error("client '{client}' has no training records")]
    EmptyTrainingData { client: String },
    #[error("client '{client}' has no test records")]
    EmptyTestData { client: String },
    #[error("merged training dataset is empty")]
    EmptyMergedDataset,
    #[error("round number must be positive")]
    InvalidRound,
    #[error("cannot select {k} clients from a registry of {n}")]
    SelectionSize { k: usize, n: usize },
    #[error("aggregation requires at least one update")]
    EmptyUpdateSet,
    #[error("updates mix different model kinds")]
    MixedModelKinds,
    #[error("client '{client}' reported a zero data size")]
    InvalidDataSize { client: String },
    #[error("client '{client}' has degenerate centroid distance {distance}")]
    DegenerateDistance { client: String, distance: f64 },
    #[error("aggregation weights must sum to a positive finite value")]
    NonPositiveWeightSum,
    #[error("run_round only handles federated modes, got {mode}")]
    NotFederated { mode: AggregationMode },
    #[error("expected {expected} local models, got {got}")]
    ModelCountMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Incentive(#[from] IncentiveError),
    #[error(transparent)]
    Anchor(#[from] AnchorError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// How the global model (or baseline) is produced each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    CdwFedavg,
    Fedavg,
    Centralized,
    Local,
}

impl AggregationMode {
    pub fn is_federated(self) -> bool {
        matches!(self, AggregationMode::CdwFedavg | AggregationMode::Fedavg)
    }
}

impl std::fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AggregationMode::CdwFedavg => "cdw_fedavg",
            AggregationMode::Fedavg => "fedavg",
            AggregationMode::Centralized => "centralized",
            AggregationMode::Local => "local",
        })
    }
}

impl std::str::FromStr for AggregationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cdw_fedavg" => Ok(AggregationMode::CdwFedavg),
            "fedavg" => Ok(AggregationMode::Fedavg),
            "centralized" => Ok(AggregationMode::Centralized),
            "local" => Ok(AggregationMode::Local),
            other => Err(format!(
                "unknown mode '{other}' (expected cdw_fedavg, fedavg, centralized, or local)"
            )),
        }
    }
}

/// Domain-separated seed derivation: every random decision in a run draws
/// from SHA-256(master, domain, a, b), so one master seed fixes everything.
pub fn derive_seed(master: u64, domain: &str, a: u64, b: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_be_bytes());
    h.update((domain.len() as u64).to_be_bytes());
    h.update(domain.as_bytes());
    h.update(a.to_be_bytes());
    h.update(b.to_be_bytes());
    let digest = h.finalize();
    u64::from_be_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

// All modes and clients share one training seed per round, so single-client
// federated, centralized-on-one-client, and local runs line up exactly.
fn round_sgd_config(base: &SgdConfig, round_no: u64) -> SgdConfig {
    SgdConfig { seed: derive_seed(base.seed, "round-sgd", round_no, 0), ..base.clone() }
}

// Trains every (start, data) job, fanning out over a fixed-size thread pool.
// Each job is an independent pure function, so the results and the
// first-failure semantics are identical for any worker count.
fn train_pool(
    jobs: &[(&ModelParams, &[crate::model::Record])],
    cfg: &SgdConfig,
    workers: usize,
) -> Vec<Result<ModelParams, ModelError>> {
    if workers <= 1 || jobs.len() <= 1 {
        return jobs.iter().map(|(params, records)| params.sgd_update(records, cfg)).collect();
    }
    let mut out: Vec<Option<Result<ModelParams, ModelError>>> =
        (0..jobs.len()).map(|_| None).collect();
    let chunk = jobs.len().div_ceil(workers);
    std::thread::scope(|scope| {
        for (js, os) in jobs.chunks(chunk).zip(out.chunks_mut(chunk)) {
            scope.spawn(move || {
                for ((params, records), slot) in js.iter().zip(os) {
                    *slot = Some(params.sgd_update(records, cfg));
                }
            });
        }
    });
    out.into_iter().map(|slot| slot.expect("every job slot is filled")).collect()
}

/// One client's contribution to a federated round.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub client_id: String,
    pub params: ModelParams,
    /// Number of training records actually used (s_k).
    pub data_size: u64,
    /// Class-centroid distance of the training data used (d_k).
    pub distance: f64,
}

/// The selection and training settings for one federated round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundPlan {
    pub round_no: u64,
    pub selected: Vec<String>,
    /// Base SGD settings; the per-round seed is derived from `sgd.seed`.
    pub sgd: SgdConfig,
}

/// Deterministic pseudorandom sample of `k` distinct clients for a round,
/// returned in registry order. `k` equal to the registry size selects
/// everyone.
pub fn select_clients(
    registry: &[String],
    k: usize,
    round_no: u64,
    seed: u64,
) -> Result<Vec<String>, CoordinatorError> {
    let n = registry.len();
    if k == 0 || k > n {
        return Err(CoordinatorError::SelectionSize { k, n });
    }
    if k == n {
        return Ok(registry.to_vec());
    }
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, "select", round_no, 0));
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let mut chosen: Vec<usize> = indices[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| registry[i].clone()).collect())
}

// Normalizing weights before the dot product makes the one-client and
// equal-weight cases exact: w/w = 1.0 and s/(s+s) = 0.5 have no rounding.
fn weighted_aggregate(
    updates: &[ClientUpdate],
    raw: &[f64],
) -> Result<ModelParams, CoordinatorError> {
    let first = updates.first().ok_or(CoordinatorError::EmptyUpdateSet)?;
    let kind = first.params.kind();
    if updates.iter().any(|u| u.params.kind() != kind) {
        return Err(CoordinatorError::MixedModelKinds);
    }
    let total: f64 = raw.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(CoordinatorError::NonPositiveWeightSum);
    }
    let mut acc = vec![0.0f64; kind.param_count()];
    for (update, &r) in updates.iter().zip(raw) {
        let w = r / total;
        for (a, v) in acc.iter_mut().zip(update.params.values()) {
            *a += w * v;
        }
    }
    Ok(ModelParams::from_values(kind, acc)?)
}

fn fedavg_raw(updates: &[ClientUpdate]) -> Result<Vec<f64>, CoordinatorError> {
    updates
        .iter()
        .map(|u| {
            if u.data_size == 0 {
                Err(CoordinatorError::InvalidDataSize { client: u.client_id.clone() })
            } else {
                Ok(u.data_size as f64)
            }
        })
        .collect()
}

fn cdw_raw(updates: &[ClientUpdate]) -> Result<Vec<f64>, CoordinatorError> {
    updates
        .iter()
        .map(|u| {
            if u.data_size == 0 {
                return Err(CoordinatorError::InvalidDataSize { client: u.client_id.clone() });
            }
            if !(u.distance.is_finite() && u.distance > 0.0) {
                return Err(CoordinatorError::DegenerateDistance {
                    client: u.client_id.clone(),
                    distance: u.distance,
                });
            }
            Ok(u.data_size as f64 / u.distance)
        })
        .collect()
}

/// Uniform federated averaging: Σ s_k·w_k / Σ s_k.
pub fn aggregate_fedavg(updates: &[ClientUpdate]) -> Result<ModelParams, CoordinatorError> {
    let raw = fedavg_raw(updates)?;
    weighted_aggregate(updates, &raw)
}

/// Centroid-distance-weighted averaging: Σ (s_k/d_k)·w_k / Σ (s_k/d_k);
/// equal distances cancel, reducing to [`aggregate_fedavg`].
pub fn aggregate_cdw(updates: &[ClientUpdate]) -> Result<ModelParams, CoordinatorError> {
    let raw = cdw_raw(updates)?;
    weighted_aggregate(updates, &raw)
}

/// The normalized per-client weights a federated mode would use; they sum
/// to 1 up to rounding.
pub fn aggregation_weights(
    mode: AggregationMode,
    updates: &[ClientUpdate],
) -> Result<Vec<f64>, CoordinatorError> {
    let raw = match mode {
        AggregationMode::Fedavg => fedavg_raw(updates)?,
        AggregationMode::CdwFedavg => cdw_raw(updates)?,
        _ => return Err(CoordinatorError::NotFederated { mode }),
    };
    if updates.is_empty() {
        return Err(CoordinatorError::EmptyUpdateSet);
    }
    let total: f64 = raw.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(CoordinatorError::NonPositiveWeightSum);
    }
    Ok(raw.into_iter().map(|r| r / total).collect())
}

/// One round's traffic in serialized payload bytes (no framing).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommEntry {
    pub round_no: u64,
    pub uplink_bytes: u64,
    pub downlink_bytes: u64,
}

/// Cumulative communication accounting across a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommLedger {
    entries: Vec<CommEntry>,
}

impl CommLedger {
    pub fn record(&mut self, round_no: u64, uplink_bytes: u64, downlink_bytes: u64) {
        self.entries.push(CommEntry { round_no, uplink_bytes, downlink_bytes });
    }

    pub fn entries(&self) -> &[CommEntry] {
        &self.entries
    }

    pub fn uplink_total(&self) -> u64 {
        self.entries.iter().map(|e| e.uplink_bytes).sum()
    }

    pub fn downlink_total(&self) -> u64 {
        self.entries.iter().map(|e| e.downlink_bytes).sum()
    }

    pub fn total(&self) -> u64 {
        self.uplink_total() + self.downlink_total()
    }
}

/// One client's evaluation in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientRoundMetrics {
    pub client_id: String,
    pub confusion: ConfusionCounts,
    pub metrics: MetricSet,
}

/// The aggregation weight actually applied to one client's update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub client_id: String,
    pub weight: f64,
}

/// Everything observable about one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round_no: u64,
    pub mode: AggregationMode,
    pub client_metrics: Vec<ClientRoundMetrics>,
    /// Empty for centralized and local modes.
    pub aggregation_weights: Vec<WeightEntry>,
    pub uplink_bytes: u64,
    pub downlink_bytes: u64,
    /// Empty for centralized and local modes.
    pub token_events: Vec<PayoutEvent>,
}

/// Drives rounds over a fixed client registry, one ledger, and one
/// incentive engine. Registry order is construction order.
#[derive(Debug, Clone)]
pub struct Coordinator {
    clients: Vec<ClientDataset>,
    pub ledger: Ledger,
    pub incentive: IncentiveEngine,
    comm: CommLedger,
    workers: usize,
}

impl Coordinator {
    /// Clients must have distinct ids, each registered on the ledger.
    pub fn new(
        clients: Vec<ClientDataset>,
        ledger: Ledger,
        incentive: IncentiveEngine,
    ) -> Result<Coordinator, CoordinatorError> {
        if clients.is_empty() {
            return Err(CoordinatorError::NoClients);
        }
        let ids: BTreeSet<&str> = clients.iter().map(|c| c.client_id.as_str()).collect();
        if ids.len() != clients.len() {
            return Err(CoordinatorError::DuplicateClientIds);
        }
        for client in &clients {
            if !ledger.is_registered(&client.client_id) {
                return Err(CoordinatorError::UnregisteredClient {
                    client: client.client_id.clone(),
                });
            }
        }
        Ok(Coordinator { clients, ledger, incentive, comm: CommLedger::default(), workers: 1 })
    }

    /// Sizes the training thread pool; zero clamps to one. Model outputs do
    /// not depend on this.
    pub fn set_workers(&mut self, workers: usize) {
        self.workers = workers.max(1);
    }

    pub fn clients(&self) -> &[ClientDataset] {
        &self.clients
    }

    pub fn client_ids(&self) -> Vec<String> {
        self.clients.iter().map(|c| c.client_id.clone()).collect()
    }

    pub fn comm(&self) -> &CommLedger {
        &self.comm
    }

    fn client(&self, id: &str) -> Result<&ClientDataset, CoordinatorError> {
        self.clients
            .iter()
            .find(|c| c.client_id == id)
            .ok_or_else(|| CoordinatorError::UnknownClient { client: id.to_string() })
    }

    /// Evaluates one parameter set on every client's test split.
    fn evaluate_on_all(
        &self,
        params: &ModelParams,
    ) -> Result<Vec<ClientRoundMetrics>, CoordinatorError> {
        self.clients
            .iter()
            .map(|c| {
                let counts = confusion(params, &c.test, DECISION_THRESHOLD)?;
                Ok(ClientRoundMetrics {
                    client_id: c.client_id.clone(),
                    confusion: counts,
                    metrics: counts.metrics(),
                })
            })
            .collect()
    }

    /// One federated round: train the selected clients from the global
    /// model, aggregate per `mode`, account the model traffic, record
    /// contributions and payouts on the ledger (two sealed blocks), and
    /// evaluate the new global model on every client. Any client failure
    /// aborts before the first ledger write.
    pub fn run_round(
        &mut self,
        plan: &RoundPlan,
        global: &ModelParams,
        mode: AggregationMode,
    ) -> Result<(ModelParams, RoundReport), CoordinatorError> {
        if !mode.is_federated() {
            return Err(CoordinatorError::NotFederated { mode });
        }
        if plan.round_no == 0 {
            return Err(CoordinatorError::InvalidRound);
        }
        let distinct: BTreeSet<&str> = plan.selected.iter().map(String::as_str).collect();
        if plan.selected.is_empty() || distinct.len() != plan.selected.len() {
            return Err(CoordinatorError::SelectionSize {
                k: plan.selected.len(),
                n: self.clients.len(),
            });
        }
        for client in &self.clients {
            if client.train.is_empty() {
                return Err(CoordinatorError::EmptyTrainingData {
                    client: client.client_id.clone(),
                });
            }
            if client.test.is_empty() {
                return Err(CoordinatorError::EmptyTestData {
                    client: client.client_id.clone(),
                });
            }
        }

        let cfg = round_sgd_config(&plan.sgd, plan.round_no);
        let selected: Vec<&ClientDataset> =
            plan.selected.iter().map(|id| self.client(id)).collect::<Result<_, _>>()?;
        let jobs: Vec<(&ModelParams, &[crate::model::Record])> =
            selected.iter().map(|c| (global, c.train.as_slice())).collect();
        let trained = train_pool(&jobs, &cfg, self.workers);
        let mut updates = Vec::with_capacity(selected.len());
        for (client, result) in selected.iter().zip(trained) {
            let params = result?;
            let distance = centroid_distance(&client.train)?;
            updates.push(ClientUpdate {
                client_id: client.client_id.clone(),
                params,
                data_size: client.train.len() as u64,
                distance,
            });
        }

        let new_global = match mode {
            AggregationMode::CdwFedavg => aggregate_cdw(&updates)?,
            AggregationMode::Fedavg => aggregate_fedavg(&updates)?,
            _ => unreachable!("federated modes checked above"),
        };
        let weights = aggregation_weights(mode, &updates)?;
        let weight_entries: Vec<WeightEntry> = updates
            .iter()
            .zip(&weights)
            .map(|(u, &weight)| WeightEntry { client_id: u.client_id.clone(), weight })
            .collect();

        // Each selected client uploads its update and downloads the global
        // model: K payloads each way.
        let payload = global.kind().payload_bytes();
        let k = updates.len() as u64;
        self.comm.record(plan.round_no, k * payload, k * payload);

        self.incentive.register_round(plan.round_no, &plan.selected)?;
        for update in &updates {
            self.incentive.upd_status(
                &mut self.ledger,
                &update.client_id,
                plan.round_no,
                update.data_size,
                update.distance,
            )?;
        }
        self.ledger.seal_block();
        let mut token_events = Vec::with_capacity(updates.len());
        for update in &updates {
            let (tokens, _) =
                self.incentive.cal_incentive(&mut self.ledger, &update.client_id, plan.round_no)?;
            token_events.push(PayoutEvent {
                round_no: plan.round_no,
                address: update.client_id.clone(),
                tokens,
            });
        }
        self.ledger.seal_block();

        let client_metrics = self.evaluate_on_all(&new_global)?;
        let report = RoundReport {
            round_no: plan.round_no,
            mode,
            client_metrics,
            aggregation_weights: weight_entries,
            uplink_bytes: k * payload,
            downlink_bytes: k * payload,
            token_events,
        };
        Ok((new_global, report))
    }

    /// Records the one-time upload of every client's raw training data to
    /// the central site: 145 bytes per record (18×8 features + 1 label).
    pub fn record_centralized_upload(&mut self) {
        let bytes: u64 =
            self.clients.iter().map(|c| c.train.len() as u64 * RECORD_PAYLOAD_BYTES).sum();
        self.comm.record(0, bytes, 0);
    }

    /// One centralized round: SGD over the merged training data of all
    /// clients, evaluated on every client with test records. No traffic
    /// beyond the one-time upload.
    pub fn run_centralized_round(
        &mut self,
        round_no: u64,
        params: &ModelParams,
        sgd: &SgdConfig,
    ) -> Result<(ModelParams, RoundReport), CoordinatorError> {
        if round_no == 0 {
            return Err(CoordinatorError::InvalidRound);
        }
        let merged: Vec<_> =
            self.clients.iter().flat_map(|c| c.train.iter().copied()).collect();
        if merged.is_empty() {
            return Err(CoordinatorError::EmptyMergedDataset);
        }
        let cfg = round_sgd_config(sgd, round_no);
        let new_params = params.sgd_update(&merged, &cfg)?;

        let client_metrics = self
            .clients
            .iter()
            .filter(|c| !c.test.is_empty())
            .map(|c| {
                let counts = confusion(&new_params, &c.test, DECISION_THRESHOLD)?;
                Ok(ClientRoundMetrics {
                    client_id: c.client_id.clone(),
                    confusion: counts,
                    metrics: counts.metrics(),
                })
            })
            .collect::<Result<Vec<_>, CoordinatorError>>()?;

        let report = RoundReport {
            round_no,
            mode: AggregationMode::Centralized,
            client_metrics,
            aggregation_weights: Vec::new(),
            uplink_bytes: 0,
            downlink_bytes: 0,
            token_events: Vec::new(),
        };
        Ok((new_params, report))
    }

    /// One local-baseline round: every client advances its own model on its
    /// own data; no communication at all. `models` is indexed like the
    /// registry and updated in place.
    pub fn run_local_round(
        &mut self,
        round_no: u64,
        models: &mut [ModelParams],
        sgd: &SgdConfig,
    ) -> Result<RoundReport, CoordinatorError> {
        if round_no == 0 {
            return Err(CoordinatorError::InvalidRound);
        }
        if models.len() != self.clients.len() {
            return Err(CoordinatorError::ModelCountMismatch {
                expected: self.clients.len(),
                got: models.len(),
            });
        }
        for client in &self.clients {
            if client.train.is_empty() {
                return Err(CoordinatorError::EmptyTrainingData {
                    client: client.client_id.clone(),
                });
            }
            if client.test.is_empty() {
                return Err(CoordinatorError::EmptyTestData {
                    client: client.client_id.clone(),
                });
            }
        }
        let cfg = round_sgd_config(sgd, round_no);
        let jobs: Vec<(&ModelParams, &[crate::model::Record])> = self
            .clients
            .iter()
            .zip(models.iter())
            .map(|(c, m)| (m, c.train.as_slice()))
            .collect();
        let trained = train_pool(&jobs, &cfg, self.workers);
        let mut client_metrics = Vec::with_capacity(self.clients.len());
        for ((client, model), result) in self.clients.iter().zip(models.iter_mut()).zip(trained)
        {
            *model = result?;
            let counts = confusion(model, &client.test, DECISION_THRESHOLD)?;
            client_metrics.push(ClientRoundMetrics {
                client_id: client.client_id.clone(),
                confusion: counts,
                metrics: counts.metrics(),
            });
        }
        Ok(RoundReport {
            round_no,
            mode: AggregationMode::Local,
            client_metrics,
            aggregation_weights: Vec::new(),
            uplink_bytes: 0,
            downlink_bytes: 0,
            token_events: Vec::new(),
        })
    }

    /// Runs the centralized baseline for `rounds` rounds from `initial`.
    pub fn run_centralized(
        &mut self,
        initial: &ModelParams,
        sgd: &SgdConfig,
        rounds: u64,
    ) -> Result<(Vec<ModelParams>, Vec<RoundReport>), CoordinatorError> {
        self.record_centralized_upload();
        let mut params = initial.clone();
        let mut series = Vec::with_capacity(rounds as usize);
        let mut reports = Vec::with_capacity(rounds as usize);
        for round_no in 1..=rounds {
            let (next, report) = self.run_centralized_round(round_no, &params, sgd)?;
            params = next;
            series.push(params.clone());
            reports.push(report);
        }
        Ok((series, reports))
    }

    /// Runs the local baseline for `rounds` rounds, every client starting
    /// from `initial`. Returns per-client model series in registry order.
    pub fn run_local(
        &mut self,
        initial: &ModelParams,
        sgd: &SgdConfig,
        rounds: u64,
    ) -> Result<(Vec<Vec<ModelParams>>, Vec<RoundReport>), CoordinatorError> {
        let mut models = vec![initial.clone(); self.clients.len()];
        let mut series = vec![Vec::with_capacity(rounds as usize); self.clients.len()];
        let mut reports = Vec::with_capacity(rounds as usize);
        for round_no in 1..=rounds {
            let report = self.run_local_round(round_no, &mut models, sgd)?;
            for (s, m) in series.iter_mut().zip(&models) {
                s.push(m.clone());
            }
            reports.push(report);
        }
        Ok((series, reports))
    }

    /// Anchors every client's training data for one period (skipping clients
    /// with no records, which Algorithm-style tree building cannot cover).
    /// Returns the anchored roots in registry order.
    pub fn anchor_all_clients(
        &mut self,
        period_id: u64,
        start: u64,
        end: u64,
    ) -> Result<Vec<(String, Hash32)>, CoordinatorError> {
        let mut roots = Vec::with_capacity(self.clients.len());
        for i in 0..self.clients.len() {
            if self.clients[i].train.is_empty() {
                continue;
            }
            let client_id = self.clients[i].client_id.clone();
            let mut period = AnchorPeriod::new(&client_id, period_id, start, end)?;
            period.record_count = self.clients[i].train.len() as u64;
            let records = &self.clients[i].train;
            let (root, _) = anchor_period(&mut self.ledger, &period, records)?;
            roots.push((client_id, root));
        }
        Ok(roots)
    }
}
