//! Federated learning simulator with blockchain-anchored data integrity.
//!
//! The crate is organized as a pipeline: [`datagen`] produces per-client
//! sensor datasets, [`model`] trains local classifiers with minibatch SGD,
//! [`coordinator`] aggregates them (uniform or centroid-distance weighted),
//! [`anchoring`] commits Merkle roots of the raw data to the append-only
//! [`ledger`], [`incentive`] settles token rewards from sealed contribution
//! records, and [`experiment`] drives full multi-round runs and writes their
//! artifacts. Every code path is deterministic: all randomness flows from
//! explicit seeds, and repeated runs produce byte-identical outputs.

pub mod anchoring;
pub mod coordinator;
pub mod datagen;
pub mod experiment;
pub mod incentive;
pub mod ledger;
pub mod metrics;
pub mod model;

pub use anchoring::{anchor_period, build_merkle, resolve_dispute, DisputeOutcome, MerkleTree};
pub use coordinator::{
    aggregate_cdw, aggregate_fedavg, derive_seed, select_clients, AggregationMode, ClientUpdate,
    CommLedger, Coordinator, RoundPlan, RoundReport,
};
pub use datagen::{reference_scenario, synthesize, ClientDataset, DataGenSpec};
pub use experiment::{
    compare_experiments, run_experiment, DataSource, ExperimentConfig, ExperimentError,
    RunOutput, RunSummary,
};
pub use incentive::{token_report, IncentiveEngine, PayoutEvent, TokenReportRow};
pub use ledger::{
    verify_snapshot, ChainSnapshot, ContractState, Hash32, Ledger, Transaction, TxPayload,
    VerifyOutcome,
};
pub use metrics::{centroid_distance, confusion, ConfusionCounts, MetricSet, MetricValue};
pub use model::{ModelKind, ModelParams, Record, SgdConfig, FEATURE_COUNT};
