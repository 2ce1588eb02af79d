//! Simulated append-only blockchain with per-organization replicas and two
//! contract states: a root registry (anchored Merkle roots per client and
//! period) and an incentive registry (per-round contributions and token
//! balances). One process plays all organizations; sealing is single-writer
//! FIFO, timestamps are a logical counter, and optional proof-of-work
//! enforces a difficulty target as a structural property. Contract state is
//! a pure fold over the chain, so replay from genesis reproduces it exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Errors from ledger construction, submission, and snapshot handling.
#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("organization list must be non-empty with distinct, non-empty names")]
    InvalidOrganizations,
    #[error("proof-of-work difficulty must be at least 1")]
    InvalidDifficulty,
    #[error("sender '{sender}' is not a registered organization")]
    UnregisteredSender { sender: String },
    #[error("payout client '{client}' is not a registered organization")]
    UnregisteredClient { client: String },
    #[error("duplicate transaction id")]
    DuplicateTxId,
    #[error("'{sender}' already anchored period {period_time}")]
    DuplicateAnchor { sender: String, period_time: u64 },
    #[error("'{sender}' already posted a status for round {round_no}")]
    DuplicateStatus { sender: String, round_no: u64 },
    #[error("{what} must be {requirement}")]
    InvalidPayload { what: &'static str, requirement: &'static str },
    #[error("chain snapshot is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid chain at height {height}: {reason}")]
    InvalidChain { height: u64, reason: String },
    #[error("cached contract state does not match chain replay")]
    StateMismatch,
}

/// A SHA-256 digest, serialized as 64 lowercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Hash32(pub [u8; 32]);

impl Hash32 {
    pub fn zero() -> Hash32 {
        Hash32([0; 32])
    }

    pub fn to_hex(self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

impl fmt::Display for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

impl Serialize for Hash32 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Hash32 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        if s.len() != 64 || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(D::Error::custom("hash must be 64 lowercase hex characters"));
        }
        let bytes = hex::decode(&s).map_err(D::Error::custom)?;
        Ok(Hash32(bytes.try_into().expect("64 hex chars decode to 32 bytes")))
    }
}

/// An `f64` serialized as its IEEE-754 bit pattern (16 lowercase hex chars),
/// so every on-disk byte of the value is integrity-relevant; decimal text
/// can survive single-character edits that round-trip to the same float.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct BitsF64(pub f64);

impl From<f64> for BitsF64 {
    fn from(v: f64) -> Self {
        BitsF64(v)
    }
}

impl Serialize for BitsF64 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format!("{:016x}", self.0.to_bits()))
    }
}

impl<'de> Deserialize<'de> for BitsF64 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        if s.len() != 16 || !s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(D::Error::custom("float must be 16 lowercase hex characters"));
        }
        let bits = u64::from_str_radix(&s, 16).map_err(D::Error::custom)?;
        Ok(BitsF64(f64::from_bits(bits)))
    }
}

/// Contract calls carried by transactions.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxPayload {
    /// Root registry: commit a Merkle root for the sender's period.
    AnchorRoot { period_time: u64, root_hash: Hash32 },
    /// Incentive registry: record the sender's finished training round.
    UpdateStatus { round_no: u64, data_size: u64, distance: BitsF64 },
    /// Incentive registry: award tokens to a client.
    IncentivePayout { client: String, tokens: BitsF64 },
}

impl TxPayload {
    // Canonical encoding: 1-byte variant tag, fixed-width big-endian
    // integers, floats as big-endian bit patterns, strings length-prefixed.
    fn canonical_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(64);
        match self {
            TxPayload::AnchorRoot { period_time, root_hash } => {
                b.push(0);
                b.extend(period_time.to_be_bytes());
                b.extend(root_hash.0);
            }
            TxPayload::UpdateStatus { round_no, data_size, distance } => {
                b.push(1);
                b.extend(round_no.to_be_bytes());
                b.extend(data_size.to_be_bytes());
                b.extend(distance.0.to_bits().to_be_bytes());
            }
            TxPayload::IncentivePayout { client, tokens } => {
                b.push(2);
                b.extend((client.len() as u64).to_be_bytes());
                b.extend(client.as_bytes());
                b.extend(tokens.0.to_bits().to_be_bytes());
            }
        }
        b
    }
}

/// One submitted contract call with its content-derived id.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transaction {
    pub tx_id: Hash32,
    pub sender: String,
    pub payload: TxPayload,
    /// Logical clock value, strictly increasing across the chain.
    pub timestamp: u64,
}

fn tx_id_for(sender: &str, payload: &TxPayload, timestamp: u64) -> Hash32 {
    let mut h = Sha256::new();
    h.update((sender.len() as u64).to_be_bytes());
    h.update(sender.as_bytes());
    let body = payload.canonical_bytes();
    h.update((body.len() as u64).to_be_bytes());
    h.update(&body);
    h.update(timestamp.to_be_bytes());
    Hash32(h.finalize().into())
}

/// One sealed block. `nonce` is present exactly when proof-of-work is on.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub height: u64,
    pub prev_hash: Hash32,
    pub transactions: Vec<Transaction>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nonce: Option<u64>,
    pub block_hash: Hash32,
}

// The genesis block additionally commits to the chain configuration
// (organizations and difficulty), so config tampering breaks height 0.
fn block_hash_for(
    height: u64,
    prev_hash: &Hash32,
    transactions: &[Transaction],
    nonce: u64,
    config_digest: Option<&Hash32>,
) -> Hash32 {
    let mut h = Sha256::new();
    h.update(height.to_be_bytes());
    h.update(prev_hash.0);
    h.update((transactions.len() as u64).to_be_bytes());
    for tx in transactions {
        h.update(tx.tx_id.0);
    }
    h.update(nonce.to_be_bytes());
    if let Some(digest) = config_digest {
        h.update(digest.0);
    }
    Hash32(h.finalize().into())
}

fn config_digest(organizations: &BTreeSet<String>, pow_difficulty: Option<u64>) -> Hash32 {
    let mut h = Sha256::new();
    h.update((organizations.len() as u64).to_be_bytes());
    for org in organizations {
        h.update((org.len() as u64).to_be_bytes());
        h.update(org.as_bytes());
    }
    h.update(pow_difficulty.unwrap_or(0).to_be_bytes());
    Hash32(h.finalize().into())
}

/// floor(2^256 / difficulty) as a 32-byte big-endian integer; block hashes
/// must compare below it. Difficulty 1 saturates to all-ones (no constraint).
pub fn difficulty_target(difficulty: u64) -> [u8; 32] {
    if difficulty == 1 {
        return [0xff; 32];
    }
    // Byte-wise long division of the 33-byte value 2^256 by `difficulty`.
    let mut quotient = [0u8; 33];
    let mut numerator = [0u8; 33];
    numerator[0] = 1;
    let mut rem: u128 = 0;
    for (q, &n) in quotient.iter_mut().zip(&numerator) {
        let cur = (rem << 8) + u128::from(n);
        *q = (cur / u128::from(difficulty)) as u8;
        rem = cur % u128::from(difficulty);
    }
    // difficulty ≥ 2 keeps the quotient below 2^256, so byte 0 is zero.
    quotient[1..].try_into().expect("quotient fits in 32 bytes")
}

fn hash_below_target(hash: &Hash32, target: &[u8; 32]) -> bool {
    hash.0.as_slice() < target.as_slice()
}

/// Sealed-round contribution stored in the incentive registry.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contribution {
    pub finished: bool,
    pub data_size: u64,
    pub distance: BitsF64,
}

/// Pure fold of the chain's transactions: anchored roots keyed by
/// (client, period time), contributions keyed by (client, round), and token
/// balances.
#[derive(Clone, Default, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractState {
    pub root_registry: BTreeMap<String, BTreeMap<u64, Hash32>>,
    pub contri: BTreeMap<String, BTreeMap<u64, Contribution>>,
    pub tokens: BTreeMap<String, BitsF64>,
}

impl ContractState {
    fn apply(&mut self, tx: &Transaction) {
        match &tx.payload {
            TxPayload::AnchorRoot { period_time, root_hash } => {
                self.root_registry
                    .entry(tx.sender.clone())
                    .or_default()
                    .insert(*period_time, *root_hash);
            }
            TxPayload::UpdateStatus { round_no, data_size, distance } => {
                self.contri.entry(tx.sender.clone()).or_default().insert(
                    *round_no,
                    Contribution { finished: true, data_size: *data_size, distance: *distance },
                );
            }
            TxPayload::IncentivePayout { client, tokens } => {
                let balance = self.tokens.entry(client.clone()).or_insert(BitsF64(0.0));
                balance.0 += tokens.0;
            }
        }
    }
}

/// Proof of inclusion handed back by [`Ledger::submit`].
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct TxReceipt {
    /// Height of the block that will contain (after sealing: contains) the tx.
    pub height: u64,
    /// Position within that block.
    pub index: usize,
    pub tx_id: Hash32,
}

/// Result of full-chain verification.
#[derive(Clone, PartialEq, Debug)]
pub enum VerifyOutcome {
    Ok,
    /// First height at which a hash, link, or transaction rule fails.
    BadBlock { height: u64, reason: String },
    /// Blocks are valid but the cached state is not their fold.
    StateMismatch,
}

/// Serialized form of a chain: configuration, blocks, and cached state.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSnapshot {
    pub organizations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pow_difficulty: Option<u64>,
    pub blocks: Vec<Block>,
    pub state: ContractState,
}

impl ChainSnapshot {
    /// Compact JSON; byte-identical across runs for identical chains.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<ChainSnapshot, LedgerError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// The simulated chain: single sealer, FIFO pending pool, per-organization
/// replicas, and the derived contract state.
#[derive(Clone, Debug)]
pub struct Ledger {
    organizations: BTreeSet<String>,
    pow_difficulty: Option<u64>,
    blocks: Vec<Block>,
    pending: Vec<Transaction>,
    state: ContractState,
    clock: u64,
    seen_tx_ids: BTreeSet<Hash32>,
    replicas: BTreeMap<String, Vec<Block>>,
}

impl Ledger {
    /// Creates a chain for the given organizations and seals its genesis
    /// block immediately. The genesis hash commits to the configuration.
    pub fn new<I, S>(organizations: I, pow_difficulty: Option<u64>) -> Result<Ledger, LedgerError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut orgs = BTreeSet::new();
        let mut count = 0usize;
        for org in organizations {
            let org = org.into();
            if org.is_empty() {
                return Err(LedgerError::InvalidOrganizations);
            }
            count += 1;
            orgs.insert(org);
        }
        if orgs.is_empty() || orgs.len() != count {
            return Err(LedgerError::InvalidOrganizations);
        }
        if pow_difficulty == Some(0) {
            return Err(LedgerError::InvalidDifficulty);
        }
        let replicas = orgs.iter().map(|o| (o.clone(), Vec::new())).collect();
        let mut ledger = Ledger {
            organizations: orgs,
            pow_difficulty,
            blocks: Vec::new(),
            pending: Vec::new(),
            state: ContractState::default(),
            clock: 0,
            seen_tx_ids: BTreeSet::new(),
            replicas,
        };
        ledger.seal_block();
        Ok(ledger)
    }

    pub fn organizations(&self) -> &BTreeSet<String> {
        &self.organizations
    }

    pub fn is_registered(&self, org: &str) -> bool {
        self.organizations.contains(org)
    }

    pub fn pow_difficulty(&self) -> Option<u64> {
        self.pow_difficulty
    }

    /// Number of sealed blocks; the next block gets this height.
    pub fn height(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    pub fn state(&self) -> &ContractState {
        &self.state
    }

    /// One organization's full copy of the chain.
    pub fn replica(&self, org: &str) -> Option<&[Block]> {
        self.replicas.get(org).map(|b| b.as_slice())
    }

    /// Validates and enqueues a contract call from `sender`; the transaction
    /// is included in the next sealed block, FIFO.
    pub fn submit(&mut self, sender: &str, payload: TxPayload) -> Result<TxReceipt, LedgerError> {
        if !self.is_registered(sender) {
            return Err(LedgerError::UnregisteredSender { sender: sender.to_string() });
        }
        self.validate_payload(sender, &payload)?;
        let timestamp = self.clock;
        let tx_id = tx_id_for(sender, &payload, timestamp);
        if !self.seen_tx_ids.insert(tx_id) {
            return Err(LedgerError::DuplicateTxId);
        }
        self.clock += 1;
        let receipt = TxReceipt { height: self.height(), index: self.pending.len(), tx_id };
        self.pending.push(Transaction {
            tx_id,
            sender: sender.to_string(),
            payload,
            timestamp,
        });
        Ok(receipt)
    }

    // Semantic rules checked against sealed state plus the pending pool, so
    // invalid calls are rejected at submission, never at sealing.
    fn validate_payload(&self, sender: &str, payload: &TxPayload) -> Result<(), LedgerError> {
        match payload {
            TxPayload::AnchorRoot { period_time, .. } => {
                let sealed = self
                    .state
                    .root_registry
                    .get(sender)
                    .is_some_and(|periods| periods.contains_key(period_time));
                let queued = self.pending.iter().any(|tx| {
                    tx.sender == sender
                        && matches!(&tx.payload,
                            TxPayload::AnchorRoot { period_time: p, .. } if p == period_time)
                });
                if sealed || queued {
                    return Err(LedgerError::DuplicateAnchor {
                        sender: sender.to_string(),
                        period_time: *period_time,
                    });
                }
            }
            TxPayload::UpdateStatus { round_no, data_size, distance } => {
                if *round_no == 0 {
                    return Err(LedgerError::InvalidPayload {
                        what: "round_no",
                        requirement: "positive",
                    });
                }
                if *data_size == 0 {
                    return Err(LedgerError::InvalidPayload {
                        what: "data_size",
                        requirement: "positive",
                    });
                }
                if !(distance.0.is_finite() && distance.0 > 0.0) {
                    return Err(LedgerError::InvalidPayload {
                        what: "distance",
                        requirement: "finite and positive",
                    });
                }
                let sealed = self
                    .state
                    .contri
                    .get(sender)
                    .is_some_and(|rounds| rounds.contains_key(round_no));
                let queued = self.pending.iter().any(|tx| {
                    tx.sender == sender
                        && matches!(&tx.payload,
                            TxPayload::UpdateStatus { round_no: r, .. } if r == round_no)
                });
                if sealed || queued {
                    return Err(LedgerError::DuplicateStatus {
                        sender: sender.to_string(),
                        round_no: *round_no,
                    });
                }
            }
            TxPayload::IncentivePayout { client, tokens } => {
                if !self.is_registered(client) {
                    return Err(LedgerError::UnregisteredClient { client: client.clone() });
                }
                if !(tokens.0.is_finite() && tokens.0 >= 0.0) {
                    return Err(LedgerError::InvalidPayload {
                        what: "tokens",
                        requirement: "finite and non-negative",
                    });
                }
            }
        }
        Ok(())
    }

    /// Seals the pending pool (possibly empty) into the next block, applies
    /// its transactions to the contract state, and distributes the block to
    /// every organization's replica.
    pub fn seal_block(&mut self) -> &Block {
        let transactions = std::mem::take(&mut self.pending);
        let height = self.height();
        let prev_hash =
            self.blocks.last().map_or_else(Hash32::zero, |b| b.block_hash);
        let genesis_digest = if height == 0 {
            Some(config_digest(&self.organizations, self.pow_difficulty))
        } else {
            None
        };

        let (nonce, block_hash) = match self.pow_difficulty {
            None => {
                (None, block_hash_for(height, &prev_hash, &transactions, 0, genesis_digest.as_ref()))
            }
            Some(difficulty) => {
                let target = difficulty_target(difficulty);
                let mut nonce = 0u64;
                loop {
                    let hash = block_hash_for(
                        height,
                        &prev_hash,
                        &transactions,
                        nonce,
                        genesis_digest.as_ref(),
                    );
                    if hash_below_target(&hash, &target) {
                        break (Some(nonce), hash);
                    }
                    nonce += 1;
                }
            }
        };

        for tx in &transactions {
            self.state.apply(tx);
        }
        let block = Block { height, prev_hash, transactions, nonce, block_hash };
        for replica in self.replicas.values_mut() {
            replica.push(block.clone());
        }
        self.blocks.push(block);
        self.blocks.last().expect("block just pushed")
    }

    /// Anchored root for one client and period, if sealed.
    pub fn query_root(&self, client: &str, period_time: u64) -> Option<Hash32> {
        self.state.root_registry.get(client)?.get(&period_time).copied()
    }

    /// Token balance; addresses without payouts report zero.
    pub fn query_tokens(&self, address: &str) -> f64 {
        self.state.tokens.get(address).map_or(0.0, |b| b.0)
    }

    /// Sealed contribution for one client and round, if any.
    pub fn query_contri(&self, address: &str, round_no: u64) -> Option<Contribution> {
        self.state.contri.get(address)?.get(&round_no).copied()
    }

    /// Re-validates every block hash, link, transaction rule, and the cached
    /// state against a full replay from genesis.
    pub fn verify_chain(&self) -> VerifyOutcome {
        verify_snapshot(&self.snapshot())
    }

    /// Serializes the sealed chain; pending transactions are not included.
    pub fn snapshot(&self) -> ChainSnapshot {
        ChainSnapshot {
            organizations: self.organizations.iter().cloned().collect(),
            pow_difficulty: self.pow_difficulty,
            blocks: self.blocks.clone(),
            state: self.state.clone(),
        }
    }

    /// Rebuilds a live ledger from a snapshot, fully re-verifying it first.
    pub fn from_snapshot(snapshot: ChainSnapshot) -> Result<Ledger, LedgerError> {
        match verify_snapshot(&snapshot) {
            VerifyOutcome::Ok => {}
            VerifyOutcome::BadBlock { height, reason } => {
                return Err(LedgerError::InvalidChain { height, reason });
            }
            VerifyOutcome::StateMismatch => return Err(LedgerError::StateMismatch),
        }
        let organizations: BTreeSet<String> = snapshot.organizations.iter().cloned().collect();
        let mut seen_tx_ids = BTreeSet::new();
        let mut clock = 0;
        for block in &snapshot.blocks {
            for tx in &block.transactions {
                seen_tx_ids.insert(tx.tx_id);
                clock = clock.max(tx.timestamp + 1);
            }
        }
        let replicas =
            organizations.iter().map(|o| (o.clone(), snapshot.blocks.clone())).collect();
        Ok(Ledger {
            organizations,
            pow_difficulty: snapshot.pow_difficulty,
            blocks: snapshot.blocks,
            pending: Vec::new(),
            state: snapshot.state,
            clock,
            seen_tx_ids,
            replicas,
        })
    }
}

/// Static full verification of a snapshot: block hashes and links, nonce
/// presence, PoW targets, transaction ids and rules, timestamp monotonicity,
/// and a state replay compared against the cached state.
pub fn verify_snapshot(snapshot: &ChainSnapshot) -> VerifyOutcome {
    let bad = |height: u64, reason: &str| VerifyOutcome::BadBlock {
        height,
        reason: reason.to_string(),
    };

    let organizations: BTreeSet<String> = snapshot.organizations.iter().cloned().collect();
    if organizations.is_empty()
        || organizations.len() != snapshot.organizations.len()
        || organizations.iter().any(|o| o.is_empty())
    {
        return bad(0, "invalid organization list");
    }
    if snapshot.pow_difficulty == Some(0) {
        return bad(0, "invalid proof-of-work difficulty");
    }
    if snapshot.blocks.is_empty() {
        return bad(0, "missing genesis block");
    }

    let target = snapshot.pow_difficulty.map(difficulty_target);
    let genesis_digest = config_digest(&organizations, snapshot.pow_difficulty);

    let mut replayed = ContractState::default();
    let mut seen_tx_ids: BTreeSet<Hash32> = BTreeSet::new();
    let mut last_timestamp: Option<u64> = None;
    let mut prev_hash = Hash32::zero();

    for (i, block) in snapshot.blocks.iter().enumerate() {
        let height = i as u64;
        if block.height != height {
            return bad(height, "height out of sequence");
        }
        if block.prev_hash != prev_hash {
            return bad(height, "broken previous-hash link");
        }
        match (snapshot.pow_difficulty, block.nonce) {
            (None, Some(_)) => return bad(height, "nonce present without proof-of-work"),
            (Some(_), None) => return bad(height, "nonce missing under proof-of-work"),
            _ => {}
        }
        for tx in &block.transactions {
            if !organizations.contains(&tx.sender) {
                return bad(height, "transaction sender not registered");
            }
            if let Err(e) = check_tx_rules(&replayed, &organizations, tx) {
                return VerifyOutcome::BadBlock { height, reason: e.to_string() };
            }
            if last_timestamp.is_some_and(|t| tx.timestamp <= t) {
                return bad(height, "non-monotonic transaction timestamp");
            }
            last_timestamp = Some(tx.timestamp);
            if tx.tx_id != tx_id_for(&tx.sender, &tx.payload, tx.timestamp) {
                return bad(height, "transaction id does not match contents");
            }
            if !seen_tx_ids.insert(tx.tx_id) {
                return bad(height, "duplicate transaction id");
            }
            replayed.apply(tx);
        }
        let digest = if height == 0 { Some(&genesis_digest) } else { None };
        let expected = block_hash_for(
            height,
            &block.prev_hash,
            &block.transactions,
            block.nonce.unwrap_or(0),
            digest,
        );
        if block.block_hash != expected {
            return bad(height, "block hash does not match contents");
        }
        if let Some(target) = &target {
            if !hash_below_target(&block.block_hash, target) {
                return bad(height, "block hash above difficulty target");
            }
        }
        prev_hash = block.block_hash;
    }

    if replayed != snapshot.state {
        return VerifyOutcome::StateMismatch;
    }
    VerifyOutcome::Ok
}

// Replay-time semantic rules, mirroring submission-time validation.
fn check_tx_rules(
    state: &ContractState,
    organizations: &BTreeSet<String>,
    tx: &Transaction,
) -> Result<(), LedgerError> {
    match &tx.payload {
        TxPayload::AnchorRoot { period_time, .. } => {
            if state
                .root_registry
                .get(&tx.sender)
                .is_some_and(|p| p.contains_key(period_time))
            {
                return Err(LedgerError::DuplicateAnchor {
                    sender: tx.sender.clone(),
                    period_time: *period_time,
                });
            }
        }
        TxPayload::UpdateStatus { round_no, data_size, distance } => {
            if *round_no == 0 || *data_size == 0 || !(distance.0.is_finite() && distance.0 > 0.0)
            {
                return Err(LedgerError::InvalidPayload {
                    what: "status fields",
                    requirement: "positive round, size, and finite positive distance",
                });
            }
            if state.contri.get(&tx.sender).is_some_and(|r| r.contains_key(round_no)) {
                return Err(LedgerError::DuplicateStatus {
                    sender: tx.sender.clone(),
                    round_no: *round_no,
                });
            }
        }
        TxPayload::IncentivePayout { client, tokens } => {
            if !organizations.contains(client) {
                return Err(LedgerError::UnregisteredClient { client: client.clone() });
            }
            if !(tokens.0.is_finite() && tokens.0 >= 0.0) {
                return Err(LedgerError::InvalidPayload {
                    what: "tokens",
                    requirement: "finite and non-negative",
                });
            }
        }
    }
    Ok(())
}
