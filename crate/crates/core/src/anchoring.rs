//! Tamper-evident data anchoring: per-period Merkle trees over a client's
//! raw records, root commitment to the ledger's root registry, and the
//! dispute resolver that recomputes a root from claimed records and compares
//! it with the anchored one.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ledger::{Hash32, Ledger, LedgerError, TxPayload, TxReceipt};
use crate::model::Record;

/// Errors from tree construction, anchoring, and dispute resolution.
#[derive(Debug, Error)]
pub enum AnchorError {
    #[error("cannot build a Merkle tree over zero records")]
    EmptyPeriod,
    #[error("invalid anchoring period: {reason}")]
    InvalidPeriod { reason: &'static str },
    #[error("no anchored root for client '{client}' at period time {period_time}")]
    NoAnchor { client: String, period_time: u64 },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// One anchoring window of a client's data collection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorPeriod {
    pub period_id: u64,
    /// Logical time bounds, inclusive; the end time keys the root registry.
    pub start: u64,
    pub end: u64,
    pub client_id: String,
    pub record_count: u64,
}

impl AnchorPeriod {
    pub fn new(
        client_id: &str,
        period_id: u64,
        start: u64,
        end: u64,
    ) -> Result<AnchorPeriod, AnchorError> {
        if end < start {
            return Err(AnchorError::InvalidPeriod { reason: "end precedes start" });
        }
        Ok(AnchorPeriod {
            period_id,
            start,
            end,
            client_id: client_id.to_string(),
            record_count: 0,
        })
    }
}

/// Binary hash tree over the canonical strings of an ordered record list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MerkleTree {
    /// levels[0] are the leaves; the last level is the single root.
    levels: Vec<Vec<Hash32>>,
}

impl MerkleTree {
    pub fn root(&self) -> Hash32 {
        self.levels.last().expect("tree has at least one level")[0]
    }

    pub fn leaves(&self) -> &[Hash32] {
        &self.levels[0]
    }

    pub fn levels(&self) -> &[Vec<Hash32>] {
        &self.levels
    }
}

/// The canonical byte form of a record: the 18 features in shortest
/// round-trip decimal text, then the label, comma-separated, no whitespace.
/// Identical to a CSV data row, so anchored files audit byte-for-byte.
pub fn canonicalize(record: &Record) -> String {
    let mut s = String::with_capacity(FEATURE_TEXT_CAPACITY);
    for x in record.features() {
        s.push_str(&format!("{x},"));
    }
    s.push_str(&record.label().to_string());
    s
}

const FEATURE_TEXT_CAPACITY: usize = 24 * 19;

fn leaf_hash(record: &Record) -> Hash32 {
    Hash32(Sha256::digest(canonicalize(record).as_bytes()).into())
}

fn parent_hash(left: &Hash32, right: &Hash32) -> Hash32 {
    let mut h = Sha256::new();
    h.update(left.0);
    h.update(right.0);
    Hash32(h.finalize().into())
}

/// Builds the tree bottom-up: each parent hashes the concatenation of its
/// two children's raw digests, and an odd node at any level is paired with
/// itself. A single leaf is itself the root.
pub fn build_merkle(records: &[Record]) -> Result<MerkleTree, AnchorError> {
    if records.is_empty() {
        return Err(AnchorError::EmptyPeriod);
    }
    let mut levels = vec![records.iter().map(leaf_hash).collect::<Vec<_>>()];
    while levels.last().expect("non-empty").len() > 1 {
        let prev = levels.last().expect("non-empty");
        let mut next = Vec::with_capacity(prev.len().div_ceil(2));
        for pair in prev.chunks(2) {
            let left = &pair[0];
            let right = pair.get(1).unwrap_or(left);
            next.push(parent_hash(left, right));
        }
        levels.push(next);
    }
    Ok(MerkleTree { levels })
}

/// Builds the period's Merkle tree, anchors its root under the period end
/// time, and seals the block. Returns the root and its inclusion receipt.
pub fn anchor_period(
    ledger: &mut Ledger,
    period: &AnchorPeriod,
    records: &[Record],
) -> Result<(Hash32, TxReceipt), AnchorError> {
    let tree = build_merkle(records)?;
    let root = tree.root();
    let receipt = ledger.submit(
        &period.client_id,
        TxPayload::AnchorRoot { period_time: period.end, root_hash: root },
    )?;
    ledger.seal_block();
    Ok((root, receipt))
}

/// Outcome of an integrity audit for one period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DisputeOutcome {
    Verified,
    Mismatch { recomputed: Hash32, anchored: Hash32 },
}

/// Recomputes the Merkle root of the claimed records and compares it with
/// the root anchored for (client, period time). Pure read of the ledger.
pub fn resolve_dispute(
    ledger: &Ledger,
    client: &str,
    period_time: u64,
    claimed_records: &[Record],
) -> Result<DisputeOutcome, AnchorError> {
    let anchored = ledger
        .query_root(client, period_time)
        .ok_or_else(|| AnchorError::NoAnchor { client: client.to_string(), period_time })?;
    let recomputed = build_merkle(claimed_records)?.root();
    if recomputed == anchored {
        Ok(DisputeOutcome::Verified)
    } else {
        Ok(DisputeOutcome::Mismatch { recomputed, anchored })
    }
}
