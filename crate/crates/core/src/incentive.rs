//! Token incentives for training contributions. A client that was selected
//! for a round and finished training posts its contribution (data size and
//! class-centroid distance); the central organization then pays
//! `data_size + distance·C` tokens, with every step recorded on the ledger.
//! Payouts read only sealed state, so a status must be sealed before it pays.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{Ledger, LedgerError, TxPayload, TxReceipt};

/// Errors from contribution recording and payout.
#[derive(Debug, Error)]
pub enum IncentiveError {
    #[error("incentive constant must be finite and non-negative, got {got}")]
    InvalidConstant { got: f64 },
    #[error("round {round_no} already has a selection list")]
    RoundExists { round_no: u64 },
    #[error("round number must be positive")]
    InvalidRound,
    #[error("selection list must be non-empty with distinct clients")]
    InvalidSelection,
    #[error("'{address}' was not selected in round {round_no}")]
    NotSelected { address: String, round_no: u64 },
    #[error("no sealed finished contribution for '{address}' in round {round_no}")]
    ContributionMissing { address: String, round_no: u64 },
    #[error("'{address}' was already paid for round {round_no}")]
    AlreadyPaid { address: String, round_no: u64 },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// One settled payout, also surfaced in round reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoutEvent {
    pub round_no: u64,
    pub address: String,
    pub tokens: f64,
}

/// Per-client aggregate over all sealed contributions and payouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenReportRow {
    pub address: String,
    pub rounds_participated: u64,
    pub total_data_size: u64,
    /// Mean of the per-round distances, summed in round order; 0 when the
    /// client never contributed.
    pub mean_distance: f64,
    pub balance: f64,
}

/// Coordinator-side incentive bookkeeping: per-round selection lists (the
/// guard Clist), double-payment protection, and the payout log.
#[derive(Debug, Clone)]
pub struct IncentiveEngine {
    central: String,
    c: f64,
    selections: BTreeMap<u64, BTreeSet<String>>,
    paid: BTreeSet<(String, u64)>,
    payout_log: Vec<PayoutEvent>,
}

impl IncentiveEngine {
    /// `central` is the paying organization; `c` converts distance to tokens.
    pub fn new(central: &str, c: f64) -> Result<IncentiveEngine, IncentiveError> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(IncentiveError::InvalidConstant { got: c });
        }
        Ok(IncentiveEngine {
            central: central.to_string(),
            c,
            selections: BTreeMap::new(),
            paid: BTreeSet::new(),
            payout_log: Vec::new(),
        })
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    /// Records the round's selection list; contributions are only accepted
    /// from clients on it.
    pub fn register_round(
        &mut self,
        round_no: u64,
        clients: &[String],
    ) -> Result<(), IncentiveError> {
        if round_no == 0 {
            return Err(IncentiveError::InvalidRound);
        }
        let set: BTreeSet<String> = clients.iter().cloned().collect();
        if set.is_empty() || set.len() != clients.len() {
            return Err(IncentiveError::InvalidSelection);
        }
        if self.selections.contains_key(&round_no) {
            return Err(IncentiveError::RoundExists { round_no });
        }
        self.selections.insert(round_no, set);
        Ok(())
    }

    /// Posts a finished-training contribution to the ledger, enforcing the
    /// selection-list guard. Field validity is enforced by the ledger.
    pub fn upd_status(
        &self,
        ledger: &mut Ledger,
        address: &str,
        round_no: u64,
        data_size: u64,
        distance: f64,
    ) -> Result<TxReceipt, IncentiveError> {
        let selected = self
            .selections
            .get(&round_no)
            .is_some_and(|clist| clist.contains(address));
        if !selected {
            return Err(IncentiveError::NotSelected {
                address: address.to_string(),
                round_no,
            });
        }
        Ok(ledger.submit(
            address,
            TxPayload::UpdateStatus { round_no, data_size, distance: distance.into() },
        )?)
    }

    /// Pays `data_size + distance·C` tokens for one sealed contribution.
    /// Returns the amount awarded by this call and the payout receipt.
    pub fn cal_incentive(
        &mut self,
        ledger: &mut Ledger,
        address: &str,
        round_no: u64,
    ) -> Result<(f64, TxReceipt), IncentiveError> {
        let contribution = ledger
            .query_contri(address, round_no)
            .filter(|c| c.finished)
            .ok_or_else(|| IncentiveError::ContributionMissing {
                address: address.to_string(),
                round_no,
            })?;
        let key = (address.to_string(), round_no);
        if self.paid.contains(&key) {
            return Err(IncentiveError::AlreadyPaid { address: address.to_string(), round_no });
        }
        let tokens = contribution.data_size as f64 + contribution.distance.0 * self.c;
        let receipt = ledger.submit(
            &self.central,
            TxPayload::IncentivePayout { client: address.to_string(), tokens: tokens.into() },
        )?;
        self.paid.insert(key);
        self.payout_log.push(PayoutEvent {
            round_no,
            address: address.to_string(),
            tokens,
        });
        Ok((tokens, receipt))
    }

    /// Every payout made through this engine, in payment order.
    pub fn payout_log(&self) -> &[PayoutEvent] {
        &self.payout_log
    }
}

/// Per-client balances and contribution aggregates, derived purely from
/// sealed contract state; regenerating it from a chain replay is identical.
pub fn token_report(ledger: &Ledger) -> Vec<TokenReportRow> {
    let state = ledger.state();
    let mut addresses: BTreeSet<&String> = state.contri.keys().collect();
    addresses.extend(state.tokens.keys());

    addresses
        .into_iter()
        .map(|address| {
            let mut rounds = 0u64;
            let mut total_data_size = 0u64;
            let mut distance_sum = 0.0f64;
            if let Some(by_round) = state.contri.get(address) {
                for contribution in by_round.values() {
                    rounds += 1;
                    total_data_size += contribution.data_size;
                    distance_sum += contribution.distance.0;
                }
            }
            TokenReportRow {
                address: address.clone(),
                rounds_participated: rounds,
                total_data_size,
                mean_distance: if rounds == 0 { 0.0 } else { distance_sum / rounds as f64 },
                balance: ledger.query_tokens(address),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Ledger, IncentiveEngine) {
        let ledger = Ledger::new(["central", "client-1", "client-2"], None).unwrap();
        let engine = IncentiveEngine::new("central", 10.0).unwrap();
        (ledger, engine)
    }

    fn select(engine: &mut IncentiveEngine, round_no: u64) {
        engine
            .register_round(round_no, &["client-1".to_string(), "client-2".to_string()])
            .unwrap();
    }

    #[test]
    fn constant_must_be_finite_and_non_negative() {
        for c in [-1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                IncentiveEngine::new("central", c),
                Err(IncentiveError::InvalidConstant { .. })
            ));
        }
        assert!(IncentiveEngine::new("central", 0.0).is_ok());
    }

    #[test]
    fn selected_client_contributes_and_gets_paid() {
        let (mut ledger, mut engine) = setup();
        select(&mut engine, 1);
        engine.upd_status(&mut ledger, "client-1", 1, 1000, 2.5).unwrap();
        ledger.seal_block();

        let c = ledger.query_contri("client-1", 1).unwrap();
        assert!(c.finished);
        assert_eq!(c.data_size, 1000);
        assert_eq!(c.distance.0, 2.5);

        let (tokens, _) = engine.cal_incentive(&mut ledger, "client-1", 1).unwrap();
        ledger.seal_block();
        assert_eq!(tokens, 1025.0);
        assert_eq!(ledger.query_tokens("client-1"), 1025.0);
    }

    #[test]
    fn guards_reject_unselected_unsealed_and_double_payment() {
        let (mut ledger, mut engine) = setup();
        select(&mut engine, 1);

        // Not on the round's selection list.
        engine.register_round(2, &["client-2".to_string()]).unwrap();
        assert!(matches!(
            engine.upd_status(&mut ledger, "client-1", 2, 10, 1.0),
            Err(IncentiveError::NotSelected { round_no: 2, .. })
        ));

        // Unknown round entirely.
        assert!(matches!(
            engine.upd_status(&mut ledger, "client-1", 9, 10, 1.0),
            Err(IncentiveError::NotSelected { round_no: 9, .. })
        ));

        // Payout before the status is sealed.
        engine.upd_status(&mut ledger, "client-1", 1, 10, 1.0).unwrap();
        assert!(matches!(
            engine.cal_incentive(&mut ledger, "client-1", 1),
            Err(IncentiveError::ContributionMissing { .. })
        ));
        ledger.seal_block();

        engine.cal_incentive(&mut ledger, "client-1", 1).unwrap();
        ledger.seal_block();
        assert!(matches!(
            engine.cal_incentive(&mut ledger, "client-1", 1),
            Err(IncentiveError::AlreadyPaid { .. })
        ));

        // Double status post for the same round.
        assert!(matches!(
            engine.upd_status(&mut ledger, "client-1", 1, 10, 1.0),
            Err(IncentiveError::Ledger(LedgerError::DuplicateStatus { .. }))
        ));
    }

    #[test]
    fn balances_add_up_across_rounds_exactly() {
        let (mut ledger, _) = setup();
        let mut engine = IncentiveEngine::new("central", 100.0).unwrap();
        let rounds = [(1u64, 1000u64, 2.0f64), (2, 500, 4.0)];
        for (round_no, size, distance) in rounds {
            engine.register_round(round_no, &["client-1".to_string()]).unwrap();
            engine.upd_status(&mut ledger, "client-1", round_no, size, distance).unwrap();
            ledger.seal_block();
            engine.cal_incentive(&mut ledger, "client-1", round_no).unwrap();
            ledger.seal_block();
        }
        // 1000 + 2·100 = 1200, then 500 + 4·100 = 900.
        assert_eq!(ledger.query_tokens("client-1"), 2100.0);

        let expected: f64 =
            rounds.iter().fold(0.0, |acc, (_, s, d)| acc + (*s as f64 + d * 100.0));
        assert_eq!(ledger.query_tokens("client-1"), expected);
    }

    #[test]
    fn zero_constant_pays_data_size_only() {
        let (mut ledger, _) = setup();
        let mut engine = IncentiveEngine::new("central", 0.0).unwrap();
        engine.register_round(1, &["client-1".to_string()]).unwrap();
        engine.upd_status(&mut ledger, "client-1", 1, 1, 1e-9).unwrap();
        ledger.seal_block();
        let (tokens, _) = engine.cal_incentive(&mut ledger, "client-1", 1).unwrap();
        ledger.seal_block();
        assert_eq!(tokens, 1.0);
    }

    #[test]
    fn report_aggregates_and_survives_replay() {
        let (mut ledger, mut engine) = setup();
        for (round_no, size, distance) in [(1u64, 100u64, 1.0f64), (2, 300, 3.0)] {
            select(&mut engine, round_no);
            engine.upd_status(&mut ledger, "client-1", round_no, size, distance).unwrap();
            ledger.seal_block();
            engine.cal_incentive(&mut ledger, "client-1", round_no).unwrap();
            ledger.seal_block();
        }

        let report = token_report(&ledger);
        assert_eq!(report.len(), 1);
        let row = &report[0];
        assert_eq!(row.address, "client-1");
        assert_eq!(row.rounds_participated, 2);
        assert_eq!(row.total_data_size, 400);
        assert_eq!(row.mean_distance, 2.0);
        assert_eq!(row.balance, (100.0 + 1.0 * 10.0) + (300.0 + 3.0 * 10.0));

        let replayed =
            Ledger::from_snapshot(ledger.snapshot()).expect("snapshot verifies");
        assert_eq!(token_report(&replayed), report);

        assert_eq!(engine.payout_log().len(), 2);
        assert_eq!(engine.payout_log()[0].round_no, 1);
    }

    #[test]
    fn selection_registration_rules() {
        let (_, mut engine) = setup();
        assert!(matches!(
            engine.register_round(0, &["a".to_string()]),
            Err(IncentiveError::InvalidRound)
        ));
        assert!(matches!(
            engine.register_round(1, &[]),
            Err(IncentiveError::InvalidSelection)
        ));
        assert!(matches!(
            engine.register_round(1, &["a".to_string(), "a".to_string()]),
            Err(IncentiveError::InvalidSelection)
        ));
        engine.register_round(1, &["a".to_string()]).unwrap();
        assert!(matches!(
            engine.register_round(1, &["b".to_string()]),
            Err(IncentiveError::RoundExists { round_no: 1 })
        ));
    }
}
