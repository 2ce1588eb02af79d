//! Property-based invariants across the library: canonical text round-trips,
//! probability and metric bounds, aggregation convexity, Merkle sensitivity,
//! centroid geometry, and ledger replay.

mod common;

use fedchain_core::anchoring::{build_merkle, canonicalize};
use fedchain_core::coordinator::{aggregate_cdw, aggregate_fedavg, ClientUpdate};
use fedchain_core::ledger::{verify_snapshot, Hash32, Ledger, TxPayload, VerifyOutcome};
use fedchain_core::metrics::{centroid_distance, ConfusionCounts};
use fedchain_core::model::{ModelKind, ModelParams, Record, FEATURE_COUNT, LR_PARAM_COUNT};
use proptest::prelude::*;

fn finite_f64() -> impl Strategy<Value = f64> {
    any::<u64>().prop_map(f64::from_bits).prop_filter("finite", |v| v.is_finite())
}

fn record_any() -> impl Strategy<Value = Record> {
    (proptest::collection::vec(finite_f64(), FEATURE_COUNT), 0u8..2).prop_map(|(f, label)| {
        let features: [f64; FEATURE_COUNT] = f.try_into().expect("exact length");
        Record::new(features, label).expect("finite features, binary label")
    })
}

fn record_tame() -> impl Strategy<Value = Record> {
    (proptest::collection::vec(-100.0f64..100.0, FEATURE_COUNT), 0u8..2).prop_map(
        |(f, label)| {
            let features: [f64; FEATURE_COUNT] = f.try_into().expect("exact length");
            Record::new(features, label).expect("finite features, binary label")
        },
    )
}

fn relabel(record: &Record, label: u8) -> Record {
    Record::new(*record.features(), label).expect("features already validated")
}

fn shift(record: &Record, delta: f64) -> Record {
    let mut features = *record.features();
    for v in &mut features {
        *v += delta;
    }
    Record::new(features, record.label()).expect("still finite")
}

fn scale(record: &Record, factor: f64) -> Record {
    let mut features = *record.features();
    for v in &mut features {
        *v *= factor;
    }
    Record::new(features, record.label()).expect("still finite")
}

proptest! {
    /// Canonical record text is lossless: every feature parses back to the
    /// identical bit pattern and the label survives.
    #[test]
    fn canonical_text_round_trips_exactly(record in record_any()) {
        let line = canonicalize(&record);
        let fields: Vec<&str> = line.split(',').collect();
        prop_assert_eq!(fields.len(), FEATURE_COUNT + 1);
        for (text, original) in fields[..FEATURE_COUNT].iter().zip(record.features()) {
            let parsed: f64 = text.parse().unwrap();
            prop_assert_eq!(parsed.to_bits(), original.to_bits());
        }
        prop_assert_eq!(fields[FEATURE_COUNT].parse::<u8>().unwrap(), record.label());
    }

    /// Model outputs are probabilities for any finite inputs.
    #[test]
    fn failure_probability_stays_in_unit_interval(
        seed in any::<u64>(),
        record in record_tame(),
        kind in prop_oneof![Just(ModelKind::Lr), Just(ModelKind::Nn)],
    ) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let params = common::random_params(kind, &mut rng);
        let p = params.failure_probability(record.features()).unwrap();
        prop_assert!((0.0..=1.0).contains(&p), "p = {p}");
    }

    /// Every metric is a ratio in [0, 1]; accuracy matches its definition;
    /// flags appear exactly when a denominator is empty.
    #[test]
    fn metrics_are_bounded_ratios(
        tp in 0u64..100_000,
        fp in 0u64..100_000,
        tn in 0u64..100_000,
        fn_ in 0u64..100_000,
    ) {
        let counts = ConfusionCounts {
            true_positives: tp,
            false_positives: fp,
            true_negatives: tn,
            false_negatives: fn_,
        };
        let m = counts.metrics();
        for v in [m.accuracy, m.precision, m.recall, m.f1] {
            prop_assert!((0.0..=1.0).contains(&v.value));
            prop_assert!(v.value.is_finite());
            if v.undefined {
                prop_assert_eq!(v.value, 0.0);
            }
        }
        let total = tp + fp + tn + fn_;
        if total > 0 {
            prop_assert_eq!(m.accuracy.value, (tp + tn) as f64 / total as f64);
        }
        prop_assert_eq!(m.precision.undefined, tp + fp == 0);
        prop_assert_eq!(m.recall.undefined, tp + fn_ == 0);
        prop_assert_eq!(m.f1.undefined, 2 * tp + fp + fn_ == 0);
    }

    /// Both aggregations stay inside the per-component envelope of their
    /// inputs and are insensitive to update order (up to roundoff).
    #[test]
    fn aggregation_is_convex_and_order_insensitive(
        raw in proptest::collection::vec(
            (proptest::collection::vec(-5.0f64..5.0, LR_PARAM_COUNT), 1u64..5000, 0.05f64..20.0),
            1..6,
        ),
    ) {
        let updates: Vec<ClientUpdate> = raw
            .into_iter()
            .enumerate()
            .map(|(i, (values, data_size, distance))| ClientUpdate {
                client_id: format!("c{i}"),
                params: ModelParams::from_values(ModelKind::Lr, values).unwrap(),
                data_size,
                distance,
            })
            .collect();
        let mut reversed = updates.clone();
        reversed.reverse();

        for aggregate in [aggregate_fedavg, aggregate_cdw] {
            let out = aggregate(&updates).unwrap();
            for idx in 0..LR_PARAM_COUNT {
                let lo = updates.iter().map(|u| u.params.values()[idx]).fold(f64::INFINITY, f64::min);
                let hi = updates.iter().map(|u| u.params.values()[idx]).fold(f64::NEG_INFINITY, f64::max);
                let v = out.values()[idx];
                prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "component {idx}: {v} outside [{lo}, {hi}]");
            }
            let flipped = aggregate(&reversed).unwrap();
            for (a, b) in out.values().iter().zip(flipped.values()) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }
    }

    /// The Merkle root pins both content and order: relabeling any record or
    /// swapping two distinct records changes it; rebuilding does not.
    #[test]
    fn merkle_root_pins_content_and_order(
        records in proptest::collection::vec(record_any(), 1..20),
        pick in any::<proptest::sample::Index>(),
        other in any::<proptest::sample::Index>(),
    ) {
        let root = build_merkle(&records).unwrap().root();
        prop_assert_eq!(build_merkle(&records).unwrap().root(), root);

        let i = pick.index(records.len());
        let mut relabeled = records.clone();
        relabeled[i] = relabel(&records[i], 1 - records[i].label());
        prop_assert_ne!(build_merkle(&relabeled).unwrap().root(), root);

        let j = other.index(records.len());
        if canonicalize(&records[i]) != canonicalize(&records[j]) {
            let mut swapped = records.clone();
            swapped.swap(i, j);
            prop_assert_ne!(build_merkle(&swapped).unwrap().root(), root);
        }
    }

    /// Centroid distance is translation-invariant and scales with the data.
    #[test]
    fn centroid_distance_follows_the_geometry(
        base in proptest::collection::vec(record_tame(), 2..12),
        delta in -10.0f64..10.0,
        factor in 0.1f64..10.0,
    ) {
        // Force both classes to be present.
        let mut records = base;
        records[0] = relabel(&records[0], 0);
        records[1] = relabel(&records[1], 1);

        let d = centroid_distance(&records).unwrap();
        prop_assert!(d.is_finite() && d >= 0.0);

        let shifted: Vec<Record> = records.iter().map(|r| shift(r, delta)).collect();
        let ds = centroid_distance(&shifted).unwrap();
        prop_assert!((ds - d).abs() <= 1e-9 * (1.0 + d), "shift changed {d} to {ds}");

        let scaled: Vec<Record> = records.iter().map(|r| scale(r, factor)).collect();
        let dm = centroid_distance(&scaled).unwrap();
        prop_assert!((dm - d * factor).abs() <= 1e-9 * (1.0 + d * factor), "scale {factor}: {dm} vs {}", d * factor);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Any semantically valid history seals into a chain that verifies and
    /// replays exactly, regardless of how submissions fall into blocks.
    #[test]
    fn valid_histories_always_verify_and_replay(
        ops in proptest::collection::vec(
            (0usize..3, 1u64..30, any::<[u8; 32]>(), any::<bool>()),
            1..40,
        ),
    ) {
        let orgs = ["org-a", "org-b", "org-c"];
        let mut ledger = Ledger::new(orgs, None).unwrap();
        let mut used = std::collections::BTreeSet::new();
        for (org, period, root, seal) in ops {
            if used.insert((org, period)) {
                ledger
                    .submit(
                        orgs[org],
                        TxPayload::AnchorRoot { period_time: period, root_hash: Hash32(root) },
                    )
                    .unwrap();
            }
            if seal {
                ledger.seal_block();
            }
        }
        ledger.seal_block();
        prop_assert_eq!(ledger.verify_chain(), VerifyOutcome::Ok);

        let snapshot = ledger.snapshot();
        prop_assert_eq!(verify_snapshot(&snapshot), VerifyOutcome::Ok);
        let restored = Ledger::from_snapshot(snapshot.clone()).unwrap();
        prop_assert_eq!(restored.snapshot(), snapshot);
    }
}
