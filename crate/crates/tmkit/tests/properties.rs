//! Property tests: the parsers are total (no panics on any input), the
//! interval algebra obeys its laws, and the store's indexed queries
//! agree with naive linear scans.

use proptest::prelude::*;

use tmkit::decimal::Decimal;
use tmkit::dsl::{parse_behavior, parse_events, parse_model, parse_monitor, parse_scenario};
use tmkit::temporal::{
    contains, duration, overlaps, Period, TemporalRecord, TemporalStore,
};

fn tiny_model() -> tmkit::model::StaticModel {
    parse_model(
        "tiny.tm",
        "model Tiny {\n  thimac A {\n    create x\n    release y\n    transfer out\n  }\n  thimac B {\n    receive z\n  }\n  flow A.x -> A.y\n  flow A.y -> A.out\n  flow A.out -> B.z\n}\n",
    )
    .expect("fixture parses")
}

fn tiny_layer() -> tmkit::dynamics::EventLayer {
    let model = tiny_model();
    parse_events("tiny.tme", "events for Tiny {\n  event E1 over { A.x }\n}\n", &model)
        .expect("fixture parses")
}

/// Words and symbols that steer random input past the lexer and into
/// the deeper grammar rules.
fn dsl_fragment() -> impl Strategy<Value = &'static str> {
    proptest::sample::select(vec![
        "model", "thimac", "store", "flow", "trigger", "events", "event", "over", "refines",
        "lasts", "payload", "behavior", "start", "on", "when", "after", "and", "or", "scenario",
        "at", "inject", "urgency", "monitor", "all", "capture", "for", "into", "number", "text",
        "create", "process", "release", "transfer", "receive", "{", "}", "(", ")", "->", "~>",
        "=", "==", "!=", "<=", ">=", "<", ">", "+", "-", ":", ",", ".", "A", "B", "x", "y",
        "E1", "Tiny", "$f", "$amount", "1", "2.5", "-3", "0.01", "\"s\"", "\"{a}.k\"", "\n",
    ])
}

fn dsl_soup() -> impl Strategy<Value = String> {
    proptest::collection::vec(dsl_fragment(), 0..48).prop_map(|words| words.join(" "))
}

proptest! {
    #[test]
    fn parsers_never_panic_on_arbitrary_text(text in any::<String>()) {
        let _ = parse_model("f.tm", &text);
        let model = tiny_model();
        let _ = parse_events("f.tme", &text, &model);
        let layer = tiny_layer();
        let _ = parse_behavior("f.tmb", &text, &layer);
        let _ = parse_scenario("f.tms", &text, &model);
        let _ = parse_monitor("f.tmm", &text, &layer);
    }

    #[test]
    fn parsers_never_panic_on_keyword_soup(text in dsl_soup()) {
        let _ = parse_model("f.tm", &text);
        let model = tiny_model();
        let _ = parse_events("f.tme", &text, &model);
        let layer = tiny_layer();
        let _ = parse_behavior("f.tmb", &text, &layer);
        let _ = parse_scenario("f.tms", &text, &model);
        let _ = parse_monitor("f.tmm", &text, &layer);
    }

    #[test]
    fn a_parse_is_all_or_nothing(text in dsl_soup()) {
        // every reported problem carries a position inside the file,
        // and success means no diagnostics at all
        if let Err(diags) = parse_model("f.tm", &text) {
            prop_assert!(!diags.is_empty());
            for d in &diags {
                prop_assert_eq!(d.pos.file.as_str(), "f.tm");
                prop_assert!(d.pos.line >= 1 && d.pos.col >= 1);
            }
        }
    }

    #[test]
    fn durations_are_nonnegative_and_antisymmetric(
        a in -1_000_000i64..1_000_000,
        b in -1_000_000i64..1_000_000,
    ) {
        let (a, b) = (Decimal::from_hundredths(a), Decimal::from_hundredths(b));
        let p = Period::new(a.min(b), a.max(b));
        let d = duration(p);
        prop_assert!(!d.is_negative());
        let forward = tmkit::temporal::subtract(a, b);
        let backward = tmkit::temporal::subtract(b, a);
        prop_assert_eq!(forward.checked_add(backward).unwrap(), Decimal::ZERO);
    }

    #[test]
    fn containment_implies_overlap(
        a in -1_000_000i64..1_000_000,
        b in -1_000_000i64..1_000_000,
        t in -1_000_000i64..1_000_000,
    ) {
        let (a, b, t) = (
            Decimal::from_hundredths(a),
            Decimal::from_hundredths(b),
            Decimal::from_hundredths(t),
        );
        let p = Period::new(a.min(b), a.max(b));
        if contains(p, t) {
            prop_assert!(overlaps(p, Period::new(t, t)));
        }
    }

    #[test]
    fn overlap_is_symmetric_and_reflexive(
        a in -1_000_000i64..1_000_000,
        b in -1_000_000i64..1_000_000,
        c in -1_000_000i64..1_000_000,
        d in -1_000_000i64..1_000_000,
    ) {
        let h = Decimal::from_hundredths;
        let p = Period::new(h(a).min(h(b)), h(a).max(h(b)));
        let q = Period::new(h(c).min(h(d)), h(c).max(h(d)));
        prop_assert!(overlaps(p, p));
        prop_assert_eq!(overlaps(p, q), overlaps(q, p));
    }

    #[test]
    fn as_of_matches_a_linear_scan(
        entries in proptest::collection::vec((0u8..4, 0i64..5_000), 0..48),
        probes in proptest::collection::vec(-100i64..5_200, 1..16),
    ) {
        let store = build_store(&entries);
        for probe in probes {
            let t = Decimal::from_hundredths(probe);
            for key_idx in 0u8..4 {
                let key = format!("K{key_idx}");
                let got = store.as_of(&key, t).map(|r| r.txn);
                let want = linear_as_of(store.records(), &key, t);
                prop_assert_eq!(got, want, "key {} at {}", key, t);
            }
        }
    }

    #[test]
    fn as_known_at_is_a_prefix_of_history(
        entries in proptest::collection::vec((0u8..4, 0i64..5_000), 0..48),
        txn in -2i64..64,
    ) {
        let store = build_store(&entries);
        for key_idx in 0u8..4 {
            let key = format!("K{key_idx}");
            let known: Vec<usize> = store.as_known_at(&key, txn).iter().map(|r| r.txn).collect();
            let expected: Vec<usize> = store
                .history(&key)
                .iter()
                .filter(|r| (r.txn as i64) <= txn)
                .map(|r| r.txn)
                .collect();
            prop_assert_eq!(known, expected);

            let all: Vec<usize> = store.as_known_at(&key, i64::MAX).iter().map(|r| r.txn).collect();
            let history: Vec<usize> = store.history(&key).iter().map(|r| r.txn).collect();
            prop_assert_eq!(all, history);
        }
    }
}

fn build_store(entries: &[(u8, i64)]) -> TemporalStore {
    let mut store = TemporalStore::default();
    for (key_idx, at) in entries {
        let t = Decimal::from_hundredths(*at);
        store.append(TemporalRecord {
            txn: 0,
            key: format!("K{key_idx}"),
            event: "E1".into(),
            valid_start: t,
            valid_end: t,
            duration: Decimal::ZERO,
            payload: Vec::new(),
        });
    }
    store
}

fn linear_as_of(records: &[TemporalRecord], key: &str, t: Decimal) -> Option<usize> {
    let mut best = None;
    for record in records {
        if record.key == key && record.valid_start <= t {
            best = Some(record.txn);
        }
    }
    best
}
