//! Bitemporal records over simulation runs: monitors turn occurrences
//! into append-only records carrying both valid time (the simulated
//! clock) and transaction time (the append sequence), queryable as-of
//! any instant, as full history, or as-known-at any transaction.

use std::fmt::Write as _;

use crate::decimal::Decimal;
use crate::diag::SourcePos;
use crate::engine::{Occurrence, RuntimeError};
use crate::model::Value;

/// A point on the simulated timeline (non-negative by construction of
/// runs; the type itself is a plain fixed-point number).
pub type Instant = Decimal;

/// An unanchored signed duration in seconds.
pub type Interval = Decimal;

/// An anchored span [start, end], closed on both ends.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Period {
    pub start: Instant,
    pub end: Instant,
}

impl Period {
    pub fn new(start: Instant, end: Instant) -> Period {
        assert!(start <= end, "period start after end");
        Period { start, end }
    }
}

/// a − b, signed.
pub fn subtract(a: Instant, b: Instant) -> Interval {
    a.checked_sub(b).expect("interval out of range")
}

pub fn duration(p: Period) -> Interval {
    subtract(p.end, p.start)
}

/// Closed-bound overlap: touching endpoints count.
pub fn overlaps(p: Period, q: Period) -> bool {
    p.start <= q.end && q.start <= p.end
}

/// Closed-bound containment.
pub fn contains(p: Period, t: Instant) -> bool {
    p.start <= t && t <= p.end
}

/// One selective monitor: occurrences of `events` produce a record keyed
/// by `key_template` (payload fields in braces, e.g. `{account}.balance`)
/// carrying the named captures.
#[derive(Clone, PartialEq, Debug)]
pub struct Selection {
    pub key_template: String,
    pub events: Vec<String>,
    pub captures: Vec<String>,
    pub pos: SourcePos,
}

/// What to record during a run: everything, or selected events.
#[derive(Clone, PartialEq, Debug)]
pub enum MonitorSpec {
    /// One record per occurrence, keyed by event id, full payload.
    All,
    Selective(Vec<Selection>),
}

/// One bitemporal record. `txn` is the transaction time (assigned by
/// [`TemporalStore::append`]); valid_start/valid_end are the generating
/// occurrence's valid time.
#[derive(Clone, PartialEq, Debug)]
pub struct TemporalRecord {
    pub txn: usize,
    pub key: String,
    pub event: String,
    pub valid_start: Instant,
    pub valid_end: Instant,
    pub duration: Interval,
    pub payload: Vec<(String, Value)>,
}

/// Append-only record store. Records are never mutated or removed, and
/// `txn` always equals the record's position.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct TemporalStore {
    records: Vec<TemporalRecord>,
}

impl TemporalStore {
    /// Appends a record, assigning its transaction sequence.
    pub fn append(&mut self, mut record: TemporalRecord) {
        record.txn = self.records.len();
        self.records.push(record);
    }

    pub fn records(&self) -> &[TemporalRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct keys, sorted.
    pub fn keys(&self) -> Vec<&str> {
        let mut keys: Vec<&str> = self.records.iter().map(|r| r.key.as_str()).collect();
        keys.sort_unstable();
        keys.dedup();
        keys
    }

    /// The latest (highest-txn) record for `key` whose valid_start ≤ `t`.
    /// Ties at the boundary are included (≤, not <).
    pub fn as_of(&self, key: &str, t: Instant) -> Option<&TemporalRecord> {
        self.records.iter().rev().find(|r| r.key == key && r.valid_start <= t)
    }

    /// All records for `key`, in transaction (append) order.
    pub fn history(&self, key: &str) -> Vec<&TemporalRecord> {
        self.records.iter().filter(|r| r.key == key).collect()
    }

    /// The prefix of `key`'s history known at transaction `txn`
    /// (records with txn_seq ≤ txn; −1 yields nothing).
    pub fn as_known_at(&self, key: &str, txn: i64) -> Vec<&TemporalRecord> {
        self.records.iter().filter(|r| r.key == key && (r.txn as i64) <= txn).collect()
    }
}

impl FromIterator<TemporalRecord> for TemporalStore {
    fn from_iter<I: IntoIterator<Item = TemporalRecord>>(iter: I) -> TemporalStore {
        let mut store = TemporalStore::default();
        for record in iter {
            store.append(record);
        }
        store
    }
}

/// The meta-event: records an occurrence according to the monitor spec.
/// Returns zero or more records (txn unassigned; append assigns it).
pub fn meta_record(occ: &Occurrence, spec: &MonitorSpec) -> Result<Vec<TemporalRecord>, RuntimeError> {
    match spec {
        MonitorSpec::All => Ok(vec![TemporalRecord {
            txn: 0,
            key: occ.event.clone(),
            event: occ.event.clone(),
            valid_start: occ.valid_start,
            valid_end: occ.valid_end,
            duration: occ.duration,
            payload: occ.payload.clone(),
        }]),
        MonitorSpec::Selective(selections) => {
            let mut out = Vec::new();
            for selection in selections {
                if !selection.events.iter().any(|e| e == &occ.event) {
                    continue;
                }
                let key = render_key(&selection.key_template, occ, &selection.pos)?;
                let mut payload = Vec::with_capacity(selection.captures.len());
                for capture in &selection.captures {
                    let value = payload_field(occ, capture).ok_or_else(|| RuntimeError::Monitor {
                        message: format!(
                            "capture '{capture}' is not in the payload of event {}",
                            occ.event
                        ),
                        pos: selection.pos.clone(),
                    })?;
                    payload.push((capture.clone(), value.clone()));
                }
                out.push(TemporalRecord {
                    txn: 0,
                    key,
                    event: occ.event.clone(),
                    valid_start: occ.valid_start,
                    valid_end: occ.valid_end,
                    duration: occ.duration,
                    payload,
                });
            }
            Ok(out)
        }
    }
}

fn payload_field<'a>(occ: &'a Occurrence, name: &str) -> Option<&'a Value> {
    occ.payload.iter().find(|(k, _)| k == name).map(|(_, v)| v)
}

/// Instantiates a key template against an occurrence's payload:
/// `{name}` splices the field's raw value (text unquoted).
fn render_key(template: &str, occ: &Occurrence, pos: &SourcePos) -> Result<String, RuntimeError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        rest = &rest[open + 1..];
        let Some(close) = rest.find('}') else {
            return Err(RuntimeError::Monitor {
                message: format!("key template '{template}' has an unclosed brace"),
                pos: pos.clone(),
            });
        };
        let name = &rest[..close];
        let value = payload_field(occ, name).ok_or_else(|| RuntimeError::Monitor {
            message: format!(
                "key template field '{name}' is not in the payload of event {}",
                occ.event
            ),
            pos: pos.clone(),
        })?;
        out.push_str(&value.render_raw());
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Renders one record as a line:
/// `txn|key|event|valid_start|valid_end|duration|payload`.
pub fn record_line(record: &TemporalRecord) -> String {
    let mut line = String::new();
    let _ = write!(
        line,
        "{}|{}|{}|{}|{}|{}|",
        record.txn, record.key, record.event, record.valid_start, record.valid_end, record.duration
    );
    line.push_str(&crate::engine::render_payload(&record.payload));
    line
}

/// Renders the whole store, one line per record, trailing newline.
pub fn render_records(store: &TemporalStore) -> String {
    let mut out = String::new();
    for record in store.records() {
        out.push_str(&record_line(record));
        out.push('\n');
    }
    out
}

/// Parses a serialized record file back into a store. The payload is the
/// final field, so keys must not contain `|` (documented restriction).
pub fn parse_records(text: &str) -> Result<TemporalStore, String> {
    let mut store = TemporalStore::default();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let record =
            parse_record_line(line).map_err(|e| format!("record line {}: {e}", i + 1))?;
        if record.txn != store.len() {
            return Err(format!(
                "record line {}: transaction {} out of sequence (expected {})",
                i + 1,
                record.txn,
                store.len()
            ));
        }
        store.append(record);
    }
    Ok(store)
}

pub fn parse_record_line(line: &str) -> Result<TemporalRecord, String> {
    let mut parts = line.splitn(7, '|');
    let mut next = |what: &str| parts.next().ok_or_else(|| format!("missing {what} field"));
    let txn: usize = next("txn")?.parse().map_err(|_| "bad txn field".to_string())?;
    let key = next("key")?.to_string();
    let event = next("event")?.to_string();
    let valid_start: Decimal =
        next("valid_start")?.parse().map_err(|e| format!("bad valid_start: {e}"))?;
    let valid_end: Decimal =
        next("valid_end")?.parse().map_err(|e| format!("bad valid_end: {e}"))?;
    let duration: Decimal =
        next("duration")?.parse().map_err(|e| format!("bad duration: {e}"))?;
    let payload = parse_payload(next("payload")?)?;
    Ok(TemporalRecord { txn, key, event, valid_start, valid_end, duration, payload })
}

/// Parses `name=value,name=value` where values are quoted text (with
/// `\"` `\\` `\n` `\t` escapes), numbers, or true/false.
pub fn parse_payload(text: &str) -> Result<Vec<(String, Value)>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut at = 0;
    while at < chars.len() {
        let start = at;
        while at < chars.len() && chars[at] != '=' {
            at += 1;
        }
        if at == chars.len() {
            return Err("payload entry has no '='".into());
        }
        let name: String = chars[start..at].iter().collect();
        if name.is_empty() {
            return Err("payload entry has an empty name".into());
        }
        at += 1;
        let value = if chars.get(at) == Some(&'"') {
            at += 1;
            let mut s = String::new();
            loop {
                match chars.get(at) {
                    None => return Err("unterminated text value".into()),
                    Some('"') => {
                        at += 1;
                        break;
                    }
                    Some('\\') => {
                        at += 1;
                        match chars.get(at) {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            other => return Err(format!("bad escape {other:?}")),
                        }
                        at += 1;
                    }
                    Some(&c) => {
                        s.push(c);
                        at += 1;
                    }
                }
            }
            Value::Text(s)
        } else {
            let start = at;
            while at < chars.len() && chars[at] != ',' {
                at += 1;
            }
            let raw: String = chars[start..at].iter().collect();
            match raw.as_str() {
                "true" => Value::Bool(true),
                "false" => Value::Bool(false),
                _ => Value::Number(raw.parse().map_err(|e| format!("bad number '{raw}': {e}"))?),
            }
        };
        out.push((name, value));
        if chars.get(at) == Some(&',') {
            at += 1;
            if at == chars.len() {
                return Err("payload ends with a dangling comma".into());
            }
        } else if at < chars.len() {
            return Err("expected ',' between payload entries".into());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Cause;

    fn inst(v: i64) -> Instant {
        Decimal::from_int(v)
    }

    fn occ(event: &str, t: i64, payload: Vec<(String, Value)>) -> Occurrence {
        Occurrence {
            seq: 0,
            event: event.into(),
            valid_start: inst(t),
            valid_end: inst(t),
            duration: Decimal::ZERO,
            payload,
            urgency: None,
            cause: Cause::Stimulus(0),
        }
    }

    fn balance_store() -> TemporalStore {
        let mk = |event: &str, t: i64, balance: &str| TemporalRecord {
            txn: 0,
            key: "A1.balance".into(),
            event: event.into(),
            valid_start: inst(t),
            valid_end: inst(t),
            duration: Decimal::ZERO,
            payload: vec![
                ("account".to_string(), Value::Text("A1".into())),
                ("balance".to_string(), Value::Number(balance.parse().unwrap())),
            ],
        };
        [mk("E14", 0, "100.00"), mk("E12", 5, "70.00"), mk("E9", 9, "50.00")]
            .into_iter()
            .collect()
    }

    #[test]
    fn operators_follow_closed_bound_conventions() {
        let p = Period::new(inst(0), inst(5));
        let q = Period::new(inst(5), inst(9));
        assert_eq!(subtract(inst(9), inst(5)), inst(4));
        assert_eq!(subtract(inst(5), inst(9)), inst(-4));
        assert!(overlaps(p, q) && overlaps(q, p));
        assert!(!overlaps(p, Period::new(inst(6), inst(9))));
        assert_eq!(duration(Period::new(inst(2), inst(2))), Decimal::ZERO);
        assert!(contains(p, inst(0)) && contains(p, inst(5)));
        assert!(!contains(p, inst(6)));
    }

    #[test]
    fn as_of_picks_latest_at_or_before() {
        let store = balance_store();
        let at = |t: i64| store.as_of("A1.balance", inst(t)).map(|r| r.event.as_str());
        assert_eq!(at(-1), None);
        assert_eq!(at(0), Some("E14"));
        assert_eq!(at(6), Some("E12"));
        assert_eq!(at(9), Some("E9"));
        assert_eq!(at(100), Some("E9"));
        assert_eq!(store.as_of("nope", inst(100)), None);
    }

    #[test]
    fn history_and_as_known_at_are_txn_ordered_prefixes() {
        let store = balance_store();
        let events: Vec<&str> =
            store.history("A1.balance").iter().map(|r| r.event.as_str()).collect();
        assert_eq!(events, vec!["E14", "E12", "E9"]);
        assert!(store.as_known_at("A1.balance", -1).is_empty());
        assert_eq!(store.as_known_at("A1.balance", 1).len(), 2);
        assert_eq!(store.as_known_at("A1.balance", 2).len(), 3);
        assert_eq!(store.as_known_at("A1.balance", 99).len(), 3);
    }

    #[test]
    fn append_assigns_sequential_txns() {
        let store = balance_store();
        let txns: Vec<usize> = store.records().iter().map(|r| r.txn).collect();
        assert_eq!(txns, vec![0, 1, 2]);
        assert_eq!(store.keys(), vec!["A1.balance"]);
    }

    #[test]
    fn meta_record_all_mirrors_the_occurrence() {
        let o = occ("E7", 3, vec![("x".to_string(), Value::Number(Decimal::from_int(1)))]);
        let records = meta_record(&o, &MonitorSpec::All).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].key, "E7");
        assert_eq!(records[0].payload, o.payload);
    }

    #[test]
    fn meta_record_selective_renders_keys_and_captures() {
        let spec = MonitorSpec::Selective(vec![Selection {
            key_template: "{account}.balance".into(),
            events: vec!["E9".into(), "E12".into()],
            captures: vec!["account".into(), "balance".into()],
            pos: SourcePos::synthetic(),
        }]);
        let o = occ(
            "E9",
            9,
            vec![
                ("account".to_string(), Value::Text("A1".into())),
                ("balance".to_string(), Value::Number("50.00".parse().unwrap())),
            ],
        );
        let records = meta_record(&o, &spec).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].key, "A1.balance");
        assert_eq!(records[0].payload.len(), 2);
        // Unmatched events record nothing.
        assert!(meta_record(&occ("E7", 1, vec![]), &spec).unwrap().is_empty());
        // Missing template field is a monitor error.
        let err = meta_record(&occ("E9", 1, vec![]), &spec).unwrap_err();
        assert_eq!(err.code(), "T200");
    }

    #[test]
    fn record_lines_round_trip() {
        let store = balance_store();
        let text = render_records(&store);
        assert_eq!(
            text.lines().next().unwrap(),
            "0|A1.balance|E14|0.00|0.00|0.00|account=\"A1\",balance=100.00"
        );
        let back = parse_records(&text).unwrap();
        assert_eq!(back, store);
    }

    #[test]
    fn payload_parsing_rejects_malformed_entries() {
        for bad in ["noequals", "a=\"open", "a=1,", "a=1 b=2", "=1", "a=1.2345"] {
            assert!(parse_payload(bad).is_err(), "{bad}");
        }
        assert!(parse_payload("").unwrap().is_empty());
        let got = parse_payload("a=\"x,|=y\",b=-3.50,c=true").unwrap();
        assert_eq!(got[0].1, Value::Text("x,|=y".into()));
        assert_eq!(got[1].1, Value::Number("-3.50".parse().unwrap()));
        assert_eq!(got[2].1, Value::Bool(true));
    }
}
