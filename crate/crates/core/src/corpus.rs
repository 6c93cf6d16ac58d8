//! Bundled scenarios with golden verdicts.
//!
//! Goldens record the expected outcome of every clause, not just the
//! verdict, so a regression in any single clause shows up.

use std::collections::BTreeMap;
use std::fmt;

use serde::Deserialize;

use crate::intent::{check_capacity, evaluate_query, IntentConfig, Verdict};
use crate::scenario::{self, Query, Scenario};

pub struct CorpusEntry {
    pub name: &'static str,
    pub source: &'static str,
    pub golden: &'static str,
}

macro_rules! entry {
    ($name:literal) => {
        CorpusEntry {
            name: $name,
            source: include_str!(concat!("../corpus/", $name, ".intent")),
            golden: include_str!(concat!("../corpus/", $name, ".golden.json")),
        }
    };
}

static ENTRIES: [CorpusEntry; 13] = [
    entry!("unreliable_bomb"),
    entry!("dud_bomb"),
    entry!("fake_bomb"),
    entry!("bomb_alt_payout"),
    entry!("cowardly_jackal"),
    entry!("jackal_no_alternative"),
    entry!("smith_bribery"),
    entry!("burning_building"),
    entry!("burning_building_literal"),
    entry!("hunters"),
    entry!("hunters_uncommitted"),
    entry!("hunters_no_human"),
    entry!("dentist"),
];

/// Every bundled scenario, in declaration order.
pub fn corpus() -> &'static [CorpusEntry] {
    &ENTRIES
}

pub fn entry(name: &str) -> Option<&'static CorpusEntry> {
    ENTRIES.iter().find(|e| e.name == name)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Golden {
    /// Capacity requirements the scenario is meant to fail.
    pub capacity_failures: Vec<u8>,
    pub verdicts: Vec<GoldenVerdict>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct GoldenVerdict {
    pub query: String,
    pub holds: bool,
    pub clauses: BTreeMap<String, bool>,
}

impl CorpusEntry {
    pub fn scenario(&self) -> Scenario {
        scenario::parse(self.source).unwrap_or_else(|e| panic!("corpus entry {} does not parse: {e}", self.name))
    }

    pub fn golden(&self) -> Golden {
        serde_json::from_str(self.golden).unwrap_or_else(|e| panic!("golden for {} is malformed: {e}", self.name))
    }
}

/// `direct Payout = yes via Plant = yes`
pub fn query_label(q: &Query) -> String {
    let mut s = format!("{} {}", q.definition.keyword(), q.result);
    if let Some(a) = &q.action {
        s.push_str(&format!(" via {a}"));
    }
    s
}

/// Differences between computed and golden outcomes for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryReport {
    pub name: &'static str,
    pub mismatches: Vec<String>,
}

impl EntryReport {
    pub fn matches(&self) -> bool {
        self.mismatches.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusReport {
    pub entries: Vec<EntryReport>,
}

impl CorpusReport {
    pub fn matched(&self) -> usize {
        self.entries.iter().filter(|e| e.matches()).count()
    }

    pub fn all_match(&self) -> bool {
        self.matched() == self.entries.len()
    }
}

impl fmt::Display for CorpusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in self.entries.iter().filter(|e| !e.matches()) {
            writeln!(f, "{}: mismatch", e.name)?;
            for m in &e.mismatches {
                writeln!(f, "  {m}")?;
            }
        }
        writeln!(f, "{}/{} scenarios match", self.matched(), self.entries.len())
    }
}

fn compare(verdict: &Verdict, golden: &GoldenVerdict, out: &mut Vec<String>) {
    let label = &golden.query;
    for c in verdict.clauses() {
        match golden.clauses.get(c.id.as_str()) {
            None => out.push(format!("{label}: unexpected clause {}", c.id)),
            Some(&want) if want != c.holds => {
                out.push(format!("{label}: clause {} expected {want}, got {}", c.id, c.holds))
            }
            Some(_) => {}
        }
    }
    for id in golden.clauses.keys() {
        if !verdict.clauses().iter().any(|c| c.id.as_str() == id) {
            out.push(format!("{label}: missing clause {id}"));
        }
    }
    if verdict.holds() != golden.holds {
        out.push(format!("{label}: verdict expected {}, got {}", golden.holds, verdict.holds()));
    }
}

/// Evaluates one entry against its golden, after `adjust` has had a chance
/// to change the scenario's config.
pub fn check_entry(entry: &'static CorpusEntry, adjust: &dyn Fn(&mut IntentConfig)) -> EntryReport {
    let mut mismatches = Vec::new();
    let mut scenario = entry.scenario();
    adjust(&mut scenario.config);
    let golden = entry.golden();

    let failing = check_capacity(&scenario).failing();
    if failing != golden.capacity_failures {
        mismatches.push(format!(
            "capacity failures expected {:?}, got {:?}",
            golden.capacity_failures, failing
        ));
    }
    if scenario.queries.len() != golden.verdicts.len() {
        mismatches.push(format!(
            "expected {} verdicts, scenario has {} queries",
            golden.verdicts.len(),
            scenario.queries.len()
        ));
    }
    for (query, want) in scenario.queries.iter().zip(&golden.verdicts) {
        let label = query_label(query);
        if label != want.query {
            mismatches.push(format!("query `{label}` does not match golden `{}`", want.query));
            continue;
        }
        match evaluate_query(&scenario, query, &scenario.config) {
            Ok(v) => compare(&v, want, &mut mismatches),
            Err(e) => mismatches.push(format!("{label}: {e}")),
        }
    }
    EntryReport { name: entry.name, mismatches }
}

pub fn check_corpus_with(adjust: &dyn Fn(&mut IntentConfig)) -> CorpusReport {
    CorpusReport { entries: ENTRIES.iter().map(|e| check_entry(e, adjust)).collect() }
}

pub fn check_corpus() -> CorpusReport {
    check_corpus_with(&|_| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pristine_corpus_matches() {
        let report = check_corpus();
        assert!(report.all_match(), "{report}");
        assert!(report.to_string().ends_with("13/13 scenarios match\n"));
    }

    #[test]
    fn raising_tau_names_the_affected_clauses() {
        let report = check_corpus_with(&|c| c.tau = 0.999);
        let text = report.to_string();
        assert!(!report.all_match());
        assert!(text.contains("burning_building_literal: mismatch"), "{text}");
        assert!(text.contains("clause OI2a expected true, got false"), "{text}");
    }
}
