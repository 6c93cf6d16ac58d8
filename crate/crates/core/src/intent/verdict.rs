//! Verdicts, clause results and their rendering.

use std::fmt::{self, Write as _};

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::model::{Context, Event, Intervention, VariableId};
use crate::number::format_probability;

use super::IntentConfig;

/// Which definition a verdict (or query) is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Definition {
    DirectCommission,
    DirectPerspective,
    MeansEnd,
    Oblique,
    Ulterior,
    MoralResponsibility,
}

impl Definition {
    pub const ALL: [Definition; 6] = [
        Definition::DirectCommission,
        Definition::DirectPerspective,
        Definition::MeansEnd,
        Definition::Oblique,
        Definition::Ulterior,
        Definition::MoralResponsibility,
    ];

    /// Canonical keyword used in scenario files and on the command line.
    pub fn keyword(self) -> &'static str {
        match self {
            Definition::DirectCommission => "direct",
            Definition::DirectPerspective => "perspective",
            Definition::MeansEnd => "means_end",
            Definition::Oblique => "oblique",
            Definition::Ulterior => "ulterior",
            Definition::MoralResponsibility => "moral_responsibility",
        }
    }

    /// Accepts the canonical keyword and a few spellings people type.
    pub fn from_keyword(s: &str) -> Option<Definition> {
        let d = match s {
            "direct" | "direct_commission" | "direct-commission" => Definition::DirectCommission,
            "perspective" | "direct_perspective" | "direct-perspective" => Definition::DirectPerspective,
            "means_end" | "means-end" | "meansend" => Definition::MeansEnd,
            "oblique" => Definition::Oblique,
            "ulterior" => Definition::Ulterior,
            "moral_responsibility" | "moral-responsibility" | "moral" | "mr" => Definition::MoralResponsibility,
            _ => return None,
        };
        Some(d)
    }

    pub fn title(self) -> &'static str {
        match self {
            Definition::DirectCommission => "direct intent at commission",
            Definition::DirectPerspective => "direct intent in perspective",
            Definition::MeansEnd => "means-end intent",
            Definition::Oblique => "oblique intent",
            Definition::Ulterior => "ulterior intent",
            Definition::MoralResponsibility => "moral responsibility",
        }
    }

    /// The definition's boolean formula over its clauses. A missing clause
    /// counts as false, except the optional avoidance exclusion.
    pub fn combine(self, clauses: &[ClauseResult]) -> bool {
        use ClauseId::*;
        let get = |id: ClauseId| clauses.iter().find(|c| c.id == id).map(|c| c.holds);
        let on = |id: ClauseId| get(id).unwrap_or(false);
        match self {
            Definition::DirectCommission => on(DIc1) && on(DIc2) && on(DIc3) && (on(DIc4a) || on(DIc4b)),
            Definition::DirectPerspective => on(DIp1) && on(DIp2) && on(DIp3) && (on(DIp4a) || on(DIp4b)),
            Definition::MeansEnd => on(ME1) && on(ME2) && on(ME3) && on(ME4),
            Definition::Oblique => {
                on(OI1) && on(OIcl) && (on(OI2a) || on(OI2b)) && get(OIav).unwrap_or(true)
            }
            Definition::Ulterior => on(UI1) && on(UI2),
            Definition::MoralResponsibility => on(MR1) && on(MR2) && on(MR3),
        }
    }
}

impl fmt::Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Fixed vocabulary of clause labels.
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClauseId {
    DIc1,
    DIc2,
    DIc3,
    DIc4a,
    DIc4b,
    DIp1,
    DIp2,
    DIp3,
    DIp4a,
    DIp4b,
    ME1,
    ME2,
    ME3,
    ME4,
    OI1,
    OIcl,
    OI2a,
    OI2b,
    OIav,
    UI1,
    UI2,
    MR1,
    MR2,
    MR3,
}

impl ClauseId {
    pub const ALL: [ClauseId; 24] = [
        ClauseId::DIc1,
        ClauseId::DIc2,
        ClauseId::DIc3,
        ClauseId::DIc4a,
        ClauseId::DIc4b,
        ClauseId::DIp1,
        ClauseId::DIp2,
        ClauseId::DIp3,
        ClauseId::DIp4a,
        ClauseId::DIp4b,
        ClauseId::ME1,
        ClauseId::ME2,
        ClauseId::ME3,
        ClauseId::ME4,
        ClauseId::OI1,
        ClauseId::OIcl,
        ClauseId::OI2a,
        ClauseId::OI2b,
        ClauseId::OIav,
        ClauseId::UI1,
        ClauseId::UI2,
        ClauseId::MR1,
        ClauseId::MR2,
        ClauseId::MR3,
    ];

    pub fn as_str(self) -> &'static str {
        use ClauseId::*;
        match self {
            DIc1 => "DIc1",
            DIc2 => "DIc2",
            DIc3 => "DIc3",
            DIc4a => "DIc4a",
            DIc4b => "DIc4b",
            DIp1 => "DIp1",
            DIp2 => "DIp2",
            DIp3 => "DIp3",
            DIp4a => "DIp4a",
            DIp4b => "DIp4b",
            ME1 => "ME1",
            ME2 => "ME2",
            ME3 => "ME3",
            ME4 => "ME4",
            OI1 => "OI1",
            OIcl => "OIcl",
            OI2a => "OI2a",
            OI2b => "OI2b",
            OIav => "OIav",
            UI1 => "UI1",
            UI2 => "UI2",
            MR1 => "MR1",
            MR2 => "MR2",
            MR3 => "MR3",
        }
    }

    pub fn parse(s: &str) -> Option<ClauseId> {
        ClauseId::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn description(self) -> &'static str {
        use ClauseId::*;
        match self {
            DIc1 | DIp1 | MR1 => "free agency",
            DIc2 | DIp2 => "knowledge",
            DIc3 | DIp3 => "foreseeable causality",
            DIc4a | DIp4a => "explicit aim",
            DIc4b | DIp4b => "implicit aim",
            ME1 => "an intended result exists",
            ME2 => "causality",
            ME3 => "action subset of plan",
            ME4 => "necessary intermediate result",
            OI1 => "an intended result exists",
            OIcl => "causal link",
            OI2a => "side effect of action",
            OI2b => "side effect of outcome",
            OIav => "result not avoided",
            UI1 => "second point coincidence",
            UI2 => "commitment to conditional action",
            MR2 => "causal condition",
            MR3 => "epistemic condition",
        }
    }
}

impl fmt::Display for ClauseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ClauseId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// One piece of clause evidence.
#[derive(Debug, Clone, PartialEq)]
pub enum Detail {
    Flag(bool),
    Probability(f64),
    Count(usize),
    Text(String),
    Event(Event),
    Intervention(Intervention),
    Interventions(Vec<Intervention>),
    Context(Context),
    Variables(Vec<VariableId>),
}

/// Rounds to 12 decimal places so JSON output is free of float noise.
fn rounded(p: f64) -> f64 {
    let r = (p * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

impl Serialize for Detail {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Detail::Flag(b) => s.serialize_bool(*b),
            Detail::Probability(p) => s.serialize_f64(rounded(*p)),
            Detail::Count(n) => s.serialize_u64(*n as u64),
            Detail::Text(t) => s.serialize_str(t),
            Detail::Event(e) => e.serialize(s),
            Detail::Intervention(i) => i.serialize(s),
            Detail::Interventions(is) => is.serialize(s),
            Detail::Context(c) => c.serialize(s),
            Detail::Variables(vs) => vs.serialize(s),
        }
    }
}

impl fmt::Display for Detail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Detail::Flag(b) => write!(f, "{b}"),
            Detail::Probability(p) => f.write_str(&format_probability(*p)),
            Detail::Count(n) => write!(f, "{n}"),
            Detail::Text(t) => f.write_str(t),
            Detail::Event(e) => write!(f, "{e}"),
            Detail::Intervention(i) => write!(f, "{{{i}}}"),
            Detail::Interventions(is) => {
                if is.is_empty() {
                    return f.write_str("none");
                }
                for (n, i) in is.iter().enumerate() {
                    if n > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{{{i}}}")?;
                }
                Ok(())
            }
            Detail::Context(c) => {
                f.write_str("{")?;
                for (n, (k, v)) in c.iter().enumerate() {
                    if n > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k} = {v}")?;
                }
                f.write_str("}")
            }
            Detail::Variables(vs) => {
                let names: Vec<&str> = vs.iter().map(|v| v.as_str()).collect();
                write!(f, "[{}]", names.join(", "))
            }
        }
    }
}

/// Ordered key/detail pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evidence(Vec<(String, Detail)>);

impl Evidence {
    pub fn new() -> Self {
        Evidence(Vec::new())
    }

    pub fn with(mut self, key: &str, detail: Detail) -> Self {
        self.0.push((key.to_string(), detail));
        self
    }

    pub fn push(&mut self, key: &str, detail: Detail) {
        self.0.push((key.to_string(), detail));
    }

    pub fn get(&self, key: &str) -> Option<&Detail> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, d)| d)
    }

    pub fn probability(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Some(Detail::Probability(p)) => Some(*p),
            _ => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Detail)> {
        self.0.iter().map(|(k, d)| (k.as_str(), d))
    }
}

impl Serialize for Evidence {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, d) in &self.0 {
            map.serialize_entry(k, d)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseResult {
    pub id: ClauseId,
    pub holds: bool,
    pub evidence: Evidence,
}

impl ClauseResult {
    pub fn new(id: ClauseId, holds: bool, evidence: Evidence) -> Self {
        ClauseResult { id, holds, evidence }
    }
}

/// What a verdict was computed about.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceTrace {
    pub result: Event,
    /// Completed action the clauses were evaluated under.
    pub action: Option<Intervention>,
    /// Alternatives the action was contrasted against.
    pub alternatives: Vec<Intervention>,
    /// The other result (or policy condition) that witnessed an existential
    /// clause.
    pub witness: Option<Event>,
}

/// Outcome of one definition, with clause-level evidence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    definition: Definition,
    holds: bool,
    clauses: Vec<ClauseResult>,
    trace: EvidenceTrace,
    config: IntentConfig,
}

impl Verdict {
    /// `holds` is derived from the clauses; there is no way to set it
    /// independently.
    pub(crate) fn new(
        definition: Definition,
        clauses: Vec<ClauseResult>,
        trace: EvidenceTrace,
        config: &IntentConfig,
    ) -> Self {
        assert!(!clauses.is_empty(), "a verdict needs at least one clause");
        let holds = definition.combine(&clauses);
        Verdict { definition, holds, clauses, trace, config: config.clone() }
    }

    pub fn definition(&self) -> Definition {
        self.definition
    }

    pub fn holds(&self) -> bool {
        self.holds
    }

    pub fn clauses(&self) -> &[ClauseResult] {
        &self.clauses
    }

    pub fn clause(&self, id: ClauseId) -> Option<&ClauseResult> {
        self.clauses.iter().find(|c| c.id == id)
    }

    pub fn trace(&self) -> &EvidenceTrace {
        &self.trace
    }

    pub fn config(&self) -> &IntentConfig {
        &self.config
    }

    /// Re-evaluates the definition's formula from the stored clauses.
    pub fn recompute_holds(&self) -> bool {
        self.definition.combine(&self.clauses)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("verdicts serialize")
    }
}

#[derive(Serialize)]
struct VerdictDocument<'a> {
    format: u32,
    verdicts: &'a [Verdict],
}

/// `{"format": 1, "verdicts": [...]}`, pretty-printed with fields in a
/// fixed order and a trailing newline.
pub fn verdicts_to_json(verdicts: &[Verdict]) -> String {
    let mut s = serde_json::to_string_pretty(&VerdictDocument { format: 1, verdicts }).expect("verdicts serialize");
    s.push('\n');
    s
}

/// Deterministic human-readable report of a verdict.
pub fn explain(verdict: &Verdict) -> String {
    let mut out = String::new();
    let status = if verdict.holds { "HOLDS" } else { "DOES NOT HOLD" };
    let _ = writeln!(out, "{} ({}): {}", verdict.definition.title(), verdict.definition.keyword(), status);
    let t = &verdict.trace;
    let _ = writeln!(out, "  result: {}", t.result);
    if let Some(a) = &t.action {
        let _ = writeln!(out, "  action: {a}");
    }
    let _ = writeln!(out, "  alternatives: {}", Detail::Interventions(t.alternatives.clone()));
    if let Some(w) = &t.witness {
        let _ = writeln!(out, "  witness: {w}");
    }
    let c = &verdict.config;
    let _ = writeln!(
        out,
        "  config: tau = {}, epsilon = {}, tolerance = {}, exclude_avoided_results = {}, knowledge = {}",
        format_probability(c.tau),
        format_probability(c.epsilon),
        format_probability(c.tolerance),
        c.exclude_avoided_results,
        c.knowledge_mode.keyword()
    );
    for clause in &verdict.clauses {
        let mark = if clause.holds { "[pass]  " } else { "[FAILED]" };
        let details: Vec<String> = clause.evidence.iter().map(|(k, d)| format!("{k} = {d}")).collect();
        let _ = write!(out, "  {mark} {:<5} {}", clause.id.as_str(), clause.id.description());
        if !details.is_empty() {
            let _ = write!(out, ": {}", details.join("; "));
        }
        out.push('\n');
    }
    out
}
