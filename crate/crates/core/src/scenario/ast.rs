//! Syntax tree shared by the text and JSON scenario forms.
//!
//! Positions are only known for text input; the JSON form leaves them at
//! the document start.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl Default for Pos {
    fn default() -> Self {
        Pos { line: 1, column: 1 }
    }
}

/// A value with the position it was read at. Serializes as the bare value.
#[derive(Debug, Clone, PartialEq)]
pub struct Spanned<T> {
    pub value: T,
    pub pos: Pos,
}

impl<T> Spanned<T> {
    pub fn new(value: T, pos: Pos) -> Self {
        Spanned { value, pos }
    }

    pub fn bare(value: T) -> Self {
        Spanned { value, pos: Pos::default() }
    }
}

impl<T: Serialize> Serialize for Spanned<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.value.serialize(s)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Spanned<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        T::deserialize(d).map(Spanned::bare)
    }
}

pub type Name = Spanned<String>;

/// `Var = value`; in JSON a two-element array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assign(pub Name, pub Name);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub format: Spanned<u32>,
    pub model: ModelAst,
    pub agent: AgentAst,
    /// `Some(None)` is an explicit `snapshot: none`.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "snapshot_field")]
    pub snapshot: Option<Option<AgentAst>>,
    #[serde(default)]
    pub performed: Vec<Assign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Vec<Assign>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realized: Option<Vec<Assign>>,
    #[serde(default)]
    pub config: ConfigAst,
    #[serde(default)]
    pub queries: Vec<QueryAst>,
    /// Where each section keyword appeared; unused in JSON.
    #[serde(skip)]
    pub section_pos: SectionPositions,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SectionPositions {
    pub model: Pos,
    pub agent: Pos,
    pub performed: Pos,
    pub plan: Pos,
    pub realized: Pos,
}

mod snapshot_field {
    use super::AgentAst;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Agent(AgentAst),
        None(NoneTag),
    }

    #[derive(Serialize, Deserialize)]
    enum NoneTag {
        #[serde(rename = "none")]
        None,
    }

    pub fn serialize<S: Serializer>(v: &Option<Option<AgentAst>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(Some(a)) => Repr::Agent(a.clone()).serialize(s),
            _ => Repr::None(NoneTag::None).serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Option<AgentAst>>, D::Error> {
        Ok(Some(match Repr::deserialize(d)? {
            Repr::Agent(a) => Some(a),
            Repr::None(_) => None,
        }))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelAst {
    #[serde(default)]
    pub exo: Vec<ExoAst>,
    #[serde(default)]
    pub action: Vec<ActionAst>,
    #[serde(default)]
    pub var: Vec<VarAst>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExoAst {
    pub id: Name,
    pub distribution: Vec<(Name, Spanned<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionAst {
    pub id: Name,
    pub domain: Vec<Name>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarAst {
    pub id: Name,
    /// Inferred from the table outputs when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<Name>>,
    #[serde(default)]
    pub parents: Vec<Name>,
    pub table: Vec<RowAst>,
}

/// One table entry; `_` in a key matches every value of that parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowAst {
    pub key: Vec<Name>,
    pub value: Name,
    #[serde(skip)]
    pub pos: Pos,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentAst {
    /// `None` means the agent shares the objective model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelAst>,
    #[serde(default)]
    pub observe: Vec<Name>,
    #[serde(default)]
    pub aims: Vec<Vec<Assign>>,
    #[serde(default)]
    pub policy: Vec<RuleAst>,
    #[serde(default)]
    pub committed: bool,
    #[serde(skip)]
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleAst {
    pub when: Vec<Assign>,
    pub then: Vec<Assign>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigAst {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Spanned<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<Vec<Assign>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclude_avoided_results: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knowledge: Option<Name>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryAst {
    pub definition: Name,
    pub result: Vec<Assign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<Vec<Assign>>,
}
