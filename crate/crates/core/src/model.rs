//! Finite discrete structural causal models.
//!
//! A [`CausalModel`] holds three kinds of variables:
//!
//! - exogenous variables carry all of the model's randomness as independent
//!   categorical distributions;
//! - endogenous variables are deterministic functions of their parents,
//!   written as exhaustive lookup tables;
//! - action variables are set by intervention, or, when bound to a policy,
//!   by the first policy rule whose condition holds.
//!
//! Models are plain data. [`validate_model`] reports every broken invariant,
//! and evaluation compiles the model into an index-based form first.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used when checking that a distribution sums to one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Name of a variable, unique within a model.
///
/// Well-formed ids match `[A-Za-z_][A-Za-z0-9_]*`, optionally followed by a
/// time suffix `@<n>` (`Shoot@2`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VariableId(String);

impl VariableId {
    pub fn new(name: impl Into<String>) -> Self {
        VariableId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_well_formed(&self) -> bool {
        let (stem, suffix) = match self.0.split_once('@') {
            Some((stem, suffix)) => (stem, Some(suffix)),
            None => (self.0.as_str(), None),
        };
        let mut chars = stem.chars();
        let head_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_');
        let tail_ok = chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        let suffix_ok = match suffix {
            None => true,
            Some(s) => !s.is_empty() && s.chars().all(|c| c.is_ascii_digit()),
        };
        head_ok && tail_ok && suffix_ok
    }

    /// The `@<n>` time index, if the id carries one.
    pub fn time_index(&self) -> Option<u32> {
        self.0.split_once('@').and_then(|(_, t)| t.parse().ok())
    }
}

impl From<&str> for VariableId {
    fn from(s: &str) -> Self {
        VariableId(s.to_string())
    }
}

impl Borrow<str> for VariableId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A value label drawn from some variable's domain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Value(String);

impl Value {
    pub fn new(label: impl Into<String>) -> Self {
        Value(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Labels are non-empty runs of `[A-Za-z0-9_]`, and `_` alone is reserved.
    pub fn is_well_formed(&self) -> bool {
        !self.0.is_empty()
            && self.0 != "_"
            && self.0.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value(s.to_string())
    }
}

impl Borrow<str> for Value {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Ordered list of the values a variable can take.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Domain(Vec<Value>);

impl Domain {
    pub fn new<I, V>(values: I) -> Self
    where
        I: IntoIterator<Item = V>,
        V: Into<Value>,
    {
        Domain(values.into_iter().map(Into::into).collect())
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn position(&self, value: &Value) -> Option<usize> {
        self.0.iter().position(|v| v == value)
    }

    pub fn contains(&self, value: &Value) -> bool {
        self.position(value).is_some()
    }

    fn duplicates(&self) -> Vec<&Value> {
        let mut seen = BTreeSet::new();
        self.0.iter().filter(|v| !seen.insert(*v)).collect()
    }
}

/// A root variable with an independent categorical distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogenousVariable {
    pub id: VariableId,
    pub domain: Domain,
    /// Aligned with `domain`.
    pub probabilities: Vec<f64>,
}

impl ExogenousVariable {
    pub fn new<V: Into<Value>>(id: impl Into<VariableId>, distribution: Vec<(V, f64)>) -> Self {
        let (values, probabilities): (Vec<Value>, Vec<f64>) =
            distribution.into_iter().map(|(v, p)| (v.into(), p)).unzip();
        ExogenousVariable { id: id.into(), domain: Domain(values), probabilities }
    }

    pub fn distribution(&self) -> impl Iterator<Item = (&Value, f64)> {
        self.domain.values().iter().zip(self.probabilities.iter().copied())
    }
}

/// A variable computed from its parents by an exhaustive table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndogenousVariable {
    pub id: VariableId,
    pub domain: Domain,
    pub parents: Vec<VariableId>,
    /// Keys are parent value tuples, in `parents` order.
    pub table: BTreeMap<Vec<Value>, Value>,
}

impl EndogenousVariable {
    pub fn new(
        id: impl Into<VariableId>,
        domain: Domain,
        parents: Vec<VariableId>,
        table: BTreeMap<Vec<Value>, Value>,
    ) -> Self {
        EndogenousVariable { id: id.into(), domain, parents, table }
    }

    /// A parentless variable fixed to `value`.
    pub fn constant(id: impl Into<VariableId>, domain: Domain, value: Value) -> Self {
        let mut table = BTreeMap::new();
        table.insert(Vec::new(), value);
        EndogenousVariable { id: id.into(), domain, parents: Vec::new(), table }
    }
}

/// A decision variable of the agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionVariable {
    pub id: VariableId,
    pub domain: Domain,
    /// Present when a committed policy chooses this action.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<PolicyBinding>,
}

impl ActionVariable {
    pub fn new(id: impl Into<VariableId>, domain: Domain) -> Self {
        ActionVariable { id: id.into(), domain, binding: None }
    }
}

/// Structural source of a policy-bound action: the first rule whose
/// condition holds picks the value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyBinding {
    pub rules: Vec<(Event, Value)>,
}

impl PolicyBinding {
    pub fn condition_variables(&self) -> BTreeSet<&VariableId> {
        self.rules.iter().flat_map(|(c, _)| c.variables()).collect()
    }
}

/// Conjunction of variable-value literals. Never empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<VariableId, Value>", into = "BTreeMap<VariableId, Value>")]
pub struct Event(BTreeMap<VariableId, Value>);

impl Event {
    pub fn new<I>(literals: I) -> Result<Self, EventError>
    where
        I: IntoIterator<Item = (VariableId, Value)>,
    {
        let mut map = BTreeMap::new();
        for (var, value) in literals {
            if map.contains_key(&var) {
                return Err(EventError::DuplicateVariable(var));
            }
            map.insert(var, value);
        }
        if map.is_empty() {
            return Err(EventError::Empty);
        }
        Ok(Event(map))
    }

    pub fn literal(var: impl Into<VariableId>, value: impl Into<Value>) -> Self {
        let mut map = BTreeMap::new();
        map.insert(var.into(), value.into());
        Event(map)
    }

    pub fn literals(&self) -> impl Iterator<Item = (&VariableId, &Value)> {
        self.0.iter()
    }

    pub fn variables(&self) -> impl Iterator<Item = &VariableId> {
        self.0.keys()
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.0.get(var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn holds_in(&self, world: &World) -> bool {
        self.0.iter().all(|(k, v)| world.get(k.as_str()) == Some(v))
    }

    /// The event with `var` dropped, or `None` if nothing would remain.
    pub fn without(&self, var: &str) -> Option<Event> {
        let mut map = self.0.clone();
        map.remove(var);
        (!map.is_empty()).then_some(Event(map))
    }
}

impl TryFrom<BTreeMap<VariableId, Value>> for Event {
    type Error = EventError;

    fn try_from(map: BTreeMap<VariableId, Value>) -> Result<Self, Self::Error> {
        Event::new(map)
    }
}

impl From<Event> for BTreeMap<VariableId, Value> {
    fn from(e: Event) -> Self {
        e.0
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_literals(f, self.0.iter(), " & ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("event has no literals")]
    Empty,
    #[error("variable {0} appears twice in event")]
    DuplicateVariable(VariableId),
}

/// Settings for action variables, `do(A = a, ...)`. May be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Intervention(BTreeMap<VariableId, Value>);

impl Intervention {
    pub fn new() -> Self {
        Intervention(BTreeMap::new())
    }

    pub fn single(var: impl Into<VariableId>, value: impl Into<Value>) -> Self {
        Intervention::new().with(var, value)
    }

    pub fn with(mut self, var: impl Into<VariableId>, value: impl Into<Value>) -> Self {
        self.0.insert(var.into(), value.into());
        self
    }

    pub fn set(&mut self, var: VariableId, value: Value) {
        self.0.insert(var, value);
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.0.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VariableId, &Value)> {
        self.0.iter()
    }

    pub fn variables(&self) -> impl Iterator<Item = &VariableId> {
        self.0.keys()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every setting here also appears in `other`.
    pub fn is_subassignment_of(&self, other: &Intervention) -> bool {
        self.0.iter().all(|(k, v)| other.0.get(k) == Some(v))
    }

    /// `self` with every setting of `top` applied over it.
    pub fn overlay(&self, top: &Intervention) -> Intervention {
        let mut out = self.0.clone();
        out.extend(top.0.iter().map(|(k, v)| (k.clone(), v.clone())));
        Intervention(out)
    }

    /// Settings restricted to variables accepted by `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&VariableId) -> bool) -> Intervention {
        Intervention(self.0.iter().filter(|(k, _)| keep(k)).map(|(k, v)| (k.clone(), v.clone())).collect())
    }
}

impl FromIterator<(VariableId, Value)> for Intervention {
    fn from_iter<T: IntoIterator<Item = (VariableId, Value)>>(iter: T) -> Self {
        Intervention(iter.into_iter().collect())
    }
}

impl fmt::Display for Intervention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("(nothing)");
        }
        write_literals(f, self.0.iter(), ", ")
    }
}

/// A full assignment to every variable of a model.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct World(BTreeMap<VariableId, Value>);

impl World {
    pub fn get(&self, var: &str) -> Option<&Value> {
        self.0.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VariableId, &Value)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn satisfies(&self, event: &Event) -> bool {
        event.holds_in(self)
    }
}

impl FromIterator<(VariableId, Value)> for World {
    fn from_iter<T: IntoIterator<Item = (VariableId, Value)>>(iter: T) -> Self {
        World(iter.into_iter().collect())
    }
}

impl fmt::Display for World {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_literals(f, self.0.iter(), ", ")
    }
}

fn write_literals<'a>(
    f: &mut fmt::Formatter<'_>,
    literals: impl Iterator<Item = (&'a VariableId, &'a Value)>,
    sep: &str,
) -> fmt::Result {
    for (i, (k, v)) in literals.enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{k} = {v}")?;
    }
    Ok(())
}

/// Assignment to the exogenous variables.
pub type Context = BTreeMap<VariableId, Value>;

/// A conditional plan: the first rule whose condition holds chooses the
/// actions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub rules: Vec<PolicyRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyRule {
    pub condition: Event,
    pub action: Intervention,
}

impl Policy {
    /// Variables set by at least one rule.
    pub fn targets(&self) -> BTreeSet<&VariableId> {
        self.rules.iter().flat_map(|r| r.action.variables()).collect()
    }

    /// Distinct conditions in rule order.
    pub fn conditions(&self) -> Vec<&Event> {
        let mut out: Vec<&Event> = Vec::new();
        for rule in &self.rules {
            if !out.contains(&&rule.condition) {
                out.push(&rule.condition);
            }
        }
        out
    }

    /// The single action prescribed under `condition`, or `None` when rules
    /// sharing that condition disagree (or none exists).
    pub fn action_for(&self, condition: &Event) -> Option<&Intervention> {
        let mut found: Option<&Intervention> = None;
        for rule in self.rules.iter().filter(|r| &r.condition == condition) {
            match found {
                None => found = Some(&rule.action),
                Some(prev) if prev == &rule.action => {}
                Some(_) => return None,
            }
        }
        found
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    Exogenous,
    Endogenous,
    Action,
}

/// A finite discrete structural causal model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CausalModel {
    pub exogenous: Vec<ExogenousVariable>,
    pub endogenous: Vec<EndogenousVariable>,
    pub actions: Vec<ActionVariable>,
}

impl CausalModel {
    pub fn new(
        exogenous: Vec<ExogenousVariable>,
        endogenous: Vec<EndogenousVariable>,
        actions: Vec<ActionVariable>,
    ) -> Self {
        CausalModel { exogenous, endogenous, actions }
    }

    /// Every variable id: exogenous, then actions, then endogenous.
    pub fn variable_ids(&self) -> impl Iterator<Item = &VariableId> {
        self.exogenous
            .iter()
            .map(|v| &v.id)
            .chain(self.actions.iter().map(|v| &v.id))
            .chain(self.endogenous.iter().map(|v| &v.id))
    }

    pub fn variable_count(&self) -> usize {
        self.exogenous.len() + self.endogenous.len() + self.actions.len()
    }

    pub fn kind_of(&self, id: &str) -> Option<VariableKind> {
        if self.exogenous.iter().any(|v| v.id.as_str() == id) {
            Some(VariableKind::Exogenous)
        } else if self.endogenous.iter().any(|v| v.id.as_str() == id) {
            Some(VariableKind::Endogenous)
        } else if self.actions.iter().any(|v| v.id.as_str() == id) {
            Some(VariableKind::Action)
        } else {
            None
        }
    }

    pub fn domain_of(&self, id: &str) -> Option<&Domain> {
        self.exogenous
            .iter()
            .find(|v| v.id.as_str() == id)
            .map(|v| &v.domain)
            .or_else(|| self.endogenous.iter().find(|v| v.id.as_str() == id).map(|v| &v.domain))
            .or_else(|| self.actions.iter().find(|v| v.id.as_str() == id).map(|v| &v.domain))
    }

    pub fn action(&self, id: &str) -> Option<&ActionVariable> {
        self.actions.iter().find(|a| a.id.as_str() == id)
    }

    pub fn endogenous_var(&self, id: &str) -> Option<&EndogenousVariable> {
        self.endogenous.iter().find(|v| v.id.as_str() == id)
    }

    /// Structural parents: table parents for endogenous variables, policy
    /// condition variables for bound actions.
    pub fn parents_of(&self, id: &str) -> Vec<VariableId> {
        if let Some(v) = self.endogenous_var(id) {
            return v.parents.clone();
        }
        match self.action(id).and_then(|a| a.binding.as_ref()) {
            Some(b) => b.condition_variables().into_iter().cloned().collect(),
            None => Vec::new(),
        }
    }

    /// Variables reachable from `roots` along parent-to-child edges, roots
    /// included.
    pub fn descendants<'a>(&self, roots: impl IntoIterator<Item = &'a VariableId>) -> BTreeSet<VariableId> {
        let mut children: HashMap<VariableId, Vec<VariableId>> = HashMap::new();
        for id in self.variable_ids() {
            for p in self.parents_of(id.as_str()) {
                children.entry(p).or_default().push(id.clone());
            }
        }
        let mut seen: BTreeSet<VariableId> = BTreeSet::new();
        let mut stack: Vec<VariableId> = roots.into_iter().cloned().collect();
        while let Some(v) = stack.pop() {
            if seen.insert(v.clone()) {
                if let Some(cs) = children.get(&v) {
                    stack.extend(cs.iter().cloned());
                }
            }
        }
        seen
    }

    /// Checks an event against the model's variables and domains.
    pub fn check_event(&self, event: &Event) -> Result<(), ModelError> {
        self.check_literals(event.literals())
    }

    fn check_literals<'a>(
        &self,
        literals: impl Iterator<Item = (&'a VariableId, &'a Value)>,
    ) -> Result<(), ModelError> {
        for (var, value) in literals {
            let domain = self.domain_of(var.as_str()).ok_or_else(|| ModelError::UnknownVariable(var.clone()))?;
            if !domain.contains(value) {
                return Err(ModelError::ValueNotInDomain { variable: var.clone(), value: value.clone() });
            }
        }
        Ok(())
    }

    /// Checks that an intervention only sets action variables to values in
    /// their domains.
    pub fn check_intervention(&self, intervention: &Intervention) -> Result<(), ModelError> {
        for (var, value) in intervention.iter() {
            let action = match self.kind_of(var.as_str()) {
                None => return Err(ModelError::UnknownVariable(var.clone())),
                Some(VariableKind::Action) => self.action(var.as_str()).expect("kind checked"),
                Some(_) => return Err(ModelError::NotAnAction(var.clone())),
            };
            if !action.domain.contains(value) {
                return Err(ModelError::ValueNotInDomain { variable: var.clone(), value: value.clone() });
            }
        }
        Ok(())
    }

    /// Deterministically evaluates the world produced by `context` under
    /// `intervention`.
    pub fn evaluate(&self, context: &Context, intervention: &Intervention) -> Result<World, ModelError> {
        let violations = validate_model(self);
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        let compiled = Compiled::new(self)?;
        let mut ctx = Vec::with_capacity(self.exogenous.len());
        for exo in &self.exogenous {
            let value = context.get(&exo.id).ok_or_else(|| ModelError::MissingContext(exo.id.clone()))?;
            let idx = exo.domain.position(value).ok_or_else(|| ModelError::ValueNotInDomain {
                variable: exo.id.clone(),
                value: value.clone(),
            })?;
            ctx.push(idx as u16);
        }
        for key in context.keys() {
            if self.kind_of(key.as_str()) != Some(VariableKind::Exogenous) {
                return Err(ModelError::UnknownVariable(key.clone()));
            }
        }
        let fixed = compiled.fixed(intervention)?;
        let mut world = vec![0u16; compiled.len()];
        compiled.eval(&ctx, &fixed, &mut world)?;
        Ok(compiled.world(&world))
    }

    /// do-surgery: intervened actions become parentless constants.
    pub fn intervened(&self, intervention: &Intervention) -> Result<CausalModel, ModelError> {
        self.check_intervention(intervention)?;
        let mut out = self.clone();
        let mut constants = Vec::new();
        out.actions.retain(|a| match intervention.get(a.id.as_str()) {
            Some(v) => {
                constants.push(EndogenousVariable::constant(a.id.clone(), a.domain.clone(), v.clone()));
                false
            }
            None => true,
        });
        constants.append(&mut out.endogenous);
        out.endogenous = constants;
        Ok(out)
    }

    /// Binds every action targeted by `policy` to the policy's rules.
    pub fn bind_policy(&self, policy: &Policy) -> Result<CausalModel, ModelError> {
        let mut out = self.clone();
        for rule in &policy.rules {
            self.check_event(&rule.condition)?;
            self.check_intervention(&rule.action)?;
        }
        for action in &mut out.actions {
            let rules: Vec<(Event, Value)> = policy
                .rules
                .iter()
                .filter_map(|r| r.action.get(action.id.as_str()).map(|v| (r.condition.clone(), v.clone())))
                .collect();
            if !rules.is_empty() {
                action.binding = Some(PolicyBinding { rules });
            }
        }
        Ok(out)
    }

    /// Drops every policy binding.
    pub fn unbound(&self) -> CausalModel {
        let mut out = self.clone();
        for a in &mut out.actions {
            a.binding = None;
        }
        out
    }
}

/// Free-function form of [`CausalModel::evaluate`].
pub fn evaluate(model: &CausalModel, context: &Context, intervention: &Intervention) -> Result<World, ModelError> {
    model.evaluate(context, intervention)
}

/// Free-function form of [`CausalModel::intervened`].
pub fn intervened_model(model: &CausalModel, intervention: &Intervention) -> Result<CausalModel, ModelError> {
    model.intervened(intervention)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    InvalidIdentifier,
    InvalidValue,
    EmptyDomain,
    DuplicateValue,
    DuplicateId,
    UnknownParent,
    DuplicateParent,
    DistributionMismatch,
    ProbabilityOutOfRange,
    NotNormalized,
    TableArity,
    TableNotTotal,
    TableKeyOutOfDomain,
    TableValueOutOfDomain,
    BindingOutOfDomain,
    Cycle,
}

/// One broken model invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub variable: Option<VariableId>,
    pub message: String,
}

impl Violation {
    fn new(kind: ViolationKind, variable: &VariableId, message: String) -> Self {
        Violation { kind, variable: Some(variable.clone()), message }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("context has no value for exogenous variable {0}")]
    MissingContext(VariableId),
    #[error("unknown variable {0}")]
    UnknownVariable(VariableId),
    #[error("not an action variable: {0}")]
    NotAnAction(VariableId),
    #[error("action variable {0} is neither intervened on nor bound to a policy")]
    UnboundAction(VariableId),
    #[error("value {value} is not in the domain of {variable}")]
    ValueNotInDomain { variable: VariableId, value: Value },
    #[error("no policy rule covers action {0} in this context")]
    PolicyUncovered(VariableId),
}

fn join_violations(vs: &[Violation]) -> String {
    vs.iter().map(|v| v.message.as_str()).collect::<Vec<_>>().join("; ")
}

/// Reports every violated model invariant. An empty list means the model is
/// valid.
pub fn validate_model(model: &CausalModel) -> Vec<Violation> {
    use ViolationKind::*;
    let mut out = Vec::new();
    let mut domains: HashMap<&VariableId, &Domain> = HashMap::new();

    let all: Vec<(&VariableId, &Domain)> = model
        .exogenous
        .iter()
        .map(|v| (&v.id, &v.domain))
        .chain(model.endogenous.iter().map(|v| (&v.id, &v.domain)))
        .chain(model.actions.iter().map(|v| (&v.id, &v.domain)))
        .collect();
    for (id, domain) in &all {
        if !id.is_well_formed() {
            out.push(Violation::new(InvalidIdentifier, id, format!("invalid identifier: {id}")));
        }
        if domains.insert(id, domain).is_some() {
            out.push(Violation::new(DuplicateId, id, format!("duplicate variable id: {id}")));
        }
        if domain.is_empty() {
            out.push(Violation::new(EmptyDomain, id, format!("empty domain: {id}")));
        }
        for dup in domain.duplicates() {
            out.push(Violation::new(DuplicateValue, id, format!("duplicate value {dup} in domain of {id}")));
        }
        for v in domain.values() {
            if !v.is_well_formed() {
                out.push(Violation::new(InvalidValue, id, format!("invalid value label {v:?} in domain of {id}")));
            }
        }
    }

    for exo in &model.exogenous {
        let id = &exo.id;
        if exo.probabilities.len() != exo.domain.len() {
            out.push(Violation::new(
                DistributionMismatch,
                id,
                format!("distribution does not cover the domain exactly once: {id}"),
            ));
        }
        if exo.probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            out.push(Violation::new(ProbabilityOutOfRange, id, format!("probability outside [0, 1]: {id}")));
        }
        let total: f64 = exo.probabilities.iter().sum();
        if !total.is_finite() || (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            out.push(Violation::new(NotNormalized, id, format!("distribution not normalized: {id}")));
        }
    }

    for var in &model.endogenous {
        let id = &var.id;
        let mut parent_domains = Vec::new();
        let mut parents_ok = true;
        let mut seen = BTreeSet::new();
        for p in &var.parents {
            if !seen.insert(p) {
                out.push(Violation::new(DuplicateParent, id, format!("parent {p} listed twice for {id}")));
                parents_ok = false;
            }
            match domains.get(p) {
                Some(d) => parent_domains.push(*d),
                None => {
                    out.push(Violation::new(UnknownParent, id, format!("unknown parent {p} of {id}")));
                    parents_ok = false;
                }
            }
        }
        for (key, value) in &var.table {
            if key.len() != var.parents.len() {
                out.push(Violation::new(TableArity, id, format!("table key of wrong arity for {id}")));
                parents_ok = false;
                continue;
            }
            if !var.domain.contains(value) {
                out.push(Violation::new(
                    TableValueOutOfDomain,
                    id,
                    format!("table output {value} not in domain of {id}"),
                ));
            }
        }
        if !parents_ok {
            continue;
        }
        for key in var.table.keys() {
            for (v, d) in key.iter().zip(&parent_domains) {
                if !d.contains(v) {
                    out.push(Violation::new(
                        TableKeyOutOfDomain,
                        id,
                        format!("table key value {v} not in parent domain for {id}"),
                    ));
                }
            }
        }
        let expected: usize = parent_domains.iter().map(|d| d.len()).product();
        let covered = var
            .table
            .keys()
            .filter(|k| k.iter().zip(&parent_domains).all(|(v, d)| d.contains(v)))
            .count();
        if covered != expected {
            out.push(Violation::new(TableNotTotal, id, format!("table not total: {id}")));
        }
    }

    for action in &model.actions {
        if let Some(binding) = &action.binding {
            let id = &action.id;
            for (cond, value) in &binding.rules {
                if !action.domain.contains(value) {
                    out.push(Violation::new(
                        BindingOutOfDomain,
                        id,
                        format!("policy value {value} not in domain of {id}"),
                    ));
                }
                for (var, v) in cond.literals() {
                    match domains.get(var) {
                        None => out.push(Violation::new(
                            UnknownParent,
                            id,
                            format!("unknown policy condition variable {var} for {id}"),
                        )),
                        Some(d) if !d.contains(v) => out.push(Violation::new(
                            BindingOutOfDomain,
                            id,
                            format!("policy condition value {v} not in domain of {var}"),
                        )),
                        Some(_) => {}
                    }
                }
            }
        }
    }

    if let Err(stuck) = topological_order(model) {
        let names: Vec<&str> = stuck.iter().map(|v| v.as_str()).collect();
        out.push(Violation {
            kind: Cycle,
            variable: stuck.first().cloned(),
            message: format!("cycle detected: {}", names.join(", ")),
        });
    }
    out
}

/// Kahn's algorithm with declaration-order tie breaking. On failure returns
/// the variables left on or behind a cycle.
fn topological_order(model: &CausalModel) -> Result<Vec<VariableId>, Vec<VariableId>> {
    let ids: Vec<&VariableId> = model.variable_ids().collect();
    let known: BTreeSet<&VariableId> = ids.iter().copied().collect();
    let mut indegree: Vec<usize> = Vec::with_capacity(ids.len());
    let mut children: HashMap<&VariableId, Vec<usize>> = HashMap::new();
    let parents: Vec<Vec<VariableId>> = ids.iter().map(|id| model.parents_of(id.as_str())).collect();
    for (i, ps) in parents.iter().enumerate() {
        let mut n = 0;
        for p in ps {
            if let Some(k) = known.get(p) {
                children.entry(*k).or_default().push(i);
                n += 1;
            }
        }
        indegree.push(n);
    }
    let mut done = vec![false; ids.len()];
    let mut order = Vec::with_capacity(ids.len());
    while let Some(next) = (0..ids.len()).find(|&i| !done[i] && indegree[i] == 0) {
        done[next] = true;
        order.push(ids[next].clone());
        if let Some(cs) = children.get(ids[next]) {
            for &c in cs {
                indegree[c] -= 1;
            }
        }
    }
    if order.len() == ids.len() {
        Ok(order)
    } else {
        Err((0..ids.len()).filter(|&i| !done[i]).map(|i| ids[i].clone()).collect())
    }
}

/// Compiled policy rules: literal positions and the chosen value index.
type CompiledRules = Vec<(Vec<(usize, u16)>, u16)>;

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Exogenous,
    Endogenous { parents: Vec<usize>, radix: Vec<usize>, table: Vec<u16> },
    Action { binding: Option<CompiledRules> },
}

/// Index-based form of a valid model, used by every evaluation path.
#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub ids: Vec<VariableId>,
    pub index: HashMap<VariableId, usize>,
    pub domains: Vec<Domain>,
    pub nodes: Vec<Node>,
    /// Non-exogenous nodes in evaluation order.
    pub order: Vec<usize>,
    pub exo: Vec<usize>,
    pub exo_probs: Vec<Vec<f64>>,
}

impl Compiled {
    /// Compiles a model that already passed [`validate_model`].
    pub fn new(model: &CausalModel) -> Result<Self, ModelError> {
        let ids: Vec<VariableId> = model.variable_ids().cloned().collect();
        let index: HashMap<VariableId, usize> = ids.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let domains: Vec<Domain> =
            ids.iter().map(|id| model.domain_of(id.as_str()).expect("id from model").clone()).collect();
        let pos = |var: &VariableId, value: &Value| -> Result<u16, ModelError> {
            let i = *index.get(var).ok_or_else(|| ModelError::UnknownVariable(var.clone()))?;
            domains[i]
                .position(value)
                .map(|p| p as u16)
                .ok_or_else(|| ModelError::ValueNotInDomain { variable: var.clone(), value: value.clone() })
        };

        let mut nodes = vec![Node::Exogenous; ids.len()];
        for var in &model.endogenous {
            let parents: Vec<usize> = var.parents.iter().map(|p| index[p]).collect();
            let radix: Vec<usize> = parents.iter().map(|&p| domains[p].len()).collect();
            let size: usize = radix.iter().product();
            let mut table = vec![0u16; size];
            for (key, out) in &var.table {
                let mut slot = 0usize;
                for ((p, v), r) in var.parents.iter().zip(key).zip(&radix) {
                    slot = slot * r + pos(p, v)? as usize;
                }
                table[slot] = pos(&var.id, out)?;
            }
            nodes[index[&var.id]] = Node::Endogenous { parents, radix, table };
        }
        for action in &model.actions {
            let binding = match &action.binding {
                None => None,
                Some(b) => {
                    let mut rules = Vec::with_capacity(b.rules.len());
                    for (cond, value) in &b.rules {
                        let lits = cond
                            .literals()
                            .map(|(k, v)| Ok((index[k], pos(k, v)?)))
                            .collect::<Result<Vec<_>, ModelError>>()?;
                        rules.push((lits, pos(&action.id, value)?));
                    }
                    Some(rules)
                }
            };
            nodes[index[&action.id]] = Node::Action { binding };
        }
        let order = topological_order(model)
            .map_err(|_| ModelError::Invalid(validate_model(model)))?
            .iter()
            .map(|id| index[id])
            .filter(|&i| !matches!(nodes[i], Node::Exogenous))
            .collect();
        let exo = model.exogenous.iter().map(|v| index[&v.id]).collect();
        let exo_probs = model.exogenous.iter().map(|v| v.probabilities.clone()).collect();
        Ok(Compiled { ids, index, domains, nodes, order, exo, exo_probs })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    /// Per-node fixed values for an intervention; checks that every unbound
    /// action is covered.
    pub fn fixed(&self, intervention: &Intervention) -> Result<Vec<Option<u16>>, ModelError> {
        let mut fixed = vec![None; self.ids.len()];
        for (var, value) in intervention.iter() {
            let i = *self.index.get(var).ok_or_else(|| ModelError::UnknownVariable(var.clone()))?;
            if !matches!(self.nodes[i], Node::Action { .. }) {
                return Err(ModelError::NotAnAction(var.clone()));
            }
            let v = self.domains[i]
                .position(value)
                .ok_or_else(|| ModelError::ValueNotInDomain { variable: var.clone(), value: value.clone() })?;
            fixed[i] = Some(v as u16);
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if let Node::Action { binding: None } = node {
                if fixed[i].is_none() {
                    return Err(ModelError::UnboundAction(self.ids[i].clone()));
                }
            }
        }
        Ok(fixed)
    }

    pub fn literals(&self, event: &Event) -> Result<Vec<(usize, u16)>, ModelError> {
        event
            .literals()
            .map(|(var, value)| {
                let i = *self.index.get(var).ok_or_else(|| ModelError::UnknownVariable(var.clone()))?;
                let v = self.domains[i]
                    .position(value)
                    .ok_or_else(|| ModelError::ValueNotInDomain { variable: var.clone(), value: value.clone() })?;
                Ok((i, v as u16))
            })
            .collect()
    }

    pub fn eval(&self, context: &[u16], fixed: &[Option<u16>], world: &mut [u16]) -> Result<(), ModelError> {
        for (slot, &i) in self.exo.iter().enumerate() {
            world[i] = context[slot];
        }
        for &i in &self.order {
            if let Some(v) = fixed[i] {
                world[i] = v;
                continue;
            }
            world[i] = match &self.nodes[i] {
                Node::Exogenous => unreachable!("exogenous nodes are not in the evaluation order"),
                Node::Endogenous { parents, radix, table } => {
                    let mut slot = 0usize;
                    for (&p, &r) in parents.iter().zip(radix) {
                        slot = slot * r + world[p] as usize;
                    }
                    table[slot]
                }
                Node::Action { binding: Some(rules) } => rules
                    .iter()
                    .find(|(cond, _)| cond.iter().all(|&(k, v)| world[k] == v))
                    .map(|(_, v)| *v)
                    .ok_or_else(|| ModelError::PolicyUncovered(self.ids[i].clone()))?,
                Node::Action { binding: None } => return Err(ModelError::UnboundAction(self.ids[i].clone())),
            };
        }
        Ok(())
    }

    pub fn world(&self, values: &[u16]) -> World {
        self.ids
            .iter()
            .zip(values)
            .map(|(id, &v)| (id.clone(), self.domains[self.index[id]].values()[v as usize].clone()))
            .collect()
    }

    pub fn context(&self, values: &[u16]) -> Context {
        self.exo
            .iter()
            .zip(values)
            .map(|(&i, &v)| (self.ids[i].clone(), self.domains[i].values()[v as usize].clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> CausalModel {
        let u = ExogenousVariable::new("U", vec![("0", 0.5), ("1", 0.5)]);
        let mut table = BTreeMap::new();
        table.insert(vec![Value::from("0")], Value::from("0"));
        table.insert(vec![Value::from("1")], Value::from("1"));
        let x = EndogenousVariable::new("X", Domain::new(["0", "1"]), vec!["U".into()], table);
        CausalModel::new(vec![u], vec![x], vec![])
    }

    #[test]
    fn minimal_chain_is_valid() {
        assert!(validate_model(&chain()).is_empty());
    }

    #[test]
    fn unnormalized_distribution_is_reported() {
        let mut m = chain();
        m.exogenous[0].probabilities = vec![0.4, 0.5];
        let vs = validate_model(&m);
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].message, "distribution not normalized: U");
        assert_eq!(vs[0].variable, Some(VariableId::from("U")));
    }

    #[test]
    fn two_cycle_is_reported() {
        let mut tx = BTreeMap::new();
        tx.insert(vec![Value::from("a")], Value::from("a"));
        let x = EndogenousVariable::new("X", Domain::new(["a"]), vec!["Y".into()], tx.clone());
        let y = EndogenousVariable::new("Y", Domain::new(["a"]), vec!["X".into()], tx);
        let m = CausalModel::new(vec![], vec![x, y], vec![]);
        let vs = validate_model(&m);
        assert!(vs.iter().any(|v| v.kind == ViolationKind::Cycle && v.message.starts_with("cycle detected")));
    }

    #[test]
    fn partial_table_and_bad_outputs() {
        let mut m = chain();
        m.endogenous[0].table.remove(&vec![Value::from("1")]);
        m.endogenous[0].table.insert(vec![Value::from("0")], Value::from("7"));
        let kinds: Vec<_> = validate_model(&m).into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::TableNotTotal));
        assert!(kinds.contains(&ViolationKind::TableValueOutOfDomain));
    }

    #[test]
    fn identifiers_and_time_suffixes() {
        assert!(VariableId::from("Shoot@2").is_well_formed());
        assert_eq!(VariableId::from("Shoot@2").time_index(), Some(2));
        assert!(VariableId::from("_x9").is_well_formed());
        assert!(!VariableId::from("9x").is_well_formed());
        assert!(!VariableId::from("a@").is_well_formed());
        assert!(!VariableId::from("").is_well_formed());
        assert!(!Value::from("_").is_well_formed());
        assert!(Value::from("1").is_well_formed());
    }

    #[test]
    fn evaluate_chain_propagates_identity() {
        let mut ctx = Context::new();
        ctx.insert("U".into(), "1".into());
        let w = chain().evaluate(&ctx, &Intervention::new()).unwrap();
        assert_eq!(w.get("U"), Some(&Value::from("1")));
        assert_eq!(w.get("X"), Some(&Value::from("1")));
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn evaluate_reports_missing_context_and_bad_do() {
        let m = chain();
        assert_eq!(
            m.evaluate(&Context::new(), &Intervention::new()),
            Err(ModelError::MissingContext("U".into()))
        );
        let mut ctx = Context::new();
        ctx.insert("U".into(), "0".into());
        assert_eq!(
            m.evaluate(&ctx, &Intervention::single("Q", "0")),
            Err(ModelError::UnknownVariable("Q".into()))
        );
        assert_eq!(m.evaluate(&ctx, &Intervention::single("X", "0")), Err(ModelError::NotAnAction("X".into())));
    }

    #[test]
    fn unbound_action_is_an_error() {
        let mut m = chain();
        m.actions.push(ActionVariable::new("A", Domain::new(["a", "b"])));
        let mut ctx = Context::new();
        ctx.insert("U".into(), "0".into());
        assert_eq!(m.evaluate(&ctx, &Intervention::new()), Err(ModelError::UnboundAction("A".into())));
    }

    #[test]
    fn surgery_makes_constants_and_leaves_original() {
        let mut m = chain();
        m.actions.push(ActionVariable::new("A", Domain::new(["a", "b"])));
        let before = m.clone();
        let s = m.intervened(&Intervention::single("A", "b")).unwrap();
        assert_eq!(m, before);
        assert!(s.actions.is_empty());
        let a = s.endogenous_var("A").unwrap();
        assert!(a.parents.is_empty());
        assert_eq!(a.table.get(&Vec::new()), Some(&Value::from("b")));
        assert_eq!(m.intervened(&Intervention::new()).unwrap(), m);
        assert_eq!(m.intervened(&Intervention::single("Z", "a")), Err(ModelError::UnknownVariable("Z".into())));
        assert_eq!(m.intervened(&Intervention::single("X", "0")), Err(ModelError::NotAnAction("X".into())));
    }

    #[test]
    fn policy_binding_follows_first_matching_rule() {
        let mut m = chain();
        m.actions.push(ActionVariable::new("A", Domain::new(["a", "b"])));
        let policy = Policy {
            rules: vec![
                PolicyRule { condition: Event::literal("X", "1"), action: Intervention::single("A", "b") },
                PolicyRule { condition: Event::literal("X", "0"), action: Intervention::single("A", "a") },
            ],
        };
        let bound = m.bind_policy(&policy).unwrap();
        assert!(validate_model(&bound).is_empty());
        let mut ctx = Context::new();
        ctx.insert("U".into(), "1".into());
        let w = bound.evaluate(&ctx, &Intervention::new()).unwrap();
        assert_eq!(w.get("A"), Some(&Value::from("b")));
        // an explicit intervention wins over the binding
        let w = bound.evaluate(&ctx, &Intervention::single("A", "a")).unwrap();
        assert_eq!(w.get("A"), Some(&Value::from("a")));
        assert_eq!(bound.parents_of("A"), vec![VariableId::from("X")]);
    }

    #[test]
    fn event_rejects_empty_and_duplicates() {
        assert_eq!(Event::new(Vec::new()), Err(EventError::Empty));
        let dup = vec![("X".into(), "0".into()), ("X".into(), "1".into())];
        assert_eq!(Event::new(dup), Err(EventError::DuplicateVariable("X".into())));
    }

    #[test]
    fn policy_action_for_detects_disagreement() {
        let c = Event::literal("S", "s");
        let p = Policy {
            rules: vec![
                PolicyRule { condition: c.clone(), action: Intervention::single("A", "x") },
                PolicyRule { condition: c.clone(), action: Intervention::single("A", "y") },
            ],
        };
        assert_eq!(p.action_for(&c), None);
        assert_eq!(p.conditions().len(), 1);
    }
}
