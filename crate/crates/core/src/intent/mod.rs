//! Intent predicates and the moral-responsibility comparison.
//!
//! Every predicate except moral responsibility reads only the agent's
//! subjective model: the objective model and the realized world never reach
//! the clause computations. Each predicate returns a [`Verdict`] whose
//! `holds` flag is recomputed from its clauses.

mod capacity;
mod verdict;

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::inference::{Inference, InferenceError, DEFAULT_CONTEXT_CAP};
use crate::model::{
    CausalModel, Domain, EndogenousVariable, Event, ExogenousVariable, Intervention, ModelError, Policy, Value,
    VariableId,
};
use crate::scenario::{Query, Scenario};

pub use capacity::{check_capacity, CapacityReport, Requirement};
pub use verdict::{
    explain, verdicts_to_json, ClauseId, ClauseResult, Definition, Detail, Evidence, EvidenceTrace, Verdict,
};

/// How the knowledge clause may be satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KnowledgeMode {
    /// Only declared observables count.
    DeclaredOnly,
    /// A result is also known when the observables determine it.
    DeclaredOrInferred,
}

impl KnowledgeMode {
    pub fn keyword(self) -> &'static str {
        match self {
            KnowledgeMode::DeclaredOnly => "declared_only",
            KnowledgeMode::DeclaredOrInferred => "declared_or_inferred",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "declared_only" => Some(KnowledgeMode::DeclaredOnly),
            "declared_or_inferred" => Some(KnowledgeMode::DeclaredOrInferred),
            _ => None,
        }
    }
}

/// Thresholds and switches shared by every predicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntentConfig {
    /// Virtual-certainty threshold for oblique intent.
    pub tau: f64,
    /// Foreseeability floor; probabilities must be strictly above it.
    pub epsilon: f64,
    pub tolerance: f64,
    /// Explicit alternatives. `None` means every other value of the
    /// acted-upon action variables.
    pub reference_actions: Option<Vec<Intervention>>,
    pub exclude_avoided_results: bool,
    pub knowledge_mode: KnowledgeMode,
    #[serde(skip)]
    pub context_cap: u64,
}

impl Default for IntentConfig {
    fn default() -> Self {
        IntentConfig {
            tau: 0.99,
            epsilon: 0.0,
            tolerance: 1e-9,
            reference_actions: None,
            exclude_avoided_results: false,
            knowledge_mode: KnowledgeMode::DeclaredOrInferred,
            context_cap: DEFAULT_CONTEXT_CAP,
        }
    }
}

impl IntentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(format!("tau must lie in (0, 1], got {}", self.tau));
        }
        if !(self.epsilon >= 0.0 && self.epsilon < 1.0) {
            return Err(format!("epsilon must lie in [0, 1), got {}", self.epsilon));
        }
        if self.tau <= self.epsilon {
            return Err(format!("tau ({}) must exceed epsilon ({})", self.tau, self.epsilon));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(format!("tolerance must be positive, got {}", self.tolerance));
        }
        Ok(())
    }
}

/// The agent's own view of the world, aims and commitments.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentModel {
    pub model: CausalModel,
    pub observables: BTreeSet<VariableId>,
    /// Declared aims, in search order.
    pub aims: Vec<Event>,
    pub policy: Option<Policy>,
    pub committed: bool,
}

impl AgentModel {
    pub fn new(model: CausalModel) -> Self {
        AgentModel { model, observables: BTreeSet::new(), aims: Vec::new(), policy: None, committed: false }
    }

    /// The subjective model with policy-targeted actions bound to the policy.
    pub fn evaluation_model(&self) -> Result<CausalModel, ModelError> {
        match &self.policy {
            Some(p) => self.model.bind_policy(p),
            None => Ok(self.model.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntentError {
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("scenario has no commission-time snapshot of the agent")]
    MissingSnapshot,
    #[error("moral responsibility needs a realized world")]
    MissingRealized,
    #[error("agent has no policy")]
    NoPolicy,
    #[error("action {action} is not a sub-assignment of the plan {plan}")]
    NotSubAssignment { action: Intervention, plan: Intervention },
}

impl IntentError {
    /// True when the failure is the context cap rather than bad input.
    pub fn is_too_large(&self) -> bool {
        matches!(self, IntentError::Inference(InferenceError::TooLarge { .. }))
    }
}

/// Every intervention over the variables of `action`, minus `action`
/// itself, in canonical order.
fn alternatives(model: &CausalModel, action: &Intervention) -> Vec<Intervention> {
    let mut out = vec![Intervention::new()];
    for var in action.variables() {
        let domain = model.domain_of(var.as_str()).map(Domain::values).unwrap_or_default();
        out = out
            .into_iter()
            .flat_map(|partial| domain.iter().map(move |v| partial.clone().with(var.clone(), v.clone())))
            .collect();
    }
    out.retain(|i| i != action);
    out
}

const COMMISSION: [ClauseId; 5] = [ClauseId::DIc1, ClauseId::DIc2, ClauseId::DIc3, ClauseId::DIc4a, ClauseId::DIc4b];
const PERSPECTIVE: [ClauseId; 5] = [ClauseId::DIp1, ClauseId::DIp2, ClauseId::DIp3, ClauseId::DIp4a, ClauseId::DIp4b];

/// An alternative action and the probability it gives the result.
type Scored = (Intervention, f64);

/// Subjective reasoning context: one agent, its evaluation model, and the
/// plan that fills in action variables a query leaves unset.
struct Mind<'a> {
    agent: &'a AgentModel,
    model: CausalModel,
    inference: Inference,
    base: Intervention,
    config: &'a IntentConfig,
    /// Drop configured alternatives that mention non-actions.
    lenient_reference: bool,
}

impl<'a> Mind<'a> {
    fn new(
        agent: &'a AgentModel,
        model: CausalModel,
        base: &Intervention,
        config: &'a IntentConfig,
    ) -> Result<Self, IntentError> {
        let inference = Inference::with_cap(&model, config.context_cap)?;
        let base = base.restrict(|v| model.action(v.as_str()).is_some());
        Ok(Mind { agent, model, inference, base, config, lenient_reference: false })
    }

    fn for_agent(agent: &'a AgentModel, base: &Intervention, config: &'a IntentConfig) -> Result<Self, IntentError> {
        Self::new(agent, agent.evaluation_model()?, base, config)
    }

    fn complete(&self, partial: &Intervention) -> Intervention {
        self.base.overlay(partial)
    }

    /// Completed alternatives to `action`, without duplicates or the action
    /// itself.
    fn reference(&self, action: &Intervention) -> Result<Vec<Intervention>, IntentError> {
        let full = self.complete(action);
        let partials = match &self.config.reference_actions {
            Some(list) => list
                .iter()
                .filter(|r| !self.lenient_reference || r.variables().all(|v| self.model.action(v.as_str()).is_some()))
                .cloned()
                .collect(),
            None => alternatives(&self.model, action),
        };
        let mut out: Vec<Intervention> = Vec::new();
        for p in partials {
            self.model.check_intervention(&p)?;
            let c = self.complete(&p);
            if c != full && !out.contains(&c) {
                out.push(c);
            }
        }
        Ok(out)
    }

    fn knowledge(&self, result: &Event, over: &[Intervention]) -> Result<(bool, Option<bool>), IntentError> {
        let declared = result.variables().all(|v| self.agent.observables.contains(v));
        if declared || self.config.knowledge_mode == KnowledgeMode::DeclaredOnly {
            return Ok((declared, None));
        }
        let targets: BTreeSet<VariableId> = result.variables().cloned().collect();
        let inferred = self.inference.determined_by(over, &targets, &self.agent.observables)?;
        Ok((declared, Some(inferred)))
    }

    /// First alternative less likely than `p_action` to yield `result`, and
    /// the least likely alternative overall.
    fn less_likely(
        &self,
        reference: &[Intervention],
        result: &Event,
        p_action: f64,
    ) -> Result<(Option<Scored>, Option<Scored>), IntentError> {
        let mut first_lower = None;
        let mut least: Option<(Intervention, f64)> = None;
        for alt in reference {
            let p = self.inference.prob(alt, result)?;
            if first_lower.is_none() && p < p_action - self.config.tolerance {
                first_lower = Some((alt.clone(), p));
            }
            if least.as_ref().is_none_or(|(_, q)| p < *q) {
                least = Some((alt.clone(), p));
            }
        }
        Ok((first_lower, least))
    }

    fn direct(
        &self,
        result: &Event,
        action: &Intervention,
        ids: [ClauseId; 5],
    ) -> Result<(Vec<ClauseResult>, EvidenceTrace), IntentError> {
        self.model.check_event(result)?;
        self.model.check_intervention(action)?;
        let full = self.complete(action);
        let reference = self.reference(action)?;
        let free = !reference.is_empty();
        let mut clauses = Vec::with_capacity(5);

        clauses.push(ClauseResult::new(
            ids[0],
            free,
            Evidence::new().with("alternatives", Detail::Interventions(reference.clone())),
        ));

        let mut over = vec![full.clone()];
        over.extend(reference.iter().cloned());
        let (declared, inferred) = self.knowledge(result, &over)?;
        let mut ev = Evidence::new().with("observed", Detail::Flag(declared));
        if let Some(i) = inferred {
            ev.push("inferred", Detail::Flag(i));
        }
        clauses.push(ClauseResult::new(ids[1], declared || inferred == Some(true), ev));

        let p = self.inference.prob(&full, result)?;
        let witness = if free { self.inference.but_for_cause(&full, &reference, result)? } else { None };
        let mut ev = Evidence::new()
            .with("p_result", Detail::Probability(p))
            .with("epsilon", Detail::Probability(self.config.epsilon))
            .with("but_for", Detail::Flag(witness.is_some()));
        if let Some(w) = &witness {
            ev.push("witness_context", Detail::Context(w.context.clone()));
            ev.push("counterfactual", Detail::Intervention(w.counterfactual_action.clone()));
        }
        clauses.push(ClauseResult::new(ids[2], witness.is_some() && p > self.config.epsilon, ev));

        let aimed = self.agent.aims.contains(result);
        clauses.push(ClauseResult::new(ids[3], aimed, Evidence::new().with("declared_aim", Detail::Flag(aimed))));

        let (lower, least) = self.less_likely(&reference, result, p)?;
        let mut ev = Evidence::new().with("p_action", Detail::Probability(p));
        if let Some((alt, q)) = lower.as_ref().or(least.as_ref()) {
            ev.push("alternative", Detail::Intervention(alt.clone()));
            ev.push("p_alternative", Detail::Probability(*q));
        }
        clauses.push(ClauseResult::new(ids[4], lower.is_some(), ev));

        let trace = EvidenceTrace { result: result.clone(), action: Some(full), alternatives: reference, witness: None };
        Ok((clauses, trace))
    }

    fn directly_intends(&self, result: &Event, action: &Intervention) -> Result<bool, IntentError> {
        let (clauses, _) = self.direct(result, action, COMMISSION)?;
        Ok(Definition::DirectCommission.combine(&clauses))
    }

    /// Declared aims first, then every single-literal event over endogenous
    /// variables in declaration and domain order.
    fn candidates(&self, exclude: &Event) -> Vec<Event> {
        let mut out: Vec<Event> = Vec::new();
        let aims = self.agent.aims.iter().filter(|a| self.model.check_event(a).is_ok()).cloned();
        let literals = self
            .model
            .endogenous
            .iter()
            .flat_map(|v| v.domain.values().iter().map(move |val| Event::literal(v.id.clone(), val.clone())));
        for e in aims.chain(literals) {
            if &e != exclude && !out.contains(&e) {
                out.push(e);
            }
        }
        out
    }

    /// First candidate result directly intended through `action`, and how
    /// many candidates were examined.
    fn find_intended(&self, action: &Intervention, exclude: &Event) -> Result<(Option<Event>, usize), IntentError> {
        let candidates = self.candidates(exclude);
        for (n, y) in candidates.iter().enumerate() {
            if self.directly_intends(y, action)? {
                return Ok((Some(y.clone()), n + 1));
            }
        }
        Ok((None, candidates.len()))
    }

    fn oblique(&self, result: &Event, action: &Intervention) -> Result<(Vec<ClauseResult>, EvidenceTrace), IntentError> {
        self.model.check_event(result)?;
        self.model.check_intervention(action)?;
        let cfg = self.config;
        let full = self.complete(action);
        let reference = self.reference(action)?;
        let mut clauses = Vec::with_capacity(5);

        let (witness, examined) = self.find_intended(action, result)?;
        let mut ev = Evidence::new().with("candidates_examined", Detail::Count(examined));
        if let Some(y) = &witness {
            ev.push("intended", Detail::Event(y.clone()));
        }
        clauses.push(ClauseResult::new(ClauseId::OI1, witness.is_some(), ev));

        let cause = if reference.is_empty() { None } else { self.inference.but_for_cause(&full, &reference, result)? };
        let mut ev = Evidence::new().with("but_for", Detail::Flag(cause.is_some()));
        if let Some(w) = &cause {
            ev.push("witness_context", Detail::Context(w.context.clone()));
            ev.push("counterfactual", Detail::Intervention(w.counterfactual_action.clone()));
        }
        clauses.push(ClauseResult::new(ClauseId::OIcl, cause.is_some(), ev));

        let threshold = cfg.tau - cfg.tolerance;
        let p = self.inference.prob(&full, result)?;
        clauses.push(ClauseResult::new(
            ClauseId::OI2a,
            p >= threshold,
            Evidence::new().with("p_result", Detail::Probability(p)).with("tau", Detail::Probability(cfg.tau)),
        ));

        let mut ev = Evidence::new();
        let side_effect_of_outcome = match &witness {
            None => {
                ev.push("given", Detail::Text("none".into()));
                false
            }
            Some(y) => {
                ev.push("given", Detail::Event(y.clone()));
                match self.inference.cond_prob(&full, result, y, cfg.tolerance) {
                    Ok(q) => {
                        ev.push("p_result_given", Detail::Probability(q));
                        q >= threshold
                    }
                    Err(InferenceError::UndefinedConditional { .. }) => {
                        ev.push("p_result_given", Detail::Text("undefined".into()));
                        false
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        };
        ev.push("tau", Detail::Probability(cfg.tau));
        clauses.push(ClauseResult::new(ClauseId::OI2b, side_effect_of_outcome, ev));

        if cfg.exclude_avoided_results {
            let (lower, least) = self.less_likely(&reference, result, p)?;
            let mut ev = Evidence::new().with("p_action", Detail::Probability(p));
            if let Some((alt, q)) = lower.as_ref().or(least.as_ref()) {
                ev.push("alternative", Detail::Intervention(alt.clone()));
                ev.push("p_alternative", Detail::Probability(*q));
            }
            ev.push("minimizes", Detail::Flag(lower.is_none()));
            clauses.push(ClauseResult::new(ClauseId::OIav, lower.is_some(), ev));
        }

        let trace = EvidenceTrace { result: result.clone(), action: Some(full), alternatives: reference, witness };
        Ok((clauses, trace))
    }
}

/// Whether the agent can observe or infer `result` under each of `over`.
pub fn knowledge_holds(
    agent: &AgentModel,
    result: &Event,
    config: &IntentConfig,
    over: &[Intervention],
) -> Result<bool, IntentError> {
    let mind = Mind::for_agent(agent, &Intervention::new(), config)?;
    mind.model.check_event(result)?;
    let (declared, inferred) = mind.knowledge(result, over)?;
    Ok(declared || inferred == Some(true))
}

pub fn direct_intent_commission(
    scenario: &Scenario,
    result: &Event,
    action: &Intervention,
    config: &IntentConfig,
) -> Result<Verdict, IntentError> {
    let mind = Mind::for_agent(&scenario.agent, scenario.base_plan(), config)?;
    let (clauses, trace) = mind.direct(result, action, COMMISSION)?;
    Ok(Verdict::new(Definition::DirectCommission, clauses, trace, config))
}

/// Same clauses as [`direct_intent_commission`], judged against the
/// commission-time snapshot of the agent.
pub fn direct_intent_perspective(
    scenario: &Scenario,
    result: &Event,
    action: &Intervention,
    config: &IntentConfig,
) -> Result<Verdict, IntentError> {
    let snapshot = scenario.snapshot.as_ref().ok_or(IntentError::MissingSnapshot)?;
    let mind = Mind::for_agent(snapshot, scenario.base_plan(), config)?;
    let (clauses, trace) = mind.direct(result, action, PERSPECTIVE)?;
    Ok(Verdict::new(Definition::DirectPerspective, clauses, trace, config))
}

pub fn moral_responsibility(
    scenario: &Scenario,
    outcome: &Event,
    action: &Intervention,
    config: &IntentConfig,
) -> Result<Verdict, IntentError> {
    let realized = scenario.realized.as_ref().ok_or(IntentError::MissingRealized)?;
    let mind = Mind::for_agent(&scenario.agent, scenario.base_plan(), config)?;
    mind.model.check_event(outcome)?;
    mind.model.check_intervention(action)?;
    let full = mind.complete(action);
    let reference = mind.reference(action)?;
    let mut clauses = Vec::with_capacity(3);

    clauses.push(ClauseResult::new(
        ClauseId::MR1,
        !reference.is_empty(),
        Evidence::new().with("alternatives", Detail::Interventions(reference.clone())),
    ));

    let objective = &scenario.objective;
    objective.check_event(outcome)?;
    let obj_inference = Inference::with_cap(objective, config.context_cap)?;
    let is_obj_action = |v: &VariableId| objective.action(v.as_str()).is_some();
    let obj_base = scenario.base_plan().restrict(is_obj_action);
    let obj_full = obj_base.overlay(&full.restrict(is_obj_action));
    let mut obj_reference: Vec<Intervention> = Vec::new();
    for r in &reference {
        let c = obj_base.overlay(&r.restrict(is_obj_action));
        if c != obj_full && !obj_reference.contains(&c) {
            obj_reference.push(c);
        }
    }
    let cause = if obj_reference.is_empty() {
        None
    } else {
        obj_inference.but_for_cause(&obj_full, &obj_reference, outcome)?
    };
    let occurred = outcome.holds_in(realized);
    let mut ev = Evidence::new()
        .with("objective_but_for", Detail::Flag(cause.is_some()))
        .with("outcome_realized", Detail::Flag(occurred));
    if let Some(w) = &cause {
        ev.push("witness_context", Detail::Context(w.context.clone()));
        ev.push("counterfactual", Detail::Intervention(w.counterfactual_action.clone()));
    }
    clauses.push(ClauseResult::new(ClauseId::MR2, cause.is_some() && occurred, ev));

    let p = mind.inference.prob(&full, outcome)?;
    let (lower, least) = mind.less_likely(&reference, outcome, p)?;
    let mut ev = Evidence::new().with("p_action", Detail::Probability(p));
    if let Some((alt, q)) = lower.as_ref().or(least.as_ref()) {
        ev.push("alternative", Detail::Intervention(alt.clone()));
        ev.push("p_alternative", Detail::Probability(*q));
    }
    ev.push("minimizes", Detail::Flag(lower.is_none()));
    clauses.push(ClauseResult::new(ClauseId::MR3, lower.is_some(), ev));

    let trace = EvidenceTrace { result: outcome.clone(), action: Some(full), alternatives: reference, witness: None };
    Ok(Verdict::new(Definition::MoralResponsibility, clauses, trace, config))
}

pub fn means_end_intent(
    scenario: &Scenario,
    result: &Event,
    action: &Intervention,
    config: &IntentConfig,
) -> Result<Verdict, IntentError> {
    let plan = scenario.base_plan().clone();
    if !action.is_subassignment_of(&plan) {
        return Err(IntentError::NotSubAssignment { action: action.clone(), plan });
    }
    let mind = Mind::for_agent(&scenario.agent, &plan, config)?;
    mind.model.check_event(result)?;
    mind.model.check_intervention(action)?;
    let mut clauses = Vec::with_capacity(4);

    let (witness, examined) = mind.find_intended(&plan, result)?;
    let mut ev = Evidence::new().with("candidates_examined", Detail::Count(examined));
    if let Some(y) = &witness {
        ev.push("intended", Detail::Event(y.clone()));
    }
    ev.push("plan", Detail::Intervention(mind.complete(&plan)));
    clauses.push(ClauseResult::new(ClauseId::ME1, witness.is_some(), ev));

    let full = mind.complete(action);
    let reference = mind.reference(action)?;
    let cause = if reference.is_empty() { None } else { mind.inference.but_for_cause(&full, &reference, result)? };
    let mut ev = Evidence::new().with("but_for", Detail::Flag(cause.is_some()));
    if let Some(w) = &cause {
        ev.push("witness_context", Detail::Context(w.context.clone()));
        ev.push("counterfactual", Detail::Intervention(w.counterfactual_action.clone()));
    }
    clauses.push(ClauseResult::new(ClauseId::ME2, cause.is_some(), ev));

    clauses.push(ClauseResult::new(
        ClauseId::ME3,
        true,
        Evidence::new().with("action", Detail::Intervention(action.clone())).with("plan", Detail::Intervention(plan.clone())),
    ));

    let mut ev = Evidence::new();
    let necessary = match &witness {
        None => {
            ev.push("intended", Detail::Text("none".into()));
            false
        }
        Some(y) => {
            let counterexample = mind.inference.necessity_counterexample(&mind.complete(&plan), result, y)?;
            ev.push("intended", Detail::Event(y.clone()));
            if let Some(ctx) = &counterexample {
                ev.push("counterexample_context", Detail::Context(ctx.clone()));
            }
            counterexample.is_none()
        }
    };
    clauses.push(ClauseResult::new(ClauseId::ME4, necessary, ev));

    let trace = EvidenceTrace { result: result.clone(), action: Some(full), alternatives: reference, witness };
    Ok(Verdict::new(Definition::MeansEnd, clauses, trace, config))
}

pub fn oblique_intent(
    scenario: &Scenario,
    result: &Event,
    action: &Intervention,
    config: &IntentConfig,
) -> Result<Verdict, IntentError> {
    let mind = Mind::for_agent(&scenario.agent, scenario.base_plan(), config)?;
    let (clauses, trace) = mind.oblique(result, action)?;
    Ok(Verdict::new(Definition::Oblique, clauses, trace, config))
}

/// Rebuilds `bound` restricted to the positive-probability contexts where
/// `condition` holds under `earlier`: one fresh exogenous variable ranges
/// over those contexts, the old exogenous variables become its functions,
/// `earlier` actions become constants and policy bindings are dropped.
fn conditioned_submodel(
    bound: &CausalModel,
    inference: &Inference,
    earlier: &Intervention,
    condition: &Event,
) -> Result<CausalModel, IntentError> {
    let rows = inference.contexts_where(earlier, condition)?;
    let total: f64 = rows.iter().map(|(_, p)| p).sum();
    let mut name = String::from("_context");
    while bound.kind_of(&name).is_some() {
        name.push('_');
    }
    let id = VariableId::new(name);
    let labels: Vec<Value> = (0..rows.len()).map(|i| Value::new(format!("c{i}"))).collect();
    let exo = ExogenousVariable {
        id: id.clone(),
        domain: Domain::new(labels.clone()),
        probabilities: rows.iter().map(|(_, p)| p / total).collect(),
    };
    let former = bound.exogenous.iter().map(|x| {
        let table = labels
            .iter()
            .zip(&rows)
            .map(|(label, (ctx, _))| (vec![label.clone()], ctx[&x.id].clone()))
            .collect();
        EndogenousVariable::new(x.id.clone(), x.domain.clone(), vec![id.clone()], table)
    });
    let surgered = bound.intervened(earlier)?.unbound();
    let endogenous = former.chain(surgered.endogenous).collect();
    Ok(CausalModel::new(vec![exo], endogenous, surgered.actions))
}

pub fn ulterior_intent(scenario: &Scenario, result: &Event, config: &IntentConfig) -> Result<Verdict, IntentError> {
    let agent = &scenario.agent;
    let policy = agent.policy.as_ref().ok_or(IntentError::NoPolicy)?;
    let bound = agent.evaluation_model()?;
    bound.check_event(result)?;
    let targets = policy.targets();
    let earlier = scenario
        .base_plan()
        .restrict(|v| !targets.contains(v) && bound.action(v.as_str()).is_some());
    let inference = Inference::with_cap(&bound, config.context_cap)?;

    let mut coincidence = Evidence::new();
    let mut witness: Option<(Event, Intervention)> = None;
    for (n, condition) in policy.conditions().into_iter().enumerate() {
        let p = inference.prob(&earlier, condition)?;
        let foreseeable = p > config.epsilon;
        let action = policy.action_for(condition);
        let outcome = match action {
            None => "policy not deterministic".to_string(),
            Some(_) if !foreseeable => "not foreseeable".to_string(),
            Some(action) => {
                let sub = conditioned_submodel(&bound, &inference, &earlier, condition)?;
                let sub_agent = AgentModel { model: sub, policy: None, ..agent.clone() };
                let mut mind = Mind::new(&sub_agent, sub_agent.model.clone(), action, config)?;
                mind.lenient_reference = true;
                let mode = if mind.directly_intends(result, action)? {
                    Some("directly intended")
                } else {
                    let (clauses, _) = mind.oblique(result, action)?;
                    Definition::Oblique.combine(&clauses).then_some("obliquely intended")
                };
                if let (Some(_), None) = (mode, &witness) {
                    witness = Some((condition.clone(), action.clone()));
                }
                mode.unwrap_or("not intended").to_string()
            }
        };
        coincidence.push(
            &format!("branch_{}", n + 1),
            Detail::Text(format!("{condition}: p = {}, {outcome}", crate::number::format_probability(p))),
        );
    }
    if let Some((condition, action)) = &witness {
        coincidence.push("condition", Detail::Event(condition.clone()));
        coincidence.push("action", Detail::Intervention(action.clone()));
    }
    let clauses = vec![
        ClauseResult::new(ClauseId::UI1, witness.is_some(), coincidence),
        ClauseResult::new(ClauseId::UI2, agent.committed, Evidence::new().with("committed", Detail::Flag(agent.committed))),
    ];
    let trace = EvidenceTrace {
        result: result.clone(),
        action: witness.as_ref().map(|(_, a)| a.clone()),
        alternatives: Vec::new(),
        witness: witness.map(|(c, _)| c),
    };
    Ok(Verdict::new(Definition::Ulterior, clauses, trace, config))
}

/// Runs one query; the action defaults to the scenario's performed action.
pub fn evaluate_query(scenario: &Scenario, query: &Query, config: &IntentConfig) -> Result<Verdict, IntentError> {
    let action = query.action.as_ref().unwrap_or(&scenario.performed);
    match query.definition {
        Definition::DirectCommission => direct_intent_commission(scenario, &query.result, action, config),
        Definition::DirectPerspective => direct_intent_perspective(scenario, &query.result, action, config),
        Definition::MeansEnd => means_end_intent(scenario, &query.result, action, config),
        Definition::Oblique => oblique_intent(scenario, &query.result, action, config),
        Definition::Ulterior => ulterior_intent(scenario, &query.result, config),
        Definition::MoralResponsibility => moral_responsibility(scenario, &query.result, action, config),
    }
}
