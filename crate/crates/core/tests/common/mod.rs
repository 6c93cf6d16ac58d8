//! Shared helpers: a seeded random scenario generator and an evaluator
//! that shares no code with the library's inference path.

#![allow(dead_code)]

pub mod props;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use intent_core::intent::{AgentModel, IntentConfig};
use intent_core::model::{
    ActionVariable, CausalModel, Domain, EndogenousVariable, Event, ExogenousVariable, Intervention, Policy,
    PolicyRule, Value, VariableId, World,
};
use intent_core::scenario::Scenario;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn binary() -> Domain {
    Domain::new(["0", "1"])
}

fn keys(domains: &[&Domain]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        let mut next = Vec::new();
        for prefix in &out {
            for v in d.values() {
                let mut k: Vec<Value> = prefix.clone();
                k.push(v.clone());
                next.push(k);
            }
        }
        out = next;
    }
    out
}

/// A valid model with between 3 and `max_vars` binary variables.
pub fn random_model(rng: &mut TestRng, max_vars: usize) -> CausalModel {
    let total = rng.gen_range(3..=max_vars.max(3));
    let n_exo = rng.gen_range(1..=(total - 2).min(3));
    let n_act = rng.gen_range(1..=(total - n_exo - 1).min(2));
    let n_endo = total - n_exo - n_act;

    let mut earlier: Vec<VariableId> = Vec::new();
    let mut exogenous = Vec::new();
    for i in 0..n_exo {
        let k = rng.gen_range(0..=10);
        let id = VariableId::new(format!("U{i}"));
        exogenous.push(ExogenousVariable::new(id.clone(), vec![("0", k as f64 / 10.0), ("1", (10 - k) as f64 / 10.0)]));
        earlier.push(id);
    }
    let mut actions = Vec::new();
    for i in 0..n_act {
        let id = VariableId::new(format!("A{i}"));
        actions.push(ActionVariable::new(id.clone(), binary()));
        earlier.push(id);
    }
    let mut endogenous = Vec::new();
    let domain = binary();
    for i in 0..n_endo {
        let k = rng.gen_range(0..=earlier.len().min(3));
        let mut parents: Vec<VariableId> = earlier.choose_multiple(rng, k).cloned().collect();
        parents.sort();
        let parent_domains: Vec<&Domain> = parents.iter().map(|_| &domain).collect();
        let table: BTreeMap<Vec<Value>, Value> = keys(&parent_domains)
            .into_iter()
            .map(|key| (key, Value::new(if rng.gen_bool(0.5) { "1" } else { "0" })))
            .collect();
        let id = VariableId::new(format!("X{i}"));
        endogenous.push(EndogenousVariable::new(id.clone(), binary(), parents, table));
        earlier.push(id);
    }
    CausalModel::new(exogenous, endogenous, actions)
}

pub fn random_literal(rng: &mut TestRng, model: &CausalModel) -> Event {
    let v = model.endogenous.choose(rng).expect("at least one endogenous variable");
    Event::literal(v.id.clone(), v.domain.values().choose(rng).unwrap().clone())
}

pub fn random_event(rng: &mut TestRng, model: &CausalModel) -> Event {
    let ids: Vec<&VariableId> = model.variable_ids().collect();
    let k = rng.gen_range(1..=2.min(ids.len()));
    let lits = ids.choose_multiple(rng, k).map(|id| {
        let d = model.domain_of(id.as_str()).unwrap();
        ((*id).clone(), d.values().choose(rng).unwrap().clone())
    });
    Event::new(lits).unwrap()
}

pub fn random_full_action(rng: &mut TestRng, model: &CausalModel) -> Intervention {
    model.actions.iter().map(|a| (a.id.clone(), a.domain.values().choose(rng).unwrap().clone())).collect()
}

/// A policy for one action, conditioned on a variable that does not
/// depend on that action.
pub fn random_policy(rng: &mut TestRng, model: &CausalModel) -> Option<Policy> {
    let target = model.actions.choose(rng)?;
    let below = model.descendants([&target.id]);
    let candidates: Vec<&VariableId> = model
        .exogenous
        .iter()
        .map(|x| &x.id)
        .chain(model.endogenous.iter().map(|v| &v.id).filter(|id| !below.contains(*id)))
        .collect();
    let condition = *candidates.choose(rng)?;
    let domain = model.domain_of(condition.as_str()).unwrap();
    let rules = domain
        .values()
        .iter()
        .map(|v| PolicyRule {
            condition: Event::literal(condition.clone(), v.clone()),
            action: Intervention::single(target.id.clone(), target.domain.values().choose(rng).unwrap().clone()),
        })
        .collect();
    Some(Policy { rules })
}

/// A world drawn from a positive-probability context under `performed`.
pub fn random_realized(rng: &mut TestRng, model: &CausalModel, performed: &Intervention) -> Option<World> {
    let contexts: Vec<BTreeMap<VariableId, Value>> =
        all_contexts(model).into_iter().filter(|(_, p)| *p > 0.0).map(|(c, _)| c).collect();
    let ctx = contexts.choose(rng)?;
    model.evaluate(ctx, performed).ok()
}

pub fn random_scenario(rng: &mut TestRng, max_vars: usize) -> Scenario {
    let objective = random_model(rng, max_vars);
    let mut agent = AgentModel::new(objective.clone());
    for id in objective.variable_ids() {
        if rng.gen_bool(0.5) {
            agent.observables.insert(id.clone());
        }
    }
    for _ in 0..rng.gen_range(0..=2) {
        let aim = random_literal(rng, &objective);
        if !agent.aims.contains(&aim) {
            agent.aims.push(aim);
        }
    }
    if rng.gen_bool(0.4) {
        agent.policy = random_policy(rng, &objective);
    }
    agent.committed = rng.gen_bool(0.5);
    let performed = random_full_action(rng, &objective);
    let realized = if rng.gen_bool(0.5) { random_realized(rng, &objective, &performed) } else { None };
    Scenario {
        objective,
        snapshot: Some(agent.clone()),
        agent,
        performed,
        plan: None,
        realized,
        config: IntentConfig::default(),
        queries: Vec::new(),
    }
}

// Independent evaluator. Works on strings and never calls into the
// library's evaluation or inference code.

type Assignment = HashMap<String, String>;

fn names(model: &CausalModel) -> Vec<(String, Vec<String>)> {
    let mut out = Vec::new();
    for x in &model.exogenous {
        out.push((x.id.to_string(), x.domain.values().iter().map(|v| v.to_string()).collect()));
    }
    for a in &model.actions {
        out.push((a.id.to_string(), a.domain.values().iter().map(|v| v.to_string()).collect()));
    }
    for v in &model.endogenous {
        out.push((v.id.to_string(), v.domain.values().iter().map(|v| v.to_string()).collect()));
    }
    out
}

fn odometer(vars: &[(String, Vec<String>)]) -> Vec<Assignment> {
    let mut out: Vec<Assignment> = vec![HashMap::new()];
    for (name, values) in vars {
        let mut next = Vec::with_capacity(out.len() * values.len());
        for partial in &out {
            for v in values {
                let mut a = partial.clone();
                a.insert(name.clone(), v.clone());
                next.push(a);
            }
        }
        out = next;
    }
    out
}

fn exo_weight(model: &CausalModel, a: &Assignment) -> f64 {
    model
        .exogenous
        .iter()
        .map(|x| {
            let v = &a[x.id.as_str()];
            x.domain.values().iter().zip(&x.probabilities).find(|(d, _)| d.as_str() == v).map(|(_, p)| *p).unwrap()
        })
        .product()
}

fn holds(a: &Assignment, event: &Event) -> bool {
    event.literals().all(|(k, v)| a.get(k.as_str()).map(String::as_str) == Some(v.as_str()))
}

fn action_value(model: &CausalModel, a: &Assignment, id: &VariableId, intervention: &Intervention) -> Option<String> {
    if let Some(v) = intervention.get(id.as_str()) {
        return Some(v.to_string());
    }
    let action = model.actions.iter().find(|x| &x.id == id).unwrap();
    let binding = action.binding.as_ref()?;
    binding.rules.iter().find(|(cond, _)| holds(a, cond)).map(|(_, v)| v.to_string())
}

/// Consistency of a full assignment with the structural equations.
fn consistent(model: &CausalModel, a: &Assignment, intervention: &Intervention) -> bool {
    for act in &model.actions {
        match action_value(model, a, &act.id, intervention) {
            Some(v) if v == a[act.id.as_str()] => {}
            Some(_) => return false,
            None => panic!("action {} is free in the oracle", act.id),
        }
    }
    model.endogenous.iter().all(|v| {
        let key: Vec<Value> = v.parents.iter().map(|p| Value::new(a[p.as_str()].clone())).collect();
        v.table[&key].as_str() == a[v.id.as_str()]
    })
}

/// P(event | do(intervention)) by summing the weight of every full
/// assignment consistent with the model.
pub fn tabulated_prob(model: &CausalModel, intervention: &Intervention, event: &Event) -> f64 {
    let vars = names(model);
    odometer(&vars)
        .into_iter()
        .filter(|a| holds(a, event) && consistent(model, a, intervention))
        .map(|a| exo_weight(model, &a))
        .sum()
}

/// Every exogenous context with its probability.
pub fn all_contexts(model: &CausalModel) -> Vec<(BTreeMap<VariableId, Value>, f64)> {
    let exo: Vec<(String, Vec<String>)> = names(model).into_iter().take(model.exogenous.len()).collect();
    odometer(&exo)
        .into_iter()
        .map(|a| {
            let p = exo_weight(model, &a);
            let ctx = a.into_iter().map(|(k, v)| (VariableId::new(k), Value::new(v))).collect();
            (ctx, p)
        })
        .collect()
}

/// The unique full assignment consistent with `ctx` under `intervention`,
/// found by repeated relaxation rather than a topological order.
pub fn solve(model: &CausalModel, ctx: &BTreeMap<VariableId, Value>, intervention: &Intervention) -> Assignment {
    let mut a: Assignment = ctx.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    loop {
        let before = a.len();
        for act in &model.actions {
            if !a.contains_key(act.id.as_str()) {
                if let Some(v) = intervention.get(act.id.as_str()) {
                    a.insert(act.id.to_string(), v.to_string());
                } else if let Some(b) = &act.binding {
                    let vars: BTreeSet<&VariableId> = b.rules.iter().flat_map(|(c, _)| c.variables()).collect();
                    if vars.iter().all(|v| a.contains_key(v.as_str())) {
                        let v = action_value(model, &a, &act.id, intervention).expect("policy covers context");
                        a.insert(act.id.to_string(), v);
                    }
                }
            }
        }
        for v in &model.endogenous {
            if !a.contains_key(v.id.as_str()) && v.parents.iter().all(|p| a.contains_key(p.as_str())) {
                let key: Vec<Value> = v.parents.iter().map(|p| Value::new(a[p.as_str()].clone())).collect();
                a.insert(v.id.to_string(), v.table[&key].to_string());
            }
        }
        if a.len() == before {
            return a;
        }
    }
}

/// Exhaustive contrastive but-for check.
pub fn oracle_but_for(model: &CausalModel, action: &Intervention, reference: &[Intervention], event: &Event) -> bool {
    all_contexts(model).into_iter().filter(|(_, p)| *p > 0.0).any(|(ctx, _)| {
        holds(&solve(model, &ctx, action), event) && reference.iter().any(|r| !holds(&solve(model, &ctx, r), event))
    })
}

/// Exhaustive check that `inner` holds wherever `outer` does.
pub fn oracle_necessary(model: &CausalModel, plan: &Intervention, inner: &Event, outer: &Event) -> bool {
    all_contexts(model).into_iter().filter(|(_, p)| *p > 0.0).all(|(ctx, _)| {
        let a = solve(model, &ctx, plan);
        !holds(&a, outer) || holds(&a, inner)
    })
}
