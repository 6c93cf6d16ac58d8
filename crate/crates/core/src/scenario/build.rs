//! Turns a syntax tree into a validated [`Scenario`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::*;
use super::{ErrorCode, ParseError, Query, Scenario};
use crate::inference::DEFAULT_CONTEXT_CAP;
use crate::intent::{AgentModel, Definition, IntentConfig, KnowledgeMode};
use crate::model::{
    validate_model, ActionVariable, CausalModel, Domain, EndogenousVariable, Event, ExogenousVariable, Intervention,
    Policy, PolicyRule, Value, VariableId, VariableKind, ViolationKind, World, NORMALIZATION_TOLERANCE,
};

fn err(code: ErrorCode, pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError::new(code, pos, message)
}

fn id_of(name: &Name) -> Result<VariableId, ParseError> {
    let id = VariableId::new(name.value.clone());
    if id.is_well_formed() {
        Ok(id)
    } else {
        Err(err(ErrorCode::Syntax, name.pos, format!("invalid variable id `{}`", name.value)))
    }
}

fn value_of(name: &Name) -> Result<Value, ParseError> {
    let v = Value::new(name.value.clone());
    if v.is_well_formed() {
        Ok(v)
    } else {
        Err(err(ErrorCode::Syntax, name.pos, format!("invalid value `{}`", name.value)))
    }
}

fn domain_of(id: &VariableId, names: &[Name], pos: Pos) -> Result<Domain, ParseError> {
    if names.is_empty() {
        return Err(err(ErrorCode::DomainMismatch, pos, format!("empty domain: {id}")));
    }
    let mut seen = BTreeSet::new();
    let mut values = Vec::with_capacity(names.len());
    for n in names {
        let v = value_of(n)?;
        if !seen.insert(v.clone()) {
            return Err(err(ErrorCode::DomainMismatch, n.pos, format!("duplicate value `{v}` in {id}")));
        }
        values.push(v);
    }
    Ok(Domain::new(values))
}

/// Every full key of a table over `domains`, last parent varying fastest.
pub(super) fn product(domains: &[&Domain]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<Value>| {
                d.values().iter().map(move |v| {
                    let mut k = prefix.clone();
                    k.push(v.clone());
                    k
                })
            })
            .collect();
    }
    out
}

fn stanza_positions(ast: &ModelAst) -> HashMap<String, Pos> {
    let mut out = HashMap::new();
    let ids = ast.exo.iter().map(|x| &x.id).chain(ast.action.iter().map(|a| &a.id)).chain(ast.var.iter().map(|v| &v.id));
    for id in ids {
        out.entry(id.value.clone()).or_insert(id.pos);
    }
    out
}

fn violation_code(kind: ViolationKind) -> ErrorCode {
    use ViolationKind::*;
    match kind {
        InvalidIdentifier | InvalidValue | DuplicateId | DuplicateParent => ErrorCode::Syntax,
        UnknownParent => ErrorCode::UnknownVariable,
        NotNormalized | ProbabilityOutOfRange | DistributionMismatch => ErrorCode::Unnormalized,
        Cycle => ErrorCode::NonDag,
        EmptyDomain | DuplicateValue | TableArity | TableNotTotal | TableKeyOutOfDomain | TableValueOutOfDomain
        | BindingOutOfDomain => ErrorCode::DomainMismatch,
    }
}

/// Maps the first violation of a built model back to a source position.
fn check_built(model: &CausalModel, positions: &HashMap<String, Pos>, fallback: Pos) -> Result<(), ParseError> {
    let violations = validate_model(model);
    if let Some(v) = violations.into_iter().next() {
        let pos = v.variable.as_ref().and_then(|id| positions.get(id.as_str()).copied()).unwrap_or(fallback);
        return Err(err(violation_code(v.kind), pos, v.message));
    }
    Ok(())
}

fn check_time_order(model: &CausalModel, positions: &HashMap<String, Pos>, fallback: Pos) -> Result<(), ParseError> {
    for id in model.variable_ids() {
        let Some(t) = id.time_index() else { continue };
        for parent in model.parents_of(id.as_str()) {
            if parent.time_index().is_some_and(|tp| tp > t) {
                let pos = positions.get(id.as_str()).copied().unwrap_or(fallback);
                return Err(err(
                    ErrorCode::NonDag,
                    pos,
                    format!("{id} depends on later variable {parent}"),
                ));
            }
        }
    }
    Ok(())
}

pub(super) fn build_model(ast: &ModelAst, origin: Pos) -> Result<CausalModel, ParseError> {
    let mut declared: HashMap<VariableId, Pos> = HashMap::new();
    let mut ids: Vec<&Name> = ast.exo.iter().map(|x| &x.id).collect();
    ids.extend(ast.action.iter().map(|a| &a.id));
    ids.extend(ast.var.iter().map(|v| &v.id));
    ids.sort_by_key(|n| n.pos);
    for name in ids {
        let id = id_of(name)?;
        if declared.insert(id.clone(), name.pos).is_some() {
            return Err(err(ErrorCode::Syntax, name.pos, format!("duplicate variable id: {id}")));
        }
    }

    let mut domains: HashMap<VariableId, Domain> = HashMap::new();
    let mut exogenous = Vec::new();
    for x in &ast.exo {
        let id = id_of(&x.id)?;
        let names: Vec<Name> = x.distribution.iter().map(|(v, _)| v.clone()).collect();
        let domain = domain_of(&id, &names, x.id.pos)?;
        let mut probabilities = Vec::with_capacity(names.len());
        for (_, p) in &x.distribution {
            if !(0.0..=1.0).contains(&p.value) {
                return Err(err(
                    ErrorCode::Unnormalized,
                    p.pos,
                    format!("probability {} out of range in {id}", p.value),
                ));
            }
            probabilities.push(p.value);
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(err(
                ErrorCode::Unnormalized,
                x.id.pos,
                format!("distribution not normalized: {id} (sums to {total})"),
            ));
        }
        domains.insert(id.clone(), domain.clone());
        exogenous.push(ExogenousVariable { id, domain, probabilities });
    }
    let mut actions = Vec::new();
    for a in &ast.action {
        let id = id_of(&a.id)?;
        let domain = domain_of(&id, &a.domain, a.id.pos)?;
        domains.insert(id.clone(), domain.clone());
        actions.push(ActionVariable::new(id, domain));
    }
    for v in &ast.var {
        let id = id_of(&v.id)?;
        let domain = match &v.domain {
            Some(names) => domain_of(&id, names, v.id.pos)?,
            None => {
                let mut names: Vec<Name> = Vec::new();
                for row in &v.table {
                    if !names.iter().any(|n| n.value == row.value.value) {
                        names.push(row.value.clone());
                    }
                }
                domain_of(&id, &names, v.id.pos)?
            }
        };
        domains.insert(id, domain);
    }

    let mut endogenous = Vec::new();
    for v in &ast.var {
        let id = id_of(&v.id)?;
        let domain = domains[&id].clone();
        let mut parents: Vec<VariableId> = Vec::new();
        for p in &v.parents {
            let pid = id_of(p)?;
            if !declared.contains_key(&pid) {
                return Err(err(
                    ErrorCode::UnknownVariable,
                    p.pos,
                    format!("unknown variable `{pid}` (parent of {id})"),
                ));
            }
            if pid == id {
                return Err(err(ErrorCode::NonDag, p.pos, format!("cycle detected: {id}")));
            }
            if parents.contains(&pid) {
                return Err(err(ErrorCode::Syntax, p.pos, format!("duplicate parent `{pid}` of {id}")));
            }
            parents.push(pid);
        }
        let parent_domains: Vec<&Domain> = parents.iter().map(|p| &domains[p]).collect();
        let mut table: BTreeMap<Vec<Value>, Value> = BTreeMap::new();
        for row in &v.table {
            if row.key.len() != parents.len() {
                return Err(err(
                    ErrorCode::DomainMismatch,
                    row.pos,
                    format!("{id} has {} parents but the key has {} values", parents.len(), row.key.len()),
                ));
            }
            let out = value_of(&row.value)?;
            if !domain.contains(&out) {
                return Err(err(
                    ErrorCode::DomainMismatch,
                    row.value.pos,
                    format!("value `{out}` is not in the domain of {id}"),
                ));
            }
            let mut choices: Vec<Domain> = Vec::with_capacity(parents.len());
            for ((k, p), d) in row.key.iter().zip(&parents).zip(&parent_domains) {
                if k.value == "_" {
                    choices.push((*d).clone());
                    continue;
                }
                let kv = value_of(k)?;
                if !d.contains(&kv) {
                    return Err(err(
                        ErrorCode::DomainMismatch,
                        k.pos,
                        format!("value `{kv}` is not in the domain of {p}"),
                    ));
                }
                choices.push(Domain::new([kv]));
            }
            for key in product(&choices.iter().collect::<Vec<_>>()) {
                if let Some(prev) = table.insert(key.clone(), out.clone()) {
                    if prev != out {
                        let shown: Vec<&str> = key.iter().map(Value::as_str).collect();
                        return Err(err(
                            ErrorCode::DomainMismatch,
                            row.pos,
                            format!("conflicting table entries for {id} at ({})", shown.join(", ")),
                        ));
                    }
                }
            }
        }
        let size: usize = parent_domains.iter().map(|d| d.len()).product();
        if table.len() < size {
            let missing = product(&parent_domains).into_iter().find(|k| !table.contains_key(k)).unwrap_or_default();
            let shown: Vec<&str> = missing.iter().map(Value::as_str).collect();
            return Err(err(
                ErrorCode::DomainMismatch,
                v.id.pos,
                format!("table not total: {id} (missing ({}))", shown.join(", ")),
            ));
        }
        endogenous.push(EndogenousVariable::new(id, domain, parents, table));
    }

    let model = CausalModel::new(exogenous, endogenous, actions);
    let positions = stanza_positions(ast);
    check_built(&model, &positions, origin)?;
    check_time_order(&model, &positions, origin)?;
    Ok(model)
}

fn literal(a: &Assign, model: &CausalModel) -> Result<(VariableId, Value), ParseError> {
    let id = id_of(&a.0)?;
    let value = value_of(&a.1)?;
    let domain = model
        .domain_of(id.as_str())
        .ok_or_else(|| err(ErrorCode::UnknownVariable, a.0.pos, format!("unknown variable `{id}`")))?;
    if !domain.contains(&value) {
        return Err(err(ErrorCode::DomainMismatch, a.1.pos, format!("value `{value}` is not in the domain of {id}")));
    }
    Ok((id, value))
}

fn literals(assigns: &[Assign], model: &CausalModel) -> Result<Vec<(VariableId, Value)>, ParseError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(assigns.len());
    for a in assigns {
        let (id, value) = literal(a, model)?;
        if !seen.insert(id.clone()) {
            return Err(err(ErrorCode::Syntax, a.0.pos, format!("variable `{id}` assigned twice")));
        }
        out.push((id, value));
    }
    Ok(out)
}

fn event(assigns: &[Assign], model: &CausalModel, pos: Pos) -> Result<Event, ParseError> {
    Event::new(literals(assigns, model)?).map_err(|e| err(ErrorCode::Syntax, pos, e.to_string()))
}

fn intervention(assigns: &[Assign], model: &CausalModel) -> Result<Intervention, ParseError> {
    let lits = literals(assigns, model)?;
    for (a, (id, _)) in assigns.iter().zip(&lits) {
        if model.kind_of(id.as_str()) != Some(VariableKind::Action) {
            return Err(err(ErrorCode::UnknownVariable, a.0.pos, format!("not an action variable: {id}")));
        }
    }
    Ok(lits.into_iter().collect())
}

fn first_pos(assigns: &[Assign], fallback: Pos) -> Pos {
    assigns.first().map(|a| a.0.pos).unwrap_or(fallback)
}

fn build_agent(ast: &AgentAst, objective: &CausalModel) -> Result<AgentModel, ParseError> {
    let model = match &ast.model {
        None => objective.clone(),
        Some(m) => {
            let model = build_model(m, ast.pos)?;
            let positions = stanza_positions(m);
            for id in model.variable_ids() {
                let (Some(mine), Some(theirs)) = (model.domain_of(id.as_str()), objective.domain_of(id.as_str()))
                else {
                    continue;
                };
                let pos = positions.get(id.as_str()).copied().unwrap_or(ast.pos);
                if mine != theirs {
                    return Err(err(
                        ErrorCode::DomainMismatch,
                        pos,
                        format!("{id} has a different domain in the objective model"),
                    ));
                }
                if model.kind_of(id.as_str()) != objective.kind_of(id.as_str())
                    && (model.action(id.as_str()).is_some() || objective.action(id.as_str()).is_some())
                {
                    return Err(err(
                        ErrorCode::DomainMismatch,
                        pos,
                        format!("{id} is an action in only one of the models"),
                    ));
                }
            }
            model
        }
    };
    let mut agent = AgentModel::new(model);
    for o in &ast.observe {
        let id = id_of(o)?;
        if agent.model.kind_of(id.as_str()).is_none() {
            return Err(err(ErrorCode::UnknownVariable, o.pos, format!("unknown variable `{id}`")));
        }
        agent.observables.insert(id);
    }
    for aim in &ast.aims {
        let e = event(aim, &agent.model, first_pos(aim, ast.pos))?;
        if !agent.aims.contains(&e) {
            agent.aims.push(e);
        }
    }
    if !ast.policy.is_empty() {
        let mut rules = Vec::with_capacity(ast.policy.len());
        for r in &ast.policy {
            let condition = event(&r.when, &agent.model, first_pos(&r.when, ast.pos))?;
            let action = intervention(&r.then, &agent.model)?;
            rules.push(PolicyRule { condition, action });
        }
        let policy = Policy { rules };
        let pos = first_pos(&ast.policy[0].when, ast.pos);
        let bound = agent.model.bind_policy(&policy).map_err(|e| err(ErrorCode::DomainMismatch, pos, e.to_string()))?;
        let positions = stanza_positions(ast.model.as_ref().unwrap_or(&ModelAst::default()));
        check_built(&bound, &positions, pos)?;
        check_time_order(&bound, &positions, pos)?;
        agent.policy = Some(policy);
    }
    agent.committed = ast.committed;
    Ok(agent)
}

fn build_config(ast: &ConfigAst, subjective: &CausalModel) -> Result<IntentConfig, ParseError> {
    let mut c = IntentConfig { context_cap: DEFAULT_CONTEXT_CAP, ..IntentConfig::default() };
    let bad = |pos: Pos, msg: String| err(ErrorCode::BadThreshold, pos, msg);
    if let Some(t) = &ast.tau {
        if !(t.value > 0.0 && t.value <= 1.0) {
            return Err(bad(t.pos, format!("tau must lie in (0, 1], got {}", t.value)));
        }
        c.tau = t.value;
    }
    if let Some(e) = &ast.epsilon {
        if !(0.0..1.0).contains(&e.value) {
            return Err(bad(e.pos, format!("epsilon must lie in [0, 1), got {}", e.value)));
        }
        c.epsilon = e.value;
    }
    if c.tau <= c.epsilon {
        let pos = ast.epsilon.as_ref().or(ast.tau.as_ref()).map(|s| s.pos).unwrap_or_default();
        return Err(bad(pos, format!("tau ({}) must exceed epsilon ({})", c.tau, c.epsilon)));
    }
    if let Some(t) = &ast.tolerance {
        if t.value <= 0.0 {
            return Err(bad(t.pos, format!("tolerance must be positive, got {}", t.value)));
        }
        c.tolerance = t.value;
    }
    if let Some(groups) = &ast.reference {
        let mut list = Vec::with_capacity(groups.len());
        for g in groups {
            list.push(intervention(g, subjective)?);
        }
        c.reference_actions = Some(list);
    }
    if let Some(x) = ast.exclude_avoided_results {
        c.exclude_avoided_results = x;
    }
    if let Some(k) = &ast.knowledge {
        c.knowledge_mode = KnowledgeMode::from_keyword(&k.value).ok_or_else(|| {
            err(
                ErrorCode::Syntax,
                k.pos,
                format!("unknown knowledge mode `{}`, expected declared_only or declared_or_inferred", k.value),
            )
        })?;
    }
    Ok(c)
}

fn build_realized(
    assigns: &[Assign],
    objective: &CausalModel,
    performed: &Intervention,
    pos: Pos,
) -> Result<World, ParseError> {
    let inconsistent = |msg: String| err(ErrorCode::InconsistentRealized, pos, msg);
    let world: World = literals(assigns, objective)?.into_iter().collect();
    for id in objective.variable_ids() {
        if world.get(id.as_str()).is_none() {
            return Err(inconsistent(format!("realized world omits {id}")));
        }
    }
    for (var, value) in performed.iter() {
        if let Some(w) = world.get(var.as_str()) {
            if w != value {
                return Err(inconsistent(format!("realized world has {var} = {w} but {var} = {value} was performed")));
            }
        }
    }
    let mut p = 1.0;
    let mut context = BTreeMap::new();
    for x in &objective.exogenous {
        let v = world.get(x.id.as_str()).expect("checked total");
        p *= x.distribution().find(|(d, _)| *d == v).map(|(_, q)| q).unwrap_or(0.0);
        context.insert(x.id.clone(), v.clone());
    }
    if p <= 0.0 {
        return Err(inconsistent("realized context has probability 0".to_string()));
    }
    let actions: Intervention =
        objective.actions.iter().map(|a| (a.id.clone(), world.get(a.id.as_str()).expect("checked total").clone())).collect();
    let evaluated = objective.evaluate(&context, &actions).map_err(|e| inconsistent(e.to_string()))?;
    for (var, value) in evaluated.iter() {
        if world.get(var.as_str()) != Some(value) {
            return Err(inconsistent(format!(
                "realized world disagrees with the objective model at {var} (model gives {value})"
            )));
        }
    }
    Ok(world)
}

fn check_actions_shared(assigns: &[Assign], objective: &CausalModel) -> Result<(), ParseError> {
    for a in assigns {
        let kind = objective.kind_of(&a.0.value);
        if kind.is_some_and(|k| k != VariableKind::Action) {
            return Err(err(
                ErrorCode::DomainMismatch,
                a.0.pos,
                format!("{} is an action in the agent model but not in the objective model", a.0.value),
            ));
        }
    }
    Ok(())
}

pub(super) fn build(doc: &Document) -> Result<Scenario, ParseError> {
    if doc.format.value != 1 {
        return Err(err(ErrorCode::Syntax, doc.format.pos, format!("unsupported format `{}`, expected 1", doc.format.value)));
    }
    let objective = build_model(&doc.model, doc.section_pos.model)?;
    let agent = build_agent(&doc.agent, &objective)?;
    let snapshot = match &doc.snapshot {
        None => Some(agent.clone()),
        Some(None) => None,
        Some(Some(ast)) => Some(build_agent(ast, &objective)?),
    };
    let subjective = &agent.model;

    let performed = intervention(&doc.performed, subjective)?;
    check_actions_shared(&doc.performed, &objective)?;
    let plan = match &doc.plan {
        None => None,
        Some(assigns) => {
            let plan = intervention(assigns, subjective)?;
            check_actions_shared(assigns, &objective)?;
            if !performed.is_subassignment_of(&plan) {
                return Err(err(
                    ErrorCode::DomainMismatch,
                    doc.section_pos.plan,
                    format!("performed action {performed} is not part of the plan {plan}"),
                ));
            }
            Some(plan)
        }
    };
    let realized = match &doc.realized {
        None => None,
        Some(assigns) => Some(build_realized(assigns, &objective, &performed, doc.section_pos.realized)?),
    };
    let config = build_config(&doc.config, subjective)?;

    let mut queries = Vec::with_capacity(doc.queries.len());
    for q in &doc.queries {
        let definition = Definition::from_keyword(&q.definition.value).ok_or_else(|| {
            err(ErrorCode::Syntax, q.definition.pos, format!("unknown definition `{}`", q.definition.value))
        })?;
        let result = event(&q.result, subjective, q.definition.pos)?;
        if definition == Definition::MoralResponsibility {
            event(&q.result, &objective, q.definition.pos)?;
        }
        let action = match &q.action {
            None => None,
            Some(assigns) => Some(intervention(assigns, subjective)?),
        };
        queries.push(Query { definition, result, action });
    }

    Ok(Scenario { objective, agent, snapshot, performed, plan, realized, config, queries })
}
