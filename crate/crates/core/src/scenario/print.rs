//! Canonical serialization.

use std::fmt::Write as _;

use super::ast::*;
use super::build::product;
use super::Scenario;
use crate::intent::AgentModel;
use crate::model::{CausalModel, Domain, Event, Intervention, Value, VariableId};
use crate::number::format_probability;

fn name(s: &str) -> Name {
    Spanned::bare(s.to_string())
}

fn assigns<'a>(literals: impl Iterator<Item = (&'a VariableId, &'a Value)>) -> Vec<Assign> {
    literals.map(|(k, v)| Assign(name(k.as_str()), name(v.as_str()))).collect()
}

fn event_ast(e: &Event) -> Vec<Assign> {
    assigns(e.literals())
}

fn intervention_ast(i: &Intervention) -> Vec<Assign> {
    assigns(i.iter())
}

fn domain_ast(d: &Domain) -> Vec<Name> {
    d.values().iter().map(|v| name(v.as_str())).collect()
}

pub(super) fn model_ast(m: &CausalModel) -> ModelAst {
    let exo = m
        .exogenous
        .iter()
        .map(|x| ExoAst {
            id: name(x.id.as_str()),
            distribution: x.distribution().map(|(v, p)| (name(v.as_str()), Spanned::bare(p))).collect(),
        })
        .collect();
    let action = m.actions.iter().map(|a| ActionAst { id: name(a.id.as_str()), domain: domain_ast(&a.domain) }).collect();
    let var = m
        .endogenous
        .iter()
        .map(|v| {
            let parent_domains: Vec<&Domain> =
                v.parents.iter().map(|p| m.domain_of(p.as_str()).expect("valid model")).collect();
            let table = product(&parent_domains)
                .into_iter()
                .map(|key| {
                    let value = name(v.table[&key].as_str());
                    RowAst { key: key.iter().map(|k| name(k.as_str())).collect(), value, pos: Pos::default() }
                })
                .collect();
            VarAst {
                id: name(v.id.as_str()),
                domain: Some(domain_ast(&v.domain)),
                parents: v.parents.iter().map(|p| name(p.as_str())).collect(),
                table,
            }
        })
        .collect();
    ModelAst { exo, action, var }
}

fn agent_ast(a: &AgentModel, objective: &CausalModel) -> AgentAst {
    AgentAst {
        model: if &a.model == objective { None } else { Some(model_ast(&a.model)) },
        observe: a.observables.iter().map(|o| name(o.as_str())).collect(),
        aims: a.aims.iter().map(event_ast).collect(),
        policy: a
            .policy
            .iter()
            .flat_map(|p| &p.rules)
            .map(|r| RuleAst { when: event_ast(&r.condition), then: intervention_ast(&r.action) })
            .collect(),
        committed: a.committed,
        pos: Pos::default(),
    }
}

pub(super) fn to_document(s: &Scenario) -> Document {
    let c = &s.config;
    Document {
        format: Spanned::bare(1),
        model: model_ast(&s.objective),
        agent: agent_ast(&s.agent, &s.objective),
        snapshot: match &s.snapshot {
            Some(snap) if snap == &s.agent => None,
            Some(snap) => Some(Some(agent_ast(snap, &s.objective))),
            None => Some(None),
        },
        performed: intervention_ast(&s.performed),
        plan: s.plan.as_ref().map(intervention_ast),
        realized: s.realized.as_ref().map(|w| assigns(w.iter())),
        config: ConfigAst {
            tau: Some(Spanned::bare(c.tau)),
            epsilon: Some(Spanned::bare(c.epsilon)),
            tolerance: Some(Spanned::bare(c.tolerance)),
            reference: c.reference_actions.as_ref().map(|r| r.iter().map(intervention_ast).collect()),
            exclude_avoided_results: Some(c.exclude_avoided_results),
            knowledge: Some(name(c.knowledge_mode.keyword())),
        },
        queries: s
            .queries
            .iter()
            .map(|q| QueryAst {
                definition: name(q.definition.keyword()),
                result: event_ast(&q.result),
                action: q.action.as_ref().map(intervention_ast),
            })
            .collect(),
        section_pos: SectionPositions::default(),
    }
}

fn join(assigns: &[Assign], sep: &str) -> String {
    assigns.iter().map(|a| format!("{} = {}", a.0.value, a.1.value)).collect::<Vec<_>>().join(sep)
}

fn names(ns: &[Name]) -> String {
    ns.iter().map(|n| n.value.as_str()).collect::<Vec<_>>().join(", ")
}

fn write_model(out: &mut String, m: &ModelAst, indent: &str) {
    for x in &m.exo {
        let dist: Vec<String> =
            x.distribution.iter().map(|(v, p)| format!("{}: {}", v.value, format_probability(p.value))).collect();
        let _ = writeln!(out, "{indent}exo {} {{{}}}", x.id.value, dist.join(", "));
    }
    for a in &m.action {
        let _ = writeln!(out, "{indent}action {} {{{}}}", a.id.value, names(&a.domain));
    }
    for v in &m.var {
        let _ = write!(out, "{indent}var {}", v.id.value);
        if let Some(d) = &v.domain {
            let _ = write!(out, " [{}]", names(d));
        }
        if !v.parents.is_empty() {
            let _ = write!(out, " ({})", names(&v.parents));
        }
        out.push_str(" {\n");
        for row in &v.table {
            let _ = writeln!(out, "{indent}  ({}) -> {}", names(&row.key), row.value.value);
        }
        let _ = writeln!(out, "{indent}}}");
    }
}

fn write_agent(out: &mut String, a: &AgentAst) {
    match &a.model {
        None => out.push_str("  model same\n"),
        Some(m) => {
            out.push_str("  model {\n");
            write_model(out, m, "    ");
            out.push_str("  }\n");
        }
    }
    if !a.observe.is_empty() {
        let _ = writeln!(out, "  observe {}", names(&a.observe));
    }
    for aim in &a.aims {
        let _ = writeln!(out, "  aim {}", join(aim, " & "));
    }
    for r in &a.policy {
        let _ = writeln!(out, "  policy {} -> {}", join(&r.when, " & "), join(&r.then, ", "));
    }
    let _ = writeln!(out, "  committed {}", a.committed);
}

/// Renders a syntax tree in the canonical text layout.
pub(super) fn print_document(doc: &Document) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "format: {}", doc.format.value);
    out.push_str("\nmodel:\n");
    write_model(&mut out, &doc.model, "  ");
    out.push_str("\nagent:\n");
    write_agent(&mut out, &doc.agent);
    match &doc.snapshot {
        None => {}
        Some(None) => out.push_str("\nsnapshot: none\n"),
        Some(Some(a)) => {
            out.push_str("\nsnapshot:\n");
            write_agent(&mut out, a);
        }
    }
    if !doc.performed.is_empty() {
        let _ = write!(out, "\nperformed:\n  {}\n", join(&doc.performed, ", "));
    }
    for (title, section) in [("plan", &doc.plan), ("realized", &doc.realized)] {
        if let Some(assigns) = section {
            let _ = write!(out, "\n{title}:\n");
            if !assigns.is_empty() {
                let _ = writeln!(out, "  {}", join(assigns, ", "));
            }
        }
    }

    let c = &doc.config;
    let mut config = String::new();
    for (key, value) in [("tau", &c.tau), ("epsilon", &c.epsilon), ("tolerance", &c.tolerance)] {
        if let Some(v) = value {
            let _ = writeln!(config, "  {key} {}", format_probability(v.value));
        }
    }
    if let Some(groups) = &c.reference {
        config.push_str("  reference");
        for g in groups {
            let _ = write!(config, " {{{}}}", join(g, ", "));
        }
        config.push('\n');
    }
    if let Some(x) = c.exclude_avoided_results {
        let _ = writeln!(config, "  exclude_avoided_results {x}");
    }
    if let Some(k) = &c.knowledge {
        let _ = writeln!(config, "  knowledge {}", k.value);
    }
    if !config.is_empty() {
        out.push_str("\nconfig:\n");
        out.push_str(&config);
    }

    if !doc.queries.is_empty() {
        out.push_str("\nqueries:\n");
        for q in &doc.queries {
            let _ = write!(out, "  {} {}", q.definition.value, join(&q.result, " & "));
            if let Some(a) = &q.action {
                let _ = write!(out, " via {}", join(a, ", "));
            }
            out.push('\n');
        }
    }
    out
}
