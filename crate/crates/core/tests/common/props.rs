//! Invariants every scenario must satisfy.

use intent_core::intent::{
    direct_intent_commission, direct_intent_perspective, means_end_intent, moral_responsibility, oblique_intent,
    ulterior_intent, Definition, IntentConfig, Verdict,
};
use intent_core::model::{Event, VariableKind};
use intent_core::scenario::Scenario;

use super::{random_model, random_realized, TestRng};

const TAUS: [f64; 5] = [0.3, 0.6, 0.9, 0.99, 1.0];

fn fail(what: &str, result: &Event, detail: impl std::fmt::Display) -> String {
    format!("{what} for result {result}: {detail}")
}

/// Every intent predicate (not moral responsibility) for `result` under the
/// performed action; ulterior only when the agent has a policy.
pub fn intent_verdicts(s: &Scenario, result: &Event, config: &IntentConfig) -> Result<Vec<Verdict>, String> {
    let a = &s.performed;
    let mut out = vec![
        direct_intent_commission(s, result, a, config),
        direct_intent_perspective(s, result, a, config),
        means_end_intent(s, result, a, config),
        oblique_intent(s, result, a, config),
    ];
    if s.agent.policy.is_some() {
        out.push(ulterior_intent(s, result, config));
    }
    out.into_iter().collect::<Result<Vec<_>, _>>().map_err(|e| fail("evaluation failed", result, e))
}

fn holds_of(s: &Scenario, result: &Event, config: &IntentConfig, d: Definition) -> Result<bool, String> {
    let v = match d {
        Definition::DirectCommission => direct_intent_commission(s, result, &s.performed, config),
        Definition::Oblique => oblique_intent(s, result, &s.performed, config),
        Definition::Ulterior => ulterior_intent(s, result, config),
        _ => unreachable!(),
    };
    v.map(|v| v.holds()).map_err(|e| fail("evaluation failed", result, e))
}

/// Checks free agency, causal link, commitment, subjectivity, outcome
/// independence, threshold monotonicity, the aim disjunction and verdict
/// reconstruction for one scenario and result.
pub fn check_scenario(s: &Scenario, result: &Event, rng: &mut TestRng) -> Result<(), String> {
    let config = &s.config;
    let base = intent_verdicts(s, result, config)?;

    for v in &base {
        if v.recompute_holds() != v.holds() {
            return Err(fail("reconstruction", result, v.definition()));
        }
    }

    // outcome independence
    let mut other = s.clone();
    other.realized = match &s.realized {
        Some(_) => None,
        None => random_realized(rng, &s.objective, &s.performed),
    };
    if intent_verdicts(&other, result, config)? != base {
        return Err(fail("outcome independence", result, "verdict changed with the realized world"));
    }

    // subjectivity
    let mut other = s.clone();
    other.objective = random_model(rng, 8);
    other.realized = None;
    if intent_verdicts(&other, result, config)? != base {
        return Err(fail("subjectivity", result, "verdict changed with the objective model"));
    }

    // free agency
    let mut no_choice = config.clone();
    no_choice.reference_actions = Some(Vec::new());
    for v in intent_verdicts(s, result, &no_choice)? {
        if v.holds() {
            return Err(fail("free agency", result, format!("{} holds without alternatives", v.definition())));
        }
    }
    if s.realized.is_some() {
        let v = moral_responsibility(s, result, &s.performed, &no_choice).map_err(|e| fail("mr", result, e))?;
        if v.holds() {
            return Err(fail("free agency", result, "moral responsibility holds without alternatives"));
        }
    }

    // causal link
    let graph = s.agent.evaluation_model().map_err(|e| e.to_string())?;
    let below = graph.descendants(s.performed.variables());
    let linked = result.variables().any(|v| below.contains(v));
    if !linked && result.variables().all(|v| graph.kind_of(v.as_str()) == Some(VariableKind::Endogenous)) {
        for v in base.iter().filter(|v| v.definition() != Definition::Ulterior) {
            if v.holds() {
                return Err(fail("causal link", result, format!("{} holds for an unaffected result", v.definition())));
            }
        }
    }

    // commitment
    if s.agent.policy.is_some() {
        let mut loose = s.clone();
        loose.agent.committed = false;
        if holds_of(&loose, result, config, Definition::Ulterior)? {
            return Err(fail("commitment", result, "ulterior intent without commitment"));
        }
    }

    // threshold monotonicity
    let mut previous = true;
    for tau in TAUS {
        let c = IntentConfig { tau, ..config.clone() };
        let h = holds_of(s, result, &c, Definition::Oblique)?;
        if h && !previous {
            return Err(fail("monotonicity", result, format!("oblique starts holding at tau = {tau}")));
        }
        previous = h;
    }

    // aim disjunction
    if holds_of(s, result, config, Definition::DirectCommission)? && !s.agent.aims.contains(result) {
        let mut aimed = s.clone();
        aimed.agent.aims.push(result.clone());
        aimed.snapshot = Some(aimed.agent.clone());
        if !holds_of(&aimed, result, config, Definition::DirectCommission)? {
            return Err(fail("aim disjunction", result, "declaring the aim broke direct intent"));
        }
    }
    Ok(())
}
