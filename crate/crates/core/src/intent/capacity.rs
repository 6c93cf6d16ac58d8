use std::fmt;

use serde::Serialize;

use crate::model::{validate_model, CausalModel, ViolationKind};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Requirement {
    pub number: u8,
    pub name: &'static str,
    pub satisfied: bool,
    pub detail: String,
}

/// Which of the ten capacity requirements a scenario meets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CapacityReport {
    pub requirements: Vec<Requirement>,
}

impl CapacityReport {
    pub fn satisfied_count(&self) -> usize {
        self.requirements.iter().filter(|r| r.satisfied).count()
    }

    pub fn all_satisfied(&self) -> bool {
        self.requirements.iter().all(|r| r.satisfied)
    }

    /// Numbers of the failing requirements, ascending.
    pub fn failing(&self) -> Vec<u8> {
        self.requirements.iter().filter(|r| !r.satisfied).map(|r| r.number).collect()
    }
}

impl fmt::Display for CapacityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "capacity: {}/{}", self.satisfied_count(), self.requirements.len())?;
        for r in &self.requirements {
            let mark = if r.satisfied { "pass" } else { "FAILED" };
            writeln!(f, "  [{mark}] {:>2} {}: {}", r.number, r.name, r.detail)?;
        }
        Ok(())
    }
}

fn distributions_valid(model: &CausalModel) -> bool {
    use ViolationKind::*;
    !validate_model(model)
        .iter()
        .any(|v| matches!(v.kind, NotNormalized | ProbabilityOutOfRange | DistributionMismatch))
}

pub fn check_capacity(scenario: &Scenario) -> CapacityReport {
    let objective = &scenario.objective;
    let agent = &scenario.agent;
    let subjective = &agent.model;
    let mut requirements = Vec::with_capacity(10);
    let mut add = |number: u8, name: &'static str, satisfied: bool, detail: String| {
        requirements.push(Requirement { number, name, satisfied, detail });
    };

    let count = objective.variable_count();
    add(1, "state", count >= 1, format!("{count} variables"));

    let choices = objective.actions.iter().filter(|a| a.domain.len() >= 2).count();
    add(2, "chosen actions", choices >= 1, format!("{choices} action variables with at least two values"));

    let likelihood = distributions_valid(objective) && distributions_valid(subjective);
    add(
        3,
        "likelihood",
        likelihood,
        if likelihood { "exogenous distributions valid".into() } else { "invalid exogenous distribution".into() },
    );

    let violations = validate_model(objective);
    let valid = violations.is_empty();
    let detail = if valid {
        "objective model valid".to_string()
    } else {
        violations.iter().map(|v| v.message.as_str()).collect::<Vec<_>>().join("; ")
    };
    add(4, "causality", valid, detail.clone());
    add(5, "model feasibility", valid, detail);

    let results = objective.endogenous.len();
    add(6, "results", results >= 1, format!("{results} endogenous variables"));

    let agent_valid = match agent.evaluation_model() {
        Ok(m) => {
            validate_model(&m).is_empty()
                && agent.aims.iter().all(|a| m.check_event(a).is_ok())
                && agent.observables.iter().all(|o| m.kind_of(o.as_str()).is_some())
        }
        Err(_) => false,
    };
    add(
        7,
        "subjective model",
        agent_valid,
        if agent_valid { "agent model valid".into() } else { "agent model invalid".into() },
    );

    add(8, "objective model", count >= 1, if count >= 1 { "present".into() } else { "empty".into() });

    let plans = agent.policy.is_some() || !scenario.performed.is_empty();
    let detail = match (&agent.policy, scenario.performed.is_empty()) {
        (Some(_), _) => "policy declared".to_string(),
        (None, false) => format!("performed {}", scenario.performed),
        (None, true) => "no policy and no performed action".to_string(),
    };
    add(9, "plans", plans, detail);

    let aims = agent.aims.len();
    add(10, "aims", aims >= 1, format!("{aims} declared aims"));

    CapacityReport { requirements }
}
