//! Exact inference by exhaustive enumeration of exogenous contexts.
//!
//! Every query reduces to one loop: walk the exogenous product space in
//! canonical order (first exogenous variable varies fastest), evaluate the
//! world for each context, and sum context probabilities. No sampling.

use std::collections::HashMap;
use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::model::{validate_model, CausalModel, Compiled, Context, Event, Intervention, ModelError, VariableId, Violation};

/// Largest exogenous product space enumerated by default.
pub const DEFAULT_CONTEXT_CAP: u64 = 1 << 24;

/// Conditioning events at or below this probability are treated as null by
/// the free-function [`cond_prob`].
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("model too large for exact inference: {contexts} contexts exceed the cap of {cap}")]
    TooLarge { contexts: u128, cap: u64 },
    #[error("invalid model: {}", .0.iter().map(|v| v.message.as_str()).collect::<Vec<_>>().join("; "))]
    InvalidModel(Vec<Violation>),
    #[error("undefined conditional: P({given}) = {probability} under do({intervention})")]
    UndefinedConditional { given: Event, intervention: Intervention, probability: f64 },
    #[error("reference action set is empty")]
    EmptyReference,
    #[error("action {0} also appears in the reference set")]
    ActionInReference(Intervention),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One exogenous context with its probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextEntry {
    pub context: Context,
    pub probability: f64,
}

/// Every exogenous context, in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextEnumeration {
    pub entries: Vec<ContextEntry>,
}

impl ContextEnumeration {
    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }
}

/// Evidence that an action is a but-for cause of an event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CauseWitness {
    pub context: Context,
    pub actual_action: Intervention,
    pub counterfactual_action: Intervention,
}

/// A compiled model ready for repeated exact queries.
#[derive(Debug, Clone)]
pub struct Inference {
    compiled: Compiled,
    contexts: u64,
}

impl Inference {
    pub fn new(model: &CausalModel) -> Result<Self, InferenceError> {
        Self::with_cap(model, DEFAULT_CONTEXT_CAP)
    }

    pub fn with_cap(model: &CausalModel, cap: u64) -> Result<Self, InferenceError> {
        let violations = validate_model(model);
        if !violations.is_empty() {
            return Err(InferenceError::InvalidModel(violations));
        }
        let size: u128 = model
            .exogenous
            .iter()
            .map(|v| v.domain.len() as u128)
            .try_fold(1u128, |acc, n| acc.checked_mul(n))
            .unwrap_or(u128::MAX);
        if size > cap as u128 {
            return Err(InferenceError::TooLarge { contexts: size, cap });
        }
        Ok(Inference { compiled: Compiled::new(model)?, contexts: size as u64 })
    }

    /// Size of the exogenous product space.
    pub fn context_count(&self) -> u64 {
        self.contexts
    }

    /// Calls `f` for each context with its probability, in canonical order.
    /// `f` returns `false` to stop early.
    fn for_each_context(&self, mut f: impl FnMut(&[u16], f64) -> Result<bool, InferenceError>) -> Result<(), InferenceError> {
        let c = &self.compiled;
        let radix: Vec<usize> = c.exo.iter().map(|&i| c.domains[i].len()).collect();
        let mut digits = vec![0u16; radix.len()];
        for _ in 0..self.contexts {
            let p: f64 = digits.iter().zip(&c.exo_probs).map(|(&d, ps)| ps[d as usize]).product();
            if !f(&digits, p)? {
                return Ok(());
            }
            for (d, &r) in digits.iter_mut().zip(&radix) {
                *d += 1;
                if (*d as usize) < r {
                    break;
                }
                *d = 0;
            }
        }
        Ok(())
    }

    pub fn enumerate_contexts(&self) -> ContextEnumeration {
        let mut entries = Vec::with_capacity(self.contexts as usize);
        self.for_each_context(|ctx, p| {
            entries.push(ContextEntry { context: self.compiled.context(ctx), probability: p });
            Ok(true)
        })
        .expect("enumeration callback is infallible");
        ContextEnumeration { entries }
    }

    fn satisfied(world: &[u16], literals: &[(usize, u16)]) -> bool {
        literals.iter().all(|&(i, v)| world[i] == v)
    }

    /// P(event | do(intervention)).
    pub fn prob(&self, intervention: &Intervention, event: &Event) -> Result<f64, InferenceError> {
        let fixed = self.compiled.fixed(intervention)?;
        let lits = self.compiled.literals(event)?;
        let mut world = vec![0u16; self.compiled.len()];
        let mut total = 0.0;
        self.for_each_context(|ctx, p| {
            if p > 0.0 {
                self.compiled.eval(ctx, &fixed, &mut world)?;
                if Self::satisfied(&world, &lits) {
                    total += p;
                }
            }
            Ok(true)
        })?;
        Ok(total)
    }

    /// P(event | do(intervention), given). Fails when P(given) is at or
    /// below `tolerance`.
    pub fn cond_prob(
        &self,
        intervention: &Intervention,
        event: &Event,
        given: &Event,
        tolerance: f64,
    ) -> Result<f64, InferenceError> {
        let fixed = self.compiled.fixed(intervention)?;
        let lits = self.compiled.literals(event)?;
        let given_lits = self.compiled.literals(given)?;
        let mut world = vec![0u16; self.compiled.len()];
        let (mut p_given, mut p_joint) = (0.0, 0.0);
        self.for_each_context(|ctx, p| {
            if p > 0.0 {
                self.compiled.eval(ctx, &fixed, &mut world)?;
                if Self::satisfied(&world, &given_lits) {
                    p_given += p;
                    if Self::satisfied(&world, &lits) {
                        p_joint += p;
                    }
                }
            }
            Ok(true)
        })?;
        if p_given <= tolerance {
            return Err(InferenceError::UndefinedConditional {
                given: given.clone(),
                intervention: intervention.clone(),
                probability: p_given,
            });
        }
        Ok(p_joint / p_given)
    }

    /// Contrastive but-for test: the first positive-probability context (in
    /// canonical order) where `action` yields `event` and some alternative in
    /// `reference` does not. `None` means `action` is not a but-for cause.
    pub fn but_for_cause(
        &self,
        action: &Intervention,
        reference: &[Intervention],
        event: &Event,
    ) -> Result<Option<CauseWitness>, InferenceError> {
        if reference.is_empty() {
            return Err(InferenceError::EmptyReference);
        }
        if reference.contains(action) {
            return Err(InferenceError::ActionInReference(action.clone()));
        }
        let fixed = self.compiled.fixed(action)?;
        let alternatives = reference
            .iter()
            .map(|r| self.compiled.fixed(r))
            .collect::<Result<Vec<_>, _>>()?;
        let lits = self.compiled.literals(event)?;
        let mut world = vec![0u16; self.compiled.len()];
        let mut witness = None;
        self.for_each_context(|ctx, p| {
            if p <= 0.0 {
                return Ok(true);
            }
            self.compiled.eval(ctx, &fixed, &mut world)?;
            if !Self::satisfied(&world, &lits) {
                return Ok(true);
            }
            for (alt, alt_fixed) in reference.iter().zip(&alternatives) {
                self.compiled.eval(ctx, alt_fixed, &mut world)?;
                if !Self::satisfied(&world, &lits) {
                    witness = Some(CauseWitness {
                        context: self.compiled.context(ctx),
                        actual_action: action.clone(),
                        counterfactual_action: alt.clone(),
                    });
                    return Ok(false);
                }
            }
            Ok(true)
        })?;
        Ok(witness)
    }

    /// True iff every positive-probability world under `plan` that satisfies
    /// `outer` also satisfies `inner`.
    pub fn necessary_for(&self, plan: &Intervention, inner: &Event, outer: &Event) -> Result<bool, InferenceError> {
        Ok(self.necessity_counterexample(plan, inner, outer)?.is_none())
    }

    /// A positive-probability context where `outer` holds without `inner`.
    pub fn necessity_counterexample(
        &self,
        plan: &Intervention,
        inner: &Event,
        outer: &Event,
    ) -> Result<Option<Context>, InferenceError> {
        let fixed = self.compiled.fixed(plan)?;
        let inner_lits = self.compiled.literals(inner)?;
        let outer_lits = self.compiled.literals(outer)?;
        let mut world = vec![0u16; self.compiled.len()];
        let mut found = None;
        self.for_each_context(|ctx, p| {
            if p > 0.0 {
                self.compiled.eval(ctx, &fixed, &mut world)?;
                if Self::satisfied(&world, &outer_lits) && !Self::satisfied(&world, &inner_lits) {
                    found = Some(self.compiled.context(ctx));
                    return Ok(false);
                }
            }
            Ok(true)
        })?;
        Ok(found)
    }

    /// True iff, under each intervention, the values of `targets` are a
    /// function of the values of `observables` across all positive-probability
    /// contexts.
    pub fn determined_by(
        &self,
        interventions: &[Intervention],
        targets: &BTreeSet<VariableId>,
        observables: &BTreeSet<VariableId>,
    ) -> Result<bool, InferenceError> {
        let index = |v: &VariableId| {
            self.compiled
                .index
                .get(v)
                .copied()
                .ok_or_else(|| InferenceError::Model(ModelError::UnknownVariable(v.clone())))
        };
        let target_idx = targets.iter().map(index).collect::<Result<Vec<_>, _>>()?;
        // observables absent from this model carry no information here
        let obs_idx: Vec<usize> = observables.iter().filter_map(|v| self.compiled.index.get(v).copied()).collect();
        let mut world = vec![0u16; self.compiled.len()];
        for intervention in interventions {
            let fixed = self.compiled.fixed(intervention)?;
            let mut seen: HashMap<Vec<u16>, Vec<u16>> = HashMap::new();
            let mut consistent = true;
            self.for_each_context(|ctx, p| {
                if p <= 0.0 {
                    return Ok(true);
                }
                self.compiled.eval(ctx, &fixed, &mut world)?;
                let key: Vec<u16> = obs_idx.iter().map(|&i| world[i]).collect();
                let val: Vec<u16> = target_idx.iter().map(|&i| world[i]).collect();
                match seen.get(&key) {
                    Some(prev) if prev != &val => {
                        consistent = false;
                        Ok(false)
                    }
                    Some(_) => Ok(true),
                    None => {
                        seen.insert(key, val);
                        Ok(true)
                    }
                }
            })?;
            if !consistent {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Positive-probability contexts (with probabilities) whose world under
    /// `intervention` satisfies `event`, in canonical order.
    pub fn contexts_where(
        &self,
        intervention: &Intervention,
        event: &Event,
    ) -> Result<Vec<(Context, f64)>, InferenceError> {
        let fixed = self.compiled.fixed(intervention)?;
        let lits = self.compiled.literals(event)?;
        let mut world = vec![0u16; self.compiled.len()];
        let mut out = Vec::new();
        self.for_each_context(|ctx, p| {
            if p > 0.0 {
                self.compiled.eval(ctx, &fixed, &mut world)?;
                if Self::satisfied(&world, &lits) {
                    out.push((self.compiled.context(ctx), p));
                }
            }
            Ok(true)
        })?;
        Ok(out)
    }
}

pub fn enumerate_contexts(model: &CausalModel) -> Result<ContextEnumeration, InferenceError> {
    Ok(Inference::new(model)?.enumerate_contexts())
}

pub fn enumerate_contexts_with_cap(model: &CausalModel, cap: u64) -> Result<ContextEnumeration, InferenceError> {
    Ok(Inference::with_cap(model, cap)?.enumerate_contexts())
}

pub fn prob(model: &CausalModel, intervention: &Intervention, event: &Event) -> Result<f64, InferenceError> {
    Inference::new(model)?.prob(intervention, event)
}

pub fn cond_prob(
    model: &CausalModel,
    intervention: &Intervention,
    event: &Event,
    given: &Event,
) -> Result<f64, InferenceError> {
    Inference::new(model)?.cond_prob(intervention, event, given, DEFAULT_TOLERANCE)
}

pub fn but_for_cause(
    model: &CausalModel,
    action: &Intervention,
    reference: &[Intervention],
    event: &Event,
) -> Result<Option<CauseWitness>, InferenceError> {
    Inference::new(model)?.but_for_cause(action, reference, event)
}

pub fn necessary_for(
    model: &CausalModel,
    plan: &Intervention,
    inner: &Event,
    outer: &Event,
) -> Result<bool, InferenceError> {
    Inference::new(model)?.necessary_for(plan, inner, outer)
}
