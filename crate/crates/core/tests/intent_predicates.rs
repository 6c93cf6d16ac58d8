use intent_core::corpus::entry;
use intent_core::intent::{
    check_capacity, direct_intent_commission, direct_intent_perspective, explain, knowledge_holds,
    moral_responsibility, oblique_intent, ulterior_intent, ClauseId, IntentConfig, IntentError, KnowledgeMode,
};
use intent_core::model::{Event, Intervention};
use intent_core::scenario::{parse, Scenario};

fn corpus(name: &str) -> Scenario {
    entry(name).unwrap().scenario()
}

fn plant() -> Intervention {
    Intervention::single("Plant", "yes")
}

const COPY: &str = "format: 1
model:
  exo U {a: 0.5, b: 0.5}
  action A {on, off}
  var O (A, U) { (on, a) -> yes  (on, b) -> no  (off, _) -> no }
  var X (O) { yes -> yes  no -> no }
  var Z (U) { a -> a  b -> b }
agent:
  model same
  observe O
  aim X = yes
performed: A = on
";

fn both_actions() -> Vec<Intervention> {
    vec![Intervention::single("A", "on"), Intervention::single("A", "off")]
}

#[test]
fn observable_result_is_known() {
    let s = corpus("unreliable_bomb");
    let death = Event::literal("Death", "yes");
    assert!(knowledge_holds(&s.agent, &death, &s.config, &[plant()]).unwrap());
}

#[test]
fn copy_of_observable_is_known_only_when_inference_is_allowed() {
    let s = parse(COPY).unwrap();
    let x = Event::literal("X", "yes");
    assert!(knowledge_holds(&s.agent, &x, &s.config, &both_actions()).unwrap());
    let strict = IntentConfig { knowledge_mode: KnowledgeMode::DeclaredOnly, ..s.config.clone() };
    assert!(!knowledge_holds(&s.agent, &x, &strict, &both_actions()).unwrap());
}

#[test]
fn underivable_result_is_not_known() {
    let s = parse(COPY).unwrap();
    let z = Event::literal("Z", "a");
    assert!(!knowledge_holds(&s.agent, &z, &s.config, &[Intervention::single("A", "off")]).unwrap());
}

#[test]
fn perspective_matches_commission_when_snapshot_is_the_agent() {
    let s = corpus("unreliable_bomb");
    let payout = Event::literal("Payout", "yes");
    let c = direct_intent_commission(&s, &payout, &plant(), &s.config).unwrap();
    let p = direct_intent_perspective(&s, &payout, &plant(), &s.config).unwrap();
    assert!(c.holds() && p.holds());
    let pass = |v: &intent_core::intent::Verdict| v.clauses().iter().map(|c| c.holds).collect::<Vec<_>>();
    assert_eq!(pass(&c), pass(&p));
    assert!(c.clause(ClauseId::DIc4a).unwrap().holds);
}

#[test]
fn perspective_needs_a_snapshot() {
    let mut s = corpus("unreliable_bomb");
    s.snapshot = None;
    let err = direct_intent_perspective(&s, &Event::literal("Payout", "yes"), &plant(), &s.config).unwrap_err();
    assert_eq!(err, IntentError::MissingSnapshot);
}

#[test]
fn responsibility_for_exploded_bomb() {
    let s = corpus("unreliable_bomb");
    assert!(moral_responsibility(&s, &Event::literal("Death", "yes"), &plant(), &s.config).unwrap().holds());
}

#[test]
fn responsibility_needs_a_realized_world() {
    let mut s = corpus("unreliable_bomb");
    s.realized = None;
    let err = moral_responsibility(&s, &Event::literal("Death", "yes"), &plant(), &s.config).unwrap_err();
    assert_eq!(err, IntentError::MissingRealized);
}

#[test]
fn minimizing_action_is_not_responsible() {
    // planting makes survival less likely than not planting
    let s = corpus("dud_bomb");
    let v = moral_responsibility(&s, &Event::literal("Death", "no"), &plant(), &s.config).unwrap();
    assert!(!v.clause(ClauseId::MR3).unwrap().holds);
    assert!(!v.holds());
}

#[test]
fn ulterior_needs_a_policy() {
    let s = corpus("unreliable_bomb");
    let err = ulterior_intent(&s, &Event::literal("Death", "yes"), &s.config).unwrap_err();
    assert_eq!(err, IntentError::NoPolicy);
}

#[test]
fn lowering_tau_passes_the_action_clause() {
    let s = corpus("unreliable_bomb");
    let config = IntentConfig { tau: 0.2, ..s.config.clone() };
    let v = oblique_intent(&s, &Event::literal("Death", "yes"), &plant(), &config).unwrap();
    assert!(v.clause(ClauseId::OI2a).unwrap().holds);
    assert!(v.holds());
}

#[test]
fn explain_report_is_stable() {
    let s = corpus("unreliable_bomb");
    let v = oblique_intent(&s, &Event::literal("Death", "yes"), &plant(), &s.config).unwrap();
    assert_eq!(explain(&v), include_str!("data/unreliable_bomb.oblique.txt"));
}

#[test]
fn explain_marks_only_failed_clauses() {
    let s = corpus("unreliable_bomb");
    let v = direct_intent_commission(&s, &Event::literal("Payout", "yes"), &plant(), &s.config).unwrap();
    let text = explain(&v);
    assert!(!text.contains("FAILED"), "{text}");
    assert!(text.starts_with("direct intent"), "{text}");
}

#[test]
fn capacity_report() {
    assert!(check_capacity(&corpus("unreliable_bomb")).all_satisfied());
    assert_eq!(check_capacity(&corpus("jackal_no_alternative")).failing(), vec![2]);
    let mut aimless = corpus("unreliable_bomb");
    aimless.agent.aims.clear();
    assert_eq!(check_capacity(&aimless).failing(), vec![10]);
}
