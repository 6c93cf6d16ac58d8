use intent_core::corpus::corpus;
use intent_core::scenario::{parse, parse_json, serialize, serialize_json, ErrorCode};

const BOMB: &str = "format: 1
model:
  exo Fuse {works: 0.3, fails: 0.7}
  action Plant {yes, no}
  var Explode (Plant, Fuse) { (yes, works) -> yes  (yes, fails) -> no  (no, _) -> no }
agent:
  model same
  aim Explode = yes
performed: Plant = yes
";

#[test]
fn empty_document_is_a_syntax_error_at_the_start() {
    let e = parse("").unwrap_err();
    assert_eq!((e.code, e.line, e.column), (ErrorCode::Syntax, 1, 1));
}

#[test]
fn errors_point_at_the_offending_line() {
    let e = parse(&BOMB.replace("0.7", "0.8")).unwrap_err();
    assert_eq!(e.code, ErrorCode::Unnormalized);
    assert_eq!(e.line, 3);

    let e = parse(&BOMB.replace("(Plant, Fuse)", "(Plant, Fuze)")).unwrap_err();
    assert_eq!(e.code, ErrorCode::UnknownVariable);
    assert_eq!(e.line, 5);
    assert!(e.message.contains("Fuze"), "{e}");
}

#[test]
fn missing_agent_section() {
    let src = "format: 1\nmodel:\n  action A {x, y}\n";
    assert_eq!(parse(src).unwrap_err().code, ErrorCode::Syntax);
}

#[test]
fn error_display_carries_code_and_position() {
    let e = parse(&format!("{BOMB}config:\n  epsilon -1\n")).unwrap_err();
    assert_eq!(e.code, ErrorCode::BadThreshold);
    assert!(e.to_string().starts_with("bad-threshold at 11:"), "{e}");
}

#[test]
fn json_syntax_errors_have_positions() {
    let e = parse_json("{\n  \"format\": }").unwrap_err();
    assert_eq!(e.code, ErrorCode::Syntax);
    assert_eq!(e.line, 2);
}

#[test]
fn json_rejects_unknown_fields() {
    let s = parse(BOMB).unwrap();
    let json = serialize_json(&s).replacen('{', "{\n  \"extra\": 1,", 1);
    assert_eq!(parse_json(&json).unwrap_err().code, ErrorCode::Syntax);
}

#[test]
fn every_corpus_file_round_trips_in_both_forms() {
    for e in corpus() {
        let s = e.scenario();
        let text = serialize(&s);
        assert_eq!(parse(&text).unwrap(), s, "{}", e.name);
        assert_eq!(serialize(&parse(&text).unwrap()), text, "{}", e.name);
        let json = serialize_json(&s);
        assert_eq!(parse_json(&json).unwrap(), s, "{}", e.name);
        assert_eq!(serialize_json(&parse_json(&json).unwrap()), json, "{}", e.name);
    }
}

#[test]
fn json_and_text_forms_agree() {
    for e in corpus() {
        let s = e.scenario();
        assert_eq!(parse_json(&serialize_json(&s)).unwrap(), parse(&serialize(&s)).unwrap(), "{}", e.name);
    }
}
