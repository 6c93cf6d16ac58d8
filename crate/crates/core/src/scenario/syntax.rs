//! Lexer and recursive-descent parser for the `.intent` text form.

use super::ast::*;
use super::{ErrorCode, ParseError};

const SECTIONS: [&str; 9] =
    ["model", "agent", "snapshot", "performed", "plan", "realized", "config", "queries", "format"];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Colon,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Amp,
    Arrow,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Colon => "`:`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '@'
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut column) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column };
        let mut advance = |n: usize, i: &mut usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    line += 1;
                    column = 1;
                } else {
                    column += 1;
                }
                *i += 1;
            }
        };
        if c == '#' {
            let mut n = 0;
            while i + n < chars.len() && chars[i + n] != '\n' {
                n += 1;
            }
            advance(n, &mut i);
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i);
            continue;
        }
        let single = match c {
            ':' => Some(Tok::Colon),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Eq),
            '&' => Some(Tok::Amp),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, pos });
            advance(1, &mut i);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push(Token { tok: Tok::Arrow, pos });
            advance(2, &mut i);
            continue;
        }
        let signed = c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit() || *d == '.');
        if is_word_char(c) || signed {
            let mut n = 1;
            loop {
                match chars.get(i + n) {
                    Some(&d) if is_word_char(d) => n += 1,
                    Some(&('+' | '-'))
                        if matches!(chars[i + n - 1], 'e' | 'E')
                            && chars.get(i + n + 1).is_some_and(|d| d.is_ascii_digit())
                            && (chars[i].is_ascii_digit() || matches!(chars[i], '.' | '-')) =>
                    {
                        n += 1
                    }
                    _ => break,
                }
            }
            let word: String = chars[i..i + n].iter().collect();
            out.push(Token { tok: Tok::Word(word), pos });
            advance(n, &mut i);
            continue;
        }
        return Err(ParseError::new(ErrorCode::Syntax, pos, format!("unexpected character {c:?}")));
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, column } });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

fn syntax(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError::new(ErrorCode::Syntax, pos, message)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.i]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i < self.toks.len() - 1 {
            self.i += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let t = self.peek();
        syntax(t.pos, format!("expected {expected}, found {}", t.tok.describe()))
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump().pos)
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Word(x) if x == w)
    }

    fn word(&mut self, what: &str) -> Result<Name, ParseError> {
        match &self.peek().tok {
            Tok::Word(w) => {
                let w = w.clone();
                let pos = self.bump().pos;
                Ok(Spanned::new(w, pos))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn number(&mut self, what: &str) -> Result<Spanned<f64>, ParseError> {
        let w = self.word(what)?;
        let numeric = w.value.starts_with(|c: char| c.is_ascii_digit() || c == '.' || c == '-');
        match w.value.parse::<f64>() {
            Ok(x) if numeric && x.is_finite() => Ok(Spanned::new(x, w.pos)),
            _ => Err(syntax(w.pos, format!("expected {what}, found `{}`", w.value))),
        }
    }

    fn boolean(&mut self) -> Result<bool, ParseError> {
        let w = self.word("`true` or `false`")?;
        match w.value.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(syntax(w.pos, format!("expected `true` or `false`, found `{other}`"))),
        }
    }

    fn at_section_start(&self) -> bool {
        match &self.peek().tok {
            Tok::Eof => true,
            Tok::Word(w) => SECTIONS.contains(&w.as_str()) && self.peek_at(1) == &Tok::Colon,
            _ => false,
        }
    }

    fn document(&mut self) -> Result<Document, ParseError> {
        if !self.is_word("format") {
            return Err(self.unexpected("`format: 1`"));
        }
        self.bump();
        self.expect(Tok::Colon)?;
        let v = self.word("format version")?;
        let format = match v.value.parse::<u32>() {
            Ok(1) => Spanned::new(1, v.pos),
            _ => return Err(syntax(v.pos, format!("unsupported format `{}`, expected 1", v.value))),
        };

        let mut model = None;
        let mut agent = None;
        let mut snapshot = None;
        let mut performed = None;
        let mut plan = None;
        let mut realized = None;
        let mut config = None;
        let mut queries = None;
        let mut section_pos = SectionPositions::default();

        loop {
            if self.peek().tok == Tok::Eof {
                break;
            }
            if !self.at_section_start() {
                return Err(self.unexpected("a section header"));
            }
            let name = self.word("a section header")?;
            self.expect(Tok::Colon)?;
            let duplicate = match name.value.as_str() {
                "model" => {
                    section_pos.model = name.pos;
                    model.replace(self.model_body(false)?).is_some()
                }
                "agent" => {
                    section_pos.agent = name.pos;
                    agent.replace(self.agent_body(name.pos)?).is_some()
                }
                "snapshot" => {
                    let body = if self.is_word("none") && !self.at_section_start() {
                        self.bump();
                        None
                    } else {
                        Some(self.agent_body(name.pos)?)
                    };
                    snapshot.replace(body).is_some()
                }
                "performed" => {
                    section_pos.performed = name.pos;
                    performed.replace(self.assignments_opt()?).is_some()
                }
                "plan" => {
                    section_pos.plan = name.pos;
                    plan.replace(self.assignments_opt()?).is_some()
                }
                "realized" => {
                    section_pos.realized = name.pos;
                    realized.replace(self.assignments_opt()?).is_some()
                }
                "config" => config.replace(self.config_body()?).is_some(),
                "queries" => queries.replace(self.queries_body()?).is_some(),
                _ => return Err(syntax(name.pos, "`format` may only appear once, at the start")),
            };
            if duplicate {
                return Err(syntax(name.pos, format!("duplicate section `{}`", name.value)));
            }
        }

        let end = self.peek().pos;
        let model = model.ok_or_else(|| syntax(end, "missing section `model:`"))?;
        let agent = agent.ok_or_else(|| syntax(end, "missing section `agent:`"))?;
        Ok(Document {
            format,
            model,
            agent,
            snapshot,
            performed: performed.unwrap_or_default(),
            plan,
            realized,
            config: config.unwrap_or_default(),
            queries: queries.unwrap_or_default(),
            section_pos,
        })
    }

    /// Stanzas up to the next section (or the closing brace when nested).
    fn model_body(&mut self, nested: bool) -> Result<ModelAst, ParseError> {
        let mut m = ModelAst::default();
        loop {
            if nested && self.peek().tok == Tok::RBrace {
                break;
            }
            if !nested && self.at_section_start() {
                break;
            }
            let kw = self.word("`exo`, `action` or `var`")?;
            match kw.value.as_str() {
                "exo" => m.exo.push(self.exo()?),
                "action" => m.action.push(self.action()?),
                "var" => m.var.push(self.var()?),
                other => {
                    return Err(syntax(kw.pos, format!("expected `exo`, `action` or `var`, found `{other}`")));
                }
            }
        }
        Ok(m)
    }

    fn exo(&mut self) -> Result<ExoAst, ParseError> {
        let id = self.word("variable id")?;
        self.expect(Tok::LBrace)?;
        let mut distribution = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let v = self.word("value")?;
            self.expect(Tok::Colon)?;
            let p = self.number("probability")?;
            distribution.push((v, p));
            self.eat(&Tok::Comma);
        }
        Ok(ExoAst { id, distribution })
    }

    fn value_list(&mut self, close: Tok) -> Result<Vec<Name>, ParseError> {
        let mut out = Vec::new();
        while !self.eat(&close) {
            out.push(self.word("value")?);
            self.eat(&Tok::Comma);
        }
        Ok(out)
    }

    fn action(&mut self) -> Result<ActionAst, ParseError> {
        let id = self.word("variable id")?;
        self.expect(Tok::LBrace)?;
        let domain = self.value_list(Tok::RBrace)?;
        Ok(ActionAst { id, domain })
    }

    fn var(&mut self) -> Result<VarAst, ParseError> {
        let id = self.word("variable id")?;
        let domain = if self.eat(&Tok::LBracket) { Some(self.value_list(Tok::RBracket)?) } else { None };
        let parents = if self.eat(&Tok::LParen) { self.value_list(Tok::RParen)? } else { Vec::new() };
        self.expect(Tok::LBrace)?;
        let mut table = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let pos = self.peek().pos;
            let key = if self.eat(&Tok::LParen) {
                self.value_list(Tok::RParen)?
            } else {
                vec![self.word("table key")?]
            };
            self.expect(Tok::Arrow)?;
            let value = self.word("value")?;
            table.push(RowAst { key, value, pos });
            self.eat(&Tok::Comma);
        }
        Ok(VarAst { id, domain, parents, table })
    }

    fn assign(&mut self) -> Result<Assign, ParseError> {
        let var = self.word("variable id")?;
        self.expect(Tok::Eq)?;
        let value = self.word("value")?;
        Ok(Assign(var, value))
    }

    fn assignments(&mut self) -> Result<Vec<Assign>, ParseError> {
        let mut out = vec![self.assign()?];
        while self.eat(&Tok::Comma) {
            out.push(self.assign()?);
        }
        Ok(out)
    }

    fn assignments_opt(&mut self) -> Result<Vec<Assign>, ParseError> {
        if self.at_section_start() {
            Ok(Vec::new())
        } else {
            self.assignments()
        }
    }

    fn event(&mut self) -> Result<Vec<Assign>, ParseError> {
        let mut out = vec![self.assign()?];
        while self.eat(&Tok::Amp) {
            out.push(self.assign()?);
        }
        Ok(out)
    }

    fn agent_body(&mut self, pos: Pos) -> Result<AgentAst, ParseError> {
        let mut a = AgentAst { pos, ..AgentAst::default() };
        let mut seen_model = false;
        let mut seen_committed = false;
        while !self.at_section_start() {
            let kw = self.word("`model`, `observe`, `aim`, `policy` or `committed`")?;
            match kw.value.as_str() {
                "model" => {
                    if std::mem::replace(&mut seen_model, true) {
                        return Err(syntax(kw.pos, "duplicate `model` in agent"));
                    }
                    if self.is_word("same") {
                        self.bump();
                    } else {
                        self.expect(Tok::LBrace)?;
                        a.model = Some(self.model_body(true)?);
                        self.expect(Tok::RBrace)?;
                    }
                }
                "observe" => {
                    a.observe.push(self.word("variable id")?);
                    while self.eat(&Tok::Comma) {
                        a.observe.push(self.word("variable id")?);
                    }
                }
                "aim" => a.aims.push(self.event()?),
                "policy" => {
                    let when = self.event()?;
                    self.expect(Tok::Arrow)?;
                    let then = self.assignments()?;
                    a.policy.push(RuleAst { when, then });
                }
                "committed" => {
                    if std::mem::replace(&mut seen_committed, true) {
                        return Err(syntax(kw.pos, "duplicate `committed` in agent"));
                    }
                    a.committed = self.boolean()?;
                }
                other => {
                    return Err(syntax(
                        kw.pos,
                        format!("expected `model`, `observe`, `aim`, `policy` or `committed`, found `{other}`"),
                    ));
                }
            }
        }
        Ok(a)
    }

    fn config_body(&mut self) -> Result<ConfigAst, ParseError> {
        let mut c = ConfigAst::default();
        while !self.at_section_start() {
            let kw = self.word("config key")?;
            let duplicate = match kw.value.as_str() {
                "tau" => c.tau.replace(self.number("number")?).is_some(),
                "epsilon" => c.epsilon.replace(self.number("number")?).is_some(),
                "tolerance" => c.tolerance.replace(self.number("number")?).is_some(),
                "reference" => {
                    let mut groups = Vec::new();
                    while self.eat(&Tok::LBrace) {
                        groups.push(if self.peek().tok == Tok::RBrace { Vec::new() } else { self.assignments()? });
                        self.expect(Tok::RBrace)?;
                    }
                    c.reference.replace(groups).is_some()
                }
                "exclude_avoided_results" => c.exclude_avoided_results.replace(self.boolean()?).is_some(),
                "knowledge" => c.knowledge.replace(self.word("knowledge mode")?).is_some(),
                other => return Err(syntax(kw.pos, format!("unknown config key `{other}`"))),
            };
            if duplicate {
                return Err(syntax(kw.pos, format!("duplicate config key `{}`", kw.value)));
            }
        }
        Ok(c)
    }

    fn queries_body(&mut self) -> Result<Vec<QueryAst>, ParseError> {
        let mut out = Vec::new();
        while !self.at_section_start() {
            let definition = self.word("query definition")?;
            let result = self.event()?;
            let action = if self.is_word("via") {
                self.bump();
                Some(self.assignments()?)
            } else {
                None
            };
            out.push(QueryAst { definition, result, action });
        }
        Ok(out)
    }
}

/// Parses the text form into a syntax tree without semantic checks.
pub fn parse_document(src: &str) -> Result<Document, ParseError> {
    let toks = lex(src)?;
    Parser { toks, i: 0 }.document()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_numbers_and_arrows() {
        let toks = lex("x: 1e-9 -> -0.5 Shoot@2").unwrap();
        let words: Vec<Tok> = toks.into_iter().map(|t| t.tok).collect();
        assert_eq!(
            words,
            vec![
                Tok::Word("x".into()),
                Tok::Colon,
                Tok::Word("1e-9".into()),
                Tok::Arrow,
                Tok::Word("-0.5".into()),
                Tok::Word("Shoot@2".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_are_one_based() {
        let toks = lex("a\n  b").unwrap();
        assert_eq!(toks[0].pos, Pos { line: 1, column: 1 });
        assert_eq!(toks[1].pos, Pos { line: 2, column: 3 });
    }

    #[test]
    fn empty_document_fails_at_origin() {
        let e = parse_document("").unwrap_err();
        assert_eq!((e.code, e.line, e.column), (ErrorCode::Syntax, 1, 1));
    }

    #[test]
    fn stray_character_is_reported() {
        let e = parse_document("format: 1\nmodel: $").unwrap_err();
        assert_eq!((e.code, e.line, e.column), (ErrorCode::Syntax, 2, 8));
    }

    #[test]
    fn duplicate_section_is_syntax() {
        let e = parse_document("format: 1\nmodel:\nmodel:\nagent:").unwrap_err();
        assert_eq!(e.code, ErrorCode::Syntax);
        assert!(e.message.contains("duplicate section"));
    }
}
