//! Surface syntax of patterns, filters and counting formulas.
//!
//! Patterns: double-quoted literals (`\"` and `\\` are the only escapes),
//! juxtaposition for concatenation, `+` for alternation, `*` for the set of all
//! strings, and `(r)*` for Kleene star (the star must follow the closing
//! parenthesis without whitespace). `()` denotes the empty language.
//!
//! Filters: `pattern(r)`, bare patterns built from literals and `*`, named
//! patterns, state identifiers (backtick-quoted when not plain), `true`,
//! `false`, `!`, `&`, `|` and parentheses.
//!
//! Formulas: `count(f)` or `#(f)`, naturals, `+`, comparisons
//! `<= >= < > == !=`, congruences `a == b mod m`, and `!`, `&`, `|`,
//! parentheses, `true`, `false`.

use crate::error::{Error, Result};
use crate::filter::{Filter, StateId};
use crate::pattern::Regex;
use crate::presburger::{CountingExpr, Formula};

/// Resolves a named pattern.
pub type PatternNames<'a> = &'a dyn Fn(&str) -> Option<Regex>;

const KEYWORDS: &[&str] = &["true", "false", "pattern", "count", "mod"];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Str(String),
    Ident(String),
    Quoted(String),
    Int(u64),
    Sym(&'static str),
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    offset: usize,
    space_before: bool,
}

const SYMBOLS: &[&str] = &["<=", ">=", "==", "!=", "(", ")", "*", "+", "|", "&", "!", ",", "<", ">", "#", "="];

fn lex(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    let mut space = true;
    while i < src.len() {
        let c = src[i..].chars().next().unwrap();
        if c.is_whitespace() {
            space = true;
            i += c.len_utf8();
            continue;
        }
        let start = i;
        let tok = if c == '"' {
            i += 1;
            let mut s = String::new();
            loop {
                let Some(ch) = src[i..].chars().next() else {
                    return Err(Error::syntax(src, start, "unterminated string literal"));
                };
                i += ch.len_utf8();
                match ch {
                    '"' => break,
                    '\\' if matches!(bytes.get(i), Some(b'"') | Some(b'\\')) => {
                        s.push(bytes[i] as char);
                        i += 1;
                    }
                    ch => s.push(ch),
                }
            }
            Tok::Str(s)
        } else if c == '`' {
            let end = src[i + 1..]
                .find('`')
                .ok_or_else(|| Error::syntax(src, start, "unterminated quoted identifier"))?;
            let name = src[i + 1..i + 1 + end].to_string();
            i += end + 2;
            Tok::Quoted(name)
        } else if c.is_ascii_digit() {
            let len = src[i..].find(|ch: char| !ch.is_ascii_digit()).unwrap_or(src.len() - i);
            let n = src[i..i + len]
                .parse()
                .map_err(|_| Error::syntax(src, start, "integer out of range"))?;
            i += len;
            Tok::Int(n)
        } else if c.is_alphabetic() || c == '_' {
            let len = src[i..]
                .find(|ch: char| !(ch.is_alphanumeric() || ch == '_' || ch == '\''))
                .unwrap_or(src.len() - i);
            let name = src[i..i + len].to_string();
            i += len;
            Tok::Ident(name)
        } else if let Some(sym) = SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            i += sym.len();
            Tok::Sym(sym)
        } else {
            return Err(Error::syntax(src, start, format!("unexpected character `{c}`")));
        };
        out.push(Token {
            tok,
            offset: start,
            space_before: space,
        });
        space = false;
    }
    out.push(Token {
        tok: Tok::End,
        offset: src.len(),
        space_before: true,
    });
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    names: PatternNames<'a>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, names: PatternNames<'a>) -> Result<Self> {
        Ok(Parser {
            src,
            toks: lex(src)?,
            pos: 0,
            names,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::syntax(self.src, self.toks[self.pos].offset, msg)
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn is_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == s)
    }

    fn finish(&self) -> Result<()> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(self.err("unexpected trailing input"))
        }
    }

    // ---- patterns ----

    fn regex_alt(&mut self, full: bool) -> Result<Regex> {
        let mut alts = vec![self.regex_concat(full)?];
        while self.is_sym("+") && (full || matches!(self.peek_at(1), Tok::Str(_) | Tok::Sym("*"))) {
            self.next();
            alts.push(self.regex_concat(full)?);
        }
        Ok(if alts.len() == 1 { alts.pop().unwrap() } else { Regex::Alt(alts) })
    }

    fn starts_regex_item(&self, full: bool) -> bool {
        match self.peek() {
            Tok::Str(_) | Tok::Sym("*") => true,
            Tok::Sym("(") | Tok::Ident(_) => full,
            _ => false,
        }
    }

    fn regex_concat(&mut self, full: bool) -> Result<Regex> {
        let mut parts = Vec::new();
        while self.starts_regex_item(full) {
            parts.push(self.regex_item()?);
        }
        match parts.len() {
            0 => Err(self.err("expected a pattern")),
            1 => Ok(parts.pop().unwrap()),
            _ => Ok(Regex::Concat(parts)),
        }
    }

    fn regex_item(&mut self) -> Result<Regex> {
        match self.next() {
            Tok::Str(s) => Ok(Regex::Lit(s)),
            Tok::Sym("*") => Ok(Regex::Any),
            Tok::Ident(name) => {
                (self.names)(&name).ok_or_else(|| Error::syntax(self.src, self.toks[self.pos - 1].offset, format!("unknown pattern name `{name}`")))
            }
            Tok::Sym("(") => {
                let inner = if self.is_sym(")") { Regex::Alt(vec![]) } else { self.regex_alt(true)? };
                self.expect(")")?;
                let tight = !self.toks[self.pos].space_before;
                if tight && self.is_sym("*") {
                    self.next();
                    return Ok(Regex::Star(Box::new(inner)));
                }
                Ok(inner)
            }
            _ => {
                self.pos -= 1;
                Err(self.err("expected a pattern"))
            }
        }
    }

    // ---- filters ----

    fn filter_or(&mut self) -> Result<Filter> {
        let mut parts = vec![self.filter_and()?];
        while self.eat("|") {
            parts.push(self.filter_and()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Filter::Or(parts) })
    }

    fn filter_and(&mut self) -> Result<Filter> {
        let mut parts = vec![self.filter_unary()?];
        while self.eat("&") {
            parts.push(self.filter_unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Filter::And(parts) })
    }

    fn filter_unary(&mut self) -> Result<Filter> {
        if self.eat("!") {
            return Ok(Filter::not(self.filter_unary()?));
        }
        self.filter_primary()
    }

    fn filter_primary(&mut self) -> Result<Filter> {
        match self.peek().clone() {
            Tok::Ident(name) if name == "true" => {
                self.next();
                Ok(Filter::True)
            }
            Tok::Ident(name) if name == "false" => {
                self.next();
                Ok(Filter::False)
            }
            Tok::Ident(name) if name == "pattern" => {
                self.next();
                self.expect("(")?;
                let r = self.regex_alt(true)?;
                self.expect(")")?;
                Filter::pattern(r)
            }
            Tok::Ident(name) => {
                self.next();
                if is_keyword(&name) {
                    return Err(Error::syntax(self.src, self.toks[self.pos - 1].offset, format!("unexpected keyword `{name}`")));
                }
                match (self.names)(&name) {
                    Some(r) => Filter::pattern(r),
                    None => Ok(Filter::State(StateId::new(&name))),
                }
            }
            Tok::Quoted(name) => {
                self.next();
                Ok(Filter::State(StateId::new(&name)))
            }
            Tok::Sym("(") => {
                self.next();
                let f = self.filter_or()?;
                self.expect(")")?;
                Ok(f)
            }
            Tok::Str(_) | Tok::Sym("*") => Filter::pattern(self.regex_alt(false)?),
            _ => Err(self.err("expected a filter")),
        }
    }

    // ---- formulas ----

    fn formula_or(&mut self) -> Result<Formula> {
        let mut parts = vec![self.formula_and()?];
        while self.eat("|") {
            parts.push(self.formula_and()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::Or(parts) })
    }

    fn formula_and(&mut self) -> Result<Formula> {
        let mut parts = vec![self.formula_unary()?];
        while self.eat("&") {
            parts.push(self.formula_unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::And(parts) })
    }

    fn formula_unary(&mut self) -> Result<Formula> {
        if self.eat("!") {
            return Ok(Formula::not(self.formula_unary()?));
        }
        if self.eat("(") {
            let f = self.formula_or()?;
            self.expect(")")?;
            return Ok(f);
        }
        if self.is_ident("true") {
            self.next();
            return Ok(Formula::Bool(true));
        }
        if self.is_ident("false") {
            self.next();
            return Ok(Formula::Bool(false));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Formula> {
        let lhs = self.expr()?;
        let op = match self.next() {
            Tok::Sym(op @ ("<=" | ">=" | "<" | ">" | "==" | "!=" | "=")) => op,
            _ => {
                self.pos -= 1;
                return Err(self.err("expected a comparison operator"));
            }
        };
        let rhs = self.expr()?;
        if self.is_ident("mod") {
            self.next();
            let m = match self.next() {
                Tok::Int(m) if m >= 1 => m,
                _ => {
                    self.pos -= 1;
                    return Err(self.err("expected a positive modulus"));
                }
            };
            let congruence = Formula::ModEq(lhs, rhs, m);
            return match op {
                "==" | "=" => Ok(congruence),
                "!=" => Ok(Formula::not(congruence)),
                _ => Err(self.err("`mod` only applies to `==` and `!=`")),
            };
        }
        Ok(match op {
            "<=" => Formula::le(lhs, rhs),
            ">=" => Formula::ge(lhs, rhs),
            "<" => Formula::lt(lhs, rhs),
            ">" => Formula::lt(rhs, lhs),
            "==" | "=" => Formula::eq(lhs, rhs),
            _ => Formula::not(Formula::eq(lhs, rhs)),
        })
    }

    fn expr(&mut self) -> Result<CountingExpr> {
        let mut e = self.term()?;
        while self.eat("+") {
            e = CountingExpr::add(e, self.term()?);
        }
        Ok(e)
    }

    fn term(&mut self) -> Result<CountingExpr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                Ok(CountingExpr::Const(n))
            }
            Tok::Ident(k) if k == "count" => {
                self.next();
                self.counter_body()
            }
            Tok::Sym("#") => {
                self.next();
                match self.peek() {
                    Tok::Ident(_) | Tok::Quoted(_) => Ok(CountingExpr::count(self.filter_primary()?)),
                    _ => self.counter_body(),
                }
            }
            _ => Err(self.err("expected a number or a counter")),
        }
    }

    fn counter_body(&mut self) -> Result<CountingExpr> {
        self.expect("(")?;
        let f = self.filter_or()?;
        self.expect(")")?;
        Ok(CountingExpr::count(f))
    }
}

pub fn parse_regex(src: &str, names: PatternNames<'_>) -> Result<Regex> {
    let mut p = Parser::new(src, names)?;
    let r = p.regex_alt(true)?;
    p.finish()?;
    Ok(r)
}

pub fn parse_filter(src: &str, names: PatternNames<'_>) -> Result<Filter> {
    let mut p = Parser::new(src, names)?;
    let f = p.filter_or()?;
    p.finish()?;
    Ok(f)
}

pub fn parse_formula(src: &str, names: PatternNames<'_>) -> Result<Formula> {
    let mut p = Parser::new(src, names)?;
    let f = p.formula_or()?;
    p.finish()?;
    Ok(f)
}

/// Parses a horizontal descriptor `(p, p')`.
pub fn parse_pair(src: &str) -> Result<(String, String)> {
    let mut p = Parser::new(src, &|_| None)?;
    p.expect("(")?;
    let name = |p: &mut Parser<'_>| match p.next() {
        Tok::Ident(s) | Tok::Quoted(s) => Ok(s),
        _ => {
            p.pos -= 1;
            Err(p.err("expected a horizontal state name"))
        }
    };
    let a = name(&mut p)?;
    p.expect(",")?;
    let b = name(&mut p)?;
    p.expect(")")?;
    p.finish()?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{state_set, StateSet};
    use crate::presburger::AnnotatedMultiset;

    fn no_names(_: &str) -> Option<Regex> {
        None
    }

    #[test]
    fn regex_forms() {
        assert_eq!(Regex::parse(r#"*".tex""#).unwrap(), Regex::suffix(".tex"));
        assert_eq!(Regex::parse(r#""\documentclass"*"#).unwrap(), Regex::prefix("\\documentclass"));
        assert_eq!(
            Regex::parse(r#""a" + "b""#).unwrap(),
            Regex::Alt(vec![Regex::lit("a"), Regex::lit("b")])
        );
        assert_eq!(Regex::parse(r#"("a")*"#).unwrap(), Regex::Star(Box::new(Regex::lit("a"))));
        assert_eq!(Regex::parse(r#""\"\\""#).unwrap(), Regex::lit("\"\\"));
        assert_eq!(Regex::parse("()").unwrap(), Regex::Alt(vec![]));
    }

    #[test]
    fn regex_errors_carry_offsets() {
        match Regex::parse(r#""a" + "#) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(Regex::parse(r#""abc"#).is_err());
        assert!(Regex::parse("main").is_err());
    }

    #[test]
    fn named_patterns_resolve() {
        let names = |n: &str| (n == "main").then(|| Regex::prefix("\\documentclass"));
        let f = parse_filter("main & leaf", &names).unwrap();
        assert!(f.eval("\\documentclass x", &state_set(["leaf"])));
        assert_eq!(f.support(), state_set(["leaf"]));
        let r = parse_regex(r#"main + "x""#, &names).unwrap();
        assert!(r.matches("x"));
    }

    #[test]
    fn filter_forms() {
        let f = parse_filter(r#"*".tex" & !file"#, &no_names).unwrap();
        assert!(f.eval("a.tex", &StateSet::new()));
        assert!(!f.eval("a.tex", &state_set(["file"])));
        let g = parse_filter(r#"*".dvi" + *".pdf" | `odd name`"#, &no_names).unwrap();
        assert!(g.eval("x.pdf", &StateSet::new()));
        assert!(g.eval("zzz", &state_set(["odd name"])));
        assert!(parse_filter("count", &no_names).is_err());
    }

    #[test]
    fn formula_forms() {
        let m = AnnotatedMultiset::new(vec![
            ("a.tex".into(), state_set(["main", "file"])),
            ("dir".into(), StateSet::new()),
        ]);
        let ok = parse_formula(
            r#"#(*".tex" & main) == 1 & count(*".tex" & !file) == 0 & count(*".dvi" + *".aux") = 0"#,
            &no_names,
        )
        .unwrap();
        assert!(ok.holds(&m));
        let modf = parse_formula("count(*) == 0 mod 2", &no_names).unwrap();
        assert!(modf.holds(&m));
        let ne = parse_formula("#(*) != 1 mod 2 | false", &no_names).unwrap();
        assert!(ne.holds(&m));
        let cmp = parse_formula("count(main) + 1 < count(*) + 1 & !(#file > 1)", &no_names).unwrap();
        assert!(cmp.holds(&m));
        assert!(parse_formula("count(*) < 1 mod 2", &no_names).is_err());
        assert!(parse_formula("count(*) == 1 mod 0", &no_names).is_err());
    }

    #[test]
    fn formula_display_round_trips() {
        let src = r#"#(*".tex" & main) == 1 & !(count(leaf) <= 2 + count(*)) | count(*) == 1 mod 3"#;
        let f = parse_formula(src, &no_names).unwrap();
        assert_eq!(parse_formula(&f.to_string(), &no_names).unwrap(), f);
    }

    #[test]
    fn pair_descriptor() {
        assert_eq!(parse_pair("(p0, p2)").unwrap(), ("p0".into(), "p2".into()));
        assert_eq!(parse_pair("(p, p')").unwrap(), ("p".into(), "p'".into()));
        assert!(parse_pair("(p0 p1)").is_err());
    }
}
