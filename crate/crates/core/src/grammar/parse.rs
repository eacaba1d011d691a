//! Reader for the line-oriented grammar format.
//!
//! ```text
//! %start S
//! %stack ga gb gc
//! r1: S(..)    -> S(..ga) "a"
//! r8: T()      -> "c"
//! ```
//!
//! `%nonterminals` and `%terminals` lines are optional; they fix the order of
//! symbols, which otherwise follows first appearance.

use std::collections::HashMap;

use super::normalize::{normalize, NormalizeError, Normalized};
use super::raw::{RawGrammar, RawItem, RawProduction, RawSchema, Violation};
use super::{LigGrammar, Nt, StackSym, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GrammarError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: undeclared stack symbol `{name}`")]
    UndeclaredStack { line: usize, name: String },
    #[error("missing %start directive")]
    MissingStart,
    #[error("line {line}: duplicate %start directive")]
    DuplicateStart { line: usize },
    #[error("line {line}: duplicate production name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("grammar is not in normal form:\n{}", render_violations(.0))]
    NotNormal(Vec<Violation>),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

fn render_violations(vs: &[Violation]) -> String {
    vs.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n")
}

/// Parses a grammar and requires it to be in normal form.
pub fn parse_grammar(text: &str) -> Result<LigGrammar, GrammarError> {
    parse_raw(text)?.into_normal().map_err(GrammarError::NotNormal)
}

/// Parses a grammar and rewrites it into normal form.
pub fn parse_grammar_relaxed(text: &str) -> Result<Normalized, GrammarError> {
    Ok(normalize(&parse_raw(text)?)?)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    Directive(String),
    Colon,
    Arrow,
    LParen,
    RParen,
    Dots,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '#' || c == '\''
}

fn is_nonterminal_name(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

fn lex_line(line: &str, lineno: usize) -> Result<Vec<(usize, Tok)>, GrammarError> {
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let err = |col: usize, msg: String| GrammarError::Syntax {
        line: lineno,
        col: col + 1,
        msg,
    };
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '#' => break,
            ':' => {
                toks.push((start, Tok::Colon));
                i += 1;
            }
            '(' => {
                toks.push((start, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((start, Tok::RParen));
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                toks.push((start, Tok::Arrow));
                i += 2;
            }
            '.' if chars.get(i + 1) == Some(&'.') => {
                toks.push((start, Tok::Dots));
                i += 2;
            }
            '"' => {
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(err(start, "unterminated string".into())),
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some(&e) => s.push(e),
                                None => return Err(err(start, "unterminated string".into())),
                            }
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                if s.is_empty() {
                    return Err(err(start, "empty terminal".into()));
                }
                toks.push((start, Tok::Quoted(s)));
            }
            '%' => {
                i += 1;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let name: String = chars[start + 1..i].iter().collect();
                toks.push((start, Tok::Directive(name)));
            }
            c if is_ident_start(c) => {
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                toks.push((start, Tok::Ident(chars[start..i].iter().collect())));
            }
            other => return Err(err(start, format!("unexpected character `{other}`"))),
        }
    }
    Ok(toks)
}

struct SchemaAst {
    inherits: bool,
    symbols: Vec<String>,
}

enum ItemAst {
    Terminal(String),
    Constituent(String, SchemaAst),
}

struct ProductionAst {
    line: usize,
    name: Option<String>,
    lhs: String,
    lhs_schema: SchemaAst,
    rhs: Vec<ItemAst>,
}

struct Cursor<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    line: usize,
    len: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |(c, _)| *c) + 1
    }

    fn error(&self, msg: impl Into<String>) -> GrammarError {
        GrammarError::Syntax {
            line: self.line,
            col: self.col(),
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Option<&'a Tok> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), GrammarError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn schema(&mut self) -> Result<SchemaAst, GrammarError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut s = SchemaAst {
            inherits: false,
            symbols: Vec::new(),
        };
        if self.peek() == Some(&Tok::Dots) {
            self.pos += 1;
            s.inherits = true;
        }
        loop {
            match self.peek() {
                Some(Tok::Ident(g)) => {
                    s.symbols.push(g.clone());
                    self.pos += 1;
                }
                Some(Tok::RParen) => {
                    self.pos += 1;
                    return Ok(s);
                }
                _ => return Err(self.error("expected a stack symbol or `)`")),
            }
        }
    }
}

fn parse_production(toks: &[(usize, Tok)], line: usize, len: usize) -> Result<ProductionAst, GrammarError> {
    let mut cur = Cursor {
        toks,
        pos: 0,
        line,
        len,
    };
    let mut name = None;
    if let (Some((_, Tok::Ident(n))), Some((_, Tok::Colon))) = (toks.first(), toks.get(1)) {
        name = Some(n.clone());
        cur.pos = 2;
    }
    let lhs = match cur.next() {
        Some(Tok::Ident(a)) if is_nonterminal_name(a) => a.clone(),
        _ => {
            cur.pos -= 1;
            return Err(cur.error("expected a nonterminal (uppercase identifier)"));
        }
    };
    let lhs_schema = cur.schema()?;
    cur.expect(Tok::Arrow, "`->`")?;
    let mut rhs = Vec::new();
    while let Some(t) = cur.peek() {
        match t {
            Tok::Quoted(s) => {
                rhs.push(ItemAst::Terminal(s.clone()));
                cur.pos += 1;
            }
            Tok::Ident(s) if is_nonterminal_name(s) => {
                cur.pos += 1;
                if cur.peek() != Some(&Tok::LParen) {
                    return Err(cur.error(format!("nonterminal `{s}` needs a stack schema")));
                }
                let schema = cur.schema()?;
                rhs.push(ItemAst::Constituent(s.clone(), schema));
            }
            Tok::Ident(s) => {
                rhs.push(ItemAst::Terminal(s.clone()));
                cur.pos += 1;
            }
            _ => return Err(cur.error("expected a terminal or a constituent")),
        }
    }
    Ok(ProductionAst {
        line,
        name,
        lhs,
        lhs_schema,
        rhs,
    })
}

#[derive(Default)]
struct Interner {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), self.names.len() - 1);
        self.names.len() - 1
    }
}

/// Parses a grammar without checking the normal form.
pub fn parse_raw(text: &str) -> Result<RawGrammar, GrammarError> {
    let mut start: Option<(usize, String)> = None;
    let mut stack_decl: Vec<String> = Vec::new();
    let mut nt_decl: Vec<String> = Vec::new();
    let mut t_decl: Vec<String> = Vec::new();
    let mut asts = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let toks = lex_line(line, lineno)?;
        let Some((col, first)) = toks.first() else {
            continue;
        };
        let syntax = |col: usize, msg: String| GrammarError::Syntax {
            line: lineno,
            col: col + 1,
            msg,
        };
        if let Tok::Directive(d) = first {
            let args = &toks[1..];
            match d.as_str() {
                "start" => {
                    if start.is_some() {
                        return Err(GrammarError::DuplicateStart { line: lineno });
                    }
                    match args {
                        [(_, Tok::Ident(s))] if is_nonterminal_name(s) => {
                            start = Some((lineno, s.clone()));
                        }
                        _ => return Err(syntax(*col, "%start takes one nonterminal".into())),
                    }
                }
                "stack" | "nonterminals" | "terminals" => {
                    for (c, t) in args {
                        match (d.as_str(), t) {
                            ("stack", Tok::Ident(g)) => stack_decl.push(g.clone()),
                            ("nonterminals", Tok::Ident(a)) if is_nonterminal_name(a) => {
                                nt_decl.push(a.clone())
                            }
                            ("terminals", Tok::Quoted(a)) => t_decl.push(a.clone()),
                            ("terminals", Tok::Ident(a)) if !is_nonterminal_name(a) => {
                                t_decl.push(a.clone())
                            }
                            _ => return Err(syntax(*c, format!("unexpected token in %{d}"))),
                        }
                    }
                }
                other => return Err(syntax(*col, format!("unknown directive %{other}"))),
            }
            continue;
        }
        asts.push(parse_production(&toks, lineno, line.chars().count())?);
    }

    let (_, start_name) = start.ok_or(GrammarError::MissingStart)?;
    let mut nts = Interner::default();
    let mut ts = Interner::default();
    let mut stacks = Interner::default();
    for a in &nt_decl {
        nts.intern(a);
    }
    let start = Nt(nts.intern(&start_name));
    for t in &t_decl {
        ts.intern(t);
    }
    for g in &stack_decl {
        stacks.intern(g);
    }

    let mut productions = Vec::with_capacity(asts.len());
    let mut seen_names: HashMap<String, usize> = HashMap::new();
    for (i, ast) in asts.iter().enumerate() {
        let name = ast.name.clone().unwrap_or_else(|| format!("r{}", i + 1));
        if seen_names.insert(name.clone(), ast.line).is_some() {
            return Err(GrammarError::DuplicateName {
                line: ast.line,
                name,
            });
        }
        let schema = |s: &SchemaAst| -> Result<RawSchema, GrammarError> {
            let mut symbols = Vec::with_capacity(s.symbols.len());
            for g in &s.symbols {
                match stacks.index.get(g) {
                    Some(&k) => symbols.push(StackSym(k)),
                    None => {
                        return Err(GrammarError::UndeclaredStack {
                            line: ast.line,
                            name: g.clone(),
                        })
                    }
                }
            }
            Ok(RawSchema {
                inherits: s.inherits,
                symbols,
            })
        };
        let lhs = Nt(nts.intern(&ast.lhs));
        let lhs_schema = schema(&ast.lhs_schema)?;
        let mut rhs = Vec::with_capacity(ast.rhs.len());
        for item in &ast.rhs {
            rhs.push(match item {
                ItemAst::Terminal(t) => RawItem::Terminal(Term(ts.intern(t))),
                ItemAst::Constituent(a, s) => {
                    let s = schema(s)?;
                    RawItem::Constituent(Nt(nts.intern(a)), s)
                }
            });
        }
        productions.push(RawProduction {
            name,
            lhs,
            lhs_schema,
            rhs,
            line: ast.line,
        });
    }

    Ok(RawGrammar {
        nonterminals: nts.names,
        terminals: ts.names,
        stack_symbols: stacks.names,
        productions,
        start,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{validate_normal_form, ViolationKind};
    use super::*;

    const WCW: &str = include_str!("../../../../fixtures/wcw.lig");
    const CYCLIC: &str = include_str!("../../../../fixtures/cyclic.lig");

    #[test]
    fn wcw_grammar_shape() {
        let g = parse_grammar(WCW).unwrap();
        assert_eq!(g.nonterminals, ["S", "T"]);
        assert_eq!(g.stack_symbols.len(), 3);
        assert_eq!(g.productions.len(), 8);
        assert_eq!(g.terminals, ["a", "b", "c"]);
        assert_eq!(g.prod_name(crate::grammar::ProdId(7)), "r8");
    }

    #[test]
    fn cyclic_grammar_shape() {
        let g = parse_grammar(CYCLIC).unwrap();
        assert_eq!(g.nonterminals.len(), 2);
        assert_eq!(g.stack_symbols.len(), 1);
        assert_eq!(g.productions.len(), 4);
        assert_eq!(g.nt_name(g.start), "A");
    }

    #[test]
    fn minimal_grammar() {
        let g = parse_grammar("%start S\nS() -> \"a\"").unwrap();
        assert_eq!(g.productions.len(), 1);
        assert_eq!(g.productions[0].name, "r1");
        assert!(matches!(g.productions[0].rhs, crate::grammar::Rhs::Word(ref w) if w.len() == 1));
    }

    #[test]
    fn empty_word_and_comments() {
        let g = parse_grammar("# header\n%start S # trailing\nS() ->\n").unwrap();
        assert!(matches!(g.productions[0].rhs, crate::grammar::Rhs::Word(ref w) if w.is_empty()));
    }

    #[test]
    fn missing_start() {
        assert_eq!(parse_raw("S() -> a").unwrap_err(), GrammarError::MissingStart);
    }

    #[test]
    fn duplicate_start() {
        let err = parse_raw("%start S\n%start T\n").unwrap_err();
        assert_eq!(err, GrammarError::DuplicateStart { line: 2 });
    }

    #[test]
    fn undeclared_stack_symbol() {
        let err = parse_raw("%start S\nS(..) -> S(..g)").unwrap_err();
        assert_eq!(
            err,
            GrammarError::UndeclaredStack {
                line: 2,
                name: "g".into()
            }
        );
    }

    #[test]
    fn duplicate_names() {
        let err = parse_raw("%start S\nx: S() -> a\nx: S() -> b").unwrap_err();
        assert!(matches!(err, GrammarError::DuplicateName { line: 3, .. }));
        // an auto-name may collide with an explicit one
        let err = parse_raw("%start S\nr2: S() -> a\nS() -> b").unwrap_err();
        assert!(matches!(err, GrammarError::DuplicateName { line: 3, .. }));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_raw("%start S\nS() => a").unwrap_err() {
            GrammarError::Syntax { line, col, .. } => assert_eq!((line, col), (2, 5)),
            e => panic!("unexpected {e:?}"),
        }
        match parse_raw("%start S\nS(..) -> B \"a\"").unwrap_err() {
            GrammarError::Syntax { line, col, .. } => assert_eq!((line, col), (2, 12)),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(
            parse_raw("%start S\nS() -> \"a").unwrap_err(),
            GrammarError::Syntax { .. }
        ));
        assert!(matches!(parse_raw("%bogus\n").unwrap_err(), GrammarError::Syntax { .. }));
    }

    #[test]
    fn strict_parsing_rejects_long_words() {
        let err = parse_grammar("%start A\nA() -> \"a\" \"b\" \"c\"").unwrap_err();
        match err {
            GrammarError::NotNormal(v) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].kind, ViolationKind::WordTooLong(3));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn violations_are_listed() {
        let raw = parse_raw("%start A\n%stack x y\nA(..x y) -> B(..)").unwrap();
        let v = validate_normal_form(&raw);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::TooManyStackSymbols(2));
        assert_eq!(v[0].production, "r1");

        let raw = parse_raw("%start A\n%stack x\nA(..) -> a B(..) C() D(x)").unwrap();
        let kinds: Vec<_> = validate_normal_form(&raw).into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::TooManyFlanks(3)));
        assert!(kinds.contains(&ViolationKind::SecondaryWithStack(Nt(3))));

        let raw = parse_raw("%start A\nA(..) -> B(..) C(..)\nA() -> B() C()\nA() -> B(..)").unwrap();
        let kinds: Vec<_> = validate_normal_form(&raw).into_iter().map(|v| v.kind).collect();
        assert_eq!(
            kinds,
            [
                ViolationKind::MultiplePrimaries(2),
                ViolationKind::MissingPrimary,
                ViolationKind::PrimaryUnderEmptyHead
            ]
        );
    }

    #[test]
    fn wcw_is_normal() {
        assert!(validate_normal_form(&parse_raw(WCW).unwrap()).is_empty());
    }

    #[test]
    fn render_round_trip_on_fixtures() {
        for text in [WCW, CYCLIC, include_str!("../../../../fixtures/anbncn.lig")] {
            let g = parse_grammar(text).unwrap();
            let again = parse_grammar(&g.render()).unwrap();
            assert_eq!(g, again);
        }
    }

    #[test]
    fn terminals_may_be_quoted_or_bare() {
        let g = parse_grammar("%start S\nS() -> a \"a\"").unwrap();
        assert_eq!(g.terminals, ["a"]);
        let g = parse_grammar("%start S\nS() -> \"say \\\"hi\\\"\"").unwrap();
        assert_eq!(g.terminals, ["say \"hi\""]);
        assert_eq!(parse_grammar(&g.render()).unwrap(), g);
    }
}
