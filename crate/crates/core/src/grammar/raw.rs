//! Grammars as written, before any normal-form check.

use std::fmt;

use super::{Flank, LigGrammar, LigProduction, Nt, Rhs, Side, StackSchema, StackSym, Term};

/// A stack schema as written: `()`, `(..)`, `(..g h)` or `(g h)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RawSchema {
    /// Whether the schema starts with `..`.
    pub inherits: bool,
    /// Explicit symbols, bottom first.
    pub symbols: Vec<StackSym>,
}

impl RawSchema {
    pub fn empty() -> Self {
        RawSchema {
            inherits: false,
            symbols: Vec::new(),
        }
    }

    pub fn inherit(symbols: Vec<StackSym>) -> Self {
        RawSchema {
            inherits: true,
            symbols,
        }
    }

    pub fn is_empty_stack(&self) -> bool {
        !self.inherits && self.symbols.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RawItem {
    Terminal(Term),
    Constituent(Nt, RawSchema),
}

impl RawItem {
    pub fn is_primary(&self) -> bool {
        matches!(self, RawItem::Constituent(_, s) if s.inherits)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawProduction {
    pub name: String,
    pub lhs: Nt,
    pub lhs_schema: RawSchema,
    pub rhs: Vec<RawItem>,
    /// Source line, 0 when the production was not read from text.
    pub line: usize,
}

/// A linear indexed grammar that may violate the normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawGrammar {
    pub nonterminals: Vec<String>,
    pub terminals: Vec<String>,
    pub stack_symbols: Vec<String>,
    pub productions: Vec<RawProduction>,
    pub start: Nt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// `A() -> w` with `|w| > 2`.
    WordTooLong(usize),
    /// `|αα'| > 1`.
    TooManyStackSymbols(usize),
    /// More than one terminal or secondary constituent beside the primary.
    TooManyFlanks(usize),
    /// A secondary constituent written with a non-empty fixed stack.
    SecondaryWithStack(Nt),
    /// Secondary constituents or an inheriting head without any primary.
    MissingPrimary,
    MultiplePrimaries(usize),
    /// A primary constituent below a head with the fixed empty stack.
    PrimaryUnderEmptyHead,
    /// A head with a fixed non-empty stack, e.g. `A(g)`.
    FixedHeadStack,
}

impl ViolationKind {
    /// Whether [`super::normalize`] can rewrite this violation away.
    pub fn is_normalizable(&self) -> bool {
        matches!(
            self,
            ViolationKind::WordTooLong(_)
                | ViolationKind::TooManyStackSymbols(_)
                | ViolationKind::TooManyFlanks(_)
                | ViolationKind::SecondaryWithStack(_)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub production: String,
    pub line: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match &self.kind {
            ViolationKind::WordTooLong(n) => format!("terminal word of length {n} (at most 2)"),
            ViolationKind::TooManyStackSymbols(n) => {
                format!("{n} explicit stack symbols (at most 1 per production)")
            }
            ViolationKind::TooManyFlanks(n) => {
                format!("{n} constituents beside the primary one (at most 1)")
            }
            ViolationKind::SecondaryWithStack(_) => {
                "secondary constituent with a non-empty stack".to_string()
            }
            ViolationKind::MissingPrimary => "no primary constituent".to_string(),
            ViolationKind::MultiplePrimaries(n) => format!("{n} primary constituents"),
            ViolationKind::PrimaryUnderEmptyHead => {
                "primary constituent under an empty-stack head".to_string()
            }
            ViolationKind::FixedHeadStack => "head with a fixed non-empty stack".to_string(),
        };
        if self.line > 0 {
            write!(f, "line {}: ", self.line)?;
        }
        write!(f, "production {}: {}", self.production, what)
    }
}

/// Lists every normal-form violation. Empty iff the grammar is in normal form.
pub fn validate_normal_form(g: &RawGrammar) -> Vec<Violation> {
    let mut out = Vec::new();
    for p in &g.productions {
        for kind in production_violations(p) {
            out.push(Violation {
                production: p.name.clone(),
                line: p.line,
                kind,
            });
        }
    }
    out
}

pub(crate) fn production_violations(p: &RawProduction) -> Vec<ViolationKind> {
    let mut out = Vec::new();
    for item in &p.rhs {
        if let RawItem::Constituent(nt, s) = item {
            if !s.inherits && !s.symbols.is_empty() {
                out.push(ViolationKind::SecondaryWithStack(*nt));
            }
        }
    }
    let primaries: Vec<&RawSchema> = p
        .rhs
        .iter()
        .filter_map(|i| match i {
            RawItem::Constituent(_, s) if s.inherits => Some(s),
            _ => None,
        })
        .collect();
    if !p.lhs_schema.inherits && !p.lhs_schema.symbols.is_empty() {
        out.push(ViolationKind::FixedHeadStack);
    }
    match primaries.len() {
        0 => {
            let has_constituent = p.rhs.iter().any(|i| matches!(i, RawItem::Constituent(..)));
            if p.lhs_schema.inherits || has_constituent {
                out.push(ViolationKind::MissingPrimary);
            } else if p.rhs.len() > 2 {
                out.push(ViolationKind::WordTooLong(p.rhs.len()));
            }
        }
        1 => {
            if !p.lhs_schema.inherits && p.lhs_schema.symbols.is_empty() {
                out.push(ViolationKind::PrimaryUnderEmptyHead);
            }
            let count = p.lhs_schema.symbols.len() + primaries[0].symbols.len();
            if count > 1 {
                out.push(ViolationKind::TooManyStackSymbols(count));
            }
            if p.rhs.len() > 2 {
                out.push(ViolationKind::TooManyFlanks(p.rhs.len() - 1));
            }
        }
        n => out.push(ViolationKind::MultiplePrimaries(n)),
    }
    out
}

impl RawGrammar {
    /// Converts a grammar that is already in normal form.
    pub fn into_normal(self) -> Result<LigGrammar, Vec<Violation>> {
        let violations = validate_normal_form(&self);
        if !violations.is_empty() {
            return Err(violations);
        }
        let productions = self.productions.iter().map(to_normal).collect();
        Ok(LigGrammar::new(
            self.nonterminals,
            self.terminals,
            self.stack_symbols,
            productions,
            self.start,
        )
        .expect("validated productions form a well-formed grammar"))
    }

    pub fn nt_name(&self, nt: Nt) -> &str {
        &self.nonterminals[nt.0]
    }

    fn schema_text(&self, s: &RawSchema) -> String {
        let mut out = String::from("(");
        if s.inherits {
            out.push_str("..");
        }
        let syms: Vec<&str> = s.symbols.iter().map(|g| self.stack_symbols[g.0].as_str()).collect();
        out.push_str(&syms.join(" "));
        out.push(')');
        out
    }

    /// One production in the textual format, e.g. `r1: S(..) -> S(..ga) "a"`.
    pub fn display_production(&self, index: usize) -> String {
        let p = &self.productions[index];
        let mut out = format!(
            "{}: {}{} ->",
            p.name,
            self.nt_name(p.lhs),
            self.schema_text(&p.lhs_schema)
        );
        for item in &p.rhs {
            out.push(' ');
            match item {
                RawItem::Terminal(t) => out.push_str(&quote(&self.terminals[t.0])),
                RawItem::Constituent(nt, s) => {
                    out.push_str(self.nt_name(*nt));
                    out.push_str(&self.schema_text(s));
                }
            }
        }
        out
    }

    /// Renders the grammar so that [`super::parse_raw`] reads it back unchanged,
    /// including symbol order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("%start {}\n", self.nt_name(self.start)));
        if !self.nonterminals.is_empty() {
            out.push_str(&format!("%nonterminals {}\n", self.nonterminals.join(" ")));
        }
        if !self.terminals.is_empty() {
            let ts: Vec<String> = self.terminals.iter().map(|t| quote(t)).collect();
            out.push_str(&format!("%terminals {}\n", ts.join(" ")));
        }
        if !self.stack_symbols.is_empty() {
            out.push_str(&format!("%stack {}\n", self.stack_symbols.join(" ")));
        }
        for i in 0..self.productions.len() {
            out.push_str(&self.display_production(i));
            out.push('\n');
        }
        out
    }
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn to_normal(p: &RawProduction) -> LigProduction {
    let primary_at = p.rhs.iter().position(RawItem::is_primary);
    let Some(at) = primary_at else {
        let word = p
            .rhs
            .iter()
            .map(|i| match i {
                RawItem::Terminal(t) => *t,
                RawItem::Constituent(..) => unreachable!("validated terminal word"),
            })
            .collect();
        return LigProduction::word(p.name.clone(), p.lhs, word);
    };
    let RawItem::Constituent(primary, pschema) = &p.rhs[at] else {
        unreachable!()
    };
    let lhs_schema = match p.lhs_schema.symbols.first() {
        Some(g) => StackSchema::Pop(*g),
        None => StackSchema::Copy,
    };
    let primary_schema = match pschema.symbols.first() {
        Some(g) => StackSchema::Push(*g),
        None => StackSchema::Copy,
    };
    let flank = p.rhs.iter().enumerate().find(|(i, _)| *i != at).map(|(i, item)| {
        let side = if i < at { Side::Left } else { Side::Right };
        let f = match item {
            RawItem::Terminal(t) => Flank::Terminal(*t),
            RawItem::Constituent(x, _) => Flank::Secondary(*x),
        };
        (side, f)
    });
    LigProduction {
        name: p.name.clone(),
        lhs: p.lhs,
        lhs_schema,
        rhs: Rhs::Structured {
            flank,
            primary: *primary,
            primary_schema,
        },
    }
}
