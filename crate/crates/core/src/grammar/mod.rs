//! Linear indexed grammars in normal form, their textual format and their
//! context-free backbones.
//!
//! A [`LigGrammar`] only ever holds normal-form productions:
//!
//! ```text
//! A()      -> w                    0 <= |w| <= 2
//! A(..α)   -> Γ1 B(..α') Γ2        |αα'| <= 1, Γ1Γ2 a terminal, a C() or nothing
//! ```
//!
//! Grammars that do not fit this shape are read into a [`RawGrammar`] and
//! either rejected (see [`validate_normal_form`]) or rewritten by
//! [`normalize`].

mod normalize;
mod parse;
mod raw;

pub use normalize::{normalize, NormalizeError, Normalized};
pub use parse::{parse_grammar, parse_grammar_relaxed, parse_raw, GrammarError};
pub use raw::{
    validate_normal_form, RawGrammar, RawItem, RawProduction, RawSchema, Violation,
    ViolationKind,
};

use std::fmt;

use serde::Serialize;

use crate::cfg::{CfGrammar, CfProduction, Symbol};

/// Index of a nonterminal in its grammar's symbol table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Nt(pub usize);

/// Index of a terminal in its grammar's symbol table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Term(pub usize);

/// Index of a stack symbol in its grammar's symbol table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct StackSym(pub usize);

/// Position of a production in its grammar (0-based; displayed by name).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ProdId(pub usize);

/// Stack schema of a single constituent.
///
/// `Copy`, `Push` and `Pop` only occur on primary constituents and heads;
/// `Empty` marks secondary constituents and terminal-word heads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StackSchema {
    Copy,
    Push(StackSym),
    Pop(StackSym),
    Empty,
}

/// The stack operation a structured production performs between its head
/// and its primary constituent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StackOp {
    Copy,
    Push(StackSym),
    Pop(StackSym),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flank {
    Terminal(Term),
    Secondary(Nt),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rhs {
    /// `A() -> w`
    Word(Vec<Term>),
    /// `A(..α) -> Γ1 B(..α') Γ2` with at most one flank.
    Structured {
        flank: Option<(Side, Flank)>,
        primary: Nt,
        primary_schema: StackSchema,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LigProduction {
    pub name: String,
    pub lhs: Nt,
    pub lhs_schema: StackSchema,
    pub rhs: Rhs,
}

impl LigProduction {
    /// Builds a terminal-word production `lhs() -> word`.
    pub fn word(name: impl Into<String>, lhs: Nt, word: Vec<Term>) -> Self {
        LigProduction {
            name: name.into(),
            lhs,
            lhs_schema: StackSchema::Empty,
            rhs: Rhs::Word(word),
        }
    }

    /// Builds a structured production from its stack operation.
    pub fn structured(
        name: impl Into<String>,
        lhs: Nt,
        op: StackOp,
        primary: Nt,
        flank: Option<(Side, Flank)>,
    ) -> Self {
        let (lhs_schema, primary_schema) = match op {
            StackOp::Copy => (StackSchema::Copy, StackSchema::Copy),
            StackOp::Push(g) => (StackSchema::Copy, StackSchema::Push(g)),
            StackOp::Pop(g) => (StackSchema::Pop(g), StackSchema::Copy),
        };
        LigProduction {
            name: name.into(),
            lhs,
            lhs_schema,
            rhs: Rhs::Structured {
                flank,
                primary,
                primary_schema,
            },
        }
    }

    /// Stack operation of a structured production, `None` for terminal words.
    pub fn op(&self) -> Option<StackOp> {
        match &self.rhs {
            Rhs::Word(_) => None,
            Rhs::Structured { primary_schema, .. } => Some(match (self.lhs_schema, primary_schema) {
                (StackSchema::Pop(g), _) => StackOp::Pop(g),
                (_, StackSchema::Push(g)) => StackOp::Push(*g),
                _ => StackOp::Copy,
            }),
        }
    }

    pub fn primary(&self) -> Option<Nt> {
        match &self.rhs {
            Rhs::Word(_) => None,
            Rhs::Structured { primary, .. } => Some(*primary),
        }
    }

    pub fn flank(&self) -> Option<(Side, Flank)> {
        match &self.rhs {
            Rhs::Word(_) => None,
            Rhs::Structured { flank, .. } => *flank,
        }
    }

    /// The secondary constituent, if the flank is one.
    pub fn secondary(&self) -> Option<Nt> {
        match self.flank() {
            Some((_, Flank::Secondary(x))) => Some(x),
            _ => None,
        }
    }

    fn check(&self, g: &LigGrammar) -> Result<(), String> {
        let bad_nt = |nt: Nt| nt.0 >= g.nonterminals.len();
        if bad_nt(self.lhs) {
            return Err(format!("{}: unknown head nonterminal", self.name));
        }
        match &self.rhs {
            Rhs::Word(w) => {
                if self.lhs_schema != StackSchema::Empty {
                    return Err(format!("{}: terminal word under a non-empty head", self.name));
                }
                if w.len() > 2 {
                    return Err(format!("{}: terminal word longer than 2", self.name));
                }
                if w.iter().any(|t| t.0 >= g.terminals.len()) {
                    return Err(format!("{}: unknown terminal", self.name));
                }
            }
            Rhs::Structured {
                flank,
                primary,
                primary_schema,
            } => {
                if bad_nt(*primary) {
                    return Err(format!("{}: unknown primary nonterminal", self.name));
                }
                match (self.lhs_schema, primary_schema) {
                    (StackSchema::Copy, StackSchema::Copy)
                    | (StackSchema::Copy, StackSchema::Push(_))
                    | (StackSchema::Pop(_), StackSchema::Copy) => {}
                    _ => return Err(format!("{}: invalid stack schemas", self.name)),
                }
                for s in [self.lhs_schema, *primary_schema] {
                    if let StackSchema::Push(x) | StackSchema::Pop(x) = s {
                        if x.0 >= g.stack_symbols.len() {
                            return Err(format!("{}: unknown stack symbol", self.name));
                        }
                    }
                }
                match flank {
                    Some((_, Flank::Secondary(x))) if bad_nt(*x) => {
                        return Err(format!("{}: unknown secondary nonterminal", self.name))
                    }
                    Some((_, Flank::Terminal(t))) if t.0 >= g.terminals.len() => {
                        return Err(format!("{}: unknown terminal", self.name))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// A linear indexed grammar in normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LigGrammar {
    pub nonterminals: Vec<String>,
    pub terminals: Vec<String>,
    pub stack_symbols: Vec<String>,
    pub productions: Vec<LigProduction>,
    pub start: Nt,
}

/// A normal-form invariant broken by a hand-built grammar.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed grammar: {0}")]
pub struct MalformedGrammar(pub String);

impl LigGrammar {
    pub fn new(
        nonterminals: Vec<String>,
        terminals: Vec<String>,
        stack_symbols: Vec<String>,
        productions: Vec<LigProduction>,
        start: Nt,
    ) -> Result<Self, MalformedGrammar> {
        let g = LigGrammar {
            nonterminals,
            terminals,
            stack_symbols,
            productions,
            start,
        };
        if g.start.0 >= g.nonterminals.len() {
            return Err(MalformedGrammar("start symbol out of range".into()));
        }
        let mut names = std::collections::HashSet::new();
        for p in &g.productions {
            p.check(&g).map_err(MalformedGrammar)?;
            if !names.insert(p.name.as_str()) {
                return Err(MalformedGrammar(format!("duplicate production name {}", p.name)));
            }
        }
        Ok(g)
    }

    pub fn production(&self, id: ProdId) -> &LigProduction {
        &self.productions[id.0]
    }

    pub fn nt_name(&self, nt: Nt) -> &str {
        &self.nonterminals[nt.0]
    }

    pub fn term_name(&self, t: Term) -> &str {
        &self.terminals[t.0]
    }

    pub fn stack_name(&self, s: StackSym) -> &str {
        &self.stack_symbols[s.0]
    }

    pub fn prod_name(&self, id: ProdId) -> &str {
        &self.productions[id.0].name
    }

    pub fn find_nt(&self, name: &str) -> Option<Nt> {
        self.nonterminals.iter().position(|n| n == name).map(Nt)
    }

    pub fn find_terminal(&self, name: &str) -> Option<Term> {
        self.terminals.iter().position(|n| n == name).map(Term)
    }

    pub fn find_stack(&self, name: &str) -> Option<StackSym> {
        self.stack_symbols.iter().position(|n| n == name).map(StackSym)
    }

    pub fn find_production(&self, name: &str) -> Option<ProdId> {
        self.productions.iter().position(|p| p.name == name).map(ProdId)
    }

    /// Maps token strings to terminals, failing on the first unknown token.
    pub fn tokenize<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<Term>, UnknownToken> {
        tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                self.find_terminal(t.as_ref()).ok_or_else(|| UnknownToken {
                    position: i,
                    token: t.as_ref().to_string(),
                })
            })
            .collect()
    }

    pub fn production_ids(&self) -> impl Iterator<Item = ProdId> {
        (0..self.productions.len()).map(ProdId)
    }

    /// The grammar as a relaxed grammar, e.g. for rendering.
    pub fn to_raw(&self) -> RawGrammar {
        let schema = |s: StackSchema| match s {
            StackSchema::Copy => RawSchema::inherit(vec![]),
            StackSchema::Push(g) | StackSchema::Pop(g) => RawSchema::inherit(vec![g]),
            StackSchema::Empty => RawSchema::empty(),
        };
        let productions = self
            .productions
            .iter()
            .map(|p| {
                let rhs = match &p.rhs {
                    Rhs::Word(w) => w.iter().map(|t| RawItem::Terminal(*t)).collect(),
                    Rhs::Structured {
                        flank,
                        primary,
                        primary_schema,
                    } => {
                        let flank_item = |f: &Flank| match f {
                            Flank::Terminal(t) => RawItem::Terminal(*t),
                            Flank::Secondary(x) => RawItem::Constituent(*x, RawSchema::empty()),
                        };
                        let mut items = Vec::new();
                        if let Some((Side::Left, f)) = flank {
                            items.push(flank_item(f));
                        }
                        items.push(RawItem::Constituent(*primary, schema(*primary_schema)));
                        if let Some((Side::Right, f)) = flank {
                            items.push(flank_item(f));
                        }
                        items
                    }
                };
                RawProduction {
                    name: p.name.clone(),
                    lhs: p.lhs,
                    lhs_schema: schema(p.lhs_schema),
                    rhs,
                    line: 0,
                }
            })
            .collect();
        RawGrammar {
            nonterminals: self.nonterminals.clone(),
            terminals: self.terminals.clone(),
            stack_symbols: self.stack_symbols.clone(),
            productions,
            start: self.start,
        }
    }

    /// Renders the grammar in the textual format accepted by [`parse_grammar`].
    pub fn render(&self) -> String {
        self.to_raw().render()
    }

    /// Human-readable form of one production, e.g. `r1: S(..) -> S(..ga) a`.
    pub fn display_production(&self, id: ProdId) -> String {
        self.to_raw().display_production(id.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown token `{token}` at position {position}")]
pub struct UnknownToken {
    pub position: usize,
    pub token: String,
}

/// Erases every stack schema. Production `i` of the result is production `i`
/// of `g`, with the same name.
pub fn cf_backbone(g: &LigGrammar) -> CfGrammar {
    let productions = g
        .productions
        .iter()
        .map(|p| {
            let rhs = match &p.rhs {
                Rhs::Word(w) => w.iter().map(|t| Symbol::T(t.0)).collect(),
                Rhs::Structured { flank, primary, .. } => {
                    let flank_sym = |f: &Flank| match f {
                        Flank::Terminal(t) => Symbol::T(t.0),
                        Flank::Secondary(x) => Symbol::N(x.0),
                    };
                    let mut rhs = Vec::with_capacity(2);
                    if let Some((Side::Left, f)) = flank {
                        rhs.push(flank_sym(f));
                    }
                    rhs.push(Symbol::N(primary.0));
                    if let Some((Side::Right, f)) = flank {
                        rhs.push(flank_sym(f));
                    }
                    rhs
                }
            };
            CfProduction {
                name: p.name.clone(),
                lhs: p.lhs.0,
                rhs,
            }
        })
        .collect();
    CfGrammar {
        nonterminals: g.nonterminals.clone(),
        terminals: g.terminals.clone(),
        productions,
        start: g.start.0,
    }
}

impl fmt::Display for LigGrammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
