//! Rewriting of relaxed grammars into normal form.
//!
//! Only the string language is preserved; derivations of the rewritten
//! grammar are longer, and fresh productions map to no source production.

use std::collections::HashSet;

use super::raw::{production_violations, RawGrammar, RawItem, RawProduction, Violation};
use super::{Flank, LigGrammar, LigProduction, Nt, ProdId, Side, StackOp, StackSym};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("production {production} cannot be normalized: {reason}")]
pub struct NormalizeError {
    pub production: String,
    pub reason: String,
}

/// A normal-form grammar and the homomorphism back to the source productions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub grammar: LigGrammar,
    /// `origin[i]` is the source production of production `i`, `None` for
    /// fresh productions.
    pub origin: Vec<Option<ProdId>>,
}

impl Normalized {
    pub fn is_fresh(&self, id: ProdId) -> bool {
        self.origin[id.0].is_none()
    }
}

struct Builder<'a> {
    raw: &'a RawGrammar,
    nonterminals: Vec<String>,
    used_nt: HashSet<String>,
    used_names: HashSet<String>,
    counter: usize,
    productions: Vec<LigProduction>,
    origin: Vec<Option<ProdId>>,
    /// Feeders `N(..) -> C(..β)` for secondaries written `C(β)`.
    deferred: Vec<(Nt, Nt, Vec<StackSym>, String, Nt)>,
}

impl<'a> Builder<'a> {
    fn fresh_nt(&mut self, base: Nt) -> Nt {
        loop {
            self.counter += 1;
            let name = format!("{}#{}", self.raw.nonterminals[base.0], self.counter);
            if self.used_nt.insert(name.clone()) {
                self.nonterminals.push(name);
                return Nt(self.nonterminals.len() - 1);
            }
        }
    }

    fn fresh_name(&mut self, base: &str) -> String {
        let mut k = 1;
        loop {
            let name = format!("{base}#{k}");
            if self.used_names.insert(name.clone()) {
                return name;
            }
            k += 1;
        }
    }

    fn push(&mut self, p: LigProduction, origin: Option<ProdId>) {
        self.productions.push(p);
        self.origin.push(origin);
    }

    /// Emits one production of a chain; the first keeps the source name.
    fn emit(&mut self, chain: &mut Chain, make: impl FnOnce(String) -> LigProduction) {
        let (name, origin) = if chain.first {
            chain.first = false;
            (chain.name.clone(), chain.origin)
        } else {
            (self.fresh_name(&chain.name), None)
        };
        let p = make(name);
        self.push(p, origin);
    }

    fn flank_of(&mut self, chain: &mut Chain, item: &RawItem) -> Flank {
        match item {
            RawItem::Terminal(t) => Flank::Terminal(*t),
            RawItem::Constituent(x, s) if s.symbols.is_empty() => Flank::Secondary(*x),
            // C(β) becomes N() with N(..) -> C(..β)
            RawItem::Constituent(x, s) => {
                let n = self.fresh_nt(chain.base);
                self.deferred.push((n, *x, s.symbols.clone(), chain.name.clone(), chain.base));
                Flank::Secondary(n)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn structured(
        &mut self,
        chain: &mut Chain,
        head: Nt,
        mut pops: Vec<StackSym>,
        mut left: Vec<RawItem>,
        primary: Nt,
        pushes: Vec<StackSym>,
        mut right: Vec<RawItem>,
    ) {
        let mut cur = head;
        while left.len() + right.len() > 1 {
            let next = self.fresh_nt(chain.base);
            let (side, item) = if !left.is_empty() {
                (Side::Left, left.remove(0))
            } else {
                (Side::Right, right.pop().expect("non-empty"))
            };
            let f = self.flank_of(chain, &item);
            self.emit(chain, |name| {
                LigProduction::structured(name, cur, StackOp::Copy, next, Some((side, f)))
            });
            cur = next;
        }
        let mut flank = match (left.pop(), right.pop()) {
            (Some(item), _) => Some((Side::Left, self.flank_of(chain, &item))),
            (None, Some(item)) => Some((Side::Right, self.flank_of(chain, &item))),
            (None, None) => None,
        };
        while pops.len() > 1 || (pops.len() == 1 && !pushes.is_empty()) {
            let top = pops.pop().expect("non-empty");
            let next = self.fresh_nt(chain.base);
            self.emit(chain, |name| LigProduction::structured(name, cur, StackOp::Pop(top), next, None));
            cur = next;
        }
        if let Some(&g) = pops.first() {
            self.emit(chain, |name| LigProduction::structured(name, cur, StackOp::Pop(g), primary, flank));
            return;
        }
        match pushes.split_last() {
            None => {
                self.emit(chain, |name| LigProduction::structured(name, cur, StackOp::Copy, primary, flank));
            }
            Some((&last, init)) => {
                for &g in init {
                    let next = self.fresh_nt(chain.base);
                    let f = flank.take();
                    self.emit(chain, |name| LigProduction::structured(name, cur, StackOp::Push(g), next, f));
                    cur = next;
                }
                self.emit(chain, |name| {
                    LigProduction::structured(name, cur, StackOp::Push(last), primary, flank)
                });
            }
        }
    }

    fn production(&mut self, id: usize, p: &RawProduction) -> Result<(), NormalizeError> {
        if let Some(kind) = production_violations(p).into_iter().find(|k| !k.is_normalizable()) {
            let v = Violation {
                production: p.name.clone(),
                line: p.line,
                kind,
            };
            return Err(NormalizeError {
                production: p.name.clone(),
                reason: v.to_string(),
            });
        }
        let mut chain = Chain {
            name: p.name.clone(),
            origin: Some(ProdId(id)),
            first: true,
            base: p.lhs,
        };
        let Some(at) = p.rhs.iter().position(RawItem::is_primary) else {
            let word: Vec<_> = p
                .rhs
                .iter()
                .map(|i| match i {
                    RawItem::Terminal(t) => *t,
                    RawItem::Constituent(..) => unreachable!("checked above"),
                })
                .collect();
            self.word(&mut chain, p.lhs, &word);
            return Ok(());
        };
        let RawItem::Constituent(primary, pschema) = &p.rhs[at] else {
            unreachable!()
        };
        self.structured(
            &mut chain,
            p.lhs,
            p.lhs_schema.symbols.clone(),
            p.rhs[..at].to_vec(),
            *primary,
            pschema.symbols.clone(),
            p.rhs[at + 1..].to_vec(),
        );
        for (head, target, symbols, name, base) in std::mem::take(&mut self.deferred) {
            let mut sub = Chain {
                name: self.fresh_name(&name),
                origin: None,
                first: true,
                base,
            };
            self.structured(&mut sub, head, Vec::new(), Vec::new(), target, symbols, Vec::new());
        }
        Ok(())
    }

    /// `A() -> a1 .. am` becomes a comb `A(..) -> a1 N1(..)`, ...,
    /// `N() -> a(m-1) am`; the last head still demands an empty stack.
    fn word(&mut self, chain: &mut Chain, head: Nt, word: &[super::Term]) {
        let mut cur = head;
        let mut rest = word;
        while rest.len() > 2 {
            let next = self.fresh_nt(chain.base);
            let t = rest[0];
            self.emit(chain, |name| {
                LigProduction::structured(name, cur, StackOp::Copy, next, Some((Side::Left, Flank::Terminal(t))))
            });
            cur = next;
            rest = &rest[1..];
        }
        let w = rest.to_vec();
        self.emit(chain, |name| LigProduction::word(name, cur, w));
    }
}

struct Chain {
    name: String,
    origin: Option<ProdId>,
    first: bool,
    base: Nt,
}

/// Rewrites `g` into normal form.
///
/// Long terminal words become a comb of copy productions, multi-symbol pops
/// and pushes become chains handling one symbol each (top popped first),
/// extra flanks are peeled off one per copy production and secondary
/// constituents with fixed stacks are replaced by fresh push chains. Fresh
/// nonterminals are named `<lhs>#k`.
pub fn normalize(g: &RawGrammar) -> Result<Normalized, NormalizeError> {
    let mut b = Builder {
        raw: g,
        nonterminals: g.nonterminals.clone(),
        used_nt: g.nonterminals.iter().cloned().collect(),
        used_names: g.productions.iter().map(|p| p.name.clone()).collect(),
        counter: 0,
        productions: Vec::new(),
        origin: Vec::new(),
        deferred: Vec::new(),
    };
    for (i, p) in g.productions.iter().enumerate() {
        b.production(i, p)?;
    }
    let grammar = LigGrammar::new(
        b.nonterminals,
        g.terminals.clone(),
        g.stack_symbols.clone(),
        b.productions,
        g.start,
    )
    .expect("normalization yields well-formed productions");
    Ok(Normalized {
        grammar,
        origin: b.origin,
    })
}
