//! Counting and enumerating LDG sentences, and turning them back into
//! stack-annotated parse trees.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::cfg::{topological_order, CfGrammar, Symbol};
use crate::grammar::{Flank, LigGrammar, Nt, ProdId, Rhs, Side, StackOp, StackSym, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DerivationCount {
    Finite(BigUint),
    Infinite,
}

impl fmt::Display for DerivationCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DerivationCount::Finite(n) => write!(f, "{n}"),
            DerivationCount::Infinite => f.write_str("infinite"),
        }
    }
}

/// Number of derivations of a reduced grammar: infinite iff its nonterminal
/// graph is cyclic. For an LDG this is also the number of sentences.
pub fn count_sentences(g: &CfGrammar) -> DerivationCount {
    if g.productions.is_empty() {
        return DerivationCount::Finite(BigUint::default());
    }
    let n = g.nonterminals.len();
    let mut succ = vec![Vec::new(); n];
    for p in &g.productions {
        for s in &p.rhs {
            if let Symbol::N(b) = s {
                succ[p.lhs].push(*b);
            }
        }
    }
    let Some(order) = topological_order(&succ) else {
        return DerivationCount::Infinite;
    };
    let by_lhs = g.by_lhs();
    let mut count = vec![BigUint::default(); n];
    for &a in order.iter().rev() {
        let mut total = BigUint::default();
        for &i in &by_lhs[a] {
            let mut ways = BigUint::from(1u32);
            for s in &g.productions[i].rhs {
                if let Symbol::N(b) = s {
                    ways *= &count[*b];
                }
            }
            total += ways;
        }
        count[a] = total;
    }
    DerivationCount::Finite(count[g.start].clone())
}

/// A sentence together with the grammar productions of its leftmost
/// derivation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Sentence {
    pub terminals: Vec<usize>,
    pub productions: Vec<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnumerateError {
    #[error("nonterminal {0} lies on a cycle of nullable or unit steps")]
    NullableCycle(String),
}

/// Minimal terminal yield per nonterminal (`usize::MAX` if unproductive).
pub fn min_lengths(g: &CfGrammar) -> Vec<usize> {
    let mut len = vec![usize::MAX; g.nonterminals.len()];
    loop {
        let mut changed = false;
        for p in &g.productions {
            let total = p.rhs.iter().try_fold(0usize, |acc, s| match s {
                Symbol::T(_) => Some(acc + 1),
                Symbol::N(b) => (len[*b] != usize::MAX).then(|| acc + len[*b]),
            });
            if let Some(t) = total {
                if t < len[p.lhs] {
                    len[p.lhs] = t;
                    changed = true;
                }
            }
        }
        if !changed {
            return len;
        }
    }
}

/// Fails if some nonterminal can rewrite to a form containing itself without
/// adding a terminal; such grammars have infinitely many derivations of the
/// same sentence and defeat length-bounded enumeration.
fn check_progress(g: &CfGrammar, min: &[usize]) -> Result<(), EnumerateError> {
    let n = g.nonterminals.len();
    let mut succ = vec![Vec::new(); n];
    for p in &g.productions {
        let nullable = |s: &Symbol| matches!(s, Symbol::N(b) if min[*b] == 0);
        for (i, s) in p.rhs.iter().enumerate() {
            if let Symbol::N(b) = s {
                let others_null = p.rhs.iter().enumerate().all(|(j, t)| j == i || nullable(t));
                if others_null && min[*b] != usize::MAX {
                    succ[p.lhs].push(*b);
                }
            }
        }
    }
    if topological_order(&succ).is_some() {
        return Ok(());
    }
    // name one offender: a node not removable by Kahn's algorithm
    let mut indeg = vec![0usize; n];
    for out in &succ {
        for &b in out {
            indeg[b] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut removed = vec![false; n];
    while let Some(v) = stack.pop() {
        removed[v] = true;
        for &b in &succ[v] {
            indeg[b] -= 1;
            if indeg[b] == 0 {
                stack.push(b);
            }
        }
    }
    let bad = (0..n).find(|&v| !removed[v]).expect("cycle exists");
    Err(EnumerateError::NullableCycle(g.nonterminals[bad].clone()))
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Form {
    bound: usize,
    prefix: Vec<usize>,
    seq: u64,
    /// Remaining symbols, leftmost last.
    rest: Vec<Symbol>,
    used: Vec<usize>,
}

/// Sentences of `g` in order of length, ties broken lexicographically by
/// terminal index, stopping after `max_count` sentences. Sentences longer than
/// `max_len` are never produced. Each sentential form is kept with the lower
/// bound `|prefix| + Σ minimal yields`; a complete sentence is popped only after
/// every form that could still complete to something smaller.
pub fn enumerate_sentences(
    g: &CfGrammar,
    max_count: usize,
    max_len: usize,
) -> Result<Vec<Sentence>, EnumerateError> {
    let min = min_lengths(g);
    check_progress(g, &min)?;
    let mut out = Vec::new();
    if max_count == 0 || min[g.start] == usize::MAX || min[g.start] > max_len {
        return Ok(out);
    }
    let by_lhs = g.by_lhs();
    let mut seq = 0u64;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Form {
        bound: min[g.start],
        prefix: Vec::new(),
        seq,
        rest: vec![Symbol::N(g.start)],
        used: Vec::new(),
    }));
    while let Some(Reverse(mut form)) = heap.pop() {
        // shift leading terminals into the prefix
        while let Some(&Symbol::T(t)) = form.rest.last() {
            form.prefix.push(t);
            form.rest.pop();
        }
        let Some(Symbol::N(a)) = form.rest.pop() else {
            out.push(Sentence {
                terminals: form.prefix,
                productions: form.used,
            });
            if out.len() == max_count {
                break;
            }
            continue;
        };
        for &i in &by_lhs[a] {
            let rhs = &g.productions[i].rhs;
            let Some(grow) = rhs.iter().try_fold(0usize, |acc, s| match s {
                Symbol::T(_) => Some(acc + 1),
                Symbol::N(b) => (min[*b] != usize::MAX).then(|| acc + min[*b]),
            }) else {
                continue;
            };
            let bound = form.bound - min[a] + grow;
            if bound > max_len {
                continue;
            }
            let mut rest = form.rest.clone();
            rest.extend(rhs.iter().rev());
            let mut used = form.used.clone();
            used.push(i);
            seq += 1;
            heap.push(Reverse(Form {
                bound,
                prefix: form.prefix.clone(),
                seq,
                rest,
                used,
            }));
        }
    }
    Ok(out)
}

/// Production ids in reverse application order: the first entry is the
/// last production applied.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Derivation(pub Vec<ProdId>);

impl Derivation {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names<'a>(&self, lig: &'a LigGrammar) -> Vec<&'a str> {
        self.0.iter().map(|&p| lig.prod_name(p)).collect()
    }

    pub fn display(&self, lig: &LigGrammar) -> String {
        self.names(lig).join(" ")
    }
}

/// Replaces each forest production id by its source production id.
pub fn map_to_source(sentence: &[usize], provenance: &[ProdId]) -> Derivation {
    Derivation(sentence.iter().map(|&i| provenance[i]).collect())
}

/// An immutable stack whose pushes share their prefix.
#[derive(Clone, Default)]
pub struct Stack(Option<Arc<StackNode>>);

struct StackNode {
    top: StackSym,
    below: Stack,
    depth: usize,
}

impl Stack {
    pub fn new() -> Self {
        Stack(None)
    }

    pub fn push(&self, s: StackSym) -> Stack {
        Stack(Some(Arc::new(StackNode {
            top: s,
            below: self.clone(),
            depth: self.len() + 1,
        })))
    }

    pub fn top(&self) -> Option<StackSym> {
        self.0.as_ref().map(|n| n.top)
    }

    /// The stack without its top, or `None` when empty.
    pub fn pop(&self) -> Option<Stack> {
        self.0.as_ref().map(|n| n.below.clone())
    }

    pub fn len(&self) -> usize {
        self.0.as_ref().map_or(0, |n| n.depth)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    /// Bottom first, top last.
    pub fn to_vec(&self) -> Vec<StackSym> {
        let mut out = Vec::with_capacity(self.len());
        let mut cur = self;
        while let Some(n) = &cur.0 {
            out.push(n.top);
            cur = &n.below;
        }
        out.reverse();
        out
    }
}

impl PartialEq for Stack {
    fn eq(&self, other: &Self) -> bool {
        self.to_vec() == other.to_vec()
    }
}

impl Eq for Stack {}

impl fmt::Debug for Stack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_vec()).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeItem {
    Terminal(Term),
    Secondary(Box<ParseTree>),
    Distinguished(Box<ParseTree>),
}

/// A derivation tree over objects `A(α)`. `items` follow the right-hand side
/// of `production`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseTree {
    pub nt: Nt,
    pub stack: Stack,
    pub production: ProdId,
    pub items: Vec<TreeItem>,
}

impl ParseTree {
    pub fn secondary(&self) -> Option<&ParseTree> {
        self.items.iter().find_map(|i| match i {
            TreeItem::Secondary(t) => Some(&**t),
            _ => None,
        })
    }

    pub fn distinguished(&self) -> Option<&ParseTree> {
        self.items.iter().find_map(|i| match i {
            TreeItem::Distinguished(t) => Some(&**t),
            _ => None,
        })
    }

    /// Number of nodes, i.e. of production applications.
    pub fn size(&self) -> usize {
        1 + self.secondary().map_or(0, ParseTree::size) + self.distinguished().map_or(0, ParseTree::size)
    }

    /// `A(g h)`, top of stack last.
    pub fn object(&self, lig: &LigGrammar) -> String {
        let syms: Vec<&str> = self.stack.to_vec().into_iter().map(|s| lig.stack_name(s)).collect();
        format!("{}({})", lig.nt_name(self.nt), syms.join(" "))
    }

    /// Indented text rendering, one object per line.
    pub fn render(&self, lig: &LigGrammar) -> String {
        let mut out = String::new();
        self.render_into(lig, 0, &mut out);
        out
    }

    fn render_into(&self, lig: &LigGrammar, depth: usize, out: &mut String) {
        let leaves: Vec<&str> = self
            .items
            .iter()
            .filter_map(|i| match i {
                TreeItem::Terminal(t) => Some(lig.term_name(*t)),
                _ => None,
            })
            .collect();
        out.push_str(&format!(
            "{:indent$}{} [{}]",
            "",
            self.object(lig),
            lig.prod_name(self.production),
            indent = depth * 2
        ));
        if !leaves.is_empty() {
            out.push_str(&format!(" {}", leaves.join(" ")));
        }
        out.push('\n');
        for i in &self.items {
            match i {
                TreeItem::Terminal(_) => {}
                TreeItem::Secondary(t) | TreeItem::Distinguished(t) => t.render_into(lig, depth + 1, out),
            }
        }
    }

    /// Graphviz rendering with stack contents on every object.
    pub fn to_dot(&self, lig: &LigGrammar) -> String {
        let mut out = String::from("digraph tree {\n");
        let mut next = 0usize;
        self.dot_into(lig, &mut next, &mut out);
        out.push_str("}\n");
        out
    }

    fn dot_into(&self, lig: &LigGrammar, next: &mut usize, out: &mut String) -> usize {
        let me = *next;
        *next += 1;
        out.push_str(&format!(
            "  n{me} [label=\"{} [{}]\"];\n",
            crate::forest::escape(&self.object(lig)),
            crate::forest::escape(lig.prod_name(self.production))
        ));
        for i in &self.items {
            let child = match i {
                TreeItem::Terminal(t) => {
                    let c = *next;
                    *next += 1;
                    out.push_str(&format!(
                        "  n{c} [shape=plaintext, label=\"{}\"];\n",
                        crate::forest::escape(lig.term_name(*t))
                    ));
                    c
                }
                TreeItem::Secondary(t) | TreeItem::Distinguished(t) => t.dot_into(lig, next, out),
            };
            let style = if matches!(i, TreeItem::Distinguished(_)) { " [style=bold]" } else { "" };
            out.push_str(&format!("  n{me} -> n{child}{style};\n"));
        }
        me
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("empty derivation")]
    Empty,
    #[error("position {position}: {found} rewrites {found_head}, expected {expected}")]
    HeadMismatch {
        position: usize,
        found: String,
        found_head: String,
        expected: String,
    },
    #[error("position {position}: {production} pops {expected} but the stack is {stack}")]
    PopMismatch {
        position: usize,
        production: String,
        expected: String,
        stack: String,
    },
    #[error("position {position}: {production} needs an empty stack but the stack is {stack}")]
    NonEmptyStack {
        position: usize,
        production: String,
        stack: String,
    },
    #[error("derivation ends before {expected} is rewritten")]
    Truncated { expected: String },
    #[error("position {position}: {production} is left over after the tree is complete")]
    Leftover { position: usize, production: String },
}

fn stack_text(lig: &LigGrammar, s: &Stack) -> String {
    let syms: Vec<&str> = s.to_vec().into_iter().map(|g| lig.stack_name(g)).collect();
    format!("({})", syms.join(" "))
}

struct Reader<'a> {
    lig: &'a LigGrammar,
    drv: &'a [ProdId],
    /// Productions consumed so far, in application order.
    done: usize,
}

impl Reader<'_> {
    /// 1-based position in the derivation as written (reverse order).
    fn position(&self) -> usize {
        self.drv.len() - self.done
    }

    fn node(&mut self, nt: Nt, stack: Stack) -> Result<ParseTree, TreeError> {
        let lig = self.lig;
        let Some(&id) = self.drv.len().checked_sub(self.done + 1).map(|i| &self.drv[i]) else {
            return Err(TreeError::Truncated {
                expected: format!("{}{}", lig.nt_name(nt), stack_text(lig, &stack)),
            });
        };
        let position = self.position();
        self.done += 1;
        let p = lig.production(id);
        if p.lhs != nt {
            return Err(TreeError::HeadMismatch {
                position,
                found: p.name.clone(),
                found_head: lig.nt_name(p.lhs).to_string(),
                expected: lig.nt_name(nt).to_string(),
            });
        }
        let items = match &p.rhs {
            Rhs::Word(w) => {
                if !stack.is_empty() {
                    return Err(TreeError::NonEmptyStack {
                        position,
                        production: p.name.clone(),
                        stack: stack_text(lig, &stack),
                    });
                }
                w.iter().map(|&t| TreeItem::Terminal(t)).collect()
            }
            Rhs::Structured { flank, primary, .. } => {
                let child_stack = match p.op().expect("structured") {
                    StackOp::Copy => stack.clone(),
                    StackOp::Push(g) => stack.push(g),
                    StackOp::Pop(g) => match stack.top() {
                        Some(top) if top == g => stack.pop().expect("non-empty"),
                        _ => {
                            return Err(TreeError::PopMismatch {
                                position,
                                production: p.name.clone(),
                                expected: lig.stack_name(g).to_string(),
                                stack: stack_text(lig, &stack),
                            })
                        }
                    },
                };
                let secondary = match flank {
                    Some((_, Flank::Secondary(x))) => Some(self.node(*x, Stack::new())?),
                    _ => None,
                };
                let main = TreeItem::Distinguished(Box::new(self.node(*primary, child_stack)?));
                match (flank, secondary) {
                    (None, _) => vec![main],
                    (Some((side, f)), sec) => {
                        let other = match (f, sec) {
                            (Flank::Terminal(t), _) => TreeItem::Terminal(*t),
                            (Flank::Secondary(_), Some(t)) => TreeItem::Secondary(Box::new(t)),
                            (Flank::Secondary(_), None) => unreachable!(),
                        };
                        match side {
                            Side::Left => vec![other, main],
                            Side::Right => vec![main, other],
                        }
                    }
                }
            }
        };
        Ok(ParseTree {
            nt,
            stack,
            production: id,
            items,
        })
    }
}

/// Rebuilds the tree of a linear derivation. Read in application order, each
/// production rewrites the next expected object: a node's secondary subtree
/// comes before its distinguished subtree.
pub fn sentence_to_tree(lig: &LigGrammar, drv: &Derivation) -> Result<ParseTree, TreeError> {
    if drv.is_empty() {
        return Err(TreeError::Empty);
    }
    let mut r = Reader {
        lig,
        drv: &drv.0,
        done: 0,
    };
    let tree = r.node(lig.start, Stack::new())?;
    if r.done < drv.len() {
        let position = r.position();
        return Err(TreeError::Leftover {
            position,
            production: lig.prod_name(drv.0[position - 1]).to_string(),
        });
    }
    Ok(tree)
}

/// The yield of `t`, left to right.
pub fn replay(t: &ParseTree) -> Vec<Term> {
    let mut out = Vec::new();
    fn walk(t: &ParseTree, out: &mut Vec<Term>) {
        for i in &t.items {
            match i {
                TreeItem::Terminal(x) => out.push(*x),
                TreeItem::Secondary(c) | TreeItem::Distinguished(c) => walk(c, out),
            }
        }
    }
    walk(t, &mut out);
    out
}
