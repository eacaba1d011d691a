//! Brute-force reference parser: enumerates stack-valid derivation trees
//! directly, within explicit size bounds.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::cfg::Symbol;
use crate::derive::{min_lengths, Derivation, ParseTree, Stack, TreeItem};
use crate::grammar::{cf_backbone, Flank, LigGrammar, Nt, Rhs, Side, StackOp, StackSym, Term};

/// Search bounds. Every tree with at most `max_nodes` nodes whose stacks
/// never exceed `max_stack` symbols is found.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    max_nodes: usize,
    max_stack: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("oracle bounds must be positive (max_nodes {max_nodes}, max_stack {max_stack})")]
pub struct BadBounds {
    pub max_nodes: usize,
    pub max_stack: usize,
}

impl OracleConfig {
    pub fn new(max_nodes: usize, max_stack: usize) -> Result<Self, BadBounds> {
        if max_nodes == 0 || max_stack == 0 {
            return Err(BadBounds { max_nodes, max_stack });
        }
        Ok(OracleConfig { max_nodes, max_stack })
    }

    pub fn max_nodes(&self) -> usize {
        self.max_nodes
    }

    pub fn max_stack(&self) -> usize {
        self.max_stack
    }
}

type Key = (Nt, Vec<StackSym>, usize, usize, usize);

struct Search<'a> {
    lig: &'a LigGrammar,
    tokens: &'a [Term],
    max_stack: usize,
    by_lhs: Vec<Vec<usize>>,
    min_len: Vec<usize>,
    min_size: Vec<usize>,
    memo: HashMap<Key, Vec<(ParseTree, usize)>>,
}

/// Minimal number of nodes of a backbone tree per nonterminal.
fn min_sizes(lig: &LigGrammar) -> Vec<usize> {
    let bb = cf_backbone(lig);
    let mut size = vec![usize::MAX; bb.nonterminals.len()];
    loop {
        let mut changed = false;
        for p in &bb.productions {
            let total = p.rhs.iter().try_fold(1usize, |acc, s| match s {
                Symbol::T(_) => Some(acc),
                Symbol::N(b) => (size[*b] != usize::MAX).then(|| acc + size[*b]),
            });
            if let Some(t) = total {
                if t < size[p.lhs] {
                    size[p.lhs] = t;
                    changed = true;
                }
            }
        }
        if !changed {
            return size;
        }
    }
}

impl Search<'_> {
    /// Trees for object `a(stack)` yielding `tokens[i..j]` with at most
    /// `budget` nodes, each with its size.
    fn trees(&mut self, a: Nt, stack: &Stack, i: usize, j: usize, budget: usize) -> Vec<(ParseTree, usize)> {
        // every stack symbol needs its own pop node, plus a final word node
        let floor = self.min_size[a.0].max(stack.len() + 1);
        if self.min_len[a.0] > j - i || floor > budget {
            return Vec::new();
        }
        let key = (a, stack.to_vec(), i, j, budget);
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let mut out = Vec::new();
        for pi in self.by_lhs[a.0].clone() {
            let id = crate::grammar::ProdId(pi);
            let p = self.lig.production(id);
            let node = |items| ParseTree {
                nt: a,
                stack: stack.clone(),
                production: id,
                items,
            };
            match &p.rhs {
                Rhs::Word(w) => {
                    if stack.is_empty() && w[..] == self.tokens[i..j] {
                        out.push((node(w.iter().map(|&t| TreeItem::Terminal(t)).collect()), 1));
                    }
                }
                Rhs::Structured { flank, primary, .. } => {
                    let child = match p.op().expect("structured") {
                        StackOp::Copy => stack.clone(),
                        StackOp::Push(g) if stack.len() < self.max_stack => stack.push(g),
                        StackOp::Push(_) => continue,
                        StackOp::Pop(g) if stack.top() == Some(g) => stack.pop().expect("non-empty"),
                        StackOp::Pop(_) => continue,
                    };
                    let b = *primary;
                    let dist = |t: ParseTree| TreeItem::Distinguished(Box::new(t));
                    match *flank {
                        None => {
                            for (t, s) in self.trees(b, &child, i, j, budget - 1) {
                                out.push((node(vec![dist(t)]), s + 1));
                            }
                        }
                        Some((side, Flank::Terminal(x))) => {
                            let (fits, ci, cj) = match side {
                                Side::Left => (i < j && self.tokens[i] == x, i + 1, j),
                                Side::Right => (i < j && self.tokens[j - 1] == x, i, j.saturating_sub(1)),
                            };
                            if !fits {
                                continue;
                            }
                            for (t, s) in self.trees(b, &child, ci, cj, budget - 1) {
                                let items = match side {
                                    Side::Left => vec![TreeItem::Terminal(x), dist(t)],
                                    Side::Right => vec![dist(t), TreeItem::Terminal(x)],
                                };
                                out.push((node(items), s + 1));
                            }
                        }
                        Some((side, Flank::Secondary(x))) => {
                            let room = budget - 1;
                            let reserve = self.min_size[b.0];
                            if reserve == usize::MAX || reserve >= room {
                                continue;
                            }
                            for k in i..=j {
                                let ((xi, xj), (bi, bj)) = match side {
                                    Side::Left => ((i, k), (k, j)),
                                    Side::Right => ((k, j), (i, k)),
                                };
                                for (tx, sx) in self.trees(x, &Stack::new(), xi, xj, room - reserve) {
                                    for (tb, sb) in self.trees(b, &child, bi, bj, room - sx) {
                                        let sec = TreeItem::Secondary(Box::new(tx.clone()));
                                        let items = match side {
                                            Side::Left => vec![sec, dist(tb)],
                                            Side::Right => vec![dist(tb), sec],
                                        };
                                        out.push((node(items), sx + sb + 1));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        self.memo.insert(key, out.clone());
        out
    }
}

/// All stack-valid trees for `tokens` within `cfg`, ordered by their
/// linearization.
pub fn enumerate_trees(lig: &LigGrammar, tokens: &[Term], cfg: OracleConfig) -> Vec<ParseTree> {
    let bb = cf_backbone(lig);
    let mut search = Search {
        lig,
        tokens,
        max_stack: cfg.max_stack,
        by_lhs: bb.by_lhs(),
        min_len: min_lengths(&bb),
        min_size: min_sizes(lig),
        memo: HashMap::new(),
    };
    let mut trees: Vec<(Derivation, ParseTree)> = search
        .trees(lig.start, &Stack::new(), 0, tokens.len(), cfg.max_nodes)
        .into_iter()
        .map(|(t, _)| (linearize(&t), t))
        .collect();
    trees.sort_by(|x, y| x.0.cmp(&y.0));
    trees.into_iter().map(|(_, t)| t).collect()
}

/// Reverse of the linear application order: a node, then its secondary
/// subtree, then its distinguished subtree.
pub fn linearize(t: &ParseTree) -> Derivation {
    let mut order = Vec::with_capacity(t.size());
    let mut todo = vec![t];
    while let Some(n) = todo.pop() {
        order.push(n.production);
        if let Some(d) = n.distinguished() {
            todo.push(d);
        }
        if let Some(s) = n.secondary() {
            todo.push(s);
        }
    }
    order.reverse();
    Derivation(order)
}

/// Oracle output, complete within `config`.
#[derive(Clone, Debug)]
pub struct OracleLanguage {
    pub config: OracleConfig,
    pub trees: Vec<ParseTree>,
    pub derivations: BTreeSet<Derivation>,
}

impl OracleLanguage {
    /// Distinct trees gave distinct derivations.
    pub fn injective(&self) -> bool {
        self.trees.len() == self.derivations.len()
    }
}

pub fn oracle_language(lig: &LigGrammar, tokens: &[Term], cfg: OracleConfig) -> OracleLanguage {
    let trees = enumerate_trees(lig, tokens, cfg);
    OracleLanguage {
        config: cfg,
        derivations: trees.iter().map(linearize).collect(),
        trees,
    }
}
