//! Plain context-free grammars, shared by backbones, forests and LDGs.

use std::collections::VecDeque;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Symbol {
    N(usize),
    T(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CfProduction {
    pub name: String,
    pub lhs: usize,
    pub rhs: Vec<Symbol>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CfGrammar {
    pub nonterminals: Vec<String>,
    pub terminals: Vec<String>,
    pub productions: Vec<CfProduction>,
    pub start: usize,
}

impl CfGrammar {
    pub fn symbol_name(&self, s: Symbol) -> &str {
        match s {
            Symbol::N(i) => &self.nonterminals[i],
            Symbol::T(i) => &self.terminals[i],
        }
    }

    /// `A -> x y`, or `A -> ε` for an empty right-hand side.
    pub fn display_production(&self, i: usize) -> String {
        let p = &self.productions[i];
        let mut out = format!("{} ->", self.nonterminals[p.lhs]);
        if p.rhs.is_empty() {
            out.push_str(" ε");
        }
        for s in &p.rhs {
            out.push(' ');
            out.push_str(self.symbol_name(*s));
        }
        out
    }

    /// Production indices grouped by left-hand side.
    pub fn by_lhs(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nonterminals.len()];
        for (i, p) in self.productions.iter().enumerate() {
            out[p.lhs].push(i);
        }
        out
    }

    /// Terminals occurring in some production, ascending.
    pub fn used_terminals(&self) -> Vec<usize> {
        let mut seen = vec![false; self.terminals.len()];
        for p in &self.productions {
            for s in &p.rhs {
                if let Symbol::T(t) = s {
                    seen[*t] = true;
                }
            }
        }
        (0..seen.len()).filter(|&t| seen[t]).collect()
    }

    /// Nonterminals deriving some terminal string.
    pub fn productive(&self) -> Vec<bool> {
        let n = self.nonterminals.len();
        let mut productive = vec![false; n];
        // count of not-yet-productive nonterminal occurrences per production
        let mut pending: Vec<usize> = self
            .productions
            .iter()
            .map(|p| p.rhs.iter().filter(|s| matches!(s, Symbol::N(_))).count())
            .collect();
        let mut occurs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, p) in self.productions.iter().enumerate() {
            for s in &p.rhs {
                if let Symbol::N(b) = s {
                    occurs[*b].push(i);
                }
            }
        }
        let mut queue: VecDeque<usize> = VecDeque::new();
        for (i, p) in self.productions.iter().enumerate() {
            if pending[i] == 0 && !productive[p.lhs] {
                productive[p.lhs] = true;
                queue.push_back(p.lhs);
            }
        }
        while let Some(b) = queue.pop_front() {
            for &i in &occurs[b] {
                pending[i] -= 1;
                let a = self.productions[i].lhs;
                if pending[i] == 0 && !productive[a] {
                    productive[a] = true;
                    queue.push_back(a);
                }
            }
        }
        productive
    }

    /// Nonterminals reachable from the start symbol through productions whose
    /// right-hand sides only mention symbols marked in `allowed`.
    fn reachable(&self, allowed: &[bool]) -> Vec<bool> {
        let mut reach = vec![false; self.nonterminals.len()];
        if !allowed[self.start] {
            return reach;
        }
        let by_lhs = self.by_lhs();
        reach[self.start] = true;
        let mut stack = vec![self.start];
        while let Some(a) = stack.pop() {
            for &i in &by_lhs[a] {
                let p = &self.productions[i];
                if !production_allowed(p, allowed) {
                    continue;
                }
                for s in &p.rhs {
                    if let Symbol::N(b) = s {
                        if !reach[*b] {
                            reach[*b] = true;
                            stack.push(*b);
                        }
                    }
                }
            }
        }
        reach
    }

    /// Nonterminal dependency graph (lhs to each rhs nonterminal) has a cycle.
    pub fn has_cycle(&self) -> bool {
        let n = self.nonterminals.len();
        let mut succ = vec![Vec::new(); n];
        for p in &self.productions {
            for s in &p.rhs {
                if let Symbol::N(b) = s {
                    succ[p.lhs].push(*b);
                }
            }
        }
        topological_order(&succ).is_none()
    }
}

fn production_allowed(p: &CfProduction, allowed: &[bool]) -> bool {
    allowed[p.lhs]
        && p.rhs.iter().all(|s| match s {
            Symbol::N(b) => allowed[*b],
            Symbol::T(_) => true,
        })
}

/// Kahn's algorithm; `None` when the graph has a cycle. Successors come
/// after their predecessors in the returned order.
pub(crate) fn topological_order(succ: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = succ.len();
    let mut indeg = vec![0usize; n];
    for out in succ {
        for &b in out {
            indeg[b] += 1;
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &b in &succ[v] {
            indeg[b] -= 1;
            if indeg[b] == 0 {
                queue.push_back(b);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// A reduced grammar and where its pieces came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub grammar: CfGrammar,
    /// Old index of each kept production.
    pub production_map: Vec<usize>,
    /// Old index of each kept nonterminal.
    pub nonterminal_map: Vec<usize>,
}

/// Removes useless symbols: first the unproductive ones, then those
/// unreachable from the start symbol. Terminal indices are left untouched.
///
/// If the start symbol itself is useless the result keeps it as the only
/// nonterminal, with no productions.
pub fn reduce_cfg(g: &CfGrammar) -> Reduction {
    let productive = g.productive();
    let useful = g.reachable(&productive);
    let mut nonterminal_map: Vec<usize> = (0..g.nonterminals.len()).filter(|&a| useful[a]).collect();
    if nonterminal_map.is_empty() {
        nonterminal_map.push(g.start);
    }
    let mut new_index = vec![usize::MAX; g.nonterminals.len()];
    for (new, &old) in nonterminal_map.iter().enumerate() {
        new_index[old] = new;
    }
    let mut production_map = Vec::new();
    let mut productions = Vec::new();
    for (i, p) in g.productions.iter().enumerate() {
        if !production_allowed(p, &useful) {
            continue;
        }
        production_map.push(i);
        productions.push(CfProduction {
            name: p.name.clone(),
            lhs: new_index[p.lhs],
            rhs: p
                .rhs
                .iter()
                .map(|s| match s {
                    Symbol::N(b) => Symbol::N(new_index[*b]),
                    t => *t,
                })
                .collect(),
        });
    }
    Reduction {
        grammar: CfGrammar {
            nonterminals: nonterminal_map.iter().map(|&a| g.nonterminals[a].clone()).collect(),
            terminals: g.terminals.clone(),
            productions,
            start: new_index[g.start],
        },
        production_map,
        nonterminal_map,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grammar(nts: &[&str], ts: &[&str], prods: &[(usize, Vec<Symbol>)]) -> CfGrammar {
        CfGrammar {
            nonterminals: nts.iter().map(|s| s.to_string()).collect(),
            terminals: ts.iter().map(|s| s.to_string()).collect(),
            productions: prods
                .iter()
                .enumerate()
                .map(|(i, (lhs, rhs))| CfProduction {
                    name: format!("p{i}"),
                    lhs: *lhs,
                    rhs: rhs.clone(),
                })
                .collect(),
            start: 0,
        }
    }

    use Symbol::{N, T};

    #[test]
    fn drops_unproductive_then_unreachable() {
        // S -> A a | b ; A -> A a ; B -> b
        let g = grammar(
            &["S", "A", "B"],
            &["a", "b"],
            &[(0, vec![N(1), T(0)]), (0, vec![T(1)]), (1, vec![N(1), T(0)]), (2, vec![T(1)])],
        );
        let r = reduce_cfg(&g);
        assert_eq!(r.grammar.nonterminals, ["S"]);
        assert_eq!(r.production_map, [1]);
        assert_eq!(r.grammar.terminals.len(), 2);
        assert_eq!(r.grammar.used_terminals(), [1]);
    }

    #[test]
    fn useless_start_gives_empty_grammar() {
        let g = grammar(&["S"], &["a"], &[(0, vec![N(0), T(0)])]);
        let r = reduce_cfg(&g);
        assert!(r.grammar.productions.is_empty());
        assert_eq!(r.grammar.nonterminals, ["S"]);
        assert_eq!(r.grammar.start, 0);
    }

    #[test]
    fn epsilon_and_unit_cycles() {
        // S -> A ; A -> S | ε
        let g = grammar(&["S", "A"], &[], &[(0, vec![N(1)]), (1, vec![N(0)]), (1, vec![])]);
        let r = reduce_cfg(&g);
        assert_eq!(r.grammar.productions.len(), 3);
        assert!(r.grammar.has_cycle());
    }

    #[test]
    fn reduction_is_idempotent() {
        let g = grammar(
            &["S", "A", "B", "C"],
            &["a"],
            &[(0, vec![N(1), N(2)]), (1, vec![T(0)]), (2, vec![N(2)]), (0, vec![N(3)]), (3, vec![T(0)])],
        );
        let once = reduce_cfg(&g).grammar;
        assert_eq!(once.productions.len(), 2);
        assert_eq!(reduce_cfg(&once).grammar, once);
    }
}
