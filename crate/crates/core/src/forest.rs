//! Shared parse forests: the intersection of a context-free backbone with
//! the linear automaton of an input string, and its LIGed counterpart.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::cfg::{reduce_cfg, CfGrammar, CfProduction, Symbol};
use crate::grammar::{Flank, LigGrammar, LigProduction, Nt, ProdId, Rhs, Side, Term};

/// Linear automaton of an input: states `0..=n`, `i ∈ δ(i-1, a_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fsa {
    tokens: Vec<Term>,
}

pub fn build_fsa(tokens: &[Term]) -> Fsa {
    Fsa {
        tokens: tokens.to_vec(),
    }
}

impl Fsa {
    pub fn tokens(&self) -> &[Term] {
        &self.tokens
    }

    /// Number of states, `n + 1`.
    pub fn states(&self) -> usize {
        self.tokens.len() + 1
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn final_state(&self) -> usize {
        self.tokens.len()
    }

    /// The state reached from `state` on `t`, if any.
    pub fn step(&self, state: usize, t: Term) -> Option<usize> {
        (self.tokens.get(state) == Some(&t)).then_some(state + 1)
    }
}

/// `[A]^to_from`: backbone nonterminal `A` spanning states `from..to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ForestNt {
    pub base: Nt,
    pub from: usize,
    pub to: usize,
}

impl ForestNt {
    pub fn name(&self, base_names: &[String]) -> String {
        format!("{}[{},{}]", base_names[self.base.0], self.from, self.to)
    }
}

/// Where a forest production comes from: the backbone production and the
/// states bounding each right-hand-side symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Provenance {
    pub source: ProdId,
    pub states: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedForest {
    pub fsa: Fsa,
    /// Span of each nonterminal of `cfg`.
    pub items: Vec<ForestNt>,
    pub cfg: CfGrammar,
    /// Aligned with `cfg.productions`.
    pub provenance: Vec<Provenance>,
}

impl SharedForest {
    pub fn is_empty(&self) -> bool {
        self.cfg.productions.is_empty()
    }
}

struct Chart {
    n: usize,
    present: HashMap<(usize, usize, usize), ()>,
    /// `ends[p][a]`: all `q` with item `(a, p, q)`.
    ends: Vec<Vec<Vec<usize>>>,
    /// `starts[q][a]`: all `p` with item `(a, p, q)`.
    starts: Vec<Vec<Vec<usize>>>,
}

impl Chart {
    fn new(states: usize, nts: usize) -> Self {
        Chart {
            n: states - 1,
            present: HashMap::new(),
            ends: vec![vec![Vec::new(); nts]; states],
            starts: vec![vec![Vec::new(); nts]; states],
        }
    }

    fn add(&mut self, a: usize, p: usize, q: usize, agenda: &mut Vec<(usize, usize, usize)>) {
        if self.present.insert((a, p, q), ()).is_none() {
            self.ends[p][a].push(q);
            self.starts[q][a].push(p);
            agenda.push((a, p, q));
        }
    }

    fn contains(&self, a: usize, p: usize, q: usize) -> bool {
        self.present.contains_key(&(a, p, q))
    }
}

/// A right-hand-side symbol with the states it spans.
type Span = (Symbol, usize, usize);

/// States reachable from `p` by reading symbol `s`.
fn targets(chart: &Chart, fsa: &Fsa, s: Symbol, p: usize) -> Vec<usize> {
    match s {
        Symbol::T(t) => fsa.step(p, Term(t)).into_iter().collect(),
        Symbol::N(b) => chart.ends[p][b].clone(),
    }
}

/// Intersects `backbone` with `fsa` and reduces the result.
///
/// Items `[A]^q_p` are deduced bottom-up with an agenda, so ε-productions and
/// unit cycles over a fixed span terminate. The forest is empty iff the input
/// is not in the backbone's language.
///
/// # Panics
///
/// If a backbone production has more than two right-hand-side symbols.
pub fn build_shared_forest(backbone: &CfGrammar, fsa: &Fsa) -> SharedForest {
    let states = fsa.states();
    let nts = backbone.nonterminals.len();
    let mut chart = Chart::new(states, nts);
    let mut agenda = Vec::new();

    let mut occurs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nts];
    for (i, p) in backbone.productions.iter().enumerate() {
        assert!(p.rhs.len() <= 2, "backbone production {} is not binary", p.name);
        for (pos, s) in p.rhs.iter().enumerate() {
            if let Symbol::N(b) = s {
                occurs[*b].push((i, pos));
            }
        }
        if p.rhs.iter().all(|s| matches!(s, Symbol::T(_))) {
            for start in 0..states {
                let end = p
                    .rhs
                    .iter()
                    .try_fold(start, |st, s| match s {
                        Symbol::T(t) => fsa.step(st, Term(*t)),
                        Symbol::N(_) => None,
                    });
                if let Some(end) = end {
                    chart.add(p.lhs, start, end, &mut agenda);
                }
            }
        }
    }

    while let Some((b, p, q)) = agenda.pop() {
        for &(i, pos) in &occurs[b] {
            let prod = &backbone.productions[i];
            let a = prod.lhs;
            match (prod.rhs.len(), pos) {
                (1, _) => chart.add(a, p, q, &mut agenda),
                (2, 0) => {
                    for r in targets(&chart, fsa, prod.rhs[1], q) {
                        chart.add(a, p, r, &mut agenda);
                    }
                }
                (2, 1) => {
                    let lefts: Vec<usize> = match prod.rhs[0] {
                        Symbol::T(t) => (p > 0 && fsa.tokens[p - 1] == Term(t))
                            .then(|| p - 1)
                            .into_iter()
                            .collect(),
                        Symbol::N(c) => chart.starts[p][c].clone(),
                    };
                    for o in lefts {
                        chart.add(a, o, q, &mut agenda);
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    // instantiate every production over chart items
    let mut raw: Vec<(ForestNt, Vec<Span>, Provenance)> = Vec::new();
    for (i, prod) in backbone.productions.iter().enumerate() {
        for p in 0..states {
            let mut partial: Vec<(usize, Vec<Span>)> = vec![(p, Vec::new())];
            for &s in &prod.rhs {
                let mut next = Vec::new();
                for (at, done) in partial {
                    for to in targets(&chart, fsa, s, at) {
                        let mut d = done.clone();
                        d.push((s, at, to));
                        next.push((to, d));
                    }
                }
                partial = next;
            }
            for (q, rhs) in partial {
                debug_assert!(chart.contains(prod.lhs, p, q));
                let mut st = vec![p];
                st.extend(rhs.iter().map(|&(_, _, to)| to));
                raw.push((
                    ForestNt {
                        base: Nt(prod.lhs),
                        from: p,
                        to: q,
                    },
                    rhs,
                    Provenance {
                        source: ProdId(i),
                        states: st,
                    },
                ));
            }
        }
    }

    let start = ForestNt {
        base: Nt(backbone.start),
        from: 0,
        to: chart.n,
    };
    let mut items: Vec<ForestNt> = vec![start];
    let mut index: HashMap<ForestNt, usize> = HashMap::from([(start, 0)]);
    let mut intern = |x: ForestNt, items: &mut Vec<ForestNt>| -> usize {
        *index.entry(x).or_insert_with(|| {
            items.push(x);
            items.len() - 1
        })
    };
    let mut productions = Vec::with_capacity(raw.len());
    let mut provenance = Vec::with_capacity(raw.len());
    for (lhs, rhs, prov) in raw {
        let lhs = intern(lhs, &mut items);
        let rhs = rhs
            .into_iter()
            .map(|(s, from, to)| match s {
                Symbol::T(t) => Symbol::T(t),
                Symbol::N(b) => Symbol::N(intern(
                    ForestNt {
                        base: Nt(b),
                        from,
                        to,
                    },
                    &mut items,
                )),
            })
            .collect();
        productions.push(CfProduction {
            name: String::new(),
            lhs,
            rhs,
        });
        provenance.push(prov);
    }
    let unreduced = CfGrammar {
        nonterminals: items.iter().map(|x| x.name(&backbone.nonterminals)).collect(),
        terminals: backbone.terminals.clone(),
        productions,
        start: 0,
    };
    let reduced = reduce_cfg(&unreduced);
    let items: Vec<ForestNt> = reduced.nonterminal_map.iter().map(|&i| items[i]).collect();
    let provenance: Vec<Provenance> = reduced.production_map.iter().map(|&i| provenance[i].clone()).collect();
    canonical_order(fsa.clone(), items, reduced.grammar, provenance, &backbone.productions)
}

fn span_key(x: &ForestNt) -> (Nt, std::cmp::Reverse<usize>, usize) {
    (x.base, std::cmp::Reverse(x.to), x.from)
}

/// Orders nonterminals by (base, end descending, start) and productions by
/// left-hand side then source production, and names productions
/// `<source>^<k>` with `k` counted from 1 in that order.
fn canonical_order(
    fsa: Fsa,
    items: Vec<ForestNt>,
    g: CfGrammar,
    provenance: Vec<Provenance>,
    source: &[CfProduction],
) -> SharedForest {
    let mut nt_order: Vec<usize> = (0..items.len()).collect();
    nt_order.sort_by_key(|&i| span_key(&items[i]));
    let mut new_nt = vec![0; items.len()];
    for (new, &old) in nt_order.iter().enumerate() {
        new_nt[old] = new;
    }
    let remap = |s: &Symbol| match s {
        Symbol::N(b) => Symbol::N(new_nt[*b]),
        t => *t,
    };
    let mut prod_order: Vec<usize> = (0..g.productions.len()).collect();
    prod_order.sort_by(|&x, &y| {
        let (px, py) = (&g.productions[x], &g.productions[y]);
        (new_nt[px.lhs], &provenance[x].source, &provenance[x].states).cmp(&(
            new_nt[py.lhs],
            &provenance[y].source,
            &provenance[y].states,
        ))
    });
    let productions = prod_order
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let p = &g.productions[i];
            CfProduction {
                name: format!("{}^{}", source[provenance[i].source.0].name, k + 1),
                lhs: new_nt[p.lhs],
                rhs: p.rhs.iter().map(remap).collect(),
            }
        })
        .collect();
    SharedForest {
        fsa,
        items: nt_order.iter().map(|&i| items[i]).collect(),
        cfg: CfGrammar {
            nonterminals: nt_order.iter().map(|&i| g.nonterminals[i].clone()).collect(),
            terminals: g.terminals,
            productions,
            start: new_nt[g.start],
        },
        provenance: prod_order.iter().map(|&i| provenance[i].clone()).collect(),
    }
}

/// The shared forest with the source grammar's stack schemas re-attached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LigedForest {
    pub lig: LigGrammar,
    pub items: Vec<ForestNt>,
    /// Source production of each forest production.
    pub provenance: Vec<ProdId>,
}

/// Re-attaches the stack schemas of `lig` to a forest of its backbone.
pub fn lift_to_liged(lig: &LigGrammar, forest: &SharedForest) -> LigedForest {
    let productions = forest
        .cfg
        .productions
        .iter()
        .zip(&forest.provenance)
        .map(|(fp, prov)| {
            let src = lig.production(prov.source);
            let nt = |s: Symbol| match s {
                Symbol::N(b) => Nt(b),
                Symbol::T(_) => unreachable!("constituent position holds a nonterminal"),
            };
            let rhs = match &src.rhs {
                Rhs::Word(w) => Rhs::Word(w.clone()),
                Rhs::Structured {
                    flank,
                    primary_schema,
                    ..
                } => {
                    let (primary_at, flank_at) = match flank {
                        Some((Side::Left, _)) => (1, Some(0)),
                        Some((Side::Right, _)) => (0, Some(1)),
                        None => (0, None),
                    };
                    let flank = flank.map(|(side, f)| {
                        let f = match f {
                            Flank::Terminal(t) => Flank::Terminal(t),
                            Flank::Secondary(_) => Flank::Secondary(nt(fp.rhs[flank_at.expect("flank")])),
                        };
                        (side, f)
                    });
                    Rhs::Structured {
                        flank,
                        primary: nt(fp.rhs[primary_at]),
                        primary_schema: *primary_schema,
                    }
                }
            };
            LigProduction {
                name: fp.name.clone(),
                lhs: Nt(fp.lhs),
                lhs_schema: src.lhs_schema,
                rhs,
            }
        })
        .collect();
    let lig_forest = LigGrammar::new(
        forest.cfg.nonterminals.clone(),
        lig.terminals.clone(),
        lig.stack_symbols.clone(),
        productions,
        Nt(forest.cfg.start),
    )
    .expect("forest productions mirror well-formed source productions");
    LigedForest {
        lig: lig_forest,
        items: forest.items.clone(),
        provenance: forest.provenance.iter().map(|p| p.source).collect(),
    }
}

impl fmt::Display for SharedForest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.cfg.productions.len() {
            writeln!(f, "{} = {}", self.cfg.productions[i].name, self.cfg.display_production(i))?;
        }
        Ok(())
    }
}

/// Graphviz rendering; each production is a box node linking its
/// left-hand side to its right-hand-side symbols in order.
pub fn forest_to_dot(forest: &SharedForest) -> String {
    let g = &forest.cfg;
    let mut out = String::from("digraph forest {\n  rankdir=TB;\n");
    for (i, name) in g.nonterminals.iter().enumerate() {
        let style = if i == g.start { ", peripheries=2" } else { "" };
        out.push_str(&format!("  n{i} [label=\"{}\"{style}];\n", escape(name)));
    }
    for (i, p) in g.productions.iter().enumerate() {
        out.push_str(&format!("  p{i} [shape=box, label=\"{}\"];\n", escape(&p.name)));
        out.push_str(&format!("  n{} -> p{i};\n", p.lhs));
        for (k, s) in p.rhs.iter().enumerate() {
            match s {
                Symbol::N(b) => out.push_str(&format!("  p{i} -> n{b} [label=\"{k}\"];\n")),
                Symbol::T(t) => {
                    out.push_str(&format!(
                        "  t{i}_{k} [shape=plaintext, label=\"{}\"];\n  p{i} -> t{i}_{k} [label=\"{k}\"];\n",
                        escape(&g.terminals[*t])
                    ));
                }
            }
        }
    }
    out.push_str("}\n");
    out
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
