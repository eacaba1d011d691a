//! Linear derivation grammars: context-free grammars over LIG production
//! names whose sentences are reversed linear derivations.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cfg::{reduce_cfg, CfGrammar, CfProduction, Symbol};
use crate::forest::{build_fsa, build_shared_forest, lift_to_liged, Fsa, LigedForest, SharedForest};
use crate::grammar::{cf_backbone, LigGrammar, Nt, ProdId, StackOp, Term};
use crate::relations::{closure, closure_filtered, level1, PairKind, RelationKind, RelationSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum LdgNonterminal {
    Plain(Nt),
    Pair(Nt, PairKind, Nt),
}

impl LdgNonterminal {
    pub fn name(&self, lig: &LigGrammar) -> String {
        match *self {
            LdgNonterminal::Plain(a) => format!("[{}]", lig.nt_name(a)),
            LdgNonterminal::Pair(a, k, b) => {
                format!("[{} {} {}]", lig.nt_name(a), pair_label(lig, k), lig.nt_name(b))
            }
        }
    }
}

/// `EQ+`, `SPINE` or `POP+g`.
pub fn pair_label(lig: &LigGrammar, k: PairKind) -> String {
    let kind = RelationKind::from(k);
    match kind.gamma() {
        Some(g) => format!("{}{}", kind.label(), lig.stack_name(g)),
        None => kind.label().to_string(),
    }
}

/// An LDG. `cfg.terminals[i]` names production `i` of the LIG it was built
/// from, so terminal indices are production ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ldg {
    pub cfg: CfGrammar,
    /// Aligned with `cfg.nonterminals`.
    pub nonterminals: Vec<LdgNonterminal>,
    /// Production form, 1 to 9; aligned with `cfg.productions`.
    pub forms: Vec<u8>,
}

impl Ldg {
    pub fn is_empty(&self) -> bool {
        self.cfg.productions.is_empty()
    }

    /// Production count per form; index 0 is form (1).
    pub fn form_counts(&self) -> [usize; 9] {
        let mut out = [0; 9];
        for &f in &self.forms {
            out[f as usize - 1] += 1;
        }
        out
    }

    pub fn display_production(&self, i: usize) -> String {
        format!("{}   ({})", self.cfg.display_production(i), self.forms[i])
    }
}

impl fmt::Display for Ldg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.forms.len() {
            writeln!(f, "{}", self.display_production(i))?;
        }
        Ok(())
    }
}

struct Builder<'a> {
    lig: &'a LigGrammar,
    rels: &'a RelationSet,
    index: HashMap<LdgNonterminal, usize>,
    nonterminals: Vec<LdgNonterminal>,
    queue: VecDeque<usize>,
    productions: Vec<CfProduction>,
    forms: Vec<u8>,
}

impl Builder<'_> {
    fn intern(&mut self, x: LdgNonterminal) -> usize {
        if let Some(&i) = self.index.get(&x) {
            return i;
        }
        let i = self.nonterminals.len();
        self.index.insert(x, i);
        self.nonterminals.push(x);
        self.queue.push_back(i);
        i
    }

    fn valid(&self, a: Nt, k: PairKind, b: Nt) -> bool {
        self.rels.valid(a.0, k, b.0)
    }

    fn pair(&mut self, a: Nt, k: PairKind, b: Nt) -> Symbol {
        debug_assert!(self.valid(a, k, b));
        Symbol::N(self.intern(LdgNonterminal::Pair(a, k, b)))
    }

    /// `[Γ1Γ2] r`: the secondary constituent (if any) followed by `r`.
    fn flank_then(&mut self, r: ProdId) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(2);
        if let Some(x) = self.lig.production(r).secondary() {
            out.push(Symbol::N(self.intern(LdgNonterminal::Plain(x))));
        }
        out.push(Symbol::T(r.0));
        out
    }

    fn emit(&mut self, lhs: usize, rhs: Vec<Symbol>, form: u8) {
        self.productions.push(CfProduction {
            name: format!("d{}", self.productions.len() + 1),
            lhs,
            rhs,
        });
        self.forms.push(form);
    }
}

/// Productions of a LIG indexed for schema instantiation.
struct ProdIndex {
    words: Vec<ProdId>,
    by_lhs: Vec<Vec<ProdId>>,
    by_primary: Vec<Vec<ProdId>>,
}

impl ProdIndex {
    fn new(lig: &LigGrammar) -> Self {
        let n = lig.nonterminals.len();
        let mut idx = ProdIndex {
            words: Vec::new(),
            by_lhs: vec![Vec::new(); n],
            by_primary: vec![Vec::new(); n],
        };
        for id in lig.production_ids() {
            let p = lig.production(id);
            match p.primary() {
                None => idx.words.push(id),
                Some(b) => {
                    idx.by_lhs[p.lhs.0].push(id);
                    idx.by_primary[b.0].push(id);
                }
            }
        }
        idx
    }
}

/// Generates the LDG of `lig` top-down from `[S]`: the productions of a
/// nonterminal are instantiated only once it occurs on some right-hand side,
/// and only valid pair nonterminals (those in `rels`) are created.
pub fn build_ldg(lig: &LigGrammar, rels: &RelationSet) -> Ldg {
    let idx = ProdIndex::new(lig);
    let mut b = Builder {
        lig,
        rels,
        index: HashMap::new(),
        nonterminals: Vec::new(),
        queue: VecDeque::new(),
        productions: Vec::new(),
        forms: Vec::new(),
    };
    b.intern(LdgNonterminal::Plain(lig.start));
    while let Some(x) = b.queue.pop_front() {
        match b.nonterminals[x] {
            LdgNonterminal::Plain(a) => {
                for &r in &idx.words {
                    let head = lig.production(r).lhs;
                    if head == a {
                        b.emit(x, vec![Symbol::T(r.0)], 1);
                    }
                    if b.valid(a, PairKind::EqPlus, head) {
                        let rest = b.pair(a, PairKind::EqPlus, head);
                        b.emit(x, vec![Symbol::T(r.0), rest], 2);
                    }
                }
            }
            LdgNonterminal::Pair(a, PairKind::EqPlus, c) => {
                for &r in &idx.by_lhs[a.0] {
                    let p = lig.production(r);
                    if p.op() != Some(StackOp::Copy) {
                        continue;
                    }
                    let mid = p.primary().expect("structured");
                    if mid == c {
                        let rhs = b.flank_then(r);
                        b.emit(x, rhs, 3);
                    }
                    if b.valid(mid, PairKind::EqPlus, c) {
                        let mut rhs = vec![b.pair(mid, PairKind::EqPlus, c)];
                        rhs.extend(b.flank_then(r));
                        b.emit(x, rhs, 5);
                    }
                }
                if b.valid(a, PairKind::Spine, c) {
                    let s = b.pair(a, PairKind::Spine, c);
                    b.emit(x, vec![s], 4);
                }
                let mids: Vec<usize> = rels.spine().row(a.0).collect();
                for mid in mids {
                    if b.valid(Nt(mid), PairKind::EqPlus, c) {
                        let first = b.pair(Nt(mid), PairKind::EqPlus, c);
                        let second = b.pair(a, PairKind::Spine, Nt(mid));
                        b.emit(x, vec![first, second], 6);
                    }
                }
            }
            LdgNonterminal::Pair(a, PairKind::Spine, c) => {
                for &r in &idx.by_lhs[a.0] {
                    let p = lig.production(r);
                    let Some(StackOp::Push(g)) = p.op() else {
                        continue;
                    };
                    let mid = p.primary().expect("structured");
                    if b.valid(mid, PairKind::PopPlus(g), c) {
                        let mut rhs = vec![b.pair(mid, PairKind::PopPlus(g), c)];
                        rhs.extend(b.flank_then(r));
                        b.emit(x, rhs, 7);
                    }
                }
            }
            LdgNonterminal::Pair(a, PairKind::PopPlus(g), c) => {
                for &r in &idx.by_primary[c.0] {
                    let p = lig.production(r);
                    if p.op() != Some(StackOp::Pop(g)) {
                        continue;
                    }
                    if p.lhs == a {
                        let rhs = b.flank_then(r);
                        b.emit(x, rhs, 8);
                    }
                    if b.valid(a, PairKind::EqPlus, p.lhs) {
                        let mut rhs = b.flank_then(r);
                        rhs.push(b.pair(a, PairKind::EqPlus, p.lhs));
                        b.emit(x, rhs, 9);
                    }
                }
            }
        }
    }
    let cfg = CfGrammar {
        nonterminals: b.nonterminals.iter().map(|x| x.name(lig)).collect(),
        terminals: lig.productions.iter().map(|p| p.name.clone()).collect(),
        productions: b.productions,
        start: 0,
    };
    Ldg {
        cfg,
        nonterminals: b.nonterminals,
        forms: b.forms,
    }
}

/// Removes useless symbols, keeping form tags.
pub fn reduce_ldg(d: &Ldg) -> Ldg {
    let r = reduce_cfg(&d.cfg);
    Ldg {
        nonterminals: r.nonterminal_map.iter().map(|&i| d.nonterminals[i]).collect(),
        forms: r.production_map.iter().map(|&i| d.forms[i]).collect(),
        cfg: r.grammar,
    }
}

/// The reduced LDG of `lig` itself.
pub fn static_ldg(lig: &LigGrammar) -> Ldg {
    let rels = closure(&level1(lig));
    reduce_ldg(&build_ldg(lig, &rels))
}

/// Whether `lig` generates no string at all.
pub fn lig_emptiness(lig: &LigGrammar) -> bool {
    static_ldg(lig).is_empty()
}

/// Pair patterns `(A ρ B)` over a LIG's nonterminals that hold in its
/// relations but label no useful nonterminal of its reduced LDG. No forest
/// pair over such a pattern can be useful either, so forest-level closure
/// and generation skip them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StaticFilter {
    useless: HashSet<(Nt, PairKind, Nt)>,
}

impl StaticFilter {
    pub fn contains(&self, a: Nt, k: PairKind, b: Nt) -> bool {
        self.useless.contains(&(a, k, b))
    }

    pub fn len(&self) -> usize {
        self.useless.len()
    }

    pub fn is_empty(&self) -> bool {
        self.useless.is_empty()
    }

    /// Sorted patterns.
    pub fn patterns(&self) -> Vec<(Nt, PairKind, Nt)> {
        let set: BTreeSet<_> = self.useless.iter().copied().collect();
        set.into_iter().collect()
    }
}

pub fn static_filter(lig: &LigGrammar) -> StaticFilter {
    let rels = closure(&level1(lig));
    let used: HashSet<LdgNonterminal> = reduce_ldg(&build_ldg(lig, &rels)).nonterminals.into_iter().collect();
    let mut useless = HashSet::new();
    let mut kinds = vec![PairKind::EqPlus, PairKind::Spine];
    kinds.extend(rels.pop_symbols().map(PairKind::PopPlus));
    for k in kinds {
        for (a, b) in rels.pairs(k.into()) {
            if !used.contains(&LdgNonterminal::Pair(Nt(a), k, Nt(b))) {
                useless.insert((Nt(a), k, Nt(b)));
            }
        }
    }
    StaticFilter { useless }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StageTimings {
    pub forest: Duration,
    pub relations: Duration,
    pub ldg: Duration,
    pub reduce: Duration,
}

/// Every intermediate artifact of recognizing one input.
#[derive(Clone, Debug)]
pub struct Recognition {
    pub fsa: Fsa,
    pub forest: SharedForest,
    pub liged: LigedForest,
    pub relations: RelationSet,
    /// The generated LDG before reduction.
    pub generated: Ldg,
    /// The reduced LDG of the LIGed forest; its terminals are forest
    /// production ids (see `liged.provenance`).
    pub ldg: Ldg,
    pub member: bool,
    pub timings: StageTimings,
}

/// Builds the reduced LDG of the LIGed forest for `tokens`; the input is in
/// the language iff that LDG has a production. With a `filter`, forest pairs
/// whose base pattern it lists are never computed.
pub fn recognize(lig: &LigGrammar, tokens: &[Term], filter: Option<&StaticFilter>) -> Recognition {
    let t0 = Instant::now();
    let fsa = build_fsa(tokens);
    let forest = build_shared_forest(&cf_backbone(lig), &fsa);
    let liged = lift_to_liged(lig, &forest);
    let t1 = Instant::now();
    let lvl = level1(&liged.lig);
    let relations = match filter {
        None => closure(&lvl),
        Some(f) => {
            let base = |i: usize| forest.items[i].base;
            closure_filtered(&lvl, |k, a, b| f.contains(base(a), k, base(b)))
        }
    };
    let t2 = Instant::now();
    let generated = build_ldg(&liged.lig, &relations);
    let t3 = Instant::now();
    let ldg = reduce_ldg(&generated);
    let t4 = Instant::now();
    Recognition {
        member: !ldg.is_empty(),
        fsa,
        forest,
        liged,
        relations,
        generated,
        ldg,
        timings: StageTimings {
            forest: t1 - t0,
            relations: t2 - t1,
            ldg: t3 - t2,
            reduce: t4 - t3,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;

    const WCW: &str = include_str!("../../../fixtures/wcw.lig");
    const CYCLIC: &str = include_str!("../../../fixtures/cyclic.lig");
    const PUSH_ONLY: &str = include_str!("../../../fixtures/push_only.lig");

    fn listing(d: &Ldg) -> Vec<String> {
        (0..d.forms.len()).map(|i| d.display_production(i)).collect()
    }

    fn sorted(mut v: Vec<String>) -> Vec<String> {
        v.sort();
        v
    }

    fn toks(g: &LigGrammar, s: &str) -> Vec<Term> {
        g.tokenize(&s.split_whitespace().collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn wcw_static_ldg() {
        let g = parse_grammar(WCW).unwrap();
        let d = static_ldg(&g);
        assert_eq!(
            sorted(listing(&d)),
            sorted(
                [
                    "[S] -> r8 [S EQ+ T]   (2)",
                    "[S EQ+ T] -> r4   (3)",
                    "[S EQ+ T] -> [S SPINE T]   (4)",
                    "[S SPINE T] -> [S POP+ga T] r1   (7)",
                    "[S SPINE T] -> [S POP+gb T] r2   (7)",
                    "[S SPINE T] -> [S POP+gc T] r3   (7)",
                    "[S POP+ga T] -> r5 [S EQ+ T]   (9)",
                    "[S POP+gb T] -> r6 [S EQ+ T]   (9)",
                    "[S POP+gc T] -> r7 [S EQ+ T]   (9)",
                ]
                .map(String::from)
                .to_vec()
            )
        );
        // generation already yields a reduced grammar here
        let rels = closure(&level1(&g));
        assert_eq!(build_ldg(&g, &rels).forms.len(), 9);
        assert_eq!(d.form_counts(), [0, 1, 1, 1, 0, 0, 3, 0, 3]);
    }

    #[test]
    fn cyclic_static_ldg() {
        let g = parse_grammar(CYCLIC).unwrap();
        assert_eq!(
            listing(&static_ldg(&g)),
            [
                "[A] -> r4 [A EQ+ B]   (2)",
                "[A EQ+ B] -> r2   (3)",
                "[A EQ+ B] -> [A SPINE B]   (4)",
                "[A SPINE B] -> [A POP+ga B] r1   (7)",
                "[A POP+ga B] -> r3 [A EQ+ B]   (9)",
            ]
        );
    }

    #[test]
    fn wcw_forest_ldg_for_ccc() {
        let g = parse_grammar(WCW).unwrap();
        let r = recognize(&g, &toks(&g, "c c c"), None);
        assert!(r.member);
        assert_eq!(
            listing(&r.ldg),
            [
                "[S[0,3]] -> r8^10 [S[0,3] EQ+ T[1,2]]   (2)",
                "[S[0,3] EQ+ T[1,2]] -> [S[0,3] SPINE T[1,2]]   (4)",
                "[S[0,3] SPINE T[1,2]] -> [S[0,2] POP+gc T[1,2]] r3^1   (7)",
                "[S[0,2] POP+gc T[1,2]] -> r7^9 [S[0,2] EQ+ T[0,2]]   (9)",
                "[S[0,2] EQ+ T[0,2]] -> r4^4   (3)",
            ]
        );
        assert_eq!(r.generated, r.ldg);
    }

    #[test]
    fn cyclic_forest_ldg_for_a() {
        let g = parse_grammar(CYCLIC).unwrap();
        let r = recognize(&g, &toks(&g, "a"), None);
        assert_eq!(
            listing(&r.ldg),
            [
                "[A[0,1]] -> r4^4 [A[0,1] EQ+ B[0,1]]   (2)",
                "[A[0,1] EQ+ B[0,1]] -> r2^2   (3)",
                "[A[0,1] EQ+ B[0,1]] -> [A[0,1] SPINE B[0,1]]   (4)",
                "[A[0,1] SPINE B[0,1]] -> [A[0,1] POP+ga B[0,1]] r1^1   (7)",
                "[A[0,1] POP+ga B[0,1]] -> r3^3 [A[0,1] EQ+ B[0,1]]   (9)",
            ]
        );
    }

    #[test]
    fn non_members() {
        let g = parse_grammar(WCW).unwrap();
        for input in ["c c", "a", "a c b", ""] {
            let r = recognize(&g, &toks(&g, input), None);
            assert!(!r.member, "{input}");
            assert!(r.ldg.is_empty());
        }
    }

    #[test]
    fn emptiness() {
        assert!(!lig_emptiness(&parse_grammar(WCW).unwrap()));
        assert!(!lig_emptiness(&parse_grammar(CYCLIC).unwrap()));
        let push = parse_grammar(PUSH_ONLY).unwrap();
        assert!(lig_emptiness(&push));
        assert!(static_ldg(&push).cfg.nonterminals.len() == 1);
    }

    #[test]
    fn static_filter_patterns() {
        let g = parse_grammar(WCW).unwrap();
        let f = static_filter(&g);
        let t = g.find_nt("T").unwrap();
        for s in ["ga", "gb", "gc"] {
            let gamma = g.find_stack(s).unwrap();
            assert!(f.contains(t, PairKind::PopPlus(gamma), t));
        }
        let g = parse_grammar(CYCLIC).unwrap();
        let f = static_filter(&g);
        let b = g.find_nt("B").unwrap();
        assert!(f.contains(b, PairKind::PopPlus(g.find_stack("ga").unwrap()), b));
        assert_eq!(f.len(), 1);
    }

    #[test]
    fn static_filter_empty_when_all_pairs_used() {
        let g = parse_grammar("%start S\nS(..) -> T(..)\nT() -> \"a\"\n").unwrap();
        assert!(static_filter(&g).is_empty());
    }

    #[test]
    fn filtered_recognition_matches() {
        for (text, input) in [(WCW, "c c c"), (WCW, "a b c a b"), (CYCLIC, "a")] {
            let g = parse_grammar(text).unwrap();
            let f = static_filter(&g);
            let x = toks(&g, input);
            let plain = recognize(&g, &x, None);
            let filtered = recognize(&g, &x, Some(&f));
            assert_eq!(listing(&plain.ldg), listing(&filtered.ldg), "{input}");
            assert!(filtered.relations.stats().skipped > 0);
        }
    }
}
