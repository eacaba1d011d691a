//! Stack relations between nonterminals and their closures.
//!
//! Level-1 relations record, per structured production, what happens to the
//! stack between the head and the primary constituent: `EQ1` (copy),
//! `PUSH1(g)` and `POP1(g)`. The closures summarise whole spine segments:
//!
//! ```text
//! POP+(g) = POP1(g) ∪ EQ+ ∘ POP1(g)
//! SPINE   = ⋃g PUSH1(g) ∘ POP+(g)
//! EQ+     = EQ1 ∪ SPINE ∪ EQ1 ∘ EQ+ ∪ SPINE ∘ EQ+
//! ```
//!
//! [`closure`] computes the least solution with a worklist that handles each
//! inserted pair once.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::grammar::{LigGrammar, StackOp, StackSym};

/// Square boolean matrix over nonterminal indices, stored as bit rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BitMatrix {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    /// Sets `(a, b)`; returns whether the pair was new.
    pub fn insert(&mut self, a: usize, b: usize) -> bool {
        let w = &mut self.bits[a * self.words + b / 64];
        let mask = 1u64 << (b % 64);
        let fresh = *w & mask == 0;
        *w |= mask;
        fresh
    }

    pub fn row(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        let words = &self.bits[a * self.words..(a + 1) * self.words];
        words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + t)
            })
        })
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Pairs in row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n).flat_map(|a| self.row(a).map(move |b| (a, b))).collect()
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::new(self.n);
        for (a, b) in self.pairs() {
            t.insert(b, a);
        }
        t
    }

    /// Relational composition: `(a, c)` iff some `b` has `(a, b)` in `self`
    /// and `(b, c)` in `other`.
    pub fn compose(&self, other: &BitMatrix) -> BitMatrix {
        let mut out = BitMatrix::new(self.n);
        for a in 0..self.n {
            for b in self.row(a) {
                let (dst, src) = (a * self.words, b * self.words);
                for k in 0..self.words {
                    out.bits[dst + k] |= other.bits[src + k];
                }
            }
        }
        out
    }

    pub fn union_with(&mut self, other: &BitMatrix) {
        for (x, y) in self.bits.iter_mut().zip(&other.bits) {
            *x |= *y;
        }
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationKind {
    Eq1,
    Push1(StackSym),
    Pop1(StackSym),
    EqPlus,
    Spine,
    PopPlus(StackSym),
}

/// The closure relations that label LDG pair nonterminals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PairKind {
    EqPlus,
    Spine,
    PopPlus(StackSym),
}

impl From<PairKind> for RelationKind {
    fn from(k: PairKind) -> Self {
        match k {
            PairKind::EqPlus => RelationKind::EqPlus,
            PairKind::Spine => RelationKind::Spine,
            PairKind::PopPlus(g) => RelationKind::PopPlus(g),
        }
    }
}

impl RelationKind {
    pub fn gamma(self) -> Option<StackSym> {
        match self {
            RelationKind::Push1(g) | RelationKind::Pop1(g) | RelationKind::PopPlus(g) => Some(g),
            _ => None,
        }
    }

    /// Short label such as `EQ+` or `POP1`; the stack symbol is separate.
    pub fn label(self) -> &'static str {
        match self {
            RelationKind::Eq1 => "EQ1",
            RelationKind::Push1(_) => "PUSH1",
            RelationKind::Pop1(_) => "POP1",
            RelationKind::EqPlus => "EQ+",
            RelationKind::Spine => "SPINE",
            RelationKind::PopPlus(_) => "POP+",
        }
    }
}

/// Number of pairs inserted per family while closing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ClosureStats {
    pub eq_plus: usize,
    pub spine: usize,
    pub pop_plus: usize,
    /// Pairs rejected by a filter.
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationSet {
    n: usize,
    eq1: BitMatrix,
    push1: BTreeMap<StackSym, BitMatrix>,
    pop1: BTreeMap<StackSym, BitMatrix>,
    eq_plus: BitMatrix,
    spine: BitMatrix,
    pop_plus: BTreeMap<StackSym, BitMatrix>,
    stats: ClosureStats,
}

/// Level-1 relations of `g`; closure families are left empty.
pub fn level1(g: &LigGrammar) -> RelationSet {
    let n = g.nonterminals.len();
    let mut r = RelationSet {
        n,
        eq1: BitMatrix::new(n),
        push1: BTreeMap::new(),
        pop1: BTreeMap::new(),
        eq_plus: BitMatrix::new(n),
        spine: BitMatrix::new(n),
        pop_plus: BTreeMap::new(),
        stats: ClosureStats::default(),
    };
    for p in &g.productions {
        let (Some(op), Some(b)) = (p.op(), p.primary()) else {
            continue;
        };
        let a = p.lhs.0;
        match op {
            StackOp::Copy => {
                r.eq1.insert(a, b.0);
            }
            StackOp::Push(s) => {
                r.push1.entry(s).or_insert_with(|| BitMatrix::new(n)).insert(a, b.0);
            }
            StackOp::Pop(s) => {
                r.pop1.entry(s).or_insert_with(|| BitMatrix::new(n)).insert(a, b.0);
            }
        }
    }
    r
}

/// Computes `EQ+`, `SPINE` and `POP+(g)` from the level-1 families.
pub fn closure(level1: &RelationSet) -> RelationSet {
    closure_filtered(level1, |_, _, _| false)
}

enum Event {
    EqPlus(usize, usize),
    PopPlus(StackSym, usize, usize),
    Spine(usize, usize),
}

/// Like [`closure`], but never inserts a pair for which `skip` holds; pairs
/// only derivable through skipped ones are absent too.
pub fn closure_filtered(level1: &RelationSet, skip: impl Fn(PairKind, usize, usize) -> bool) -> RelationSet {
    let n = level1.n;
    let mut r = RelationSet {
        eq_plus: BitMatrix::new(n),
        spine: BitMatrix::new(n),
        pop_plus: level1.pop1.keys().map(|&g| (g, BitMatrix::new(n))).collect(),
        stats: ClosureStats::default(),
        ..level1.clone()
    };
    let eq1_t = r.eq1.transpose();
    let push1_t: BTreeMap<StackSym, BitMatrix> = r.push1.iter().map(|(&g, m)| (g, m.transpose())).collect();
    let mut spine_t = BitMatrix::new(n);
    let mut queue = VecDeque::new();

    let add = |r: &mut RelationSet, spine_t: &mut BitMatrix, q: &mut VecDeque<Event>, kind: PairKind, a: usize, b: usize| {
        let fresh = match kind {
            PairKind::EqPlus => !r.eq_plus.get(a, b),
            PairKind::Spine => !r.spine.get(a, b),
            PairKind::PopPlus(g) => !r.pop_plus[&g].get(a, b),
        };
        if !fresh {
            return;
        }
        if skip(kind, a, b) {
            r.stats.skipped += 1;
            return;
        }
        match kind {
            PairKind::EqPlus => {
                r.eq_plus.insert(a, b);
                r.stats.eq_plus += 1;
                q.push_back(Event::EqPlus(a, b));
            }
            PairKind::Spine => {
                r.spine.insert(a, b);
                spine_t.insert(b, a);
                r.stats.spine += 1;
                q.push_back(Event::Spine(a, b));
            }
            PairKind::PopPlus(g) => {
                r.pop_plus.get_mut(&g).expect("allocated").insert(a, b);
                r.stats.pop_plus += 1;
                q.push_back(Event::PopPlus(g, a, b));
            }
        }
    };

    for (a, b) in level1.eq1.pairs() {
        add(&mut r, &mut spine_t, &mut queue, PairKind::EqPlus, a, b);
    }
    for (&g, m) in &level1.pop1 {
        for (a, b) in m.pairs() {
            add(&mut r, &mut spine_t, &mut queue, PairKind::PopPlus(g), a, b);
        }
    }

    while let Some(ev) = queue.pop_front() {
        match ev {
            Event::EqPlus(a, b) => {
                // EQ+ ∘ POP1(g) ⊆ POP+(g)
                for (&g, pop) in &level1.pop1 {
                    for c in pop.row(b) {
                        add(&mut r, &mut spine_t, &mut queue, PairKind::PopPlus(g), a, c);
                    }
                }
                // EQ1 ∘ EQ+ and SPINE ∘ EQ+ ⊆ EQ+
                for x in eq1_t.row(a) {
                    add(&mut r, &mut spine_t, &mut queue, PairKind::EqPlus, x, b);
                }
                let lefts: Vec<usize> = spine_t.row(a).collect();
                for x in lefts {
                    add(&mut r, &mut spine_t, &mut queue, PairKind::EqPlus, x, b);
                }
            }
            Event::PopPlus(g, a, c) => {
                // PUSH1(g) ∘ POP+(g) ⊆ SPINE
                if let Some(pt) = push1_t.get(&g) {
                    for x in pt.row(a) {
                        add(&mut r, &mut spine_t, &mut queue, PairKind::Spine, x, c);
                    }
                }
            }
            Event::Spine(a, c) => {
                add(&mut r, &mut spine_t, &mut queue, PairKind::EqPlus, a, c);
                let rights: Vec<usize> = r.eq_plus.row(c).collect();
                for b in rights {
                    add(&mut r, &mut spine_t, &mut queue, PairKind::EqPlus, a, b);
                }
            }
        }
    }
    r
}

impl RelationSet {
    /// Number of nonterminals the relations range over.
    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn stats(&self) -> &ClosureStats {
        &self.stats
    }

    pub fn matrix(&self, kind: RelationKind) -> Option<&BitMatrix> {
        match kind {
            RelationKind::Eq1 => Some(&self.eq1),
            RelationKind::Push1(g) => self.push1.get(&g),
            RelationKind::Pop1(g) => self.pop1.get(&g),
            RelationKind::EqPlus => Some(&self.eq_plus),
            RelationKind::Spine => Some(&self.spine),
            RelationKind::PopPlus(g) => self.pop_plus.get(&g),
        }
    }

    pub fn contains(&self, kind: RelationKind, a: usize, b: usize) -> bool {
        self.matrix(kind).is_some_and(|m| m.get(a, b))
    }

    /// Whether `[a kind b]` is a valid LDG nonterminal.
    pub fn valid(&self, a: usize, kind: PairKind, b: usize) -> bool {
        self.contains(kind.into(), a, b)
    }

    pub fn pairs(&self, kind: RelationKind) -> Vec<(usize, usize)> {
        self.matrix(kind).map(BitMatrix::pairs).unwrap_or_default()
    }

    /// Every family with its pairs, in a fixed display order (empty
    /// families included).
    pub fn families(&self) -> Vec<(RelationKind, &BitMatrix)> {
        let mut out = vec![(RelationKind::Eq1, &self.eq1)];
        out.extend(self.push1.iter().map(|(&g, m)| (RelationKind::Push1(g), m)));
        out.extend(self.pop1.iter().map(|(&g, m)| (RelationKind::Pop1(g), m)));
        out.push((RelationKind::EqPlus, &self.eq_plus));
        out.push((RelationKind::Spine, &self.spine));
        out.extend(self.pop_plus.iter().map(|(&g, m)| (RelationKind::PopPlus(g), m)));
        out
    }

    /// Stack symbols with a `POP+` family.
    pub fn pop_symbols(&self) -> impl Iterator<Item = StackSym> + '_ {
        self.pop_plus.keys().copied()
    }

    pub fn eq_plus(&self) -> &BitMatrix {
        &self.eq_plus
    }

    pub fn spine(&self) -> &BitMatrix {
        &self.spine
    }

    pub fn pop_plus(&self, g: StackSym) -> Option<&BitMatrix> {
        self.pop_plus.get(&g)
    }

    /// Checks the three closure equations by direct composition, exactly.
    pub fn satisfies_closure_identity(&self) -> bool {
        let n = self.n;
        let empty = BitMatrix::new(n);
        let mut spine = BitMatrix::new(n);
        for (g, pop1) in &self.pop1 {
            let mut pop_plus = pop1.clone();
            pop_plus.union_with(&self.eq_plus.compose(pop1));
            if self.pop_plus.get(g) != Some(&pop_plus) {
                return false;
            }
        }
        // POP+ only exists where POP1 does
        if self.pop_plus.keys().any(|g| !self.pop1.contains_key(g)) {
            return false;
        }
        for (g, push1) in &self.push1 {
            spine.union_with(&push1.compose(self.pop_plus.get(g).unwrap_or(&empty)));
        }
        if spine != self.spine {
            return false;
        }
        let mut eq_plus = self.eq1.clone();
        eq_plus.union_with(&self.spine);
        eq_plus.union_with(&self.eq1.compose(&self.eq_plus));
        eq_plus.union_with(&self.spine.compose(&self.eq_plus));
        eq_plus == self.eq_plus
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{HashSet, VecDeque};

    use proptest::prelude::*;

    use super::*;
    use crate::grammar::{parse_grammar, LigGrammar, Nt};
    use crate::random::{random_lig, RandomLigConfig};

    const WCW: &str = include_str!("../../../fixtures/wcw.lig");
    const CYCLIC: &str = include_str!("../../../fixtures/cyclic.lig");

    fn named(g: &LigGrammar, r: &RelationSet, kind: RelationKind) -> Vec<(String, String)> {
        r.pairs(kind)
            .into_iter()
            .map(|(a, b)| (g.nt_name(Nt(a)).to_string(), g.nt_name(Nt(b)).to_string()))
            .collect()
    }

    fn pairs(list: &[(&str, &str)]) -> Vec<(String, String)> {
        list.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn wcw_relations() {
        let g = parse_grammar(WCW).unwrap();
        let r = closure(&level1(&g));
        assert_eq!(named(&g, &r, RelationKind::Eq1), pairs(&[("S", "T")]));
        for name in ["ga", "gb", "gc"] {
            let s = g.find_stack(name).unwrap();
            assert_eq!(named(&g, &r, RelationKind::Push1(s)), pairs(&[("S", "S")]));
            assert_eq!(named(&g, &r, RelationKind::Pop1(s)), pairs(&[("T", "T")]));
            assert_eq!(named(&g, &r, RelationKind::PopPlus(s)), pairs(&[("S", "T"), ("T", "T")]));
        }
        assert_eq!(named(&g, &r, RelationKind::EqPlus), pairs(&[("S", "T")]));
        assert_eq!(named(&g, &r, RelationKind::Spine), pairs(&[("S", "T")]));
        assert!(r.satisfies_closure_identity());
    }

    #[test]
    fn cyclic_relations() {
        let g = parse_grammar(CYCLIC).unwrap();
        let r = closure(&level1(&g));
        let ga = g.find_stack("ga").unwrap();
        assert_eq!(named(&g, &r, RelationKind::Eq1), pairs(&[("A", "B")]));
        assert_eq!(named(&g, &r, RelationKind::Push1(ga)), pairs(&[("A", "A")]));
        assert_eq!(named(&g, &r, RelationKind::Pop1(ga)), pairs(&[("B", "B")]));
        assert_eq!(named(&g, &r, RelationKind::EqPlus), pairs(&[("A", "B")]));
        assert_eq!(named(&g, &r, RelationKind::Spine), pairs(&[("A", "B")]));
        assert_eq!(named(&g, &r, RelationKind::PopPlus(ga)), pairs(&[("A", "B"), ("B", "B")]));
    }

    #[test]
    fn terminal_only_grammar_has_no_relations() {
        let g = parse_grammar("%start S\nS() -> a").unwrap();
        let r = closure(&level1(&g));
        assert!(r.families().iter().all(|(_, m)| m.is_empty()));
    }

    #[test]
    fn filter_skips_pairs() {
        let g = parse_grammar(WCW).unwrap();
        let t = g.find_nt("T").unwrap().0;
        let r = closure_filtered(&level1(&g), |k, a, b| matches!(k, PairKind::PopPlus(_)) && a == t && b == t);
        let gc = g.find_stack("gc").unwrap();
        assert_eq!(r.pairs(RelationKind::PopPlus(gc)), [(0, 1)]);
        assert_eq!(r.stats().skipped, 3);
    }

    /// Pairs (A, B) such that B() is a distinguished descendant of A() with
    /// an empty stack, by search over (nonterminal, stack) states.
    fn spine_oracle(g: &LigGrammar, max_depth: usize) -> HashSet<(usize, usize)> {
        let mut out = HashSet::new();
        for a in 0..g.nonterminals.len() {
            let mut seen: HashSet<(usize, Vec<StackSym>)> = HashSet::new();
            let mut queue = VecDeque::from([(a, Vec::new())]);
            while let Some((x, stack)) = queue.pop_front() {
                for p in g.productions.iter().filter(|p| p.lhs.0 == x) {
                    let (Some(op), Some(b)) = (p.op(), p.primary()) else {
                        continue;
                    };
                    let mut next = stack.clone();
                    match op {
                        StackOp::Copy => {}
                        StackOp::Push(s) => next.push(s),
                        StackOp::Pop(s) => {
                            if next.pop() != Some(s) {
                                continue;
                            }
                        }
                    }
                    if next.len() > max_depth {
                        continue;
                    }
                    if next.is_empty() {
                        out.insert((a, b.0));
                    }
                    if seen.insert((b.0, next.clone())) {
                        queue.push_back((b.0, next));
                    }
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn closure_matches_spine_search(seed in any::<u64>()) {
            let g = random_lig(seed, &RandomLigConfig::default());
            let r = closure(&level1(&g));
            prop_assert!(r.satisfies_closure_identity());
            let oracle = spine_oracle(&g, 12);
            let eq: HashSet<(usize, usize)> = r.pairs(RelationKind::EqPlus).into_iter().collect();
            prop_assert_eq!(eq, oracle);
            let n = g.nonterminals.len();
            prop_assert!(r.stats().eq_plus <= n * n);
            prop_assert!(r.stats().spine <= n * n);
        }

        #[test]
        fn adding_a_production_is_monotone(seed in any::<u64>(), extra in any::<u64>()) {
            let g = random_lig(seed, &RandomLigConfig::default());
            let h = random_lig(extra, &RandomLigConfig::default());
            let before = closure(&level1(&g));
            let mut bigger = g.clone();
            if let Some(p) = h.productions.iter().find(|p| {
                p.lhs.0 < g.nonterminals.len()
                    && p.primary().is_none_or(|b| b.0 < g.nonterminals.len())
                    && p.secondary().is_none_or(|b| b.0 < g.nonterminals.len())
                    && p.op().is_none_or(|op| match op {
                        StackOp::Push(s) | StackOp::Pop(s) => s.0 < g.stack_symbols.len(),
                        StackOp::Copy => true,
                    })
                    && match &p.rhs {
                        crate::grammar::Rhs::Word(w) => w.iter().all(|t| t.0 < g.terminals.len()),
                        crate::grammar::Rhs::Structured { flank, .. } => !matches!(flank, Some((_, crate::grammar::Flank::Terminal(t))) if t.0 >= g.terminals.len()),
                    }
            }) {
                let mut p = p.clone();
                p.name = "extra".into();
                bigger.productions.push(p);
            }
            let after = closure(&level1(&bigger));
            for (kind, m) in before.families() {
                for (a, b) in m.pairs() {
                    prop_assert!(after.contains(kind, a, b));
                }
            }
        }
    }
}
