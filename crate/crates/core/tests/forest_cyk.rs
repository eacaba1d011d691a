//! The shared forest against a naive chart built by brute-force fixpoint,
//! and the static filter against unfiltered recognition.

use std::collections::{BTreeSet, HashSet};

use ligforge_core::cfg::{CfGrammar, Symbol};
use ligforge_core::forest::{build_fsa, build_shared_forest};
use ligforge_core::grammar::{cf_backbone, parse_grammar, LigGrammar, Term};
use ligforge_core::ldg::{recognize, static_filter};
use ligforge_core::random::{random_lig, RandomLigConfig};

type Item = (usize, usize, usize);

/// Every way to lay `rhs` over the input from `start`, as boundary states.
fn layouts(rhs: &[Symbol], start: usize, input: &[usize], items: &HashSet<Item>) -> Vec<Vec<usize>> {
    let n = input.len();
    let mut out = vec![vec![start]];
    for s in rhs {
        let mut next = Vec::new();
        for path in out {
            let at = *path.last().unwrap();
            for to in at..=n {
                let ok = match *s {
                    Symbol::T(t) => to == at + 1 && input[at] == t,
                    Symbol::N(b) => items.contains(&(b, at, to)),
                };
                if ok {
                    let mut p = path.clone();
                    p.push(to);
                    next.push(p);
                }
            }
        }
        out = next;
    }
    out
}

/// Useful items and production instances `(production, states)`.
fn naive(g: &CfGrammar, input: &[usize]) -> (BTreeSet<Item>, BTreeSet<(usize, Vec<usize>)>) {
    let n = input.len();
    let mut items = HashSet::new();
    loop {
        let before = items.len();
        for p in &g.productions {
            for start in 0..=n {
                for path in layouts(&p.rhs, start, input, &items) {
                    items.insert((p.lhs, start, *path.last().unwrap()));
                }
            }
        }
        if items.len() == before {
            break;
        }
    }
    let mut instances = Vec::new();
    for (i, p) in g.productions.iter().enumerate() {
        for start in 0..=n {
            for path in layouts(&p.rhs, start, input, &items) {
                instances.push((i, path));
            }
        }
    }
    let mut useful = BTreeSet::new();
    let mut todo = Vec::new();
    if items.contains(&(g.start, 0, n)) {
        todo.push((g.start, 0, n));
    }
    while let Some(x) = todo.pop() {
        if !useful.insert(x) {
            continue;
        }
        for (i, path) in &instances {
            let p = &g.productions[*i];
            if (p.lhs, path[0], *path.last().unwrap()) != x {
                continue;
            }
            for (k, s) in p.rhs.iter().enumerate() {
                if let Symbol::N(b) = *s {
                    todo.push((b, path[k], path[k + 1]));
                }
            }
        }
    }
    let used = instances
        .into_iter()
        .filter(|(i, path)| useful.contains(&(g.productions[*i].lhs, path[0], *path.last().unwrap())))
        .collect();
    (useful, used)
}

fn inputs(terminals: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut all = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for t in 0..terminals {
                let mut v: Vec<usize> = w.clone();
                v.push(t);
                next.push(v);
            }
        }
        all.extend(next.iter().cloned());
        layer = next;
    }
    all
}

fn check_forest(lig: &LigGrammar, input: &[usize]) {
    let backbone = cf_backbone(lig);
    let tokens: Vec<Term> = input.iter().map(|&t| Term(t)).collect();
    let forest = build_shared_forest(&backbone, &build_fsa(&tokens));
    let (useful, used) = naive(&backbone, input);

    let got_items: BTreeSet<Item> = if forest.is_empty() {
        BTreeSet::new()
    } else {
        forest.items.iter().map(|x| (x.base.0, x.from, x.to)).collect()
    };
    assert_eq!(got_items, useful, "items for {input:?}\n{}", lig.render());

    let got: BTreeSet<(usize, Vec<usize>)> =
        forest.provenance.iter().map(|p| (p.source.0, p.states.clone())).collect();
    assert_eq!(got.len(), forest.provenance.len(), "duplicate forest productions");
    assert_eq!(got, used, "productions for {input:?}\n{}", lig.render());

    // each forest production spells out its provenance
    for (prod, prov) in forest.cfg.productions.iter().zip(&forest.provenance) {
        let src = &backbone.productions[prov.source.0];
        let lhs = forest.items[prod.lhs];
        assert_eq!((lhs.base.0, lhs.from, lhs.to), (src.lhs, prov.states[0], *prov.states.last().unwrap()));
        assert_eq!(prod.rhs.len(), src.rhs.len());
        for (k, (s, orig)) in prod.rhs.iter().zip(&src.rhs).enumerate() {
            match (*s, *orig) {
                (Symbol::T(a), Symbol::T(b)) => assert_eq!(a, b),
                (Symbol::N(a), Symbol::N(b)) => {
                    let x = forest.items[a];
                    assert_eq!((x.base.0, x.from, x.to), (b, prov.states[k], prov.states[k + 1]));
                }
                _ => panic!("symbol kinds differ"),
            }
        }
    }
}

#[test]
fn fixture_forests_match_the_naive_chart() {
    for text in [
        include_str!("../../../fixtures/wcw.lig"),
        include_str!("../../../fixtures/cyclic.lig"),
        include_str!("../../../fixtures/anbncn.lig"),
    ] {
        let g = parse_grammar(text).unwrap();
        for input in inputs(g.terminals.len(), 5) {
            check_forest(&g, &input);
        }
    }
}

#[test]
fn random_forests_match_the_naive_chart() {
    let cfg = RandomLigConfig::default();
    let mut nonempty = 0;
    for seed in 0..300 {
        let g = random_lig(seed, &cfg);
        for input in inputs(g.terminals.len(), 4) {
            check_forest(&g, &input);
            let tokens: Vec<Term> = input.iter().map(|&t| Term(t)).collect();
            nonempty += usize::from(!build_shared_forest(&cf_backbone(&g), &build_fsa(&tokens)).is_empty());
        }
    }
    assert!(nonempty > 500, "only {nonempty} nonempty forests");
}

#[test]
fn static_filter_never_changes_the_result() {
    let cfg = RandomLigConfig::default();
    let mut members = 0;
    let mut filtered = 0;
    for seed in 0..300 {
        let g = random_lig(seed, &cfg);
        let filter = static_filter(&g);
        filtered += usize::from(!filter.is_empty());
        for input in inputs(g.terminals.len(), 3) {
            let tokens: Vec<Term> = input.iter().map(|&t| Term(t)).collect();
            let plain = recognize(&g, &tokens, None);
            let quick = recognize(&g, &tokens, Some(&filter));
            assert_eq!(plain.member, quick.member, "seed {seed} input {input:?}");
            assert_eq!(plain.ldg.to_string(), quick.ldg.to_string(), "seed {seed} input {input:?}");
            assert!(quick.generated.cfg.productions.len() <= plain.generated.cfg.productions.len());
            members += usize::from(plain.member);
        }
    }
    assert!(members > 100 && filtered > 50, "members {members}, filtered grammars {filtered}");
}
