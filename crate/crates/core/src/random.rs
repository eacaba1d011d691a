//! Seeded random grammars for property tests and `ligforge fuzz`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grammar::{
    Flank, LigGrammar, LigProduction, Nt, RawGrammar, RawItem, RawProduction, RawSchema, Side, StackOp,
    StackSym, Term,
};

#[derive(Clone, Debug)]
pub struct RandomLigConfig {
    pub max_nonterminals: usize,
    pub max_stack_symbols: usize,
    pub max_terminals: usize,
    pub max_productions: usize,
}

impl Default for RandomLigConfig {
    fn default() -> Self {
        RandomLigConfig {
            max_nonterminals: 4,
            max_stack_symbols: 2,
            max_terminals: 2,
            max_productions: 10,
        }
    }
}

fn names(prefix: &[&str], n: usize) -> Vec<String> {
    prefix[..n].iter().map(|s| s.to_string()).collect()
}

const NTS: [&str; 8] = ["S", "A", "B", "C", "D", "E", "F", "G"];
const TS: [&str; 4] = ["a", "b", "c", "d"];
const GS: [&str; 4] = ["g", "h", "i", "j"];

/// A random normal-form grammar. Production 1 is always a terminal word,
/// so the grammar has at least one way to stop.
pub fn random_lig(seed: u64, cfg: &RandomLigConfig) -> LigGrammar {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_nt = rng.gen_range(1..=cfg.max_nonterminals.min(NTS.len()));
    let n_t = rng.gen_range(1..=cfg.max_terminals.min(TS.len()));
    let n_g = rng.gen_range(0..=cfg.max_stack_symbols.min(GS.len()));
    let n_p = rng.gen_range(1..=cfg.max_productions);
    let mut productions = Vec::with_capacity(n_p);
    for i in 0..n_p {
        let name = format!("r{}", i + 1);
        let lhs = Nt(rng.gen_range(0..n_nt));
        if i == 0 || rng.gen_bool(0.3) {
            let len = *[0usize, 1, 1, 1, 2].choose(&mut rng).expect("non-empty");
            let word = (0..len).map(|_| Term(rng.gen_range(0..n_t))).collect();
            productions.push(LigProduction::word(name, lhs, word));
            continue;
        }
        let op = match (n_g, rng.gen_range(0..3)) {
            (0, _) | (_, 0) => StackOp::Copy,
            (_, 1) => StackOp::Push(StackSym(rng.gen_range(0..n_g))),
            _ => StackOp::Pop(StackSym(rng.gen_range(0..n_g))),
        };
        let primary = Nt(rng.gen_range(0..n_nt));
        let flank = match rng.gen_range(0..4) {
            0 => None,
            1 | 2 => Some(Flank::Terminal(Term(rng.gen_range(0..n_t)))),
            _ => Some(Flank::Secondary(Nt(rng.gen_range(0..n_nt)))),
        }
        .map(|f| (if rng.gen_bool(0.5) { Side::Left } else { Side::Right }, f));
        productions.push(LigProduction::structured(name, lhs, op, primary, flank));
    }
    LigGrammar::new(names(&NTS, n_nt), names(&TS, n_t), names(&GS, n_g), productions, Nt(0))
        .expect("generated grammar is well formed")
}

/// A random grammar that may break the normal form in every way
/// `normalize` repairs.
pub fn random_relaxed(seed: u64, cfg: &RandomLigConfig) -> RawGrammar {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_nt = rng.gen_range(1..=cfg.max_nonterminals.min(NTS.len()));
    let n_t = rng.gen_range(1..=cfg.max_terminals.min(TS.len()));
    let n_g = rng.gen_range(1..=cfg.max_stack_symbols.clamp(1, GS.len()));
    let n_p = rng.gen_range(1..=cfg.max_productions);
    let syms = |rng: &mut ChaCha8Rng, max: usize| -> Vec<StackSym> {
        let k = rng.gen_range(0..=max);
        (0..k).map(|_| StackSym(rng.gen_range(0..n_g))).collect()
    };
    let mut productions = Vec::with_capacity(n_p);
    for i in 0..n_p {
        let lhs = Nt(rng.gen_range(0..n_nt));
        let (lhs_schema, rhs) = if i == 0 || rng.gen_bool(0.3) {
            let len = rng.gen_range(0..=4);
            let word = (0..len).map(|_| RawItem::Terminal(Term(rng.gen_range(0..n_t)))).collect();
            (RawSchema::empty(), word)
        } else {
            let mut flanks: Vec<RawItem> = (0..rng.gen_range(0..=2))
                .map(|_| {
                    if rng.gen_bool(0.7) {
                        RawItem::Terminal(Term(rng.gen_range(0..n_t)))
                    } else {
                        let fixed = if rng.gen_bool(0.3) { syms(&mut rng, 1) } else { Vec::new() };
                        RawItem::Constituent(
                            Nt(rng.gen_range(0..n_nt)),
                            RawSchema {
                                inherits: false,
                                symbols: fixed,
                            },
                        )
                    }
                })
                .collect();
            let primary = RawItem::Constituent(Nt(rng.gen_range(0..n_nt)), RawSchema::inherit(syms(&mut rng, 2)));
            let at = rng.gen_range(0..=flanks.len());
            flanks.insert(at, primary);
            (RawSchema::inherit(syms(&mut rng, 2)), flanks)
        };
        productions.push(RawProduction {
            name: format!("r{}", i + 1),
            lhs,
            lhs_schema,
            rhs,
            line: 0,
        });
    }
    RawGrammar {
        nonterminals: names(&NTS, n_nt),
        terminals: names(&TS, n_t),
        stack_symbols: names(&GS, n_g),
        productions,
        start: Nt(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::validate_normal_form;

    #[test]
    fn generation_is_seeded() {
        let cfg = RandomLigConfig::default();
        assert_eq!(random_lig(7, &cfg), random_lig(7, &cfg));
        assert_eq!(random_relaxed(7, &cfg), random_relaxed(7, &cfg));
    }

    #[test]
    fn random_ligs_respect_limits() {
        let cfg = RandomLigConfig::default();
        for seed in 0..200 {
            let g = random_lig(seed, &cfg);
            assert!(g.nonterminals.len() <= 4);
            assert!(g.stack_symbols.len() <= 2);
            assert!(g.productions.len() <= 10);
            assert!(validate_normal_form(&g.to_raw()).is_empty());
        }
    }
}
