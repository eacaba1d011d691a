//! Machine-readable output. Layouts are described in docs/json.md.

use std::time::Duration;

use ligforge_core::cfg::{CfGrammar, Symbol};
use ligforge_core::derive::{ParseTree, TreeItem};
use ligforge_core::grammar::LigGrammar;
use ligforge_core::ldg::Ldg;
use ligforge_core::relations::{RelationKind, RelationSet};
use serde::Serialize;

#[derive(Serialize)]
pub struct GrammarStats {
    pub nonterminals: usize,
    pub terminals: usize,
    pub stack_symbols: usize,
    pub productions: usize,
}

impl GrammarStats {
    pub fn of(g: &LigGrammar) -> Self {
        GrammarStats {
            nonterminals: g.nonterminals.len(),
            terminals: g.terminals.len(),
            stack_symbols: g.stack_symbols.len(),
            productions: g.productions.len(),
        }
    }
}

#[derive(Serialize)]
pub struct ForestStats {
    pub nonterminals: usize,
    pub productions: usize,
}

#[derive(Serialize)]
pub struct LdgStats {
    pub generated: usize,
    pub nonterminals: usize,
    pub productions: usize,
    pub forms: [usize; 9],
}

impl LdgStats {
    pub fn of(generated: &Ldg, reduced: &Ldg) -> Self {
        LdgStats {
            generated: generated.cfg.productions.len(),
            nonterminals: if reduced.is_empty() { 0 } else { reduced.cfg.nonterminals.len() },
            productions: reduced.cfg.productions.len(),
            forms: reduced.form_counts(),
        }
    }
}

#[derive(Serialize)]
pub struct RelationFamily {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    pub pairs: Vec<[String; 2]>,
}

/// Every nonempty family, pairs sorted by index.
pub fn relation_families(rels: &RelationSet, names: &[String], stack: &[String]) -> Vec<RelationFamily> {
    rels.families()
        .into_iter()
        .filter(|(_, m)| !m.is_empty())
        .map(|(kind, m)| RelationFamily {
            kind: kind.label(),
            gamma: kind.gamma().map(|g| stack[g.0].clone()),
            pairs: m.pairs().into_iter().map(|(a, b)| [names[a].clone(), names[b].clone()]).collect(),
        })
        .collect()
}

#[derive(Serialize)]
pub struct RelationSize {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    pub pairs: usize,
}

pub fn relation_sizes(rels: &RelationSet, stack: &[String]) -> Vec<RelationSize> {
    rels.families()
        .into_iter()
        .map(|(kind, m): (RelationKind, _)| RelationSize {
            kind: kind.label(),
            gamma: kind.gamma().map(|g| stack[g.0].clone()),
            pairs: m.len(),
        })
        .collect()
}

#[derive(Default, Serialize)]
pub struct Timings {
    pub load: f64,
    pub forest: f64,
    pub relations: f64,
    pub ldg: f64,
    pub reduce: f64,
    pub extract: f64,
}

pub fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

#[derive(Serialize)]
pub struct RunReport {
    pub grammar: GrammarStats,
    pub relations: Vec<RelationSize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forest: Option<ForestStats>,
    pub ldg: LdgStats,
    pub member: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<String>,
    pub timings_ms: Timings,
}

#[derive(Serialize)]
pub struct CfProductionJson {
    pub name: String,
    pub lhs: String,
    pub rhs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<u8>,
}

pub fn cfg_productions(g: &CfGrammar, forms: Option<&[u8]>) -> Vec<CfProductionJson> {
    g.productions
        .iter()
        .enumerate()
        .map(|(i, p)| CfProductionJson {
            name: p.name.clone(),
            lhs: g.nonterminals[p.lhs].clone(),
            rhs: p.rhs.iter().map(|&s: &Symbol| g.symbol_name(s).to_string()).collect(),
            form: forms.map(|f| f[i]),
        })
        .collect()
}

#[derive(Serialize)]
#[serde(untagged)]
pub enum TreeJson {
    Node {
        object: String,
        production: String,
        children: Vec<TreeJson>,
    },
    Terminal {
        terminal: String,
    },
}

pub fn tree_json(t: &ParseTree, g: &LigGrammar) -> TreeJson {
    TreeJson::Node {
        object: t.object(g),
        production: g.prod_name(t.production).to_string(),
        children: t
            .items
            .iter()
            .map(|i| match i {
                TreeItem::Terminal(x) => TreeJson::Terminal {
                    terminal: g.term_name(*x).to_string(),
                },
                TreeItem::Secondary(c) | TreeItem::Distinguished(c) => tree_json(c, g),
            })
            .collect(),
    }
}
