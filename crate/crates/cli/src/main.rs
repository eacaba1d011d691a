mod report;
mod style;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ligforge_core::bench::{bench, to_csv};
use ligforge_core::derive::{count_sentences, enumerate_sentences, map_to_source, replay, sentence_to_tree, Derivation};
use ligforge_core::forest::forest_to_dot;
use ligforge_core::grammar::{parse_grammar, parse_grammar_relaxed, LigGrammar, ProdId, Term};
use ligforge_core::ldg::{recognize, reduce_ldg, build_ldg, static_filter, Ldg, Recognition, StaticFilter};
use ligforge_core::oracle::{oracle_language, OracleConfig};
use ligforge_core::random::{random_lig, RandomLigConfig};
use ligforge_core::relations::{closure, level1, RelationSet};

use report::*;
use style::Style;

/// Writes to stdout; a closed pipe ends the process quietly.
fn emit(args: std::fmt::Arguments) {
    use std::io::Write;
    if let Err(e) = std::io::stdout().lock().write_fmt(args) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
        std::process::exit(0);
    }
}

macro_rules! out {
    ($($t:tt)*) => { emit(format_args!($($t)*)) };
}

macro_rules! outln {
    () => { emit(format_args!("\n")) };
    ($($t:tt)*) => { emit(format_args!("{}\n", format_args!($($t)*))) };
}

#[derive(Parser)]
#[command(name = "ligforge", version, about = "Parse strings against linear indexed grammars")]
struct Cli {
    /// Seed for the random grammar generator
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct GrammarArgs {
    /// Grammar file
    grammar: PathBuf,
    /// Accept grammars outside the normal form and rewrite them
    #[arg(long)]
    relaxed: bool,
}

#[derive(clap::Args)]
struct InputArgs {
    /// Input tokens, whitespace separated
    input: String,
    /// Treat every non-blank character of the input as a token
    #[arg(long)]
    chars: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a grammar and decide whether its language is empty
    Check {
        #[command(flatten)]
        g: GrammarArgs,
        #[arg(long)]
        json: bool,
    },
    /// Recognize an input and extract its derivations
    Parse {
        #[command(flatten)]
        g: GrammarArgs,
        #[command(flatten)]
        input: InputArgs,
        /// Print the first K derivations, shortest first
        #[arg(long, value_name = "K", default_value_t = 0)]
        enumerate: usize,
        /// Longest derivation considered when enumerating
        #[arg(long, value_name = "L", default_value_t = 64)]
        max_len: usize,
        /// Print the number of derivations
        #[arg(long)]
        count: bool,
        /// Print the parse tree of each derivation
        #[arg(long)]
        trees: bool,
        #[arg(long, conflicts_with = "dot")]
        json: bool,
        /// Print parse trees as Graphviz
        #[arg(long)]
        dot: bool,
        #[arg(long)]
        no_static_filter: bool,
    },
    /// Print stack relations of a grammar, or of its forest for an input
    Relations {
        #[command(flatten)]
        g: GrammarArgs,
        input: Option<String>,
        #[arg(long)]
        chars: bool,
        #[arg(long)]
        json: bool,
    },
    /// Print the shared parse forest of an input
    Forest {
        #[command(flatten)]
        g: GrammarArgs,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Print the reduced derivation grammar of a grammar or an input
    Ldg {
        #[command(flatten)]
        g: GrammarArgs,
        input: Option<String>,
        #[arg(long)]
        chars: bool,
        #[arg(long)]
        no_static_filter: bool,
        #[arg(long)]
        json: bool,
    },
    /// Enumerate parse trees by exhaustive search
    Oracle {
        #[command(flatten)]
        g: GrammarArgs,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        max_nodes: usize,
        #[arg(long)]
        max_stack: usize,
        #[arg(long)]
        trees: bool,
        #[arg(long)]
        json: bool,
    },
    /// Measure sizes and timings over inputs from a template such as "c^n"
    Bench {
        #[command(flatten)]
        g: GrammarArgs,
        template: String,
        #[arg(long, default_value_t = 1)]
        from: usize,
        #[arg(long, default_value_t = 10)]
        to: usize,
        #[arg(long, default_value_t = 1)]
        step: usize,
        #[arg(long)]
        no_static_filter: bool,
    },
    /// Cross-check the parser against the oracle on random grammars
    Fuzz {
        /// Number of grammars
        #[arg(long, default_value_t = 20)]
        grammars: u64,
        /// Longest input tried
        #[arg(long, default_value_t = 3)]
        max_input: usize,
        /// Longest derivation compared
        #[arg(long, default_value_t = 8)]
        bound: usize,
    },
}

struct Loaded {
    grammar: LigGrammar,
    /// Source production of each production, when normalized.
    origin: Option<Vec<Option<ProdId>>>,
}

impl Loaded {
    /// Derivation names with fresh productions left out.
    fn source_names(&self, d: &Derivation) -> Vec<String> {
        match &self.origin {
            None => d.names(&self.grammar).into_iter().map(String::from).collect(),
            Some(origin) => d
                .0
                .iter()
                .filter(|p| origin[p.0].is_some())
                .map(|&p| self.grammar.prod_name(p).to_string())
                .collect(),
        }
    }
}

fn load(args: &GrammarArgs) -> Result<Loaded> {
    let text = std::fs::read_to_string(&args.grammar)
        .with_context(|| format!("cannot read {}", args.grammar.display()))?;
    let name = args.grammar.display();
    if args.relaxed {
        let n = parse_grammar_relaxed(&text).with_context(|| format!("{name}"))?;
        Ok(Loaded {
            grammar: n.grammar,
            origin: Some(n.origin),
        })
    } else {
        let g = parse_grammar(&text).with_context(|| format!("{name}"))?;
        Ok(Loaded { grammar: g, origin: None })
    }
}

fn tokens(g: &LigGrammar, input: &str, chars: bool) -> Result<Vec<Term>> {
    let words: Vec<String> = if chars {
        input.chars().filter(|c| !c.is_whitespace()).map(String::from).collect()
    } else {
        input.split_whitespace().map(String::from).collect()
    };
    Ok(g.tokenize(&words)?)
}

fn exit(ok: bool) -> ExitCode {
    ExitCode::from(if ok { 0 } else { 1 })
}

fn print_json(v: &serde_json::Value) {
    outln!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn relation_text(rels: &RelationSet, names: &[String], stack: &[String]) -> String {
    let mut out = String::new();
    for f in relation_families(rels, names, stack) {
        let label = match &f.gamma {
            Some(g) => format!("{} {g}", f.kind),
            None => f.kind.to_string(),
        };
        let pairs: Vec<String> = f.pairs.iter().map(|[a, b]| format!("({a},{b})")).collect();
        out.push_str(&format!("{label:<10} = {{{}}}\n", pairs.join(", ")));
    }
    out
}

fn filter_for(g: &LigGrammar, disabled: bool) -> Option<StaticFilter> {
    (!disabled).then(|| static_filter(g))
}

fn pipeline_report(g: &LigGrammar, r: &Recognition, load_ms: f64, count: Option<String>, extract_ms: f64) -> RunReport {
    RunReport {
        grammar: GrammarStats::of(g),
        relations: relation_sizes(&r.relations, &g.stack_symbols),
        forest: Some(ForestStats {
            nonterminals: if r.forest.is_empty() { 0 } else { r.forest.cfg.nonterminals.len() },
            productions: r.forest.cfg.productions.len(),
        }),
        ldg: LdgStats::of(&r.generated, &r.ldg),
        member: r.member,
        count,
        timings_ms: Timings {
            load: load_ms,
            forest: ms(r.timings.forest),
            relations: ms(r.timings.relations),
            ldg: ms(r.timings.ldg),
            reduce: ms(r.timings.reduce),
            extract: extract_ms,
        },
    }
}

fn cmd_check(args: &GrammarArgs, json: bool, style: Style) -> Result<ExitCode> {
    let t0 = Instant::now();
    let loaded = load(args)?;
    let g = &loaded.grammar;
    let t1 = Instant::now();
    let rels = closure(&level1(g));
    let t2 = Instant::now();
    let generated = build_ldg(g, &rels);
    let t3 = Instant::now();
    let ldg = reduce_ldg(&generated);
    let t4 = Instant::now();
    let nonempty = !ldg.is_empty();
    if json {
        let report = RunReport {
            grammar: GrammarStats::of(g),
            relations: relation_sizes(&rels, &g.stack_symbols),
            forest: None,
            ldg: LdgStats::of(&generated, &ldg),
            member: nonempty,
            count: None,
            timings_ms: Timings {
                load: ms(t1 - t0),
                relations: ms(t2 - t1),
                ldg: ms(t3 - t2),
                reduce: ms(t4 - t3),
                ..Timings::default()
            },
        };
        print_json(&json!({
            "report": report,
            "normalized": loaded.origin.is_some(),
            "relations": relation_families(&rels, &g.nonterminals, &g.stack_symbols),
            "ldg": cfg_productions(&ldg.cfg, Some(&ldg.forms)),
            "nonempty": nonempty,
        }));
        return Ok(exit(nonempty));
    }
    if let Some(origin) = &loaded.origin {
        let fresh = origin.iter().filter(|o| o.is_none()).count();
        outln!("normalized: {} productions ({fresh} fresh)", g.productions.len());
        out!("{}", g.render());
        outln!();
    }
    outln!("{}", style.heading("relations"));
    out!("{}", relation_text(&rels, &g.nonterminals, &g.stack_symbols));
    outln!("{}", style.heading(&format!("reduced LDG ({} productions)", ldg.forms.len())));
    out!("{ldg}");
    if nonempty {
        outln!("language: {}", style.good("nonempty"));
    } else {
        outln!("language: {}", style.bad("empty"));
    }
    Ok(exit(nonempty))
}

#[allow(clippy::too_many_arguments)]
fn cmd_parse(
    args: &GrammarArgs,
    input: &InputArgs,
    enumerate: usize,
    max_len: usize,
    show_count: bool,
    trees: bool,
    json: bool,
    dot: bool,
    no_filter: bool,
    style: Style,
) -> Result<ExitCode> {
    let t0 = Instant::now();
    let loaded = load(args)?;
    let g = &loaded.grammar;
    let x = tokens(g, &input.input, input.chars)?;
    let filter = filter_for(g, no_filter);
    let load_ms = ms(t0.elapsed());
    let r = recognize(g, &x, filter.as_ref());
    let t1 = Instant::now();
    let count = count_sentences(&r.ldg.cfg);
    let k = if (trees || dot) && enumerate == 0 { 1 } else { enumerate };
    let sentences = enumerate_sentences(&r.ldg.cfg, k, max_len)?;
    let mut found = Vec::new();
    for s in &sentences {
        let d = map_to_source(&s.terminals, &r.liged.provenance);
        let t = sentence_to_tree(g, &d).with_context(|| format!("derivation {}", d.display(g)))?;
        if replay(&t) != x {
            bail!("derivation {} does not yield the input", d.display(g));
        }
        found.push((s, d, t));
    }
    let extract_ms = ms(t1.elapsed());
    let report = pipeline_report(g, &r, load_ms, Some(count.to_string()), extract_ms);

    if json {
        let derivations: Vec<_> = found
            .iter()
            .map(|(s, d, t)| {
                let mut v = json!({
                    "sentence": s.terminals.iter().map(|&i| r.ldg.cfg.terminals[i].clone()).collect::<Vec<_>>(),
                    "derivation": loaded.source_names(d),
                    "ldg_steps": s.productions.len(),
                });
                if loaded.origin.is_some() {
                    v["normalized"] = json!(d.names(g));
                }
                if trees {
                    v["tree"] = serde_json::to_value(tree_json(t, g)).expect("serializable");
                }
                v
            })
            .collect();
        print_json(&json!({
            "input": x.iter().map(|&t| g.term_name(t)).collect::<Vec<_>>(),
            "report": report,
            "ldg": cfg_productions(&r.ldg.cfg, Some(&r.ldg.forms)),
            "derivations": derivations,
        }));
        return Ok(exit(r.member));
    }
    if dot {
        for (_, _, t) in &found {
            out!("{}", t.to_dot(g));
        }
        return Ok(exit(r.member));
    }
    let input_text: Vec<&str> = x.iter().map(|&t| g.term_name(t)).collect();
    outln!("input: {}", input_text.join(" "));
    if r.member {
        outln!("member: {}", style.good("yes"));
    } else {
        outln!("member: {}", style.bad("no"));
    }
    if show_count || enumerate > 0 || !r.member {
        outln!("count: {count}");
    }
    if !found.is_empty() {
        outln!("{}", style.heading("derivations (last production first)"));
        for (i, (_, d, t)) in found.iter().enumerate() {
            outln!("{:>4}. {}", i + 1, loaded.source_names(d).join(" "));
            if trees {
                for line in t.render(g).lines() {
                    outln!("      {line}");
                }
            }
        }
    }
    Ok(exit(r.member))
}

fn cmd_relations(args: &GrammarArgs, input: Option<&str>, chars: bool, json: bool) -> Result<ExitCode> {
    let g = load(args)?.grammar;
    let (rels, names) = match input {
        None => (closure(&level1(&g)), g.nonterminals.clone()),
        Some(s) => {
            let r = recognize(&g, &tokens(&g, s, chars)?, None);
            let names = r.liged.lig.nonterminals.clone();
            (r.relations, names)
        }
    };
    if json {
        print_json(&json!(relation_families(&rels, &names, &g.stack_symbols)));
    } else {
        out!("{}", relation_text(&rels, &names, &g.stack_symbols));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_forest(args: &GrammarArgs, input: &InputArgs, format: Format, style: Style) -> Result<ExitCode> {
    let g = load(args)?.grammar;
    let x = tokens(&g, &input.input, input.chars)?;
    let r = recognize(&g, &x, None);
    let f = &r.forest;
    let nonempty = !f.is_empty();
    match format {
        Format::Dot => out!("{}", forest_to_dot(f)),
        Format::Json => {
            let nonterminals: Vec<_> = f
                .items
                .iter()
                .zip(&f.cfg.nonterminals)
                .map(|(it, name)| json!({"name": name, "base": g.nt_name(it.base), "from": it.from, "to": it.to}))
                .collect();
            let productions: Vec<_> = cfg_productions(&f.cfg, None)
                .into_iter()
                .zip(&f.provenance)
                .enumerate()
                .map(|(i, (p, prov))| {
                    json!({
                        "name": p.name,
                        "lhs": p.lhs,
                        "rhs": p.rhs,
                        "source": g.prod_name(prov.source),
                        "states": prov.states,
                        "liged": r.liged.lig.display_production(ProdId(i)),
                    })
                })
                .collect();
            print_json(&json!({
                "start": f.cfg.nonterminals[f.cfg.start],
                "nonterminals": if nonempty { nonterminals } else { Vec::new() },
                "productions": productions,
            }));
        }
        Format::Text => {
            outln!("{}", style.heading(&format!("shared forest ({} productions)", f.cfg.productions.len())));
            out!("{f}");
            outln!("{}", style.heading("LIGed forest"));
            for id in r.liged.lig.production_ids() {
                outln!("{}", r.liged.lig.display_production(id));
            }
        }
    }
    Ok(exit(nonempty))
}

fn ldg_output(ldg: &Ldg, json: bool) {
    if json {
        print_json(&json!({
            "start": ldg.cfg.nonterminals[ldg.cfg.start],
            "productions": cfg_productions(&ldg.cfg, Some(&ldg.forms)),
            "forms": ldg.form_counts(),
        }));
    } else {
        out!("{ldg}");
    }
}

fn cmd_ldg(args: &GrammarArgs, input: Option<&str>, chars: bool, no_filter: bool, json: bool) -> Result<ExitCode> {
    let g = load(args)?.grammar;
    let ldg = match input {
        None => reduce_ldg(&build_ldg(&g, &closure(&level1(&g)))),
        Some(s) => {
            let x = tokens(&g, s, chars)?;
            recognize(&g, &x, filter_for(&g, no_filter).as_ref()).ldg
        }
    };
    ldg_output(&ldg, json);
    Ok(exit(!ldg.is_empty()))
}

fn cmd_oracle(
    args: &GrammarArgs,
    input: &InputArgs,
    max_nodes: usize,
    max_stack: usize,
    trees: bool,
    json: bool,
) -> Result<ExitCode> {
    let loaded = load(args)?;
    let g = &loaded.grammar;
    let x = tokens(g, &input.input, input.chars)?;
    let cfg = OracleConfig::new(max_nodes, max_stack)?;
    let lang = oracle_language(g, &x, cfg);
    let found = !lang.trees.is_empty();
    if json {
        let derivations: Vec<_> = lang.derivations.iter().map(|d| loaded.source_names(d)).collect();
        let mut v = json!({
            "complete_within": {"max_nodes": max_nodes, "max_stack": max_stack},
            "trees": lang.trees.len(),
            "derivations": derivations,
        });
        if trees {
            v["parse_trees"] = json!(lang.trees.iter().map(|t| tree_json(t, g)).collect::<Vec<_>>());
        }
        print_json(&v);
        return Ok(exit(found));
    }
    outln!("complete within bound: max_nodes={max_nodes} max_stack={max_stack}");
    outln!("trees: {}", lang.trees.len());
    for d in &lang.derivations {
        outln!("  {}", loaded.source_names(d).join(" "));
    }
    if trees {
        for t in &lang.trees {
            outln!();
            out!("{}", t.render(g));
        }
    }
    Ok(exit(found))
}

fn cmd_bench(args: &GrammarArgs, template: &str, from: usize, to: usize, step: usize, no_filter: bool) -> Result<ExitCode> {
    if step == 0 {
        bail!("--step must be positive");
    }
    let g = load(args)?.grammar;
    let filter = filter_for(&g, no_filter);
    let rows = bench(&g, template, (from..=to).step_by(step), filter.as_ref())?;
    out!("{}", to_csv(&rows));
    Ok(ExitCode::SUCCESS)
}

/// All strings over `alphabet` of length at most `max`, shortest first.
fn all_inputs(alphabet: usize, max: usize) -> Vec<Vec<Term>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for w in &layer {
            for t in 0..alphabet {
                let mut v: Vec<Term> = w.clone();
                v.push(Term(t));
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn cmd_fuzz(seed: u64, grammars: u64, max_input: usize, bound: usize, style: Style) -> Result<ExitCode> {
    let cfg = OracleConfig::new(bound.max(1), bound.max(1))?;
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    for s in seed..seed + grammars {
        let g = random_lig(s, &RandomLigConfig::default());
        for x in all_inputs(g.terminals.len(), max_input) {
            let r = recognize(&g, &x, None);
            let sentences = enumerate_sentences(&r.ldg.cfg, usize::MAX, bound)?;
            let ldg: BTreeSet<Derivation> = sentences
                .iter()
                .map(|s| map_to_source(&s.terminals, &r.liged.provenance))
                .collect();
            let oracle = oracle_language(&g, &x, cfg).derivations;
            checked += 1;
            if ldg != oracle || ldg.len() != sentences.len() {
                mismatches += 1;
                let text: Vec<&str> = x.iter().map(|&t| g.term_name(t)).collect();
                outln!("{} seed {s} input \"{}\"", style.bad("mismatch"), text.join(" "));
                outln!("  ldg:    {:?}", ldg.iter().map(|d| d.display(&g)).collect::<Vec<_>>());
                outln!("  oracle: {:?}", oracle.iter().map(|d| d.display(&g)).collect::<Vec<_>>());
            }
        }
    }
    let verdict = if mismatches == 0 { style.good("ok") } else { style.bad("FAILED") };
    outln!("{verdict}: {checked} (grammar, input) pairs, {mismatches} mismatches, derivations up to length {bound}");
    Ok(exit(mismatches == 0))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let style = Style::detect();
    match cli.command {
        Command::Check { g, json } => cmd_check(&g, json, style),
        Command::Parse {
            g,
            input,
            enumerate,
            max_len,
            count,
            trees,
            json,
            dot,
            no_static_filter,
        } => cmd_parse(&g, &input, enumerate, max_len, count, trees, json, dot, no_static_filter, style),
        Command::Relations { g, input, chars, json } => cmd_relations(&g, input.as_deref(), chars, json),
        Command::Forest { g, input, format } => cmd_forest(&g, &input, format, style),
        Command::Ldg {
            g,
            input,
            chars,
            no_static_filter,
            json,
        } => cmd_ldg(&g, input.as_deref(), chars, no_static_filter, json),
        Command::Oracle {
            g,
            input,
            max_nodes,
            max_stack,
            trees,
            json,
        } => cmd_oracle(&g, &input, max_nodes, max_stack, trees, json),
        Command::Bench {
            g,
            template,
            from,
            to,
            step,
            no_static_filter,
        } => cmd_bench(&g, &template, from, to, step, no_static_filter),
        Command::Fuzz {
            grammars,
            max_input,
            bound,
        } => cmd_fuzz(cli.seed, grammars, max_input, bound, style),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
