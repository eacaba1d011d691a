//! Size and timing measurements over families of inputs.

use serde::Serialize;

use crate::derive::count_sentences;
use crate::grammar::{LigGrammar, UnknownToken};
use crate::ldg::{recognize, StaticFilter};

/// Expands a whitespace-separated template for one `n`: a token `x^n`
/// stands for `n` copies of `x`, `x^3` for three; other tokens are literal.
pub fn expand_template(template: &str, n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for tok in template.split_whitespace() {
        match tok.rsplit_once('^') {
            Some((sym, rep)) if !sym.is_empty() => {
                let times = if rep == "n" { Some(n) } else { rep.parse().ok() };
                match times {
                    Some(k) => out.extend(std::iter::repeat_n(sym.to_string(), k)),
                    None => out.push(tok.to_string()),
                }
            }
            _ => out.push(tok.to_string()),
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub input_len: usize,
    pub member: bool,
    pub forest_nonterminals: usize,
    pub forest_productions: usize,
    pub ldg_generated: usize,
    pub ldg_productions: usize,
    /// Reduced LDG productions per form (1) to (9).
    pub forms: [usize; 9],
    pub count: String,
    pub forest_ms: f64,
    pub relations_ms: f64,
    pub ldg_ms: f64,
}

pub fn bench(
    lig: &LigGrammar,
    template: &str,
    ns: impl IntoIterator<Item = usize>,
    filter: Option<&StaticFilter>,
) -> Result<Vec<BenchRow>, UnknownToken> {
    let mut rows = Vec::new();
    for n in ns {
        let words = expand_template(template, n);
        let tokens = lig.tokenize(&words)?;
        let r = recognize(lig, &tokens, filter);
        let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
        rows.push(BenchRow {
            n,
            input_len: tokens.len(),
            member: r.member,
            forest_nonterminals: r.forest.cfg.nonterminals.len(),
            forest_productions: r.forest.cfg.productions.len(),
            ldg_generated: r.generated.cfg.productions.len(),
            ldg_productions: r.ldg.cfg.productions.len(),
            forms: r.ldg.form_counts(),
            count: count_sentences(&r.ldg.cfg).to_string(),
            forest_ms: ms(r.timings.forest),
            relations_ms: ms(r.timings.relations),
            ldg_ms: ms(r.timings.ldg + r.timings.reduce),
        });
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "n,input_len,member,forest_nonterminals,forest_productions,ldg_generated,ldg_productions,\
form1,form2,form3,form4,form5,form6,form7,form8,form9,count,forest_ms,relations_ms,ldg_ms";

impl BenchRow {
    pub fn csv(&self) -> String {
        let forms: Vec<String> = self.forms.iter().map(usize::to_string).collect();
        format!(
            "{},{},{},{},{},{},{},{},{},{:.3},{:.3},{:.3}",
            self.n,
            self.input_len,
            self.member,
            self.forest_nonterminals,
            self.forest_productions,
            self.ldg_generated,
            self.ldg_productions,
            forms.join(","),
            self.count,
            self.forest_ms,
            self.relations_ms,
            self.ldg_ms
        )
    }
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;

    #[test]
    fn templates() {
        assert_eq!(expand_template("c^n", 3), ["c", "c", "c"]);
        assert_eq!(expand_template("a^n b^2 c", 1), ["a", "b", "b", "c"]);
        assert!(expand_template("c^n", 0).is_empty());
        assert_eq!(expand_template("x^y ^n", 2), ["x^y", "^n"]);
    }

    #[test]
    fn wcw_sizes_grow() {
        let g = parse_grammar(include_str!("../../../fixtures/wcw.lig")).unwrap();
        let rows = bench(&g, "c^n", [3, 5, 7], None).unwrap();
        assert!(rows.windows(2).all(|w| w[0].ldg_productions <= w[1].ldg_productions));
        assert!(rows.iter().all(|r| r.member));
        let csv = to_csv(&rows);
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), CSV_HEADER.split(',').count());
    }

    #[test]
    fn empty_input_row() {
        let g = parse_grammar(include_str!("../../../fixtures/wcw.lig")).unwrap();
        let rows = bench(&g, "c^n", [0], None).unwrap();
        assert_eq!((rows[0].input_len, rows[0].member, rows[0].ldg_productions), (0, false, 0));
        assert_eq!(rows[0].count, "0");
    }

    #[test]
    fn cyclic_sizes_are_finite() {
        let g = parse_grammar(include_str!("../../../fixtures/cyclic.lig")).unwrap();
        let rows = bench(&g, "a^n", [1], None).unwrap();
        assert_eq!(rows[0].ldg_productions, 5);
        assert_eq!(rows[0].count, "infinite");
    }

    #[test]
    fn unknown_tokens_fail() {
        let g = parse_grammar(include_str!("../../../fixtures/wcw.lig")).unwrap();
        assert!(bench(&g, "z^n", [1], None).is_err());
    }
}
