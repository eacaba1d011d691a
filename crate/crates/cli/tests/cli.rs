use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("../../fixtures");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ligforge"))
        .args(args)
        .env("LIGFORGE_COLOR", "0")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn json(args: &[&str]) -> Value {
    let o = run(args);
    assert!(code(&o) <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("valid json")
}

fn strings(v: &Value) -> Vec<String> {
    v.as_array().unwrap().iter().map(|x| x.as_str().unwrap().to_string()).collect()
}

#[test]
fn check_exit_codes() {
    assert_eq!(code(&run(&["check", &fixture("wcw.lig")])), 0);
    assert_eq!(code(&run(&["check", &fixture("anbncn.lig")])), 0);
    assert_eq!(code(&run(&["check", &fixture("push_only.lig")])), 1);
    let strict = run(&["check", &fixture("relaxed.lig")]);
    assert_eq!(code(&strict), 2);
    assert!(String::from_utf8_lossy(&strict.stderr).contains("not in normal form"));
    assert_eq!(code(&run(&["check", "--relaxed", &fixture("relaxed.lig")])), 0);
    assert_eq!(code(&run(&["check", "/nonexistent/grammar.lig"])), 2);
}

#[test]
fn malformed_grammar_is_reported() {
    let dir = std::env::temp_dir().join(format!("ligforge-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.lig");
    std::fs::write(&path, "%start S\nr1: S(.. -> a\n").unwrap();
    let o = run(&["check", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn parse_text_and_exit_codes() {
    let g = fixture("wcw.lig");
    let o = run(&["parse", &g, "c c c", "--enumerate", "3", "--count"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("r8 r7 r4 r3"), "{text}");
    assert!(text.contains("count: 1"), "{text}");
    assert!(!text.contains('\x1b'));
    assert_eq!(code(&run(&["parse", &g, "c c"])), 1);
    assert_eq!(code(&run(&["parse", &g, ""])), 1);
    assert_eq!(code(&run(&["parse", &g, "c z c"])), 2);
    assert_eq!(code(&run(&["parse", &g, "c", "--json", "--dot"])), 2);
}

#[test]
fn chars_mode_matches_tokens() {
    let g = fixture("wcw.lig");
    let a = stdout(&run(&["parse", &g, "a b c a b", "--enumerate", "5"]));
    let b = stdout(&run(&["parse", &g, "abcab", "--chars", "--enumerate", "5"]));
    assert_eq!(a, b);
    assert!(a.contains("member: yes"));
}

#[test]
fn cyclic_count_is_infinite() {
    let o = run(&["parse", &fixture("cyclic.lig"), "a", "--count", "--enumerate", "3"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("count: infinite"));
    assert!(text.contains("r4 r3 r2 r1"));
}

#[test]
fn parse_json_is_consistent() {
    let v = json(&["parse", &fixture("wcw.lig"), "a c a", "--enumerate", "10", "--trees", "--json"]);
    assert_eq!(strings(&v["input"]), ["a", "c", "a"]);
    let report = &v["report"];
    assert_eq!(report["member"], true);

    let ldg = v["ldg"].as_array().unwrap();
    assert_eq!(ldg.len() as u64, report["ldg"]["productions"].as_u64().unwrap());
    let mut forms = [0u64; 9];
    for p in ldg {
        forms[p["form"].as_u64().unwrap() as usize - 1] += 1;
    }
    let reported: Vec<u64> = report["ldg"]["forms"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
    assert_eq!(forms.to_vec(), reported);
    let lhs: BTreeSet<&str> = ldg.iter().map(|p| p["lhs"].as_str().unwrap()).collect();
    assert_eq!(lhs.len() as u64, report["ldg"]["nonterminals"].as_u64().unwrap());

    let ders = v["derivations"].as_array().unwrap();
    assert_eq!(ders.len(), 1);
    let d = &ders[0];
    assert_eq!(strings(&d["derivation"]), ["r8", "r5", "r4", "r1"]);
    assert_eq!(d["tree"]["object"], "S()");
    assert_eq!(d["tree"]["production"], "r1");
}

#[test]
fn relaxed_parse_reports_source_productions() {
    let g = fixture("relaxed.lig");
    let v = json(&["parse", "--relaxed", &g, "a b x y z c", "--enumerate", "2", "--json"]);
    assert_eq!(v["report"]["member"], true);
    let d = &v["derivations"][0];
    assert_eq!(strings(&d["derivation"]), ["r4", "r3", "r2", "r1"]);
    assert!(d["normalized"].as_array().unwrap().len() > 4);
}

#[test]
fn forest_formats() {
    let g = fixture("wcw.lig");
    let text = stdout(&run(&["forest", &g, "c c c"]));
    assert!(text.contains("r3^1"), "{text}");
    assert_eq!(text.lines().filter(|l| l.contains(" = ")).count(), 11);
    assert!(text.contains("r3^1: S[0,3](..) -> S[0,2](..gc) \"c\""));

    let v = json(&["forest", &g, "c c c", "--format", "json"]);
    assert_eq!(v["productions"].as_array().unwrap().len(), 11);
    assert_eq!(v["nonterminals"][0]["name"], "S[0,3]");
    let p = &v["productions"][0];
    assert_eq!((p["name"].as_str(), p["source"].as_str()), (Some("r3^1"), Some("r3")));

    let dot = stdout(&run(&["forest", &g, "c c c", "--format", "dot"]));
    assert!(dot.starts_with("digraph"));
    assert!(dot.trim_end().ends_with('}'));
}

#[test]
fn ldg_and_relations() {
    let g = fixture("wcw.lig");
    let v = json(&["ldg", &g, "--json"]);
    assert_eq!(v["productions"].as_array().unwrap().len(), 9);
    let text = stdout(&run(&["ldg", &g]));
    assert!(text.contains("[S EQ+ T]"));

    let rels = json(&["relations", &g, "--json"]);
    let kinds: BTreeSet<&str> = rels.as_array().unwrap().iter().map(|f| f["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, BTreeSet::from(["EQ1", "PUSH1", "POP1", "EQ+", "SPINE", "POP+"]));
    let forest_rels = stdout(&run(&["relations", &g, "ccc", "--chars"]));
    assert!(forest_rels.contains("S[0,3]"));
}

#[test]
fn oracle_agrees_with_parse() {
    let g = fixture("wcw.lig");
    for input in ["c", "a c a", "b a c b a", "a c b", "c c c"] {
        let o = json(&["oracle", &g, input, "--max-nodes", "14", "--max-stack", "4", "--json"]);
        let p = json(&["parse", &g, input, "--enumerate", "50", "--json"]);
        let from_oracle: BTreeSet<Vec<String>> =
            o["derivations"].as_array().unwrap().iter().map(strings).collect();
        let from_parse: BTreeSet<Vec<String>> =
            p["derivations"].as_array().unwrap().iter().map(|d| strings(&d["derivation"])).collect();
        assert_eq!(from_oracle, from_parse, "{input}");
    }
    assert_eq!(code(&run(&["oracle", &g, "c", "--max-nodes", "0", "--max-stack", "1"])), 2);
}

#[test]
fn bench_csv() {
    let o = run(&["bench", &fixture("wcw.lig"), "c^n", "--from", "0", "--to", "4"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    let width = lines[0].split(',').count();
    assert!(lines.iter().all(|l| l.split(',').count() == width));
    assert!(lines[1].starts_with("0,0,false,"));
    assert!(lines[2].starts_with("1,1,true,"));
    assert!(lines[4].starts_with("3,3,true,"));
}

#[test]
fn fuzz_finds_no_mismatch() {
    let o = run(&["--seed", "7", "fuzz", "--grammars", "10", "--max-input", "2", "--bound", "6"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("0 mismatches"));
}

#[test]
fn closed_pipe_is_not_an_error() {
    use std::io::Read;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_ligforge"))
        .args(["bench", &fixture("wcw.lig"), "c^n", "--from", "1", "--to", "40"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut first = [0u8; 8];
    child.stdout.as_mut().unwrap().read_exact(&mut first).unwrap();
    drop(child.stdout.take());
    let status = child.wait().unwrap();
    let mut err = String::new();
    child.stderr.take().unwrap().read_to_string(&mut err).unwrap();
    assert!(!err.contains("panicked"), "{err}");
    assert!(status.code().is_some_and(|c| c == 0));
}
