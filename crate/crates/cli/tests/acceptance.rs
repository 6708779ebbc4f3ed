//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use logic_sketch::eval::{
    bootstrap_all, bootstrap_ci, chi2_p_value, confusion_counts, mcnemar_counts, metrics,
    synthetic_corpus, BootstrapConfig, ConfusionCounts, Statistic,
};
use logic_sketch::inference::parse_strict_json;
use logic_sketch::prompt::{exemplar_pair, render, Strategy, TaskInstance};
use logic_sketch::sketch::run_item;
use logic_sketch::store::{Value, VariableSpec};
use logic_sketch::validator::{
    check_wellformed, truth_table_oracle, validate_if_then, validate_normal_form, Clause,
    IfThenChain, NormalFormRuleSet, Rule,
};
use logic_sketch::{
    parse_sketch, BoolExpr, DatasetItem, JaccardScorer, Label, SketchDocument, TaskKind, Validator,
};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn load_fixture(name: &str) -> SketchDocument {
    let src = std::fs::read_to_string(fixture(name)).expect("fixture readable");
    parse_sketch(&src).expect("fixture parses")
}

fn lsketch(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_lsketch"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "lsketch {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn write_corpus(dir: &Path, items: &[DatasetItem]) -> PathBuf {
    let path = dir.join("corpus.jsonl");
    let body: String = items
        .iter()
        .map(|i| serde_json::to_string(i).unwrap() + "\n")
        .collect();
    std::fs::write(&path, body).unwrap();
    path
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    ensure!(
        elapsed < Duration::from_secs(limit_secs),
        "took {elapsed:.2?}, limit {limit_secs}s"
    );
    Ok(())
}

fn literal(rng: &mut ChaCha8Rng, vars: &[String]) -> BoolExpr {
    let v = BoolExpr::var(vars.choose(rng).unwrap().clone());
    if rng.random_bool(0.4) {
        BoolExpr::not(v)
    } else {
        v
    }
}

fn random_expr(rng: &mut ChaCha8Rng, vars: &[String], depth: u32) -> BoolExpr {
    if depth == 0 || rng.random_bool(0.3) {
        return match rng.random_range(0..20) {
            0 => BoolExpr::Const(rng.random_bool(0.5)),
            _ => literal(rng, vars),
        };
    }
    match rng.random_range(0..5) {
        0 => BoolExpr::not(random_expr(rng, vars, depth - 1)),
        1 | 2 => BoolExpr::and(
            random_expr(rng, vars, depth - 1),
            random_expr(rng, vars, depth - 1),
        ),
        _ => BoolExpr::or(
            random_expr(rng, vars, depth - 1),
            random_expr(rng, vars, depth - 1),
        ),
    }
}

fn random_normal_form(rng: &mut ChaCha8Rng, vars: &[String]) -> BoolExpr {
    let cnf = rng.random_bool(0.5);
    let groups: Vec<BoolExpr> = (0..rng.random_range(1..=4))
        .map(|_| {
            let lits: Vec<BoolExpr> = (0..rng.random_range(1..=4))
                .map(|_| literal(rng, vars))
                .collect();
            if cnf {
                BoolExpr::any(lits)
            } else {
                BoolExpr::all(lits)
            }
        })
        .collect();
    if cnf {
        BoolExpr::all(groups)
    } else {
        BoolExpr::any(groups)
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let labels: Vec<Label> = ["0", "1", "2"].into_iter().map(Label::new).collect();
    let mut assignments = 0usize;
    for n in 0..500 {
        let k = rng.random_range(1..=12);
        let vars: Vec<String> = (0..k).map(|i| format!("v{i}")).collect();
        let specs: Vec<VariableSpec> = vars.iter().map(VariableSpec::boolean).collect();
        let clause_count = rng.random_range(1..=5);
        let default = labels.choose(&mut rng).unwrap().clone();
        let validator = if n % 2 == 0 {
            Validator::IfThen(IfThenChain {
                clauses: (0..clause_count)
                    .map(|_| Clause {
                        guard: random_expr(&mut rng, &vars, 4),
                        label: labels.choose(&mut rng).unwrap().clone(),
                    })
                    .collect(),
                default,
            })
        } else {
            Validator::NormalForm(NormalFormRuleSet {
                rules: (0..clause_count)
                    .map(|_| Rule {
                        formula: random_normal_form(&mut rng, &vars),
                        label: labels.choose(&mut rng).unwrap().clone(),
                    })
                    .collect(),
                default,
            })
        };
        check_wellformed(&validator, &specs, &labels)
            .map_err(|d| format!("generated validator {n} is not well-formed: {d:?}"))?;
        let table = truth_table_oracle(&validator, &specs).map_err(|e| e.to_string())?;
        ensure!(
            table.len() == 1 << k,
            "validator {n}: table has {} rows",
            table.len()
        );
        for m in 0..table.len() {
            let state = table.state(m);
            let got = match &validator {
                Validator::IfThen(chain) => validate_if_then(chain, &state),
                Validator::NormalForm(rules) => validate_normal_form(rules, &state),
            }
            .map_err(|e| e.to_string())?;
            ensure!(
                &got == table.label(m),
                "validator {n}, assignment {m:#b}: evaluator {got}, oracle {}",
                table.label(m)
            );
        }
        assignments += table.len();
    }
    within(start.elapsed(), 30)?;
    Ok(format!(
        "500 validators, {assignments} assignments, {:.2?}",
        start.elapsed()
    ))
}

fn criterion_2() -> Outcome {
    let mut rows = Vec::new();
    for name in ["ade_relation.sketch", "ade_sentence.sketch"] {
        let doc = load_fixture(name);
        let table =
            truth_table_oracle(&doc.validator, &doc.variables).map_err(|e| e.to_string())?;
        ensure!(table.len() == 64, "{name}: {} assignments", table.len());
        let one = Label::new("1");
        let mut positives = 0;
        for m in 0..64 {
            let state = table.state(m);
            let b = |v: &str| state.get(v) == Some(&Value::Bool(true));
            let expected = b("drug")
                && b("effect")
                && b("scope")
                && !b("negated")
                && (b("explicit") || b("temporal"));
            let decided = doc.validator.decide(&state).map_err(|e| e.to_string())?;
            ensure!(
                (decided == one) == expected,
                "{name}: assignment {m:#08b} decided {decided}"
            );
            ensure!(
                table.label(m) == &decided,
                "{name}: oracle disagrees at {m:#08b}"
            );
            positives += usize::from(expected);
        }
        ensure!(
            positives == 3 && table.count(&one) == 3,
            "{name}: {positives} positive assignments"
        );
        rows.push(format!("{name} 3/64"));
    }
    Ok(rows.join(", "))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = write_corpus(dir.path(), &synthetic_corpus(200, 3, TaskKind::Relation));
    let sketch = fixture("ade_relation.sketch");
    let run = |jobs: &str| {
        lsketch(&[
            "run",
            "--sketch",
            sketch.to_str().unwrap(),
            "--data",
            data.to_str().unwrap(),
            "--jobs",
            jobs,
        ])
    };
    let first = run("1")?;
    let second = run("1")?;
    let parallel = run("8")?;
    ensure!(first == second, "two --jobs 1 runs differ");
    ensure!(first == parallel, "--jobs 1 and --jobs 8 differ");
    let text = String::from_utf8(first).map_err(|e| e.to_string())?;
    ensure!(
        text.lines().count() == 200,
        "{} prediction lines",
        text.lines().count()
    );
    let traced = text
        .lines()
        .filter(|l| {
            serde_json::from_str::<serde_json::Value>(l)
                .is_ok_and(|v| v["trace"].as_array().is_some_and(|t| t.len() == 6))
        })
        .count();
    ensure!(traced == 200, "only {traced} records carry a full trace");
    within(start.elapsed(), 10)?;
    Ok(format!(
        "200 items, 3 runs byte-identical, {:.2?}",
        start.elapsed()
    ))
}

fn criterion_4() -> Outcome {
    let doc = load_fixture("ade_sentence.sketch");
    let cases = [
        ("The patient developed rash after starting amoxicillin.", 1),
        (
            "The patient did not develop rash after starting amoxicillin.",
            0,
        ),
        ("Amoxicillin did not cause any rash in the patient.", 0),
        ("", 0),
    ];
    for (text, want) in cases {
        let item = DatasetItem::sentence("x", text, want);
        let result = run_item(&doc, &item, &JaccardScorer).map_err(|e| e.to_string())?;
        ensure!(
            result.label.as_binary() == Some(want),
            "{text:?} -> {}",
            result.label
        );
    }
    Ok(format!("{} sentences", cases.len()))
}

fn criterion_5() -> Outcome {
    let r = mcnemar_counts(10, 2);
    ensure!(
        (r.chi2 - 49.0 / 12.0).abs() < 1e-12,
        "(10,2) chi2 {}",
        r.chi2
    );
    let r = mcnemar_counts(5, 5);
    ensure!((r.chi2 - 0.1).abs() < 1e-12, "(5,5) chi2 {}", r.chi2);
    let r = mcnemar_counts(0, 0);
    ensure!(r.chi2 == 0.0 && r.p_value == 1.0, "(0,0) gives {r:?}");
    let p05 = chi2_p_value(3.841).map_err(|e| e.to_string())?;
    let p01 = chi2_p_value(6.635).map_err(|e| e.to_string())?;
    ensure!((p05 - 0.05).abs() <= 5e-4, "p(3.841) = {p05}");
    ensure!((p01 - 0.01).abs() <= 5e-4, "p(6.635) = {p01}");
    Ok(format!("p(3.841)={p05:.4} p(6.635)={p01:.4}"))
}

fn criterion_6() -> Outcome {
    let m = metrics(&ConfusionCounts {
        tp: 1,
        fp: 1,
        fn_: 1,
        tn: 1,
    })
    .map_err(|e| e.to_string())?;
    for s in Statistic::ALL {
        ensure!(s.of(&m) == 0.5, "(1,1,1,1) {} = {}", s.name(), s.of(&m));
    }
    let gold = [1, 0, 1, 1, 0, 0, 1];
    let m = metrics(&confusion_counts(&gold, &gold).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    for s in Statistic::ALL {
        ensure!(
            s.of(&m) == 1.0,
            "perfect predictor {} = {}",
            s.name(),
            s.of(&m)
        );
    }
    let negatives = [0u8; 5];
    let m = metrics(&confusion_counts(&negatives, &negatives).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure!(
        m.precision == 0.0 && m.recall == 0.0 && m.f1 == 0.0 && m.accuracy == 1.0,
        "no positives gives {m:?}"
    );
    let m = metrics(&confusion_counts(&[1, 1], &[0, 0]).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure!(
        m.precision == 0.0 && m.f1 == 0.0,
        "no predicted positives gives {m:?}"
    );
    Ok("exact values and zero-denominator convention".into())
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let gold: Vec<u8> = (0..300).map(|_| rng.random_range(0..2)).collect();
    let pred: Vec<u8> = gold
        .iter()
        .map(|&g| if rng.random_bool(0.75) { g } else { 1 - g })
        .collect();
    let a = bootstrap_all(&gold, &pred, BootstrapConfig::new(9)).map_err(|e| e.to_string())?;
    let b = bootstrap_all(&gold, &pred, BootstrapConfig::new(9)).map_err(|e| e.to_string())?;
    ensure!(a == b, "same seed gave different intervals");
    for ci in bootstrap_all(&gold, &gold, BootstrapConfig::new(9)).map_err(|e| e.to_string())? {
        ensure!(
            ci.lower == 1.0 && ci.upper == 1.0,
            "perfect predictor {}: [{}, {}]",
            ci.statistic.name(),
            ci.lower,
            ci.upper
        );
    }

    let trials = 200;
    let mut covered = 0;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + t);
        let gold: Vec<u8> = (0..1000).map(|_| rng.random_range(0..2)).collect();
        let pred: Vec<u8> = gold
            .iter()
            .map(|&g| if rng.random_bool(0.8) { g } else { 1 - g })
            .collect();
        let ci = bootstrap_ci(&gold, &pred, Statistic::Accuracy, BootstrapConfig::new(t))
            .map_err(|e| e.to_string())?;
        if ci.lower <= 0.8 && 0.8 <= ci.upper {
            covered += 1;
        }
    }
    let rate = covered as f64 / trials as f64;
    ensure!(rate >= 0.90, "coverage {rate:.3} over {trials} trials");
    within(start.elapsed(), 60)?;
    Ok(format!(
        "coverage {covered}/{trials}, {:.2?}",
        start.elapsed()
    ))
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = write_corpus(dir.path(), &synthetic_corpus(500, 8, TaskKind::Relation));
    let sketch = fixture("ade_relation.sketch");
    let (sketch, data) = (sketch.to_str().unwrap(), data.to_str().unwrap());
    let direct = lsketch(&["run", "--sketch", sketch, "--data", data, "--no-trace"])?;
    let oracle = lsketch(&[
        "classify",
        "--sketch",
        sketch,
        "--data",
        data,
        "--backend",
        "oracle",
        "--strategy",
        "lsp",
    ])?;
    let labels = |bytes: &[u8]| -> Vec<(String, i64)> {
        String::from_utf8_lossy(bytes)
            .lines()
            .map(|l| {
                let v: serde_json::Value = serde_json::from_str(l).unwrap();
                (
                    v["id"].as_str().unwrap().to_string(),
                    v["label"].as_i64().unwrap(),
                )
            })
            .collect()
    };
    let (a, b) = (labels(&direct), labels(&oracle));
    ensure!(
        a.len() == 500 && b.len() == 500,
        "{} and {} records",
        a.len(),
        b.len()
    );
    let agree = a.iter().zip(&b).filter(|(x, y)| x == y).count();
    ensure!(agree == 500, "agreement {agree}/500");
    let positives = a.iter().filter(|(_, l)| *l == 1).count();
    Ok(format!("500/500 agree ({positives} positive)"))
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect()
}

fn criterion_9() -> Outcome {
    let (example, _) = exemplar_pair();
    let sentence = TaskInstance::sentence(example.text.clone());
    let doc = load_fixture("ade_relation.sketch");
    let block = r#"Sentence: "The patient developed rash after starting amoxicillin.""#;

    let zero = render(Strategy::ZeroShot, None, &sentence)
        .map_err(|e| e.to_string())?
        .text;
    for needle in [
        "Classify whether the sentence reports that the drug caused the effect.",
        "1 or 0.",
        block,
    ] {
        ensure!(zero.contains(needle), "zero-shot lacks {needle:?}");
    }
    let brief = render(Strategy::Brief, None, &sentence)
        .map_err(|e| e.to_string())?
        .text;
    let brief_line = r#"Label 1 if the drug is present, the effect is present, the effect is due to the drug, and the statement is not negated. Output JSON: {"label": ...}."#;
    ensure!(
        brief.contains(brief_line) && brief.contains(block),
        "brief prompt differs"
    );
    let cot = render(Strategy::Cot, None, &sentence)
        .map_err(|e| e.to_string())?
        .text;
    let cot_line = "Think step by step. Does the sentence mention the drug? Does it describe the effect? Does it link them? Finally output JSON with a label based only on the final reasoning.";
    ensure!(
        cot.contains(cot_line) && cot.contains(block),
        "CoT prompt differs"
    );

    let lsp = render(Strategy::Lsp, Some(&doc), &example)
        .map_err(|e| e.to_string())?
        .text;
    let questions = [
        "Answer the following binary questions silently.",
        "1. Is the DRUG mentioned?",
        "2. Is the EFFECT mentioned?",
        "3. Is the statement about the patient?",
        "4. Is there an explicit causal link?",
        "5. If not, is there a temporal link?",
        r#"Return JSON: {"label": ..., "evidence": ...}."#,
    ];
    for q in questions {
        ensure!(lsp.contains(q), "LSP prompt lacks {q:?}");
    }
    ensure!(
        !lsp.contains("6. "),
        "LSP checklist has more than five questions"
    );
    ensure!(
        squash(&lsp).contains(&squash(
            "Set label 1 if and only if: (1)& (2)& (3)& ((4) OR (5))& no negation."
        )),
        "LSP rule differs"
    );
    ensure!(lsp.contains(block), "LSP prompt lacks the sentence");
    let schema = lsp.matches(r#"{"label""#).count();
    ensure!(schema == 1, "LSP schema instruction appears {schema} times");
    Ok("zero-shot, brief, CoT, LSP".into())
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let fragments: [&[u8]; 10] = [
        b"{",
        b"}",
        b"\"label\"",
        b":",
        b"1",
        b"0",
        b"```json\n",
        b"```",
        b"true",
        b"\"evidence\": \"x\"",
    ];
    let mut tally = [0usize; 3];
    for i in 0..10_000 {
        let len = rng.random_range(0..200);
        let bytes: Vec<u8> = if i % 2 == 0 {
            (0..len).map(|_| rng.random()).collect()
        } else {
            (0..len / 8)
                .flat_map(|_| {
                    if rng.random_bool(0.7) {
                        fragments.choose(&mut rng).unwrap().to_vec()
                    } else {
                        vec![rng.random()]
                    }
                })
                .collect()
        };
        let raw = String::from_utf8_lossy(&bytes).into_owned();
        let bare = rng.random_bool(0.5);
        let parsed = panic::catch_unwind(|| parse_strict_json(&raw, bare))
            .map_err(|_| format!("parser panicked on {bytes:?}"))?;
        match parsed.label {
            Some(0) => tally[0] += 1,
            Some(1) => tally[1] += 1,
            None => tally[2] += 1,
            Some(other) => return Err(format!("label {other} from {raw:?}")),
        }
    }
    Ok(format!(
        "10000 inputs: {} zero, {} one, {} invalid",
        tally[0], tally[1], tally[2]
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("validator/oracle equivalence", criterion_1),
        ("fixture truth table", criterion_2),
        ("end-to-end determinism", criterion_3),
        ("sentence spot checks", criterion_4),
        ("McNemar exactness", criterion_5),
        ("metrics exactness", criterion_6),
        ("bootstrap reproducibility and coverage", criterion_7),
        ("oracle round-trip", criterion_8),
        ("prompt fidelity", criterion_9),
        ("parse totality fuzz", criterion_10),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
