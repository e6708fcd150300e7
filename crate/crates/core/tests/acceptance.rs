//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use uwl_core::bench::{
    complexity_metrics, from_document, from_flat, from_graph, generate, surrogate, to_flat, to_graph, BenchAction,
    Preset,
};
use uwl_core::lint::{aggregate, completeness_report, Annotations, Category, Counts};
use uwl_core::transcribe::{
    normalize_for_comparison, transcribe, translate_document, Direction, TermKind, TranslateError, TranslationTable,
    UntranslatedTerm, Vocabulary,
};
use uwl_core::{parse, serialize, Document, Object};

type Outcome = Result<String, String>;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn read(rel: &str) -> Result<String, String> {
    std::fs::read_to_string(root().join(rel)).map_err(|e| format!("{rel}: {e}"))
}

fn fixture(case: &str) -> Result<Document, String> {
    parse(&read(&format!("fixtures/case_{case}.json"))?).map_err(|e| format!("case {case}: {e}"))
}

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn fixture_fidelity() -> Outcome {
    let start = Instant::now();
    let vocab = Vocabulary::builtin();
    let english = TranslationTable::english();
    for case in ["a", "b", "c"] {
        let doc = fixture(case)?;
        let got = transcribe(&doc, &vocab, &english).map_err(|e| e.to_string())?;
        let want = read(&format!("fixtures/case_{case}.expected.txt"))?;
        let (g, w) = (normalize_for_comparison(&got), normalize_for_comparison(&want));
        if g != w {
            let at = g.chars().zip(w.chars()).take_while(|(x, y)| x == y).count();
            return Err(format!("case {case} differs at char {at}"));
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("3 cases identical after normalization in {elapsed:?}"))
}

fn lint_arithmetic() -> Outcome {
    let c = |included, missing| Counts { included, missing };
    let expected = [
        ("a", [c(10, 2), c(1, 22), c(1, 76), c(15, 28)], 58, 267),
        ("b", [c(9, 0), c(7, 32), c(16, 88), c(28, 26)], 63, 397),
        ("c", [c(3, 1), c(7, 6), c(6, 40), c(10, 11)], 30, 219),
    ];
    let mut reports = Vec::new();
    for (case, counts, ambiguities, words) in expected {
        let ann = Annotations::from_json(&read(&format!("fixtures/case_{case}.lint.json"))?).map_err(|e| e.to_string())?;
        let r = completeness_report(&fixture(case)?, &ann).map_err(|e| e.to_string())?;
        let got: Vec<Counts> = Category::ALL.iter().map(|&k| r.counts(k)).collect();
        ensure(got == counts, || format!("case {case}: counts {got:?}"))?;
        ensure(r.ambiguity_count == ambiguities && r.word_count == words, || {
            format!("case {case}: {} ambiguities, {} words", r.ambiguity_count, r.word_count)
        })?;
        reports.push(r);
    }
    let s = aggregate(&reports).map_err(|e| e.to_string())?;
    let near = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol;
    ensure(near(s.mean_word_count, 294.33, 0.005), || format!("mean words {}", s.mean_word_count))?;
    let mut fractions = Vec::new();
    for (k, want) in [
        (Category::Materials, 0.861),
        (Category::Equipment, 0.254),
        (Category::ItemParams, 0.099),
        (Category::ActionParams, 0.448),
    ] {
        let got = s.category(k).fraction.unwrap_or(f64::NAN);
        ensure(near(got, want, 0.005), || format!("{k:?} fraction {got}"))?;
        fractions.push(format!("{:.1}%", 100.0 * got));
    }
    ensure(near(s.ambiguities_per_100_words, 17.1, 0.2), || format!("ambiguities {}", s.ambiguities_per_100_words))?;
    ensure(near(s.missing_params_per_100_words, 30.3, 0.2), || {
        format!("missing params {}", s.missing_params_per_100_words)
    })?;
    Ok(format!(
        "counts exact; mean words {:.2}; fractions {}; per 100 words {:.2} ambiguities, {:.2} missing params",
        s.mean_word_count,
        fractions.join("/"),
        s.ambiguities_per_100_words,
        s.missing_params_per_100_words
    ))
}

fn complexity() -> Outcome {
    let expected = [
        (Preset::Low, (6, 3, 9), BigUint::from(3375u32), None),
        (Preset::Mid, (20, 5, 25), BigUint::from(245u32).pow(5), Some(12)),
        (Preset::High, (42, 7, 49), BigUint::from(4158u32).pow(7), Some(25)),
    ];
    let mut parts = Vec::new();
    for (preset, sizes, combos, magnitude) in expected {
        let m = complexity_metrics(&preset.config(0, 0)).map_err(|e| e.to_string())?;
        let got = (m.max_categorical, m.max_scalar, m.max_total);
        ensure(got == sizes, || format!("{preset}: {got:?}"))?;
        ensure(m.categorical_combinations == combos, || format!("{preset}: {}", m.categorical_combinations))?;
        let log = m.categorical_combinations.to_string().parse::<f64>().unwrap().log10();
        if let Some(magnitude) = magnitude {
            ensure(log.round() == magnitude as f64, || format!("{preset}: 10^{log:.2}"))?;
        }
        parts.push(format!("{preset} {got:?} 10^{log:.2}"));
    }
    Ok(parts.join("; "))
}

fn step(name: u32, item: u32) -> BenchAction {
    BenchAction { name, params: vec![0.75], items: vec![item] }
}

/// Independent evaluator: recursion over the prefix, look-back via slices.
fn brute_force(seq: &[BenchAction]) -> f64 {
    fn go(seq: &[BenchAction]) -> f64 {
        let Some((last, prefix)) = seq.split_last() else { return 1.0 };
        let prev = go(prefix);
        let apf = last.params.iter().fold(1.0, |acc, p| acc * (1.0 - (0.75 - p).abs()));
        if !matches!(last.name, 1..=3) {
            return prev + apf / 50.0;
        }
        let names: Vec<u32> = prefix.iter().rev().map(|a| a.name).collect();
        let asb = if names.starts_with(&[1, 2, 3]) {
            0.15
        } else if names.starts_with(&[1, 2]) {
            0.10
        } else if names.starts_with(&[1]) {
            0.05
        } else {
            0.0
        };
        let inf = last.items.iter().fold(1.0, |acc, &k| acc * (k as f64 / 10.0));
        asb + (apf * (last.name as f64 / 10.0 + inf)).powf(prev)
    }
    go(seq)
}

fn surrogate_oracle() -> Outcome {
    let eval = |seq: &[BenchAction]| surrogate(seq).map_err(|e| e.to_string());
    let checks = [
        (eval(&[step(4, 2)])?, 1.02),
        (eval(&[step(1, 5)])?, 0.6),
        // 0.05 + 0.6^0.6 = 0.786022 (the rounded figure 0.78597 is off in the fifth digit)
        (eval(&[step(1, 5), step(1, 5)])?, 0.05 + 0.6f64.powf(0.6)),
    ];
    for (got, want) in checks {
        ensure((got - want).abs() < 1e-12, || format!("{got} vs {want}"))?;
    }
    let steps: Vec<BenchAction> = (1..=5).flat_map(|a| (1..=3).map(move |i| step(a, i))).collect();
    let mut space: Vec<Vec<BenchAction>> = steps.iter().map(|s| vec![s.clone()]).collect();
    for x in &steps {
        for y in &steps {
            space.push(vec![x.clone(), y.clone()]);
        }
    }
    for seq in &space {
        let (got, want) = (eval(seq)?, brute_force(seq));
        ensure(got.to_bits() == want.to_bits(), || format!("{seq:?}: {got} vs {want}"))?;
    }
    Ok(format!(
        "1.02, 0.6, {} within 1e-12; {} sequences bit-identical",
        checks[2].0,
        space.len()
    ))
}

fn round_trip_suite() -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    for (preset, count) in [(Preset::Low, 3334), (Preset::Mid, 3333), (Preset::High, 3333)] {
        let config = preset.config(77, count);
        for g in generate(&config).map_err(|e| e.to_string())? {
            let text = serialize(&g.document);
            let back = parse(&text).map_err(|e| e.to_string())?;
            ensure(back == g.document, || "parse(serialize(doc)) != doc".into())?;
            ensure(serialize(&back) == text, || "reserialization not byte-stable".into())?;
            ensure(back.validate().is_clean(), || format!("{:?}", back.validate()))?;
            let actions = &g.sample.actions;
            ensure(&from_document(&back).map_err(|e| e.to_string())? == actions, || "document decode".into())?;
            ensure(&from_graph(&to_graph(&g.sample)).map_err(|e| e.to_string())? == actions, || "graph decode".into())?;
            let flat = to_flat(actions, &config).map_err(|e| e.to_string())?;
            ensure(&from_flat(&flat, &config).map_err(|e| e.to_string())? == actions, || "flat decode".into())?;
            total += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{total} documents in {elapsed:?}"))
}

fn high_dataset() -> Outcome {
    let config = Preset::High.config(20240501, 6600);
    let start = Instant::now();
    let first = generate(&config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(first.len() == 6600, || format!("{} samples", first.len()))?;
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    let second = generate(&config).map_err(|e| e.to_string())?;
    ensure(first == second, || "same seed gave different samples".into())?;
    Ok(format!("6600 samples with documents in {elapsed:?}; rerun identical"))
}

fn distinct_terms(doc: &Document) -> Vec<UntranslatedTerm> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for entry in doc.walk() {
        let mut terms = Vec::new();
        match entry.object {
            Object::Item(i) => terms.push((TermKind::Item, i.name.clone())),
            Object::Action(a) => terms.push((TermKind::Action, a.name.clone())),
            Object::Section(_) => continue,
        }
        for name in entry.object.params().into_iter().flat_map(|p| p.names()) {
            terms.push((TermKind::Parameter, name.to_string()));
        }
        for (kind, term) in terms {
            if seen.insert((kind as u8, term.clone())) {
                out.push(UntranslatedTerm { kind, term });
            }
        }
    }
    out
}

fn translation_round_trip() -> Outcome {
    let table = TranslationTable::load_language(&root().join("locales"), "es").map_err(|e| e.to_string())?;
    let empty = TranslationTable::from_toml("language = \"xx\"\n").map_err(|e| e.to_string())?;
    let mut uncovered = 0;
    for case in ["a", "b", "c"] {
        let doc = fixture(case)?;
        let (es, missing) =
            translate_document(&doc, &table, Direction::ToTarget, true).map_err(|e| format!("case {case}: {e}"))?;
        ensure(missing.is_empty(), || format!("case {case}: {missing:?}"))?;
        let (back, _) =
            translate_document(&es, &table, Direction::ToEnglish, true).map_err(|e| format!("case {case}: {e}"))?;
        ensure(back == doc, || format!("case {case}: round trip changed the document"))?;
        let want = distinct_terms(&doc);
        match translate_document(&doc, &empty, Direction::ToTarget, true) {
            Err(TranslateError::UntranslatedTerms(got)) => {
                ensure(got == want, || format!("case {case}: strict mode reported {} of {} terms", got.len(), want.len()))?
            }
            Ok(_) => return Err(format!("case {case}: strict mode accepted an empty table")),
        }
        uncovered += want.len();
    }
    Ok(format!("3 fixtures identical after es round trip; strict mode listed all {uncovered} uncovered terms"))
}

type Check = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Check; 7] = [
        ("fixture fidelity", fixture_fidelity),
        ("lint arithmetic", lint_arithmetic),
        ("complexity metrics", complexity),
        ("surrogate oracle", surrogate_oracle),
        ("round-trip property suite", round_trip_suite),
        ("high-complexity dataset generation", high_dataset),
        ("translation round trip", translation_round_trip),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
