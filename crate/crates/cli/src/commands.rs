use std::path::{Path, PathBuf};

use serde_json::json;
use uwl_core::bench::{self, GeneratorConfig, Preset};
use uwl_core::lint::{self, Annotations};
use uwl_core::table;
use uwl_core::transcribe::{render_protocol, transcribe, translate_document, TranslateError, TranslationTable, Vocabulary};
use uwl_core::{parse, serialize, Document};

use crate::output::{print_json, read_input, write_atomic, write_output, Failure, Outcome};
use crate::{Cli, Command, ExportFormat, GenerateArgs, GenerateFormat, Global, TableArgs, TableCommand};

pub fn run(cli: Cli) -> Outcome {
    let g = &cli.global;
    match cli.command {
        Command::Validate { file } => validate(g, &file),
        Command::Transcribe { file, lang, out } => transcribe_cmd(g, &file, &lang, out.as_deref()),
        Command::Table(args) => table_cmd(g, args),
        Command::Lint { files, annotations, aggregate, fail_over } => lint_cmd(g, &files, &annotations, aggregate, fail_over),
        Command::Translate { file, table, direction, strict, out } => {
            translate_cmd(g, &file, &table, direction, strict, out.as_deref())
        }
        Command::Generate(args) => generate_cmd(g, args),
        Command::Surrogate { file } => surrogate_cmd(g, &file),
        Command::Export { file, format, preset, config, out } => {
            export_cmd(&file, format, preset, config.as_deref(), out.as_deref())
        }
        Command::Serve { port, host, store, static_dir } => serve_cmd(g, port, host, store, static_dir),
    }
}

fn load(path: &Path) -> Outcome<Document> {
    let text = read_input(path)?;
    parse(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn vocabulary(g: &Global) -> Outcome<Vocabulary> {
    match &g.vocab {
        Some(p) => Vocabulary::load(p).map_err(Failure::data),
        None => Ok(Vocabulary::builtin()),
    }
}

fn validate(g: &Global, file: &Path) -> Outcome {
    let doc = load(file)?;
    let report = doc.validate();
    if g.json {
        print_json(&json!({ "file": file, "valid": report.is_clean(), "violations": report.violations }))?;
    } else if report.is_clean() {
        println!("OK");
    } else {
        for v in &report.violations {
            println!("{v}");
        }
    }
    if report.is_clean() {
        Ok(())
    } else {
        Err(Failure::silent())
    }
}

fn transcribe_cmd(g: &Global, file: &Path, lang: &str, out: Option<&Path>) -> Outcome {
    let doc = load(file)?;
    let vocab = vocabulary(g)?;
    let table = TranslationTable::for_language(&g.locale_dir, lang).map_err(Failure::data)?;
    let text = if g.json {
        let protocol = render_protocol(&doc, &vocab, &table).map_err(Failure::data)?;
        serde_json::to_string_pretty(&protocol).map_err(Failure::data)? + "\n"
    } else {
        transcribe(&doc, &vocab, &table).map_err(Failure::data)?
    };
    write_output(out, &text)
}

fn table_cmd(g: &Global, args: TableArgs) -> Outcome {
    if let Some(TableCommand::Apply { file, csv, column, out }) = args.apply {
        let mut doc = load(&file)?;
        let text = read_input(&csv)?;
        let report = table::import_csv(&mut doc, &text, column.as_deref()).map_err(Failure::data)?;
        let target = out.unwrap_or(file);
        write_output(Some(&target), &serialize(&doc))?;
        if g.json {
            print_json(&report)?;
        } else {
            eprintln!("{} changed, {} unchanged, {} unmatched", report.applied, report.unchanged, report.unmatched.len());
            for key in &report.unmatched {
                eprintln!("unmatched: {key}");
            }
        }
        return Ok(());
    }
    let docs = args.files.iter().map(|f| load(f)).collect::<Outcome<Vec<_>>>()?;
    let view = table::flatten(&docs.iter().collect::<Vec<_>>());
    if g.json && args.csv.is_none() {
        return print_json(&view);
    }
    write_output(args.csv.as_deref(), &table::to_csv(&view))
}

fn lint_cmd(g: &Global, files: &[PathBuf], annotations: &[PathBuf], aggregate: bool, fail_over: Option<u64>) -> Outcome {
    if files.len() != annotations.len() {
        return Err(Failure::usage(format!(
            "{} files but {} --annotations; give one sidecar per file",
            files.len(),
            annotations.len()
        )));
    }
    let mut reports = Vec::new();
    for (file, ann) in files.iter().zip(annotations) {
        let doc = load(file)?;
        let ann = Annotations::from_json(&read_input(ann)?).map_err(|e| Failure::data(format!("{}: {e}", ann.display())))?;
        let report = lint::completeness_report(&doc, &ann).map_err(|e| Failure::data(format!("{}: {e}", file.display())))?;
        reports.push(report);
    }
    let summary = if aggregate { Some(lint::aggregate(&reports).map_err(Failure::data)?) } else { None };
    if g.json {
        let items: Vec<_> = files
            .iter()
            .zip(&reports)
            .map(|(f, r)| {
                json!({
                    "file": f,
                    "report": r,
                    "ambiguities_per_100_words": r.ambiguities_per_100_words(),
                    "missing_params_per_100_words": r.missing_params_per_100_words(),
                })
            })
            .collect();
        print_json(&json!({ "reports": items, "summary": summary }))?;
    } else {
        for (f, r) in files.iter().zip(&reports) {
            println!("{}\n{r}\n", f.display());
        }
        if let Some(s) = &summary {
            println!("{s}");
        }
    }
    if let Some(limit) = fail_over {
        let worst = reports
            .iter()
            .map(|r| r.materials.missing + r.equipment.missing + r.all_params().missing)
            .max()
            .unwrap_or(0);
        if worst > limit {
            return Err(Failure::data(format!("{worst} missing entries exceed --fail-over {limit}")));
        }
    }
    Ok(())
}

fn translate_cmd(
    g: &Global,
    file: &Path,
    table_path: &Path,
    direction: uwl_core::transcribe::Direction,
    strict: bool,
    out: Option<&Path>,
) -> Outcome {
    let doc = load(file)?;
    let table = TranslationTable::load(table_path).map_err(Failure::data)?;
    match translate_document(&doc, &table, direction, strict) {
        Ok((translated, missing)) => {
            write_output(out, &serialize(&translated))?;
            if g.json && out.is_some() {
                print_json(&json!({ "untranslated": missing }))?;
            } else {
                for term in &missing {
                    eprintln!("untranslated: {term}");
                }
            }
            Ok(())
        }
        Err(TranslateError::UntranslatedTerms(missing)) => {
            if g.json {
                print_json(&json!({ "error": "UNTRANSLATED_TERMS", "untranslated": missing }))?;
            }
            for term in &missing {
                eprintln!("untranslated: {term}");
            }
            Err(Failure::data(format!("{} terms have no translation", missing.len())))
        }
    }
}

fn read_config(path: &Path) -> Outcome<GeneratorConfig> {
    let text = read_input(path)?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn generate_cmd(g: &Global, args: GenerateArgs) -> Outcome {
    let mut config = match (&args.preset, &args.config) {
        (Some(p), _) => p.config(0, 10),
        (None, Some(path)) => read_config(path)?,
        (None, None) => return Err(Failure::usage("give --preset or --config")),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(count) = args.count {
        config.count = count;
    }
    std::fs::create_dir_all(&args.out).map_err(|e| Failure::data(format!("{}: {e}", args.out.display())))?;
    let written = match args.format {
        GenerateFormat::Uwl => {
            let generated = bench::generate(&config).map_err(Failure::data)?;
            let width = generated.len().saturating_sub(1).to_string().len().max(4);
            for (i, g) in generated.iter().enumerate() {
                let path = args.out.join(format!("sample_{i:0width$}.json"));
                write_atomic(&path, serialize(&g.document).as_bytes())?;
            }
            let responses: Vec<String> = generated.iter().map(|g| format!("{}", g.sample.response)).collect();
            write_atomic(&args.out.join("responses.txt"), (responses.join("\n") + "\n").as_bytes())?;
            generated.len()
        }
        GenerateFormat::Dataset => {
            let samples = bench::generate_samples(&config).map_err(Failure::data)?;
            let mut buf = Vec::new();
            bench::write_dataset(&mut buf, &samples, &config).map_err(Failure::data)?;
            write_atomic(&args.out.join("dataset.jsonl"), &buf)?;
            samples.len()
        }
    };
    let config_text = serde_json::to_string_pretty(&config).map_err(Failure::data)? + "\n";
    write_atomic(&args.out.join("config.json"), config_text.as_bytes())?;
    if g.json {
        print_json(&json!({ "out": args.out, "count": written, "config": config }))
    } else {
        println!("wrote {written} samples to {}", args.out.display());
        Ok(())
    }
}

fn surrogate_cmd(g: &Global, file: &Path) -> Outcome {
    let actions = bench::from_document(&load(file)?).map_err(Failure::data)?;
    let r = bench::surrogate(&actions).map_err(Failure::data)?;
    if g.json {
        print_json(&json!({ "response": r, "actions": actions.len() }))
    } else {
        println!("{r}");
        Ok(())
    }
}

fn export_cmd(file: &Path, format: ExportFormat, preset: Option<Preset>, config: Option<&Path>, out: Option<&Path>) -> Outcome {
    let actions = bench::from_document(&load(file)?).map_err(Failure::data)?;
    let response = bench::surrogate(&actions).map_err(Failure::data)?;
    let sample = bench::BenchSample { actions, response };
    let text = match format {
        ExportFormat::Graph => serde_json::to_string(&bench::to_graph(&sample)),
        ExportFormat::Flat => {
            let config = match (preset, config) {
                (Some(p), _) => p.config(0, 0),
                (None, Some(path)) => read_config(path)?,
                (None, None) => return Err(Failure::usage("--format flat needs --preset or --config for the padding sizes")),
            };
            let flat = bench::to_flat(&sample.actions, &config).map_err(Failure::data)?;
            serde_json::to_string(&json!({ "flat": flat, "response": response }))
        }
    }
    .map_err(Failure::data)?;
    write_output(out, &(text + "\n"))
}

fn serve_cmd(g: &Global, port: u16, host: std::net::IpAddr, store: PathBuf, static_dir: Option<PathBuf>) -> Outcome {
    let config = uwl_service::ServeConfig {
        store_dir: store,
        addr: (host, port).into(),
        static_dir,
        locale_dir: g.locale_dir.clone(),
        vocabulary: vocabulary(g)?,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::data)?;
    runtime.block_on(uwl_service::serve(config)).map_err(Failure::data)
}
