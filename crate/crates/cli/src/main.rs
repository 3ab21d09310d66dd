//! `jsonmask`: one binary over the engine and the harness.
//!
//! Exit codes: 0 success, 1 the data failed (invalid instance, failed
//! cases, rejected schema), 2 usage error, 3 internal error.

mod args;
mod config;
mod source;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;

use jsonmask::compiler::{compile, CompileOptions, CompileOutcome, ConstraintAutomaton, KeywordManifest, MatcherState, SyntaxMode};
use jsonmask::json::{parse_json, to_canonical_string, JsonValue};
use jsonmask::schema::dataset::GroupBy;
use jsonmask::schema::{ingest_dataset, normalize, parse_schema_with_id, schema_stats, DatasetRecord, IngestOptions, IngestionReport, SchemaIR, Validator};
use jsonmask::token::{compute_mask, walk_instance, LogitsSource, Vocabulary, WalkOutcome};
use jsonmask_harness::bench::{self, CoverageReport, EfficiencyError};
use jsonmask_harness::conformance::{self, ConformanceReport};
use jsonmask_harness::report::{self, ReportFormat};
use jsonmask_harness::Engine;

use args::{Cli, Command, Format, Grouping, Options};
use config::Settings;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Internal(String),
}

/// Whether the data passed; errors are separate.
enum Verdict {
    Ok,
    DataFailure,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            eprintln!("error: a subcommand is required; see --help");
            return ExitCode::from(2);
        }
        Err(e) => {
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("usage error"));
            return ExitCode::from(2);
        }
    };
    match dispatch(&cli) {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::DataFailure) => ExitCode::from(1),
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn need<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| CliError::Usage(format!("this command needs --{flag}")))
}

/// Writes `name` under `--out`, if given.
fn write_out(opts: &Options, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let Some(dir) = &opts.out else { return Ok(()) };
    fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("output serializes");
    out.push(b'\n');
    out
}

/// Human output, unless `--quiet`.
fn show(opts: &Options, text: &str) {
    if !opts.quiet {
        print!("{text}");
        if !text.ends_with('\n') {
            println!();
        }
    }
}

fn report_format(f: Format) -> ReportFormat {
    match f {
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
        Format::Table => ReportFormat::Table,
    }
}

fn load_vocab(settings: &Settings) -> Result<Vocabulary, CliError> {
    match &settings.vocab {
        Some(p) => Vocabulary::load(p).map_err(|e| CliError::Usage(format!("vocabulary {}: {e}", p.display()))),
        None => Ok(Vocabulary::bytes()),
    }
}

fn compile_options(settings: &Settings) -> Result<CompileOptions, CliError> {
    let manifest = match &settings.manifest {
        Some(p) => {
            let text = String::from_utf8(read(p)?).map_err(|_| CliError::Usage(format!("manifest {} is not UTF-8", p.display())))?;
            KeywordManifest::from_json(&text).map_err(|e| CliError::Usage(format!("manifest {}: {e}", p.display())))?
        }
        None => KeywordManifest::v1(),
    };
    Ok(CompileOptions { manifest, compile_timeout: Duration::from_secs_f64(settings.run.compile_timeout_secs), ..CompileOptions::default() })
}

fn engine(settings: &Settings) -> Result<Engine, CliError> {
    Ok(Engine::new(load_vocab(settings)?, compile_options(settings)?))
}

fn load_schema(opts: &Options) -> Result<DatasetRecord, CliError> {
    let path = need(&opts.schema, "schema")?;
    let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("schema");
    let doc = parse_schema_with_id(&read(path)?, id).map_err(|e| CliError::Usage(format!("schema {}: {e}", path.display())))?;
    Ok(DatasetRecord::new(doc, "cli"))
}

fn load_instance(opts: &Options) -> Result<JsonValue, CliError> {
    let path = need(&opts.instance, "instance")?;
    parse_json(&read(path)?).map_err(|e| CliError::Usage(format!("instance {}: {e}", path.display())))
}

/// Compiles, printing the issues when the schema is not accepted.
fn compile_record(record: &DatasetRecord, engine: &Engine) -> Result<Option<(SchemaIR, ConstraintAutomaton)>, CliError> {
    let ir = match normalize(&record.schema) {
        Ok(ir) => ir,
        Err(e) => {
            eprintln!("rejected: {e}");
            return Ok(None);
        }
    };
    match compile(&ir, &engine.compile) {
        CompileOutcome::Automaton(a) => Ok(Some((ir, a))),
        CompileOutcome::Rejected(issues) => {
            for i in &issues {
                eprintln!("rejected: {i}");
            }
            Ok(None)
        }
        CompileOutcome::TimedOut => {
            eprintln!("compile timed out");
            Ok(None)
        }
    }
}

fn records(settings: &Settings) -> Result<(Vec<DatasetRecord>, Vec<(PathBuf, IngestionReport)>), CliError> {
    if settings.corpus.is_empty() {
        return Err(CliError::Usage("this command needs --corpus (or corpus in the config)".into()));
    }
    let ingest = IngestOptions { metadata: settings.file.metadata.clone(), default_dataset: None, strip_fields: settings.file.strip_fields.clone() };
    let mut all = Vec::new();
    let mut reports = Vec::new();
    for path in &settings.corpus {
        let (recs, report) = ingest_dataset(path, &ingest).map_err(|e| CliError::Usage(e.to_string()))?;
        all.extend(recs);
        reports.push((path.clone(), report));
    }
    Ok((all, reports))
}

fn dispatch(cli: &Cli) -> Result<Verdict, CliError> {
    let opts = &cli.opts;
    let settings = Settings::resolve(opts)?;
    match &cli.command {
        Command::Ingest => ingest(opts, &settings),
        Command::Stats { group_by } => stats(opts, &settings, *group_by),
        Command::Compile => compile_cmd(opts, &settings),
        Command::Validate => validate(opts),
        Command::Mask { lenient } => mask(opts, &settings, *lenient),
        Command::Generate => generate(opts, &settings),
        Command::Walk => walk(opts, &settings),
        Command::Conformance => conformance_cmd(opts, &settings),
        Command::BenchCoverage => bench_coverage(opts, &settings),
        Command::BenchEfficiency => bench_efficiency(opts, &settings),
        Command::Report { inputs } => report_cmd(opts, inputs),
    }
}

fn ingest(opts: &Options, settings: &Settings) -> Result<Verdict, CliError> {
    let (records, reports) = records(settings)?;
    #[derive(Serialize)]
    struct Entry<'a> {
        corpus: String,
        #[serde(flatten)]
        report: &'a IngestionReport,
    }
    let entries: Vec<Entry> = reports.iter().map(|(p, r)| Entry { corpus: p.display().to_string(), report: r }).collect();
    write_out(opts, "ingestion.json", &json_bytes(&entries))?;
    let mut lines = Vec::new();
    for r in &records {
        lines.extend(serde_json::to_vec(r).expect("record serializes"));
        lines.push(b'\n');
    }
    write_out(opts, "records.jsonl", &lines)?;
    match opts.format {
        Format::Json => show(opts, &String::from_utf8(json_bytes(&entries)).expect("json is UTF-8")),
        _ => {
            let mut text = String::new();
            for (p, r) in &reports {
                let _ = writeln!(text, "{}\n{}", p.display(), r.to_text());
            }
            show(opts, &text);
        }
    }
    Ok(Verdict::Ok)
}

fn stats(opts: &Options, settings: &Settings, group_by: Grouping) -> Result<Verdict, CliError> {
    let (records, _) = records(settings)?;
    let by = match group_by {
        Grouping::Dataset => GroupBy::Dataset,
        Grouping::Tier => GroupBy::Tier,
        Grouping::DatasetTier => GroupBy::DatasetTier,
    };
    let table = schema_stats(&records, by).map_err(|e| CliError::Usage(e.to_string()))?;
    write_out(opts, "stats.json", &json_bytes(&table))?;
    let text = match opts.format {
        Format::Json => String::from_utf8(json_bytes(&table)).expect("json is UTF-8"),
        Format::Table => table.to_text(),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Internal(e.to_string());
            w.write_record(["group", "count", "size_kb_median", "size_kb_max", "fields_median", "fields_max", "fan_out_median", "fan_out_max", "depth_median", "depth_max"])
                .map_err(io)?;
            for r in &table.rows {
                let cells = [r.size_kb, r.field_count, r.max_fan_out, r.depth].iter().flat_map(|m| [m.median.to_string(), m.max.to_string()]).collect::<Vec<_>>();
                w.write_record([r.group.clone(), r.count.to_string()].into_iter().chain(cells)).map_err(io)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?).expect("csv is UTF-8")
        }
    };
    show(opts, &text);
    Ok(Verdict::Ok)
}

fn compile_cmd(opts: &Options, settings: &Settings) -> Result<Verdict, CliError> {
    let record = load_schema(opts)?;
    let engine = engine(settings)?;
    let Some((_, a)) = compile_record(&record, &engine)? else { return Ok(Verdict::DataFailure) };
    write_out(opts, "automaton.txt", a.dump().as_bytes())?;
    #[derive(Serialize)]
    struct Summary {
        result: &'static str,
        gct_secs: f64,
        value_nodes: usize,
        string_tables: usize,
        number_tables: usize,
        arrays: usize,
        objects: usize,
    }
    let s = Summary {
        result: "compiled",
        gct_secs: a.compile_time.as_secs_f64(),
        value_nodes: a.values.len(),
        string_tables: a.strings.len(),
        number_tables: a.numbers.len(),
        arrays: a.arrays.len(),
        objects: a.objects.len(),
    };
    let text = match opts.format {
        Format::Json => String::from_utf8(json_bytes(&s)).expect("json is UTF-8"),
        _ => format!(
            "compiled in {:.3} ms: {} value nodes, {} string and {} number tables, {} arrays, {} objects",
            s.gct_secs * 1000.0,
            s.value_nodes,
            s.string_tables,
            s.number_tables,
            s.arrays,
            s.objects
        ),
    };
    show(opts, &text);
    Ok(Verdict::Ok)
}

fn validate(opts: &Options) -> Result<Verdict, CliError> {
    let record = load_schema(opts)?;
    let instance = load_instance(opts)?;
    let ir = normalize(&record.schema).map_err(|e| CliError::Usage(format!("schema: {e}")))?;
    let outcome = Validator::new(&ir).map_err(|e| CliError::Usage(format!("schema: {e}")))?.validate(&instance);
    match opts.format {
        Format::Json => print!("{}", String::from_utf8(json_bytes(&outcome)).expect("json is UTF-8")),
        _ => {
            println!("{}", if outcome.valid { "valid" } else { "invalid" });
            for v in &outcome.violations {
                println!("  {} {}: {}", if v.instance_path.is_empty() { "/" } else { &v.instance_path }, v.keyword, v.message);
            }
        }
    }
    Ok(if outcome.valid { Verdict::Ok } else { Verdict::DataFailure })
}

fn render_token(bytes: &[u8]) -> String {
    bytes.escape_ascii().to_string()
}

fn mask(opts: &Options, settings: &Settings, lenient: bool) -> Result<Verdict, CliError> {
    let record = load_schema(opts)?;
    let engine = engine(settings)?;
    let Some((_, a)) = compile_record(&record, &engine)? else { return Ok(Verdict::DataFailure) };
    let prefix = opts.prefix.clone().unwrap_or_default();
    let mut state = MatcherState::new(&a, if lenient { SyntaxMode::Lenient } else { SyntaxMode::Compact });
    for (i, &b) in prefix.as_bytes().iter().enumerate() {
        if state.advance_byte(&a, b).is_err() {
            eprintln!("prefix rejected at byte {i}");
            return Ok(Verdict::DataFailure);
        }
    }
    let m = compute_mask(&a, &state, &engine.trie, &engine.vocab);
    let eos = engine.vocab.eos_id();
    let allowed: Vec<(u32, String)> =
        m.iter().map(|id| (id, if id == eos { "<eos>".to_string() } else { render_token(engine.vocab.token(id)) })).collect();
    match opts.format {
        Format::Json => {
            let rows: Vec<serde_json::Value> = allowed.iter().map(|(id, r)| serde_json::json!({"id": id, "bytes": r})).collect();
            print!("{}", String::from_utf8(json_bytes(&serde_json::json!({"prefix": prefix, "allowed": rows}))).expect("json is UTF-8"));
        }
        _ => {
            for (id, r) in &allowed {
                println!("{id}\t{r}");
            }
        }
    }
    Ok(Verdict::Ok)
}

fn sources<'a>(settings: &'a Settings, engine: &'a Engine) -> impl Fn(&DatasetRecord, usize) -> Box<dyn LogitsSource> + Sync + 'a {
    move |record, sample| source::make_source(&settings.file.source, &engine.vocab, settings.run.seed, record, sample)
}

fn generate(opts: &Options, settings: &Settings) -> Result<Verdict, CliError> {
    let record = load_schema(opts)?;
    let engine = engine(settings)?;
    let run = bench::run_schema(&record, &settings.run, &engine, &sources(settings, &engine));
    write_out(opts, "generation.json", &json_bytes(&run))?;
    if let Some(text) = &run.generated {
        println!("{text}");
    }
    if !opts.quiet {
        let mut summary = match run.failure {
            None => "valid".to_string(),
            Some(f) => serde_json::to_value(f).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        };
        if let Some(e) = &run.efficiency {
            let _ = write!(summary, ", {} tokens ({} fast-forwarded), ttft {:.4}s, tgt {:.4}s", e.output_tokens, e.ff_tokens, e.ttft, e.tgt);
        }
        eprintln!("{summary}");
    }
    Ok(if run.compliant == Some(true) { Verdict::Ok } else { Verdict::DataFailure })
}

fn walk(opts: &Options, settings: &Settings) -> Result<Verdict, CliError> {
    let record = load_schema(opts)?;
    let instance = load_instance(opts)?;
    let engine = engine(settings)?;
    let Some((_, a)) = compile_record(&record, &engine)? else { return Ok(Verdict::DataFailure) };
    let text = to_canonical_string(&instance);
    let outcome = walk_instance(&a, &engine.vocab, &engine.trie, text.as_bytes());
    match opts.format {
        Format::Json => print!("{}", String::from_utf8(json_bytes(&outcome)).expect("json is UTF-8")),
        _ => println!(
            "{}",
            match outcome {
                WalkOutcome::Accepted => "accepted".to_string(),
                WalkOutcome::RejectedAt(at) => format!("rejected at byte {at}"),
                WalkOutcome::PrematureEnd => "premature end".to_string(),
                WalkOutcome::UntokenizableBytes(at) => format!("no token starts at byte {at}"),
            }
        ),
    }
    Ok(if outcome.accepted() { Verdict::Ok } else { Verdict::DataFailure })
}

fn conformance_cmd(opts: &Options, settings: &Settings) -> Result<Verdict, CliError> {
    let dir = need(&opts.suite, "suite")?;
    let suite = conformance::load_suite(dir).map_err(|e| CliError::Usage(e.to_string()))?;
    let engine = engine(settings)?;
    let outcomes = conformance::run_suite(&suite, &engine, settings.jobs);
    let report = ConformanceReport::new(&suite, outcomes);
    write_out(opts, "conformance.json", &json_bytes(&report))?;
    let text = match opts.format {
        Format::Json => String::from_utf8(json_bytes(&report)).expect("json is UTF-8"),
        Format::Csv => {
            let mut out = String::from("category,total,passed,proportion\n");
            for c in &report.coverage.categories {
                let _ = writeln!(out, "{},{},{},{}", c.category, c.total, c.passed, c.proportion);
            }
            out
        }
        Format::Table => {
            let mut out = format!("{} categories, {} cases, {} excluded\n\n", report.categories, report.cases.len(), report.excluded.len());
            out.push_str(&report::thresholds_table(&[("jsonmask".to_string(), report.coverage.thresholds)]));
            out.push('\n');
            out.push_str(&report::failures_table(&[("jsonmask".to_string(), report.breakdown)]));
            out
        }
    };
    show(opts, &text);
    Ok(if report.has_failures() { Verdict::DataFailure } else { Verdict::Ok })
}

fn framework(settings: &Settings) -> String {
    settings.file.framework.clone().unwrap_or_else(|| "jsonmask".to_string())
}

fn bench_coverage(opts: &Options, settings: &Settings) -> Result<Verdict, CliError> {
    let (records, _) = records(settings)?;
    let engine = engine(settings)?;
    let (runs, report) = bench::run_coverage(&framework(settings), &records, &settings.run, &engine, &sources(settings, &engine), settings.jobs);
    let reports = [report];
    let render = |f| report::emit_report(&reports, f).map_err(|e| CliError::Internal(e.to_string()));
    write_out(opts, "coverage.json", &render(ReportFormat::Json)?)?;
    write_out(opts, "coverage.csv", &render(ReportFormat::Csv)?)?;
    write_out(opts, "runs.json", &json_bytes(&runs))?;
    show(opts, &String::from_utf8(render(report_format(opts.format))?).expect("report is UTF-8"));
    Ok(Verdict::Ok)
}

fn bench_efficiency(opts: &Options, settings: &Settings) -> Result<Verdict, CliError> {
    let (records, _) = records(settings)?;
    let engine = engine(settings)?;
    let variants = settings.variants()?;
    let report = match bench::run_efficiency(&records, &variants, &engine, &sources(settings, &engine), settings.jobs) {
        Ok(r) => r,
        Err(e @ EfficiencyError::EmptyIntersection) => {
            eprintln!("{e}");
            return Ok(Verdict::DataFailure);
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    write_out(opts, "efficiency.json", &json_bytes(&report))?;
    let text = match opts.format {
        Format::Json => String::from_utf8(json_bytes(&report.variants)).expect("json is UTF-8"),
        _ => format!("{} schemas declared by every variant\n{}", report.intersection.len(), report::efficiency_table(&report)),
    };
    show(opts, &text);
    Ok(Verdict::Ok)
}

fn report_cmd(opts: &Options, inputs: &[PathBuf]) -> Result<Verdict, CliError> {
    let mut reports: Vec<CoverageReport> = Vec::new();
    for p in inputs {
        let bytes = read(p)?;
        let bad = |e: serde_json::Error| CliError::Usage(format!("{}: {e}", p.display()));
        match serde_json::from_slice::<Vec<CoverageReport>>(&bytes) {
            Ok(rs) => reports.extend(rs),
            Err(_) => reports.push(serde_json::from_slice(&bytes).map_err(bad)?),
        }
    }
    let format = report_format(opts.format);
    let bytes = report::emit_report(&reports, format).map_err(|e| CliError::Internal(e.to_string()))?;
    let name = match format {
        ReportFormat::Json => "report.json",
        ReportFormat::Csv => "report.csv",
        ReportFormat::Table => "report.txt",
    };
    write_out(opts, name, &bytes)?;
    show(opts, &String::from_utf8(bytes).expect("report is UTF-8"));
    Ok(Verdict::Ok)
}
