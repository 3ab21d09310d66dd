//! Coverage and efficiency runs over schema corpora.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use jsonmask::compiler::{compile, CompileOptions, CompileOutcome, ConstraintAutomaton};
use jsonmask::json::{parse_json, to_canonical_string};
use jsonmask::schema::dataset::lower_median;
use jsonmask::schema::{normalize, parse_schema, validate_instance, DatasetRecord};
use jsonmask::token::{constrained_decode, DecodeOptions, LogitsSource, Termination};

use crate::Engine;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub compile_timeout_secs: f64,
    pub generation_timeout_secs: f64,
    pub max_tokens: usize,
    pub samples_per_schema: usize,
    pub fast_forward: bool,
    /// Off gives the bare decoding loop with every token allowed.
    pub masking: bool,
    pub seed: u64,
    /// Count compile time towards TTFT and TGT.
    pub gct_in_ttft: bool,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            compile_timeout_secs: 40.0,
            generation_timeout_secs: 40.0,
            max_tokens: 1024,
            samples_per_schema: 1,
            fast_forward: false,
            masking: true,
            seed: 0,
            gct_in_ttft: true,
        }
    }
}

impl RunConfig {
    pub fn check(&self) -> Result<(), String> {
        if !(self.compile_timeout_secs > 0.0 && self.generation_timeout_secs > 0.0) {
            return Err("timeouts must be positive".into());
        }
        if self.samples_per_schema == 0 {
            return Err("samples_per_schema must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunFailure {
    CompileReject,
    CompileTimeout,
    GenTimeout,
    /// The engine allowed nothing, not even EOS.
    DeadEnd,
    Invalid,
    /// The logits source broke the protocol or went away.
    SourceError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRecord {
    pub gct: f64,
    pub ttft: f64,
    /// Milliseconds; absent with fewer than two output tokens.
    pub tpot_ms: Option<f64>,
    pub tgt: f64,
    pub output_tokens: usize,
    pub ff_tokens: usize,
    pub sampled_steps: usize,
}

/// Average time per token after the first.
pub fn tpot(tgt: f64, ttft: f64, output_tokens: usize) -> Option<f64> {
    (output_tokens > 1).then(|| (tgt - ttft) / (output_tokens - 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaRunRecord {
    pub source_id: String,
    pub dataset: String,
    pub declared: bool,
    pub generated: Option<String>,
    /// Set exactly when generation ran to completion.
    pub compliant: Option<bool>,
    pub failure: Option<RunFailure>,
    pub efficiency: Option<EfficiencyRecord>,
}

/// Builds a logits source for one sample of one schema.
pub type SourceFactory<'a> = dyn Fn(&DatasetRecord, usize) -> Box<dyn LogitsSource> + Sync + 'a;

const SYSTEM_LINE: &str = "You need to generate a JSON object that matches the schema below.";

/// Few-shot prompt: a system line, then an input/output block per shot,
/// then the target schema with its output left open.
pub fn build_prompt(schema: &str, shots: &[(String, String)]) -> String {
    let mut out = format!("{SYSTEM_LINE}\n\n");
    for (s, o) in shots {
        out.push_str(&format!("## Input Schema:\n{s}\n## Expected Output:\n{o}\n\n"));
    }
    out.push_str(&format!("## Input Schema:\n{schema}\n## Expected Output:\n"));
    out
}

/// The automaton used when masking is off; it is only carried through the
/// loop, never consulted.
fn pass_through() -> ConstraintAutomaton {
    let doc = parse_schema(b"{}").expect("literal schema");
    compile(&normalize(&doc).expect("literal schema"), &CompileOptions::default()).automaton().expect("empty schema compiles")
}

/// Compiles, decodes and validates one schema.
pub fn run_schema(record: &DatasetRecord, config: &RunConfig, engine: &Engine, sources: &SourceFactory) -> SchemaRunRecord {
    let mut run = SchemaRunRecord {
        source_id: record.source_id().to_string(),
        dataset: record.dataset.clone(),
        declared: false,
        generated: None,
        compliant: None,
        failure: None,
        efficiency: None,
    };
    let Ok(ir) = normalize(&record.schema) else {
        run.failure = Some(RunFailure::CompileReject);
        return run;
    };
    let started = Instant::now();
    let automaton = if config.masking {
        let opts = CompileOptions { compile_timeout: Duration::from_secs_f64(config.compile_timeout_secs), ..engine.compile.clone() };
        match compile(&ir, &opts) {
            CompileOutcome::Automaton(a) => a,
            CompileOutcome::Rejected(_) => {
                run.failure = Some(RunFailure::CompileReject);
                return run;
            }
            CompileOutcome::TimedOut => {
                run.failure = Some(RunFailure::CompileTimeout);
                return run;
            }
        }
    } else {
        pass_through()
    };
    let gct = if config.masking { started.elapsed() } else { Duration::ZERO };
    run.declared = true;
    let schema_text = to_canonical_string(&record.schema.raw);
    let prompt = engine.trie.tokenize(build_prompt(&schema_text, &[]).as_bytes()).unwrap_or_default();
    let validator = jsonmask::schema::Validator::new(&ir).ok();
    let mut all_valid = true;
    for sample in 0..config.samples_per_schema {
        let opts = DecodeOptions {
            max_tokens: config.max_tokens,
            generation_timeout: Duration::from_secs_f64(config.generation_timeout_secs),
            fast_forward: config.fast_forward,
            masking: config.masking,
            sample_seed: (config.samples_per_schema > 1).then(|| config.seed.wrapping_add(sample as u64)),
            gct_in_ttft: config.gct_in_ttft,
        };
        let mut source = sources(record, sample);
        let result = match constrained_decode(&automaton, source.as_mut(), &engine.vocab, &engine.trie, &prompt, &opts, gct) {
            Ok(r) => r,
            Err(_) => {
                run.failure = Some(RunFailure::SourceError);
                return run;
            }
        };
        let failure = match result.terminated_by {
            Termination::Timeout => Some(RunFailure::GenTimeout),
            Termination::DeadEnd => Some(RunFailure::DeadEnd),
            Termination::Eos | Termination::MaxTokens => None,
        };
        if sample == 0 {
            let t = &result.timing;
            run.generated = Some(String::from_utf8_lossy(&result.bytes).into_owned());
            run.efficiency = Some(EfficiencyRecord {
                gct: t.gct,
                ttft: t.ttft,
                tpot_ms: tpot(t.tgt, t.ttft, result.tokens.len()).map(|s| s * 1000.0),
                tgt: t.tgt,
                output_tokens: result.tokens.len(),
                ff_tokens: result.ff_tokens,
                sampled_steps: result.sampled_steps,
            });
        }
        if let Some(f) = failure {
            run.failure = Some(f);
            run.compliant = None;
            if f == RunFailure::DeadEnd {
                // An engine crash withdraws the claim to support the schema.
                run.declared = false;
                run.efficiency = None;
            }
            return run;
        }
        let valid = match (&validator, parse_json(&result.bytes)) {
            (Some(v), Ok(value)) => v.is_valid(&value),
            (None, Ok(value)) => validate_instance(&ir, &value).is_ok_and(|o| o.valid),
            (_, Err(_)) => false,
        };
        all_valid &= valid;
    }
    run.compliant = Some(all_valid);
    if !all_valid {
        run.failure = Some(RunFailure::Invalid);
    }
    run
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetCoverage {
    pub dataset: String,
    pub schemas: usize,
    pub declared: f64,
    pub empirical: f64,
    /// Empirical over declared; absent when nothing was declared.
    pub compliance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub framework: String,
    pub datasets: Vec<DatasetCoverage>,
    pub failures: BTreeMap<RunFailure, usize>,
}

pub fn compliance_rate(declared: f64, empirical: f64) -> Option<f64> {
    (declared > 0.0).then(|| empirical / declared)
}

/// Rounds half away from zero at `places` decimals, as tables print.
pub fn round_half_up(x: f64, places: i32) -> f64 {
    let scale = 10f64.powi(places);
    // The nudge absorbs binary error in values like 0.955 * 100.
    ((x * scale).abs() + 0.5 + 1e-9).floor().copysign(x) / scale
}

pub fn coverage_report(framework: &str, runs: &[SchemaRunRecord]) -> CoverageReport {
    let mut by_ds: BTreeMap<&str, Vec<&SchemaRunRecord>> = BTreeMap::new();
    let mut failures = BTreeMap::new();
    for r in runs {
        by_ds.entry(&r.dataset).or_default().push(r);
        if let Some(f) = r.failure {
            *failures.entry(f).or_default() += 1;
        }
    }
    let datasets = by_ds
        .into_iter()
        .map(|(dataset, rs)| {
            let n = rs.len() as f64;
            let declared = rs.iter().filter(|r| r.declared).count() as f64 / n;
            let empirical = rs.iter().filter(|r| r.compliant == Some(true)).count() as f64 / n;
            DatasetCoverage { dataset: dataset.to_string(), schemas: rs.len(), declared, empirical, compliance: compliance_rate(declared, empirical) }
        })
        .collect();
    CoverageReport { framework: framework.to_string(), datasets, failures }
}

/// Runs every record on `jobs` workers. Records come back in input order.
pub fn run_coverage(
    framework: &str,
    records: &[DatasetRecord],
    config: &RunConfig,
    engine: &Engine,
    sources: &SourceFactory,
    jobs: usize,
) -> (Vec<SchemaRunRecord>, CoverageReport) {
    let runs: Vec<SchemaRunRecord> = crate::pool(jobs).install(|| records.par_iter().map(|r| run_schema(r, config, engine, sources)).collect());
    let report = coverage_report(framework, &runs);
    (runs, report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medians {
    pub gct: f64,
    pub ttft: f64,
    pub tpot_ms: Option<f64>,
    pub tgt: f64,
    pub output_tokens: f64,
    pub ff_tokens: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub name: String,
    pub schemas: usize,
    pub medians: Medians,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    /// Schemas every variant declared, the only ones measured.
    pub intersection: Vec<String>,
    pub variants: Vec<VariantSummary>,
    pub runs: BTreeMap<String, Vec<SchemaRunRecord>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EfficiencyError {
    #[error("no schema is declared by every variant")]
    EmptyIntersection,
    #[error("no variants to compare")]
    NoVariants,
}

/// Source ids declared by every run list.
pub fn declared_intersection(runs: &[&[SchemaRunRecord]]) -> BTreeSet<String> {
    let mut sets = runs.iter().map(|rs| rs.iter().filter(|r| r.declared).map(|r| r.source_id.clone()).collect::<BTreeSet<_>>());
    let first = sets.next().unwrap_or_default();
    sets.fold(first, |acc, s| acc.intersection(&s).cloned().collect())
}

/// Lower medians of each metric over the runs whose ids are in `keep`.
pub fn medians(runs: &[SchemaRunRecord], keep: &BTreeSet<String>) -> Option<Medians> {
    let effs: Vec<&EfficiencyRecord> = runs.iter().filter(|r| keep.contains(&r.source_id)).filter_map(|r| r.efficiency.as_ref()).collect();
    let col = |f: fn(&EfficiencyRecord) -> f64| lower_median(&effs.iter().map(|e| f(e)).collect::<Vec<_>>());
    let tpots: Vec<f64> = effs.iter().filter_map(|e| e.tpot_ms).collect();
    Some(Medians {
        gct: col(|e| e.gct)?,
        ttft: col(|e| e.ttft)?,
        tpot_ms: lower_median(&tpots),
        tgt: col(|e| e.tgt)?,
        output_tokens: col(|e| e.output_tokens as f64)?,
        ff_tokens: col(|e| e.ff_tokens as f64)?,
    })
}

/// Runs each variant over the corpus and summarizes the schemas all of
/// them declared.
pub fn run_efficiency(
    records: &[DatasetRecord],
    variants: &[Variant],
    engine: &Engine,
    sources: &SourceFactory,
    jobs: usize,
) -> Result<EfficiencyReport, EfficiencyError> {
    if variants.is_empty() {
        return Err(EfficiencyError::NoVariants);
    }
    let runs: Vec<(String, Vec<SchemaRunRecord>)> =
        variants.iter().map(|v| (v.name.clone(), run_coverage(&v.name, records, &v.config, engine, sources, jobs).0)).collect();
    summarize_efficiency(runs)
}

pub fn summarize_efficiency(runs: Vec<(String, Vec<SchemaRunRecord>)>) -> Result<EfficiencyReport, EfficiencyError> {
    let lists: Vec<&[SchemaRunRecord]> = runs.iter().map(|(_, r)| r.as_slice()).collect();
    let keep = declared_intersection(&lists);
    if keep.is_empty() {
        return Err(EfficiencyError::EmptyIntersection);
    }
    let variants = runs
        .iter()
        .map(|(name, rs)| {
            let medians = medians(rs, &keep).ok_or(EfficiencyError::EmptyIntersection)?;
            Ok(VariantSummary { name: name.clone(), schemas: keep.len(), medians })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EfficiencyReport { intersection: keep.into_iter().collect(), variants, runs: runs.into_iter().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(round_half_up(0.955, 2), 0.96);
        assert_eq!(round_half_up(0.86 / 0.90, 2), 0.96);
        assert_eq!(round_half_up(0.125, 2), 0.13);
        assert_eq!(round_half_up(0.124, 2), 0.12);
    }

    #[test]
    fn prompt_shape() {
        let p = build_prompt("{}", &[]);
        assert_eq!(p.matches("## Input Schema:").count(), 1);
        let shots = vec![("{\"type\":\"null\"}".to_string(), "null".to_string()); 2];
        let p = build_prompt("{\"type\":\"integer\"}", &shots);
        let target = p.rfind("## Input Schema:").unwrap();
        assert_eq!(p[..target].matches("## Input Schema:").count(), 2);
        assert_eq!(p[..target].matches("## Expected Output:").count(), 2);
        assert!(p.ends_with("## Expected Output:\n"));
    }
}
