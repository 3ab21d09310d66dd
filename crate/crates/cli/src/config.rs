//! The JSON run configuration and how flags override it.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use jsonmask_harness::bench::{RunConfig, Variant};

use crate::args::Options;
use crate::CliError;

/// Where scores come from when no model is attached.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    #[default]
    Adversarial,
    Uniform,
    /// A process speaking the line protocol on its standard streams, one
    /// process per decode.
    Adapter { command: Vec<String> },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantSpec {
    pub name: String,
    pub fast_forward: Option<bool>,
    pub masking: Option<bool>,
    pub max_tokens: Option<usize>,
    pub gct_in_ttft: Option<bool>,
    pub samples_per_schema: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub compile_timeout_secs: Option<f64>,
    pub generation_timeout_secs: Option<f64>,
    pub max_tokens: Option<usize>,
    pub samples_per_schema: Option<usize>,
    pub fast_forward: Option<bool>,
    pub masking: Option<bool>,
    pub gct_in_ttft: Option<bool>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub vocab: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub corpus: Vec<PathBuf>,
    /// Source id to dataset name map used for every corpus.
    pub metadata: Option<PathBuf>,
    pub strip_fields: Vec<String>,
    pub framework: Option<String>,
    pub source: SourceSpec,
    pub variants: Vec<VariantSpec>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let bytes = crate::read(path)?;
        let mut c: ConfigFile = serde_json::from_slice(&bytes).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        // Paths inside the file are relative to it.
        let base = path.parent().unwrap_or(Path::new("."));
        for p in c.vocab.iter_mut().chain(c.manifest.iter_mut()).chain(c.metadata.iter_mut()).chain(c.corpus.iter_mut()) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(c)
    }
}

/// Settings after defaults, the config file and flags, in that order.
pub struct Settings {
    pub file: ConfigFile,
    pub run: RunConfig,
    pub jobs: usize,
    pub vocab: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub corpus: Vec<PathBuf>,
}

impl Settings {
    pub fn resolve(opts: &Options) -> Result<Settings, CliError> {
        let file = match &opts.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let mut run = RunConfig::default();
        let pick = |flag: Option<f64>, file: Option<f64>, default: f64| flag.or(file).unwrap_or(default);
        run.compile_timeout_secs = pick(opts.timeout_compile, file.compile_timeout_secs, run.compile_timeout_secs);
        run.generation_timeout_secs = pick(opts.timeout_generate, file.generation_timeout_secs, run.generation_timeout_secs);
        run.max_tokens = opts.max_tokens.or(file.max_tokens).unwrap_or(run.max_tokens);
        run.samples_per_schema = file.samples_per_schema.unwrap_or(run.samples_per_schema);
        run.fast_forward = opts.fast_forward || file.fast_forward.unwrap_or(run.fast_forward);
        run.masking = file.masking.unwrap_or(run.masking);
        run.gct_in_ttft = file.gct_in_ttft.unwrap_or(run.gct_in_ttft);
        run.seed = opts.seed.or(file.seed).unwrap_or(run.seed);
        run.check().map_err(CliError::Usage)?;
        let corpus = if opts.corpus.is_empty() { file.corpus.clone() } else { opts.corpus.clone() };
        Ok(Settings {
            jobs: opts.jobs.or(file.jobs).unwrap_or(0),
            vocab: opts.vocab.clone().or_else(|| file.vocab.clone()),
            manifest: opts.manifest.clone().or_else(|| file.manifest.clone()),
            corpus,
            run,
            file,
        })
    }

    /// The configured variants, or plain decoding against fast-forward.
    pub fn variants(&self) -> Result<Vec<Variant>, CliError> {
        if self.file.variants.is_empty() {
            let plain = RunConfig { fast_forward: false, ..self.run.clone() };
            let ff = RunConfig { fast_forward: true, ..self.run.clone() };
            return Ok(vec![Variant { name: "plain".into(), config: plain }, Variant { name: "fast-forward".into(), config: ff }]);
        }
        self.file
            .variants
            .iter()
            .map(|v| {
                if v.name.is_empty() {
                    return Err(CliError::Usage("every variant needs a name".into()));
                }
                let base = self.run.clone();
                let config = RunConfig {
                    fast_forward: v.fast_forward.unwrap_or(base.fast_forward),
                    masking: v.masking.unwrap_or(base.masking),
                    max_tokens: v.max_tokens.unwrap_or(base.max_tokens),
                    gct_in_ttft: v.gct_in_ttft.unwrap_or(base.gct_in_ttft),
                    samples_per_schema: v.samples_per_schema.unwrap_or(base.samples_per_schema),
                    ..base
                };
                config.check().map_err(|e| CliError::Usage(format!("variant {}: {e}", v.name)))?;
                Ok(Variant { name: v.name.clone(), config })
            })
            .collect()
    }
}
