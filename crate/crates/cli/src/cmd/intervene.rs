use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use serde_json::json;

use sandpile_core::intervention::{intervention_table, summarize, write_csv, CornerstoneReport};
use sandpile_core::rational::{self, to_fraction_string, Rational};
use sandpile_core::{Generator, InterventionResult};

use crate::cmd::analyze::Format;
use crate::error::CliResult;
use crate::input::{emit, select_generators, GeneratorSelector, Source, SourceOptions};
use crate::manifest::RunManifest;

#[derive(Args, Debug)]
pub struct InterveneArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub source_opts: SourceOptions,
    #[arg(long, default_value_t = GeneratorSelector::Auto)]
    pub generator: GeneratorSelector,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Entry {
    generator: Generator,
    #[serde(with = "rational::json")]
    baseline: Rational,
    #[serde(flatten)]
    summary: CornerstoneReport,
    table: Vec<InterventionResult>,
}

pub fn run_cmd(args: &InterveneArgs) -> CliResult {
    let cfg = args.source.load(&args.source_opts)?;
    let entries = select_generators(&cfg, args.generator)?
        .into_iter()
        .map(|g| -> CliResult<Entry> {
            let table = intervention_table(&cfg, &g)?;
            let summary = summarize(&g, &table);
            let baseline = table[0].baseline.clone();
            Ok(Entry { generator: g, baseline, summary, table })
        })
        .collect::<CliResult<Vec<_>>>()?;

    for e in &entries {
        eprintln!(
            "generator at {} ({} vertices): lambda = {}, cornerstones = {}",
            e.generator.anchor(),
            e.generator.len(),
            to_fraction_string(&e.summary.stability_level),
            e.summary.cornerstones.len()
        );
    }

    let mut params = args.source.params(&args.source_opts);
    params["generator"] = json!(args.generator.to_string());
    let mut manifest = RunManifest::new("intervene", params);
    let body = match args.format {
        Format::Json => {
            let mut s = serde_json::to_string(&json!({ "manifest": &manifest, "generators": &entries }))
                .expect("report serializes");
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let rows: Vec<InterventionResult> = entries.into_iter().flat_map(|e| e.table).collect();
            let mut buf = Vec::new();
            write_csv(&mut buf, &rows).expect("writing to memory");
            buf
        }
    };
    emit(args.out.as_deref(), &mut manifest, &body)
}
