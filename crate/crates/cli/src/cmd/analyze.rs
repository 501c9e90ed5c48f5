use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use sandpile_core::rational::{self, Rational};
use sandpile_core::{brute_force_expected_size, expected_avalanche_size, AnalysisReport, Generator};

use crate::error::{CliError, CliResult};
use crate::input::{emit, select_generators, GeneratorSelector, Source, SourceOptions};
use crate::manifest::RunManifest;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub source_opts: SourceOptions,
    /// `auto` for every generator, or `r,c` for the one containing that vertex.
    #[arg(long, default_value_t = GeneratorSelector::Auto)]
    pub generator: GeneratorSelector,
    /// Cross-check every expectation against per-vertex relaxation.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct OracleCheck {
    #[serde(with = "rational::json")]
    value: Rational,
    matched: bool,
}

#[derive(Serialize)]
struct Entry {
    generator: Generator,
    #[serde(flatten)]
    report: AnalysisReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleCheck>,
}

fn to_csv(entries: &[Entry], oracle: bool) -> String {
    let mut out = String::from("anchor_row,anchor_col,size,expected_num,expected_den,depth");
    if oracle {
        out.push_str(",oracle_num,oracle_den,oracle_match");
    }
    out.push('\n');
    for e in entries {
        let a = e.generator.anchor();
        let x = &e.report.expected_size;
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            a.row,
            a.col,
            e.generator.len(),
            x.numer(),
            x.denom(),
            e.report.depth
        ));
        if let Some(o) = &e.oracle {
            out.push_str(&format!(",{},{},{}", o.value.numer(), o.value.denom(), o.matched));
        }
        out.push('\n');
    }
    out
}

pub fn run_cmd(args: &AnalyzeArgs) -> CliResult {
    let cfg = args.source.load(&args.source_opts)?;
    let generators = select_generators(&cfg, args.generator)?;
    let entries = generators
        .into_iter()
        .map(|g| -> CliResult<Entry> {
            let report = expected_avalanche_size(&cfg, &g)?;
            let oracle = if args.oracle {
                let value = brute_force_expected_size(&cfg, g.vertices())?;
                Some(OracleCheck { matched: value == report.expected_size, value })
            } else {
                None
            };
            Ok(Entry { generator: g, report, oracle })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut params = args.source.params(&args.source_opts);
    params["generator"] = json!(args.generator.to_string());
    params["oracle"] = json!(args.oracle);
    let mut manifest = RunManifest::new("analyze", params);
    let body = match args.format {
        Format::Json => {
            let mut s = serde_json::to_string(&json!({ "manifest": &manifest, "reports": &entries }))
                .expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => to_csv(&entries, args.oracle),
    };
    emit(args.out.as_deref(), &mut manifest, body.as_bytes())?;

    let failed: Vec<String> = entries
        .iter()
        .filter(|e| e.oracle.as_ref().is_some_and(|o| !o.matched))
        .map(|e| e.generator.anchor().to_string())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!("oracle disagrees for generators at {}", failed.join(", "))))
    }
}
