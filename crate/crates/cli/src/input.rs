use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use sandpile_core::square::build_embedded_square;
use sandpile_core::wave::generator_containing;
use sandpile_core::{find_generators, Generator, GridConfig, SquareSpec, Vertex};

use crate::error::{io_error, CliError, CliResult};
use crate::manifest::{sidecar, RunManifest};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConfigFormat {
    /// `.json` files are JSON, everything else plain text.
    Auto,
    Json,
    Text,
}

pub fn load_config(path: &Path, format: ConfigFormat) -> CliResult<GridConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let json = match format {
        ConfigFormat::Json => true,
        ConfigFormat::Text => false,
        ConfigFormat::Auto => path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")),
    };
    let parsed = if json { GridConfig::from_json(&text) } else { GridConfig::from_text(&text) };
    parsed.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Where a command's configuration comes from: a file or a synthetic square.
#[derive(Args, Clone, Debug)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Configuration file (JSON or whitespace-separated rows).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Use an all-3 N x N square with a one-vertex margin instead of a file.
    #[arg(long, value_name = "N")]
    pub square: Option<usize>,
}

#[derive(Args, Clone, Debug)]
pub struct SourceOptions {
    #[arg(long, value_enum, default_value_t = ConfigFormat::Auto)]
    pub config_format: ConfigFormat,
    /// Height outside the square for `--square`.
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(i64).range(0..=2))]
    pub background: i64,
}

impl Source {
    pub fn load(&self, opts: &SourceOptions) -> CliResult<GridConfig> {
        match (&self.config, self.square) {
            (Some(path), _) => load_config(path, opts.config_format),
            (None, Some(n)) => {
                let (spec, side) = SquareSpec::with_margin(n)?;
                Ok(build_embedded_square(side, &spec, opts.background)?)
            }
            (None, None) => Err(CliError::Usage("one of --config or --square is required".into())),
        }
    }

    pub fn params(&self, opts: &SourceOptions) -> Value {
        match (&self.config, self.square) {
            (Some(path), _) => json!({
                "config": path.display().to_string(),
                "config_format": format!("{:?}", opts.config_format).to_lowercase(),
            }),
            _ => json!({ "square": self.square, "background": opts.background }),
        }
    }
}

/// `auto` (every generator) or `r,c` (the generator containing that vertex).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorSelector {
    Auto,
    At(Vertex),
}

impl FromStr for GeneratorSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(GeneratorSelector::Auto);
        }
        let (r, c) = s.split_once(',').ok_or_else(|| format!("expected `auto` or `r,c`, got {s:?}"))?;
        let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
        let (row, col) = (parse(r)?, parse(c)?);
        if row == 0 || col == 0 {
            return Err("vertices are 1-based".into());
        }
        Ok(GeneratorSelector::At(Vertex::new(row, col)))
    }
}

impl std::fmt::Display for GeneratorSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GeneratorSelector::Auto => f.write_str("auto"),
            GeneratorSelector::At(v) => write!(f, "{},{}", v.row, v.col),
        }
    }
}

pub fn select_generators(cfg: &GridConfig, selector: GeneratorSelector) -> CliResult<Vec<Generator>> {
    if !cfg.is_stable() {
        return Err(CliError::Input("configuration is not stable".into()));
    }
    Ok(match selector {
        GeneratorSelector::Auto => find_generators(cfg)?,
        GeneratorSelector::At(v) => vec![generator_containing(cfg, v)?],
    })
}

/// Writes `body` to `out` (with a sidecar manifest) or to stdout.
pub fn emit(out: Option<&Path>, manifest: &mut RunManifest, body: &[u8]) -> CliResult {
    match out {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| io_error(path, e))?;
            let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
            manifest.outputs.push(name);
            manifest.write(&sidecar(path))
        }
        None => std::io::stdout().lock().write_all(body).map_err(|e| CliError::Input(format!("stdout: {e}"))),
    }
}
