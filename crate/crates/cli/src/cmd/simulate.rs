use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::json;

use sandpile_core::chain::{run, seeded_rng, write_trajectory, RNG_NAME};
use sandpile_core::{find_generators, GridConfig};

use crate::error::{io_error, CliError, CliResult};
use crate::input::{load_config, ConfigFormat};
use crate::manifest::RunManifest;

pub const TRAJECTORY: &str = "trajectory.jsonl";
pub const FINAL_CONFIG: &str = "final_config.json";
pub const HISTOGRAM: &str = "generator_histogram.csv";
pub const MANIFEST: &str = "manifest.json";

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Lattice side L. Optional with --config, where it must agree.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Starting configuration; defaults to the empty lattice.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ConfigFormat::Auto)]
    pub config_format: ConfigFormat,
}

fn start(args: &SimulateArgs) -> CliResult<GridConfig> {
    match (&args.config, args.size) {
        (Some(path), size) => {
            let cfg = load_config(path, args.config_format)?;
            if let Some(l) = size.filter(|&l| l != cfg.side()) {
                return Err(CliError::Usage(format!("--size {l} disagrees with config side {}", cfg.side())));
            }
            if !cfg.is_stable() {
                return Err(CliError::Input(format!("{}: configuration is not stable", path.display())));
            }
            Ok(cfg)
        }
        (None, Some(0)) => Err(CliError::Usage("--size must be positive".into())),
        (None, Some(l)) => Ok(GridConfig::zeros(l)),
        (None, None) => Err(CliError::Usage("one of --size or --config is required".into())),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

pub fn run_cmd(args: &SimulateArgs) -> CliResult {
    let initial = start(args)?;
    let mut manifest = RunManifest::new(
        "simulate",
        json!({
            "size": initial.side(),
            "steps": args.steps,
            "seed": args.seed,
            "config": args.config.as_ref().map(|p| p.display().to_string()),
        }),
    );
    manifest.rng = Some(RNG_NAME);
    manifest.seed = Some(args.seed);
    manifest.outputs = [TRAJECTORY, FINAL_CONFIG, HISTOGRAM, MANIFEST].map(String::from).to_vec();

    let output = run(&initial, args.steps, &mut seeded_rng(args.seed), None)?;
    fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;

    let path = args.out.join(TRAJECTORY);
    let mut w = create(&path)?;
    write_trajectory(&mut w, args.seed, &manifest, &output.steps)
        .and_then(|_| w.flush())
        .map_err(|e| io_error(&path, e))?;

    let path = args.out.join(FINAL_CONFIG);
    fs::write(&path, output.final_config.to_json() + "\n").map_err(|e| io_error(&path, e))?;

    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for g in find_generators(&output.final_config)? {
        *histogram.entry(g.len()).or_default() += 1;
    }
    let path = args.out.join(HISTOGRAM);
    let mut w = create(&path)?;
    writeln!(w, "size,count")
        .and_then(|_| histogram.iter().try_for_each(|(s, c)| writeln!(w, "{s},{c}")))
        .and_then(|_| w.flush())
        .map_err(|e| io_error(&path, e))?;

    manifest.write(&args.out.join(MANIFEST))?;
    let total: u64 = output.steps.iter().map(|s| s.size).sum();
    eprintln!(
        "{} steps, {} topplings, {} generators, written to {}",
        args.steps,
        total,
        histogram.values().sum::<usize>(),
        args.out.display()
    );
    Ok(())
}
