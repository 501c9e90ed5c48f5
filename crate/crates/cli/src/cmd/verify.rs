use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use sandpile_core::verify::{verify_squares, write_csv, VerifyOptions};

use crate::error::{CliError, CliResult};
use crate::input::emit;
use crate::manifest::RunManifest;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    #[arg(long, default_value_t = 12)]
    pub n_max: usize,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(i64).range(0..=2))]
    pub background: i64,
    /// CSV report path; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Negative control: perturbs one closed form so the sweep must fail.
    #[arg(long, hide = true)]
    pub corrupt_closed_form: bool,
}

pub fn run_cmd(args: &VerifyArgs) -> CliResult {
    if args.n_min < 1 || args.n_min > args.n_max {
        return Err(CliError::Usage(format!("need 1 <= --n-min <= --n-max, got {}..{}", args.n_min, args.n_max)));
    }
    let opts = VerifyOptions { background: args.background, corrupt_closed_form: args.corrupt_closed_form };
    let rows = verify_squares(args.n_min, args.n_max, &opts)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows).expect("writing to memory");

    let mut manifest = RunManifest::new(
        "verify-square",
        json!({ "n_min": args.n_min, "n_max": args.n_max, "background": args.background }),
    );
    emit(args.out.as_deref(), &mut manifest, &buf)?;

    let bad = rows.iter().filter(|r| !r.matched).count();
    eprintln!("{} rows, {bad} mismatches", rows.len());
    if bad == 0 {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!("{bad} of {} rows differ from the closed forms", rows.len())))
    }
}
