//! Emptying a single generator vertex and its effect on the expected
//! avalanche size; stability level and cornerstone vertices.

use std::io::Write;

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{expected_avalanche_size, AnalysisReport};
use crate::error::{Result, SandpileError};
use crate::lattice::{GridConfig, Vertex};
use crate::rational::{self, Rational};
use crate::wave::{critical_components, Generator};

/// Expected avalanche size after emptying one vertex, split by the
/// critical components the remainder of the generator falls into.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Removal {
    pub target: Vertex,
    /// Conditioned on the drop landing anywhere in the original generator.
    pub over_generator: Rational,
    /// Conditioned on the drop landing in the generator minus the target;
    /// `None` for a singleton generator.
    pub over_remainder: Option<Rational>,
    pub components: Vec<AnalysisReport>,
}

/// `A` must be a maximal generator of the stable configuration `cfg`.
fn check_maximal(cfg: &GridConfig, generator: &Generator) -> Result<()> {
    cfg.ensure_stable()?;
    // Re-validates criticality and connectivity.
    Generator::new(cfg, generator.vertices().iter().copied())?;
    let side = cfg.side();
    let inside = generator.mask(side);
    for v in generator.vertices() {
        for w in crate::lattice::neighbor_indices(v.index(side), side) {
            if !inside[w] && cfg.heights()[w] == crate::lattice::CRITICAL {
                return Err(SandpileError::NotMaximal);
            }
        }
    }
    Ok(())
}

fn removal_unchecked(cfg: &GridConfig, generator: &Generator, target: Vertex) -> Result<Removal> {
    if !generator.contains(target) {
        return Err(SandpileError::TargetOutsideGenerator(target));
    }
    let side = cfg.side();
    let emptied = cfg.remove_grains(target)?;
    let mut footprint = generator.mask(side);
    footprint[target.index(side)] = false;
    let components = critical_components(emptied.heights(), side, Some(&footprint))
        .iter()
        .map(|c| expected_avalanche_size(&emptied, &Generator::from_indices(c, side)))
        .collect::<Result<Vec<_>>>()?;
    let weighted = |denominator: usize| {
        let den = BigInt::from(denominator);
        components.iter().fold(Rational::zero(), |acc, r| {
            acc + Rational::new(BigInt::from(r.generator.len()), den.clone()) * &r.expected_size
        })
    };
    let remainder = generator.len() - 1;
    Ok(Removal {
        target,
        over_generator: weighted(generator.len()),
        over_remainder: (remainder > 0).then(|| weighted(remainder)),
        components,
    })
}

pub fn removal(cfg: &GridConfig, generator: &Generator, target: Vertex) -> Result<Removal> {
    check_maximal(cfg, generator)?;
    removal_unchecked(cfg, generator, target)
}

/// Expected size of the next avalanche, given it lands uniformly on
/// `generator`, once `target` has been emptied. The emptied vertex itself
/// contributes a zero-size avalanche.
pub fn expected_size_after_removal(cfg: &GridConfig, generator: &Generator, target: Vertex) -> Result<Rational> {
    Ok(removal(cfg, generator, target)?.over_generator)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InterventionResult {
    pub target: Vertex,
    #[serde(with = "rational::json")]
    pub expected_size_after: Rational,
    #[serde(with = "rational::json")]
    pub baseline: Rational,
    #[serde(with = "rational::json")]
    pub ratio: Rational,
    pub is_cornerstone: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CornerstoneReport {
    #[serde(skip)]
    pub generator: Generator,
    #[serde(with = "rational::json")]
    pub stability_level: Rational,
    pub cornerstones: Vec<Vertex>,
}

/// One row per generator vertex, row-major, with the minimisers flagged.
pub fn intervention_table(cfg: &GridConfig, generator: &Generator) -> Result<Vec<InterventionResult>> {
    check_maximal(cfg, generator)?;
    let baseline = expected_avalanche_size(cfg, generator)?.expected_size;
    if baseline.is_zero() {
        return Err(SandpileError::ZeroBaseline);
    }
    let afters = generator
        .vertices()
        .par_iter()
        .map(|&t| removal_unchecked(cfg, generator, t).map(|r| r.over_generator))
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<Rational> = afters.iter().map(|a| a / &baseline).collect();
    let min = ratios.iter().min().expect("generator is nonempty").clone();
    Ok(generator
        .vertices()
        .iter()
        .zip(afters.into_iter().zip(ratios))
        .map(|(&target, (after, ratio))| InterventionResult {
            target,
            is_cornerstone: ratio == min,
            expected_size_after: after,
            baseline: baseline.clone(),
            ratio,
        })
        .collect())
}

/// Minimum post-removal to baseline ratio over the generator, and every
/// vertex attaining it.
pub fn stability_level(cfg: &GridConfig, generator: &Generator) -> Result<CornerstoneReport> {
    let table = intervention_table(cfg, generator)?;
    Ok(summarize(generator, &table))
}

pub fn summarize(generator: &Generator, table: &[InterventionResult]) -> CornerstoneReport {
    let stability_level = table.iter().map(|r| &r.ratio).min().expect("nonempty table").clone();
    let cornerstones = table.iter().filter(|r| r.is_cornerstone).map(|r| r.target).collect();
    CornerstoneReport { generator: generator.clone(), stability_level, cornerstones }
}

pub const CSV_HEADER: [&str; 7] =
    ["row", "col", "expected_after_num", "expected_after_den", "ratio_num", "ratio_den", "is_cornerstone"];

pub fn write_csv<W: Write>(out: W, rows: &[InterventionResult]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.target.row.to_string(),
            r.target.col.to_string(),
            r.expected_size_after.numer().to_string(),
            r.expected_size_after.denom().to_string(),
            r.ratio.numer().to_string(),
            r.ratio.denom().to_string(),
            r.is_cornerstone.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
