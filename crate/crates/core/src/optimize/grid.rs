//! Exhaustive search over a grid in the explicit parameterisation
//! `[[a, b e^{iθ}], [−b̄, ā e^{iθ}]]`, `a = cos φ e^{iα}`, `b = sin φ e^{iβ}`
//! of `U(2)`.

use std::f64::consts::{FRAC_PI_2, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::{GeneratorStructure, StructureKind};
use crate::diversity;
use crate::error::{Error, Result};
use crate::matrix::{CMatrix, UnitaryMatrix, C64};

use super::{Objective, OptimizerTrace, StopReason};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Samples per angle.
    pub density: usize,
    /// Refuse grids with more points than this.
    pub max_points: u128,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            density: 4,
            max_points: 50_000_000,
        }
    }
}

pub fn u2_from_angles(phi: f64, alpha: f64, beta: f64, theta: f64) -> UnitaryMatrix {
    let a = C64::from_polar(phi.cos(), alpha);
    let b = C64::from_polar(phi.sin(), beta);
    let e = C64::from_polar(1.0, theta);
    let m = CMatrix::from_rows(&[vec![a, b * e], vec![-b.conj(), a.conj() * e]])
        .expect("2x2 entries");
    UnitaryMatrix::new(m).expect("explicit U(2) form is unitary")
}

/// The `d⁴` grid points of one generator. `φ` avoids the endpoints of
/// `[0, π/2]`; the phases start at 0.
fn generator_grid(d: usize) -> Vec<UnitaryMatrix> {
    let phi = |i: usize| (i as f64 + 0.5) * FRAC_PI_2 / d as f64;
    let ang = |j: usize| TAU * j as f64 / d as f64;
    let mut out = Vec::with_capacity(d.pow(4));
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    out.push(u2_from_angles(phi(i), ang(j), ang(k), ang(l)));
                }
            }
        }
    }
    out
}

/// Best grid point for `kind` over the product grid of its generators.
/// Ties go to the first point in enumeration order, where the first
/// generator varies slowest.
pub fn grid_search_u2(kind: StructureKind, objective: &Objective, cfg: &GridConfig) -> Result<OptimizerTrace> {
    if kind.is_general() {
        return Err(Error::Config("grid search covers special-form structures in U(2) only".into()));
    }
    if cfg.density == 0 {
        return Err(Error::Config("grid density must be positive".into()));
    }
    objective.check(4, 2, kind.size())?;
    let g = kind.generator_count() as u32;
    let per = (cfg.density as u128).pow(4);
    let points = per
        .checked_pow(g)
        .filter(|&p| p <= cfg.max_points)
        .ok_or(Error::GridTooLarge {
            points: per.saturating_pow(g),
            cap: cfg.max_points,
        })?;
    let grid = generator_grid(cfg.density);
    let plan = kind.reduction_plan()?;
    let per = per as usize;
    let gens_at = |idx: usize| {
        let mut rest = idx;
        let mut gens = vec![UnitaryMatrix::identity(2); g as usize];
        for slot in gens.iter_mut().rev() {
            *slot = grid[rest % per].clone();
            rest /= per;
        }
        gens
    };
    let best = (0..points as usize)
        .into_par_iter()
        .map(|idx| -> Result<(f64, usize)> { Ok((objective.score(&plan.targets(&gens_at(idx)))?, idx)) })
        .try_reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a: (f64, usize), b: (f64, usize)| -> Result<(f64, usize)> {
                Ok(if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
            },
        )?;
    let gens = gens_at(best.1);
    let structure = GeneratorStructure::new(kind, gens.clone())?;
    let constellation = structure.expand()?;
    let best_value = objective.value_from_score(best.0);
    Ok(OptimizerTrace {
        iterations: vec![(points as usize, best_value)],
        best_value,
        final_report: diversity::evaluate(&constellation)?,
        final_constellation: constellation,
        final_generators: Some(gens),
        accepted_count: points as usize,
        rejected_count: 0,
        iterations_run: points as usize,
        stop_reason: StopReason::Exhausted,
    })
}
