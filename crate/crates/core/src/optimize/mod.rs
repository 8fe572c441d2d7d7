//! Searches over constellations: simulated annealing on generator
//! structures, a genetic algorithm on free constellations, and a brute-force
//! grid over the explicit parameterisation of U(2).
//!
//! Every objective is reduced to a per-pair score where higher is better,
//! and a constellation scores the minimum over its pairs.

mod ga;
mod grid;
mod sa;

use std::time::{Duration, Instant};

use rand::Rng;
use serde::Serialize;

use crate::constellation::{Constellation, IndexedTarget};
use crate::diversity::{self, chernoff_pair, exact_pair, ChannelConfig, DiversityReport};
use crate::error::{Error, Result};
use crate::matrix::{cayley, CMatrix, SkewHermitian, UnitaryMatrix, C64};

pub use ga::{genetic_algorithm, GaConfig};
pub use grid::{grid_search_u2, u2_from_angles, GridConfig};
pub use sa::{refine_from, simulated_annealing, SaConfig, Seed};

/// Largest constellation for which the exact diversity function may be
/// optimised; every pair costs a quadrature per evaluation.
pub const EXACT_SIZE_LIMIT: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub enum Objective {
    MaxProduct,
    MaxSum,
    MinChernoffAtRho(ChannelConfig),
    MinExactAtRho(ChannelConfig),
    /// Minimises, for the worst pair, the mean over the grid of `log₁₀` of
    /// the pairwise Chernoff bound.
    MinChernoffOverInterval { base: ChannelConfig, rhos: Vec<f64> },
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::MaxProduct => "product",
            Objective::MaxSum => "sum",
            Objective::MinChernoffAtRho(_) => "chernoff",
            Objective::MinExactAtRho(_) => "exact",
            Objective::MinChernoffOverInterval { .. } => "chernoff-interval",
        }
    }

    /// Rejects objectives that cannot be evaluated on a `T×M` constellation
    /// of size `l`.
    pub fn check(&self, t: usize, m: usize, l: usize) -> Result<()> {
        if l < 2 {
            return Err(Error::TooFewElements(l));
        }
        let cfg = match self {
            Objective::MaxProduct | Objective::MaxSum => return Ok(()),
            Objective::MinChernoffAtRho(c) | Objective::MinExactAtRho(c) => c,
            Objective::MinChernoffOverInterval { base, rhos } => {
                if rhos.is_empty() {
                    return Err(Error::Config("SNR interval grid is empty".into()));
                }
                if rhos.windows(2).any(|w| !(w[0] < w[1])) || !(rhos[0] > 0.0) {
                    return Err(Error::Config("SNR interval grid must be positive and increasing".into()));
                }
                base
            }
        };
        if (cfg.t, cfg.m) != (t, m) {
            return Err(Error::Config(format!(
                "objective channel has T = {}, M = {} but the search space has T = {t}, M = {m}",
                cfg.t, cfg.m
            )));
        }
        if matches!(self, Objective::MinExactAtRho(_)) && l > EXACT_SIZE_LIMIT {
            return Err(Error::Config(format!(
                "exact diversity optimisation is limited to L ≤ {EXACT_SIZE_LIMIT}, got L = {l}"
            )));
        }
        Ok(())
    }

    /// Score of one pair; higher is better.
    pub fn pair_score(&self, target: &IndexedTarget) -> Result<f64> {
        let t = &target.target;
        match self {
            Objective::MaxProduct => t.product_distance(),
            Objective::MaxSum => t.sum_distance(),
            Objective::MinChernoffAtRho(cfg) => Ok(-chernoff_pair(&t.gaps()?, cfg)),
            Objective::MinExactAtRho(cfg) => Ok(-exact_pair(&t.gaps()?, cfg)?),
            Objective::MinChernoffOverInterval { base, rhos } => {
                let gaps = t.gaps()?;
                let mut acc = 0.0;
                for &rho in rhos {
                    acc += chernoff_pair(&gaps, &base.with_rho(rho)?).log10();
                }
                Ok(-acc / rhos.len() as f64)
            }
        }
    }

    /// Score of a target list: the worst pair.
    pub fn score(&self, targets: &[IndexedTarget]) -> Result<f64> {
        match self {
            Objective::MaxProduct => diversity::min_product(targets),
            Objective::MaxSum => diversity::min_sum(targets),
            _ => {
                let mut worst = f64::INFINITY;
                for t in targets {
                    worst = worst.min(self.pair_score(t)?);
                }
                Ok(worst)
            }
        }
    }

    /// Converts a score to the objective's natural value: the diversity
    /// product or sum, or the (worst-pair) diversity function value.
    pub fn value_from_score(&self, score: f64) -> f64 {
        match self {
            Objective::MaxProduct | Objective::MaxSum => score,
            Objective::MinChernoffAtRho(_) | Objective::MinExactAtRho(_) => -score,
            Objective::MinChernoffOverInterval { .. } => 10f64.powf(-score),
        }
    }

    /// Whether larger natural values are better.
    pub fn maximises(&self) -> bool {
        matches!(self, Objective::MaxProduct | Objective::MaxSum)
    }

    pub fn evaluate(&self, c: &Constellation) -> Result<f64> {
        self.check(c.t(), c.m(), c.len())?;
        Ok(self.value_from_score(self.score(&c.pair_targets())?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxIterations,
    Stalled,
    TimeBudget,
    Exhausted,
}

#[derive(Clone, Debug)]
pub struct OptimizerTrace {
    /// `(iteration, best objective value)` at the start and at every
    /// improvement of the best-ever state.
    pub iterations: Vec<(usize, f64)>,
    /// Best objective value in natural units.
    pub best_value: f64,
    pub final_constellation: Constellation,
    pub final_generators: Option<Vec<UnitaryMatrix>>,
    pub final_report: DiversityReport,
    pub accepted_count: usize,
    pub rejected_count: usize,
    pub iterations_run: usize,
    pub stop_reason: StopReason,
}

pub(crate) const PERTURB_RETRIES: usize = 100;

/// `cayley(cayley(G) + σZ)` for a random skew-Hermitian `Z`.
///
/// If `G` has an eigenvalue too close to −1 for its Cayley coordinates to
/// exist, it is first rotated by a random global phase.
pub fn perturb_unitary<R: Rng + ?Sized>(
    g: &UnitaryMatrix,
    sigma: f64,
    rng: &mut R,
) -> Result<UnitaryMatrix> {
    let mut base = g.clone();
    let mut last = None;
    for _ in 0..PERTURB_RETRIES {
        let s = match cayley(&base) {
            Ok(s) => s,
            Err(e @ Error::CayleySingular { .. }) => {
                let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
                base = UnitaryMatrix::new(base.scale(phase))?;
                last = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let z = SkewHermitian::random(g.dim(), sigma, rng);
        match cayley(&(&s + z.as_matrix())).and_then(UnitaryMatrix::new) {
            Ok(u) => return Ok(u),
            Err(e) if e.is_numeric() || matches!(e, Error::NotUnitary { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Numeric("perturbation failed".into())))
}

/// Rotates a frame by a random near-identity unitary `cayley(σZ)`.
pub(crate) fn perturb_frame<R: Rng + ?Sized>(
    frame: &CMatrix,
    sigma: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    let z = SkewHermitian::random(frame.rows(), sigma, rng);
    let rot = z.cayley()?;
    let out = rot.as_matrix() * frame;
    if out.unitarity_defect() > UnitaryMatrix::TOLERANCE {
        crate::matrix::gram_schmidt_columns(&out)
            .ok_or_else(|| Error::Numeric("frame lost rank".into()))
    } else {
        Ok(out)
    }
}

/// Wall-clock and iteration limits shared by the searches.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Budget {
    start: Instant,
    limit: Option<Duration>,
}

impl Budget {
    pub(crate) fn new(seconds: Option<f64>) -> Self {
        Budget {
            start: Instant::now(),
            limit: seconds.map(Duration::from_secs_f64),
        }
    }

    pub(crate) fn exhausted(&self) -> bool {
        self.limit.is_some_and(|l| self.start.elapsed() >= l)
    }
}
