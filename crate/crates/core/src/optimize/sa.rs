//! Simulated annealing in Cayley coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constellation::{Constellation, Form, GeneratorStructure, ReductionPlan, StructureKind};
use crate::diversity;
use crate::error::{Error, Result};
use crate::matrix::UnitaryMatrix;

use super::{perturb_frame, perturb_unitary, Budget, Objective, OptimizerTrace, StopReason};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaConfig {
    pub seed: u64,
    /// Starting temperature; `None` means a tenth of the initial score's
    /// magnitude.
    pub initial_temperature: Option<f64>,
    pub cooling_factor: f64,
    pub steps_per_temperature: usize,
    pub initial_sigma: f64,
    pub sigma_decay: f64,
    pub min_sigma: f64,
    pub max_iterations: usize,
    pub stall_limit: usize,
    pub metropolis: bool,
    /// Wall-clock cap in seconds. Runs cut short by it are not reproducible.
    pub time_budget: Option<f64>,
    pub use_reduced_targets: bool,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            seed: 0,
            initial_temperature: None,
            cooling_factor: 0.95,
            steps_per_temperature: 200,
            initial_sigma: 0.2,
            sigma_decay: 0.95,
            min_sigma: 1e-4,
            max_iterations: 20_000,
            stall_limit: 5_000,
            metropolis: true,
            time_budget: None,
            use_reduced_targets: true,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if let Some(t) = self.initial_temperature {
            if !(t > 0.0) {
                return bad("initial_temperature must be positive");
            }
        }
        if !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            return bad("cooling_factor must lie in (0, 1)");
        }
        if !(self.sigma_decay > 0.0 && self.sigma_decay < 1.0) {
            return bad("sigma_decay must lie in (0, 1)");
        }
        if !(self.initial_sigma > 0.0) || !(self.min_sigma > 0.0) {
            return bad("initial_sigma and min_sigma must be positive");
        }
        if self.steps_per_temperature == 0 || self.max_iterations == 0 || self.stall_limit == 0 {
            return bad("steps_per_temperature, max_iterations and stall_limit must be positive");
        }
        if let Some(b) = self.time_budget {
            if !(b > 0.0) {
                return bad("time_budget must be positive");
            }
        }
        Ok(())
    }
}

/// Starting point for [`refine_from`].
#[derive(Clone, Debug)]
pub enum Seed {
    Structure(GeneratorStructure),
    /// A constellation without generator structure; each move perturbs one
    /// element.
    Free(Constellation),
}

/// A point of the search space.
#[derive(Clone, Debug)]
enum State {
    Structure(GeneratorStructure),
    Free(Constellation),
}

struct Evaluator<'a> {
    objective: &'a Objective,
    plan: Option<ReductionPlan>,
}

impl Evaluator<'_> {
    fn score(&self, s: &State) -> Result<f64> {
        match s {
            State::Structure(g) => {
                let targets = match &self.plan {
                    Some(plan) => plan.targets(g.generators()),
                    None => g.expand()?.pair_targets(),
                };
                self.objective.score(&targets)
            }
            State::Free(c) => self.objective.score(&c.pair_targets()),
        }
    }
}

fn propose<R: Rng + ?Sized>(s: &State, sigma: f64, rng: &mut R) -> Result<State> {
    match s {
        State::Structure(g) => {
            let gens = g
                .generators()
                .iter()
                .map(|u| perturb_unitary(u, sigma, rng))
                .collect::<Result<Vec<_>>>()?;
            Ok(State::Structure(g.with_generators(gens)?))
        }
        State::Free(c) => {
            let k = rng.random_range(0..c.len());
            let mut els = c.elements().to_vec();
            match c.form() {
                Form::Special => {
                    let u = UnitaryMatrix::new(els[k].clone())?;
                    els[k] = perturb_unitary(&u, sigma, rng)?.into_matrix();
                    let us = els
                        .into_iter()
                        .map(UnitaryMatrix::new)
                        .collect::<Result<Vec<_>>>()?;
                    Ok(State::Free(Constellation::special(us)?))
                }
                Form::General => {
                    els[k] = perturb_frame(&els[k], sigma, rng)?;
                    Ok(State::Free(Constellation::general(els)?))
                }
            }
        }
    }
}

fn finish(
    objective: &Objective,
    best: State,
    best_score: f64,
    mut trace: Vec<(usize, f64)>,
    counts: (usize, usize, usize),
    stop_reason: StopReason,
) -> Result<OptimizerTrace> {
    let (constellation, generators) = match best {
        State::Structure(g) => (g.expand()?, Some(g.generators().to_vec())),
        State::Free(c) => (c, None),
    };
    let best_value = objective.value_from_score(best_score);
    if trace.last().map(|t| t.0) != Some(counts.2) {
        trace.push((counts.2, best_value));
    }
    Ok(OptimizerTrace {
        iterations: trace,
        best_value,
        final_report: diversity::evaluate(&constellation)?,
        final_constellation: constellation,
        final_generators: generators,
        accepted_count: counts.0,
        rejected_count: counts.1,
        iterations_run: counts.2,
        stop_reason,
    })
}

fn anneal(initial: State, objective: &Objective, cfg: &SaConfig, rng: &mut ChaCha8Rng) -> Result<OptimizerTrace> {
    cfg.validate()?;
    let plan = match (&initial, cfg.use_reduced_targets) {
        (State::Structure(g), true) => Some(g.kind().reduction_plan()?),
        _ => None,
    };
    let eval = Evaluator { objective, plan };
    let budget = Budget::new(cfg.time_budget);

    let mut current = initial;
    let mut current_score = eval.score(&current)?;
    let mut best = current.clone();
    let mut best_score = current_score;
    let t0 = cfg
        .initial_temperature
        .unwrap_or_else(|| (0.1 * current_score.abs()).max(1e-3));
    let mut trace = vec![(0, objective.value_from_score(best_score))];
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut since_best = 0usize;
    let mut sigma_scale = 1.0;
    let mut stop = StopReason::MaxIterations;
    let mut iter = 0usize;

    while iter < cfg.max_iterations {
        if budget.exhausted() {
            stop = StopReason::TimeBudget;
            break;
        }
        if since_best >= cfg.stall_limit {
            stop = StopReason::Stalled;
            break;
        }
        let stage = (iter / cfg.steps_per_temperature) as i32;
        let temperature = t0 * cfg.cooling_factor.powi(stage);
        let sigma = (cfg.initial_sigma * cfg.sigma_decay.powi(stage)).max(cfg.min_sigma) * sigma_scale;
        iter += 1;
        since_best += 1;

        let candidate = match propose(&current, sigma, rng) {
            Ok(c) => c,
            Err(e) if e.is_numeric() => {
                sigma_scale *= 0.5;
                rejected += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let score = eval.score(&candidate)?;
        let u: f64 = rng.random();
        let accept = score >= current_score
            || (cfg.metropolis && u < ((score - current_score) / temperature).exp());
        if accept {
            accepted += 1;
            current = candidate;
            current_score = score;
            if score > best_score {
                best = current.clone();
                best_score = score;
                since_best = 0;
                trace.push((iter, objective.value_from_score(best_score)));
            }
        } else {
            rejected += 1;
        }
    }
    finish(objective, best, best_score, trace, (accepted, rejected, iter), stop)
}

/// Simulated annealing over the generators of `kind`, starting from Haar
/// random generators of dimension `dim` (`T` for `GeneralAkB`, else `M`).
pub fn simulated_annealing(
    kind: StructureKind,
    dim: usize,
    objective: &Objective,
    cfg: &SaConfig,
) -> Result<OptimizerTrace> {
    let size = kind.size();
    if size < 2 {
        return Err(Error::TooFewElements(size));
    }
    let (t, m) = match kind {
        StructureKind::GeneralAkB { m, .. } => (dim, m),
        _ => (2 * dim, dim),
    };
    objective.check(t, m, size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = GeneratorStructure::random(kind, dim, &mut rng)?;
    anneal(State::Structure(start), objective, cfg, &mut rng)
}

/// Simulated annealing started at an existing design. The result is never
/// worse than the seed.
pub fn refine_from(seed: Seed, objective: &Objective, cfg: &SaConfig) -> Result<OptimizerTrace> {
    let state = match seed {
        Seed::Structure(g) => {
            let (t, m) = match g.kind() {
                StructureKind::GeneralAkB { m, .. } => (g.generator_dim(), *m),
                _ => (2 * g.generator_dim(), g.generator_dim()),
            };
            objective.check(t, m, g.kind().size())?;
            State::Structure(g)
        }
        Seed::Free(c) => {
            objective.check(c.t(), c.m(), c.len())?;
            State::Free(c)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    anneal(state, objective, cfg, &mut rng)
}
