//! Genetic search over free special-form constellations.
//!
//! The population is the constellation itself. An individual's fitness is
//! its worst pair score against the rest; the constellation's objective is
//! the worst fitness. Each round either replaces the least fit individuals
//! with fresh Haar unitaries or mutates one individual in Cayley
//! coordinates, and keeps the new population only if the objective does not
//! drop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constellation::{Constellation, IndexedTarget, PairTarget};
use crate::diversity;
use crate::error::{Error, Result};
use crate::matrix::UnitaryMatrix;

use super::{perturb_unitary, Budget, Objective, OptimizerTrace, StopReason};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub seed: u64,
    pub replace_count: usize,
    /// Probability that a round mutates instead of replacing.
    pub mutation_rate: f64,
    /// Largest mutation scale; each mutation draws its scale log-uniformly
    /// from three decades below this.
    pub mutation_sigma: f64,
    pub max_iterations: usize,
    pub stall_limit: usize,
    pub time_budget: Option<f64>,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            seed: 0,
            replace_count: 1,
            mutation_rate: 0.7,
            mutation_sigma: 0.5,
            max_iterations: 20_000,
            stall_limit: 5_000,
            time_budget: None,
        }
    }
}

impl GaConfig {
    pub fn validate(&self, population: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.replace_count == 0 || self.replace_count >= population {
            return bad(format!(
                "replace_count must lie in 1..{population}, got {}",
                self.replace_count
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("mutation_rate must lie in [0, 1]".into());
        }
        if !(self.mutation_sigma > 0.0) {
            return bad("mutation_sigma must be positive".into());
        }
        if self.max_iterations == 0 || self.stall_limit == 0 {
            return bad("max_iterations and stall_limit must be positive".into());
        }
        Ok(())
    }
}

/// Symmetric table of pair scores with per-row minima.
struct ScoreTable {
    l: usize,
    scores: Vec<f64>,
}

impl ScoreTable {
    fn pair(objective: &Objective, pop: &[UnitaryMatrix], i: usize, j: usize) -> Result<f64> {
        objective.pair_score(&IndexedTarget {
            target: PairTarget::Difference(pop[i].as_matrix() - pop[j].as_matrix()),
            pair: (i.min(j), i.max(j)),
        })
    }

    fn build(objective: &Objective, pop: &[UnitaryMatrix]) -> Result<Self> {
        let l = pop.len();
        let mut scores = vec![f64::INFINITY; l * l];
        for i in 0..l {
            for j in i + 1..l {
                let s = Self::pair(objective, pop, i, j)?;
                scores[i * l + j] = s;
                scores[j * l + i] = s;
            }
        }
        Ok(ScoreTable { l, scores })
    }

    fn update_row(&mut self, objective: &Objective, pop: &[UnitaryMatrix], i: usize) -> Result<()> {
        for j in 0..self.l {
            if j != i {
                let s = Self::pair(objective, pop, i, j)?;
                self.scores[i * self.l + j] = s;
                self.scores[j * self.l + i] = s;
            }
        }
        Ok(())
    }

    fn fitness(&self, i: usize) -> f64 {
        self.scores[i * self.l..(i + 1) * self.l]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    fn objective(&self) -> f64 {
        self.scores.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Indices of the `k` least fit individuals, ties to the lower index.
    fn worst(&self, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.l).collect();
        let fit: Vec<f64> = idx.iter().map(|&i| self.fitness(i)).collect();
        idx.sort_by(|&a, &b| fit[a].total_cmp(&fit[b]).then(a.cmp(&b)));
        idx.truncate(k);
        idx
    }
}

/// Genetic search for `L` unitaries in `U(M)`.
pub fn genetic_algorithm(m: usize, l: usize, objective: &Objective, cfg: &GaConfig) -> Result<OptimizerTrace> {
    if m == 0 {
        return Err(Error::validation("M", "dimension must be positive"));
    }
    objective.check(2 * m, m, l)?;
    cfg.validate(l)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let budget = Budget::new(cfg.time_budget);

    let mut pop: Vec<UnitaryMatrix> = (0..l).map(|_| UnitaryMatrix::random(m, &mut rng)).collect();
    let mut table = ScoreTable::build(objective, &pop)?;
    let mut current = table.objective();
    let mut trace = vec![(0, objective.value_from_score(current))];
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut since_best = 0usize;
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
        iter += 1;
        since_best += 1;

        let changed: Vec<usize>;
        let saved: Vec<UnitaryMatrix>;
        if rng.random::<f64>() < cfg.mutation_rate {
            // Mutate the least fit individual or a random one.
            let i = if rng.random::<bool>() {
                table.worst(1)[0]
            } else {
                rng.random_range(0..l)
            };
            let sigma = cfg.mutation_sigma * 10f64.powf(-3.0 * rng.random::<f64>());
            let mutated = match perturb_unitary(&pop[i], sigma, &mut rng) {
                Ok(u) => u,
                Err(e) if e.is_numeric() => {
                    rejected += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            saved = vec![pop[i].clone()];
            pop[i] = mutated;
            changed = vec![i];
        } else {
            changed = table.worst(cfg.replace_count);
            saved = changed.iter().map(|&i| pop[i].clone()).collect();
            for &i in &changed {
                pop[i] = UnitaryMatrix::random(m, &mut rng);
            }
        }
        let old_scores = table.scores.clone();
        for &i in &changed {
            table.update_row(objective, &pop, i)?;
        }
        let candidate = table.objective();
        if candidate >= current {
            accepted += 1;
            if candidate > current {
                since_best = 0;
                trace.push((iter, objective.value_from_score(candidate)));
            }
            current = candidate;
        } else {
            rejected += 1;
            table.scores = old_scores;
            for (&i, u) in changed.iter().zip(saved) {
                pop[i] = u;
            }
        }
    }

    let best_value = objective.value_from_score(current);
    if trace.last().map(|t| t.0) != Some(iter) {
        trace.push((iter, best_value));
    }
    let constellation = Constellation::special(pop)?;
    Ok(OptimizerTrace {
        iterations: trace,
        best_value,
        final_report: diversity::evaluate(&constellation)?,
        final_constellation: constellation,
        final_generators: None,
        accepted_count: accepted,
        rejected_count: rejected,
        iterations_run: iter,
        stop_reason: stop,
    })
}
