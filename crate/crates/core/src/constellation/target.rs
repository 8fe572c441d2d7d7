//! Pairwise distance targets and the reduced target lists of generator
//! structures.

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, UnitaryMatrix};

use super::structure::Word;

/// Excursions outside `[0, 1]` up to this size are rounding and get clamped.
pub const CLAMP_SLACK: f64 = 1e-9;

pub(crate) fn clamp_unit(value: f64, what: &str) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::Numeric(format!("{what} is not finite")));
    }
    if value < -CLAMP_SLACK || value > 1.0 + CLAMP_SLACK {
        return Err(Error::Numeric(format!("{what} = {value:e} lies outside [0, 1]")));
    }
    Ok(value.clamp(0.0, 1.0))
}

/// A matrix from which one pairwise distance can be read off.
#[derive(Clone, Debug, PartialEq)]
pub enum PairTarget {
    /// `Ψ − Ψ'` for special-form codewords (or any `X − Y` with the same
    /// singular values).
    Difference(CMatrix),
    /// `Φ*Φ'` for general-form frames.
    Gram(CMatrix),
}

impl PairTarget {
    pub fn matrix(&self) -> &CMatrix {
        match self {
            PairTarget::Difference(m) | PairTarget::Gram(m) => m,
        }
    }

    fn m(&self) -> usize {
        self.matrix().cols()
    }

    /// The per-pair diversity product `(∏(1 − δ_m²))^{1/(2M)}`.
    pub fn product_distance(&self) -> Result<f64> {
        let m = self.m() as f64;
        let value = match self {
            PairTarget::Difference(d) => 0.5 * d.determinant_abs().powf(1.0 / m),
            PairTarget::Gram(_) => {
                let prod: f64 = self.gaps()?.iter().product();
                prod.max(0.0).powf(0.5 / m)
            }
        };
        clamp_unit(value, "pairwise diversity product")
    }

    /// The per-pair diversity sum `√(1 − ‖Φ*Φ'‖_F²/M)`.
    pub fn sum_distance(&self) -> Result<f64> {
        let m = self.m() as f64;
        let value = match self {
            PairTarget::Difference(d) => d.frobenius_norm() / (2.0 * m.sqrt()),
            PairTarget::Gram(x) => {
                let inner = clamp_unit(1.0 - x.frobenius_norm_sqr() / m, "1 − ‖Φ*Φ'‖²/M")?;
                inner.sqrt()
            }
        };
        clamp_unit(value, "pairwise diversity sum")
    }

    /// `1 − δ_m²` for each singular value `δ_m` of `Φ*Φ'`, descending in δ.
    pub fn gaps(&self) -> Result<Vec<f64>> {
        match self {
            PairTarget::Difference(d) => {
                let mut g = d
                    .singular_values()?
                    .into_iter()
                    .map(|s| clamp_unit(s * s / 4.0, "1 − δ²"))
                    .collect::<Result<Vec<_>>>()?;
                g.reverse();
                Ok(g)
            }
            PairTarget::Gram(x) => x
                .singular_values()?
                .into_iter()
                .map(|s| clamp_unit(1.0 - s * s, "1 − δ²"))
                .collect(),
        }
    }
}

/// A target together with the lexicographically smallest element pair it
/// stands for.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexedTarget {
    pub target: PairTarget,
    pub pair: (usize, usize),
}

/// The generator-independent part of a reduced target list: which words to
/// compare, or which powers `B*A^kB` to form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReductionPlan {
    /// Each entry `(X, Y, pair)` stands for the target `X − Y`.
    Words(Vec<(Word, Word, (usize, usize))>),
    /// Each entry `(k, pair)` stands for `B*A^kB` with `B = (I_M; 0)`.
    GeneralPowers {
        m: usize,
        entries: Vec<(i64, (usize, usize))>,
    },
}

impl ReductionPlan {
    pub fn len(&self) -> usize {
        match self {
            ReductionPlan::Words(w) => w.len(),
            ReductionPlan::GeneralPowers { entries, .. } => entries.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Evaluates the plan for concrete generators.
    pub fn targets(&self, generators: &[UnitaryMatrix]) -> Vec<IndexedTarget> {
        match self {
            ReductionPlan::Words(entries) => {
                let cache = PowerCache::new(
                    generators,
                    entries.iter().flat_map(|(x, y, _)| x.runs().iter().chain(y.runs())),
                );
                entries
                    .iter()
                    .map(|(x, y, pair)| IndexedTarget {
                        target: PairTarget::Difference(&cache.eval(x) - &cache.eval(y)),
                        pair: *pair,
                    })
                    .collect()
            }
            ReductionPlan::GeneralPowers { m, entries } => {
                let a = &generators[0];
                let max_k = entries.iter().map(|(k, _)| k.unsigned_abs()).max().unwrap_or(0);
                let mut powers = vec![CMatrix::identity(a.dim())];
                for k in 1..=max_k as usize {
                    let next = &powers[k - 1] * a.as_matrix();
                    powers.push(next);
                }
                entries
                    .iter()
                    .map(|&(k, pair)| {
                        let block = powers[k.unsigned_abs() as usize].leading_columns(*m).row_block(0, *m);
                        let gram = if k < 0 { block.adjoint() } else { block };
                        IndexedTarget {
                            target: PairTarget::Gram(gram),
                            pair,
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Powers `G^e` of each generator up to the largest exponent needed.
pub(crate) struct PowerCache {
    dim: usize,
    powers: Vec<Vec<CMatrix>>,
}

impl PowerCache {
    pub(crate) fn new<'a>(
        generators: &[UnitaryMatrix],
        runs: impl Iterator<Item = &'a (u8, u32)>,
    ) -> Self {
        let mut max_exp = vec![0u32; generators.len()];
        for &(letter, e) in runs {
            let slot = &mut max_exp[letter as usize];
            *slot = (*slot).max(e);
        }
        let dim = generators[0].dim();
        let powers = generators
            .iter()
            .zip(&max_exp)
            .map(|(g, &top)| {
                let mut p = vec![CMatrix::identity(dim)];
                for e in 1..=top as usize {
                    let next = &p[e - 1] * g.as_matrix();
                    p.push(next);
                }
                p
            })
            .collect();
        PowerCache { dim, powers }
    }

    pub(crate) fn eval(&self, word: &Word) -> CMatrix {
        let mut runs = word.runs().iter();
        let Some(&(l0, e0)) = runs.next() else {
            return CMatrix::identity(self.dim);
        };
        let mut acc = self.powers[l0 as usize][e0 as usize].clone();
        for &(letter, e) in runs {
            acc = &acc * &self.powers[letter as usize][e as usize];
        }
        acc
    }
}
