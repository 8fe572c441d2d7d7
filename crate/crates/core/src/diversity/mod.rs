//! Diversity product, diversity sum and the two diversity functions.

pub mod quadrature;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::constellation::{Constellation, IndexedTarget, PairTarget, CLAMP_SLACK};
use crate::error::{Error, Result};

pub use quadrature::adaptive_simpson;

pub const QUADRATURE_TOLERANCE: f64 = 1e-10;
pub const QUADRATURE_MAX_DEPTH: u32 = 40;

/// Target lists at least this long are evaluated in parallel.
const PARALLEL_THRESHOLD: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChannelConfig {
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    /// Linear SNR.
    pub rho: f64,
}

impl ChannelConfig {
    pub fn new(t: usize, m: usize, n: usize, rho: f64) -> Result<Self> {
        if m == 0 || t < m {
            return Err(Error::validation("T", format!("need T ≥ M ≥ 1, got T = {t}, M = {m}")));
        }
        if n == 0 {
            return Err(Error::validation("N", "need at least one receive antenna"));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::validation("rho", format!("SNR must be positive, got {rho}")));
        }
        Ok(ChannelConfig { t, m, n, rho })
    }

    /// Channel matching a constellation's `T` and `M`.
    pub fn for_constellation(c: &Constellation, n: usize, rho: f64) -> Result<Self> {
        Self::new(c.t(), c.m(), n, rho)
    }

    pub fn from_db(t: usize, m: usize, n: usize, db: f64) -> Result<Self> {
        Self::new(t, m, n, db_to_linear(db))
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(self.t, self.m, self.n, rho)
    }

    /// `(ρT/M)² / (4(1 + ρT/M))`.
    pub fn rho_tilde(&self) -> f64 {
        let s = self.rho * self.t as f64 / self.m as f64;
        s * s / (4.0 * (1.0 + s))
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(rho: f64) -> f64 {
    10.0 * rho.log10()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiversityReport {
    pub product: f64,
    pub sum: f64,
    pub argmin_product: (usize, usize),
    pub argmin_sum: (usize, usize),
    pub pairwise_count: usize,
    /// `min |det(Ψ_l − Ψ_l')|` without the `½(·)^{1/M}` normalisation, for
    /// special-form inputs.
    pub min_abs_det: Option<f64>,
}

/// Running minimum that breaks ties toward the smaller pair.
#[derive(Clone, Copy, Debug)]
struct Best {
    value: f64,
    pair: (usize, usize),
}

impl Best {
    fn better(self, other: Best) -> Best {
        if other.value < self.value || (other.value == self.value && other.pair < self.pair) {
            other
        } else {
            self
        }
    }
}

fn reduce_min(values: impl Iterator<Item = Best>) -> Option<Best> {
    values.reduce(Best::better)
}

fn map_targets<T: Send>(
    targets: &[IndexedTarget],
    f: impl Fn(&IndexedTarget) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    if targets.len() >= PARALLEL_THRESHOLD {
        targets.par_iter().map(&f).collect()
    } else {
        targets.iter().map(f).collect()
    }
}

/// Product and sum over an arbitrary target list (all pairs or reduced).
pub fn report_from_targets(targets: &[IndexedTarget]) -> Result<DiversityReport> {
    if targets.is_empty() {
        return Err(Error::TooFewElements(1));
    }
    let rows = map_targets(targets, |t| {
        let det = match &t.target {
            PairTarget::Difference(d) => Some(d.determinant_abs()),
            PairTarget::Gram(_) => None,
        };
        Ok((t.target.product_distance()?, t.target.sum_distance()?, det, t.pair))
    })?;
    let product = reduce_min(rows.iter().map(|r| Best { value: r.0, pair: r.3 })).unwrap();
    let sum = reduce_min(rows.iter().map(|r| Best { value: r.1, pair: r.3 })).unwrap();
    let min_abs_det = rows
        .iter()
        .map(|r| r.2)
        .try_fold(f64::INFINITY, |acc, d| d.map(|d| acc.min(d)));
    Ok(DiversityReport {
        product: product.value,
        sum: sum.value,
        argmin_product: product.pair,
        argmin_sum: sum.pair,
        pairwise_count: targets.len(),
        min_abs_det,
    })
}

/// Diversity product and sum over all pairs of `c`.
pub fn evaluate(c: &Constellation) -> Result<DiversityReport> {
    c.require_pairs()?;
    report_from_targets(&c.pair_targets())
}

/// `(product, argmin pair)`.
pub fn diversity_product(c: &Constellation) -> Result<(f64, (usize, usize))> {
    let r = evaluate(c)?;
    Ok((r.product, r.argmin_product))
}

/// `(sum, argmin pair)`.
pub fn diversity_sum(c: &Constellation) -> Result<(f64, (usize, usize))> {
    let r = evaluate(c)?;
    Ok((r.sum, r.argmin_sum))
}

pub fn min_product(targets: &[IndexedTarget]) -> Result<f64> {
    let v = map_targets(targets, |t| t.target.product_distance())?;
    Ok(v.into_iter().fold(f64::INFINITY, f64::min))
}

pub fn min_sum(targets: &[IndexedTarget]) -> Result<f64> {
    let v = map_targets(targets, |t| t.target.sum_distance())?;
    Ok(v.into_iter().fold(f64::INFINITY, f64::min))
}

/// Pairwise Chernoff bound `½ ∏ (1 + ρ̃ g_m)^{−N}` from the gaps `g_m = 1 − δ_m²`.
pub fn chernoff_pair(gaps: &[f64], cfg: &ChannelConfig) -> f64 {
    let rt = cfg.rho_tilde();
    let n = cfg.n as i32;
    0.5 * gaps.iter().map(|g| (1.0 + rt * g).powi(-n)).product::<f64>()
}

/// Exact pairwise error probability from the gaps.
///
/// With `w = ½ tan θ` the weight `4/(4w² + 1) dw` becomes `2 dθ` and the
/// factor `4w² + 1` becomes `sec² θ`; folding the even integrand onto
/// `[0, π/2]` leaves `(1/π) ∫ ∏ [cos²θ / (cos²θ + ρ̃ g_m)]^N dθ`.
pub fn exact_pair(gaps: &[f64], cfg: &ChannelConfig) -> Result<f64> {
    let rt = cfg.rho_tilde();
    let n = cfg.n as i32;
    let integrand = |theta: f64| {
        let c2 = theta.cos().powi(2);
        gaps.iter()
            .map(|g| {
                let denom = c2 + rt * g;
                if denom == 0.0 {
                    1.0
                } else {
                    (c2 / denom).powi(n)
                }
            })
            .product::<f64>()
    };
    let integral = adaptive_simpson(
        integrand,
        0.0,
        PI / 2.0,
        QUADRATURE_TOLERANCE * PI,
        QUADRATURE_MAX_DEPTH,
    )?;
    let p = integral / PI;
    if !(-CLAMP_SLACK..=0.5 + CLAMP_SLACK).contains(&p) {
        return Err(Error::Numeric(format!("pairwise error probability {p:e} outside [0, 1/2]")));
    }
    Ok(p.clamp(0.0, 0.5))
}

/// Largest value of `f(gaps)` over the targets, ties to the smaller pair.
fn max_over_targets(
    targets: &[IndexedTarget],
    f: impl Fn(&[f64]) -> Result<f64> + Sync + Send,
) -> Result<(f64, (usize, usize))> {
    let vals = map_targets(targets, |t| Ok((f(&t.target.gaps()?)?, t.pair)))?;
    let best = reduce_min(vals.into_iter().map(|(v, pair)| Best { value: -v, pair }))
        .ok_or(Error::TooFewElements(1))?;
    Ok((-best.value, best.pair))
}

pub fn max_chernoff(targets: &[IndexedTarget], cfg: &ChannelConfig) -> Result<(f64, (usize, usize))> {
    max_over_targets(targets, |g| Ok(chernoff_pair(g, cfg)))
}

pub fn max_exact(targets: &[IndexedTarget], cfg: &ChannelConfig) -> Result<(f64, (usize, usize))> {
    max_over_targets(targets, |g| exact_pair(g, cfg))
}

fn check_config(c: &Constellation, cfg: &ChannelConfig) -> Result<()> {
    if (cfg.t, cfg.m) != (c.t(), c.m()) {
        return Err(Error::validation(
            "channel",
            format!(
                "channel has T = {}, M = {} but the constellation has T = {}, M = {}",
                cfg.t,
                cfg.m,
                c.t(),
                c.m()
            ),
        ));
    }
    c.require_pairs()
}

/// Chernoff diversity function `D(V, ρ)`: the largest pairwise bound.
pub fn chernoff_diversity(c: &Constellation, cfg: &ChannelConfig) -> Result<f64> {
    check_config(c, cfg)?;
    Ok(max_chernoff(&c.pair_targets(), cfg)?.0)
}

/// Exact diversity function `D_e(V, ρ)`: the largest pairwise error
/// probability.
pub fn exact_diversity(c: &Constellation, cfg: &ChannelConfig) -> Result<f64> {
    check_config(c, cfg)?;
    Ok(max_exact(&c.pair_targets(), cfg)?.0)
}

/// One point of a diversity-function curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub rho_db: f64,
    pub rho: f64,
    pub value: f64,
}

/// Evaluates the chosen diversity function at each SNR in `rhos` (linear,
/// increasing). The gaps are computed once and reused across the sweep.
pub fn diversity_function_curve(
    c: &Constellation,
    base: &ChannelConfig,
    rhos: &[f64],
    exact: bool,
) -> Result<Vec<CurvePoint>> {
    check_config(c, base)?;
    if rhos.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::validation("rho", "grid must be strictly increasing"));
    }
    let targets = c.pair_targets();
    let gaps = map_targets(&targets, |t| t.target.gaps())?;
    let cfgs = rhos
        .iter()
        .map(|&r| base.with_rho(r))
        .collect::<Result<Vec<_>>>()?;
    cfgs.par_iter()
        .map(|cfg| {
            let mut worst = 0.0f64;
            for g in &gaps {
                let v = if exact {
                    exact_pair(g, cfg)?
                } else {
                    chernoff_pair(g, cfg)
                };
                worst = worst.max(v);
            }
            Ok(CurvePoint {
                rho_db: linear_to_db(cfg.rho),
                rho: cfg.rho,
                value: worst,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::builtin;
    use crate::matrix::{random_frame, UnitaryMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn antipodal() -> Constellation {
        let id = UnitaryMatrix::identity(2);
        let neg = UnitaryMatrix::new(id.scale_real(-1.0)).unwrap();
        Constellation::special(vec![id, neg]).unwrap()
    }

    #[test]
    fn antipodal_pair() {
        let r = evaluate(&antipodal()).unwrap();
        assert!((r.product - 1.0).abs() < 1e-15);
        assert!((r.sum - 1.0).abs() < 1e-15);
        assert_eq!(r.argmin_product, (0, 1));
        assert_eq!(r.min_abs_det, Some(4.0));
    }

    #[test]
    fn rho_tilde_example() {
        let cfg = ChannelConfig::new(4, 2, 2, 2.0).unwrap();
        assert!((cfg.rho_tilde() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn isotropic_chernoff_closed_form() {
        let cfg = ChannelConfig::new(4, 2, 2, 2.0).unwrap();
        let v = chernoff_pair(&[1.0, 1.0], &cfg);
        assert!((v - 0.5 * 1.8f64.powi(-4)).abs() < 1e-15);
        assert!((v - 0.047630).abs() < 1e-6);
    }

    #[test]
    fn identical_pair_is_one_half() {
        let cfg = ChannelConfig::new(4, 2, 2, 100.0).unwrap();
        assert_eq!(chernoff_pair(&[0.0, 0.0], &cfg), 0.5);
        assert!((exact_pair(&[0.0, 0.0], &cfg).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_isotropic_matches_trapezoid_oracle() {
        // Oracle: the untransformed integral over w, truncated at |w| = W
        // with the analytic tail, by the composite trapezoid rule.
        let cfg = ChannelConfig::new(4, 2, 2, 2.0).unwrap();
        let rt = cfg.rho_tilde();
        let f = |w: f64| {
            let s = 4.0 * w * w + 1.0;
            4.0 / s * (1.0 + rt * s).powi(-4) / (4.0 * PI)
        };
        let big_w = 200.0;
        let n = 1_000_000;
        let h = 2.0 * big_w / n as f64;
        let mut acc = 0.5 * (f(-big_w) + f(big_w));
        for k in 1..n {
            acc += f(-big_w + k as f64 * h);
        }
        // The integrand decays like w^{-10}; the tail beyond W is negligible.
        let oracle = acc * h;
        let exact = exact_pair(&[1.0, 1.0], &cfg).unwrap();
        assert!((exact - oracle).abs() < 1e-8, "{exact} vs {oracle}");
        assert!(exact > 0.0 && exact < 0.047630);
    }

    #[test]
    fn exact_is_below_chernoff() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let a = random_frame(4, 2, &mut rng);
            let b = random_frame(4, 2, &mut rng);
            let gaps = PairTarget::Gram(&a.adjoint() * &b).gaps().unwrap();
            for db in [-5.0, 0.0, 10.0, 20.0] {
                let cfg = ChannelConfig::from_db(4, 2, 2, db).unwrap();
                assert!(exact_pair(&gaps, &cfg).unwrap() <= chernoff_pair(&gaps, &cfg) + 1e-12);
            }
        }
    }

    #[test]
    fn builtin_values() {
        let sl = evaluate(&builtin("sl2f5").unwrap()).unwrap();
        let expected = 0.5 * ((3.0 - 5f64.sqrt()) / 2.0).sqrt();
        assert!((sl.product - expected).abs() < 1e-9);
        assert!((sl.sum - expected).abs() < 1e-9);
        let g = evaluate(&builtin("g214").unwrap()).unwrap();
        assert!((g.product - 0.3851).abs() < 1e-4, "{}", g.product);
        let o = evaluate(&builtin("orthogonal121").unwrap()).unwrap();
        assert!((o.sum - 0.1992).abs() < 1e-4);
        assert!((o.product - o.sum).abs() < 1e-9);
        let three = evaluate(&builtin("optimal3dim2").unwrap()).unwrap();
        assert!((three.product - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn numderived_values() {
        let r = evaluate(&builtin("numderived121").unwrap()).unwrap();
        assert!((r.sum - 0.3886).abs() < 1e-3, "{}", r.sum);
        // The raw minimum determinant is the figure printed beside the sum.
        assert!((r.min_abs_det.unwrap() - 0.0278).abs() < 1e-3);
    }

    #[test]
    fn chernoff_curve_is_monotone_and_dominates_exact() {
        let c = builtin("optimal3dim2").unwrap();
        let base = ChannelConfig::for_constellation(&c, 2, 1.0).unwrap();
        let rhos: Vec<f64> = (0..=20).map(|db| db_to_linear(db as f64)).collect();
        let ch = diversity_function_curve(&c, &base, &rhos, false).unwrap();
        let ex = diversity_function_curve(&c, &base, &rhos, true).unwrap();
        for w in ch.windows(2) {
            assert!(w[1].value <= w[0].value);
        }
        for (a, b) in ch.iter().zip(&ex) {
            assert!(b.value <= a.value + 1e-12);
        }
        let single = diversity_function_curve(&c, &base, &rhos[..1], false).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn mismatched_channel_is_rejected() {
        let c = builtin("g214").unwrap();
        let cfg = ChannelConfig::new(4, 2, 2, 1.0).unwrap();
        assert!(chernoff_diversity(&c, &cfg).is_err());
    }
}
