//! Monte-Carlo simulation of the block-fading channel
//! `R = √(ρT/M) Φ H + W` with the non-coherent ML receiver
//! `argmax_l ‖R*Φ_l‖_F`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constellation::{Constellation, FRAME_TOLERANCE};
use crate::diversity::{db_to_linear, ChannelConfig};
use crate::error::{Error, Result};
use crate::matrix::{gaussian_c64, CMatrix, C64};

/// Trials run between early-stop checks. Fixed so that the stopping point
/// does not depend on the thread count.
const BATCH: usize = 2048;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Codebook prepared for repeated decoding.
struct Decoder {
    t: usize,
    m: usize,
    frames: Vec<CMatrix>,
}

impl Decoder {
    fn new(frames: Vec<CMatrix>, cfg: &ChannelConfig) -> Result<Self> {
        let (t, m) = frames[0].shape();
        if (t, m) != (cfg.t, cfg.m) {
            return Err(Error::Config(format!(
                "channel has T = {}, M = {} but the codewords are {t}×{m}",
                cfg.t, cfg.m
            )));
        }
        Ok(Decoder { t, m, frames })
    }

    /// Sends codeword `sent` once and returns the decision.
    fn trial<R: Rng + ?Sized>(&self, sent: usize, cfg: &ChannelConfig, rng: &mut R) -> usize {
        let (t, m, n) = (self.t, self.m, cfg.n);
        let amp = (cfg.rho * t as f64 / m as f64).sqrt();
        let h: Vec<C64> = (0..m * n).map(|_| gaussian_c64(rng)).collect();
        let phi = &self.frames[sent];
        let mut r = vec![C64::new(0.0, 0.0); t * n];
        for i in 0..t {
            for k in 0..m {
                let p = phi[(i, k)] * amp;
                for j in 0..n {
                    r[i * n + j] += p * h[k * n + j];
                }
            }
        }
        for z in r.iter_mut() {
            *z += gaussian_c64(rng);
        }
        self.decide(&r, n)
    }

    /// `argmax_l ‖Φ_l* R‖_F`, lowest index on ties.
    fn decide(&self, r: &[C64], n: usize) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for (l, phi) in self.frames.iter().enumerate() {
            let mut energy = 0.0;
            for k in 0..self.m {
                for j in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for i in 0..self.t {
                        acc += phi[(i, k)].conj() * r[i * n + j];
                    }
                    energy += acc.norm_sqr();
                }
            }
            if energy > best.0 {
                best = (energy, l);
            }
        }
        best.1
    }
}

/// One channel use: a uniformly drawn codeword is sent and ML-decoded.
/// Returns `(sent, decoded)`.
pub fn transmit_decode_trial<R: Rng + ?Sized>(
    c: &Constellation,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Result<(usize, usize)> {
    let dec = Decoder::new(c.frames(), cfg)?;
    let sent = rng.random_range(0..c.len());
    Ok((sent, dec.trial(sent, cfg, rng)))
}

/// Monte-Carlo estimate of the probability of confusing two codewords,
/// each sent with probability ½.
pub fn pairwise_error_estimate<R: Rng + ?Sized>(
    phi1: &CMatrix,
    phi2: &CMatrix,
    cfg: &ChannelConfig,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    for (name, f) in [("phi1", phi1), ("phi2", phi2)] {
        if f.unitarity_defect() > FRAME_TOLERANCE {
            return Err(Error::validation(name, "columns are not orthonormal"));
        }
    }
    if phi1.shape() != phi2.shape() {
        return Err(Error::Shape(format!(
            "frames are {:?} and {:?}",
            phi1.shape(),
            phi2.shape()
        )));
    }
    if trials == 0 {
        return Err(Error::validation("trials", "need at least one trial"));
    }
    let dec = Decoder::new(vec![phi1.clone(), phi2.clone()], cfg)?;
    let mut errors = 0usize;
    for _ in 0..trials {
        let sent = rng.random_range(0..2);
        if dec.trial(sent, cfg, rng) != sent {
            errors += 1;
        }
    }
    Ok(errors as f64 / trials as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    /// `T`, `M`, `N`; its `rho` is ignored in favour of the grid.
    pub base: ChannelConfig,
    pub snr_db: Vec<f64>,
    pub trials_per_point: usize,
    pub seed: u64,
    /// Stop a point once this many block errors are seen, checked every
    /// few thousand trials.
    pub max_errors: Option<usize>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::validation("snr_db", "SNR grid is empty"));
        }
        if let Some(db) = self.snr_db.iter().find(|d| !d.is_finite()) {
            return Err(Error::validation("snr_db", format!("non-finite SNR {db}")));
        }
        if self.trials_per_point == 0 {
            return Err(Error::validation("trials_per_point", "need at least one trial"));
        }
        if self.max_errors == Some(0) {
            return Err(Error::validation("max_errors", "must be positive when set"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimRow {
    pub rho_db: f64,
    pub trials: usize,
    pub errors: usize,
    pub bler: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationResult {
    pub rows: Vec<SimRow>,
}

/// 95% Wilson score interval for `errors` successes in `trials`.
pub fn wilson_interval(errors: usize, trials: usize) -> (f64, f64) {
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

/// Random stream of one trial, independent of scheduling.
fn trial_rng(seed: u64, point: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 40) | trial as u64);
    rng
}

/// Block error rate over an SNR grid.
pub fn simulate_bler(c: &Constellation, sim: &SimConfig) -> Result<SimulationResult> {
    sim.validate()?;
    if c.is_empty() {
        return Err(Error::TooFewElements(0));
    }
    let dec = Decoder::new(c.frames(), &sim.base)?;
    let l = c.len();
    let mut rows = Vec::with_capacity(sim.snr_db.len());
    for (point, &db) in sim.snr_db.iter().enumerate() {
        let cfg = sim.base.with_rho(db_to_linear(db))?;
        let (mut trials, mut errors) = (0usize, 0usize);
        while trials < sim.trials_per_point {
            let end = (trials + BATCH).min(sim.trials_per_point);
            errors += (trials..end)
                .into_par_iter()
                .filter(|&k| {
                    let mut rng = trial_rng(sim.seed, point, k);
                    let sent = rng.random_range(0..l);
                    dec.trial(sent, &cfg, &mut rng) != sent
                })
                .count();
            trials = end;
            if sim.max_errors.is_some_and(|cap| errors >= cap) {
                break;
            }
        }
        let (wilson_lo, wilson_hi) = wilson_interval(errors, trials);
        rows.push(SimRow {
            rho_db: db,
            trials,
            errors,
            bler: errors as f64 / trials as f64,
            wilson_lo,
            wilson_hi,
        });
    }
    Ok(SimulationResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::builtin;
    use crate::matrix::random_frame;

    #[test]
    fn single_codeword_is_always_decoded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_frame(4, 2, &mut rng);
        let c = Constellation::general(vec![f]).unwrap();
        let cfg = ChannelConfig::new(4, 2, 2, 0.1).unwrap();
        for _ in 0..100 {
            let (s, d) = transmit_decode_trial(&c, &cfg, &mut rng).unwrap();
            assert_eq!((s, d), (0, 0));
        }
    }

    #[test]
    fn noiseless_reception_is_decoded_exactly() {
        let c = builtin("sl2f5").unwrap();
        let cfg = ChannelConfig::new(4, 2, 2, 1.0).unwrap();
        let dec = Decoder::new(c.frames(), &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let sent = rng.random_range(0..c.len());
            let h: Vec<C64> = (0..4).map(|_| gaussian_c64(&mut rng)).collect();
            let phi = &dec.frames[sent];
            let r: Vec<C64> = (0..8)
                .map(|idx| {
                    let (i, j) = (idx / 2, idx % 2);
                    phi[(i, 0)] * h[j] + phi[(i, 1)] * h[2 + j]
                })
                .collect();
            assert_eq!(dec.decide(&r, 2), sent);
        }
    }

    #[test]
    fn identical_codewords_are_a_coin_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_frame(4, 2, &mut rng);
        let cfg = ChannelConfig::new(4, 2, 2, 100.0).unwrap();
        let p = pairwise_error_estimate(&f, &f, &cfg, 20_000, &mut rng).unwrap();
        assert!((p - 0.5).abs() < 4.0 * (0.25f64 / 20_000.0).sqrt(), "{p}");
    }

    #[test]
    fn vanishing_snr_is_a_coin_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_frame(4, 2, &mut rng);
        let b = random_frame(4, 2, &mut rng);
        let cfg = ChannelConfig::new(4, 2, 2, 1e-9).unwrap();
        let p = pairwise_error_estimate(&a, &b, &cfg, 20_000, &mut rng).unwrap();
        assert!((p - 0.5).abs() < 4.0 * (0.25f64 / 20_000.0).sqrt(), "{p}");
    }

    #[test]
    fn one_trial_grid() {
        let c = builtin("orthogonal121").unwrap();
        let sim = SimConfig {
            base: ChannelConfig::new(4, 2, 2, 1.0).unwrap(),
            snr_db: vec![10.0],
            trials_per_point: 1,
            seed: 0,
            max_errors: None,
        };
        let r = simulate_bler(&c, &sim).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].trials, 1);
    }

    #[test]
    fn bler_falls_with_snr_and_is_reproducible() {
        let c = builtin("sl2f5").unwrap();
        let sim = SimConfig {
            base: ChannelConfig::new(4, 2, 2, 1.0).unwrap(),
            snr_db: vec![0.0, 5.0, 10.0, 15.0],
            trials_per_point: 4_000,
            seed: 11,
            max_errors: None,
        };
        let r = simulate_bler(&c, &sim).unwrap();
        for w in r.rows.windows(2) {
            assert!(w[1].bler < w[0].bler, "{:?}", r.rows);
        }
        assert_eq!(r, simulate_bler(&c, &sim).unwrap());
    }

    #[test]
    fn early_stop_happens_on_batch_boundaries() {
        let c = builtin("sl2f5").unwrap();
        let sim = SimConfig {
            base: ChannelConfig::new(4, 2, 2, 1.0).unwrap(),
            snr_db: vec![0.0],
            trials_per_point: 100_000,
            seed: 2,
            max_errors: Some(10),
        };
        let r = simulate_bler(&c, &sim).unwrap();
        assert_eq!(r.rows[0].trials, BATCH);
        assert!(r.rows[0].errors >= 10);
    }

    #[test]
    fn wilson_contains_the_estimate() {
        for (e, n) in [(0, 10), (10, 10), (3, 1000), (500, 1000)] {
            let (lo, hi) = wilson_interval(e, n);
            let p = e as f64 / n as f64;
            assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
        }
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4);
    }
}
