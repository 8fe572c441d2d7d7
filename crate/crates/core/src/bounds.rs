//! Numerical checks of the three-element bounds in `U(n)`: the permanent
//! constant `F(n)`, the `√3/2` optimum in `U(2)` and the sine-product lemma
//! behind it.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constellation::Constellation;
use crate::diversity;
use crate::error::{Error, Result};
use crate::matrix::{UnitaryMatrix, C64};
use crate::optimize::perturb_unitary;

/// `√3/2`, the optimal diversity product and sum of three elements in `U(2)`.
pub const HALF_ROOT3: f64 = 0.866_025_403_784_438_6;

pub const PERMANENT_MAX_DIM: usize = 8;
pub const F_RESTARTS: usize = 32;
pub const SINE_STARTS: usize = 64;

/// `Σ_σ ∏_i |u_{iσ(i)}|`, the permanent of the entrywise modulus.
pub fn permanent_abs_sum(u: &UnitaryMatrix) -> Result<f64> {
    let n = u.dim();
    if n > PERMANENT_MAX_DIM {
        return Err(Error::validation(
            "u",
            format!("permanent enumeration is limited to n ≤ {PERMANENT_MAX_DIM}, got {n}"),
        ));
    }
    let abs: Vec<f64> = u.as_slice().iter().map(|z| z.norm()).collect();
    Ok(permanent(&abs, n))
}

fn permanent(abs: &[f64], n: usize) -> f64 {
    fn walk(abs: &[f64], n: usize, row: usize, used: u32, acc: f64) -> f64 {
        if row == n {
            return acc;
        }
        let mut total = 0.0;
        for col in 0..n {
            if used & (1 << col) == 0 {
                let a = abs[row * n + col];
                if a != 0.0 {
                    total += walk(abs, n, row + 1, used | (1 << col), acc * a);
                }
            }
        }
        total
    }
    walk(abs, n, 0, 0, 1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub f_estimate: f64,
    /// `F^{1/n}·√3/2`.
    pub product_bound: f64,
    #[serde(skip)]
    pub witness: UnitaryMatrix,
}

/// Lower estimate of `F(n)` by multi-start annealing over `U(n)`, `budget`
/// iterations per start.
pub fn estimate_f<R: Rng + ?Sized>(n: usize, budget: usize, rng: &mut R) -> Result<BoundReport> {
    if !(2..=5).contains(&n) {
        return Err(Error::validation("n", format!("F(n) is estimated for 2 ≤ n ≤ 5, got {n}")));
    }
    if budget == 0 {
        return Err(Error::validation("budget", "need at least one iteration"));
    }
    let seed: u64 = rng.random();
    let best = (0..F_RESTARTS)
        .into_par_iter()
        .map(|start| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(start as u64);
            anneal_permanent(n, budget, &mut rng).map(|(v, u)| (v, start, u))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(None::<(f64, usize, UnitaryMatrix)>, |acc, cand| match acc {
            Some(a) if a.0 >= cand.0 => Some(a),
            _ => Some(cand),
        })
        .expect("at least one restart");
    Ok(BoundReport {
        n,
        f_estimate: best.0,
        product_bound: best.0.powf(1.0 / n as f64) * HALF_ROOT3,
        witness: best.2,
    })
}

fn anneal_permanent<R: Rng + ?Sized>(n: usize, budget: usize, rng: &mut R) -> Result<(f64, UnitaryMatrix)> {
    let mut cur = UnitaryMatrix::random(n, rng);
    let mut cur_v = permanent_abs_sum(&cur)?;
    let (mut best, mut best_v) = (cur.clone(), cur_v);
    for k in 0..budget {
        let frac = k as f64 / budget as f64;
        let sigma = 0.3 * (1e-6f64 / 0.3).powf(frac);
        let temp = 0.02 * (1e-10f64 / 0.02).powf(frac);
        let cand = match perturb_unitary(&cur, sigma, rng) {
            Ok(c) => c,
            Err(e) if e.is_numeric() => continue,
            Err(e) => return Err(e),
        };
        let v = permanent_abs_sum(&cand)?;
        let u: f64 = rng.random();
        if v >= cur_v || u < ((v - cur_v) / temp).exp() {
            cur = cand;
            cur_v = v;
            if cur_v > best_v {
                best = cur.clone();
                best_v = cur_v;
            }
        }
    }
    Ok((best_v, best))
}

/// The four optimal three-element shapes in `U(2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThreeElementForm {
    /// `{C, C·ADA⁻¹, C·BEB⁻¹}`
    RightDE,
    /// `{C, C·AFA⁻¹, C·BGB⁻¹}`
    RightFG,
    /// `{C, ADA⁻¹·C, BEB⁻¹·C}`
    LeftDE,
    /// `{C, AFA⁻¹·C, BGB⁻¹·C}`
    LeftFG,
}

impl ThreeElementForm {
    pub const ALL: [ThreeElementForm; 4] = [
        ThreeElementForm::RightDE,
        ThreeElementForm::RightFG,
        ThreeElementForm::LeftDE,
        ThreeElementForm::LeftFG,
    ];

    /// The two diagonal cube-root matrices of the form.
    pub fn diagonals(self) -> (UnitaryMatrix, UnitaryMatrix) {
        let w = TAU / 3.0;
        match self {
            ThreeElementForm::RightDE | ThreeElementForm::LeftDE => (
                UnitaryMatrix::diagonal_phases(&[w, -w]),
                UnitaryMatrix::diagonal_phases(&[2.0 * w, -2.0 * w]),
            ),
            ThreeElementForm::RightFG | ThreeElementForm::LeftFG => (
                UnitaryMatrix::diagonal_phases(&[w, 2.0 * w]),
                UnitaryMatrix::diagonal_phases(&[2.0 * w, w]),
            ),
        }
    }
}

/// Builds the triple of the given form. The value `√3/2` is attained for
/// any `C` and any common `A = B`; with independent `A` and `B` the two
/// conjugated elements need not stay `√3/2` apart.
pub fn optimal_three_element(
    form: ThreeElementForm,
    a: &UnitaryMatrix,
    b: &UnitaryMatrix,
    c: &UnitaryMatrix,
) -> Result<Constellation> {
    for (name, u) in [("A", a), ("B", b), ("C", c)] {
        if u.dim() != 2 {
            return Err(Error::validation(name, format!("expected a 2×2 unitary, got {0}×{0}", u.dim())));
        }
    }
    let (d, e) = form.diagonals();
    let ada = a.compose(&d).compose(&a.adjoint());
    let beb = b.compose(&e).compose(&b.adjoint());
    let elements = match form {
        ThreeElementForm::RightDE | ThreeElementForm::RightFG => vec![c.clone(), c.compose(&ada), c.compose(&beb)],
        ThreeElementForm::LeftDE | ThreeElementForm::LeftFG => vec![c.clone(), ada.compose(c), beb.compose(c)],
    };
    Constellation::special(elements)
}

#[derive(Clone, Debug, Serialize)]
pub struct ThreeElementReport {
    pub samples: usize,
    /// Best product and sum over the random triples.
    pub sampled_max_product: f64,
    pub sampled_max_sum: f64,
    /// Best values after local refinement of the top samples.
    pub refined_max_product: f64,
    pub refined_max_sum: f64,
    /// Values of the constructed optimum `{I, D, E}`.
    pub constructed_product: f64,
    pub constructed_sum: f64,
    /// Best sum over the diagonal grid `{I, diag(θ), diag(φ)}`.
    pub diagonal_max_sum: f64,
    pub diagonal_grid_points: usize,
}

impl ThreeElementReport {
    /// Largest value seen anywhere, constructed optimum included.
    pub fn overall_max(&self) -> f64 {
        [
            self.sampled_max_product,
            self.sampled_max_sum,
            self.refined_max_product,
            self.refined_max_sum,
            self.constructed_product,
            self.constructed_sum,
            self.diagonal_max_sum,
        ]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Number of samples refined locally, per metric.
const REFINE_TOP: usize = 8;
const REFINE_STEPS: usize = 2_000;

fn product_and_sum(triple: &[UnitaryMatrix]) -> Result<(f64, f64)> {
    let r = diversity::evaluate(&Constellation::special(triple.to_vec())?)?;
    Ok((r.product, r.sum))
}

fn refine<R: Rng + ?Sized>(mut triple: Vec<UnitaryMatrix>, use_sum: bool, rng: &mut R) -> Result<f64> {
    let pick = |ps: (f64, f64)| if use_sum { ps.1 } else { ps.0 };
    let mut cur = pick(product_and_sum(&triple)?);
    for k in 0..REFINE_STEPS {
        let sigma = 0.1 * (1e-5f64 / 0.1).powf(k as f64 / REFINE_STEPS as f64);
        let i = rng.random_range(0..3);
        let old = triple[i].clone();
        triple[i] = match perturb_unitary(&old, sigma, rng) {
            Ok(u) => u,
            Err(e) if e.is_numeric() => continue,
            Err(e) => return Err(e),
        };
        let v = pick(product_and_sum(&triple)?);
        if v >= cur {
            cur = v;
        } else {
            triple[i] = old;
        }
    }
    Ok(cur)
}

/// Random search, local refinement and a diagonal grid over three-element
/// constellations in `U(2)`.
pub fn verify_three_element_bounds<R: Rng + ?Sized>(
    grid_density: usize,
    rng: &mut R,
    samples: usize,
) -> Result<ThreeElementReport> {
    if samples == 0 || grid_density == 0 {
        return Err(Error::validation("samples", "samples and grid density must be positive"));
    }
    let seed: u64 = rng.random();
    let scored = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let triple: Vec<UnitaryMatrix> = (0..3).map(|_| UnitaryMatrix::random(2, &mut rng)).collect();
            product_and_sum(&triple).map(|(p, q)| (p, q, triple))
        })
        .collect::<Result<Vec<_>>>()?;
    let sampled_max_product = scored.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let sampled_max_sum = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);

    let top = |key: fn(&(f64, f64, Vec<UnitaryMatrix>)) -> f64| {
        let mut idx: Vec<usize> = (0..scored.len()).collect();
        idx.sort_by(|&a, &b| key(&scored[b]).total_cmp(&key(&scored[a])).then(a.cmp(&b)));
        idx.truncate(REFINE_TOP);
        idx
    };
    let mut jobs: Vec<(usize, bool)> = top(|s| s.0).into_iter().map(|i| (i, false)).collect();
    jobs.extend(top(|s| s.1).into_iter().map(|i| (i, true)));
    let refined = jobs
        .par_iter()
        .enumerate()
        .map(|(k, &(i, use_sum))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            rng.set_stream(k as u64);
            refine(scored[i].2.clone(), use_sum, &mut rng).map(|v| (use_sum, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let best_of = |want_sum: bool| {
        refined
            .iter()
            .filter(|r| r.0 == want_sum)
            .map(|r| r.1)
            .fold(f64::NEG_INFINITY, f64::max)
    };

    let id = UnitaryMatrix::identity(2);
    let constructed = optimal_three_element(ThreeElementForm::RightDE, &id, &id, &id)?;
    let cr = diversity::evaluate(&constructed)?;

    let d = grid_density;
    let ang = |j: usize| TAU * j as f64 / d as f64;
    let diagonal_max_sum = (0..d.pow(4))
        .into_par_iter()
        .map(|idx| {
            let (a, b, c, e) = (idx / (d * d * d), (idx / (d * d)) % d, (idx / d) % d, idx % d);
            let triple = [
                [C64::new(1.0, 0.0), C64::new(1.0, 0.0)],
                [C64::from_polar(1.0, ang(a)), C64::from_polar(1.0, ang(b))],
                [C64::from_polar(1.0, ang(c)), C64::from_polar(1.0, ang(e))],
            ];
            let dist = |x: &[C64; 2], y: &[C64; 2]| {
                ((x[0] - y[0]).norm_sqr() + (x[1] - y[1]).norm_sqr()).sqrt() / (2.0 * 2f64.sqrt())
            };
            dist(&triple[0], &triple[1])
                .min(dist(&triple[0], &triple[2]))
                .min(dist(&triple[1], &triple[2]))
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);

    Ok(ThreeElementReport {
        samples,
        sampled_max_product,
        sampled_max_sum,
        refined_max_product: best_of(false),
        refined_max_sum: best_of(true),
        constructed_product: cr.product,
        constructed_sum: cr.sum,
        diagonal_max_sum,
        diagonal_grid_points: d.pow(4),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SineProductReport {
    pub m: usize,
    pub n: usize,
    /// Best `min_i ∏_j sin Φ_ij` found.
    pub maximum: f64,
    /// `(sin π/n)^m`.
    pub expected: f64,
    /// Largest `|Φ_ij − π/n|` at the best start.
    pub angle_error: f64,
    pub starts: usize,
}

/// Smallest angle kept away from the boundary so `log sin` stays finite.
const ANGLE_FLOOR: f64 = 1e-9;

/// Euclidean projection of `v` onto `{x : x_i ≥ lo, Σ x_i = total}`.
fn project_capped_simplex(v: &mut [f64], lo: f64, total: f64) {
    let n = v.len();
    let budget = total - lo * n as f64;
    let mut u: Vec<f64> = v.iter().map(|x| x - lo).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - budget) / (k + 1) as f64;
        if uk - t > 0.0 {
            tau = t;
        }
    }
    for x in v.iter_mut() {
        *x = lo + (*x - lo - tau).max(0.0);
    }
}

/// Soft-min of the row log-products and its gradient.
fn soft_min(phi: &[f64], m: usize, n: usize, beta: f64) -> (f64, Vec<f64>) {
    let g: Vec<f64> = (0..n)
        .map(|i| (0..m).map(|j| phi[i * m + j].sin().ln()).sum())
        .collect();
    let gmin = g.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = g.iter().map(|gi| (-beta * (gi - gmin)).exp()).collect();
    let z: f64 = w.iter().sum();
    let value = gmin - z.ln() / beta;
    let mut grad = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            let x = phi[i * m + j];
            grad[i * m + j] = w[i] / z * x.cos() / x.sin();
        }
    }
    (value, grad)
}

fn ascend(mut phi: Vec<f64>, m: usize, n: usize) -> Vec<f64> {
    let project = |p: &mut Vec<f64>| {
        for j in 0..m {
            let mut col: Vec<f64> = (0..n).map(|i| p[i * m + j]).collect();
            project_capped_simplex(&mut col, ANGLE_FLOOR, PI);
            for i in 0..n {
                p[i * m + j] = col[i];
            }
        }
    };
    project(&mut phi);
    for beta in [1.0, 10.0, 100.0, 1e3, 1e4] {
        let mut step = 1.0;
        for _ in 0..5_000 {
            let (f0, grad) = soft_min(&phi, m, n, beta);
            let mut moved = false;
            for _ in 0..60 {
                let mut cand: Vec<f64> = phi.iter().zip(&grad).map(|(p, g)| p + step * g).collect();
                project(&mut cand);
                let shift: f64 = cand.iter().zip(&phi).map(|(a, b)| (a - b) * (a - b)).sum();
                let (f1, _) = soft_min(&cand, m, n, beta);
                // Armijo condition along the projection arc.
                if f1 >= f0 + 1e-4 * shift / step {
                    moved = shift > 0.0;
                    phi = cand;
                    step *= 2.0;
                    break;
                }
                step *= 0.5;
            }
            if !moved || step < 1e-14 {
                break;
            }
        }
    }
    phi
}

/// Maximises `min_i ∏_j sin Φ_ij` over `n × m` angle matrices whose columns
/// sum to `π`, by projected gradient ascent on a soft minimum from
/// [`SINE_STARTS`] random starts.
pub fn sine_product_check(m: usize, n: usize) -> Result<SineProductReport> {
    if !(1..=6).contains(&m) || !(2..=6).contains(&n) {
        return Err(Error::validation("m", format!("need 1 ≤ m ≤ 6 and 2 ≤ n ≤ 6, got m = {m}, n = {n}")));
    }
    let target = PI / n as f64;
    let results: Vec<(f64, f64)> = (0..SINE_STARTS)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x51e_u64);
            rng.set_stream(s as u64);
            let start: Vec<f64> = (0..n * m).map(|_| rng.random_range(0.0..PI)).collect();
            let phi = ascend(start, m, n);
            let value = (0..n)
                .map(|i| (0..m).map(|j| phi[i * m + j].sin()).product::<f64>())
                .fold(f64::INFINITY, f64::min);
            let err = phi.iter().map(|p| (p - target).abs()).fold(0.0, f64::max);
            (value, err)
        })
        .collect();
    let best = results
        .iter()
        .copied()
        .fold((f64::NEG_INFINITY, f64::INFINITY), |a, b| if b.0 > a.0 { b } else { a });
    Ok(SineProductReport {
        m,
        n,
        maximum: best.0,
        expected: target.sin().powi(m as i32),
        angle_error: best.1,
        starts: SINE_STARTS,
    })
}
