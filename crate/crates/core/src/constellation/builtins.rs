//! Published constellations.
//!
//! Matrices printed to a few decimals are snapped to the nearest unitary
//! before use.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, UnitaryMatrix, C64};

use super::structure::{GeneratorStructure, StructureKind};
use super::Constellation;

const NAMES: [&str; 8] = [
    "orthogonal121",
    "sl2f5",
    "numderived121",
    "g214",
    "optimal3dim2",
    "g214v2",
    "snr25db121",
    "exact5db3",
];

pub fn builtin_names() -> &'static [&'static str] {
    &NAMES
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn printed(rows: &[&[C64]]) -> UnitaryMatrix {
    let m = CMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
        .expect("printed matrix is rectangular");
    UnitaryMatrix::project(&m).expect("printed matrix is close to unitary")
}

fn root_of_unity(n: u32, k: i64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)
}

fn numderived_generators() -> Vec<UnitaryMatrix> {
    vec![
        printed(&[
            &[c(-0.9049, 0.3265), c(0.1635, 0.2188)],
            &[c(0.0364, 0.2707), c(-0.8748, 0.4002)],
        ]),
        printed(&[
            &[c(-0.1596, 0.9767), c(-0.1038, 0.0994)],
            &[c(0.0833, -0.1171), c(-0.9432, 0.2995)],
        ]),
    ]
}

fn g214_generators() -> Vec<UnitaryMatrix> {
    let eta = |k| root_of_unity(21, k);
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let a = CMatrix::diag(&[eta(1), eta(4), eta(16)]);
    let b = CMatrix::from_rows(&[
        vec![zero, one, zero],
        vec![zero, zero, one],
        vec![eta(7), zero, zero],
    ])
    .unwrap();
    vec![UnitaryMatrix::new(a).unwrap(), UnitaryMatrix::new(b).unwrap()]
}

fn g214v2_generators() -> Vec<UnitaryMatrix> {
    vec![
        printed(&[
            &[c(0.9415, 0.3155), c(0.0573, -0.0222), c(0.0496, 0.0882)],
            &[c(0.0160, -0.0555), c(0.4005, 0.9136), c(0.0326, -0.0212)],
            &[c(0.0579, 0.0855), c(-0.0312, -0.0099), c(0.1384, -0.9844)],
        ]),
        printed(&[
            &[c(0.0175, 0.0095), c(0.9997, 0.0111), c(0.0079, 0.0042)],
            &[c(0.0086, 0.0100), c(-0.0082, 0.0040), c(0.9999, 0.0036)],
            &[c(-0.4836, 0.8750), c(0.0004, -0.0198), c(-0.0045, -0.0126)],
        ]),
    ]
}

fn snr25_generators() -> Vec<UnitaryMatrix> {
    vec![
        printed(&[
            &[c(-0.3018715, 0.8863567), c(0.1337423, -0.3245896)],
            &[c(-0.3487261, -4.0441897e-02), c(-0.9215508, -0.1658271)],
        ]),
        printed(&[
            &[c(-0.9599144, -0.1577551), c(0.2074585, 0.1031435)],
            &[c(-0.2074221, 0.1032166), c(-0.9598588, 0.1580936)],
        ]),
    ]
}

/// The generator structure behind a builtin, for the builtins that have one.
pub fn builtin_structure(name: &str) -> Result<GeneratorStructure> {
    let (kind, gens) = match name {
        "numderived121" => (StructureKind::PowersAB { p: 10, q: 10 }, numderived_generators()),
        "g214" => (StructureKind::PowersAB { p: 20, q: 2 }, g214_generators()),
        "g214v2" => (StructureKind::PowersAB { p: 20, q: 2 }, g214v2_generators()),
        "snr25db121" => (StructureKind::PowersAB { p: 10, q: 10 }, snr25_generators()),
        _ if NAMES.contains(&name) => {
            return Err(Error::ReductionUnavailable(format!(
                "builtin `{name}` has no generator structure"
            )))
        }
        _ => return Err(Error::UnknownBuiltin(name.to_string())),
    };
    GeneratorStructure::new(kind, gens)
}

/// The 120-element unitary representation of SL₂(F₅), listed as `(PQ)^j X`.
///
/// `Q` as printed has `Q*Q ≠ I`. The version here reads the two
/// off-diagonal `η¹` terms as `η⁰`; with that change `P` and `Q` generate
/// the 120-element group.
fn sl2f5() -> Constellation {
    let eta = |k| root_of_unity(5, k);
    let s = 1.0 / 5f64.sqrt();
    let p = CMatrix::from_rows(&[
        vec![eta(2) - eta(3), eta(1) - eta(4)],
        vec![eta(1) - eta(4), eta(3) - eta(2)],
    ])
    .unwrap()
    .scale_real(s);
    let q = CMatrix::from_rows(&[
        vec![eta(1) - eta(2), eta(2) - eta(0)],
        vec![eta(0) - eta(3), eta(4) - eta(3)],
    ])
    .unwrap()
    .scale_real(s);
    let word = |letters: &str| {
        letters.chars().fold(CMatrix::identity(2), |acc, ch| match ch {
            'P' => &acc * &p,
            'Q' => &acc * &q,
            _ => unreachable!(),
        })
    };
    let xs = [
        "", "P", "Q", "QP", "QPQ", "QPQP", "QPQQ", "QPQPQ", "QPQPQQ", "QPQPQQP", "QPQPQQPQ",
        "QPQPQQPQP",
    ];
    let pq = &p * &q;
    let mut elements = Vec::with_capacity(120);
    for j in 0..10 {
        let lead = pq.pow(j);
        for x in xs {
            let e = &lead * &word(x);
            elements.push(UnitaryMatrix::new(e).expect("group element is unitary"));
        }
    }
    Constellation::special(elements).unwrap()
}

fn orthogonal121() -> Constellation {
    let w = |k: i64| root_of_unity(11, k);
    let mut elements = Vec::with_capacity(121);
    for m in 0..11 {
        for n in 0..11 {
            let e = CMatrix::from_rows(&[vec![w(m), w(n)], vec![-w(-n), w(-m)]])
                .unwrap()
                .scale_real(FRAC_1_SQRT_2);
            elements.push(UnitaryMatrix::new(e).unwrap());
        }
    }
    Constellation::special(elements).unwrap()
}

/// `{I, D, E}` with `D = diag(ω, ω̄)`, `E = D²`, `ω = e^{2πi/3}`.
fn optimal3dim2() -> Constellation {
    let w = |k| root_of_unity(3, k);
    Constellation::special(vec![
        UnitaryMatrix::identity(2),
        UnitaryMatrix::new(CMatrix::diag(&[w(1), w(-1)])).unwrap(),
        UnitaryMatrix::new(CMatrix::diag(&[w(2), w(-2)])).unwrap(),
    ])
    .unwrap()
}

fn exact5db3() -> Constellation {
    Constellation::special(vec![
        UnitaryMatrix::identity(2),
        printed(&[
            &[c(-0.4530000, -0.7804689), c(0.2197119, -0.3706563)],
            &[c(-0.1733377, -0.3944787), c(-0.5439448, 0.7200449)],
        ]),
        printed(&[
            &[c(-0.4475155, 0.7358245), c(-0.1243078, 0.4927877)],
            &[c(0.1862253, 0.4728766), c(-0.5378253, -0.6726454)],
        ]),
    ])
    .unwrap()
}

/// A published constellation by name; see [`builtin_names`].
pub fn builtin(name: &str) -> Result<Constellation> {
    match name {
        "orthogonal121" => Ok(orthogonal121()),
        "sl2f5" => Ok(sl2f5()),
        "optimal3dim2" => Ok(optimal3dim2()),
        "exact5db3" => Ok(exact5db3()),
        _ => builtin_structure(name)?.expand(),
    }
}
