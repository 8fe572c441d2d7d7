//! Constellations of unitary space-time codewords.
//!
//! A special-form constellation stores the `M×M` unitaries `Ψ_k`; the
//! transmitted frames are `Φ_k = (√2/2)(I; Ψ_k)` with `T = 2M`. A
//! general-form constellation stores `T×M` frames with `Φ*Φ = I` directly.

mod builtins;
pub mod io;
mod structure;
mod target;

use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, UnitaryMatrix};

pub use builtins::{builtin, builtin_names, builtin_structure};
pub use structure::{ChainReading, GeneratorStructure, ProductVariant, StructureKind, Word};
pub use target::{IndexedTarget, PairTarget, ReductionPlan, CLAMP_SLACK};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Special,
    General,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    form: Form,
    t: usize,
    m: usize,
    elements: Vec<CMatrix>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateReport {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "T")]
    pub t: usize,
    /// Bits per channel use.
    pub rate: f64,
}

/// Frame tolerance for general-form elements, `‖Φ*Φ − I‖_F`.
pub const FRAME_TOLERANCE: f64 = 1e-10;

impl Constellation {
    /// Special-form constellation from the `Ψ_k`.
    pub fn special(elements: Vec<UnitaryMatrix>) -> Result<Self> {
        let first = elements.first().ok_or_else(|| {
            Error::validation("elements", "constellation has no elements")
        })?;
        let m = first.dim();
        for (k, e) in elements.iter().enumerate() {
            if e.dim() != m {
                return Err(Error::validation(
                    format!("elements[{k}]"),
                    format!("expected {m}x{m}, got {}x{}", e.rows(), e.cols()),
                ));
            }
        }
        Ok(Constellation {
            form: Form::Special,
            t: 2 * m,
            m,
            elements: elements.into_iter().map(UnitaryMatrix::into_matrix).collect(),
        })
    }

    /// General-form constellation; every element must be a `T×M` frame.
    pub fn general(elements: Vec<CMatrix>) -> Result<Self> {
        let first = elements.first().ok_or_else(|| {
            Error::validation("elements", "constellation has no elements")
        })?;
        let (t, m) = first.shape();
        if t < m {
            return Err(Error::validation("T", format!("T = {t} is smaller than M = {m}")));
        }
        for (k, e) in elements.iter().enumerate() {
            if e.shape() != (t, m) {
                return Err(Error::validation(
                    format!("elements[{k}]"),
                    format!("expected {t}x{m}, got {}x{}", e.rows(), e.cols()),
                ));
            }
            let defect = e.unitarity_defect();
            if !(defect <= FRAME_TOLERANCE) {
                return Err(Error::validation(
                    format!("elements[{k}]"),
                    format!("columns are not orthonormal (‖Φ*Φ − I‖_F = {defect:.3e})"),
                ));
            }
        }
        Ok(Constellation {
            form: Form::General,
            t,
            m,
            elements,
        })
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `Ψ_k` for special form, `Φ_k` for general form.
    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// The transmitted `T×M` frames.
    pub fn frames(&self) -> Vec<CMatrix> {
        match self.form {
            Form::General => self.elements.clone(),
            Form::Special => self.elements.iter().map(embed_special).collect(),
        }
    }

    /// The same codewords viewed as a general-form constellation.
    pub fn to_general(&self) -> Constellation {
        Constellation {
            form: Form::General,
            t: self.t,
            m: self.m,
            elements: self.frames(),
        }
    }

    /// `log₂(L)/M` for special form (differential modulation), `log₂(L)/T`
    /// otherwise.
    pub fn rate(&self) -> RateReport {
        let l = self.len();
        let denom = match self.form {
            Form::Special => self.m,
            Form::General => self.t,
        };
        RateReport {
            l,
            t: self.t,
            rate: (l as f64).log2() / denom as f64,
        }
    }

    /// Real dimension of the space this constellation lives in: `L·M²` for
    /// special form, `L·(2TM − M²)` for general form.
    pub fn free_parameter_count(&self) -> usize {
        match self.form {
            Form::Special => self.len() * self.m * self.m,
            Form::General => self.len() * stiefel_dimension(self.t, self.m),
        }
    }

    /// Requires at least two elements, as every distance metric does.
    pub fn require_pairs(&self) -> Result<()> {
        if self.len() < 2 {
            Err(Error::TooFewElements(self.len()))
        } else {
            Ok(())
        }
    }

    /// The all-pairs target list, in lexicographic pair order.
    pub fn pair_targets(&self) -> Vec<IndexedTarget> {
        let l = self.len();
        let mut out = Vec::with_capacity(l * l.saturating_sub(1) / 2);
        for i in 0..l {
            for j in i + 1..l {
                out.push(IndexedTarget {
                    target: self.pair_target(i, j),
                    pair: (i, j),
                });
            }
        }
        out
    }

    pub fn pair_target(&self, i: usize, j: usize) -> PairTarget {
        let (a, b) = (&self.elements[i], &self.elements[j]);
        match self.form {
            Form::Special => PairTarget::Difference(a - b),
            Form::General => PairTarget::Gram(&a.adjoint() * b),
        }
    }

    /// Left-multiplies every element by `left` and right-multiplies by `right`.
    /// For the special form both are `M×M`; for the general form `left` is
    /// `T×T` and `right` is `M×M`.
    pub fn transformed(&self, left: &CMatrix, right: &CMatrix) -> Constellation {
        Constellation {
            form: self.form,
            t: self.t,
            m: self.m,
            elements: self
                .elements
                .iter()
                .map(|e| &(left * e) * right)
                .collect(),
        }
    }
}

/// `(√2/2)(I; Ψ)`.
pub fn embed_special(psi: &CMatrix) -> CMatrix {
    CMatrix::identity(psi.rows())
        .vstack(psi)
        .scale_real(FRAC_1_SQRT_2)
}

/// Real dimension `2TM − M²` of the Stiefel manifold of `T×M` frames.
pub fn stiefel_dimension(t: usize, m: usize) -> usize {
    2 * t * m - m * m
}
