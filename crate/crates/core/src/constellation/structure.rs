//! Generator-structured constellations: a few unitary generators and a rule
//! that turns them into a list of words.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, UnitaryMatrix};

use super::target::{IndexedTarget, PowerCache, ReductionPlan};
use super::Constellation;

const A: u8 = 0;
const B: u8 = 1;
const C: u8 = 2;
const D: u8 = 3;

/// A product of generator powers, stored as runs `(letter, exponent)` with
/// no zero exponents and no two adjacent runs of the same letter.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<(u8, u32)>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn from_runs(runs: impl IntoIterator<Item = (u8, u32)>) -> Self {
        let mut w = Word::identity();
        for (letter, e) in runs {
            w.push(letter, e);
        }
        w
    }

    pub fn from_letters(letters: impl IntoIterator<Item = u8>) -> Self {
        Self::from_runs(letters.into_iter().map(|l| (l, 1)))
    }

    pub fn runs(&self) -> &[(u8, u32)] {
        &self.0
    }

    pub fn letter_count(&self) -> u32 {
        self.0.iter().map(|r| r.1).sum()
    }

    fn push(&mut self, letter: u8, e: u32) {
        if e == 0 {
            return;
        }
        match self.0.last_mut() {
            Some(last) if last.0 == letter => last.1 += e,
            _ => self.0.push((letter, e)),
        }
    }

    fn concat(&self, other: &Word) -> Word {
        let mut w = self.clone();
        for &(l, e) in &other.0 {
            w.push(l, e);
        }
        w
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "I");
        }
        for &(l, e) in &self.0 {
            let ch = (b'A' + l) as char;
            if e == 1 {
                write!(f, "{ch}")?;
            } else {
                write!(f, "{ch}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Removes the longest common left factor and then the longest common right
/// factor, letter by letter. `|det(PX − PY)| = |det(X − Y)|` for unitary
/// `P`, and likewise for singular values and Frobenius norms, so the stripped
/// pair has the same distances.
fn strip_common(x: &Word, y: &Word) -> (Word, Word) {
    let (mut x, mut y) = (x.0.clone(), y.0.clone());
    // Left factors.
    let mut i = 0;
    while i < x.len() && i < y.len() && x[i] == y[i] {
        i += 1;
    }
    x.drain(..i);
    y.drain(..i);
    if let (Some(a), Some(b)) = (x.first_mut(), y.first_mut()) {
        if a.0 == b.0 {
            let e = a.1.min(b.1);
            a.1 -= e;
            b.1 -= e;
        }
    }
    x.retain(|r| r.1 > 0);
    y.retain(|r| r.1 > 0);
    // Right factors.
    while let (Some(a), Some(b)) = (x.last(), y.last()) {
        if a != b {
            break;
        }
        x.pop();
        y.pop();
    }
    if let (Some(a), Some(b)) = (x.last_mut(), y.last_mut()) {
        if a.0 == b.0 {
            let e = a.1.min(b.1);
            a.1 -= e;
            b.1 -= e;
        }
    }
    x.retain(|r| r.1 > 0);
    y.retain(|r| r.1 > 0);
    (Word::from_runs(x), Word::from_runs(y))
}

fn ordered(x: Word, y: Word) -> (Word, Word) {
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

/// Canonical key of the pair `(x, y)`: common factors stripped, sides ordered.
pub(crate) fn canonical_pair(x: &Word, y: &Word) -> (Word, Word) {
    let (a, b) = strip_common(x, y);
    ordered(a, b)
}

/// How to read the second factor of the `ChainTimesChain` product, printed
/// as `{I, C, CD, DCD, CDCD, …}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainReading {
    /// As printed: `C`, then alternating words ending in `D` (`CD`, `DCD`,
    /// `CDCD`, …).
    #[default]
    Printed,
    /// Prefixes of `CDCD…` (`C`, `CD`, `CDC`, `CDCD`, …).
    Prefix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProductVariant {
    /// `{C^k} × {I, A, AB, ABA, …}`.
    PowersTimesChain,
    /// `{I, A, AB, ABA, …} × {I, C, CD, …}`.
    ChainTimesChain(ChainReading),
}

/// The word rule of a generator structure together with its size bounds.
/// All bounds are inclusive, so `PowersAB { p, q }` has `(p+1)(q+1)` words
/// and a chain of length `n` has `n+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StructureKind {
    /// `A^k B^l`, `0 ≤ k ≤ p`, `0 ≤ l ≤ q`.
    PowersAB { p: u32, q: u32 },
    /// `A^k B^l C^m`.
    PowersABC { p: u32, q: u32, r: u32 },
    /// `I, A, AB, ABA, …` up to `n` letters.
    WordChainAB { n: u32 },
    /// `I, A, AB, ABC, ABCA, …` up to `n` letters.
    WordChainABC { n: u32 },
    /// `A^k B^k`, `0 ≤ k ≤ n`.
    DiagonalPowersAB { n: u32 },
    /// `A^k B^k C^k`, `0 ≤ k ≤ n`.
    DiagonalPowersABC { n: u32 },
    /// `s₁s₂` over `s₁` in the first factor (`n1 + 1` words) and `s₂` in the
    /// second (`n2 + 1` words).
    ProductS1S2 { variant: ProductVariant, n1: u32, n2: u32 },
    /// General-form frames `A^k B`, `0 ≤ k ≤ l`, with `A ∈ U(T)` and
    /// `B = (I_M; 0)`.
    GeneralAkB { l: u32, m: usize },
}

fn chain(letters: &[u8], len: u32) -> Word {
    Word::from_letters((0..len as usize).map(|i| letters[i % letters.len()]))
}

/// Alternating `C`/`D` word of the given length whose last letter is `D`.
fn ending_in_d(len: u32) -> Word {
    Word::from_letters((0..len).map(|i| if (len - 1 - i) % 2 == 0 { D } else { C }))
}

impl StructureKind {
    pub fn generator_count(&self) -> usize {
        match self {
            StructureKind::PowersAB { .. }
            | StructureKind::WordChainAB { .. }
            | StructureKind::DiagonalPowersAB { .. } => 2,
            StructureKind::PowersABC { .. }
            | StructureKind::WordChainABC { .. }
            | StructureKind::DiagonalPowersABC { .. } => 3,
            StructureKind::ProductS1S2 { variant, .. } => match variant {
                ProductVariant::PowersTimesChain => 3,
                ProductVariant::ChainTimesChain(_) => 4,
            },
            StructureKind::GeneralAkB { .. } => 1,
        }
    }

    /// Number of elements of the expansion.
    pub fn size(&self) -> usize {
        let s = |x: u32| x as usize + 1;
        match *self {
            StructureKind::PowersAB { p, q } => s(p) * s(q),
            StructureKind::PowersABC { p, q, r } => s(p) * s(q) * s(r),
            StructureKind::WordChainAB { n }
            | StructureKind::WordChainABC { n }
            | StructureKind::DiagonalPowersAB { n }
            | StructureKind::DiagonalPowersABC { n } => s(n),
            StructureKind::ProductS1S2 { n1, n2, .. } => s(n1) * s(n2),
            StructureKind::GeneralAkB { l, .. } => s(l),
        }
    }

    pub fn is_general(&self) -> bool {
        matches!(self, StructureKind::GeneralAkB { .. })
    }

    /// The words of the expansion in canonical order. Empty for
    /// `GeneralAkB`, whose elements are frames rather than words.
    pub fn words(&self) -> Vec<Word> {
        match *self {
            StructureKind::PowersAB { p, q } => (0..=p)
                .flat_map(|k| (0..=q).map(move |l| Word::from_runs([(A, k), (B, l)])))
                .collect(),
            StructureKind::PowersABC { p, q, r } => (0..=p)
                .flat_map(|k| {
                    (0..=q).flat_map(move |l| {
                        (0..=r).map(move |m| Word::from_runs([(A, k), (B, l), (C, m)]))
                    })
                })
                .collect(),
            StructureKind::WordChainAB { n } => (0..=n).map(|len| chain(&[A, B], len)).collect(),
            StructureKind::WordChainABC { n } => {
                (0..=n).map(|len| chain(&[A, B, C], len)).collect()
            }
            StructureKind::DiagonalPowersAB { n } => {
                (0..=n).map(|k| Word::from_runs([(A, k), (B, k)])).collect()
            }
            StructureKind::DiagonalPowersABC { n } => (0..=n)
                .map(|k| Word::from_runs([(A, k), (B, k), (C, k)]))
                .collect(),
            StructureKind::ProductS1S2 { variant, n1, n2 } => {
                let (s1, s2): (Vec<Word>, Vec<Word>) = match variant {
                    ProductVariant::PowersTimesChain => (
                        (0..=n1).map(|k| Word::from_runs([(C, k)])).collect(),
                        (0..=n2).map(|len| chain(&[A, B], len)).collect(),
                    ),
                    ProductVariant::ChainTimesChain(reading) => (
                        (0..=n1).map(|len| chain(&[A, B], len)).collect(),
                        (0..=n2)
                            .map(|len| match (reading, len) {
                                (ChainReading::Printed, 2..) => ending_in_d(len),
                                _ => chain(&[C, D], len),
                            })
                            .collect(),
                    ),
                };
                s1.iter()
                    .flat_map(|a| s2.iter().map(move |b| a.concat(b)))
                    .collect()
            }
            StructureKind::GeneralAkB { .. } => Vec::new(),
        }
    }

    /// Closed-form count of reduced targets, where one is known.
    pub fn reduced_target_count(&self) -> Option<usize> {
        let u = |x: u32| x as usize;
        match *self {
            StructureKind::PowersAB { p, q } => Some(2 * u(p) * u(q) + u(p) + u(q)),
            StructureKind::PowersABC { p, q, r } => {
                let (p, q, r) = (u(p), u(q), u(r));
                Some(2 * p * r * (q + 1) * (q + 1) + p * (q + 1) + p * q + r + q * (r + 1) + q * r)
            }
            StructureKind::WordChainAB { n } => Some((2 * u(n)).saturating_sub(1)),
            StructureKind::WordChainABC { n } => {
                Some((1..=u(n)).map(|d| (u(n) - d + 1).min(3)).sum())
            }
            StructureKind::DiagonalPowersAB { n } => Some(u(n)),
            StructureKind::DiagonalPowersABC { n } => Some(u(n) * (u(n) + 1) / 2),
            StructureKind::ProductS1S2 { .. } => None,
            StructureKind::GeneralAkB { l, .. } => Some(2 * u(l)),
        }
    }

    /// The reduced target list: one entry per distinct canonical pair, tagged
    /// with the first element pair (in lexicographic order) that produces it.
    pub fn reduction_plan(&self) -> Result<ReductionPlan> {
        if self.size() < 2 {
            return Err(Error::TooFewElements(self.size()));
        }
        let mut entries = match *self {
            StructureKind::GeneralAkB { l, m } => {
                let l = l as i64;
                let entries = (1..=l)
                    .flat_map(|k| [(k, (0, k as usize)), (-k, (0, k as usize))])
                    .collect();
                return Ok(ReductionPlan::GeneralPowers { m, entries });
            }
            StructureKind::PowersAB { p, q } => {
                let width = q as usize + 1;
                let mut v = Vec::new();
                for e in 1..=q {
                    v.push((Word::identity(), Word::from_runs([(B, e)]), (0, e as usize)));
                }
                for d in 1..=p {
                    let row = d as usize * width;
                    v.push((Word::identity(), Word::from_runs([(A, d)]), (0, row)));
                    for e in 1..=q {
                        v.push((
                            Word::identity(),
                            Word::from_runs([(A, d), (B, e)]),
                            (0, row + e as usize),
                        ));
                        v.push((
                            Word::from_runs([(A, d)]),
                            Word::from_runs([(B, e)]),
                            (e as usize, row),
                        ));
                    }
                }
                v
            }
            StructureKind::WordChainAB { n } => chain_plan(&[A, B], n),
            StructureKind::WordChainABC { n } => chain_plan(&[A, B, C], n),
            StructureKind::DiagonalPowersAB { n } => (1..=n)
                .map(|d| (Word::identity(), Word::from_runs([(A, d), (B, d)]), (0, d as usize)))
                .collect(),
            StructureKind::DiagonalPowersABC { n } => {
                let mut v = Vec::new();
                for d in 1..=n {
                    for i in 0..=n - d {
                        let (x, y) = ordered(
                            Word::from_runs([(B, i)]),
                            Word::from_runs([(A, d), (B, i + d), (C, d)]),
                        );
                        v.push((x, y, (i as usize, (i + d) as usize)));
                    }
                }
                v
            }
            StructureKind::PowersABC { .. } | StructureKind::ProductS1S2 { .. } => {
                return Ok(ReductionPlan::Words(generic_plan(&self.words())));
            }
        };
        entries.sort_by_key(|e| e.2);
        Ok(ReductionPlan::Words(entries))
    }
}

fn chain_plan(letters: &[u8], n: u32) -> Vec<(Word, Word, (usize, usize))> {
    let period = letters.len() as u32;
    let mut v = Vec::new();
    for d in 1..=n {
        for s in 0..period.min(n - d + 1) {
            let seg = Word::from_letters(
                (0..d).map(|i| letters[((s + i) % period) as usize]),
            );
            v.push((Word::identity(), seg, (s as usize, (s + d) as usize)));
        }
    }
    v
}

/// Canonicalises every pair of `words`; valid for any word list.
pub(crate) fn generic_plan(words: &[Word]) -> Vec<(Word, Word, (usize, usize))> {
    let mut seen: HashMap<(Word, Word), ()> = HashMap::new();
    let mut out = Vec::new();
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            let key = canonical_pair(&words[i], &words[j]);
            if !seen.contains_key(&key) {
                seen.insert(key.clone(), ());
                out.push((key.0, key.1, (i, j)));
            }
        }
    }
    out
}

/// A structure kind with concrete generators.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorStructure {
    kind: StructureKind,
    generators: Vec<UnitaryMatrix>,
}

impl GeneratorStructure {
    pub fn new(kind: StructureKind, generators: Vec<UnitaryMatrix>) -> Result<Self> {
        if generators.len() != kind.generator_count() {
            return Err(Error::validation(
                "generators",
                format!(
                    "{kind:?} needs {} generators, got {}",
                    kind.generator_count(),
                    generators.len()
                ),
            ));
        }
        let dim = generators[0].dim();
        if let Some(k) = generators.iter().position(|g| g.dim() != dim) {
            return Err(Error::validation(
                format!("generators[{k}]"),
                format!("expected dimension {dim}, got {}", generators[k].dim()),
            ));
        }
        if let StructureKind::GeneralAkB { m, .. } = kind {
            if m == 0 || m > dim {
                return Err(Error::validation(
                    "M",
                    format!("M = {m} must lie in 1..={dim} for A in U({dim})"),
                ));
            }
        }
        Ok(GeneratorStructure { kind, generators })
    }

    /// Haar-random generators of dimension `dim` (`T` for `GeneralAkB`,
    /// otherwise `M`).
    pub fn random<R: Rng + ?Sized>(kind: StructureKind, dim: usize, rng: &mut R) -> Result<Self> {
        let gens = (0..kind.generator_count())
            .map(|_| UnitaryMatrix::random(dim, rng))
            .collect();
        Self::new(kind, gens)
    }

    pub fn kind(&self) -> &StructureKind {
        &self.kind
    }

    pub fn generators(&self) -> &[UnitaryMatrix] {
        &self.generators
    }

    pub fn generator_dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn with_generators(&self, generators: Vec<UnitaryMatrix>) -> Result<Self> {
        Self::new(self.kind, generators)
    }

    /// The explicit constellation, every word listed once in canonical order.
    pub fn expand(&self) -> Result<Constellation> {
        match self.kind {
            StructureKind::GeneralAkB { l, m } => {
                let a = &self.generators[0];
                let mut frames = Vec::with_capacity(l as usize + 1);
                let mut power = CMatrix::identity(a.dim());
                for k in 0..=l {
                    if k > 0 {
                        power = &power * a.as_matrix();
                    }
                    frames.push(power.leading_columns(m));
                }
                Constellation::general(frames)
            }
            _ => {
                let words = self.kind.words();
                let cache =
                    PowerCache::new(&self.generators, words.iter().flat_map(|w| w.runs()));
                let elements = words
                    .iter()
                    .map(|w| UnitaryMatrix::new(cache.eval(w)))
                    .collect::<Result<Vec<_>>>()?;
                Constellation::special(elements)
            }
        }
    }

    pub fn reduced_targets(&self) -> Result<Vec<IndexedTarget>> {
        Ok(self.kind.reduction_plan()?.targets(&self.generators))
    }
}
