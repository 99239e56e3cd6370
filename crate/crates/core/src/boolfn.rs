//! Boolean functions on `{0,1}ⁿ` and their Fourier spectra.
//!
//! Spectra are taken of the ±1-valued `g = 1 − 2f`, so that
//! `ĝ(s) = 2⁻ⁿ Σ_x g(x)·χ_s(x)` with `χ_s(x) = (−1)^{s·x}` and the squared
//! coefficients form the distribution `p₀` that noise-free Fourier sampling
//! draws from.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{check_width, Error, Result};
use crate::wht::fwht;

/// Widest table the dense representation (and the transform) will hold.
pub const MAX_DENSE_WIDTH: usize = 24;
/// Widest function `coeff_bruteforce` will sum over.
pub const MAX_BRUTEFORCE_WIDTH: usize = 16;
/// Consecutive rejections after which `gen_ftau` gives up.
pub const FTAU_MAX_REJECTIONS: usize = 1000;

const PARSEVAL_TOL: f64 = 1e-9;

/// A truth table over `2^width` inputs, indexed by the input read as a
/// binary number with its leftmost bit most significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable {
    width: usize,
    values: Vec<bool>,
}

impl TruthTable {
    pub fn new(width: usize, values: Vec<bool>) -> Result<Self> {
        if width > MAX_DENSE_WIDTH {
            return Err(Error::Capacity {
                what: "dense truth table width",
                limit: MAX_DENSE_WIDTH,
                requested: width,
            });
        }
        if values.len() != 1usize << width {
            return Err(Error::Argument(format!(
                "truth table of width {width} needs {} entries, got {}",
                1usize << width,
                values.len()
            )));
        }
        Ok(TruthTable { width, values })
    }

    pub fn from_fn(width: usize, mut f: impl FnMut(&BitString) -> bool) -> Result<Self> {
        if width > MAX_DENSE_WIDTH {
            return Err(Error::Capacity {
                what: "dense truth table width",
                limit: MAX_DENSE_WIDTH,
                requested: width,
            });
        }
        let values = (0..1u64 << width)
            .map(|i| f(&BitString::from_index(i, width)))
            .collect();
        Ok(TruthTable { width, values })
    }

    pub fn random<R: Rng + ?Sized>(width: usize, rng: &mut R) -> Result<Self> {
        let values = (0..1usize << width.min(MAX_DENSE_WIDTH)).map(|_| rng.gen()).collect();
        Self::new(width, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    #[inline]
    pub fn lookup(&self, index: usize) -> bool {
        self.values[index]
    }

    /// Fourier coefficients of `1 − 2·table`, dense, indexed like the table.
    fn coefficients(&self) -> Vec<f64> {
        let mut data: Vec<f64> = self
            .values
            .iter()
            .map(|&v| if v { -1.0 } else { 1.0 })
            .collect();
        fwht(&mut data);
        let scale = (self.values.len() as f64).recip();
        data.iter_mut().for_each(|c| *c *= scale);
        data
    }

    fn to_text(&self) -> String {
        self.values.iter().map(|&v| if v { '1' } else { '0' }).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Representation {
    Dense(TruthTable),
    /// Depends only on `coords` (0-based, strictly increasing); inner bit `k`
    /// of the table index is coordinate `coords[k]`.
    Junta { coords: Vec<usize>, table: TruthTable },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BooleanFunction {
    n: usize,
    repr: Representation,
}

impl BooleanFunction {
    pub fn dense(table: TruthTable) -> Self {
        BooleanFunction {
            n: table.width(),
            repr: Representation::Dense(table),
        }
    }

    /// `coords` are 0-based input positions; they are sorted internally and
    /// the table is read in that sorted order.
    pub fn junta(n: usize, coords: Vec<usize>, table: TruthTable) -> Result<Self> {
        if coords.len() != table.width() {
            return Err(Error::Argument(format!(
                "junta has {} coordinates but a table of width {}",
                coords.len(),
                table.width()
            )));
        }
        let mut sorted = coords.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != coords.len() {
            return Err(Error::Argument("junta coordinates must be distinct".into()));
        }
        if sorted != coords {
            return Err(Error::Argument("junta coordinates must be increasing".into()));
        }
        if let Some(&bad) = coords.iter().find(|&&c| c >= n) {
            return Err(Error::Argument(format!(
                "junta coordinate {bad} out of range for width {n}"
            )));
        }
        Ok(BooleanFunction {
            n,
            repr: Representation::Junta { coords, table },
        })
    }

    pub fn constant(n: usize, value: bool) -> Self {
        let table = TruthTable::new(0, vec![value]).expect("width-0 table");
        BooleanFunction {
            n,
            repr: Representation::Junta {
                coords: Vec::new(),
                table,
            },
        }
    }

    /// The 0/1 parity `x ↦ s·x mod 2`.
    pub fn parity(s: &BitString) -> Self {
        let coords: Vec<usize> = (0..s.len()).filter(|&i| s.get(i)).collect();
        let width = coords.len();
        let table = TruthTable::from_fn(width, |x| x.weight() % 2 == 1)
            .expect("parity support fits the dense cap");
        BooleanFunction::junta(s.len(), coords, table).expect("valid parity junta")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    /// Coordinates the function may depend on.
    pub fn relevant_coords(&self) -> Vec<usize> {
        match &self.repr {
            Representation::Dense(_) => (0..self.n).collect(),
            Representation::Junta { coords, .. } => coords.clone(),
        }
    }

    pub fn eval(&self, x: &BitString) -> Result<bool> {
        check_width(self.n, x.len())?;
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &BitString) -> bool {
        match &self.repr {
            Representation::Dense(table) => table.lookup(x.to_index() as usize),
            Representation::Junta { coords, table } => {
                let idx = coords
                    .iter()
                    .fold(0usize, |acc, &c| (acc << 1) | x.get(c) as usize);
                table.lookup(idx)
            }
        }
    }

    /// Exact Fourier spectrum via the Walsh–Hadamard transform of the table.
    pub fn spectrum(&self) -> Result<FourierSpectrum> {
        let (coords, table) = match &self.repr {
            Representation::Dense(t) => ((0..self.n).collect::<Vec<_>>(), t),
            Representation::Junta { coords, table } => (coords.clone(), table),
        };
        let width = table.width();
        let mut entries = BTreeMap::new();
        for (idx, c) in table.coefficients().into_iter().enumerate() {
            if c != 0.0 {
                let mut s = BitString::zeros(self.n);
                for (k, &coord) in coords.iter().enumerate() {
                    if (idx >> (width - 1 - k)) & 1 == 1 {
                        s.set(coord, true);
                    }
                }
                entries.insert(s, c);
            }
        }
        Ok(FourierSpectrum { n: self.n, entries })
    }

    pub fn to_file(&self) -> FunctionFile {
        match &self.repr {
            Representation::Dense(t) => FunctionFile {
                n: self.n,
                kind: FunctionKind::Dense,
                coords: None,
                table: t.to_text(),
            },
            Representation::Junta { coords, table } => FunctionFile {
                n: self.n,
                kind: FunctionKind::Junta,
                coords: Some(coords.iter().map(|c| c + 1).collect()),
                table: table.to_text(),
            },
        }
    }

    pub fn from_file(file: &FunctionFile) -> Result<Self> {
        let values = file
            .table
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Argument(format!("invalid table character {other:?}"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        match file.kind {
            FunctionKind::Dense => {
                if file.coords.is_some() {
                    return Err(Error::Argument("dense functions carry no coords".into()));
                }
                Ok(BooleanFunction::dense(TruthTable::new(file.n, values)?))
            }
            FunctionKind::Junta => {
                let coords = file
                    .coords
                    .as_ref()
                    .ok_or_else(|| Error::Argument("junta function needs coords".into()))?;
                if coords.contains(&0) {
                    return Err(Error::Argument("junta coords are 1-based".into()));
                }
                let coords: Vec<usize> = coords.iter().map(|c| c - 1).collect();
                let table = TruthTable::new(coords.len(), values)?;
                BooleanFunction::junta(file.n, coords, table)
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_file()).map_err(|e| Error::Internal(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: FunctionFile =
            serde_json::from_str(&text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
        Self::from_file(&file)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionKind {
    Dense,
    Junta,
}

/// On-disk form of a [`BooleanFunction`]. `coords` are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionFile {
    pub n: usize,
    pub kind: FunctionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<usize>>,
    pub table: String,
}

/// Sparse map from `s` to `ĝ(s)`; only nonzero coefficients are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSpectrum {
    n: usize,
    entries: BTreeMap<BitString, f64>,
}

/// One exported spectrum entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub s: BitString,
    pub coeff: f64,
}

impl FourierSpectrum {
    /// Builds a spectrum from explicit entries. Zero coefficients are dropped.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (BitString, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (s, c) in entries {
            check_width(n, s.len())?;
            if c != 0.0 {
                map.insert(s, c);
            }
        }
        Ok(FourierSpectrum { n, entries: map })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeff(&self, s: &BitString) -> f64 {
        self.entries.get(s).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BitString, f64)> {
        self.entries.iter().map(|(s, &c)| (s, c))
    }

    pub fn support(&self) -> impl Iterator<Item = &BitString> {
        self.entries.keys()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn parseval_sum(&self) -> f64 {
        self.entries.values().map(|c| c * c).sum()
    }

    pub fn check_parseval(&self) -> Result<()> {
        let total = self.parseval_sum();
        if (total - 1.0).abs() <= PARSEVAL_TOL {
            Ok(())
        } else {
            Err(Error::Invariant(format!(
                "Parseval violated: sum of squared coefficients is {total}"
            )))
        }
    }

    /// The sampling distribution `p₀(s) = ĝ(s)²` over the support.
    pub fn p0(&self) -> BTreeMap<BitString, f64> {
        self.entries.iter().map(|(s, c)| (s.clone(), c * c)).collect()
    }

    /// Loss of the parity hypothesis `x ↦ s·x`, i.e. `Pr_x[f(x) ≠ s·x] = (1 − ĝ(s))/2`.
    pub fn loss_exact(&self, s: &BitString) -> Result<f64> {
        check_width(self.n, s.len())?;
        Ok((1.0 - self.coeff(s)) / 2.0)
    }

    pub fn min_nonzero_coeff(&self) -> Result<f64> {
        self.entries
            .values()
            .map(|c| c.abs())
            .reduce(f64::min)
            .ok_or_else(|| Error::Invariant("empty spectrum".into()))
    }

    /// Largest coefficient over all of `{0,1}ⁿ`; strings outside the support
    /// contribute 0.
    pub fn max_coeff(&self) -> f64 {
        let best = self.entries.values().copied().fold(f64::NEG_INFINITY, f64::max);
        let full_support = self.n < 64 && self.entries.len() as u128 == 1u128 << self.n;
        if full_support {
            best
        } else {
            best.max(0.0)
        }
    }

    /// A string attaining [`FourierSpectrum::max_coeff`], lexicographically smallest.
    pub fn argmax(&self) -> BitString {
        let best = self.max_coeff();
        let in_support = self
            .entries
            .iter()
            .find(|(_, &c)| c == best)
            .map(|(s, _)| s.clone());
        let outside = if best == 0.0 {
            self.smallest_outside_support()
        } else {
            None
        };
        match (in_support, outside) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => BitString::zeros(self.n),
        }
    }

    fn smallest_outside_support(&self) -> Option<BitString> {
        // Walk strings in lexicographic order; the support is finite so a gap
        // appears within support_len + 1 steps.
        let mut candidate = BitString::zeros(self.n);
        for _ in 0..=self.entries.len() {
            if !self.entries.contains_key(&candidate) {
                return Some(candidate);
            }
            candidate = increment(&candidate)?;
        }
        None
    }

    pub fn records(&self) -> Vec<SpectrumRecord> {
        self.entries
            .iter()
            .map(|(s, &coeff)| SpectrumRecord { s: s.clone(), coeff })
            .collect()
    }
}

/// Next string in lexicographic order of the same width, or `None` after `1ⁿ`.
fn increment(s: &BitString) -> Option<BitString> {
    let mut out = s.clone();
    for i in (0..s.len()).rev() {
        if out.get(i) {
            out.set(i, false);
        } else {
            out.set(i, true);
            return Some(out);
        }
    }
    None
}

/// Direct summation of `2⁻ⁿ Σ_x (1 − 2f(x))·χ_s(x)`, for checking [`BooleanFunction::spectrum`].
pub fn coeff_bruteforce(f: &BooleanFunction, s: &BitString) -> Result<f64> {
    if f.n() > MAX_BRUTEFORCE_WIDTH {
        return Err(Error::Capacity {
            what: "brute-force coefficient width",
            limit: MAX_BRUTEFORCE_WIDTH,
            requested: f.n(),
        });
    }
    check_width(f.n(), s.len())?;
    let mut total: i64 = 0;
    for i in 0..1u64 << f.n() {
        let x = BitString::from_index(i, f.n());
        let g = if f.eval(&x)? { -1 } else { 1 };
        let chi = if s.dot(&x) { -1 } else { 1 };
        total += g * chi;
    }
    Ok(total as f64 / (1u64 << f.n()) as f64)
}

/// Random function in `F_τ`: a `j`-junta on uniformly chosen coordinates whose
/// nonzero Fourier coefficients all have magnitude at least `tau`.
pub fn gen_ftau<R: Rng + ?Sized>(n: usize, j: usize, tau: f64, rng: &mut R) -> Result<BooleanFunction> {
    if j > MAX_DENSE_WIDTH {
        return Err(Error::Capacity {
            what: "junta size",
            limit: MAX_DENSE_WIDTH,
            requested: j,
        });
    }
    if j > n {
        return Err(Error::Argument(format!("junta size {j} exceeds width {n}")));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Argument(format!("tau must lie in (0, 1], got {tau}")));
    }
    let mut coords = index::sample(rng, n, j).into_vec();
    coords.sort_unstable();
    for _ in 0..FTAU_MAX_REJECTIONS {
        let table = TruthTable::random(j, rng)?;
        let min = table
            .coefficients()
            .into_iter()
            .filter(|c| *c != 0.0)
            .map(f64::abs)
            .fold(f64::INFINITY, f64::min);
        if min >= tau {
            return BooleanFunction::junta(n, coords, table);
        }
    }
    Err(Error::Generation {
        attempts: FTAU_MAX_REJECTIONS,
        reason: format!("no {j}-junta with all nonzero coefficients >= {tau} found"),
    })
}
