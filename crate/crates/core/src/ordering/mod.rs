//! Ladder-operator polynomial algebra and the two quantization maps.
//!
//! Coefficients are exact complex rationals. The unit-dependent factors
//! `lambda_k = sqrt(hbar / 2 m_k omega_k)` and `mu_k = sqrt(hbar m_k omega_k / 2)`
//! (so that `q_k = lambda_k (a_k + a_k')` and `p_k = i mu_k (a_k' - a_k)`) are
//! carried as symbolic integer powers and only turned into numbers when an
//! expectation value is evaluated.

mod expect;
mod parse;
mod quantize;

pub use expect::{
    auto_q_grid, expectation_trace, expectation_via_q, expectation_via_q_on, ordering_discrepancy,
};
pub use quantize::{berezin_quantize, to_antinormal, weyl_quantize};

use std::collections::BTreeMap;
use std::fmt;

use num_complex::{Complex, Complex64};
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fock::{ModeSpace, OperatorMatrix};
use crate::phasespace::PhasePoint;

/// Highest total degree accepted by the quantization maps.
pub const MAX_DEGREE: usize = 8;

pub type Rational = Ratio<i128>;
/// Exact complex rational coefficient.
pub type Coeff = Complex<Rational>;

pub(crate) fn coeff(re: i128, im: i128) -> Coeff {
    Complex::new(Rational::from_integer(re), Rational::from_integer(im))
}

pub(crate) fn coeff_to_f64(c: &Coeff) -> Complex64 {
    Complex64::new(
        c.re.to_f64().unwrap_or(f64::NAN),
        c.im.to_f64().unwrap_or(f64::NAN),
    )
}

/// Product `prod_k lambda_k^{e_k} mu_k^{f_k}`, stored as `(e_k, f_k)` per mode
/// with trailing unit modes trimmed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UnitFactor {
    powers: Vec<(i32, i32)>,
}

impl UnitFactor {
    pub fn one() -> Self {
        UnitFactor::default()
    }

    pub fn lambda(mode: usize, power: i32) -> Self {
        let mut u = UnitFactor {
            powers: vec![(0, 0); mode + 1],
        };
        u.powers[mode].0 = power;
        u.trimmed()
    }

    pub fn mu(mode: usize, power: i32) -> Self {
        let mut u = UnitFactor {
            powers: vec![(0, 0); mode + 1],
        };
        u.powers[mode].1 = power;
        u.trimmed()
    }

    pub fn powers(&self) -> &[(i32, i32)] {
        &self.powers
    }

    pub fn is_one(&self) -> bool {
        self.powers.is_empty()
    }

    fn trimmed(mut self) -> Self {
        while self.powers.last() == Some(&(0, 0)) {
            self.powers.pop();
        }
        self
    }

    pub fn mul(&self, other: &UnitFactor) -> UnitFactor {
        let n = self.powers.len().max(other.powers.len());
        let get = |u: &UnitFactor, k: usize| u.powers.get(k).copied().unwrap_or((0, 0));
        UnitFactor {
            powers: (0..n)
                .map(|k| {
                    let (a, b) = (get(self, k), get(other, k));
                    (a.0 + b.0, a.1 + b.1)
                })
                .collect(),
        }
        .trimmed()
    }

    pub fn evaluate(&self, space: &ModeSpace) -> Result<f64> {
        let mut v = 1.0;
        for (k, &(e, f)) in self.powers.iter().enumerate() {
            if k >= space.mode_count() {
                return Err(Error::ModeIndex {
                    mode: k,
                    modes: space.mode_count(),
                });
            }
            v *= space.q_scale(k).powi(e) * space.p_scale(k).powi(f);
        }
        Ok(v)
    }

    fn mode_count(&self) -> usize {
        self.powers.len()
    }
}

impl fmt::Display for UnitFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &(e, m)) in self.powers.iter().enumerate() {
            for (sym, p) in [("λ", e), ("μ", m)] {
                if p == 0 {
                    continue;
                }
                if !first {
                    f.write_str(" ")?;
                }
                first = false;
                write!(f, "{sym}{}", if k == 0 { String::new() } else { k.to_string() })?;
                if p != 1 {
                    write!(f, "^{p}")?;
                }
            }
        }
        Ok(())
    }
}

fn fmt_coeff(c: &Coeff) -> String {
    if c.im.is_zero() {
        format!("{}", c.re)
    } else if c.re.is_zero() {
        format!("{}i", c.im)
    } else {
        format!("({} + {}i)", c.re, c.im)
    }
}

/// Exponents of `q_k` and `p_k` per mode, trailing zeros trimmed.
pub type PhasePowers = Vec<(u32, u32)>;

/// Polynomial in commuting classical variables `q_k, p_k`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PhasePolynomial {
    terms: BTreeMap<(PhasePowers, UnitFactor), Coeff>,
}

fn trim_powers(mut p: PhasePowers) -> PhasePowers {
    while p.last() == Some(&(0, 0)) {
        p.pop();
    }
    p
}

impl PhasePolynomial {
    pub fn zero() -> Self {
        PhasePolynomial::default()
    }

    pub fn constant(c: Coeff) -> Self {
        let mut p = PhasePolynomial::zero();
        p.add_term(c, UnitFactor::one(), Vec::new());
        p
    }

    pub fn q(mode: usize) -> Self {
        let mut powers = vec![(0, 0); mode + 1];
        powers[mode] = (1, 0);
        let mut p = PhasePolynomial::zero();
        p.add_term(Coeff::one(), UnitFactor::one(), powers);
        p
    }

    pub fn p(mode: usize) -> Self {
        let mut powers = vec![(0, 0); mode + 1];
        powers[mode] = (0, 1);
        let mut p = PhasePolynomial::zero();
        p.add_term(Coeff::one(), UnitFactor::one(), powers);
        p
    }

    /// `|alpha_k|^2 = q^2 / (4 lambda^2) + p^2 / (4 mu^2)`.
    pub fn alpha_abs_sq(mode: usize) -> Self {
        let quarter = Complex::new(Rational::new(1, 4), Rational::zero());
        let mut out = PhasePolynomial::zero();
        let mut q2 = vec![(0, 0); mode + 1];
        q2[mode] = (2, 0);
        let mut p2 = vec![(0, 0); mode + 1];
        p2[mode] = (0, 2);
        out.add_term(quarter, UnitFactor::lambda(mode, -2), q2);
        out.add_term(quarter, UnitFactor::mu(mode, -2), p2);
        out
    }

    pub fn add_term(&mut self, c: Coeff, units: UnitFactor, powers: PhasePowers) {
        if c.is_zero() {
            return;
        }
        let key = (trim_powers(powers), units);
        let entry = self.terms.entry(key.clone()).or_insert_with(Coeff::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PhasePowers, &UnitFactor, &Coeff)> {
        self.terms.iter().map(|((p, u), c)| (p, u, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|(p, _)| p.iter().map(|&(a, b)| (a + b) as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn mode_count(&self) -> usize {
        self.terms
            .keys()
            .map(|(p, u)| p.len().max(u.mode_count()))
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &PhasePolynomial) -> PhasePolynomial {
        let mut out = self.clone();
        for ((p, u), c) in &other.terms {
            out.add_term(*c, u.clone(), p.clone());
        }
        out
    }

    pub fn scale(&self, c: Coeff) -> PhasePolynomial {
        let mut out = PhasePolynomial::zero();
        for ((p, u), k) in &self.terms {
            out.add_term(k * c, u.clone(), p.clone());
        }
        out
    }

    pub fn mul(&self, other: &PhasePolynomial) -> PhasePolynomial {
        let mut out = PhasePolynomial::zero();
        for ((pa, ua), ca) in &self.terms {
            for ((pb, ub), cb) in &other.terms {
                let n = pa.len().max(pb.len());
                let get = |p: &PhasePowers, k: usize| p.get(k).copied().unwrap_or((0, 0));
                let powers = (0..n)
                    .map(|k| {
                        let (a, b) = (get(pa, k), get(pb, k));
                        (a.0 + b.0, a.1 + b.1)
                    })
                    .collect();
                out.add_term(ca * cb, ua.mul(ub), powers);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> PhasePolynomial {
        (0..n).fold(PhasePolynomial::constant(Coeff::one()), |acc, _| acc.mul(self))
    }

    /// Value at a phase-space point, using the point's `(q, p)`.
    pub fn evaluate(&self, space: &ModeSpace, point: &PhasePoint) -> Complex64 {
        let qp: Vec<(f64, f64)> = (0..point.mode_count()).map(|k| point.qp(space, k)).collect();
        self.terms
            .iter()
            .map(|((powers, units), c)| {
                let mono: f64 = powers
                    .iter()
                    .enumerate()
                    .map(|(k, &(a, b))| qp[k].0.powi(a as i32) * qp[k].1.powi(b as i32))
                    .product();
                coeff_to_f64(c) * (mono * units.evaluate(space).unwrap_or(f64::NAN))
            })
            .sum()
    }

    pub fn parse(text: &str) -> Result<PhasePolynomial> {
        parse::parse_phase(text)
    }
}

impl fmt::Display for PhasePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, ((powers, units), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            f.write_str(&fmt_coeff(c))?;
            if !units.is_one() {
                write!(f, " {units}")?;
            }
            for (k, &(a, b)) in powers.iter().enumerate() {
                let idx = if k == 0 { String::new() } else { k.to_string() };
                for (sym, e) in [("q", a), ("p", b)] {
                    match e {
                        0 => {}
                        1 => write!(f, "*{sym}{idx}")?,
                        _ => write!(f, "*{sym}{idx}^{e}")?,
                    }
                }
            }
        }
        Ok(())
    }
}

/// One ladder operator: `a_mode` or, with `dagger`, `a_mode'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn a(mode: usize) -> Self {
        Ladder { mode, dagger: false }
    }

    pub fn ad(mode: usize) -> Self {
        Ladder { mode, dagger: true }
    }
}

/// Operator product read left to right.
pub type Word = Vec<Ladder>;

/// Operators on different modes commute; a stable sort by mode is the
/// canonical representative.
pub(crate) fn canonical_word(mut w: Word) -> Word {
    w.sort_by_key(|l| l.mode);
    w
}

/// All annihilators left of all creators, per mode.
pub fn word_is_antinormal(w: &[Ladder]) -> bool {
    let mut seen_dagger = std::collections::HashSet::new();
    for l in w {
        if l.dagger {
            seen_dagger.insert(l.mode);
        } else if seen_dagger.contains(&l.mode) {
            return false;
        }
    }
    true
}

pub fn word_is_normal(w: &[Ladder]) -> bool {
    let mut seen_plain = std::collections::HashSet::new();
    for l in w {
        if !l.dagger {
            seen_plain.insert(l.mode);
        } else if seen_plain.contains(&l.mode) {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrderingTag {
    Arbitrary,
    Normal,
    Antinormal,
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadderPolynomial {
    terms: BTreeMap<(Word, UnitFactor), Coeff>,
    tag: OrderingTag,
}

impl LadderPolynomial {
    pub fn zero() -> Self {
        LadderPolynomial {
            terms: BTreeMap::new(),
            tag: OrderingTag::Arbitrary,
        }
    }

    pub fn constant(c: Coeff) -> Self {
        let mut p = LadderPolynomial::zero();
        p.add_term(c, UnitFactor::one(), Vec::new());
        p.tag = p.classify();
        p
    }

    pub fn word(c: Coeff, word: Word) -> Self {
        let mut p = LadderPolynomial::zero();
        p.add_term(c, UnitFactor::one(), word);
        p.tag = p.classify();
        p
    }

    pub fn add_term(&mut self, c: Coeff, units: UnitFactor, word: Word) {
        if c.is_zero() {
            return;
        }
        let key = (canonical_word(word), units);
        let entry = self.terms.entry(key.clone()).or_insert_with(Coeff::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &UnitFactor, &Coeff)> {
        self.terms.iter().map(|((w, u), c)| (w, u, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn tag(&self) -> OrderingTag {
        self.tag
    }

    /// Re-tags with `tag`; fails if the words contradict an ordered tag.
    pub fn with_tag(mut self, tag: OrderingTag) -> Result<Self> {
        let ok = match tag {
            OrderingTag::Antinormal => self.is_antinormal(),
            OrderingTag::Normal => self.is_normal(),
            _ => true,
        };
        if !ok {
            return Err(Error::Ordering(format!("terms are not in {tag:?} order")));
        }
        self.tag = tag;
        Ok(self)
    }

    /// Most specific order the words satisfy.
    pub fn classify(&self) -> OrderingTag {
        if self.is_antinormal() {
            OrderingTag::Antinormal
        } else if self.is_normal() {
            OrderingTag::Normal
        } else {
            OrderingTag::Arbitrary
        }
    }

    pub fn is_antinormal(&self) -> bool {
        self.terms.keys().all(|(w, _)| word_is_antinormal(w))
    }

    pub fn is_normal(&self) -> bool {
        self.terms.keys().all(|(w, _)| word_is_normal(w))
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|(w, _)| w.len()).max().unwrap_or(0)
    }

    pub fn mode_count(&self) -> usize {
        self.terms
            .keys()
            .map(|(w, u)| {
                w.iter()
                    .map(|l| l.mode + 1)
                    .max()
                    .unwrap_or(0)
                    .max(u.mode_count())
            })
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &LadderPolynomial) -> LadderPolynomial {
        let mut out = self.clone();
        for ((w, u), c) in &other.terms {
            out.add_term(*c, u.clone(), w.clone());
        }
        out.tag = if self.tag == other.tag {
            self.tag
        } else {
            out.classify()
        };
        out
    }

    pub fn scale(&self, c: Coeff) -> LadderPolynomial {
        let mut out = LadderPolynomial::zero();
        for ((w, u), k) in &self.terms {
            out.add_term(k * c, u.clone(), w.clone());
        }
        out.tag = self.tag;
        out
    }

    /// Operator product `self * other`.
    pub fn mul(&self, other: &LadderPolynomial) -> LadderPolynomial {
        let mut out = LadderPolynomial::zero();
        for ((wa, ua), ca) in &self.terms {
            for ((wb, ub), cb) in &other.terms {
                let mut w = wa.clone();
                w.extend_from_slice(wb);
                out.add_term(ca * cb, ua.mul(ub), w);
            }
        }
        out.tag = out.classify();
        out
    }

    /// Hermitian adjoint.
    pub fn adjoint(&self) -> LadderPolynomial {
        let mut out = LadderPolynomial::zero();
        for ((w, u), c) in &self.terms {
            let w: Word = w
                .iter()
                .rev()
                .map(|l| Ladder {
                    mode: l.mode,
                    dagger: !l.dagger,
                })
                .collect();
            out.add_term(c.conj(), u.clone(), w);
        }
        out.tag = out.classify();
        out
    }

    /// Matrix of the operator restricted to the retained levels of `space`.
    ///
    /// Words are applied to basis states exactly, so intermediate excursions
    /// above the truncation do not corrupt the result: the matrix equals
    /// `P W P` for the projector `P` onto the retained levels.
    pub fn matrix(&self, space: &ModeSpace) -> Result<OperatorMatrix> {
        let d = space.dim();
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(d, d);
        let numeric = self.numeric_terms(space)?;
        for i in 0..d {
            let occ = space.occupations(i);
            for (w, c) in &numeric {
                if let Some((target, amp)) = apply_word(w, &occ) {
                    if let Ok(j) = space.index_of(&target) {
                        m[(j, i)] += c * amp;
                    }
                }
            }
        }
        OperatorMatrix::new(space.clone(), m, self.to_string())
    }

    pub(crate) fn numeric_terms(&self, space: &ModeSpace) -> Result<Vec<(Word, Complex64)>> {
        if self.mode_count() > space.mode_count() {
            return Err(Error::ModeIndex {
                mode: self.mode_count() - 1,
                modes: space.mode_count(),
            });
        }
        self.terms
            .iter()
            .map(|((w, u), c)| Ok((w.clone(), coeff_to_f64(c) * u.evaluate(space)?)))
            .collect()
    }

    pub fn parse(text: &str) -> Result<LadderPolynomial> {
        parse::parse_ladder(text)
    }
}

/// Applies `word` (rightmost operator first) to the number state `occ`.
/// Returns the resulting occupations and amplitude, or `None` if annihilated.
pub(crate) fn apply_word(word: &[Ladder], occ: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut n = occ.to_vec();
    let mut amp = 1.0;
    for l in word.iter().rev() {
        let k = &mut n[l.mode];
        if l.dagger {
            *k += 1;
            amp *= (*k as f64).sqrt();
        } else {
            if *k == 0 {
                return None;
            }
            amp *= (*k as f64).sqrt();
            *k -= 1;
        }
    }
    Some((n, amp))
}

impl fmt::Display for LadderPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, ((w, u), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            f.write_str(&fmt_coeff(c))?;
            if !u.is_one() {
                write!(f, " {u}")?;
            }
            for l in w {
                let idx = if l.mode == 0 { String::new() } else { l.mode.to_string() };
                write!(f, "*a{idx}{}", if l.dagger { "'" } else { "" })?;
            }
        }
        Ok(())
    }
}
