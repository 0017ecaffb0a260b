use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use super::{
    coeff, Coeff, Ladder, LadderPolynomial, OrderingTag, PhasePolynomial, Rational, UnitFactor,
    Word, MAX_DEGREE,
};
use crate::error::{Error, Result};

type WordMap = BTreeMap<Word, Coeff>;

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        return Err(Error::Ordering(format!(
            "degree {degree} exceeds the cap of {MAX_DEGREE}"
        )));
    }
    Ok(())
}

fn binomial(n: u32, k: u32) -> i128 {
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
}

fn i_pow(n: u32) -> Coeff {
    match n % 4 {
        0 => coeff(1, 0),
        1 => coeff(0, 1),
        2 => coeff(-1, 0),
        _ => coeff(0, -1),
    }
}

fn word_product(a: &WordMap, b: &WordMap) -> WordMap {
    let mut out = WordMap::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            let mut w = wa.clone();
            w.extend_from_slice(wb);
            *out.entry(w).or_insert_with(Coeff::zero) += ca * cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn word_sum(into: &mut WordMap, from: &WordMap) {
    for (w, c) in from {
        *into.entry(w.clone()).or_insert_with(Coeff::zero) += c;
    }
    into.retain(|_, c| !c.is_zero());
}

/// Sum over all arrangements of `m` copies of `(a + a')` and `n` copies of
/// `(a' - a)` (unit factors and the `i^n` stripped).
fn arrangements(mode: usize, m: u32, n: u32, memo: &mut HashMap<(u32, u32), WordMap>) -> WordMap {
    if let Some(hit) = memo.get(&(m, n)) {
        return hit.clone();
    }
    let out = if m == 0 && n == 0 {
        WordMap::from([(Vec::new(), Coeff::one())])
    } else {
        let mut acc = WordMap::new();
        if m > 0 {
            let q = WordMap::from([
                (vec![Ladder::a(mode)], coeff(1, 0)),
                (vec![Ladder::ad(mode)], coeff(1, 0)),
            ]);
            word_sum(&mut acc, &word_product(&q, &arrangements(mode, m - 1, n, memo)));
        }
        if n > 0 {
            let p = WordMap::from([
                (vec![Ladder::ad(mode)], coeff(1, 0)),
                (vec![Ladder::a(mode)], coeff(-1, 0)),
            ]);
            word_sum(&mut acc, &word_product(&p, &arrangements(mode, m, n - 1, memo)));
        }
        acc
    };
    memo.insert((m, n), out.clone());
    out
}

fn assemble(
    f: &PhasePolynomial,
    per_mode: impl Fn(usize, u32, u32) -> WordMap,
    tag: OrderingTag,
) -> Result<LadderPolynomial> {
    check_degree(f.degree())?;
    let mut out = LadderPolynomial::zero();
    for (powers, units, c) in f.terms() {
        let mut words = WordMap::from([(Vec::new(), *c)]);
        let mut scale = units.clone();
        for (mode, &(m, n)) in powers.iter().enumerate() {
            if m + n == 0 {
                continue;
            }
            words = word_product(&words, &per_mode(mode, m, n));
            scale = scale
                .mul(&UnitFactor::lambda(mode, m as i32))
                .mul(&UnitFactor::mu(mode, n as i32));
        }
        for (w, k) in words {
            out.add_term(k, scale.clone(), w);
        }
    }
    out.tag = tag;
    Ok(out)
}

/// Symmetrized operator for each monomial: `q^m p^n` becomes the average over
/// all orderings of `m` position and `n` momentum operators.
pub fn weyl_quantize(f: &PhasePolynomial) -> Result<LadderPolynomial> {
    assemble(
        f,
        |mode, m, n| {
            let mut memo = HashMap::new();
            let sum = arrangements(mode, m, n, &mut memo);
            let count = binomial(m + n, m);
            let factor = i_pow(n) * Coeff::new(Rational::new(1, count), Rational::zero());
            sum.into_iter().map(|(w, c)| (w, c * factor)).collect()
        },
        OrderingTag::Symmetric,
    )
}

/// Anti-Wick quantization: `q -> lambda (alpha + alpha*)`, `p -> i mu (alpha* - alpha)`,
/// then each `alpha^j alpha*^k` becomes `a^j a'^k` with no commutator corrections.
pub fn berezin_quantize(f: &PhasePolynomial) -> Result<LadderPolynomial> {
    assemble(
        f,
        |mode, m, n| {
            let mut out = WordMap::new();
            for r in 0..=m {
                for s in 0..=n {
                    let sign = if s % 2 == 1 { -1 } else { 1 };
                    let c = i_pow(n) * coeff(sign * binomial(m, r) * binomial(n, s), 0);
                    let j = (r + s) as usize;
                    let k = (m - r + n - s) as usize;
                    let mut w = vec![Ladder::a(mode); j];
                    w.extend(std::iter::repeat_n(Ladder::ad(mode), k));
                    *out.entry(w).or_insert_with(Coeff::zero) += c;
                }
            }
            out.retain(|_, c| !c.is_zero());
            out
        },
        OrderingTag::Antinormal,
    )
}

/// `a^j a'^k` coefficients of a single-mode word given as dagger flags.
fn antinormal_single(word: &[bool], memo: &mut HashMap<Vec<bool>, BTreeMap<(usize, usize), i128>>) -> BTreeMap<(usize, usize), i128> {
    if let Some(hit) = memo.get(word) {
        return hit.clone();
    }
    let out = match word.windows(2).position(|w| w[0] && !w[1]) {
        None => {
            let j = word.iter().filter(|d| !**d).count();
            BTreeMap::from([((j, word.len() - j), 1)])
        }
        Some(i) => {
            // a' a = a a' - 1
            let mut swapped = word.to_vec();
            swapped.swap(i, i + 1);
            let mut dropped = word.to_vec();
            dropped.drain(i..i + 2);
            let mut acc = antinormal_single(&swapped, memo);
            for (key, c) in antinormal_single(&dropped, memo) {
                *acc.entry(key).or_insert(0) -= c;
            }
            acc.retain(|_, c| *c != 0);
            acc
        }
    };
    memo.insert(word.to_vec(), out.clone());
    out
}

/// Rewrites every word into anti-normal order using `[a, a'] = 1` per mode.
/// Coefficients stay exact throughout.
pub fn to_antinormal(op: &LadderPolynomial) -> Result<LadderPolynomial> {
    check_degree(op.degree())?;
    let mut memo = HashMap::new();
    let mut out = LadderPolynomial::zero();
    for (word, units, c) in op.terms() {
        let mut words = WordMap::from([(Vec::new(), *c)]);
        let mut start = 0;
        while start < word.len() {
            let mode = word[start].mode;
            let end = start + word[start..].iter().take_while(|l| l.mode == mode).count();
            let flags: Vec<bool> = word[start..end].iter().map(|l| l.dagger).collect();
            let single: WordMap = antinormal_single(&flags, &mut memo)
                .into_iter()
                .map(|((j, k), n)| {
                    let mut w = vec![Ladder::a(mode); j];
                    w.extend(std::iter::repeat_n(Ladder::ad(mode), k));
                    (w, coeff(n, 0))
                })
                .collect();
            words = word_product(&words, &single);
            start = end;
        }
        for (w, k) in words {
            out.add_term(k, units.clone(), w);
        }
    }
    out.tag = OrderingTag::Antinormal;
    Ok(out)
}
