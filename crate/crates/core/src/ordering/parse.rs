//! Text syntax: sums of products such as `2.0*q^2*p - 0.5*a'*a + (1+2i)*q1`.
//! `q`, `p`, `a` take an optional mode index (`q1`, `a2'`); an apostrophe
//! marks the creation operator; a trailing `i` on a number or a bare `i`
//! is the imaginary unit. Whitespace is ignored.

use num_traits::{One, Zero};

use super::{
    coeff, Coeff, Ladder, LadderPolynomial, PhasePolynomial, Rational, UnitFactor, MAX_DEGREE,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Coeff),
    Q(usize),
    P(usize),
    A(usize, bool),
    Plus,
    Minus,
    Star,
    Caret,
    Open,
    Close,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '^' => Tok::Caret,
            '(' => Tok::Open,
            ')' => Tok::Close,
            d if d.is_ascii_digit() || d == '.' => {
                let (value, next) = lex_number(&chars, i)?;
                i = next;
                let value = if chars.get(i) == Some(&'i') && !chars.get(i + 1).is_some_and(|c| c.is_alphanumeric()) {
                    i += 1;
                    Coeff::new(Rational::zero(), value)
                } else {
                    Coeff::new(value, Rational::zero())
                };
                out.push((start, Tok::Num(value)));
                continue;
            }
            'q' | 'p' | 'a' => {
                i += 1;
                let digits_start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let mode = if i == digits_start {
                    0
                } else {
                    chars[digits_start..i]
                        .iter()
                        .collect::<String>()
                        .parse::<usize>()
                        .map_err(|_| Error::parse(digits_start, "mode index out of range"))?
                };
                let tok = match c {
                    'q' => Tok::Q(mode),
                    'p' => Tok::P(mode),
                    _ => {
                        let dagger = matches!(chars.get(i), Some('\'') | Some('†'));
                        if dagger {
                            i += 1;
                        }
                        Tok::A(mode, dagger)
                    }
                };
                out.push((start, tok));
                continue;
            }
            'i' => Tok::Num(coeff(0, 1)),
            other => return Err(Error::parse(start, format!("unexpected character '{other}'"))),
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

/// Exact decimal: `12`, `0.25`, `1e-3`, `.5`.
fn lex_number(chars: &[char], mut i: usize) -> Result<(Rational, usize)> {
    let start = i;
    let overflow = || Error::parse(start, "number too large for exact arithmetic");
    let mut mantissa: i128 = 0;
    let mut scale: i32 = 0;
    let mut digits = 0;
    let mut seen_point = false;
    while i < chars.len() {
        let c = chars[i];
        if let Some(d) = c.to_digit(10) {
            mantissa = mantissa
                .checked_mul(10)
                .and_then(|m| m.checked_add(d as i128))
                .ok_or_else(overflow)?;
            if seen_point {
                scale -= 1;
            }
            digits += 1;
        } else if c == '.' && !seen_point {
            seen_point = true;
        } else {
            break;
        }
        i += 1;
    }
    if digits == 0 {
        return Err(Error::parse(start, "malformed number"));
    }
    if matches!(chars.get(i), Some('e') | Some('E')) {
        let mut j = i + 1;
        let negative = match chars.get(j) {
            Some('-') => {
                j += 1;
                true
            }
            Some('+') => {
                j += 1;
                false
            }
            _ => false,
        };
        let exp_start = j;
        while j < chars.len() && chars[j].is_ascii_digit() {
            j += 1;
        }
        if j == exp_start {
            return Err(Error::parse(i, "malformed exponent"));
        }
        let e: i32 = chars[exp_start..j]
            .iter()
            .collect::<String>()
            .parse()
            .map_err(|_| Error::parse(exp_start, "exponent out of range"))?;
        scale += if negative { -e } else { e };
        i = j;
    }
    let pow10 = |n: u32| 10i128.checked_pow(n).ok_or_else(overflow);
    let value = if scale >= 0 {
        Rational::from_integer(mantissa.checked_mul(pow10(scale as u32)?).ok_or_else(overflow)?)
    } else {
        Rational::new(mantissa, pow10((-scale) as u32)?)
    };
    Ok((value, i))
}

#[derive(Debug, Clone)]
enum Expr {
    Num(Coeff),
    Q(usize),
    P(usize),
    A(usize, usize, bool),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Expr::Neg(Box::new(self.product()?))
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.product()?
            }
            _ => self.product()?,
        };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.power()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.power()?));
        }
        Ok(lhs)
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let at = self.here();
        match self.toks.get(self.pos) {
            Some((_, Tok::Num(c))) if c.im.is_zero() && c.re.is_integer() => {
                let n = c.re.to_integer();
                if !(0..=MAX_DEGREE as i128).contains(&n) {
                    return Err(Error::parse(at, format!("exponent must be between 0 and {MAX_DEGREE}")));
                }
                self.pos += 1;
                Ok(Expr::Pow(Box::new(base), n as u32))
            }
            _ => Err(Error::parse(at, "expected a non-negative integer exponent")),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = self.here();
        let Some((_, tok)) = self.toks.get(self.pos).cloned() else {
            return Err(Error::parse(at, "unexpected end of input"));
        };
        self.pos += 1;
        match tok {
            Tok::Num(c) => Ok(Expr::Num(c)),
            Tok::Q(k) => Ok(Expr::Q(k)),
            Tok::P(k) => Ok(Expr::P(k)),
            Tok::A(k, d) => Ok(Expr::A(at, k, d)),
            Tok::Minus => Ok(Expr::Neg(Box::new(self.power()?))),
            Tok::Open => {
                let inner = self.sum()?;
                if self.peek() != Some(&Tok::Close) {
                    return Err(Error::parse(self.here(), "expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            _ => Err(Error::parse(at, "expected a number, symbol or '('")),
        }
    }
}

fn parse_expr(text: &str) -> Result<Expr> {
    let toks = lex(text)?;
    let end = text.chars().count();
    if toks.is_empty() {
        return Err(Error::parse(0, "empty polynomial"));
    }
    let mut p = Parser { toks, pos: 0, end };
    let e = p.sum()?;
    if p.pos != p.toks.len() {
        return Err(Error::parse(p.here(), "unexpected trailing input"));
    }
    Ok(e)
}

fn check_product(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        return Err(Error::parse(0, format!("degree {degree} exceeds {MAX_DEGREE}")));
    }
    Ok(())
}

fn phase(e: &Expr) -> Result<PhasePolynomial> {
    Ok(match e {
        Expr::Num(c) => PhasePolynomial::constant(*c),
        Expr::Q(k) => PhasePolynomial::q(*k),
        Expr::P(k) => PhasePolynomial::p(*k),
        Expr::A(at, _, _) => {
            return Err(Error::parse(
                *at,
                "ladder operators are not allowed in a phase-space polynomial",
            ))
        }
        Expr::Neg(a) => phase(a)?.scale(coeff(-1, 0)),
        Expr::Add(a, b) => phase(a)?.add(&phase(b)?),
        Expr::Sub(a, b) => phase(a)?.add(&phase(b)?.scale(coeff(-1, 0))),
        Expr::Mul(a, b) => {
            let (a, b) = (phase(a)?, phase(b)?);
            check_product(a.degree() + b.degree())?;
            a.mul(&b)
        }
        Expr::Pow(a, n) => {
            let a = phase(a)?;
            check_product(a.degree() * *n as usize)?;
            a.pow(*n)
        }
    })
}

fn ladder(e: &Expr) -> Result<LadderPolynomial> {
    Ok(match e {
        Expr::Num(c) => LadderPolynomial::constant(*c),
        Expr::Q(k) => {
            // lambda (a + a')
            let mut p = LadderPolynomial::zero();
            p.add_term(Coeff::one(), UnitFactor::lambda(*k, 1), vec![Ladder::a(*k)]);
            p.add_term(Coeff::one(), UnitFactor::lambda(*k, 1), vec![Ladder::ad(*k)]);
            p
        }
        Expr::P(k) => {
            // i mu (a' - a)
            let mut p = LadderPolynomial::zero();
            p.add_term(coeff(0, 1), UnitFactor::mu(*k, 1), vec![Ladder::ad(*k)]);
            p.add_term(coeff(0, -1), UnitFactor::mu(*k, 1), vec![Ladder::a(*k)]);
            p
        }
        Expr::A(_, k, d) => LadderPolynomial::word(
            Coeff::one(),
            vec![Ladder {
                mode: *k,
                dagger: *d,
            }],
        ),
        Expr::Neg(a) => ladder(a)?.scale(coeff(-1, 0)),
        Expr::Add(a, b) => ladder(a)?.add(&ladder(b)?),
        Expr::Sub(a, b) => ladder(a)?.add(&ladder(b)?.scale(coeff(-1, 0))),
        Expr::Mul(a, b) => {
            let (a, b) = (ladder(a)?, ladder(b)?);
            check_product(a.degree() + b.degree())?;
            a.mul(&b)
        }
        Expr::Pow(a, n) => {
            let base = ladder(a)?;
            check_product(base.degree() * *n as usize)?;
            (0..*n).fold(LadderPolynomial::constant(Coeff::one()), |acc, _| acc.mul(&base))
        }
    })
}

pub(super) fn parse_phase(text: &str) -> Result<PhasePolynomial> {
    let f = phase(&parse_expr(text)?)?;
    if f.degree() > MAX_DEGREE {
        return Err(Error::parse(0, format!("degree {} exceeds {MAX_DEGREE}", f.degree())));
    }
    Ok(f)
}

/// Operator products keep the written order; `q` and `p` expand into ladder
/// operators in place.
pub(super) fn parse_ladder(text: &str) -> Result<LadderPolynomial> {
    let mut op = ladder(&parse_expr(text)?)?;
    if op.degree() > MAX_DEGREE {
        return Err(Error::parse(0, format!("degree {} exceeds {MAX_DEGREE}", op.degree())));
    }
    op.tag = op.classify();
    Ok(op)
}
