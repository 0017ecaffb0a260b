//! Text descriptions of states and Hamiltonians.
//!
//! States:
//!
//! ```text
//! fock 1            coherent 1+0.5i        coherent 1,-2i   (two modes)
//! superpose 0.6 fock 0 + 0.8i fock 1
//! mixture 0.25 (fock 0) + 0.75 (coherent 1)
//! random            random-pure            (seeded)
//! ```
//!
//! Hamiltonians: `harmonic`, `kerr chi=0.1`, `poly <ladder polynomial>`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{
    coherent_state, harmonic_hamiltonian, kerr_hamiltonian, number_state, DensityOperator,
    ModeSpace, OperatorMatrix, StateVector,
};
use crate::ordering::LadderPolynomial;
use crate::random::{random_density, random_pure_state, seeded};

#[derive(Debug, Clone, PartialEq)]
pub enum StateRecipe {
    Fock(Vec<usize>),
    Coherent(Vec<Complex64>),
    /// Normalized on build.
    Superpose(Vec<(Complex64, StateRecipe)>),
    /// Weights normalized on build.
    Mixture(Vec<(f64, StateRecipe)>),
    Random { pure: bool },
}

impl StateRecipe {
    pub fn parse(text: &str) -> Result<Self> {
        let tokens = tokenize(text);
        let mut p = Parser {
            tokens: &tokens,
            at: 0,
            end: text.chars().count(),
        };
        let recipe = p.state()?;
        if let Some(t) = p.peek() {
            return Err(Error::parse(t.pos, format!("unexpected '{}'", t.text)));
        }
        Ok(recipe)
    }

    /// Number of modes the recipe names explicitly; `None` when any count fits.
    pub fn mode_count(&self) -> Option<usize> {
        match self {
            StateRecipe::Fock(n) => Some(n.len()),
            StateRecipe::Coherent(a) => Some(a.len()),
            StateRecipe::Superpose(parts) => parts.iter().find_map(|(_, r)| r.mode_count()),
            StateRecipe::Mixture(parts) => parts.iter().find_map(|(_, r)| r.mode_count()),
            StateRecipe::Random { .. } => None,
        }
    }

    pub fn is_pure(&self) -> bool {
        match self {
            StateRecipe::Fock(_) | StateRecipe::Coherent(_) => true,
            StateRecipe::Superpose(parts) => parts.iter().all(|(_, r)| r.is_pure()),
            StateRecipe::Mixture(_) => false,
            StateRecipe::Random { pure } => *pure,
        }
    }

    /// Ket for pure recipes.
    pub fn state_vector(&self, space: &ModeSpace, seed: u64) -> Result<StateVector> {
        match self {
            StateRecipe::Fock(n) => number_state(space, n),
            StateRecipe::Coherent(a) => coherent_state(space, a),
            StateRecipe::Random { pure: true } => random_pure_state(space, &mut seeded(seed)),
            StateRecipe::Superpose(parts) => {
                let mut acc = nalgebra::DVector::zeros(space.dim());
                for (k, (c, r)) in parts.iter().enumerate() {
                    acc += r.state_vector(space, seed.wrapping_add(k as u64))?.amplitudes() * *c;
                }
                let norm = acc.norm();
                if norm < 1e-12 {
                    return Err(Error::InvalidState("superposition cancels to zero".into()));
                }
                StateVector::new(space.clone(), acc.unscale(norm))
            }
            _ => Err(Error::InvalidState(
                "a mixed state cannot appear inside a superposition".into(),
            )),
        }
    }

    pub fn density(&self, space: &ModeSpace, seed: u64) -> Result<DensityOperator> {
        if let Some(m) = self.mode_count() {
            if m != space.mode_count() {
                return Err(Error::Dimension {
                    expected: space.mode_count(),
                    got: m,
                });
            }
        }
        match self {
            StateRecipe::Random { pure: false } => random_density(space, &mut seeded(seed)),
            StateRecipe::Mixture(parts) => {
                let total: f64 = parts.iter().map(|(w, _)| w).sum();
                if parts.iter().any(|(w, _)| !(w.is_finite() && *w >= 0.0)) || total <= 0.0 {
                    return Err(Error::InvalidState(
                        "mixture weights must be non-negative with a positive sum".into(),
                    ));
                }
                let comps = parts
                    .iter()
                    .enumerate()
                    .map(|(k, (w, r))| Ok((w / total, r.density(space, seed.wrapping_add(k as u64))?)))
                    .collect::<Result<Vec<_>>>()?;
                DensityOperator::mixture(&comps)
            }
            _ => Ok(DensityOperator::pure(&self.state_vector(space, seed)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HamiltonianRecipe {
    Harmonic,
    /// `hbar (omega n + chi n^2)`
    Kerr { chi: f64 },
    Poly(LadderPolynomial),
}

impl HamiltonianRecipe {
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        let offset = text.len() - trimmed.len();
        let (head, rest) = match trimmed.find(char::is_whitespace) {
            Some(i) => (&trimmed[..i], &trimmed[i..]),
            None => (trimmed, ""),
        };
        let rest_at = offset + head.len();
        match head {
            "harmonic" if rest.trim().is_empty() => Ok(HamiltonianRecipe::Harmonic),
            "harmonic" => Err(Error::parse(rest_at, "harmonic takes no arguments")),
            "kerr" => {
                let arg = rest.trim();
                let value = arg.strip_prefix("chi=").ok_or_else(|| {
                    Error::parse(rest_at, "expected 'chi=<value>' after 'kerr'")
                })?;
                let chi: f64 = value
                    .parse()
                    .map_err(|_| Error::parse(rest_at, format!("bad chi value '{value}'")))?;
                if !chi.is_finite() {
                    return Err(Error::parse(rest_at, "chi must be finite"));
                }
                Ok(HamiltonianRecipe::Kerr { chi })
            }
            "poly" => LadderPolynomial::parse(rest)
                .map(HamiltonianRecipe::Poly)
                .map_err(|e| match e {
                    Error::Parse { position, message } => Error::Parse {
                        position: position + rest_at,
                        message,
                    },
                    other => other,
                }),
            "" => Err(Error::parse(offset, "empty Hamiltonian")),
            other => Err(Error::parse(
                offset,
                format!("unknown Hamiltonian '{other}' (expected harmonic, kerr or poly)"),
            )),
        }
    }

    pub fn matrix(&self, space: &ModeSpace) -> Result<OperatorMatrix> {
        match self {
            HamiltonianRecipe::Harmonic => Ok(harmonic_hamiltonian(space)),
            HamiltonianRecipe::Kerr { chi } => Ok(kerr_hamiltonian(space, *chi)),
            HamiltonianRecipe::Poly(p) => p.matrix(space),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    pos: usize,
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut start = 0;
    let flush = |cur: &mut String, start: usize, out: &mut Vec<Token>| {
        if !cur.is_empty() {
            out.push(Token {
                text: std::mem::take(cur),
                pos: start,
            });
        }
    };
    for (i, ch) in text.chars().enumerate() {
        match ch {
            c if c.is_whitespace() => flush(&mut cur, start, &mut out),
            '(' | ')' => {
                flush(&mut cur, start, &mut out);
                out.push(Token {
                    text: ch.to_string(),
                    pos: i,
                });
            }
            _ => {
                if cur.is_empty() {
                    start = i;
                }
                cur.push(ch);
            }
        }
    }
    flush(&mut cur, start, &mut out);
    out
}

struct Parser<'a> {
    tokens: &'a [Token],
    at: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.at)
    }

    fn next(&mut self, what: &str) -> Result<Token> {
        let t = self
            .tokens
            .get(self.at)
            .cloned()
            .ok_or_else(|| Error::parse(self.end, format!("expected {what}, found end of input")))?;
        self.at += 1;
        Ok(t)
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.peek().is_some_and(|t| t.text == text) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> Result<()> {
        let t = self.next(&format!("'{text}'"))?;
        if t.text == text {
            Ok(())
        } else {
            Err(Error::parse(t.pos, format!("expected '{text}', found '{}'", t.text)))
        }
    }

    fn state(&mut self) -> Result<StateRecipe> {
        let t = self.next("a state")?;
        match t.text.as_str() {
            "fock" => {
                let arg = self.next("occupation numbers")?;
                let levels = arg
                    .text
                    .split(',')
                    .map(|s| s.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::parse(arg.pos, format!("bad occupation list '{}'", arg.text)))?;
                Ok(StateRecipe::Fock(levels))
            }
            "coherent" => {
                let arg = self.next("coherent amplitudes")?;
                let mut alphas = Vec::new();
                let mut offset = 0;
                for part in arg.text.split(',') {
                    alphas.push(parse_complex(part, arg.pos + offset)?);
                    offset += part.chars().count() + 1;
                }
                Ok(StateRecipe::Coherent(alphas))
            }
            "random" => Ok(StateRecipe::Random { pure: false }),
            "random-pure" => Ok(StateRecipe::Random { pure: true }),
            "superpose" => {
                let mut parts = Vec::new();
                loop {
                    let c = self.next("a coefficient")?;
                    let coeff = parse_complex(&c.text, c.pos)?;
                    parts.push((coeff, self.operand()?));
                    if !self.eat("+") {
                        break;
                    }
                }
                Ok(StateRecipe::Superpose(parts))
            }
            "mixture" => {
                let mut parts = Vec::new();
                loop {
                    let w = self.next("a weight")?;
                    let weight: f64 = w
                        .text
                        .parse()
                        .map_err(|_| Error::parse(w.pos, format!("bad weight '{}'", w.text)))?;
                    parts.push((weight, self.operand()?));
                    if !self.eat("+") {
                        break;
                    }
                }
                Ok(StateRecipe::Mixture(parts))
            }
            "(" => {
                let inner = self.state()?;
                self.expect(")")?;
                Ok(inner)
            }
            other => Err(Error::parse(
                t.pos,
                format!("unknown state '{other}' (expected fock, coherent, superpose, mixture or random)"),
            )),
        }
    }

    /// A component: a parenthesized state or a bare `fock`/`coherent`.
    fn operand(&mut self) -> Result<StateRecipe> {
        match self.peek().map(|t| t.text.as_str()) {
            Some("(") => self.state(),
            Some("fock" | "coherent" | "random" | "random-pure") => self.state(),
            Some(_) => {
                let t = self.next("a state")?;
                Err(Error::parse(
                    t.pos,
                    format!("expected a state or '(', found '{}'", t.text),
                ))
            }
            None => Err(Error::parse(self.end, "expected a state, found end of input")),
        }
    }
}

/// `re`, `re+imi`, `re-imi`, `imi`, `i`, `-i`.
pub fn parse_complex(text: &str, pos: usize) -> Result<Complex64> {
    let bad = || Error::parse(pos, format!("bad complex number '{text}'"));
    let real = |s: &str| -> Result<f64> {
        let v: f64 = s.parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    let imag = |s: &str| -> Result<f64> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => real(s),
        }
    };
    let Some(body) = text.strip_suffix('i') else {
        return Ok(Complex64::new(real(text)?, 0.0));
    };
    let bytes = body.as_bytes();
    // split at the last sign that is not leading and not part of an exponent
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(Complex64::new(real(&body[..k])?, imag(&body[k..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}
