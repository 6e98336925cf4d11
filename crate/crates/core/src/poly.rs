//! Sparse multivariate polynomials over complex coefficients: the symbol P(xi).
//!
//! Variables are frequencies xi_1..xi_n with the convention D = -i grad, so a
//! derivative d/dx_j becomes i*xi_j in the symbol.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;
use crate::tol;

/// Exponent multi-index, ordered graded-lexicographically (total degree first).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly {
    n: usize,
    terms: BTreeMap<Monomial, C64>,
}

impl MultiPoly {
    pub fn zero(n: usize) -> Self {
        assert!(n > 0, "polynomial dimension must be positive");
        MultiPoly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: C64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(vec![0; n], c);
        p
    }

    /// The coordinate polynomial xi_j (0-based).
    pub fn var(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        let mut p = Self::zero(n);
        p.add_term(e, C64::new(1.0, 0.0));
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Vec<u32>, C64)>>(n: usize, terms: I) -> Self {
        let mut p = Self::zero(n);
        for (e, c) in terms {
            assert_eq!(e.len(), n, "exponent length must equal dimension");
            p.add_term(e, c);
        }
        p
    }

    /// Adds `c` to the coefficient of the monomial; exact zeros are dropped.
    pub fn add_term(&mut self, exps: Vec<u32>, c: C64) {
        let key = Monomial(exps);
        let v = self.terms.get(&key).copied().unwrap_or_default() + c;
        if v == C64::default() {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, v);
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exps: &[u32]) -> C64 {
        self.terms
            .get(&Monomial(exps.to_vec()))
            .copied()
            .unwrap_or_default()
    }

    /// Max total degree; 0 for constants and for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|m| m.degree() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_terms(self.n, self.terms.iter().map(|(m, c)| (m.0.clone(), c * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.0.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = Self::zero(self.n);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let e = a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.n, C64::new(1.0, 0.0));
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// P(R eta): substitutes xi_i = sum_j r[i][j] eta_j.
    pub fn compose_linear(&self, r: &[Vec<f64>]) -> Self {
        assert_eq!(r.len(), self.n);
        let lin: Vec<MultiPoly> = (0..self.n)
            .map(|i| {
                Self::from_terms(
                    self.n,
                    (0..self.n).map(|j| {
                        let mut e = vec![0; self.n];
                        e[j] = 1;
                        (e, C64::new(r[i][j], 0.0))
                    }),
                )
            })
            .collect();
        let mut out = Self::zero(self.n);
        for (m, c) in &self.terms {
            let mut t = Self::constant(self.n, *c);
            for (i, &a) in m.0.iter().enumerate() {
                if a > 0 {
                    t = t.mul(&lin[i].pow(a));
                }
            }
            out = out.add(&t);
        }
        out
    }

    /// Evaluates by nested Horner in xi_1, then xi_2, ...
    pub fn eval(&self, z: &[C64]) -> Result<C64> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: z.len(),
            });
        }
        let terms: Vec<(&[u32], C64)> = self
            .terms
            .iter()
            .map(|(m, c)| (m.0.as_slice(), *c))
            .collect();
        Ok(horner(&terms, 0, z))
    }

    pub fn eval_real(&self, x: &[f64]) -> Result<C64> {
        let z: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.eval(&z)
    }

    pub fn derivative(&self, j: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (m, c) in &self.terms {
            let a = m.0[j];
            if a == 0 {
                continue;
            }
            let mut e = m.0.clone();
            e[j] -= 1;
            out.add_term(e, c * a as f64);
        }
        out
    }

    pub fn gradient(&self) -> Vec<MultiPoly> {
        (0..self.n).map(|j| self.derivative(j)).collect()
    }

    pub fn principal_part(&self) -> Self {
        let d = self.degree() as u32;
        Self::from_terms(
            self.n,
            self.terms
                .iter()
                .filter(|(m, _)| m.degree() == d)
                .map(|(m, c)| (m.0.clone(), *c)),
        )
    }

    /// Coefficients c_0..c_N of tau -> P(tau*dir + base) for arbitrary complex `dir`, `base`.
    pub fn restrict_general(&self, dir: &[C64], base: &[C64]) -> Vec<C64> {
        assert_eq!(dir.len(), self.n);
        assert_eq!(base.len(), self.n);
        let nn = self.degree();
        let mut out = vec![C64::default(); nn + 1];
        // (tau*d + b)^a expanded once per variable and exponent
        let maxe = nn as u32;
        let mut factor: Vec<Vec<Vec<C64>>> = Vec::with_capacity(self.n);
        for j in 0..self.n {
            let mut powers = vec![vec![C64::new(1.0, 0.0)]];
            for _ in 0..maxe {
                let prev = powers.last().unwrap();
                let mut next = vec![C64::default(); prev.len() + 1];
                for (i, c) in prev.iter().enumerate() {
                    next[i] += c * base[j];
                    next[i + 1] += c * dir[j];
                }
                powers.push(next);
            }
            factor.push(powers);
        }
        let mut acc = Vec::with_capacity(nn + 1);
        for (m, c) in &self.terms {
            acc.clear();
            acc.push(*c);
            for j in 0..self.n {
                let a = m.0[j] as usize;
                if a == 0 {
                    continue;
                }
                let f = &factor[j][a];
                let mut next = vec![C64::default(); acc.len() + f.len() - 1];
                for (i, x) in acc.iter().enumerate() {
                    for (k, y) in f.iter().enumerate() {
                        next[i + k] += x * y;
                    }
                }
                acc = next;
            }
            for (i, x) in acc.iter().enumerate() {
                out[i] += x;
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let terms = parse_terms(text)?;
        let n = terms.iter().map(|(e, _)| e.len()).max().unwrap_or(1).max(1);
        Ok(build(n, terms))
    }

    /// Parses with a fixed dimension; variables beyond `n` are an error.
    pub fn parse_dim(text: &str, n: usize) -> Result<Self> {
        let terms = parse_terms(text)?;
        if let Some((e, _)) = terms.iter().find(|(e, _)| e.len() > n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: e.len(),
            });
        }
        Ok(build(n, terms))
    }
}

fn build(n: usize, terms: Vec<(Vec<u32>, C64)>) -> MultiPoly {
    let mut p = MultiPoly::zero(n);
    for (mut e, c) in terms {
        e.resize(n, 0);
        p.add_term(e, c);
    }
    p
}

fn horner(terms: &[(&[u32], C64)], var: usize, z: &[C64]) -> C64 {
    if var == z.len() {
        return terms.iter().map(|t| t.1).sum();
    }
    let maxe = terms.iter().map(|t| t.0[var]).max().unwrap_or(0);
    let mut acc = C64::default();
    let mut group: Vec<(&[u32], C64)> = Vec::new();
    for e in (0..=maxe).rev() {
        group.clear();
        group.extend(terms.iter().filter(|t| t.0[var] == e).copied());
        let inner = if group.is_empty() {
            C64::default()
        } else {
            horner(&group, var + 1, z)
        };
        acc = acc * z[var] + inner;
    }
    acc
}

fn fmt_real(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{}", x)
    } else {
        format!("{:e}", x)
    }
}

impl fmt::Display for MultiPoly {
    /// Terms in descending graded-lex order, e.g. `1 * x1^2 + 1 * x2^2 - 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let (sign, coef) = if c.im == 0.0 && c.re < 0.0 {
                ("-", fmt_real(-c.re))
            } else if c.im == 0.0 {
                ("+", fmt_real(c.re))
            } else {
                let im_sign = if c.im < 0.0 || (c.im == 0.0 && c.im.is_sign_negative()) {
                    "-"
                } else {
                    "+"
                };
                (
                    "+",
                    format!("{}{}{}i", fmt_real(c.re), im_sign, fmt_real(c.im.abs())),
                )
            };
            if i == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", sign)?;
            }
            write!(f, "{}", coef)?;
            let vars: Vec<String> =
                m.0.iter()
                    .enumerate()
                    .filter(|(_, &a)| a > 0)
                    .map(|(j, &a)| {
                        if a == 1 {
                            format!("x{}", j + 1)
                        } else {
                            format!("x{}^{}", j + 1, a)
                        }
                    })
                    .collect();
            if !vars.is_empty() {
                write!(f, " * {}", vars.join(" "))?;
            }
        }
        Ok(())
    }
}

impl Serialize for MultiPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        MultiPoly::parse(&s).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// text format parser

struct Lexer<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        })
    }

    /// Unsigned float literal, or None without consuming anything.
    fn number(&mut self) -> Option<f64> {
        self.skip_ws();
        let start = self.pos;
        let s = self.s;
        let mut i = self.pos;
        let digits = |i: &mut usize| {
            let b = *i;
            while *i < s.len() && s[*i].is_ascii_digit() {
                *i += 1;
            }
            *i > b
        };
        let mut any = digits(&mut i);
        if i < s.len() && s[i] == b'.' {
            i += 1;
            any |= digits(&mut i);
        }
        if !any {
            return None;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if digits(&mut j) {
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).ok()?;
        let v = text.parse().ok()?;
        self.pos = i;
        Some(v)
    }

    /// `re`, `re+imi`, `imi` (unsigned leading part).
    fn coefficient(&mut self) -> Option<C64> {
        let re = self.number()?;
        let save = self.pos;
        if self.peek() == Some(b'i') && !self.is_var_start() {
            self.pos += 1;
            return Some(C64::new(0.0, re));
        }
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            if let Some(im) = self.number() {
                if self.peek() == Some(b'i') {
                    self.pos += 1;
                    let im = if sign == b'-' { -im } else { im };
                    return Some(C64::new(re, im));
                }
            }
        }
        self.pos = save;
        Some(C64::new(re, 0.0))
    }

    fn is_var_start(&self) -> bool {
        self.s.get(self.pos) == Some(&b'x')
    }

    fn integer(&mut self) -> Result<u32> {
        self.skip_ws();
        let b = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if b == self.pos {
            return self.err("expected integer");
        }
        std::str::from_utf8(&self.s[b..self.pos])
            .unwrap()
            .parse()
            .or_else(|_| self.err("integer overflow"))
    }
}

fn parse_terms(text: &str) -> Result<Vec<(Vec<u32>, C64)>> {
    let mut lx = Lexer {
        s: text.as_bytes(),
        pos: 0,
    };
    let mut out = Vec::new();
    let mut first = true;
    loop {
        let mut sign = 1.0;
        match lx.peek() {
            None if first => return lx.err("empty polynomial"),
            None => break,
            Some(b'+') => {
                lx.pos += 1;
            }
            Some(b'-') => {
                lx.pos += 1;
                sign = -1.0;
            }
            Some(_) if first => {}
            Some(_) => return lx.err("expected '+' or '-' between terms"),
        }
        first = false;
        if lx.peek() == Some(b'(') {
            lx.pos += 1;
            let mut s2 = 1.0;
            match lx.peek() {
                Some(b'-') => {
                    lx.pos += 1;
                    s2 = -1.0;
                }
                Some(b'+') => lx.pos += 1,
                _ => {}
            }
            let c = match lx.coefficient() {
                Some(c) => c,
                None => return lx.err("expected coefficient"),
            };
            if lx.peek() != Some(b')') {
                return lx.err("expected ')'");
            }
            lx.pos += 1;
            out.push(parse_monomial(&mut lx, c * s2 * sign, true)?);
            continue;
        }
        let c = lx.coefficient();
        let has_coef = c.is_some();
        let c = c.unwrap_or(C64::new(1.0, 0.0)) * sign;
        out.push(parse_monomial(&mut lx, c, has_coef)?);
    }
    Ok(out)
}

fn parse_monomial(lx: &mut Lexer<'_>, c: C64, has_coef: bool) -> Result<(Vec<u32>, C64)> {
    let mut exps: Vec<u32> = Vec::new();
    let mut need_var = !has_coef;
    loop {
        match lx.peek() {
            Some(b'*') => {
                lx.pos += 1;
                need_var = true;
                continue;
            }
            Some(b'x') => {
                lx.pos += 1;
                let j = lx.integer()? as usize;
                if j == 0 {
                    return lx.err("variables are numbered from x1");
                }
                let mut a = 1;
                if lx.peek() == Some(b'^') {
                    lx.pos += 1;
                    a = lx.integer()?;
                }
                if exps.len() < j {
                    exps.resize(j, 0);
                }
                exps[j - 1] += a;
                need_var = false;
            }
            _ => break,
        }
    }
    if need_var {
        return lx.err("expected variable");
    }
    Ok((exps, c))
}

// ---------------------------------------------------------------------------
// line restrictions and discriminants

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineRestriction {
    pub coeffs: Vec<C64>,
    pub theta: Vec<f64>,
    pub xi_perp: Vec<f64>,
}

impl LineRestriction {
    pub fn from_coeffs(coeffs: Vec<C64>) -> Self {
        LineRestriction {
            coeffs,
            theta: vec![],
            xi_perp: vec![],
        }
    }

    /// Nominal degree N (length of coeffs minus one).
    pub fn nominal_degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Degree after dropping leading coefficients that vanish relative to the largest.
    pub fn degree(&self) -> usize {
        effective_degree(&self.coeffs)
    }

    /// True when the leading coefficient P_N(theta) vanishes.
    pub fn is_degenerate(&self) -> bool {
        self.degree() < self.nominal_degree()
    }

    pub fn eval(&self, tau: C64) -> C64 {
        eval_univariate(&self.coeffs, tau)
    }
}

pub fn effective_degree(c: &[C64]) -> usize {
    let m = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut d = c.len().saturating_sub(1);
    while d > 0 && c[d].norm() <= tol::LEADING_COEFF_REL * m {
        d -= 1;
    }
    d
}

pub fn eval_univariate(c: &[C64], tau: C64) -> C64 {
    c.iter().rev().fold(C64::default(), |acc, x| acc * tau + x)
}

pub fn derivative_univariate(c: &[C64]) -> Vec<C64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(i, x)| x * i as f64)
        .collect()
}

pub fn restrict_to_line(p: &MultiPoly, theta: &[f64], xi_perp: &[f64]) -> Result<LineRestriction> {
    let n = p.dim();
    if theta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: theta.len(),
        });
    }
    if xi_perp.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: xi_perp.len(),
        });
    }
    let norm: f64 = theta.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Config(format!(
            "theta must be a unit vector (norm {norm})"
        )));
    }
    let dot: f64 = theta.iter().zip(xi_perp).map(|(a, b)| a * b).sum();
    let scale = 1.0 + xi_perp.iter().map(|x| x * x).sum::<f64>().sqrt();
    if dot.abs() > tol::ORTHO * scale {
        return Err(Error::Config(format!(
            "xi_perp not orthogonal to theta (dot {dot:e})"
        )));
    }
    let d: Vec<C64> = theta.iter().map(|&x| C64::new(x, 0.0)).collect();
    let b: Vec<C64> = xi_perp.iter().map(|&x| C64::new(x, 0.0)).collect();
    Ok(LineRestriction {
        coeffs: p.restrict_general(&d, &b),
        theta: theta.to_vec(),
        xi_perp: xi_perp.to_vec(),
    })
}

/// Discriminant by the Sylvester resultant of p and p'.
///
/// disc = (-1)^{N(N-1)/2} Res(p, p') / a_N; degree one returns a_1.
pub fn discriminant_resultant(c: &[C64]) -> Result<C64> {
    let nn = effective_degree(c);
    if nn == 0 {
        return Err(Error::DegenerateLine);
    }
    let a = &c[..=nn];
    if nn == 1 {
        return Ok(a[1]);
    }
    let da = derivative_univariate(a);
    let m = nn - 1;
    let size = nn + m;
    let mut s = DMatrix::<C64>::zeros(size, size);
    // rows hold coefficients from the highest power down
    for r in 0..m {
        for (i, x) in a.iter().rev().enumerate() {
            s[(r, r + i)] = *x;
        }
    }
    for r in 0..nn {
        for (i, x) in da.iter().rev().enumerate() {
            s[(m + r, r + i)] = *x;
        }
    }
    let res = s.determinant();
    let sign = if (nn * (nn - 1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    Ok(res * sign / a[nn])
}

/// Discriminant by a_N^{2N-2} prod_{i<j} (tau_i - tau_j)^2.
pub fn discriminant_root_product(c: &[C64], rs: &[C64]) -> C64 {
    let nn = rs.len();
    let lead = c[nn];
    if nn == 1 {
        return lead;
    }
    let mut prod = lead.powi(2 * nn as i32 - 2);
    for i in 0..nn {
        for j in i + 1..nn {
            let d = rs[i] - rs[j];
            prod *= d * d;
        }
    }
    prod
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscriminantReport {
    pub value: C64,
    pub root_product: C64,
    pub rel_diff: f64,
    /// Roots closer than the cluster threshold: disagreement is only a warning.
    pub clustered: bool,
}

/// Discriminant of a line restriction, cross-checked by two routes.
pub fn discriminant_line(p: &LineRestriction) -> Result<DiscriminantReport> {
    let value = discriminant_resultant(&p.coeffs)?;
    let nn = p.degree();
    let c = &p.coeffs[..=nn];
    let rs = roots::roots_of(c)?;
    let root_product = discriminant_root_product(c, &rs.roots);
    // scale free of cancellation: same product with |tau_i| + |tau_j|
    let mut scale = c[nn].norm().powi(2 * nn as i32 - 2);
    let mut min_gap = f64::INFINITY;
    for i in 0..nn {
        for j in i + 1..nn {
            let s = rs.roots[i].norm() + rs.roots[j].norm();
            scale *= if s > 0.0 { s * s } else { 1.0 };
            min_gap = min_gap.min((rs.roots[i] - rs.roots[j]).norm());
        }
    }
    let denom = value
        .norm()
        .max(root_product.norm())
        .max(scale * f64::EPSILON);
    let rel_diff = (value - root_product).norm() / denom;
    let clustered = min_gap < tol::DISC_CLUSTER;
    if rel_diff > tol::DISC_CROSS_CHECK {
        if clustered {
            log::warn!(
                "discriminant routes differ by {rel_diff:e} with clustered roots; using resultant"
            );
        } else {
            return Err(Error::DiscriminantMismatch {
                resultant: value.to_string(),
                root_product: root_product.to_string(),
            });
        }
    }
    Ok(DiscriminantReport {
        value,
        root_product,
        rel_diff,
        clustered,
    })
}

/// Delta(theta, xi) for arbitrary complex theta and xi (resultant route).
pub fn discriminant_at(p: &MultiPoly, theta: &[C64], xi: &[C64]) -> Result<C64> {
    discriminant_resultant(&p.restrict_general(theta, xi))
}

// ---------------------------------------------------------------------------
// second-order normal form

/// Normal form sum eps_j (d_j - beta_j)^2 + b (+ 2 alpha_j d_j where eps_j = 0)
/// reached through eta = diag(scale) * basis^T * xi.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalForm2 {
    pub eps: Vec<i8>,
    pub alpha: Vec<f64>,
    pub b_const: f64,
    pub beta: Vec<f64>,
    pub b: f64,
    /// Orthogonal eigenvector matrix, row-major; column j is eigenvector j.
    pub basis: Vec<f64>,
    /// sqrt(|lambda_j|), or 1 where lambda_j = 0.
    pub scale: Vec<f64>,
}

impl NormalForm2 {
    pub fn dim(&self) -> usize {
        self.eps.len()
    }

    pub fn basis_is_identity(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| self.basis[i * n + j] == if i == j { 1.0 } else { 0.0 }))
    }

    /// eta = diag(scale) V^T xi
    pub fn eta_of(&self, xi: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|j| self.scale[j] * (0..n).map(|i| self.basis[i * n + j] * xi[i]).sum::<f64>())
            .collect()
    }

    fn sq_term(&self, j: usize, eta_j: f64) -> C64 {
        let e = self.eps[j] as f64;
        if self.eps[j] == 0 {
            C64::new(0.0, 2.0 * self.alpha[j] * eta_j)
        } else {
            let t = C64::new(-self.beta[j], eta_j);
            t * t * e
        }
    }

    pub fn eval_eta(&self, eta: &[f64]) -> C64 {
        (0..self.dim())
            .map(|j| self.sq_term(j, eta[j]))
            .sum::<C64>()
            + self.b
    }

    /// Q_k(eta) = sum_{j != k} eps_j (i eta_j - beta_j)^2 + b
    pub fn q_k(&self, k: usize, eta: &[f64]) -> C64 {
        (0..self.dim())
            .filter(|&j| j != k)
            .map(|j| self.sq_term(j, eta[j]))
            .sum::<C64>()
            + self.b
    }

    /// Real double characteristic exactly when b = 0 and beta = 0.
    pub fn is_double_characteristic(&self) -> bool {
        self.b == 0.0 && self.beta.iter().all(|&x| x == 0.0) && self.eps.iter().all(|&e| e != 0)
    }
}

/// Reduces a real second-order symbol -xi^T A xi + 2i alpha.xi + B to normal form.
pub fn normalize_second_order(p: &MultiPoly) -> Result<NormalForm2> {
    let n = p.dim();
    if p.degree() != 2 {
        return Err(Error::NotRealSecondOrder(format!("degree {}", p.degree())));
    }
    let scale = p.max_abs_coeff().max(1.0);
    let small = 1e-12 * scale;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut alpha = vec![0.0; n];
    let mut b_const = 0.0;
    for (m, c) in p.terms() {
        let nz: Vec<usize> = (0..n).filter(|&j| m.0[j] > 0).collect();
        match m.degree() {
            2 => {
                if c.im.abs() > small {
                    return Err(Error::NotRealSecondOrder(
                        "complex second-order coefficient".into(),
                    ));
                }
                if nz.len() == 1 {
                    a[(nz[0], nz[0])] = -c.re;
                } else {
                    a[(nz[0], nz[1])] = -c.re / 2.0;
                    a[(nz[1], nz[0])] = -c.re / 2.0;
                }
            }
            1 => {
                if c.re.abs() > small {
                    return Err(Error::NotRealSecondOrder(
                        "first-order symbol coefficient has a real part".into(),
                    ));
                }
                alpha[nz[0]] = c.im / 2.0;
            }
            _ => {
                if c.im.abs() > small {
                    return Err(Error::NotRealSecondOrder("complex constant".into()));
                }
                b_const = c.re;
            }
        }
    }
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == 0.0));
    let (lambda, v) = if diagonal {
        (
            (0..n).map(|j| a[(j, j)]).collect::<Vec<_>>(),
            DMatrix::<f64>::identity(n, n),
        )
    } else {
        let eig = SymmetricEigen::try_new(a.clone(), tol::SYM_EIGEN, 0).ok_or_else(|| {
            Error::NotRealSecondOrder("symmetric eigensolve did not converge".into())
        })?;
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let lmax = lambda.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut eps = vec![0i8; n];
    let mut sc = vec![1.0; n];
    for j in 0..n {
        if lambda[j].abs() > tol::SYM_EIGEN * lmax.max(1.0) {
            eps[j] = if lambda[j] > 0.0 { 1 } else { -1 };
            sc[j] = lambda[j].abs().sqrt();
        }
    }
    let mut alpha_nf = vec![0.0; n];
    let mut beta = vec![0.0; n];
    for j in 0..n {
        let va: f64 = (0..n).map(|i| v[(i, j)] * alpha[i]).sum();
        alpha_nf[j] = va / sc[j];
        if eps[j] != 0 {
            beta[j] = -(eps[j] as f64) * alpha_nf[j];
        }
    }
    let b = b_const
        - (0..n)
            .map(|j| eps[j] as f64 * beta[j] * beta[j])
            .sum::<f64>();
    let mut basis = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            basis[i * n + j] = v[(i, j)];
        }
    }
    Ok(NormalForm2 {
        eps,
        alpha: alpha_nf,
        b_const,
        beta,
        b,
        basis,
        scale: sc,
    })
}

// ---------------------------------------------------------------------------
// sampled nonsingularity

#[derive(Clone, Debug, Serialize)]
pub struct NonsingularReport {
    pub samples: usize,
    pub near_variety: usize,
    pub min_grad_near_variety: f64,
    pub violations: Vec<Vec<C64>>,
    /// "no violation found" is evidence, never a proof.
    pub no_violation_found: bool,
}

/// Projects each sample toward P = 0 with one Newton step and inspects |grad P| there.
pub fn is_nonsingular_sampled(
    p: &MultiPoly,
    samples: &[Vec<C64>],
    tol_: f64,
) -> Result<NonsingularReport> {
    let grad = p.gradient();
    let mut near = 0;
    let mut min_grad = f64::INFINITY;
    let mut violations = Vec::new();
    for z0 in samples {
        let g0: Vec<C64> = grad.iter().map(|g| g.eval(z0)).collect::<Result<_>>()?;
        let gn: f64 = g0.iter().map(|x| x.norm_sqr()).sum();
        let v0 = p.eval(z0)?;
        let z: Vec<C64> = if gn > 0.0 {
            z0.iter()
                .zip(&g0)
                .map(|(zi, gi)| zi - v0 * gi.conj() / gn)
                .collect()
        } else {
            z0.clone()
        };
        if p.eval(&z)?.norm() < tol_ {
            near += 1;
            let g: f64 = grad
                .iter()
                .map(|g| g.eval(&z).map(|x| x.norm_sqr()))
                .sum::<Result<f64>>()?
                .sqrt();
            min_grad = min_grad.min(g);
            if g < tol_ {
                violations.push(z);
            }
        }
    }
    Ok(NonsingularReport {
        samples: samples.len(),
        near_variety: near,
        min_grad_near_variety: min_grad,
        no_violation_found: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn eval_examples() {
        let p = MultiPoly::parse("x1^2 + x2^2 - 1").unwrap();
        assert_eq!(p.eval(&[c(1.0), c(0.0)]).unwrap(), c(0.0));
        let q = MultiPoly::parse("x1^2 x2^2 - 1").unwrap();
        assert_eq!(q.eval(&[c(1.0), c(1.0)]).unwrap(), c(0.0));
        assert_eq!(q.eval(&[c(2.0), c(1.0)]).unwrap(), c(3.0));
        assert!(matches!(
            q.eval(&[c(1.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn parse_roundtrip_and_complex_literals() {
        let p = MultiPoly::parse("1+2i * x1^2 x2 + 3 * x2 - 0.5 + 0-1i*x1").unwrap();
        assert_eq!(p.coeff(&[2, 1]), C64::new(1.0, 2.0));
        assert_eq!(p.coeff(&[0, 1]), c(3.0));
        assert_eq!(p.coeff(&[1, 0]), C64::new(0.0, -1.0));
        assert_eq!(p.coeff(&[0, 0]), c(-0.5));
        let q = MultiPoly::parse(&p.to_string()).unwrap();
        assert_eq!(p, q);
        let r = MultiPoly::parse("(-2.5e-3) * x1 * x3").unwrap();
        assert_eq!(r.dim(), 3);
        assert_eq!(r.coeff(&[1, 0, 1]), c(-2.5e-3));
        assert!(MultiPoly::parse("x1 +").is_err());
        assert!(MultiPoly::parse("x0").is_err());
        assert!(MultiPoly::parse_dim("x3", 2).is_err());
    }

    #[test]
    fn display_is_graded_lex_descending() {
        let p = MultiPoly::parse("-1 + x1 + x2^2 + x1^2").unwrap();
        assert_eq!(p.to_string(), "1 * x1^2 + 1 * x2^2 + 1 * x1 - 1");
    }

    #[test]
    fn gradient_examples() {
        let q = MultiPoly::parse("x1^2 x2^2 - 1").unwrap();
        let g = q.gradient();
        assert_eq!(g[0], MultiPoly::parse("2 * x1 x2^2").unwrap());
        assert_eq!(g[1], MultiPoly::parse("2 * x1^2 x2").unwrap());
        let h = MultiPoly::parse("x1^2 + x2^2 + x3^2 - 1")
            .unwrap()
            .gradient();
        assert_eq!(h[2], MultiPoly::parse_dim("2*x3", 3).unwrap());
    }

    #[test]
    fn principal_part_examples() {
        let fad = MultiPoly::parse("-1*x1^2 - x2^2 + 0+2i*x1").unwrap();
        assert_eq!(
            fad.principal_part(),
            MultiPoly::parse("-1*x1^2 - x2^2").unwrap()
        );
        let bil = MultiPoly::parse("x1^4 + 2*x1^2 x2^2 + x2^4 - 1").unwrap();
        assert_eq!(
            bil.principal_part(),
            MultiPoly::parse("x1^4 + 2*x1^2 x2^2 + x2^4").unwrap()
        );
    }

    #[test]
    fn restriction_helmholtz_and_bilaplacian() {
        let h = MultiPoly::parse("x1^2 + x2^2 + x3^2 - 1").unwrap();
        let s = 0.5f64.sqrt();
        let lr = restrict_to_line(&h, &[s, s, 0.0], &[0.3, -0.3, 0.4]).unwrap();
        let perp2 = 0.09 + 0.09 + 0.16;
        assert!((lr.coeffs[0] - c(perp2 - 1.0)).norm() < 1e-14);
        assert!(lr.coeffs[1].norm() < 1e-14);
        assert!((lr.coeffs[2] - c(1.0)).norm() < 1e-14);

        let bil = MultiPoly::parse("x1^4 + 2*x1^2 x2^2 + x2^4 - 1").unwrap();
        let lr = restrict_to_line(&bil, &[0.0, 1.0], &[0.7, 0.0]).unwrap();
        // (tau^2 + 0.49 - 1)(tau^2 + 0.49 + 1)
        let a = 0.49 - 1.0;
        let b = 0.49 + 1.0;
        let want = [c(a * b), c(0.0), c(a + b), c(0.0), c(1.0)];
        for (x, y) in lr.coeffs.iter().zip(want) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn degenerate_restriction_flagged() {
        let p = MultiPoly::parse("x1^2 - x2^2 + 1").unwrap();
        let s = 0.5f64.sqrt();
        let lr = restrict_to_line(&p, &[s, s], &[0.0, 0.0]).unwrap();
        assert!(lr.is_degenerate());
        assert!(matches!(
            discriminant_resultant(&[c(1.0)]),
            Err(Error::DegenerateLine)
        ));
    }

    #[test]
    fn discriminant_examples() {
        let b = 2.5;
        let d = discriminant_resultant(&[c(-b), c(0.0), c(1.0)]).unwrap();
        assert!((d - c(4.0 * b)).norm() < 1e-12);
        assert_eq!(discriminant_resultant(&[c(3.0), c(7.0)]).unwrap(), c(7.0));
        // Helmholtz closed form (Theta.xi)^2 - (Theta.Theta)(xi.xi - 1)
        let h = MultiPoly::parse("x1^2 + x2^2 - 1").unwrap();
        let th = [C64::new(0.3, 0.1), C64::new(-0.7, 0.2)];
        let xi = [C64::new(0.4, 0.0), C64::new(1.1, -0.3)];
        let dot = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<C64>();
        let want = dot(&th, &xi).powi(2) - dot(&th, &th) * (dot(&xi, &xi) - 1.0);
        // disc of a tau^2 + b tau + c is b^2 - 4ac = 4 * want
        let got = discriminant_at(&h, &th, &xi).unwrap();
        assert!((got - want * 4.0).norm() < 1e-12 * want.norm().max(1.0));
    }

    #[test]
    fn discriminant_line_cross_check() {
        let bil = MultiPoly::parse("x1^4 + 2*x1^2 x2^2 + x2^4 - 1").unwrap();
        let lr = restrict_to_line(&bil, &[1.0, 0.0], &[0.0, 0.5]).unwrap();
        let r = discriminant_line(&lr).unwrap();
        assert!(r.rel_diff < tol::DISC_CROSS_CHECK);
        assert!(!r.clustered);
    }

    #[test]
    fn normal_form_examples() {
        let k = 1.7;
        let helm = MultiPoly::parse(&format!("-1*x1^2 - x2^2 + {}", k * k)).unwrap();
        let nf = normalize_second_order(&helm).unwrap();
        assert_eq!(nf.eps, vec![1, 1]);
        assert!((nf.b - k * k).abs() < 1e-14);
        assert!(nf.beta.iter().all(|&x| x == 0.0));
        assert!(nf.basis_is_identity());

        let fad = MultiPoly::parse("-1*x1^2 - x2^2 - x3^2 + 0+2i*x1 + 0+1i*x2").unwrap();
        let nf = normalize_second_order(&fad).unwrap();
        assert_eq!(nf.alpha, vec![1.0, 0.5, 0.0]);
        assert!((nf.b + 1.25).abs() < 1e-14);
        assert_eq!(nf.beta, vec![-1.0, -0.5, 0.0]);

        let lap = MultiPoly::parse("-1*x1^2 - x2^2").unwrap();
        assert!(normalize_second_order(&lap)
            .unwrap()
            .is_double_characteristic());

        assert!(normalize_second_order(&MultiPoly::parse("x1^2 + 0+1i").unwrap()).is_err());
        assert!(normalize_second_order(&MultiPoly::parse("x1^3").unwrap()).is_err());
    }

    #[test]
    fn normal_form_pullback_rotated() {
        // mixed term forces a genuine eigendecomposition
        let p =
            MultiPoly::parse("-2*x1^2 - 1*x1 x2 - 3*x2^2 + 0+0.4i*x1 + 0-1.2i*x2 + 0.7").unwrap();
        let nf = normalize_second_order(&p).unwrap();
        for t in 0..20 {
            let xi = [0.37 * t as f64 - 2.0, 1.3 - 0.21 * t as f64];
            let a = p.eval_real(&xi).unwrap();
            let b = nf.eval_eta(&nf.eta_of(&xi));
            assert!((a - b).norm() < 1e-10 * a.norm().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn nonsingular_sampling() {
        let lap = MultiPoly::parse("x1^2 + x2^2").unwrap();
        let r = is_nonsingular_sampled(&lap, &[vec![c(0.0), c(0.0)], vec![c(0.5), c(0.2)]], 1e-8)
            .unwrap();
        assert!(!r.no_violation_found);
        let lin = MultiPoly::parse("2*x1 - x2").unwrap();
        let r = is_nonsingular_sampled(&lin, &[vec![c(0.3), c(0.6)], vec![c(1.0), c(-4.0)]], 1e-8)
            .unwrap();
        assert!(r.no_violation_found);
        assert_eq!(r.near_variety, 2);
    }

    #[test]
    fn compose_linear_matches_pointwise() {
        let p = MultiPoly::parse("x1^2 x2^2 - 1 + (0+2i) * x1").unwrap();
        let (a, b) = (0.6f64.cos(), 0.6f64.sin());
        let r = vec![vec![a, -b], vec![b, a]];
        let q = p.compose_linear(&r);
        for t in 0..10 {
            let eta = [0.3 * t as f64 - 1.0, 0.7 - 0.2 * t as f64];
            let xi = [a * eta[0] - b * eta[1], b * eta[0] + a * eta[1]];
            let d = q.eval_real(&eta).unwrap() - p.eval_real(&xi).unwrap();
            assert!(d.norm() < 1e-12);
        }
    }
}
