//! Exact scalar arithmetic: Laurent polynomials in `q` and `r` with
//! arbitrary-precision rational coefficients, and their fraction field.
//!
//! Everything downstream (tangle coefficients, operator entries, traces)
//! lives in this field. All values are kept in a canonical normalized form
//! so that equality is plain structural equality:
//!
//! * fractions are reduced by content and polynomial gcd,
//! * the denominator is a true polynomial with minimal exponents 0 in each
//!   variable and graded-lex (q before r) leading coefficient 1.
//!
//! Also provides quantum integers `[n]`, quantum factorials, the loop
//! parameter `x = 1 + (r - r^-1)/(q - q^-1)`, the specialization
//! `r -> -q^(2m+1)` and the classical limit `q -> 1`.

use num::{BigInt, BigRational, One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;
use thiserror::Error;

/// Arbitrary-precision rational, always in lowest terms with positive
/// denominator (enforced by `num`).
pub type Rat = BigRational;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("division by zero rational function")]
    DivisionByZero,
    #[error("denominator vanishes under r = -q^(2m+1) with m = {m}")]
    SpecializationPole { m: u32 },
    #[error("pole at q = 1")]
    PoleAtQ1,
    #[error("value is not univariate in q")]
    NotUnivariateQ,
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
}

/// Exponent pair of a monomial `q^q_deg * r^r_deg`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Exp {
    pub q: i64,
    pub r: i64,
}

impl Exp {
    pub const ZERO: Exp = Exp { q: 0, r: 0 };

    fn add(self, other: Exp) -> Exp {
        Exp { q: self.q + other.q, r: self.r + other.r }
    }

    fn sub(self, other: Exp) -> Exp {
        Exp { q: self.q - other.q, r: self.r - other.r }
    }

    /// Graded order, ties broken lexicographically with q before r.
    fn graded_lex(self, other: Exp) -> Ordering {
        (self.q + self.r, self.q, self.r).cmp(&(other.q + other.r, other.q, other.r))
    }
}

/// Laurent polynomial in q, r over the rationals. Terms are kept sorted by
/// exponent; no zero coefficients are stored, the empty term list is zero.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct LaurentPoly {
    terms: Vec<(Exp, Rat)>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            LaurentPoly { terms: vec![(Exp::ZERO, c)] }
        }
    }

    pub fn monomial(c: Rat, q: i64, r: i64) -> Self {
        if c.is_zero() {
            Self::zero()
        } else {
            LaurentPoly { terms: vec![(Exp { q, r }, c)] }
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(Rat::from_integer(BigInt::from(n)))
    }

    pub fn var_q() -> Self {
        Self::monomial(Rat::one(), 1, 0)
    }

    pub fn var_r() -> Self {
        Self::monomial(Rat::one(), 0, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0 == Exp::ZERO && self.terms[0].1.is_one()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exp, &Rat)> {
        self.terms.iter().map(|(e, c)| (e, c))
    }

    fn from_sorted(terms: Vec<(Exp, Rat)>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
        LaurentPoly { terms }
    }

    /// Builds from an arbitrary term list, merging duplicates and dropping zeros.
    pub fn from_terms(mut terms: Vec<(Exp, Rat)>) -> Self {
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Exp, Rat)> = Vec::with_capacity(terms.len());
        for (e, c) in terms {
            match out.last_mut() {
                Some((le, lc)) if *le == e => *lc += c,
                _ => out.push((e, c)),
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        LaurentPoly { terms: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            match self.terms[i].0.cmp(&other.terms[j].0) {
                Ordering::Less => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &self.terms[i].1 + &other.terms[j].1;
                    if !c.is_zero() {
                        out.push((self.terms[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&other.terms[j..]);
        Self::from_sorted(out)
    }

    pub fn neg(&self) -> Self {
        LaurentPoly { terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        if self.is_one() {
            return other.clone();
        }
        if other.is_one() {
            return self.clone();
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                terms.push((ea.add(*eb), ca * cb));
            }
        }
        Self::from_terms(terms)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        LaurentPoly { terms: self.terms.iter().map(|(e, k)| (*e, k * c)).collect() }
    }

    pub fn mul_monomial(&self, dq: i64, dr: i64) -> Self {
        LaurentPoly {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (Exp { q: e.q + dq, r: e.r + dr }, c.clone()))
                .collect(),
        }
    }

    /// Per-variable minimal exponents; None for the zero polynomial.
    pub fn min_exps(&self) -> Option<Exp> {
        if self.is_zero() {
            return None;
        }
        let q = self.terms.iter().map(|(e, _)| e.q).min().unwrap();
        let r = self.terms.iter().map(|(e, _)| e.r).min().unwrap();
        Some(Exp { q, r })
    }

    pub fn max_exps(&self) -> Option<Exp> {
        if self.is_zero() {
            return None;
        }
        let q = self.terms.iter().map(|(e, _)| e.q).max().unwrap();
        let r = self.terms.iter().map(|(e, _)| e.r).max().unwrap();
        Some(Exp { q, r })
    }

    pub fn is_q_only(&self) -> bool {
        self.terms.iter().all(|(e, _)| e.r == 0)
    }

    /// Leading term under the graded-lex order.
    fn leading(&self) -> Option<(&Exp, &Rat)> {
        self.terms
            .iter()
            .max_by(|a, b| a.0.graded_lex(b.0))
            .map(|(e, c)| (e, c))
    }

    /// Substitutes r -> -q^(2m+1).
    pub fn substitute_r(&self, m: u32) -> Self {
        let k = 2 * m as i64 + 1;
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let sign = if e.r.rem_euclid(2) == 1 { -c.clone() } else { c.clone() };
                (Exp { q: e.q + k * e.r, r: 0 }, sign)
            })
            .collect();
        Self::from_terms(terms)
    }

    /// Substitutes q -> q^-1 (r untouched).
    pub fn invert_q(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| (Exp { q: -e.q, r: e.r }, c.clone()))
            .collect();
        Self::from_terms(terms)
    }

    /// Rational content: gcd of coefficient numerators over lcm of
    /// denominators, with the sign of the graded-lex leading coefficient.
    fn rational_content(&self) -> Rat {
        if self.is_zero() {
            return Rat::one();
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for (_, c) in &self.terms {
            num_gcd = num::integer::gcd(num_gcd, c.numer().abs());
            den_lcm = num::integer::lcm(den_lcm, c.denom().clone());
        }
        let mut content = Rat::new(num_gcd, den_lcm);
        if self.leading().unwrap().1.is_negative() {
            content = -content;
        }
        content
    }

    /// Divides by the rational content; the result has integer, coprime
    /// coefficients and positive graded-lex leading coefficient.
    pub fn primitive(&self) -> (Self, Rat) {
        if self.is_zero() {
            return (Self::zero(), Rat::one());
        }
        let c = self.rational_content();
        let inv = Rat::one() / &c;
        (self.scale(&inv), c)
    }

    /// Evaluates mod p at q = qv, r = rv (both nonzero mod p).
    pub fn eval_modp(&self, qv: u64, rv: u64, p: u64) -> Option<u64> {
        let mut acc: u64 = 0;
        for (e, c) in &self.terms {
            let cn = modp_from_bigint(c.numer(), p);
            let cd = modp_from_bigint(c.denom(), p);
            let cd_inv = modp_inv(cd, p)?;
            let mut t = modp_mul(cn, cd_inv, p);
            t = modp_mul(t, modp_pow_signed(qv, e.q, p)?, p);
            t = modp_mul(t, modp_pow_signed(rv, e.r, p)?, p);
            acc = modp_add(acc, t, p);
        }
        Some(acc)
    }
}

// --- modular helpers (shared with the mod-p linear algebra path) ---

pub fn modp_add(a: u64, b: u64, p: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % p as u128) as u64
}

pub fn modp_sub(a: u64, b: u64, p: u64) -> u64 {
    modp_add(a, p - (b % p), p)
}

pub fn modp_mul(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn modp_pow(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = modp_mul(acc, base, p);
        }
        base = modp_mul(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Inverse mod prime p; None for zero.
pub fn modp_inv(a: u64, p: u64) -> Option<u64> {
    if a % p == 0 {
        None
    } else {
        Some(modp_pow(a, p - 2, p))
    }
}

fn modp_pow_signed(base: u64, exp: i64, p: u64) -> Option<u64> {
    if exp >= 0 {
        Some(modp_pow(base, exp as u64, p))
    } else {
        modp_inv(modp_pow(base, (-exp) as u64, p), p)
    }
}

fn modp_from_bigint(n: &BigInt, p: u64) -> u64 {
    use num::Integer;
    let r = n.mod_floor(&BigInt::from(p));
    let (_, digits) = r.to_u64_digits();
    *digits.first().unwrap_or(&0)
}

// --- polynomial gcd machinery ---
//
// Fractions are reduced with a genuine polynomial gcd. The univariate case
// (everything the matrix pipeline produces once r is specialized) runs a
// primitive pseudo-remainder sequence over the integers; the bivariate case
// recurses through contents in Q[r].

/// Dense integer polynomial in one variable, constant term first.
type ZPoly = Vec<BigInt>;

fn zp_trim(p: &mut ZPoly) {
    while p.last().map_or(false, |c| c.is_zero()) {
        p.pop();
    }
}

fn zp_content(p: &ZPoly) -> BigInt {
    let mut g = BigInt::zero();
    for c in p {
        g = num::integer::gcd(g, c.abs());
    }
    g
}

fn zp_primitive(mut p: ZPoly) -> ZPoly {
    zp_trim(&mut p);
    if p.is_empty() {
        return p;
    }
    let c = zp_content(&p);
    if !c.is_one() {
        for coeff in &mut p {
            *coeff = &*coeff / &c;
        }
    }
    if p.last().unwrap().is_negative() {
        for coeff in &mut p {
            *coeff = -coeff.clone();
        }
    }
    p
}

fn zp_mul_scalar(p: &ZPoly, s: &BigInt) -> ZPoly {
    p.iter().map(|c| c * s).collect()
}

fn zp_pseudo_rem(f: &ZPoly, g: &ZPoly) -> ZPoly {
    let mut rem = f.clone();
    zp_trim(&mut rem);
    let dg = g.len() - 1;
    let lg = g.last().unwrap().clone();
    while rem.len() >= g.len() && !rem.is_empty() {
        let dr = rem.len() - 1;
        let lr = rem.last().unwrap().clone();
        rem = zp_mul_scalar(&rem, &lg);
        let shift = dr - dg;
        for (i, gc) in g.iter().enumerate() {
            rem[i + shift] = &rem[i + shift] - gc * &lr;
        }
        zp_trim(&mut rem);
    }
    rem
}

fn zp_gcd(a: &ZPoly, b: &ZPoly) -> ZPoly {
    let mut f = zp_primitive(a.clone());
    let mut g = zp_primitive(b.clone());
    if f.is_empty() {
        return g;
    }
    if g.is_empty() {
        return f;
    }
    if f.len() < g.len() {
        std::mem::swap(&mut f, &mut g);
    }
    while !g.is_empty() {
        let r = zp_pseudo_rem(&f, &g);
        f = g;
        g = zp_primitive(r);
    }
    f
}

/// Bivariate integer polynomial: map q-degree -> r-polynomial.
type BiPoly = std::collections::BTreeMap<i64, ZPoly>;

fn bp_from(poly: &LaurentPoly) -> BiPoly {
    // Caller guarantees min exponents are 0 and coefficients are integers.
    let mut out = BiPoly::new();
    for (e, c) in &poly.terms {
        debug_assert!(e.q >= 0 && e.r >= 0);
        debug_assert!(c.denom().is_one());
        let entry = out.entry(e.q).or_default();
        let idx = e.r as usize;
        if entry.len() <= idx {
            entry.resize(idx + 1, BigInt::zero());
        }
        entry[idx] = c.numer().clone();
    }
    for v in out.values_mut() {
        zp_trim(v);
    }
    out.retain(|_, v| !v.is_empty());
    out
}

fn bp_to_laurent(bp: &BiPoly) -> LaurentPoly {
    let mut terms = Vec::new();
    for (qd, rp) in bp {
        for (rd, c) in rp.iter().enumerate() {
            if !c.is_zero() {
                terms.push((Exp { q: *qd, r: rd as i64 }, Rat::from_integer(c.clone())));
            }
        }
    }
    LaurentPoly::from_terms(terms)
}

fn zp_mul(a: &ZPoly, b: &ZPoly) -> ZPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        for (j, cb) in b.iter().enumerate() {
            out[i + j] += ca * cb;
        }
    }
    out
}

fn zp_sub(a: &ZPoly, b: &ZPoly) -> ZPoly {
    let mut out = a.clone();
    if out.len() < b.len() {
        out.resize(b.len(), BigInt::zero());
    }
    for (i, c) in b.iter().enumerate() {
        out[i] = &out[i] - c;
    }
    zp_trim(&mut out);
    out
}

fn zp_div_exact(a: &ZPoly, b: &ZPoly) -> ZPoly {
    if a.is_empty() {
        return Vec::new();
    }
    let mut rem = a.clone();
    let mut quot = vec![BigInt::zero(); a.len() - b.len() + 1];
    let lb = b.last().unwrap();
    while rem.len() >= b.len() && !rem.is_empty() {
        let shift = rem.len() - b.len();
        let c = rem.last().unwrap() / lb;
        quot[shift] = c.clone();
        for (i, bc) in b.iter().enumerate() {
            rem[i + shift] = &rem[i + shift] - bc * &c;
        }
        zp_trim(&mut rem);
    }
    debug_assert!(rem.is_empty(), "inexact univariate division");
    quot
}

fn bp_content(bp: &BiPoly) -> ZPoly {
    let mut g: ZPoly = Vec::new();
    for v in bp.values() {
        g = zp_gcd(&g, v);
        if g.len() == 1 && g[0].is_one() {
            break;
        }
    }
    g
}

fn bp_primitive(bp: &BiPoly) -> (BiPoly, ZPoly) {
    let c = bp_content(bp);
    if c.len() == 1 && c[0].is_one() {
        return (bp.clone(), c);
    }
    let mut out = BiPoly::new();
    for (qd, v) in bp {
        out.insert(*qd, zp_div_exact(v, &c));
    }
    (out, c)
}

fn bp_degree(bp: &BiPoly) -> i64 {
    *bp.keys().next_back().unwrap_or(&-1)
}

fn bp_pseudo_rem(f: &BiPoly, g: &BiPoly) -> BiPoly {
    let mut rem = f.clone();
    let dg = bp_degree(g);
    let lg = g[&dg].clone();
    loop {
        let dr = bp_degree(&rem);
        if dr < dg || rem.is_empty() {
            break;
        }
        let lr = rem[&dr].clone();
        // rem = lg*rem - lr*q^(dr-dg)*g
        let mut next = BiPoly::new();
        for (qd, v) in &rem {
            next.insert(*qd, zp_mul(v, &lg));
        }
        for (qd, v) in g {
            let target = qd + dr - dg;
            let sub = zp_mul(v, &lr);
            let entry = next.entry(target).or_default();
            *entry = zp_sub(entry, &sub);
        }
        next.retain(|_, v| {
            zp_trim(v);
            !v.is_empty()
        });
        rem = next;
    }
    rem
}

fn bp_gcd(a: &BiPoly, b: &BiPoly) -> BiPoly {
    if a.is_empty() {
        return b.clone();
    }
    if b.is_empty() {
        return a.clone();
    }
    let (mut f, cf) = bp_primitive(a);
    let (mut g, cg) = bp_primitive(b);
    if bp_degree(&f) < bp_degree(&g) {
        std::mem::swap(&mut f, &mut g);
    }
    while !g.is_empty() {
        let r = bp_pseudo_rem(&f, &g);
        f = g;
        g = bp_primitive(&r).0;
    }
    let content_gcd = zp_gcd(&cf, &cg);
    let mut out = BiPoly::new();
    for (qd, v) in &f {
        out.insert(*qd, zp_mul(v, &content_gcd));
    }
    out
}

/// Gcd of two Laurent polynomials, up to units. The result is a primitive
/// polynomial with min exponents 0 and positive leading coefficient.
pub fn poly_gcd(a: &LaurentPoly, b: &LaurentPoly) -> LaurentPoly {
    if a.is_zero() {
        return shift_to_zero(b).primitive().0;
    }
    if b.is_zero() {
        return shift_to_zero(a).primitive().0;
    }
    let (pa, _) = shift_to_zero(a).primitive();
    let (pb, _) = shift_to_zero(b).primitive();
    if pa.is_one() || pb.is_one() {
        return LaurentPoly::one();
    }
    if pa.is_q_only() && pb.is_q_only() {
        // univariate fast path
        let da: ZPoly = dense_q(&pa);
        let db: ZPoly = dense_q(&pb);
        let g = zp_gcd(&da, &db);
        let terms = g
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (Exp { q: i as i64, r: 0 }, Rat::from_integer(c.clone())))
            .collect();
        return LaurentPoly::from_terms(terms);
    }
    let g = bp_gcd(&bp_from(&pa), &bp_from(&pb));
    bp_to_laurent(&g).primitive().0
}

fn shift_to_zero(p: &LaurentPoly) -> LaurentPoly {
    match p.min_exps() {
        None => LaurentPoly::zero(),
        Some(e) => p.mul_monomial(-e.q, -e.r),
    }
}

fn dense_q(p: &LaurentPoly) -> ZPoly {
    let deg = p.max_exps().map(|e| e.q).unwrap_or(0);
    let mut out = vec![BigInt::zero(); deg as usize + 1];
    for (e, c) in &p.terms {
        debug_assert!(c.denom().is_one());
        out[e.q as usize] = c.numer().clone();
    }
    out
}

/// Exact multivariate division (panics if not exact; internal use on gcd factors).
pub fn poly_div_exact(a: &LaurentPoly, b: &LaurentPoly) -> LaurentPoly {
    assert!(!b.is_zero(), "division by zero polynomial");
    if a.is_zero() {
        return LaurentPoly::zero();
    }
    if b.is_one() {
        return a.clone();
    }
    let mut rem = a.clone();
    let mut quot_terms: Vec<(Exp, Rat)> = Vec::new();
    let (lb_exp, lb_coeff) = {
        let (e, c) = b.leading().unwrap();
        (*e, c.clone())
    };
    while !rem.is_zero() {
        let (lr_exp, lr_coeff) = {
            let (e, c) = rem.leading().unwrap();
            (*e, c.clone())
        };
        let t_exp = lr_exp.sub(lb_exp);
        let t_coeff = lr_coeff / &lb_coeff;
        quot_terms.push((t_exp, t_coeff.clone()));
        let t = LaurentPoly::monomial(t_coeff, t_exp.q, t_exp.r);
        rem = rem.sub(&t.mul(b));
    }
    LaurentPoly::from_terms(quot_terms)
}

/// Normalized rational function in q, r: the scalar type of the workbench.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RatFunc {
    num: LaurentPoly,
    den: LaurentPoly,
}

impl RatFunc {
    pub fn zero() -> Self {
        RatFunc { num: LaurentPoly::zero(), den: LaurentPoly::one() }
    }

    pub fn one() -> Self {
        RatFunc { num: LaurentPoly::one(), den: LaurentPoly::one() }
    }

    pub fn from_int(n: i64) -> Self {
        RatFunc { num: LaurentPoly::from_int(n), den: LaurentPoly::one() }
    }

    pub fn from_rat(c: Rat) -> Self {
        RatFunc { num: LaurentPoly::constant(c), den: LaurentPoly::one() }
    }

    pub fn from_poly(p: LaurentPoly) -> Self {
        RatFunc { num: p, den: LaurentPoly::one() }
    }

    pub fn q() -> Self {
        Self::from_poly(LaurentPoly::var_q())
    }

    pub fn r() -> Self {
        Self::from_poly(LaurentPoly::var_r())
    }

    pub fn monomial(c: Rat, q: i64, r: i64) -> Self {
        Self::from_poly(LaurentPoly::monomial(c, q, r))
    }

    pub fn new(num: LaurentPoly, den: LaurentPoly) -> Result<Self, FieldError> {
        if den.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let mut f = RatFunc { num, den };
        f.normalize();
        Ok(f)
    }

    pub fn numer(&self) -> &LaurentPoly {
        &self.num
    }

    pub fn denom(&self) -> &LaurentPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_q_only(&self) -> bool {
        self.num.is_q_only() && self.den.is_q_only()
    }

    /// Term count of numerator plus denominator; the pivot-complexity measure.
    pub fn complexity(&self) -> usize {
        self.num.num_terms() + self.den.num_terms()
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.den = LaurentPoly::one();
            return;
        }
        if self.den.is_one() {
            return;
        }
        // Make the denominator a polynomial with min exponents zero; the
        // compensating monomial moves into the (Laurent) numerator.
        let ds = self.den.min_exps().unwrap();
        if ds != Exp::ZERO {
            self.den = self.den.mul_monomial(-ds.q, -ds.r);
            self.num = self.num.mul_monomial(-ds.q, -ds.r);
        }
        // Reduce by polynomial gcd (computed on the numerator shifted to a
        // true polynomial; monomial factors cannot divide the denominator).
        let ns = self.num.min_exps().unwrap();
        let num_poly = self.num.mul_monomial(-ns.q, -ns.r);
        let g = poly_gcd(&num_poly, &self.den);
        if !g.is_one() {
            let nq = poly_div_exact(&num_poly, &g);
            self.num = nq.mul_monomial(ns.q, ns.r);
            self.den = poly_div_exact(&self.den, &g);
        }
        // Scale so the denominator's graded-lex leading coefficient is 1.
        let lc = self.den.leading().unwrap().1.clone();
        if !lc.is_one() {
            let inv = Rat::one() / lc;
            self.num = self.num.scale(&inv);
            self.den = self.den.scale(&inv);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den.is_one() && other.den.is_one() {
            return RatFunc { num: self.num.add(&other.num), den: LaurentPoly::one() };
        }
        if self.den == other.den {
            let mut f = RatFunc { num: self.num.add(&other.num), den: self.den.clone() };
            f.normalize();
            return f;
        }
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        let den = self.den.mul(&other.den);
        let mut f = RatFunc { num, den };
        f.normalize();
        f
    }

    pub fn neg(&self) -> Self {
        RatFunc { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        if self.is_one() {
            return other.clone();
        }
        if other.is_one() {
            return self.clone();
        }
        let mut f = RatFunc {
            num: self.num.mul(&other.num),
            den: self.den.mul(&other.den),
        };
        f.normalize();
        f
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        RatFunc { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn inv(&self) -> Result<Self, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let mut f = RatFunc { num: self.den.clone(), den: self.num.clone() };
        f.normalize();
        Ok(f)
    }

    pub fn div(&self, other: &Self) -> Result<Self, FieldError> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, e: i32) -> Result<Self, FieldError> {
        if e == 0 {
            return Ok(Self::one());
        }
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = Self::one();
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(&base);
        }
        Ok(acc)
    }

    /// Ring homomorphism r -> -q^(2m+1); errors when the denominator
    /// vanishes identically under the substitution.
    pub fn specialize_r(&self, m: u32) -> Result<Self, FieldError> {
        let den = self.den.substitute_r(m);
        if den.is_zero() {
            return Err(FieldError::SpecializationPole { m });
        }
        let num = self.num.substitute_r(m);
        let mut f = RatFunc { num, den };
        f.normalize();
        Ok(f)
    }

    /// Substitutes q -> q^-1.
    pub fn invert_q(&self) -> Self {
        let mut f = RatFunc { num: self.num.invert_q(), den: self.den.invert_q() };
        f.normalize();
        f
    }

    /// Exact limit at q = 1 for values univariate in q, factoring out
    /// (q - 1) powers first. Errors on a genuine pole.
    pub fn limit_q1(&self) -> Result<Rat, FieldError> {
        if !self.is_q_only() {
            return Err(FieldError::NotUnivariateQ);
        }
        if self.is_zero() {
            return Ok(Rat::zero());
        }
        // Monomial units q^k evaluate to 1 at q = 1, so each side may be
        // shifted to a plain polynomial independently.
        let (num_val, num_mult) = eval_strip_q1(&self.num);
        let (den_val, den_mult) = eval_strip_q1(&self.den);
        match num_mult.cmp(&den_mult) {
            Ordering::Less => Err(FieldError::PoleAtQ1),
            Ordering::Greater => Ok(Rat::zero()),
            Ordering::Equal => Ok(num_val / den_val),
        }
    }

    pub fn eval_modp(&self, qv: u64, rv: u64, p: u64) -> Option<u64> {
        let d = self.den.eval_modp(qv, rv, p)?;
        let n = self.num.eval_modp(qv, rv, p)?;
        Some(modp_mul(n, modp_inv(d, p)?, p))
    }
}

/// Value at q=1 of poly/(q-1)^mult where mult is the multiplicity of the
/// root q=1. Input must be univariate in q and nonzero.
fn eval_strip_q1(p: &LaurentPoly) -> (Rat, usize) {
    let min = p.min_exps().unwrap();
    let shifted = p.mul_monomial(-min.q, 0);
    let deg = shifted.max_exps().unwrap().q as usize;
    let mut coeffs = vec![Rat::zero(); deg + 1];
    for (e, c) in shifted.terms() {
        coeffs[e.q as usize] = c.clone();
    }
    let mut mult = 0usize;
    loop {
        let val: Rat = coeffs.iter().fold(Rat::zero(), |a, c| a + c);
        if !val.is_zero() {
            return (val, mult);
        }
        // synthetic division by (q - 1)
        let mut out = vec![Rat::zero(); coeffs.len() - 1];
        let mut carry = Rat::zero();
        for i in (1..coeffs.len()).rev() {
            carry = &carry + &coeffs[i];
            out[i - 1] = carry.clone();
        }
        coeffs = out;
        mult += 1;
        if coeffs.is_empty() {
            // exact zero polynomial cannot happen (p nonzero)
            return (Rat::zero(), mult);
        }
    }
}

impl std::ops::Add for &RatFunc {
    type Output = RatFunc;
    fn add(self, rhs: &RatFunc) -> RatFunc {
        RatFunc::add(self, rhs)
    }
}

impl std::ops::Sub for &RatFunc {
    type Output = RatFunc;
    fn sub(self, rhs: &RatFunc) -> RatFunc {
        RatFunc::sub(self, rhs)
    }
}

impl std::ops::Mul for &RatFunc {
    type Output = RatFunc;
    fn mul(self, rhs: &RatFunc) -> RatFunc {
        RatFunc::mul(self, rhs)
    }
}

impl std::ops::Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc::neg(self)
    }
}

/// Quantum integer [n] = (q^n - q^-n)/(q - q^-1) = q^(n-1) + q^(n-3) + ... + q^(1-n).
/// [0] = 0 by the displayed formula.
pub fn quantum_int(n: u32) -> RatFunc {
    let mut terms = Vec::new();
    let n = n as i64;
    let mut e = n - 1;
    while e >= 1 - n {
        terms.push((Exp { q: e, r: 0 }, Rat::one()));
        e -= 2;
    }
    RatFunc::from_poly(LaurentPoly::from_terms(terms))
}

/// Quantum factorial [n]! = [n][n-1]...[1], with [0]! = 1.
pub fn quantum_factorial(n: u32) -> RatFunc {
    let mut acc = RatFunc::one();
    for k in 1..=n {
        acc = acc.mul(&quantum_int(k));
    }
    acc
}

/// The loop parameter x = 1 + (r - r^-1)/(q - q^-1).
pub fn x_param() -> RatFunc {
    let rctx = RatFunc::r();
    let q = RatFunc::q();
    let num = r_sub_inv(&rctx);
    let den = r_sub_inv(&q);
    RatFunc::one().add(&num.div(&den).expect("q - q^-1 is nonzero"))
}

fn r_sub_inv(v: &RatFunc) -> RatFunc {
    v.sub(&v.inv().expect("variable is invertible"))
}

// --- rendering ---

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        if self.den.is_one() {
            write!(f, "{}", render_poly(&self.num))
        } else {
            write!(f, "({})/({})", render_poly(&self.num), render_poly(&self.den))
        }
    }
}

fn render_poly(p: &LaurentPoly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut terms: Vec<(&Exp, &Rat)> = p.terms().collect();
    terms.sort_by(|a, b| b.0.graded_lex(*a.0));
    let mut out = String::new();
    for (i, (e, c)) in terms.iter().enumerate() {
        let neg = c.is_negative();
        let abs = if neg { -(*c).clone() } else { (*c).clone() };
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else if neg {
            out.push('-');
        } else {
            out.push('+');
        }
        out.push_str(&render_monomial(&abs, e));
    }
    out
}

fn render_monomial(c: &Rat, e: &Exp) -> String {
    let mut parts: Vec<String> = Vec::new();
    if e.q != 0 {
        parts.push(if e.q == 1 { "q".to_string() } else { format!("q^{}", e.q) });
    }
    if e.r != 0 {
        parts.push(if e.r == 1 { "r".to_string() } else { format!("r^{}", e.r) });
    }
    if parts.is_empty() {
        return format!("{}", c);
    }
    if c.is_one() {
        parts.join("*")
    } else {
        format!("{}*{}", c, parts.join("*"))
    }
}

// --- parsing ---

struct Scanner<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str) -> Self {
        Scanner { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn error(&self, msg: impl Into<String>) -> FieldError {
        FieldError::Parse { line: self.line, col: self.col, msg: msg.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.bump();
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn parse_int(&mut self) -> Result<i64, FieldError> {
        self.skip_ws();
        let mut neg = false;
        if self.peek() == Some(b'-') {
            neg = true;
            self.bump();
        }
        let mut digits = String::new();
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            digits.push(self.bump().unwrap() as char);
        }
        if digits.is_empty() {
            return Err(self.error("expected integer"));
        }
        let v: i64 = digits.parse().map_err(|_| self.error("integer out of range"))?;
        Ok(if neg { -v } else { v })
    }

    fn parse_bigint(&mut self) -> Result<BigInt, FieldError> {
        self.skip_ws();
        let mut s = String::new();
        if self.peek() == Some(b'-') {
            s.push('-');
            self.bump();
        }
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            s.push(self.bump().unwrap() as char);
        }
        if s.is_empty() || s == "-" {
            return Err(self.error("expected number"));
        }
        s.parse().map_err(|_| self.error("bad number"))
    }
}

/// Parses the canonical string form: monomials `c*q^a*r^b` joined by +/-,
/// fractions written `(num)/(den)`; `q^-1` is accepted for negative powers.
pub fn parse_ratfunc(text: &str) -> Result<RatFunc, FieldError> {
    let mut sc = Scanner::new(text);
    let v = parse_rf_expr(&mut sc)?;
    sc.skip_ws();
    if sc.pos != sc.src.len() {
        return Err(sc.error("trailing input"));
    }
    Ok(v)
}

/// Parses a scalar from the start of `text`, returning the value and the
/// number of bytes consumed. Used by the tangle parser for scalar prefixes.
pub fn parse_ratfunc_prefix(text: &str) -> Result<(RatFunc, usize), FieldError> {
    let mut sc = Scanner::new(text);
    let v = parse_rf_expr(&mut sc)?;
    Ok((v, sc.pos))
}

fn parse_rf_expr(sc: &mut Scanner) -> Result<RatFunc, FieldError> {
    let mut acc = parse_rf_term(sc)?;
    loop {
        sc.skip_ws();
        match sc.peek() {
            Some(b'+') => {
                sc.bump();
                acc = acc.add(&parse_rf_term(sc)?);
            }
            Some(b'-') => {
                sc.bump();
                acc = acc.sub(&parse_rf_term(sc)?);
            }
            _ => return Ok(acc),
        }
    }
}

fn parse_rf_term(sc: &mut Scanner) -> Result<RatFunc, FieldError> {
    let mut acc = parse_rf_factor(sc)?;
    loop {
        sc.skip_ws();
        match sc.peek() {
            Some(b'*') => {
                sc.bump();
                acc = acc.mul(&parse_rf_factor(sc)?);
            }
            Some(b'/') => {
                sc.bump();
                let d = parse_rf_factor(sc)?;
                acc = acc.div(&d).map_err(|_| sc.error("division by zero"))?;
            }
            _ => return Ok(acc),
        }
    }
}

fn parse_rf_factor(sc: &mut Scanner) -> Result<RatFunc, FieldError> {
    sc.skip_ws();
    match sc.peek() {
        Some(b'-') => {
            sc.bump();
            Ok(parse_rf_factor(sc)?.neg())
        }
        Some(b'(') => {
            sc.bump();
            let inner = parse_rf_expr(sc)?;
            if !sc.eat(b')') {
                return Err(sc.error("expected ')'"));
            }
            parse_rf_power(sc, inner)
        }
        Some(b'q') => {
            sc.bump();
            parse_rf_power(sc, RatFunc::q())
        }
        Some(b'r') => {
            sc.bump();
            parse_rf_power(sc, RatFunc::r())
        }
        Some(b'0'..=b'9') => {
            let n = sc.parse_bigint()?;
            sc.skip_ws();
            Ok(RatFunc::from_rat(Rat::from_integer(n)))
        }
        _ => Err(sc.error("expected scalar factor")),
    }
}

fn parse_rf_power(sc: &mut Scanner, base: RatFunc) -> Result<RatFunc, FieldError> {
    sc.skip_ws();
    if sc.peek() == Some(b'^') {
        sc.bump();
        let e = sc.parse_int()?;
        let e32: i32 = e.try_into().map_err(|_| sc.error("exponent out of range"))?;
        base.pow(e32).map_err(|_| sc.error("zero to negative power"))
    } else {
        Ok(base)
    }
}

impl std::str::FromStr for RatFunc {
    type Err = FieldError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_ratfunc(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rf(s: &str) -> RatFunc {
        parse_ratfunc(s).unwrap()
    }

    #[test]
    fn difference_of_squares() {
        let qm = rf("q-q^-1");
        let two = quantum_int(2);
        assert_eq!(qm.mul(&two), rf("q^2-q^-2"));
    }

    #[test]
    fn inverse_of_q() {
        assert_eq!(RatFunc::q().inv().unwrap(), rf("q^-1"));
    }

    #[test]
    fn normalization_decides_equality() {
        assert_eq!(rf("(q^2-1)/(q)"), rf("q-q^-1"));
    }

    #[test]
    fn quantum_int_values() {
        assert!(quantum_int(0).is_zero());
        assert!(quantum_int(1).is_one());
        assert_eq!(quantum_int(3), rf("q^2+1+q^-2"));
    }

    #[test]
    fn quantum_factorial_values() {
        assert!(quantum_factorial(0).is_one());
        assert!(quantum_factorial(1).is_one());
        assert_eq!(quantum_factorial(2), rf("q+q^-1"));
    }

    #[test]
    fn x_specializations() {
        // x|_(r=-q^(2m+1)) = 1 - [2m+1]
        for m in 1..=4u32 {
            let lhs = x_param().specialize_r(m).unwrap();
            let rhs = RatFunc::one().sub(&quantum_int(2 * m + 1));
            assert_eq!(lhs, rhs);
        }
        assert_eq!(x_param().specialize_r(1).unwrap(), rf("-q^2-q^-2"));
        assert_eq!(x_param().specialize_r(2).unwrap(), rf("-q^4-q^2-q^-2-q^-4"));
    }

    #[test]
    fn specialize_r_basics() {
        assert_eq!(RatFunc::r().specialize_r(1).unwrap(), rf("-q^3"));
        assert_eq!(rf("1+r*q^-1").specialize_r(1).unwrap(), rf("1-q^2"));
        // vanishing denominator is an explicit error
        let f = RatFunc::one().div(&rf("r+q^3")).unwrap();
        assert_eq!(f.specialize_r(1), Err(FieldError::SpecializationPole { m: 1 }));
    }

    #[test]
    fn limit_q1_values() {
        for n in 0..=10u32 {
            assert_eq!(
                quantum_int(n).limit_q1().unwrap(),
                Rat::from_integer(BigInt::from(n))
            );
        }
        for m in 1..=4u32 {
            let x = x_param().specialize_r(m).unwrap();
            assert_eq!(x.limit_q1().unwrap(), Rat::from_integer(BigInt::from(-2 * m as i64)));
        }
        assert_eq!(
            RatFunc::one().div(&rf("q-1")).unwrap().limit_q1(),
            Err(FieldError::PoleAtQ1)
        );
    }

    #[test]
    fn quantum_int_bar_invariant() {
        for n in 0..=12u32 {
            let v = quantum_int(n);
            assert_eq!(v.invert_q(), v);
        }
    }

    #[test]
    fn quantum_int_defining_identity() {
        let qm = rf("q-q^-1");
        for n in 0..=50u32 {
            let lhs = qm.mul(&quantum_int(n));
            let rhs = rf(&format!("q^{}-q^-{}", n, n));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn division_by_zero_is_error() {
        assert_eq!(RatFunc::one().div(&RatFunc::zero()), Err(FieldError::DivisionByZero));
        assert_eq!(RatFunc::zero().inv(), Err(FieldError::DivisionByZero));
    }

    #[test]
    fn gcd_reduction_bivariate() {
        // (r^2 - q^2)/(r - q) reduces to r + q
        let num = rf("r^2-q^2");
        let den = rf("r-q");
        assert_eq!(num.div(&den).unwrap(), rf("r+q"));
    }

    #[test]
    fn display_round_trip() {
        let samples = [
            "0",
            "1",
            "-q^2-q^-2",
            "3/2*q*r^-1+5",
            "(q^2+1)/(q^4+q^2+1)",
            "q-q^-1",
        ];
        for s in samples {
            let v = rf(s);
            assert_eq!(parse_ratfunc(&v.to_string()).unwrap(), v);
        }
    }

    #[test]
    fn modp_eval() {
        const P: u64 = (1 << 61) - 1;
        let v = rf("(q^2-1)/(q)");
        let c = 12345u64;
        let direct = v.eval_modp(c, 2, P).unwrap();
        let expect = modp_mul(
            modp_sub(modp_mul(c, c, P), 1, P),
            modp_inv(c, P).unwrap(),
            P,
        );
        assert_eq!(direct, expect);
    }
}
