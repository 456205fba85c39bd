//! The framed-tangle expression calculus: arity-checked terms over the
//! elementary generators, formal linear combinations, duality, bending,
//! trace closure, and a text parser.
//!
//! Expressions are trees over the leaves `I, X, Xop, A, U, id0` with binary
//! `Compose` and `Tensor` nodes. An arity `(s, t)` counts boundary vertices:
//! `s` on top, `t` on the bottom. `Compose(f, g)` is "f drawn above g" and
//! requires `bottom(f) = top(g)`; the unit laws for `id0` hold structurally.
//!
//! Equality of expressions is structural only. Semantic equality of linear
//! combinations is delegated to backends: matrix evaluation (`rep`) or the
//! generic specialization oracle (`bmw`).

use crate::qfield::{parse_ratfunc_prefix, FieldError, RatFunc};
use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TangleError {
    #[error("arity mismatch in composition: upper tangle is {us}->{ut}, lower is {ls}->{lt}")]
    ComposeArity { us: usize, ut: usize, ls: usize, lt: usize },
    #[error("arity mismatch: expected {exp_s}->{exp_t}, found {got_s}->{got_t}")]
    ArityMismatch { exp_s: usize, exp_t: usize, got_s: usize, got_t: usize },
    #[error("combination mixes arities {s1}->{t1} and {s2}->{t2}")]
    MixedArity { s1: usize, t1: usize, s2: usize, t2: usize },
    #[error("trace closure needs a square arity, found {s}->{t}")]
    NotSquare { s: usize, t: usize },
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
}

impl From<FieldError> for TangleError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::Parse { line, col, msg } => TangleError::Parse { line, col, msg },
            other => TangleError::Parse { line: 0, col: 0, msg: other.to_string() },
        }
    }
}

/// The elementary generators.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Gen {
    Id0,
    I,
    X,
    Xop,
    A,
    U,
}

impl Gen {
    pub fn arity(self) -> (usize, usize) {
        match self {
            Gen::Id0 => (0, 0),
            Gen::I => (1, 1),
            Gen::X | Gen::Xop => (2, 2),
            Gen::A => (0, 2),
            Gen::U => (2, 0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gen::Id0 => "id0",
            Gen::I => "I",
            Gen::X => "X",
            Gen::Xop => "Xop",
            Gen::A => "A",
            Gen::U => "U",
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
enum Node {
    Leaf(Gen),
    Compose(Rc<TangleExpr>, Rc<TangleExpr>),
    Tensor(Rc<TangleExpr>, Rc<TangleExpr>),
}

/// An arity-checked tangle expression with cached arity.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TangleExpr {
    top: usize,
    bottom: usize,
    node: Node,
}

impl TangleExpr {
    pub fn generator(g: Gen) -> Self {
        let (s, t) = g.arity();
        TangleExpr { top: s, bottom: t, node: Node::Leaf(g) }
    }

    pub fn id0() -> Self {
        Self::generator(Gen::Id0)
    }

    /// I^(⊗n); n = 0 gives id0.
    pub fn id_n(n: usize) -> Self {
        match n {
            0 => Self::id0(),
            1 => Self::generator(Gen::I),
            _ => Self::tensor(Self::generator(Gen::I), Self::id_n(n - 1)),
        }
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn arity(&self) -> (usize, usize) {
        (self.top, self.bottom)
    }

    /// f drawn above g; the unit laws for id0 hold structurally.
    pub fn compose(f: TangleExpr, g: TangleExpr) -> Self {
        Self::try_compose(f, g).expect("compose arity mismatch")
    }

    pub fn try_compose(f: TangleExpr, g: TangleExpr) -> Result<Self, TangleError> {
        if f.bottom != g.top {
            return Err(TangleError::ComposeArity {
                us: f.top,
                ut: f.bottom,
                ls: g.top,
                lt: g.bottom,
            });
        }
        if matches!(f.node, Node::Leaf(Gen::Id0)) {
            return Ok(g);
        }
        if matches!(g.node, Node::Leaf(Gen::Id0)) {
            return Ok(f);
        }
        // canonical right-nested association
        if let Node::Compose(a, b) = &f.node {
            let inner = Self::try_compose(b.as_ref().clone(), g)?;
            return Self::try_compose(a.as_ref().clone(), inner);
        }
        Ok(TangleExpr {
            top: f.top,
            bottom: g.bottom,
            node: Node::Compose(Rc::new(f), Rc::new(g)),
        })
    }

    /// Juxtaposition; tensoring with id0 is the identity, structurally.
    pub fn tensor(f: TangleExpr, g: TangleExpr) -> Self {
        if matches!(f.node, Node::Leaf(Gen::Id0)) {
            return g;
        }
        if matches!(g.node, Node::Leaf(Gen::Id0)) {
            return f;
        }
        // canonical right-nested association
        if let Node::Tensor(a, b) = &f.node {
            let inner = Self::tensor(b.as_ref().clone(), g);
            return Self::tensor(a.as_ref().clone(), inner);
        }
        TangleExpr {
            top: f.top + g.top,
            bottom: f.bottom + g.bottom,
            node: Node::Tensor(Rc::new(f), Rc::new(g)),
        }
    }

    /// Some(n) when the expression is a pure tensor of identity strands.
    pub fn as_identity(&self) -> Option<usize> {
        match &self.node {
            Node::Leaf(Gen::Id0) => Some(0),
            Node::Leaf(Gen::I) => Some(1),
            Node::Leaf(_) => None,
            Node::Tensor(f, g) => Some(f.as_identity()? + g.as_identity()?),
            Node::Compose(_, _) => None,
        }
    }

    /// Places a 2-strand piece on strands i, i+1 of n strands (1-based i).
    pub fn place2(piece: TangleExpr, i: usize, n: usize) -> Self {
        assert!((1..n).contains(&i), "strand index out of range");
        Self::tensor(Self::id_n(i - 1), Self::tensor(piece, Self::id_n(n - 1 - i)))
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a TangleExpr)) {
        f(self);
        match &self.node {
            Node::Leaf(_) => {}
            Node::Compose(a, b) | Node::Tensor(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    pub(crate) fn node_kind(&self) -> NodeKind<'_> {
        match &self.node {
            Node::Leaf(g) => NodeKind::Leaf(*g),
            Node::Compose(a, b) => NodeKind::Compose(a, b),
            Node::Tensor(a, b) => NodeKind::Tensor(a, b),
        }
    }
}

/// Read-only view of the tree structure for evaluators.
pub enum NodeKind<'a> {
    Leaf(Gen),
    Compose(&'a TangleExpr, &'a TangleExpr),
    Tensor(&'a TangleExpr, &'a TangleExpr),
}

impl fmt::Display for TangleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self, f, 0)
    }
}

// precedence: 0 = composition (;), 1 = tensor (*), 2 = atom
fn fmt_expr(e: &TangleExpr, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
    match &e.node {
        Node::Leaf(g) => write!(f, "{}", g.name()),
        Node::Compose(a, b) => {
            if prec > 0 {
                write!(f, "(")?;
            }
            fmt_expr(a, f, 0)?;
            write!(f, " ; ")?;
            fmt_expr(b, f, 0)?;
            if prec > 0 {
                write!(f, ")")?;
            }
            Ok(())
        }
        Node::Tensor(a, b) => {
            if prec > 1 {
                write!(f, "(")?;
            }
            fmt_expr(a, f, 1)?;
            write!(f, "*")?;
            fmt_expr(b, f, 1)?;
            if prec > 1 {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

/// Formal linear combination of tangle expressions sharing one arity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LinTangle {
    top: usize,
    bottom: usize,
    terms: BTreeMap<TangleExpr, RatFunc>,
}

impl LinTangle {
    pub fn zero(s: usize, t: usize) -> Self {
        LinTangle { top: s, bottom: t, terms: BTreeMap::new() }
    }

    pub fn from_expr(e: TangleExpr) -> Self {
        let (s, t) = e.arity();
        let mut terms = BTreeMap::new();
        terms.insert(e, RatFunc::one());
        LinTangle { top: s, bottom: t, terms }
    }

    pub fn generator(g: Gen) -> Self {
        Self::from_expr(TangleExpr::generator(g))
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn arity(&self) -> (usize, usize) {
        (self.top, self.bottom)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TangleExpr, &RatFunc)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert(&mut self, e: TangleExpr, c: RatFunc) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(cur) => {
                let s = cur.add(&c);
                if s.is_zero() {
                    self.terms.remove(&e);
                } else {
                    *cur = s;
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn scale(&self, c: &RatFunc) -> Self {
        if c.is_zero() {
            return Self::zero(self.top, self.bottom);
        }
        LinTangle {
            top: self.top,
            bottom: self.bottom,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v.mul(c))).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&RatFunc::from_int(-1))
    }

    pub fn add(&self, other: &Self) -> Result<Self, TangleError> {
        if self.arity() != other.arity() {
            return Err(TangleError::MixedArity {
                s1: self.top,
                t1: self.bottom,
                s2: other.top,
                t2: other.bottom,
            });
        }
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TangleError> {
        self.add(&other.neg())
    }

    /// Bilinear extension of stacking: self above other.
    pub fn compose(&self, other: &Self) -> Result<Self, TangleError> {
        if self.bottom != other.top {
            return Err(TangleError::ComposeArity {
                us: self.top,
                ut: self.bottom,
                ls: other.top,
                lt: other.bottom,
            });
        }
        let mut out = Self::zero(self.top, other.bottom);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = TangleExpr::try_compose(e1.clone(), e2.clone())?;
                out.insert(e, c1.mul(c2));
            }
        }
        Ok(out)
    }

    /// Bilinear juxtaposition.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.top + other.top, self.bottom + other.bottom);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                out.insert(TangleExpr::tensor(e1.clone(), e2.clone()), c1.mul(c2));
            }
        }
        out
    }
}

impl fmt::Display for LinTangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if c.is_one() {
                write!(f, "({e})")?;
            } else {
                write!(f, "{c} . ({e})")?;
            }
        }
        Ok(())
    }
}

/// The nested cap/cup towers: U_n of arity 2n->0 and A_n of arity 0->2n.
///
/// U_n = (I^(n-1) ⊗ U ⊗ I^(n-1)) ∘ ... ∘ (I ⊗ U ⊗ I) ∘ U, read top to
/// bottom, and A_n dually with A on top.
pub fn cap_cup(n: usize) -> (TangleExpr, TangleExpr) {
    if n == 0 {
        return (TangleExpr::id0(), TangleExpr::id0());
    }
    let stage = |g: Gen, k: usize| {
        TangleExpr::tensor(
            TangleExpr::id_n(k),
            TangleExpr::tensor(TangleExpr::generator(g), TangleExpr::id_n(k)),
        )
    };
    let mut u = stage(Gen::U, n - 1);
    for k in (0..n - 1).rev() {
        u = TangleExpr::compose(u, stage(Gen::U, k));
    }
    let mut a = stage(Gen::A, 0);
    for k in 1..n {
        a = TangleExpr::compose(a, stage(Gen::A, k));
    }
    (u, a)
}

/// Rotation through π: D of arity s->t maps to
/// (I_t ⊗ A_s) ∘ (I_t ⊗ D ⊗ I_s) ∘ (U_t ⊗ I_s) of arity t->s.
pub fn dual_expr(d: &TangleExpr) -> TangleExpr {
    let (s, t) = d.arity();
    let (u_t, _) = cap_cup(t);
    let (_, a_s) = cap_cup(s);
    let top = TangleExpr::tensor(TangleExpr::id_n(t), a_s);
    let mid = TangleExpr::tensor(
        TangleExpr::id_n(t),
        TangleExpr::tensor(d.clone(), TangleExpr::id_n(s)),
    );
    let bot = TangleExpr::tensor(u_t, TangleExpr::id_n(s));
    TangleExpr::compose(top, TangleExpr::compose(mid, bot))
}

/// Linear extension of [`dual_expr`].
pub fn dual(d: &LinTangle) -> LinTangle {
    let mut out = LinTangle::zero(d.bottom(), d.top());
    for (e, c) in d.terms() {
        out.insert(dual_expr(e), c.clone());
    }
    out
}

/// Bends the last t bottom strands up: D of arity n->(s+t) maps to
/// (D ⊗ I_t) ∘ (I_s ⊗ U_t) of arity (n+t)->s.
pub fn bend_u(d: &LinTangle, s: usize, t: usize) -> Result<LinTangle, TangleError> {
    if d.bottom() != s + t {
        return Err(TangleError::ArityMismatch {
            exp_s: d.top(),
            exp_t: s + t,
            got_s: d.top(),
            got_t: d.bottom(),
        });
    }
    let (u_t, _) = cap_cup(t);
    let lower = LinTangle::from_expr(TangleExpr::tensor(TangleExpr::id_n(s), u_t));
    let upper = d.tensor(&LinTangle::from_expr(TangleExpr::id_n(t)));
    upper.compose(&lower)
}

/// Bends t strands back down: D of arity (n+t)->s maps to
/// (I_n ⊗ A_t) ∘ (D ⊗ I_t) of arity n->(s+t).
pub fn bend_a(d: &LinTangle, s: usize, t: usize) -> Result<LinTangle, TangleError> {
    if d.bottom() != s || d.top() < t {
        return Err(TangleError::ArityMismatch {
            exp_s: d.top(),
            exp_t: s,
            got_s: d.top(),
            got_t: d.bottom(),
        });
    }
    let n = d.top() - t;
    let (_, a_t) = cap_cup(t);
    let upper = LinTangle::from_expr(TangleExpr::tensor(TangleExpr::id_n(n), a_t));
    let lower = d.tensor(&LinTangle::from_expr(TangleExpr::id_n(t)));
    upper.compose(&lower)
}

/// Closes a square tangle: A_n ∘ (D ⊗ I_n) ∘ U_n, arity 0->0.
pub fn trace_closure(d: &LinTangle) -> Result<LinTangle, TangleError> {
    if d.top() != d.bottom() {
        return Err(TangleError::NotSquare { s: d.top(), t: d.bottom() });
    }
    let n = d.top();
    let (u_n, a_n) = cap_cup(n);
    let mid = d.tensor(&LinTangle::from_expr(TangleExpr::id_n(n)));
    LinTangle::from_expr(a_n).compose(&mid)?.compose(&LinTangle::from_expr(u_n))
}

/// Eliminates every Xop leaf via
/// Xop = X - (q - q^-1)·(I ⊗ I) + (q - q^-1)·(U ∘ A).
pub fn xop_eliminate(d: &LinTangle) -> LinTangle {
    let mut out = LinTangle::zero(d.top(), d.bottom());
    for (e, c) in d.terms() {
        let expanded = xop_eliminate_expr(e);
        for (e2, c2) in expanded.terms() {
            out.insert(e2.clone(), c.mul(c2));
        }
    }
    out
}

fn xop_substitute() -> LinTangle {
    let qm = RatFunc::q().sub(&RatFunc::q().inv().unwrap());
    let x = LinTangle::generator(Gen::X);
    let ii = LinTangle::from_expr(TangleExpr::tensor(
        TangleExpr::generator(Gen::I),
        TangleExpr::generator(Gen::I),
    ));
    let ua = LinTangle::from_expr(TangleExpr::compose(
        TangleExpr::generator(Gen::U),
        TangleExpr::generator(Gen::A),
    ));
    x.sub(&ii.scale(&qm)).unwrap().add(&ua.scale(&qm)).unwrap()
}

fn xop_eliminate_expr(e: &TangleExpr) -> LinTangle {
    match e.node_kind() {
        NodeKind::Leaf(Gen::Xop) => xop_substitute(),
        NodeKind::Leaf(_) => LinTangle::from_expr(e.clone()),
        NodeKind::Compose(a, b) => {
            let la = xop_eliminate_expr(a);
            let lb = xop_eliminate_expr(b);
            la.compose(&lb).expect("arities preserved by substitution")
        }
        NodeKind::Tensor(a, b) => {
            let la = xop_eliminate_expr(a);
            let lb = xop_eliminate_expr(b);
            la.tensor(&lb)
        }
    }
}

// --- parser ---

struct TScan<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

#[derive(Clone, Copy)]
struct Mark {
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> TScan<'a> {
    fn new(src: &'a str) -> Self {
        TScan { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn mark(&self) -> Mark {
        Mark { pos: self.pos, line: self.line, col: self.col }
    }

    fn restore(&mut self, m: Mark) {
        self.pos = m.pos;
        self.line = m.line;
        self.col = m.col;
    }

    fn error(&self, msg: impl Into<String>) -> TangleError {
        TangleError::Parse { line: self.line, col: self.col, msg: msg.into() }
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

    fn advance(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
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

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let mut s = String::new();
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric()) {
            s.push(self.bump().unwrap() as char);
        }
        if s.is_empty() {
            None
        } else {
            Some(s)
        }
    }

    fn nat(&mut self) -> Result<usize, TangleError> {
        self.skip_ws();
        let mut digits = String::new();
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            digits.push(self.bump().unwrap() as char);
        }
        if digits.is_empty() {
            return Err(self.error("expected a number"));
        }
        digits.parse().map_err(|_| self.error("number out of range"))
    }
}

/// Parses the tangle DSL.
///
/// ```text
/// comp   := lin { ";" lin }               composition, top to bottom
/// lin    := [sc "."] term { ("+"|"-") [sc "."] term }
/// term   := factor { "*" factor }         tensor product
/// factor := atom [ "^" nat ]              iterated tensor
/// atom   := I | X | Xop | A | U | id0 | In(n) | Un(n) | An(n) | "(" comp ")"
/// ```
///
/// Scalars `sc` use the rational-function string form.
pub fn parse(text: &str) -> Result<LinTangle, TangleError> {
    let mut sc = TScan::new(text);
    let v = parse_comp(&mut sc)?;
    sc.skip_ws();
    if sc.pos != sc.src.len() {
        return Err(sc.error("trailing input"));
    }
    Ok(v)
}

fn parse_comp(sc: &mut TScan) -> Result<LinTangle, TangleError> {
    let mut acc = parse_lin(sc)?;
    loop {
        sc.skip_ws();
        if sc.peek() == Some(b';') {
            let line = sc.line;
            let col = sc.col;
            sc.bump();
            let next = parse_lin(sc)?;
            acc = acc.compose(&next).map_err(|e| match e {
                TangleError::ComposeArity { us, ut, ls, lt } => TangleError::Parse {
                    line,
                    col,
                    msg: format!(
                        "arity mismatch in composition: upper tangle is {us}->{ut}, lower is {ls}->{lt}"
                    ),
                },
                other => other,
            })?;
        } else {
            return Ok(acc);
        }
    }
}

fn parse_lin(sc: &mut TScan) -> Result<LinTangle, TangleError> {
    let first = parse_signed_term(sc)?;
    let mut acc = first;
    loop {
        sc.skip_ws();
        let sign = match sc.peek() {
            Some(b'+') => 1,
            Some(b'-') => -1,
            _ => return Ok(acc),
        };
        let line = sc.line;
        let col = sc.col;
        sc.bump();
        let term = parse_signed_term(sc)?;
        let term = if sign < 0 { term.neg() } else { term };
        acc = acc.add(&term).map_err(|e| match e {
            TangleError::MixedArity { s1, t1, s2, t2 } => TangleError::Parse {
                line,
                col,
                msg: format!("combination mixes arities {s1}->{t1} and {s2}->{t2}"),
            },
            other => other,
        })?;
    }
}

fn parse_signed_term(sc: &mut TScan) -> Result<LinTangle, TangleError> {
    sc.skip_ws();
    // optional scalar prefix `sc .` with backtracking
    let mark = sc.mark();
    let rest = std::str::from_utf8(&sc.src[sc.pos..]).unwrap();
    if let Ok((scalar, used)) = parse_ratfunc_prefix(rest) {
        sc.advance(used);
        if sc.eat(b'.') {
            let term = parse_term(sc)?;
            return Ok(term.scale(&scalar));
        }
        sc.restore(mark);
    }
    parse_term(sc)
}

fn parse_term(sc: &mut TScan) -> Result<LinTangle, TangleError> {
    let mut acc = parse_factor(sc)?;
    loop {
        sc.skip_ws();
        if sc.peek() == Some(b'*') {
            sc.bump();
            let f = parse_factor(sc)?;
            acc = acc.tensor(&f);
        } else {
            return Ok(acc);
        }
    }
}

fn parse_factor(sc: &mut TScan) -> Result<LinTangle, TangleError> {
    let atom = parse_atom(sc)?;
    sc.skip_ws();
    if sc.peek() == Some(b'^') {
        sc.bump();
        let n = sc.nat()?;
        let mut acc = LinTangle::from_expr(TangleExpr::id0());
        for _ in 0..n {
            acc = acc.tensor(&atom);
        }
        return Ok(acc);
    }
    Ok(atom)
}

fn parse_atom(sc: &mut TScan) -> Result<LinTangle, TangleError> {
    sc.skip_ws();
    if sc.peek() == Some(b'(') {
        sc.bump();
        let inner = parse_comp(sc)?;
        if !sc.eat(b')') {
            return Err(sc.error("expected ')'"));
        }
        return Ok(inner);
    }
    let line = sc.line;
    let col = sc.col;
    let Some(name) = sc.ident() else {
        return Err(sc.error("expected a tangle atom"));
    };
    let builder_arg = |sc: &mut TScan| -> Result<usize, TangleError> {
        if !sc.eat(b'(') {
            return Err(sc.error("expected '('"));
        }
        let n = sc.nat()?;
        if !sc.eat(b')') {
            return Err(sc.error("expected ')'"));
        }
        Ok(n)
    };
    match name.as_str() {
        "I" => Ok(LinTangle::generator(Gen::I)),
        "X" => Ok(LinTangle::generator(Gen::X)),
        "Xop" => Ok(LinTangle::generator(Gen::Xop)),
        "A" => Ok(LinTangle::generator(Gen::A)),
        "U" => Ok(LinTangle::generator(Gen::U)),
        "id0" => Ok(LinTangle::from_expr(TangleExpr::id0())),
        "In" => Ok(LinTangle::from_expr(TangleExpr::id_n(builder_arg(sc)?))),
        "Un" => {
            let n = builder_arg(sc)?;
            Ok(LinTangle::from_expr(cap_cup(n).0))
        }
        "An" => {
            let n = builder_arg(sc)?;
            Ok(LinTangle::from_expr(cap_cup(n).1))
        }
        other => Err(TangleError::Parse {
            line,
            col,
            msg: format!("unknown tangle atom `{other}`"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_arities() {
        assert_eq!(TangleExpr::generator(Gen::I).arity(), (1, 1));
        assert_eq!(TangleExpr::generator(Gen::X).arity(), (2, 2));
        assert_eq!(TangleExpr::generator(Gen::A).arity(), (0, 2));
        assert_eq!(TangleExpr::generator(Gen::U).arity(), (2, 0));
        assert_eq!(TangleExpr::id0().arity(), (0, 0));
    }

    #[test]
    fn compose_arities() {
        let a = TangleExpr::generator(Gen::A);
        let u = TangleExpr::generator(Gen::U);
        let loop_ = TangleExpr::compose(a, u);
        assert_eq!(loop_.arity(), (0, 0));
        let i = TangleExpr::generator(Gen::I);
        let x = TangleExpr::generator(Gen::X);
        assert!(matches!(
            TangleExpr::try_compose(i, x),
            Err(TangleError::ComposeArity { us: 1, ut: 1, ls: 2, lt: 2 })
        ));
    }

    #[test]
    fn unit_laws_are_structural() {
        let a = TangleExpr::generator(Gen::A);
        assert_eq!(TangleExpr::try_compose(TangleExpr::id0(), a.clone()).unwrap(), a);
        let u = TangleExpr::generator(Gen::U);
        assert_eq!(TangleExpr::try_compose(u.clone(), TangleExpr::id0()).unwrap(), u);
        let h = TangleExpr::generator(Gen::X);
        assert_eq!(TangleExpr::tensor(h.clone(), TangleExpr::id0()), h);
        assert_eq!(TangleExpr::tensor(TangleExpr::id0(), h.clone()), h);
    }

    #[test]
    fn cap_cup_shapes() {
        let (u1, a1) = cap_cup(1);
        assert_eq!(u1, TangleExpr::generator(Gen::U));
        assert_eq!(a1, TangleExpr::generator(Gen::A));
        let (u2, a2) = cap_cup(2);
        assert_eq!(u2.arity(), (4, 0));
        assert_eq!(a2.arity(), (0, 4));
        // U_2 = (I ⊗ U ⊗ I) ∘ U
        let stage = TangleExpr::tensor(
            TangleExpr::generator(Gen::I),
            TangleExpr::tensor(TangleExpr::generator(Gen::U), TangleExpr::generator(Gen::I)),
        );
        let expect = TangleExpr::compose(stage, TangleExpr::generator(Gen::U));
        assert_eq!(u2, expect);
        let (_, a3) = cap_cup(3);
        assert_eq!(a3.arity(), (0, 6));
    }

    #[test]
    fn bend_arity_bookkeeping() {
        // D: n -> s+t  =>  bend_u(D): n+t -> s
        let d = LinTangle::generator(Gen::A); // 0 -> 2
        let bent = bend_u(&d, 1, 1).unwrap();
        assert_eq!(bent.arity(), (1, 1));
        let back = bend_a(&bent, 1, 1).unwrap();
        assert_eq!(back.arity(), (0, 2));
    }

    #[test]
    fn trace_closure_arity() {
        let d = LinTangle::generator(Gen::I);
        let tr = trace_closure(&d).unwrap();
        assert_eq!(tr.arity(), (0, 0));
        let bad = trace_closure(&LinTangle::generator(Gen::A));
        assert!(matches!(bad, Err(TangleError::NotSquare { s: 0, t: 2 })));
    }

    #[test]
    fn xop_eliminate_removes_xop() {
        let d = LinTangle::generator(Gen::Xop);
        let e = xop_eliminate(&d);
        assert_eq!(e.num_terms(), 3);
        let mut has_xop = false;
        for (expr, _) in e.terms() {
            expr.visit(&mut |node| {
                if let NodeKind::Leaf(Gen::Xop) = node.node_kind() {
                    has_xop = true;
                }
            });
        }
        assert!(!has_xop);
        assert_eq!(xop_eliminate(&LinTangle::generator(Gen::X)), LinTangle::generator(Gen::X));
    }

    #[test]
    fn parse_basics() {
        let loop_ = parse("A ; U").unwrap();
        assert_eq!(loop_.arity(), (0, 0));
        let u2 = parse("(I*U*I) ; U").unwrap();
        assert_eq!(u2, LinTangle::from_expr(cap_cup(2).0));
        let xx = parse("X ; X").unwrap();
        assert_eq!(xx.arity(), (2, 2));
        assert_eq!(parse("In(3)").unwrap().arity(), (3, 3));
        assert_eq!(parse("Un(2)").unwrap().arity(), (4, 0));
        assert_eq!(parse("An(2)").unwrap().arity(), (0, 4));
        assert_eq!(parse("I^3").unwrap().arity(), (3, 3));
    }

    #[test]
    fn parse_scalars() {
        let v = parse("X - q-q^-1 . (U ; A)").unwrap();
        assert_eq!(v.arity(), (2, 2));
        assert_eq!(v.num_terms(), 2);
        let w = parse("2 . I + I").unwrap();
        let coeff = w.terms().next().unwrap().1.clone();
        assert_eq!(coeff, RatFunc::from_int(3));
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse("A ;; U") {
            Err(TangleError::Parse { line: 1, col, .. }) => assert!(col >= 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse("I ; X") {
            Err(TangleError::Parse { line: 1, msg, .. }) => {
                assert!(msg.contains("1->1") && msg.contains("2->2"));
            }
            other => panic!("expected arity parse error, got {other:?}"),
        }
    }

    #[test]
    fn display_round_trip() {
        let samples = ["A ; U", "(I*U*I) ; U", "X ; X", "X - q-q^-1 . (U ; A)", "A*I ; I*U"];
        for s in samples {
            let v = parse(s).unwrap();
            let rendered = v.to_string();
            let back = parse(&rendered).unwrap();
            assert_eq!(back, v, "round trip failed for `{s}` -> `{rendered}`");
        }
    }
}
