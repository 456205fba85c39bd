//! The matrix side: weight/sign data of the symplectic vector representation,
//! the braiding operator and its inverse, the pairing operators, and the
//! evaluation functor from tangle expressions to exact sparse operators.
//!
//! For rank m the representation space V has dimension 2m with basis
//! v_1, ..., v_2m (0-based in code), i' := 2m+1-i, weights
//! rho = (m, m-1, ..., 1, -1, ..., -m) and signs eps_i = sign(rho_i). The
//! skew pairing satisfies (v_i, v_j) = eps_i when j = i' and 0 otherwise.
//!
//! Generator images: I -> id, X -> the braiding R, Xop -> R^-1, A -> the
//! coevaluation C, U -> the evaluation E. A morphism s->t becomes a
//! dim^t x dim^s matrix acting on column vectors; `Compose(f, g)` (f above g)
//! evaluates to `M(g) * M(f)`. The evaluation map is
//! E(v_i ⊗ v_j) = q^(-rho_i) * eps_j * [j = i']; see the inline test
//! `printed_evaluation_variant_fails` for why the eps factor sits on j alone.

use crate::exactla::{kron_apply, KronFactor, Operator};
use crate::qfield::{x_param, FieldError, Rat, RatFunc};
use crate::tangles::{cap_cup, Gen, LinTangle, NodeKind, TangleExpr};
use num::One;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum RepError {
    #[error("generator images violate `{identity}` at m = {m}")]
    ConstructionFailed { identity: String, m: u32 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Representation parameters for one rank m.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepParams {
    m: u32,
    dim: usize,
    rho: Vec<i64>,
    eps: Vec<i64>,
}

/// Builds the weight and sign tables for rank m.
pub fn build_rep(m: u32) -> RepParams {
    assert!(m >= 1, "rank must be positive");
    let dim = 2 * m as usize;
    let mut rho = Vec::with_capacity(dim);
    let mut eps = Vec::with_capacity(dim);
    for i in 0..dim {
        let v = if i < m as usize { m as i64 - i as i64 } else { m as i64 - i as i64 - 1 };
        rho.push(v);
        eps.push(v.signum());
    }
    RepParams { m, dim, rho, eps }
}

impl RepParams {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rho(&self) -> &[i64] {
        &self.rho
    }

    pub fn eps(&self) -> &[i64] {
        &self.eps
    }

    /// The partner index i' = 2m+1-i, 0-based.
    pub fn prime(&self, i: usize) -> usize {
        self.dim - 1 - i
    }

    /// Skew pairing table: (v_i, v_j) in {-1, 0, 1}.
    pub fn form(&self, i: usize, j: usize) -> i64 {
        if j == self.prime(i) {
            self.eps[i]
        } else {
            0
        }
    }

    /// The specialized loop value x = 1 - [2m+1].
    pub fn x_value(&self) -> RatFunc {
        x_param().specialize_r(self.m).expect("x has no pole at the specialization")
    }

    /// r = -q^(2m+1) as a scalar.
    pub fn r_value(&self) -> RatFunc {
        RatFunc::monomial(-Rat::one(), 2 * self.m as i64 + 1, 0)
    }
}

fn qpow(e: i64) -> RatFunc {
    RatFunc::monomial(Rat::one(), e, 0)
}

fn qmqinv() -> RatFunc {
    RatFunc::q().sub(&RatFunc::q().inv().unwrap())
}

/// The braiding operator, the pairing projector gamma = C∘E, and the inverse
/// braiding, all as exact (2m)^2 x (2m)^2 sparse matrices.
pub fn beta_gamma(params: &RepParams) -> (Operator, Operator, Operator) {
    let d = params.dim;
    let mut beta_entries: Vec<(usize, usize, RatFunc)> = Vec::new();
    let idx = |a: usize, b: usize| a * d + b;
    let qm = qmqinv();
    for i in 0..d {
        let ip = params.prime(i);
        // q E_ii ⊗ E_ii
        beta_entries.push((idx(i, i), idx(i, i), RatFunc::q()));
        // q^-1 E_{i,i'} ⊗ E_{i',i}
        beta_entries.push((idx(i, ip), idx(ip, i), qpow(-1)));
    }
    for i in 0..d {
        for j in 0..d {
            if i != j && i != params.prime(j) {
                // E_{i,j} ⊗ E_{j,i}
                beta_entries.push((idx(i, j), idx(j, i), RatFunc::one()));
            }
        }
    }
    for i in 0..d {
        for j in (i + 1)..d {
            // (q - q^-1) E_ii ⊗ E_jj
            beta_entries.push((idx(i, j), idx(i, j), qm.clone()));
            // -(q - q^-1) q^(rho_j - rho_i) eps_i eps_j E_{i,j'} ⊗ E_{i',j}
            let c = qm
                .mul(&qpow(params.rho[j] - params.rho[i]))
                .scale(&Rat::from_integer((-params.eps[i] * params.eps[j]).into()));
            beta_entries.push((idx(i, params.prime(i)), idx(params.prime(j), j), c));
        }
    }
    let beta = Operator::from_entries(d * d, d * d, beta_entries).with_arity(2, 2);

    let mut gamma_entries: Vec<(usize, usize, RatFunc)> = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let c = qpow(params.rho[j] - params.rho[i])
                .scale(&Rat::from_integer((params.eps[i] * params.eps[j]).into()));
            gamma_entries.push((idx(i, params.prime(i)), idx(params.prime(j), j), c));
        }
    }
    let gamma = Operator::from_entries(d * d, d * d, gamma_entries).with_arity(2, 2);

    // beta - beta^-1 = (q - q^-1)(id - gamma)
    let id = Operator::identity(d * d).with_arity(2, 2);
    let beta_inv = beta
        .sub(&id.sub(&gamma).unwrap().scale(&qm))
        .unwrap()
        .with_arity(2, 2);
    (beta, gamma, beta_inv)
}

/// The coevaluation C (a (2m)^2 column) and the evaluation E (a (2m)^2 row).
pub fn coev_ev(params: &RepParams) -> (Operator, Operator) {
    let d = params.dim;
    let mut c_entries = Vec::new();
    for k in 0..d {
        let v = qpow(-params.rho[k]).scale(&Rat::from_integer(params.eps[k].into()));
        c_entries.push((k * d + params.prime(k), 0, v));
    }
    let c = Operator::from_entries(d * d, 1, c_entries).with_arity(0, 2);
    let mut e_entries = Vec::new();
    for a in 0..d {
        let ap = params.prime(a);
        let v = qpow(-params.rho[a]).scale(&Rat::from_integer(params.eps[ap].into()));
        e_entries.push((0, a * d + ap, v));
    }
    let e = Operator::from_entries(1, d * d, e_entries).with_arity(2, 0);
    (c, e)
}

/// Deliberate single-entry corruptions for negative-control runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    /// Flip the sign of one entry of the braiding operator.
    BraidEntrySign,
    /// Flip the sign of one entry of the evaluation row.
    EvalEntrySign,
}

/// Cached generator images for one rank m; validated at construction.
pub struct FunctorImage {
    params: RepParams,
    op_x: Operator,
    op_xop: Operator,
    op_a: Operator,
    op_u: Operator,
    op_gamma: Operator,
}

impl FunctorImage {
    pub fn new(m: u32) -> Result<Self, RepError> {
        let fi = Self::build(m, None);
        fi.validate()?;
        Ok(fi)
    }

    /// Builds without validation, optionally corrupted; only negative-control
    /// checks use this.
    pub fn mutated(m: u32, mutation: Mutation) -> Self {
        Self::build(m, Some(mutation))
    }

    fn build(m: u32, mutation: Option<Mutation>) -> Self {
        let params = build_rep(m);
        let (mut beta, gamma, beta_inv) = beta_gamma(&params);
        let (c, mut e) = coev_ev(&params);
        match mutation {
            Some(Mutation::BraidEntrySign) => beta = flip_first_entry(&beta),
            Some(Mutation::EvalEntrySign) => e = flip_first_entry(&e),
            None => {}
        }
        FunctorImage {
            params,
            op_x: beta,
            op_xop: beta_inv,
            op_a: c,
            op_u: e,
            op_gamma: gamma,
        }
    }

    pub fn params(&self) -> &RepParams {
        &self.params
    }

    pub fn m(&self) -> u32 {
        self.params.m
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn braiding(&self) -> &Operator {
        &self.op_x
    }

    pub fn braiding_inv(&self) -> &Operator {
        &self.op_xop
    }

    pub fn coevaluation(&self) -> &Operator {
        &self.op_a
    }

    pub fn evaluation(&self) -> &Operator {
        &self.op_u
    }

    pub fn gamma(&self) -> &Operator {
        &self.op_gamma
    }

    fn gen_op(&self, g: Gen) -> Operator {
        match g {
            Gen::Id0 => Operator::identity(1).with_arity(0, 0),
            Gen::I => Operator::identity(self.params.dim).with_arity(1, 1),
            Gen::X => self.op_x.clone(),
            Gen::Xop => self.op_xop.clone(),
            Gen::A => self.op_a.clone(),
            Gen::U => self.op_u.clone(),
        }
    }

    /// Checks the six defining relations of the generator images, with
    /// r = -q^(2m+1). Ran at construction.
    fn validate(&self) -> Result<(), RepError> {
        let m = self.params.m;
        let fail = |identity: &str| RepError::ConstructionFailed {
            identity: identity.to_string(),
            m,
        };
        let d = self.params.dim;
        let id2 = Operator::identity(d * d);
        let qm = qmqinv();
        let r_inv = self.params.r_value().inv().unwrap();
        let x = &self.op_x;
        let gamma = self.op_a.matmul(&self.op_u).unwrap();
        if gamma != self.op_gamma {
            return Err(fail("gamma = C after E"));
        }
        // quadratic skein: X^2 = id + (q-q^-1)(X - r^-1 gamma)
        let lhs = x.matmul(x).unwrap();
        let rhs = id2
            .add(&x.sub(&gamma.scale(&r_inv)).unwrap().scale(&qm))
            .unwrap();
        if lhs != rhs {
            return Err(fail("quadratic skein"));
        }
        // braid relation on three strands
        let idd = Operator::identity(d);
        let x1 = x.kron(&idd);
        let x2 = idd.kron(x);
        let lhs = x1.matmul(&x2).unwrap().matmul(&x1).unwrap();
        let rhs = x2.matmul(&x1).unwrap().matmul(&x2).unwrap();
        if lhs != rhs {
            return Err(fail("braid relation"));
        }
        // R after C = r^-1 C
        if x.matmul(&self.op_a).unwrap() != self.op_a.scale(&r_inv) {
            return Err(fail("coevaluation twist"));
        }
        // E after C = x (closed loop)
        let loop_val = self.op_u.matmul(&self.op_a).unwrap();
        if loop_val.entry(0, 0) != self.params.x_value() {
            return Err(fail("loop value"));
        }
        // (C⊗id) then (id⊗R) = (id⊗C) then (R^-1⊗id)
        let lhs = x2.matmul(&self.op_a.kron(&idd)).unwrap();
        let rhs = self
            .op_xop
            .kron(&idd)
            .matmul(&idd.kron(&self.op_a))
            .unwrap();
        if lhs != rhs {
            return Err(fail("sliding"));
        }
        // (C⊗id) then (id⊗E) = id
        let lhs = idd.kron(&self.op_u).matmul(&self.op_a.kron(&idd)).unwrap();
        if !lhs.is_identity() {
            return Err(fail("straightening"));
        }
        // X Xop = id
        if !x.matmul(&self.op_xop).unwrap().is_identity() {
            return Err(fail("braiding inverse"));
        }
        Ok(())
    }

    /// Computes M(expr) * input without materializing large tensor factors:
    /// identity strands inside tensor products pass through positionally.
    pub fn apply(&self, e: &TangleExpr, input: Operator) -> Operator {
        match e.node_kind() {
            NodeKind::Leaf(Gen::Id0) => input,
            NodeKind::Leaf(Gen::I) => input,
            NodeKind::Leaf(g) => self.gen_op(g).matmul(&input).expect("arity-checked"),
            NodeKind::Compose(f, g) => {
                let mid = self.apply(f, input);
                self.apply(g, mid)
            }
            NodeKind::Tensor(_, _) => {
                let mut exprs = Vec::new();
                collect_tensor_factors(e, &mut exprs);
                let mut mats: Vec<Option<Operator>> = Vec::with_capacity(exprs.len());
                for fe in &exprs {
                    if fe.as_identity().is_some() {
                        mats.push(None);
                    } else {
                        mats.push(Some(self.eval_expr(fe)));
                    }
                }
                let factors: Vec<KronFactor> = exprs
                    .iter()
                    .zip(&mats)
                    .map(|(fe, m)| match m {
                        None => KronFactor::Id(self.dim_pow(fe.top())),
                        Some(op) => KronFactor::Mat(op),
                    })
                    .collect();
                kron_apply(&factors, &input)
            }
        }
    }

    fn dim_pow(&self, n: usize) -> usize {
        self.params.dim.pow(n as u32)
    }

    /// The image of a single expression as a dim^t x dim^s operator.
    pub fn eval_expr(&self, e: &TangleExpr) -> Operator {
        let (s, t) = e.arity();
        if let Some(k) = e.as_identity() {
            return Operator::identity(self.dim_pow(k)).with_arity(k, k);
        }
        let input = Operator::identity(self.dim_pow(s));
        self.apply(e, input).with_arity(s, t)
    }

    /// The image of a linear combination; coefficients are specialized at
    /// r = -q^(2m+1) first.
    pub fn eval(&self, lin: &LinTangle) -> Result<Operator, FieldError> {
        let (s, t) = lin.arity();
        let mut acc = Operator::zero(self.dim_pow(t), self.dim_pow(s));
        for (e, c) in lin.terms() {
            let coeff = c.specialize_r(self.params.m)?;
            if coeff.is_zero() {
                continue;
            }
            let img = self.eval_expr(e).scale(&coeff);
            acc = acc.add(&img).expect("all terms share one arity");
        }
        Ok(acc.with_arity(s, t))
    }

    /// The functor-side rotation of an operator N = F(D), D: s -> t, built
    /// from the same cap/cup sandwich as the expression-level dual.
    pub fn rep_dual(&self, n_op: &Operator, s: usize, t: usize) -> Operator {
        let (u_t, _) = cap_cup(t);
        let (_, a_s) = cap_cup(s);
        let c_nest = self.eval_expr(&a_s); // dim^2s x 1
        let e_nest = self.eval_expr(&u_t); // 1 x dim^2t
        let start = kron_apply(
            &[KronFactor::Id(self.dim_pow(t)), KronFactor::Mat(&c_nest)],
            &Operator::identity(self.dim_pow(t)),
        );
        let mid = kron_apply(
            &[
                KronFactor::Id(self.dim_pow(t)),
                KronFactor::Mat(n_op),
                KronFactor::Id(self.dim_pow(s)),
            ],
            &start,
        );
        kron_apply(
            &[KronFactor::Mat(&e_nest), KronFactor::Id(self.dim_pow(s))],
            &mid,
        )
        .with_arity(t, s)
    }
}

fn collect_tensor_factors<'a>(e: &'a TangleExpr, out: &mut Vec<&'a TangleExpr>) {
    match e.node_kind() {
        NodeKind::Tensor(a, b) => {
            collect_tensor_factors(a, out);
            collect_tensor_factors(b, out);
        }
        _ => out.push(e),
    }
}

fn flip_first_entry(op: &Operator) -> Operator {
    let mut entries: Vec<(usize, usize, RatFunc)> =
        op.entries().map(|(i, j, v)| (i, j, v.clone())).collect();
    entries.sort_by_key(|(i, j, _)| (*j, *i));
    if let Some(first) = entries.first_mut() {
        first.2 = first.2.neg();
    }
    let arity = op.arity();
    let mut out = Operator::from_entries(op.rows(), op.cols(), entries);
    if let Some((s, t)) = arity {
        out = out.with_arity(s, t);
    }
    out
}

/// The strand-placed operator pairs (beta_i, gamma_i), i = 1..n-1, acting on
/// dim^n. These are the images of the rank-n generator tangles.
pub fn bmw_action(n: usize, fi: &FunctorImage) -> Vec<(Operator, Operator)> {
    assert!(n >= 2);
    let d = fi.dim();
    let mut out = Vec::with_capacity(n - 1);
    for i in 1..n {
        let left = Operator::identity(d.pow((i - 1) as u32));
        let right = Operator::identity(d.pow((n - 1 - i) as u32));
        let beta_i = left.kron(fi.braiding()).kron(&right).with_arity(n, n);
        let gamma_i = left.kron(fi.gamma()).kron(&right).with_arity(n, n);
        out.push((beta_i, gamma_i));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfield::parse_ratfunc;

    fn rf(s: &str) -> RatFunc {
        parse_ratfunc(s).unwrap()
    }

    #[test]
    fn rep_tables_m1() {
        let p = build_rep(1);
        assert_eq!(p.rho(), &[1, -1]);
        assert_eq!(p.eps(), &[1, -1]);
        assert_eq!(p.form(0, 1), 1);
        assert_eq!(p.form(1, 0), -1);
        assert_eq!(p.form(0, 0), 0);
    }

    #[test]
    fn rep_tables_m2() {
        let p = build_rep(2);
        assert_eq!(p.rho(), &[2, 1, -1, -2]);
        for i in 0..4 {
            for j in 0..4 {
                if j != p.prime(i) {
                    assert_eq!(p.form(i, j), 0);
                }
            }
        }
    }

    #[test]
    fn braiding_diagonal_coefficient() {
        let p = build_rep(2);
        let (beta, _, _) = beta_gamma(&p);
        // coefficient of v_1⊗v_1 in beta(v_1⊗v_1) is q
        assert_eq!(beta.entry(0, 0), RatFunc::q());
    }

    #[test]
    fn functor_images_validate() {
        for m in 1..=2 {
            FunctorImage::new(m).unwrap();
        }
    }

    #[test]
    fn coevaluation_m1() {
        // alpha = q^-1 v_1⊗v_2 - q v_2⊗v_1
        let p = build_rep(1);
        let (c, _) = coev_ev(&p);
        assert_eq!(c.entry(1, 0), rf("q^-1"));
        assert_eq!(c.entry(2, 0), rf("-q"));
        assert!(c.entry(0, 0).is_zero());
        assert!(c.entry(3, 0).is_zero());
    }

    #[test]
    fn printed_evaluation_variant_fails() {
        // The variant E(v_i ⊗ v_j) = q^(-rho_i) eps_j (v_i, v_j), which
        // carries an extra eps_i through the pairing, breaks the closed-loop
        // value; the corrected map (no pairing factor) produces x.
        let p = build_rep(1);
        let (c, e) = coev_ev(&p);
        let loop_val = e.matmul(&c).unwrap().entry(0, 0);
        assert_eq!(loop_val, p.x_value());
        let mut variant_entries = Vec::new();
        for a in 0..p.dim() {
            let ap = p.prime(a);
            let v = qpow(-p.rho()[a])
                .scale(&Rat::from_integer((p.eps()[ap] * p.form(a, ap)).into()));
            variant_entries.push((0usize, a * p.dim() + ap, v));
        }
        let e_variant = Operator::from_entries(1, p.dim() * p.dim(), variant_entries);
        let variant_loop = e_variant.matmul(&c).unwrap().entry(0, 0);
        assert_ne!(variant_loop, p.x_value());
    }

    #[test]
    fn mutated_images_break_relations() {
        let fi = FunctorImage::mutated(1, Mutation::BraidEntrySign);
        assert!(fi.validate().is_err());
        let fi = FunctorImage::mutated(1, Mutation::EvalEntrySign);
        assert!(fi.validate().is_err());
    }

    #[test]
    fn closed_loop_eval() {
        use crate::tangles::parse;
        let fi = FunctorImage::new(1).unwrap();
        let loop_ = parse("A ; U").unwrap();
        let v = fi.eval(&loop_).unwrap();
        assert_eq!((v.rows(), v.cols()), (1, 1));
        assert_eq!(v.entry(0, 0), rf("-q^2-q^-2"));
    }

    #[test]
    fn straightening_eval() {
        use crate::tangles::parse;
        for m in 1..=2 {
            let fi = FunctorImage::new(m).unwrap();
            let d = parse("(A*I) ; (I*U)").unwrap();
            let v = fi.eval(&d).unwrap();
            assert!(v.is_identity());
        }
    }

    #[test]
    fn cap_slide_eval() {
        use crate::tangles::parse;
        for m in 1..=2u32 {
            let fi = FunctorImage::new(m).unwrap();
            let lhs = fi.eval(&parse("A ; X").unwrap()).unwrap();
            let r_inv = fi.params().r_value().inv().unwrap();
            let rhs = fi.eval(&parse("A").unwrap()).unwrap().scale(&r_inv);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn action_matches_tangle_placement() {
        let fi = FunctorImage::new(1).unwrap();
        let n = 3;
        let pairs = bmw_action(n, &fi);
        for i in 1..n {
            let t_tangle = TangleExpr::place2(TangleExpr::generator(Gen::X), i, n);
            let e_tangle = TangleExpr::place2(
                TangleExpr::compose(
                    TangleExpr::generator(Gen::U),
                    TangleExpr::generator(Gen::A),
                ),
                i,
                n,
            );
            assert_eq!(fi.eval_expr(&t_tangle), pairs[i - 1].0);
            assert_eq!(fi.eval_expr(&e_tangle), pairs[i - 1].1);
        }
    }
}
