//! Integration checks for the algebra side: Yang–Baxter elements, kernel
//! elements, traces, generic equality, word bases and ideal dimensions.

use tanglebench::bmw::{
    double_factorial, generic_equal, ideal_dimension, image_rank_kernel, longest_yb,
    markov_trace, symbolic_trace, word_basis, yb_element, yb_factor, BMWElement, BmwBasisCtx,
    LetterKind, ReducedWord,
};
use tanglebench::qfield::{x_param, RatFunc};
use tanglebench::rep::FunctorImage;

#[test]
fn top_yang_baxter_element_vanishes_m1() {
    // the image of the rank-2 top element is exactly the zero 16x16 matrix
    let fi = FunctorImage::new(1).unwrap();
    let y2 = longest_yb(2).unwrap();
    let mut we = tanglebench::bmw::WordEvaluator::new(2, &fi);
    let img = we.eval(&y2).unwrap();
    assert_eq!((img.rows(), img.cols()), (4, 4));
    assert!(img.is_zero());
}

#[test]
fn top_yang_baxter_element_vanishes_m2() {
    let fi = FunctorImage::new(2).unwrap();
    let y3 = longest_yb(3).unwrap();
    let mut we = tanglebench::bmw::WordEvaluator::new(3, &fi);
    let img = we.eval(&y3).unwrap();
    assert_eq!((img.rows(), img.cols()), (64, 64));
    assert!(img.is_zero());
}

#[test]
fn rank2_projector_is_idempotent_at_faithful_point() {
    // F(Y_1(1)) at m = 1 is an idempotent 4x4 matrix
    let fi = FunctorImage::new(1).unwrap();
    let y = yb_factor(1, 1, 2).unwrap();
    let mut we = tanglebench::bmw::WordEvaluator::new(2, &fi);
    let img = we.eval(&y).unwrap();
    assert_eq!(img.matmul(&img).unwrap(), img);
}

#[test]
fn group_inverse_is_generic_identity() {
    let t = BMWElement::generator(LetterKind::T, 1, 2).unwrap();
    let tinv = BMWElement::generator(LetterKind::TInv, 1, 2).unwrap();
    let prod = t.word_mul(&tinv).unwrap();
    let cert = generic_equal(&prod, &BMWElement::identity(2), None).unwrap();
    assert!(cert.equal);
    assert!(cert.nodes.len() >= 3);
}

#[test]
fn exchange_identity_small() {
    // Y_1(1) Y_2(2) Y_1(1) = Y_2(1) Y_1(2) Y_2(1) in rank 3
    let lhs = yb_factor(1, 1, 3)
        .unwrap()
        .word_mul(&yb_factor(2, 2, 3).unwrap())
        .unwrap()
        .word_mul(&yb_factor(1, 1, 3).unwrap())
        .unwrap();
    let rhs = yb_factor(2, 1, 3)
        .unwrap()
        .word_mul(&yb_factor(1, 2, 3).unwrap())
        .unwrap()
        .word_mul(&yb_factor(2, 1, 3).unwrap())
        .unwrap();
    let cert = generic_equal(&lhs, &rhs, None).unwrap();
    assert!(cert.equal);
}

#[test]
fn two_reduced_words_same_element() {
    let w1 = ReducedWord::new(3, vec![1, 2, 1]).unwrap();
    let w2 = ReducedWord::new(3, vec![2, 1, 2]).unwrap();
    let cert =
        generic_equal(&yb_element(&w1).unwrap(), &yb_element(&w2).unwrap(), None).unwrap();
    assert!(cert.equal);
}

#[test]
fn top_element_is_idempotent_generically() {
    for n in [2usize, 3] {
        let y = longest_yb(n).unwrap();
        let sq = y.word_mul(&y).unwrap();
        let cert = generic_equal(&sq, &y, None).unwrap();
        assert!(cert.equal, "idempotence failed at rank {n}");
    }
}

#[test]
fn markov_trace_examples() {
    // tr(1) at rank 1 is the loop value x
    let fi = FunctorImage::new(1).unwrap();
    let one1 = BMWElement::identity(1);
    let t = markov_trace(&one1, &fi).unwrap();
    assert!(t.routes_agree);
    assert_eq!(t.symbolic.clone().unwrap(), x_param());
    assert_eq!(t.value, x_param().specialize_r(1).unwrap());

    // tr(T_1) at rank 2 is r x, symbolically and at every m
    let t1 = BMWElement::generator(LetterKind::T, 1, 2).unwrap();
    for m in 1..=2 {
        let fi = FunctorImage::new(m).unwrap();
        let tr = markov_trace(&t1, &fi).unwrap();
        assert!(tr.routes_agree);
        let expect = RatFunc::r().mul(&x_param());
        assert_eq!(tr.symbolic.clone().unwrap(), expect);
        assert_eq!(tr.value, expect.specialize_r(m).unwrap());
    }

    // tr(E_1) at rank 2 is x (one loop)
    let e1 = BMWElement::generator(LetterKind::E, 1, 2).unwrap();
    let fi = FunctorImage::new(1).unwrap();
    let tr = markov_trace(&e1, &fi).unwrap();
    assert_eq!(tr.symbolic.clone().unwrap(), x_param());

    // a word where the last strand cannot be peeled falls back to matrices
    let hard = tanglebench::bmw::parse_element("T1 T1", 2).unwrap();
    assert!(symbolic_trace(&hard).unwrap().is_none());
    let tr = markov_trace(&hard, &fi).unwrap();
    assert!(!tr.routes_agree);
    // T_1^2 = 1 + (q-q^-1)(T_1 - r^-1 E_1), so the trace is computable by hand
    let qm = RatFunc::q().sub(&RatFunc::q().inv().unwrap());
    let x = x_param();
    let expect = x
        .mul(&x)
        .add(&qm.mul(&RatFunc::r().mul(&x).sub(&RatFunc::r().inv().unwrap().mul(&x))));
    assert_eq!(tr.value, expect.specialize_r(1).unwrap());
}

#[test]
fn word_basis_dimension_ladder() {
    for (n, expect) in [(1usize, 1u64), (2, 3), (3, 15)] {
        let wb = word_basis(n, n as u32, 16).unwrap();
        assert_eq!(wb.dim as u64, expect, "rank {n}");
        assert_eq!(expect, double_factorial(2 * n as u64 - 1));
    }
}

#[test]
fn word_basis_rank4_is_105() {
    let wb = word_basis(4, 4, 16).unwrap();
    assert_eq!(wb.dim, 105);
}

#[test]
fn image_rank_and_kernel_rank2_m1() {
    // the images of {1, T_1, E_1} at m = 1 span a 2-dimensional space and
    // the kernel is the line through the rank-2 top element
    let fi = FunctorImage::new(1).unwrap();
    let wb = word_basis(2, 2, 16).unwrap();
    let (rank, kernel) = image_rank_kernel(&wb.words, &fi).unwrap();
    assert_eq!(rank, 2);
    assert_eq!(kernel.len(), 1);
    // the kernel vector is proportional to the coefficients of Y_1(1):
    // on (1, T_1, E_1) those are (q/[2], -1/[2], q^-1/[2])
    let y = yb_factor(1, 1, 2).unwrap();
    let coeffs: Vec<RatFunc> = wb
        .words
        .iter()
        .map(|w| {
            y.terms()
                .find(|(yw, _)| yw == &w)
                .map(|(_, c)| c.specialize_r(1).unwrap())
                .unwrap_or_else(RatFunc::zero)
        })
        .collect();
    // normalize to first nonzero = 1 like the kernel convention
    let lead_inv = coeffs.iter().find(|c| !c.is_zero()).unwrap().inv().unwrap();
    let normalized: Vec<RatFunc> = coeffs.iter().map(|c| c.mul(&lead_inv)).collect();
    assert_eq!(kernel[0], normalized);
}

#[test]
fn ideal_dimensions_match_kernel_dimensions() {
    // rank 2, m = 1: both routes give 1
    let mut ctx2 = BmwBasisCtx::new(2, 2).unwrap();
    let d21 = ideal_dimension(2, 1, &mut ctx2).unwrap();
    assert_eq!(d21, 1);
    let fi = FunctorImage::new(1).unwrap();
    let wb2 = word_basis(2, 2, 16).unwrap();
    let (rank21, kernel21) = image_rank_kernel(&wb2.words, &fi).unwrap();
    assert_eq!(wb2.dim - rank21, d21);
    assert_eq!(kernel21.len(), d21);
}

#[test]
fn ideal_dimension_rank3_m1_is_10() {
    let mut ctx3 = BmwBasisCtx::new(3, 2).unwrap();
    let d31 = ideal_dimension(3, 1, &mut ctx3).unwrap();
    assert_eq!(d31, 10);
    let fi = FunctorImage::new(1).unwrap();
    let wb3 = word_basis(3, 3, 16).unwrap();
    let (rank31, kernel31) = image_rank_kernel(&wb3.words, &fi).unwrap();
    assert_eq!(rank31, 5);
    assert_eq!(kernel31.len(), 10);
    assert_eq!(wb3.dim - rank31, d31);
}
