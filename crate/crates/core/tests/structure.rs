use ltforge::lubin_tate::LtContext;
use ltforge::structure::*;
use ltforge::{Error, FieldElement, LocalField};
use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn q3_root() -> (LocalField, LtContext) {
    (
        LocalField::pure(3, 1, 4, 48).unwrap(),
        LtContext::multiplicative(3, 64, 48).unwrap(),
    )
}

#[test]
fn fourth_root_of_three_is_regular() {
    let (l, ctx) = q3_root();
    let r = regularity_check(&l, &ctx).unwrap();
    // (q - 1) | 4 but u^2 = -1 has no root in F_3
    assert!(r.ratio_integral);
    assert!(r.is_regular);
    assert!(r.witness.is_none());
    let b = basis_bl(&l, &ctx).unwrap();
    let levels: Vec<i64> = b.generators.iter().map(|g| g.level).collect();
    assert_eq!(levels, vec![1, 2, 4, 5]);
    let m = min_valuation(&l, &ctx).unwrap();
    assert_eq!(m.gamma, Some(1));
    assert_eq!(m.value, -1);
    assert_eq!(m.log_uniformizer, Some(-1));
    assert_eq!(m.generator_minimum, -1);
}

#[test]
fn cyclotomic_field_is_not_regular() {
    let ctx = LtContext::multiplicative(3, 64, 40).unwrap();
    let tf = ctx.torsion_field(1, 40).unwrap();
    let r = regularity_check(&tf.field, &ctx).unwrap();
    assert!(r.ratio_integral);
    assert!(!r.is_regular);
    assert!(matches!(basis_bl(&tf.field, &ctx), Err(Error::NotRegular)));
    let s = spanning_sl(&tf.field, &ctx).unwrap();
    assert_eq!(s.len(), tf.field.degree() + tf.field.f());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // e / (q - 1) = 1: the kernel sits exactly there
    let rep = induced_map_check(&tf.field, &ctx, 1, &mut rng).unwrap();
    assert!(!rep.injective);
    assert!(rep.kernel_witness.is_some());
    let rep = induced_map_check(&tf.field, &ctx, 2, &mut rng).unwrap();
    assert!(rep.is_isomorphism());
    assert_eq!(rep.target_level, 4);
    let m = min_valuation(&tf.field, &ctx).unwrap();
    assert_eq!(m.value, 2);
}

#[test]
fn induced_maps_in_regular_field() {
    let (l, ctx) = q3_root();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 1..=4 {
        let rep = induced_map_check(&l, &ctx, i, &mut rng).unwrap();
        assert!(rep.is_isomorphism(), "{rep:?}");
        assert_eq!(rep.target_level, pi_level(3, 4, i));
    }
}

#[test]
fn regularity_is_independent_of_uniformiser() {
    let ctx = LtContext::multiplicative(3, 64, 40).unwrap();
    let tf = ctx.torsion_field(1, 40).unwrap();
    let w = FieldElement::uniformizer(&tf.field, 40);
    let u = FieldElement::from_i64(&tf.field, 2, 40) + FieldElement::from_i64(&tf.field, 3, 40) * w.clone();
    let r2 = regularity_with_uniformizer(&tf.field, &ctx, &(&u * &w)).unwrap();
    assert!(!r2.is_regular);
}

#[test]
fn lt_sets_at_level_one() {
    let ctx = LtContext::multiplicative(3, 64, 40).unwrap();
    let (tf, s1, b1) = lt_sets(&ctx, 1, 40).unwrap();
    assert_eq!(s1.len(), 3);
    assert_eq!(b1.len(), 2);
    assert_eq!(tf.field.degree(), 2);
    // log(lambda) = 0 lies trivially in the span
    let x = tf.lambda.pow(5);
    let lx = ctx.eval_log(&x).unwrap();
    let c = coords_in_span(&lx, &b1.elements()).unwrap();
    assert_eq!(c.len(), 2);
}

#[test]
fn log_basis_has_full_rank() {
    let (l, ctx) = q3_root();
    let lb = log_basis(&l, &ctx).unwrap();
    let det = coordinate_determinant(&lb.elements()).unwrap();
    assert!(!det.is_zero());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = FieldElement::random_with_valuation(&l, &mut rng, 1, 48).unwrap();
    let lx = ctx.eval_log(&x).unwrap();
    let c = coords_in_span(&lx, &lb.elements()).unwrap();
    // coordinates of a log are integral in the log basis
    assert!(c.iter().all(|a| a.is_integral()), "{c:?}");
}

#[test]
fn coords_detects_rank_deficiency() {
    let l = LocalField::pure(3, 1, 2, 20).unwrap();
    let w = FieldElement::uniformizer(&l, 20);
    let a = w.clone();
    let b = w.mul_int(&BigInt::from(7));
    assert!(matches!(coords_in_span(&w, &[a, b]), Err(Error::RankDeficient)));
    let one = FieldElement::one(&l, 20);
    assert!(matches!(coords_in_span(&one, &[w]), Err(Error::NotInSpan)));
}

#[test]
fn valuation_formula_in_regular_field() {
    let (l, ctx) = q3_root();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for v in 1..=6 {
        let x = FieldElement::random_with_valuation(&l, &mut rng, v, 48).unwrap();
        let c = valuation_certificate(&l, &ctx, &x, true).unwrap();
        assert!(c.holds, "{c:?}");
        assert_eq!(c.relation, Relation::Equality);
    }
}

#[test]
fn expansion_in_regular_basis_recombines() {
    let l = LocalField::pure(3, 1, 4, 24).unwrap();
    let ctx = LtContext::multiplicative(3, 64, 24).unwrap();
    let b = basis_bl(&l, &ctx).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let x = FieldElement::random_with_valuation(&l, &mut rng, 1, 24).unwrap();
    let ex = expand_in_generators(&x, &b, &ctx).unwrap();
    assert_eq!(ex.digits.len(), 4);
    assert!(!ex.steps.is_empty());
}

#[test]
fn expansion_gets_stuck_without_top_level() {
    let ctx = LtContext::multiplicative(3, 64, 30).unwrap();
    let tf = ctx.torsion_field(1, 30).unwrap();
    let mut s = spanning_sl(&tf.field, &ctx).unwrap();
    s.generators.retain(|g| g.level != 3);
    let x = FieldElement::uniformizer(&tf.field, 30).pow(3);
    assert!(matches!(
        expand_in_generators(&x, &s, &ctx),
        Err(Error::StuckLevel { level: 3 })
    ));
}
