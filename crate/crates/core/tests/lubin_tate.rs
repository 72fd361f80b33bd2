use ltforge::lubin_tate::LtContext;
use ltforge::{FieldElement, LocalField};
use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn log_of_uniformiser_in_q3_fourth_root_of_3() {
    let l = LocalField::pure(3, 1, 4, 64).unwrap();
    let ctx = LtContext::multiplicative(3, 64, 64).unwrap();
    let w = FieldElement::uniformizer(&l, 64);
    let d = ctx.eval_log_detailed(&w).unwrap();
    assert_eq!(d.ell, 1);
    assert_eq!(d.value.valuation().unwrap(), -1);
    assert!(d.value.precision() >= 50, "{:?}", d);
}

#[test]
fn log_one_plus_p() {
    for p in [3u64, 5] {
        let l = LocalField::pure(p, 1, 1, 64).unwrap();
        let ctx = LtContext::multiplicative(p, 64, 64).unwrap();
        let x = FieldElement::from_i64(&l, p as i64, 64);
        assert_eq!(ctx.eval_log(&x).unwrap().valuation().unwrap(), 1);
    }
    let l = LocalField::pure(2, 1, 1, 64).unwrap();
    let ctx = LtContext::multiplicative(2, 64, 64).unwrap();
    let x = FieldElement::from_i64(&l, 2, 64);
    assert_eq!(ctx.eval_log(&x).unwrap().valuation().unwrap(), 2);
}

#[test]
fn exp_inverts_log_on_the_disc() {
    let l = LocalField::pure(3, 1, 4, 64).unwrap();
    let ctx = LtContext::multiplicative(3, 64, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for v in 3..8 {
        let x = FieldElement::random_with_valuation(&l, &mut rng, v, 64).unwrap();
        let y = ctx.eval_log(&x).unwrap();
        assert_eq!(y.valuation().unwrap(), v);
        let back = ctx.eval_exp(&y).unwrap();
        assert!((&back - &x).is_zero(), "v={v}");
        assert!(back.precision() >= 56);
    }
}

#[test]
fn torsion_level_one_is_cyclotomic() {
    let ctx = LtContext::multiplicative(5, 64, 64).unwrap();
    let t = ctx.torsion_field(1, 64).unwrap();
    assert_eq!(t.field.e(), 4);
    let want: Vec<BigInt> = [5, 10, 10, 5, 1].iter().map(|&x| BigInt::from(x)).collect();
    assert_eq!(t.defining_poly, want);
    let log = ctx.eval_log(&t.lambda).unwrap();
    assert!(log.is_zero());
}
