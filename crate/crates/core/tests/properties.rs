use ltforge::lubin_tate::LtContext;
use ltforge::{FieldElement, LocalField, PadicScalar};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

const PREC: i64 = 120;

fn element(l: &LocalField, digits: &[i64]) -> FieldElement {
    let (f, e) = (l.f(), l.e());
    let coeffs: Vec<Vec<PadicScalar>> = (0..f)
        .map(|i| (0..e).map(|j| PadicScalar::from_i64(l.p(), digits[j * f + i], PREC)).collect())
        .collect();
    FieldElement::from_coeffs(l, &coeffs, PREC * e as i64).unwrap()
}

/// Fraction-free elimination over Z.
fn bareiss(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    let mut sign = 1;
    let mut prev = BigInt::from(1);
    for k in 0..n {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    prev * sign
}

fn vp(p: u64, x: &BigInt) -> i64 {
    let mut x = x.abs();
    let mut k = 0;
    while (&x % p).is_zero() {
        x /= p;
        k += 1;
    }
    k
}

/// `v_p(N(x))` from the integer matrix of multiplication by `x`.
fn norm_valuation(l: &LocalField, x: &FieldElement) -> i64 {
    let (f, e) = (l.f(), l.e());
    let mut basis = Vec::new();
    let z = FieldElement::zeta(l, PREC * e as i64);
    let w = FieldElement::uniformizer(l, PREC * e as i64);
    for j in 0..e {
        for i in 0..f {
            basis.push(&z.pow(i as u64) * &w.pow(j as u64));
        }
    }
    let cols: Vec<Vec<BigInt>> = basis
        .iter()
        .map(|b| {
            let y = x * b;
            (0..e)
                .flat_map(|j| (0..f).map(move |i| (i, j)))
                .map(|(i, j)| y.coeff(i, j).to_bigint().unwrap())
                .collect()
        })
        .collect();
    vp(l.p(), &bareiss(cols))
}

fn fields() -> Vec<LocalField> {
    vec![
        LocalField::pure(3, 1, 4, PREC).unwrap(),
        LocalField::pure(2, 2, 2, PREC).unwrap(),
        LocalField::pure(5, 1, 3, PREC).unwrap(),
        LocalField::pure(3, 2, 1, PREC).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn valuation_matches_norm(which in 0usize..4, digits in prop::collection::vec(-40i64..40, 4)) {
        let l = &fields()[which];
        let x = element(l, &digits);
        prop_assume!(!x.is_zero());
        prop_assert_eq!(norm_valuation(l, &x), l.f() as i64 * x.valuation().unwrap());
    }

    #[test]
    fn ring_axioms(which in 0usize..4, a in prop::collection::vec(-9i64..9, 4), b in prop::collection::vec(-9i64..9, 4), c in prop::collection::vec(-9i64..9, 4)) {
        let l = &fields()[which];
        let (x, y, z) = (element(l, &a), element(l, &b), element(l, &c));
        // equality of values; tracked precisions may differ
        prop_assert!((&(&(&x * &y) * &z) - &(&x * &(&y * &z))).is_zero());
        prop_assert!((&(&x * &(&y + &z)) - &(&(&x * &y) + &(&x * &z))).is_zero());
        prop_assert!((&(&x - &y) + &y - x.clone()).is_zero());
        if !y.is_zero() {
            prop_assert_eq!((&x * &y).valuation().ok(), x.valuation().ok().map(|v| v + y.valuation().unwrap()));
            let q = (&x * &y).div(&y).unwrap();
            prop_assert!((&q - &x).is_zero());
        }
    }

    #[test]
    fn scalar_division(a in 1i64..100_000, b in 1i64..100_000, p in prop::sample::select(vec![2u64, 3, 5, 7])) {
        let x = PadicScalar::from_i64(p, a, 60);
        let y = PadicScalar::from_i64(p, b, 60);
        let back = &x.div(&y).unwrap() * &y;
        prop_assert!((&back - &x).is_zero());
        prop_assert_eq!((&x * &y).valuation(), Some(x.valuation().unwrap() + y.valuation().unwrap()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn log_is_additive(a in prop::collection::vec(0i64..3, 4), b in prop::collection::vec(0i64..3, 4), basic in any::<bool>()) {
        let l = LocalField::pure(3, 1, 4, 48).unwrap();
        let ctx = if basic {
            LtContext::basic(3, &BigInt::from(3), 64, 48).unwrap()
        } else {
            LtContext::multiplicative(3, 64, 48).unwrap()
        };
        // shift into the maximal ideal
        let w = FieldElement::uniformizer(&l, 48);
        let x = &element(&l, &a) * &w;
        let y = &element(&l, &b) * &w;
        let s = ctx.add_points(&x, &y).unwrap();
        let lhs = ctx.eval_log(&s).unwrap();
        let rhs = &ctx.eval_log(&x).unwrap() + &ctx.eval_log(&y).unwrap();
        prop_assert!((&lhs - &rhs).is_zero());
    }
}
