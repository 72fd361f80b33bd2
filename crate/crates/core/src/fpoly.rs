//! Dense polynomials over F_p and the residue field F_p[X]/(g).
//!
//! Coefficients are stored lowest degree first. These are tiny (degree at
//! most a handful) so everything is schoolbook.

pub type FpPoly = Vec<u64>;

pub fn trim(a: &mut FpPoly) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

pub fn degree(a: &[u64]) -> Option<usize> {
    a.iter().rposition(|&c| c != 0)
}

pub fn mul(p: u64, a: &[u64], b: &[u64]) -> FpPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    trim(&mut out);
    out
}

pub fn sub(p: u64, a: &[u64], b: &[u64]) -> FpPoly {
    let n = a.len().max(b.len());
    let mut out: FpPoly = (0..n)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            (x + p - y) % p
        })
        .collect();
    trim(&mut out);
    out
}

pub fn inv_mod_p(p: u64, a: u64) -> u64 {
    // Fermat
    let mut base = a % p;
    let mut exp = p - 2;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

/// Remainder of `a` modulo `m` (`m` nonzero).
pub fn rem(p: u64, a: &[u64], m: &[u64]) -> FpPoly {
    let mut r: FpPoly = a.to_vec();
    trim(&mut r);
    let dm = degree(m).expect("division by zero polynomial");
    let lead_inv = inv_mod_p(p, m[dm]);
    while let Some(dr) = degree(&r) {
        if dr < dm {
            break;
        }
        let c = r[dr] * lead_inv % p;
        let shift = dr - dm;
        for (i, &mc) in m.iter().enumerate().take(dm + 1) {
            r[shift + i] = (r[shift + i] + p - c * mc % p) % p;
        }
        trim(&mut r);
    }
    r
}

pub fn gcd(p: u64, a: &[u64], b: &[u64]) -> FpPoly {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let r = rem(p, &a, &b);
        a = b;
        b = r;
    }
    a
}

pub fn mul_mod(p: u64, a: &[u64], b: &[u64], m: &[u64]) -> FpPoly {
    rem(p, &mul(p, a, b), m)
}

pub fn pow_mod(p: u64, a: &[u64], mut exp: u128, m: &[u64]) -> FpPoly {
    let mut acc: FpPoly = vec![1];
    let mut base = rem(p, a, m);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(p, &acc, &base, m);
        }
        base = mul_mod(p, &base, &base, m);
        exp >>= 1;
    }
    rem(p, &acc, m)
}

/// Irreducibility of a monic polynomial by the distinct-degree test:
/// `g` of degree `f` is irreducible iff `gcd(X^(p^k) - X, g) = 1` for all
/// `k <= f/2`.
pub fn is_irreducible(p: u64, g: &[u64]) -> bool {
    let f = match degree(g) {
        Some(0) | None => return false,
        Some(d) => d,
    };
    if f == 1 {
        return true;
    }
    let x: FpPoly = vec![0, 1];
    let mut xpk = x.clone();
    for _ in 1..=f / 2 {
        xpk = pow_mod(p, &xpk, p as u128, g);
        let diff = sub(p, &xpk, &x);
        let d = gcd(p, &diff, g);
        if degree(&d) != Some(0) {
            return false;
        }
    }
    true
}

/// The monic irreducible polynomial of degree `f` whose lower coefficients,
/// read as base-p digits from the constant term up, form the smallest
/// number.
pub fn default_irreducible(p: u64, f: usize) -> FpPoly {
    if f == 1 {
        return vec![0, 1];
    }
    let count = p.pow(f as u32);
    for n in 0..count {
        let mut g = Vec::with_capacity(f + 1);
        let mut m = n;
        for _ in 0..f {
            g.push(m % p);
            m /= p;
        }
        g.push(1);
        if is_irreducible(p, &g) {
            return g;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// The residue field `F_p[X]/(g)` with elements as coordinate vectors of
/// length `f` on the basis `1, X, ..., X^(f-1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueField {
    pub p: u64,
    pub modulus: FpPoly,
}

impl ResidueField {
    pub fn new(p: u64, modulus: FpPoly) -> Self {
        ResidueField { p, modulus }
    }

    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }

    pub fn size(&self) -> u64 {
        self.p.pow(self.degree() as u32)
    }

    fn pad(&self, mut a: FpPoly) -> Vec<u64> {
        a.resize(self.degree(), 0);
        a
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        self.pad(mul_mod(self.p, a, b, &self.modulus))
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.p).collect()
    }

    pub fn scale(&self, c: u64, a: &[u64]) -> Vec<u64> {
        a.iter().map(|x| x * c % self.p).collect()
    }

    pub fn pow(&self, a: &[u64], exp: u128) -> Vec<u64> {
        self.pad(pow_mod(self.p, a, exp, &self.modulus))
    }

    pub fn is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&c| c == 0)
    }

    pub fn inv(&self, a: &[u64]) -> Option<Vec<u64>> {
        if self.is_zero(a) {
            return None;
        }
        Some(self.pow(a, self.size() as u128 - 2))
    }

    /// The `n`-th element in a fixed enumeration (base-p digits of `n`).
    pub fn element(&self, mut n: u64) -> Vec<u64> {
        (0..self.degree())
            .map(|_| {
                let d = n % self.p;
                n /= self.p;
                d
            })
            .collect()
    }

    pub fn elements(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        (0..self.size()).map(move |n| self.element(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn irreducibility_small_cases() {
        assert!(is_irreducible(2, &[1, 1, 1]));
        assert!(!is_irreducible(2, &[1, 0, 1]));
        assert!(is_irreducible(3, &[1, 0, 1]));
        assert!(!is_irreducible(5, &[1, 0, 1])); // -1 is a square mod 5
        assert!(is_irreducible(2, &[1, 1, 0, 1]));
        // (x^2+x+1)^2 over F_2 has no roots but is reducible
        assert!(!is_irreducible(2, &[1, 0, 1, 0, 1]));
    }

    #[test]
    fn default_polys() {
        assert_eq!(default_irreducible(2, 2), vec![1, 1, 1]);
        assert_eq!(default_irreducible(3, 2), vec![1, 0, 1]);
        assert_eq!(default_irreducible(5, 2), vec![2, 0, 1]);
    }

    #[test]
    fn residue_field_has_working_inverses() {
        let k = ResidueField::new(3, default_irreducible(3, 2));
        assert_eq!(k.size(), 9);
        for a in k.elements().skip(1) {
            let b = k.inv(&a).unwrap();
            assert_eq!(k.mul(&a, &b), vec![1, 0]);
        }
    }
}
