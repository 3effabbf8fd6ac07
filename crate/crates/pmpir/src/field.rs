//! Arithmetic in a prime field F_q.
//!
//! Every symbol in the system — message symbols, code symbols, query
//! entries, answers — is a [`FieldElement`]: a canonical residue in
//! `[0, q)` tagged with its [`PrimeField`]. Mixing elements of different
//! moduli is a programming error and panics.

use rand::RngCore;

use crate::{Error, Result};

/// Largest supported modulus. Products of two residues then fit in `u64`
/// without widening.
pub const MAX_MODULUS: u64 = (1 << 31) - 1;

/// A prime field F_q, `2 <= q <= 2^31 - 1`.
///
/// Primality is verified at construction by trial division, which is
/// instantaneous for moduli this small.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    q: u64,
}

impl PrimeField {
    pub fn new(q: u64) -> Result<Self> {
        if q > MAX_MODULUS {
            return Err(Error::ModulusTooLarge { q });
        }
        if !is_prime(q) {
            return Err(Error::NotPrime { q });
        }
        Ok(PrimeField { q })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// The canonical residue of `v`.
    #[inline]
    pub fn element(&self, v: u64) -> FieldElement {
        FieldElement {
            value: v % self.q,
            field: *self,
        }
    }

    #[inline]
    pub fn zero(&self) -> FieldElement {
        self.element(0)
    }

    #[inline]
    pub fn one(&self) -> FieldElement {
        self.element(1)
    }

    /// All q elements in value order. Intended for exhaustive checks at
    /// tiny moduli.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.q).map(move |v| self.element(v))
    }

    /// Draw a uniform element. Rejection sampling on the raw 64-bit word
    /// keeps every residue exactly equally likely.
    pub fn sample_uniform(&self, rng: &mut impl RngCore) -> FieldElement {
        // Accept x < floor(2^64 / q) * q; anything above would bias the
        // low residues.
        let limit = (u64::MAX / self.q) * self.q;
        loop {
            let x = rng.next_u64();
            if x < limit {
                return self.element(x % self.q);
            }
        }
    }
}

/// A canonical residue in `[0, q)` together with its field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    field: PrimeField,
}

impl FieldElement {
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    /// Multiplicative inverse via Fermat exponentiation.
    pub fn inv(&self) -> Result<FieldElement> {
        if self.value == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(self.field.q - 2))
    }

    /// Square-and-multiply exponentiation.
    pub fn pow(&self, mut e: u64) -> FieldElement {
        let q = self.field.q;
        let mut base = self.value;
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % q;
            }
            base = base * base % q;
            e >>= 1;
        }
        self.field.element(acc)
    }

    #[inline]
    fn assert_same_field(&self, other: &FieldElement) {
        assert_eq!(
            self.field.q, other.field.q,
            "field elements have different moduli ({} vs {})",
            self.field.q, other.field.q
        );
    }
}

impl std::ops::Add for FieldElement {
    type Output = FieldElement;
    #[inline]
    fn add(self, rhs: FieldElement) -> FieldElement {
        self.assert_same_field(&rhs);
        self.field.element(self.value + rhs.value)
    }
}

impl std::ops::Sub for FieldElement {
    type Output = FieldElement;
    #[inline]
    fn sub(self, rhs: FieldElement) -> FieldElement {
        self.assert_same_field(&rhs);
        self.field.element(self.value + self.field.q - rhs.value)
    }
}

impl std::ops::Mul for FieldElement {
    type Output = FieldElement;
    #[inline]
    fn mul(self, rhs: FieldElement) -> FieldElement {
        self.assert_same_field(&rhs);
        self.field.element(self.value * rhs.value)
    }
}

impl std::ops::Neg for FieldElement {
    type Output = FieldElement;
    #[inline]
    fn neg(self) -> FieldElement {
        self.field.element(self.field.q - self.value)
    }
}

impl std::fmt::Display for FieldElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Deterministic trial-division primality test; exact for every supported
/// modulus.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest prime strictly greater than `n`.
pub fn next_prime_above(n: u64) -> u64 {
    let mut c = n + 1;
    loop {
        if is_prime(c) {
            return c;
        }
        c += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn f13() -> PrimeField {
        PrimeField::new(13).unwrap()
    }

    #[test]
    fn construction_rejects_non_primes() {
        for q in [0u64, 1, 4, 9, 12, 100] {
            assert!(PrimeField::new(q).is_err(), "q={q} accepted");
        }
        for q in [2u64, 3, 5, 13, 101, 2147483647] {
            assert!(PrimeField::new(q).is_ok(), "q={q} rejected");
        }
        assert!(matches!(
            PrimeField::new(1 << 32),
            Err(Error::ModulusTooLarge { .. })
        ));
    }

    #[test]
    fn add_wraps() {
        let f = f13();
        assert_eq!((f.element(12) + f.element(1)).value(), 0);
        assert_eq!((f.element(0) + f.element(7)).value(), 7);
        assert_eq!((f.element(7) + f.element(9)).value(), 3);
    }

    #[test]
    fn mul_examples() {
        let f = f13();
        // 6*6 = 36 = 10 mod 13: the x14 coefficient stored by node 6.
        assert_eq!((f.element(6) * f.element(6)).value(), 10);
        assert_eq!((f.element(1) * f.element(11)).value(), 11);
        assert_eq!((f.element(0) * f.element(11)).value(), 0);
    }

    #[test]
    fn inverse_examples() {
        let f = f13();
        assert_eq!(f.element(1).inv().unwrap().value(), 1);
        assert_eq!(f.element(2).inv().unwrap().value(), 7);
        assert!(matches!(f.element(0).inv(), Err(Error::ZeroInverse)));
    }

    #[test]
    #[should_panic(expected = "different moduli")]
    fn mixed_moduli_rejected() {
        let a = f13().element(1);
        let b = PrimeField::new(5).unwrap().element(1);
        let _ = a + b;
    }

    #[test]
    fn field_axioms_exhaustive_small_q() {
        for q in [2u64, 3, 5, 13] {
            let f = PrimeField::new(q).unwrap();
            for a in f.elements() {
                for b in f.elements() {
                    assert_eq!(a + b, b + a);
                    assert_eq!(a * b, b * a);
                    assert_eq!(a + (-a), f.zero());
                    for c in f.elements() {
                        assert_eq!((a + b) + c, a + (b + c));
                        assert_eq!((a * b) * c, a * (b * c));
                        assert_eq!(a * (b + c), a * b + a * c);
                    }
                }
            }
        }
    }

    #[test]
    fn inverses_exhaustive_up_to_101() {
        for q in [3u64, 5, 7, 13, 31, 101] {
            let f = PrimeField::new(q).unwrap();
            for a in f.elements().skip(1) {
                assert_eq!(a.inv().unwrap() * a, f.one());
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let f = f13();
        let draw = |seed: u64| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            (0..64)
                .map(|_| f.sample_uniform(&mut rng).value())
                .collect::<Vec<_>>()
        };
        let a = draw(7);
        assert_eq!(a, draw(7), "same seed must replay the same sequence");
        assert_ne!(a, draw(8), "different seeds should diverge");
        assert!(a.iter().all(|&v| v < 13));
    }

    #[test]
    fn sampling_frequencies_within_three_sigma() {
        let f = PrimeField::new(5).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(20260810);
        let n = 100_000usize;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            counts[f.sample_uniform(&mut rng).value() as usize] += 1;
        }
        // sigma = sqrt(n * 1/5 * 4/5) ~ 126.5; allow 3 sigma around n/5.
        let expected = n / 5;
        for (v, &c) in counts.iter().enumerate() {
            let dev = c.abs_diff(expected);
            assert!(dev <= 380, "residue {v}: count {c} deviates {dev} > 3 sigma");
        }
    }

    #[test]
    fn prime_search() {
        assert_eq!(next_prime_above(100), 101);
        assert_eq!(next_prime_above(6), 7);
        assert_eq!(next_prime_above(13), 17);
    }
}
