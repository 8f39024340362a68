//! p-adic valuations over the rationals.
//!
//! The base field is `Q_p`, modelled by exact rationals carrying their exact
//! valuation. Absolute values are only ever handled through their base-`p`
//! logarithm `abs_log(q) = -v_p(q)`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::rational::Q;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PadicError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("valuation of zero")]
    ValuationOfZero,
}

/// A prime number, certified by trial division at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self, PadicError> {
        if p < 2 {
            return Err(PadicError::NotPrime(p));
        }
        let mut d = 2u64;
        while d.saturating_mul(d) <= p {
            if p % d == 0 {
                return Err(PadicError::NotPrime(p));
            }
            d += 1;
        }
        Ok(Prime(p))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn as_bigint(self) -> BigInt {
        BigInt::from(self.0)
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Exponent of `p` in a nonzero integer.
fn valp_int(n: &BigInt, p: &BigInt) -> i64 {
    debug_assert!(!n.is_zero());
    let mut n = n.abs();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// Exact p-adic valuation of a nonzero rational.
pub fn valp(q: &Q, p: Prime) -> Result<i64, PadicError> {
    if q.is_zero() {
        return Err(PadicError::ValuationOfZero);
    }
    let pb = p.as_bigint();
    Ok(valp_int(q.numer(), &pb) - valp_int(q.denom(), &pb))
}

/// `log_p |q|_p = -v_p(q)`.
pub fn abs_log(q: &Q, p: Prime) -> Result<i64, PadicError> {
    valp(q, p).map(|v| -v)
}

/// `v_p(n!)` by Legendre's formula `(n - s_p(n)) / (p - 1)`.
pub fn val_factorial(n: u64, p: Prime) -> u64 {
    let p = p.get();
    let mut digits = 0u64;
    let mut m = n;
    while m > 0 {
        digits += m % p;
        m /= p;
    }
    (n - digits) / (p - 1)
}

/// p-adic valuation, with `Infinity` for zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Valuation {
    Finite(i64),
    Infinity,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinity => None,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinity => f.write_str("+inf"),
        }
    }
}

/// A rational together with its exact valuation at a fixed prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValuedRational {
    value: Q,
    val: Valuation,
    prime: Prime,
}

impl ValuedRational {
    pub fn new(value: Q, prime: Prime) -> Self {
        let val = match valp(&value, prime) {
            Ok(v) => Valuation::Finite(v),
            Err(_) => Valuation::Infinity,
        };
        ValuedRational { value, val, prime }
    }

    pub fn value(&self) -> &Q {
        &self.value
    }

    pub fn val(&self) -> Valuation {
        self.val
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    /// `log_p |q|`, `None` for zero (i.e. `-inf`).
    pub fn abs_log(&self) -> Option<i64> {
        self.val.finite().map(|v| -v)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.prime, other.prime, "mixed primes");
        let val = match (self.val, other.val) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinity,
        };
        ValuedRational {
            value: &self.value * &other.value,
            val,
            prime: self.prime,
        }
    }

    /// Sums need the exact value: ultrametric cancellation can raise the
    /// valuation above the minimum.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.prime, other.prime, "mixed primes");
        ValuedRational::new(&self.value + &other.value, self.prime)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    #[test]
    fn prime_certification() {
        assert!(Prime::new(2).is_ok());
        assert!(Prime::new(97).is_ok());
        assert_eq!(Prime::new(1), Err(PadicError::NotPrime(1)));
        assert_eq!(Prime::new(91), Err(PadicError::NotPrime(91)));
    }

    #[test]
    fn valp_examples() {
        assert_eq!(valp(&int(12), p(2)), Ok(2));
        assert_eq!(valp(&ratio(1, 9), p(3)), Ok(-2));
        assert_eq!(valp(&int(5), p(2)), Ok(0));
        assert_eq!(valp(&int(0), p(5)), Err(PadicError::ValuationOfZero));
        assert_eq!(abs_log(&int(2), p(2)), Ok(-1));
    }

    /// Independent oracle: count factors of `p` in every `k <= n`.
    fn factorial_val_oracle(n: u64, p: u64) -> u64 {
        (1..=n)
            .map(|mut k| {
                let mut c = 0;
                while k % p == 0 {
                    k /= p;
                    c += 1;
                }
                c
            })
            .sum()
    }

    fn floor_sum(n: u64, p: u64) -> u64 {
        let mut s = 0;
        let mut q = p;
        while q <= n {
            s += n / q;
            q *= p;
        }
        s
    }

    #[test]
    fn val_factorial_examples() {
        assert_eq!(val_factorial(4, p(2)), 3);
        assert_eq!(val_factorial(0, p(7)), 0);
        assert_eq!(val_factorial(10, p(3)), 4);
    }

    #[test]
    fn val_factorial_matches_oracles() {
        for prime in [2u64, 3, 5, 7, 11] {
            for n in 0..400 {
                let v = val_factorial(n, p(prime));
                assert_eq!(v, factorial_val_oracle(n, prime), "n={n} p={prime}");
                assert_eq!(v, floor_sum(n, prime), "n={n} p={prime}");
            }
        }
    }

    #[test]
    fn factorial_ratio_bounded_and_approaches_limit_along_powers() {
        for prime in [2u64, 3, 5] {
            let limit = ratio(1, prime as i64 - 1);
            for n in 1..300u64 {
                let r = ratio(val_factorial(n, p(prime)) as i64, n as i64);
                assert!(r < limit);
            }
            let mut prev_gap = limit.clone();
            let mut q = prime;
            for _ in 0..6 {
                let r = ratio(val_factorial(q, p(prime)) as i64, q as i64);
                let gap = &limit - &r;
                assert!(gap < prev_gap);
                // (q - 1)/(p - 1)/q, so the gap is exactly 1/((p-1) q)
                assert_eq!(gap, ratio(1, (prime as i64 - 1) * q as i64));
                prev_gap = gap;
                q *= prime;
            }
        }
    }

    fn nonzero_rational() -> impl Strategy<Value = Q> {
        (
            (-5000i64..5000).prop_filter("nonzero", |n| *n != 0),
            1i64..5000,
        )
            .prop_map(|(n, d)| ratio(n, d))
    }

    proptest! {
        #[test]
        fn valp_is_multiplicative(a in nonzero_rational(), b in nonzero_rational(), idx in 0usize..4) {
            let prime = p([2, 3, 5, 7][idx]);
            let prod = &a * &b;
            prop_assert_eq!(valp(&prod, prime).unwrap(), valp(&a, prime).unwrap() + valp(&b, prime).unwrap());
        }

        #[test]
        fn valp_is_ultrametric(a in nonzero_rational(), b in nonzero_rational(), idx in 0usize..4) {
            let prime = p([2, 3, 5, 7][idx]);
            let x = ValuedRational::new(a, prime);
            let y = ValuedRational::new(b, prime);
            let s = x.add(&y);
            prop_assert!(s.val() >= x.val().min(y.val()));
            if x.val() != y.val() {
                prop_assert_eq!(s.val(), x.val().min(y.val()));
            }
            prop_assert_eq!(x.mul(&y).val(), ValuedRational::new(x.value() * y.value(), prime).val());
        }

        #[test]
        fn valuation_identity(a in nonzero_rational(), idx in 0usize..3) {
            // p^(-val) * |q|_p = 1, checked as: q / p^val is a p-adic unit
            let prime = p([2, 3, 5][idx]);
            let v = valp(&a, prime).unwrap();
            let pq = Q::from_integer(prime.as_bigint());
            let unit = &a / num_traits::pow::Pow::pow(&pq, v as i32);
            prop_assert_eq!(valp(&unit, prime).unwrap(), 0);
        }
    }
}
