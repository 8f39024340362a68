//! Laurent polynomials over the rationals and their Gauss norms.
//!
//! Norms are reported as base-`p` logarithms. `None` stands for `-inf`, the
//! log-norm of the zero polynomial.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_traits::{One, Signed, Zero};

use crate::padic::{abs_log, valp, Prime};
use crate::rational::{fmt_q, int, parse_rational, Q};
use crate::tropical::{Affine, Interval, TropicalPL};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LaurentError {
    #[error("norm of zero")]
    NormOfZero,
    #[error("pole inside disc: the disc of log-radius {s} around {c} contains 0")]
    PoleInsideDisc { c: String, s: String },
    #[error("recentering needs a nonzero centre")]
    ZeroCentre,
    #[error("truncation order must be at least 1")]
    BadTruncation,
    #[error("cannot parse Laurent polynomial \"{0}\": {1}")]
    Parse(String, String),
}

/// Finitely supported map from integer degree to nonzero rational.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LaurentPoly {
    coeffs: BTreeMap<i64, Q>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        Self::monomial(c, 0)
    }

    /// `c·t^k`.
    pub fn monomial(c: Q, k: i64) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(k, c);
        }
        LaurentPoly { coeffs }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (i64, Q)>) -> Self {
        let mut p = Self::zero();
        for (k, c) in terms {
            p.add_term(k, c);
        }
        p
    }

    fn add_term(&mut self, k: i64, c: Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(k).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&k);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: i64) -> Q {
        self.coeffs.get(&k).cloned().unwrap_or_else(Q::zero)
    }

    /// Nonzero terms in increasing degree.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &Q)> {
        self.coeffs.iter().map(|(k, c)| (*k, c))
    }

    pub fn min_degree(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_degree(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn has_negative_support(&self) -> bool {
        self.min_degree().map_or(false, |k| k < 0)
    }

    /// `d/dt`.
    pub fn derive(&self) -> Self {
        Self::from_terms(
            self.terms()
                .filter(|(k, _)| *k != 0)
                .map(|(k, c)| (k - 1, c * int(k))),
        )
    }

    /// Exact value at a rational point (the point must not be 0 when there
    /// are negative degrees).
    pub fn eval(&self, x: &Q) -> Q {
        self.terms()
            .map(|(k, c)| c * num_traits::Pow::pow(x, k as i32))
            .fold(Q::zero(), |a, b| a + b)
    }

    /// `log_p |f(η_{0,p^s})| = max_k (-v_p(a_k) + k s)`.
    pub fn gauss_norm_log(&self, s: &Q, p: Prime) -> Option<Q> {
        self.terms()
            .map(|(k, c)| int(-valp(c, p).expect("nonzero coefficient")) + int(k) * s)
            .max()
    }

    /// The convex function `s ↦ gauss_norm_log(f, s)` on the whole line.
    pub fn gauss_norm_pl(&self, p: Prime) -> Result<TropicalPL, LaurentError> {
        if self.is_zero() {
            return Err(LaurentError::NormOfZero);
        }
        let lines: Vec<Affine> = self
            .terms()
            .map(|(k, c)| Affine::new(int(k), int(-valp(c, p).expect("nonzero coefficient"))))
            .collect();
        Ok(TropicalPL::max_of_affine(Interval::real_line(), &lines))
    }

    /// Certified bounds on `log_p |f(η_{c,p^s})|`.
    ///
    /// The expansion in `u = t - c` is exact for polynomials. With negative
    /// powers it runs for at most `order` terms and stops early once the
    /// remaining terms provably cannot raise the norm; binomial coefficients
    /// of negative integers are integers, so the dropped tail is bounded by
    /// `max_k |a_k| |c|^k (p^s/|c|)^j`.
    pub fn recenter_norm_log(
        &self,
        c: &Q,
        s: &Q,
        p: Prime,
        order: usize,
    ) -> Result<NormBounds, LaurentError> {
        if c.is_zero() {
            return Err(LaurentError::ZeroCentre);
        }
        if order == 0 {
            return Err(LaurentError::BadTruncation);
        }
        let branch = int(abs_log(c, p).expect("nonzero"));
        if s >= &branch {
            // The disc around c of this radius already contains 0.
            if s > &branch && self.has_negative_support() {
                return Err(LaurentError::PoleInsideDisc {
                    c: fmt_q(c),
                    s: fmt_q(s),
                });
            }
            let v = self.gauss_norm_log(s, p);
            return Ok(NormBounds {
                lower: v.clone(),
                upper: v,
            });
        }

        if self.is_zero() {
            return Ok(NormBounds { lower: None, upper: None });
        }
        // In u = t - c the j-th coefficient is Σ_k a_k C(k, j) c^(k-j), and
        // |C(k, j)| <= 1, so its log-norm at radius p^s is at most
        // M + j (s - branch) with M = max_k (log|a_k| + k branch).
        let step = s - &branch;
        let m = self
            .terms()
            .map(|(k, a)| int(-valp(a, p).expect("nonzero")) + int(k) * &branch)
            .max()
            .expect("nonzero");
        let polynomial = !self.has_negative_support();
        let last = self.max_degree().expect("nonzero").max(0) as usize;
        let c_inv = Q::one() / c;
        // a_k C(k, j) c^(k-j) for the current j
        let mut parts: Vec<(i64, Q)> = self
            .terms()
            .map(|(k, a)| (k, a * num_traits::Pow::pow(c, k as i32)))
            .collect();
        let mut lower: Option<Q> = None;
        let mut j = 0usize;
        while if polynomial { j <= last } else { j < order } {
            let b = parts.iter().fold(Q::zero(), |acc, (_, x)| acc + x);
            if !b.is_zero() {
                let v = int(-valp(&b, p).expect("nonzero")) + int(j as i64) * s;
                lower = lower.max(Some(v));
            }
            for (k, x) in parts.iter_mut() {
                *x = &*x * int(*k - j as i64) / int(j as i64 + 1) * &c_inv;
            }
            j += 1;
            let rest = &m + int(j as i64) * &step;
            if lower.as_ref().is_some_and(|l| l >= &rest) {
                break;
            }
        }
        let rest = &m + int(j as i64) * &step;
        let upper = if polynomial || lower.as_ref().is_some_and(|l| l >= &rest) {
            lower.clone()
        } else {
            lower.clone().max(Some(rest))
        };
        Ok(NormBounds { lower, upper })
    }

    /// Substitutes `t ↦ t + c` (polynomials only).
    pub fn shift(&self, c: &Q) -> Option<Self> {
        if self.has_negative_support() {
            return None;
        }
        let mut out = Self::zero();
        for (k, a) in self.terms() {
            let k = k as usize;
            let mut binom = Q::one();
            for j in 0..=k {
                out.add_term(j as i64, a * &binom * num_traits::Pow::pow(c, (k - j) as i32));
                binom = binom * int((k - j) as i64) / int(j as i64 + 1);
            }
        }
        Some(out)
    }
}

/// Two-sided bounds on a log-norm; `None` means `-inf`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormBounds {
    pub lower: Option<Q>,
    pub upper: Option<Q>,
}

impl NormBounds {
    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;

    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (k, c) in rhs.terms() {
            out.add_term(k, c.clone());
        }
        out
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;

    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (k, c) in rhs.terms() {
            out.add_term(k, -c);
        }
        out
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;

    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (i, a) in self.terms() {
            for (j, b) in rhs.terms() {
                out.add_term(i + j, a * b);
            }
        }
        out
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;

    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(k, c)| (*k, -c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: LaurentPoly) -> LaurentPoly {
                (&self).$m(&rhs)
            }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (k, c)) in self.coeffs.iter().rev().enumerate() {
            let mag = if i == 0 { c.clone() } else { c.abs() };
            if i > 0 {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            }
            let var = match k {
                0 => String::new(),
                1 => "t".to_string(),
                k => format!("t^{k}"),
            };
            if var.is_empty() {
                f.write_str(&fmt_q(&mag))?;
            } else if mag.is_one() {
                f.write_str(&var)?;
            } else if mag == -Q::one() {
                write!(f, "-{var}")?;
            } else {
                write!(f, "{}*{var}", fmt_q(&mag))?;
            }
        }
        Ok(())
    }
}

impl FromStr for LaurentPoly {
    type Err = LaurentError;

    /// Terms `a/b*t^k` joined by `+` or `-`, e.g. `1 + 1/2*t^-2`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |msg: &str| LaurentError::Parse(text.to_string(), msg.to_string());
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(err("empty"));
        }
        let bytes = compact.as_bytes();
        let mut starts = vec![0];
        for i in 1..bytes.len() {
            if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'^' | b'*' | b'/' | b'+' | b'-') {
                starts.push(i);
            }
        }
        starts.push(bytes.len());
        let mut out = LaurentPoly::zero();
        for w in starts.windows(2) {
            let raw = &compact[w[0]..w[1]];
            let (negative, body) = match raw.as_bytes().first() {
                Some(b'+') => (false, &raw[1..]),
                Some(b'-') => (true, &raw[1..]),
                _ => (false, raw),
            };
            if body.is_empty() {
                return Err(err("dangling sign"));
            }
            let (coeff, degree) = match body.find('t') {
                None => (parse_rational(body).map_err(|e| err(&e.to_string()))?, 0),
                Some(pos) => {
                    let head = body[..pos].strip_suffix('*').unwrap_or(&body[..pos]);
                    let coeff = if head.is_empty() {
                        Q::one()
                    } else {
                        parse_rational(head).map_err(|e| err(&e.to_string()))?
                    };
                    let rest = &body[pos + 1..];
                    let degree = if rest.is_empty() {
                        1
                    } else {
                        rest.strip_prefix('^')
                            .ok_or_else(|| err("expected ^ after t"))?
                            .parse::<i64>()
                            .map_err(|_| err("bad exponent"))?
                    };
                    (coeff, degree)
                }
            };
            out.add_term(degree, if negative { -coeff } else { coeff });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use proptest::prelude::*;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn lp(s: &str) -> LaurentPoly {
        s.parse().unwrap()
    }

    #[test]
    fn derive_examples() {
        assert_eq!(lp("t^2").derive(), lp("2*t"));
        assert_eq!(lp("7").derive(), LaurentPoly::zero());
        assert_eq!(lp("t^-1").derive(), lp("-t^-2"));
    }

    #[test]
    fn gauss_norm_log_examples() {
        assert_eq!(lp("1 + 3*t").gauss_norm_log(&int(0), p(3)), Some(int(0)));
        assert_eq!(lp("t^-2").gauss_norm_log(&int(-1), p(5)), Some(int(2)));
        assert_eq!(lp("2 + t").gauss_norm_log(&ratio(-1, 2), p(2)), Some(ratio(-1, 2)));
        assert_eq!(LaurentPoly::zero().gauss_norm_log(&int(0), p(2)), None);
    }

    #[test]
    fn gauss_norm_pl_examples() {
        let f = lp("1 + 3*t").gauss_norm_pl(p(3)).unwrap();
        assert_eq!(f.breakpoints(), &[int(1)]);
        assert_eq!(f.slopes(), vec![int(0), int(1)]);
        assert_eq!(f.pieces()[0].intercept, int(0));
        assert_eq!(f.pieces()[1].intercept, int(-1));

        let m = lp("t^5").gauss_norm_pl(p(2)).unwrap();
        assert!(m.breakpoints().is_empty());
        assert_eq!(m.slopes(), vec![int(5)]);
        assert_eq!(m.pieces()[0].intercept, int(0));

        let c = lp("12").gauss_norm_pl(p(2)).unwrap();
        assert_eq!(c.eval(&int(7)).unwrap(), int(-2));

        assert_eq!(LaurentPoly::zero().gauss_norm_pl(p(2)), Err(LaurentError::NormOfZero));
    }

    #[test]
    fn recenter_examples() {
        let b = lp("t").recenter_norm_log(&int(1), &int(-1), p(2), 4).unwrap();
        assert_eq!(b, NormBounds { lower: Some(int(0)), upper: Some(int(0)) });
        let b = lp("t - 1").recenter_norm_log(&int(1), &int(-1), p(2), 4).unwrap();
        assert_eq!(b, NormBounds { lower: Some(int(-1)), upper: Some(int(-1)) });
        let b = lp("t^-1").recenter_norm_log(&int(1), &int(-2), p(3), 8).unwrap();
        assert_eq!(b, NormBounds { lower: Some(int(0)), upper: Some(int(0)) });
    }

    #[test]
    fn recenter_reports_pole_and_bad_input() {
        assert!(matches!(
            lp("t^-1").recenter_norm_log(&int(1), &int(1), p(2), 4),
            Err(LaurentError::PoleInsideDisc { .. })
        ));
        assert_eq!(
            lp("t").recenter_norm_log(&int(0), &int(-1), p(2), 4),
            Err(LaurentError::ZeroCentre)
        );
        // polynomial with a disc containing 0 is fine: same point as η_{0,r}
        let b = lp("t").recenter_norm_log(&int(1), &int(2), p(2), 1).unwrap();
        assert_eq!(b.lower, Some(int(2)));
    }

    #[test]
    fn recenter_straddles_when_truncation_is_too_short() {
        // 1/t - 1/(t^2) around c = 1: leading Taylor terms cancel.
        let f = lp("t^-1 - t^-2");
        let short = f.recenter_norm_log(&int(1), &int(-1), p(2), 1).unwrap();
        assert_eq!(short.lower, None);
        assert!(short.upper.is_some());
        let long = f.recenter_norm_log(&int(1), &int(-1), p(2), 40).unwrap();
        assert!(long.is_exact());
        // f(1 + u) = u + O(u^2) with unit coefficient, so |f| = 2^-1
        assert_eq!(long.lower, Some(int(-1)));
    }

    #[test]
    fn parse_and_display() {
        let f = lp("1 + 1/2*t^-2");
        assert_eq!(f.coeff(0), int(1));
        assert_eq!(f.coeff(-2), ratio(1, 2));
        assert_eq!(f.to_string(), "1 + 1/2*t^-2");
        assert_eq!(lp("-t + 3 - 2/4*t^-1").to_string(), "-t + 3 - 1/2*t^-1");
        assert_eq!(lp("t - t"), LaurentPoly::zero());
        assert_eq!(lp("0").to_string(), "0");
        assert!("1/0*t".parse::<LaurentPoly>().is_err());
        assert!("t^x".parse::<LaurentPoly>().is_err());
        assert!("0.5*t".parse::<LaurentPoly>().is_err());
        assert!("".parse::<LaurentPoly>().is_err());
    }

    fn poly() -> impl Strategy<Value = LaurentPoly> {
        prop::collection::vec((-4i64..5, -30i64..30, 1i64..12), 0..5).prop_map(|terms| {
            LaurentPoly::from_terms(terms.into_iter().map(|(k, n, d)| (k, ratio(n, d))))
        })
    }

    fn nonzero_poly() -> impl Strategy<Value = LaurentPoly> {
        poly().prop_filter("nonzero", |f| !f.is_zero())
    }

    fn s_value() -> impl Strategy<Value = Q> {
        (-12i64..12, 1i64..5).prop_map(|(n, d)| ratio(n, d))
    }

    fn prime() -> impl Strategy<Value = Prime> {
        prop::sample::select(vec![2u64, 3, 5]).prop_map(|n| Prime::new(n).unwrap())
    }

    proptest! {
        #[test]
        fn ring_axioms(f in poly(), g in poly(), h in poly()) {
            prop_assert_eq!(&f + &g, &g + &f);
            prop_assert_eq!(&f * &g, &g * &f);
            prop_assert_eq!(&(&f * &g) * &h, &f * &(&g * &h));
            prop_assert_eq!(&f * &(&g + &h), &(&f * &g) + &(&f * &h));
            prop_assert_eq!(&(&f - &g) + &g, f.clone());
            prop_assert_eq!(&f * &LaurentPoly::one(), f);
        }

        #[test]
        fn leibniz(f in poly(), g in poly()) {
            prop_assert_eq!((&f * &g).derive(), &(&f.derive() * &g) + &(&f * &g.derive()));
        }

        #[test]
        fn gauss_norm_is_multiplicative(f in nonzero_poly(), g in nonzero_poly(), s in s_value(), p in prime()) {
            let lhs = (&f * &g).gauss_norm_log(&s, p).unwrap();
            prop_assert_eq!(lhs, f.gauss_norm_log(&s, p).unwrap() + g.gauss_norm_log(&s, p).unwrap());
        }

        #[test]
        fn gauss_norm_is_ultrametric(f in nonzero_poly(), g in nonzero_poly(), s in s_value(), p in prime()) {
            let nf = f.gauss_norm_log(&s, p).unwrap();
            let ng = g.gauss_norm_log(&s, p).unwrap();
            match (&f + &g).gauss_norm_log(&s, p) {
                None => prop_assert_eq!(&nf, &ng),
                Some(n) => {
                    prop_assert!(n <= nf.clone().max(ng.clone()));
                    if nf != ng {
                        prop_assert_eq!(n, nf.max(ng));
                    }
                }
            }
        }

        #[test]
        fn gauss_norm_pl_is_convex_and_matches_pointwise(f in nonzero_poly(), s in s_value(), p in prime()) {
            let pl = f.gauss_norm_pl(p).unwrap();
            prop_assert!(pl.is_convex());
            prop_assert_eq!(pl.eval(&s).unwrap(), f.gauss_norm_log(&s, p).unwrap());
            for slope in pl.slopes() {
                prop_assert!(slope.is_integer());
            }
        }

        #[test]
        fn recenter_bounds_are_monotone_in_order(f in nonzero_poly(), cn in 1i64..40, depth in 1i64..4, p in prime()) {
            let c = int(cn);
            let branch = int(abs_log(&c, p).unwrap());
            let s = &branch - int(depth);
            let mut prev: Option<NormBounds> = None;
            for order in [1usize, 2, 4, 8, 16] {
                let b = f.recenter_norm_log(&c, &s, p, order).unwrap();
                prop_assert!(b.lower <= b.upper);
                if let Some(prev) = &prev {
                    prop_assert!(b.lower >= prev.lower);
                    prop_assert!(b.upper <= prev.upper);
                }
                prev = Some(b);
            }
        }

        #[test]
        fn recenter_is_exact_for_polynomials(coeffs in prop::collection::vec(-20i64..20, 1..5), cn in 1i64..20, depth in 1i64..4, p in prime()) {
            // Oracle: explicit Taylor shift, then the centred Gauss norm.
            let f = LaurentPoly::from_terms(coeffs.iter().enumerate().map(|(k, a)| (k as i64, int(*a))));
            prop_assume!(!f.is_zero());
            let c = int(cn);
            let s = int(abs_log(&c, p).unwrap()) - int(depth);
            let shifted = f.shift(&c).unwrap();
            let expected = shifted.gauss_norm_log(&s, p);
            let b = f.recenter_norm_log(&c, &s, p, 1).unwrap();
            prop_assert_eq!(b.lower, expected.clone());
            prop_assert_eq!(b.upper, expected);
        }

        #[test]
        fn display_parse_round_trip(f in poly()) {
            prop_assert_eq!(f.to_string().parse::<LaurentPoly>().unwrap(), f);
        }
    }
}
