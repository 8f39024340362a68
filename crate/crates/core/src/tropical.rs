//! Exact one-variable piecewise-linear functions over the rationals.
//!
//! A [`TropicalPL`] is continuous on a closed interval whose ends may be
//! infinite. It is stored in canonical form: breakpoints are strictly
//! increasing, interior to the domain, and never separate two pieces of equal
//! slope. Crossings are solved exactly; there is no tolerance anywhere.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::rational::{fmt_decimal, fmt_q, int, parse_rational, Q};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TropicalError {
    #[error("point {0} is out of domain {1}")]
    OutOfDomain(String, String),
    #[error("incompatible domains {0} and {1}")]
    IncompatibleDomains(String, String),
    #[error("empty or inverted interval [{0}, {1}]")]
    InvalidInterval(String, String),
    #[error("pieces disagree at breakpoint {0}")]
    Discontinuous(String),
    #[error("breakpoints must be strictly increasing and interior to the domain")]
    BadBreakpoints,
    #[error("malformed piecewise-linear text: {0}")]
    Parse(String),
}

/// A closed interval with optional infinite ends (`None` means infinite).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Option<Q>,
    hi: Option<Q>,
}

impl Interval {
    pub fn new(lo: Option<Q>, hi: Option<Q>) -> Result<Self, TropicalError> {
        if let (Some(a), Some(b)) = (&lo, &hi) {
            if a >= b {
                return Err(TropicalError::InvalidInterval(fmt_q(a), fmt_q(b)));
            }
        }
        Ok(Interval { lo, hi })
    }

    pub fn closed(lo: Q, hi: Q) -> Result<Self, TropicalError> {
        Self::new(Some(lo), Some(hi))
    }

    pub fn real_line() -> Self {
        Interval { lo: None, hi: None }
    }

    pub fn lo(&self) -> Option<&Q> {
        self.lo.as_ref()
    }

    pub fn hi(&self) -> Option<&Q> {
        self.hi.as_ref()
    }

    pub fn contains(&self, s: &Q) -> bool {
        self.lo.as_ref().map_or(true, |a| a <= s) && self.hi.as_ref().map_or(true, |b| s <= b)
    }

    /// True if `s` lies strictly between the ends.
    pub fn contains_interior(&self, s: &Q) -> bool {
        self.lo.as_ref().map_or(true, |a| a < s) && self.hi.as_ref().map_or(true, |b| s < b)
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        let lo_ok = match (&other.lo, &self.lo) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => a <= b,
        };
        let hi_ok = match (&other.hi, &self.hi) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => b <= a,
        };
        lo_ok && hi_ok
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = self.lo.as_ref().map_or("-inf".to_string(), fmt_q);
        let hi = self.hi.as_ref().map_or("+inf".to_string(), fmt_q);
        write!(f, "{lo}..{hi}")
    }
}

impl FromStr for Interval {
    type Err = TropicalError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let (a, b) = text
            .split_once("..")
            .ok_or_else(|| TropicalError::Parse(format!("interval \"{text}\"")))?;
        let end = |t: &str, inf: &str| -> Result<Option<Q>, TropicalError> {
            if t == inf {
                Ok(None)
            } else {
                parse_rational(t)
                    .map(Some)
                    .map_err(|e| TropicalError::Parse(e.to_string()))
            }
        };
        Interval::new(end(a.trim(), "-inf")?, end(b.trim(), "+inf")?)
    }
}

/// Some point strictly inside `(lo, hi)`.
pub(crate) fn interior_point(lo: Option<&Q>, hi: Option<&Q>) -> Q {
    match (lo, hi) {
        (Some(a), Some(b)) => (a + b) / int(2),
        (None, Some(b)) => b - Q::one(),
        (Some(a), None) => a + Q::one(),
        (None, None) => Q::zero(),
    }
}

/// The affine map `s ↦ slope·s + intercept`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Affine {
    pub slope: Q,
    pub intercept: Q,
}

impl Affine {
    pub fn new(slope: Q, intercept: Q) -> Self {
        Affine { slope, intercept }
    }

    pub fn eval(&self, s: &Q) -> Q {
        &self.slope * s + &self.intercept
    }

    /// The unique crossing point with `other`, if the slopes differ.
    pub fn crossing(&self, other: &Affine) -> Option<Q> {
        if self.slope == other.slope {
            None
        } else {
            Some((&other.intercept - &self.intercept) / (&self.slope - &other.slope))
        }
    }

    fn combine(&self, other: &Affine, a: &Q, b: &Q) -> Affine {
        Affine {
            slope: a * &self.slope + b * &other.slope,
            intercept: a * &self.intercept + b * &other.intercept,
        }
    }
}

/// Continuous piecewise-linear function of one rational variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TropicalPL {
    domain: Interval,
    breakpoints: Vec<Q>,
    pieces: Vec<Affine>,
}

impl TropicalPL {
    pub fn affine(domain: Interval, slope: Q, intercept: Q) -> Self {
        TropicalPL {
            domain,
            breakpoints: Vec::new(),
            pieces: vec![Affine::new(slope, intercept)],
        }
    }

    pub fn constant(domain: Interval, value: Q) -> Self {
        Self::affine(domain, Q::zero(), value)
    }

    pub fn identity(domain: Interval) -> Self {
        Self::affine(domain, Q::one(), Q::zero())
    }

    /// Builds from explicit pieces, checking continuity and then
    /// canonicalising.
    pub fn from_pieces(
        domain: Interval,
        breakpoints: Vec<Q>,
        pieces: Vec<Affine>,
    ) -> Result<Self, TropicalError> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(TropicalError::BadBreakpoints);
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1])
            || breakpoints.iter().any(|b| !domain.contains_interior(b))
        {
            return Err(TropicalError::BadBreakpoints);
        }
        for (i, b) in breakpoints.iter().enumerate() {
            if pieces[i].eval(b) != pieces[i + 1].eval(b) {
                return Err(TropicalError::Discontinuous(fmt_q(b)));
            }
        }
        Ok(TropicalPL {
            domain,
            breakpoints,
            pieces,
        }
        .canonical())
    }

    /// Pointwise minimum of a nonempty family of affine maps.
    pub fn min_of_affine(domain: Interval, affines: &[Affine]) -> Self {
        let mut it = affines.iter();
        let first = it.next().expect("at least one affine map");
        let mut acc = Self::affine(domain.clone(), first.slope.clone(), first.intercept.clone());
        for a in it {
            let g = Self::affine(domain.clone(), a.slope.clone(), a.intercept.clone());
            acc = acc.pointwise_min(&g).expect("same domain");
        }
        acc
    }

    /// Pointwise maximum of a nonempty family of affine maps.
    pub fn max_of_affine(domain: Interval, affines: &[Affine]) -> Self {
        Self::min_of_affine(
            domain,
            &affines
                .iter()
                .map(|a| Affine::new(-&a.slope, -&a.intercept))
                .collect::<Vec<_>>(),
        )
        .neg()
    }

    pub fn domain(&self) -> &Interval {
        &self.domain
    }

    pub fn breakpoints(&self) -> &[Q] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Affine] {
        &self.pieces
    }

    /// Slopes from left to right.
    pub fn slopes(&self) -> Vec<Q> {
        self.pieces.iter().map(|p| p.slope.clone()).collect()
    }

    /// Sub-interval covered by piece `i`.
    pub fn piece_interval(&self, i: usize) -> (Option<&Q>, Option<&Q>) {
        let lo = if i == 0 {
            self.domain.lo()
        } else {
            Some(&self.breakpoints[i - 1])
        };
        let hi = if i + 1 == self.pieces.len() {
            self.domain.hi()
        } else {
            Some(&self.breakpoints[i])
        };
        (lo, hi)
    }

    fn piece_index(&self, s: &Q) -> usize {
        self.breakpoints.partition_point(|b| b < s)
    }

    /// The affine piece in force at `s` (the left one at a breakpoint).
    pub fn piece_at(&self, s: &Q) -> Result<&Affine, TropicalError> {
        if !self.domain.contains(s) {
            return Err(TropicalError::OutOfDomain(fmt_q(s), self.domain.to_string()));
        }
        Ok(&self.pieces[self.piece_index(s)])
    }

    pub fn eval(&self, s: &Q) -> Result<Q, TropicalError> {
        if !self.domain.contains(s) {
            return Err(TropicalError::OutOfDomain(fmt_q(s), self.domain.to_string()));
        }
        Ok(self.pieces[self.piece_index(s)].eval(s))
    }

    /// Slopes `(left, right)` at `s`; equal away from breakpoints.
    pub fn one_sided_slopes(&self, s: &Q) -> Result<(Q, Q), TropicalError> {
        if !self.domain.contains(s) {
            return Err(TropicalError::OutOfDomain(fmt_q(s), self.domain.to_string()));
        }
        let i = self.piece_index(s);
        let left = self.pieces[i].slope.clone();
        let right = if self.breakpoints.get(i) == Some(s) {
            self.pieces[i + 1].slope.clone()
        } else {
            left.clone()
        };
        Ok((left, right))
    }

    fn canonical(mut self) -> Self {
        let mut bps = Vec::with_capacity(self.breakpoints.len());
        let mut pieces: Vec<Affine> = Vec::with_capacity(self.pieces.len());
        let mut old_pieces = std::mem::take(&mut self.pieces).into_iter();
        pieces.push(old_pieces.next().expect("nonempty"));
        for (b, p) in self.breakpoints.drain(..).zip(old_pieces) {
            if pieces.last().map(|q| q.slope == p.slope).unwrap_or(false) {
                continue;
            }
            bps.push(b);
            pieces.push(p);
        }
        self.breakpoints = bps;
        self.pieces = pieces;
        self
    }

    fn check_same_domain(&self, other: &Self) -> Result<(), TropicalError> {
        if self.domain != other.domain {
            return Err(TropicalError::IncompatibleDomains(
                self.domain.to_string(),
                other.domain.to_string(),
            ));
        }
        Ok(())
    }

    /// Common refinement: `(lo, hi, piece of self, piece of other)` per cell.
    fn refine<'a>(&'a self, other: &'a Self) -> Vec<(Option<Q>, Option<Q>, &'a Affine, &'a Affine)> {
        let mut cuts: Vec<Q> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .cloned()
            .collect();
        cuts.sort();
        cuts.dedup();
        let mut ends: Vec<Option<Q>> = Vec::with_capacity(cuts.len() + 2);
        ends.push(self.domain.lo.clone());
        ends.extend(cuts.into_iter().map(Some));
        ends.push(self.domain.hi.clone());
        ends.windows(2)
            .map(|w| {
                let mid = interior_point(w[0].as_ref(), w[1].as_ref());
                (
                    w[0].clone(),
                    w[1].clone(),
                    &self.pieces[self.piece_index(&mid)],
                    &other.pieces[other.piece_index(&mid)],
                )
            })
            .collect()
    }

    /// Pointwise selection between the two functions, splitting each cell
    /// at the exact crossing point.
    fn select(&self, other: &Self, keep_self: impl Fn(&Q, &Q) -> bool) -> Result<Self, TropicalError> {
        self.check_same_domain(other)?;
        let mut bps = Vec::new();
        let mut pieces = Vec::new();
        for (lo, hi, f, g) in self.refine(other) {
            let mut cells: Vec<(Option<Q>, Option<Q>)> = Vec::new();
            match f.crossing(g) {
                Some(x)
                    if lo.as_ref().map_or(true, |a| a < &x)
                        && hi.as_ref().map_or(true, |b| &x < b) =>
                {
                    cells.push((lo.clone(), Some(x.clone())));
                    cells.push((Some(x), hi.clone()));
                }
                _ => cells.push((lo.clone(), hi.clone())),
            }
            for (a, b) in cells {
                let mid = interior_point(a.as_ref(), b.as_ref());
                let chosen = if keep_self(&f.eval(&mid), &g.eval(&mid)) { f } else { g };
                if let Some(a) = a {
                    if !pieces.is_empty() {
                        bps.push(a);
                    }
                }
                pieces.push(chosen.clone());
            }
        }
        Ok(TropicalPL {
            domain: self.domain.clone(),
            breakpoints: bps,
            pieces,
        }
        .canonical())
    }

    pub fn pointwise_min(&self, other: &Self) -> Result<Self, TropicalError> {
        self.select(other, |a, b| a <= b)
    }

    pub fn pointwise_max(&self, other: &Self) -> Result<Self, TropicalError> {
        self.select(other, |a, b| a >= b)
    }

    /// `alpha·self + beta·other`.
    pub fn affine_combine(&self, other: &Self, alpha: &Q, beta: &Q) -> Result<Self, TropicalError> {
        self.check_same_domain(other)?;
        let cells = self.refine(other);
        let bps = cells.iter().skip(1).filter_map(|c| c.0.clone()).collect();
        let pieces = cells.iter().map(|(_, _, f, g)| f.combine(g, alpha, beta)).collect();
        Ok(TropicalPL {
            domain: self.domain.clone(),
            breakpoints: bps,
            pieces,
        }
        .canonical())
    }

    pub fn add(&self, other: &Self) -> Result<Self, TropicalError> {
        self.affine_combine(other, &Q::one(), &Q::one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TropicalError> {
        self.affine_combine(other, &Q::one(), &-Q::one())
    }

    pub fn scale(&self, alpha: &Q) -> Self {
        if alpha.is_zero() {
            return Self::constant(self.domain.clone(), Q::zero());
        }
        TropicalPL {
            domain: self.domain.clone(),
            breakpoints: self.breakpoints.clone(),
            pieces: self
                .pieces
                .iter()
                .map(|p| Affine::new(alpha * &p.slope, alpha * &p.intercept))
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Q::one())
    }

    /// Adds the affine map `slope·s + intercept`.
    pub fn shift(&self, slope: &Q, intercept: &Q) -> Self {
        TropicalPL {
            domain: self.domain.clone(),
            breakpoints: self.breakpoints.clone(),
            pieces: self
                .pieces
                .iter()
                .map(|p| Affine::new(&p.slope + slope, &p.intercept + intercept))
                .collect(),
        }
        .canonical()
    }

    /// Restriction to a sub-interval of the domain.
    pub fn restrict(&self, domain: &Interval) -> Result<Self, TropicalError> {
        if !domain.is_subset_of(&self.domain) {
            return Err(TropicalError::IncompatibleDomains(
                self.domain.to_string(),
                domain.to_string(),
            ));
        }
        let first = match domain.lo() {
            Some(a) => self.breakpoints.partition_point(|b| b <= a),
            None => 0,
        };
        let last = match domain.hi() {
            Some(b) => self.breakpoints.partition_point(|x| x < b),
            None => self.breakpoints.len(),
        };
        Ok(TropicalPL {
            domain: domain.clone(),
            breakpoints: self.breakpoints[first..last].to_vec(),
            pieces: self.pieces[first..=last].to_vec(),
        })
    }

    /// Slopes non-increasing from left to right.
    pub fn is_concave(&self) -> bool {
        self.pieces.windows(2).all(|w| w[0].slope >= w[1].slope)
    }

    pub fn is_convex(&self) -> bool {
        self.pieces.windows(2).all(|w| w[0].slope <= w[1].slope)
    }

    /// First breakpoint where concavity fails, with the offending slopes.
    pub fn concavity_witness(&self) -> Option<(Q, Q, Q)> {
        self.pieces
            .windows(2)
            .zip(&self.breakpoints)
            .find(|(w, _)| w[0].slope < w[1].slope)
            .map(|(w, b)| (b.clone(), w[0].slope.clone(), w[1].slope.clone()))
    }

    /// Checks every slope is of the form `m/i` with `1 <= i <= rank`.
    pub fn certify_slopes(&self, rank: u32) -> SlopeCertificate {
        assert!(rank >= 1, "rank must be positive");
        let bound = BigInt::from(rank);
        let entries = self
            .pieces
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let witness = (p.slope.denom() <= &bound)
                    .then(|| (p.slope.numer().clone(), p.slope.denom().clone()));
                SlopeCheck {
                    piece: i,
                    slope: p.slope.clone(),
                    witness,
                }
            })
            .collect();
        SlopeCertificate { rank, entries }
    }

    /// Window used for sampling: infinite ends are cut one unit past the
    /// outermost feature.
    pub fn plot_window(&self) -> (Q, Q) {
        let lo = match self.domain.lo() {
            Some(a) => a.clone(),
            None => {
                let anchor = self
                    .breakpoints
                    .first()
                    .or(self.domain.hi())
                    .cloned()
                    .unwrap_or_else(Q::zero);
                anchor - Q::one()
            }
        };
        let hi = match self.domain.hi() {
            Some(b) => b.clone(),
            None => {
                let anchor = self
                    .breakpoints
                    .last()
                    .or(self.domain.lo())
                    .cloned()
                    .unwrap_or_else(Q::zero);
                anchor + Q::one()
            }
        };
        (lo, hi)
    }

    /// Evenly spaced exact samples over the plot window.
    pub fn sample_grid(&self, count: usize) -> Vec<(Q, Q)> {
        let (lo, hi) = self.plot_window();
        let count = count.max(2);
        let step = (&hi - &lo) / int(count as i64 - 1);
        (0..count)
            .map(|i| {
                let s = &lo + &step * int(i as i64);
                let v = self.pieces[self.piece_index(&s)].eval(&s);
                (s, v)
            })
            .collect()
    }

    /// TSV with columns `s`, `value` (exact) and `value_decimal`.
    pub fn to_tsv(&self, count: usize) -> String {
        let mut out = String::from("s\tvalue\tvalue_decimal\n");
        for (s, v) in self.sample_grid(count) {
            out.push_str(&format!("{}\t{}\t{}\n", fmt_q(&s), fmt_q(&v), fmt_decimal(&v)));
        }
        out
    }
}

impl fmt::Display for TropicalPL {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "domain={}", self.domain)?;
        if self.breakpoints.is_empty() {
            let anchor = self
                .domain
                .lo()
                .or(self.domain.hi())
                .cloned()
                .unwrap_or_else(Q::zero);
            let p = &self.pieces[0];
            write!(
                f,
                " slope={} anchor={}@{}",
                fmt_q(&p.slope),
                fmt_q(&anchor),
                fmt_q(&p.eval(&anchor))
            )
        } else {
            let knots: Vec<String> = self
                .breakpoints
                .iter()
                .zip(&self.pieces)
                .map(|(b, p)| format!("{}@{}", fmt_q(b), fmt_q(&p.eval(b))))
                .collect();
            write!(
                f,
                " left={} knots={} right={}",
                fmt_q(&self.pieces[0].slope),
                knots.join(";"),
                fmt_q(&self.pieces[self.pieces.len() - 1].slope)
            )
        }
    }
}

impl FromStr for TropicalPL {
    type Err = TropicalError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut domain = None;
        let mut slope = None;
        let mut left = None;
        let mut right = None;
        let mut anchor = None;
        let mut knots = None;
        let rat = |t: &str| parse_rational(t).map_err(|e| TropicalError::Parse(e.to_string()));
        let point = |t: &str| -> Result<(Q, Q), TropicalError> {
            let (s, v) = t
                .split_once('@')
                .ok_or_else(|| TropicalError::Parse(format!("knot \"{t}\"")))?;
            Ok((rat(s)?, rat(v)?))
        };
        for field in text.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| TropicalError::Parse(format!("field \"{field}\"")))?;
            match key {
                "domain" => domain = Some(value.parse::<Interval>()?),
                "slope" => slope = Some(rat(value)?),
                "left" => left = Some(rat(value)?),
                "right" => right = Some(rat(value)?),
                "anchor" => anchor = Some(point(value)?),
                "knots" => {
                    knots = Some(value.split(';').map(point).collect::<Result<Vec<_>, _>>()?)
                }
                other => return Err(TropicalError::Parse(format!("unknown key \"{other}\""))),
            }
        }
        let domain = domain.ok_or_else(|| TropicalError::Parse("missing domain".into()))?;
        match (slope, anchor, left, knots, right) {
            (Some(a), Some((s, v)), None, None, None) => {
                let intercept = v - &a * &s;
                if !domain.contains(&s) {
                    return Err(TropicalError::Parse("anchor outside domain".into()));
                }
                Ok(TropicalPL::affine(domain, a, intercept))
            }
            (None, None, Some(l), Some(knots), Some(r)) => {
                let mut pieces = Vec::with_capacity(knots.len() + 1);
                let (s0, v0) = &knots[0];
                pieces.push(Affine::new(l.clone(), v0 - &l * s0));
                for w in knots.windows(2) {
                    let (sa, va) = &w[0];
                    let (sb, vb) = &w[1];
                    if sb <= sa {
                        return Err(TropicalError::BadBreakpoints);
                    }
                    let m = (vb - va) / (sb - sa);
                    let c = va - &m * sa;
                    pieces.push(Affine::new(m, c));
                }
                let (sn, vn) = &knots[knots.len() - 1];
                pieces.push(Affine::new(r.clone(), vn - &r * sn));
                let bps = knots.into_iter().map(|(s, _)| s).collect();
                TropicalPL::from_pieces(domain, bps, pieces)
            }
            _ => Err(TropicalError::Parse(
                "expected either slope+anchor or left+knots+right".into(),
            )),
        }
    }
}

/// Outcome of checking one slope against the rank bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlopeCheck {
    pub piece: usize,
    pub slope: Q,
    /// `(m, i)` with `slope = m/i` and `i` minimal, when `i <= rank`.
    pub witness: Option<(BigInt, BigInt)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlopeCertificate {
    pub rank: u32,
    pub entries: Vec<SlopeCheck>,
}

impl SlopeCertificate {
    pub fn passes(&self) -> bool {
        self.entries.iter().all(|e| e.witness.is_some())
    }

    pub fn offending(&self) -> impl Iterator<Item = &SlopeCheck> {
        self.entries.iter().filter(|e| e.witness.is_none())
    }
}
