//! Differential modules on discs and annuli and their radius of convergence.
//!
//! A module is given by its connection matrix `G` in the coordinate `t`.
//! With `G_1 = G` and `G_{n+1} = d(G_n) + G_n·G`, the embedded radius at a
//! point `x` is estimated at order `N` by
//!
//! ```text
//! log_p R^emb_N(x) = min( cap(x), min_{1<=n<=N} -(log_p |G_n(x)| + v_p(n!)) / n )
//! ```
//!
//! where `cap(x)` is the log-radius of the largest disc around `x` inside the
//! domain. Along the skeleton every term is an exact PL function of
//! `s = log_p r`, so the estimate is an exact [`TropicalPL`]. The true radius
//! takes a `liminf` over `n`; estimates are always tagged with their order.

use std::fmt;

use num_traits::Zero;

use crate::laurent::{LaurentError, LaurentPoly};
use crate::padic::{abs_log, val_factorial, Prime};
use crate::rational::{fmt_q, int, ratio, Q};
use crate::tropical::{interior_point, Interval, TropicalError, TropicalPL};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffModError {
    #[error("connection matrix must be square and nonempty")]
    NotSquare,
    #[error("annulus needs s1 < s2, got s1 = {0}, s2 = {1}")]
    BadAnnulus(String, String),
    #[error("entry ({0}, {1}) has negative degrees, i.e. a pole at the centre of the disc")]
    PoleInDomain(usize, usize),
    #[error("triangulation mark {0} is outside the skeleton {1}")]
    MarkOutOfDomain(String, String),
    #[error("S' must contain S")]
    NotRefinement,
    #[error("point eta(c = {c}, s = {s}) is out of domain")]
    OutOfDomain { c: String, s: String },
    #[error("truncation order must be at least 1")]
    BadOrder,
    #[error(transparent)]
    Laurent(#[from] LaurentError),
    #[error(transparent)]
    Tropical(#[from] TropicalError),
}

/// Open disc `D^-(0, p^s0)` or open annulus `C^-(0; p^s1, p^s2)`.
///
/// Skeleton coordinates are handled on the closed range (`s <= s0`, resp.
/// `s1 <= s <= s2`) so that boundary points can be probed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Domain {
    Disc { s0: Q },
    Annulus { s1: Q, s2: Q },
}

impl Domain {
    pub fn disc(s0: Q) -> Self {
        Domain::Disc { s0 }
    }

    pub fn annulus(s1: Q, s2: Q) -> Result<Self, DiffModError> {
        if s1 >= s2 {
            return Err(DiffModError::BadAnnulus(fmt_q(&s1), fmt_q(&s2)));
        }
        Ok(Domain::Annulus { s1, s2 })
    }

    pub fn is_disc(&self) -> bool {
        matches!(self, Domain::Disc { .. })
    }

    /// Range of `s` along the skeleton (the segment from the centre to the
    /// boundary for a disc).
    pub fn skeleton(&self) -> Interval {
        match self {
            Domain::Disc { s0 } => Interval::new(None, Some(s0.clone())),
            Domain::Annulus { s1, s2 } => Interval::closed(s1.clone(), s2.clone()),
        }
        .expect("validated at construction")
    }

    /// Log-radius of the largest disc around a skeleton point that stays in
    /// the domain: `s0` on a disc, `s` on an annulus.
    pub fn cap(&self) -> TropicalPL {
        match self {
            Domain::Disc { s0 } => TropicalPL::constant(self.skeleton(), s0.clone()),
            Domain::Annulus { s2, .. } => TropicalPL::identity(self.skeleton())
                .pointwise_min(&TropicalPL::constant(self.skeleton(), s2.clone()))
                .expect("same domain"),
        }
    }

    /// Skeleton coordinate that `η_{c, p^s}` retracts to, if the point lies
    /// in the domain.
    pub fn retraction(&self, c: &Q, s: &Q, p: Prime) -> Option<Q> {
        let r = if c.is_zero() {
            s.clone()
        } else {
            let branch = int(abs_log(c, p).expect("nonzero"));
            s.clone().max(branch)
        };
        self.skeleton().contains(&r).then_some(r)
    }

    fn validate_marks(&self, marks: &[Q]) -> Result<(), DiffModError> {
        let sk = self.skeleton();
        match marks.iter().find(|m| !sk.contains_interior(m)) {
            Some(m) => Err(DiffModError::MarkOutOfDomain(fmt_q(m), sk.to_string())),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Disc { s0 } => write!(f, "disc s0={}", fmt_q(s0)),
            Domain::Annulus { s1, s2 } => write!(f, "annulus s1={} s2={}", fmt_q(s1), fmt_q(s2)),
        }
    }
}

/// Finite set of marked skeleton points `η_{p^s}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Triangulation {
    marks: Vec<Q>,
}

impl Triangulation {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(mut marks: Vec<Q>) -> Self {
        marks.sort();
        marks.dedup();
        Triangulation { marks }
    }

    pub fn marks(&self) -> &[Q] {
        &self.marks
    }

    pub fn is_subset_of(&self, other: &Triangulation) -> bool {
        self.marks.iter().all(|m| other.marks.binary_search(m).is_ok())
    }
}

/// `log_p ρ_S` along the skeleton.
///
/// On an annulus every point of the skeleton sees the disc `D^-(x, |x|)`,
/// so `ρ_S(η_r) = r` whatever the marks. On a disc the component below the
/// first mark is itself a disc (constant radius), above it the components
/// are annuli (slope 1); with no marks the whole disc is one component.
pub fn log_rho(domain: &Domain, tri: &Triangulation) -> Result<TropicalPL, DiffModError> {
    domain.validate_marks(tri.marks())?;
    let sk = domain.skeleton();
    Ok(match domain {
        Domain::Annulus { .. } => TropicalPL::identity(sk),
        Domain::Disc { s0 } => match tri.marks().first() {
            None => TropicalPL::constant(sk, s0.clone()),
            Some(m) => TropicalPL::identity(sk.clone())
                .pointwise_max(&TropicalPL::constant(sk, m.clone()))?,
        },
    })
}

/// `log_p ρ_{S',S} = log_p ρ_{S'} - log_p ρ_S` for a refinement `S ⊆ S'`.
pub fn log_rho_relative(
    domain: &Domain,
    tri: &Triangulation,
    refined: &Triangulation,
) -> Result<TropicalPL, DiffModError> {
    if !tri.is_subset_of(refined) {
        return Err(DiffModError::NotRefinement);
    }
    Ok(log_rho(domain, refined)?.sub(&log_rho(domain, tri)?)?)
}

/// Square matrix of Laurent polynomials.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PolyMatrix {
    rows: Vec<Vec<LaurentPoly>>,
}

impl PolyMatrix {
    pub fn new(rows: Vec<Vec<LaurentPoly>>) -> Result<Self, DiffModError> {
        let m = rows.len();
        if m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(DiffModError::NotSquare);
        }
        Ok(PolyMatrix { rows })
    }

    pub fn identity(m: usize) -> Self {
        PolyMatrix {
            rows: (0..m)
                .map(|i| {
                    (0..m)
                        .map(|j| if i == j { LaurentPoly::one() } else { LaurentPoly::zero() })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &LaurentPoly {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<LaurentPoly>] {
        &self.rows
    }

    pub fn entries(&self) -> impl Iterator<Item = &LaurentPoly> {
        self.rows.iter().flatten()
    }

    pub fn is_zero(&self) -> bool {
        self.entries().all(LaurentPoly::is_zero)
    }

    pub fn derive(&self) -> Self {
        PolyMatrix {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(LaurentPoly::derive).collect())
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let m = self.rank();
        let rows = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        (0..m).fold(LaurentPoly::zero(), |acc, k| {
                            &acc + &(&self.rows[i][k] * &other.rows[k][j])
                        })
                    })
                    .collect()
            })
            .collect();
        PolyMatrix { rows }
    }

    pub fn add(&self, other: &Self) -> Self {
        PolyMatrix {
            rows: self
                .rows
                .iter()
                .zip(&other.rows)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        }
    }

    /// Entrywise maximum of the log-Gauss norms, `None` for the zero matrix.
    pub fn gauss_norm_pl(&self, p: Prime) -> Option<TropicalPL> {
        self.entries()
            .filter(|e| !e.is_zero())
            .map(|e| e.gauss_norm_pl(p).expect("nonzero"))
            .reduce(|a, b| a.pointwise_max(&b).expect("same domain"))
    }
}

/// Where a piece of a radius estimate comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Cap,
    Term(usize),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Cap => f.write_str("cap"),
            Source::Term(n) => write!(f, "{n}"),
        }
    }
}

/// `log_p R^emb_N` along the skeleton, at truncation order `N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadiusEstimate {
    pub order: usize,
    pub domain: Domain,
    pub on_skeleton: TropicalPL,
    /// For each piece of `on_skeleton`, every source that realises it.
    pub provenance: Vec<Vec<Source>>,
}

impl fmt::Display for RadiusEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "order={}", self.order)?;
        writeln!(f, "domain={}", self.domain)?;
        writeln!(f, "polygon={}", self.on_skeleton)?;
        let prov: Vec<String> = self
            .provenance
            .iter()
            .map(|srcs| srcs.iter().map(Source::to_string).collect::<Vec<_>>().join(","))
            .collect();
        writeln!(f, "provenance={}", prov.join("|"))
    }
}

/// Certified bounds on `log_p R^emb_N` at a point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadiusBounds {
    pub lower: Q,
    pub upper: Q,
}

impl RadiusBounds {
    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn contains(&self, v: &Q) -> bool {
        &self.lower <= v && v <= &self.upper
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffModule {
    prime: Prime,
    matrix: PolyMatrix,
    domain: Domain,
}

impl DiffModule {
    pub fn new(prime: Prime, matrix: PolyMatrix, domain: Domain) -> Result<Self, DiffModError> {
        if domain.is_disc() {
            for (i, row) in matrix.rows().iter().enumerate() {
                if let Some(j) = row.iter().position(LaurentPoly::has_negative_support) {
                    return Err(DiffModError::PoleInDomain(i, j));
                }
            }
        }
        Ok(DiffModule {
            prime,
            matrix,
            domain,
        })
    }

    /// Rank-one module with connection `g`.
    pub fn scalar(prime: Prime, g: LaurentPoly, domain: Domain) -> Result<Self, DiffModError> {
        Self::new(prime, PolyMatrix::new(vec![vec![g]])?, domain)
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn rank(&self) -> usize {
        self.matrix.rank()
    }

    pub fn matrix(&self) -> &PolyMatrix {
        &self.matrix
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// `[G_1, ..., G_N]`.
    pub fn iterate(&self, order: usize) -> Vec<PolyMatrix> {
        let mut out = Vec::with_capacity(order);
        if order == 0 {
            return out;
        }
        out.push(self.matrix.clone());
        while out.len() < order {
            let last = out.last().expect("nonempty");
            let next = last.derive().add(&last.mul(&self.matrix));
            out.push(next);
        }
        out
    }

    /// `-(f + v_p(n!)) / n` as a PL function.
    fn term(&self, norm: &TropicalPL, n: usize) -> TropicalPL {
        let vf = int(val_factorial(n as u64, self.prime) as i64);
        norm.shift(&Q::zero(), &vf).scale(&ratio(-1, n as i64))
    }

    /// Exact PL form of `log_p R^emb_N` along the skeleton.
    pub fn emb_radius_pl(&self, order: usize) -> Result<RadiusEstimate, DiffModError> {
        if order == 0 {
            return Err(DiffModError::BadOrder);
        }
        self.emb_from_iterates(&self.iterate(order))
    }

    fn emb_from_iterates(&self, iterates: &[PolyMatrix]) -> Result<RadiusEstimate, DiffModError> {
        let order = iterates.len();
        let sk = self.domain.skeleton();
        let cap = self.domain.cap();
        let mut sources = vec![(Source::Cap, cap.clone())];
        let mut acc = cap;
        for (i, g) in iterates.iter().enumerate() {
            let n = i + 1;
            if let Some(norm) = g.gauss_norm_pl(self.prime) {
                let term = self.term(&norm.restrict(&sk)?, n);
                acc = acc.pointwise_min(&term)?;
                sources.push((Source::Term(n), term));
            }
        }
        let provenance = (0..acc.pieces().len())
            .map(|i| {
                let (lo, hi) = acc.piece_interval(i);
                let mid = interior_point(lo, hi);
                let piece = &acc.pieces()[i];
                sources
                    .iter()
                    .filter(|(_, f)| f.piece_at(&mid).map_or(false, |a| a == piece))
                    .map(|(src, _)| *src)
                    .collect()
            })
            .collect();
        Ok(RadiusEstimate {
            order,
            domain: self.domain.clone(),
            on_skeleton: acc,
            provenance,
        })
    }

    /// Certified bounds on `log_p R^emb_N(η_{c, p^s})`.
    ///
    /// Skeleton points are exact. Off the skeleton each `G_n` is recentred
    /// at `c` with `tail` Taylor terms; the cap there is the log-radius of
    /// the branch, `log_p |c|` on an annulus.
    pub fn radius_log_at(
        &self,
        c: &Q,
        s: &Q,
        order: usize,
        tail: usize,
    ) -> Result<RadiusBounds, DiffModError> {
        let mut out = self.radius_log_at_many(&[(c.clone(), s.clone())], order, tail)?;
        Ok(out.pop().expect("one point"))
    }

    /// [`radius_log_at`](Self::radius_log_at) for several points, sharing
    /// the iterates. Points are evaluated on separate threads.
    pub fn radius_log_at_many(
        &self,
        points: &[(Q, Q)],
        order: usize,
        tail: usize,
    ) -> Result<Vec<RadiusBounds>, DiffModError> {
        if order == 0 {
            return Err(DiffModError::BadOrder);
        }
        let iterates = self.iterate(order);
        let skeleton = self.emb_from_iterates(&iterates)?.on_skeleton;
        std::thread::scope(|scope| {
            let handles: Vec<_> = points
                .iter()
                .map(|(c, s)| {
                    let (iterates, skeleton) = (&iterates, &skeleton);
                    scope.spawn(move || self.bounds_at(iterates, skeleton, c, s, tail))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("probe thread panicked"))
                .collect()
        })
    }

    fn bounds_at(
        &self,
        iterates: &[PolyMatrix],
        skeleton: &TropicalPL,
        c: &Q,
        s: &Q,
        tail: usize,
    ) -> Result<RadiusBounds, DiffModError> {
        let out_of_domain = || DiffModError::OutOfDomain {
            c: fmt_q(c),
            s: fmt_q(s),
        };
        let r = self
            .domain
            .retraction(c, s, self.prime)
            .ok_or_else(out_of_domain)?;
        if &r == s {
            let v = skeleton.eval(s)?;
            return Ok(RadiusBounds {
                lower: v.clone(),
                upper: v,
            });
        }
        let cap = match &self.domain {
            Domain::Disc { s0 } => s0.clone(),
            Domain::Annulus { .. } => r,
        };
        let mut lower = cap.clone();
        let mut upper = cap;
        for (i, g) in iterates.iter().enumerate() {
            if g.is_zero() {
                continue;
            }
            let n = i + 1;
            let mut norm_lo: Option<Q> = None;
            let mut norm_hi: Option<Q> = None;
            for e in g.entries().filter(|e| !e.is_zero()) {
                let b = e.recenter_norm_log(c, s, self.prime, tail)?;
                norm_lo = norm_lo.max(b.lower);
                norm_hi = norm_hi.max(b.upper);
            }
            let vf = int(val_factorial(n as u64, self.prime) as i64);
            let to_radius = |norm: Q| -(norm + &vf) / int(n as i64);
            if let Some(hi) = norm_hi {
                lower = lower.min(to_radius(hi));
            }
            if let Some(lo) = norm_lo {
                upper = upper.min(to_radius(lo));
            }
        }
        Ok(RadiusBounds { lower, upper })
    }
}

/// `log_p R_S = min(log_p R^emb - log_p ρ_S, 0)` along the skeleton.
pub fn normalize(est: &RadiusEstimate, tri: &Triangulation) -> Result<TropicalPL, DiffModError> {
    let rho = log_rho(&est.domain, tri)?;
    let zero = TropicalPL::constant(est.domain.skeleton(), Q::zero());
    Ok(est.on_skeleton.sub(&rho)?.pointwise_min(&zero)?)
}

/// `log_p R_{S'} = min(log_p R_S - log_p ρ_{S',S}, 0)`.
pub fn retriangulate(f: &TropicalPL, rho: &TropicalPL) -> Result<TropicalPL, DiffModError> {
    let zero = TropicalPL::constant(f.domain().clone(), Q::zero());
    Ok(f.sub(rho)?.pointwise_min(&zero)?)
}
