//! Convergence polygon of a differential module, with exact checks of its
//! shape: concavity, slope denominators, constancy along probed branches,
//! super-harmonicity, and the behaviour of the `ρ` normalisations.
//!
//! Orientation is fixed everywhere: on annuli `s` increases from the inner
//! to the outer boundary, on discs slopes are read from the centre to the
//! boundary.

use std::fmt;

use num_traits::{One, Zero};

use crate::diffmod::{
    log_rho, log_rho_relative, normalize, DiffModError, DiffModule, Domain, RadiusBounds,
    RadiusEstimate, Triangulation,
};
use crate::graph::{classify, GraphError, GraphPL, Harmonicity, MetrizedGraph};
use crate::padic::abs_log;
use crate::rational::{fmt_q, int, Q};
use crate::tropical::{Interval, SlopeCertificate, TropicalError, TropicalPL};

pub const ORIENTATION: &str =
    "orientation: annuli by increasing s; discs from centre to boundary";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolygonError {
    #[error("disc required")]
    DiscRequired,
    #[error("incomplete embedding: no value at {0}")]
    IncompleteEmbedding(String),
    #[error(transparent)]
    DiffMod(#[from] DiffModError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Tropical(#[from] TropicalError),
}

/// Three-valued outcome. Failures and inconclusive results carry an exact
/// witness that can be rechecked by hand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(String),
    Inconclusive { order: usize, witness: String },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("pass"),
            Verdict::Fail(w) => write!(f, "fail ({w})"),
            Verdict::Inconclusive { order, witness } => {
                write!(f, "inconclusive at order {order} ({witness})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentCheck {
    pub segment: Interval,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeResult {
    pub c: Q,
    pub s: Q,
    /// Skeleton coordinate the point retracts to.
    pub branch: Q,
    pub on_skeleton: bool,
    pub bounds: RadiusBounds,
    /// Skeleton value at the branch point.
    pub predicted: Q,
    pub verdict: Verdict,
}

/// Skeleton segments plus the probed branches where the radius was seen to
/// move. Only a lower approximation of the true controlling graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllingGraph {
    pub segments: Vec<Interval>,
    pub stubs: Vec<(Q, Q)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolygonReport {
    pub rank: usize,
    pub triangulation: Triangulation,
    pub estimate: RadiusEstimate,
    pub normalized: TropicalPL,
    pub breakpoints: Vec<Q>,
    pub segments: Vec<SegmentCheck>,
    pub embedded_slopes: SlopeCertificate,
    pub normalized_slopes: SlopeCertificate,
    pub probes: Vec<ProbeResult>,
    pub controlling: ControllingGraph,
    pub superharmonic: Verdict,
    log_rho: TropicalPL,
}

impl PolygonReport {
    pub fn order(&self) -> usize {
        self.estimate.order
    }

    pub fn is_concave(&self) -> bool {
        self.segments.iter().all(|s| !s.verdict.is_fail())
    }

    /// True when every check passed outright.
    pub fn all_pass(&self) -> bool {
        self.segments.iter().all(|s| s.verdict.is_pass())
            && self.embedded_slopes.passes()
            && self.normalized_slopes.passes()
            && self.probes.iter().all(|p| p.verdict.is_pass())
            && self.superharmonic.is_pass()
    }
}

fn segments_of(domain: &Domain, tri: &Triangulation) -> Vec<Interval> {
    let sk = domain.skeleton();
    let mut cuts: Vec<Option<Q>> = vec![sk.lo().cloned()];
    cuts.extend(tri.marks().iter().cloned().map(Some));
    cuts.push(sk.hi().cloned());
    cuts.windows(2)
        .map(|w| Interval::new(w[0].clone(), w[1].clone()).expect("marks are interior"))
        .collect()
}

fn concavity_on(f: &TropicalPL, seg: &Interval) -> Result<Option<String>, PolygonError> {
    Ok(f.restrict(seg)?.concavity_witness().map(|(b, l, r)| {
        format!(
            "slope {} then {} at s = {}",
            fmt_q(&l),
            fmt_q(&r),
            fmt_q(&b)
        )
    }))
}

/// Builds the report for `dm` with triangulation `tri` at order `order`;
/// `probes` are points `η_{c, p^s}` checked with `tail` Taylor terms.
pub fn assemble(
    dm: &DiffModule,
    tri: &Triangulation,
    order: usize,
    probes: &[(Q, Q)],
    tail: usize,
) -> Result<PolygonReport, PolygonError> {
    let domain = dm.domain();
    let estimate = dm.emb_radius_pl(order)?;
    let normalized = normalize(&estimate, tri)?;
    let rho = log_rho(domain, tri)?;
    let rank = dm.rank();

    let mut segments = Vec::new();
    let mut doubled: Option<TropicalPL> = None;
    for seg in segments_of(domain, tri) {
        let verdict = match concavity_on(&normalized, &seg)? {
            None => Verdict::Pass,
            Some(witness) => {
                if doubled.is_none() {
                    doubled = Some(normalize(&dm.emb_radius_pl(2 * order)?, tri)?);
                }
                match concavity_on(doubled.as_ref().expect("set above"), &seg)? {
                    None => Verdict::Inconclusive { order, witness },
                    Some(w) => Verdict::Fail(format!("{w} at order {}", 2 * order)),
                }
            }
        };
        segments.push(SegmentCheck {
            segment: seg,
            verdict,
        });
    }

    let all_bounds = dm.radius_log_at_many(probes, order, tail)?;
    let mut results = Vec::new();
    for ((c, s), bounds) in probes.iter().zip(all_bounds) {
        let branch = domain
            .retraction(c, s, dm.prime())
            .expect("radius_log_at checked the domain");
        let on_skeleton = c.is_zero()
            || s >= &int(abs_log(c, dm.prime()).expect("nonzero"));
        let predicted = estimate.on_skeleton.eval(&branch)?;
        let verdict = if bounds.lower == predicted && bounds.upper == predicted {
            Verdict::Pass
        } else if bounds.contains(&predicted) {
            Verdict::Inconclusive {
                order,
                witness: format!(
                    "bounds [{}, {}] straddle {}",
                    fmt_q(&bounds.lower),
                    fmt_q(&bounds.upper),
                    fmt_q(&predicted)
                ),
            }
        } else {
            Verdict::Fail(format!(
                "bounds [{}, {}] exclude {}",
                fmt_q(&bounds.lower),
                fmt_q(&bounds.upper),
                fmt_q(&predicted)
            ))
        };
        results.push(ProbeResult {
            c: c.clone(),
            s: s.clone(),
            branch,
            on_skeleton,
            bounds,
            predicted,
            verdict,
        });
    }

    let controlling = ControllingGraph {
        segments: segments_of(domain, tri),
        stubs: results
            .iter()
            .filter(|p| p.verdict.is_fail())
            .map(|p| (p.c.clone(), p.branch.clone()))
            .collect(),
    };

    let mut report = PolygonReport {
        rank,
        triangulation: tri.clone(),
        breakpoints: normalized.breakpoints().to_vec(),
        embedded_slopes: estimate.on_skeleton.certify_slopes(rank as u32),
        normalized_slopes: normalized.certify_slopes(rank as u32),
        estimate,
        normalized,
        segments,
        probes: results,
        controlling,
        superharmonic: Verdict::Pass,
        log_rho: rho,
    };
    report.superharmonic = match check_superharmonic_log_r(&embed_skeleton(&report)?) {
        Ok(v) => v,
        Err(PolygonError::IncompleteEmbedding(at)) => Verdict::Inconclusive {
            order,
            witness: format!("no exact value at {at}"),
        },
        Err(e) => return Err(e),
    };
    Ok(report)
}

impl fmt::Display for PolygonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let order = self.order();
        writeln!(f, "# convergence polygon")?;
        writeln!(f, "# {ORIENTATION}")?;
        writeln!(f, "# all values are base-p logarithms, estimate at order {order}")?;
        writeln!(f, "domain={}", self.estimate.domain)?;
        writeln!(f, "rank={}", self.rank)?;
        let marks: Vec<String> = self.triangulation.marks().iter().map(fmt_q).collect();
        writeln!(f, "triangulation={}", marks.join(","))?;
        write!(f, "{}", self.estimate)?;
        writeln!(f, "normalized={}", self.normalized)?;
        let bps: Vec<String> = self.breakpoints.iter().map(fmt_q).collect();
        writeln!(f, "breakpoints={}", bps.join(","))?;
        for seg in &self.segments {
            writeln!(f, "concavity [{}]: {}", seg.segment, seg.verdict)?;
        }
        for (name, cert) in [
            ("embedded", &self.embedded_slopes),
            ("normalized", &self.normalized_slopes),
        ] {
            let offending: Vec<String> = cert
                .offending()
                .map(|e| format!("piece {} slope {}", e.piece, fmt_q(&e.slope)))
                .collect();
            if offending.is_empty() {
                writeln!(f, "slopes {name} (denominators <= {}): pass", cert.rank)?;
            } else {
                writeln!(
                    f,
                    "slopes {name} (denominators <= {}): fail ({})",
                    cert.rank,
                    offending.join("; ")
                )?;
            }
        }
        for p in &self.probes {
            writeln!(
                f,
                "probe c={} s={} branch={} bounds=[{}, {}] predicted={}: {}",
                fmt_q(&p.c),
                fmt_q(&p.s),
                fmt_q(&p.branch),
                fmt_q(&p.bounds.lower),
                fmt_q(&p.bounds.upper),
                fmt_q(&p.predicted),
                p.verdict
            )?;
        }
        let segs: Vec<String> = self
            .controlling
            .segments
            .iter()
            .map(|s| format!("[{s}]"))
            .collect();
        let stubs: Vec<String> = self
            .controlling
            .stubs
            .iter()
            .map(|(c, b)| format!("branch of {} at s={}", fmt_q(c), fmt_q(b)))
            .collect();
        writeln!(
            f,
            "controlling graph (lower approximation, probes only): skeleton {}; stubs {}",
            segs.join(" "),
            if stubs.is_empty() { "none".to_string() } else { stubs.join(", ") }
        )?;
        writeln!(f, "superharmonic on probed subgraph: {}", self.superharmonic)?;
        let moved = self.probes.iter().filter(|p| p.verdict.is_fail()).count();
        if moved == 0 {
            writeln!(f, "no non-constancy detected on probed branches at order {order}")
        } else {
            writeln!(f, "non-constancy detected on {moved} probed branches at order {order}")
        }
    }
}

/// Path graph along the (truncated) skeleton with a stub for every
/// off-skeleton probe. Values are normalised log-radii; `None` marks a
/// vertex whose value is not known exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonEmbedding {
    pub graph: MetrizedGraph,
    pub values: Vec<Option<Q>>,
}

impl SkeletonEmbedding {
    pub fn negated(&self) -> Self {
        SkeletonEmbedding {
            graph: self.graph.clone(),
            values: self.values.iter().map(|v| v.as_ref().map(|x| -x)).collect(),
        }
    }
}

pub fn embed_skeleton(report: &PolygonReport) -> Result<SkeletonEmbedding, PolygonError> {
    let sk = report.normalized.domain().clone();
    let mut points: Vec<Q> = report.breakpoints.clone();
    points.extend(report.triangulation.marks().iter().cloned());
    points.extend(report.probes.iter().map(|p| p.branch.clone()));
    let lo = match sk.lo() {
        Some(a) => a.clone(),
        // the centre of a disc is cut one unit below every feature
        None => points
            .iter()
            .chain(sk.hi())
            .min()
            .cloned()
            .unwrap_or_else(Q::zero)
            - Q::one(),
    };
    let hi = sk.hi().cloned().expect("skeleton is bounded above");
    points.push(lo);
    points.push(hi);
    points.sort();
    points.dedup();

    let mut g = MetrizedGraph::new();
    let mut values = Vec::new();
    for (i, s) in points.iter().enumerate() {
        let boundary = i == 0 || i + 1 == points.len();
        g.add_vertex(format!("s={}", fmt_q(s)), boundary)?;
        values.push(Some(report.normalized.eval(s)?));
    }
    for i in 1..points.len() {
        g.add_edge(i - 1, i, &points[i] - &points[i - 1])?;
    }
    for (k, p) in report.probes.iter().enumerate() {
        if p.on_skeleton {
            continue;
        }
        let at = points.binary_search(&p.branch).expect("branch points were added");
        let leaf = g.add_vertex(format!("probe{}:c={},s={}", k, fmt_q(&p.c), fmt_q(&p.s)), true)?;
        g.add_edge(at, leaf, &p.branch - &p.s)?;
        let rho = report.log_rho.eval(&p.branch)?;
        values.push(
            p.bounds
                .is_exact()
                .then(|| (&p.bounds.lower - &rho).min(Q::zero())),
        );
    }
    Ok(SkeletonEmbedding { graph: g, values })
}

/// Pass iff the embedded function has non-positive Laplacian mass at every
/// interior point.
pub fn check_superharmonic_log_r(emb: &SkeletonEmbedding) -> Result<Verdict, PolygonError> {
    let mut vals = Vec::with_capacity(emb.values.len());
    for (i, v) in emb.values.iter().enumerate() {
        match v {
            Some(x) => vals.push(x.clone()),
            None => {
                return Err(PolygonError::IncompleteEmbedding(
                    emb.graph.vertices()[i].name.clone(),
                ))
            }
        }
    }
    let f = GraphPL::linear(&emb.graph, vals)?;
    Ok(match classify(&emb.graph, &f, true) {
        h if h.is_superharmonic() => Verdict::Pass,
        h => {
            let lap = crate::graph::laplacian(&emb.graph, &f);
            let worst = lap
                .iter()
                .find(|(loc, m)| {
                    **m > Q::zero()
                        && match loc {
                            crate::graph::Location::Vertex(v) => !emb.graph.is_boundary(*v),
                            crate::graph::Location::Edge { .. } => true,
                        }
                })
                .map(|(loc, m)| format!("{loc:?} has mass {}", fmt_q(m)))
                .unwrap_or_default();
            debug_assert!(matches!(h, Harmonicity::Subharmonic | Harmonicity::Neither));
            Verdict::Fail(worst)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    CentreToBoundary,
    BoundaryToCentre,
}

/// Slopes of `log_p R_∅` on a disc read in the given orientation: the first
/// must be 0 and none may be positive.
pub fn disc_boundary_check(
    dm: &DiffModule,
    order: usize,
    orientation: Orientation,
) -> Result<Verdict, PolygonError> {
    if !dm.domain().is_disc() {
        return Err(PolygonError::DiscRequired);
    }
    let est = dm.emb_radius_pl(order)?;
    let f = normalize(&est, &Triangulation::empty())?;
    let slopes: Vec<Q> = match orientation {
        Orientation::CentreToBoundary => f.slopes(),
        Orientation::BoundaryToCentre => f.slopes().iter().rev().map(|s| -s).collect(),
    };
    let fmt = |v: &[Q]| v.iter().map(fmt_q).collect::<Vec<_>>().join(",");
    if !slopes[0].is_zero() {
        return Ok(Verdict::Fail(format!("first slope {}; slopes {}", fmt_q(&slopes[0]), fmt(&slopes))));
    }
    if let Some(s) = slopes.iter().find(|s| **s > Q::zero()) {
        return Ok(Verdict::Fail(format!("positive slope {}; slopes {}", fmt_q(s), fmt(&slopes))));
    }
    Ok(Verdict::Pass)
}

/// Slopes in `{-1, 0, 1}` and value 0 at every mark of `marks`.
pub fn check_rho_map(rho: &TropicalPL, marks: &[Q]) -> Result<Verdict, PolygonError> {
    let allowed = [int(-1), int(0), int(1)];
    if let Some(s) = rho.slopes().iter().find(|s| !allowed.contains(s)) {
        return Ok(Verdict::Fail(format!("slope {}", fmt_q(s))));
    }
    for m in marks {
        let v = rho.eval(m)?;
        if !v.is_zero() {
            return Ok(Verdict::Fail(format!("value {} at mark {}", fmt_q(&v), fmt_q(m))));
        }
    }
    Ok(Verdict::Pass)
}

pub fn rho_maps_check(
    domain: &Domain,
    tri: &Triangulation,
    refined: &Triangulation,
) -> Result<Verdict, PolygonError> {
    let rho = log_rho_relative(domain, tri, refined)?;
    check_rho_map(&rho, tri.marks())
}
