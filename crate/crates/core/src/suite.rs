//! Bundled instances and the ten end-to-end verification criteria.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diffmod::{log_rho_relative, normalize, retriangulate, DiffModule, Domain, PolyMatrix, Triangulation};
use crate::graph::{
    classify, dirichlet_solve, direction_count_bound, laplacian, pairing, star, GraphPL,
    Harmonicity, MetrizedGraph,
};
use crate::laurent::LaurentPoly;
use crate::padic::{val_factorial, Prime};
use crate::polygon::{
    assemble, disc_boundary_check, check_rho_map, check_superharmonic_log_r, embed_skeleton,
    Orientation, Verdict,
};
use crate::rational::{fmt_q, int, ratio, Q};
use crate::tropical::{Interval, TropicalPL};

pub const GRAPH_SEED: u64 = 0x5eed_0001;
pub const GRAPH_CORPUS: usize = 200;
const TAIL: usize = 16;

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: &'static str,
    pub module: DiffModule,
    pub order: usize,
    pub probes: Vec<(Q, Q)>,
}

fn prime(p: u64) -> Prime {
    Prime::new(p).expect("bundled primes are prime")
}

fn scalar(name: &'static str, p: u64, g: LaurentPoly, domain: Domain, order: usize, probes: Vec<(Q, Q)>) -> Instance {
    Instance {
        name,
        module: DiffModule::scalar(prime(p), g, domain).expect("bundled instance is valid"),
        order,
        probes,
    }
}

fn annulus(s1: Q, s2: Q) -> Domain {
    Domain::annulus(s1, s2).expect("bundled annulus is valid")
}

fn probes(list: &[(i64, i64)]) -> Vec<(Q, Q)> {
    list.iter().map(|(c, s)| (int(*c), int(*s))).collect()
}

pub fn exponential() -> Instance {
    scalar(
        "exponential",
        2,
        LaurentPoly::one(),
        annulus(int(-2), int(0)),
        64,
        probes(&[(1, -1), (3, -1), (5, -1), (2, -2), (6, -2), (10, -2)]),
    )
}

pub fn slope_two() -> Instance {
    scalar(
        "slope-two",
        3,
        LaurentPoly::monomial(Q::one(), -2),
        annulus(int(-2), ratio(-1, 4)),
        81,
        probes(&[(3, -2), (6, -2)]),
    )
}

pub fn trivial() -> Instance {
    scalar(
        "trivial",
        2,
        LaurentPoly::zero(),
        annulus(int(-2), int(0)),
        8,
        probes(&[(1, -1), (2, -2)]),
    )
}

pub fn nilpotent() -> Instance {
    scalar(
        "nilpotent",
        2,
        LaurentPoly::monomial(Q::one(), -1),
        annulus(int(-2), int(0)),
        8,
        probes(&[(1, -1), (2, -2)]),
    )
}

pub fn exponential_disc() -> Instance {
    scalar("exponential-disc", 2, LaurentPoly::one(), Domain::disc(int(0)), 64, vec![])
}

pub fn trivial_disc() -> Instance {
    scalar("trivial-disc", 2, LaurentPoly::zero(), Domain::disc(int(0)), 8, vec![])
}

pub fn diagonal_rank_two() -> Instance {
    let m = PolyMatrix::new(vec![
        vec![LaurentPoly::one(), LaurentPoly::zero()],
        vec![LaurentPoly::zero(), LaurentPoly::monomial(Q::one(), -2)],
    ])
    .expect("square");
    Instance {
        name: "diagonal-rank-two",
        module: DiffModule::new(prime(3), m, annulus(int(-2), ratio(-1, 4))).expect("valid"),
        order: 81,
        probes: vec![],
    }
}

pub fn bundled() -> Vec<Instance> {
    vec![
        exponential(),
        slope_two(),
        trivial(),
        nilpotent(),
        exponential_disc(),
        trivial_disc(),
        diagonal_rank_two(),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

fn result(id: u32, name: &'static str, outcome: Result<String, String>) -> CriterionResult {
    match outcome {
        Ok(detail) => CriterionResult { id, name, passed: true, detail },
        Err(detail) => CriterionResult { id, name, passed: false, detail },
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl fmt::Display) -> String {
    e.to_string()
}

/// Largest value of a PL function, `None` when unbounded above.
fn sup(f: &TropicalPL) -> Option<Q> {
    let slopes = f.slopes();
    if f.domain().lo().is_none() && slopes.first().is_some_and(|s| s.is_negative()) {
        return None;
    }
    if f.domain().hi().is_none() && slopes.last().is_some_and(|s| s.is_positive()) {
        return None;
    }
    let mut pts: Vec<Q> = f.breakpoints().to_vec();
    pts.extend(f.domain().lo().cloned());
    pts.extend(f.domain().hi().cloned());
    if pts.is_empty() {
        pts.push(Q::zero());
    }
    pts.iter().map(|s| f.eval(s).expect("in domain")).max()
}

pub fn criterion_1() -> CriterionResult {
    result(1, "exponential instance", (|| {
        let inst = exponential();
        let dom = inst.module.domain().skeleton();
        let est = inst.module.emb_radius_pl(64).map_err(err)?;
        let expected = TropicalPL::identity(dom.clone())
            .pointwise_min(&TropicalPL::constant(dom, ratio(-63, 64)))
            .map_err(err)?;
        ensure(est.on_skeleton == expected, || format!("order 64 gave {}", est.on_skeleton))?;
        let mut seen = Vec::new();
        for k in 1..=7u32 {
            let n = 1usize << k;
            let est = inst.module.emb_radius_pl(n).map_err(err)?;
            let constant = est.on_skeleton.eval(&int(0)).map_err(err)?;
            let two_k = 1i64 << k;
            ensure(constant == ratio(-(two_k - 1), two_k), || {
                format!("order {n} gave constant {}", fmt_q(&constant))
            })?;
            let legendre = -int(val_factorial(n as u64, inst.module.prime()) as i64) / int(n as i64);
            ensure(constant == legendre, || format!("order {n} disagrees with v(n!)/n"))?;
            ensure(&constant + Q::one() == ratio(1, two_k), || "gap to -1/(p-1) is not 1/2^k".into())?;
            seen.push(fmt_q(&constant));
        }
        Ok(format!("min(s, -63/64) at order 64; constants {}", seen.join(", ")))
    })())
}

pub fn criterion_2() -> CriterionResult {
    result(2, "slope-two instance", (|| {
        let inst = slope_two();
        let r = assemble(&inst.module, &Triangulation::empty(), 81, &[], TAIL).map_err(err)?;
        let entry = r
            .embedded_slopes
            .entries
            .iter()
            .find(|e| e.slope == int(2))
            .ok_or_else(|| format!("no slope-2 piece in {}", r.estimate.on_skeleton))?;
        let (m, i) = entry.witness.clone().ok_or("slope 2 not certified")?;
        ensure(m == 2.into() && i == 1.into(), || format!("witness {m}/{i}"))?;
        ensure(r.embedded_slopes.passes(), || "some slope exceeds the rank".into())?;
        ensure(r.is_concave() && r.estimate.on_skeleton.is_concave(), || "not concave".into())?;
        Ok(format!("polygon {}", r.estimate.on_skeleton))
    })())
}

pub fn criterion_3() -> CriterionResult {
    result(3, "trivial and nilpotent instances", (|| {
        for inst in [trivial(), nilpotent(), trivial_disc()] {
            let est = inst.module.emb_radius_pl(inst.order).map_err(err)?;
            let f = normalize(&est, &Triangulation::empty()).map_err(err)?;
            let zero = TropicalPL::constant(inst.module.domain().skeleton(), Q::zero());
            ensure(f == zero, || format!("{}: normalized radius {}", inst.name, f))?;
        }
        let nil = nilpotent();
        let iters = nil.module.iterate(16);
        ensure(iters[1..].iter().all(PolyMatrix::is_zero), || "G_n != 0 for some n >= 2".into())?;
        Ok("R_S = 1 on all three; G_n = 0 for 2 <= n <= 16 when G = 1/t".into())
    })())
}

/// Adjacent pieces agree at every breakpoint.
fn is_continuous(f: &TropicalPL) -> bool {
    f.pieces()
        .windows(2)
        .zip(f.breakpoints())
        .all(|(w, b)| w[0].eval(b) == w[1].eval(b))
}

pub fn criterion_4() -> CriterionResult {
    result(4, "concave, continuous, slopes m/i with i <= rank", (|| {
        let mut names = Vec::new();
        for inst in bundled() {
            let r = assemble(&inst.module, &Triangulation::empty(), inst.order, &[], TAIL)
                .map_err(err)?;
            ensure(is_continuous(&r.estimate.on_skeleton) && is_continuous(&r.normalized), || {
                format!("{}: discontinuous", inst.name)
            })?;
            for seg in &r.segments {
                ensure(!seg.verdict.is_fail(), || format!("{}: {}", inst.name, seg.verdict))?;
            }
            ensure(r.embedded_slopes.passes() && r.normalized_slopes.passes(), || {
                format!("{}: slope denominator exceeds rank {}", inst.name, r.rank)
            })?;
            names.push(inst.name);
        }
        Ok(format!("{} instances: {}", names.len(), names.join(", ")))
    })())
}

/// Random connected graph with equal weights at both ends of every edge,
/// a random PL function with edge breakpoints, and a linear one.
pub fn random_graph(rng: &mut impl Rng) -> (MetrizedGraph, GraphPL, GraphPL) {
    let n = rng.gen_range(2..=8);
    let mut g = MetrizedGraph::new();
    let boundary_at = rng.gen_range(0..n);
    for i in 0..n {
        g.add_vertex(format!("v{i}"), i == boundary_at || rng.gen_bool(0.3))
            .expect("fresh name");
    }
    let rand_len = |rng: &mut dyn rand::RngCore| ratio(rng.gen_range(1..=6), rng.gen_range(1..=4));
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let w = rng.gen_range(1..=3);
        let len = rand_len(rng);
        g.add_weighted_edge(j, i, len, w, w).expect("valid edge");
    }
    for _ in 0..rng.gen_range(0..=n) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            let w = rng.gen_range(1..=3);
            let len = rand_len(rng);
            g.add_weighted_edge(a, b, len, w, w).expect("valid edge");
        }
    }
    let values = |rng: &mut dyn rand::RngCore| -> Vec<Q> {
        (0..n).map(|_| ratio(rng.gen_range(-12..=12), rng.gen_range(1..=3))).collect()
    };
    let fv = values(rng);
    let hv = values(rng);
    let bps: Vec<Vec<(Q, Q)>> = g
        .edges()
        .iter()
        .map(|e| {
            let k = rng.gen_range(0..=2);
            let mut fr: Vec<i64> = (0..k).map(|_| rng.gen_range(1..8)).collect();
            fr.sort_unstable();
            fr.dedup();
            fr.into_iter()
                .map(|a| (&e.length * ratio(a, 8), int(rng.gen_range(-8..=8))))
                .collect()
        })
        .collect();
    let f = GraphPL::new(&g, fv, bps).expect("valid function");
    let h = GraphPL::linear(&g, hv).expect("valid function");
    (g, f, h)
}

pub fn criterion_5() -> CriterionResult {
    result(5, "potential-theory kernel", (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(GRAPH_SEED);
        for k in 0..GRAPH_CORPUS {
            let (g, f, h) = random_graph(&mut rng);
            let lap = laplacian(&g, &f);
            ensure(lap.total_mass().is_zero(), || format!("graph {k}: total mass {}", fmt_q(&lap.total_mass())))?;
            let fh = pairing(&g, &f, &h).map_err(err)?;
            let hf = pairing(&g, &h, &f).map_err(err)?;
            ensure(fh == hf, || format!("graph {k}: pairing {} vs {}", fmt_q(&fh), fmt_q(&hf)))?;
            let bv: BTreeMap<usize, Q> = (0..g.vertices().len())
                .filter(|&v| g.is_boundary(v))
                .map(|v| (v, f.vertex_value(v).clone()))
                .collect();
            let sol = dirichlet_solve(&g, &bv).map_err(err)?;
            ensure(classify(&g, &sol, true) == Harmonicity::Harmonic, || format!("graph {k}: not harmonic"))?;
            let lo = bv.values().min().expect("has boundary");
            let hi = bv.values().max().expect("has boundary");
            ensure(sol.vertex_values().iter().all(|v| lo <= v && v <= hi), || {
                format!("graph {k}: maximum principle violated")
            })?;
        }
        let mut g = MetrizedGraph::new();
        let c = g.add_vertex("c", false).map_err(err)?;
        for i in 0..3 {
            g.add_vertex(format!("l{i}"), true).map_err(err)?;
        }
        let mut g2 = g.clone();
        for i in 1..=3 {
            g.add_edge(c, i, Q::one()).map_err(err)?;
            g2.add_weighted_edge(c, i, Q::one(), if i == 3 { 2 } else { 1 }, 1).map_err(err)?;
        }
        let bv = BTreeMap::from([(1, int(0)), (2, int(0)), (3, int(3))]);
        let a = dirichlet_solve(&g, &bv).map_err(err)?.vertex_value(c).clone();
        let b = dirichlet_solve(&g2, &bv).map_err(err)?.vertex_value(c).clone();
        ensure(a == int(1) && b == ratio(3, 2), || format!("star centres {} and {}", fmt_q(&a), fmt_q(&b)))?;
        Ok(format!("{GRAPH_CORPUS} random graphs (seed {GRAPH_SEED:#x}); star centres 1 and 3/2"))
    })())
}

/// Rationals `a/b` with `b <= max_den` in `[lo, hi]`, sorted and distinct.
pub fn slope_grid(lo: &Q, hi: &Q, max_den: i64) -> Vec<Q> {
    let mut out = Vec::new();
    for b in 1..=max_den {
        let first = (lo * int(b)).ceil().to_integer();
        let last = (hi * int(b)).floor().to_integer();
        let mut a = first;
        while a <= last {
            out.push(Q::new(a.clone(), b.into()));
            a += 1;
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Every multiset of `k` elements of `grid`, as index vectors.
fn multisets(len: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, len: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..len {
            cur.push(i);
            go(i, len, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, len, k, &mut Vec::new(), &mut out);
    out
}

pub fn criterion_6() -> CriterionResult {
    result(6, "direction-count bound", (|| {
        let (p1, p2, m) = (int(-2), int(0), ratio(1, 2));
        let bound = direction_count_bound(&p1, &p2, &m).map_err(err)?;
        ensure(bound == 4, || format!("bound {bound}"))?;
        let grid = slope_grid(&m, &int(2), 4);
        let mut attained = 0usize;
        let mut checked = 0usize;
        for k in [4usize, 5] {
            for pick in multisets(grid.len(), k) {
                let mut slopes = vec![p1.clone(), p2.clone()];
                slopes.extend(pick.iter().map(|&i| grid[i].clone()));
                let (g, f) = star(&Q::zero(), &slopes);
                let sh = classify(&g, &f, true).is_superharmonic();
                checked += 1;
                if k == 5 {
                    ensure(!sh, || format!("5 directions accepted: {:?}", pick))?;
                } else if sh {
                    attained += 1;
                }
            }
        }
        ensure(attained > 0, || "4 directions never attained".into())?;
        Ok(format!(
            "bound 4; {checked} stars over {} slopes in [1/2, 2] with denominators <= 4; {attained} four-direction stars super-harmonic",
            grid.len()
        ))
    })())
}

pub fn criterion_7() -> CriterionResult {
    result(7, "log R is super-harmonic", (|| {
        let mut stubs = 0;
        for inst in [exponential(), slope_two(), trivial(), nilpotent()] {
            let r = assemble(&inst.module, &Triangulation::empty(), inst.order, &inst.probes, TAIL)
                .map_err(err)?;
            let emb = embed_skeleton(&r).map_err(err)?;
            stubs += r.probes.iter().filter(|p| !p.on_skeleton).count();
            let v = check_superharmonic_log_r(&emb).map_err(|e| format!("{}: {e}", inst.name))?;
            ensure(v.is_pass(), || format!("{}: {v}", inst.name))?;
            if !r.breakpoints.is_empty() {
                let neg = check_superharmonic_log_r(&emb.negated()).map_err(err)?;
                ensure(neg.is_fail(), || format!("{}: negated polygon accepted", inst.name))?;
            }
        }
        Ok(format!("4 instances, {stubs} probe stubs; negated polygons rejected"))
    })())
}

pub fn criterion_8() -> CriterionResult {
    result(8, "disc polygons start flat and never rise", (|| {
        for inst in [exponential_disc(), trivial_disc()] {
            let v = disc_boundary_check(&inst.module, inst.order, Orientation::CentreToBoundary).map_err(err)?;
            ensure(v.is_pass(), || format!("{}: {v}", inst.name))?;
        }
        let kinked = DiffModule::scalar(prime(2), LaurentPoly::monomial(Q::one(), 1), Domain::disc(int(1)))
            .map_err(err)?;
        let fwd = disc_boundary_check(&kinked, 64, Orientation::CentreToBoundary).map_err(err)?;
        let rev = disc_boundary_check(&kinked, 64, Orientation::BoundaryToCentre).map_err(err)?;
        ensure(fwd.is_pass() && rev.is_fail(), || format!("self-test: forward {fwd}, reversed {rev}"))?;
        Ok("exponential and trivial discs pass; reversed orientation self-test fails as expected".into())
    })())
}

pub fn criterion_9() -> CriterionResult {
    result(9, "rho maps", (|| {
        let grid: Vec<Q> = [-7, -6, -5, -3, -2, -1].iter().map(|k| ratio(*k, 4)).collect();
        let domains = [Domain::disc(int(0)), annulus(int(-2), int(0))];
        let exp = exponential();
        let mut count = 0;
        for dom in &domains {
            let dm = DiffModule::new(prime(2), exp.module.matrix().clone(), dom.clone()).map_err(err)?;
            let est = dm.emb_radius_pl(64).map_err(err)?;
            for base in [vec![], vec![ratio(-1, 1)]] {
                let s = Triangulation::new(base.clone());
                let f = normalize(&est, &s).map_err(err)?;
                let extra: Vec<Q> = grid.iter().filter(|g| !base.contains(g)).cloned().collect();
                for k in 1..=3 {
                    for pick in multisets(extra.len(), k) {
                        if pick.windows(2).any(|w| w[0] == w[1]) {
                            continue;
                        }
                        let mut marks = base.clone();
                        marks.extend(pick.iter().map(|&i| extra[i].clone()));
                        let refined = Triangulation::new(marks);
                        let rho = log_rho_relative(dom, &s, &refined).map_err(err)?;
                        let v = check_rho_map(&rho, s.marks()).map_err(err)?;
                        ensure(v == Verdict::Pass, || format!("{dom}: {v}"))?;
                        let g = retriangulate(&f, &rho).map_err(err)?;
                        ensure(sup(&g).is_some_and(|m| !m.is_positive()), || {
                            format!("{dom}: retriangulated radius exceeds 0")
                        })?;
                        count += 1;
                    }
                }
            }
        }
        let bad = TropicalPL::affine(Interval::closed(int(-2), int(0)).map_err(err)?, int(2), int(0));
        ensure(check_rho_map(&bad, &[]).map_err(err)?.is_fail(), || "slope-2 self-test accepted".into())?;
        Ok(format!("{count} refinements on disc and annulus; slope-2 self-test rejected"))
    })())
}

pub fn criterion_10() -> CriterionResult {
    result(10, "off-skeleton constancy probes", (|| {
        let inst = exponential();
        let skeleton_value = inst.module.emb_radius_pl(64).map_err(err)?.on_skeleton.eval(&int(0)).map_err(err)?;
        for c in [1, 3, 5] {
            let b = inst.module.radius_log_at(&int(c), &int(-1), 64, TAIL).map_err(err)?;
            ensure(b.lower == skeleton_value && b.upper == skeleton_value, || {
                format!("c = {c}: bounds [{}, {}]", fmt_q(&b.lower), fmt_q(&b.upper))
            })?;
        }
        Ok(format!("c = 1, 3, 5 at s = -1 all equal {}", fmt_q(&skeleton_value)))
    })())
}

pub fn run_all() -> Vec<CriterionResult> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ]
}
