//! Subcommand bodies. Each returns the text for stdout plus any files to
//! write, so that they can be tested without touching the filesystem.

use convpoly::graph::{classify, dirichlet_solve, laplacian};
use convpoly::polygon::{assemble, PolygonReport};
use convpoly::rational::{fmt_decimal, fmt_q};
use convpoly::suite;

use crate::manifest::{Document, ManifestError};

pub const HEADER: &str = concat!("# convpoly ", env!("CARGO_PKG_VERSION"));

const DEFAULT_ORDER: usize = 64;
const DEFAULT_TAIL: usize = 16;
const DEFAULT_SAMPLES: usize = 33;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("{0}")]
    Compute(String),
}

fn compute(e: impl std::fmt::Display) -> CommandError {
    CommandError::Compute(e.to_string())
}

/// Command-line overrides for the `[run]` block.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub order: Option<usize>,
    pub tail: Option<usize>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    /// `(file name, contents)` pairs for the output directory.
    pub files: Vec<(String, String)>,
    pub passed: bool,
}

struct Params {
    order: usize,
    tail: usize,
    samples: usize,
}

fn params(doc: &Document, opts: &Options) -> Result<Params, CommandError> {
    let run = &doc.manifest.run;
    let p = Params {
        order: opts.order.or(run.order).unwrap_or(DEFAULT_ORDER),
        tail: opts.tail.or(run.tail).unwrap_or(DEFAULT_TAIL),
        samples: opts.samples.or(run.samples).unwrap_or(DEFAULT_SAMPLES),
    };
    if p.order == 0 || p.tail == 0 {
        return Err(CommandError::Compute("order and tail must be positive".into()));
    }
    Ok(p)
}

pub fn radius(doc: &Document, opts: &Options) -> Result<Outcome, CommandError> {
    let p = params(doc, opts)?;
    let dm = doc.module()?;
    let est = dm.emb_radius_pl(p.order).map_err(compute)?;
    let text = format!(
        "{HEADER}\n# log_p of the embedded radius along the skeleton, estimate at order {}\nprime={}\n{est}",
        p.order,
        dm.prime()
    );
    Ok(Outcome {
        files: vec![
            ("radius.txt".into(), text.clone()),
            ("radius.tsv".into(), est.on_skeleton.to_tsv(p.samples)),
        ],
        stdout: text,
        passed: true,
    })
}

/// True unless some check failed outright; inconclusive results pass.
pub fn report_passes(r: &PolygonReport) -> bool {
    r.segments.iter().all(|s| !s.verdict.is_fail())
        && r.embedded_slopes.passes()
        && r.normalized_slopes.passes()
        && r.probes.iter().all(|p| !p.verdict.is_fail())
        && !r.superharmonic.is_fail()
}

pub fn polygon(doc: &Document, opts: &Options) -> Result<Outcome, CommandError> {
    let p = params(doc, opts)?;
    let dm = doc.module()?;
    let tri = doc.triangulation()?;
    let probes = doc.probes()?;
    let report = assemble(&dm, &tri, p.order, &probes, p.tail).map_err(compute)?;
    let text = format!("{HEADER}\nprime={}\n{report}", dm.prime());
    Ok(Outcome {
        files: vec![
            ("polygon.txt".into(), text.clone()),
            ("polygon.tsv".into(), report.normalized.to_tsv(p.samples)),
        ],
        stdout: text,
        passed: report_passes(&report),
    })
}

pub fn laplacian_cmd(doc: &Document, _opts: &Options) -> Result<Outcome, CommandError> {
    let input = doc.graph()?;
    let f = input.function().map_err(compute)?;
    let lap = laplacian(&input.graph, &f);
    let tsv = lap.to_tsv(&input.graph);
    let text = format!(
        "{HEADER}\n# masses are sums of outgoing slopes times direction weights\ntotal_mass={}\ninterior={}\nall={}\n{tsv}",
        fmt_q(&lap.total_mass()),
        classify(&input.graph, &f, true),
        classify(&input.graph, &f, false),
    );
    Ok(Outcome {
        files: vec![("laplacian.tsv".into(), tsv)],
        stdout: text,
        passed: true,
    })
}

pub fn dirichlet(doc: &Document, _opts: &Options) -> Result<Outcome, CommandError> {
    let input = doc.graph()?;
    let bv = input.boundary_values().map_err(compute)?;
    let sol = dirichlet_solve(&input.graph, &bv).map_err(compute)?;
    let mut tsv = String::from("vertex\tvalue\tvalue_decimal\n");
    for (v, x) in input.graph.vertices().iter().zip(sol.vertex_values()) {
        tsv.push_str(&format!("{}\t{}\t{}\n", v.name, fmt_q(x), fmt_decimal(x)));
    }
    let text = format!(
        "{HEADER}\ninterior={}\n{tsv}",
        classify(&input.graph, &sol, true)
    );
    Ok(Outcome {
        files: vec![("dirichlet.tsv".into(), tsv)],
        stdout: text,
        passed: true,
    })
}

/// The bundled criteria, plus the polygon checks of `doc` when it has a
/// `[matrix]` block.
pub fn verify(doc: Option<&Document>, opts: &Options) -> Result<Outcome, CommandError> {
    let mut lines = vec![HEADER.to_string()];
    let mut passed = true;
    for r in suite::run_all() {
        passed &= r.passed;
        lines.push(r.to_string());
    }
    if let Some(doc) = doc.filter(|d| d.manifest.matrix.is_some()) {
        let out = polygon(doc, opts)?;
        passed &= out.passed;
        let tag = if out.passed { "PASS" } else { "FAIL" };
        lines.push(format!("[{tag}] manifest {}: polygon checks", doc.path));
    }
    let total = lines.len() - 1;
    let failed = lines.iter().filter(|l| l.starts_with("[FAIL]")).count();
    lines.push(format!("{} of {total} passed", total - failed));
    let text = lines.join("\n") + "\n";
    Ok(Outcome {
        files: vec![("verify.txt".into(), text.clone())],
        stdout: text,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(src: &str) -> Document {
        Document::parse("m.toml", src.to_string()).unwrap()
    }

    const TRIVIAL: &str = "prime = 3\n[domain]\nkind = \"annulus\"\ns1 = \"-1\"\ns2 = \"1\"\n[matrix]\nrank = 1\nentries = [[\"0\"]]\n";

    #[test]
    fn trivial_radius_is_the_cap() {
        let out = radius(&doc(TRIVIAL), &Options { order: Some(4), ..Default::default() }).unwrap();
        assert!(out.passed);
        assert!(out.stdout.contains("polygon=domain=-1..1 slope=1 anchor=-1@-1"), "{}", out.stdout);
        assert!(out.stdout.contains("provenance=cap"));
        assert_eq!(out.files[1].1.lines().next(), Some("s\tvalue\tvalue_decimal"));
    }

    #[test]
    fn outputs_are_deterministic() {
        let a = polygon(&doc(TRIVIAL), &Options::default()).unwrap();
        let b = polygon(&doc(TRIVIAL), &Options::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.passed);
    }

    #[test]
    fn missing_block_is_an_error() {
        let err = laplacian_cmd(&doc("prime = 2\n"), &Options::default()).unwrap_err();
        assert_eq!(err.to_string(), "m.toml: missing [graph] block");
    }
}
