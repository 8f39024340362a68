//! TOML manifests. Every rational is a string literal `a` or `a/b` so that
//! no float ever enters; fields keep their source span for error messages.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use convpoly::diffmod::{DiffModule, Domain, PolyMatrix, Triangulation};
use convpoly::graph::{GraphPL, MetrizedGraph};
use convpoly::rational::{parse_rational, Q};
use convpoly::{LaurentPoly, Prime};

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("{path}: cannot read manifest: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error("{path}:{line}:{column}: {message}")]
    Invalid {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: missing [{block}] block")]
    MissingBlock { path: String, block: &'static str },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prime: Option<Spanned<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triangulation: Option<TriangulationBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphBlock>,
    #[serde(default, skip_serializing_if = "RunBlock::is_empty")]
    pub run: RunBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    /// `"disc"` or `"annulus"`.
    pub kind: Spanned<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s0: Option<Spanned<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s1: Option<Spanned<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s2: Option<Spanned<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixBlock {
    pub rank: Spanned<usize>,
    /// Rows of Laurent polynomials in `t`, e.g. `"1 + 1/2*t^-2"`.
    pub entries: Vec<Vec<Spanned<String>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangulationBlock {
    #[serde(default)]
    pub marks: Vec<Spanned<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphBlock {
    pub vertices: Vec<VertexSpec>,
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexSpec {
    pub name: Spanned<String>,
    #[serde(default)]
    pub boundary: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Spanned<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub u: Spanned<String>,
    pub v: Spanned<String>,
    pub length: Spanned<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_u: Option<Spanned<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_v: Option<Spanned<u32>>,
    /// Interior breakpoints of the function, measured from `u`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub knots: Vec<KnotSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnotSpec {
    pub pos: Spanned<String>,
    pub value: Spanned<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeSpec>,
}

impl RunBlock {
    fn is_empty(&self) -> bool {
        self == &RunBlock::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub c: Spanned<String>,
    pub s: Spanned<String>,
}

impl Manifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is serializable")
    }
}

/// A parsed manifest together with its source, for locating errors.
#[derive(Debug, Clone)]
pub struct Document {
    pub path: String,
    pub source: String,
    pub manifest: Manifest,
}

/// Graph data resolved from a `[graph]` block.
#[derive(Debug, Clone)]
pub struct GraphInput {
    pub graph: MetrizedGraph,
    pub values: Vec<Option<Q>>,
    pub knots: Vec<Vec<(Q, Q)>>,
}

impl GraphInput {
    /// The function given by vertex values and knots; every vertex needs a value.
    pub fn function(&self) -> Result<GraphPL, String> {
        let mut vals = Vec::new();
        for (i, v) in self.values.iter().enumerate() {
            match v {
                Some(x) => vals.push(x.clone()),
                None => {
                    return Err(format!(
                        "vertex {} has no value",
                        self.graph.vertices()[i].name
                    ))
                }
            }
        }
        GraphPL::new(&self.graph, vals, self.knots.clone()).map_err(|e| e.to_string())
    }

    pub fn boundary_values(&self) -> Result<BTreeMap<usize, Q>, String> {
        let mut out = BTreeMap::new();
        for (i, v) in self.graph.vertices().iter().enumerate() {
            if !v.boundary {
                continue;
            }
            match &self.values[i] {
                Some(x) => out.insert(i, x.clone()),
                None => return Err(format!("boundary vertex {} has no value", v.name)),
            };
        }
        Ok(out)
    }
}

fn line_column(source: &str, offset: usize) -> (usize, usize) {
    let before = &source[..offset.min(source.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

impl Document {
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let source = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&path.display().to_string(), source)
    }

    pub fn parse(path: &str, source: String) -> Result<Self, ManifestError> {
        let manifest: Manifest = toml::from_str(&source).map_err(|e| {
            let message = match e.span() {
                Some(span) => {
                    let (line, column) = line_column(&source, span.start);
                    format!("line {line}, column {column}: {}", e.message())
                }
                None => e.message().to_string(),
            };
            ManifestError::Syntax {
                path: path.to_string(),
                message,
            }
        })?;
        Ok(Document {
            path: path.to_string(),
            source,
            manifest,
        })
    }

    fn invalid(&self, span: Range<usize>, message: impl fmt::Display) -> ManifestError {
        let (line, column) = line_column(&self.source, span.start);
        ManifestError::Invalid {
            path: self.path.clone(),
            line,
            column,
            message: message.to_string(),
        }
    }

    fn missing(&self, block: &'static str) -> ManifestError {
        ManifestError::MissingBlock {
            path: self.path.clone(),
            block,
        }
    }

    fn rational(&self, field: &Spanned<String>) -> Result<Q, ManifestError> {
        parse_rational(field.get_ref())
            .map_err(|e| self.invalid(field.span(), format!("{:?}: {e}", field.get_ref())))
    }

    fn required<'a>(
        &self,
        field: &'a Option<Spanned<String>>,
        name: &str,
        at: Range<usize>,
    ) -> Result<&'a Spanned<String>, ManifestError> {
        field
            .as_ref()
            .ok_or_else(|| self.invalid(at, format!("missing field {name}")))
    }

    pub fn prime(&self) -> Result<Prime, ManifestError> {
        let p = self.manifest.prime.as_ref().ok_or_else(|| self.missing("prime"))?;
        Prime::new(*p.get_ref()).map_err(|e| self.invalid(p.span(), e))
    }

    pub fn domain(&self) -> Result<Domain, ManifestError> {
        let d = self.manifest.domain.as_ref().ok_or_else(|| self.missing("domain"))?;
        let at = d.kind.span();
        match d.kind.get_ref().as_str() {
            "disc" => Ok(Domain::disc(self.rational(self.required(&d.s0, "s0", at)?)?)),
            "annulus" => {
                let s1 = self.rational(self.required(&d.s1, "s1", at.clone())?)?;
                let s2 = self.rational(self.required(&d.s2, "s2", at.clone())?)?;
                Domain::annulus(s1, s2).map_err(|e| self.invalid(at, e))
            }
            other => Err(self.invalid(at, format!("unknown domain kind {other:?} (disc or annulus)"))),
        }
    }

    pub fn triangulation(&self) -> Result<Triangulation, ManifestError> {
        let Some(t) = &self.manifest.triangulation else {
            return Ok(Triangulation::empty());
        };
        let marks = t
            .marks
            .iter()
            .map(|m| self.rational(m))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Triangulation::new(marks))
    }

    pub fn module(&self) -> Result<DiffModule, ManifestError> {
        let m = self.manifest.matrix.as_ref().ok_or_else(|| self.missing("matrix"))?;
        let prime = self.prime()?;
        let domain = self.domain()?;
        let rank = *m.rank.get_ref();
        if m.entries.len() != rank || m.entries.iter().any(|r| r.len() != rank) {
            return Err(self.invalid(m.rank.span(), format!("entries must form a {rank}x{rank} matrix")));
        }
        let mut rows = Vec::with_capacity(rank);
        for row in &m.entries {
            let mut out = Vec::with_capacity(rank);
            for e in row {
                let lp: LaurentPoly = e
                    .get_ref()
                    .parse()
                    .map_err(|err| self.invalid(e.span(), err))?;
                out.push(lp);
            }
            rows.push(out);
        }
        let matrix = PolyMatrix::new(rows).map_err(|e| self.invalid(m.rank.span(), e))?;
        DiffModule::new(prime, matrix, domain).map_err(|e| self.invalid(m.rank.span(), e))
    }

    pub fn probes(&self) -> Result<Vec<(Q, Q)>, ManifestError> {
        self.manifest
            .run
            .probes
            .iter()
            .map(|p| Ok((self.rational(&p.c)?, self.rational(&p.s)?)))
            .collect()
    }

    pub fn graph(&self) -> Result<GraphInput, ManifestError> {
        let g = self.manifest.graph.as_ref().ok_or_else(|| self.missing("graph"))?;
        let mut graph = MetrizedGraph::new();
        let mut values = Vec::new();
        for v in &g.vertices {
            graph
                .add_vertex(v.name.get_ref().clone(), v.boundary)
                .map_err(|e| self.invalid(v.name.span(), e))?;
            values.push(v.value.as_ref().map(|x| self.rational(x)).transpose()?);
        }
        let mut knots = Vec::new();
        for e in &g.edges {
            let u = graph
                .vertex_index(e.u.get_ref())
                .map_err(|err| self.invalid(e.u.span(), err))?;
            let v = graph
                .vertex_index(e.v.get_ref())
                .map_err(|err| self.invalid(e.v.span(), err))?;
            let len = self.rational(&e.length)?;
            let wu = e.weight_u.as_ref().map_or(1, |w| *w.get_ref());
            let wv = e.weight_v.as_ref().map_or(1, |w| *w.get_ref());
            graph
                .add_weighted_edge(u, v, len, wu, wv)
                .map_err(|err| self.invalid(e.u.span(), err))?;
            knots.push(
                e.knots
                    .iter()
                    .map(|k| Ok((self.rational(&k.pos)?, self.rational(&k.value)?)))
                    .collect::<Result<Vec<_>, ManifestError>>()?,
            );
        }
        Ok(GraphInput {
            graph,
            values,
            knots,
        })
    }
}
