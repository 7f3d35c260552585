use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use cartesian_batch::{
    BatchCode, BucketConfig, CartesianCode, EvaluationDomain, Field, FieldElement, Point, Subspace,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub p: u32,
    #[serde(default = "one")]
    pub k: u32,
}

fn one() -> u32 {
    1
}

/// The JSON code description accepted by every command.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpecDocument {
    pub field: FieldSpec,
    pub subsets: Vec<Vec<u32>>,
    pub rho: u32,
    pub subspace_basis: Vec<Vec<u32>>,
    #[serde(default)]
    pub tau: Option<usize>,
    #[serde(default)]
    pub t: Option<usize>,
}

pub struct Loaded {
    pub doc: CodeSpecDocument,
    pub field: Field,
    /// Code with unmerged coset buckets.
    pub batch: BatchCode,
}

impl Loaded {
    /// `t` from the document, else what the solver guarantees, else `μ + 1`.
    pub fn t(&self) -> usize {
        self.doc
            .t
            .or_else(|| self.batch.t())
            .unwrap_or(self.batch.domain().mu() + 1)
    }

    pub fn tau(&self) -> usize {
        self.doc.tau.unwrap_or(1)
    }

    pub fn mu(&self) -> usize {
        self.batch.domain().mu()
    }

    /// Parses `a,b,c` as a point of the domain.
    pub fn parse_point(&self, text: &str) -> Result<Point> {
        let values: Vec<u32> = text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u32>()
                    .with_context(|| format!("point `{text}`: `{s}` is not an element index"))
            })
            .collect::<Result<_>>()?;
        let point: Point = values
            .iter()
            .map(|&v| self.field.element(v))
            .collect::<Result<_, _>>()
            .with_context(|| format!("point `{text}`"))?;
        if !self.batch.domain().contains(&point) {
            bail!("point `{text}` is not in the evaluation domain");
        }
        Ok(point)
    }
}

pub fn load(path: &Path) -> Result<Loaded> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc = parse(&text).with_context(|| format!("in {}", path.display()))?;
    build(doc).with_context(|| format!("in {}", path.display()))
}

pub fn parse(text: &str) -> Result<CodeSpecDocument> {
    serde_json::from_str(text).map_err(|e| anyhow!("line {} column {}: {e}", e.line(), e.column()))
}

fn elements(field: &Field, values: &[u32], what: &str) -> Result<Vec<FieldElement>> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| field.element(v).with_context(|| format!("{what}[{i}]")))
        .collect()
}

pub fn build(doc: CodeSpecDocument) -> Result<Loaded> {
    let field = Field::new(doc.field.p, doc.field.k).context("field")?;
    let subsets = doc
        .subsets
        .iter()
        .enumerate()
        .map(|(i, s)| elements(&field, s, &format!("subsets[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let domain = Arc::new(EvaluationDomain::build(&field, subsets).context("subsets")?);
    let rows = doc
        .subspace_basis
        .iter()
        .enumerate()
        .map(|(i, r)| elements(&field, r, &format!("subspace_basis[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let subspace = Subspace::span(&field, domain.mu(), &rows).context("subspace_basis")?;
    if doc.tau == Some(0) {
        bail!("tau: must be at least 1");
    }
    if doc.t == Some(0) {
        bail!("t: must be at least 1");
    }
    let config = BucketConfig::build(domain.clone(), subspace).context("subspace_basis")?;
    let batch = BatchCode::new(CartesianCode::build(domain, doc.rho), config)?;
    Ok(Loaded { doc, field, batch })
}
