//! JSON documents for triples, twisting operators and classification output.
//!
//! Complex entries are `[re, im]` pairs. Canonical form is pretty-printed
//! JSON with sorted metadata keys, shortest round-trip floats and a trailing
//! newline, so export → import → export is byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classify::{SearchLog, SearchOptions, Solution, SolutionSpace};
use crate::error::{Error, Result};
use crate::linalg::{AntiUnitaryOperator, ComplexMatrix, Sign};
use crate::triple::{ConstraintReport, FiniteSpectralTriple, RealStructure, ScalarField};

pub const SCHEMA_VERSION: &str = "1";

/// Rows of `[re, im]` pairs.
pub type MatrixDocument = Vec<Vec<[f64; 2]>>;

/// Negative zeros are written as `0.0`.
pub fn matrix_to_document(m: &ComplexMatrix) -> MatrixDocument {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re + 0.0, m[(i, j)].im + 0.0]).collect())
        .collect()
}

/// `field` names the document location in diagnostics.
pub fn matrix_from_document(doc: &MatrixDocument, field: &str) -> Result<ComplexMatrix> {
    let rows = doc.len();
    if rows == 0 {
        return Err(Error::Document(format!("{field}: matrix has no rows")));
    }
    let cols = doc[0].len();
    for (i, row) in doc.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::Document(format!(
                "{field}: row {i} has {} entries, expected {cols}",
                row.len()
            )));
        }
    }
    let m = ComplexMatrix::from_fn(rows, cols, |i, j| {
        let [re, im] = doc[i][j];
        Complex64::new(re, im)
    });
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Document(format!("{field}: non-finite entry")));
    }
    Ok(m)
}

fn square_from_document(doc: &MatrixDocument, field: &str, n: usize) -> Result<ComplexMatrix> {
    let m = matrix_from_document(doc, field)?;
    if m.shape() != (n, n) {
        return Err(Error::Document(format!(
            "{field}: shape {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealStructureDocument {
    #[serde(rename = "M")]
    pub m: MatrixDocument,
    pub eps: Sign,
    pub eps_prime: Sign,
    pub eps_second: Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleDocument {
    pub schema_version: String,
    #[serde(default)]
    pub name: String,
    pub hilbert_dim: usize,
    pub algebra_basis: Vec<MatrixDocument>,
    pub dirac: MatrixDocument,
    #[serde(default)]
    pub real_structure: Option<RealStructureDocument>,
    #[serde(default)]
    pub grading: Option<MatrixDocument>,
    pub scalar_field: ScalarField,
    #[serde(default)]
    pub metadata: BTreeMap<String, Value>,
}

impl TripleDocument {
    pub fn from_triple(t: &FiniteSpectralTriple) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            name: t.name().to_string(),
            hilbert_dim: t.hilbert_dim(),
            algebra_basis: t.algebra_basis().iter().map(matrix_to_document).collect(),
            dirac: matrix_to_document(t.dirac()),
            real_structure: t.real_structure().map(|rs| RealStructureDocument {
                m: matrix_to_document(rs.j.matrix()),
                eps: rs.eps(),
                eps_prime: rs.eps_prime,
                eps_second: rs.eps_second,
            }),
            grading: t.grading().map(matrix_to_document),
            scalar_field: t.scalar_field(),
            metadata: BTreeMap::new(),
        }
    }

    /// Structural validation only; axioms are checked by `verify_axioms`.
    pub fn to_triple(&self) -> Result<FiniteSpectralTriple> {
        check_schema(&self.schema_version)?;
        let n = self.hilbert_dim;
        if n == 0 {
            return Err(Error::Document("hilbert_dim: must be positive".into()));
        }
        if self.algebra_basis.is_empty() {
            return Err(Error::Document("algebra_basis: empty".into()));
        }
        let basis = self
            .algebra_basis
            .iter()
            .enumerate()
            .map(|(i, m)| square_from_document(m, &format!("algebra_basis[{i}]"), n))
            .collect::<Result<Vec<_>>>()?;
        let dirac = square_from_document(&self.dirac, "dirac", n)?;
        let rs = match &self.real_structure {
            Some(doc) => {
                let m = square_from_document(&doc.m, "real_structure.M", n)?;
                let j = AntiUnitaryOperator::new(m, doc.eps)?;
                Some(RealStructure { j, eps_prime: doc.eps_prime, eps_second: doc.eps_second })
            }
            None => None,
        };
        let grading = self
            .grading
            .as_ref()
            .map(|g| square_from_document(g, "grading", n))
            .transpose()?;
        let name = if self.name.is_empty() { "document" } else { self.name.as_str() };
        FiniteSpectralTriple::new(name, basis, dirac, rs, grading, self.scalar_field)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistDocument {
    pub schema_version: String,
    pub matrix: MatrixDocument,
    #[serde(default)]
    pub metadata: BTreeMap<String, Value>,
}

impl TwistDocument {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            matrix: matrix_to_document(m),
            metadata: BTreeMap::new(),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        check_schema(&self.schema_version)?;
        let m = matrix_from_document(&self.matrix, "matrix")?;
        if !m.is_square() {
            return Err(Error::Document(format!("matrix: shape {}x{} is not square", m.nrows(), m.ncols())));
        }
        Ok(m)
    }
}

fn check_schema(version: &str) -> Result<()> {
    if version != SCHEMA_VERSION {
        return Err(Error::Document(format!(
            "schema_version: unsupported `{version}`, expected `{SCHEMA_VERSION}`"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub matrix: MatrixDocument,
    pub trace: f64,
    pub dirac_anticommutator: f64,
    pub local_dimension: usize,
    pub sign_partner: Option<usize>,
    pub report: ConstraintReport,
}

impl From<&Solution> for SolutionDocument {
    fn from(s: &Solution) -> Self {
        Self {
            matrix: matrix_to_document(&s.matrix),
            trace: s.trace,
            dirac_anticommutator: s.dirac_anticommutator,
            local_dimension: s.local_dimension,
            sign_partner: s.sign_partner,
            report: s.report.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSpaceDocument {
    pub schema_version: String,
    pub triple: String,
    pub options: SearchOptions,
    pub linear_basis: Vec<MatrixDocument>,
    pub solutions: Vec<SolutionDocument>,
    /// Degenerate on the finite space; admissible only on a product.
    pub product_only: Vec<SolutionDocument>,
    pub search_log: SearchLog,
}

impl SolutionSpaceDocument {
    pub fn new(triple: &str, options: &SearchOptions, space: &SolutionSpace) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            triple: triple.to_string(),
            options: options.clone(),
            linear_basis: space.linear_basis.iter().map(matrix_to_document).collect(),
            solutions: space.solutions.iter().map(SolutionDocument::from).collect(),
            product_only: space.product_only.iter().map(SolutionDocument::from).collect(),
            search_log: space.search_log.clone(),
        }
    }
}

/// Canonical pretty JSON with a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

/// Parses `text`; errors carry the line and column of the problem.
pub fn parse_document<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
}

pub fn read_document<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    parse_document(&text).map_err(|e| match e {
        Error::Document(msg) => Error::Document(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn triple_to_json(t: &FiniteSpectralTriple) -> String {
    to_canonical_json(&TripleDocument::from_triple(t))
}

pub fn triple_from_json(text: &str) -> Result<FiniteSpectralTriple> {
    parse_document::<TripleDocument>(text)?.to_triple()
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Document(format!("{}: not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{builtin, BUILTIN_TAGS};
    use crate::linalg::pauli;

    #[test]
    fn catalog_round_trips_byte_identically() {
        for tag in BUILTIN_TAGS {
            let t = builtin(tag).unwrap();
            let first = triple_to_json(&t);
            let back = triple_from_json(&first).unwrap();
            assert_eq!(triple_to_json(&back), first, "{tag}");
            assert_eq!(back.dirac(), t.dirac());
        }
    }

    #[test]
    fn complex_entries_are_pairs() {
        let doc = matrix_to_document(&pauli(2));
        assert_eq!(doc[0][1], [0.0, -1.0]);
        assert_eq!(serde_json::to_string(&doc).unwrap(), "[[[0.0,0.0],[0.0,-1.0]],[[0.0,1.0],[0.0,0.0]]]");
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let text = triple_to_json(&builtin("two-point").unwrap());
        let truncated = &text[..text.len() / 2];
        let e = triple_from_json(truncated).unwrap_err().to_string();
        assert!(e.contains("line"), "{e}");

        let mut doc: TripleDocument = parse_document(&text).unwrap();
        doc.dirac[1].pop();
        assert!(doc.to_triple().unwrap_err().to_string().contains("dirac: row 1"));

        let mut doc: TripleDocument = parse_document(&text).unwrap();
        doc.hilbert_dim = 3;
        assert!(doc.to_triple().unwrap_err().to_string().contains("algebra_basis[0]"));

        let mut doc: TripleDocument = parse_document(&text).unwrap();
        doc.schema_version = "9".into();
        assert!(doc.to_triple().unwrap_err().to_string().contains("schema_version"));

        let bad_sign = text.replace("\"eps\": 1", "\"eps\": 2");
        assert!(triple_from_json(&bad_sign).is_err());
    }

    #[test]
    fn metadata_is_sorted_and_kept() {
        let mut doc = TripleDocument::from_triple(&builtin("m2").unwrap());
        doc.metadata.insert("zeta".into(), Value::from(1));
        doc.metadata.insert("alpha".into(), Value::from("x"));
        let s = to_canonical_json(&doc);
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
        let back: TripleDocument = parse_document(&s).unwrap();
        assert_eq!(to_canonical_json(&back), s);
    }

    #[test]
    fn twist_document_round_trip() {
        let doc = TwistDocument::from_matrix(&pauli(3));
        let s = to_canonical_json(&doc);
        let m = parse_document::<TwistDocument>(&s).unwrap().to_matrix().unwrap();
        assert_eq!(m, pauli(3));
        let rect = TwistDocument { matrix: vec![vec![[1.0, 0.0], [0.0, 0.0]]], ..doc };
        assert!(rect.to_matrix().is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
