//! Finite real spectral triples: data model, axiom verification, KO signs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    acomm, c64, comm, ensure_finite, ensure_square, hermitian_residual, identity,
    involution_residual, operator_norm, span_residual, AntiUnitaryOperator, ComplexMatrix, Sign,
    SUBSPACE_TOL,
};

// ---------------------------------------------------------------------------
// Constraint reports

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintEntry {
    pub name: String,
    /// `None` for not-applicable entries.
    pub residual: Option<f64>,
    pub threshold: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl ConstraintEntry {
    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

/// Per-condition residuals with verdicts. Not-applicable entries never fail.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub entries: Vec<ConstraintEntry>,
    pub overall_pass: bool,
}

impl ConstraintReport {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
            overall_pass: true,
        }
    }

    /// Records `residual < threshold` (NaN fails).
    pub fn check(&mut self, name: impl Into<String>, residual: f64, threshold: f64) -> bool {
        let pass = residual < threshold;
        self.push(ConstraintEntry {
            name: name.into(),
            residual: Some(residual),
            threshold,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            note: None,
        });
        pass
    }

    /// Records an entry whose verdict is decided by the caller.
    pub fn record(&mut self, name: impl Into<String>, residual: f64, threshold: f64, pass: bool, note: impl Into<String>) {
        self.push(ConstraintEntry {
            name: name.into(),
            residual: Some(residual),
            threshold,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            note: Some(note.into()),
        });
    }

    pub fn not_applicable(&mut self, name: impl Into<String>, threshold: f64, note: impl Into<String>) {
        self.push(ConstraintEntry {
            name: name.into(),
            residual: None,
            threshold,
            verdict: Verdict::NotApplicable,
            note: Some(note.into()),
        });
    }

    pub fn push(&mut self, entry: ConstraintEntry) {
        self.overall_pass &= entry.passed();
        self.entries.push(entry);
    }

    /// Appends every entry of `other`, prefixing names.
    pub fn extend_prefixed(&mut self, prefix: &str, other: &ConstraintReport) {
        for e in &other.entries {
            let mut e = e.clone();
            e.name = format!("{prefix}{}", e.name);
            self.push(e);
        }
    }

    pub fn entry(&self, name: &str) -> Option<&ConstraintEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.entry(name).and_then(|e| e.residual)
    }

    pub fn passed(&self, name: &str) -> Option<bool> {
        self.entry(name).map(ConstraintEntry::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintEntry> {
        self.entries.iter().filter(|e| e.verdict == Verdict::Fail)
    }

    pub fn max_residual(&self) -> f64 {
        self.entries
            .iter()
            .filter_map(|e| e.residual)
            .fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Triples

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarField {
    Real,
    Complex,
}

/// `(J, ε, ε′, ε″)`; ε is carried by the antiunitary operator itself.
#[derive(Debug, Clone, PartialEq)]
pub struct RealStructure {
    pub j: AntiUnitaryOperator,
    pub eps_prime: Sign,
    pub eps_second: Sign,
}

impl RealStructure {
    pub fn new(m: ComplexMatrix, eps: Sign, eps_prime: Sign, eps_second: Sign) -> Result<Self> {
        Ok(Self {
            j: AntiUnitaryOperator::new(m, eps)?,
            eps_prime,
            eps_second,
        })
    }

    pub fn eps(&self) -> Sign {
        self.j.epsilon()
    }
}

/// A finite spectral triple given by a spanning set of the represented algebra.
#[derive(Debug, Clone)]
pub struct FiniteSpectralTriple {
    name: String,
    hilbert_dim: usize,
    algebra_basis: Vec<ComplexMatrix>,
    dirac: ComplexMatrix,
    real_structure: Option<RealStructure>,
    grading: Option<ComplexMatrix>,
    scalar_field: ScalarField,
}

impl FiniteSpectralTriple {
    /// Structural validation only: shapes and finiteness. Axioms are the job
    /// of [`verify_axioms`].
    pub fn new(
        name: impl Into<String>,
        algebra_basis: Vec<ComplexMatrix>,
        dirac: ComplexMatrix,
        real_structure: Option<RealStructure>,
        grading: Option<ComplexMatrix>,
        scalar_field: ScalarField,
    ) -> Result<Self> {
        let n = ensure_square(&dirac)?;
        if n == 0 {
            return Err(Error::InvalidConfig("hilbert dimension must be positive".into()));
        }
        ensure_finite(&dirac, "dirac")?;
        let check = |m: &ComplexMatrix, what: &'static str| -> Result<()> {
            if m.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "{what} is {}x{}, hilbert dimension is {n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            ensure_finite(m, what)
        };
        for b in &algebra_basis {
            check(b, "algebra basis element")?;
        }
        if let Some(g) = &grading {
            check(g, "grading")?;
        }
        if let Some(rs) = &real_structure {
            check(rs.j.matrix(), "real structure")?;
        }
        Ok(Self {
            name: name.into(),
            hilbert_dim: n,
            algebra_basis,
            dirac,
            real_structure,
            grading,
            scalar_field,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }
    pub fn algebra_basis(&self) -> &[ComplexMatrix] {
        &self.algebra_basis
    }
    pub fn dirac(&self) -> &ComplexMatrix {
        &self.dirac
    }
    pub fn real_structure(&self) -> Option<&RealStructure> {
        self.real_structure.as_ref()
    }
    pub fn grading(&self) -> Option<&ComplexMatrix> {
        self.grading.as_ref()
    }
    pub fn scalar_field(&self) -> ScalarField {
        self.scalar_field
    }

    pub fn require_real_structure(&self) -> Result<&RealStructure> {
        self.real_structure.as_ref().ok_or(Error::MissingRealStructure)
    }

    /// Same triple with a different Dirac operator.
    pub fn with_dirac(&self, dirac: ComplexMatrix) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.algebra_basis.clone(),
            dirac,
            self.real_structure.clone(),
            self.grading.clone(),
            self.scalar_field,
        )
    }

    pub fn with_grading(&self, grading: Option<ComplexMatrix>) -> Result<Self> {
        Self::new(
            self.name.clone(),
            self.algebra_basis.clone(),
            self.dirac.clone(),
            self.real_structure.clone(),
            grading,
            self.scalar_field,
        )
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Distance from `x` to the span of the algebra basis over the scalar field.
    pub fn span_residual(&self, x: &ComplexMatrix) -> f64 {
        span_residual(&self.algebra_basis, x, self.scalar_field == ScalarField::Real)
    }
}

/// Checks every axiom of a real, graded finite spectral triple independently.
pub fn verify_axioms(t: &FiniteSpectralTriple, tol: f64) -> ConstraintReport {
    let mut r = ConstraintReport::new();
    let n = t.hilbert_dim();
    let d = t.dirac();
    let basis = t.algebra_basis();

    r.check("dirac_hermitian", hermitian_residual(d), tol);

    let closure = basis
        .iter()
        .map(|b| t.span_residual(&b.adjoint()) / b.norm().max(1.0))
        .fold(0.0, f64::max);
    r.check("algebra_adjoint_closed", closure, SUBSPACE_TOL.max(tol));

    match t.grading() {
        Some(g) => {
            r.check("grading_hermitian", hermitian_residual(g), tol);
            r.check("grading_involution", involution_residual(g), tol);
            r.check("grading_anticommutes_dirac", operator_norm(&acomm(g, d)), tol);
            let alg = basis
                .iter()
                .map(|b| operator_norm(&comm(g, b)))
                .fold(0.0, f64::max);
            r.check("grading_commutes_algebra", alg, tol);
        }
        None => {
            for name in [
                "grading_hermitian",
                "grading_involution",
                "grading_anticommutes_dirac",
                "grading_commutes_algebra",
            ] {
                r.not_applicable(name, tol, "no grading");
            }
        }
    }

    match t.real_structure() {
        Some(rs) => {
            let j = &rs.j;
            r.check("real_structure_unitary", j.unitarity_residual(), tol);
            r.check("sign_epsilon", j.epsilon_residual(), tol);
            let jd = j.hat(d);
            r.check(
                "sign_epsilon_prime",
                operator_norm(&(jd - d * c64(rs.eps_prime.value(), 0.0))),
                tol,
            );
            match t.grading() {
                Some(g) => {
                    let jg = j.hat(g);
                    r.check(
                        "sign_epsilon_second",
                        operator_norm(&(jg - g * c64(rs.eps_second.value(), 0.0))),
                        tol,
                    );
                }
                None => r.not_applicable("sign_epsilon_second", tol, "no grading"),
            }
            let opposite: Vec<ComplexMatrix> = basis.iter().map(|b| j.hat(&b.adjoint())).collect();
            let mut order_zero = 0.0_f64;
            let mut first_order = 0.0_f64;
            for bi in basis {
                let dbi = comm(d, bi);
                for bj in &opposite {
                    order_zero = order_zero.max(operator_norm(&comm(bi, bj)));
                    first_order = first_order.max(operator_norm(&comm(&dbi, bj)));
                }
            }
            r.check("order_zero", order_zero, tol);
            r.check("first_order", first_order, tol);
        }
        None => {
            for name in [
                "real_structure_unitary",
                "sign_epsilon",
                "sign_epsilon_prime",
                "sign_epsilon_second",
                "order_zero",
                "first_order",
            ] {
                r.not_applicable(name, tol, "no real structure");
            }
        }
    }
    debug_assert_eq!(identity(n).nrows(), n);
    r
}

/// KO-dimension mod 8 from the sign triple, or `None` when no row matches.
///
/// Rows follow the standard table of real spectral triples
/// (Connes, "Noncommutative geometry and reality", 1995):
///
/// | n  | 0 | 1 | 2 | 3 | 4 | 5 | 6 | 7 |
/// |----|---|---|---|---|---|---|---|---|
/// | ε  | + | + | − | − | − | − | + | + |
/// | ε′ | + | − | + | + | + | − | + | + |
/// | ε″ | + |   | − |   | + |   | − |   |
///
/// Odd rows carry no ε″, so a present ε″ only matches even rows and an absent
/// one only odd rows.
pub fn ko_dimension(eps: Sign, eps_prime: Sign, eps_second: Option<Sign>) -> Option<u8> {
    use Sign::{Minus as M, Plus as P};
    const TABLE: [(u8, Sign, Sign, Option<Sign>); 8] = [
        (0, P, P, Some(P)),
        (1, P, M, None),
        (2, M, P, Some(M)),
        (3, M, P, None),
        (4, M, P, Some(P)),
        (5, M, M, None),
        (6, P, P, Some(M)),
        (7, P, P, None),
    ];
    TABLE
        .iter()
        .find(|(_, e, ep, es)| *e == eps && *ep == eps_prime && *es == eps_second)
        .map(|row| row.0)
}

/// Restricts the algebra to a †-closed subspace of its span.
pub fn subalgebra_restriction(
    t: &FiniteSpectralTriple,
    sub_basis: Vec<ComplexMatrix>,
) -> Result<FiniteSpectralTriple> {
    let real = t.scalar_field() == ScalarField::Real;
    for b in &sub_basis {
        if b.shape() != (t.hilbert_dim(), t.hilbert_dim()) {
            return Err(Error::DimensionMismatch("sub-basis element size".into()));
        }
        let res = t.span_residual(b);
        if res > SUBSPACE_TOL * b.norm().max(1.0) {
            return Err(Error::NotInSpan(res));
        }
    }
    for b in &sub_basis {
        let res = span_residual(&sub_basis, &b.adjoint(), real);
        if res > SUBSPACE_TOL * b.norm().max(1.0) {
            return Err(Error::NotAdjointClosed(res));
        }
    }
    FiniteSpectralTriple::new(
        format!("{}|restricted", t.name()),
        sub_basis,
        t.dirac().clone(),
        t.real_structure().cloned(),
        t.grading().cloned(),
        t.scalar_field(),
    )
}

/// Seeded standard-normal combination of the algebra basis.
pub fn random_element(t: &FiniteSpectralTriple, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_element_with(t, &mut rng)
}

pub(crate) fn random_element_with(t: &FiniteSpectralTriple, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let n = t.hilbert_dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for b in t.algebra_basis() {
        let re: f64 = StandardNormal.sample(rng);
        let coeff = match t.scalar_field() {
            ScalarField::Real => c64(re, 0.0),
            ScalarField::Complex => c64(re, StandardNormal.sample(rng)),
        };
        out += b * coeff;
    }
    out
}
