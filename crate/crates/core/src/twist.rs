//! Twisting operators, the twisted representation of `A ⊗ ℂ²`, and the
//! order-zero / first-order conditions in derived and direct form.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    acomm, c64, comm, matmul, ensure_finite, ensure_square, hermitian_residual, identity,
    involution_residual, max_operator_norm, nearest_kronecker_factorization, operator_norm, ComplexMatrix,
    IDENTITY_TOL, ZERO,
};
use crate::triple::{random_element_with, ConstraintReport, FiniteSpectralTriple};

/// Whether a twisting operator lives on the finite space or on a product space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwistScope {
    Finite,
    Product,
}

/// Candidate twisting operator. Construction only checks shape; use
/// [`validate_twisting_operator`] for the defining properties.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistingOperator {
    matrix: ComplexMatrix,
    scope: TwistScope,
}

impl TwistingOperator {
    pub fn new(matrix: ComplexMatrix, scope: TwistScope) -> Result<Self> {
        ensure_square(&matrix)?;
        ensure_finite(&matrix, "twisting operator")?;
        Ok(Self { matrix, scope })
    }

    pub fn finite(matrix: ComplexMatrix) -> Result<Self> {
        Self::new(matrix, TwistScope::Finite)
    }

    pub fn product(matrix: ComplexMatrix) -> Result<Self> {
        Self::new(matrix, TwistScope::Product)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn scope(&self) -> TwistScope {
        self.scope
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn check_dim(&self, other: &ComplexMatrix) -> Result<()> {
        if other.shape() != self.matrix.shape() {
            return Err(Error::DimensionMismatch(format!(
                "twisting operator is {n}x{n}, operand is {}x{}",
                other.nrows(),
                other.ncols(),
                n = self.dim()
            )));
        }
        Ok(())
    }
}

/// An element `(a, a′)` of `A ⊗ ℂ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraPair {
    pub a: ComplexMatrix,
    pub a_prime: ComplexMatrix,
}

impl AlgebraPair {
    pub fn new(a: ComplexMatrix, a_prime: ComplexMatrix) -> Result<Self> {
        ensure_square(&a)?;
        if a.shape() != a_prime.shape() {
            return Err(Error::DimensionMismatch("pair members differ in size".into()));
        }
        Ok(Self { a, a_prime })
    }

    /// Like [`AlgebraPair::new`] but also checks span membership.
    pub fn in_algebra(a: ComplexMatrix, a_prime: ComplexMatrix, t: &FiniteSpectralTriple) -> Result<Self> {
        let pair = Self::new(a, a_prime)?;
        for m in [&pair.a, &pair.a_prime] {
            let res = t.span_residual(m);
            if res > crate::linalg::SUBSPACE_TOL * m.norm().max(1.0) {
                return Err(Error::NotInSpan(res));
            }
        }
        Ok(pair)
    }

    /// `(a, a)`, the image of `a ⊗ 1`.
    pub fn diagonal(a: ComplexMatrix) -> Self {
        Self {
            a_prime: a.clone(),
            a,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            a: self.a.adjoint(),
            a_prime: self.a_prime.adjoint(),
        }
    }

    /// Componentwise product.
    pub fn mul(&self, other: &Self) -> Self {
        Self {
            a: &self.a * &other.a,
            a_prime: &self.a_prime * &other.a_prime,
        }
    }

    /// `α = a + a′`.
    pub fn sum(&self) -> ComplexMatrix {
        &self.a + &self.a_prime
    }

    /// `α′ = a − a′`.
    pub fn difference(&self) -> ComplexMatrix {
        &self.a - &self.a_prime
    }
}

/// Hermiticity, involution, nondegeneracy and commutation with the algebra.
pub fn validate_twisting_operator(
    t_op: &ComplexMatrix,
    triple: &FiniteSpectralTriple,
    tol: f64,
) -> ConstraintReport {
    let mut r = ConstraintReport::new();
    let n = triple.hilbert_dim();
    if t_op.shape() != (n, n) {
        r.record("dimension", f64::INFINITY, 0.0, false, format!(
            "operator is {}x{}, hilbert dimension is {n}",
            t_op.nrows(),
            t_op.ncols()
        ));
        return r;
    }
    r.check("hermitian", hermitian_residual(t_op), tol);
    r.check("involution", involution_residual(t_op), tol);

    let herm = (t_op + t_op.adjoint()) * c64(0.5, 0.0);
    let eig = herm.symmetric_eigen().eigenvalues;
    let plus = eig.iter().filter(|&&v| v > 0.5).count();
    let minus = eig.iter().filter(|&&v| v < -0.5).count();
    let trace = t_op.trace().re;
    r.record(
        "nondegenerate",
        trace.abs(),
        n as f64 - 0.5,
        plus >= 1 && minus >= 1,
        format!("eigenvalue multiplicities +1: {plus}, -1: {minus}"),
    );
    let alg = triple
        .algebra_basis()
        .iter()
        .map(|b| operator_norm(&comm(t_op, b)))
        .fold(0.0, f64::max);
    r.check("commutes_algebra", alg, tol);
    r
}

/// `π(a, a′) = (𝕀+T)/2·a + (𝕀−T)/2·a′`.
pub fn twisted_representation(t: &TwistingOperator, p: &AlgebraPair) -> Result<ComplexMatrix> {
    t.check_dim(&p.a)?;
    t.check_dim(&p.a_prime)?;
    Ok(represent(t.matrix(), p))
}

pub(crate) fn represent(t: &ComplexMatrix, p: &AlgebraPair) -> ComplexMatrix {
    let half = c64(0.5, 0.0);
    let sum = p.sum();
    let diff = p.difference();
    (&sum + t * &diff) * half
}

/// `(a, a′) ↦ (a′, a)`.
pub fn flip(p: &AlgebraPair) -> AlgebraPair {
    AlgebraPair {
        a: p.a_prime.clone(),
        a_prime: p.a.clone(),
    }
}

/// The induced automorphism on opposite-algebra pairs; also the swap.
pub fn flip_opposite(p_op: &AlgebraPair) -> AlgebraPair {
    flip(p_op)
}

/// `[D, π(a,a′)]_ρ = D·π(a,a′) − π(a′,a)·D`.
pub fn twisted_commutator(
    d: &ComplexMatrix,
    t: &TwistingOperator,
    p: &AlgebraPair,
) -> Result<ComplexMatrix> {
    t.check_dim(d)?;
    let pi = twisted_representation(t, p)?;
    let pi_flip = twisted_representation(t, &flip(p))?;
    Ok(d * pi - pi_flip * d)
}

fn check_triple(t: &TwistingOperator, triple: &FiniteSpectralTriple) -> Result<()> {
    if t.dim() != triple.hilbert_dim() {
        return Err(Error::DimensionMismatch(format!(
            "twisting operator is {n}x{n}, hilbert dimension is {}",
            triple.hilbert_dim(),
            n = t.dim()
        )));
    }
    Ok(())
}

fn order_zero_report(
    t_op: &ComplexMatrix,
    triple: &FiniteSpectralTriple,
    tol: f64,
    prefix: &str,
) -> Result<ConstraintReport> {
    let j = &triple.require_real_structure()?.j;
    let jt = j.hat(t_op);
    let mut r = ConstraintReport::new();
    r.check(format!("{prefix}twist_commutes_opposite_twist"), operator_norm(&comm(t_op, &jt)), tol);
    let alg = triple
        .algebra_basis()
        .iter()
        .map(|b| operator_norm(&comm(b, &jt)))
        .fold(0.0, f64::max);
    r.check(format!("{prefix}algebra_commutes_opposite_twist"), alg, tol);
    Ok(r)
}

/// `[T, ĴT] = 0` and `[b, ĴT] = 0` for every basis element `b`.
pub fn order_zero_conditions(
    t: &TwistingOperator,
    triple: &FiniteSpectralTriple,
    tol: f64,
) -> Result<ConstraintReport> {
    check_triple(t, triple)?;
    order_zero_report(t.matrix(), triple, tol, "")
}

/// Finite-space form of [`order_zero_conditions`].
pub fn finite_order_zero_conditions(
    t_finite: &ComplexMatrix,
    triple: &FiniteSpectralTriple,
    tol: f64,
) -> Result<ConstraintReport> {
    check_triple(&TwistingOperator::finite(t_finite.clone())?, triple)?;
    order_zero_report(t_finite, triple, tol, "finite_")
}

fn first_order_report(
    t_op: &ComplexMatrix,
    triple: &FiniteSpectralTriple,
    tol: f64,
    prefix: &str,
) -> Result<ConstraintReport> {
    let gate = order_zero_report(t_op, triple, tol, prefix)?;
    let j = &triple.require_real_structure()?.j;
    let mut r = ConstraintReport::new();
    r.record(
        format!("{prefix}order_zero_gate"),
        gate.max_residual(),
        tol,
        gate.overall_pass,
        "order-zero conditions are a precondition",
    );
    let dt = acomm(triple.dirac(), t_op);
    let jt = j.hat(t_op);
    r.check(
        format!("{prefix}dirac_twist_anticommutes_opposite_twist"),
        operator_norm(&acomm(&dt, &jt)),
        tol,
    );
    let alg = triple
        .algebra_basis()
        .iter()
        .map(|b| operator_norm(&comm(&dt, &j.hat(b))))
        .fold(0.0, f64::max);
    r.check(format!("{prefix}dirac_twist_commutes_opposite_algebra"), alg, tol);
    Ok(r)
}

/// `{{D,T}, ĴT} = 0` and `[{D,T}, Ĵb] = 0`, with the order-zero conditions as
/// a gate entry.
pub fn first_order_conditions(
    t: &TwistingOperator,
    triple: &FiniteSpectralTriple,
    tol: f64,
) -> Result<ConstraintReport> {
    check_triple(t, triple)?;
    first_order_report(t.matrix(), triple, tol, "")
}

/// Finite-space form of [`first_order_conditions`].
pub fn finite_first_order_conditions(
    t_finite: &ComplexMatrix,
    triple: &FiniteSpectralTriple,
    tol: f64,
) -> Result<ConstraintReport> {
    check_triple(&TwistingOperator::finite(t_finite.clone())?, triple)?;
    first_order_report(t_finite, triple, tol, "finite_")
}

fn unital(triple: &FiniteSpectralTriple) -> bool {
    let n = triple.hilbert_dim();
    triple.span_residual(&identity(n)) < 1e-8
}

/// Pairs used by the direct checks: basis pairs `(b, 0)`, `(0, b)`, `(b, −b)`,
/// the unit corners `(𝕀, 0)`, `(0, 𝕀)`, `(2𝕀, −𝕀)` when the algebra is unital,
/// then seeded random pairs.
fn sample_pairs(triple: &FiniteSpectralTriple, num_samples: usize, seed: u64) -> Vec<AlgebraPair> {
    let n = triple.hilbert_dim();
    let zero = ComplexMatrix::zeros(n, n);
    let mut pairs = Vec::new();
    for b in triple.algebra_basis() {
        pairs.push(AlgebraPair { a: b.clone(), a_prime: zero.clone() });
        pairs.push(AlgebraPair { a: zero.clone(), a_prime: b.clone() });
        pairs.push(AlgebraPair { a: b.clone(), a_prime: -b });
    }
    if unital(triple) {
        let id = identity(n);
        pairs.push(AlgebraPair { a: id.clone(), a_prime: zero.clone() });
        pairs.push(AlgebraPair { a: zero, a_prime: id.clone() });
        pairs.push(AlgebraPair { a: &id * c64(2.0, 0.0), a_prime: -id });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..num_samples {
        let a = random_element_with(triple, &mut rng);
        let a_prime = random_element_with(triple, &mut rng);
        pairs.push(AlgebraPair { a, a_prime });
    }
    pairs
}

/// Max over sampled pairs of `‖[π(a,a′), Ĵ(π(b†,b′†))]‖`.
///
/// The condition is real-bilinear in the two pairs, so the basis pairs alone
/// already decide it; corners and random samples are extra coverage.
pub fn direct_twisted_order_zero(
    t: &TwistingOperator,
    triple: &FiniteSpectralTriple,
    num_samples: usize,
    seed: u64,
) -> Result<f64> {
    check_triple(t, triple)?;
    let j = &triple.require_real_structure()?.j;
    let pairs = sample_pairs(triple, num_samples, seed);
    let reps: Vec<ComplexMatrix> = pairs.iter().map(|p| represent(t.matrix(), p)).collect();
    let opposite: Vec<ComplexMatrix> = pairs
        .iter()
        .map(|q| j.hat(&represent(t.matrix(), &q.adjoint())))
        .collect();
    Ok(reps
        .par_iter()
        .map(|x| {
            max_operator_norm(opposite.iter().map(|y| comm(x, y)))
        })
        .reduce(|| 0.0, f64::max))
}

/// Max over sampled pairs of the outer twisted commutator
/// `X·Ĵ(π(b†,b′†)) − Ĵ(π(b′†,b†))·X` with `X = [D, π(a,a′)]_ρ`.
pub fn direct_twisted_first_order(
    t: &TwistingOperator,
    triple: &FiniteSpectralTriple,
    num_samples: usize,
    seed: u64,
) -> Result<f64> {
    check_triple(t, triple)?;
    let j = &triple.require_real_structure()?.j;
    let d = triple.dirac();
    let pairs = sample_pairs(triple, num_samples, seed);
    let inner: Vec<ComplexMatrix> = pairs
        .iter()
        .map(|p| d * represent(t.matrix(), p) - represent(t.matrix(), &flip(p)) * d)
        .collect();
    let opposite: Vec<(ComplexMatrix, ComplexMatrix)> = pairs
        .iter()
        .map(|q| {
            let q_adj = q.adjoint();
            (
                j.hat(&represent(t.matrix(), &q_adj)),
                j.hat(&represent(t.matrix(), &flip_opposite(&q_adj))),
            )
        })
        .collect();
    Ok(inner
        .par_iter()
        .map(|x| {
            max_operator_norm(opposite.iter().map(|(y, y_flip)| matmul(x, y) - matmul(y_flip, x)))
        })
        .reduce(|| 0.0, f64::max))
}

/// Compares derived and direct forms of both conditions on one instance, and
/// evaluates the two algebraic identities used to relate them.
pub fn equivalence_crosscheck(
    t: &TwistingOperator,
    triple: &FiniteSpectralTriple,
    num_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<ConstraintReport> {
    check_triple(t, triple)?;
    let j = &triple.require_real_structure()?.j;
    let mut r = ConstraintReport::new();

    let oz = order_zero_conditions(t, triple, tol)?;
    let oz_direct = direct_twisted_order_zero(t, triple, num_samples, seed)?;
    let oz_direct_pass = oz_direct < tol;
    r.record(
        "order_zero_agreement",
        oz_direct,
        tol,
        oz.overall_pass == oz_direct_pass,
        format!("derived pass: {}, direct pass: {oz_direct_pass}", oz.overall_pass),
    );

    if oz.overall_pass {
        let fo = first_order_conditions(t, triple, tol)?;
        let fo_direct = direct_twisted_first_order(t, triple, num_samples, seed)?;
        let fo_direct_pass = fo_direct < tol;
        r.record(
            "first_order_agreement",
            fo_direct,
            tol,
            fo.overall_pass == fo_direct_pass,
            format!("derived pass: {}, direct pass: {fo_direct_pass}", fo.overall_pass),
        );
    } else {
        r.not_applicable("first_order_agreement", tol, "order-zero conditions fail");
    }

    // Sampled α: basis, the unit, and random elements.
    let n = triple.hilbert_dim();
    let mut alphas: Vec<ComplexMatrix> = triple.algebra_basis().to_vec();
    if unital(triple) {
        alphas.push(identity(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    alphas.extend((0..num_samples).map(|_| random_element_with(triple, &mut rng)));

    let tm = t.matrix();
    let d = triple.dirac();
    let dt = acomm(d, tm);
    let mut split = 0.0_f64;
    let mut split_applies = true;
    let mut closing = 0.0_f64;
    let mut closing_applies = true;
    for alpha in &alphas {
        let scale = alpha.norm().max(1.0);
        if operator_norm(&comm(tm, alpha)) > tol * scale {
            split_applies = false;
        } else {
            let lhs = acomm(d, &(tm * alpha));
            let rhs = comm(d, alpha) * tm + alpha * &dt;
            split = split.max(operator_norm(&(lhs - rhs)));
        }
        let hat = j.hat(alpha);
        if operator_norm(&comm(tm, &hat)) > tol * scale {
            closing_applies = false;
        } else {
            let lhs = comm(&dt, &hat);
            let rhs = acomm(&comm(d, &hat), tm);
            closing = closing.max(operator_norm(&(lhs - rhs)));
        }
    }
    if split_applies {
        r.check("identity_anticommutator_split", split, IDENTITY_TOL);
    } else {
        r.not_applicable("identity_anticommutator_split", IDENTITY_TOL, "T does not commute with the algebra");
    }
    if closing_applies {
        r.check("identity_closing", closing, IDENTITY_TOL);
    } else {
        r.not_applicable("identity_closing", IDENTITY_TOL, "T does not commute with the opposite algebra");
    }
    Ok(r)
}

/// Splits a selfadjoint involution `T = A ⊗ B` into selfadjoint involutive
/// factors `(T_manifold, T_finite)` with `T_manifold` of size `d1`.
///
/// The raw Kronecker factors are rescaled to unit spectral modulus, then a
/// common unit phase is moved from one factor to the other so that both become
/// selfadjoint. The leftover overall sign is fixed by making the first nonzero
/// diagonal entry of `T_manifold` positive (first nonzero entry if the
/// diagonal vanishes).
pub fn factorize_selfadjoint(
    t: &ComplexMatrix,
    d1: usize,
    d2: usize,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    ensure_finite(t, "operator")?;
    let kf = nearest_kronecker_factorization(t, d1, d2)?;
    let scale = t.norm().max(1.0);
    if kf.residual > IDENTITY_TOL * scale {
        return Err(Error::NotProductOperator(kf.residual / scale));
    }
    let (mut left, mut right) = (kf.left, kf.right);
    let lambda = right.norm_squared() / d2 as f64;
    if lambda == 0.0 {
        return Err(Error::NotProductOperator(f64::INFINITY));
    }
    left *= c64(lambda.sqrt(), 0.0);
    right /= c64(lambda.sqrt(), 0.0);

    let tr_sq = (&left * &left).trace();
    if tr_sq.norm() == 0.0 {
        return Err(Error::NotProductOperator(f64::INFINITY));
    }
    let tau = (tr_sq.conj() / tr_sq.norm()).sqrt();
    left *= tau;
    right /= tau;

    let pivot = (0..d1)
        .map(|i| left[(i, i)])
        .find(|z| z.norm() > 1e-12)
        .or_else(|| left.iter().copied().find(|z| z.norm() > 1e-12))
        .unwrap_or(ZERO);
    let flip_sign = if pivot.re.abs() > 1e-12 { pivot.re < 0.0 } else { pivot.im < 0.0 };
    if flip_sign {
        left = -left;
        right = -right;
    }
    Ok((left, right))
}
