//! Classification of finite twisting operators: a linear constraint space
//! followed by a nonconvex search for hermitian involutions inside it.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    acomm, c64, combine_real, comm, commutant_basis, constrained_subspace, frobenius_norm, hermitian_part_of_span,
    identity, matmul, operator_norm, svd, AntiUnitaryOperator, ComplexMatrix, LinearMap, SUBSPACE_TOL,
};
use crate::triple::{ConstraintReport, FiniteSpectralTriple};
use crate::twist::{
    direct_twisted_first_order, equivalence_crosscheck,
    finite_first_order_conditions, finite_order_zero_conditions, validate_twisting_operator,
    TwistingOperator,
};

/// Knobs for [`involution_search`], [`brute_force_enumerate`] and [`classify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub starts: usize,
    pub seed: u64,
    /// Stop a local refinement once every residual component is below this.
    pub residual_target: f64,
    pub max_iterations: usize,
    pub include_first_order: bool,
    /// Verification tolerance for the final reports.
    pub tol: f64,
    /// Two solutions are the same if their Frobenius distance is below this.
    pub dedup: f64,
    /// Random pairs added to the direct checks.
    pub direct_samples: usize,
    /// Points per edge of the brute-force coefficient grid.
    pub grid_resolution: usize,
    pub max_grid_points: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            starts: 64,
            seed: 0,
            residual_target: 1e-10,
            max_iterations: 200,
            include_first_order: true,
            tol: 1e-8,
            dedup: 1e-6,
            direct_samples: 8,
            grid_resolution: 6,
            max_grid_points: 250_000,
        }
    }
}

/// One admissible twisting operator with its full verification report.
#[derive(Debug, Clone)]
pub struct Solution {
    pub matrix: ComplexMatrix,
    pub trace: f64,
    /// `‖{D_F, T_F}‖`; nonzero means the solution is not a grading.
    pub dirac_anticommutator: f64,
    /// Dimension of the solution set through this point (0 = isolated).
    pub local_dimension: usize,
    /// Index of `−T_F` in the same list.
    pub sign_partner: Option<usize>,
    pub report: ConstraintReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub start: usize,
    pub warm: bool,
    pub iterations: usize,
    pub converged: bool,
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchLog {
    pub method: String,
    pub seed: u64,
    pub starts: Vec<StartRecord>,
    pub converged: usize,
    pub rejected_degenerate: usize,
    pub rejected_verification: usize,
}

#[derive(Debug, Clone)]
pub struct SolutionSpace {
    /// Real-linear, Frobenius-orthonormal basis of the hermitian solutions of
    /// the linear constraints.
    pub linear_basis: Vec<ComplexMatrix>,
    pub solutions: Vec<Solution>,
    /// `±𝕀`-type involutions that pass every condition but are degenerate on
    /// the finite space. They are nondegenerate as `γ_M ⊗ T_F` on a product,
    /// so they are reported here, flagged, rather than dropped.
    pub product_only: Vec<Solution>,
    pub search_log: SearchLog,
}

impl SolutionSpace {
    pub fn isolated(&self) -> impl Iterator<Item = &Solution> {
        self.solutions.iter().filter(|s| s.local_dimension == 0)
    }

    /// Dimensions of the non-isolated solution families, sorted and unique.
    pub fn manifold_dimensions(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self
            .solutions
            .iter()
            .map(|s| s.local_dimension)
            .filter(|&d| d > 0)
            .collect();
        dims.sort_unstable();
        dims.dedup();
        dims
    }
}

// ---------------------------------------------------------------------------
// Linear stage

/// Hermitian `X` with `[X, b] = 0`, `[X, Ĵb] = 0` and, optionally,
/// `[{D, X}, Ĵb] = 0` for every basis element `b`.
pub fn linear_solution_space(
    t: &FiniteSpectralTriple,
    include_first_order: bool,
) -> Result<Vec<ComplexMatrix>> {
    let j = &t.require_real_structure()?.j;
    let n = t.hilbert_dim();
    let opposite: Vec<ComplexMatrix> = t.algebra_basis().iter().map(|b| j.hat(b)).collect();
    let mut generators = t.algebra_basis().to_vec();
    generators.extend(opposite.iter().cloned());
    let mut space = commutant_basis(&generators, n, SUBSPACE_TOL)?;
    if include_first_order {
        let d = t.dirac();
        let maps: Vec<LinearMap<'_>> = opposite
            .iter()
            .map(|o| Box::new(move |x: &ComplexMatrix| comm(&acomm(d, x), o)) as LinearMap<'_>)
            .collect();
        space = constrained_subspace(space, &maps, SUBSPACE_TOL);
    }
    Ok(hermitian_part_of_span(&space, SUBSPACE_TOL))
}

// ---------------------------------------------------------------------------
// Nonlinear stage

/// Residual system `X² − 𝕀`, `[X, ĴX]` and optionally `{{D,X}, ĴX}` over the
/// real coefficients of `X` in a hermitian basis.
struct InvolutionSystem<'a> {
    basis: &'a [ComplexMatrix],
    opposite: Vec<ComplexMatrix>,
    dirac_basis: Vec<ComplexMatrix>,
    dirac: &'a ComplexMatrix,
    j: &'a AntiUnitaryOperator,
    first_order: bool,
}

impl<'a> InvolutionSystem<'a> {
    fn new(basis: &'a [ComplexMatrix], t: &'a FiniteSpectralTriple, first_order: bool) -> Result<Self> {
        let j = &t.require_real_structure()?.j;
        let d = t.dirac();
        Ok(Self {
            basis,
            opposite: basis.iter().map(|b| j.hat(b)).collect(),
            dirac_basis: basis.iter().map(|b| acomm(d, b)).collect(),
            dirac: d,
            j,
            first_order,
        })
    }

    fn matrix(&self, c: &DVector<f64>) -> ComplexMatrix {
        combine_real(self.basis, c.as_slice())
    }

    fn evaluate(&self, c: &DVector<f64>, with_jacobian: bool) -> (DVector<f64>, Option<DMatrix<f64>>) {
        let x = self.matrix(c);
        let n = x.nrows();
        let jx = self.j.hat(&x);
        let dx = acomm(self.dirac, &x);
        let mut parts = vec![matmul(&x, &x) - identity(n), comm(&x, &jx)];
        if self.first_order {
            parts.push(acomm(&dx, &jx));
        }
        let r = flatten(&parts);
        if !with_jacobian {
            return (r, None);
        }
        let k = self.basis.len();
        let mut jac = DMatrix::zeros(r.len(), k);
        for i in 0..k {
            let b = &self.basis[i];
            let jb = &self.opposite[i];
            let mut cols = vec![acomm(b, &x), comm(b, &jx) + comm(&x, jb)];
            if self.first_order {
                cols.push(acomm(&self.dirac_basis[i], &jx) + acomm(&dx, jb));
            }
            jac.set_column(i, &flatten(&cols));
        }
        (r, Some(jac))
    }
}

fn flatten(parts: &[ComplexMatrix]) -> DVector<f64> {
    let len: usize = parts.iter().map(|p| 2 * p.len()).sum();
    let mut out = DVector::zeros(len);
    let mut idx = 0;
    for p in parts {
        for z in p.iter() {
            out[idx] = z.re;
            out[idx + 1] = z.im;
            idx += 2;
        }
    }
    out
}

/// Infinite if any component is not finite.
fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m: f64, x| if x.is_finite() { m.max(x.abs()) } else { f64::INFINITY })
}

struct Refined {
    coeffs: DVector<f64>,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

/// Levenberg–Marquardt on `½‖r(c)‖²`.
fn refine(system: &InvolutionSystem<'_>, start: DVector<f64>, opts: &SearchOptions) -> Refined {
    let k = start.len();
    let mut c = start;
    let (mut r, mut jac) = system.evaluate(&c, true);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut history = vec![r.norm()];
    let mut iterations = 0;
    let mut polish = 0;
    while iterations < opts.max_iterations {
        if max_abs(&r) < opts.residual_target {
            // a few extra steps take the converged point to working precision
            if polish == 3 || max_abs(&r) < 1e-15 {
                break;
            }
            polish += 1;
        }
        iterations += 1;
        let jm = jac.as_ref().expect("jacobian requested");
        let jtj = jm.transpose() * jm;
        let grad = jm.transpose() * &r;
        let mut accepted = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for i in 0..k {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|ch| ch.solve(&(-&grad))) else {
                lambda *= 10.0;
                continue;
            };
            let trial = &c + &step;
            let (tr, _) = system.evaluate(&trial, false);
            let tc = tr.norm_squared();
            if tc.is_finite() && tc < cost {
                c = trial;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        let (nr, nj) = system.evaluate(&c, true);
        r = nr;
        jac = nj;
        cost = r.norm_squared();
        history.push(cost.sqrt());
        if !accepted {
            break;
        }
    }
    let converged = max_abs(&r) < opts.residual_target;
    Refined { coeffs: c, iterations, converged, history }
}

/// `k − rank(J)` at `c`.
fn local_dimension(system: &InvolutionSystem<'_>, c: &DVector<f64>) -> usize {
    let (_, jac) = system.evaluate(c, true);
    let jac = jac.expect("jacobian requested");
    let k = jac.ncols();
    let d = svd(&jac);
    let cut = 1e-6 * d.max_singular_value().max(1.0);
    k - d.singular_values.iter().filter(|&&s| s > cut).count()
}

fn coefficients_of(basis: &[ComplexMatrix], x: &ComplexMatrix) -> DVector<f64> {
    DVector::from_iterator(basis.len(), basis.iter().map(|b| b.dotc(x).re))
}

/// Seeded multistart search for hermitian involutions in `space`, with warm
/// starts from `±Γ_F` projected onto the space.
pub fn involution_search(
    space: &[ComplexMatrix],
    t: &FiniteSpectralTriple,
    opts: &SearchOptions,
) -> Result<SolutionSpace> {
    let mut log = SearchLog {
        method: "multistart_levenberg_marquardt".into(),
        seed: opts.seed,
        ..SearchLog::default()
    };
    if space.is_empty() {
        t.require_real_structure()?;
        return Ok(SolutionSpace {
            linear_basis: Vec::new(),
            solutions: Vec::new(),
            product_only: Vec::new(),
            search_log: log,
        });
    }
    let system = InvolutionSystem::new(space, t, opts.include_first_order)?;
    let n = t.hilbert_dim();
    let k = space.len();

    let mut starts: Vec<(bool, DVector<f64>)> = Vec::new();
    if let Some(g) = t.grading() {
        let c = coefficients_of(space, g);
        if c.norm() > 1e-12 {
            starts.push((true, c.clone()));
            starts.push((true, -c));
        }
    }
    let radius = (n as f64).sqrt();
    for i in 0..opts.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(i as u64);
        let mut c = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
        let norm = c.norm();
        if norm > 0.0 {
            c *= radius / norm;
        }
        starts.push((false, c));
    }

    let results: Vec<Refined> = starts
        .par_iter()
        .map(|(_, c)| refine(&system, c.clone(), opts))
        .collect();
    let mut candidates = Vec::new();
    for (idx, ((warm, _), res)) in starts.iter().zip(results).enumerate() {
        log.starts.push(StartRecord {
            start: idx,
            warm: *warm,
            iterations: res.iterations,
            converged: res.converged,
            residual_history: res.history,
        });
        if res.converged {
            log.converged += 1;
            candidates.push(res.coeffs);
        }
    }
    finalize(space, t, &system, candidates, opts, log)
}

/// Dedup, sign partners, nondegeneracy split, full verification, canonical order.
fn finalize(
    space: &[ComplexMatrix],
    t: &FiniteSpectralTriple,
    system: &InvolutionSystem<'_>,
    candidates: Vec<DVector<f64>>,
    opts: &SearchOptions,
    mut log: SearchLog,
) -> Result<SolutionSpace> {
    let n = t.hilbert_dim();
    let mut unique: Vec<DVector<f64>> = Vec::new();
    let with_partners = candidates.into_iter().flat_map(|c| [c.clone(), -c]);
    for c in with_partners {
        // coefficient distance equals Frobenius distance for an orthonormal basis
        if unique.iter().all(|u| (u - &c).norm() >= opts.dedup) {
            unique.push(c);
        }
    }

    let evaluated: Vec<Result<(bool, Solution)>> = unique
        .par_iter()
        .map(|c| {
            let x = system.matrix(c);
            let x = (&x + x.adjoint()) * c64(0.5, 0.0);
            let trace = x.trace().re;
            let degenerate = trace.abs() >= n as f64 - 0.5;
            let report = full_report(&x, t, opts)?;
            Ok((
                degenerate,
                Solution {
                    dirac_anticommutator: operator_norm(&acomm(t.dirac(), &x)),
                    local_dimension: local_dimension(system, c),
                    trace,
                    matrix: x,
                    sign_partner: None,
                    report,
                },
            ))
        })
        .collect();

    let mut solutions = Vec::new();
    let mut product_only = Vec::new();
    for item in evaluated {
        let (degenerate, sol) = item?;
        if degenerate {
            log.rejected_degenerate += 1;
            let passes_rest = sol
                .report
                .entries
                .iter()
                .filter(|e| e.name != "validate.nondegenerate")
                .all(|e| e.passed());
            if passes_rest {
                product_only.push(sol);
            }
        } else if sol.report.overall_pass {
            solutions.push(sol);
        } else {
            log.rejected_verification += 1;
        }
    }
    canonical_order(&mut solutions, opts.dedup);
    canonical_order(&mut product_only, opts.dedup);
    Ok(SolutionSpace {
        linear_basis: space.to_vec(),
        solutions,
        product_only,
        search_log: log,
    })
}

fn quantize(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

fn canonical_cmp(a: &Solution, b: &Solution) -> Ordering {
    quantize(a.trace).cmp(&quantize(b.trace)).then_with(|| {
        for (x, y) in a.matrix.transpose().iter().zip(b.matrix.transpose().iter()) {
            let o = quantize(x.re)
                .cmp(&quantize(y.re))
                .then(quantize(x.im).cmp(&quantize(y.im)));
            if o != Ordering::Equal {
                return o;
            }
        }
        Ordering::Equal
    })
}

fn canonical_order(list: &mut [Solution], dedup: f64) {
    list.sort_by(canonical_cmp);
    for i in 0..list.len() {
        let neg = -&list[i].matrix;
        list[i].sign_partner = (0..list.len()).find(|&j| frobenius_norm(&(&list[j].matrix - &neg)) < dedup);
    }
}

/// Validation, finite order-zero and first-order conditions, the direct
/// definitions, and the equivalence cross-check, merged into one report.
pub fn full_report(x: &ComplexMatrix, t: &FiniteSpectralTriple, opts: &SearchOptions) -> Result<ConstraintReport> {
    let tol = opts.tol;
    let mut r = ConstraintReport::new();
    r.extend_prefixed("validate.", &validate_twisting_operator(x, t, tol));
    r.extend_prefixed("", &finite_order_zero_conditions(x, t, tol)?);
    if opts.include_first_order {
        r.extend_prefixed("", &finite_first_order_conditions(x, t, tol)?);
    }
    let op = TwistingOperator::finite(x.clone())?;
    let cross = equivalence_crosscheck(&op, t, opts.direct_samples, opts.seed, tol)?;
    // the cross-check already evaluated the direct definitions; reuse them
    let oz_direct = cross.residual("order_zero_agreement").expect("always evaluated");
    r.check("direct.order_zero", oz_direct, tol);
    if opts.include_first_order {
        let fo_direct = match cross.residual("first_order_agreement") {
            Some(v) => v,
            None => direct_twisted_first_order(&op, t, opts.direct_samples, opts.seed)?,
        };
        r.check("direct.first_order", fo_direct, tol);
    }
    r.extend_prefixed("crosscheck.", &cross);
    Ok(r)
}

// ---------------------------------------------------------------------------
// Exhaustive oracle

/// Exhaustive enumeration for small triples.
///
/// A commuting linear space is simultaneously diagonalized and every sign
/// pattern of eigenvalues is solved exactly. Otherwise the surface of the
/// coefficient cube is gridded at `opts.grid_resolution` and every grid point
/// is polished with the same local refinement as the search.
pub fn brute_force_enumerate(
    t: &FiniteSpectralTriple,
    max_dim: usize,
    opts: &SearchOptions,
) -> Result<SolutionSpace> {
    let n = t.hilbert_dim();
    if n > max_dim {
        return Err(Error::DimensionTooLarge(format!("hilbert dimension {n} exceeds {max_dim}")));
    }
    let space = linear_solution_space(t, opts.include_first_order)?;
    let mut log = SearchLog {
        method: String::new(),
        seed: opts.seed,
        ..SearchLog::default()
    };
    if space.is_empty() {
        log.method = "empty_space".into();
        return Ok(SolutionSpace {
            linear_basis: Vec::new(),
            solutions: Vec::new(),
            product_only: Vec::new(),
            search_log: log,
        });
    }
    let system = InvolutionSystem::new(&space, t, opts.include_first_order)?;
    let commuting = space.iter().enumerate().all(|(i, a)| {
        space[i + 1..].iter().all(|b| operator_norm(&comm(a, b)) < SUBSPACE_TOL)
    });
    let candidates = if commuting {
        log.method = "simultaneous_diagonalization".into();
        sign_pattern_candidates(&space, &system, opts)
    } else {
        log.method = "cube_surface_grid".into();
        grid_candidates(&space, &system, opts, &mut log)?
    };
    log.converged = candidates.len();
    finalize(&space, t, &system, candidates, opts, log)
}

fn sign_pattern_candidates(space: &[ComplexMatrix], system: &InvolutionSystem<'_>, opts: &SearchOptions) -> Vec<DVector<f64>> {
    let n = space[0].nrows();
    let k = space.len();
    // Generic combination; its eigenbasis diagonalizes the whole space.
    let mut generic = ComplexMatrix::zeros(n, n);
    for (i, b) in space.iter().enumerate() {
        generic += b * c64(1.0 + (i as f64 + 1.0).sqrt().fract() * 0.731, 0.0);
    }
    let eig = generic.symmetric_eigen();
    let u = eig.eigenvectors;
    let lambda = DMatrix::from_fn(n, k, |row, col| (u.adjoint() * &space[col] * &u)[(row, row)].re);
    let d = svd(&lambda);
    let mut out = Vec::new();
    for pattern in 0..(1u64 << n) {
        let sigma = DVector::from_fn(n, |i, _| if pattern >> i & 1 == 1 { -1.0 } else { 1.0 });
        let c = d.solve(&sigma, 1e-12);
        if (&lambda * &c - &sigma).norm() > 1e-9 {
            continue;
        }
        let (r, _) = system.evaluate(&c, false);
        if max_abs(&r) < opts.residual_target.max(1e-12) * 100.0 {
            out.push(c);
        }
    }
    out
}

fn grid_candidates(
    space: &[ComplexMatrix],
    system: &InvolutionSystem<'_>,
    opts: &SearchOptions,
    log: &mut SearchLog,
) -> Result<Vec<DVector<f64>>> {
    let k = space.len() as u32;
    let r = opts.grid_resolution.max(1) as u64;
    let total = (r + 1).checked_pow(k).unwrap_or(u64::MAX) - (r - 1).checked_pow(k).unwrap_or(0);
    if total > opts.max_grid_points as u64 {
        return Err(Error::DimensionTooLarge(format!(
            "{total} grid points in a {k}-dimensional space"
        )));
    }
    let n = space[0].nrows();
    let radius = (n as f64).sqrt();
    let mut points = Vec::with_capacity(total as usize);
    let side = r + 1;
    for idx in 0..side.pow(k) {
        let mut rem = idx;
        let mut c = DVector::zeros(k as usize);
        let mut on_surface = false;
        for i in 0..k as usize {
            let step = rem % side;
            rem /= side;
            if step == 0 || step == r {
                on_surface = true;
            }
            c[i] = -1.0 + 2.0 * step as f64 / r as f64;
        }
        if on_surface {
            c *= radius / c.norm();
            points.push(c);
        }
    }
    let refined: Vec<Refined> = points.par_iter().map(|c| refine(system, c.clone(), opts)).collect();
    let mut out = Vec::new();
    for (idx, res) in refined.into_iter().enumerate() {
        if res.converged {
            out.push(res.coeffs);
        }
        log.starts.push(StartRecord {
            start: idx,
            warm: false,
            iterations: res.iterations,
            converged: res.converged,
            residual_history: Vec::new(),
        });
    }
    Ok(out)
}

/// Outcome of comparing two solution spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub isolated_match: bool,
    pub manifold_dimensions_match: bool,
    pub left_isolated: usize,
    pub right_isolated: usize,
}

impl Agreement {
    pub fn agree(&self) -> bool {
        self.isolated_match && self.manifold_dimensions_match
    }
}

/// Isolated solutions must coincide up to `dedup`; non-isolated families are
/// compared by their dimensions.
pub fn compare_solution_spaces(a: &SolutionSpace, b: &SolutionSpace, dedup: f64) -> Agreement {
    let ia: Vec<&Solution> = a.isolated().collect();
    let ib: Vec<&Solution> = b.isolated().collect();
    let covered = |xs: &[&Solution], ys: &[&Solution]| {
        xs.iter()
            .all(|x| ys.iter().any(|y| frobenius_norm(&(&x.matrix - &y.matrix)) < dedup))
    };
    Agreement {
        isolated_match: ia.len() == ib.len() && covered(&ia, &ib) && covered(&ib, &ia),
        manifold_dimensions_match: a.manifold_dimensions() == b.manifold_dimensions(),
        left_isolated: ia.len(),
        right_isolated: ib.len(),
    }
}

/// Linear space, involution search, and full verification of every result.
pub fn classify(t: &FiniteSpectralTriple, opts: &SearchOptions) -> Result<SolutionSpace> {
    t.require_real_structure()?;
    let space = linear_solution_space(t, opts.include_first_order)?;
    involution_search(&space, t, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{four_point, four_point_restricted, irreducible_m2, two_point};
    use crate::linalg::{hermitian_residual, pauli, real_diag};
    use crate::triple::{subalgebra_restriction, ScalarField};

    fn close(a: &ComplexMatrix, b: &ComplexMatrix) -> bool {
        frobenius_norm(&(a - b)) < 1e-6
    }

    #[test]
    fn linear_space_examples() {
        let s = linear_solution_space(&two_point(), true).unwrap();
        assert_eq!(s.len(), 2);
        for b in &s {
            assert!(hermitian_residual(b) < 1e-12);
            assert!(b[(0, 1)].norm() < 1e-12);
        }
        assert_eq!(linear_solution_space(&irreducible_m2(), false).unwrap().len(), 1);
        assert!(linear_solution_space(&irreducible_m2(), true).unwrap().is_empty());
        let scalars = subalgebra_restriction(&two_point(), vec![identity(2)]).unwrap();
        assert!(linear_solution_space(&scalars, false).unwrap().len() > 2);
        assert_eq!(linear_solution_space(&four_point_restricted(), true).unwrap().len(), 3);
        assert_eq!(linear_solution_space(&four_point_restricted(), false).unwrap().len(), 4);
    }

    #[test]
    fn first_order_family_never_enlarges() {
        for t in [two_point(), four_point(), four_point_restricted(), irreducible_m2()] {
            let a = linear_solution_space(&t, false).unwrap().len();
            let b = linear_solution_space(&t, true).unwrap().len();
            assert!(b <= a);
        }
    }

    #[test]
    fn two_point_is_plus_minus_grading() {
        let opts = SearchOptions::default();
        let s = classify(&two_point(), &opts).unwrap();
        assert_eq!(s.solutions.len(), 2);
        assert!(close(&s.solutions[0].matrix, &-pauli(3)) || close(&s.solutions[0].matrix, &pauli(3)));
        assert_eq!(s.solutions[0].sign_partner, Some(1));
        assert!(s.solutions.iter().all(|x| x.report.overall_pass));
        // D = 0, so ±𝕀 pass every condition except nondegeneracy
        assert_eq!(s.product_only.len(), 2);
        let b = brute_force_enumerate(&two_point(), 4, &opts).unwrap();
        assert!(compare_solution_spaces(&s, &b, 1e-6).agree());
    }

    #[test]
    fn m2_is_empty() {
        let opts = SearchOptions::default();
        assert!(classify(&irreducible_m2(), &opts).unwrap().solutions.is_empty());
        assert!(brute_force_enumerate(&irreducible_m2(), 4, &opts).unwrap().solutions.is_empty());
    }

    #[test]
    fn restricted_witness() {
        let opts = SearchOptions::default();
        let t = four_point_restricted();
        let s = classify(&t, &opts).unwrap();
        assert_eq!(s.solutions.len(), 8);
        assert!(s.solutions.iter().any(|x| x.dirac_anticommutator > 0.1));
        assert!(s.solutions.iter().any(|x| close(&x.matrix, t.grading().unwrap())));
        let b = brute_force_enumerate(&t, 4, &opts).unwrap();
        assert_eq!(b.search_log.method, "simultaneous_diagonalization");
        assert!(compare_solution_spaces(&s, &b, 1e-6).agree());
    }

    #[test]
    fn circle_of_solutions_on_scalar_restriction() {
        let opts = SearchOptions::default();
        let t = subalgebra_restriction(&two_point(), vec![identity(2)]).unwrap();
        let s = classify(&t, &opts).unwrap();
        assert_eq!(s.manifold_dimensions(), vec![1]);
        assert_eq!(s.isolated().count(), 2);
        let b = brute_force_enumerate(&t, 4, &opts).unwrap();
        assert_eq!(b.search_log.method, "cube_surface_grid");
        let agreement = compare_solution_spaces(&s, &b, 1e-6);
        assert!(agreement.agree(), "{agreement:?}");
    }

    #[test]
    fn deterministic_per_seed() {
        let opts = SearchOptions { seed: 42, ..SearchOptions::default() };
        let t = four_point();
        let a = classify(&t, &opts).unwrap();
        let b = classify(&t, &opts).unwrap();
        assert_eq!(a.solutions.len(), b.solutions.len());
        for (x, y) in a.solutions.iter().zip(&b.solutions) {
            assert_eq!(x.matrix, y.matrix);
        }
        assert_eq!(a.search_log, b.search_log);
    }

    #[test]
    fn errors() {
        let bare = FiniteSpectralTriple::new("bare", vec![identity(2)], pauli(1), None, None, ScalarField::Complex).unwrap();
        assert!(matches!(classify(&bare, &SearchOptions::default()), Err(Error::MissingRealStructure)));
        let sm = crate::catalog::sm_one_generation(&crate::catalog::default_sm_couplings()).unwrap();
        assert!(matches!(brute_force_enumerate(&sm, 4, &SearchOptions::default()), Err(Error::DimensionTooLarge(_))));
        let _ = real_diag(&[1.0]);
    }
}
