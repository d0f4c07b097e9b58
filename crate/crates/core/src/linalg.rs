//! Dense complex linear algebra used by every other module.
//!
//! Operators are plain `nalgebra` matrices over `Complex64`. Antilinear
//! operators are never materialized: an [`AntiUnitaryOperator`] stores the
//! unitary part `M` of `J = M ∘ conj` and only exposes the adjoint action
//! `X ↦ J X J⁻¹ = M · conj(X) · M†`.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Relative tolerance for algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance for membership in derived subspaces.
pub const SUBSPACE_TOL: f64 = 1e-8;
/// Absolute floor used by rank decisions; maps whose singular values all sit
/// below it are treated as zero (inputs are unit-scale orthonormal bases).
pub const RANK_FLOOR: f64 = 1e-11;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A sign in {-1, +1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(format!("sign must be +1 or -1, got {other}")),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

// ---------------------------------------------------------------------------
// Constructors

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(n, n)
}

/// Builds a matrix from real row-major rows.
pub fn real_matrix(rows: &[&[f64]]) -> ComplexMatrix {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    ComplexMatrix::from_fn(r, c, |i, j| c64(rows[i][j], 0.0))
}

pub fn diag(values: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&DVector::from_column_slice(values))
}

pub fn real_diag(values: &[f64]) -> ComplexMatrix {
    let v: Vec<Complex64> = values.iter().map(|&x| c64(x, 0.0)).collect();
    diag(&v)
}

/// Matrix unit `E_ij` in dimension `n`.
pub fn unit(n: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = zeros(n);
    m[(i, j)] = ONE;
    m
}

/// Pauli matrices σ₁, σ₂, σ₃.
pub fn pauli(k: usize) -> ComplexMatrix {
    match k {
        1 => real_matrix(&[&[0.0, 1.0], &[1.0, 0.0]]),
        2 => ComplexMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        3 => real_matrix(&[&[1.0, 0.0], &[0.0, -1.0]]),
        _ => panic!("pauli index must be 1, 2 or 3"),
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

// ---------------------------------------------------------------------------
// Validation helpers

pub fn ensure_square(a: &ComplexMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

pub fn ensure_finite(a: &ComplexMatrix, what: &'static str) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn ensure_same_square(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    let n = ensure_square(a)?;
    let m = ensure_square(b)?;
    if n != m {
        return Err(Error::DimensionMismatch(format!("{n}x{n} vs {m}x{m}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Brackets

/// `AB − BA`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_same_square(a, b)?;
    Ok(comm(a, b))
}

/// `AB + BA`.
pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_same_square(a, b)?;
    Ok(acomm(a, b))
}

/// Below this size nalgebra's complex product is already fast.
const SPLIT_PRODUCT_MIN_DIM: usize = 12;

/// Complex product through four real products, which use the optimized real
/// gemm kernel; several times faster than the generic complex product for
/// the 32×32 operators of the one-generation triple.
pub(crate) fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    if a.nrows().min(a.ncols()).min(b.ncols()) < SPLIT_PRODUCT_MIN_DIM {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let mut re = &ar * &br;
    re.gemm(-1.0, &ai, &bi, 1.0);
    let mut im = &ar * &bi;
    im.gemm(1.0, &ai, &br, 1.0);
    ComplexMatrix::from_fn(a.nrows(), b.ncols(), |i, j| c64(re[(i, j)], im[(i, j)]))
}

/// Unchecked commutator for internal use where shapes are already known.
#[inline]
pub(crate) fn comm(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    matmul(a, b) - matmul(b, a)
}

#[inline]
pub(crate) fn acomm(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    matmul(a, b) + matmul(b, a)
}

// ---------------------------------------------------------------------------
// Norms and residuals

/// Largest singular value.
pub fn operator_norm(a: &ComplexMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return f64::NAN;
    }
    let scale = a.iter().fold(0.0_f64, |m, z| m.max(z.re.abs()).max(z.im.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    // rescaled so that the factorizations cannot overflow
    let s = a / Complex64::new(scale, 0.0);
    // Hermitian inputs are common; their spectral radius is cheaper and just as exact.
    let norm = if s.nrows() == s.ncols() && is_hermitian_exact(&s) {
        s.symmetric_eigenvalues().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    } else {
        largest_singular_value(s)
    };
    norm * scale
}

/// Largest operator norm in `mats`. Frobenius norms bound operator norms
/// from above, so most candidates are skipped without a decomposition.
pub(crate) fn max_operator_norm(mats: impl IntoIterator<Item = ComplexMatrix>) -> f64 {
    let mut scored: Vec<(f64, ComplexMatrix)> = mats.into_iter().map(|m| (frobenius_norm(&m), m)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = 0.0_f64;
    for (frob, m) in &scored {
        if frob.is_nan() {
            return f64::NAN;
        }
        if *frob <= best {
            break;
        }
        best = best.max(operator_norm(m));
    }
    best
}

fn largest_singular_value(a: ComplexMatrix) -> f64 {
    let gram = matmul(&a.adjoint(), &a);
    gram.symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |m, &v| m.max(v))
        .max(0.0)
        .sqrt()
}

fn is_hermitian_exact(a: &ComplexMatrix) -> bool {
    let n = a.nrows();
    for i in 0..n {
        for j in i..n {
            if a[(i, j)] != a[(j, i)].conj() {
                return false;
            }
        }
    }
    true
}

pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    a.norm()
}

/// `‖A − A†‖`.
pub fn hermitian_residual(a: &ComplexMatrix) -> f64 {
    operator_norm(&(a - a.adjoint()))
}

/// `‖A² − 𝕀‖`.
pub fn involution_residual(a: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    operator_norm(&(a * a - identity(n)))
}

/// `‖U†U − 𝕀‖`.
pub fn unitarity_residual(u: &ComplexMatrix) -> f64 {
    operator_norm(&(u.adjoint() * u - identity(u.ncols())))
}

// ---------------------------------------------------------------------------
// Antiunitary operators

/// `J = M ∘ conj` with `J² = ε𝕀`.
#[derive(Debug, Clone, PartialEq)]
pub struct AntiUnitaryOperator {
    m: ComplexMatrix,
    epsilon: Sign,
}

impl AntiUnitaryOperator {
    /// Shape and finiteness are checked here; the unitarity and `J² = ε𝕀`
    /// relations are reported by the residual methods so that malformed
    /// documents can still be diagnosed.
    pub fn new(m: ComplexMatrix, epsilon: Sign) -> Result<Self> {
        ensure_square(&m)?;
        ensure_finite(&m, "antiunitary matrix")?;
        Ok(Self { m, epsilon })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn epsilon(&self) -> Sign {
        self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.m)
    }

    /// `‖M·conj(M) − ε𝕀‖`.
    pub fn epsilon_residual(&self) -> f64 {
        let jj = &self.m * self.m.conjugate();
        operator_norm(&(jj - identity(self.dim()) * c64(self.epsilon.value(), 0.0)))
    }

    /// `v ↦ M·conj(v)`.
    pub fn apply(&self, v: &ComplexMatrix) -> ComplexMatrix {
        &self.m * v.conjugate()
    }

    /// Unchecked adjoint action for internal hot paths.
    #[inline]
    pub(crate) fn hat(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &self.m * x.conjugate() * self.m.adjoint()
    }
}

/// `Ĵ(X) = J X J⁻¹ = M · conj(X) · M⁻¹`.
pub fn adjoint_action(j: &AntiUnitaryOperator, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = ensure_square(x)?;
    if n != j.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator {n}x{n} vs antiunitary of dimension {}",
            j.dim()
        )));
    }
    let res = j.unitarity_residual();
    if res > IDENTITY_TOL * (n as f64).max(1.0) {
        return Err(Error::NotUnitary(res));
    }
    Ok(j.hat(x))
}

// ---------------------------------------------------------------------------
// Nullspaces and constrained subspaces

/// Thin singular value decomposition `A = U·diag(σ)·V†`.
///
/// Computed by one-sided Jacobi rotations after a QR reduction of tall inputs.
/// `V` is a product of plane rotations and therefore unitary even when many
/// singular values vanish; columns of `U` belonging to zero singular values
/// are zero. Singular values are sorted in decreasing order.
pub(crate) struct Svd<T> {
    pub singular_values: Vec<f64>,
    pub u: DMatrix<T>,
    pub v: DMatrix<T>,
}

const JACOBI_MAX_SWEEPS: usize = 80;

pub(crate) fn svd<T>(a: &DMatrix<T>) -> Svd<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let (m, n) = a.shape();
    let (q, mut w) = if m > n {
        let qr = a.clone().qr();
        (Some(qr.q()), qr.r())
    } else {
        (None, a.clone())
    };
    let rows = w.nrows();
    let mut v = DMatrix::<T>::identity(n, n);
    // columns below this squared norm are roundoff; rotating them only degrades V
    let negligible = (1e-2 * f64::EPSILON * w.norm()).powi(2);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for r in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, T::zero());
                for i in 0..rows {
                    let (x, y) = (w[(i, p)], w[(i, r)]);
                    alpha += x.modulus_squared();
                    beta += y.modulus_squared();
                    gamma += x.conjugate() * y;
                }
                let g = gamma.modulus();
                if alpha.min(beta) <= negligible || g <= 4.0 * f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rephase column r so the overlap is real, then rotate in the plane
                let phase = gamma.conjugate().unscale(g);
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.nrows() {
                        let x = mat[(i, p)];
                        let y = mat[(i, r)] * phase;
                        mat[(i, p)] = x.scale(c) - y.scale(s);
                        mat[(i, r)] = x.scale(s) + y.scale(c);
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut u = DMatrix::<T>::zeros(rows, n);
    let mut v_sorted = DMatrix::<T>::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > 0.0 {
            u.set_column(k, &w.column(j).unscale(norms[j]));
        }
        v_sorted.set_column(k, &v.column(j));
    }
    let u = match q {
        Some(q) => q * u,
        None => u,
    };
    Svd { singular_values: order.iter().map(|&j| norms[j]).collect(), u, v: v_sorted }
}

impl<T> Svd<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    pub fn max_singular_value(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values at or above `max(tol·σ_max, RANK_FLOOR)`.
    pub fn rank(&self, tol: f64) -> usize {
        let cut = (tol * self.max_singular_value()).max(RANK_FLOOR);
        self.singular_values.iter().filter(|&&s| s >= cut).count()
    }

    /// Minimum-norm least-squares solution, discarding singular values below `cut`.
    pub fn solve(&self, b: &DVector<T>, cut: f64) -> DVector<T> {
        let mut x = DVector::<T>::zeros(self.v.nrows());
        for (k, &s) in self.singular_values.iter().enumerate() {
            if s < cut || s == 0.0 {
                break;
            }
            let coeff = self.u.column(k).dotc(b).unscale(s);
            x += self.v.column(k) * coeff;
        }
        x
    }
}

/// Orthonormal basis of the right nullspace of `a`; singular values count as
/// zero below `max(tol·σ_max, RANK_FLOOR)`.
pub(crate) fn nullspace_vectors<T>(a: &DMatrix<T>, tol: f64) -> Vec<DVector<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = a.ncols();
    if n == 0 {
        return Vec::new();
    }
    let d = svd(a);
    let rank = d.rank(tol);
    (rank..n).map(|k| d.v.column(k).into_owned()).collect()
}

/// Orthonormal basis of the right nullspace, each vector returned as an n×1 matrix.
pub fn nullspace(a: &ComplexMatrix, tol: f64) -> Vec<ComplexMatrix> {
    nullspace_vectors(a, tol)
        .into_iter()
        .map(|v| ComplexMatrix::from_column_slice(v.len(), 1, v.as_slice()))
        .collect()
}

/// Row-major vectorization.
pub(crate) fn vec_row_major(x: &ComplexMatrix) -> DVector<Complex64> {
    DVector::from_iterator(x.len(), x.transpose().iter().copied())
}

/// Frobenius-orthonormal basis of `M_n(ℂ)` made of matrix units.
pub fn full_matrix_basis(n: usize) -> Vec<ComplexMatrix> {
    (0..n)
        .flat_map(|i| (0..n).map(move |j| unit(n, i, j)))
        .collect()
}

/// A complex-linear map on matrices.
pub type LinearMap<'a> = Box<dyn Fn(&ComplexMatrix) -> ComplexMatrix + Send + Sync + 'a>;

/// Restricts the span of an orthonormal `basis` to the common kernel of `maps`,
/// one map at a time. The returned basis is again Frobenius-orthonormal.
pub fn constrained_subspace(
    basis: Vec<ComplexMatrix>,
    maps: &[LinearMap<'_>],
    tol: f64,
) -> Vec<ComplexMatrix> {
    let mut current = basis;
    for map in maps {
        if current.is_empty() {
            break;
        }
        let images: Vec<DVector<Complex64>> =
            current.iter().map(|b| vec_row_major(&map(b))).collect();
        let rows = images[0].len();
        let stacked = DMatrix::from_fn(rows, images.len(), |r, c| images[c][r]);
        let null = nullspace_vectors(&stacked, tol);
        if null.len() == current.len() {
            continue;
        }
        current = null
            .iter()
            .map(|coeffs| combine(&current, coeffs.as_slice()))
            .collect();
    }
    current
}

pub(crate) fn combine(basis: &[ComplexMatrix], coeffs: &[Complex64]) -> ComplexMatrix {
    let (r, c) = basis[0].shape();
    let mut out = ComplexMatrix::zeros(r, c);
    for (b, &w) in basis.iter().zip(coeffs) {
        if w != ZERO {
            out += b * w;
        }
    }
    out
}

pub(crate) fn combine_real(basis: &[ComplexMatrix], coeffs: &[f64]) -> ComplexMatrix {
    let (r, c) = basis[0].shape();
    let mut out = ComplexMatrix::zeros(r, c);
    for (b, &w) in basis.iter().zip(coeffs) {
        if w != 0.0 {
            out += b * c64(w, 0.0);
        }
    }
    out
}

/// Orthonormal basis of the commutant of a hermitian matrix, built from its
/// eigenspaces (`Hom(E_λ, E_λ)` for every eigenvalue cluster).
fn hermitian_commutant(h: &ComplexMatrix, tol: f64) -> Vec<ComplexMatrix> {
    let eig = h.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let gap = (tol * scale).max(RANK_FLOOR);

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &idx in &order {
        match clusters.last_mut() {
            Some(cl) if (eig.eigenvalues[idx] - eig.eigenvalues[*cl.last().unwrap()]).abs() < gap => {
                cl.push(idx)
            }
            _ => clusters.push(vec![idx]),
        }
    }
    let mut basis = Vec::new();
    for cl in &clusters {
        for &a in cl {
            for &b in cl {
                let ua = eig.eigenvectors.column(a);
                let ub = eig.eigenvectors.column(b);
                basis.push(ua * ub.adjoint());
            }
        }
    }
    basis
}

/// Orthonormal basis of `{X : [X, g] = 0 ∀ g}` in `M_dim(ℂ)`.
///
/// Generators are treated as a spanning set; real-linear spans (such as the
/// quaternions) are handled because commuting with every spanning element is
/// equivalent to commuting with every real combination of them.
pub fn commutant_basis(
    generators: &[ComplexMatrix],
    dim: usize,
    tol: f64,
) -> Result<Vec<ComplexMatrix>> {
    for g in generators {
        if g.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "generator {}x{} in dimension {dim}",
                g.nrows(),
                g.ncols()
            )));
        }
    }
    // Seed with the eigenspaces of a generic real combination of the
    // (anti)hermitian generators: its commutant contains the answer and is
    // usually already close to it, so no dim²×dim² decomposition is needed.
    let mut seed = ComplexMatrix::zeros(dim, dim);
    for (i, g) in generators.iter().enumerate() {
        let scale = operator_norm(g).max(1.0);
        let h = if hermitian_residual(g) <= IDENTITY_TOL * scale {
            g.clone()
        } else if frobenius_norm(&(g + g.adjoint())) <= IDENTITY_TOL * scale {
            g * I
        } else {
            continue;
        };
        let weight = 0.5 + ((i as f64 + 2.0).sqrt() * 7.31).fract();
        seed += (&h + h.adjoint()) * c64(0.5 * weight / scale, 0.0);
    }
    let initial = if operator_norm(&(&seed - identity(dim) * seed[(0, 0)])) > IDENTITY_TOL {
        // merging near-degenerate eigenvalues only enlarges the seed space
        hermitian_commutant(&seed, tol.max(1e-6))
    } else {
        full_matrix_basis(dim)
    };
    let maps: Vec<LinearMap<'_>> = generators
        .iter()
        .map(|g| Box::new(move |x: &ComplexMatrix| comm(x, g)) as LinearMap<'_>)
        .collect();
    Ok(constrained_subspace(initial, &maps, tol))
}

/// Real-linear basis of the hermitian matrices inside the complex span of
/// `basis` (Frobenius-orthonormal under the real inner product `Re tr(X†Y)`).
pub fn hermitian_part_of_span(basis: &[ComplexMatrix], tol: f64) -> Vec<ComplexMatrix> {
    if basis.is_empty() {
        return Vec::new();
    }
    // Orthonormalize the complex span first so real coefficient vectors map isometrically.
    let ortho = orthonormalize(basis, tol);
    if ortho.is_empty() {
        return Vec::new();
    }
    let k = ortho.len();
    // Real parameters (Re c, Im c); X(c) − X(c)† must vanish.
    let columns: Vec<Vec<f64>> = (0..2 * k)
        .map(|p| {
            let coeff = if p < k { ONE } else { I };
            let x = &ortho[p % k] * coeff;
            let skew = &x - x.adjoint();
            skew.iter().flat_map(|z| [z.re, z.im]).collect()
        })
        .collect();
    let rows = columns[0].len();
    let a = DMatrix::from_fn(rows, 2 * k, |r, c| columns[c][r]);
    nullspace_vectors(&a, tol)
        .into_iter()
        .map(|v| {
            let coeffs: Vec<Complex64> = (0..k).map(|i| c64(v[i], v[i + k])).collect();
            let x = combine(&ortho, &coeffs);
            (&x + x.adjoint()) * c64(0.5, 0.0)
        })
        .collect()
}

/// Frobenius-orthonormal basis of the complex span of `mats`.
pub fn orthonormalize(mats: &[ComplexMatrix], tol: f64) -> Vec<ComplexMatrix> {
    if mats.is_empty() {
        return Vec::new();
    }
    let cols: Vec<DVector<Complex64>> = mats.iter().map(vec_row_major).collect();
    let rows = cols[0].len();
    let d = svd(&DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r]));
    let (r, c) = mats[0].shape();
    (0..d.rank(tol))
        .map(|k| {
            let col = d.u.column(k);
            ComplexMatrix::from_fn(r, c, |i, j| col[i * c + j])
        })
        .collect()
}

/// Least-squares distance from `x` to the span of `basis`, over ℝ or ℂ.
pub fn span_residual(basis: &[ComplexMatrix], x: &ComplexMatrix, real_field: bool) -> f64 {
    fn residual<T: ComplexField<RealField = f64> + Copy>(cols: Vec<Vec<T>>, rhs: DVector<T>) -> f64 {
        let a = DMatrix::from_fn(rhs.len(), cols.len(), |r, c| cols[c][r]);
        let d = svd(&a);
        let sol = d.solve(&rhs, RANK_FLOOR.max(1e-12 * d.max_singular_value()));
        (a * sol - rhs).norm()
    }
    if basis.is_empty() {
        return frobenius_norm(x);
    }
    if real_field {
        let cols = basis.iter().map(|b| b.iter().flat_map(|z| [z.re, z.im]).collect()).collect();
        let rhs = DVector::from_iterator(2 * x.len(), x.iter().flat_map(|z| [z.re, z.im]));
        residual(cols, rhs)
    } else {
        let cols = basis.iter().map(|b| vec_row_major(b).iter().copied().collect()).collect();
        residual(cols, vec_row_major(x))
    }
}

// ---------------------------------------------------------------------------
// Kronecker factorization

/// Result of [`nearest_kronecker_factorization`].
#[derive(Debug, Clone)]
pub struct KroneckerFactors {
    pub left: ComplexMatrix,
    pub right: ComplexMatrix,
    /// `‖T − left ⊗ right‖_F`.
    pub residual: f64,
}

/// Best Frobenius approximation `T ≈ A ⊗ B` with `A` of size d1 and `B` of
/// size d2, via the leading singular pair of the block rearrangement of `T`.
pub fn nearest_kronecker_factorization(
    t: &ComplexMatrix,
    d1: usize,
    d2: usize,
) -> Result<KroneckerFactors> {
    let n = ensure_square(t)?;
    if d1 == 0 || d2 == 0 || d1 * d2 != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} is not {d1}·{d2}"
        )));
    }
    // R[(i1,j1),(i2,j2)] = T[i1·d2+i2, j1·d2+j2], so A⊗B ↦ vec(A)·vec(B)ᵀ.
    let r = DMatrix::from_fn(d1 * d1, d2 * d2, |row, col| {
        let (i1, j1) = (row / d1, row % d1);
        let (i2, j2) = (col / d2, col % d2);
        t[(i1 * d2 + i2, j1 * d2 + j2)]
    });
    let d = svd(&r);
    let scale = c64(d.max_singular_value().sqrt(), 0.0);
    let left = ComplexMatrix::from_fn(d1, d1, |i, j| d.u[(i * d1 + j, 0)] * scale);
    let right = ComplexMatrix::from_fn(d2, d2, |i, j| d.v[(i * d2 + j, 0)].conj() * scale);
    let residual = frobenius_norm(&(t - kron(&left, &right)));
    Ok(KroneckerFactors {
        left,
        right,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_reconstructs_low_rank_matrices() {
        // rank-deficient inputs of every shape, including exact rank one
        let x = DMatrix::from_fn(9, 1, |i, _| c64(i as f64 - 3.5, 0.3 * i as f64));
        let y = DMatrix::from_fn(1, 7, |_, j| c64(1.0 / (j as f64 + 1.0), -0.2));
        let z = DMatrix::from_fn(9, 1, |i, _| c64((i * i) as f64 % 5.0, 1.0));
        let w = DMatrix::from_fn(1, 7, |_, j| c64(0.0, j as f64));
        let rank_two = &x * &y + &z * &w;
        for a in [&x * &y, rank_two.clone(), rank_two.transpose(), ComplexMatrix::zeros(3, 4)] {
            let d = svd(&a);
            let sigma = DMatrix::from_diagonal(&DVector::from_iterator(d.singular_values.len(), d.singular_values.iter().map(|&s| c64(s, 0.0))));
            assert!((&d.u * sigma * d.v.adjoint() - &a).norm() < 1e-12 * a.norm().max(1.0));
            let e = (d.v.adjoint() * &d.v - identity(a.ncols())).norm();
            assert!(e < 1e-12, "{:?} {e}", a.shape());
        }
        assert_eq!(svd(&rank_two).rank(1e-10), 2);
        assert_eq!(nullspace_vectors(&rank_two, 1e-10).len(), 5);
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        a.shape() == b.shape() && (a - b).norm() < tol
    }

    fn sx() -> ComplexMatrix {
        pauli(1)
    }
    fn sy() -> ComplexMatrix {
        pauli(2)
    }
    fn sz() -> ComplexMatrix {
        pauli(3)
    }

    #[test]
    fn commutator_examples() {
        let a = ComplexMatrix::from_fn(3, 3, |i, j| c64(i as f64, j as f64));
        assert!(commutator(&a, &identity(3)).unwrap().norm() == 0.0);
        let c = commutator(&sx(), &sy()).unwrap();
        assert!(close(&c, &(sz() * c64(0.0, 2.0)), 1e-15));
        let (p, q) = (c64(2.0, 1.0), c64(-0.5, 3.0));
        let d = diag(&[p, q]);
        let off = real_matrix(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let expected = real_matrix(&[&[0.0, 1.0], &[-1.0, 0.0]]) * (p - q);
        assert!(close(&commutator(&d, &off).unwrap(), &expected, 1e-15));
    }

    #[test]
    fn commutator_rejects_mismatch() {
        assert!(matches!(
            commutator(&identity(2), &identity(3)),
            Err(Error::DimensionMismatch(_))
        ));
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            anticommutator(&rect, &identity(2)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn anticommutator_examples() {
        let a = ComplexMatrix::from_fn(2, 2, |i, j| c64(1.0 + i as f64, j as f64));
        assert_eq!(anticommutator(&a, &zeros(2)).unwrap().norm(), 0.0);
        assert!(close(&anticommutator(&sx(), &sx()).unwrap(), &(identity(2) * c64(2.0, 0.0)), 1e-15));
        assert!(anticommutator(&sz(), &sx()).unwrap().norm() < 1e-15);
    }

    #[test]
    fn adjoint_action_examples() {
        let j = AntiUnitaryOperator::new(sx(), Sign::Plus).unwrap();
        assert!(close(&adjoint_action(&j, &identity(2)).unwrap(), &identity(2), 1e-15));
        let (a, b) = (c64(1.0, 2.0), c64(-3.0, 0.5));
        let got = adjoint_action(&j, &diag(&[a, b])).unwrap();
        assert!(close(&got, &diag(&[b.conj(), a.conj()]), 1e-15));
        let x = ComplexMatrix::from_fn(2, 2, |i, k| c64(i as f64 + 0.3, k as f64 - 1.0));
        let lam = c64(0.7, -1.3);
        let lhs = adjoint_action(&j, &(&x * lam)).unwrap();
        let rhs = adjoint_action(&j, &x).unwrap() * lam.conj();
        assert!(close(&lhs, &rhs, 1e-14));
    }

    #[test]
    fn adjoint_action_rejects_non_unitary() {
        let j = AntiUnitaryOperator::new(real_diag(&[1.0, 2.0]), Sign::Plus).unwrap();
        assert!(matches!(
            adjoint_action(&j, &identity(2)),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn norms_and_residuals() {
        assert!((operator_norm(&identity(5)) - 1.0).abs() < 1e-14);
        assert!((operator_norm(&real_diag(&[3.0, -4.0])) - 4.0).abs() < 1e-14);
        assert_eq!(hermitian_residual(&sz()), 0.0);
        assert_eq!(involution_residual(&sz()), 0.0);
        let isz = sz() * I;
        assert!((hermitian_residual(&isz) - 2.0).abs() < 1e-14);
        assert!((involution_residual(&isz) - 2.0).abs() < 1e-14);
        let p = real_diag(&[1.0, 0.0]);
        assert_eq!(hermitian_residual(&p), 0.0);
        assert!((involution_residual(&p) - 1.0).abs() < 1e-14);
        let nan = real_diag(&[f64::NAN, 1.0]);
        assert!(operator_norm(&nan).is_nan());
    }

    #[test]
    fn nullspace_examples() {
        assert!(nullspace(&identity(3), 1e-10).is_empty());
        let z = nullspace(&zeros(3), 1e-10);
        assert_eq!(z.len(), 3);
        let gram = ComplexMatrix::from_fn(3, 3, |i, j| (z[i].adjoint() * &z[j])[(0, 0)]);
        assert!(close(&gram, &identity(3), 1e-12));
        let ones = real_matrix(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let ns = nullspace(&ones, 1e-10);
        assert_eq!(ns.len(), 1);
        let v = &ns[0];
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!((v[(0, 0)] + v[(1, 0)]).norm() < 1e-12);
    }

    #[test]
    fn nullspace_of_wide_matrix() {
        let a = real_matrix(&[&[1.0, 0.0, 0.0]]);
        let ns = nullspace(&a, 1e-10);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(v[(0, 0)].norm() < 1e-12);
        }
    }

    #[test]
    fn commutant_examples() {
        assert_eq!(commutant_basis(&[identity(3)], 3, 1e-10).unwrap().len(), 9);
        assert_eq!(commutant_basis(&[], 2, 1e-10).unwrap().len(), 4);
        let d = commutant_basis(&[real_diag(&[1.0, 2.0])], 2, 1e-10).unwrap();
        assert_eq!(d.len(), 2);
        for x in &d {
            assert!(x[(0, 1)].norm() < 1e-12 && x[(1, 0)].norm() < 1e-12);
        }
        let full = full_matrix_basis(2);
        let s = commutant_basis(&full, 2, 1e-10).unwrap();
        assert_eq!(s.len(), 1);
        let x = &s[0];
        assert!((x[(0, 0)] - x[(1, 1)]).norm() < 1e-12);
        assert!(x[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn hermitian_span() {
        let basis = full_matrix_basis(2);
        let h = hermitian_part_of_span(&basis, 1e-10);
        assert_eq!(h.len(), 4);
        for x in &h {
            assert!(hermitian_residual(x) < 1e-12);
        }
        // span{E_01} has no nonzero hermitian element
        assert!(hermitian_part_of_span(&[unit(2, 0, 1)], 1e-10).is_empty());
    }

    #[test]
    fn span_membership() {
        let basis = vec![identity(2), pauli(3)];
        assert!(span_residual(&basis, &real_diag(&[3.0, -1.0]), true) < 1e-12);
        assert!(span_residual(&basis, &pauli(1), true) > 0.5);
        // i·σ₃ is in the complex span but not the real one.
        assert!(span_residual(&basis, &(pauli(3) * I), false) < 1e-12);
        assert!(span_residual(&basis, &(pauli(3) * I), true) > 0.5);
    }

    #[test]
    fn kronecker_examples() {
        let t = kron(&sz(), &sx());
        let f = nearest_kronecker_factorization(&t, 2, 2).unwrap();
        assert!(f.residual < 1e-12);
        assert!(close(&kron(&f.left, &f.right), &t, 1e-12));

        let t2 = kron(&(sz() * c64(2.0, 0.0)), &(sx() * c64(0.5, 0.0)));
        let f2 = nearest_kronecker_factorization(&t2, 2, 2).unwrap();
        assert!(close(&kron(&f2.left, &f2.right), &t2, 1e-12));

        let mixed = kron(&sz(), &sx()) + kron(&sx(), &sz());
        let f3 = nearest_kronecker_factorization(&mixed, 2, 2).unwrap();
        assert!(f3.residual > 0.5);

        assert!(matches!(
            nearest_kronecker_factorization(&identity(6), 4, 2),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn kronecker_rectangular_split() {
        let a = ComplexMatrix::from_fn(2, 2, |i, j| c64(1.0 + i as f64, j as f64 - 0.5));
        let b = ComplexMatrix::from_fn(3, 3, |i, j| c64((i * j) as f64, 1.0 + i as f64));
        let t = kron(&a, &b);
        let f = nearest_kronecker_factorization(&t, 2, 3).unwrap();
        assert!(f.residual < 1e-12 * t.norm());
    }

    #[test]
    fn sign_algebra() {
        assert_eq!(Sign::Minus * Sign::Minus, Sign::Plus);
        assert_eq!(Sign::Plus.flip(), Sign::Minus);
        assert_eq!(i8::from(Sign::Minus), -1);
        assert!(Sign::try_from(0i8).is_err());
    }
}
