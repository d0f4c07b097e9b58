//! Almost-commutative product geometries over a momentum-space 2-torus.
//!
//! Modes are `k ∈ {−N..N}²`; a state index is `(mode·2 + spin)·d_F + f` with
//! `mode = (k₁+N)(2N+1) + (k₂+N)`. The Dirac operator is diagonal in momentum,
//! `∂̸_k = (2π/L)(k₁σ₁ + k₂σ₂)`, with chirality `γ_M = σ₃`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    acomm, c64, hermitian_residual, identity, involution_residual, kron, operator_norm, pauli,
    ComplexMatrix, Sign, ZERO,
};
use crate::triple::{ConstraintReport, FiniteSpectralTriple, RealStructure};
use crate::twist::{first_order_conditions, order_zero_conditions, validate_twisting_operator, TwistingOperator};

/// Largest dimension for which dense product matrices are built.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeDiracConfig {
    pub cutoff: usize,
    pub torus_length: f64,
}

impl LatticeDiracConfig {
    pub const SPINOR_DIM: usize = 2;

    /// `cutoff = 0` is accepted and gives the single zero mode.
    pub fn new(cutoff: usize, torus_length: f64) -> Result<Self> {
        if !(torus_length.is_finite() && torus_length > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "torus length must be positive, got {torus_length}"
            )));
        }
        Ok(Self { cutoff, torus_length })
    }

    pub fn side(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn modes(&self) -> usize {
        self.side() * self.side()
    }

    /// `2π/L`.
    pub fn momentum_unit(&self) -> f64 {
        2.0 * PI / self.torus_length
    }

    fn mode_index(&self, k: [i64; 2]) -> Option<usize> {
        let n = self.cutoff as i64;
        if k[0].abs() > n || k[1].abs() > n {
            return None;
        }
        Some(((k[0] + n) * (2 * n + 1) + (k[1] + n)) as usize)
    }

    fn mode_coords(&self, idx: usize) -> [i64; 2] {
        let side = self.side();
        let n = self.cutoff as i64;
        [(idx / side) as i64 - n, (idx % side) as i64 - n]
    }

    /// `∂̸_k` on the spinor factor.
    fn dirac_block(&self, k: [i64; 2]) -> ComplexMatrix {
        let c = self.momentum_unit();
        (pauli(1) * c64(c * k[0] as f64, 0.0)) + (pauli(2) * c64(c * k[1] as f64, 0.0))
    }
}

/// Chirality `γ_M = σ₃`.
pub fn chirality() -> ComplexMatrix {
    pauli(3)
}

/// Lattice charge-conjugation convention: `𝒥 = M ∘ conj` with `M = P_{k→−k} ⊗ C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargeConjugation {
    /// `C = σ₂`: `ε = −1`, `ε′ = +1`, `ε″ = −1` (KO-dimension 2).
    Sigma2,
    /// `C = 𝕀`: `ε = +1`, `ε″ = +1`; does not intertwine `∂̸`.
    Trivial,
}

impl ChargeConjugation {
    pub fn spin_matrix(self) -> ComplexMatrix {
        match self {
            Self::Sigma2 => pauli(2),
            Self::Trivial => identity(2),
        }
    }

    /// `(ε, ε′, ε″)`.
    pub fn signs(self) -> (Sign, Sign, Sign) {
        match self {
            Self::Sigma2 => (Sign::Minus, Sign::Plus, Sign::Minus),
            Self::Trivial => (Sign::Plus, Sign::Plus, Sign::Plus),
        }
    }
}

// ---------------------------------------------------------------------------
// Sparse block-shift operators

/// Operator of the form `(Aψ)(k + s) = Σ_s B_s(k) ψ(k)`, one block per source
/// mode and shift. Targets outside the grid are dropped.
#[derive(Debug, Clone)]
pub struct BlockShiftOperator {
    cfg: LatticeDiracConfig,
    block: usize,
    terms: BTreeMap<[i64; 2], Vec<ComplexMatrix>>,
}

impl BlockShiftOperator {
    pub fn zero(cfg: LatticeDiracConfig, block: usize) -> Self {
        Self { cfg, block, terms: BTreeMap::new() }
    }

    /// Shift-free operator with block `f(k)` at mode `k`.
    pub fn diagonal(cfg: LatticeDiracConfig, block: usize, f: impl Fn([i64; 2]) -> ComplexMatrix) -> Self {
        let blocks = (0..cfg.modes()).map(|i| f(cfg.mode_coords(i))).collect();
        let mut terms = BTreeMap::new();
        terms.insert([0, 0], blocks);
        Self { cfg, block, terms }
    }

    /// Shift by `n` with a constant block.
    pub fn shift(cfg: LatticeDiracConfig, n: [i64; 2], block: &ComplexMatrix) -> Self {
        let zero = ComplexMatrix::zeros(block.nrows(), block.ncols());
        let blocks = (0..cfg.modes())
            .map(|i| {
                let k = cfg.mode_coords(i);
                if cfg.mode_index([k[0] + n[0], k[1] + n[1]]).is_some() {
                    block.clone()
                } else {
                    zero.clone()
                }
            })
            .collect();
        let mut terms = BTreeMap::new();
        terms.insert(n, blocks);
        Self { cfg, block: block.nrows(), terms }
    }

    pub fn config(&self) -> LatticeDiracConfig {
        self.cfg
    }

    pub fn dim(&self) -> usize {
        self.cfg.modes() * self.block
    }

    pub fn shifts(&self) -> impl Iterator<Item = &[i64; 2]> {
        self.terms.keys()
    }

    fn accumulate(&mut self, s: [i64; 2], k: usize, m: ComplexMatrix) {
        let modes = self.cfg.modes();
        let block = self.block;
        let entry = self
            .terms
            .entry(s)
            .or_insert_with(|| vec![ComplexMatrix::zeros(block, block); modes]);
        entry[k] += m;
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (s, blocks) in &other.terms {
            for (k, b) in blocks.iter().enumerate() {
                out.accumulate(*s, k, b.clone());
            }
        }
        out
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let mut out = self.clone();
        for blocks in out.terms.values_mut() {
            for b in blocks {
                *b *= z;
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(c64(-1.0, 0.0)))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.cfg, self.block);
        for (s2, b2) in &other.terms {
            for (s1, b1) in &self.terms {
                let s = [s1[0] + s2[0], s1[1] + s2[1]];
                for (k, inner) in b2.iter().enumerate() {
                    let kc = self.cfg.mode_coords(k);
                    let Some(mid) = self.cfg.mode_index([kc[0] + s2[0], kc[1] + s2[1]]) else {
                        continue;
                    };
                    if self.cfg.mode_index([kc[0] + s[0], kc[1] + s[1]]).is_none() {
                        continue;
                    }
                    out.accumulate(s, k, &b1[mid] * inner);
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let b = self.block;
        let mut out = DVector::zeros(self.dim());
        for (s, blocks) in &self.terms {
            for (k, m) in blocks.iter().enumerate() {
                let kc = self.cfg.mode_coords(k);
                let Some(t) = self.cfg.mode_index([kc[0] + s[0], kc[1] + s[1]]) else {
                    continue;
                };
                let src = v.rows(k * b, b);
                let mut dst = out.rows_mut(t * b, b);
                dst += m * src;
            }
        }
        out
    }

    pub fn apply_adjoint(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let b = self.block;
        let mut out = DVector::zeros(self.dim());
        for (s, blocks) in &self.terms {
            for (k, m) in blocks.iter().enumerate() {
                let kc = self.cfg.mode_coords(k);
                let Some(t) = self.cfg.mode_index([kc[0] + s[0], kc[1] + s[1]]) else {
                    continue;
                };
                let src = v.rows(t * b, b);
                let mut dst = out.rows_mut(k * b, b);
                dst += m.adjoint() * src;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Result<ComplexMatrix> {
        let n = self.dim();
        if n > DENSE_LIMIT {
            return Err(Error::DimensionTooLarge(format!("dense product of dimension {n}")));
        }
        let b = self.block;
        let mut out = ComplexMatrix::zeros(n, n);
        for (s, blocks) in &self.terms {
            for (k, m) in blocks.iter().enumerate() {
                let kc = self.cfg.mode_coords(k);
                if let Some(t) = self.cfg.mode_index([kc[0] + s[0], kc[1] + s[1]]) {
                    let mut view = out.view_mut((t * b, k * b), (b, b));
                    view += m;
                }
            }
        }
        Ok(out)
    }

    /// `‖A·P_W‖` where `P_W` projects onto source modes with `|k|∞ ≤ radius`.
    ///
    /// A single shift makes `A·P_W` a direct sum of blocks; otherwise the norm
    /// comes from Lanczos on `P_W A†A P_W`.
    pub fn window_norm(&self, radius: usize) -> f64 {
        let window: Vec<usize> = (0..self.cfg.modes())
            .filter(|&i| {
                let k = self.cfg.mode_coords(i);
                k[0].unsigned_abs() as usize <= radius && k[1].unsigned_abs() as usize <= radius
            })
            .collect();
        let live: Vec<(&[i64; 2], &Vec<ComplexMatrix>)> = self
            .terms
            .iter()
            .filter(|(_, blocks)| window.iter().any(|&k| blocks[k].iter().any(|z| *z != ZERO)))
            .collect();
        match live.len() {
            0 => 0.0,
            1 => {
                let (s, blocks) = live[0];
                window
                    .par_iter()
                    .filter(|&&k| {
                        let kc = self.cfg.mode_coords(k);
                        self.cfg.mode_index([kc[0] + s[0], kc[1] + s[1]]).is_some()
                    })
                    .map(|&k| operator_norm(&blocks[k]))
                    .reduce(|| 0.0, f64::max)
            }
            _ => self.lanczos_window_norm(&window),
        }
    }

    fn lanczos_window_norm(&self, window: &[usize]) -> f64 {
        let b = self.block;
        let project = |v: &mut DVector<Complex64>, mask: &[bool]| {
            for (k, &keep) in mask.iter().enumerate() {
                if !keep {
                    v.rows_mut(k * b, b).fill(ZERO);
                }
            }
        };
        let mut mask = vec![false; self.cfg.modes()];
        for &k in window {
            mask[k] = true;
        }
        let gram = |v: &DVector<Complex64>| {
            let mut x = v.clone();
            project(&mut x, &mask);
            let mut y = self.apply_adjoint(&self.apply(&x));
            project(&mut y, &mask);
            y
        };

        let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c);
        let mut v = DVector::from_fn(self.dim(), |_, _| {
            c64(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        project(&mut v, &mask);
        let n0 = v.norm();
        if n0 == 0.0 {
            return 0.0;
        }
        v /= c64(n0, 0.0);

        let max_steps = (window.len() * b).min(120);
        let mut basis: Vec<DVector<Complex64>> = vec![v];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut last = 0.0;
        for step in 0..max_steps {
            let mut w = gram(&basis[step]);
            let a = basis[step].dotc(&w).re;
            alpha.push(a);
            for q in &basis {
                let proj = q.dotc(&w);
                w -= q * proj;
            }
            let ritz = largest_tridiagonal_eigenvalue(&alpha, &beta);
            if step > 4 && (ritz - last).abs() <= 1e-13 * ritz.abs().max(1e-300) {
                return ritz.max(0.0).sqrt();
            }
            last = ritz;
            let bn = w.norm();
            if bn <= 1e-12 * ritz.abs().max(1.0) {
                break;
            }
            beta.push(bn);
            basis.push(w / c64(bn, 0.0));
        }
        largest_tridiagonal_eigenvalue(&alpha, &beta).max(0.0).sqrt()
    }
}

fn largest_tridiagonal_eigenvalue(alpha: &[f64], beta: &[f64]) -> f64 {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j || j + 1 == i {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    t.symmetric_eigen().eigenvalues.iter().fold(f64::MIN, |x, &y| x.max(y))
}

// ---------------------------------------------------------------------------
// Lattice operators

/// Dense `∂̸` on modes ⊗ spinors.
pub fn lattice_dirac(cfg: &LatticeDiracConfig) -> Result<ComplexMatrix> {
    BlockShiftOperator::diagonal(*cfg, 2, |k| cfg.dirac_block(k)).to_dense()
}

/// Multiplication by `exp(2πi n·x/L)` tensored with `𝕀₂ ⊗ m`, as a shift on the
/// truncated mode grid.
pub fn plane_wave_operator(cfg: &LatticeDiracConfig, n: [i64; 2], m: &ComplexMatrix) -> Result<BlockShiftOperator> {
    let reach = n[0].unsigned_abs().max(n[1].unsigned_abs()) as usize;
    if reach > cfg.cutoff {
        return Err(Error::InvalidConfig(format!(
            "shift {n:?} exceeds the mode grid of cutoff {}",
            cfg.cutoff
        )));
    }
    Ok(BlockShiftOperator::shift(*cfg, n, &kron(&identity(2), m)))
}

/// Dense form of [`plane_wave_operator`].
pub fn plane_wave_element(cfg: &LatticeDiracConfig, n: [i64; 2], m: &ComplexMatrix) -> Result<ComplexMatrix> {
    plane_wave_operator(cfg, n, m)?.to_dense()
}

/// `M = P_{k→−k} ⊗ C ⊗ M_F` for the product real structure.
fn charge_conjugation_matrix(cfg: &LatticeDiracConfig, convention: ChargeConjugation, finite_m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let block = kron(&convention.spin_matrix(), finite_m);
    let b = block.nrows();
    let n = cfg.modes() * b;
    if n > DENSE_LIMIT {
        return Err(Error::DimensionTooLarge(format!("dense product of dimension {n}")));
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..cfg.modes() {
        let k = cfg.mode_coords(i);
        let t = cfg.mode_index([-k[0], -k[1]]).expect("grid is symmetric");
        out.view_mut((t * b, i * b), (b, b)).copy_from(&block);
    }
    Ok(out)
}

/// `D = ∂̸ ⊗ 𝕀_F + γ_M ⊗ D_F` on the truncated torus.
#[derive(Debug, Clone)]
pub struct ProductTriple {
    lattice: LatticeDiracConfig,
    finite: FiniteSpectralTriple,
}

impl ProductTriple {
    pub fn new(lattice: LatticeDiracConfig, finite: FiniteSpectralTriple) -> Self {
        Self { lattice, finite }
    }

    pub fn lattice(&self) -> &LatticeDiracConfig {
        &self.lattice
    }

    pub fn finite(&self) -> &FiniteSpectralTriple {
        &self.finite
    }

    pub fn block(&self) -> usize {
        2 * self.finite.hilbert_dim()
    }

    pub fn dim(&self) -> usize {
        self.lattice.modes() * self.block()
    }

    pub fn dirac(&self) -> BlockShiftOperator {
        let id_f = identity(self.finite.hilbert_dim());
        let mass = kron(&chirality(), self.finite.dirac());
        BlockShiftOperator::diagonal(self.lattice, self.block(), |k| kron(&self.lattice.dirac_block(k), &id_f) + &mass)
    }

    /// `𝕀_modes ⊗ s ⊗ f` for a spinor matrix `s` and finite matrix `f`.
    pub fn local(&self, spin: &ComplexMatrix, finite: &ComplexMatrix) -> BlockShiftOperator {
        let block = kron(spin, finite);
        BlockShiftOperator::diagonal(self.lattice, self.block(), |_| block.clone())
    }

    /// Plane waves `n ∈ {0, ±e₁, ±e₂}` (those fitting the grid) times the
    /// finite basis, with real structure `𝒥 ⊗ J_F` and grading `γ_M ⊗ Γ_F`.
    ///
    /// The product `ε′` is taken from the lattice factor; when `D_F ≠ 0` the
    /// relation only holds if `ε″_M·ε′_F = ε′_M`.
    pub fn to_finite_triple(&self, convention: ChargeConjugation) -> Result<FiniteSpectralTriple> {
        let cfg = &self.lattice;
        if self.dim() > DENSE_LIMIT {
            return Err(Error::DimensionTooLarge(format!("dense product of dimension {}", self.dim())));
        }
        let mut shifts = vec![[0, 0]];
        if cfg.cutoff >= 1 {
            shifts.extend([[1, 0], [-1, 0], [0, 1], [0, -1]]);
        }
        let mut basis = Vec::new();
        for n in shifts {
            for m in self.finite.algebra_basis() {
                basis.push(plane_wave_element(cfg, n, m)?);
            }
        }
        let real_structure = match self.finite.real_structure() {
            Some(rs) => {
                let (eps_m, eps_prime_m, eps_second_m) = convention.signs();
                let m = charge_conjugation_matrix(cfg, convention, rs.j.matrix())?;
                Some(RealStructure::new(
                    m,
                    eps_m * rs.eps(),
                    eps_prime_m,
                    eps_second_m * rs.eps_second,
                )?)
            }
            None => None,
        };
        let grading = self
            .finite
            .grading()
            .map(|g| self.local(&chirality(), g).to_dense())
            .transpose()?;
        FiniteSpectralTriple::new(
            format!("{}|torus_N{}", self.finite.name(), cfg.cutoff),
            basis,
            self.dirac().to_dense()?,
            real_structure,
            grading,
            self.finite.scalar_field(),
        )
    }
}

// ---------------------------------------------------------------------------
// Boundedness scans

/// Spinor part `𝒯` of a product twisting operator `𝒯 ⊗ T_F`.
#[derive(Debug, Clone, PartialEq)]
pub enum TcalChoice {
    Gamma,
    Identity,
    Custom(ComplexMatrix),
}

impl TcalChoice {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Gamma => "gamma",
            Self::Identity => "identity",
            Self::Custom(_) => "custom",
        }
    }

    pub fn matrix(&self) -> Result<ComplexMatrix> {
        let m = match self {
            Self::Gamma => chirality(),
            Self::Identity => identity(2),
            Self::Custom(m) => m.clone(),
        };
        if m.shape() != (2, 2) || hermitian_residual(&m) > 1e-10 || involution_residual(&m) > 1e-10 {
            return Err(Error::InvalidConfig("spinor twist must be a 2x2 hermitian involution".into()));
        }
        Ok(m)
    }
}

/// A plane-wave algebra element `exp(2πi n·x/L) ⊗ m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWave {
    pub shift: [i64; 2],
    pub finite: ComplexMatrix,
}

impl PlaneWave {
    pub fn new(shift: [i64; 2], finite: ComplexMatrix) -> Self {
        Self { shift, finite }
    }

    pub fn zero(dim_f: usize) -> Self {
        Self { shift: [0, 0], finite: ComplexMatrix::zeros(dim_f, dim_f) }
    }

    fn reach(&self) -> usize {
        if self.finite.iter().all(|z| *z == ZERO) {
            return 0;
        }
        self.shift[0].unsigned_abs().max(self.shift[1].unsigned_abs()) as usize
    }
}

/// `(a, a′)` with both members plane waves.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneWavePair {
    pub a: PlaneWave,
    pub a_prime: PlaneWave,
}

impl PlaneWavePair {
    /// `(1 ⊗ m, 0)`: `a − a′ = 1 ⊗ m`.
    pub fn constant(m: ComplexMatrix) -> Self {
        let d = m.nrows();
        Self { a: PlaneWave::new([0, 0], m), a_prime: PlaneWave::zero(d) }
    }

    pub fn reach(&self) -> usize {
        self.a.reach().max(self.a_prime.reach())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub cutoff: usize,
    pub norm: f64,
}

/// `[D, π(a,a′)]_ρ` for `T = 𝒯 ⊗ T_F` on a product triple.
pub fn product_twisted_commutator(
    product: &ProductTriple,
    tcal: &ComplexMatrix,
    t_finite: &ComplexMatrix,
    pair: &PlaneWavePair,
) -> Result<BlockShiftOperator> {
    let cfg = product.lattice();
    let n = product.block();
    let t = product.local(tcal, t_finite);
    let id = product.local(&identity(2), &identity(product.finite().hilbert_dim()));
    let half = c64(0.5, 0.0);
    let plus = id.add(&t).scale(half);
    let minus = id.sub(&t).scale(half);
    let a = plane_wave_operator(cfg, pair.a.shift, &pair.a.finite)?;
    let a_prime = plane_wave_operator(cfg, pair.a_prime.shift, &pair.a_prime.finite)?;
    let pi = plus.compose(&a).add(&minus.compose(&a_prime));
    let pi_flip = plus.compose(&a_prime).add(&minus.compose(&a));
    let d = product.dirac();
    debug_assert_eq!(d.block, n);
    Ok(d.compose(&pi).sub(&pi_flip.compose(&d)))
}

/// Norm of the twisted commutator on the interior window
/// `|k|∞ ≤ N − max|n|∞`, for each cutoff in `cutoffs`.
pub fn boundedness_scan(
    tcal: &TcalChoice,
    t_finite: &ComplexMatrix,
    finite: &FiniteSpectralTriple,
    cutoffs: &[usize],
    pair: &PlaneWavePair,
    torus_length: f64,
) -> Result<Vec<ScanPoint>> {
    let spin = tcal.matrix()?;
    let report = validate_twisting_operator(t_finite, finite, 1e-10);
    if !report.overall_pass {
        let failed: Vec<&str> = report.failures().map(|e| e.name.as_str()).collect();
        return Err(Error::InvalidConfig(format!(
            "finite twist is not a twisting operator: {}",
            failed.join(", ")
        )));
    }
    for w in [&pair.a, &pair.a_prime] {
        if w.finite.shape() != t_finite.shape() {
            return Err(Error::DimensionMismatch("plane-wave coefficient size".into()));
        }
    }
    let reach = pair.reach();
    cutoffs
        .par_iter()
        .map(|&cutoff| {
            if reach > cutoff {
                return Err(Error::InvalidConfig(format!(
                    "shift reach {reach} leaves no interior at cutoff {cutoff}"
                )));
            }
            let cfg = LatticeDiracConfig::new(cutoff, torus_length)?;
            let product = ProductTriple::new(cfg, finite.clone());
            let c = product_twisted_commutator(&product, &spin, t_finite, pair)?;
            Ok(ScanPoint { cutoff, norm: c.window_norm(cutoff - reach) })
        })
        .collect()
}

/// Mean, relative spread and least-squares line of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanFit {
    pub mean: f64,
    /// `(max − min)/mean`.
    pub relative_variation: f64,
    pub slope: f64,
    pub intercept: f64,
}

/// `None` for fewer than two points.
pub fn fit_scan(points: &[ScanPoint]) -> Option<ScanFit> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.cutoff as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.norm).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let max = ys.iter().copied().fold(f64::MIN, f64::max);
    let min = ys.iter().copied().fold(f64::MAX, f64::min);
    Some(ScanFit {
        mean: my,
        relative_variation: if my != 0.0 { (max - min) / my.abs() } else { 0.0 },
        slope,
        intercept: my - slope * mx,
    })
}

/// `2π√2/L`, the growth rate of `‖∂̸‖` per unit cutoff.
pub fn analytic_slope(torus_length: f64) -> f64 {
    2.0 * PI * 2f64.sqrt() / torus_length
}

/// CSV rows `N,norm,tcal`, plus a fit footer comment when there are at least
/// two rows.
pub fn scan_to_csv(points: &[ScanPoint], tcal: &str) -> String {
    let mut out = String::from("N,norm,tcal\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.cutoff, p.norm, tcal));
    }
    if let Some(fit) = fit_scan(points) {
        out.push_str(&format!(
            "# fit slope={} intercept={} mean={} relative_variation={}\n",
            fit.slope, fit.intercept, fit.mean, fit.relative_variation
        ));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanDocument {
    pub tcal: String,
    pub torus_length: f64,
    pub points: Vec<ScanPoint>,
    pub fit: Option<ScanFit>,
}

pub fn scan_to_json(points: &[ScanPoint], tcal: &str, torus_length: f64) -> String {
    let doc = ScanDocument {
        tcal: tcal.to_string(),
        torus_length,
        points: points.to_vec(),
        fit: fit_scan(points),
    };
    serde_json::to_string_pretty(&doc).expect("scan document serializes")
}

// ---------------------------------------------------------------------------
// Reductions to the finite space

/// Full-space and finite-space checks of the same conditions, paired by name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionReport {
    pub full: ConstraintReport,
    pub finite: ConstraintReport,
    /// One entry per condition: residual `|full − finite|`, pass iff the
    /// verdicts agree and the residuals match.
    pub agreement: ConstraintReport,
    pub agree: bool,
}

fn pair_reports(full: ConstraintReport, finite: ConstraintReport, tol: f64) -> ReductionReport {
    let mut agreement = ConstraintReport::new();
    for f in &finite.entries {
        let name = f.name.trim_start_matches("finite_");
        let Some(g) = full.entry(name) else {
            agreement.record(name, f64::INFINITY, tol, false, "missing full-space entry");
            continue;
        };
        let (Some(rf), Some(rg)) = (f.residual, g.residual) else {
            agreement.not_applicable(name, tol, "no residual");
            continue;
        };
        let diff = (rf - rg).abs();
        let same = f.verdict == g.verdict && diff <= tol * rf.abs().max(1.0);
        agreement.record(name, diff, tol, same, format!("full {rg:.3e}, finite {rf:.3e}"));
    }
    let agree = agreement.overall_pass;
    ReductionReport { full, finite, agreement, agree }
}

fn product_twist(product: &ProductTriple, t_finite: &ComplexMatrix) -> Result<TwistingOperator> {
    TwistingOperator::product(product.local(&chirality(), t_finite).to_dense()?)
}

/// Order-zero conditions for `T = γ_M ⊗ T_F` on the product against the
/// finite conditions for `T_F`.
pub fn product_order_zero_reduction(
    t_finite: &ComplexMatrix,
    finite: &FiniteSpectralTriple,
    cfg: &LatticeDiracConfig,
    convention: ChargeConjugation,
    tol: f64,
) -> Result<ReductionReport> {
    finite.require_real_structure()?;
    let product = ProductTriple::new(*cfg, finite.clone());
    let dense = product.to_finite_triple(convention)?;
    let t = product_twist(&product, t_finite)?;
    let full = order_zero_conditions(&t, &dense, tol)?;
    let fin = crate::twist::finite_order_zero_conditions(t_finite, finite, tol)?;
    Ok(pair_reports(full, fin, tol))
}

/// First-order conditions for `T = γ_M ⊗ T_F` on the product against the
/// finite conditions, which only see `{D_F, T_F}`.
pub fn product_first_order_reduction(
    t_finite: &ComplexMatrix,
    finite: &FiniteSpectralTriple,
    cfg: &LatticeDiracConfig,
    convention: ChargeConjugation,
    tol: f64,
) -> Result<ReductionReport> {
    finite.require_real_structure()?;
    let product = ProductTriple::new(*cfg, finite.clone());
    let dense = product.to_finite_triple(convention)?;
    let t = product_twist(&product, t_finite)?;
    let full = first_order_conditions(&t, &dense, tol)?;
    let fin = crate::twist::finite_first_order_conditions(t_finite, finite, tol)?;
    Ok(pair_reports(full, fin, tol))
}

/// `‖{∂̸ ⊗ 𝕀_F, γ_M ⊗ 𝕀_F}‖` and `‖D − D†‖` on the dense product.
pub fn product_invariants(product: &ProductTriple) -> Result<(f64, f64)> {
    let d = product.dirac().to_dense()?;
    let id_f = identity(product.finite().hilbert_dim());
    let free = BlockShiftOperator::diagonal(product.lattice, product.block(), |k| {
        kron(&product.lattice.dirac_block(k), &id_f)
    })
    .to_dense()?;
    let gamma = product.local(&chirality(), &id_f).to_dense()?;
    Ok((operator_norm(&acomm(&free, &gamma)), hermitian_residual(&d)))
}
