#![allow(dead_code)]

use nalgebra::DMatrix;
use ncg_twist::catalog::{
    default_sm_couplings, four_point, four_point_restricted, sm_one_generation, two_point,
};
use ncg_twist::linalg::{c64, identity, kron, pauli, real_diag, unit, ComplexMatrix, Sign, ONE};
use ncg_twist::triple::{subalgebra_restriction, FiniteSpectralTriple, RealStructure, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// One (triple, T) instance of the equivalence corpus.
pub struct Instance {
    pub label: String,
    pub triple: FiniteSpectralTriple,
    pub twist: ComplexMatrix,
}

fn inst(label: &str, triple: &FiniteSpectralTriple, twist: ComplexMatrix) -> Instance {
    Instance { label: label.to_string(), triple: triple.clone(), twist }
}

pub fn sm() -> FiniteSpectralTriple {
    sm_one_generation(&default_sm_couplings()).unwrap()
}

/// `M₂(ℂ) ⊗ 𝕀` on `ℂ² ⊗ ℂ²` with `J` the tensor swap composed with
/// conjugation; the opposite algebra is `𝕀 ⊗ M₂(ℂ)`.
pub fn tensor_swap_triple() -> FiniteSpectralTriple {
    let mut swap = ComplexMatrix::zeros(4, 4);
    for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
        swap[(i, j)] = ONE;
    }
    let basis = (0..2)
        .flat_map(|i| (0..2).map(move |j| kron(&unit(2, i, j), &identity(2))))
        .collect();
    let rs = RealStructure::new(swap, Sign::Plus, Sign::Plus, Sign::Plus).unwrap();
    FiniteSpectralTriple::new("tensor_swap", basis, ComplexMatrix::zeros(4, 4), Some(rs), None, ScalarField::Complex)
        .unwrap()
}

/// At least twenty instances: gradings and central involutions on the
/// catalog, plus violators that break exactly one condition each.
pub fn equivalence_corpus() -> Vec<Instance> {
    let graded = [two_point(), four_point(), four_point_restricted(), sm()];
    let mut out = Vec::new();
    for t in &graded {
        let g = t.grading().unwrap().clone();
        out.push(inst(&format!("{} +grading", t.name()), t, g.clone()));
        out.push(inst(&format!("{} -grading", t.name()), t, -g));
        let n = t.hilbert_dim();
        out.push(inst(&format!("{} +identity", t.name()), t, identity(n)));
        out.push(inst(&format!("{} -identity", t.name()), t, -identity(n)));
    }
    let s = 1.0 / 2f64.sqrt();
    let scalars2 = subalgebra_restriction(&two_point(), vec![identity(2)]).unwrap();
    out.push(inst(
        "order-zero violator: twist vs opposite twist",
        &scalars2,
        (pauli(1) + pauli(3)) * c64(s, 0.0),
    ));
    out.push(inst(
        "order-zero violator: algebra vs opposite twist",
        &tensor_swap_triple(),
        kron(&identity(2), &pauli(3)),
    ));
    let scalars4 = subalgebra_restriction(&four_point(), vec![identity(4)]).unwrap();
    out.push(inst(
        "first-order violator: anticommutator with opposite twist",
        &scalars4,
        real_diag(&[-1.0, 1.0, 1.0, 1.0]),
    ));
    out.push(inst(
        "first-order violator: commutator with opposite algebra",
        &four_point(),
        real_diag(&[1.0, 1.0, -1.0, 1.0]),
    ));
    out.push(inst(
        "non-grading twist",
        &four_point_restricted(),
        real_diag(&[1.0, -1.0, 1.0, 1.0]),
    ));
    out
}

/// Haar-like random unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| {
        c64(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    g.qr().q()
}

/// `U·diag(±1)·U†` with both eigenvalues present when `n ≥ 2`.
pub fn random_selfadjoint_involution(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let u = random_unitary(n, rng);
    let plus = if n >= 2 { rng.random_range(1..n) } else { 1 };
    let signs: Vec<f64> = (0..n).map(|i| if i < plus { 1.0 } else { -1.0 }).collect();
    &u * real_diag(&signs) * u.adjoint()
}

pub fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    DMatrix::from_fn(n, n, |_, _| {
        c64(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
