//! Built-in finite spectral triples.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    c64, full_matrix_basis, identity, kron, pauli, real_diag, unit, ComplexMatrix, Sign, I, ONE,
};
use crate::triple::{subalgebra_restriction, FiniteSpectralTriple, RealStructure, ScalarField};

/// `ℂ ⊕ ℂ` acting diagonally on `ℂ²` with `D = 0`, `Γ = σ₃` and `J` the
/// swap composed with conjugation. KO-dimension 6.
pub fn two_point() -> FiniteSpectralTriple {
    two_point_named("two_point", ComplexMatrix::zeros(2, 2))
}

/// [`two_point`] with the off-diagonal Dirac operator `d·σ₁`.
///
/// Every nonzero `d` breaks the first-order condition, so this variant is a
/// valid input for lattice scans and twisted commutators but not a real
/// spectral triple in the strict sense.
pub fn two_point_with_dirac(d: f64) -> FiniteSpectralTriple {
    two_point_named("two_point_d", pauli(1) * c64(d, 0.0))
}

fn two_point_named(name: &str, dirac: ComplexMatrix) -> FiniteSpectralTriple {
    let rs = RealStructure::new(pauli(1), Sign::Plus, Sign::Plus, Sign::Minus)
        .expect("static real structure");
    FiniteSpectralTriple::new(
        name,
        vec![unit(2, 0, 0), unit(2, 1, 1)],
        dirac,
        Some(rs),
        Some(pauli(3)),
        ScalarField::Complex,
    )
    .expect("static triple")
}

/// `M₂(ℂ)` on `ℂ²` with `D = σ₁` and `J` plain conjugation.
///
/// The irreducible representation admits no grading commuting with the
/// algebra other than `±𝕀`, so none is attached. The order-zero condition
/// fails for any choice of `J`.
pub fn irreducible_m2() -> FiniteSpectralTriple {
    let rs = RealStructure::new(identity(2), Sign::Plus, Sign::Plus, Sign::Plus)
        .expect("static real structure");
    FiniteSpectralTriple::new(
        "irreducible_m2",
        full_matrix_basis(2),
        pauli(1),
        Some(rs),
        None,
        ScalarField::Complex,
    )
    .expect("static triple")
}

/// Four-dimensional commutative triple on `ℂ² ⊗ ℂ²`.
///
/// Basis order `|00⟩, |01⟩, |10⟩, |11⟩`. The algebra is the diagonal
/// matrices `diag(a, b, c, b)`, `Γ = σ₃ ⊗ σ₃`, `J` is the tensor swap composed
/// with conjugation, and `D` couples `|11⟩` to `|01⟩` and `|10⟩`.
/// KO-dimension 0.
pub fn four_point() -> FiniteSpectralTriple {
    let mut swap = ComplexMatrix::zeros(4, 4);
    for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
        swap[(i, j)] = ONE;
    }
    let rs = RealStructure::new(swap, Sign::Plus, Sign::Plus, Sign::Plus)
        .expect("static real structure");
    let dirac = unit(4, 1, 3) + unit(4, 3, 1) + unit(4, 2, 3) + unit(4, 3, 2);
    FiniteSpectralTriple::new(
        "four_point",
        vec![unit(4, 0, 0), unit(4, 2, 2), unit(4, 1, 1) + unit(4, 3, 3)],
        dirac,
        Some(rs),
        Some(kron(&pauli(3), &pauli(3))),
        ScalarField::Complex,
    )
    .expect("static triple")
}

/// [`four_point`] restricted to `span{𝕀, 𝕀 ⊗ σ₃}`.
///
/// Its twisting operators include involutions other than `±Γ` for which
/// `{D, T}` does not vanish.
pub fn four_point_restricted() -> FiniteSpectralTriple {
    let parent = four_point();
    subalgebra_restriction(&parent, vec![identity(4), kron(&identity(2), &pauli(3))])
        .expect("subspace of the parent algebra")
        .with_name("four_point_restricted")
}

/// Coupling names accepted by [`sm_one_generation`].
pub const SM_COUPLINGS: [&str; 5] = ["y_nu", "y_e", "y_u", "y_d", "y_R"];

/// Illustrative couplings for [`sm_one_generation`].
pub fn default_sm_couplings() -> BTreeMap<String, Complex64> {
    [
        ("y_nu", c64(0.1, 0.0)),
        ("y_e", c64(0.3, 0.1)),
        ("y_u", c64(0.5, 0.0)),
        ("y_d", c64(0.7, -0.2)),
        ("y_R", c64(1.0, 0.0)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

const SECTOR: usize = 16;
const FLAVOR: usize = 4;

fn sm_index(antiparticle: bool, flavor: usize, color: usize) -> usize {
    usize::from(antiparticle) * SECTOR + flavor * FLAVOR + color
}

/// One generation of the Standard Model finite geometry on `ℂ³²`, with
/// algebra `ℂ ⊕ ℍ ⊕ M₃(ℂ)` as a real algebra.
///
/// Index layout: `sector·16 + flavor·4 + color`, sectors (particle,
/// antiparticle), flavors (`u_R/ν_R`, `d_R/e_R`, `u_L/ν_L`, `d_L/e_L`), colors
/// (lepton, r, g, b).
pub fn sm_one_generation(couplings: &BTreeMap<String, Complex64>) -> Result<FiniteSpectralTriple> {
    let get = |key: &str| -> Result<Complex64> {
        match couplings.get(key) {
            Some(v) if v.re.is_finite() && v.im.is_finite() => Ok(*v),
            _ => Err(Error::InvalidCoupling(key.to_string())),
        }
    };
    let (y_nu, y_e, y_u, y_d, y_r) = (get("y_nu")?, get("y_e")?, get("y_u")?, get("y_d")?, get("y_R")?);

    let n = 2 * SECTOR;
    let id4 = identity(4);

    // λ acts on u_R/ν_R, λ̄ on d_R/e_R, the quaternion on the left doublet
    let particle = |flavor_block: &ComplexMatrix| {
        let mut out = ComplexMatrix::zeros(n, n);
        let block = kron(flavor_block, &id4);
        out.view_mut((0, 0), (SECTOR, SECTOR)).copy_from(&block);
        out
    };
    let antiparticle = |color_block: &ComplexMatrix| {
        let mut out = ComplexMatrix::zeros(n, n);
        let block = kron(&id4, color_block);
        out.view_mut((SECTOR, SECTOR), (SECTOR, SECTOR)).copy_from(&block);
        out
    };

    let mut basis = Vec::with_capacity(24);
    for z in [ONE, I] {
        let mut flavor = ComplexMatrix::zeros(4, 4);
        flavor[(0, 0)] = z;
        flavor[(1, 1)] = z.conj();
        let mut color = ComplexMatrix::zeros(4, 4);
        color[(0, 0)] = z;
        basis.push(particle(&flavor) + antiparticle(&color));
    }
    let quaternions = [identity(2), pauli(3) * I, pauli(2) * I, pauli(1) * I];
    for q in &quaternions {
        let mut flavor = ComplexMatrix::zeros(4, 4);
        flavor.view_mut((2, 2), (2, 2)).copy_from(q);
        basis.push(particle(&flavor));
    }
    for i in 0..3 {
        for j in 0..3 {
            for z in [ONE, I] {
                let mut color = ComplexMatrix::zeros(4, 4);
                color[(1 + i, 1 + j)] = z;
                basis.push(antiparticle(&color));
            }
        }
    }

    let mut grading = vec![0.0; n];
    for flavor in 0..4 {
        let right = if flavor < 2 { 1.0 } else { -1.0 };
        for color in 0..4 {
            grading[sm_index(false, flavor, color)] = right;
            grading[sm_index(true, flavor, color)] = -right;
        }
    }

    let mut swap = ComplexMatrix::zeros(n, n);
    for k in 0..SECTOR {
        swap[(k, k + SECTOR)] = ONE;
        swap[(k + SECTOR, k)] = ONE;
    }

    // particle block S maps right-handed to left-handed states
    let mut s = ComplexMatrix::zeros(SECTOR, SECTOR);
    for color in 0..4 {
        let (up, down) = if color == 0 { (y_nu, y_e) } else { (y_u, y_d) };
        for (right, left, y) in [(0, 2, up), (1, 3, down)] {
            let r = right * FLAVOR + color;
            let l = left * FLAVOR + color;
            s[(l, r)] = y;
            s[(r, l)] = y.conj();
        }
    }
    let mut dirac = ComplexMatrix::zeros(n, n);
    dirac.view_mut((0, 0), (SECTOR, SECTOR)).copy_from(&s);
    dirac
        .view_mut((SECTOR, SECTOR), (SECTOR, SECTOR))
        .copy_from(&s.map(|z| z.conj()));
    let nu_r = sm_index(false, 0, 0);
    let anti_nu_r = sm_index(true, 0, 0);
    dirac[(anti_nu_r, nu_r)] = y_r;
    dirac[(nu_r, anti_nu_r)] = y_r.conj();

    FiniteSpectralTriple::new(
        "sm_one_generation",
        basis,
        dirac,
        Some(RealStructure::new(swap, Sign::Plus, Sign::Plus, Sign::Minus)?),
        Some(real_diag(&grading)),
        ScalarField::Real,
    )
}

/// Looks up a built-in triple by its command-line tag.
pub fn builtin(tag: &str) -> Option<FiniteSpectralTriple> {
    match tag {
        "two-point" => Some(two_point()),
        "two-point-d" => Some(two_point_with_dirac(1.0)),
        "m2" => Some(irreducible_m2()),
        "four-point" => Some(four_point()),
        "four-point-restricted" => Some(four_point_restricted()),
        "sm1g" => sm_one_generation(&default_sm_couplings()).ok(),
        _ => None,
    }
}

pub const BUILTIN_TAGS: [&str; 6] = [
    "two-point",
    "two-point-d",
    "m2",
    "four-point",
    "four-point-restricted",
    "sm1g",
];
