//! The Weyl-Heisenberg group H(n): normal forms `J^α X^a Z^b`, its
//! irreducible representations, Fourier transforms of operator-valued
//! functions, and approximate-homomorphism rounding.

mod rounding;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{rho_norm_sq, ComplexMatrix, DensityMatrix, Letter, PauliString, C64};

pub use rounding::{gowers_hatami_round, perturbed_sigma, RoundingResult, MAX_ROUNDING_N};

/// Largest n accepted by [`enumerate`] and [`irr_set`].
pub const MAX_ENUMERATE_N: usize = 4;

/// `J^alpha X^a Z^b`; bit `i` of `a`/`b` is the exponent of `X_i`/`Z_i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    pub n: usize,
    pub alpha: bool,
    pub a: u64,
    pub b: u64,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        Self { n, alpha: false, a: 0, b: 0 }
    }

    pub fn j(n: usize) -> Self {
        Self { n, alpha: true, a: 0, b: 0 }
    }

    pub fn x(n: usize, i: usize) -> Self {
        Self { n, alpha: false, a: 1 << i, b: 0 }
    }

    pub fn z(n: usize, i: usize) -> Self {
        Self { n, alpha: false, a: 0, b: 1 << i }
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("H({}) times H({})", self.n, other.n)));
        }
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let swap = (self.b & other.a).count_ones() % 2 == 1;
        Self { n: self.n, alpha: self.alpha ^ other.alpha ^ swap, a: self.a ^ other.a, b: self.b ^ other.b }
    }

    pub fn inverse(&self) -> Self {
        let twist = (self.a & self.b).count_ones() % 2 == 1;
        Self { n: self.n, alpha: self.alpha ^ twist, a: self.a, b: self.b }
    }

    pub fn is_identity(&self) -> bool {
        !self.alpha && self.a == 0 && self.b == 0
    }

    /// Position in [`enumerate`] order.
    pub fn index(&self) -> usize {
        self.alpha as usize | (self.a as usize) << 1 | (self.b as usize) << (self.n + 1)
    }

    pub fn from_index(n: usize, idx: usize) -> Self {
        let mask = (1usize << n) - 1;
        Self { n, alpha: idx & 1 == 1, a: (idx >> 1 & mask) as u64, b: (idx >> (n + 1) & mask) as u64 }
    }

    /// σ(g) = (-1)^α σ_X^a σ_Z^b as a signed Pauli string.
    pub fn to_pauli(&self) -> PauliString {
        PauliString::from_masks(self.n, self.a, self.b, self.alpha).expect("masks within n")
    }

    pub fn from_pauli(p: &PauliString) -> Self {
        Self { n: p.n(), alpha: p.is_negative(), a: p.x_mask(), b: p.z_mask() }
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        write!(f, "{}", self.alpha as u8)?;
        let bits = |m: u64| (0..self.n).map(|i| if m >> i & 1 == 1 { '1' } else { '0' }).collect::<String>();
        write!(f, ",{},{})", bits(self.a), bits(self.b))
    }
}

pub fn group_order(n: usize) -> usize {
    1 << (2 * n + 1)
}

/// All elements of H(n) in index order.
pub fn enumerate(n: usize) -> Result<Vec<GroupElement>> {
    if n > MAX_ENUMERATE_N {
        return Err(Error::TooLarge(format!("H({n}) has {} elements", group_order(n))));
    }
    Ok((0..group_order(n)).map(|i| GroupElement::from_index(n, i)).collect())
}

/// Irreducible representation of H(n).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IrrepKind {
    /// χ_{u,v}(J^α X^a Z^b) = (-1)^{u·a + v·b}.
    Character { u: u64, v: u64 },
    /// J ↦ -I, X_i ↦ σ_X(e_i), Z_i ↦ σ_Z(e_i).
    Sigma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Irrep {
    pub n: usize,
    pub kind: IrrepKind,
}

impl Irrep {
    pub fn dim(&self) -> usize {
        match self.kind {
            IrrepKind::Character { .. } => 1,
            IrrepKind::Sigma => 1 << self.n,
        }
    }

    pub fn matrix(&self, g: &GroupElement) -> ComplexMatrix {
        match self.kind {
            IrrepKind::Character { u, v } => {
                let odd = ((u & g.a).count_ones() + (v & g.b).count_ones()) % 2 == 1;
                ComplexMatrix::identity(1).scale_real(if odd { -1.0 } else { 1.0 })
            }
            IrrepKind::Sigma => g.to_pauli().to_matrix(),
        }
    }

    pub fn character(&self, g: &GroupElement) -> C64 {
        self.matrix(g).trace()
    }

    pub fn label(&self) -> String {
        match self.kind {
            IrrepKind::Character { u, v } => {
                let bits = |m: u64| (0..self.n).map(|i| if m >> i & 1 == 1 { '1' } else { '0' }).collect::<String>();
                format!("chi[{},{}]", bits(u), bits(v))
            }
            IrrepKind::Sigma => "sigma".into(),
        }
    }
}

/// The 2^{2n} characters followed by σ.
pub fn irr_set(n: usize) -> Result<Vec<Irrep>> {
    if n > MAX_ENUMERATE_N {
        return Err(Error::TooLarge(format!("Irr(H({n}))")));
    }
    let mut out: Vec<Irrep> = (0..1u64 << n)
        .flat_map(|v| (0..1u64 << n).map(move |u| Irrep { n, kind: IrrepKind::Character { u, v } }))
        .collect();
    out.push(Irrep { n, kind: IrrepKind::Sigma });
    Ok(out)
}

/// Σ_φ d_φ Tr φ(g).
pub fn completeness_sum(n: usize, g: &GroupElement) -> Result<C64> {
    Ok(irr_set(n)?.iter().map(|phi| phi.character(g) * phi.dim() as f64).sum())
}

/// Unitary-valued function on H(n), tabulated in [`enumerate`] order.
#[derive(Clone, Debug)]
pub struct GroupFunction {
    n: usize,
    dim: usize,
    table: Vec<ComplexMatrix>,
}

const FUNCTION_TOL: f64 = 1e-10;

impl GroupFunction {
    pub fn new(n: usize, table: Vec<ComplexMatrix>) -> Result<Self> {
        if n > MAX_ENUMERATE_N {
            return Err(Error::TooLarge(format!("group function on H({n})")));
        }
        if table.len() != group_order(n) {
            return Err(Error::GroupFunction(format!("{} entries for |H({n})| = {}", table.len(), group_order(n))));
        }
        let dim = table[0].rows();
        for (i, m) in table.iter().enumerate() {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::GroupFunction(format!("entry {i} has shape {}x{}", m.rows(), m.cols())));
            }
            if m.unitarity_error() > 1e-9 {
                return Err(Error::GroupFunction(format!("entry {i} is not unitary")));
            }
        }
        if table[0].max_abs_diff(&ComplexMatrix::identity(dim)) > FUNCTION_TOL {
            return Err(Error::GroupFunction("f(1) is not the identity".into()));
        }
        Ok(Self { n, dim, table })
    }

    pub fn from_fn(n: usize, f: impl Fn(&GroupElement) -> ComplexMatrix) -> Result<Self> {
        Self::new(n, enumerate(n)?.iter().map(f).collect())
    }

    /// The representation σ tensored with the identity on an auxiliary space.
    pub fn sigma(n: usize, aux_dim: usize) -> Result<Self> {
        let id = ComplexMatrix::identity(aux_dim);
        Self::from_fn(n, |g| g.to_pauli().to_matrix().kron(&id))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, g: &GroupElement) -> &ComplexMatrix {
        &self.table[g.index()]
    }

    pub fn table(&self) -> &[ComplexMatrix] {
        &self.table
    }

    /// Replaces one entry; used to build defective examples.
    pub fn with_entry(&self, g: &GroupElement, m: ComplexMatrix) -> Result<Self> {
        let mut table = self.table.clone();
        table[g.index()] = m;
        Self::new(self.n, table)
    }

    /// UfU* entrywise.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        let ud = u.adjoint();
        Self::new(self.n, self.table.iter().map(|m| u.matmul(m).matmul(&ud)).collect())
    }

    /// max_g ‖f(g⁻¹) - f(g)*‖ entrywise.
    pub fn adjoint_symmetry_error(&self) -> f64 {
        (0..self.table.len())
            .map(|i| {
                let g = GroupElement::from_index(self.n, i);
                self.at(&g.inverse()).max_abs_diff(&self.table[i].adjoint())
            })
            .fold(0.0, f64::max)
    }
}

/// (1/|G|) Σ_g f(g) ⊗ conj(φ(g)).
pub fn fourier_transform(f: &GroupFunction, phi: &Irrep) -> Result<ComplexMatrix> {
    let elements = enumerate(f.n)?;
    fourier_on(f, phi, &elements)
}

/// Fourier transform of the restriction of `f` and `phi` to `elements`.
pub fn fourier_on(f: &GroupFunction, phi: &Irrep, elements: &[GroupElement]) -> Result<ComplexMatrix> {
    if phi.n != f.n {
        return Err(Error::Dimension(format!("irrep of H({}) against f on H({})", phi.n, f.n)));
    }
    let d = f.dim * phi.dim();
    let mut acc = ComplexMatrix::zeros(d, d);
    for g in elements {
        acc = &acc + &f.at(g).kron(&phi.matrix(g).conj());
    }
    Ok(acc.scale_real(1.0 / elements.len() as f64))
}

fn check_defect_inputs(f: &GroupFunction, rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != f.dim {
        return Err(Error::Dimension(format!("state of dim {} for f of dim {}", rho.dim(), f.dim)));
    }
    let err = f.adjoint_symmetry_error();
    if err > FUNCTION_TOL {
        return Err(Error::GroupFunction(format!("f(g^-1) != f(g)* (deviation {err:e})")));
    }
    Ok(())
}

/// Per-element averages `(1/|G|) Σ_h ‖f(g)f(h) - f(gh)‖²_ρ`.
pub fn defect_profile(f: &GroupFunction, rho: &DensityMatrix) -> Result<BTreeMap<GroupElement, f64>> {
    check_defect_inputs(f, rho)?;
    let elements = enumerate(f.n)?;
    let order = elements.len() as f64;
    let mut out = BTreeMap::new();
    for g in &elements {
        let mut total = 0.0;
        for h in &elements {
            let diff = &f.at(g).matmul(f.at(h)) - f.at(&g.mul_unchecked(h));
            total += rho_norm_sq(&diff, rho)?;
        }
        out.insert(*g, total / order);
    }
    Ok(out)
}

/// max_g (1/|G|) Σ_h ‖f(g)f(h) - f(gh)‖²_ρ.
pub fn homomorphism_defect(f: &GroupFunction, rho: &DensityMatrix) -> Result<f64> {
    Ok(defect_profile(f, rho)?.values().copied().fold(0.0, f64::max))
}

/// The mirrored average max_g (1/|G|) Σ_h ‖f(h)f(g) - f(hg)‖²_ρ, which is
/// exactly what the rounding residual equals. It coincides with
/// [`homomorphism_defect`] whenever ρ is maximally mixed.
pub fn right_homomorphism_defect(f: &GroupFunction, rho: &DensityMatrix) -> Result<f64> {
    check_defect_inputs(f, rho)?;
    let elements = enumerate(f.n)?;
    let order = elements.len() as f64;
    let mut worst: f64 = 0.0;
    for g in &elements {
        let mut total = 0.0;
        for h in &elements {
            let diff = &f.at(h).matmul(f.at(g)) - f.at(&h.mul_unchecked(g));
            total += rho_norm_sq(&diff, rho)?;
        }
        worst = worst.max(total / order);
    }
    Ok(worst)
}

/// Builds f from single-site observables:
/// f(J^α X^a Z^b) = (-1)^α Π_{i∈a} τ_X(e_i) Π_{j∈b} τ_Z(e_j), ascending sites.
pub fn strategy_to_group_function(
    n: usize,
    observables: &BTreeMap<PauliString, ComplexMatrix>,
) -> Result<GroupFunction> {
    let lookup = |letter: Letter, i: usize| -> Result<&ComplexMatrix> {
        let key = PauliString::single(n, i, letter);
        let m = observables
            .get(&key)
            .ok_or_else(|| Error::GroupFunction(format!("missing observable for {key}")))?;
        let d = m.rows();
        if !m.is_hermitian(1e-9) || m.matmul(m).max_abs_diff(&ComplexMatrix::identity(d)) > 1e-9 {
            return Err(Error::GroupFunction(format!("observable for {key} is not an involution")));
        }
        Ok(m)
    };
    let xs: Vec<&ComplexMatrix> = (0..n).map(|i| lookup(Letter::X, i)).collect::<Result<_>>()?;
    let zs: Vec<&ComplexMatrix> = (0..n).map(|i| lookup(Letter::Z, i)).collect::<Result<_>>()?;
    let d = xs.first().map_or(1, |m| m.rows());
    GroupFunction::from_fn(n, |g| {
        let mut m = ComplexMatrix::identity(d);
        for (i, x) in xs.iter().enumerate() {
            if g.a >> i & 1 == 1 {
                m = m.matmul(x);
            }
        }
        for (j, z) in zs.iter().enumerate() {
            if g.b >> j & 1 == 1 {
                m = m.matmul(z);
            }
        }
        if g.alpha {
            m.scale_real(-1.0)
        } else {
            m
        }
    })
}

/// S = (1/4n) Σ_{i, a, b} P_{iab} ⊗ P_{iab} with P_{iab} = σ_X(e_i)^a σ_Z(e_i)^b,
/// on two n-qubit registers. Its unique +1 eigenvector is EPR^⊗n.
pub fn epr_test_operator(n: usize) -> ComplexMatrix {
    let d = 1usize << (2 * n);
    let mut s = ComplexMatrix::zeros(d, d);
    for i in 0..n {
        for (x, z) in [(false, false), (true, false), (false, true), (true, true)] {
            let p = PauliString::single(n, i, Letter::from_bits(x, z));
            let both = p.embed(2 * n, &(0..n).collect::<Vec<_>>()).unwrap();
            let twin = p.embed(2 * n, &(n..2 * n).collect::<Vec<_>>()).unwrap();
            let term = both.multiply(&twin).unwrap();
            s = &s + &term.to_matrix();
        }
    }
    s.scale_real(1.0 / (4 * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{epr_state, hermitian_eig};

    #[test]
    fn commutator_is_j() {
        let x = GroupElement::x(1, 0);
        let z = GroupElement::z(1, 0);
        let xz = x.multiply(&z).unwrap();
        let zx = z.multiply(&x).unwrap();
        assert_eq!((xz.alpha, xz.a, xz.b), (false, 1, 1));
        assert_eq!((zx.alpha, zx.a, zx.b), (true, 1, 1));
        assert_eq!(zx, GroupElement::j(1).multiply(&xz).unwrap());
    }

    #[test]
    fn inverses_in_h2() {
        for g in enumerate(2).unwrap() {
            assert!(g.multiply(&g.inverse()).unwrap().is_identity());
            assert!(g.inverse().multiply(&g).unwrap().is_identity());
        }
    }

    #[test]
    fn sigma_is_a_homomorphism_on_h1() {
        let el = enumerate(1).unwrap();
        for g in &el {
            for h in &el {
                let lhs = g.multiply(h).unwrap().to_pauli().to_matrix();
                let rhs = g.to_pauli().to_matrix().matmul(&h.to_pauli().to_matrix());
                assert!(lhs.max_abs_diff(&rhs) < 1e-15);
            }
        }
    }

    #[test]
    fn counts_and_guard() {
        assert_eq!(enumerate(1).unwrap().len(), 8);
        assert_eq!(enumerate(2).unwrap().len(), 32);
        assert!(enumerate(5).is_err());
        let irr = irr_set(1).unwrap();
        assert_eq!(irr.iter().map(Irrep::dim).collect::<Vec<_>>(), vec![1, 1, 1, 1, 2]);
    }

    #[test]
    fn associativity_h1() {
        let el = enumerate(1).unwrap();
        for a in &el {
            for b in &el {
                for c in &el {
                    let l = a.multiply(b).unwrap().multiply(c).unwrap();
                    let r = a.multiply(&b.multiply(c).unwrap()).unwrap();
                    assert_eq!(l, r);
                }
            }
        }
    }

    #[test]
    fn completeness_values() {
        assert!((completeness_sum(2, &GroupElement::identity(2)).unwrap().re - 32.0).abs() < 1e-12);
        assert!(completeness_sum(1, &GroupElement::j(1)).unwrap().norm() < 1e-12);
    }

    #[test]
    fn index_round_trip() {
        for (i, g) in enumerate(3).unwrap().iter().enumerate() {
            assert_eq!(g.index(), i);
            assert_eq!(GroupElement::from_pauli(&g.to_pauli()), *g);
        }
    }

    #[test]
    fn fourier_of_sigma_at_characters_vanishes() {
        let f = GroupFunction::sigma(1, 1).unwrap();
        for phi in irr_set(1).unwrap() {
            let hat = fourier_transform(&f, &phi).unwrap();
            if phi.kind != IrrepKind::Sigma {
                assert!(hat.max_abs() < 1e-15);
            }
        }
    }

    #[test]
    fn fourier_of_trivial_function_at_trivial_character() {
        let f = GroupFunction::from_fn(1, |_| ComplexMatrix::identity(2)).unwrap();
        let triv = Irrep { n: 1, kind: IrrepKind::Character { u: 0, v: 0 } };
        let hat = fourier_transform(&f, &triv).unwrap();
        assert!(hat.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn fourier_of_sigma_at_sigma_is_epr_projector() {
        // Brute-force golden: the sum over the 8 elements of H(1) collapses to
        // |Φ><Φ| with |Φ> = (|00> + |11>)/√2, a rank-one projector.
        let f = GroupFunction::sigma(1, 1).unwrap();
        let hat = fourier_transform(&f, &Irrep { n: 1, kind: IrrepKind::Sigma }).unwrap();
        let phi = epr_state(1);
        let proj = ComplexMatrix::outer(phi.amplitudes(), phi.amplitudes());
        assert!(hat.max_abs_diff(&proj) < 1e-15);
        assert!((hat.frobenius_norm().powi(2) - 1.0).abs() < 1e-14);
    }

    // Hand count at g = X: six of the eight h give ‖±2P‖² = 4.
    const GOLDEN_FLIPPED_DEFECT: f64 = 3.0;

    #[test]
    fn defect_of_exact_and_flipped() {
        let f = GroupFunction::sigma(1, 1).unwrap();
        let rho = DensityMatrix::maximally_mixed(1);
        assert!(homomorphism_defect(&f, &rho).unwrap() < 1e-12);
        // Flipping a self-inverse entry keeps f(g^-1) = f(g)*.
        let g = GroupElement::x(1, 0);
        let flipped = f.with_entry(&g, f.at(&g).scale_real(-1.0)).unwrap();
        let d = homomorphism_defect(&flipped, &rho).unwrap();
        assert!((d - GOLDEN_FLIPPED_DEFECT).abs() < 1e-12, "{d}");
    }

    #[test]
    fn defect_unitarily_invariant() {
        let f = GroupFunction::sigma(1, 1).unwrap();
        let g = GroupElement::z(1, 0);
        let flipped = f.with_entry(&g, f.at(&g).scale_real(-1.0)).unwrap();
        let rho = StateFixture::skewed();
        let u = crate::qcore::PauliString::from_masks(1, 1, 0, false).unwrap().to_matrix();
        let h = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, -1.0]).unwrap().scale_real(std::f64::consts::FRAC_1_SQRT_2);
        let u = u.matmul(&h);
        let d0 = homomorphism_defect(&flipped, &rho).unwrap();
        let d1 = homomorphism_defect(&flipped.conjugated(&u).unwrap(), &rho.conjugate(&u)).unwrap();
        assert!((d0 - d1).abs() < 1e-12);
    }

    struct StateFixture;
    impl StateFixture {
        fn skewed() -> DensityMatrix {
            DensityMatrix::new(ComplexMatrix::from_vec(2, 2, vec![
                C64::new(0.7, 0.0), C64::new(0.1, 0.2),
                C64::new(0.1, -0.2), C64::new(0.3, 0.0),
            ]).unwrap()).unwrap()
        }
    }

    #[test]
    fn defect_rejects_asymmetric_function() {
        let f = GroupFunction::sigma(1, 1).unwrap();
        // XZ has inverse J·XZ; negating only one of the pair breaks symmetry.
        let g = GroupElement { n: 1, alpha: false, a: 1, b: 1 };
        let bad = f.with_entry(&g, f.at(&g).scale_real(-1.0)).unwrap();
        assert!(homomorphism_defect(&bad, &DensityMatrix::maximally_mixed(1)).is_err());
    }

    #[test]
    fn strategy_function_from_honest_observables() {
        let n = 2;
        let mut obs = BTreeMap::new();
        for i in 0..n {
            for l in [Letter::X, Letter::Z] {
                let p = PauliString::single(n, i, l);
                obs.insert(p, p.to_matrix());
            }
        }
        let f = strategy_to_group_function(n, &obs).unwrap();
        assert!(f.at(&GroupElement::identity(n)).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
        assert!(f.at(&GroupElement::j(n)).max_abs_diff(&ComplexMatrix::identity(4).scale_real(-1.0)) < 1e-15);
        let sigma = GroupFunction::sigma(n, 1).unwrap();
        for (a, b) in f.table().iter().zip(sigma.table()) {
            assert!(a.max_abs_diff(b) < 1e-15);
        }
        obs.remove(&PauliString::single(n, 1, Letter::Z));
        assert!(strategy_to_group_function(n, &obs).is_err());
    }

    #[test]
    fn epr_operator_spectrum_n1() {
        // For one pair S is the projector onto Φ.
        let s = epr_test_operator(1);
        let e = hermitian_eig(&s).unwrap();
        assert!((e.values[3] - 1.0).abs() < 1e-12 && e.values[2].abs() < 1e-12);
    }
}
