//! Constructive Gowers-Hatami rounding with subgroup filtering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    enumerate, fourier_on, fourier_transform, homomorphism_defect, irr_set, GroupElement, GroupFunction, Irrep,
};
use crate::error::{Error, Result};
use crate::qcore::{hermitian_eig, rho_norm_sq, ComplexMatrix, DensityMatrix, C64};

/// Rounding materializes K densely; H(3) and up are rejected.
pub const MAX_ROUNDING_N: usize = 2;
/// Frobenius norm below which a restricted Fourier coefficient counts as zero.
pub const FOURIER_ZERO: f64 = 1e-9;
const SUBGROUP_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct Component {
    pub irrep: Irrep,
    pub label: String,
    pub dim: usize,
    /// Copies of φ inside the block C^d ⊗ H ⊗ C^d.
    pub multiplicity: usize,
    /// Frobenius norm of the restricted transform that admitted φ.
    pub restricted_norm: f64,
}

#[derive(Clone, Debug)]
pub struct RoundingResult {
    /// dim_K × dim_H.
    pub v: ComplexMatrix,
    pub components: Vec<Component>,
    /// g ↦ ‖V f(g) - φ(g) V‖²_ρ in enumerate order.
    pub residuals: Vec<(GroupElement, f64)>,
    pub defect: f64,
    /// max entry of V*V - I.
    pub isometry_error: f64,
    /// Irreps whose restricted transform vanished.
    pub filtered: Vec<Irrep>,
}

impl RoundingResult {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }

    pub fn dim_k(&self) -> usize {
        self.v.rows()
    }

    pub fn rep_label(&self) -> String {
        self.components
            .iter()
            .map(|c| format!("{}^{}", c.label, c.multiplicity))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// φ(g) = ⊕ φ(g) ⊗ I ⊗ I applied to the left of `m` (dim_K rows).
    pub fn apply_rep(&self, g: &GroupElement, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
        let mut offset = 0;
        for c in &self.components {
            let phi = c.irrep.matrix(g);
            let inner = c.multiplicity;
            for i in 0..c.dim {
                for j in 0..c.dim {
                    let w = phi[(i, j)];
                    if w == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for r in 0..inner {
                        let dst = offset + i * inner + r;
                        let src = offset + j * inner + r;
                        for col in 0..m.cols() {
                            out[(dst, col)] += w * m[(src, col)];
                        }
                    }
                }
            }
            offset += c.dim * inner;
        }
        out
    }
}

fn check_subgroup(f: &GroupFunction, s: &[GroupElement]) -> Result<()> {
    if s.is_empty() || !s.iter().any(GroupElement::is_identity) {
        return Err(Error::GroupFunction("subgroup must contain the identity".into()));
    }
    for a in s {
        if a.n != f.n() {
            return Err(Error::Dimension(format!("subgroup element of H({}) for f on H({})", a.n, f.n())));
        }
        for b in s {
            if !s.contains(&a.mul_unchecked(b)) {
                return Err(Error::GroupFunction(format!("subgroup not closed: {a} * {b}")));
            }
        }
    }
    for sg in s {
        for g in enumerate(f.n())? {
            let lhs = f.at(&sg.mul_unchecked(&g));
            let rhs = f.at(sg).matmul(f.at(&g));
            if lhs.max_abs_diff(&rhs) > SUBGROUP_TOL {
                return Err(Error::GroupFunction(format!("f(s g) != f(s) f(g) at s={sg}, g={g}")));
            }
        }
    }
    Ok(())
}

/// Builds V: H → K = ⊕_φ C^{d_φ} ⊗ H ⊗ C^{d_φ} over the irreps admitted by
/// the subgroup `s`, then measures the per-element residuals.
pub fn gowers_hatami_round(f: &GroupFunction, rho: &DensityMatrix, s: &[GroupElement]) -> Result<RoundingResult> {
    if f.n() > MAX_ROUNDING_N {
        return Err(Error::TooLarge(format!("rounding over H({})", f.n())));
    }
    check_subgroup(f, s)?;
    let defect = homomorphism_defect(f, rho)?;
    let h = f.dim();

    let mut components = Vec::new();
    let mut filtered = Vec::new();
    let mut blocks = Vec::new();
    for phi in irr_set(f.n())? {
        let restricted_norm = fourier_on(f, &phi, s)?.frobenius_norm();
        if restricted_norm <= FOURIER_ZERO {
            filtered.push(phi);
            continue;
        }
        let d = phi.dim();
        let hat = fourier_transform(f, &phi)?;
        // Row (i, w, k) of the block is √d · f̂[(w,k), (v,i)].
        let mut block = ComplexMatrix::zeros(d * h * d, h);
        let scale = (d as f64).sqrt();
        for i in 0..d {
            for w in 0..h {
                for k in 0..d {
                    for v in 0..h {
                        block[(i * h * d + w * d + k, v)] = hat[(w * d + k, v * d + i)] * scale;
                    }
                }
            }
        }
        blocks.push(block);
        components.push(Component { irrep: phi, label: phi.label(), dim: d, multiplicity: h * d, restricted_norm });
    }
    if components.is_empty() {
        return Err(Error::GroupFunction("every restricted Fourier coefficient vanishes".into()));
    }

    let dim_k: usize = blocks.iter().map(ComplexMatrix::rows).sum();
    let mut v = ComplexMatrix::zeros(dim_k, h);
    let mut offset = 0;
    for block in &blocks {
        for r in 0..block.rows() {
            for c in 0..h {
                v[(offset + r, c)] = block[(r, c)];
            }
        }
        offset += block.rows();
    }
    let isometry_error = v.adjoint().matmul(&v).max_abs_diff(&ComplexMatrix::identity(h));

    let mut result = RoundingResult { v, components, residuals: Vec::new(), defect, isometry_error, filtered };
    for g in enumerate(f.n())? {
        let diff = &result.v.matmul(f.at(&g)) - &result.apply_rep(&g, &result.v);
        result.residuals.push((g, rho_norm_sq(&diff, rho)?));
    }
    Ok(result)
}

fn random_hermitian_unit(d: usize, rng: &mut impl Rng) -> Result<ComplexMatrix> {
    let data = (0..d * d).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let h = ComplexMatrix::from_vec(d, d, data)?.hermitian_part();
    let e = hermitian_eig(&h)?;
    let spectral = e.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(h.scale_real(1.0 / spectral))
}

fn exp_i(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let e = hermitian_eig(h)?;
    let d = e.values.len();
    let mut scaled = e.vectors.clone();
    for k in 0..d {
        let phase = C64::from_polar(1.0, t * e.values[k]);
        for i in 0..d {
            scaled[(i, k)] *= phase;
        }
    }
    Ok(scaled.matmul(&e.vectors.adjoint()))
}

/// σ ⊗ I_aux with each non-identity coset {g, Jg} conjugated by an
/// independent e^{iεH_g}, ‖H_g‖ = 1. Conjugation keeps f(g⁻¹) = f(g)* and
/// f(Jg) = -f(g), so S = ⟨J⟩ stays exact while the defect grows like ε².
pub fn perturbed_sigma(n: usize, aux_dim: usize, eps: f64, seed: u64) -> Result<GroupFunction> {
    if aux_dim == 0 {
        return Err(Error::Parameter("aux_dim must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = (1usize << n) * aux_dim;
    let id_aux = ComplexMatrix::identity(aux_dim);
    let mut table = vec![ComplexMatrix::identity(d); super::group_order(n)];
    for g in enumerate(n)? {
        if g.alpha {
            continue;
        }
        let base = g.to_pauli().to_matrix().kron(&id_aux);
        let entry = if g.is_identity() {
            base
        } else {
            let u = exp_i(&random_hermitian_unit(d, &mut rng)?, eps)?;
            u.matmul(&base).matmul(&u.adjoint())
        };
        let jg = GroupElement { alpha: true, ..g };
        table[jg.index()] = entry.scale_real(-1.0);
        table[g.index()] = entry;
    }
    GroupFunction::new(n, table)
}
