//! Effective spin Hamiltonian for one electronic manifold of ¹⁷¹Yb³⁺:YVO₄.
//!
//! Both the ground (²F₇/₂(0)) and optically excited (²F₅/₂(0)) manifolds are
//! four-dimensional: an effective electron spin S = ½ coupled to the I = ½
//! nuclear spin of ¹⁷¹Yb. The site has axial (D₂d) symmetry, so the g and A
//! tensors each carry two independent components (parallel and perpendicular
//! to the crystal c axis):
//!
//! ```text
//! H = μ_B (g∥ B_z S_z + g⊥ (B_x S_x + B_y S_y)) + A∥ S_z I_z + A⊥ (S_x I_x + S_y I_y)
//! ```
//!
//! All energies are in GHz. The product basis is ordered
//! {|↑⇑⟩, |↑⇓⟩, |↓⇑⟩, |↓⇓⟩} with ↑/↓ the electron spin and ⇑/⇓ the nuclear
//! spin projection along c.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::BOHR_MAGNETON_GHZ_PER_T;
use crate::error::{Error, Result};

pub type CMat4 = Matrix4<C64>;
pub type CVec4 = Vector4<C64>;

/// Which electronic manifold a parameter set or level solution belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ManifoldTag {
    Ground,
    Excited,
}

impl std::fmt::Display for ManifoldTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ManifoldTag::Ground => write!(f, "ground"),
            ManifoldTag::Excited => write!(f, "excited"),
        }
    }
}

/// g-tensor and hyperfine-tensor components for one manifold.
///
/// `a_parallel_ghz` and `a_perp_ghz` are signed. The sign of A∥ orders the
/// electron-nuclear doublet {|↑⇑⟩, |↓⇓⟩} against the mixed pair
/// (|↑⇓⟩ ± |↓⇑⟩)/√2; the sign of A⊥ decides which mixed combination lies
/// lower. The shipped defaults use A∥ < 0, A⊥ < 0 for the ground manifold and
/// A∥ > 0, A⊥ > 0 for the excited manifold, which reproduces the observed
/// zero-field orderings (degenerate ground doublet lowest, excited singlet
/// lowest) and the observed polarization selection rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinManifoldParams {
    pub g_parallel: f64,
    pub g_perp: f64,
    pub a_parallel_ghz: f64,
    pub a_perp_ghz: f64,
    pub manifold: ManifoldTag,
}

impl SpinManifoldParams {
    pub fn new(
        g_parallel: f64,
        g_perp: f64,
        a_parallel_ghz: f64,
        a_perp_ghz: f64,
        manifold: ManifoldTag,
    ) -> Result<Self> {
        if g_parallel < 0.0 || g_perp < 0.0 {
            return Err(Error::InvalidInput(format!(
                "g-factors must be nonnegative, got g_parallel = {g_parallel}, g_perp = {g_perp}"
            )));
        }
        Ok(SpinManifoldParams {
            g_parallel,
            g_perp,
            a_parallel_ghz,
            a_perp_ghz,
            manifold,
        })
    }

    /// Ground-manifold defaults reconstructed from measured observables:
    /// g∥ from the 42 GHz/T zero-field spin dipole, |A⊥| from the 0.674 GHz
    /// zero-field spin gap, |A∥| from the 2.750 GHz optical line offset
    /// between the doublet and the upper mixed state. g⊥ only affects B ⊥ c
    /// and is an external literature value, not re-derivable from this
    /// device's data.
    pub fn ground_default() -> Self {
        SpinManifoldParams {
            g_parallel: fit_g_parallel(42.0),
            g_perp: 0.85,
            a_parallel_ghz: -4.826,
            a_perp_ghz: -0.674,
            manifold: ManifoldTag::Ground,
        }
    }

    /// Excited-manifold defaults: g∥ from the 17.6 GHz/T spin dipole, A⊥ from
    /// the 3.369 GHz zero-field spin gap. A∥ and g⊥ are external literature
    /// values (they are not pinned by the observables modeled here).
    pub fn excited_default() -> Self {
        SpinManifoldParams {
            g_parallel: fit_g_parallel(17.6),
            g_perp: 1.70,
            a_parallel_ghz: 4.86,
            a_perp_ghz: 3.369,
            manifold: ManifoldTag::Excited,
        }
    }
}

/// Static magnetic field: signed magnitude plus a unit orientation vector in
/// the crystal frame (c = z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldVector {
    pub b_mt: f64,
    pub orientation: [f64; 3],
}

impl FieldVector {
    /// Field along the crystal c axis.
    pub fn along_c(b_mt: f64) -> Self {
        FieldVector {
            b_mt,
            orientation: [0.0, 0.0, 1.0],
        }
    }

    pub fn new(b_mt: f64, orientation: [f64; 3]) -> Result<Self> {
        let norm = (orientation[0].powi(2) + orientation[1].powi(2) + orientation[2].powi(2)).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "field orientation must be a unit vector, |n| = {norm}"
            )));
        }
        Ok(FieldVector { b_mt, orientation })
    }

    /// Cartesian field components in tesla.
    pub fn tesla(&self) -> [f64; 3] {
        let b_t = self.b_mt * 1e-3;
        [
            b_t * self.orientation[0],
            b_t * self.orientation[1],
            b_t * self.orientation[2],
        ]
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn ci(im: f64) -> C64 {
    C64::new(0.0, im)
}

/// S_z ⊗ 1 in the product basis.
pub fn s_z() -> CMat4 {
    CMat4::from_diagonal(&CVec4::new(c(0.5), c(0.5), c(-0.5), c(-0.5)))
}

/// S_x ⊗ 1 in the product basis.
pub fn s_x() -> CMat4 {
    let mut m = CMat4::zeros();
    m[(0, 2)] = c(0.5);
    m[(2, 0)] = c(0.5);
    m[(1, 3)] = c(0.5);
    m[(3, 1)] = c(0.5);
    m
}

/// S_y ⊗ 1 in the product basis.
pub fn s_y() -> CMat4 {
    let mut m = CMat4::zeros();
    m[(0, 2)] = ci(-0.5);
    m[(2, 0)] = ci(0.5);
    m[(1, 3)] = ci(-0.5);
    m[(3, 1)] = ci(0.5);
    m
}

/// 1 ⊗ I_z in the product basis.
pub fn i_z() -> CMat4 {
    CMat4::from_diagonal(&CVec4::new(c(0.5), c(-0.5), c(0.5), c(-0.5)))
}

/// 1 ⊗ I_x in the product basis.
pub fn i_x() -> CMat4 {
    let mut m = CMat4::zeros();
    m[(0, 1)] = c(0.5);
    m[(1, 0)] = c(0.5);
    m[(2, 3)] = c(0.5);
    m[(3, 2)] = c(0.5);
    m
}

/// 1 ⊗ I_y in the product basis.
pub fn i_y() -> CMat4 {
    let mut m = CMat4::zeros();
    m[(0, 1)] = ci(-0.5);
    m[(1, 0)] = ci(0.5);
    m[(2, 3)] = ci(-0.5);
    m[(3, 2)] = ci(0.5);
    m
}

/// Build the 4×4 manifold Hamiltonian in GHz at the given static field.
///
/// Both the Zeeman and hyperfine terms are traceless, so the result is
/// traceless and Hermitian by construction.
pub fn build_hamiltonian(params: &SpinManifoldParams, field: &FieldVector) -> CMat4 {
    let [bx, by, bz] = field.tesla();
    let zeeman = (s_z() * c(params.g_parallel * bz)
        + (s_x() * c(bx) + s_y() * c(by)) * c(params.g_perp))
        * c(BOHR_MAGNETON_GHZ_PER_T);
    let hyperfine = s_z() * i_z() * c(params.a_parallel_ghz)
        + (s_x() * i_x() + s_y() * i_y()) * c(params.a_perp_ghz);
    zeeman + hyperfine
}

/// Eigenenergies and eigenvectors of one manifold at one field point.
///
/// Levels are labeled |1⟩..|4⟩ by ascending energy. Eigenvectors are unit
/// norm in the product basis; within a degenerate cluster the basis is
/// aligned to the product basis and ordered by descending overlap with |↑⇑⟩,
/// and every vector's global phase makes its largest-magnitude component
/// real positive. This makes the output deterministic.
#[derive(Debug, Clone)]
pub struct LevelSolution {
    pub field: FieldVector,
    pub manifold: ManifoldTag,
    /// Energies in GHz, ascending.
    pub energies: [f64; 4],
    /// Column i is the eigenvector of level |i+1⟩.
    pub vectors: CMat4,
}

impl LevelSolution {
    /// Energy gap E_j − E_i in GHz between 1-based levels |i⟩ and |j⟩.
    pub fn gap(&self, i: usize, j: usize) -> f64 {
        assert!((1..=4).contains(&i) && (1..=4).contains(&j), "levels are 1-based");
        self.energies[j - 1] - self.energies[i - 1]
    }

    /// Eigenvector of the 1-based level |i⟩.
    pub fn vector(&self, i: usize) -> CVec4 {
        assert!((1..=4).contains(&i), "levels are 1-based");
        self.vectors.column(i - 1).into_owned()
    }
}

/// Degeneracy threshold in GHz used when grouping eigenvalues into clusters.
pub const DEGENERACY_TOL_GHZ: f64 = 1e-9;

/// Diagonalize a Hermitian 4×4 operator (GHz units) at the given field.
///
/// Fails with `NotHermitian` if the symmetry check at 1e-10 does not hold.
pub fn eigensolve(
    h: &CMat4,
    field: FieldVector,
    manifold: ManifoldTag,
) -> Result<LevelSolution> {
    let mut max_asym = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let asym = (h[(i, j)] - h[(j, i)].conj()).norm();
            max_asym = max_asym.max(asym);
        }
    }
    if max_asym > 1e-10 {
        return Err(Error::NotHermitian {
            max_asymmetry: max_asym,
        });
    }
    // Work on the exactly Hermitian part to keep eigenvalues real.
    let hs = (h + h.adjoint()) * c(0.5);
    let eig = hs.symmetric_eigen();

    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let mut energies = [0.0f64; 4];
    let mut vectors: Vec<CVec4> = Vec::with_capacity(4);
    for (slot, &k) in order.iter().enumerate() {
        energies[slot] = eig.eigenvalues[k];
        vectors.push(eig.eigenvectors.column(k).into_owned());
    }

    // Canonicalize degenerate clusters and fix phases.
    let mut start = 0;
    while start < 4 {
        let mut end = start + 1;
        while end < 4 && (energies[end] - energies[end - 1]).abs() <= DEGENERACY_TOL_GHZ {
            end += 1;
        }
        if end - start > 1 {
            let aligned = align_cluster_to_product_basis(&vectors[start..end]);
            for (offset, v) in aligned.into_iter().enumerate() {
                // Rayleigh quotient re-pairs each aligned vector with its
                // own energy inside the cluster.
                let e = (v.adjoint() * hs * v)[(0, 0)].re;
                energies[start + offset] = e;
                vectors[start + offset] = v;
            }
        }
        start = end;
    }
    for v in vectors.iter_mut() {
        fix_phase(v);
    }

    let mut mat = CMat4::zeros();
    for (i, v) in vectors.iter().enumerate() {
        mat.set_column(i, v);
    }
    Ok(LevelSolution {
        field,
        manifold,
        energies,
        vectors: mat,
    })
}

/// Build and diagonalize in one step.
pub fn solve_manifold(params: &SpinManifoldParams, field: &FieldVector) -> LevelSolution {
    let h = build_hamiltonian(params, field);
    eigensolve(&h, *field, params.manifold).expect("constructed Hamiltonian is Hermitian")
}

/// Replace the basis of a degenerate cluster by the orthonormal basis closest
/// to the product basis, ordered by descending overlap with |↑⇑⟩ (then |↑⇓⟩,
/// then |↓⇑⟩ as tie-breakers).
fn align_cluster_to_product_basis(cluster: &[CVec4]) -> Vec<CVec4> {
    let dim = cluster.len();
    // Projection of each product-basis vector onto the cluster subspace.
    let mut candidates: Vec<(usize, f64, CVec4)> = (0..4)
        .map(|m| {
            let mut p = CVec4::zeros();
            for v in cluster {
                let coeff = v[m].conj();
                p += v * coeff;
            }
            (m, p.norm(), p)
        })
        .collect();
    candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

    // Gram-Schmidt over the best-projecting candidates.
    let mut basis: Vec<CVec4> = Vec::with_capacity(dim);
    for (_, _, p) in candidates {
        if basis.len() == dim {
            break;
        }
        let mut q = p;
        for b in &basis {
            let overlap = (b.adjoint() * q)[(0, 0)];
            q -= b * overlap;
        }
        let n = q.norm();
        if n > 1e-6 {
            basis.push(q / c(n));
        }
    }
    // Fall back to the original vectors if the subspace is pathological.
    if basis.len() != dim {
        return cluster.to_vec();
    }
    basis.sort_by(|a, b| {
        for m in 0..3 {
            let oa = a[m].norm();
            let ob = b[m].norm();
            if (oa - ob).abs() > 1e-9 {
                return ob.partial_cmp(&oa).unwrap();
            }
        }
        std::cmp::Ordering::Equal
    });
    basis
}

/// Make the largest-magnitude component real positive.
fn fix_phase(v: &mut CVec4) {
    let mut best = 0;
    for m in 1..4 {
        if v[m].norm() > v[best].norm() + 1e-12 {
            best = m;
        }
    }
    let a = v[best];
    if a.norm() > 0.0 {
        let phase = a.conj() / c(a.norm());
        *v *= phase;
    }
}

/// Fit g∥ from the zero-field mixed-pair spin dipole (GHz/T).
///
/// The mixed-pair S_z matrix element is ½, so the dipole equals g∥ μ_B / 2.
pub fn fit_g_parallel(spin_dipole_ghz_per_t: f64) -> f64 {
    2.0 * spin_dipole_ghz_per_t / BOHR_MAGNETON_GHZ_PER_T
}

/// One zero-field level-gap observation, levels 1-based within the manifold.
#[derive(Debug, Clone, Copy)]
pub struct ZeroFieldGap {
    pub manifold: ManifoldTag,
    pub pair: (usize, usize),
    pub ghz: f64,
}

/// Hyperfine parameters that `fit_hyperfine` can be asked to determine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperfineParam {
    APerpGround,
    APerpExcited,
    AParGround,
    AParExcited,
}

impl HyperfineParam {
    fn name(&self) -> &'static str {
        match self {
            HyperfineParam::APerpGround => "A_perp(ground)",
            HyperfineParam::APerpExcited => "A_perp(excited)",
            HyperfineParam::AParGround => "A_par(ground)",
            HyperfineParam::AParExcited => "A_par(excited)",
        }
    }
}

/// Anchor the hyperfine tensor components to measured zero-field gaps.
///
/// The mixed-pair gap fixes |A⊥| exactly (|1⟩↔|2⟩ for the excited manifold,
/// |3⟩↔|4⟩ for the ground manifold). Doublet-to-mixed gaps fix |A∥| once A⊥
/// is known. Parameters without a constraining gap keep the values in `base`;
/// requesting them is an error. Signs are inherited from `base` so the sign
/// conventions live in one place.
pub fn fit_hyperfine(
    gaps: &[ZeroFieldGap],
    request: &[HyperfineParam],
    base: (SpinManifoldParams, SpinManifoldParams),
) -> Result<(SpinManifoldParams, SpinManifoldParams)> {
    let (mut ground, mut excited) = base;
    let mut fitted: Vec<HyperfineParam> = Vec::new();

    let signed = |magnitude: f64, reference: f64| -> f64 {
        if reference < 0.0 {
            -magnitude
        } else {
            magnitude
        }
    };

    // Pass 1: mixed-pair gaps pin |A_perp|.
    for gap in gaps {
        if gap.ghz < 0.0 {
            return Err(Error::InvalidInput(format!(
                "gap magnitudes must be nonnegative, got {} GHz",
                gap.ghz
            )));
        }
        match (gap.manifold, normalize_pair(gap.pair)?) {
            (ManifoldTag::Excited, (1, 2)) => {
                excited.a_perp_ghz = signed(gap.ghz, excited.a_perp_ghz);
                fitted.push(HyperfineParam::APerpExcited);
            }
            (ManifoldTag::Ground, (3, 4)) => {
                ground.a_perp_ghz = signed(gap.ghz, ground.a_perp_ghz);
                fitted.push(HyperfineParam::APerpGround);
            }
            _ => {}
        }
    }

    // Pass 2: doublet-to-mixed gaps pin |A_par| given |A_perp|.
    for gap in gaps {
        match (gap.manifold, normalize_pair(gap.pair)?) {
            // Ground doublet is |1⟩,|2⟩; mixed pair is |3⟩ (lower), |4⟩ (upper).
            (ManifoldTag::Ground, (1, 3)) | (ManifoldTag::Ground, (2, 3)) => {
                let mag = 2.0 * gap.ghz + ground.a_perp_ghz.abs();
                ground.a_parallel_ghz = signed(mag, ground.a_parallel_ghz);
                fitted.push(HyperfineParam::AParGround);
            }
            (ManifoldTag::Ground, (1, 4)) | (ManifoldTag::Ground, (2, 4)) => {
                let mag = 2.0 * gap.ghz - ground.a_perp_ghz.abs();
                ground.a_parallel_ghz = signed(mag, ground.a_parallel_ghz);
                fitted.push(HyperfineParam::AParGround);
            }
            // Excited mixed pair is |1⟩,|2⟩; doublet is |3⟩,|4⟩.
            (ManifoldTag::Excited, (2, 3)) | (ManifoldTag::Excited, (2, 4)) => {
                let mag = 2.0 * gap.ghz + excited.a_perp_ghz.abs();
                excited.a_parallel_ghz = signed(mag, excited.a_parallel_ghz);
                fitted.push(HyperfineParam::AParExcited);
            }
            (ManifoldTag::Excited, (1, 3)) | (ManifoldTag::Excited, (1, 4)) => {
                let mag = 2.0 * gap.ghz - excited.a_perp_ghz.abs();
                excited.a_parallel_ghz = signed(mag, excited.a_parallel_ghz);
                fitted.push(HyperfineParam::AParExcited);
            }
            _ => {}
        }
    }

    for wanted in request {
        if !fitted.contains(wanted) {
            return Err(Error::Underdetermined(format!(
                "no zero-field gap constrains {}",
                wanted.name()
            )));
        }
    }
    Ok((ground, excited))
}

fn normalize_pair(pair: (usize, usize)) -> Result<(usize, usize)> {
    let (i, j) = pair;
    if i == j || !(1..=4).contains(&i) || !(1..=4).contains(&j) {
        return Err(Error::InvalidInput(format!(
            "level pair must be two distinct 1-based levels, got ({i}, {j})"
        )));
    }
    Ok((i.min(j), i.max(j)))
}

/// Level energies of both manifolds over a monotone field grid.
#[derive(Debug, Clone)]
pub struct LevelScan {
    pub fields_mt: Vec<f64>,
    pub ground: Vec<LevelSolution>,
    pub excited: Vec<LevelSolution>,
}

/// Diagonalize both manifolds over a field range with the given step (mT).
pub fn level_diagram_scan(
    ground: &SpinManifoldParams,
    excited: &SpinManifoldParams,
    b_min_mt: f64,
    b_max_mt: f64,
    step_mt: f64,
    orientation: [f64; 3],
) -> Result<LevelScan> {
    if step_mt <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "field step must be positive, got {step_mt} mT"
        )));
    }
    if b_max_mt < b_min_mt {
        return Err(Error::InvalidInput(
            "field range must satisfy b_max >= b_min".into(),
        ));
    }
    let n = ((b_max_mt - b_min_mt) / step_mt).round() as usize + 1;
    let fields_mt: Vec<f64> = (0..n).map(|i| b_min_mt + i as f64 * step_mt).collect();
    let solve_all = |params: &SpinManifoldParams| -> Result<Vec<LevelSolution>> {
        fields_mt
            .par_iter()
            .map(|&b| {
                let field = FieldVector::new(b, orientation)?;
                Ok(solve_manifold(params, &field))
            })
            .collect()
    };
    Ok(LevelScan {
        ground: solve_all(ground)?,
        excited: solve_all(excited)?,
        fields_mt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: real roots of the characteristic polynomial of a
    /// Hermitian 4×4 matrix. Coefficients come from Newton's identities on
    /// power sums tr(H^k); roots are bracketed between the critical points of
    /// the quartic (found from the cubic derivative by Cardano's method) and
    /// refined by bisection. No eigensolver is involved.
    pub fn charpoly_roots(h: &CMat4) -> [f64; 4] {
        let h2 = h * h;
        let h3 = h2 * h;
        let h4 = h3 * h;
        let p1 = h.trace().re;
        let p2 = h2.trace().re;
        let p3 = h3.trace().re;
        let p4 = h4.trace().re;
        // Elementary symmetric polynomials e1..e4 from power sums.
        let e1 = p1;
        let e2 = (e1 * p1 - p2) / 2.0;
        let e3 = (e2 * p1 - e1 * p2 + p3) / 3.0;
        let e4 = (e3 * p1 - e2 * p2 + e1 * p3 - p4) / 4.0;
        // p(x) = x^4 - e1 x^3 + e2 x^2 - e3 x + e4
        let p = |x: f64| (((x - e1) * x + e2) * x - e3) * x + e4;

        // Critical points: roots of p'(x) = 4x^3 - 3 e1 x^2 + 2 e2 x - e3.
        let crit = cubic_real_roots(4.0, -3.0 * e1, 2.0 * e2, -e3);

        let bound = 1.0
            + (0..4)
                .map(|i| (0..4).map(|j| h[(i, j)].norm()).sum::<f64>())
                .fold(0.0f64, f64::max);
        let mut edges = vec![-bound];
        edges.extend(&crit);
        edges.push(bound);
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let scale = bound.max(1.0);
        let mut roots: Vec<f64> = Vec::new();
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (p(a), p(b));
            if fa == 0.0 {
                roots.push(a);
            }
            if fa * fb < 0.0 {
                roots.push(bisect(&p, a, b));
            }
        }
        // Double roots sit at critical points where p ≈ 0 without a sign change.
        for &x in &crit {
            if p(x).abs() < 1e-7 * scale.powi(4)
                && !roots.iter().any(|&r| (r - x).abs() < 1e-6 * scale)
            {
                roots.push(x);
                roots.push(x);
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        while roots.len() < 4 {
            // Numerical multiplicity > 2 collapse; duplicate nearest pair.
            roots.push(*roots.last().unwrap());
            roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        [roots[0], roots[1], roots[2], roots[3]]
    }

    fn bisect(p: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let mut fa = p(a);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            let fm = p(m);
            if fm == 0.0 {
                return m;
            }
            if fa * fm < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        0.5 * (a + b)
    }

    /// Real roots of a x^3 + b x^2 + c x + d (a ≠ 0), ascending.
    fn cubic_real_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
        let b = b / a;
        let c = c / a;
        let d = d / a;
        let q = (3.0 * c - b * b) / 9.0;
        let r = (9.0 * b * c - 27.0 * d - 2.0 * b * b * b) / 54.0;
        let disc = q * q * q + r * r;
        let shift = -b / 3.0;
        let mut roots = if disc > 0.0 {
            let s = (r + disc.sqrt()).cbrt();
            let t = (r - disc.sqrt()).cbrt();
            vec![shift + s + t]
        } else {
            let theta = (r / (-q).powf(1.5)).clamp(-1.0, 1.0).acos();
            let m = 2.0 * (-q).sqrt();
            vec![
                shift + m * (theta / 3.0).cos(),
                shift + m * ((theta + 2.0 * std::f64::consts::PI) / 3.0).cos(),
                shift + m * ((theta + 4.0 * std::f64::consts::PI) / 3.0).cos(),
            ]
        };
        roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        roots
    }

    fn random_hermitian(rng: &mut impl Rng, scale: f64) -> CMat4 {
        let mut m = CMat4::zeros();
        for i in 0..4 {
            m[(i, i)] = c(rng.random_range(-scale..scale));
            for j in (i + 1)..4 {
                let z = C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn zero_interactions_give_zero_operator() {
        let params = SpinManifoldParams::new(0.0, 0.0, 0.0, 0.0, ManifoldTag::Ground).unwrap();
        let h = build_hamiltonian(&params, &FieldVector::along_c(0.0));
        assert_eq!(h.norm(), 0.0);
    }

    #[test]
    fn hamiltonian_is_hermitian_and_traceless() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let params = SpinManifoldParams::new(
                rng.random_range(0.0..8.0),
                rng.random_range(0.0..3.0),
                rng.random_range(-6.0..6.0),
                rng.random_range(-4.0..4.0),
                ManifoldTag::Ground,
            )
            .unwrap();
            let mut n: [f64; 3] = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt().max(1e-3);
            n = [n[0] / norm, n[1] / norm, n[2] / norm];
            let field = FieldVector {
                b_mt: rng.random_range(-100.0..100.0),
                orientation: n,
            };
            let h = build_hamiltonian(&params, &field);
            assert!(h.trace().norm() < 1e-12);
            assert!((h - h.adjoint()).norm() < 1e-12);
        }
    }

    #[test]
    fn excited_zero_field_matches_closed_form() {
        let params = SpinManifoldParams::excited_default();
        let h = build_hamiltonian(&params, &FieldVector::along_c(0.0));
        let sol = eigensolve(&h, FieldVector::along_c(0.0), ManifoldTag::Excited).unwrap();
        let a_par = params.a_parallel_ghz;
        let a_perp = params.a_perp_ghz.abs();
        let mut expected = [
            -a_par / 4.0 - a_perp / 2.0,
            -a_par / 4.0 + a_perp / 2.0,
            a_par / 4.0,
            a_par / 4.0,
        ];
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in sol.energies.iter().zip(expected.iter()) {
            assert_relative_eq!(got, want, epsilon = 1e-12);
        }
        // Mixed-pair gap equals |A_perp| exactly.
        assert_relative_eq!(sol.gap(1, 2), a_perp, epsilon = 1e-12);
    }

    #[test]
    fn ground_zero_field_doublet_is_degenerate_and_lowest() {
        let params = SpinManifoldParams::ground_default();
        let sol = solve_manifold(&params, &FieldVector::along_c(0.0));
        assert!(sol.gap(1, 2).abs() < 1e-9);
        assert_relative_eq!(sol.gap(3, 4), params.a_perp_ghz.abs(), epsilon = 1e-12);
        // Doublet states are the pure product states, |1⟩ = |↑⇑⟩ by the
        // overlap tie-break.
        assert_relative_eq!(sol.vector(1)[0].re, 1.0, epsilon = 1e-9);
        assert_relative_eq!(sol.vector(2)[3].re, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn lowest_excited_level_is_the_singlet_combination() {
        let sol = solve_manifold(
            &SpinManifoldParams::excited_default(),
            &FieldVector::along_c(0.0),
        );
        let v = sol.vector(1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // (|↑⇓⟩ − |↓⇑⟩)/√2 up to the fixed global phase.
        assert!(v[0].norm() < 1e-9 && v[3].norm() < 1e-9);
        assert_relative_eq!(v[1].re, s, epsilon = 1e-9);
        assert_relative_eq!(v[2].re, -s, epsilon = 1e-9);
    }

    #[test]
    fn ground_doublet_splits_linearly_at_84_ghz_per_tesla() {
        // First-order perturbation on the zero-field doublet: the |↑⇑⟩- and
        // |↓⇓⟩-like branches separate at g∥ μ_B per tesla.
        let params =
            SpinManifoldParams::new(6.0, 0.85, -4.826, -0.674, ManifoldTag::Ground).unwrap();
        let sol = solve_manifold(&params, &FieldVector::along_c(100.0));
        // At 100 mT the doublet branches are levels |1⟩ and |3⟩ (the upper
        // branch crosses into the mixed pair); identify them by composition.
        let mut up = None;
        let mut down = None;
        for i in 1..=4 {
            let v = sol.vector(i);
            if v[0].norm() > 0.99 {
                up = Some(sol.energies[i - 1]);
            }
            if v[3].norm() > 0.99 {
                down = Some(sol.energies[i - 1]);
            }
        }
        let split = (up.unwrap() - down.unwrap()).abs();
        let expected = 6.0 * BOHR_MAGNETON_GHZ_PER_T * 0.1;
        assert_relative_eq!(split, expected, max_relative = 2e-3);
        assert_relative_eq!(expected, 8.398, max_relative = 1e-3);
    }

    #[test]
    fn eigensolve_identity_scaled_input() {
        let h = CMat4::identity() * c(2.5);
        let sol = eigensolve(&h, FieldVector::along_c(0.0), ManifoldTag::Ground).unwrap();
        for e in sol.energies {
            assert_relative_eq!(e, 2.5, epsilon = 1e-12);
        }
        for i in 1..=4 {
            let v = sol.vector(i);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        // Canonical basis, aligned and in product-basis order.
        for i in 0..4 {
            assert_relative_eq!(sol.vectors[(i, i)].re, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn eigensolve_rejects_non_hermitian() {
        let mut h = CMat4::zeros();
        h[(0, 1)] = c(1.0);
        let err = eigensolve(&h, FieldVector::along_c(0.0), ManifoldTag::Ground).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { .. }));
    }

    #[test]
    fn eigensolve_matches_charpoly_oracle_and_residual_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let h = random_hermitian(&mut rng, 5.0);
            let sol = eigensolve(&h, FieldVector::along_c(0.0), ManifoldTag::Ground).unwrap();
            let norm = h.norm();
            let roots = charpoly_roots(&h);
            for k in 0..4 {
                assert!(
                    (sol.energies[k] - roots[k]).abs() < 1e-9 * norm.max(1.0),
                    "eigenvalue {} vs oracle {}",
                    sol.energies[k],
                    roots[k]
                );
                let v = sol.vector(k + 1);
                let residual = (h * v - v * c(sol.energies[k])).norm();
                assert!(residual < 1e-10 * norm, "residual {residual:e}");
            }
            // Orthonormality to 1e-12.
            let gram = sol.vectors.adjoint() * sol.vectors;
            assert!((gram - CMat4::identity()).norm() < 1e-12);
            assert!(sol.energies.windows(2).all(|w| w[0] <= w[1] + 1e-9));
        }
    }

    #[test]
    fn eigensolve_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let h = random_hermitian(&mut rng, 4.0);
            let a = eigensolve(&h, FieldVector::along_c(0.0), ManifoldTag::Ground).unwrap();
            let b = eigensolve(&h, FieldVector::along_c(0.0), ManifoldTag::Ground).unwrap();
            assert_eq!(a.energies, b.energies);
            assert_eq!(a.vectors, b.vectors);
        }
    }

    #[test]
    fn fit_g_parallel_reproduces_quoted_dipoles() {
        // Oracle: the explicit ⟨1|S_z|2⟩ matrix element of the fitted model.
        for (dipole, manifold, params_fn) in [
            (
                17.6,
                ManifoldTag::Excited,
                SpinManifoldParams::excited_default as fn() -> SpinManifoldParams,
            ),
            (42.0, ManifoldTag::Ground, SpinManifoldParams::ground_default),
        ] {
            let g = fit_g_parallel(dipole);
            let mut params = params_fn();
            params.g_parallel = g;
            let sol = solve_manifold(&params, &FieldVector::along_c(0.0));
            let (i, j) = match manifold {
                ManifoldTag::Excited => (1, 2),
                ManifoldTag::Ground => (3, 4),
            };
            let elem = (sol.vector(i).adjoint() * s_z() * sol.vector(j))[(0, 0)].norm();
            assert_relative_eq!(elem, 0.5, epsilon = 1e-10);
            assert_relative_eq!(
                g * BOHR_MAGNETON_GHZ_PER_T * elem,
                dipole,
                max_relative = 1e-12
            );
        }
        assert_relative_eq!(fit_g_parallel(17.6), 2.515, max_relative = 1e-3);
        assert_relative_eq!(fit_g_parallel(42.0), 6.0016, max_relative = 1e-3);
        assert_eq!(fit_g_parallel(0.0), 0.0);
    }

    #[test]
    fn fit_hyperfine_pins_mixed_pair_gaps_exactly() {
        let base = (
            SpinManifoldParams::ground_default(),
            SpinManifoldParams::excited_default(),
        );
        let gaps = [
            ZeroFieldGap {
                manifold: ManifoldTag::Excited,
                pair: (1, 2),
                ghz: 3.369,
            },
            ZeroFieldGap {
                manifold: ManifoldTag::Ground,
                pair: (3, 4),
                ghz: 0.674,
            },
        ];
        let (g, e) = fit_hyperfine(
            &gaps,
            &[HyperfineParam::APerpGround, HyperfineParam::APerpExcited],
            base,
        )
        .unwrap();
        assert_eq!(e.a_perp_ghz.abs(), 3.369);
        assert_eq!(g.a_perp_ghz.abs(), 0.674);
        // Round trip through the eigensolver.
        let sol_e = solve_manifold(&e, &FieldVector::along_c(0.0));
        let sol_g = solve_manifold(&g, &FieldVector::along_c(0.0));
        assert_relative_eq!(sol_e.gap(1, 2), 3.369, epsilon = 1e-12);
        assert_relative_eq!(sol_g.gap(3, 4), 0.674, epsilon = 1e-12);
    }

    #[test]
    fn fit_hyperfine_all_zero_gaps() {
        let base = (
            SpinManifoldParams::ground_default(),
            SpinManifoldParams::excited_default(),
        );
        let gaps = [
            ZeroFieldGap {
                manifold: ManifoldTag::Excited,
                pair: (1, 2),
                ghz: 0.0,
            },
            ZeroFieldGap {
                manifold: ManifoldTag::Ground,
                pair: (3, 4),
                ghz: 0.0,
            },
        ];
        let (g, e) = fit_hyperfine(&gaps, &[], base).unwrap();
        assert_eq!(g.a_perp_ghz, 0.0);
        assert_eq!(e.a_perp_ghz, 0.0);
    }

    #[test]
    fn fit_hyperfine_underdetermined() {
        let base = (
            SpinManifoldParams::ground_default(),
            SpinManifoldParams::excited_default(),
        );
        let gaps = [ZeroFieldGap {
            manifold: ManifoldTag::Excited,
            pair: (1, 2),
            ghz: 3.369,
        }];
        let err = fit_hyperfine(&gaps, &[HyperfineParam::AParGround], base).unwrap_err();
        assert!(matches!(err, Error::Underdetermined(_)));
    }

    #[test]
    fn fit_hyperfine_doublet_to_mixed_gap_pins_a_parallel() {
        let base = (
            SpinManifoldParams::ground_default(),
            SpinManifoldParams::excited_default(),
        );
        // Ground |1⟩ → |4⟩ gap = (|A_par| + |A_perp|)/2 = 2.750 GHz.
        let gaps = [ZeroFieldGap {
            manifold: ManifoldTag::Ground,
            pair: (1, 4),
            ghz: 2.750,
        }];
        let (g, _) = fit_hyperfine(&gaps, &[HyperfineParam::AParGround], base).unwrap();
        assert_relative_eq!(g.a_parallel_ghz, -4.826, epsilon = 1e-12);
    }

    #[test]
    fn clock_transition_is_flat_at_zero_field() {
        let params = SpinManifoldParams::excited_default();
        let gap = |b: f64| solve_manifold(&params, &FieldVector::along_c(b)).gap(1, 2);
        let step = 1e-3;
        let slope = (gap(step) - gap(0.0)) / step;
        assert!(slope.abs() < 1e-4, "df/dB = {slope} GHz/mT");
        // Curvature is positive: the gap grows quadratically away from B = 0.
        assert!(gap(1.0) > gap(0.0));
        let curvature_small = gap(0.1) - gap(0.0);
        let curvature_large = gap(0.2) - gap(0.0);
        assert_relative_eq!(curvature_large / curvature_small, 4.0, max_relative = 1e-2);
    }

    #[test]
    fn spectrum_is_symmetric_under_field_sign_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let params = SpinManifoldParams::new(
                rng.random_range(0.0..8.0),
                rng.random_range(0.0..3.0),
                rng.random_range(-6.0..6.0),
                rng.random_range(-4.0..4.0),
                ManifoldTag::Excited,
            )
            .unwrap();
            let mut n: [f64; 3] = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt().max(1e-3);
            n = [n[0] / norm, n[1] / norm, n[2] / norm];
            let b = rng.random_range(0.0..50.0);
            let plus = solve_manifold(&params, &FieldVector { b_mt: b, orientation: n });
            let minus = solve_manifold(&params, &FieldVector { b_mt: -b, orientation: n });
            for k in 0..4 {
                assert_relative_eq!(plus.energies[k], minus.energies[k], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn level_scan_zero_range_and_grid_shape() {
        let g = SpinManifoldParams::ground_default();
        let e = SpinManifoldParams::excited_default();
        let scan = level_diagram_scan(&g, &e, 0.0, 0.0, 1.0, [0.0, 0.0, 1.0]).unwrap();
        assert_eq!(scan.fields_mt, vec![0.0]);
        assert_eq!(scan.ground.len(), 1);

        let scan = level_diagram_scan(&g, &e, 0.0, 10.0, 0.5, [0.0, 0.0, 1.0]).unwrap();
        assert_eq!(scan.fields_mt.len(), 21);
        assert!(scan.fields_mt.windows(2).all(|w| w[1] > w[0]));
        // Excited-pair frequency departs smoothly from the zero-field gap.
        let f0 = scan.excited[0].gap(1, 2);
        assert_relative_eq!(f0, 3.369, epsilon = 1e-12);
        let gaps: Vec<f64> = scan.excited.iter().map(|s| s.gap(1, 2)).collect();
        assert!(gaps.windows(2).all(|w| w[1] >= w[0]));
        assert!(level_diagram_scan(&g, &e, 0.0, 1.0, 0.0, [0.0, 0.0, 1.0]).is_err());
    }
}
