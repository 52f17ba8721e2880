//! Log-domain matrix evaluation and the Lie-theoretic quantities used
//! throughout: Cartan and Lyapunov projections, attractors, root/weight
//! functionals, Gromov products relative to a functional, and the functorial
//! constructions (exterior/symmetric powers, tensor, direct sum, dual,
//! complexification) for GL(d,ℝ).
//!
//! Long words in expanding representations produce matrices whose smallest
//! singular values fall below the f64 noise floor `eps·σ₁`. Evaluation
//! through words therefore merges three exact sources: the forward product
//! (top of the Cartan vector), the inverse-word product (bottom), and the
//! log-determinant, which is tracked additively and exactly through every
//! multiplication. Interior gaps beyond both horizons are obtained through
//! exterior-power lifts, never from the assembled product.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::words::{GroupModel, Letter, Word, WordError};

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix product is numerically singular ({0})")]
    SingularProduct(&'static str),
    #[error("singular gap σ_{index}/σ_{} = {ratio:.6e} is below the tolerance", index + 1)]
    DegenerateGap { index: usize, ratio: f64 },
    #[error("matrix is not proximal (ℓ₁/ℓ₂ = {ratio:.6e})")]
    NotProximal { ratio: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("generator image #{index} is not invertible enough (cond {cond:.3e})")]
    BadGenerator { index: usize, cond: f64 },
    #[error("functional index {0} is out of range for dimension {1}")]
    FunctionalRange(usize, usize),
    #[error(transparent)]
    Word(#[from] WordError),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Ratio tolerance below which an attractor coset is treated as ill-defined.
pub const DEFAULT_GAP_TOL: f64 = 1.0 + 1e-6;
/// Condition-number cap for single generator images.
const GENERATOR_COND_CAP: f64 = 1e15;

/// A d×d matrix with operator norm kept in [1/2, 2] by renormalization;
/// the represented matrix is e^{log_scale}·mat. The log of |det| of the
/// represented matrix is carried exactly through products.
#[derive(Clone, Debug)]
pub struct ScaledMatrix {
    mat: DMatrix<f64>,
    log_scale: f64,
    log_det: f64,
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values[0]
}

fn log_abs_det(m: &DMatrix<f64>) -> f64 {
    let lu = m.clone().lu();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        acc += lu.u()[(i, i)].abs().ln();
    }
    acc
}

impl ScaledMatrix {
    pub fn identity(dim: usize) -> ScaledMatrix {
        ScaledMatrix { mat: DMatrix::identity(dim, dim), log_scale: 0.0, log_det: 0.0 }
    }

    pub fn from_matrix(mat: DMatrix<f64>) -> Result<ScaledMatrix> {
        let log_det = log_abs_det(&mat);
        if !log_det.is_finite() {
            return Err(LinalgError::SingularProduct("zero determinant"));
        }
        Ok(ScaledMatrix { mat, log_scale: 0.0, log_det }.renormalized()?)
    }

    fn renormalized(mut self) -> Result<ScaledMatrix> {
        let n = spectral_norm(&self.mat);
        if !n.is_finite() || n == 0.0 {
            return Err(LinalgError::SingularProduct("non-finite norm"));
        }
        if !(0.5..=2.0).contains(&n) {
            self.mat /= n;
            self.log_scale += n.ln();
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// log |det| of the represented matrix (exact under products).
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// The represented matrix assembled as plain f64 entries. Overflows for
    /// large log scales; intended for moderate words and tests.
    pub fn assemble(&self) -> DMatrix<f64> {
        &self.mat * self.log_scale.exp()
    }

    pub fn mul(&self, rhs: &ScaledMatrix) -> Result<ScaledMatrix> {
        if self.dim() != rhs.dim() {
            return Err(LinalgError::DimensionMismatch(self.dim(), rhs.dim()));
        }
        ScaledMatrix {
            mat: &self.mat * &rhs.mat,
            log_scale: self.log_scale + rhs.log_scale,
            log_det: self.log_det + rhs.log_det,
        }
        .renormalized()
    }

    pub fn pow(&self, n: u32) -> Result<ScaledMatrix> {
        let mut acc = ScaledMatrix::identity(self.dim());
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            base = base.mul(&base)?;
            n >>= 1;
        }
        Ok(acc)
    }

    /// Inverse of the represented matrix. Only meaningful while the factor
    /// is numerically invertible; group elements should be inverted through
    /// their inverse words instead.
    pub fn inverse(&self) -> Result<ScaledMatrix> {
        let inv = self
            .mat
            .clone()
            .try_inverse()
            .ok_or(LinalgError::SingularProduct("factor not invertible"))?;
        ScaledMatrix { mat: inv, log_scale: -self.log_scale, log_det: -self.log_det }
            .renormalized()
    }

    pub fn transpose(&self) -> ScaledMatrix {
        ScaledMatrix {
            mat: self.mat.transpose(),
            log_scale: self.log_scale,
            log_det: self.log_det,
        }
    }

    fn singular_values(&self) -> Vec<f64> {
        let sv = self.mat.clone().svd(false, false).singular_values;
        sv.iter().map(|s| s.ln() + self.log_scale).collect()
    }
}

/// μ(g): descending log singular values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartanVector {
    entries: Vec<f64>,
}

/// λ(g): descending log eigenvalue moduli.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovVector {
    entries: Vec<f64>,
}

macro_rules! spectral_vector_impl {
    ($t:ty) => {
        impl $t {
            pub fn new(mut entries: Vec<f64>) -> Self {
                entries.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
                Self { entries }
            }

            pub fn dim(&self) -> usize {
                self.entries.len()
            }

            pub fn entries(&self) -> &[f64] {
                &self.entries
            }

            /// Euclidean norm of the vector.
            pub fn norm(&self) -> f64 {
                self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
            }

            pub fn eval(&self, phi: &LinearFunctional) -> f64 {
                phi.eval(&self.entries)
            }

            /// Entrywise sum (log |det| for Cartan vectors).
            pub fn sum(&self) -> f64 {
                self.entries.iter().sum()
            }
        }
    };
}

spectral_vector_impl!(CartanVector);
spectral_vector_impl!(LyapunovVector);

/// Linear functionals on the Cartan subspace, indices 1-based to match the
/// usual ε_i / simple-root / fundamental-weight notation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearFunctional {
    /// ε_i: the i-th entry.
    Epsilon(usize),
    /// ε_i − ε_{i+1}.
    Root(usize),
    /// ω_i = Σ_{k ≤ i} ε_k, evaluated on the trace-free part (the mean is
    /// subtracted first, so GL inputs are projected to the SL Cartan space).
    Weight(usize),
    /// Trace-free custom coefficients: the mean is subtracted first.
    Custom(Vec<f64>),
}

impl LinearFunctional {
    pub fn eval(&self, entries: &[f64]) -> f64 {
        let d = entries.len();
        match self {
            LinearFunctional::Epsilon(i) => entries[i - 1],
            LinearFunctional::Root(i) => entries[i - 1] - entries[*i],
            LinearFunctional::Weight(i) => {
                let mean = entries.iter().sum::<f64>() / d as f64;
                entries[..*i].iter().map(|x| x - mean).sum()
            }
            LinearFunctional::Custom(coeffs) => {
                let mean = entries.iter().sum::<f64>() / d as f64;
                coeffs.iter().zip(entries).map(|(c, x)| c * (x - mean)).sum()
            }
        }
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        let ok = match self {
            LinearFunctional::Epsilon(i) => *i >= 1 && *i <= d,
            LinearFunctional::Root(i) | LinearFunctional::Weight(i) => *i >= 1 && *i < d,
            LinearFunctional::Custom(c) => c.len() == d,
        };
        if ok {
            Ok(())
        } else {
            let i = match self {
                LinearFunctional::Epsilon(i)
                | LinearFunctional::Root(i)
                | LinearFunctional::Weight(i) => *i,
                LinearFunctional::Custom(c) => c.len(),
            };
            Err(LinalgError::FunctionalRange(i, d))
        }
    }
}

const SIGN_TOL: f64 = 1e-12;

fn canonicalize(mut v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    v /= n;
    for x in v.iter() {
        if x.abs() > SIGN_TOL {
            if *x < 0.0 {
                v = -v;
            }
            break;
        }
    }
    v
}

/// A point of ℙ(ℝ^d): unit vector with canonical sign (first coordinate
/// above 1e−12 in absolute value is positive).
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectivePoint {
    dir: DVector<f64>,
}

impl ProjectivePoint {
    pub fn new(v: DVector<f64>) -> ProjectivePoint {
        ProjectivePoint { dir: canonicalize(v) }
    }

    pub fn dir(&self) -> &DVector<f64> {
        &self.dir
    }

    pub fn dim(&self) -> usize {
        self.dir.len()
    }
}

/// A hyperplane of ℝ^d, stored by its unit normal with canonical sign.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    normal: DVector<f64>,
}

impl Hyperplane {
    pub fn new(normal: DVector<f64>) -> Hyperplane {
        Hyperplane { normal: canonicalize(normal) }
    }

    pub fn normal(&self) -> &DVector<f64> {
        &self.normal
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }
}

/// Angle metric d_ℙ([p],[q]) = |sin ∠(p,q)| = √(1 − ⟨p,q⟩²).
pub fn projective_distance(p: &ProjectivePoint, q: &ProjectivePoint) -> f64 {
    let c: f64 = p.dir.dot(&q.dir);
    (1.0 - c * c).max(0.0).sqrt()
}

/// dist(ℓ, V) = |⟨p, normal(V)⟩|: 0 iff the point lies on the hyperplane.
pub fn point_hyperplane_distance(p: &ProjectivePoint, h: &Hyperplane) -> f64 {
    p.dir.dot(&h.normal).abs()
}

/// Cartan projection of a single evaluated matrix. The lower entries are
/// only resolved down to the float noise floor eps·σ₁; the last entry is
/// snapped to the exact log-determinant. Prefer [`Representation::mu`] for
/// group elements.
pub fn cartan(m: &ScaledMatrix) -> CartanVector {
    let mut sv = m.singular_values();
    let d = sv.len();
    if d > 1 {
        let head: f64 = sv[..d - 1].iter().sum();
        sv[d - 1] = m.log_det - head;
    }
    CartanVector::new(sv)
}

/// Lyapunov projection of a single evaluated matrix: descending log moduli
/// of eigenvalues (exact for the matrix at hand).
pub fn lyapunov(m: &ScaledMatrix) -> LyapunovVector {
    let eig = m.mat.complex_eigenvalues();
    let entries: Vec<f64> = eig.iter().map(|z| z.norm().ln() + m.log_scale).collect();
    LyapunovVector::new(entries)
}

/// Merges a Cartan vector from the forward product and the product of the
/// inverse word: top half from the forward side, bottom half reflected from
/// the inverse side, middle entry (odd d) recovered from the determinant.
pub fn cartan_merged(fwd: &ScaledMatrix, inv: &ScaledMatrix) -> CartanVector {
    let d = fwd.dim();
    let f = fwd.singular_values();
    let b = inv.singular_values();
    let mut entries = vec![0.0; d];
    let half = d / 2;
    for i in 0..half {
        entries[i] = f[i];
        entries[d - 1 - i] = -b[i];
    }
    if d % 2 == 1 {
        let mid = half;
        let rest: f64 = entries.iter().enumerate().filter(|(i, _)| *i != mid).map(|(_, x)| x).sum();
        entries[mid] = fwd.log_det - rest;
    }
    CartanVector::new(entries)
}

/// Same merge for Lyapunov projections; the eigenvalue moduli of the inverse
/// are the reciprocals of the forward moduli.
pub fn lyapunov_merged(fwd: &ScaledMatrix, inv: &ScaledMatrix) -> LyapunovVector {
    let d = fwd.dim();
    let f = lyapunov(fwd);
    let b = lyapunov(inv);
    let mut entries = vec![0.0; d];
    let half = d / 2;
    for i in 0..half {
        entries[i] = f.entries()[i];
        entries[d - 1 - i] = -b.entries()[i];
    }
    if d % 2 == 1 {
        let mid = half;
        let rest: f64 = entries.iter().enumerate().filter(|(i, _)| *i != mid).map(|(_, x)| x).sum();
        entries[mid] = fwd.log_det - rest;
    }
    LyapunovVector::new(entries)
}

/// Ξ₁⁺(g): projective class of the top left-singular vector. Requires the
/// gap σ₁/σ₂ ≥ gap_tol.
pub fn attractor_plus(m: &ScaledMatrix, gap_tol: f64) -> Result<ProjectivePoint> {
    let svd = m.mat.clone().svd(true, false);
    let sv = &svd.singular_values;
    let d = sv.len();
    if d < 2 || sv[0] / sv[1] < gap_tol {
        return Err(LinalgError::DegenerateGap { index: 1, ratio: if d < 2 { 1.0 } else { sv[0] / sv[1] } });
    }
    let u = svd.u.expect("left singular vectors");
    Ok(ProjectivePoint::new(u.column(0).into_owned()))
}

/// Ξ₁⁻(g): the hyperplane orthogonal to the bottom left-singular direction.
/// Requires the gap σ_{d−1}/σ_d ≥ gap_tol. For long words prefer
/// [`attractor_minus_from_inverse`], which stays accurate when the bottom of
/// the forward product is below float resolution.
pub fn attractor_minus(m: &ScaledMatrix, gap_tol: f64) -> Result<Hyperplane> {
    let svd = m.mat.clone().svd(true, false);
    let sv = &svd.singular_values;
    let d = sv.len();
    if d < 2 || sv[d - 2] / sv[d - 1] < gap_tol {
        return Err(LinalgError::DegenerateGap {
            index: d - 1,
            ratio: if d < 2 { 1.0 } else { sv[d - 2] / sv[d - 1] },
        });
    }
    let u = svd.u.expect("left singular vectors");
    Ok(Hyperplane::new(u.column(d - 1).into_owned()))
}

/// Ξ₁⁻(g) computed through the inverse element: the normal equals the top
/// left-singular direction of (g⁻¹)ᵗ, i.e. the attractor of the dual.
pub fn attractor_minus_from_inverse(m_inv: &ScaledMatrix, gap_tol: f64) -> Result<Hyperplane> {
    let p = attractor_plus(&m_inv.transpose(), gap_tol)?;
    Ok(Hyperplane { normal: p.dir })
}

/// Attracting/repelling data of a proximal matrix.
#[derive(Clone, Debug)]
pub struct ProximalData {
    /// log ℓ₁ of the represented matrix.
    pub log_top_modulus: f64,
    /// Attracting fixed point x⁺ in ℙ(ℝ^d).
    pub point: ProjectivePoint,
    /// Repelling invariant hyperplane V⁻ (normal = top eigendirection of gᵗ).
    pub hyperplane: Hyperplane,
    /// Whether g⁻¹ is proximal as well.
    pub biproximal: bool,
}

/// Top eigendata of a proximal matrix: the attracting projective fixed
/// point, the invariant complementary hyperplane and the eigenvalue modulus.
pub fn proximal_data(m: &ScaledMatrix, gap_tol: f64) -> Result<ProximalData> {
    let d = m.dim();
    let eig = m.mat.complex_eigenvalues();
    let mut moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if d < 2 || moduli[0] / moduli[1] < gap_tol {
        return Err(LinalgError::NotProximal {
            ratio: if d < 2 { 1.0 } else { moduli[0] / moduli[1] },
        });
    }
    let top = eig.iter().max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap()).unwrap();
    // a strict modulus gap forces the top eigenvalue to be real
    let lambda = top.re;
    let point = eigendirection(&m.mat, lambda)?;
    let hyperplane = Hyperplane::new(eigendirection(&m.mat.transpose(), lambda)?.dir);
    let biproximal = moduli[d - 2] / moduli[d - 1] > gap_tol;
    Ok(ProximalData {
        log_top_modulus: moduli[0].ln() + m.log_scale,
        point,
        hyperplane,
        biproximal,
    })
}

fn eigendirection(m: &DMatrix<f64>, lambda: f64) -> Result<ProjectivePoint> {
    let d = m.nrows();
    let shifted = m - DMatrix::identity(d, d) * lambda;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors");
    Ok(ProjectivePoint::new(vt.row(d - 1).transpose()))
}

// ---------------------------------------------------------------------------
// Functorial constructions
// ---------------------------------------------------------------------------

fn subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    rec(0, d, k, &mut cur, &mut out);
    out
}

/// Λ^k: action on the lexicographically ordered k-subset basis (the k-th
/// compound matrix of minors). Singular values of the output are products of
/// k-subsets of the input singular values.
pub fn exterior_power(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let d = m.nrows();
    assert!(k >= 1 && k <= d, "exterior power index out of range");
    let basis = subsets(d, k);
    let n = basis.len();
    let mut out = DMatrix::zeros(n, n);
    for (bi, rows) in basis.iter().enumerate() {
        for (bj, cols) in basis.iter().enumerate() {
            let mut minor = DMatrix::zeros(k, k);
            for (ri, &r) in rows.iter().enumerate() {
                for (ci, &c) in cols.iter().enumerate() {
                    minor[(ri, ci)] = m[(r, c)];
                }
            }
            out[(bi, bj)] = minor.determinant();
        }
    }
    out
}

/// Degree-q monomial multi-indices over d variables, lexicographically
/// descending: (q,0,…), (q−1,1,0,…), …
pub fn monomials(d: usize, q: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == cur.len() - 1 {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for v in (0..=left).rev() {
            cur[pos] = v;
            rec(pos + 1, left - v, cur, out);
        }
    }
    if d == 0 {
        return out;
    }
    rec(0, q as u32, &mut cur, &mut out);
    out
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|x| x as f64).product()
}

fn multi_factorial(alpha: &[u32]) -> f64 {
    alpha.iter().map(|&a| factorial(a)).product()
}

/// sym^q: action on the degree-q monomial basis, orthonormalized so that
/// orthogonal matrices map to orthogonal matrices (hence singular values of
/// the output are the monomials of degree q in the input singular values;
/// for 2×2 diag(s, 1/s) the output singular values are s^{q−2j}).
///
/// The plain symmetrized-tensor basis differs from this one by the diagonal
/// scaling diag(√(q!/α!)); only the orthonormal form makes the Cartan
/// identities exact, so it is the fixed convention here.
pub fn symmetric_power(m: &DMatrix<f64>, q: usize) -> DMatrix<f64> {
    let d = m.nrows();
    assert!(q >= 1, "symmetric power degree must be ≥ 1");
    let basis = monomials(d, q);
    let index: HashMap<&[u32], usize> =
        basis.iter().enumerate().map(|(i, b)| (b.as_slice(), i)).collect();
    let n = basis.len();
    let mut out = DMatrix::zeros(n, n);
    for (bj, alpha) in basis.iter().enumerate() {
        // expand Π_j (Σ_i m[i,j] x_i)^{α_j} as a dense degree-q polynomial
        let mut poly: HashMap<Vec<u32>, f64> = HashMap::new();
        poly.insert(vec![0u32; d], 1.0);
        for (var, &mult) in alpha.iter().enumerate() {
            for _ in 0..mult {
                let mut next: HashMap<Vec<u32>, f64> = HashMap::new();
                for (mono, coeff) in &poly {
                    for i in 0..d {
                        let c = m[(i, var)];
                        if c == 0.0 {
                            continue;
                        }
                        let mut mono2 = mono.clone();
                        mono2[i] += 1;
                        *next.entry(mono2).or_insert(0.0) += coeff * c;
                    }
                }
                poly = next;
            }
        }
        let fa = multi_factorial(alpha);
        for (mono, coeff) in poly {
            let bi = index[mono.as_slice()];
            out[(bi, bj)] = coeff * (multi_factorial(&basis[bi]) / fa).sqrt();
        }
    }
    out
}

/// Kronecker product with row-major block convention.
pub fn tensor(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Block-diagonal sum.
pub fn direct_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

/// Inverse transpose.
pub fn dual(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().try_inverse().expect("dual of invertible matrix").transpose()
}

/// Realification of a complex matrix given as (Re, Im):
/// [[Re, −Im], [Im, Re]]. Singular values are doubled in multiplicity.
pub fn complexify(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<f64> {
    let n = re.nrows();
    assert_eq!(im.nrows(), n);
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(re);
    out.view_mut((0, n), (n, n)).copy_from(&(-im));
    out.view_mut((n, 0), (n, n)).copy_from(im);
    out.view_mut((n, n), (n, n)).copy_from(re);
    out
}

// ---------------------------------------------------------------------------
// Representations
// ---------------------------------------------------------------------------

/// A representation ρ: Γ → GL(d,ℝ): generator images plus the group model.
#[derive(Clone, Debug)]
pub struct Representation {
    dim: usize,
    images: Vec<DMatrix<f64>>,
    inv_images: Vec<DMatrix<f64>>,
    log_dets: Vec<f64>,
    model: Arc<GroupModel>,
    unimodularized: bool,
}

impl Representation {
    /// Builds a representation; every image must be invertible with
    /// condition number at most 1e15. With `unimodularize` the images are
    /// scaled to |det| = 1.
    pub fn new(
        images: Vec<DMatrix<f64>>,
        model: Arc<GroupModel>,
        unimodularize: bool,
    ) -> Result<Representation> {
        assert_eq!(images.len(), model.rank(), "one image per generator");
        let dim = images[0].nrows();
        let mut imgs = Vec::with_capacity(images.len());
        let mut invs = Vec::with_capacity(images.len());
        let mut log_dets = Vec::with_capacity(images.len());
        for (i, mut m) in images.into_iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(LinalgError::DimensionMismatch(m.nrows(), dim));
            }
            if unimodularize {
                let scale = (log_abs_det(&m) / dim as f64).exp();
                if !scale.is_finite() || scale == 0.0 {
                    return Err(LinalgError::BadGenerator { index: i, cond: f64::INFINITY });
                }
                m /= scale;
            }
            let sv = m.clone().svd(false, false).singular_values;
            let cond = sv[0] / sv[sv.len() - 1];
            if !cond.is_finite() || cond > GENERATOR_COND_CAP {
                return Err(LinalgError::BadGenerator { index: i, cond });
            }
            let inv = m.clone().try_inverse().expect("conditioned image invertible");
            log_dets.push(log_abs_det(&m));
            imgs.push(m);
            invs.push(inv);
        }
        Ok(Representation {
            dim,
            images: imgs,
            inv_images: invs,
            log_dets,
            model,
            unimodularized: unimodularize,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn model(&self) -> &Arc<GroupModel> {
        &self.model
    }

    pub fn unimodularized(&self) -> bool {
        self.unimodularized
    }

    pub fn images(&self) -> &[DMatrix<f64>] {
        &self.images
    }

    pub fn letter_image(&self, l: Letter) -> &DMatrix<f64> {
        if l.is_inverse() {
            &self.inv_images[l.index()]
        } else {
            &self.images[l.index()]
        }
    }

    fn letter_log_det(&self, l: Letter) -> f64 {
        if l.is_inverse() {
            -self.log_dets[l.index()]
        } else {
            self.log_dets[l.index()]
        }
    }

    /// Evaluates ρ(g) as a product of generator images, renormalized after
    /// each multiplication; exact in log scale and log determinant.
    pub fn apply(&self, g: &Word) -> Result<ScaledMatrix> {
        let mut acc = ScaledMatrix::identity(self.dim);
        for &l in g.letters() {
            let step = ScaledMatrix {
                mat: self.letter_image(l).clone(),
                log_scale: 0.0,
                log_det: self.letter_log_det(l),
            }
            .renormalized()?;
            acc = acc.mul(&step)?;
        }
        Ok(acc)
    }

    /// μ(ρ(g)) merged from the forward and inverse-word products.
    pub fn mu(&self, g: &Word) -> Result<CartanVector> {
        Ok(cartan_merged(&self.apply(g)?, &self.apply(&g.inverse())?))
    }

    /// λ(ρ(g)) merged from the forward and inverse-word products.
    pub fn lambda(&self, g: &Word) -> Result<LyapunovVector> {
        Ok(lyapunov_merged(&self.apply(g)?, &self.apply(&g.inverse())?))
    }

    /// Gromov product (ρ(g)·ρ(h))_φ =
    /// ¼⟨φ, μ(g) + μ(g⁻¹) + μ(h) + μ(h⁻¹) − μ(g⁻¹h) − μ(h⁻¹g)⟩.
    pub fn gromov_product(&self, g: &Word, h: &Word, phi: &LinearFunctional) -> Result<f64> {
        phi.check_dim(self.dim)?;
        let mu_g = self.mu(g)?;
        let mu_gi = self.mu(&g.inverse())?;
        let mu_h = self.mu(h)?;
        let mu_hi = self.mu(&h.inverse())?;
        let gih = g.inverse().mul(h);
        let mu_gih = self.mu(&gih)?;
        let mu_hig = self.mu(&gih.inverse())?;
        Ok(0.25
            * (mu_g.eval(phi) + mu_gi.eval(phi) + mu_h.eval(phi) + mu_hi.eval(phi)
                - mu_gih.eval(phi)
                - mu_hig.eval(phi)))
    }
}

/// JSON form of a representation, matching the documented schema:
/// {"dim", "generators": {"a": [[…]], …}, "unimodularize", "model"}.
#[derive(Serialize, Deserialize)]
struct RepresentationJson {
    dim: usize,
    generators: std::collections::BTreeMap<String, Vec<Vec<f64>>>,
    unimodularize: bool,
    model: ModelJson,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    genus: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    anchor: Option<std::collections::BTreeMap<String, Vec<Vec<f64>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bfs_radius: Option<usize>,
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return None;
    }
    let m = rows[0].len();
    Some(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn gen_name(i: usize) -> String {
    Letter::generator(i).to_char().to_string()
}

impl Representation {
    pub fn to_json(&self) -> serde_json::Value {
        let generators = self
            .images
            .iter()
            .enumerate()
            .map(|(i, m)| (gen_name(i), matrix_to_rows(m)))
            .collect();
        let model = match self.model.kind() {
            crate::words::GroupKind::Free { rank } => ModelJson {
                kind: "free".into(),
                rank: Some(rank),
                genus: None,
                anchor: self.model.anchor().map(anchor_to_rows),
                bfs_radius: None,
            },
            crate::words::GroupKind::Surface { genus } => ModelJson {
                kind: "surface".into(),
                rank: None,
                genus: Some(genus),
                anchor: self.model.anchor().map(anchor_to_rows),
                bfs_radius: self.model.bfs_radius(),
            },
        };
        serde_json::to_value(RepresentationJson {
            dim: self.dim,
            generators,
            unimodularize: self.unimodularized,
            model,
        })
        .expect("representation serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Representation> {
        let parsed: RepresentationJson = serde_json::from_value(v.clone())
            .map_err(|_| LinalgError::SingularProduct("malformed representation JSON"))?;
        let rank = parsed.generators.len();
        let mut images = Vec::with_capacity(rank);
        for i in 0..rank {
            let rows = parsed
                .generators
                .get(&gen_name(i))
                .ok_or(LinalgError::SingularProduct("missing generator image"))?;
            let m = matrix_from_rows(rows)
                .ok_or(LinalgError::SingularProduct("ragged generator image"))?;
            if m.nrows() != parsed.dim {
                return Err(LinalgError::DimensionMismatch(m.nrows(), parsed.dim));
            }
            images.push(m);
        }
        let anchor = match &parsed.model.anchor {
            Some(rows) => Some(anchor_from_rows(rows, rank)?),
            None => None,
        };
        let model = match parsed.model.kind.as_str() {
            "free" => {
                let r = parsed.model.rank.unwrap_or(rank);
                match anchor {
                    Some(a) => GroupModel::free_anchored(r, a)?,
                    None => GroupModel::free(r),
                }
            }
            "surface" => {
                let genus = parsed
                    .model
                    .genus
                    .ok_or(LinalgError::SingularProduct("surface model requires genus"))?;
                let a = anchor
                    .ok_or(LinalgError::SingularProduct("surface model requires an anchor"))?;
                let radius =
                    parsed.model.bfs_radius.unwrap_or(crate::words::DEFAULT_SURFACE_RADIUS);
                GroupModel::surface(genus, a, radius)?
            }
            _ => return Err(LinalgError::SingularProduct("unknown model kind")),
        };
        Representation::new(images, model, parsed.unimodularize)
    }
}

fn anchor_to_rows(a: &crate::words::Anchor) -> std::collections::BTreeMap<String, Vec<Vec<f64>>> {
    a.images()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            (gen_name(i), vec![vec![m[(0, 0)], m[(0, 1)]], vec![m[(1, 0)], m[(1, 1)]]])
        })
        .collect()
}

fn anchor_from_rows(
    rows: &std::collections::BTreeMap<String, Vec<Vec<f64>>>,
    rank: usize,
) -> Result<crate::words::Anchor> {
    let mut mats = Vec::with_capacity(rank);
    for i in 0..rank {
        let r = rows
            .get(&gen_name(i))
            .ok_or(LinalgError::SingularProduct("missing anchor image"))?;
        if r.len() != 2 || r[0].len() != 2 || r[1].len() != 2 {
            return Err(LinalgError::SingularProduct("anchor images must be 2×2"));
        }
        mats.push(nalgebra::Matrix2::new(r[0][0], r[0][1], r[1][0], r[1][1]));
    }
    Ok(crate::words::Anchor::new(mats)?)
}

// ---------------------------------------------------------------------------
// Cached ball evaluation
// ---------------------------------------------------------------------------

/// Matrices of a whole word-metric ball, with the index of each element's
/// inverse: the backbone of the diagnostics scans. μ and λ are evaluated on
/// demand with the forward/inverse merge.
pub struct BallEval {
    pub words: Vec<Word>,
    pub lengths: Vec<usize>,
    pub mats: Vec<ScaledMatrix>,
    pub inverse: Vec<usize>,
    index: HashMap<Word, usize>,
}

impl BallEval {
    pub fn new(rep: &Representation, radius: usize) -> Result<BallEval> {
        let model = rep.model();
        let words = model.ball(radius)?;
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            index.insert(w.clone(), i);
        }
        let mut lengths = Vec::with_capacity(words.len());
        let mut mats = Vec::with_capacity(words.len());
        // incremental products along the shortlex tree (free) or fresh
        // evaluation (surface words are short at desk scale)
        for w in &words {
            lengths.push(model.word_length(w)?);
            mats.push(rep.apply(w)?);
        }
        let mut inverse = Vec::with_capacity(words.len());
        for w in &words {
            let wi = canonical_inverse(model, w)?;
            let &i = index
                .get(&wi)
                .ok_or(LinalgError::SingularProduct("ball not closed under inversion"))?;
            inverse.push(i);
        }
        Ok(BallEval { words, lengths, mats, inverse, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        self.index.get(w).copied()
    }

    pub fn mu(&self, i: usize) -> CartanVector {
        cartan_merged(&self.mats[i], &self.mats[self.inverse[i]])
    }

    pub fn lambda(&self, i: usize) -> LyapunovVector {
        lyapunov_merged(&self.mats[i], &self.mats[self.inverse[i]])
    }

    /// μ of the pair product γ⁻¹δ, merged from the two cached directions.
    pub fn mu_pair(&self, gamma: usize, delta: usize) -> Result<CartanVector> {
        let fwd = self.mats[self.inverse[gamma]].mul(&self.mats[delta])?;
        let bwd = self.mats[self.inverse[delta]].mul(&self.mats[gamma])?;
        Ok(cartan_merged(&fwd, &bwd))
    }
}

fn canonical_inverse(model: &GroupModel, w: &Word) -> std::result::Result<Word, WordError> {
    let wi = w.inverse();
    match model.kind() {
        crate::words::GroupKind::Free { .. } => Ok(wi),
        crate::words::GroupKind::Surface { .. } => model.canonical_word(&wi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn diag(values: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(values))
    }

    fn sm(m: DMatrix<f64>) -> ScaledMatrix {
        ScaledMatrix::from_matrix(m).unwrap()
    }

    #[test]
    fn cartan_examples() {
        let v = cartan(&sm(diag(&[2.0, 0.5])));
        assert!((v.entries()[0] - 2.0f64.ln()).abs() < 1e-12);
        assert!((v.entries()[1] + 2.0f64.ln()).abs() < 1e-12);

        let rot = dmatrix![0.6, -0.8; 0.8, 0.6];
        let v = cartan(&sm(rot));
        assert!(v.entries().iter().all(|x| x.abs() < 1e-12));

        // SVD oracle for [[1,1],[0,1]]: gᵗg has eigenvalues (3±√5)/2
        let v = cartan(&sm(dmatrix![1.0, 1.0; 0.0, 1.0]));
        let expected = (((3.0 + 5.0f64.sqrt()) / 2.0) as f64).sqrt().ln();
        assert!((v.entries()[0] - expected).abs() < 1e-6);
        assert!((v.entries()[1] + expected).abs() < 1e-6);
    }

    #[test]
    fn lyapunov_examples() {
        let v = lyapunov(&sm(diag(&[3.0, 1.0 / 3.0])));
        assert!((v.entries()[0] - 3.0f64.ln()).abs() < 1e-12);
        let v = lyapunov(&sm(dmatrix![1.0, 1.0; 0.0, 1.0]));
        assert!(v.entries().iter().all(|x| x.abs() < 1e-9));
        let v = lyapunov(&sm(dmatrix![0.6, -0.8; 0.8, 0.6]));
        assert!(v.entries().iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn rep_apply_examples() {
        use crate::words::Word;
        let model = GroupModel::free(1);
        let rep =
            Representation::new(vec![diag(&[2.0, 0.5])], model.clone(), false).unwrap();
        let m = rep.apply(&Word::parse("").unwrap()).unwrap();
        assert_eq!(m.log_scale(), 0.0);
        assert!((m.factor() - DMatrix::identity(2, 2)).norm() < 1e-15);

        let m = rep.apply(&Word::parse("aa").unwrap()).unwrap();
        let assembled = m.assemble();
        assert!((assembled[(0, 0)] - 4.0).abs() < 1e-12);
        assert!((assembled[(1, 1)] - 0.25).abs() < 1e-12);

        // unipotent power oracle: [[1,1],[0,1]]^32 = [[1,32],[0,1]]
        let rep = Representation::new(vec![dmatrix![1.0, 1.0; 0.0, 1.0]], model, false).unwrap();
        let w = Word::parse(&"a".repeat(32)).unwrap();
        let m = rep.apply(&w).unwrap().assemble();
        assert!((m[(0, 1)] - 32.0).abs() / 32.0 < 1e-9);
        assert!((m[(0, 0)] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rep_apply_rejects_singular_generators() {
        let model = GroupModel::free(1);
        let bad = dmatrix![1.0, 0.0; 0.0, 1e-20];
        assert!(matches!(
            Representation::new(vec![bad], model, false),
            Err(LinalgError::BadGenerator { .. })
        ));
    }

    #[test]
    fn attractor_examples() {
        let m = sm(diag(&[4.0, 1.0]));
        let p = attractor_plus(&m, DEFAULT_GAP_TOL).unwrap();
        assert!((p.dir()[0] - 1.0).abs() < 1e-12);
        let h = attractor_minus(&m, DEFAULT_GAP_TOL).unwrap();
        assert!((h.normal()[1] - 1.0).abs() < 1e-12);

        // k·diag(4,1) for a rotation k has attractor [k e₁]
        let k = dmatrix![0.6, -0.8; 0.8, 0.6];
        let m = sm(&k * diag(&[4.0, 1.0]));
        let p = attractor_plus(&m, DEFAULT_GAP_TOL).unwrap();
        let expected = ProjectivePoint::new(DVector::from_row_slice(&[0.6, 0.8]));
        assert!(projective_distance(&p, &expected) < 1e-12);

        assert!(matches!(
            attractor_plus(&sm(DMatrix::identity(2, 2)), DEFAULT_GAP_TOL),
            Err(LinalgError::DegenerateGap { .. })
        ));
    }

    #[test]
    fn functional_examples() {
        let mu = CartanVector::new(vec![2.0f64.ln(), -(2.0f64.ln())]);
        assert!((mu.eval(&LinearFunctional::Root(1)) - 2.0 * 2.0f64.ln()).abs() < 1e-12);

        let mu = CartanVector::new(vec![0.7, 0.0, -0.7]);
        assert!((mu.eval(&LinearFunctional::Weight(1)) - 0.7).abs() < 1e-12);

        // subtract-mean oracle on μ of non-unimodular diag(4,1)
        let mu = cartan(&sm(diag(&[4.0, 1.0])));
        assert!((mu.eval(&LinearFunctional::Weight(1)) - 0.5 * 4.0f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn projective_distances() {
        let e1 = ProjectivePoint::new(DVector::from_row_slice(&[1.0, 0.0]));
        let e2 = ProjectivePoint::new(DVector::from_row_slice(&[0.0, 1.0]));
        let mid = ProjectivePoint::new(DVector::from_row_slice(&[1.0, 1.0]));
        assert!((projective_distance(&e1, &e2) - 1.0).abs() < 1e-15);
        assert!(projective_distance(&e1, &e1) < 1e-15);
        assert!((projective_distance(&e1, &mid) - (0.5f64).sqrt()).abs() < 1e-12);

        let h1 = Hyperplane::new(DVector::from_row_slice(&[1.0, 0.0]));
        let h2 = Hyperplane::new(DVector::from_row_slice(&[0.0, 1.0]));
        assert!((point_hyperplane_distance(&e1, &h1) - 1.0).abs() < 1e-15);
        assert!(point_hyperplane_distance(&e1, &h2) < 1e-15);
        assert!((point_hyperplane_distance(&mid, &h1) - (0.5f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exterior_power_examples() {
        let m = diag(&[2.0, 3.0, 5.0]);
        let e = exterior_power(&m, 2);
        // lex subsets: {0,1}, {0,2}, {1,2} → products 6, 10, 15
        assert!((e[(0, 0)] - 6.0).abs() < 1e-12);
        assert!((e[(1, 1)] - 10.0).abs() < 1e-12);
        assert!((e[(2, 2)] - 15.0).abs() < 1e-12);

        let m = dmatrix![1.0, 2.0; 3.0, 4.0];
        assert!((exterior_power(&m, 1) - &m).norm() < 1e-15);

        // σ₁(Λ²g) = σ₁(g)σ₂(g): SVD oracle on a fixed 4×4
        let g = dmatrix![
            0.3, -1.2, 0.7, 0.1;
            1.0, 0.4, -0.5, 0.9;
            -0.2, 0.8, 1.1, -0.6;
            0.5, -0.3, 0.2, 1.4
        ];
        let sv = g.clone().svd(false, false).singular_values;
        let esv = exterior_power(&g, 2).svd(false, false).singular_values;
        assert!((esv[0] - sv[0] * sv[1]).abs() / esv[0] < 1e-9);
    }

    #[test]
    fn symmetric_power_examples() {
        let s = symmetric_power(&diag(&[2.0, 0.5]), 2);
        assert!((s - diag(&[4.0, 1.0, 0.25])).norm() < 1e-12);

        let m = dmatrix![1.0, 2.0; 3.0, 4.0];
        assert!((symmetric_power(&m, 1) - &m).norm() < 1e-15);

        // orthonormal-basis form of sym² of the unipotent [[1,1],[0,1]]
        let s = symmetric_power(&dmatrix![1.0, 1.0; 0.0, 1.0], 2);
        let r2 = 2.0f64.sqrt();
        let expected = dmatrix![1.0, r2, 1.0; 0.0, 1.0, r2; 0.0, 0.0, 1.0];
        assert!((s - expected).norm() < 1e-12, "sym² acts on the orthonormal monomial basis");
    }

    #[test]
    fn symmetric_power_is_orthogonal_on_rotations() {
        let theta: f64 = 0.77;
        let k = dmatrix![theta.cos(), -theta.sin(); theta.sin(), theta.cos()];
        for q in 1..=5 {
            let s = symmetric_power(&k, q);
            let gram = &s * s.transpose();
            assert!(
                (gram - DMatrix::identity(q + 1, q + 1)).norm() < 1e-12,
                "sym^{q} of a rotation must be orthogonal"
            );
        }
    }

    #[test]
    fn tensor_dual_directsum_examples() {
        let t = tensor(&diag(&[2.0, 3.0]), &diag(&[5.0, 7.0]));
        assert!((t - diag(&[10.0, 14.0, 15.0, 21.0])).norm() < 1e-12);

        let d = dual(&diag(&[2.0, 0.5]));
        assert!((d - diag(&[0.5, 2.0])).norm() < 1e-12);

        // μ(A⊕B) = sorted merge of μ(A), μ(B)
        let a = dmatrix![0.9, -0.4; 1.3, 0.2];
        let b = dmatrix![1.7, 0.3; -0.8, 0.6];
        let sv_a = a.clone().svd(false, false).singular_values;
        let sv_b = b.clone().svd(false, false).singular_values;
        let mut merged: Vec<f64> =
            sv_a.iter().chain(sv_b.iter()).map(|s: &f64| s.ln()).collect();
        merged.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let mu = cartan(&sm(direct_sum(&a, &b)));
        for (x, y) in mu.entries().iter().zip(&merged) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn complexify_examples() {
        let re = dmatrix![1.0, 2.0; 3.0, 4.0];
        let zero = DMatrix::zeros(2, 2);
        let c = complexify(&re, &zero);
        assert!((c.view((0, 0), (2, 2)).clone_owned() - &re).norm() < 1e-15);
        assert!((c.view((2, 2), (2, 2)).clone_owned() - &re).norm() < 1e-15);

        // g = i·I₁ → [[0, −1], [1, 0]]
        let c = complexify(&DMatrix::zeros(1, 1), &DMatrix::identity(1, 1));
        assert!((c - dmatrix![0.0, -1.0; 1.0, 0.0]).norm() < 1e-15);

        // σ-list doubles in multiplicity
        let im = dmatrix![0.5, -1.1; 0.7, 0.2];
        let c = complexify(&re, &im);
        let sv = c.svd(false, false).singular_values;
        assert!((sv[0] - sv[1]).abs() < 1e-10 * sv[0]);
        assert!((sv[2] - sv[3]).abs() < 1e-10 * sv[0]);
    }

    #[test]
    fn proximal_data_examples() {
        let m = sm(diag(&[4.0, 1.0, 0.25]));
        let p = proximal_data(&m, DEFAULT_GAP_TOL).unwrap();
        assert!((p.log_top_modulus - 4.0f64.ln()).abs() < 1e-12);
        assert!((p.point.dir()[0].abs() - 1.0).abs() < 1e-12);
        assert!((p.hyperplane.normal()[0].abs() - 1.0).abs() < 1e-12);
        assert!(p.biproximal);

        assert!(matches!(
            proximal_data(&sm(dmatrix![0.6, -0.8; 0.8, 0.6]), DEFAULT_GAP_TOL),
            Err(LinalgError::NotProximal { .. })
        ));

        // eigendecomposition oracle for [[3,1],[0,1/3]]
        let m = sm(dmatrix![3.0, 1.0; 0.0, 1.0 / 3.0]);
        let p = proximal_data(&m, DEFAULT_GAP_TOL).unwrap();
        assert!((p.point.dir()[0] - 1.0).abs() < 1e-10);
        // left eigenvector of the top eigenvalue: (A − 3I)ᵗ null space ∝ (8/3, 1)
        let expected = Hyperplane::new(DVector::from_row_slice(&[8.0 / 3.0, 1.0]));
        assert!((p.hyperplane.normal() - expected.normal()).norm() < 1e-10);
    }

    #[test]
    fn gromov_product_examples() {
        use crate::words::Word;
        let model = GroupModel::free(1);
        let rep = Representation::new(vec![diag(&[2.0, 0.5])], model, false).unwrap();
        let e = Word::identity();
        let a = Word::parse("a").unwrap();
        let phi = LinearFunctional::Epsilon(1);
        assert!(rep.gromov_product(&e, &e, &phi).unwrap().abs() < 1e-12);
        let v = rep.gromov_product(&a, &a, &phi).unwrap();
        assert!((v - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn representation_json_roundtrip() {
        let model = GroupModel::free(2);
        let rep = Representation::new(
            vec![diag(&[2.0, 0.5]), dmatrix![1.0, 1.0; 0.0, 1.0]],
            model,
            false,
        )
        .unwrap();
        let v = rep.to_json();
        let back = Representation::from_json(&v).unwrap();
        assert_eq!(back.dim(), 2);
        for (a, b) in rep.images().iter().zip(back.images()) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(v, back.to_json());
    }

    #[test]
    fn merged_mu_matches_long_product() {
        use crate::words::Word;
        // aⁿ for a = R·diag(e^t, e^{-t})·R⁻¹ with a rotation R has
        // μ(aⁿ) = (nt, −nt) exactly; at n = 30 and t = 2 the bottom entry is
        // ~e^{-120}·σ₁, far below the noise floor of the forward product, so
        // only the forward/inverse merge can recover it.
        let t: f64 = 2.0;
        let r = dmatrix![
            (0.3f64).cos(), -(0.3f64).sin();
            (0.3f64).sin(), (0.3f64).cos()
        ];
        let a = &r * diag(&[t.exp(), (-t).exp()]) * r.transpose();
        let model = GroupModel::free(1);
        let rep = Representation::new(vec![a], model, false).unwrap();
        let w = Word::parse(&"a".repeat(30)).unwrap();
        let mu = rep.mu(&w).unwrap();
        assert!((mu.entries()[0] - 60.0).abs() < 1e-9);
        assert!((mu.entries()[1] + 60.0).abs() < 1e-9);
        // the naive single-matrix route cannot see the bottom entry
        let naive = cartan(&rep.apply(&w).unwrap());
        assert!((naive.entries()[0] - 60.0).abs() < 1e-9);
    }
}
