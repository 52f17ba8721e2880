//! Constructors for test representations with known ground truth:
//! ping-pong Fuchsian free groups, the genus-2 octagon surface group,
//! functorial lifts, seeded deformations and block-triangular models.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{
    complexify, direct_sum, dual, exterior_power, symmetric_power, tensor, LinalgError,
    Representation,
};
use crate::words::{Anchor, GroupKind, GroupModel, Word, WordError};

#[derive(Debug, Error)]
pub enum ZooError {
    #[error(
        "ping-pong certificate failed: intervals {first} and {second} overlap \
         (gap {gap:.4}, radius {radius:.4}); increase the strength or separate the axes"
    )]
    PingPongFailure { first: usize, second: usize, gap: f64, radius: f64 },
    #[error("binary functor over representations of different models or dimensions")]
    FunctorMismatch,
    #[error("operation requires a free group model")]
    FreeModelRequired,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Word(#[from] WordError),
}

pub type Result<T> = std::result::Result<T, ZooError>;

fn rotation(theta: f64) -> Matrix2<f64> {
    Matrix2::new(theta.cos(), -theta.sin(), theta.sin(), theta.cos())
}

/// Equally spaced attracting directions 0, π/2k, …, (k−1)π/2k: the 2k axis
/// endpoints then sit at distance π/2k apart on the projective circle.
pub fn default_axes(rank: usize) -> Vec<f64> {
    (0..rank).map(|i| i as f64 * PI / (2.0 * rank as f64)).collect()
}

/// Ping-pong hyperbolic generators: generator i is
/// R(θ_i)·diag(e^t, e^{−t})·R(θ_i)⁻¹, with attracting direction θ_i and
/// repelling direction θ_i + π/2 on the projective line. The certificate
/// checks that the 2k intervals of radius arctan(e^{−t}) around these
/// directions are pairwise disjoint mod π, which makes the group free and
/// discrete by ping-pong; the representation registers itself as the model
/// anchor.
pub fn fuchsian_free(rank: usize, strength: f64, axes: Option<&[f64]>) -> Result<Representation> {
    assert!(strength > 0.0, "strength must be positive");
    let angles: Vec<f64> = match axes {
        Some(a) => {
            assert_eq!(a.len(), rank);
            a.to_vec()
        }
        None => default_axes(rank),
    };
    // D maps the complement of the radius-r repelling interval into the
    // radius-r attracting interval exactly when tan r = e^{−t}.
    let radius = (-strength).exp().atan();
    let mut centers = Vec::with_capacity(2 * rank);
    for &theta in &angles {
        centers.push(theta.rem_euclid(PI));
        centers.push((theta + PI / 2.0).rem_euclid(PI));
    }
    for i in 0..centers.len() {
        for j in (i + 1)..centers.len() {
            let diff = (centers[i] - centers[j]).abs();
            let gap = diff.min(PI - diff);
            if gap < 2.0 * radius {
                return Err(ZooError::PingPongFailure { first: i, second: j, gap, radius });
            }
        }
    }
    let boost = Matrix2::new(strength.exp(), 0.0, 0.0, (-strength).exp());
    let images2: Vec<Matrix2<f64>> = angles
        .iter()
        .map(|&theta| {
            let r = rotation(theta);
            r * boost * r.transpose()
        })
        .collect();
    let anchor = Anchor::new(images2.clone())?;
    let model = GroupModel::free_anchored(rank, anchor)?;
    let images = images2
        .iter()
        .map(|m| DMatrix::from_fn(2, 2, |i, j| m[(i, j)]))
        .collect();
    Ok(Representation::new(images, model, false)?)
}

/// Side pairings of the regular hyperbolic octagon (all vertex angles π/4),
/// rebased so the four generators a₁ b₁ a₂ b₂ satisfy the genus-2 relation
/// [a₁,b₁][a₂,b₂] = ±1. Entries hardcoded from the exact construction; the
/// relation is regression-tested to 1e−8.
const OCTAGON: [[f64; 4]; 4] = [
    [
        3.90447500812216745648,
        1.707106781186547524401,
        -1.707106781186547524401,
        -0.4902614457490724076788,
    ],
    [
        0.1533328071565102170567,
        -0.1533328071565102170567,
        3.260880755216584831745,
        3.260880755216584831745,
    ],
    [
        -0.4902614457490724076788,
        1.707106781186547524401,
        -1.707106781186547524401,
        3.90447500812216745648,
    ],
    [
        3.260880755216584831745,
        -3.260880755216584831745,
        0.1533328071565102170567,
        0.1533328071565102170567,
    ],
];

/// The genus-2 surface group of the regular octagon, as a 2×2 anchored
/// surface model with the given BFS radius for the word problem.
pub fn surface_octagon(bfs_radius: usize) -> Result<Representation> {
    let images2: Vec<Matrix2<f64>> = OCTAGON
        .iter()
        .map(|e| Matrix2::new(e[0], e[1], e[2], e[3]))
        .collect();
    let anchor = Anchor::new(images2.clone())?;
    let model = GroupModel::surface(2, anchor, bfs_radius)?;
    let images = images2
        .iter()
        .map(|m| DMatrix::from_fn(2, 2, |i, j| m[(i, j)]))
        .collect();
    Ok(Representation::new(images, model, false)?)
}

/// Functors applicable generator-wise to a representation.
#[derive(Clone, Debug)]
pub enum Functor<'a> {
    Sym(usize),
    Ext(usize),
    Dual,
    TensorWith(&'a Representation),
    DirectSumWith(&'a Representation),
    /// τ₂ pattern of the complexification with zero imaginary part.
    Complexify,
}

/// Applies a functor to every generator image; the group model is shared.
pub fn lift(rep: &Representation, functor: Functor<'_>) -> Result<Representation> {
    let model = rep.model().clone();
    let images: Vec<DMatrix<f64>> = match functor {
        Functor::Sym(q) => rep.images().iter().map(|m| symmetric_power(m, q)).collect(),
        Functor::Ext(k) => rep.images().iter().map(|m| exterior_power(m, k)).collect(),
        Functor::Dual => rep.images().iter().map(dual).collect(),
        Functor::TensorWith(other) => {
            if !Arc::ptr_eq(rep.model(), other.model()) {
                return Err(ZooError::FunctorMismatch);
            }
            rep.images().iter().zip(other.images()).map(|(a, b)| tensor(a, b)).collect()
        }
        Functor::DirectSumWith(other) => {
            if !Arc::ptr_eq(rep.model(), other.model()) {
                return Err(ZooError::FunctorMismatch);
            }
            rep.images().iter().zip(other.images()).map(|(a, b)| direct_sum(a, b)).collect()
        }
        Functor::Complexify => {
            let zero = DMatrix::zeros(rep.dim(), rep.dim());
            rep.images().iter().map(|m| complexify(m, &zero)).collect()
        }
    };
    Ok(Representation::new(images, model, false)?)
}

/// Representation built from complex generator images (given as Re/Im
/// pairs) through the realification τ₂(g) = [[Re g, −Im g], [Im g, Re g]].
pub fn complex_rep(
    re_images: Vec<DMatrix<f64>>,
    im_images: Vec<DMatrix<f64>>,
    model: Arc<GroupModel>,
) -> Result<Representation> {
    assert_eq!(re_images.len(), im_images.len());
    let images = re_images
        .iter()
        .zip(&im_images)
        .map(|(re, im)| complexify(re, im))
        .collect();
    Ok(Representation::new(images, model, false)?)
}

/// Multiplies every generator by exp(ε·S) for a seeded random symmetric
/// trace-free S (the antisymmetric part is removed so the deformation moves
/// transversally to the maximal compact), then re-unimodularizes.
pub fn deform(rep: &Representation, magnitude: f64, seed: u64) -> Result<Representation> {
    let d = rep.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = Vec::with_capacity(rep.images().len());
    for image in rep.images() {
        let raw = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
        let mut sym = (&raw + raw.transpose()) * 0.5;
        let mean_trace = sym.trace() / d as f64;
        for i in 0..d {
            sym[(i, i)] -= mean_trace;
        }
        images.push(image * (sym * magnitude).exp());
    }
    Ok(Representation::new(images, rep.model().clone(), true)?)
}

/// Upper block-triangular representation [[ρ_A, U], [0, ρ_B]] with a seeded
/// random cocycle block on each generator. Free models only: on a surface
/// group an arbitrary block would violate the defining relation.
pub fn block_triangular(
    rep_a: &Representation,
    rep_b: &Representation,
    seed: u64,
) -> Result<Representation> {
    if !Arc::ptr_eq(rep_a.model(), rep_b.model()) {
        return Err(ZooError::FunctorMismatch);
    }
    if !matches!(rep_a.model().kind(), GroupKind::Free { .. }) {
        return Err(ZooError::FreeModelRequired);
    }
    let (da, db) = (rep_a.dim(), rep_b.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = Vec::with_capacity(rep_a.images().len());
    for (a, b) in rep_a.images().iter().zip(rep_b.images()) {
        let mut m = DMatrix::zeros(da + db, da + db);
        m.view_mut((0, 0), (da, da)).copy_from(a);
        m.view_mut((da, da), (db, db)).copy_from(b);
        let u = DMatrix::from_fn(da, db, |_, _| StandardNormal.sample(&mut rng));
        m.view_mut((0, da), (da, db)).copy_from(&u);
        images.push(m);
    }
    Ok(Representation::new(images, rep_a.model().clone(), false)?)
}

/// Zeroes the off-diagonal block above the split: the semisimplification of
/// a block-triangular representation. Idempotent.
pub fn semisimplify(rep: &Representation, split: usize) -> Result<Representation> {
    let d = rep.dim();
    assert!(split < d, "split must be interior");
    let images = rep
        .images()
        .iter()
        .map(|m| {
            let mut out = m.clone();
            out.view_mut((0, split), (split, d - split)).fill(0.0);
            out
        })
        .collect();
    Ok(Representation::new(images, rep.model().clone(), false)?)
}
