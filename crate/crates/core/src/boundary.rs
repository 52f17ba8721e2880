//! Limit-map approximation along boundary rays via the Cartan attractors,
//! transversality estimates, and Hölder-exponent computation.
//!
//! All exponents use the visual parameter a = e (log a = 1).

use thiserror::Error;

use crate::linalg::{
    attractor_minus_from_inverse, attractor_plus, point_hyperplane_distance, Hyperplane,
    LinalgError, LinearFunctional, ProjectivePoint, Representation, DEFAULT_GAP_TOL,
};
use crate::words::{cyclic_classes, BoundaryRay, GroupKind, Word, WordError};

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("singular gap fails to increase over {0} consecutive depths (divergence inconclusive)")]
    NonDivergent(usize),
    #[error("transversality requires two distinct rays")]
    EqualRays,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Word(#[from] WordError),
}

pub type Result<T> = std::result::Result<T, BoundaryError>;

/// Depths beyond the requested one used to certify the error bound.
const ERR_WINDOW: usize = 32;
/// Consecutive non-increases of the gap that trigger the divergence flag.
const STAGNATION_LIMIT: usize = 5;

/// One approximation of ξ(x) and ξ⁻(x) at a finite depth, with a certified
/// bound on the distance to every deeper approximation: the telescoped
/// attractor-drift sum C·exp(−⟨ε₁−ε₂, μ(ρ(prefix_m))⟩) over emitted
/// prefixes, plus a geometric tail estimate.
#[derive(Clone, Debug)]
pub struct LimitSample {
    pub ray: BoundaryRay,
    pub depth: usize,
    pub point: ProjectivePoint,
    pub hyperplane: Hyperplane,
    pub err_bound: f64,
}

/// Approximates the limit maps at the ray through depth-n attractors.
pub fn limit_point(rep: &Representation, ray: &BoundaryRay, depth: usize) -> Result<LimitSample> {
    let d = rep.dim() as f64;
    let sqrt_dim = (d - 1.0).sqrt();
    let root = LinearFunctional::Root(1);

    let horizon = depth + ERR_WINDOW;
    // incremental forward products along the ray; inverse products rebuilt
    // per prefix (prefixes are short at desk scale)
    let mut gaps = Vec::with_capacity(horizon + 1);
    let mut fwd = rep.apply(&Word::identity())?;
    let mut terms = Vec::with_capacity(horizon);
    let mut stagnant = 0usize;
    let mut at_depth = None;
    for m in 0..=horizon {
        let prefix = ray.prefix(m);
        let bwd = rep.apply(&prefix.inverse())?;
        let mu = crate::linalg::cartan_merged(&fwd, &bwd);
        let gap = mu.eval(&root);
        if let Some(&prev) = gaps.last() {
            if gap <= prev + 1e-12 {
                stagnant += 1;
                if stagnant >= STAGNATION_LIMIT {
                    return Err(BoundaryError::NonDivergent(STAGNATION_LIMIT));
                }
            } else {
                stagnant = 0;
            }
        }
        gaps.push(gap);
        if m == depth {
            let point = attractor_plus(&fwd, DEFAULT_GAP_TOL)?;
            let hyperplane = attractor_minus_from_inverse(&bwd, DEFAULT_GAP_TOL)?;
            at_depth = Some((point, hyperplane));
        }
        if m < horizon {
            let letter = ray.prefix(m + 1).letters()[m];
            let r_img = rep.apply(&Word::letter(letter))?;
            let r_inv = rep.apply(&Word::letter(letter.inverse()))?;
            if m >= depth {
                let c = (r_img.log_scale() + r_img.factor().norm().ln()
                    + r_inv.log_scale()
                    + r_inv.factor().norm().ln())
                .exp()
                    * sqrt_dim;
                terms.push(c * (-gap).exp());
            }
            fwd = fwd.mul(&r_img)?;
        }
    }
    let partial: f64 = terms.iter().sum();
    let tail = geometric_tail(&terms);
    let (point, hyperplane) = at_depth.expect("depth within horizon");
    Ok(LimitSample { ray: ray.clone(), depth, point, hyperplane, err_bound: partial + tail })
}

/// Upper estimate of the tail of a (hopefully geometrically decaying) series
/// from its last ratios; infinite when no decay is observed.
fn geometric_tail(terms: &[f64]) -> f64 {
    let n = terms.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let last = terms[n - 1];
    if last == 0.0 {
        return 0.0;
    }
    let mut q: f64 = 0.0;
    for w in terms[n.saturating_sub(6)..].windows(2) {
        if w[0] > 0.0 {
            q = q.max(w[1] / w[0]);
        }
    }
    if q >= 1.0 {
        f64::INFINITY
    } else {
        last * q / (1.0 - q)
    }
}

/// The two transversality estimates of Proposition-style limits: the direct
/// product of point–hyperplane distances of the limit samples, and
/// exp(−4(ρ(γ_n)·ρ(δ_n))_{ε₁}) at the same depth. They agree within the
/// combined error bounds when the limit maps exist.
#[derive(Clone, Debug)]
pub struct Transversality {
    pub direct: f64,
    pub gromov: f64,
    pub err_bound: f64,
    pub sample_x: LimitSample,
    pub sample_y: LimitSample,
}

pub fn transversality(
    rep: &Representation,
    x: &BoundaryRay,
    y: &BoundaryRay,
    depth: usize,
) -> Result<Transversality> {
    if x.same_ray(y) {
        return Err(BoundaryError::EqualRays);
    }
    let sample_x = limit_point(rep, x, depth)?;
    let sample_y = limit_point(rep, y, depth)?;
    let direct = point_hyperplane_distance(&sample_x.point, &sample_y.hyperplane)
        * point_hyperplane_distance(&sample_y.point, &sample_x.hyperplane);
    let product =
        rep.gromov_product(&x.prefix(depth), &y.prefix(depth), &LinearFunctional::Epsilon(1))?;
    let gromov = (-4.0 * product).exp();
    let err_bound = sample_x.err_bound + sample_y.err_bound;
    Ok(Transversality { direct, gromov, err_bound, sample_x, sample_y })
}

/// Hölder-exponent estimator from singular value gaps:
/// sup_n inf_{|γ|_X ≥ n} ⟨ε₁−ε₂, μ(ρ(γ))⟩ / |γ|_X over the word ball.
#[derive(Clone, Debug)]
pub struct HolderSingular {
    pub estimate: f64,
    /// (n, a_n) with a_n = min over enumerated |γ|_X ≥ n of the gap ratio;
    /// nondecreasing in n by construction.
    pub table: Vec<(usize, f64)>,
    /// Elements skipped because |γ|_X was numerically zero.
    pub skipped: usize,
}

pub fn holder_exponent_singular(rep: &Representation, radius: usize) -> Result<HolderSingular> {
    assert!(radius >= 2, "radius must be at least 2");
    let model = rep.model();
    let root = LinearFunctional::Root(1);
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let mut skipped = 0usize;
    for g in model.ball(radius)? {
        if g.is_empty() {
            continue;
        }
        let lx = model.metric_length(&g)?;
        if lx < 1e-12 {
            skipped += 1;
            continue;
        }
        let gap = rep.mu(&g)?.eval(&root);
        pairs.push((lx, gap / lx));
    }
    // running min over the shrinking sets {|γ|_X ≥ n}
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let max_lx = pairs.last().map(|p| p.0).unwrap_or(0.0);
    let n_max = max_lx.floor().max(1.0) as usize;
    let mut table = Vec::with_capacity(n_max);
    let mut suffix_min = vec![f64::INFINITY; pairs.len() + 1];
    for i in (0..pairs.len()).rev() {
        suffix_min[i] = suffix_min[i + 1].min(pairs[i].1);
    }
    for n in 1..=n_max {
        let idx = pairs.partition_point(|p| p.0 < n as f64);
        if idx < pairs.len() {
            table.push((n, suffix_min[idx]));
        }
    }
    let estimate = table.last().map(|&(_, a)| a).unwrap_or(0.0).max(0.0);
    Ok(HolderSingular { estimate, table, skipped })
}

/// Hölder-exponent estimator from eigenvalue gaps:
/// inf over cyclic classes of ⟨ε₁−ε₂, λ(ρ(γ))⟩ / |γ|_{X,∞}.
#[derive(Clone, Debug)]
pub struct HolderEigen {
    pub estimate: f64,
    pub witness: Option<Word>,
    pub classes: usize,
    pub skipped: usize,
}

pub fn holder_exponent_eigen(rep: &Representation, max_cyclic: usize) -> Result<HolderEigen> {
    assert!(max_cyclic >= 1);
    let model = rep.model();
    let rank = match model.kind() {
        GroupKind::Free { rank } => rank,
        GroupKind::Surface { genus } => 2 * genus,
    };
    let root = LinearFunctional::Root(1);
    let mut best: Option<(f64, Word)> = None;
    let mut classes = 0usize;
    let mut skipped = 0usize;
    for g in cyclic_classes(rank, max_cyclic) {
        classes += 1;
        let stable = model.metric_stable_length(&g)?;
        if stable < 1e-12 {
            skipped += 1;
            continue;
        }
        let gap = rep.lambda(&g)?.eval(&root);
        let ratio = gap / stable;
        if best.as_ref().map_or(true, |(b, _)| ratio < *b) {
            best = Some((ratio, g));
        }
    }
    let (estimate, witness) = match best {
        Some((r, w)) => (r.max(0.0), Some(w)),
        None => (0.0, None),
    };
    Ok(HolderEigen { estimate, witness, classes, skipped })
}
