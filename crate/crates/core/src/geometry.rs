//! Distances from a point to an Lp ball and projections onto Lp balls.
//!
//! These are the inner minimizations behind the closed-form bounds: the
//! supremum of a shifted unimodal density over a ball is the density
//! evaluated at the distance from the point to the ball, measured in the
//! norm the density decays in.

/// ||v||_1.
pub fn norm_l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// ||v||_2.
pub fn norm_l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// ||v||_inf.
pub fn norm_linf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Euclidean distance from `w` to the L2 ball of radius `r`:
/// max(||w||_2 - r, 0).
pub fn dist_l2_to_l2ball(w: &[f64], r: f64) -> f64 {
    debug_assert!(r >= 0.0);
    (norm_l2(w) - r).max(0.0)
}

/// Per-coordinate distances from `w` to the Linf ball of radius `r`:
/// max(|w_i| - r, 0) in each coordinate.
///
/// The supremum of a product density over the Linf ball is the product of
/// the marginal density at these values, so callers combine them per family
/// (L2 norm for the isotropic Gaussian, sum for Laplace, max for uniform).
pub fn dist_linf_to_linfball(w: &[f64], r: f64) -> Vec<f64> {
    debug_assert!(r >= 0.0);
    w.iter().map(|x| (x.abs() - r).max(0.0)).collect()
}

/// L1 distance from `w` to the L1 ball of radius `r`:
/// max(||w||_1 - r, 0). The positive-octant minimization extends to all of
/// R^d by sign symmetry.
pub fn dist_l1_to_l1ball(w: &[f64], r: f64) -> f64 {
    debug_assert!(r >= 0.0);
    (norm_l1(w) - r).max(0.0)
}

/// Exact Euclidean projection of `w` onto the L1 ball of radius `r`, and its
/// L2 distance.
///
/// Sort-based soft thresholding in O(d log d): the threshold is the
/// water-filling level theta = (cumsum_rho - r)/rho over the largest
/// magnitudes; ties resolve through the cumulative-sum rule and w = 0 maps to
/// itself. The distance always dominates the hyperplane lower bound
/// max(||w||_1 - r, 0) / sqrt(d).
pub fn project_l2_onto_l1ball(w: &[f64], r: f64) -> (Vec<f64>, f64) {
    debug_assert!(r >= 0.0);
    if norm_l1(w) <= r {
        return (w.to_vec(), 0.0);
    }
    // r < ||w||_1, so w != 0 here.
    let mut mags: Vec<f64> = w.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - r) / (j + 1) as f64;
        if m > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    let point: Vec<f64> = w
        .iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect();
    let distance = norm_l2(&w.iter().zip(&point).map(|(a, b)| a - b).collect::<Vec<_>>());
    (point, distance)
}

/// Euclidean distance from `w` to the L1 ball of radius `r` (projection
/// distance without materializing the point).
pub fn dist_l2_to_l1ball(w: &[f64], r: f64) -> f64 {
    project_l2_onto_l1ball(w, r).1
}

/// Chebyshev (Linf) distance from `w` to the L2 ball of radius `r`: the
/// smallest t such that the cube of half-width t around `w` meets the ball,
/// i.e. the root of sum_i max(|w_i| - t, 0)^2 = r^2.
///
/// Solved exactly by sorting |w_i| and solving the per-piece quadratic; this
/// is the inner supremum for uniform product noise over an L2 ball.
pub fn dist_linf_to_l2ball(w: &[f64], r: f64) -> f64 {
    debug_assert!(r >= 0.0);
    if norm_l2(w) <= r {
        return 0.0;
    }
    let mut mags: Vec<f64> = w.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // On t in [mags[k], mags[k-1]) exactly the k largest coordinates exceed t:
    // phi(t) = sum_{i<k} (mags[i] - t)^2, a decreasing quadratic in t.
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for k in 1..=mags.len() {
        sum += mags[k - 1];
        sum_sq += mags[k - 1] * mags[k - 1];
        let lower = if k < mags.len() { mags[k] } else { 0.0 };
        // Solve k t^2 - 2 sum t + (sum_sq - r^2) = 0 for the smaller root
        // inside [lower, mags[k-1]].
        let kf = k as f64;
        let disc = sum * sum - kf * (sum_sq - r * r);
        if disc >= 0.0 {
            let t = (sum - disc.sqrt()) / kf;
            if t >= lower - 1e-12 {
                return t.max(0.0);
            }
        }
    }
    // Unreachable for ||w||_2 > r; phi(0) = ||w||^2 > r^2 and phi is
    // continuous decreasing to 0.
    0.0
}
