use nalgebra::{DMatrix, Matrix3, Vector3};

/// Maps points of the first view to epipolar lines in the second:
/// `x2ᵀ F x1 = 0`.
pub type Fundamental = Matrix3<f64>;

/// Similarity taking the points to zero centroid and mean distance √2.
fn normalizing_transform(pts: &[[f64; 2]]) -> Option<Matrix3<f64>> {
    let n = pts.len() as f64;
    let (cx, cy) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
    let (cx, cy) = (cx / n, cy / n);
    let mean_dist = pts.iter().map(|p| (p[0] - cx).hypot(p[1] - cy)).sum::<f64>() / n;
    if !(mean_dist > 1e-12) {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Some(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn apply(t: &Matrix3<f64>, p: [f64; 2]) -> Vector3<f64> {
    t * Vector3::new(p[0], p[1], 1.0)
}

/// Unit Frobenius norm with the largest-magnitude entry positive.
fn canonical(f: Fundamental) -> Option<Fundamental> {
    let norm = f.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let f = f / norm;
    let pivot = f
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(1.0);
    Some(if pivot < 0.0 { -f } else { f })
}

/// Normalized eight-point estimate from at least eight correspondences,
/// rank 2 and unit Frobenius norm.
pub fn eight_point(x1: &[[f64; 2]], x2: &[[f64; 2]]) -> Option<Fundamental> {
    weighted_eight_point(x1, x2, &vec![1.0; x1.len()])
}

/// Eight-point estimate with each equation scaled by its weight.
pub fn weighted_eight_point(x1: &[[f64; 2]], x2: &[[f64; 2]], weights: &[f64]) -> Option<Fundamental> {
    assert_eq!(x1.len(), x2.len());
    assert_eq!(x1.len(), weights.len());
    let n = x1.len();
    if n < 8 {
        return None;
    }
    let t1 = normalizing_transform(x1)?;
    let t2 = normalizing_transform(x2)?;
    // padded to at least 9 rows so the null vector appears in V
    let mut a = DMatrix::<f64>::zeros(n.max(9), 9);
    for (r, (p, q)) in x1.iter().zip(x2).enumerate() {
        let p = apply(&t1, *p);
        let q = apply(&t2, *q);
        let row = [q.x * p.x, q.x * p.y, q.x, q.y * p.x, q.y * p.y, q.y, p.x, p.y, 1.0];
        for (c, v) in row.into_iter().enumerate() {
            a[(r, c)] = weights[r] * v;
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t?;
    let k = svd.singular_values.imin();
    let f = Matrix3::from_row_slice(v_t.row(k).clone_owned().as_slice());

    let svd = f.svd(true, true);
    let (u, v_t) = (svd.u?, svd.v_t?);
    let mut s = svd.singular_values;
    let k = s.imin();
    s[k] = 0.0;
    let f = u * Matrix3::from_diagonal(&s) * v_t;
    canonical(t2.transpose() * f * t1)
}

/// Inverse gradient norm of the epipolar constraint at a correspondence, so
/// that a weighted algebraic residual approximates the geometric one.
pub fn sampson_weight(f: &Fundamental, x1: [f64; 2], x2: [f64; 2]) -> f64 {
    let l2 = f * Vector3::new(x1[0], x1[1], 1.0);
    let l1 = f.transpose() * Vector3::new(x2[0], x2[1], 1.0);
    let g = (l2.x * l2.x + l2.y * l2.y + l1.x * l1.x + l1.y * l1.y).sqrt();
    if g > 0.0 && g.is_finite() {
        1.0 / g
    } else {
        0.0
    }
}

/// Mean of the distances from `x2` to the epipolar line of `x1` and from
/// `x1` to the epipolar line of `x2`, in pixels.
pub fn symmetric_epipolar_distance(f: &Fundamental, x1: [f64; 2], x2: [f64; 2]) -> f64 {
    let p = Vector3::new(x1[0], x1[1], 1.0);
    let q = Vector3::new(x2[0], x2[1], 1.0);
    let l2 = f * p;
    let l1 = f.transpose() * q;
    let e = q.dot(&l2).abs();
    let n2 = l2.x.hypot(l2.y);
    let n1 = l1.x.hypot(l1.y);
    if n1 == 0.0 || n2 == 0.0 {
        return if e == 0.0 { 0.0 } else { f64::INFINITY };
    }
    0.5 * (e / n2 + e / n1)
}
