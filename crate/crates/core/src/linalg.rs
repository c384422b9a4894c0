//! Small fixed-size linear algebra on top of nalgebra.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
#[allow(unused_imports)]
use num_traits::Float;

pub type Mat4 = Matrix4<f64>;
pub type Vec4 = Vector4<f64>;
pub type Mat2 = Matrix2<f64>;
pub type Vec2 = Vector2<f64>;

/// Angle between the lines spanned by `a` and `b`, in `[0, pi/2]`.
pub fn line_angle(a: &Vec4, b: &Vec4) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return core::f64::consts::FRAC_PI_2;
    }
    let c = (a.dot(b) / (na * nb)).abs().min(1.0);
    // acos loses accuracy near 0; use the sine of the angle instead.
    let cross = (a / na - b * (a.dot(b).signum() / nb)).norm();
    let s = cross * (1.0 - cross * cross / 4.0).max(0.0).sqrt();
    if c > 0.7 {
        s.asin()
    } else {
        c.acos()
    }
}

/// Orthonormalizes `k` columns in place with twice-repeated modified
/// Gram-Schmidt. Returns the norms of the components removed at each
/// step (the diagonal of the R factor).
pub fn orthonormalize(cols: &mut [Vec4]) -> [f64; 4] {
    let mut diag = [0.0; 4];
    for i in 0..cols.len() {
        for _ in 0..2 {
            for j in 0..i {
                let p = cols[i].dot(&cols[j]);
                let cj = cols[j];
                cols[i] -= cj * p;
            }
        }
        let n = cols[i].norm();
        diag[i] = n;
        if n > 0.0 {
            cols[i] /= n;
        }
    }
    diag
}

/// Unit normal of the hyperplane spanned by three orthonormal vectors.
pub fn hyperplane_normal(basis: &[Vec4; 3]) -> Vec4 {
    // Complete with the coordinate axis least represented in the span.
    let mut best = Vec4::zeros();
    let mut best_norm = -1.0;
    for k in 0..4 {
        let mut v = Vec4::zeros();
        v[k] = 1.0;
        for _ in 0..2 {
            for b in basis {
                v -= b * b.dot(&v);
            }
        }
        let n = v.norm();
        if n > best_norm {
            best_norm = n;
            best = v / n;
        }
    }
    best
}

/// Smallest angle between a line and a 2-plane given by an orthonormal basis.
pub fn line_plane_angle(v: &Vec4, plane: &[Vec4; 2]) -> f64 {
    let proj = plane[0] * plane[0].dot(v) + plane[1] * plane[1].dot(v);
    line_angle(v, &proj)
}

pub fn mat4_from_rows(rows: &[[f64; 4]; 4]) -> Mat4 {
    Mat4::from_fn(|i, j| rows[i][j])
}

pub fn mat4_to_rows(m: &Mat4) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = m[(i, j)];
        }
    }
    out
}

pub fn spectral_norm(m: &Mat4) -> f64 {
    m.singular_values().max()
}

/// Condition number of a 2x2 matrix in the spectral norm.
pub fn cond2(m: &Mat2) -> f64 {
    let s = m.singular_values();
    let (hi, lo) = if s[0] >= s[1] { (s[0], s[1]) } else { (s[1], s[0]) };
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}
