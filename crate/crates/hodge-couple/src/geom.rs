//! Small fixed-size vector helpers.

use crate::C64;

pub type P3 = [f64; 3];
pub type CV3 = [C64; 3];

#[inline]
pub fn add(a: P3, b: P3) -> P3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(s: f64, a: P3) -> P3 {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: P3, b: P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn norm(a: P3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn normalize(a: P3) -> P3 {
    scale(1.0 / norm(a), a)
}

#[inline]
pub fn dist(a: P3, b: P3) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn bary_point(p: &[P3; 3], l: &[f64; 3]) -> P3 {
    [
        l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
        l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
        l[0] * p[0][2] + l[1] * p[1][2] + l[2] * p[2][2],
    ]
}

#[inline]
pub fn cdot(a: CV3, b: CV3) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Real vector dotted with complex vector.
#[inline]
pub fn rcdot(a: P3, b: CV3) -> C64 {
    b[0] * a[0] + b[1] * a[1] + b[2] * a[2]
}

#[inline]
pub fn ccross(a: CV3, b: CV3) -> CV3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Complex vector crossed with real vector.
#[inline]
pub fn crcross(a: CV3, b: P3) -> CV3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn cscale(s: C64, a: P3) -> CV3 {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub fn cadd(a: CV3, b: CV3) -> CV3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn csub(a: CV3, b: CV3) -> CV3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn cnorm(a: CV3) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()).sqrt()
}

pub const CZERO3: CV3 = [C64 { re: 0.0, im: 0.0 }; 3];

/// Triangle area and unit normal (right-hand rule).
pub fn tri_area_normal(p: &[P3; 3]) -> (f64, P3) {
    let c = cross(sub(p[1], p[0]), sub(p[2], p[0]));
    let n2 = norm(c);
    (0.5 * n2, scale(1.0 / n2, c))
}

/// Signed tetrahedron volume.
pub fn tet_volume(p: &[P3; 4]) -> f64 {
    dot(sub(p[1], p[0]), cross(sub(p[2], p[0]), sub(p[3], p[0]))) / 6.0
}

/// Surface gradients of the barycentric coordinates of a triangle.
pub fn tri_bary_grads(p: &[P3; 3], n: P3, area: f64) -> [P3; 3] {
    // ∇λ_k = n × (p_{k+2} − p_{k+1}) / (2A)
    let mut g = [[0.0; 3]; 3];
    for k in 0..3 {
        let e = sub(p[(k + 2) % 3], p[(k + 1) % 3]);
        g[k] = scale(1.0 / (2.0 * area), cross(n, e));
    }
    g
}

/// Gradients of the barycentric coordinates of a tetrahedron.
pub fn tet_bary_grads(p: &[P3; 4]) -> [P3; 4] {
    let vol6 = 6.0 * tet_volume(p);
    let mut g = [[0.0; 3]; 4];
    for k in 0..4 {
        let (a, b, c) = match k {
            0 => (1, 2, 3),
            1 => (0, 3, 2),
            2 => (0, 1, 3),
            _ => (0, 2, 1),
        };
        // ∇λ_k ∝ (p_b − p_a) × (p_c − p_a), normalized by λ_k(p_k) = 1
        let nrm = cross(sub(p[b], p[a]), sub(p[c], p[a]));
        g[k] = scale(1.0 / vol6, nrm);
    }
    // orientation: ∇λ_k·(p_k − p_a) must be 1
    for k in 0..4 {
        let a = if k == 0 { 1 } else { 0 };
        let s = dot(g[k], sub(p[k], p[a]));
        g[k] = scale(1.0 / s, g[k]);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tet_gradients_are_dual() {
        let p = [[0.1, 0.0, 0.2], [1.0, 0.1, 0.0], [0.2, 1.1, 0.1], [0.0, 0.3, 0.9]];
        let g = tet_bary_grads(&p);
        for k in 0..4 {
            for j in 0..4 {
                let v = dot(g[k], sub(p[j], p[0])) + if k == 0 { 1.0 } else { 0.0 };
                let e = if k == j { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tri_gradients_are_dual() {
        let p = [[0.1, 0.0, 0.2], [1.0, 0.1, 0.0], [0.2, 1.1, 0.1]];
        let (a, n) = tri_area_normal(&p);
        let g = tri_bary_grads(&p, n, a);
        for k in 0..3 {
            for j in 0..3 {
                let v = dot(g[k], sub(p[j], p[(k + 1) % 3]));
                let e = if k == j { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-12);
            }
        }
    }
}
