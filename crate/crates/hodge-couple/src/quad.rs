//! Quadrature rules: Gauss–Jacobi on [0,1], collapsed (conical product)
//! rules on the triangle and tetrahedron, and Sauter–Schwab tables for
//! singular panel pairs.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use faer::{Mat, Side};

/// Nodes and weights of the Gauss–Jacobi rule on [0,1] for the weight s^b.
///
/// Golub–Welsch on the Jacobi matrix. `b = 0` gives Gauss–Legendre.
pub fn gauss_jacobi01(n: usize, b: u32) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    let a = 0.0f64;
    let b = b as f64;
    let mut jm = Mat::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let alpha = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        jm[(k, k)] = alpha;
        if k + 1 < n {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + a + b;
            let beta = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0));
            jm[(k + 1, k)] = beta.sqrt();
            jm[(k, k + 1)] = beta.sqrt();
        }
    }
    // mu0 = 2^(a+b+1) Γ(a+1)Γ(b+1)/Γ(a+b+2), integer b only
    let mut mu0 = 2f64.powf(a + b + 1.0);
    let bi = b as u32;
    let mut fb = 1.0;
    for i in 1..=bi {
        fb *= i as f64;
    }
    let mut fab = 1.0;
    for i in 1..=(bi + 1) {
        fab *= i as f64;
    }
    mu0 *= fb / fab;
    let evd = jm.self_adjoint_eigen(Side::Lower).expect("tridiagonal eigensolve");
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let x = evd.S()[k];
            let v0 = evd.U()[(0, k)];
            (x, mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    // map [-1,1] with (1+x)^b to [0,1] with s^b
    let scale = 0.5f64.powf(b + 1.0);
    let xs = pairs.iter().map(|p| 0.5 * (p.0 + 1.0)).collect();
    let ws = pairs.iter().map(|p| p.1 * scale).collect();
    (xs, ws)
}

pub fn gauss_legendre01(n: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_jacobi01(n, 0)
}

/// Triangle rule in barycentric coordinates; weights sum to 1 (area fraction).
#[derive(Clone, Debug)]
pub struct TriRule {
    pub bary: Vec<[f64; 3]>,
    pub w: Vec<f64>,
}

/// Tetrahedron rule in barycentric coordinates; weights sum to 1.
#[derive(Clone, Debug)]
pub struct TetRule {
    pub bary: Vec<[f64; 4]>,
    pub w: Vec<f64>,
}

fn build_tri(n: usize) -> TriRule {
    let (su, wu) = gauss_jacobi01(n, 1);
    let (sv, wv) = gauss_legendre01(n);
    let mut bary = Vec::with_capacity(n * n);
    let mut w = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let s = su[i];
            let t = s * sv[j];
            bary.push([1.0 - s, s - t, t]);
            w.push(2.0 * wu[i] * wv[j]);
        }
    }
    TriRule { bary, w }
}

fn build_tet(n: usize) -> TetRule {
    let (su, wu) = gauss_jacobi01(n, 2);
    let (sv, wv) = gauss_jacobi01(n, 1);
    let (sw, ww) = gauss_legendre01(n);
    let mut bary = Vec::with_capacity(n * n * n);
    let mut w = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = su[i];
                let y = x * sv[j];
                let z = y * sw[k];
                bary.push([1.0 - x, x - y, y - z, z]);
                w.push(6.0 * wu[i] * wv[j] * ww[k]);
            }
        }
    }
    TetRule { bary, w }
}

fn cached<T: Clone + Send + 'static>(
    cell: &'static OnceLock<Mutex<HashMap<usize, &'static T>>>,
    n: usize,
    build: fn(usize) -> T,
) -> &'static T {
    let map = cell.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().unwrap();
    if let Some(r) = guard.get(&n) {
        return r;
    }
    let leaked: &'static T = Box::leak(Box::new(build(n)));
    guard.insert(n, leaked);
    leaked
}

/// Collapsed Gauss rule with `n` points per direction; exact for degree 2n−1.
pub fn tri_rule(n: usize) -> &'static TriRule {
    static CELL: OnceLock<Mutex<HashMap<usize, &'static TriRule>>> = OnceLock::new();
    cached(&CELL, n, build_tri)
}

/// Conical product rule with `n` points per direction; exact for degree 2n−1.
pub fn tet_rule(n: usize) -> &'static TetRule {
    static CELL: OnceLock<Mutex<HashMap<usize, &'static TetRule>>> = OnceLock::new();
    cached(&CELL, n, build_tet)
}

/// Panel-pair configuration by number of shared vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairCase {
    Coincident,
    Edge,
    Vertex,
}

/// Four-dimensional rule over T̂×T̂ with T̂ = {0 ≤ t ≤ s ≤ 1}.
/// Points are given as barycentric pairs w.r.t. the (A,B,C) ordering
/// χ(s,t) = A + s(B−A) + t(C−B); weights sum to 1.
#[derive(Clone, Debug)]
pub struct PairRule {
    pub x: Vec<[f64; 3]>,
    pub y: Vec<[f64; 3]>,
    pub w: Vec<f64>,
}

fn st_to_bary(s: f64, t: f64) -> [f64; 3] {
    [1.0 - s, s - t, t]
}

fn build_ss(case: PairCase, n: usize) -> PairRule {
    let (g, gw) = gauss_legendre01(n);
    let mut rule = PairRule { x: vec![], y: vec![], w: vec![] };
    let mut push = |xs: (f64, f64), ys: (f64, f64), w: f64| {
        rule.x.push(st_to_bary(xs.0, xs.1));
        rule.y.push(st_to_bary(ys.0, ys.1));
        // reference measure of T̂×T̂ is 1/4
        rule.w.push(4.0 * w);
    };
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let (xi, e1, e2, e3) = (g[a], g[b], g[c], g[d]);
                    let w0 = gw[a] * gw[b] * gw[c] * gw[d];
                    match case {
                        PairCase::Coincident => {
                            let w = w0 * xi.powi(3) * e1 * e1 * e2;
                            let p1 = (xi, xi * (1.0 - e1 + e1 * e2));
                            let q1 = (xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1));
                            let p3 = (xi, xi * e1 * (1.0 - e2 + e2 * e3));
                            let q3 = (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2));
                            let p5 = (xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3));
                            let q5 = (xi, xi * e1 * (1.0 - e2));
                            push(p1, q1, w);
                            push(q1, p1, w);
                            push(p3, q3, w);
                            push(q3, p3, w);
                            push(p5, q5, w);
                            push(q5, p5, w);
                        }
                        PairCase::Edge => {
                            let w = w0 * xi.powi(3) * e1 * e1;
                            push((xi, xi * e1 * e3), (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)), w);
                            let w2 = w * e2;
                            push((xi, xi * e1), (xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)), w2);
                            push((xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)), (xi, xi * e1 * e2 * e3), w2);
                            push((xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)), (xi, xi * e1), w2);
                            push((xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)), (xi, xi * e1 * e2), w2);
                        }
                        PairCase::Vertex => {
                            let w = w0 * xi.powi(3) * e2;
                            push((xi, xi * e1), (xi * e2, xi * e2 * e3), w);
                            push((xi * e2, xi * e2 * e3), (xi, xi * e1), w);
                        }
                    }
                }
            }
        }
    }
    rule
}

/// Sauter–Schwab rule for the given case with `n` Gauss points per axis.
pub fn ss_rule(case: PairCase, n: usize) -> &'static PairRule {
    static CELL: OnceLock<Mutex<HashMap<(PairCase, usize), &'static PairRule>>> = OnceLock::new();
    let map = CELL.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().unwrap();
    if let Some(r) = guard.get(&(case, n)) {
        return r;
    }
    let leaked: &'static PairRule = Box::leak(Box::new(build_ss(case, n)));
    guard.insert((case, n), leaked);
    leaked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre01(5);
        for k in 0..10 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            assert!((s - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn jacobi_weight() {
        let (x, w) = gauss_jacobi01(4, 2);
        // ∫ s^2 s^k = 1/(k+3)
        for k in 0..8 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            assert!((s - 1.0 / (k as f64 + 3.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn triangle_exactness() {
        // ∫_T λ1^a λ2^b / |T| = 2 a! b! / (a+b+2)!
        let fact = |n: u32| (1..=n).map(|i| i as f64).product::<f64>();
        for n in 1..7 {
            let r = tri_rule(n);
            let deg = 2 * n as u32 - 1;
            for a in 0..=deg {
                for b in 0..=(deg - a) {
                    let s: f64 = r
                        .bary
                        .iter()
                        .zip(&r.w)
                        .map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32))
                        .sum();
                    let exact = 2.0 * fact(a) * fact(b) / fact(a + b + 2);
                    assert!((s - exact).abs() < 1e-13, "n={n} a={a} b={b}");
                }
            }
            assert!(r.w.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn tet_exactness() {
        let fact = |n: u32| (1..=n).map(|i| i as f64).product::<f64>();
        let r = tet_rule(3);
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                for c in 0..=(5 - a - b) {
                    let s: f64 = r
                        .bary
                        .iter()
                        .zip(&r.w)
                        .map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32) * l[3].powi(c as i32))
                        .sum();
                    let exact = 6.0 * fact(a) * fact(b) * fact(c) / fact(a + b + c + 3);
                    assert!((s - exact).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn pair_rules_have_unit_mass() {
        for case in [PairCase::Coincident, PairCase::Edge, PairCase::Vertex] {
            let r = ss_rule(case, 4);
            let s: f64 = r.w.iter().sum();
            assert!((s - 1.0).abs() < 1e-13, "{case:?} {s}");
            assert!(r.w.iter().all(|&w| w > 0.0));
        }
    }
}
