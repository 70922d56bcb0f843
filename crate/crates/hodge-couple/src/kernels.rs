//! Helmholtz fundamental solution, the regularized kernel
//! G̃ = (G_κ − G_κ̃)/κ² (derivatives only) and the matrix kernel 𝐆_κ.

use std::f64::consts::PI;

use crate::geom::{self, P3};
use crate::{Error, Result, C64};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Constant exterior coefficients and derived wavenumbers.
#[derive(Clone, Copy, Debug)]
pub struct WaveContext {
    /// ω², complex to allow lossy sweeps.
    pub omega2: C64,
    pub eps0: f64,
    pub mu0: f64,
    /// η = μ₀ε₀²
    pub eta: f64,
    pub kappa2: C64,
    pub kappa: C64,
    /// κ/√η
    pub kappa_t: C64,
}

impl WaveContext {
    pub fn new(omega: f64, eps0: f64, mu0: f64) -> Result<Self> {
        if !(omega >= 0.0) {
            return Err(Error::Invalid("omega must be ≥ 0".into()));
        }
        Self::with_omega2(C64::new(omega * omega, 0.0), eps0, mu0)
    }

    pub fn with_omega2(omega2: C64, eps0: f64, mu0: f64) -> Result<Self> {
        if !(eps0 > 0.0 && mu0 > 0.0) {
            return Err(Error::Invalid("eps0 and mu0 must be positive".into()));
        }
        let kappa2 = omega2 * (mu0 * eps0);
        if kappa2.re < 0.0 || kappa2.im < 0.0 {
            return Err(Error::Invalid("κ² must satisfy Re ≥ 0 and Im ≥ 0".into()));
        }
        let eta = mu0 * eps0 * eps0;
        let kappa = kappa2.sqrt();
        Ok(WaveContext { omega2, eps0, mu0, eta, kappa2, kappa, kappa_t: kappa / eta.sqrt() })
    }

    /// Context with ε₀ = 1, μ₀ = η and the given κ ≥ 0.
    pub fn from_kappa(kappa: f64, eta: f64) -> Result<Self> {
        Self::with_omega2(C64::new(kappa * kappa / eta, 0.0), 1.0, eta)
    }
}

/// e^{iνr}/(4πr)
#[inline]
pub fn g_val(nu: C64, r: f64) -> C64 {
    (I * nu * r).exp() / (4.0 * PI * r)
}

pub fn eval_g(nu: C64, d: P3) -> Result<C64> {
    let r = geom::norm(d);
    if r == 0.0 {
        return Err(Error::Domain("G evaluated at r = 0".into()));
    }
    Ok(g_val(nu, r))
}

/// ∇ₓ G_ν(x − y) with d = x − y.
pub fn eval_grad_g(nu: C64, d: P3) -> Result<[C64; 3]> {
    let r = geom::norm(d);
    if r == 0.0 {
        return Err(Error::Domain("∇G evaluated at r = 0".into()));
    }
    let f = g_val(nu, r);
    let s = (I * nu - 1.0 / r) * f / r;
    Ok([s * d[0], s * d[1], s * d[2]])
}

/// Radial data of G_ν: value and first two r-derivatives.
#[inline]
pub fn g_radial(nu: C64, r: f64) -> (C64, C64, C64) {
    let f = g_val(nu, r);
    let a = I * nu - 1.0 / r;
    (f, a * f, f * (a * a + 1.0 / (r * r)))
}

/// Hessian from radial derivatives: f'' d̂d̂ᵀ + (f'/r)(I − d̂d̂ᵀ).
#[inline]
pub fn radial_hess(dhat: P3, f2: C64, f1_over_r: C64) -> [[C64; 3]; 3] {
    let mut h = [[C64::new(0.0, 0.0); 3]; 3];
    let diff = f2 - f1_over_r;
    for i in 0..3 {
        for j in 0..3 {
            h[i][j] = diff * (dhat[i] * dhat[j]);
        }
        h[i][i] += f1_over_r;
    }
    h
}

/// (z−1)eᶻ + 1 = Σ_{m≥2} (m−1) zᵐ/m!, with eᶻ supplied by the caller.
#[inline]
fn phi_q_e(z: C64, ez: C64) -> C64 {
    if z.norm_sqr() > 0.01 {
        return (z - 1.0) * ez + 1.0;
    }
    let mut term = z; // z^m/m! at m = 1
    let mut sum = C64::new(0.0, 0.0);
    for m in 2..40 {
        term = term * z / m as f64;
        let t = term * (m as f64 - 1.0);
        sum += t;
        if t.norm() <= 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// (z² − 2z + 2)eᶻ − 2 = Σ_{m≥3} (m−1)(m−2) zᵐ/m!
#[inline]
fn phi_r_e(z: C64, ez: C64) -> C64 {
    if z.norm_sqr() > 0.01 {
        return (z * z - 2.0 * z + 2.0) * ez - 2.0;
    }
    let mut term = z * z / 2.0;
    let mut sum = C64::new(0.0, 0.0);
    for m in 3..40 {
        term = term * z / m as f64;
        let t = term * ((m as f64 - 1.0) * (m as f64 - 2.0));
        sum += t;
        if t.norm() <= 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// All radial kernel data at one separation.
#[derive(Clone, Copy, Debug)]
pub struct Radial {
    pub r: f64,
    pub dhat: P3,
    /// G_κ, G_κ', G_κ''
    pub gk: (C64, C64, C64),
    /// G_κ̃, G_κ̃', G_κ̃''
    pub gt: (C64, C64, C64),
    /// G̃', G̃'/r, G̃''
    pub gr: (C64, C64, C64),
}

impl Radial {
    #[inline]
    pub fn grad_gk(&self) -> [C64; 3] {
        geom::cscale(self.gk.1, self.dhat)
    }
    #[inline]
    pub fn grad_gt(&self) -> [C64; 3] {
        geom::cscale(self.gt.1, self.dhat)
    }
    #[inline]
    pub fn grad_gtilde(&self) -> [C64; 3] {
        geom::cscale(self.gr.0, self.dhat)
    }
    #[inline]
    pub fn hess_gtilde(&self) -> [[C64; 3]; 3] {
        radial_hess(self.dhat, self.gr.2, self.gr.1)
    }
    /// 𝐆_κ v = G_κ v + ∇²G̃ v
    #[inline]
    pub fn matg_apply(&self, v: P3) -> [C64; 3] {
        let dv = geom::dot(self.dhat, v);
        let a = self.gr.2 - self.gr.1;
        let c = self.gk.0 + self.gr.1;
        [c * v[0] + a * (dv * self.dhat[0]), c * v[1] + a * (dv * self.dhat[1]), c * v[2] + a * (dv * self.dhat[2])]
    }
    /// uᵀ 𝐆_κ v
    #[inline]
    pub fn matg_form(&self, u: P3, v: P3) -> C64 {
        let du = geom::dot(self.dhat, u);
        let dv = geom::dot(self.dhat, v);
        (self.gk.0 + self.gr.1) * geom::dot(u, v) + (self.gr.2 - self.gr.1) * (du * dv)
    }
}

/// Kernel evaluator bound to one wave context.
#[derive(Clone, Debug)]
pub struct KernelEval {
    pub ctx: WaveContext,
    pub series_threshold: f64,
    pub series_terms: usize,
    /// a_m for m = 2..=terms+1 (index m−2)
    coef: Vec<C64>,
    kmax: f64,
    null_tilde: bool,
    inv_den: C64,
}

impl KernelEval {
    pub fn new(ctx: WaveContext) -> Self {
        Self::with_series(ctx, 1e-2, 12)
    }

    pub fn with_series(ctx: WaveContext, series_threshold: f64, series_terms: usize) -> Self {
        let k = ctx.kappa;
        let eta = ctx.eta;
        let mut coef = Vec::with_capacity(series_terms);
        let mut fact = 2.0;
        for m in 2..(series_terms + 2) {
            if m > 2 {
                fact *= m as f64;
            }
            let im = I.powu(m as u32);
            let km2 = k.powu(m as u32 - 2);
            let c = im * km2 * (1.0 - eta.powf(-(m as f64) / 2.0)) / (4.0 * PI * fact);
            coef.push(c);
        }
        let kmax = ctx.kappa.norm().max(ctx.kappa_t.norm());
        let null_tilde = eta == 1.0;
        let inv_den = if kmax > 0.0 { 1.0 / (4.0 * PI * ctx.kappa2) } else { C64::new(0.0, 0.0) };
        let ke = KernelEval { ctx, series_threshold, series_terms, coef, kmax, null_tilde, inv_den };
        if kmax > 0.0 && !null_tilde {
            let r = series_threshold / kmax;
            let s = ke.gtilde_series(r);
            let c = ke.gtilde_closed(r);
            let rel = |a: C64, b: C64| (a - b).norm() / a.norm().max(1e-300);
            assert!(
                rel(s.0, c.0) < 1e-12 && rel(s.2, c.2) < 1e-12,
                "kernel branches disagree at the series threshold"
            );
        }
        ke
    }

    /// G̃', G̃'/r, G̃'' by the Taylor series in r.
    pub fn gtilde_series(&self, r: f64) -> (C64, C64, C64) {
        let mut d1 = C64::new(0.0, 0.0);
        let mut d1r = C64::new(0.0, 0.0);
        let mut d2 = C64::new(0.0, 0.0);
        // m = 2 term: a_2 r^0 in g', a_2/r in g'/r, nothing in g''
        let mut rp = 1.0; // r^{m−2}
        for (idx, a) in self.coef.iter().enumerate() {
            let m = (idx + 2) as f64;
            d1 += *a * ((m - 1.0) * rp);
            if idx >= 1 {
                // r^{m−3}
                let rm3 = rp / r;
                d2 += *a * ((m - 1.0) * (m - 2.0) * rm3);
            }
            rp *= r;
        }
        // g'/r from the same sum
        let mut rp = 1.0 / r;
        for (idx, a) in self.coef.iter().enumerate() {
            let m = (idx + 2) as f64;
            d1r += *a * ((m - 1.0) * rp);
            rp *= r;
        }
        (d1, d1r, d2)
    }

    /// G̃', G̃'/r, G̃'' in closed form through cancellation-free φ-functions.
    pub fn gtilde_closed(&self, r: f64) -> (C64, C64, C64) {
        let z = I * self.ctx.kappa * r;
        let w = I * self.ctx.kappa_t * r;
        self.closed_with(r, z, w, z.exp(), w.exp())
    }

    #[inline]
    fn closed_with(&self, r: f64, z: C64, w: C64, ez: C64, ew: C64) -> (C64, C64, C64) {
        let s = self.inv_den * (1.0 / (r * r));
        let q = (phi_q_e(z, ez) - phi_q_e(w, ew)) * s;
        let rr = (phi_r_e(z, ez) - phi_r_e(w, ew)) * (s * (1.0 / r));
        (q, q * (1.0 / r), rr)
    }

    #[inline]
    pub fn gtilde_radial(&self, r: f64) -> (C64, C64, C64) {
        if self.null_tilde {
            let z = C64::new(0.0, 0.0);
            return (z, z, z);
        }
        if self.kmax * r < self.series_threshold {
            self.gtilde_series(r)
        } else {
            self.gtilde_closed(r)
        }
    }

    /// Everything the assemblers need at separation d = x − y.
    #[inline]
    pub fn radial(&self, d: P3) -> Radial {
        let r = geom::norm(d);
        let dhat = geom::scale(1.0 / r, d);
        let z = I * self.ctx.kappa * r;
        let w = I * self.ctx.kappa_t * r;
        let ez = z.exp();
        let ew = if self.null_tilde { ez } else { w.exp() };
        let ir = 1.0 / r;
        let radial_of = |nu: C64, e: C64| {
            let f = e * (ir / (4.0 * PI));
            let a = C64::new(-nu.im - ir, nu.re);
            (f, a * f, f * (a * a + ir * ir))
        };
        let gr = if self.null_tilde {
            let o = C64::new(0.0, 0.0);
            (o, o, o)
        } else if self.kmax * r < self.series_threshold {
            self.gtilde_series(r)
        } else {
            self.closed_with(r, z, w, ez, ew)
        };
        Radial { r, dhat, gk: radial_of(self.ctx.kappa, ez), gt: radial_of(self.ctx.kappa_t, ew), gr }
    }

    fn check(d: P3) -> Result<f64> {
        let r = geom::norm(d);
        if r == 0.0 {
            return Err(Error::Domain("kernel evaluated at r = 0".into()));
        }
        Ok(r)
    }

    pub fn eval_gtilde_grad(&self, d: P3) -> Result<[C64; 3]> {
        let r = Self::check(d)?;
        let (d1, _, _) = self.gtilde_radial(r);
        Ok(geom::cscale(d1, geom::scale(1.0 / r, d)))
    }

    pub fn eval_gtilde_hess(&self, d: P3) -> Result<[[C64; 3]; 3]> {
        let r = Self::check(d)?;
        let (_, d1r, d2) = self.gtilde_radial(r);
        Ok(radial_hess(geom::scale(1.0 / r, d), d2, d1r))
    }

    pub fn eval_mat_g(&self, d: P3) -> Result<[[C64; 3]; 3]> {
        let r = Self::check(d)?;
        let mut h = self.eval_gtilde_hess(d)?;
        let g = g_val(self.ctx.kappa, r);
        for i in 0..3 {
            h[i][i] += g;
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn static_values() {
        let z = C64::new(0.0, 0.0);
        assert!((eval_g(z, [1.0, 0.0, 0.0]).unwrap().re - 0.0795775).abs() < 1e-7);
        let d = [0.3, -0.4, 1.2];
        let r = geom::norm(d);
        let g = eval_grad_g(z, d).unwrap();
        for i in 0..3 {
            assert!((g[i].re + d[i] / r / (4.0 * PI * r * r)).abs() < 1e-15);
        }
        assert!(eval_g(z, [0.0; 3]).is_err());
    }

    #[test]
    fn gradient_vs_finite_differences() {
        let nu = C64::new(2.0, 0.0);
        let d = [0.3, 0.4, 0.0];
        let g = eval_grad_g(nu, d).unwrap();
        let h = 1e-3;
        // sixth-order central differences
        let c = [(-3.0, -1.0 / 60.0), (-2.0, 3.0 / 20.0), (-1.0, -3.0 / 4.0), (1.0, 3.0 / 4.0), (2.0, -3.0 / 20.0), (3.0, 1.0 / 60.0)];
        for i in 0..3 {
            let mut s = C64::new(0.0, 0.0);
            for (o, w) in c {
                let mut p = d;
                p[i] += o * h;
                s += eval_g(nu, p).unwrap() * w;
            }
            s /= h;
            assert!((s - g[i]).norm() < 1e-8 * geom::cnorm(g));
        }
    }

    #[test]
    fn static_limit_value() {
        let ke = KernelEval::new(WaveContext::from_kappa(0.0, 4.0).unwrap());
        let g = ke.eval_gtilde_grad([1.0, 0.0, 0.0]).unwrap();
        assert!((g[0].re + 0.75 / (8.0 * PI)).abs() < 1e-15);
        assert!((g[0].re + 0.0298416).abs() < 1e-7);
        assert!(g[1].norm() == 0.0 && g[2].norm() == 0.0);
        let ke6 = KernelEval::new(WaveContext::from_kappa(1e-6, 4.0).unwrap());
        let g6 = ke6.gtilde_closed(1.0);
        assert!((g6.0.re + 0.75 / (8.0 * PI)).abs() < 1e-6);
    }

    #[test]
    fn eta_one_vanishes() {
        let ke = KernelEval::new(WaveContext::from_kappa(1.3, 1.0).unwrap());
        let d = [0.2, 0.1, -0.3];
        assert!(geom::cnorm(ke.eval_gtilde_grad(d).unwrap()) == 0.0);
        let m = ke.eval_mat_g(d).unwrap();
        let g = eval_g(ke.ctx.kappa, d).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { g } else { C64::new(0.0, 0.0) };
                assert!((m[i][j] - e).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn branches_agree_across_threshold() {
        for &(k, eta) in &[(1.0, 2.0), (3.0, 4.0), (0.5, 0.25), (2.0, 9.0)] {
            let ke = KernelEval::new(WaveContext::from_kappa(k, eta).unwrap());
            let kmax = ke.kmax;
            for s in [0.5, 0.75, 1.0, 1.25, 1.5] {
                let r = s * ke.series_threshold / kmax;
                let a = ke.gtilde_series(r);
                let b = ke.gtilde_closed(r);
                assert!(rel(a.0, b.0) < 1e-11, "grad {k} {eta} {s} {}", rel(a.0, b.0));
                assert!(rel(a.1, b.1) < 1e-11);
                assert!(rel(a.2, b.2) < 1e-11, "hess {k} {eta} {s} {}", rel(a.2, b.2));
            }
        }
    }

    #[test]
    fn static_continuity() {
        let k0 = KernelEval::new(WaveContext::from_kappa(0.0, 3.0).unwrap());
        let k1 = KernelEval::new(WaveContext::from_kappa(1e-7, 3.0).unwrap());
        for d in [[0.3, 0.1, 0.0], [2.0, -1.0, 0.5], [1e-3, 0.0, 2e-3]] {
            let a = k0.eval_gtilde_hess(d).unwrap();
            let b = k1.eval_gtilde_hess(d).unwrap();
            let na: f64 = a.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let nd: f64 = a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
            assert!(nd < 1e-6 * na);
        }
    }

    #[test]
    fn singularity_orders() {
        let ke = KernelEval::new(WaveContext::from_kappa(1.0, 2.0).unwrap());
        let dir = geom::normalize([0.3, -0.2, 0.9]);
        for e in 1..=8 {
            let r = 10f64.powi(-e);
            let d = geom::scale(r, dir);
            assert!(r * eval_g(ke.ctx.kappa, d).unwrap().norm() < 0.1);
            assert!(r * r * geom::cnorm(eval_grad_g(ke.ctx.kappa, d).unwrap()) < 0.1);
            let h = ke.eval_gtilde_hess(d).unwrap();
            let hn: f64 = h.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            assert!(r * hn < 0.1);
        }
    }

    #[test]
    fn reciprocity_and_symmetry() {
        let ke = KernelEval::new(WaveContext::from_kappa(1.7, 2.5).unwrap());
        let d = [0.31, -0.72, 0.45];
        let a = ke.eval_mat_g(d).unwrap();
        let b = ke.eval_mat_g(geom::scale(-1.0, d)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[i][j] - b[j][i]).norm() < 1e-13);
                assert!((a[i][j] - a[j][i]).norm() < 1e-13);
            }
        }
    }

    fn matg_col(ke: &KernelEval, x: P3, c: P3) -> [C64; 3] {
        let m = ke.eval_mat_g(x).unwrap();
        [0, 1, 2].map(|i| m[i][0] * c[0] + m[i][1] * c[1] + m[i][2] * c[2])
    }

    #[test]
    fn hodge_helmholtz_residual() {
        // −Δ_η u − κ²u = curl curl u − η∇div u − κ²u = −Δu − (η−1)∇div u − κ²u
        let ke = KernelEval::new(WaveContext::from_kappa(1.2, 2.0).unwrap());
        let c = [0.2, -0.5, 0.7];
        let x = [0.9, 0.4, -0.6];
        let h = 2e-3;
        let f = |p: P3| matg_col(&ke, p, c);
        let w = [(-2.0, -1.0 / 12.0), (-1.0, 4.0 / 3.0), (0.0, -5.0 / 2.0), (1.0, 4.0 / 3.0), (2.0, -1.0 / 12.0)];
        let mut lap = [C64::new(0.0, 0.0); 3];
        for i in 0..3 {
            for (o, wt) in w {
                let mut p = x;
                p[i] += o * h;
                let v = f(p);
                for k in 0..3 {
                    lap[k] += v[k] * (wt / (h * h));
                }
            }
        }
        // ∇div via mixed differences, fourth order
        let d1 = [(-2.0, 1.0 / 12.0), (-1.0, -2.0 / 3.0), (1.0, 2.0 / 3.0), (2.0, -1.0 / 12.0)];
        let mut gd = [C64::new(0.0, 0.0); 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut s = C64::new(0.0, 0.0);
                if i == j {
                    for (o, wt) in w {
                        let mut p = x;
                        p[i] += o * h;
                        s += f(p)[j] * (wt / (h * h));
                    }
                } else {
                    for (oi, wi) in d1 {
                        for (oj, wj) in d1 {
                            let mut p = x;
                            p[i] += oi * h;
                            p[j] += oj * h;
                            s += f(p)[j] * (wi * wj / (h * h));
                        }
                    }
                }
                gd[i] += s;
            }
        }
        let u = f(x);
        let eta = ke.ctx.eta;
        let k2 = ke.ctx.kappa2;
        let res: Vec<C64> = (0..3).map(|k| -lap[k] - gd[k] * (eta - 1.0) - k2 * u[k]).collect();
        let rn = res.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let scale = lap.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(rn < 1e-6 * scale, "{rn} {scale}");
    }
}
