//! Off-surface potentials ψ_ν, Ψ_κ, ∇ψ̃, Υ and the compound SL / DL.
//!
//! Each panel is integrated with an order picked from its distance band;
//! panels closer than one diameter are split until the pieces are.

use crate::geom::{self, CV3, P3};
use crate::kernels::{g_radial, KernelEval};
use crate::quad;
use crate::traces::{TraceSpaces, TraceVectorD, TraceVectorN};
use crate::{Error, Result, C64};

/// Distance bands (in panel diameters) and the per-band orders.
#[derive(Clone, Copy, Debug)]
pub struct PotentialQuadrature {
    pub far_order: usize,
    pub mid_order: usize,
    pub near_order: usize,
    pub far_ratio: f64,
    pub near_ratio: f64,
    pub max_depth: usize,
}

impl Default for PotentialQuadrature {
    fn default() -> Self {
        PotentialQuadrature { far_order: 3, mid_order: 7, near_order: 12, far_ratio: 4.0, near_ratio: 1.0, max_depth: 8 }
    }
}

/// Closest distance from x to triangle (a, b, c).
pub fn point_triangle_distance(x: P3, a: P3, b: P3, c: P3) -> f64 {
    let ab = geom::sub(b, a);
    let ac = geom::sub(c, a);
    let ap = geom::sub(x, a);
    let d1 = geom::dot(ab, ap);
    let d2 = geom::dot(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return geom::dist(x, a);
    }
    let bp = geom::sub(x, b);
    let d3 = geom::dot(ab, bp);
    let d4 = geom::dot(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return geom::dist(x, b);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return geom::dist(x, geom::add(a, geom::scale(v, ab)));
    }
    let cp = geom::sub(x, c);
    let d5 = geom::dot(ab, cp);
    let d6 = geom::dot(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return geom::dist(x, c);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return geom::dist(x, geom::add(a, geom::scale(w, ac)));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return geom::dist(x, geom::add(b, geom::scale(w, geom::sub(c, b))));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    geom::dist(x, geom::add(a, geom::add(geom::scale(v, ab), geom::scale(w, ac))))
}

type Sub = [[f64; 3]; 3];

fn mid(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5, (a[2] + b[2]) * 0.5]
}

/// Visit (panel, barycentric point, weight) for all panels as seen from x.
pub fn for_surface_points<F: FnMut(usize, &[f64; 3], f64)>(s: &TraceSpaces, q: &PotentialQuadrature, x: P3, f: &mut F) -> Result<()> {
    for (k, pa) in s.panels.iter().enumerate() {
        let root: Sub = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        visit(pa, k, q, x, &root, 0, 1.0, f)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn visit<F: FnMut(usize, &[f64; 3], f64)>(pa: &crate::traces::Panel, k: usize, q: &PotentialQuadrature, x: P3, sub: &Sub, depth: usize, frac: f64, f: &mut F) -> Result<()> {
    let c = [pa.point(&sub[0]), pa.point(&sub[1]), pa.point(&sub[2])];
    let diam = geom::dist(c[0], c[1]).max(geom::dist(c[1], c[2])).max(geom::dist(c[0], c[2]));
    let d = point_triangle_distance(x, c[0], c[1], c[2]);
    if d <= 1e-12 * pa.diam {
        return Err(Error::Domain("potential evaluated on the boundary".into()));
    }
    let ratio = d / diam;
    if ratio < q.near_ratio && depth < q.max_depth {
        let m01 = mid(&sub[0], &sub[1]);
        let m12 = mid(&sub[1], &sub[2]);
        let m20 = mid(&sub[2], &sub[0]);
        for child in [[sub[0], m01, m20], [m01, sub[1], m12], [m20, m12, sub[2]], [m01, m12, m20]] {
            visit(pa, k, q, x, &child, depth + 1, frac * 0.25, f)?;
        }
        return Ok(());
    }
    let n = if ratio > q.far_ratio {
        q.far_order
    } else if ratio >= q.near_ratio {
        q.mid_order
    } else {
        q.near_order
    };
    let rule = quad::tri_rule(n);
    let area = pa.area * frac;
    for (l, w) in rule.bary.iter().zip(&rule.w) {
        let mut lp = [0.0; 3];
        for (kk, corner) in sub.iter().enumerate() {
            for cc in 0..3 {
                lp[cc] += l[kk] * corner[cc];
            }
        }
        f(k, &lp, w * area);
    }
    Ok(())
}

/// Value, curl and η·div of a vector potential at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub u: CV3,
    pub curl: CV3,
    pub eta_div: C64,
}

impl FieldSample {
    pub fn zero() -> Self {
        FieldSample { u: geom::CZERO3, curl: geom::CZERO3, eta_div: C64::new(0.0, 0.0) }
    }
    pub fn add(&self, o: &FieldSample) -> Self {
        FieldSample { u: geom::cadd(self.u, o.u), curl: geom::cadd(self.curl, o.curl), eta_div: self.eta_div + o.eta_div }
    }
    pub fn scale(&self, a: C64) -> Self {
        let sc = |v: CV3| [a * v[0], a * v[1], a * v[2]];
        FieldSample { u: sc(self.u), curl: sc(self.curl), eta_div: a * self.eta_div }
    }
}

/// Potential evaluator bound to one boundary mesh and kernel.
pub struct Potentials<'a> {
    pub spaces: &'a TraceSpaces,
    pub kernel: &'a KernelEval,
    pub quad: PotentialQuadrature,
}

#[inline]
fn acc3(a: &mut CV3, s: C64, v: CV3) {
    a[0] += s * v[0];
    a[1] += s * v[1];
    a[2] += s * v[2];
}

#[inline]
fn acc3r(a: &mut CV3, s: C64, v: P3) {
    a[0] += s * v[0];
    a[1] += s * v[1];
    a[2] += s * v[2];
}

impl<'a> Potentials<'a> {
    pub fn new(spaces: &'a TraceSpaces, kernel: &'a KernelEval) -> Self {
        Potentials { spaces, kernel, quad: PotentialQuadrature::default() }
    }

    fn check_len(&self, n: usize, want: usize, what: &str) -> Result<()> {
        if n != want {
            return Err(Error::Dimension(format!("{what}: got {n} coefficients, expected {want}")));
        }
        Ok(())
    }

    /// ψ_ν(q)(x) for P0 coefficients.
    pub fn eval_scalar_sl(&self, q: &[C64], nu: C64, x: P3) -> Result<C64> {
        self.check_len(q.len(), self.spaces.n_tris(), "P0 density")?;
        let mut acc = C64::new(0.0, 0.0);
        for_surface_points(self.spaces, &self.quad, x, &mut |k, l, w| {
            let y = self.spaces.panels[k].point(l);
            acc += g_radial(nu, geom::dist(x, y)).0 * (q[k] * w);
        })?;
        Ok(acc)
    }

    /// Ψ_ν(p)(x) for RWG coefficients.
    pub fn eval_vector_sl(&self, p: &[C64], nu: C64, x: P3) -> Result<CV3> {
        self.check_len(p.len(), self.spaces.n_edges(), "RWG density")?;
        let mut acc = geom::CZERO3;
        for_surface_points(self.spaces, &self.quad, x, &mut |k, l, w| {
            let y = self.spaces.panels[k].point(l);
            let g = g_radial(nu, geom::dist(x, y)).0 * w;
            acc3(&mut acc, g, self.spaces.eval_div(k, p, l));
        })?;
        Ok(acc)
    }

    /// Ψ_κ(ξ n)(x) for P1 coefficients.
    pub fn eval_normal_sl(&self, xi: &[C64], x: P3) -> Result<CV3> {
        self.check_len(xi.len(), self.spaces.n_nodes(), "P1 density")?;
        let kappa = self.kernel.ctx.kappa;
        let mut acc = geom::CZERO3;
        for_surface_points(self.spaces, &self.quad, x, &mut |k, l, w| {
            let pa = &self.spaces.panels[k];
            let g = g_radial(kappa, geom::dist(x, pa.point(l))).0 * w;
            acc3r(&mut acc, g * self.spaces.eval_p1(k, xi, l), pa.n);
        })?;
        Ok(acc)
    }

    /// ∇ψ̃(f)(x) for P0 coefficients f (typically div_Γ p).
    pub fn eval_grad_psitilde(&self, f: &[C64], x: P3) -> Result<CV3> {
        self.check_len(f.len(), self.spaces.n_tris(), "P0 density")?;
        let mut acc = geom::CZERO3;
        for_surface_points(self.spaces, &self.quad, x, &mut |k, l, w| {
            let y = self.spaces.panels[k].point(l);
            let r = self.kernel.radial(geom::sub(x, y));
            acc3r(&mut acc, r.gr.0 * (f[k] * w), r.dhat);
        })?;
        Ok(acc)
    }

    /// Υ(ξ)(x) = ∫ ξ(y) 𝐆(x − y) n_y.
    pub fn eval_upsilon(&self, xi: &[C64], x: P3) -> Result<CV3> {
        self.check_len(xi.len(), self.spaces.n_nodes(), "P1 density")?;
        let mut acc = geom::CZERO3;
        for_surface_points(self.spaces, &self.quad, x, &mut |k, l, w| {
            let pa = &self.spaces.panels[k];
            let r = self.kernel.radial(geom::sub(x, pa.point(l)));
            acc3(&mut acc, self.spaces.eval_p1(k, xi, l) * w, r.matg_apply(pa.n));
        })?;
        Ok(acc)
    }

    /// SL(p⃗) = −Ψ_κ(p) − ∇ψ̃(div_Γ p) + ∇ψ_κ̃(q) with its curl and η·div.
    pub fn eval_sl_full(&self, n: &TraceVectorN, x: P3) -> Result<FieldSample> {
        let s = self.spaces;
        self.check_len(n.p.len(), s.n_edges(), "RWG density")?;
        self.check_len(n.q.len(), s.n_tris(), "P0 density")?;
        let k2 = self.kernel.ctx.kappa2;
        let mut out = FieldSample::zero();
        for_surface_points(s, &self.quad, x, &mut |k, l, w| {
            let pa = &s.panels[k];
            let r = self.kernel.radial(geom::sub(x, pa.point(l)));
            let p = s.eval_div(k, &n.p, l);
            let divp: C64 = (0..3).map(|i| n.p[pa.edge[i]] * pa.div[i]).sum();
            let q = n.q[k];
            acc3(&mut out.u, -r.gk.0 * w, p);
            acc3r(&mut out.u, (q * r.gt.1 - divp * r.gr.0) * w, r.dhat);
            // curl(−Ψp) = −∫∇G × p
            let gxp = geom::ccross(geom::cscale(r.gk.1, r.dhat), p);
            acc3(&mut out.curl, C64::new(-w, 0.0), gxp);
            out.eta_div -= r.gt.0 * (divp + k2 * q) * w;
        })?;
        Ok(out)
    }

    /// DL(η⃗) = curl Ψ_κ(η × n) + Υ(ξ) with its curl and η·div.
    pub fn eval_dl_full(&self, d: &TraceVectorD, x: P3) -> Result<FieldSample> {
        let s = self.spaces;
        self.check_len(d.eta.len(), s.n_edges(), "rotated-RWG density")?;
        self.check_len(d.xi.len(), s.n_nodes(), "P1 density")?;
        let k2 = self.kernel.ctx.kappa2;
        let mut out = FieldSample::zero();
        for_surface_points(s, &self.quad, x, &mut |k, l, w| {
            let pa = &s.panels[k];
            let r = self.kernel.radial(geom::sub(x, pa.point(l)));
            // η × n expands in RWG with the same coefficients
            let m = s.eval_div(k, &d.eta, l);
            let divm: C64 = (0..3).map(|i| d.eta[pa.edge[i]] * pa.div[i]).sum();
            let xi = s.eval_p1(k, &d.xi, l);
            let grad = geom::cscale(r.gk.1, r.dhat);
            let cw = C64::new(w, 0.0);
            acc3(&mut out.u, cw, geom::ccross(grad, m));
            acc3(&mut out.u, xi * w, r.matg_apply(pa.n));
            // curl curl Ψ(m) = ∇ψ(div m) + κ²Ψ(m); curl Υ(ξ) = curl Ψ(ξn)
            acc3(&mut out.curl, divm * w, grad);
            acc3(&mut out.curl, k2 * r.gk.0 * w, m);
            acc3(&mut out.curl, xi * w, geom::crcross(grad, pa.n));
            out.eta_div += xi * r.gt.1 * geom::dot(r.dhat, pa.n) * w;
        })?;
        Ok(out)
    }

    pub fn eval_sl(&self, n: &TraceVectorN, x: P3) -> Result<CV3> {
        Ok(self.eval_sl_full(n, x)?.u)
    }

    pub fn eval_dl(&self, d: &TraceVectorD, x: P3) -> Result<CV3> {
        Ok(self.eval_dl_full(d, x)?.u)
    }

    /// U = SL(n) + DL(d) on a grid. Near-surface points are computed all the
    /// same; points on Γ yield an error.
    pub fn reconstruct(&self, n: &TraceVectorN, d: &TraceVectorD, grid: &EvaluationGrid) -> Result<Vec<CV3>> {
        let vals: Vec<Result<CV3>> = crate::par_map(grid.points.len(), |i| {
            let x = grid.points[i];
            Ok(geom::cadd(self.eval_sl(n, x)?, self.eval_dl(d, x)?))
        });
        vals.into_iter().collect()
    }
}

/// Where a point sits relative to Γ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Interior,
    Exterior,
    NearSurface,
}

/// Evaluation points with side tags.
#[derive(Clone, Debug)]
pub struct EvaluationGrid {
    pub points: Vec<P3>,
    pub sides: Vec<Side>,
    /// Structured layout (nx, ny, nz) with origin and spacing, when regular.
    pub structured: Option<([usize; 3], P3, P3)>,
}

/// Solid-angle winding number of Γ around x (≈ 1 inside, 0 outside).
pub fn winding_number(s: &TraceSpaces, x: P3) -> f64 {
    let mut omega = 0.0;
    for pa in &s.panels {
        let a = geom::sub(pa.p[0], x);
        let b = geom::sub(pa.p[1], x);
        let c = geom::sub(pa.p[2], x);
        let (la, lb, lc) = (geom::norm(a), geom::norm(b), geom::norm(c));
        let num = geom::dot(a, geom::cross(b, c));
        let den = la * lb * lc + geom::dot(a, b) * lc + geom::dot(a, c) * lb + geom::dot(b, c) * la;
        omega += 2.0 * num.atan2(den);
    }
    omega / (4.0 * std::f64::consts::PI)
}

impl EvaluationGrid {
    pub fn from_points(s: &TraceSpaces, points: Vec<P3>) -> Self {
        let sides = points
            .iter()
            .map(|&x| {
                let near = s.panels.iter().any(|pa| point_triangle_distance(x, pa.p[0], pa.p[1], pa.p[2]) < 2.0 * pa.diam);
                if near {
                    Side::NearSurface
                } else if winding_number(s, x) > 0.5 {
                    Side::Interior
                } else {
                    Side::Exterior
                }
            })
            .collect();
        EvaluationGrid { points, sides, structured: None }
    }

    /// Regular grid, x fastest.
    pub fn structured(s: &TraceSpaces, lo: P3, hi: P3, dims: [usize; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Invalid("grid dimensions must be positive".into()));
        }
        let step = |a: usize| if dims[a] > 1 { (hi[a] - lo[a]) / (dims[a] - 1) as f64 } else { 0.0 };
        let h = [step(0), step(1), step(2)];
        let mut pts = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    pts.push([lo[0] + i as f64 * h[0], lo[1] + j as f64 * h[1], lo[2] + k as f64 * h[2]]);
                }
            }
        }
        let mut g = Self::from_points(s, pts);
        g.structured = Some((dims, lo, h));
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::WaveContext;
    use crate::mesh::{extract_boundary, gen_ball};

    fn sphere(level: usize) -> TraceSpaces {
        TraceSpaces::new(extract_boundary(&gen_ball(level).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn distance_to_triangle() {
        let (a, b, c) = ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert!((point_triangle_distance([0.2, 0.2, 0.5], a, b, c) - 0.5).abs() < 1e-15);
        assert!((point_triangle_distance([-1.0, -1.0, 0.0], a, b, c) - 2f64.sqrt()).abs() < 1e-15);
        assert!((point_triangle_distance([1.0, 1.0, 0.0], a, b, c) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((point_triangle_distance([0.5, -2.0, 0.0], a, b, c) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_charge_far_potential() {
        let s = sphere(2);
        let ke = KernelEval::new(WaveContext::from_kappa(0.0, 1.0).unwrap());
        let pot = Potentials::new(&s, &ke);
        let ones = vec![C64::new(1.0, 0.0); s.n_tris()];
        let v = pot.eval_scalar_sl(&ones, C64::new(0.0, 0.0), [0.0, 0.0, 2.0]).unwrap();
        // the flat geodesic sphere carries total charge = its area
        let area = s.bmesh.total_area();
        assert!((v.re - area / (8.0 * std::f64::consts::PI)).abs() < 1e-4 * v.re);
        assert!((v.re - 0.5).abs() < 0.02 * 0.5);
    }

    #[test]
    fn potential_on_boundary_is_rejected() {
        let s = sphere(0);
        let ke = KernelEval::new(WaveContext::from_kappa(1.0, 2.0).unwrap());
        let pot = Potentials::new(&s, &ke);
        let x = s.panels[3].centroid;
        assert!(pot.eval_scalar_sl(&vec![C64::new(1.0, 0.0); s.n_tris()], C64::new(1.0, 0.0), x).is_err());
    }

    #[test]
    fn inside_uniform_double_layer_is_constant() {
        // Gauss: ∫ ∇G₀·n_y dσ_y = 1 inside (d = x − y), 0 outside
        let s = sphere(1);
        let ke = KernelEval::new(WaveContext::from_kappa(0.0, 1.0).unwrap());
        let pot = Potentials::new(&s, &ke);
        let mut d = TraceVectorD::zeros(&s);
        d.xi = vec![C64::new(1.0, 0.0); s.n_nodes()];
        let inside = pot.eval_dl_full(&d, [0.1, -0.2, 0.15]).unwrap();
        let outside = pot.eval_dl_full(&d, [1.5, 0.3, 0.2]).unwrap();
        assert!((inside.eta_div - 1.0).norm() < 1e-8, "{}", inside.eta_div);
        assert!(outside.eta_div.norm() < 1e-8);
    }

    #[test]
    fn winding_and_tags() {
        let s = sphere(2);
        assert!((winding_number(&s, [0.1, 0.0, 0.0]) - 1.0).abs() < 1e-10);
        assert!(winding_number(&s, [3.0, 0.0, 0.0]).abs() < 1e-10);
        let g = EvaluationGrid::from_points(&s, vec![[0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [1.01, 0.0, 0.0]]);
        assert_eq!(g.sides, vec![Side::Interior, Side::Exterior, Side::NearSurface]);
    }

    #[test]
    fn zero_density_gives_zero() {
        let s = sphere(0);
        let ke = KernelEval::new(WaveContext::from_kappa(1.0, 2.0).unwrap());
        let pot = Potentials::new(&s, &ke);
        let x = [0.0, 0.5, 2.0];
        assert_eq!(pot.eval_sl_full(&TraceVectorN::zeros(&s), x).unwrap(), FieldSample::zero());
        assert_eq!(pot.eval_dl_full(&TraceVectorD::zeros(&s), x).unwrap(), FieldSample::zero());
    }

    #[test]
    fn eta_one_single_layer_is_vector_sl() {
        let s = sphere(1);
        let ke = KernelEval::new(WaveContext::from_kappa(1.3, 1.0).unwrap());
        let pot = Potentials::new(&s, &ke);
        let mut n = TraceVectorN::zeros(&s);
        n.p = (0..s.n_edges()).map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let x = [0.3, 1.8, -0.4];
        let a = pot.eval_sl(&n, x).unwrap();
        let b = pot.eval_vector_sl(&n.p, ke.ctx.kappa, x).unwrap();
        for i in 0..3 {
            assert!((a[i] + b[i]).norm() < 1e-14 * geom::cnorm(b));
        }
    }
}
