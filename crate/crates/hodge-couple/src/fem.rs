//! Lowest-order edge (Nédélec) and nodal elements on tetrahedra; the mixed
//! interior form and the source functional.

use std::collections::{BTreeMap, HashMap};

use faer::sparse::{SparseColMat, Triplet};

use crate::geom::{self, CV3, P3};
use crate::kernels::WaveContext;
use crate::mesh::VolumeMesh;
use crate::quad;
use crate::{Error, Result, C64};

pub type SpMat = SparseColMat<usize, C64>;

pub const LOCAL_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Edge dofs with canonical orientation low → high vertex index.
#[derive(Clone, Debug)]
pub struct EdgeSpace {
    pub edges: Vec<[usize; 2]>,
    pub tet_dofs: Vec<[usize; 6]>,
    pub tet_signs: Vec<[f64; 6]>,
    pub index: HashMap<(usize, usize), usize>,
}

impl EdgeSpace {
    pub fn new(mesh: &VolumeMesh) -> Self {
        let mut edges = Vec::new();
        let mut index = HashMap::new();
        let mut tet_dofs = Vec::with_capacity(mesh.tets.len());
        let mut tet_signs = Vec::with_capacity(mesh.tets.len());
        for t in &mesh.tets {
            let mut d = [0; 6];
            let mut s = [0.0; 6];
            for (k, &(i, j)) in LOCAL_EDGES.iter().enumerate() {
                let (a, b) = (t[i], t[j]);
                let key = (a.min(b), a.max(b));
                let id = *index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edges.len() - 1
                });
                d[k] = id;
                s[k] = if a < b { 1.0 } else { -1.0 };
            }
            tet_dofs.push(d);
            tet_signs.push(s);
        }
        EdgeSpace { edges, tet_dofs, tet_signs, index }
    }

    pub fn ndofs(&self) -> usize {
        self.edges.len()
    }
}

/// Continuous P1 on the volume mesh; dof = vertex.
#[derive(Clone, Debug)]
pub struct NodalSpace {
    pub n: usize,
}

impl NodalSpace {
    pub fn new(mesh: &VolumeMesh) -> Self {
        NodalSpace { n: mesh.vertices.len() }
    }
    pub fn ndofs(&self) -> usize {
        self.n
    }
}

/// Absolute μ, ε per region tag.
#[derive(Clone, Debug)]
pub struct MaterialField {
    pub default: (C64, C64),
    pub regions: BTreeMap<i32, (C64, C64)>,
}

impl MaterialField {
    pub fn uniform(mu: C64, eps: C64) -> Result<Self> {
        let m = MaterialField { default: (mu, eps), regions: BTreeMap::new() };
        m.validate()?;
        Ok(m)
    }

    /// Exterior constants everywhere (no contrast).
    pub fn matching(ctx: &WaveContext) -> Self {
        MaterialField { default: (C64::new(ctx.mu0, 0.0), C64::new(ctx.eps0, 0.0)), regions: BTreeMap::new() }
    }

    pub fn with_region(mut self, tag: i32, mu: C64, eps: C64) -> Result<Self> {
        self.regions.insert(tag, (mu, eps));
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (mu, eps) in std::iter::once(&self.default).chain(self.regions.values()) {
            for (name, v) in [("mu", mu), ("eps", eps)] {
                if !(v.re > 0.0) || v.im < 0.0 {
                    return Err(Error::Invalid(format!("{name} = {v} violates Re > 0, Im ≥ 0")));
                }
            }
        }
        Ok(())
    }

    pub fn mu(&self, tag: i32) -> C64 {
        self.regions.get(&tag).map(|p| p.0).unwrap_or(self.default.0)
    }

    pub fn eps(&self, tag: i32) -> C64 {
        self.regions.get(&tag).map(|p| p.1).unwrap_or(self.default.1)
    }
}

/// Per-tet geometry for the local basis.
pub struct TetGeom {
    pub p: [P3; 4],
    pub vol: f64,
    pub grads: [P3; 4],
    pub len: [f64; 6],
}

impl TetGeom {
    pub fn new(mesh: &VolumeMesh, k: usize) -> Result<Self> {
        let p = mesh.tet_points(k);
        let vol = geom::tet_volume(&p);
        if !(vol > 0.0) {
            return Err(Error::Mesh(format!("degenerate tet {k}")));
        }
        let grads = geom::tet_bary_grads(&p);
        let mut len = [0.0; 6];
        for (e, &(i, j)) in LOCAL_EDGES.iter().enumerate() {
            len[e] = geom::dist(p[i], p[j]);
        }
        Ok(TetGeom { p, vol, grads, len })
    }

    /// Local edge functions (local orientation i → j), including the ℓ factor.
    pub fn edge_basis(&self, l: &[f64; 4]) -> [P3; 6] {
        let mut b = [[0.0; 3]; 6];
        for (e, &(i, j)) in LOCAL_EDGES.iter().enumerate() {
            let v = geom::sub(geom::scale(l[i], self.grads[j]), geom::scale(l[j], self.grads[i]));
            b[e] = geom::scale(self.len[e], v);
        }
        b
    }

    /// Constant curls of the local edge functions.
    pub fn edge_curls(&self) -> [P3; 6] {
        let mut c = [[0.0; 3]; 6];
        for (e, &(i, j)) in LOCAL_EDGES.iter().enumerate() {
            c[e] = geom::scale(2.0 * self.len[e], geom::cross(self.grads[i], self.grads[j]));
        }
        c
    }

    pub fn point(&self, l: &[f64; 4]) -> P3 {
        let mut x = [0.0; 3];
        for k in 0..4 {
            x = geom::add(x, geom::scale(l[k], self.p[k]));
        }
        x
    }
}

/// The four sparse blocks of the interior mixed form.
#[derive(Clone, Debug)]
pub struct VolumeForm {
    pub a_cc: SpMat,
    pub g_mix: SpMat,
    pub m_p: SpMat,
    pub m_eps: SpMat,
}

fn to_sparse(n: usize, m: usize, t: &[Triplet<usize, usize, C64>]) -> SpMat {
    SparseColMat::try_new_from_triplets(n, m, t).expect("triplet assembly")
}

/// y = A x
pub fn spmv(a: &SpMat, x: &[C64]) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); a.nrows()];
    for t in a.triplet_iter() {
        y[t.row] += *t.val * x[t.col];
    }
    y
}

/// y = Aᵀ x
pub fn spmv_t(a: &SpMat, x: &[C64]) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); a.ncols()];
    for t in a.triplet_iter() {
        y[t.col] += *t.val * x[t.row];
    }
    y
}

struct LocalBlocks {
    acc: [[C64; 6]; 6],
    meps: [[C64; 6]; 6],
    gmix: [[C64; 4]; 6],
    mp: [[f64; 4]; 4],
}

fn local_blocks(g: &TetGeom, mu: C64, eps: C64, signs: &[f64; 6]) -> LocalBlocks {
    let curls = g.edge_curls();
    let rule = quad::tet_rule(2);
    let mut acc = [[C64::new(0.0, 0.0); 6]; 6];
    let mut meps = [[C64::new(0.0, 0.0); 6]; 6];
    let mut gmix = [[C64::new(0.0, 0.0); 4]; 6];
    let mut mp = [[0.0; 4]; 4];
    let inv_mu = 1.0 / mu;
    for i in 0..6 {
        for j in 0..6 {
            acc[i][j] = inv_mu * (signs[i] * signs[j] * g.vol * geom::dot(curls[i], curls[j]));
        }
    }
    let mut mm = [[0.0; 6]; 6];
    let mut gg = [[0.0; 4]; 6];
    for (l, w) in rule.bary.iter().zip(&rule.w) {
        let b = g.edge_basis(l);
        let wv = w * g.vol;
        for i in 0..6 {
            for j in 0..6 {
                mm[i][j] += wv * geom::dot(b[i], b[j]);
            }
            for k in 0..4 {
                gg[i][k] += wv * geom::dot(g.grads[k], b[i]);
            }
        }
        for a in 0..4 {
            for c in 0..4 {
                mp[a][c] += wv * l[a] * l[c];
            }
        }
    }
    for i in 0..6 {
        for j in 0..6 {
            meps[i][j] = eps * (signs[i] * signs[j] * mm[i][j]);
        }
        for k in 0..4 {
            gmix[i][k] = eps * (signs[i] * gg[i][k]);
        }
    }
    LocalBlocks { acc, meps, gmix, mp }
}

/// A_cc = (μ⁻¹ curl b_j, curl b_i), G_mix = (ε∇q_k, b_i), M_P = (q_l, q_k),
/// M_ε = (ε b_j, b_i).
pub fn assemble_volume_form(mesh: &VolumeMesh, edge: &EdgeSpace, nodal: &NodalSpace, mat: &MaterialField) -> Result<VolumeForm> {
    mat.validate()?;
    let locals: Vec<Result<LocalBlocks>> = crate::par_map(mesh.tets.len(), |k| {
        let g = TetGeom::new(mesh, k)?;
        let tag = mesh.regions[k];
        Ok(local_blocks(&g, mat.mu(tag), mat.eps(tag), &edge.tet_signs[k]))
    });
    let ne = edge.ndofs();
    let nn = nodal.ndofs();
    let mut ta = Vec::with_capacity(36 * mesh.tets.len());
    let mut tm = Vec::with_capacity(36 * mesh.tets.len());
    let mut tg = Vec::with_capacity(24 * mesh.tets.len());
    let mut tp = Vec::with_capacity(16 * mesh.tets.len());
    for (k, lb) in locals.into_iter().enumerate() {
        let lb = lb?;
        let d = &edge.tet_dofs[k];
        let t = &mesh.tets[k];
        for i in 0..6 {
            for j in 0..6 {
                ta.push(Triplet::new(d[i], d[j], lb.acc[i][j]));
                tm.push(Triplet::new(d[i], d[j], lb.meps[i][j]));
            }
            for c in 0..4 {
                tg.push(Triplet::new(d[i], t[c], lb.gmix[i][c]));
            }
        }
        for a in 0..4 {
            for c in 0..4 {
                tp.push(Triplet::new(t[a], t[c], C64::new(lb.mp[a][c], 0.0)));
            }
        }
    }
    Ok(VolumeForm { a_cc: to_sparse(ne, ne, &ta), g_mix: to_sparse(ne, nn, &tg), m_p: to_sparse(nn, nn, &tp), m_eps: to_sparse(ne, ne, &tm) })
}

impl VolumeForm {
    /// 𝔅((U,P),(V,Q)) as the bilinear pairing of coefficient vectors.
    pub fn bilinear(&self, omega2: C64, u: &[C64], p: &[C64], v: &[C64], q: &[C64]) -> C64 {
        let au = spmv(&self.a_cc, u);
        let mu = spmv(&self.m_eps, u);
        let gp = spmv(&self.g_mix, p);
        let mp = spmv(&self.m_p, p);
        let gq = spmv(&self.g_mix, q);
        let dot = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<C64>();
        let t1: C64 = dot(v, &au) - omega2 * dot(v, &mu);
        t1 + dot(v, &gp) + dot(q, &mp) - dot(&gq, u)
    }
}

/// (∇λ_l, ∇λ_k) over all tets.
pub fn assemble_nodal_stiffness(mesh: &VolumeMesh) -> Result<SpMat> {
    let mut t = Vec::with_capacity(16 * mesh.tets.len());
    for k in 0..mesh.tets.len() {
        let g = TetGeom::new(mesh, k)?;
        let tet = mesh.tets[k];
        for a in 0..4 {
            for c in 0..4 {
                t.push(Triplet::new(tet[a], tet[c], C64::new(g.vol * geom::dot(g.grads[a], g.grads[c]), 0.0)));
            }
        }
    }
    let n = mesh.vertices.len();
    Ok(to_sparse(n, n, &t))
}

/// Entry i = ∫ J·b_i, per-tet quadrature exact for degree 5.
pub fn assemble_source(mesh: &VolumeMesh, edge: &EdgeSpace, j: &(dyn Fn(P3) -> CV3 + Sync)) -> Result<Vec<C64>> {
    let rule = quad::tet_rule(3);
    let locals: Vec<Result<[C64; 6]>> = crate::par_map(mesh.tets.len(), |k| {
        let g = TetGeom::new(mesh, k)?;
        let mut f = [C64::new(0.0, 0.0); 6];
        for (l, w) in rule.bary.iter().zip(&rule.w) {
            let jv = j(g.point(l));
            let b = g.edge_basis(l);
            for i in 0..6 {
                f[i] += geom::rcdot(b[i], jv) * (w * g.vol * edge.tet_signs[k][i]);
            }
        }
        Ok(f)
    });
    let mut out = vec![C64::new(0.0, 0.0); edge.ndofs()];
    for (k, f) in locals.into_iter().enumerate() {
        let f = f?;
        for i in 0..6 {
            out[edge.tet_dofs[k][i]] += f[i];
        }
    }
    Ok(out)
}

/// Edge interpolant: dof_e = (1/ℓ) ∫_e f·t ds (t unit, low → high vertex).
pub fn interpolate_edge(mesh: &VolumeMesh, edge: &EdgeSpace, f: &(dyn Fn(P3) -> CV3 + Sync)) -> Vec<C64> {
    let (gx, gw) = quad::gauss_legendre01(6);
    crate::par_map(edge.ndofs(), |e| {
        let [a, b] = edge.edges[e];
        let pa = mesh.vertices[a];
        let d = geom::sub(mesh.vertices[b], pa);
        let mut s = C64::new(0.0, 0.0);
        for (x, w) in gx.iter().zip(&gw) {
            s += geom::rcdot(d, f(geom::add(pa, geom::scale(*x, d)))) * *w;
        }
        // ∫_e f·t ds /ℓ = ∫_0^1 f·d dx / ℓ
        s / geom::norm(d)
    })
}

pub fn interpolate_nodal(mesh: &VolumeMesh, f: &(dyn Fn(P3) -> C64 + Sync)) -> Vec<C64> {
    mesh.vertices.iter().map(|p| f(*p)).collect()
}

/// U and curl U at barycentric point `l` of tet k.
pub fn eval_edge_field(g: &TetGeom, dofs: &[usize; 6], signs: &[f64; 6], u: &[C64], l: &[f64; 4]) -> (CV3, CV3) {
    let b = g.edge_basis(l);
    let c = g.edge_curls();
    let mut v = geom::CZERO3;
    let mut cv = geom::CZERO3;
    for i in 0..6 {
        let coef = u[dofs[i]] * signs[i];
        v = geom::cadd(v, geom::cscale(coef, b[i]));
        cv = geom::cadd(cv, geom::cscale(coef, c[i]));
    }
    (v, cv)
}

/// Squared L² error of U and of curl U against exact fields.
pub fn edge_errors(
    mesh: &VolumeMesh,
    edge: &EdgeSpace,
    u: &[C64],
    exact: &(dyn Fn(P3) -> CV3 + Sync),
    exact_curl: &(dyn Fn(P3) -> CV3 + Sync),
) -> Result<(f64, f64)> {
    let rule = quad::tet_rule(3);
    let parts: Vec<Result<(f64, f64)>> = crate::par_map(mesh.tets.len(), |k| {
        let g = TetGeom::new(mesh, k)?;
        let mut e0 = 0.0;
        let mut e1 = 0.0;
        for (l, w) in rule.bary.iter().zip(&rule.w) {
            let x = g.point(l);
            let (v, cv) = eval_edge_field(&g, &edge.tet_dofs[k], &edge.tet_signs[k], u, l);
            e0 += w * g.vol * geom::cnorm(geom::csub(v, exact(x))).powi(2);
            e1 += w * g.vol * geom::cnorm(geom::csub(cv, exact_curl(x))).powi(2);
        }
        Ok((e0, e1))
    });
    let mut s = (0.0, 0.0);
    for p in parts {
        let p = p?;
        s.0 += p.0;
        s.1 += p.1;
    }
    Ok(s)
}

/// Squared L² errors of P and ∇P.
pub fn nodal_errors(
    mesh: &VolumeMesh,
    p: &[C64],
    exact: &(dyn Fn(P3) -> C64 + Sync),
    exact_grad: &(dyn Fn(P3) -> CV3 + Sync),
) -> Result<(f64, f64)> {
    let rule = quad::tet_rule(3);
    let parts: Vec<Result<(f64, f64)>> = crate::par_map(mesh.tets.len(), |k| {
        let g = TetGeom::new(mesh, k)?;
        let t = mesh.tets[k];
        let mut grad = geom::CZERO3;
        for a in 0..4 {
            grad = geom::cadd(grad, geom::cscale(p[t[a]], g.grads[a]));
        }
        let mut e0 = 0.0;
        let mut e1 = 0.0;
        for (l, w) in rule.bary.iter().zip(&rule.w) {
            let x = g.point(l);
            let v: C64 = (0..4).map(|a| p[t[a]] * l[a]).sum();
            e0 += w * g.vol * (v - exact(x)).norm_sqr();
            e1 += w * g.vol * geom::cnorm(geom::csub(grad, exact_grad(x))).powi(2);
        }
        Ok((e0, e1))
    });
    let mut s = (0.0, 0.0);
    for p in parts {
        let p = p?;
        s.0 += p.0;
        s.1 += p.1;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_cube;

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn constant_pressure_pairing() {
        let m = gen_cube(2).unwrap();
        let e = EdgeSpace::new(&m);
        let n = NodalSpace::new(&m);
        let f = assemble_volume_form(&m, &e, &n, &MaterialField::uniform(one(), one()).unwrap()).unwrap();
        let u = vec![C64::new(0.0, 0.0); e.ndofs()];
        let p = vec![one(); n.ndofs()];
        let b = f.bilinear(C64::new(0.0, 0.0), &u, &p, &u, &p);
        assert!((b - 1.0).norm() < 1e-12);
    }

    #[test]
    fn gradients_have_no_curl() {
        let m = gen_cube(2).unwrap();
        let e = EdgeSpace::new(&m);
        let n = NodalSpace::new(&m);
        let f = assemble_volume_form(&m, &e, &n, &MaterialField::uniform(one(), one()).unwrap()).unwrap();
        let phi = |p: P3| p[0] * p[0] - 2.0 * p[1] * p[2] + p[2];
        let u: Vec<C64> = e
            .edges
            .iter()
            .map(|[a, b]| C64::new((phi(m.vertices[*b]) - phi(m.vertices[*a])) / geom::dist(m.vertices[*a], m.vertices[*b]), 0.0))
            .collect();
        let au = spmv(&f.a_cc, &u);
        let s: C64 = u.iter().zip(&au).map(|(a, b)| a * b).sum();
        assert!(s.norm() < 1e-12);
    }

    #[test]
    fn curl_curl_matches_brute_force() {
        let m = VolumeMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], vec![[0, 1, 2, 3]], vec![0]).unwrap();
        let e = EdgeSpace::new(&m);
        let n = NodalSpace::new(&m);
        let f = assemble_volume_form(&m, &e, &n, &MaterialField::uniform(one(), one()).unwrap()).unwrap();
        let g = TetGeom::new(&m, 0).unwrap();
        // curl by central differences of the basis, high-order rule
        let rule = quad::tet_rule(4);
        let h = 1e-5;
        let mut brute = [[0.0; 6]; 6];
        let curl_at = |x: P3| -> [P3; 6] {
            let bary = |x: P3| -> [f64; 4] {
                let l1 = x[0];
                let l2 = x[1];
                let l3 = x[2];
                [1.0 - l1 - l2 - l3, l1, l2, l3]
            };
            let mut d = [[[0.0; 3]; 3]; 6];
            for k in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                let bp = g.edge_basis(&bary(xp));
                let bm = g.edge_basis(&bary(xm));
                for i in 0..6 {
                    for c in 0..3 {
                        d[i][c][k] = (bp[i][c] - bm[i][c]) / (2.0 * h);
                    }
                }
            }
            let mut out = [[0.0; 3]; 6];
            for i in 0..6 {
                out[i] = [d[i][2][1] - d[i][1][2], d[i][0][2] - d[i][2][0], d[i][1][0] - d[i][0][1]];
            }
            out
        };
        for (l, w) in rule.bary.iter().zip(&rule.w) {
            let c = curl_at(g.point(l));
            for i in 0..6 {
                for j in 0..6 {
                    brute[i][j] += w * g.vol * geom::dot(c[i], c[j]);
                }
            }
        }
        let dense = f.a_cc.to_dense();
        for i in 0..6 {
            for j in 0..6 {
                let li = e.tet_dofs[0].iter().position(|&d| d == i).unwrap();
                let lj = e.tet_dofs[0].iter().position(|&d| d == j).unwrap();
                let s = e.tet_signs[0][li] * e.tet_signs[0][lj];
                assert!((dense[(i, j)].re - s * brute[li][lj]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn constant_source_reproduces_norm() {
        let m = gen_cube(1).unwrap();
        let e = EdgeSpace::new(&m);
        let c = [C64::new(0.3, 0.1), C64::new(-1.2, 0.0), C64::new(0.5, -0.4)];
        let src = assemble_source(&m, &e, &|_| c).unwrap();
        let ci = interpolate_edge(&m, &e, &|_| c);
        // ∫ c·c (bilinear, no conjugation)
        let s: C64 = src.iter().zip(&ci).map(|(a, b)| a * b).sum();
        let exact = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
        assert!((s - exact).norm() < 1e-10);
        let zero = assemble_source(&m, &e, &|_| geom::CZERO3).unwrap();
        assert!(zero.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn localized_source() {
        let m = gen_cube(2).unwrap();
        let e = EdgeSpace::new(&m);
        let g = TetGeom::new(&m, 5).unwrap();
        let c = geom::scale(0.25, geom::add(geom::add(g.p[0], g.p[1]), geom::add(g.p[2], g.p[3])));
        // indicator of a small ball inside tet 5 only
        let r = 0.2 * (g.vol).cbrt();
        let j = move |x: P3| if geom::dist(x, c) < r { [C64::new(1.0, 0.0); 3] } else { geom::CZERO3 };
        let src = assemble_source(&m, &e, &j).unwrap();
        for (i, v) in src.iter().enumerate() {
            if v.norm() > 0.0 {
                assert!(e.tet_dofs[5].contains(&i));
            }
        }
    }

    #[test]
    fn rotational_patch_test() {
        // U = ½ a × x has curl U = a
        let m = gen_cube(2).unwrap();
        let e = EdgeSpace::new(&m);
        let n = NodalSpace::new(&m);
        let mu = C64::new(2.0, 0.0);
        let f = assemble_volume_form(&m, &e, &n, &MaterialField::uniform(mu, one()).unwrap()).unwrap();
        let a = [0.3, -0.7, 1.1];
        let u = interpolate_edge(&m, &e, &|x| geom::cscale(C64::new(0.5, 0.0), geom::cross(a, x)));
        let au = spmv(&f.a_cc, &u);
        let s: C64 = u.iter().zip(&au).map(|(x, y)| x * y).sum();
        assert!((s - geom::dot(a, a) / mu).norm() < 1e-12);
    }

    #[test]
    fn mixed_block_pairing() {
        let m = gen_cube(2).unwrap();
        let e = EdgeSpace::new(&m);
        let n = NodalSpace::new(&m);
        let f = assemble_volume_form(&m, &e, &n, &MaterialField::uniform(one(), C64::new(2.0, 0.5)).unwrap()).unwrap();
        let u: Vec<C64> = (0..e.ndofs()).map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let q: Vec<C64> = (0..n.ndofs()).map(|i| C64::new((i as f64 * 0.71).cos(), 0.0)).collect();
        let zero_u = vec![C64::new(0.0, 0.0); e.ndofs()];
        let zero_p = vec![C64::new(0.0, 0.0); n.ndofs()];
        // ⟨ε∇P, V⟩ with P=q, V=u equals ⟨εU, ∇Q⟩ with U=u, Q=q
        let a = f.bilinear(C64::new(0.0, 0.0), &zero_u, &q, &u, &zero_p);
        let b = -f.bilinear(C64::new(0.0, 0.0), &u, &zero_p, &zero_u, &q);
        assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn tet_order_invariance() {
        let m = gen_cube(2).unwrap();
        let mut r = m.clone();
        r.tets.reverse();
        r.regions.reverse();
        let mat = MaterialField::uniform(one(), C64::new(1.5, 0.2)).unwrap();
        let e1 = EdgeSpace::new(&m);
        let e2 = EdgeSpace::new(&r);
        let n = NodalSpace::new(&m);
        let f1 = assemble_volume_form(&m, &e1, &n, &mat).unwrap();
        let f2 = assemble_volume_form(&r, &e2, &n, &mat).unwrap();
        let d1 = f1.m_eps.to_dense();
        let d2 = f2.m_eps.to_dense();
        for (i, ei) in e1.edges.iter().enumerate() {
            for (j, ej) in e1.edges.iter().enumerate() {
                let i2 = e2.index[&(ei[0], ei[1])];
                let j2 = e2.index[&(ej[0], ej[1])];
                assert!((d1[(i, j)] - d2[(i2, j2)]).norm() < 1e-14);
            }
        }
    }
}
