//! Boundary trace spaces: RWG (div-conforming), rotated RWG
//! (curl-conforming), P0 and P1; trace maps, surface div/curl, Grams.
//!
//! Dof layouts: both vector spaces live on boundary edges (canonical
//! orientation low → high vertex index), P1 on `bmesh.nodes`, P0 on tris.

use std::collections::HashMap;

use faer::sparse::{SparseColMat, Triplet};

use crate::fem::{EdgeSpace, SpMat};
use crate::geom::{self, CV3, P3};
use crate::mesh::BoundaryMesh;
use crate::quad;
use crate::{Error, Result, C64};

/// Per-triangle geometry and local→global maps.
#[derive(Clone, Debug)]
pub struct Panel {
    pub p: [P3; 3],
    pub n: P3,
    pub area: f64,
    pub grads: [P3; 3],
    /// Global boundary edge for local edge k (opposite local vertex k).
    pub edge: [usize; 3],
    /// Local vertex indices (a, b) of local edge k in canonical order.
    pub ends: [(usize, usize); 3],
    pub len: [f64; 3],
    /// div_Γ of the RWG function of local edge k.
    pub div: [f64; 3],
    /// P1 index of local vertex k.
    pub node: [usize; 3],
    pub diam: f64,
    pub centroid: P3,
}

impl Panel {
    /// Rotated-RWG (curl-conforming) functions c_e = ℓ(λ_a∇λ_b − λ_b∇λ_a).
    #[inline]
    pub fn curl_basis(&self, l: &[f64; 3]) -> [P3; 3] {
        let mut c = [[0.0; 3]; 3];
        for k in 0..3 {
            let (a, b) = self.ends[k];
            let v = geom::sub(geom::scale(l[a], self.grads[b]), geom::scale(l[b], self.grads[a]));
            c[k] = geom::scale(self.len[k], v);
        }
        c
    }

    /// RWG functions d_e = c_e × n.
    #[inline]
    pub fn div_basis(&self, l: &[f64; 3]) -> [P3; 3] {
        let c = self.curl_basis(l);
        [geom::cross(c[0], self.n), geom::cross(c[1], self.n), geom::cross(c[2], self.n)]
    }

    #[inline]
    pub fn point(&self, l: &[f64; 3]) -> P3 {
        geom::bary_point(&self.p, l)
    }
}

/// All discrete trace spaces on one boundary mesh.
#[derive(Clone, Debug)]
pub struct TraceSpaces {
    pub bmesh: BoundaryMesh,
    pub edges: Vec<[usize; 2]>,
    pub edge_index: HashMap<(usize, usize), usize>,
    pub panels: Vec<Panel>,
}

/// Neumann pair (p ∈ RWG, q ∈ P0).
#[derive(Clone, Debug, PartialEq)]
pub struct TraceVectorN {
    pub p: Vec<C64>,
    pub q: Vec<C64>,
}

/// Dirichlet pair (η ∈ rotated RWG, ξ ∈ P1).
#[derive(Clone, Debug, PartialEq)]
pub struct TraceVectorD {
    pub eta: Vec<C64>,
    pub xi: Vec<C64>,
}

impl TraceVectorN {
    pub fn zeros(s: &TraceSpaces) -> Self {
        TraceVectorN { p: vec![C64::new(0.0, 0.0); s.n_edges()], q: vec![C64::new(0.0, 0.0); s.n_tris()] }
    }
    pub fn concat(&self) -> Vec<C64> {
        self.p.iter().chain(&self.q).copied().collect()
    }
    pub fn split(v: &[C64], s: &TraceSpaces) -> Self {
        TraceVectorN { p: v[..s.n_edges()].to_vec(), q: v[s.n_edges()..].to_vec() }
    }
}

impl TraceVectorD {
    pub fn zeros(s: &TraceSpaces) -> Self {
        TraceVectorD { eta: vec![C64::new(0.0, 0.0); s.n_edges()], xi: vec![C64::new(0.0, 0.0); s.n_nodes()] }
    }
    pub fn concat(&self) -> Vec<C64> {
        self.eta.iter().chain(&self.xi).copied().collect()
    }
    pub fn split(v: &[C64], s: &TraceSpaces) -> Self {
        TraceVectorD { eta: v[..s.n_edges()].to_vec(), xi: v[s.n_edges()..].to_vec() }
    }
}

fn sparse(n: usize, m: usize, t: &[Triplet<usize, usize, C64>]) -> SpMat {
    SparseColMat::try_new_from_triplets(n, m, t).expect("triplet assembly")
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

impl TraceSpaces {
    /// Spaces on a closed boundary surface.
    pub fn new(bmesh: BoundaryMesh) -> Result<Self> {
        Self::build(bmesh, true)
    }

    /// Open surfaces allowed (local tests only).
    pub fn new_open(bmesh: BoundaryMesh) -> Self {
        Self::build(bmesh, false).expect("non-degenerate surface")
    }

    fn build(bmesh: BoundaryMesh, closed: bool) -> Result<Self> {
        let mut edges = Vec::new();
        let mut edge_index = HashMap::new();
        let mut count: Vec<u32> = Vec::new();
        let mut panels = Vec::with_capacity(bmesh.tris.len());
        for (k, t) in bmesh.tris.iter().enumerate() {
            let p = bmesh.tri_points(k);
            let n = bmesh.normals[k];
            let area = bmesh.areas[k];
            if !(area > 0.0) {
                return Err(Error::Mesh(format!("degenerate boundary triangle {k}")));
            }
            let grads = geom::tri_bary_grads(&p, n, area);
            let mut edge = [0; 3];
            let mut ends = [(0, 0); 3];
            let mut len = [0.0; 3];
            let mut div = [0.0; 3];
            for e in 0..3 {
                let (i, j) = ((e + 1) % 3, (e + 2) % 3);
                let (a, b) = if t[i] < t[j] { (i, j) } else { (j, i) };
                let key = (t[a], t[b]);
                let id = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    count.push(0);
                    edges.len() - 1
                });
                count[id] += 1;
                edge[e] = id;
                ends[e] = (a, b);
                len[e] = geom::dist(p[a], p[b]);
                div[e] = 2.0 * len[e] * geom::dot(n, geom::cross(grads[a], grads[b]));
            }
            let node = [bmesh.node_of[t[0]], bmesh.node_of[t[1]], bmesh.node_of[t[2]]];
            panels.push(Panel { p, n, area, grads, edge, ends, len, div, node, diam: bmesh.diameter(k), centroid: bmesh.centroid(k) });
        }
        if closed {
            if let Some(e) = count.iter().position(|&c| c != 2) {
                return Err(Error::Mesh(format!("boundary edge {:?} has {} adjacent triangles (surface not closed)", edges[e], count[e])));
            }
        }
        Ok(TraceSpaces { bmesh, edges, edge_index, panels })
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn n_tris(&self) -> usize {
        self.panels.len()
    }
    pub fn n_nodes(&self) -> usize {
        self.bmesh.nodes.len()
    }
    pub fn n_neumann(&self) -> usize {
        self.n_edges() + self.n_tris()
    }
    pub fn n_dirichlet(&self) -> usize {
        self.n_edges() + self.n_nodes()
    }

    /// Boundary edge → volume edge index.
    pub fn tangential_map(&self, edge: &EdgeSpace) -> Result<Vec<usize>> {
        self.edges
            .iter()
            .map(|e| edge.index.get(&(e[0], e[1])).copied().ok_or_else(|| Error::Dimension("boundary edge missing from edge space".into())))
            .collect()
    }

    /// γ_t: volume edge dofs → rotated-RWG coefficients (pure index map).
    pub fn trace_tangential(&self, edge: &EdgeSpace) -> Result<SpMat> {
        let map = self.tangential_map(edge)?;
        let t: Vec<_> = map.iter().enumerate().map(|(i, &j)| Triplet::new(i, j, re(1.0))).collect();
        Ok(sparse(self.n_edges(), edge.ndofs(), &t))
    }

    /// γ: nodal dofs → P1 boundary coefficients.
    pub fn trace_scalar(&self, n_vertices: usize) -> SpMat {
        let t: Vec<_> = self.bmesh.nodes.iter().enumerate().map(|(i, &v)| Triplet::new(i, v, re(1.0))).collect();
        sparse(self.n_nodes(), n_vertices, &t)
    }

    /// div_Γ: RWG coefficients → P0 values.
    pub fn surface_div(&self) -> SpMat {
        let mut t = Vec::with_capacity(3 * self.n_tris());
        for (k, pa) in self.panels.iter().enumerate() {
            for e in 0..3 {
                t.push(Triplet::new(k, pa.edge[e], re(pa.div[e])));
            }
        }
        sparse(self.n_tris(), self.n_edges(), &t)
    }

    /// curl_Γ: P1 coefficients → RWG coefficients, entries ±1/ℓ.
    pub fn surface_curl(&self) -> SpMat {
        let mut t = Vec::with_capacity(2 * self.n_edges());
        for (e, [a, b]) in self.edges.iter().enumerate() {
            let l = geom::dist(self.bmesh.vertices[*a], self.bmesh.vertices[*b]);
            t.push(Triplet::new(e, self.bmesh.node_of[*b], re(1.0 / l)));
            t.push(Triplet::new(e, self.bmesh.node_of[*a], re(-1.0 / l)));
        }
        sparse(self.n_edges(), self.n_nodes(), &t)
    }

    /// ⟨p, η⟩_τ Gram: rows RWG, cols rotated RWG.
    pub fn gram_tau(&self) -> SpMat {
        let rule = quad::tri_rule(2);
        let mut t = Vec::with_capacity(9 * self.n_tris());
        for pa in &self.panels {
            let mut m = [[0.0; 3]; 3];
            for (l, w) in rule.bary.iter().zip(&rule.w) {
                let d = pa.div_basis(l);
                let c = pa.curl_basis(l);
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] += w * pa.area * geom::dot(d[i], c[j]);
                    }
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    t.push(Triplet::new(pa.edge[i], pa.edge[j], re(m[i][j])));
                }
            }
        }
        sparse(self.n_edges(), self.n_edges(), &t)
    }

    /// ⟨q, ξ⟩_Γ Gram: rows P0, cols P1.
    pub fn gram_scalar(&self) -> SpMat {
        let mut t = Vec::with_capacity(3 * self.n_tris());
        for (k, pa) in self.panels.iter().enumerate() {
            for v in 0..3 {
                t.push(Triplet::new(k, pa.node[v], re(pa.area / 3.0)));
            }
        }
        sparse(self.n_tris(), self.n_nodes(), &t)
    }

    /// RWG mass matrix ∫ d_i·d_j.
    pub fn mass_div(&self) -> SpMat {
        let rule = quad::tri_rule(2);
        let mut t = Vec::with_capacity(9 * self.n_tris());
        for pa in &self.panels {
            let mut m = [[0.0; 3]; 3];
            for (l, w) in rule.bary.iter().zip(&rule.w) {
                let d = pa.div_basis(l);
                for i in 0..3 {
                    for j in 0..3 {
                        m[i][j] += w * pa.area * geom::dot(d[i], d[j]);
                    }
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    t.push(Triplet::new(pa.edge[i], pa.edge[j], re(m[i][j])));
                }
            }
        }
        sparse(self.n_edges(), self.n_edges(), &t)
    }

    /// P1 mass matrix.
    pub fn mass_p1(&self) -> SpMat {
        let mut t = Vec::with_capacity(9 * self.n_tris());
        for pa in &self.panels {
            for i in 0..3 {
                for j in 0..3 {
                    let v = if i == j { pa.area / 6.0 } else { pa.area / 12.0 };
                    t.push(Triplet::new(pa.node[i], pa.node[j], re(v)));
                }
            }
        }
        sparse(self.n_nodes(), self.n_nodes(), &t)
    }

    /// RWG field at a barycentric point of panel k.
    pub fn eval_div(&self, k: usize, coef: &[C64], l: &[f64; 3]) -> CV3 {
        let pa = &self.panels[k];
        let d = pa.div_basis(l);
        let mut v = geom::CZERO3;
        for i in 0..3 {
            v = geom::cadd(v, geom::cscale(coef[pa.edge[i]], d[i]));
        }
        v
    }

    /// Rotated-RWG field at a barycentric point of panel k.
    pub fn eval_curl(&self, k: usize, coef: &[C64], l: &[f64; 3]) -> CV3 {
        let pa = &self.panels[k];
        let c = pa.curl_basis(l);
        let mut v = geom::CZERO3;
        for i in 0..3 {
            v = geom::cadd(v, geom::cscale(coef[pa.edge[i]], c[i]));
        }
        v
    }

    pub fn eval_p1(&self, k: usize, coef: &[C64], l: &[f64; 3]) -> C64 {
        let pa = &self.panels[k];
        (0..3).map(|i| coef[pa.node[i]] * l[i]).sum()
    }

    /// Rotated-RWG interpolant of a tangential field: (1/ℓ)∫_e f·t.
    pub fn interpolate_curl(&self, f: &(dyn Fn(P3) -> CV3 + Sync)) -> Vec<C64> {
        let (gx, gw) = quad::gauss_legendre01(6);
        crate::par_map(self.n_edges(), |e| {
            let [a, b] = self.edges[e];
            let pa = self.bmesh.vertices[a];
            let d = geom::sub(self.bmesh.vertices[b], pa);
            let mut s = C64::new(0.0, 0.0);
            for (x, w) in gx.iter().zip(&gw) {
                s += geom::rcdot(d, f(geom::add(pa, geom::scale(*x, d)))) * *w;
            }
            s / geom::norm(d)
        })
    }

    /// RWG interpolant from the normal flux across each edge; `f(x, k)` is
    /// evaluated on panel k and the two one-sided fluxes are averaged.
    pub fn interpolate_div(&self, f: &(dyn Fn(P3, usize) -> CV3 + Sync)) -> Vec<C64> {
        let (gx, gw) = quad::gauss_legendre01(6);
        let mut acc = vec![C64::new(0.0, 0.0); self.n_edges()];
        for (k, pa) in self.panels.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = pa.ends[e];
                let d = geom::sub(pa.p[b], pa.p[a]);
                // n × w = Σ coef c_e, so coef = (1/ℓ)∫_e (n × w)·t
                let mut s = C64::new(0.0, 0.0);
                for (x, w) in gx.iter().zip(&gw) {
                    let v = f(geom::add(pa.p[a], geom::scale(*x, d)), k);
                    let nxv = geom::crcross(v, geom::scale(-1.0, pa.n));
                    s += geom::rcdot(d, nxv) * *w;
                }
                acc[pa.edge[e]] += s / (2.0 * geom::norm(d));
            }
        }
        acc
    }

    /// P0 panel means of a scalar field (`f(x, k)` on panel k).
    pub fn project_p0(&self, f: &(dyn Fn(P3, usize) -> C64 + Sync)) -> Vec<C64> {
        let rule = quad::tri_rule(4);
        crate::par_map(self.n_tris(), |k| {
            let pa = &self.panels[k];
            rule.bary.iter().zip(&rule.w).map(|(l, w)| f(pa.point(l), k) * *w).sum()
        })
    }

    /// P1 nodal interpolant.
    pub fn interpolate_p1(&self, f: &(dyn Fn(P3) -> C64 + Sync)) -> Vec<C64> {
        self.bmesh.nodes.iter().map(|&v| f(self.bmesh.vertices[v])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{interpolate_edge, spmv, EdgeSpace, TetGeom};
    use crate::mesh::{extract_boundary, gen_ball, gen_cube};

    fn ball(level: usize) -> (crate::mesh::VolumeMesh, TraceSpaces) {
        let m = gen_ball(level).unwrap();
        let s = TraceSpaces::new(extract_boundary(&m).unwrap()).unwrap();
        (m, s)
    }

    fn rand_vec(n: usize, seed: u64) -> Vec<C64> {
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (0..n)
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                C64::new(a, b)
            })
            .collect()
    }

    #[test]
    fn div_curl_is_zero() {
        let (_, s) = ball(1);
        let d = s.surface_div().to_dense();
        let c = s.surface_curl().to_dense();
        let p = &d * &c;
        let mx = (0..p.nrows()).flat_map(|i| (0..p.ncols()).map(move |j| (i, j))).map(|(i, j)| p[(i, j)].norm()).fold(0.0, f64::max);
        assert!(mx < 1e-12);
        let ones = vec![C64::new(1.0, 0.0); s.n_nodes()];
        assert!(spmv(&s.surface_curl(), &ones).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn div_integrates_to_zero() {
        let (_, s) = ball(1);
        let x = rand_vec(s.n_edges(), 3);
        let dv = spmv(&s.surface_div(), &x);
        let tot: C64 = dv.iter().zip(&s.panels).map(|(v, p)| v * p.area).sum();
        assert!(tot.norm() < 1e-12);
    }

    #[test]
    fn flat_patch_divergence() {
        let v = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.2, 0.0]];
        let b = BoundaryMesh::from_triangles(v, vec![[0, 1, 2], [1, 3, 2]]);
        let s = TraceSpaces::new_open(b);
        let e = s.edge_index[&(1, 2)];
        let ell = 2f64.sqrt();
        let d = s.surface_div().to_dense();
        let a1 = s.panels[0].area;
        let a2 = s.panels[1].area;
        let (v0, v1) = (d[(0, e)].re, d[(1, e)].re);
        assert!((v0.abs() - ell / a1).abs() < 1e-13 && (v1.abs() - ell / a2).abs() < 1e-13);
        assert!(v0 * v1 < 0.0);
        assert!(v0 > 0.0, "canonical RWG leaves tri 0");
    }

    #[test]
    fn rotation_consistency() {
        let (_, s) = ball(1);
        let rule = quad::tri_rule(3);
        for pa in &s.panels {
            for l in &rule.bary {
                let c = pa.curl_basis(l);
                let d = pa.div_basis(l);
                for i in 0..3 {
                    let r = geom::cross(pa.n, d[i]);
                    assert!(geom::dist(r, c[i]) < 1e-13);
                }
            }
        }
    }

    #[test]
    fn tangential_trace_index_map() {
        let (m, s) = ball(1);
        let e = EdgeSpace::new(&m);
        let t = s.trace_tangential(&e).unwrap();
        // φ = 1 has zero gradient
        let phi_grad = interpolate_edge(&m, &e, &|_| geom::CZERO3);
        assert!(spmv(&t, &phi_grad).iter().all(|z| z.norm() == 0.0));
        let map = s.tangential_map(&e).unwrap();
        let mut u = vec![C64::new(0.0, 0.0); e.ndofs()];
        u[map[7]] = C64::new(1.0, 0.0);
        let tu = spmv(&t, &u);
        assert_eq!(tu.iter().filter(|z| z.norm() > 0.0).count(), 1);
        assert!((tu[7] - 1.0).norm() == 0.0);
    }

    #[test]
    fn tangential_trace_pointwise() {
        let (m, s) = ball(1);
        let e = EdgeSpace::new(&m);
        let u = rand_vec(e.ndofs(), 11);
        let tu = spmv(&s.trace_tangential(&e).unwrap(), &u);
        let c = [1.0 / 3.0; 3];
        for (k, pa) in s.panels.iter().enumerate() {
            let tet = s.bmesh.parent_tet[k];
            let g = TetGeom::new(&m, tet).unwrap();
            // barycentrics of the panel centroid in the parent tet
            let t = m.tets[tet];
            let mut l4 = [0.0; 4];
            for a in 0..4 {
                for (v, &bv) in s.bmesh.tris[k].iter().enumerate() {
                    if bv == t[a] {
                        l4[a] = c[v];
                    }
                }
            }
            let (uv, _) = crate::fem::eval_edge_field(&g, &e.tet_dofs[tet], &e.tet_signs[tet], &u, &l4);
            // n × (U × n)
            let tang = geom::crcross(geom::crcross(uv, pa.n), geom::scale(-1.0, pa.n));
            let tr = s.eval_curl(k, &tu, &c);
            assert!(geom::cnorm(geom::csub(tang, tr)) < 1e-12);
        }
    }

    #[test]
    fn scalar_trace() {
        let (m, s) = ball(1);
        let g = s.trace_scalar(m.vertices.len());
        let ones = vec![C64::new(1.0, 0.0); m.vertices.len()];
        assert!(spmv(&g, &ones).iter().all(|z| (z - 1.0).norm() == 0.0));
        let mut p = rand_vec(m.vertices.len(), 5);
        for &v in &s.bmesh.nodes {
            p[v] = C64::new(0.0, 0.0);
        }
        assert!(spmv(&g, &p).iter().all(|z| z.norm() == 0.0));
        let p = rand_vec(m.vertices.len(), 6);
        let gp = spmv(&g, &p);
        for (k, t) in s.bmesh.tris.iter().enumerate() {
            let direct: C64 = t.iter().map(|&v| p[v]).sum::<C64>() / 3.0;
            assert!((direct - s.eval_p1(k, &gp, &[1.0 / 3.0; 3])).norm() < 1e-12);
        }
    }

    #[test]
    fn commuting_diagram() {
        let (m, s) = ball(1);
        let e = EdgeSpace::new(&m);
        let u = rand_vec(e.ndofs(), 9);
        let tu = spmv(&s.trace_tangential(&e).unwrap(), &u);
        // γ_τU = γ_tU × n has the same coefficients in the RWG basis
        let d = spmv(&s.surface_div(), &tu);
        for (k, pa) in s.panels.iter().enumerate() {
            let tet = s.bmesh.parent_tet[k];
            let g = TetGeom::new(&m, tet).unwrap();
            let (_, cu) = crate::fem::eval_edge_field(&g, &e.tet_dofs[tet], &e.tet_signs[tet], &u, &[0.25; 4]);
            let nc = geom::rcdot(pa.n, cu);
            assert!((d[k] - nc).norm() < 1e-11 * (1.0 + nc.norm()), "{k}");
        }
    }

    #[test]
    fn grams() {
        let (_, s) = ball(1);
        let g = s.gram_tau();
        let x = rand_vec(s.n_edges(), 2);
        // ∫ p·(n×p) = 0 with p RWG and n×p its rotation (= same coefficients in c)
        let gx = spmv(&g, &x);
        let v: C64 = x.iter().zip(&gx).map(|(a, b)| a * b).sum();
        assert!(v.norm() < 1e-13);
        let q = vec![C64::new(1.0, 0.0); s.n_tris()];
        let xi = vec![C64::new(1.0, 0.0); s.n_nodes()];
        let m = spmv(&s.gram_scalar(), &xi);
        let tot: C64 = q.iter().zip(&m).map(|(a, b)| a * b).sum();
        assert!((tot.re - s.bmesh.total_area()).abs() < 1e-13);
    }

    #[test]
    fn gram_vs_high_order() {
        let (_, s) = ball(0);
        let g = s.gram_tau().to_dense();
        let rule = quad::tri_rule(7);
        let mut o = vec![vec![0.0; s.n_edges()]; s.n_edges()];
        for pa in &s.panels {
            for (l, w) in rule.bary.iter().zip(&rule.w) {
                let d = pa.div_basis(l);
                let c = pa.curl_basis(l);
                for i in 0..3 {
                    for j in 0..3 {
                        o[pa.edge[i]][pa.edge[j]] += w * pa.area * geom::dot(d[i], c[j]);
                    }
                }
            }
        }
        let x = rand_vec(s.n_edges(), 1);
        let y = rand_vec(s.n_edges(), 4);
        let mut a = C64::new(0.0, 0.0);
        let mut b = C64::new(0.0, 0.0);
        for i in 0..s.n_edges() {
            for j in 0..s.n_edges() {
                a += x[i] * g[(i, j)] * y[j];
                b += x[i] * o[i][j] * y[j];
            }
        }
        assert!((a - b).norm() < 1e-12 * b.norm());
    }

    #[test]
    fn cube_surface_is_closed() {
        let m = gen_cube(2).unwrap();
        let s = TraceSpaces::new(extract_boundary(&m).unwrap()).unwrap();
        assert_eq!(s.n_edges(), 3 * s.n_tris() / 2);
    }
}
