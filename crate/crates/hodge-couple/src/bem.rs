//! Galerkin boundary operators and the four Calderón blocks.
//!
//! All primitive matrices are produced by one panel-pair sweep. Singular
//! pairs use Sauter–Schwab transformations; disjoint pairs use tensor Gauss
//! rules with recursive subdivision when the panels are close.

use faer::Mat;

use crate::fem::{spmv, SpMat};
use crate::geom::{self, P3};
use crate::kernels::{KernelEval, Radial};
use crate::quad::{self, PairCase};
use crate::traces::{Panel, TraceSpaces};
use crate::{Error, Result, C64};

pub type DMat = Mat<C64>;

/// Panel-pair quadrature parameters.
#[derive(Clone, Copy, Debug)]
pub struct PanelQuadrature {
    /// Gauss points per axis for the singular (Sauter–Schwab) cases.
    pub singular_order: usize,
    /// Smallest per-triangle order used for disjoint pairs.
    pub regular_order: usize,
    /// Largest per-triangle order before a near pair is subdivided.
    pub max_order: usize,
    /// Target relative error per disjoint pair, drives the order choice.
    pub tolerance: f64,
    pub max_depth: usize,
}

impl Default for PanelQuadrature {
    fn default() -> Self {
        PanelQuadrature { singular_order: 7, regular_order: 3, max_order: 8, tolerance: 1e-10, max_depth: 4 }
    }
}

impl PanelQuadrature {
    /// Order for a pair whose centroid distance is `ratio` times the larger diameter.
    pub fn order_for(&self, ratio: f64) -> usize {
        let a = (2.0 * ratio).max(1.0 + 1e-3);
        let rho = a + (a * a - 1.0).sqrt();
        // the Bernstein-ellipse estimate is optimistic by about a decade
        let n = ((10.0 / self.tolerance).ln() / (2.0 * rho.ln())).ceil() as usize;
        n.max(self.regular_order)
    }
}

/// Which primitive matrices to assemble.
#[derive(Clone, Copy, Debug, Default)]
pub struct OpMask {
    pub vv: bool,
    pub vdiv: bool,
    pub kmag: bool,
    pub bq: bool,
    pub vq: bool,
    pub gtg: bool,
    pub np: bool,
    pub ht: bool,
    pub kp: bool,
    pub nt: bool,
    pub kd: bool,
    pub nn: bool,
}

impl OpMask {
    pub fn all() -> Self {
        OpMask { vv: true, vdiv: true, kmag: true, bq: true, vq: true, gtg: true, np: true, ht: true, kp: true, nt: true, kd: true, nn: true }
    }
}

/// Primitive Galerkin matrices. d = RWG, ξ = P1, r = P0, G = G_κ,
/// G_t = G_κ̃, G̃ = (G_κ − G_κ̃)/κ², 𝐆 = G Id + ∇²G̃.
#[derive(Clone, Debug)]
pub struct PrimitiveOps {
    /// ∫∫ d_i·d_j G (E×E)
    pub vv: DMat,
    /// ∫∫ div d_i div d_j G (E×E)
    pub vdiv: DMat,
    /// ∫∫ d_i(x)·(∇ₓG × d_j(y)) (E×E)
    pub kmag: DMat,
    /// ∫∫ div d_i(x) G_t r_l(y) (E×F)
    pub bq: DMat,
    /// ∫∫ r_k r_l G_t (F×F)
    pub vq: DMat,
    /// ∫∫ d_i(x)·∇ₓG̃ div d_j(y) (E×E)
    pub gtg: DMat,
    /// ∫∫ ξ_k(x) nₓ·d_j(y) G (V×E)
    pub np: DMat,
    /// ∫∫ ξ_k(x) nₓ·∇ₓG̃ div d_j(y) (V×E)
    pub ht: DMat,
    /// ∫∫ ξ_k(x) nₓ·∇ₓG_t r_l(y) (V×F)
    pub kp: DMat,
    /// ∫∫ d_i(x)·𝐆 n_y ξ_k(y) (E×V)
    pub nt: DMat,
    /// ∫∫ r_l(x) ∇ₓG_t·n_y ξ_k(y) (F×V)
    pub kd: DMat,
    /// ∫∫ ξ_k(x) nₓᵀ𝐆 n_y ξ_l(y) (V×V)
    pub nn: DMat,
}

#[derive(Clone, Copy, Default)]
struct Local {
    vv: [[C64; 3]; 3],
    vdiv: [[C64; 3]; 3],
    kmag: [[C64; 3]; 3],
    bq: [C64; 3],
    vq: C64,
    gtg: [[C64; 3]; 3],
    np: [[C64; 3]; 3],
    ht: [[C64; 3]; 3],
    kp: [C64; 3],
    nt: [[C64; 3]; 3],
    kd: [C64; 3],
    nn: [[C64; 3]; 3],
}

/// Number of shared vertices and the vertex permutations putting them first.
fn classify(tx: &[usize; 3], ty: &[usize; 3]) -> Result<Option<(PairCase, [usize; 3], [usize; 3])>> {
    let mut sx = Vec::new();
    let mut sy = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            if tx[i] == ty[j] {
                sx.push(i);
                sy.push(j);
            }
        }
    }
    let rest = |s: &[usize]| -> Vec<usize> { (0..3).filter(|k| !s.contains(k)).collect() };
    Ok(match sx.len() {
        0 => None,
        1 => {
            let (i, j) = (sx[0], sy[0]);
            Some((PairCase::Vertex, [i, (i + 1) % 3, (i + 2) % 3], [j, (j + 1) % 3, (j + 2) % 3]))
        }
        2 => {
            let rx = rest(&sx);
            let ry = rest(&sy);
            Some((PairCase::Edge, [sx[0], sx[1], rx[0]], [sy[0], sy[1], ry[0]]))
        }
        3 => {
            if tx != ty && sorted(tx) != sorted(ty) {
                return Err(Error::Quadrature("inconsistent coincident panels".into()));
            }
            let mut py = [0; 3];
            for i in 0..3 {
                py[i] = (0..3).find(|&j| ty[j] == tx[i]).unwrap();
            }
            Some((PairCase::Coincident, [0, 1, 2], py))
        }
        n => return Err(Error::Quadrature(format!("panels share {n} vertices"))),
    })
}

fn sorted(t: &[usize; 3]) -> [usize; 3] {
    let mut s = *t;
    s.sort_unstable();
    s
}

#[inline]
fn permute(r: &[f64; 3], perm: &[usize; 3]) -> [f64; 3] {
    let mut l = [0.0; 3];
    for k in 0..3 {
        l[perm[k]] = r[k];
    }
    l
}

/// Sub-triangle given by barycentric corners in its parent.
type Sub = [[f64; 3]; 3];

const ROOT: Sub = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn mid(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5, (a[2] + b[2]) * 0.5]
}

fn split(s: &Sub) -> [Sub; 4] {
    let m01 = mid(&s[0], &s[1]);
    let m12 = mid(&s[1], &s[2]);
    let m20 = mid(&s[2], &s[0]);
    [[s[0], m01, m20], [m01, s[1], m12], [m20, m12, s[2]], [m01, m12, m20]]
}

fn sub_bary(s: &Sub, l: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for k in 0..3 {
        for c in 0..3 {
            out[c] += l[k] * s[k][c];
        }
    }
    out
}

fn sub_geom(pa: &Panel, s: &Sub) -> (P3, f64) {
    let p: Vec<P3> = s.iter().map(|l| pa.point(l)).collect();
    let c = geom::scale(1.0 / 3.0, geom::add(geom::add(p[0], p[1]), p[2]));
    let d = geom::dist(p[0], p[1]).max(geom::dist(p[1], p[2])).max(geom::dist(p[0], p[2]));
    (c, d)
}

/// Visit quadrature point pairs (barycentric in each parent panel, weight
/// already multiplied by both areas) for a disjoint panel pair.
fn regular_pairs<F: FnMut(&[f64; 3], &[f64; 3], f64)>(pa: &Panel, pb: &Panel, q: &PanelQuadrature, sa: &Sub, sb: &Sub, depth: usize, f: &mut F) {
    let (ca, da) = sub_geom(pa, sa);
    let (cb, db) = sub_geom(pb, sb);
    let n = q.order_for(geom::dist(ca, cb) / da.max(db));
    if n > q.max_order && depth < q.max_depth {
        if da >= db {
            for s in split(sa) {
                regular_pairs(pa, pb, q, &s, sb, depth + 1, f);
            }
        } else {
            for s in split(sb) {
                regular_pairs(pa, pb, q, sa, &s, depth + 1, f);
            }
        }
        return;
    }
    let rule = quad::tri_rule(n.min(q.max_order));
    let area_a = pa.area * sub_area_fraction(sa);
    let area_b = pb.area * sub_area_fraction(sb);
    let xb: Vec<[f64; 3]> = rule.bary.iter().map(|l| sub_bary(sb, l)).collect();
    for (la, wa) in rule.bary.iter().zip(&rule.w) {
        let xa = sub_bary(sa, la);
        for (yb, wb) in xb.iter().zip(&rule.w) {
            f(&xa, yb, wa * wb * area_a * area_b);
        }
    }
}

fn sub_area_fraction(s: &Sub) -> f64 {
    // |det| of the barycentric corner matrix restricted to two coordinates
    let a = [s[1][1] - s[0][1], s[1][2] - s[0][2]];
    let b = [s[2][1] - s[0][1], s[2][2] - s[0][2]];
    (a[0] * b[1] - a[1] * b[0]).abs()
}

fn singular_pairs<F: FnMut(&[f64; 3], &[f64; 3], f64)>(pa: &Panel, pb: &Panel, case: PairCase, px: &[usize; 3], py: &[usize; 3], q: &PanelQuadrature, f: &mut F) {
    let rule = quad::ss_rule(case, q.singular_order);
    let aa = pa.area * pb.area;
    for k in 0..rule.w.len() {
        let lx = permute(&rule.x[k], px);
        let ly = permute(&rule.y[k], py);
        f(&lx, &ly, rule.w[k] * aa);
    }
}

/// Visit all quadrature point pairs for panels (a, b).
pub(crate) fn for_pair_points<F: FnMut(&[f64; 3], &[f64; 3], f64)>(s: &TraceSpaces, a: usize, b: usize, q: &PanelQuadrature, f: &mut F) -> Result<Option<PairCase>> {
    let ta = &s.bmesh.tris[a];
    let tb = &s.bmesh.tris[b];
    let pa = &s.panels[a];
    let pb = &s.panels[b];
    match classify(ta, tb)? {
        Some((case, px, py)) => {
            singular_pairs(pa, pb, case, &px, &py, q, f);
            Ok(Some(case))
        }
        None => {
            regular_pairs(pa, pb, q, &ROOT, &ROOT, 0, f);
            Ok(None)
        }
    }
}

#[inline(always)]
fn accumulate(loc: &mut Local, m: &OpMask, pa: &Panel, pb: &Panel, lx: &[f64; 3], ly: &[f64; 3], w: f64, rad: &Radial, coincident: bool) {
    let dx = pa.div_basis(lx);
    let dy = pb.div_basis(ly);
    let gk = rad.gk.0 * w;
    let gt = rad.gt.0 * w;
    let dh = rad.dhat;
    if m.vv {
        for i in 0..3 {
            for j in 0..3 {
                loc.vv[i][j] += gk * geom::dot(dx[i], dy[j]);
            }
        }
    }
    if m.vdiv {
        for i in 0..3 {
            for j in 0..3 {
                loc.vdiv[i][j] += gk * (pa.div[i] * pb.div[j]);
            }
        }
    }
    if m.kmag && !coincident {
        let g1 = rad.gk.1 * w;
        for j in 0..3 {
            let c = geom::cross(dh, dy[j]);
            for i in 0..3 {
                loc.kmag[i][j] += g1 * geom::dot(dx[i], c);
            }
        }
    }
    if m.bq {
        for i in 0..3 {
            loc.bq[i] += gt * pa.div[i];
        }
    }
    if m.vq {
        loc.vq += gt;
    }
    if m.gtg || m.ht {
        let g0 = rad.gr.0 * w;
        if m.gtg {
            for i in 0..3 {
                let a = g0 * geom::dot(dx[i], dh);
                for j in 0..3 {
                    loc.gtg[i][j] += a * pb.div[j];
                }
            }
        }
        if m.ht && !coincident {
            let a = g0 * geom::dot(pa.n, dh);
            for i in 0..3 {
                for j in 0..3 {
                    loc.ht[i][j] += a * (lx[i] * pb.div[j]);
                }
            }
        }
    }
    if m.np && !coincident {
        for j in 0..3 {
            let a = gk * geom::dot(pa.n, dy[j]);
            for i in 0..3 {
                loc.np[i][j] += a * lx[i];
            }
        }
    }
    if m.kp && !coincident {
        let a = rad.gt.1 * w * geom::dot(pa.n, dh);
        for i in 0..3 {
            loc.kp[i] += a * lx[i];
        }
    }
    if m.kd && !coincident {
        let a = rad.gt.1 * w * geom::dot(dh, pb.n);
        for j in 0..3 {
            loc.kd[j] += a * ly[j];
        }
    }
    if m.nt || m.nn {
        let gn = rad.matg_apply(pb.n);
        if m.nt && !coincident {
            for i in 0..3 {
                let a = geom::rcdot(dx[i], gn) * w;
                for j in 0..3 {
                    loc.nt[i][j] += a * ly[j];
                }
            }
        }
        if m.nn {
            let a = geom::rcdot(pa.n, gn) * w;
            for i in 0..3 {
                for j in 0..3 {
                    loc.nn[i][j] += a * (lx[i] * ly[j]);
                }
            }
        }
    }
}

fn local_pair(s: &TraceSpaces, ke: &KernelEval, q: &PanelQuadrature, m: &OpMask, a: usize, b: usize) -> Result<Local> {
    let pa = &s.panels[a];
    let pb = &s.panels[b];
    let mut loc = Local::default();
    let coincident = a == b;
    for_pair_points(s, a, b, q, &mut |lx, ly, w| {
        let x = pa.point(lx);
        let y = pb.point(ly);
        let rad = ke.radial(geom::sub(x, y));
        accumulate(&mut loc, m, pa, pb, lx, ly, w, &rad, coincident);
    })?;
    Ok(loc)
}

fn zeros(r: usize, c: usize) -> DMat {
    Mat::zeros(r, c)
}

/// Assemble the requested primitive operators (unrequested ones are 0×0).
pub fn assemble_primitive_ops(ke: &KernelEval, s: &TraceSpaces, q: &PanelQuadrature, m: &OpMask) -> Result<PrimitiveOps> {
    let (ne, nf, nv) = (s.n_edges(), s.n_tris(), s.n_nodes());
    let z = |on: bool, r: usize, c: usize| if on { zeros(r, c) } else { zeros(0, 0) };
    let mut ops = PrimitiveOps {
        vv: z(m.vv, ne, ne),
        vdiv: z(m.vdiv, ne, ne),
        kmag: z(m.kmag, ne, ne),
        bq: z(m.bq, ne, nf),
        vq: z(m.vq, nf, nf),
        gtg: z(m.gtg, ne, ne),
        np: z(m.np, nv, ne),
        ht: z(m.ht, nv, ne),
        kp: z(m.kp, nv, nf),
        nt: z(m.nt, ne, nv),
        kd: z(m.kd, nf, nv),
        nn: z(m.nn, nv, nv),
    };
    let nt = s.n_tris();
    let chunk = 16;
    let mut start = 0;
    while start < nt {
        let end = (start + chunk).min(nt);
        let rows: Vec<Result<Vec<Local>>> = crate::par_map(end - start, |i| {
            let a = start + i;
            (0..nt).map(|b| local_pair(s, ke, q, m, a, b)).collect()
        });
        for (i, row) in rows.into_iter().enumerate() {
            let a = start + i;
            let row = row?;
            let pa = &s.panels[a];
            for (b, loc) in row.iter().enumerate() {
                let pb = &s.panels[b];
                scatter(&mut ops, m, pa, pb, a, b, loc);
            }
        }
        start = end;
    }
    Ok(ops)
}

fn scatter(ops: &mut PrimitiveOps, m: &OpMask, pa: &Panel, pb: &Panel, a: usize, b: usize, loc: &Local) {
    for i in 0..3 {
        let ei = pa.edge[i];
        let ni = pa.node[i];
        for j in 0..3 {
            let ej = pb.edge[j];
            let nj = pb.node[j];
            if m.vv {
                ops.vv[(ei, ej)] += loc.vv[i][j];
            }
            if m.vdiv {
                ops.vdiv[(ei, ej)] += loc.vdiv[i][j];
            }
            if m.kmag {
                ops.kmag[(ei, ej)] += loc.kmag[i][j];
            }
            if m.gtg {
                ops.gtg[(ei, ej)] += loc.gtg[i][j];
            }
            if m.np {
                ops.np[(ni, ej)] += loc.np[i][j];
            }
            if m.ht {
                ops.ht[(ni, ej)] += loc.ht[i][j];
            }
            if m.nt {
                ops.nt[(ei, nj)] += loc.nt[i][j];
            }
            if m.nn {
                ops.nn[(ni, nj)] += loc.nn[i][j];
            }
        }
        if m.bq {
            ops.bq[(ei, b)] += loc.bq[i];
        }
        if m.kp {
            ops.kp[(ni, b)] += loc.kp[i];
        }
        if m.kd {
            ops.kd[(a, pb.node[i])] += loc.kd[i];
        }
    }
    if m.vq {
        ops.vq[(a, b)] += loc.vq;
    }
}

/// Galerkin blocks of 𝔸_κ plus the duality Grams for ½Id.
///
/// Orderings: ℋ_N = [p (RWG) ; q (P0)], ℋ_D = [η (rotated RWG) ; ξ (P1)].
/// `add`: ℋ_N-tested, ℋ_D trial; `and`: ℋ_N-tested, ℋ_N trial;
/// `adn`: ℋ_D-tested, ℋ_D trial; `ann`: ℋ_D-tested, ℋ_N trial.
#[derive(Clone, Debug)]
pub struct CalderonBlocks {
    pub add: DMat,
    pub and: DMat,
    pub adn: DMat,
    pub ann: DMat,
    /// ⟨a⃗, η⃗⟩ with a⃗ ∈ ℋ_N test, η⃗ ∈ ℋ_D trial
    pub d_nd: DMat,
    /// ⟨η⃗, p⃗⟩ with η⃗ ∈ ℋ_D test, p⃗ ∈ ℋ_N trial
    pub d_dn: DMat,
}

pub fn sparse_to_dense(a: &SpMat) -> DMat {
    let mut d = zeros(a.nrows(), a.ncols());
    for t in a.triplet_iter() {
        d[(t.row, t.col)] += *t.val;
    }
    d
}

fn put(dst: &mut DMat, r0: usize, c0: usize, src: &DMat, scale: C64) {
    for j in 0..src.ncols() {
        for i in 0..src.nrows() {
            dst[(r0 + i, c0 + j)] += scale * src[(i, j)];
        }
    }
}

fn transpose(a: &DMat) -> DMat {
    a.transpose().to_owned()
}

/// Compose the four blocks from primitive matrices.
pub fn compose_calderon(ke: &KernelEval, s: &TraceSpaces, ops: &PrimitiveOps) -> CalderonBlocks {
    let (ne, nf, nv) = (s.n_edges(), s.n_tris(), s.n_nodes());
    let one = C64::new(1.0, 0.0);
    let k2 = ke.ctx.kappa2;
    let curl = sparse_to_dense(&s.surface_curl());

    let mut add = zeros(ne + nf, ne + nv);
    put(&mut add, 0, 0, &ops.kmag, one);
    put(&mut add, 0, ne, &ops.nt, one);
    put(&mut add, ne, ne, &ops.kd, one);

    let mut and = zeros(ne + nf, ne + nf);
    put(&mut and, 0, 0, &ops.vv, -one);
    put(&mut and, 0, 0, &ops.gtg, -one);
    put(&mut and, 0, ne, &ops.bq, -one);
    put(&mut and, ne, 0, &transpose(&ops.bq), -one);
    put(&mut and, ne, ne, &ops.vq, -k2);

    let mut adn = zeros(ne + nv, ne + nv);
    put(&mut adn, 0, 0, &ops.vdiv, -one);
    put(&mut adn, 0, 0, &ops.vv, k2);
    let vc = &ops.vv * &curl;
    put(&mut adn, 0, ne, &vc, one);
    put(&mut adn, ne, 0, &transpose(&vc), one);
    put(&mut adn, ne, ne, &ops.nn, one);

    let mut ann = zeros(ne + nv, ne + nf);
    put(&mut ann, 0, 0, &ops.kmag, -one);
    put(&mut ann, ne, 0, &ops.np, -one);
    put(&mut ann, ne, 0, &ops.ht, -one);
    put(&mut ann, ne, ne, &ops.kp, one);

    let gt = sparse_to_dense(&s.gram_tau());
    let gs = sparse_to_dense(&s.gram_scalar());
    let mut d_nd = zeros(ne + nf, ne + nv);
    put(&mut d_nd, 0, 0, &gt, one);
    put(&mut d_nd, ne, ne, &gs, one);
    let d_dn = transpose(&d_nd);
    CalderonBlocks { add, and, adn, ann, d_nd, d_dn }
}

pub fn assemble_calderon(ke: &KernelEval, s: &TraceSpaces, q: &PanelQuadrature) -> Result<CalderonBlocks> {
    let ops = assemble_primitive_ops(ke, s, q, &OpMask::all())?;
    Ok(compose_calderon(ke, s, &ops))
}

impl CalderonBlocks {
    /// Full Galerkin 𝔸 with rows [ℋ_N test ; ℋ_D test], cols [ℋ_D ; ℋ_N].
    pub fn full(&self) -> DMat {
        let (r1, c1) = (self.add.nrows(), self.add.ncols());
        let (r2, c2) = (self.adn.nrows(), self.and.ncols());
        let mut a = zeros(r1 + r2, c1 + c2);
        let one = C64::new(1.0, 0.0);
        put(&mut a, 0, 0, &self.add, one);
        put(&mut a, 0, c1, &self.and, one);
        put(&mut a, r1, 0, &self.adn, one);
        put(&mut a, r1, c1, &self.ann, one);
        a
    }

    /// Matching block-diagonal duality Gram.
    pub fn gram(&self) -> DMat {
        let (r1, c1) = (self.d_nd.nrows(), self.d_nd.ncols());
        let mut d = zeros(r1 + self.d_dn.nrows(), c1 + self.d_dn.ncols());
        let one = C64::new(1.0, 0.0);
        put(&mut d, 0, 0, &self.d_nd, one);
        put(&mut d, r1, c1, &self.d_dn, one);
        d
    }
}

/// y = A x for a dense matrix.
pub fn matvec(a: &DMat, x: &[C64]) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == C64::new(0.0, 0.0) {
            continue;
        }
        for i in 0..a.nrows() {
            y[i] += a[(i, j)] * xj;
        }
    }
    y
}

pub fn sp_apply(a: &SpMat, x: &[C64]) -> Vec<C64> {
    spmv(a, x)
}
