//! The coupled FEM–BEM block system, its right-hand sides, the dense solve
//! and exterior post-processing.

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::bem::{matvec, CalderonBlocks, DMat};
use crate::fem::{assemble_volume_form, spmv, EdgeSpace, MaterialField, NodalSpace, SpMat, VolumeForm};
use crate::geom::{CV3, P3};
use crate::mesh::{extract_boundary, VolumeMesh};
use crate::potentials::{EvaluationGrid, Potentials};
use crate::traces::{TraceSpaces, TraceVectorD, TraceVectorN};
use crate::{Error, Result, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Volume mesh, interior spaces, boundary spaces and the trace index maps.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: VolumeMesh,
    pub edge: EdgeSpace,
    pub nodal: NodalSpace,
    pub spaces: TraceSpaces,
    /// boundary edge → volume edge
    pub tmap: Vec<usize>,
    /// boundary node → volume vertex
    pub smap: Vec<usize>,
}

impl Discretization {
    pub fn new(mesh: VolumeMesh) -> Result<Self> {
        let edge = EdgeSpace::new(&mesh);
        let nodal = NodalSpace::new(&mesh);
        let spaces = TraceSpaces::new(extract_boundary(&mesh)?)?;
        let tmap = spaces.tangential_map(&edge)?;
        let smap = spaces.bmesh.nodes.clone();
        Ok(Discretization { mesh, edge, nodal, spaces, tmap, smap })
    }

    pub fn n_u(&self) -> usize {
        self.edge.ndofs()
    }
    pub fn n_p(&self) -> usize {
        self.nodal.ndofs()
    }
    pub fn n_volume(&self) -> usize {
        self.n_u() + self.n_p()
    }
    pub fn n_total(&self) -> usize {
        self.n_volume() + self.spaces.n_neumann()
    }

    /// (γ_t U, −γ P) as a Dirichlet trace vector.
    pub fn dirichlet_trace(&self, u: &[C64], p: &[C64]) -> TraceVectorD {
        TraceVectorD { eta: self.tmap.iter().map(|&i| u[i]).collect(), xi: self.smap.iter().map(|&i| -p[i]).collect() }
    }

    /// Volume row/column index of a Dirichlet-trace dof and the S sign.
    fn lift(&self, a: usize) -> (usize, f64) {
        let ne = self.spaces.n_edges();
        if a < ne {
            (self.tmap[a], 1.0)
        } else {
            (self.n_u() + self.smap[a - ne], -1.0)
        }
    }
}

/// Transmission data on Γ plus the assembled volume load.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmissionData {
    /// RWG coefficients
    pub g_r: Vec<C64>,
    /// P0 coefficients
    pub g_n: Vec<C64>,
    /// P1 coefficients
    pub zeta_d: Vec<C64>,
    /// rotated-RWG coefficients
    pub zeta_t: Vec<C64>,
    /// ∫ J·b_i per volume edge
    pub j: Vec<C64>,
}

impl TransmissionData {
    pub fn zeros(d: &Discretization) -> Self {
        let s = &d.spaces;
        TransmissionData {
            g_r: vec![ZERO; s.n_edges()],
            g_n: vec![ZERO; s.n_tris()],
            zeta_d: vec![ZERO; s.n_nodes()],
            zeta_t: vec![ZERO; s.n_edges()],
            j: vec![ZERO; d.n_u()],
        }
    }

    pub fn g(&self) -> TraceVectorN {
        TraceVectorN { p: self.g_r.clone(), q: self.g_n.clone() }
    }

    pub fn zeta(&self) -> TraceVectorD {
        TraceVectorD { eta: self.zeta_t.clone(), xi: self.zeta_d.clone() }
    }

    pub fn check(&self, d: &Discretization) -> Result<()> {
        let s = &d.spaces;
        let ok = self.g_r.len() == s.n_edges()
            && self.g_n.len() == s.n_tris()
            && self.zeta_d.len() == s.n_nodes()
            && self.zeta_t.len() == s.n_edges()
            && self.j.len() == d.n_u();
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("transmission data does not match the meshes".into()))
        }
    }
}

/// Dense coupled matrix over (U, P, p, q).
#[derive(Clone, Debug)]
pub struct CoupledSystem {
    pub matrix: DMat,
    /// Start of the U, P, p, q blocks and the total size.
    pub offsets: [usize; 5],
}

fn add_sparse(m: &mut DMat, r0: usize, c0: usize, a: &SpMat, s: C64) {
    for t in a.triplet_iter() {
        m[(r0 + t.row, c0 + t.col)] += s * *t.val;
    }
}

fn add_sparse_t(m: &mut DMat, r0: usize, c0: usize, a: &SpMat, s: C64) {
    for t in a.triplet_iter() {
        m[(r0 + t.col, c0 + t.row)] += s * *t.val;
    }
}

/// Which pieces go into the system; the negative controls switch them off.
#[derive(Clone, Copy, Debug)]
pub struct Assembly {
    /// sign in front of ½Id (+1 is correct)
    pub half_sign: f64,
}

impl Default for Assembly {
    fn default() -> Self {
        Assembly { half_sign: 1.0 }
    }
}

pub fn assemble_system(d: &Discretization, vol: &VolumeForm, omega2: C64, blocks: &CalderonBlocks) -> Result<CoupledSystem> {
    assemble_system_with(d, vol, omega2, blocks, Assembly::default())
}

pub fn assemble_system_with(d: &Discretization, vol: &VolumeForm, omega2: C64, blocks: &CalderonBlocks, opt: Assembly) -> Result<CoupledSystem> {
    let s = &d.spaces;
    let (nd, nn) = (s.n_dirichlet(), s.n_neumann());
    let dims = [
        (blocks.add.nrows(), blocks.add.ncols(), nn, nd),
        (blocks.and.nrows(), blocks.and.ncols(), nn, nn),
        (blocks.adn.nrows(), blocks.adn.ncols(), nd, nd),
        (blocks.ann.nrows(), blocks.ann.ncols(), nd, nn),
        (blocks.d_nd.nrows(), blocks.d_nd.ncols(), nn, nd),
        (blocks.d_dn.nrows(), blocks.d_dn.ncols(), nd, nn),
    ];
    if dims.iter().any(|&(r, c, er, ec)| r != er || c != ec) || vol.a_cc.nrows() != d.n_u() || vol.m_p.nrows() != d.n_p() {
        return Err(Error::Dimension("Calderón blocks or volume form do not match the discretization".into()));
    }
    let nv = d.n_volume();
    let n = d.n_total();
    let one = C64::new(1.0, 0.0);
    let half = 0.5 * opt.half_sign;
    let mut m = Mat::<C64>::zeros(n, n);
    // 𝔅
    add_sparse(&mut m, 0, 0, &vol.a_cc, one);
    add_sparse(&mut m, 0, 0, &vol.m_eps, -omega2);
    add_sparse(&mut m, 0, d.n_u(), &vol.g_mix, one);
    add_sparse_t(&mut m, d.n_u(), 0, &vol.g_mix, -one);
    add_sparse(&mut m, d.n_u(), d.n_u(), &vol.m_p, one);
    for b in 0..nd {
        let (cb, sb) = d.lift(b);
        for a in 0..nd {
            let (ra, _) = d.lift(a);
            // Tᵀ(−𝔸^{DN}) S T
            m[(ra, cb)] -= blocks.adn[(a, b)] * sb;
        }
        for i in 0..nn {
            // (𝔸^{DD} + ½D) S T
            m[(nv + i, cb)] += (blocks.add[(i, b)] + half * blocks.d_nd[(i, b)]) * sb;
        }
    }
    for j in 0..nn {
        for a in 0..nd {
            let (ra, _) = d.lift(a);
            // Tᵀ(−𝔸^{NN} + ½D)
            m[(ra, nv + j)] += half * blocks.d_dn[(a, j)] - blocks.ann[(a, j)];
        }
        for i in 0..nn {
            m[(nv + i, nv + j)] += blocks.and[(i, j)];
        }
    }
    let offsets = [0, d.n_u(), nv, nv + s.n_edges(), n];
    Ok(CoupledSystem { matrix: m, offsets })
}

/// (ℱ, ℛ) stacked in system order.
pub fn assemble_rhs(d: &Discretization, data: &TransmissionData, blocks: &CalderonBlocks) -> Result<Vec<C64>> {
    assemble_rhs_with(d, data, blocks, Assembly::default())
}

pub fn assemble_rhs_with(d: &Discretization, data: &TransmissionData, blocks: &CalderonBlocks, opt: Assembly) -> Result<Vec<C64>> {
    data.check(d)?;
    let s = &d.spaces;
    let nv = d.n_volume();
    let mut rhs = vec![ZERO; d.n_total()];
    rhs[..d.n_u()].copy_from_slice(&data.j);
    let zeta = data.zeta().concat();
    let g = data.g().concat();
    let dg = matvec(&blocks.d_dn, &g);
    let az = matvec(&blocks.adn, &zeta);
    for a in 0..s.n_dirichlet() {
        let (ra, _) = d.lift(a);
        rhs[ra] -= dg[a] + az[a];
    }
    let r1 = matvec(&blocks.add, &zeta);
    let r2 = matvec(&blocks.d_nd, &zeta);
    for i in 0..s.n_neumann() {
        rhs[nv + i] = r1[i] + 0.5 * opt.half_sign * r2[i];
    }
    Ok(rhs)
}

/// Solution of the coupled system.
#[derive(Clone, Debug)]
pub struct Solution {
    pub u: Vec<C64>,
    pub p: Vec<C64>,
    /// Exterior Neumann data p⃗.
    pub neumann: TraceVectorN,
    /// Exterior Dirichlet data (γ_t U, −γ P) − ζ⃗.
    pub dirichlet: TraceVectorD,
    /// ‖Ax − b‖ / ‖b‖ (0 for b = 0)
    pub residual: f64,
    /// 1-norm condition estimate
    pub condition: f64,
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn col(v: &[C64]) -> Mat<C64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn one_norm(a: &DMat) -> f64 {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Hager–Higham estimate of ‖A⁻¹‖₁ from an LU factorization.
fn inverse_one_norm(lu: &faer::linalg::solvers::PartialPivLu<C64>, n: usize) -> f64 {
    let mut x = col(&vec![C64::new(1.0 / n as f64, 0.0); n]);
    let mut est = 0.0;
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        let y = lu.solve(&x);
        est = (0..n).map(|i| y[(i, 0)].norm()).sum::<f64>();
        let xi = Mat::from_fn(n, 1, |i, _| {
            let v = y[(i, 0)];
            if v.norm() > 0.0 {
                v / v.norm()
            } else {
                C64::new(1.0, 0.0)
            }
        });
        let z = lu.solve_adjoint(&xi);
        let (j, zmax) = (0..n).map(|i| (i, z[(i, 0)].norm())).fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        let ztx: C64 = (0..n).map(|i| z[(i, 0)].conj() * x[(i, 0)]).sum();
        if zmax <= ztx.re || j == last_j {
            break;
        }
        last_j = j;
        x = Mat::zeros(n, 1);
        x[(j, 0)] = C64::new(1.0, 0.0);
    }
    est
}

/// Dense LU with partial pivoting of a coupled system.
pub struct Factorized {
    pub lu: faer::linalg::solvers::PartialPivLu<C64>,
    pub condition: f64,
}

pub fn factorize(system: &CoupledSystem) -> Result<Factorized> {
    let n = system.matrix.nrows();
    let lu = system.matrix.partial_piv_lu();
    let inv = inverse_one_norm(&lu, n);
    let condition = one_norm(&system.matrix) * inv;
    if !condition.is_finite() || condition > 1e14 {
        return Err(Error::Solver(format!("near-resonance or discretization breakdown (condition estimate {condition:.3e})")));
    }
    Ok(Factorized { lu, condition })
}

pub fn solve(d: &Discretization, system: &CoupledSystem, rhs: &[C64], data: &TransmissionData) -> Result<Solution> {
    let f = factorize(system)?;
    solve_factorized(d, system, &f, rhs, data)
}

pub fn solve_factorized(d: &Discretization, system: &CoupledSystem, f: &Factorized, rhs: &[C64], data: &TransmissionData) -> Result<Solution> {
    let n = system.matrix.nrows();
    if rhs.len() != n {
        return Err(Error::Dimension(format!("rhs has {} entries, system has {n}", rhs.len())));
    }
    let x = f.lu.solve(&col(rhs));
    let xv: Vec<C64> = (0..n).map(|i| x[(i, 0)]).collect();
    let ax = matvec(&system.matrix, &xv);
    let rn = norm2(rhs);
    let res: Vec<C64> = ax.iter().zip(rhs).map(|(a, b)| a - b).collect();
    let residual = if rn > 0.0 { norm2(&res) / rn } else { norm2(&res) };
    let o = system.offsets;
    let u = xv[o[0]..o[1]].to_vec();
    let p = xv[o[1]..o[2]].to_vec();
    let neumann = TraceVectorN { p: xv[o[2]..o[3]].to_vec(), q: xv[o[3]..o[4]].to_vec() };
    let mut dirichlet = d.dirichlet_trace(&u, &p);
    for (a, z) in dirichlet.eta.iter_mut().zip(&data.zeta_t) {
        *a -= z;
    }
    for (a, z) in dirichlet.xi.iter_mut().zip(&data.zeta_d) {
        *a -= z;
    }
    Ok(Solution { u, p, neumann, dirichlet, residual, condition: f.condition })
}

/// Exterior field U = −SL(p⃗) − DL(𝒯_D⁺).
pub fn eval_exterior(pot: &Potentials, sol: &Solution, grid: &EvaluationGrid) -> Result<Vec<CV3>> {
    let n = TraceVectorN { p: sol.neumann.p.iter().map(|z| -z).collect(), q: sol.neumann.q.iter().map(|z| -z).collect() };
    let d = TraceVectorD { eta: sol.dirichlet.eta.iter().map(|z| -z).collect(), xi: sol.dirichlet.xi.iter().map(|z| -z).collect() };
    pot.reconstruct(&n, &d, grid)
}

/// Convenience: volume form for a material field.
pub fn volume_form(d: &Discretization, mat: &MaterialField) -> Result<VolumeForm> {
    assemble_volume_form(&d.mesh, &d.edge, &d.nodal, mat)
}

/// Interior U and curl U at tet centroids.
pub fn cell_fields(d: &Discretization, u: &[C64]) -> Result<Vec<(P3, CV3, CV3)>> {
    let l = [0.25; 4];
    (0..d.mesh.tets.len())
        .map(|k| {
            let g = crate::fem::TetGeom::new(&d.mesh, k)?;
            let (v, c) = crate::fem::eval_edge_field(&g, &d.edge.tet_dofs[k], &d.edge.tet_signs[k], u, &l);
            Ok((g.point(&l), v, c))
        })
        .collect()
}

/// y = 𝔾 x restricted to the volume rows, for spot checks.
pub fn apply(system: &CoupledSystem, x: &[C64]) -> Vec<C64> {
    matvec(&system.matrix, x)
}

pub fn sparse_apply(a: &SpMat, x: &[C64]) -> Vec<C64> {
    spmv(a, x)
}
