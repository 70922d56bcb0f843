//! Verification: H^{-1/2} norms, the identity suite, the manufactured
//! transmission problem, the inf-sup probe and negative controls.

use std::fmt::Write as _;

use faer::linalg::solvers::Solve;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bem::{assemble_primitive_ops, compose_calderon, matvec, sparse_to_dense, CalderonBlocks, DMat, OpMask, PanelQuadrature, PrimitiveOps};
use crate::coupling::{
    assemble_rhs_with, assemble_system_with, eval_exterior, factorize, solve_factorized, volume_form, Assembly, CoupledSystem, Discretization,
    TransmissionData,
};
use crate::fem::{assemble_nodal_stiffness, edge_errors, nodal_errors, spmv, MaterialField};
use crate::geom::{self, CV3, P3};
use crate::kernels::{g_radial, radial_hess, KernelEval, WaveContext};
use crate::mesh::VolumeMesh;
use crate::potentials::{winding_number, EvaluationGrid, FieldSample, PotentialQuadrature, Potentials};
use crate::traces::{TraceSpaces, TraceVectorD, TraceVectorN};
use crate::{Error, Result, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Seeded complex vector with entries in [−½, ½]².
pub fn random_vector(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Roughly uniform points on the sphere of radius r (Fibonacci lattice).
pub fn sphere_points(n: usize, r: f64) -> Vec<P3> {
    let ga = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let s = (1.0 - z * z).sqrt();
            let t = ga * i as f64;
            [r * s * t.cos(), r * s * t.sin(), r * z]
        })
        .collect()
}

/// ‖a‖_{−1/2} = sqrt(Re aᴴ V₀ a) for a static single-layer Gram V₀.
pub fn hminus_half_norm(v0: &DMat, a: &[C64]) -> Result<f64> {
    if v0.nrows() != a.len() || v0.ncols() != a.len() {
        return Err(Error::Dimension(format!("Gram is {}×{}, vector has {}", v0.nrows(), v0.ncols(), a.len())));
    }
    let va = matvec(v0, a);
    let q: f64 = a.iter().zip(&va).map(|(x, y)| (x.conj() * y).re).sum();
    if q < -1e-12 * (1.0 + norm2(a).powi(2)) {
        return Err(Error::Solver(format!("negative H^-1/2 energy {q:e}: Gram assembly is broken")));
    }
    Ok(q.max(0.0).sqrt())
}

/// Static (κ = 0, η = 1) single-layer Grams used for trace norms.
#[derive(Clone, Debug)]
pub struct StaticGram {
    /// RWG × RWG
    pub vv: DMat,
    /// RWG div × RWG div
    pub vdiv: DMat,
    /// P0 × P0
    pub vq: DMat,
}

impl StaticGram {
    pub fn new(s: &TraceSpaces, q: &PanelQuadrature) -> Result<Self> {
        let ke = KernelEval::new(WaveContext::from_kappa(0.0, 1.0)?);
        let m = OpMask { vv: true, vdiv: true, vq: true, ..OpMask::default() };
        let ops = assemble_primitive_ops(&ke, s, q, &m)?;
        Ok(StaticGram { vv: ops.vv, vdiv: ops.vdiv, vq: ops.vq })
    }

    /// H^{−1/2} norm of a Neumann trace (RWG part without the div term).
    pub fn norm_n(&self, n: &TraceVectorN) -> Result<f64> {
        let a = hminus_half_norm(&self.vv, &n.p)?;
        let b = hminus_half_norm(&self.vq, &n.q)?;
        Ok((a * a + b * b).sqrt())
    }
}

/// One discretization level with its Calderón blocks.
pub struct Level {
    pub d: Discretization,
    pub ops: PrimitiveOps,
    pub blocks: CalderonBlocks,
    pub stat: StaticGram,
}

impl Level {
    pub fn build(mesh: VolumeMesh, ke: &KernelEval, q: &PanelQuadrature) -> Result<Self> {
        let d = Discretization::new(mesh)?;
        let ops = assemble_primitive_ops(ke, &d.spaces, q, &OpMask::all())?;
        let blocks = compose_calderon(ke, &d.spaces, &ops);
        let stat = StaticGram::new(&d.spaces, q)?;
        Ok(Level { d, ops, blocks, stat })
    }

    pub fn h(&self) -> f64 {
        self.d.spaces.bmesh.h_max()
    }
}

// ---------------------------------------------------------------------------
// Reports

/// One named check with its per-level (or single) measurements.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub values: Vec<f64>,
    pub tol: f64,
    pub pass: bool,
    pub note: String,
}

impl Check {
    fn below(name: &str, values: Vec<f64>, tol: f64) -> Self {
        let pass = values.iter().all(|v| v.is_finite() && *v < tol);
        Check { name: name.into(), values, tol, pass, note: String::new() }
    }

    /// Monotone decrease (or below the 1e-10 floor) with the last value below tol.
    fn decreasing(name: &str, values: Vec<f64>, tol: f64) -> Self {
        let mono = values.windows(2).all(|w| w[1] < w[0] || w[1] < 1e-10);
        let last = values.last().copied().unwrap_or(f64::NAN);
        let pass = mono && last.is_finite() && last < tol;
        let note = if mono { String::new() } else { "not monotone".into() };
        Check { name: name.into(), values, tol, pass, note }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let vals: Vec<String> = c.values.iter().map(|v| format!("{v:.3e}")).collect();
            let _ = write!(s, "{} {} [{}] tol {:.1e}", if c.pass { "PASS" } else { "FAIL" }, c.name, vals.join(", "), c.tol);
            if !c.note.is_empty() {
                let _ = write!(s, " ({})", c.note);
            }
            s.push('\n');
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Kernel branches

/// Largest relative gap between the series and closed-form G̃ derivatives
/// on both sides of the switch radius.
pub fn kernel_branch_gap(ctx: &WaveContext) -> f64 {
    let ke = KernelEval::new(*ctx);
    let kmax = ctx.kappa.norm().max(ctx.kappa_t.norm());
    if kmax == 0.0 || ctx.eta == 1.0 {
        return 0.0;
    }
    let rel = |a: C64, b: C64| (a - b).norm() / a.norm().max(b.norm()).max(1e-300);
    let mut worst: f64 = 0.0;
    for s in [0.5, 0.8, 0.95, 1.0, 1.05, 1.25, 1.5] {
        let r = s * ke.series_threshold / kmax;
        let a = ke.gtilde_series(r);
        let b = ke.gtilde_closed(r);
        worst = worst.max(rel(a.0, b.0)).max(rel(a.1, b.1)).max(rel(a.2, b.2));
    }
    worst
}

pub fn check_kernel_branches() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for &(k, eta) in &[(1.0, 2.0), (3.0, 4.0), (0.5, 0.25), (2.0, 9.0), (0.1, 1.5)] {
        worst = worst.max(kernel_branch_gap(&WaveContext::from_kappa(k, eta)?));
    }
    Ok(Check::below("kernel_branch_consistency", vec![worst], 1e-11))
}

// ---------------------------------------------------------------------------
// Potential identities by finite differences

const FD_H: f64 = 1e-3;

fn fd_partial<T: Copy>(f: &dyn Fn(P3) -> Result<T>, x: P3, a: usize, comb: &dyn Fn([T; 4]) -> T) -> Result<T> {
    let shifted = |t: f64| {
        let mut y = x;
        y[a] += t * FD_H;
        f(y)
    };
    Ok(comb([shifted(2.0)?, shifted(1.0)?, shifted(-1.0)?, shifted(-2.0)?]))
}

fn d4(v: [C64; 4]) -> C64 {
    (-v[0] + 8.0 * v[1] - 8.0 * v[2] + v[3]) / (12.0 * FD_H)
}

fn d4v(v: [CV3; 4]) -> CV3 {
    [d4([v[0][0], v[1][0], v[2][0], v[3][0]]), d4([v[0][1], v[1][1], v[2][1], v[3][1]]), d4([v[0][2], v[1][2], v[2][2], v[3][2]])]
}

/// Jacobian J[i][a] = ∂_a F_i by fourth-order central differences.
fn fd_jacobian(f: &dyn Fn(P3) -> Result<CV3>, x: P3) -> Result<[CV3; 3]> {
    let mut j = [geom::CZERO3; 3];
    for a in 0..3 {
        let col = fd_partial(f, x, a, &d4v)?;
        for i in 0..3 {
            j[i][a] = col[i];
        }
    }
    Ok(j)
}

fn fd_div(f: &dyn Fn(P3) -> Result<CV3>, x: P3) -> Result<C64> {
    let j = fd_jacobian(f, x)?;
    Ok(j[0][0] + j[1][1] + j[2][2])
}

fn fd_curl(f: &dyn Fn(P3) -> Result<CV3>, x: P3) -> Result<CV3> {
    let j = fd_jacobian(f, x)?;
    Ok([j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]])
}

fn fd_grad(f: &dyn Fn(P3) -> Result<C64>, x: P3) -> Result<CV3> {
    Ok([fd_partial(f, x, 0, &d4)?, fd_partial(f, x, 1, &d4)?, fd_partial(f, x, 2, &d4)?])
}

/// Same rule everywhere away from Γ, so finite differences see one smooth function.
fn identity_quadrature() -> PotentialQuadrature {
    PotentialQuadrature { far_order: 7, mid_order: 7, ..PotentialQuadrature::default() }
}

/// div Ψ_ν(p) = ψ_ν(div_Γ p), curl Υ(ξ) = curl Ψ(ξn) and the Hodge–Helmholtz
/// residuals of SL and DL at far points.
pub fn check_potential_identities(s: &TraceSpaces, ctx: &WaveContext, seed: u64) -> Result<Vec<Check>> {
    let ke = KernelEval::new(*ctx);
    let mut pot = Potentials::new(s, &ke);
    pot.quad = identity_quadrature();
    let p = random_vector(s.n_edges(), seed);
    let q = random_vector(s.n_tris(), seed + 1);
    let xi = random_vector(s.n_nodes(), seed + 2);
    let eta = random_vector(s.n_edges(), seed + 3);
    let divp = spmv(&s.surface_div(), &p);
    let nvec = TraceVectorN { p: p.clone(), q };
    let dvec = TraceVectorD { eta, xi: xi.clone() };
    let pts = sphere_points(10, 2.5);
    let (mut e_div, mut e_ups, mut e_sl, mut e_dl) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &x in &pts {
        for nu in [ctx.kappa, ctx.kappa_t] {
            let lhs = fd_div(&|y| pot.eval_vector_sl(&p, nu, y), x)?;
            let rhs = pot.eval_scalar_sl(&divp, nu, x)?;
            e_div = e_div.max((lhs - rhs).norm() / rhs.norm().max(1e-300));
        }
        let a = fd_curl(&|y| pot.eval_upsilon(&xi, y), x)?;
        let b = fd_curl(&|y| pot.eval_normal_sl(&xi, y), x)?;
        e_ups = e_ups.max(geom::cnorm(geom::csub(a, b)) / geom::cnorm(b).max(1e-300));
        let resid = |f: &dyn Fn(P3) -> Result<FieldSample>| -> Result<f64> {
            let cc = fd_curl(&|y| Ok(f(y)?.curl), x)?;
            let gd = fd_grad(&|y| Ok(f(y)?.eta_div), x)?;
            let u = f(x)?.u;
            let ku = [ctx.kappa2 * u[0], ctx.kappa2 * u[1], ctx.kappa2 * u[2]];
            let r = geom::csub(geom::csub(cc, gd), ku);
            let scale = geom::cnorm(cc).max(geom::cnorm(gd)).max(geom::cnorm(ku)).max(1e-300);
            Ok(geom::cnorm(r) / scale)
        };
        e_sl = e_sl.max(resid(&|y| pot.eval_sl_full(&nvec, y))?);
        e_dl = e_dl.max(resid(&|y| pot.eval_dl_full(&dvec, y))?);
    }
    Ok(vec![
        Check::below("div_psi_identity", vec![e_div], 1e-6),
        Check::below("curl_upsilon_identity", vec![e_ups], 1e-6),
        Check::below("sl_pde_residual", vec![e_sl], 1e-5),
        Check::below("dl_pde_residual", vec![e_dl], 1e-5),
    ])
}

// ---------------------------------------------------------------------------
// Jump relations

/// Relative L²(Γ) residuals of the four jump relations on one mesh (traces
/// use the panel normals, sides are found geometrically):
/// [𝒯_D]SL, [𝒯_N]SL − p⃗, [𝒯_N]DL, [𝒯_D]DL − η⃗.
pub fn jump_residuals(s: &TraceSpaces, ctx: &WaveContext, seed: u64) -> Result<[f64; 4]> {
    let ke = KernelEval::new(*ctx);
    let pot = Potentials::new(s, &ke);
    let nvec = TraceVectorN { p: random_vector(s.n_edges(), seed), q: random_vector(s.n_tris(), seed + 1) };
    let dvec = TraceVectorD { eta: random_vector(s.n_edges(), seed + 2), xi: random_vector(s.n_nodes(), seed + 3) };
    let h = s.bmesh.h_max();
    let delta = h * h;
    let c = [1.0 / 3.0; 3];
    let per: Vec<Result<[[f64; 2]; 4]>> = crate::par_map(s.n_tris(), |k| {
        let pa = &s.panels[k];
        let y = pa.centroid;
        let n = pa.n;
        // sides are geometric: "−" is where the winding number is 1, whatever n says
        let probe = geom::add(y, geom::scale(1e-3 * pa.diam, n));
        let out_sign = if winding_number(s, probe).abs() < 0.5 { 1.0 } else { -1.0 };
        // one-sided traces, Richardson-extrapolated from δ, δ/2, δ/4
        let traces = |f: &dyn Fn(P3) -> Result<FieldSample>, side: f64| -> Result<[C64; 8]> {
            let mut t = [[ZERO; 8]; 3];
            for (i, dd) in [delta, 0.5 * delta, 0.25 * delta].iter().enumerate() {
                let v = f(geom::add(y, geom::scale(side * dd, n)))?;
                let un = geom::rcdot(n, v.u);
                let tang = geom::csub(v.u, geom::cscale(un, n));
                let rot = geom::ccross(geom::cscale(C64::new(1.0, 0.0), n), v.curl);
                t[i] = [tang[0], tang[1], tang[2], v.eta_div, rot[0], rot[1], rot[2], un];
            }
            let mut out = [ZERO; 8];
            for j in 0..8 {
                out[j] = (8.0 * t[2][j] - 6.0 * t[1][j] + t[0][j]) / 3.0;
            }
            Ok(out)
        };
        let sl_in = traces(&|x| pot.eval_sl_full(&nvec, x), -out_sign)?;
        let sl_out = traces(&|x| pot.eval_sl_full(&nvec, x), out_sign)?;
        let dl_in = traces(&|x| pot.eval_dl_full(&dvec, x), -out_sign)?;
        let dl_out = traces(&|x| pot.eval_dl_full(&dvec, x), out_sign)?;
        let pv = s.eval_div(k, &nvec.p, &c);
        let ev = s.eval_curl(k, &dvec.eta, &c);
        let xv = s.eval_p1(k, &dvec.xi, &c);
        let nd = [ev[0], ev[1], ev[2], xv];
        let nn = [pv[0], pv[1], pv[2], nvec.q[k]];
        let sq = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let jump = |a: &[C64; 8], b: &[C64; 8], r: std::ops::Range<usize>| -> Vec<C64> { r.map(|j| a[j] - b[j]).collect() };
        let side_ref = |a: &[C64; 8], b: &[C64; 8], r: std::ops::Range<usize>| 0.5 * (sq(&a[r.clone()]) + sq(&b[r]));
        let w = pa.area;
        let j_sl_d = jump(&sl_in, &sl_out, 0..4);
        let j_sl_n = sub(&jump(&sl_in, &sl_out, 4..8), &nn);
        let j_dl_n = jump(&dl_in, &dl_out, 4..8);
        let j_dl_d = sub(&jump(&dl_in, &dl_out, 0..4), &nd);
        Ok([
            [w * sq(&j_sl_d), w * side_ref(&sl_in, &sl_out, 0..4)],
            [w * sq(&j_sl_n), w * sq(&nn)],
            [w * sq(&j_dl_n), w * side_ref(&dl_in, &dl_out, 4..8)],
            [w * sq(&j_dl_d), w * sq(&nd)],
        ])
    });
    let mut acc = [[0.0; 2]; 4];
    for r in per {
        let r = r?;
        for i in 0..4 {
            acc[i][0] += r[i][0];
            acc[i][1] += r[i][1];
        }
    }
    Ok([0, 1, 2, 3].map(|i| (acc[i][0] / acc[i][1].max(1e-300)).sqrt()))
}

pub const JUMP_NAMES: [&str; 4] = ["jump_dirichlet_sl", "jump_neumann_sl_minus_p", "jump_neumann_dl", "jump_dirichlet_dl_minus_eta"];

pub fn check_jumps(spaces: &[&TraceSpaces], ctx: &WaveContext, seed: u64) -> Result<Vec<Check>> {
    let mut vals = [vec![], vec![], vec![], vec![]];
    for s in spaces {
        let r = jump_residuals(s, ctx, seed)?;
        for i in 0..4 {
            vals[i].push(r[i]);
        }
    }
    Ok((0..4).map(|i| Check::decreasing(JUMP_NAMES[i], vals[i].clone(), 5e-2)).collect())
}

// ---------------------------------------------------------------------------
// Matrix identities

/// ‖N_t ξ − (N_nᵀ + H̃ᵀ) ξ‖ / ‖N_t ξ‖ for a random ξ.
pub fn two_last_terms_residual(ops: &PrimitiveOps, seed: u64) -> f64 {
    let x = random_vector(ops.nt.ncols(), seed);
    let lhs = matvec(&ops.nt, &x);
    let a = matvec(&ops.np.transpose().to_owned(), &x);
    let b = if ops.ht.nrows() > 0 { matvec(&ops.ht.transpose().to_owned(), &x) } else { vec![ZERO; lhs.len()] };
    let num: f64 = (0..lhs.len()).map(|i| (lhs[i] - a[i] - b[i]).norm_sqr()).sum::<f64>().sqrt();
    num / norm2(&lhs).max(1e-300)
}

/// Coefficient-level ‖div_Γ curl_Γ‖ (max abs entry).
pub fn div_curl_residual(s: &TraceSpaces) -> f64 {
    let a = sparse_to_dense(&s.surface_div());
    let b = sparse_to_dense(&s.surface_curl());
    let c = &a * &b;
    let mut m: f64 = 0.0;
    for j in 0..c.ncols() {
        for i in 0..c.nrows() {
            m = m.max(c[(i, j)].norm());
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Manufactured point-source fields

/// ∇G_κ̃(x − x_s) + curl(G_κ(x − x_s) c).
#[derive(Clone, Copy, Debug)]
pub struct PointSource {
    pub center: P3,
    pub c: P3,
}

impl PointSource {
    fn parts(&self, ctx: &WaveContext, x: P3) -> (P3, f64, (C64, C64, C64), (C64, C64, C64)) {
        let d = geom::sub(x, self.center);
        let r = geom::norm(d);
        let dhat = geom::scale(1.0 / r, d);
        (dhat, r, g_radial(ctx.kappa, r), g_radial(ctx.kappa_t, r))
    }

    pub fn u(&self, ctx: &WaveContext, x: P3) -> CV3 {
        let (dhat, _, gk, gt) = self.parts(ctx, x);
        let grad_t = geom::cscale(gt.1, dhat);
        let grad_k = geom::cscale(gk.1, dhat);
        geom::cadd(grad_t, geom::crcross(grad_k, self.c))
    }

    /// curl curl(G c) = Hess(G) c + κ² G c
    pub fn curl(&self, ctx: &WaveContext, x: P3) -> CV3 {
        let (dhat, r, gk, _) = self.parts(ctx, x);
        let h = radial_hess(dhat, gk.2, gk.1 / r);
        let mut v = geom::cscale(ctx.kappa2 * gk.0, self.c);
        for i in 0..3 {
            for j in 0..3 {
                v[i] += h[i][j] * self.c[j];
            }
        }
        v
    }

    pub fn div(&self, ctx: &WaveContext, x: P3) -> C64 {
        let (_, _, _, gt) = self.parts(ctx, x);
        -ctx.kappa_t * ctx.kappa_t * gt.0
    }

    /// ∇ div
    pub fn grad_div(&self, ctx: &WaveContext, x: P3) -> CV3 {
        let (dhat, _, _, gt) = self.parts(ctx, x);
        geom::cscale(-ctx.kappa_t * ctx.kappa_t * gt.1, dhat)
    }

    /// 𝒯_D = (γ_t U, η div U) with a scalar factor on the second part.
    pub fn dirichlet(&self, ctx: &WaveContext, s: &TraceSpaces, div_factor: f64) -> TraceVectorD {
        TraceVectorD {
            eta: s.interpolate_curl(&|x| self.u(ctx, x)),
            xi: s.interpolate_p1(&|x| self.div(ctx, x) * div_factor),
        }
    }

    /// 𝒯_N = (n × curl U, U·n).
    pub fn neumann(&self, ctx: &WaveContext, s: &TraceSpaces) -> TraceVectorN {
        TraceVectorN {
            p: s.interpolate_div(&|x, k| geom::ccross(geom::cscale(C64::new(1.0, 0.0), s.panels[k].n), self.curl(ctx, x))),
            q: s.project_p0(&|x, k| geom::rcdot(s.panels[k].n, self.u(ctx, x))),
        }
    }
}

/// Interior field sourced outside Γ, exterior field sourced inside.
#[derive(Clone, Copy, Debug)]
pub struct Manufactured {
    pub ctx: WaveContext,
    pub interior: PointSource,
    pub exterior: PointSource,
    /// Exterior errors are sampled on the sphere of radius 3·radius about this centre.
    pub body: (P3, f64),
}

impl Manufactured {
    /// Sources for the unit ball.
    pub fn standard(ctx: WaveContext) -> Self {
        Self::centered(ctx, [0.0; 3], 1.0)
    }

    /// Sources scaled to the sphere about the bounding-box centre that holds the mesh.
    pub fn for_mesh(ctx: WaveContext, mesh: &VolumeMesh) -> Self {
        let (lo, hi) = mesh.bbox();
        let c = [0, 1, 2].map(|a| 0.5 * (lo[a] + hi[a]));
        let r = mesh.vertices.iter().map(|&v| geom::dist(v, c)).fold(0.0, f64::max);
        Self::centered(ctx, c, r)
    }

    /// Sources placed relative to a body of the given centre and radius.
    pub fn centered(ctx: WaveContext, center: P3, radius: f64) -> Self {
        let at = |o: P3| geom::add(center, geom::scale(radius, o));
        Manufactured {
            ctx,
            interior: PointSource { center: at([1.6, 0.7, -0.5]), c: [0.3, -0.5, 0.8] },
            exterior: PointSource { center: at([0.15, -0.1, 0.2]), c: [-0.4, 0.2, 0.6] },
            body: (center, radius),
        }
    }

    pub fn probe_points(&self) -> Vec<P3> {
        let (c, r) = self.body;
        sphere_points(10, 3.0 * r).into_iter().map(|x| geom::add(c, x)).collect()
    }

    /// P = −ε₀ div U_in
    pub fn p(&self, x: P3) -> C64 {
        -self.ctx.eps0 * self.interior.div(&self.ctx, x)
    }

    pub fn grad_p(&self, x: P3) -> CV3 {
        let g = self.interior.grad_div(&self.ctx, x);
        [-self.ctx.eps0 * g[0], -self.ctx.eps0 * g[1], -self.ctx.eps0 * g[2]]
    }

    /// Trace differences for matching interior coefficients, J = 0.
    pub fn data(&self, d: &Discretization) -> TransmissionData {
        let s = &d.spaces;
        let c = &self.ctx;
        let ni = self.interior.neumann(c, s);
        let ne = self.exterior.neumann(c, s);
        let di = self.interior.dirichlet(c, s, c.eps0);
        let de = self.exterior.dirichlet(c, s, c.eta);
        let mut data = TransmissionData::zeros(d);
        data.g_r = ni.p.iter().zip(&ne.p).map(|(a, b)| a / c.mu0 - b).collect();
        data.g_n = ni.q.iter().zip(&ne.q).map(|(a, b)| a * c.eps0 - b).collect();
        data.zeta_t = sub(&di.eta, &de.eta);
        data.zeta_d = sub(&di.xi, &de.xi);
        data
    }
}

// ---------------------------------------------------------------------------
// Convergence

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub dofs: usize,
    pub err_l2_u: f64,
    pub err_hcurl_u: f64,
    pub err_h1_p: f64,
    pub err_trace_n: f64,
    /// max over far points of |U_h − U| / max |U|
    pub err_exterior: f64,
    pub residual: f64,
    pub condition: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

pub const CONVERGENCE_HEADER: &str = "level,h,dofs,err_L2_U,err_Hcurl_U,err_H1_P,err_traceN,rate_L2_U,rate_Hcurl_U,rate_H1_P,rate_traceN";

fn rate(e0: f64, e1: f64, h0: f64, h1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

impl ConvergenceReport {
    fn errs(r: &ConvergenceRow) -> [f64; 4] {
        [r.err_l2_u, r.err_hcurl_u, r.err_h1_p, r.err_trace_n]
    }

    /// Rates between consecutive rows, in the CSV column order.
    pub fn rates(&self) -> Vec<[f64; 4]> {
        self.rows
            .windows(2)
            .map(|w| {
                let (a, b) = (Self::errs(&w[0]), Self::errs(&w[1]));
                [0, 1, 2, 3].map(|i| rate(a[i], b[i], w[0].h, w[1].h))
            })
            .collect()
    }

    /// Fitted L² rate over all levels (first to last).
    pub fn overall_l2_rate(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) if self.rows.len() > 1 => rate(a.err_l2_u, b.err_l2_u, a.h, b.h),
            _ => f64::NAN,
        }
    }

    /// RFC-4180 CSV (CRLF line ends); rates empty on the first row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CONVERGENCE_HEADER);
        s.push_str("\r\n");
        let rates = self.rates();
        for (i, r) in self.rows.iter().enumerate() {
            let _ = write!(s, "{},{:.6e},{},{:.6e},{:.6e},{:.6e},{:.6e}", r.level, r.h, r.dofs, r.err_l2_u, r.err_hcurl_u, r.err_h1_p, r.err_trace_n);
            if i == 0 {
                s.push_str(",,,,");
            } else {
                for v in rates[i - 1] {
                    let _ = write!(s, ",{v:.4}");
                }
            }
            s.push_str("\r\n");
        }
        s
    }
}

fn rel(err2: f64, norm2: f64) -> f64 {
    if norm2 > 1e-300 {
        (err2 / norm2).sqrt()
    } else {
        err2.sqrt()
    }
}

/// Solve the manufactured problem on one prepared level.
pub fn manufactured_level(level: usize, lv: &Level, m: &Manufactured, asm: Assembly) -> Result<ConvergenceRow> {
    let ctx = &m.ctx;
    let d = &lv.d;
    let vol = volume_form(d, &MaterialField::matching(ctx))?;
    let system = assemble_system_with(d, &vol, ctx.omega2, &lv.blocks, asm)?;
    let data = m.data(d);
    let rhs = assemble_rhs_with(d, &data, &lv.blocks, asm)?;
    let f = factorize(&system)?;
    let sol = solve_factorized(d, &system, &f, &rhs, &data)?;

    let uf = |x: P3| m.interior.u(ctx, x);
    let cf = |x: P3| m.interior.curl(ctx, x);
    let (e0, e1) = edge_errors(&d.mesh, &d.edge, &sol.u, &uf, &cf)?;
    let zero_u = vec![ZERO; d.n_u()];
    let (n0, n1) = edge_errors(&d.mesh, &d.edge, &zero_u, &uf, &cf)?;
    let pf = |x: P3| m.p(x);
    let gf = |x: P3| m.grad_p(x);
    let (p0, p1) = nodal_errors(&d.mesh, &sol.p, &pf, &gf)?;
    let zero_p = vec![ZERO; d.n_p()];
    let (q0, q1) = nodal_errors(&d.mesh, &zero_p, &pf, &gf)?;

    let exact_n = m.exterior.neumann(ctx, &d.spaces);
    let diff = TraceVectorN { p: sub(&sol.neumann.p, &exact_n.p), q: sub(&sol.neumann.q, &exact_n.q) };
    let err_trace_n = lv.stat.norm_n(&diff)? / lv.stat.norm_n(&exact_n)?.max(1e-300);

    let ke = KernelEval::new(*ctx);
    let pot = Potentials::new(&d.spaces, &ke);
    let grid = EvaluationGrid::from_points(&d.spaces, m.probe_points());
    let uh = eval_exterior(&pot, &sol, &grid)?;
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for (x, v) in grid.points.iter().zip(&uh) {
        let ex = m.exterior.u(ctx, *x);
        num = num.max(geom::cnorm(geom::csub(*v, ex)));
        den = den.max(geom::cnorm(ex));
    }
    Ok(ConvergenceRow {
        level,
        h: lv.h(),
        dofs: d.n_total(),
        err_l2_u: rel(e0, n0),
        err_hcurl_u: rel(e0 + e1, n0 + n1),
        err_h1_p: rel(p0 + p1, q0 + q1),
        err_trace_n,
        err_exterior: num / den.max(1e-300),
        residual: sol.residual,
        condition: sol.condition,
    })
}

pub fn manufactured_on_levels(levels: &[Level], m: &Manufactured, asm: Assembly) -> Result<ConvergenceReport> {
    let mut rows = Vec::with_capacity(levels.len());
    for (i, lv) in levels.iter().enumerate() {
        rows.push(manufactured_level(i, lv, m, asm)?);
    }
    Ok(ConvergenceReport { rows })
}

/// Build every level from its mesh and run the manufactured problem.
pub fn manufactured_transmission(meshes: Vec<VolumeMesh>, ctx: &WaveContext, q: &PanelQuadrature) -> Result<ConvergenceReport> {
    let first = meshes.first().ok_or_else(|| Error::Invalid("no levels given".into()))?;
    let m = Manufactured::for_mesh(*ctx, first);
    let ke = KernelEval::new(*ctx);
    let levels = meshes.into_iter().map(|m| Level::build(m, &ke, q)).collect::<Result<Vec<_>>>()?;
    manufactured_on_levels(&levels, &m, Assembly::default())
}

// ---------------------------------------------------------------------------
// Calderón projector

/// Interior Cauchy data (𝒯_D U_in ; 𝒯_N U_in) in the layout of `CalderonBlocks::full`.
pub fn interior_cauchy(ctx: &WaveContext, s: &TraceSpaces, src: &PointSource) -> Vec<C64> {
    let d = src.dirichlet(ctx, s, ctx.eta);
    let n = src.neumann(ctx, s);
    let mut x = d.concat();
    x.extend(n.concat());
    x
}

/// ‖(½D − s𝔸)x‖ / ‖½Dx‖ for interior Cauchy data x (s = 1 is the correct sign).
pub fn projector_residual(blocks: &CalderonBlocks, x: &[C64], sign: f64) -> f64 {
    let a = matvec(&blocks.full(), x);
    let dx = matvec(&blocks.gram(), x);
    let r: Vec<C64> = dx.iter().zip(&a).map(|(d, a)| 0.5 * d - sign * a).collect();
    norm2(&r) / (0.5 * norm2(&dx)).max(1e-300)
}

/// Numerical rank deficiency of the duality Gram (0 when invertible).
pub fn gram_rank_deficiency(blocks: &CalderonBlocks) -> usize {
    let d = blocks.gram();
    if d.nrows() != d.ncols() {
        return d.nrows().abs_diff(d.ncols());
    }
    let sv = d.singular_values().unwrap_or_default();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&v| v <= 1e-12 * smax).count()
}

/// Gram-weighted ‖(D⁻¹𝔸)² − ¼Id‖₂, or NaN when D is singular.
pub fn projector_square_defect(blocks: &CalderonBlocks) -> f64 {
    if gram_rank_deficiency(blocks) > 0 {
        return f64::NAN;
    }
    let d = blocks.gram();
    let a = blocks.full();
    let lu = d.partial_piv_lu();
    let b = lu.solve(&a);
    let mut e = &b * &b;
    for i in 0..e.nrows() {
        e[(i, i)] -= C64::new(0.25, 0.0);
    }
    e.singular_values().map(|s| s.iter().cloned().fold(0.0, f64::max)).unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------------------
// Inf-sup probe

/// Block norm Gram: H(curl) × H¹ × (H^{-1/2}(div_Γ) × H^{-1/2}).
pub fn norm_gram(lv: &Level) -> Result<DMat> {
    let d = &lv.d;
    let ones = MaterialField::uniform(C64::new(1.0, 0.0), C64::new(1.0, 0.0))?;
    let vol = volume_form(d, &ones)?;
    let stiff = assemble_nodal_stiffness(&d.mesh)?;
    let (nu, nv) = (d.n_u(), d.n_volume());
    let ne = d.spaces.n_edges();
    let n = d.n_total();
    let mut m = Mat::<C64>::zeros(n, n);
    for a in [&vol.a_cc, &vol.m_eps] {
        for t in a.triplet_iter() {
            m[(t.row, t.col)] += *t.val;
        }
    }
    for a in [&stiff, &vol.m_p] {
        for t in a.triplet_iter() {
            m[(nu + t.row, nu + t.col)] += *t.val;
        }
    }
    for j in 0..ne {
        for i in 0..ne {
            m[(nv + i, nv + j)] = lv.stat.vv[(i, j)] + lv.stat.vdiv[(i, j)];
        }
    }
    let nf = d.spaces.n_tris();
    for j in 0..nf {
        for i in 0..nf {
            m[(nv + ne + i, nv + ne + j)] = lv.stat.vq[(i, j)];
        }
    }
    // symmetrize against quadrature noise
    let mt = m.adjoint().to_owned();
    Ok(Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + mt[(i, j)])))
}

/// σ_min(M^{-1/2} G M^{-1/2}) by inverse iteration with a dense LU of G and
/// a Cholesky factor of M.
pub fn smallest_singular_value(g: &DMat, m: &DMat, iters: usize) -> Result<f64> {
    let n = g.nrows();
    if g.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension("inf-sup probe needs square matrices of equal size".into()));
    }
    let llt = m.llt(faer::Side::Lower).map_err(|_| Error::Solver("norm Gram is not positive definite".into()))?;
    let l = llt.L().to_owned();
    let lh = l.adjoint().to_owned();
    let lu = g.partial_piv_lu();
    let mut x = Mat::<C64>::from_fn(n, 1, |i, _| C64::new(1.0 + (i % 7) as f64 * 0.1, (i % 3) as f64 * 0.05));
    let mut lam = 0.0;
    for _ in 0..iters {
        let nx = x.norm_l2();
        x *= faer::Scale(C64::new(1.0 / nx, 0.0));
        // y = B⁻¹ B⁻ᴴ x with B = L⁻¹ G L⁻ᴴ
        let z = &l * &x;
        let z = lu.solve_adjoint(&z);
        let z = &lh * &z;
        let z = &l * &z;
        let z = lu.solve(&z);
        let y = &lh * &z;
        let new = y.norm_l2();
        let done = (new - lam).abs() <= 1e-10 * new;
        lam = new;
        x = y;
        if done {
            break;
        }
    }
    Ok(1.0 / lam.sqrt())
}

pub fn estimate_infsup(lv: &Level, system: &CoupledSystem) -> Result<f64> {
    let m = norm_gram(lv)?;
    smallest_singular_value(&system.matrix, &m, 200)
}

/// Coupled matrix with matching interior coefficients.
pub fn level_system(lv: &Level, ctx: &WaveContext) -> Result<CoupledSystem> {
    let vol = volume_form(&lv.d, &MaterialField::matching(ctx))?;
    assemble_system_with(&lv.d, &vol, ctx.omega2, &lv.blocks, Assembly::default())
}

/// Condition estimates of the coupled system over a κ sweep (η fixed).
pub fn kappa_sweep(mesh: &VolumeMesh, kappas: &[f64], eta: f64, q: &PanelQuadrature) -> Result<Vec<f64>> {
    let d = Discretization::new(mesh.clone())?;
    let mut out = Vec::with_capacity(kappas.len());
    for &k in kappas {
        let ctx = WaveContext::from_kappa(k, eta)?;
        let ke = KernelEval::new(ctx);
        let ops = assemble_primitive_ops(&ke, &d.spaces, q, &OpMask::all())?;
        let blocks = compose_calderon(&ke, &d.spaces, &ops);
        let vol = volume_form(&d, &MaterialField::matching(&ctx))?;
        let system = assemble_system_with(&d, &vol, ctx.omega2, &blocks, Assembly::default())?;
        out.push(match factorize(&system) {
            Ok(f) => f.condition,
            Err(_) => f64::INFINITY,
        });
    }
    Ok(out)
}

/// Indices whose condition exceeds 10× the sweep median.
pub fn condition_spikes(cond: &[f64]) -> Vec<usize> {
    let mut s: Vec<f64> = cond.iter().cloned().filter(|c| c.is_finite()).collect();
    s.sort_by(|a, b| a.total_cmp(b));
    let med = if s.is_empty() { f64::INFINITY } else { s[s.len() / 2] };
    (0..cond.len()).filter(|&i| !(cond[i] <= 10.0 * med)).collect()
}

/// No two neighbouring sweep points are both spikes.
pub fn spikes_isolated(spikes: &[usize]) -> bool {
    spikes.windows(2).all(|w| w[1] > w[0] + 1)
}

// ---------------------------------------------------------------------------
// Uniqueness with contrast

/// Zero-data solve with ε = (2 + 0.1i)ε₀, μ = 1.5μ₀ on tets whose centroid has
/// |x| < ½. Returns (‖x‖, Gram scale, condition).
pub fn zero_data_contrast(lv: &Level, ctx: &WaveContext) -> Result<(f64, f64, f64)> {
    let mut mesh = lv.d.mesh.clone();
    for k in 0..mesh.tets.len() {
        let p = mesh.tet_points(k);
        let c = [0, 1, 2].map(|a| 0.25 * (p[0][a] + p[1][a] + p[2][a] + p[3][a]));
        mesh.regions[k] = if geom::norm(c) < 0.5 { 2 } else { 1 };
    }
    let d = Discretization::new(mesh)?;
    let mat = MaterialField::matching(ctx).with_region(2, C64::new(1.5 * ctx.mu0, 0.0), C64::new(2.0, 0.1) * ctx.eps0)?;
    let vol = volume_form(&d, &mat)?;
    let system = assemble_system_with(&d, &vol, ctx.omega2, &lv.blocks, Assembly::default())?;
    let data = TransmissionData::zeros(&d);
    let rhs = assemble_rhs_with(&d, &data, &lv.blocks, Assembly::default())?;
    let f = factorize(&system)?;
    let sol = solve_factorized(&d, &system, &f, &rhs, &data)?;
    let mut x = sol.u.clone();
    x.extend(&sol.p);
    x.extend(sol.neumann.concat());
    let mut scale: f64 = 0.0;
    for j in 0..system.matrix.ncols() {
        for i in 0..system.matrix.nrows() {
            scale = scale.max(system.matrix[(i, j)].norm());
        }
    }
    Ok((norm2(&x), scale, f.condition))
}

// ---------------------------------------------------------------------------
// Suite

/// Gram-weighted (D⁻¹𝔸)² − ¼Id check; fails with a note when D is singular.
pub fn check_projector_square(lv: &Level) -> Check {
    let def = gram_rank_deficiency(&lv.blocks);
    let v = projector_square_defect(&lv.blocks);
    let mut c = Check::below("projector_square", vec![v], 0.15);
    if def > 0 {
        c.note = format!("duality Gram is singular (rank deficiency {def}); D⁻¹ does not exist");
    }
    c
}

/// Identity suite on a family of nested levels sharing one wave context.
pub fn run_identity_suite(levels: &[Level], ctx: &WaveContext) -> Result<Report> {
    let mut rep = Report::default();
    rep.checks.push(check_kernel_branches()?);
    if let Some(last) = levels.last() {
        rep.checks.extend(check_potential_identities(&last.d.spaces, ctx, 11)?);
    }
    let spaces: Vec<&TraceSpaces> = levels.iter().map(|l| &l.d.spaces).collect();
    rep.checks.extend(check_jumps(&spaces, ctx, 21)?);
    if let Some(last) = levels.last() {
        rep.checks.push(Check::below("two_last_terms", vec![two_last_terms_residual(&last.ops, 31)], 1e-8));
    }
    let dc: Vec<f64> = spaces.iter().map(|s| div_curl_residual(s)).collect();
    rep.checks.push(Check::below("div_curl_zero", dc, 1e-10));
    let src = Manufactured::standard(*ctx).interior;
    let pr: Vec<f64> = levels.iter().map(|l| projector_residual(&l.blocks, &interior_cauchy(ctx, &l.d.spaces, &src), 1.0)).collect();
    rep.checks.push(Check::decreasing("projector_annihilation", pr, f64::INFINITY));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{extract_boundary, gen_ball};

    fn sphere(level: usize) -> TraceSpaces {
        TraceSpaces::new(extract_boundary(&gen_ball(level).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn hminus_half_basics() {
        let s = sphere(1);
        let g = StaticGram::new(&s, &PanelQuadrature::default()).unwrap();
        let z = vec![ZERO; s.n_tris()];
        assert_eq!(hminus_half_norm(&g.vq, &z).unwrap(), 0.0);
        let a = random_vector(s.n_tris(), 3);
        let a2: Vec<C64> = a.iter().map(|z| 2.0 * z).collect();
        let (n1, n2) = (hminus_half_norm(&g.vq, &a).unwrap(), hminus_half_norm(&g.vq, &a2).unwrap());
        assert!((n2 - 2.0 * n1).abs() < 1e-13 * n2);
        let bad = Mat::<C64>::from_fn(2, 2, |i, j| if i == j { C64::new(-1.0, 0.0) } else { ZERO });
        assert!(hminus_half_norm(&bad, &[C64::new(1.0, 0.0), ZERO]).is_err());
    }

    #[test]
    fn identity_system_has_unit_sigma() {
        let n = 12;
        let i = Mat::<C64>::from_fn(n, n, |a, b| if a == b { C64::new(1.0, 0.0) } else { ZERO });
        let s = smallest_singular_value(&i, &i, 20).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        let g = Mat::<C64>::from_fn(n, n, |a, b| if a == b { C64::new(1.0 + a as f64, 0.0) } else { ZERO });
        let m = Mat::<C64>::from_fn(n, n, |a, b| if a == b { C64::new(4.0, 0.0) } else { ZERO });
        assert!((smallest_singular_value(&g, &m, 200).unwrap() - 0.25).abs() < 1e-8);
    }

    #[test]
    fn point_source_solves_hodge_helmholtz() {
        let ctx = WaveContext::from_kappa(1.0, 2.0).unwrap();
        let src = PointSource { center: [1.6, 0.7, -0.5], c: [0.3, -0.5, 0.8] };
        let x = [0.1, 0.2, -0.3];
        let cc = fd_curl(&|y| Ok(src.curl(&ctx, y)), x).unwrap();
        let gd = fd_grad(&|y| Ok(ctx.eta * src.div(&ctx, y)), x).unwrap();
        let u = src.u(&ctx, x);
        let r: CV3 = [0, 1, 2].map(|i| cc[i] - gd[i] - ctx.kappa2 * u[i]);
        assert!(geom::cnorm(r) < 1e-8 * geom::cnorm(cc));
        let c2 = fd_curl(&|y| Ok(src.u(&ctx, y)), x).unwrap();
        assert!(geom::cnorm(geom::csub(c2, src.curl(&ctx, x))) < 1e-9 * geom::cnorm(c2));
        let dv = fd_div(&|y| Ok(src.u(&ctx, y)), x).unwrap();
        assert!((dv - src.div(&ctx, x)).norm() < 1e-9 * dv.norm());
    }

    #[test]
    fn csv_layout() {
        let row = |level, h| ConvergenceRow {
            level,
            h,
            dofs: 10,
            err_l2_u: h,
            err_hcurl_u: h,
            err_h1_p: h,
            err_trace_n: h * h,
            err_exterior: 0.0,
            residual: 0.0,
            condition: 1.0,
        };
        let r = ConvergenceReport { rows: vec![row(0, 0.5), row(1, 0.25)] };
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.split("\r\n").collect();
        assert_eq!(lines[0], CONVERGENCE_HEADER);
        assert!(lines[1].ends_with(",,,,"));
        assert!(lines[2].ends_with(",1.0000,1.0000,1.0000,2.0000"));
    }

    #[test]
    fn spike_detection() {
        let c = [1.0, 1.2, 50.0, 1.1, 0.9, 1.0, 40.0, 1.0];
        let s = condition_spikes(&c);
        assert_eq!(s, vec![2, 6]);
        assert!(spikes_isolated(&s));
        assert!(!spikes_isolated(&[3, 4]));
    }
}
