//! Batch front end: strict JSON configuration, the four subcommands and the
//! VTK / CSV / Matrix Market writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bem::{assemble_calderon, DMat, PanelQuadrature};
use crate::coupling::{assemble_rhs, assemble_system, cell_fields, eval_exterior, solve, volume_form, Discretization, Solution, TransmissionData};
use crate::fem::{assemble_source, MaterialField};
use crate::geom::{self, CV3, P3};
use crate::kernels::{KernelEval, WaveContext};
use crate::mesh::{gen_ball, gen_cube, load_gmsh, refine_uniform, VolumeMesh};
use crate::potentials::{EvaluationGrid, PotentialQuadrature, Potentials, Side};
use crate::traces::{TraceVectorD, TraceVectorN};
use crate::verify::{self, Level, Manufactured, PointSource};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Solve,
    Verify,
    Convergence,
    Eval,
}

#[derive(Debug, Parser)]
#[command(name = "hodge-couple", version, about = "FEM-BEM coupling for Hodge-Helmholtz transmission problems")]
pub struct Cli {
    #[arg(value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write the coupled matrix and right-hand side (Matrix Market) here.
    #[arg(long)]
    pub dump_matrices: Option<PathBuf>,
}

/// Complex number written as [re, im].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cx(pub f64, pub f64);

impl From<Cx> for C64 {
    fn from(c: Cx) -> C64 {
        C64::new(c.0, c.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Ball,
    Cube,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerTag {
    pub radius: f64,
    pub tag: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub generator: Generator,
    /// ball refinement level
    #[serde(default)]
    pub level: usize,
    /// cube cells per axis
    #[serde(default = "one")]
    pub n: usize,
    /// Gmsh 2.2 file, relative to the config file
    #[serde(default)]
    pub path: Option<String>,
    /// Retag tets whose centroid lies within `radius` of the bounding-box centre.
    #[serde(default)]
    pub inner_tag: Option<InnerTag>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub tag: i32,
    pub eps: Cx,
    pub mu: Cx,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub omega: f64,
    pub eps0: f64,
    pub mu0: f64,
    #[serde(default)]
    pub regions: Vec<RegionConfig>,
}

impl Default for PhysicsConfig {
    /// κ = 1, η = 2
    fn default() -> Self {
        PhysicsConfig { omega: std::f64::consts::FRAC_1_SQRT_2, eps0: 1.0, mu0: 2.0, regions: vec![] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    #[default]
    Zero,
    /// trace differences of the point-source pair
    Manufactured,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub center: [f64; 3],
    pub c: [f64; 3],
}

/// J(x) = amplitude · exp(−|x − center|²/width²)
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrentConfig {
    pub center: [f64; 3],
    pub width: f64,
    pub amplitude: [Cx; 3],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default)]
    pub kind: DataKind,
    #[serde(default)]
    pub interior_source: Option<SourceConfig>,
    #[serde(default)]
    pub exterior_source: Option<SourceConfig>,
    #[serde(default)]
    pub current: Option<CurrentConfig>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub singular_order: Option<usize>,
    pub regular_order: Option<usize>,
    pub max_order: Option<usize>,
    pub tolerance: Option<f64>,
    pub max_depth: Option<usize>,
    pub potential_far_order: Option<usize>,
    pub potential_mid_order: Option<usize>,
    pub potential_near_order: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// relative to the config file
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into() }
    }
}

/// Refinement offsets applied to the base mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsConfig {
    pub levels: Vec<usize>,
}

impl Default for LevelsConfig {
    fn default() -> Self {
        LevelsConfig { levels: vec![0, 1, 2] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub dims: [usize; 3],
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { lo: [-3.0; 3], hi: [3.0; 3], dims: [21, 21, 21] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: LevelsConfig,
    #[serde(default)]
    pub convergence: LevelsConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub threads: Option<usize>,
    /// If present, must equal the subcommand.
    #[serde(default)]
    pub mode: Option<Mode>,
}

/// The configuration `verify` runs when no file is given.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.json");

/// Parse a config strictly; errors carry the path to the offending key.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(format!("{path}: {}", e.inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, m: &str| Err(Error::Config(format!("{k}: {m}")));
        match self.mesh.generator {
            Generator::File if self.mesh.path.is_none() => return bad("mesh.path", "required for generator \"file\""),
            Generator::Cube if self.mesh.n == 0 => return bad("mesh.n", "must be ≥ 1"),
            _ => {}
        }
        if let Some(t) = &self.mesh.inner_tag {
            if !(t.radius > 0.0) {
                return bad("mesh.inner_tag.radius", "must be positive");
            }
        }
        self.context().map_err(|e| Error::Config(format!("physics: {e}")))?;
        self.material().map_err(|e| Error::Config(format!("physics.regions: {e}")))?;
        if self.verify.levels.is_empty() {
            return bad("verify.levels", "must not be empty");
        }
        if self.convergence.levels.is_empty() {
            return bad("convergence.levels", "must not be empty");
        }
        for (k, l) in [("verify.levels", &self.verify.levels), ("convergence.levels", &self.convergence.levels)] {
            if l.windows(2).any(|w| w[1] <= w[0]) {
                return bad(k, "must be strictly increasing (nested meshes)");
            }
        }
        if self.eval.dims.contains(&0) {
            return bad("eval.dims", "must be positive");
        }
        if let Some(c) = &self.data.current {
            if !(c.width > 0.0) {
                return bad("data.current.width", "must be positive");
            }
        }
        if self.threads == Some(0) {
            return bad("threads", "must be ≥ 1");
        }
        Ok(())
    }

    pub fn context(&self) -> Result<WaveContext> {
        WaveContext::new(self.physics.omega, self.physics.eps0, self.physics.mu0)
    }

    pub fn material(&self) -> Result<MaterialField> {
        let ctx = self.context()?;
        let mut m = MaterialField::matching(&ctx);
        for r in &self.physics.regions {
            m = m.with_region(r.tag, r.mu.into(), r.eps.into())?;
        }
        Ok(m)
    }

    pub fn panel_quadrature(&self) -> PanelQuadrature {
        let d = PanelQuadrature::default();
        let q = &self.quadrature;
        PanelQuadrature {
            singular_order: q.singular_order.unwrap_or(d.singular_order),
            regular_order: q.regular_order.unwrap_or(d.regular_order),
            max_order: q.max_order.unwrap_or(d.max_order),
            tolerance: q.tolerance.unwrap_or(d.tolerance),
            max_depth: q.max_depth.unwrap_or(d.max_depth),
        }
    }

    pub fn potential_quadrature(&self) -> PotentialQuadrature {
        let d = PotentialQuadrature::default();
        let q = &self.quadrature;
        PotentialQuadrature {
            far_order: q.potential_far_order.unwrap_or(d.far_order),
            mid_order: q.potential_mid_order.unwrap_or(d.mid_order),
            near_order: q.potential_near_order.unwrap_or(d.near_order),
            ..d
        }
    }
}

/// Paths in the config are relative to the config file.
pub struct Run {
    pub cfg: RunConfig,
    pub base: PathBuf,
}

impl Run {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg = parse_config(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Run { cfg, base })
    }

    pub fn out_dir(&self) -> Result<PathBuf> {
        let d = self.base.join(&self.cfg.output.dir);
        fs::create_dir_all(&d)?;
        Ok(d)
    }

    /// Base mesh refined `extra` times.
    pub fn mesh(&self, extra: usize) -> Result<VolumeMesh> {
        let m = &self.cfg.mesh;
        let mut mesh = match m.generator {
            Generator::Ball => gen_ball(m.level + extra)?,
            Generator::Cube => {
                let mut c = gen_cube(m.n)?;
                for _ in 0..extra {
                    c = refine_uniform(&c)?;
                }
                c
            }
            Generator::File => {
                let p = self.base.join(m.path.as_deref().unwrap_or_default());
                let mut c = load_gmsh(&p)?;
                for _ in 0..extra {
                    c = refine_uniform(&c)?;
                }
                c
            }
        };
        if let Some(t) = &m.inner_tag {
            let (lo, hi) = mesh.bbox();
            let c = [0, 1, 2].map(|a| 0.5 * (lo[a] + hi[a]));
            for k in 0..mesh.tets.len() {
                let p = mesh.tet_points(k);
                let x = [0, 1, 2].map(|a| 0.25 * (p[0][a] + p[1][a] + p[2][a] + p[3][a]));
                if geom::dist(x, c) < t.radius {
                    mesh.regions[k] = t.tag;
                }
            }
        }
        Ok(mesh)
    }

    pub fn manufactured(&self, mesh: &VolumeMesh) -> Result<Manufactured> {
        let mut m = Manufactured::for_mesh(self.cfg.context()?, mesh);
        let src = |s: &SourceConfig| PointSource { center: s.center, c: s.c };
        if let Some(s) = &self.cfg.data.interior_source {
            m.interior = src(s);
        }
        if let Some(s) = &self.cfg.data.exterior_source {
            m.exterior = src(s);
        }
        Ok(m)
    }

    pub fn data(&self, d: &Discretization) -> Result<TransmissionData> {
        let mut data = match self.cfg.data.kind {
            DataKind::Zero => TransmissionData::zeros(d),
            DataKind::Manufactured => self.manufactured(&d.mesh)?.data(d),
        };
        if let Some(c) = &self.cfg.data.current {
            let amp: [C64; 3] = c.amplitude.map(C64::from);
            let (x0, w2) = (c.center, c.width * c.width);
            let j = move |x: P3| {
                let g = (-geom::norm(geom::sub(x, x0)).powi(2) / w2).exp();
                amp.map(|a| a * g)
            };
            data.j = assemble_source(&d.mesh, &d.edge, &j)?;
        }
        Ok(data)
    }
}

/// Assemble and solve on the base mesh.
pub fn run_solve(run: &Run, dump: Option<&Path>) -> Result<(Discretization, Solution)> {
    let cfg = &run.cfg;
    let ctx = cfg.context()?;
    let d = Discretization::new(run.mesh(0)?)?;
    let ke = KernelEval::new(ctx);
    let blocks = assemble_calderon(&ke, &d.spaces, &cfg.panel_quadrature())?;
    let vol = volume_form(&d, &cfg.material()?)?;
    let system = assemble_system(&d, &vol, ctx.omega2, &blocks)?;
    let data = run.data(&d)?;
    let rhs = assemble_rhs(&d, &data, &blocks)?;
    if let Some(dir) = dump {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("system.mtx"), matrix_market(&system.matrix))?;
        fs::write(dir.join("rhs.mtx"), matrix_market(&DMat::from_fn(rhs.len(), 1, |i, _| rhs[i])))?;
    }
    let sol = solve(&d, &system, &rhs, &data)?;
    Ok((d, sol))
}

/// Trace coefficients kept between `solve` and `eval`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionCache {
    pub n_edges: usize,
    pub n_tris: usize,
    pub n_nodes: usize,
    pub p: Vec<Cx>,
    pub q: Vec<Cx>,
    pub eta: Vec<Cx>,
    pub xi: Vec<Cx>,
}

fn cx(v: &[C64]) -> Vec<Cx> {
    v.iter().map(|z| Cx(z.re, z.im)).collect()
}

fn uncx(v: &[Cx]) -> Vec<C64> {
    v.iter().map(|&z| z.into()).collect()
}

pub fn cmd_solve(run: &Run, dump: Option<&Path>) -> Result<String> {
    let (d, sol) = run_solve(run, dump)?;
    let out = run.out_dir()?;
    fs::write(out.join("solution.vtk"), solution_vtk(&d, &sol)?)?;
    fs::write(out.join("traces.csv"), traces_csv(&sol.neumann, &sol.dirichlet))?;
    let cache = SolutionCache {
        n_edges: d.spaces.n_edges(),
        n_tris: d.spaces.n_tris(),
        n_nodes: d.spaces.n_nodes(),
        p: cx(&sol.neumann.p),
        q: cx(&sol.neumann.q),
        eta: cx(&sol.dirichlet.eta),
        xi: cx(&sol.dirichlet.xi),
    };
    fs::write(out.join("solution.json"), serde_json::to_string(&cache).map_err(|e| Error::Config(e.to_string()))?)?;
    let mut log = String::new();
    let _ = writeln!(log, "dofs {} (U {}, P {}, p {}, q {})", d.n_total(), d.n_u(), d.n_p(), d.spaces.n_edges(), d.spaces.n_tris());
    let _ = writeln!(log, "relative residual {:.3e}", sol.residual);
    let _ = writeln!(log, "condition estimate (1-norm) {:.3e}", sol.condition);
    fs::write(out.join("residual.log"), &log)?;
    Ok(log)
}

fn load_cache(run: &Run, d: &Discretization) -> Option<Solution> {
    let path = run.base.join(&run.cfg.output.dir).join("solution.json");
    let c: SolutionCache = serde_json::from_str(&fs::read_to_string(path).ok()?).ok()?;
    let s = &d.spaces;
    let fits = c.n_edges == s.n_edges()
        && c.n_tris == s.n_tris()
        && c.n_nodes == s.n_nodes()
        && c.p.len() == c.n_edges
        && c.eta.len() == c.n_edges
        && c.q.len() == c.n_tris
        && c.xi.len() == c.n_nodes;
    fits.then(|| Solution {
        u: vec![],
        p: vec![],
        neumann: TraceVectorN { p: uncx(&c.p), q: uncx(&c.q) },
        dirichlet: TraceVectorD { eta: uncx(&c.eta), xi: uncx(&c.xi) },
        residual: f64::NAN,
        condition: f64::NAN,
    })
}

pub fn cmd_eval(run: &Run, dump: Option<&Path>) -> Result<String> {
    let cfg = &run.cfg;
    let d = Discretization::new(run.mesh(0)?)?;
    let (d, sol, cached) = match load_cache(run, &d) {
        Some(s) => (d, s, true),
        None => {
            let (d, s) = run_solve(run, dump)?;
            (d, s, false)
        }
    };
    let ke = KernelEval::new(cfg.context()?);
    let mut pot = Potentials::new(&d.spaces, &ke);
    pot.quad = cfg.potential_quadrature();
    let e = &cfg.eval;
    let grid = EvaluationGrid::structured(&d.spaces, e.lo, e.hi, e.dims)?;
    let vals: Vec<Option<CV3>> = crate::par_map(grid.points.len(), |i| {
        if grid.sides[i] == Side::Interior {
            return Some(geom::CZERO3);
        }
        let one = EvaluationGrid { points: vec![grid.points[i]], sides: vec![grid.sides[i]], structured: None };
        eval_exterior(&pot, &sol, &one).ok().map(|v| v[0])
    });
    let out = run.out_dir()?;
    fs::write(out.join("exterior.vtk"), structured_vtk(&grid, &vals))?;
    let skipped = vals.iter().filter(|v| v.is_none()).count();
    Ok(format!(
        "exterior field on {} points ({}), {} on Γ written as NaN\n",
        grid.points.len(),
        if cached { "cached traces" } else { "fresh solve" },
        skipped
    ))
}

fn levels(run: &Run, offs: &[usize]) -> Result<Vec<VolumeMesh>> {
    offs.iter().map(|&l| run.mesh(l)).collect()
}

pub fn cmd_convergence(run: &Run) -> Result<String> {
    let cfg = &run.cfg;
    if !cfg.physics.regions.is_empty() || cfg.mesh.inner_tag.is_some() {
        return Err(Error::Config("physics.regions: the manufactured study needs matching interior coefficients".into()));
    }
    let ctx = cfg.context()?;
    let meshes = levels(run, &cfg.convergence.levels)?;
    let m = run.manufactured(&meshes[0])?;
    let ke = KernelEval::new(ctx);
    let q = cfg.panel_quadrature();
    let lv = meshes.into_iter().map(|mesh| Level::build(mesh, &ke, &q)).collect::<Result<Vec<_>>>()?;
    let mut rep = verify::manufactured_on_levels(&lv, &m, Default::default())?;
    for (row, &l) in rep.rows.iter_mut().zip(&cfg.convergence.levels) {
        row.level = l;
    }
    let out = run.out_dir()?;
    fs::write(out.join("convergence.csv"), rep.to_csv())?;
    let mut text = String::new();
    for r in &rep.rows {
        let _ = writeln!(
            text,
            "level {} h {:.4} dofs {} L2(U) {:.3e} exterior {:.3e} residual {:.1e} condition {:.2e}",
            r.level, r.h, r.dofs, r.err_l2_u, r.err_exterior, r.residual, r.condition
        );
    }
    let _ = writeln!(text, "L2(U) rate first to last level: {:.3}", rep.overall_l2_rate());
    fs::write(out.join("convergence_report.txt"), &text)?;
    Ok(text)
}

/// Returns the report text and whether every check passed.
pub fn cmd_verify(run: &Run) -> Result<(String, bool)> {
    let cfg = &run.cfg;
    let ctx = cfg.context()?;
    let ke = KernelEval::new(ctx);
    let q = cfg.panel_quadrature();
    let lv = levels(run, &cfg.verify.levels)?.into_iter().map(|m| Level::build(m, &ke, &q)).collect::<Result<Vec<_>>>()?;
    let rep = verify::run_identity_suite(&lv, &ctx)?;
    let out = run.out_dir()?;
    let mut csv = String::from("check,pass,tol,values\r\n");
    for c in &rep.checks {
        let vals: Vec<String> = c.values.iter().map(|v| format!("{v:.6e}")).collect();
        let _ = write!(csv, "{},{},{:.1e},\"{}\"\r\n", c.name, c.pass, c.tol, vals.join(";"));
    }
    fs::write(out.join("verify.csv"), csv)?;
    let text = rep.to_text();
    fs::write(out.join("verify_report.txt"), &text)?;
    Ok((text, rep.all_pass()))
}

// ---------------------------------------------------------------------------
// Writers

fn f(v: f64) -> String {
    format!("{v:.10e}")
}

/// Legacy VTK unstructured grid: P at points, U and curl U per cell,
/// real and imaginary parts as separate arrays.
pub fn solution_vtk(d: &Discretization, sol: &Solution) -> Result<String> {
    let m = &d.mesh;
    let mut s = String::from("# vtk DataFile Version 2.0\nhodge-couple solution\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", m.vertices.len());
    for p in &m.vertices {
        let _ = writeln!(s, "{} {} {}", f(p[0]), f(p[1]), f(p[2]));
    }
    let _ = writeln!(s, "CELLS {} {}", m.tets.len(), 5 * m.tets.len());
    for t in &m.tets {
        let _ = writeln!(s, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", m.tets.len());
    for _ in &m.tets {
        s.push_str("10\n");
    }
    let _ = writeln!(s, "POINT_DATA {}", m.vertices.len());
    for (name, part) in [("P_re", 0), ("P_im", 1)] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for z in &sol.p {
            let _ = writeln!(s, "{}", f(if part == 0 { z.re } else { z.im }));
        }
    }
    let cells = cell_fields(d, &sol.u)?;
    let _ = writeln!(s, "CELL_DATA {}", m.tets.len());
    let _ = writeln!(s, "SCALARS region int 1\nLOOKUP_TABLE default");
    for r in &m.regions {
        let _ = writeln!(s, "{r}");
    }
    for (name, which, part) in [("U_re", 0, 0), ("U_im", 0, 1), ("curlU_re", 1, 0), ("curlU_im", 1, 1)] {
        let _ = writeln!(s, "VECTORS {name} double");
        for c in &cells {
            let v = if which == 0 { c.1 } else { c.2 };
            let g = |z: C64| if part == 0 { z.re } else { z.im };
            let _ = writeln!(s, "{} {} {}", f(g(v[0])), f(g(v[1])), f(g(v[2])));
        }
    }
    Ok(s)
}

/// Legacy VTK structured points; `None` values are written as NaN.
pub fn structured_vtk(grid: &EvaluationGrid, vals: &[Option<CV3>]) -> String {
    let (dims, lo, h) = grid.structured.unwrap_or(([grid.points.len(), 1, 1], [0.0; 3], [1.0; 3]));
    let h = h.map(|v| if v > 0.0 { v } else { 1.0 });
    let mut s = String::from("# vtk DataFile Version 2.0\nhodge-couple exterior field\nASCII\nDATASET STRUCTURED_POINTS\n");
    let _ = writeln!(s, "DIMENSIONS {} {} {}", dims[0], dims[1], dims[2]);
    let _ = writeln!(s, "ORIGIN {} {} {}", f(lo[0]), f(lo[1]), f(lo[2]));
    let _ = writeln!(s, "SPACING {} {} {}", f(h[0]), f(h[1]), f(h[2]));
    let _ = writeln!(s, "POINT_DATA {}", grid.points.len());
    for (name, part) in [("U_re", 0), ("U_im", 1)] {
        let _ = writeln!(s, "VECTORS {name} double");
        for v in vals {
            match v {
                Some(v) => {
                    let g = |z: C64| if part == 0 { z.re } else { z.im };
                    let _ = writeln!(s, "{} {} {}", f(g(v[0])), f(g(v[1])), f(g(v[2])));
                }
                None => s.push_str("nan nan nan\n"),
            }
        }
    }
    s.push_str("SCALARS side int 1\nLOOKUP_TABLE default\n");
    for side in &grid.sides {
        let code = match side {
            Side::Exterior => 0,
            Side::NearSurface => 1,
            Side::Interior => 2,
        };
        let _ = writeln!(s, "{code}");
    }
    s
}

/// RFC-4180 CSV of all trace coefficients.
pub fn traces_csv(n: &TraceVectorN, d: &TraceVectorD) -> String {
    let mut s = String::from("space,index,re,im\r\n");
    for (name, v) in [("p_rwg", &n.p), ("q_p0", &n.q), ("eta_rot_rwg", &d.eta), ("xi_p1", &d.xi)] {
        for (i, z) in v.iter().enumerate() {
            let _ = write!(s, "{name},{i},{:.12e},{:.12e}\r\n", z.re, z.im);
        }
    }
    s
}

/// Matrix Market coordinate complex general (nonzeros only).
pub fn matrix_market(a: &DMat) -> String {
    let mut entries = Vec::new();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if z != C64::new(0.0, 0.0) {
                entries.push((i, j, z));
            }
        }
    }
    let mut s = String::from("%%MatrixMarket matrix coordinate complex general\n");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), entries.len());
    for (i, j, z) in entries {
        let _ = writeln!(s, "{} {} {:.17e} {:.17e}", i + 1, j + 1, z.re, z.im);
    }
    s
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let run = match Run::load(&cli.config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Some(m) = run.cfg.mode {
        if m != cli.mode {
            eprintln!("error: config: mode: config is for {m:?}, command is {:?}", cli.mode);
            return 2;
        }
    }
    if let Err(e) = crate::configure_parallelism(cli.threads.or(run.cfg.threads)) {
        eprintln!("error: {e}");
        return 2;
    }
    let dump = cli.dump_matrices.as_deref();
    let res = match cli.mode {
        Mode::Solve => cmd_solve(&run, dump).map(|t| (t, true)),
        Mode::Eval => cmd_eval(&run, dump).map(|t| (t, true)),
        Mode::Convergence => cmd_convergence(&run).map(|t| (t, true)),
        Mode::Verify => cmd_verify(&run),
    };
    match res {
        Ok((text, ok)) => {
            print!("{text}");
            if ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config(_)) {
                2
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_parses() {
        let c = parse_config(DEFAULT_CONFIG).unwrap();
        assert_eq!(c.mesh.generator, Generator::Ball);
    }

    #[test]
    fn unknown_key_reports_path() {
        let text = r#"{"mesh": {"generator": "ball"}, "physics": {"omega": 1.0, "eps0": 1.0, "mu0": 1.0, "regions": [{"tag": 1, "eps": [1.0, 0.0], "mu": [1.0, 0.0], "sigma": 2}]}}"#;
        let e = parse_config(text).unwrap_err().to_string();
        assert!(e.contains("physics.regions[0]"), "{e}");
        assert!(e.contains("sigma"), "{e}");
    }

    #[test]
    fn complex_pairs_are_strict() {
        let text = r#"{"mesh": {"generator": "ball"}, "physics": {"omega": 1.0, "eps0": 1.0, "mu0": 1.0, "regions": [{"tag": 1, "eps": [1.0, 0.0, 3.0], "mu": [1.0, 0.0]}]}}"#;
        let e = parse_config(text).unwrap_err().to_string();
        assert!(e.contains("physics.regions[0].eps"), "{e}");
    }

    #[test]
    fn physics_signs_checked() {
        let text = r#"{"mesh": {"generator": "ball"}, "physics": {"omega": 1.0, "eps0": 1.0, "mu0": 1.0, "regions": [{"tag": 1, "eps": [1.0, -0.5], "mu": [1.0, 0.0]}]}}"#;
        assert!(parse_config(text).unwrap_err().to_string().contains("physics.regions"));
        let text = r#"{"mesh": {"generator": "ball"}, "physics": {"omega": 1.0, "eps0": -1.0, "mu0": 1.0}}"#;
        assert!(parse_config(text).is_err());
    }

    #[test]
    fn file_generator_needs_path() {
        let e = parse_config(r#"{"mesh": {"generator": "file"}}"#).unwrap_err().to_string();
        assert!(e.contains("mesh.path"), "{e}");
    }

    #[test]
    fn matrix_market_layout() {
        let a = DMat::from_fn(2, 2, |i, j| if i == j { C64::new(1.0, -2.0) } else { C64::new(0.0, 0.0) });
        let s = matrix_market(&a);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[1], "2 2 2");
        assert!(lines[2].starts_with("1 1 1.0"));
    }
}
