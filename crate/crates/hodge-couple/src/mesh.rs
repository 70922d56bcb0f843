//! Tetrahedral volume meshes, oriented boundary triangulations, generators,
//! red refinement and a Gmsh 2.2 ASCII reader.

use std::collections::HashMap;
use std::path::Path;

use crate::geom::{self, P3};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct VolumeMesh {
    pub vertices: Vec<P3>,
    pub tets: Vec<[usize; 4]>,
    pub regions: Vec<i32>,
}

/// Boundary triangulation sharing the vertex index space of its volume mesh.
#[derive(Clone, Debug)]
pub struct BoundaryMesh {
    pub vertices: Vec<P3>,
    pub tris: Vec<[usize; 3]>,
    pub normals: Vec<P3>,
    pub areas: Vec<f64>,
    /// Tet owning each triangle (`usize::MAX` for surface-only meshes).
    pub parent_tet: Vec<usize>,
    /// Sorted list of vertices touched by some triangle.
    pub nodes: Vec<usize>,
    /// Position in `nodes` per vertex, `usize::MAX` off the boundary.
    pub node_of: Vec<usize>,
}

const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

impl VolumeMesh {
    /// Build and validate.
    pub fn new(vertices: Vec<P3>, tets: Vec<[usize; 4]>, regions: Vec<i32>) -> Result<Self> {
        let m = VolumeMesh { vertices, tets, regions };
        m.validate()?;
        Ok(m)
    }

    pub fn tet_points(&self, k: usize) -> [P3; 4] {
        let t = self.tets[k];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]], self.vertices[t[3]]]
    }

    pub fn tet_volume(&self, k: usize) -> f64 {
        geom::tet_volume(&self.tet_points(k))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tets.len()).map(|k| self.tet_volume(k)).sum()
    }

    pub fn bbox(&self) -> (P3, P3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.vertices {
            for i in 0..3 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        (lo, hi)
    }

    pub fn bbox_diag(&self) -> f64 {
        let (lo, hi) = self.bbox();
        geom::dist(lo, hi)
    }

    /// Face → adjacent (tet, local face) list.
    pub fn face_map(&self) -> HashMap<[usize; 3], Vec<(usize, usize)>> {
        let mut map: HashMap<[usize; 3], Vec<(usize, usize)>> = HashMap::new();
        for (k, t) in self.tets.iter().enumerate() {
            for (lf, f) in TET_FACES.iter().enumerate() {
                map.entry(sorted3([t[f[0]], t[f[1]], t[f[2]]])).or_default().push((k, lf));
            }
        }
        map
    }

    pub fn validate(&self) -> Result<()> {
        if self.regions.len() != self.tets.len() {
            return Err(Error::Mesh("region tag count differs from tet count".into()));
        }
        let nv = self.vertices.len();
        for (k, t) in self.tets.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(Error::Mesh(format!("tet {k} references a missing vertex")));
            }
            let vol = self.tet_volume(k);
            let scale = self.tet_points(k).iter().skip(1).map(|p| geom::dist(*p, self.vertices[t[0]])).fold(0.0, f64::max);
            if !(vol > 1e-14 * scale.powi(3)) {
                return Err(Error::Mesh(format!("tet {k} is not positively oriented (volume {vol:e})")));
            }
        }
        let tol = 1e-12 * self.bbox_diag();
        if let Some((a, b)) = find_duplicate(&self.vertices, tol) {
            return Err(Error::Mesh(format!("duplicate vertices {a} and {b}")));
        }
        for (f, adj) in self.face_map() {
            if adj.len() > 2 {
                return Err(Error::Mesh(format!("non-manifold face {f:?} shared by {} tets", adj.len())));
            }
        }
        Ok(())
    }
}

fn find_duplicate(v: &[P3], tol: f64) -> Option<(usize, usize)> {
    if v.len() < 2 || tol <= 0.0 {
        return None;
    }
    let cell = tol * 4.0;
    let key = |p: &P3| -> [i64; 3] { [(p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64, (p[2] / cell).floor() as i64] };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in v.iter().enumerate() {
        let k = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &j in list {
                            if geom::dist(v[j], *p) <= tol {
                                return Some((j, i));
                            }
                        }
                    }
                }
            }
        }
        grid.entry(k).or_default().push(i);
    }
    None
}

fn oriented(v: &[P3], mut t: [usize; 4]) -> [usize; 4] {
    let p = [v[t[0]], v[t[1]], v[t[2]], v[t[3]]];
    if geom::tet_volume(&p) < 0.0 {
        t.swap(2, 3);
    }
    t
}

/// Unit cube [0,1]³ with `n` cells per axis, each split into 6 Kuhn tets.
pub fn gen_cube(n: usize) -> Result<VolumeMesh> {
    if n == 0 {
        return Err(Error::Invalid("gen_cube needs n ≥ 1".into()));
    }
    let idx = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1).pow(3));
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 * h, j as f64 * h, k as f64 * h]);
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut tets = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    let mut c = [i, j, k];
                    let mut t = [idx(c[0], c[1], c[2]); 4];
                    for (s, &ax) in perm.iter().enumerate() {
                        c[ax] += 1;
                        t[s + 1] = idx(c[0], c[1], c[2]);
                    }
                    tets.push(oriented(&vertices, t));
                }
            }
        }
    }
    let regions = vec![0; tets.len()];
    VolumeMesh::new(vertices, tets, regions)
}

fn icosahedron() -> (Vec<P3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let v = raw.iter().map(|p| geom::normalize(*p)).collect();
    let f = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (v, f)
}

/// Unit ball: icosahedron coned to the centre, refined `level` times with
/// new boundary vertices projected onto the sphere.
pub fn gen_ball(level: usize) -> Result<VolumeMesh> {
    let (mut vertices, faces) = icosahedron();
    let c = vertices.len();
    vertices.push([0.0, 0.0, 0.0]);
    let tets: Vec<[usize; 4]> = faces.iter().map(|f| oriented(&vertices, [c, f[0], f[1], f[2]])).collect();
    let regions = vec![0; tets.len()];
    let mut m = VolumeMesh::new(vertices, tets, regions)?;
    for _ in 0..level {
        m = refine_impl(&m, true)?;
    }
    Ok(m)
}

/// Red refinement: every tet split into 8, volume preserved.
pub fn refine_uniform(mesh: &VolumeMesh) -> Result<VolumeMesh> {
    refine_impl(mesh, false)
}

fn refine_impl(mesh: &VolumeMesh, project_boundary: bool) -> Result<VolumeMesh> {
    let mut boundary_edges = std::collections::HashSet::new();
    if project_boundary {
        for (f, adj) in mesh.face_map() {
            if adj.len() == 1 {
                boundary_edges.insert((f[0], f[1]));
                boundary_edges.insert((f[0], f[2]));
                boundary_edges.insert((f[1], f[2]));
            }
        }
    }
    let mut vertices = mesh.vertices.clone();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<P3>| -> usize {
        let key = (a.min(b), a.max(b));
        *mid.entry(key).or_insert_with(|| {
            let mut p = geom::scale(0.5, geom::add(vertices[a], vertices[b]));
            if project_boundary && boundary_edges.contains(&key) {
                p = geom::normalize(p);
            }
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let mut tets = Vec::with_capacity(8 * mesh.tets.len());
    let mut regions = Vec::with_capacity(8 * mesh.tets.len());
    for (k, t) in mesh.tets.iter().enumerate() {
        let [x0, x1, x2, x3] = *t;
        let m01 = midpoint(x0, x1, &mut vertices);
        let m02 = midpoint(x0, x2, &mut vertices);
        let m03 = midpoint(x0, x3, &mut vertices);
        let m12 = midpoint(x1, x2, &mut vertices);
        let m13 = midpoint(x1, x3, &mut vertices);
        let m23 = midpoint(x2, x3, &mut vertices);
        let mut children = vec![[x0, m01, m02, m03], [m01, x1, m12, m13], [m02, m12, x2, m23], [m03, m13, m23, x3]];
        // octahedron split along its shortest diagonal
        let diags = [(m02, m13, [m01, m12, m23, m03]), (m01, m23, [m02, m12, m13, m03]), (m03, m12, [m01, m13, m23, m02])];
        let (a, b, ring) = diags
            .iter()
            .min_by(|p, q| {
                let lp = geom::dist(vertices[p.0], vertices[p.1]);
                let lq = geom::dist(vertices[q.0], vertices[q.1]);
                lp.partial_cmp(&lq).unwrap()
            })
            .copied()
            .unwrap();
        for i in 0..4 {
            children.push([a, b, ring[i], ring[(i + 1) % 4]]);
        }
        for ch in children {
            tets.push(oriented(&vertices, ch));
            regions.push(mesh.regions[k]);
        }
    }
    VolumeMesh::new(vertices, tets, regions)
}

/// Boundary faces (exactly one adjacent tet), oriented away from their tet.
pub fn extract_boundary(mesh: &VolumeMesh) -> Result<BoundaryMesh> {
    let fm = mesh.face_map();
    let mut faces: Vec<(usize, usize)> = Vec::new();
    for adj in fm.values() {
        match adj.len() {
            1 => faces.push(adj[0]),
            2 => {}
            n => return Err(Error::Mesh(format!("non-manifold face shared by {n} tets"))),
        }
    }
    faces.sort_unstable();
    let mut tris = Vec::with_capacity(faces.len());
    let mut parent = Vec::with_capacity(faces.len());
    for (k, lf) in faces {
        let t = mesh.tets[k];
        let f = TET_FACES[lf];
        let mut tri = [t[f[0]], t[f[1]], t[f[2]]];
        let opp = t[lf];
        let p = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
        let nrm = geom::cross(geom::sub(p[1], p[0]), geom::sub(p[2], p[0]));
        if geom::dot(nrm, geom::sub(mesh.vertices[opp], p[0])) > 0.0 {
            tri.swap(1, 2);
        }
        tris.push(tri);
        parent.push(k);
    }
    Ok(BoundaryMesh::build(mesh.vertices.clone(), tris, parent))
}

impl BoundaryMesh {
    fn build(vertices: Vec<P3>, tris: Vec<[usize; 3]>, parent_tet: Vec<usize>) -> Self {
        let mut normals = Vec::with_capacity(tris.len());
        let mut areas = Vec::with_capacity(tris.len());
        let mut on = vec![false; vertices.len()];
        for t in &tris {
            let p = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
            let (a, n) = geom::tri_area_normal(&p);
            normals.push(n);
            areas.push(a);
            for &v in t {
                on[v] = true;
            }
        }
        let nodes: Vec<usize> = (0..vertices.len()).filter(|&v| on[v]).collect();
        let mut node_of = vec![usize::MAX; vertices.len()];
        for (i, &v) in nodes.iter().enumerate() {
            node_of[v] = i;
        }
        BoundaryMesh { vertices, tris, normals, areas, parent_tet, nodes, node_of }
    }

    /// Surface-only mesh; the normal follows the vertex winding.
    pub fn from_triangles(vertices: Vec<P3>, tris: Vec<[usize; 3]>) -> Self {
        let n = tris.len();
        Self::build(vertices, tris, vec![usize::MAX; n])
    }

    pub fn tri_points(&self, k: usize) -> [P3; 3] {
        let t = self.tris[k];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn centroid(&self, k: usize) -> P3 {
        let p = self.tri_points(k);
        geom::scale(1.0 / 3.0, geom::add(geom::add(p[0], p[1]), p[2]))
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Largest triangle diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.tris.len()).map(|k| self.diameter(k)).fold(0.0, f64::max)
    }

    pub fn diameter(&self, k: usize) -> f64 {
        let p = self.tri_points(k);
        geom::dist(p[0], p[1]).max(geom::dist(p[1], p[2])).max(geom::dist(p[0], p[2]))
    }

    /// ∮ n dσ.
    pub fn gauss_check(&self) -> P3 {
        let mut s = [0.0; 3];
        for (n, a) in self.normals.iter().zip(&self.areas) {
            s = geom::add(s, geom::scale(*a, *n));
        }
        s
    }

    /// Connected components (via shared vertices).
    pub fn components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for t in &self.tris {
            for i in 1..3 {
                let a = find(&mut parent, t[0]);
                let b = find(&mut parent, t[i]);
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let mut roots: Vec<usize> = self.nodes.iter().map(|&v| find(&mut parent, v)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// Flip every triangle (and normal). Used as a negative control.
    pub fn flipped(&self) -> Self {
        let tris = self.tris.iter().map(|t| [t[0], t[2], t[1]]).collect();
        Self::build(self.vertices.clone(), tris, self.parent_tet.clone())
    }

    /// 1→4 midpoint subdivision of every triangle (no projection).
    pub fn refine(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut m = |a: usize, b: usize, v: &mut Vec<P3>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push(geom::scale(0.5, geom::add(v[a], v[b])));
                v.len() - 1
            })
        };
        let mut tris = Vec::with_capacity(4 * self.tris.len());
        for t in &self.tris {
            let [a, b, c] = *t;
            let ab = m(a, b, &mut vertices);
            let bc = m(b, c, &mut vertices);
            let ca = m(c, a, &mut vertices);
            tris.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        Self::from_triangles(vertices, tris)
    }
}

/// Read a Gmsh 2.2 ASCII mesh (tets only; physical tag → region).
pub fn load_gmsh(path: impl AsRef<Path>) -> Result<VolumeMesh> {
    let text = std::fs::read_to_string(path)?;
    parse_gmsh(&text)
}

pub fn parse_gmsh(text: &str) -> Result<VolumeMesh> {
    let lines: Vec<&str> = text.lines().collect();
    let err = |line: usize, msg: &str| Error::Gmsh { line: line + 1, msg: msg.to_string() };
    let mut i = 0;
    let mut nodes: Vec<(i64, P3)> = Vec::new();
    let mut elems: Vec<([i64; 4], i32, usize)> = Vec::new();
    let mut saw_format = false;
    while i < lines.len() {
        let l = lines[i].trim();
        match l {
            "$MeshFormat" => {
                let f: Vec<&str> = lines.get(i + 1).ok_or_else(|| err(i, "truncated $MeshFormat"))?.split_whitespace().collect();
                if f.len() < 3 || !f[0].starts_with("2.2") {
                    return Err(err(i + 1, "unsupported format version (need 2.2)"));
                }
                if f[1] != "0" {
                    return Err(err(i + 1, "binary Gmsh files are not supported"));
                }
                saw_format = true;
                i += 2;
                if lines.get(i).map(|s| s.trim()) != Some("$EndMeshFormat") {
                    return Err(err(i, "expected $EndMeshFormat"));
                }
            }
            "$Nodes" => {
                let n: usize = lines.get(i + 1).and_then(|s| s.trim().parse().ok()).ok_or_else(|| err(i + 1, "bad node count"))?;
                for k in 0..n {
                    let li = i + 2 + k;
                    let s = lines.get(li).ok_or_else(|| err(li, "node count mismatch"))?;
                    let f: Vec<&str> = s.split_whitespace().collect();
                    if f.len() != 4 || f[0].starts_with('$') {
                        return Err(err(li, "node count mismatch or malformed node line"));
                    }
                    let id: i64 = f[0].parse().map_err(|_| err(li, "bad node id"))?;
                    let mut p = [0.0; 3];
                    for d in 0..3 {
                        p[d] = f[d + 1].parse().map_err(|_| err(li, "bad coordinate"))?;
                    }
                    nodes.push((id, p));
                }
                i += 2 + n;
                if lines.get(i).map(|s| s.trim()) != Some("$EndNodes") {
                    return Err(err(i, "node count mismatch: expected $EndNodes"));
                }
            }
            "$Elements" => {
                let n: usize = lines.get(i + 1).and_then(|s| s.trim().parse().ok()).ok_or_else(|| err(i + 1, "bad element count"))?;
                for k in 0..n {
                    let li = i + 2 + k;
                    let s = lines.get(li).ok_or_else(|| err(li, "element count mismatch"))?;
                    if s.trim_start().starts_with('$') {
                        return Err(err(li, "element count mismatch"));
                    }
                    let f: Vec<i64> = s.split_whitespace().map(|x| x.parse::<i64>()).collect::<std::result::Result<_, _>>().map_err(|_| err(li, "malformed element line"))?;
                    if f.len() < 3 {
                        return Err(err(li, "malformed element line"));
                    }
                    let ty = f[1];
                    let ntags = f[2] as usize;
                    let rest = &f[3..];
                    if rest.len() < ntags {
                        return Err(err(li, "malformed element tags"));
                    }
                    let tag = if ntags > 0 { rest[0] as i32 } else { 0 };
                    let conn = &rest[ntags..];
                    match ty {
                        4 => {
                            if conn.len() != 4 {
                                return Err(err(li, "tet needs 4 nodes"));
                            }
                            elems.push(([conn[0], conn[1], conn[2], conn[3]], tag, li));
                        }
                        2 | 1 | 15 => {}
                        _ => return Err(err(li, &format!("unsupported element type {ty}"))),
                    }
                }
                i += 2 + n;
                if lines.get(i).map(|s| s.trim()) != Some("$EndElements") {
                    return Err(err(i, "element count mismatch: expected $EndElements"));
                }
            }
            _ => {}
        }
        i += 1;
    }
    if !saw_format {
        return Err(err(0, "missing $MeshFormat"));
    }
    let mut id_map = HashMap::new();
    let mut vertices = Vec::with_capacity(nodes.len());
    for (k, (id, p)) in nodes.iter().enumerate() {
        id_map.insert(*id, k);
        vertices.push(*p);
    }
    let mut tets = Vec::with_capacity(elems.len());
    let mut regions = Vec::with_capacity(elems.len());
    for (conn, tag, li) in elems {
        let mut t = [0; 4];
        for d in 0..4 {
            t[d] = *id_map.get(&conn[d]).ok_or_else(|| err(li, "element references unknown node"))?;
        }
        let p = [vertices[t[0]], vertices[t[1]], vertices[t[2]], vertices[t[3]]];
        if geom::tet_volume(&p) <= 0.0 {
            return Err(err(li, "inverted element"));
        }
        tets.push(t);
        regions.push(tag);
    }
    VolumeMesh::new(vertices, tets, regions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_counts() {
        let m = gen_cube(1).unwrap();
        assert_eq!(m.tets.len(), 6);
        assert_eq!(m.vertices.len(), 8);
        let b = extract_boundary(&m).unwrap();
        assert_eq!(b.tris.len(), 12);
        for n in &b.normals {
            let big = n.iter().filter(|c| (c.abs() - 1.0).abs() < 1e-14).count();
            assert_eq!(big, 1);
        }
        assert!(gen_cube(0).is_err());
    }

    #[test]
    fn cube_volume_and_area() {
        let m = gen_cube(2).unwrap();
        assert_eq!(m.tets.len(), 48);
        assert!((m.total_volume() - 1.0).abs() < 1e-14);
        let b = extract_boundary(&m).unwrap();
        assert!((b.total_area() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn ball_levels() {
        let b0 = extract_boundary(&gen_ball(0).unwrap()).unwrap();
        assert_eq!(b0.tris.len(), 20);
        for k in 0..20 {
            let c = geom::normalize(b0.centroid(k));
            assert!(geom::dot(c, b0.normals[k]) > 0.9);
        }
        let m1 = gen_ball(1).unwrap();
        let b1 = extract_boundary(&m1).unwrap();
        for &v in &b1.nodes {
            assert!((geom::norm(m1.vertices[v]) - 1.0).abs() < 1e-14);
        }
        let b2 = extract_boundary(&gen_ball(2).unwrap()).unwrap();
        assert_eq!(b2.tris.len(), 320);
        let rel = (b2.total_area() - 4.0 * std::f64::consts::PI).abs() / (4.0 * std::f64::consts::PI);
        assert!(rel < 0.02, "{rel}");
    }

    #[test]
    fn refine_preserves_volume() {
        let m = refine_uniform(&gen_cube(1).unwrap()).unwrap();
        assert_eq!(m.tets.len(), 48);
        assert!((m.total_volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn refine_commutes_with_boundary() {
        let m = gen_cube(1).unwrap();
        let a = extract_boundary(&refine_uniform(&m).unwrap()).unwrap();
        let b = extract_boundary(&m).unwrap().refine();
        let key = |bm: &BoundaryMesh| {
            let mut v: Vec<Vec<[i64; 3]>> = (0..bm.tris.len())
                .map(|k| {
                    let mut t: Vec<[i64; 3]> = bm.tri_points(k).iter().map(|p| p.map(|c| (c * 1e9).round() as i64)).collect();
                    t.sort();
                    t
                })
                .collect();
            v.sort();
            v
        };
        assert_eq!(key(&a), key(&b));
    }

    #[test]
    fn dangling_tet_gives_two_components() {
        let mut m = gen_cube(1).unwrap();
        let o = m.vertices.len();
        m.vertices.extend([[3.0, 0.0, 0.0], [4.0, 0.0, 0.0], [3.0, 1.0, 0.0], [3.0, 0.0, 1.0]]);
        m.tets.push([o, o + 1, o + 2, o + 3]);
        m.regions.push(1);
        m.validate().unwrap();
        let b = extract_boundary(&m).unwrap();
        assert_eq!(b.components(), 2);
        assert_eq!(b.tris.len(), 16);
    }

    #[test]
    fn gmsh_single_tet() {
        let txt = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n$EndNodes\n$Elements\n1\n1 4 2 7 1 1 2 3 4\n$EndElements\n";
        let m = parse_gmsh(txt).unwrap();
        assert_eq!(m.tets.len(), 1);
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.regions[0], 7);
    }

    #[test]
    fn gmsh_count_mismatch_names_line() {
        let txt = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n$EndNodes\n$Elements\n2\n1 4 2 7 1 1 2 3 4\n$EndElements\n";
        match parse_gmsh(txt) {
            Err(Error::Gmsh { line, .. }) => assert_eq!(line, 14),
            other => panic!("{other:?}"),
        }
        let bad = "$MeshFormat\n4.1 0 8\n$EndMeshFormat\n";
        assert!(matches!(parse_gmsh(bad), Err(Error::Gmsh { line: 2, .. })));
        let inv = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n$EndNodes\n$Elements\n1\n1 4 2 7 1 1 3 2 4\n$EndElements\n";
        assert!(parse_gmsh(inv).is_err());
    }
}
