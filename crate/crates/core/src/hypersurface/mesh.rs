use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub const MIN_FACE_AREA: f64 = 1e-14;

/// Oriented triangle mesh of a surface in R^3.
///
/// Construction validates that the mesh is an oriented 2-manifold with
/// boundary: interior edges carry exactly two faces with opposite induced
/// orientation, boundary edges exactly one.
#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
    boundary_flags: Vec<bool>,
    edge_count: usize,
    neighbors: Vec<Vec<usize>>,
    vertex_faces: Vec<Vec<usize>>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        // undirected edge -> directed occurrences
        let mut edges: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= nv) {
                return Err(Error::Mesh(format!("face {fi} references a missing vertex")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Mesh(format!("face {fi} repeats a vertex")));
            }
            let area = triangle_area(&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]);
            if !(area > MIN_FACE_AREA) {
                return Err(Error::Mesh(format!("face {fi} is degenerate (area {area:.3e})")));
            }
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push((a, b));
            }
        }
        let mut boundary_flags = vec![false; nv];
        for (&(a, b), uses) in &edges {
            match uses.as_slice() {
                [_] => {
                    boundary_flags[a] = true;
                    boundary_flags[b] = true;
                }
                [first, second] => {
                    if first == second {
                        return Err(Error::Mesh(format!(
                            "edge ({a}, {b}) is traversed in the same direction by both faces; mesh is not consistently oriented"
                        )));
                    }
                }
                more => {
                    return Err(Error::Mesh(format!(
                        "edge ({a}, {b}) is shared by {} faces; mesh is not a manifold",
                        more.len()
                    )));
                }
            }
        }
        let mut neighbors = vec![Vec::new(); nv];
        for &(a, b) in edges.keys() {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let mut vertex_faces = vec![Vec::new(); nv];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vertex_faces[v].push(fi);
            }
        }
        Ok(Self {
            vertices,
            faces,
            boundary_flags,
            edge_count: edges.len(),
            neighbors,
            vertex_faces,
        })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary_flags
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_closed(&self) -> bool {
        !self.boundary_flags.iter().any(|&b| b)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count as i64 + self.face_count() as i64
    }

    /// Genus of a closed connected mesh, from `chi = 2 - 2 gamma`.
    pub fn genus(&self) -> Option<u32> {
        if !self.is_closed() {
            return None;
        }
        let chi = self.euler_characteristic();
        if chi > 2 || (2 - chi) % 2 != 0 {
            return None;
        }
        Some(((2 - chi) / 2) as u32)
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        triangle_area(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Unnormalized face normal, `2 * area * n`.
    pub fn face_normal_weighted(&self, f: usize) -> Vector3<f64> {
        let [a, b, c] = self.faces[f];
        let (p, q, r) = (&self.vertices[a], &self.vertices[b], &self.vertices[c]);
        (q - p).cross(&(r - p))
    }

    /// Area-weighted average of incident face normals.
    pub fn vertex_normal(&self, v: usize) -> Vector3<f64> {
        let sum: Vector3<f64> = self.vertex_faces[v]
            .iter()
            .map(|&f| self.face_normal_weighted(f))
            .sum();
        sum.normalize()
    }

    /// Vertices at graph distance 1 or 2 from `v`, excluding `v`.
    pub fn two_ring(&self, v: usize) -> Vec<usize> {
        let mut ring: Vec<usize> = self.neighbors[v].clone();
        for &w in &self.neighbors[v] {
            ring.extend_from_slice(&self.neighbors[w]);
        }
        ring.sort_unstable();
        ring.dedup();
        ring.retain(|&w| w != v);
        ring
    }

    /// Cotangent Laplacian of vertex `values` at vertex `v`, normalized by
    /// one third of the incident face area.
    pub fn cotan_laplacian_at(&self, v: usize, values: &[f64]) -> f64 {
        let mut sum = 0.0;
        let mut area = 0.0;
        for &f in &self.vertex_faces[v] {
            let face = self.faces[f];
            let k = face.iter().position(|&w| w == v).expect("incident face");
            let (a, b) = (face[(k + 1) % 3], face[(k + 2) % 3]);
            let (p, pa, pb) = (&self.vertices[v], &self.vertices[a], &self.vertices[b]);
            // angle at b opposes edge (v, a); angle at a opposes edge (v, b)
            let cot_b = cotangent(&(p - pb), &(pa - pb));
            let cot_a = cotangent(&(p - pa), &(pb - pa));
            sum += 0.5 * cot_b * (values[a] - values[v]) + 0.5 * cot_a * (values[b] - values[v]);
            area += self.face_area(f) / 3.0;
        }
        sum / area
    }

    pub fn mesh_stats(&self) -> MeshStats {
        let mut min_edge = f64::INFINITY;
        let mut max_edge: f64 = 0.0;
        for f in &self.faces {
            for k in 0..3 {
                let l = (self.vertices[f[k]] - self.vertices[f[(k + 1) % 3]]).norm();
                min_edge = min_edge.min(l);
                max_edge = max_edge.max(l);
            }
        }
        MeshStats {
            vertices: self.vertex_count(),
            edges: self.edge_count,
            faces: self.face_count(),
            boundary_vertices: self.boundary_flags.iter().filter(|&&b| b).count(),
            euler_characteristic: self.euler_characteristic(),
            min_edge,
            max_edge,
        }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub boundary_vertices: usize,
    pub euler_characteristic: i64,
    pub min_edge: f64,
    pub max_edge: f64,
}

pub fn triangle_area(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

fn cotangent(u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    u.dot(v) / u.cross(v).norm()
}

/// Icosahedron subdivided `level` times with vertices projected to the
/// sphere of the given radius; faces are counter-clockwise seen from outside.
pub fn icosphere(radius: f64, level: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
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
    ]
    .iter()
    .map(|p| Vector3::new(p[0], p[1], p[2]).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
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
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| -> usize {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let verts = verts.into_iter().map(|v| v * radius).collect();
    TriMesh::new(verts, faces).expect("icosphere construction is valid")
}

/// Torus of revolution about the `x3` axis: tube radius `minor` around a
/// core circle of radius `major`; outward orientation.
pub fn torus(major: f64, minor: f64, n_major: usize, n_minor: usize) -> TriMesh {
    assert!(n_major >= 3 && n_minor >= 3);
    let mut verts = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        let u = 2.0 * PI * i as f64 / n_major as f64;
        for j in 0..n_minor {
            let v = 2.0 * PI * j as f64 / n_minor as f64;
            let r = major + minor * v.cos();
            verts.push(Vector3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut faces = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriMesh::new(verts, faces).expect("torus construction is valid")
}

/// Flat disk in the `x3 = 0` plane built from concentric rings with spacing
/// `radius / rings`; ring `k` carries `6k` vertices. Normal is `+e3`.
pub fn disk(radius: f64, rings: usize) -> TriMesh {
    assert!(rings >= 1);
    let h = radius / rings as f64;
    let mut verts = vec![Vector3::zeros()];
    let mut ring_start = vec![0usize];
    for k in 1..=rings {
        ring_start.push(verts.len());
        let m = 6 * k;
        for j in 0..m {
            let a = 2.0 * PI * j as f64 / m as f64;
            verts.push(Vector3::new(k as f64 * h * a.cos(), k as f64 * h * a.sin(), 0.0));
        }
    }
    let mut faces = Vec::new();
    for j in 0..6 {
        faces.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    for k in 2..=rings {
        let (inner, outer) = (ring_start[k - 1], ring_start[k]);
        let (mi, mo) = (6 * (k - 1), 6 * k);
        // Advance around both rings by angle, emitting one triangle per step.
        let (mut i, mut o) = (0usize, 0usize);
        while i < mi || o < mo {
            let ai = (i + 1) as f64 / mi as f64;
            let ao = (o + 1) as f64 / mo as f64;
            let vi = inner + i % mi;
            let vo = outer + o % mo;
            if o < mo && (i >= mi || ao <= ai) {
                faces.push([vi, vo, outer + (o + 1) % mo]);
                o += 1;
            } else {
                faces.push([vi, vo, inner + (i + 1) % mi]);
                i += 1;
            }
        }
    }
    TriMesh::new(verts, faces).expect("disk construction is valid")
}

/// Open cylinder of the given radius around the `x3` axis for
/// `|x3| <= half_height`, with `n_theta` vertices per ring and `n_z`
/// intervals along the axis; outward orientation.
pub fn cylinder(radius: f64, half_height: f64, n_theta: usize, n_z: usize) -> TriMesh {
    assert!(n_theta >= 3 && n_z >= 1);
    let mut verts = Vec::with_capacity(n_theta * (n_z + 1));
    for k in 0..=n_z {
        let z = -half_height + 2.0 * half_height * k as f64 / n_z as f64;
        for j in 0..n_theta {
            let a = 2.0 * PI * j as f64 / n_theta as f64;
            verts.push(Vector3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let idx = |k: usize, j: usize| k * n_theta + j % n_theta;
    let mut faces = Vec::with_capacity(2 * n_theta * n_z);
    for k in 0..n_z {
        for j in 0..n_theta {
            let (a, b, c, d) = (idx(k, j), idx(k, j + 1), idx(k + 1, j + 1), idx(k + 1, j));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriMesh::new(verts, faces).expect("cylinder construction is valid")
}
