//! Quasi-uniform triangulation of the truncation disk, conforming to a
//! polygonal interface.

use std::f64::consts::TAU;

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::error::FemError;
use crate::media::Domain;
use crate::Point;

/// Points closer than this multiple of `h` to a constraint edge are dropped.
const CONSTRAINT_CLEARANCE: f64 = 0.55;

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Ring vertex indices on `|x − center| = radius`, sorted by angle.
    pub ring: Vec<usize>,
    pub ring_angles: Vec<f64>,
    pub center: Point,
    pub radius: f64,
    pub h: f64,
    /// `true` when the interface polygon coincides with `∂Ω`.
    pub interface_conforming: bool,
    /// Per-triangle flag: centroid inside `Ω`.
    pub inside: Vec<bool>,
    /// Interface polygon edges as vertex pairs, counterclockwise around `Ω`.
    pub interface_edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    /// Minimum number of ring vertices (use `8M` for a DtN truncation `M`).
    pub min_ring: usize,
    /// Laplacian smoothing sweeps of the free vertices.
    pub smoothing: usize,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self { min_ring: 0, smoothing: 2 }
    }
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + t * ab)).norm()
}

/// Triangulates the disk `|x − center| ≤ radius` with element size `h`,
/// inserting the interface polygon of `inclusion` (edges ≤ `h`) as
/// constraints.
pub fn generate_mesh(center: Point, radius: f64, inclusion: Option<&Domain>, h: f64, opts: MeshOptions) -> Result<Mesh, FemError> {
    if !(h > 0.0) || !(radius > 0.0) || h > 0.5 * radius {
        return Err(FemError::Mesh(format!("need 0 < h <= R/2 (h = {h}, R = {radius})")));
    }
    let n_ring = ((TAU * radius / h).ceil() as usize).max(opts.min_ring).max(8);
    let mut pts: Vec<Point> = Vec::new();
    let mut ring_angles = Vec::with_capacity(n_ring);
    for i in 0..n_ring {
        let th = TAU * i as f64 / n_ring as f64;
        ring_angles.push(th);
        pts.push(center + radius * Point::new(th.cos(), th.sin()));
    }
    let ring: Vec<usize> = (0..n_ring).collect();
    let mut edges: Vec<[usize; 2]> = (0..n_ring).map(|i| [i, (i + 1) % n_ring]).collect();

    let mut interface_edges = Vec::new();
    let mut interface_pts = Vec::new();
    let mut conforming = true;
    if let Some(dom) = inclusion {
        let (poly, conf) = dom.interface_polygon(h);
        conforming = conf;
        for p in &poly {
            if (p - center).norm() > 0.8 * radius {
                return Err(FemError::Mesh(format!("inclusion point ({:.4}, {:.4}) is within the 20% margin of the truncation circle", p.x, p.y)));
            }
        }
        let base = pts.len();
        for i in 0..poly.len() {
            interface_edges.push([base + i, base + (i + 1) % poly.len()]);
        }
        edges.extend(interface_edges.iter().copied());
        pts.extend(poly.iter().copied());
        interface_pts = poly;
    }
    let n_fixed = pts.len();

    // Equilateral lattice, aligned with the center.
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = (radius / dy).ceil() as i64 + 1;
    let cols = (radius / h).ceil() as i64 + 1;
    let seg: Vec<(Point, Point)> = (0..interface_pts.len()).map(|i| (interface_pts[i], interface_pts[(i + 1) % interface_pts.len()])).collect();
    let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in &interface_pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let clearance = CONSTRAINT_CLEARANCE * h;
    for j in -rows..=rows {
        let shift = if j.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        for i in -cols..=cols {
            let p = center + Point::new(i as f64 * h + shift, j as f64 * dy);
            if (p - center).norm() > radius - clearance {
                continue;
            }
            let near_box = !seg.is_empty() && p.x > lo.x - clearance && p.x < hi.x + clearance && p.y > lo.y - clearance && p.y < hi.y + clearance;
            if near_box && seg.iter().any(|&(a, b)| segment_distance(p, a, b) < clearance) {
                continue;
            }
            pts.push(p);
        }
    }

    let mut triangles = triangulate(&pts, &edges)?;
    for _ in 0..opts.smoothing {
        smooth(&mut pts, &triangles, n_fixed);
        triangles = triangulate(&pts, &edges)?;
    }

    let inside = match inclusion {
        Some(dom) => triangles
            .iter()
            .map(|t| {
                let c = (pts[t[0]] + pts[t[1]] + pts[t[2]]) / 3.0;
                if conforming {
                    dom.contains(c)
                } else {
                    point_in_ring(&interface_pts, c)
                }
            })
            .collect(),
        None => vec![false; triangles.len()],
    };

    Ok(Mesh { vertices: pts, triangles, ring, ring_angles, center, radius, h, interface_conforming: conforming, inside, interface_edges })
}

fn point_in_ring(poly: &[Point], x: Point) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi.y > x.y) != (pj.y > x.y) && x.x < (pj.x - pi.x) * (x.y - pi.y) / (pj.y - pi.y) + pi.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn triangulate(pts: &[Point], edges: &[[usize; 2]]) -> Result<Vec<[usize; 3]>, FemError> {
    let verts: Vec<Point2<f64>> = pts.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(verts, edges.to_vec())
        .map_err(|e| FemError::Mesh(format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != pts.len() {
        return Err(FemError::Mesh("duplicate mesh vertices".into()));
    }
    let mut tris = Vec::with_capacity(cdt.num_inner_faces());
    for f in cdt.inner_faces() {
        let v = f.vertices();
        let t = [v[0].fix().index(), v[1].fix().index(), v[2].fix().index()];
        tris.push(orient(pts, t));
    }
    Ok(tris)
}

fn orient(pts: &[Point], t: [usize; 3]) -> [usize; 3] {
    if signed_area(pts, &t) < 0.0 {
        [t[0], t[2], t[1]]
    } else {
        t
    }
}

pub fn signed_area(pts: &[Point], t: &[usize; 3]) -> f64 {
    let (a, b, c) = (pts[t[0]], pts[t[1]], pts[t[2]]);
    0.5 * ((b - a).x * (c - a).y - (b - a).y * (c - a).x)
}

/// Moves each free vertex to the average of its neighbours.
fn smooth(pts: &mut [Point], tris: &[[usize; 3]], n_fixed: usize) {
    let n = pts.len();
    let mut sum = vec![Point::zeros(); n];
    let mut count = vec![0usize; n];
    for t in tris {
        for i in 0..3 {
            let a = t[i];
            let b = t[(i + 1) % 3];
            sum[a] += pts[b];
            count[a] += 1;
            sum[b] += pts[a];
            count[b] += 1;
        }
    }
    for i in n_fixed..n {
        if count[i] > 0 {
            pts[i] = sum[i] / count[i] as f64;
        }
    }
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    pub fn area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, &self.triangles[t])
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut worst = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.corners(t);
            for i in 0..3 {
                let u = p[(i + 1) % 3] - p[i];
                let v = p[(i + 2) % 3] - p[i];
                let ang = (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos();
                worst = worst.min(ang.to_degrees());
            }
        }
        worst
    }

    /// Counts of triangles inside and outside `Ω`.
    pub fn classification(&self) -> (usize, usize) {
        let n_in = self.inside.iter().filter(|&&b| b).count();
        (n_in, self.inside.len() - n_in)
    }

    /// For each interface edge, the index of the adjacent triangle inside `Ω`.
    pub fn interface_inner_triangles(&self) -> Vec<Option<usize>> {
        use std::collections::HashMap;
        let mut map: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if !self.inside[t] {
                continue;
            }
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                map.insert((a.min(b), a.max(b)), t);
            }
        }
        self.interface_edges.iter().map(|&[a, b]| map.get(&(a.min(b), a.max(b))).copied()).collect()
    }
}
