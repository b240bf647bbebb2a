//! Surface extraction and geometric metrics: marching cubes over scalar
//! lattices, occupancy IoU, symmetric Chamfer distance, and front-to-back
//! volume compositing.

mod tables;

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Point threshold where Chamfer switches from the exhaustive pass to the
/// grid-bucketed one.
pub const CHAMFER_BRUTE_FORCE_LIMIT: usize = 10_000;

/// Scalar samples on a regular lattice, x-fastest order, vertex positions
/// spanning the bounding box inclusively.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    dims: [usize; 3],
    bbox_min: [f64; 3],
    bbox_max: [f64; 3],
    values: Vec<f64>,
}

/// JSON sidecar written next to raw grid dumps.
#[derive(Debug, Serialize, Deserialize)]
struct GridSidecar {
    dims: [usize; 3],
    bbox_min: [f64; 3],
    bbox_max: [f64; 3],
    dtype: String,
    order: String,
}

impl ScalarGrid {
    pub fn new(
        dims: [usize; 3],
        bbox_min: [f64; 3],
        bbox_max: [f64; 3],
        values: Vec<f64>,
    ) -> Result<Self> {
        ensure!(
            dims.iter().all(|&d| d >= 2),
            "grid dims must be >= 2 each, got {dims:?}"
        );
        ensure!(
            values.len() == dims[0] * dims[1] * dims[2],
            "value count {} does not match dims {dims:?}",
            values.len()
        );
        ensure!(
            (0..3).all(|a| bbox_min[a] < bbox_max[a] && bbox_min[a].is_finite()
                && bbox_max[a].is_finite()),
            "invalid bounding box {bbox_min:?}..{bbox_max:?}"
        );
        ensure!(
            values.iter().all(|v| v.is_finite()),
            "grid values must be finite"
        );
        Ok(ScalarGrid {
            dims,
            bbox_min,
            bbox_max,
            values,
        })
    }

    /// Evaluates `f` at every lattice vertex.
    pub fn from_fn<F: Fn([f64; 3]) -> f64 + Sync>(
        dims: [usize; 3],
        bbox_min: [f64; 3],
        bbox_max: [f64; 3],
        f: F,
    ) -> Result<Self> {
        ensure!(
            dims.iter().all(|&d| d >= 2),
            "grid dims must be >= 2 each, got {dims:?}"
        );
        let plane = dims[0] * dims[1];
        let values: Vec<f64> = (0..dims[2])
            .into_par_iter()
            .flat_map_iter(|iz| {
                let mut slab = Vec::with_capacity(plane);
                for iy in 0..dims[1] {
                    for ix in 0..dims[0] {
                        slab.push(f(vertex_pos(
                            [ix, iy, iz],
                            dims,
                            bbox_min,
                            bbox_max,
                        )));
                    }
                }
                slab
            })
            .collect();
        ScalarGrid::new(dims, bbox_min, bbox_max, values)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn bbox(&self) -> ([f64; 3], [f64; 3]) {
        (self.bbox_min, self.bbox_max)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.values[ix + self.dims[0] * (iy + self.dims[1] * iz)]
    }

    pub fn vertex_position(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        vertex_pos([ix, iy, iz], self.dims, self.bbox_min, self.bbox_max)
    }

    /// Lattice spacing per axis.
    pub fn spacing(&self) -> [f64; 3] {
        [
            (self.bbox_max[0] - self.bbox_min[0]) / (self.dims[0] - 1) as f64,
            (self.bbox_max[1] - self.bbox_min[1]) / (self.dims[1] - 1) as f64,
            (self.bbox_max[2] - self.bbox_min[2]) / (self.dims[2] - 1) as f64,
        ]
    }

    /// Raw little-endian f32 dump plus a `<path>.json` sidecar describing
    /// dims and bounding box.
    pub fn write_raw(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.values.len() * 4);
        for &v in &self.values {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
        std::fs::write(path, bytes)?;
        let sidecar = GridSidecar {
            dims: self.dims,
            bbox_min: self.bbox_min,
            bbox_max: self.bbox_max,
            dtype: "f32le".to_string(),
            order: "x-fastest".to_string(),
        };
        let json = serde_json::to_string_pretty(&sidecar)
            .map_err(|e| Error::Format(format!("sidecar encode: {e}")))?;
        std::fs::write(sidecar_path(path), json)?;
        Ok(())
    }

    pub fn read_raw(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(sidecar_path(path))?;
        let sidecar: GridSidecar =
            serde_json::from_str(&json).map_err(|e| Error::Format(format!("sidecar: {e}")))?;
        ensure!(
            sidecar.dtype == "f32le" && sidecar.order == "x-fastest",
            "unsupported grid encoding {}/{}",
            sidecar.dtype,
            sidecar.order
        );
        let bytes = std::fs::read(path)?;
        let count = sidecar.dims[0] * sidecar.dims[1] * sidecar.dims[2];
        ensure!(
            bytes.len() == count * 4,
            "raw grid has {} bytes, expected {}",
            bytes.len(),
            count * 4
        );
        let values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        ScalarGrid::new(sidecar.dims, sidecar.bbox_min, sidecar.bbox_max, values)
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".json");
    std::path::PathBuf::from(s)
}

#[inline]
fn vertex_pos(idx: [usize; 3], dims: [usize; 3], lo: [f64; 3], hi: [f64; 3]) -> [f64; 3] {
    let mut p = [0.0; 3];
    for a in 0..3 {
        p[a] = lo[a] + (hi[a] - lo[a]) * idx[a] as f64 / (dims[a] - 1) as f64;
    }
    p
}

/// Triangle mesh with 0-based indices; no zero-area triangles.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// ASCII OBJ with 1-based indices.
    pub fn write_obj(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for v in &self.vertices {
            out.push_str(&format!("v {} {} {}\n", v[0], v[1], v[2]));
        }
        for t in &self.triangles {
            out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn triangle_area(&self, t: [usize; 3]) -> f64 {
        let [a, b, c] = [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]];
        let u = sub(b, a);
        let v = sub(c, a);
        0.5 * norm(cross(u, v))
    }

    /// Area-weighted uniform surface samples (deterministic per rng state).
    pub fn sample_surface(&self, count: usize, rng: &mut impl Rng) -> Result<Vec<[f64; 3]>> {
        ensure!(!self.triangles.is_empty(), "cannot sample an empty mesh");
        let areas: Vec<f64> = self.triangles.iter().map(|&t| self.triangle_area(t)).collect();
        let total: f64 = areas.iter().sum();
        ensure!(total > 0.0, "mesh has zero total area");
        let mut cdf = Vec::with_capacity(areas.len());
        let mut acc = 0.0;
        for a in &areas {
            acc += a / total;
            cdf.push(acc);
        }
        let mut points = Vec::with_capacity(count);
        for _ in 0..count {
            let u: f64 = rng.gen();
            let ti = cdf.partition_point(|&c| c < u).min(self.triangles.len() - 1);
            let t = self.triangles[ti];
            let (mut r1, r2): (f64, f64) = (rng.gen(), rng.gen());
            r1 = r1.sqrt();
            let (a, b, c) = (
                self.vertices[t[0]],
                self.vertices[t[1]],
                self.vertices[t[2]],
            );
            let w0 = 1.0 - r1;
            let w1 = r1 * (1.0 - r2);
            let w2 = r1 * r2;
            points.push([
                w0 * a[0] + w1 * b[0] + w2 * c[0],
                w0 * a[1] + w1 * b[1] + w2 * c[1],
                w0 * a[2] + w1 * b[2] + w2 * c[2],
            ]);
        }
        Ok(points)
    }
}

#[inline]
fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

#[inline]
fn sq_dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = sub(a, b);
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

/// Corner offsets of a cell, standard marching-cubes ring order.
const CORNER_OFFSETS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Edge endpoints as corner indices.
const EDGE_CORNERS: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Classic 256-case marching cubes with linear edge interpolation
/// (interpolation parameter clamped to [0,1] to guard equal-valued edges).
/// Values strictly below `iso` count as inside. A grid entirely on one side
/// of `iso` yields an empty mesh. Cells are emitted in z-outer, y, x order,
/// so the output is deterministic.
pub fn marching_cubes(grid: &ScalarGrid, iso: f64) -> Result<TriMesh> {
    ensure!(iso.is_finite(), "iso level must be finite");
    let [nx, ny, nz] = grid.dims;
    let slabs: Vec<TriMesh> = (0..nz - 1)
        .into_par_iter()
        .map(|iz| {
            let mut mesh = TriMesh::default();
            for iy in 0..ny - 1 {
                for ix in 0..nx - 1 {
                    march_cell(grid, iso, [ix, iy, iz], &mut mesh);
                }
            }
            mesh
        })
        .collect();
    let mut out = TriMesh::default();
    for slab in slabs {
        let offset = out.vertices.len();
        out.vertices.extend(slab.vertices);
        out.triangles.extend(
            slab.triangles
                .into_iter()
                .map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]),
        );
    }
    Ok(out)
}

fn march_cell(grid: &ScalarGrid, iso: f64, cell: [usize; 3], mesh: &mut TriMesh) {
    let mut corner_values = [0.0f64; 8];
    let mut corner_pos = [[0.0f64; 3]; 8];
    let mut case = 0usize;
    for (c, off) in CORNER_OFFSETS.iter().enumerate() {
        let idx = [cell[0] + off[0], cell[1] + off[1], cell[2] + off[2]];
        let v = grid.get(idx[0], idx[1], idx[2]);
        corner_values[c] = v;
        corner_pos[c] = grid.vertex_position(idx[0], idx[1], idx[2]);
        if v < iso {
            case |= 1 << c;
        }
    }
    if case == 0 || case == 255 {
        return;
    }
    let mut edge_vertex = [[0.0f64; 3]; 12];
    let mut edge_set = [false; 12];
    let tri = &tables::TRIANGLE_TABLE[case];
    let mut i = 0;
    while i < 16 && tri[i] != -1 {
        for e in [tri[i] as usize, tri[i + 1] as usize, tri[i + 2] as usize] {
            if !edge_set[e] {
                let [c0, c1] = EDGE_CORNERS[e];
                edge_vertex[e] = interpolate_edge(
                    corner_pos[c0],
                    corner_pos[c1],
                    corner_values[c0],
                    corner_values[c1],
                    iso,
                );
                edge_set[e] = true;
            }
        }
        let base = mesh.vertices.len();
        let (e0, e1, e2) = (tri[i] as usize, tri[i + 1] as usize, tri[i + 2] as usize);
        let candidate = TriMesh {
            vertices: vec![edge_vertex[e0], edge_vertex[e1], edge_vertex[e2]],
            triangles: vec![[0, 1, 2]],
        };
        if candidate.triangle_area([0, 1, 2]) > 1e-30 {
            mesh.vertices.extend(candidate.vertices);
            mesh.triangles.push([base, base + 1, base + 2]);
        }
        i += 3;
    }
}

fn interpolate_edge(p0: [f64; 3], p1: [f64; 3], v0: f64, v1: f64, iso: f64) -> [f64; 3] {
    let denom = v1 - v0;
    let t = if denom == 0.0 {
        0.5
    } else {
        ((iso - v0) / denom).clamp(0.0, 1.0)
    };
    [
        p0[0] + t * (p1[0] - p0[0]),
        p0[1] + t * (p1[1] - p0[1]),
        p0[2] + t * (p1[2] - p0[2]),
    ]
}

/// Occupancy intersection-over-union of two grids with identical lattices;
/// value < iso means inside. An empty union reports 1.0.
pub fn iou(a: &ScalarGrid, b: &ScalarGrid, iso: f64) -> Result<f64> {
    ensure!(
        a.dims == b.dims && a.bbox_min == b.bbox_min && a.bbox_max == b.bbox_max,
        "grids must share dims and bounding box"
    );
    let mut inter = 0usize;
    let mut union = 0usize;
    for (va, vb) in a.values.iter().zip(&b.values) {
        let ia = *va < iso;
        let ib = *vb < iso;
        inter += (ia && ib) as usize;
        union += (ia || ib) as usize;
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Symmetric mean squared nearest-neighbor distance:
/// ½·mean_a min_b ‖a−b‖² + ½·mean_b min_a ‖b−a‖². Exhaustive below
/// [`CHAMFER_BRUTE_FORCE_LIMIT`] points, grid-bucketed (still exact) above.
pub fn chamfer(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64> {
    ensure!(
        !a.is_empty() && !b.is_empty(),
        "chamfer needs two non-empty point sets"
    );
    let big = a.len().max(b.len());
    if big <= CHAMFER_BRUTE_FORCE_LIMIT {
        Ok(chamfer_brute(a, b))
    } else {
        Ok(chamfer_bucketed(a, b))
    }
}

pub(crate) fn chamfer_brute(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    0.5 * mean_min_sq_brute(a, b) + 0.5 * mean_min_sq_brute(b, a)
}

fn mean_min_sq_brute(from: &[[f64; 3]], to: &[[f64; 3]]) -> f64 {
    let mins: Vec<f64> = from
        .par_iter()
        .map(|&p| {
            let mut best = f64::INFINITY;
            for &q in to {
                let d = sq_dist(p, q);
                if d < best {
                    best = d;
                }
            }
            best
        })
        .collect();
    mins.iter().sum::<f64>() / from.len() as f64
}

pub(crate) fn chamfer_bucketed(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    0.5 * mean_min_sq_bucketed(a, b) + 0.5 * mean_min_sq_bucketed(b, a)
}

struct PointBuckets<'a> {
    points: &'a [[f64; 3]],
    cells: HashMap<[i64; 3], Vec<usize>>,
    origin: [f64; 3],
    cell_size: f64,
}

impl<'a> PointBuckets<'a> {
    fn build(points: &'a [[f64; 3]]) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let extent = (0..3).map(|a| hi[a] - lo[a]).fold(0.0f64, f64::max);
        let per_axis = (points.len() as f64).cbrt().ceil().max(1.0);
        let cell_size = (extent / per_axis).max(1e-12);
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(cell_of(*p, lo, cell_size)).or_default().push(i);
        }
        PointBuckets {
            points,
            cells,
            origin: lo,
            cell_size,
        }
    }

    /// Exact nearest squared distance via expanding Chebyshev rings: a ring
    /// at cell distance r cannot hold anything closer than (r−1)·cell_size,
    /// so the search stops once the current best beats that bound.
    fn nearest_sq(&self, p: [f64; 3]) -> f64 {
        let home = cell_of(p, self.origin, self.cell_size);
        let mut best = f64::INFINITY;
        let mut r: i64 = 0;
        loop {
            if r > 0 {
                let ring_min = (r - 1) as f64 * self.cell_size;
                if best <= ring_min * ring_min {
                    return best;
                }
            }
            for dz in -r..=r {
                for dy in -r..=r {
                    for dx in -r..=r {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                            continue;
                        }
                        if let Some(members) =
                            self.cells.get(&[home[0] + dx, home[1] + dy, home[2] + dz])
                        {
                            for &i in members {
                                let d = sq_dist(p, self.points[i]);
                                if d < best {
                                    best = d;
                                }
                            }
                        }
                    }
                }
            }
            r += 1;
        }
    }
}

#[inline]
fn cell_of(p: [f64; 3], origin: [f64; 3], cell_size: f64) -> [i64; 3] {
    [
        ((p[0] - origin[0]) / cell_size).floor() as i64,
        ((p[1] - origin[1]) / cell_size).floor() as i64,
        ((p[2] - origin[2]) / cell_size).floor() as i64,
    ]
}

fn mean_min_sq_bucketed(from: &[[f64; 3]], to: &[[f64; 3]]) -> f64 {
    let buckets = PointBuckets::build(to);
    let mins: Vec<f64> = from.par_iter().map(|&p| buckets.nearest_sq(p)).collect();
    mins.iter().sum::<f64>() / from.len() as f64
}

/// Per-ray emission/absorption samples ordered front to back.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySamples {
    colors: Vec<[f64; 3]>,
    densities: Vec<f64>,
    spacings: Vec<f64>,
}

impl RaySamples {
    pub fn new(colors: Vec<[f64; 3]>, densities: Vec<f64>, spacings: Vec<f64>) -> Result<Self> {
        ensure!(
            colors.len() == densities.len() && colors.len() == spacings.len(),
            "sample arrays must have equal length ({}, {}, {})",
            colors.len(),
            densities.len(),
            spacings.len()
        );
        for (i, c) in colors.iter().enumerate() {
            ensure!(
                c.iter().all(|v| (0.0..=1.0).contains(v)),
                "color {i} out of [0,1]: {c:?}"
            );
        }
        for (i, &d) in densities.iter().enumerate() {
            ensure!(
                d >= 0.0 && d.is_finite(),
                "density {i} must be >= 0, got {d}"
            );
        }
        for (i, &s) in spacings.iter().enumerate() {
            ensure!(
                s > 0.0 && s.is_finite(),
                "spacing {i} must be > 0, got {s}"
            );
        }
        Ok(RaySamples {
            colors,
            densities,
            spacings,
        })
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    /// Per-sample compositing weights T_i·(1 − exp(−σ_i·δ_i)).
    pub fn weights(&self) -> Vec<f64> {
        let mut t = 1.0;
        let mut out = Vec::with_capacity(self.len());
        for (&sigma, &delta) in self.densities.iter().zip(&self.spacings) {
            let absorb = (-sigma * delta).exp();
            out.push(t * (1.0 - absorb));
            t *= absorb;
        }
        out
    }
}

/// Front-to-back emission/absorption compositing:
/// C = Σ T_i (1 − exp(−σ_i δ_i)) c_i with T_i = exp(−Σ_{j<i} σ_j δ_j).
pub fn composite_ray(samples: &RaySamples) -> [f64; 3] {
    let mut color = [0.0f64; 3];
    for (w, c) in samples.weights().iter().zip(&samples.colors) {
        for a in 0..3 {
            color[a] += w * c[a];
        }
    }
    color
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sphere_grid(n: usize, radius: f64) -> ScalarGrid {
        ScalarGrid::from_fn([n, n, n], [-1.0; 3], [1.0; 3], |p| norm(p) - radius).unwrap()
    }

    #[test]
    fn triangle_table_uses_only_crossed_edges() {
        // Table integrity: every edge referenced by a case must join an
        // inside corner to an outside corner for that case.
        for case in 0..256usize {
            let tri = &tables::TRIANGLE_TABLE[case];
            let mut i = 0;
            while i < 16 && tri[i] != -1 {
                for off in 0..3 {
                    let e = tri[i + off] as usize;
                    let [c0, c1] = EDGE_CORNERS[e];
                    let in0 = case & (1 << c0) != 0;
                    let in1 = case & (1 << c1) != 0;
                    assert_ne!(in0, in1, "case {case} edge {e} does not cross");
                }
                i += 3;
            }
        }
    }

    #[test]
    fn all_positive_grid_gives_empty_mesh() {
        let grid = ScalarGrid::from_fn([8, 8, 8], [-1.0; 3], [1.0; 3], |_| 1.0).unwrap();
        let mesh = marching_cubes(&grid, 0.0).unwrap();
        assert!(mesh.is_empty());
    }

    #[test]
    fn sphere_vertices_near_unit_radius() {
        let grid = sphere_grid(64, 1.0);
        let mesh = marching_cubes(&grid, 0.0).unwrap();
        assert!(!mesh.is_empty());
        let tol = 3.0f64.sqrt() * (2.0 / 63.0);
        for v in &mesh.vertices {
            let r = norm(*v);
            assert!((r - 1.0).abs() < tol, "vertex at radius {r}");
        }
        // Determinism across runs.
        let again = marching_cubes(&grid, 0.0).unwrap();
        assert_eq!(mesh, again);
    }

    #[test]
    fn mesh_vertices_inside_bbox_no_degenerate_triangles() {
        let grid = sphere_grid(24, 0.7);
        let mesh = marching_cubes(&grid, 0.0).unwrap();
        for v in &mesh.vertices {
            assert!(v.iter().all(|c| (-1.0..=1.0).contains(c)));
        }
        for &t in &mesh.triangles {
            assert!(mesh.triangle_area(t) > 0.0);
        }
    }

    #[test]
    fn marching_cubes_shift_invariant() {
        // Dyadic values and shift keep the arithmetic exact, so the meshes
        // match bitwise.
        let grid = ScalarGrid::from_fn([9, 9, 9], [-1.0; 3], [1.0; 3], |p| {
            (norm(p) * 8.0).round() / 8.0 - 0.75
        })
        .unwrap();
        let shifted = ScalarGrid::new(
            grid.dims(),
            [-1.0; 3],
            [1.0; 3],
            grid.values().iter().map(|v| v + 2.0).collect(),
        )
        .unwrap();
        let a = marching_cubes(&grid, 0.0).unwrap();
        let b = marching_cubes(&shifted, 2.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn iou_trivial_cases() {
        let g = sphere_grid(16, 0.8);
        assert_eq!(iou(&g, &g, 0.0).unwrap(), 1.0);
        // Disjoint occupancies: offset spheres far apart inside the box.
        let a = ScalarGrid::from_fn([16; 3], [-1.0; 3], [1.0; 3], |p| {
            norm(sub(p, [-0.7, 0.0, 0.0])) - 0.15
        })
        .unwrap();
        let b = ScalarGrid::from_fn([16; 3], [-1.0; 3], [1.0; 3], |p| {
            norm(sub(p, [0.7, 0.0, 0.0])) - 0.15
        })
        .unwrap();
        assert_eq!(iou(&a, &b, 0.0).unwrap(), 0.0);
        // All-empty grids: union empty → 1 by convention.
        let e = ScalarGrid::from_fn([16; 3], [-1.0; 3], [1.0; 3], |_| 1.0).unwrap();
        assert_eq!(iou(&e, &e, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn iou_nested_spheres_volume_ratio() {
        let outer = sphere_grid(96, 1.0);
        let inner = sphere_grid(96, 0.8);
        let got = iou(&outer, &inner, 0.0).unwrap();
        let expect = 0.8f64.powi(3);
        assert!(
            (got - expect).abs() <= 0.02 * expect,
            "iou {got} vs volume ratio {expect}"
        );
    }

    #[test]
    fn iou_rejects_mismatched_grids() {
        let a = sphere_grid(8, 0.5);
        let b = sphere_grid(9, 0.5);
        assert!(iou(&a, &b, 0.0).is_err());
    }

    #[test]
    fn chamfer_trivial_cases() {
        let a = vec![[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]];
        assert_eq!(chamfer(&a, &a).unwrap(), 0.0);
        let single_a = vec![[0.0, 0.0, 0.0]];
        let single_b = vec![[1.0, 0.0, 0.0]];
        assert_eq!(chamfer(&single_a, &single_b).unwrap(), 1.0);
        assert!(chamfer(&[], &single_b).is_err());
    }

    #[test]
    fn chamfer_bucketed_equals_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut rand_points = |n: usize| -> Vec<[f64; 3]> {
            (0..n)
                .map(|_| {
                    [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ]
                })
                .collect()
        };
        let a = rand_points(5000);
        let b = rand_points(5000);
        let brute = chamfer_brute(&a, &b);
        let bucketed = chamfer_bucketed(&a, &b);
        assert_eq!(brute, bucketed);
    }

    #[test]
    fn composite_all_transparent_is_black() {
        let s = RaySamples::new(vec![[1.0, 0.5, 0.2]; 4], vec![0.0; 4], vec![0.1; 4]).unwrap();
        assert_eq!(composite_ray(&s), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn composite_opaque_sample_saturates() {
        let c = [0.3, 0.7, 0.9];
        let s = RaySamples::new(vec![c], vec![500.0], vec![0.1]).unwrap();
        let out = composite_ray(&s);
        for a in 0..3 {
            assert!((out[a] - c[a]).abs() < 1e-19);
        }
    }

    #[test]
    fn composite_two_half_absorbing_samples() {
        // σδ = ln 2 twice: C = ½c₁ + ¼c₂.
        let ln2 = std::f64::consts::LN_2;
        let c1 = [1.0, 0.0, 0.5];
        let c2 = [0.0, 1.0, 1.0];
        let s = RaySamples::new(vec![c1, c2], vec![ln2, ln2], vec![1.0, 1.0]).unwrap();
        let out = composite_ray(&s);
        for a in 0..3 {
            let expect = 0.5 * c1[a] + 0.25 * c2[a];
            assert!((out[a] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn composite_weights_bounded_and_zero_density_appendable() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..20 {
            let n = rng.gen_range(1..12);
            let colors: Vec<[f64; 3]> = (0..n).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
            let densities: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 20.0).collect();
            let spacings: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 0.5 + 1e-3).collect();
            let s = RaySamples::new(colors.clone(), densities.clone(), spacings.clone()).unwrap();
            let w = s.weights();
            assert!(w.iter().all(|&x| x >= 0.0));
            assert!(w.iter().sum::<f64>() <= 1.0 + 1e-12);

            let base = composite_ray(&s);
            let mut colors2 = colors;
            colors2.push([0.9, 0.9, 0.9]);
            let mut densities2 = densities;
            densities2.push(0.0);
            let mut spacings2 = spacings;
            spacings2.push(0.25);
            let extended = RaySamples::new(colors2, densities2, spacings2).unwrap();
            assert_eq!(composite_ray(&extended), base);
        }
    }

    #[test]
    fn ray_samples_validation() {
        assert!(RaySamples::new(vec![[0.0; 3]], vec![-1.0], vec![0.1]).is_err());
        assert!(RaySamples::new(vec![[0.0; 3]], vec![1.0], vec![0.0]).is_err());
        assert!(RaySamples::new(vec![[2.0, 0.0, 0.0]], vec![1.0], vec![0.1]).is_err());
        assert!(RaySamples::new(vec![[0.0; 3]; 2], vec![1.0], vec![0.1, 0.1]).is_err());
    }

    #[test]
    fn grid_raw_roundtrip() {
        let dir = std::env::temp_dir().join("finer_grid_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("grid.raw");
        // f32-exact values so the roundtrip compares equal.
        let grid = ScalarGrid::from_fn([5, 4, 3], [-1.0; 3], [1.0; 3], |p| {
            (p[0] * 4.0).round() / 4.0
        })
        .unwrap();
        grid.write_raw(&path).unwrap();
        let back = ScalarGrid::read_raw(&path).unwrap();
        assert_eq!(grid, back);
    }

    #[test]
    fn obj_output_shape() {
        let mesh = TriMesh {
            vertices: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            triangles: vec![[0, 1, 2]],
        };
        let dir = std::env::temp_dir().join("finer_obj_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("tri.obj");
        mesh.write_obj(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    }

    #[test]
    fn surface_sampling_stays_on_sphere() {
        let grid = sphere_grid(32, 0.9);
        let mesh = marching_cubes(&grid, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = mesh.sample_surface(500, &mut rng).unwrap();
        assert_eq!(pts.len(), 500);
        for p in pts {
            assert!((norm(p) - 0.9).abs() < 0.1);
        }
    }
}
