//! 3D signed-distance-field fitting over analytic targets.
//!
//! Sign convention: negative inside, positive outside, zero level set is the
//! surface. Targets live in the [−1,1]³ box.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, Error, Result};
use crate::fitting::{NetworkSpec, TrainSettings};
use crate::geometry::{chamfer, iou, marching_cubes, ScalarGrid, TriMesh};
use crate::init::InitScheme;
use crate::linalg::Matrix;
use crate::net::Mlp;
use crate::optim::{train, TrainLog};
use crate::sample::{sampling_rng, SampleBatch};

/// Default per-iteration sample count.
pub const DEFAULT_SDF_BATCH: usize = 10_000;

/// Standard deviation of the near-surface sampling offset.
pub const NEAR_SURFACE_SIGMA: f64 = 0.05;

/// Surface samples per side for Chamfer evaluation.
pub const CHAMFER_SURFACE_SAMPLES: usize = 30_000;

/// Rows per forward chunk when evaluating a lattice.
const EVAL_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticSdf {
    Sphere { radius: f64 },
    Torus { major: f64, minor: f64 },
    Box { half_extents: [f64; 3] },
    /// The z = 0 plane; distance is simply z.
    Plane,
}

impl AnalyticSdf {
    /// Built-in shapes by name with default sizes.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "sphere" => Ok(AnalyticSdf::Sphere { radius: 0.8 }),
            "torus" => Ok(AnalyticSdf::Torus {
                major: 0.55,
                minor: 0.25,
            }),
            "box" => Ok(AnalyticSdf::Box {
                half_extents: [0.6, 0.45, 0.5],
            }),
            "plane" => Ok(AnalyticSdf::Plane),
            other => Err(Error::Contract(format!(
                "unknown shape {other:?} (expected sphere, torus, box or plane)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnalyticSdf::Sphere { .. } => "sphere",
            AnalyticSdf::Torus { .. } => "torus",
            AnalyticSdf::Box { .. } => "box",
            AnalyticSdf::Plane => "plane",
        }
    }

    /// Signed distance: negative inside, positive outside.
    pub fn distance(&self, p: [f64; 3]) -> f64 {
        match *self {
            AnalyticSdf::Sphere { radius } => len3(p) - radius,
            AnalyticSdf::Torus { major, minor } => {
                let ring = (p[0] * p[0] + p[1] * p[1]).sqrt() - major;
                (ring * ring + p[2] * p[2]).sqrt() - minor
            }
            AnalyticSdf::Box { half_extents } => {
                let q = [
                    p[0].abs() - half_extents[0],
                    p[1].abs() - half_extents[1],
                    p[2].abs() - half_extents[2],
                ];
                let outside = len3([q[0].max(0.0), q[1].max(0.0), q[2].max(0.0)]);
                let inside = q[0].max(q[1]).max(q[2]).min(0.0);
                outside + inside
            }
            AnalyticSdf::Plane => p[2],
        }
    }

    /// The [−1,1]³ task domain.
    pub fn bbox(&self) -> ([f64; 3], [f64; 3]) {
        ([-1.0; 3], [1.0; 3])
    }

    /// Uniform point on the zero level set.
    pub fn surface_point(&self, rng: &mut ChaCha8Rng) -> [f64; 3] {
        match *self {
            AnalyticSdf::Sphere { radius } => {
                let d = unit_direction(rng);
                [radius * d[0], radius * d[1], radius * d[2]]
            }
            AnalyticSdf::Torus { major, minor } => loop {
                let theta = rng.gen::<f64>() * std::f64::consts::TAU;
                let phi = rng.gen::<f64>() * std::f64::consts::TAU;
                // Area element is proportional to major + minor·cos φ.
                let w = (major + minor * phi.cos()) / (major + minor);
                if rng.gen::<f64>() <= w {
                    let ring = major + minor * phi.cos();
                    return [ring * theta.cos(), ring * theta.sin(), minor * phi.sin()];
                }
            },
            AnalyticSdf::Box { half_extents } => {
                let [hx, hy, hz] = half_extents;
                let areas = [hy * hz, hx * hz, hx * hy]; // x, y, z face pairs
                let total: f64 = areas.iter().sum();
                let pick = rng.gen::<f64>() * total;
                let axis = if pick < areas[0] {
                    0
                } else if pick < areas[0] + areas[1] {
                    1
                } else {
                    2
                };
                let side = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let u = rng.gen_range(-1.0..1.0);
                let v = rng.gen_range(-1.0..1.0);
                match axis {
                    0 => [side * hx, u * hy, v * hz],
                    1 => [u * hx, side * hy, v * hz],
                    _ => [u * hx, v * hy, side * hz],
                }
            }
            AnalyticSdf::Plane => [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0],
        }
    }

    /// Target values on a lattice (the evaluation reference).
    pub fn grid(&self, resolution: usize) -> Result<ScalarGrid> {
        let (lo, hi) = self.bbox();
        ScalarGrid::from_fn([resolution; 3], lo, hi, |p| self.distance(p))
    }
}

fn len3(p: [f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

fn unit_direction(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let p = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = len3(p);
        if n > 1e-6 && n <= 1.0 {
            return [p[0] / n, p[1] / n, p[2] / n];
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller.
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleStrategy {
    /// Uniform over the box.
    Uniform,
    /// Half uniform, half surface points with Gaussian offsets
    /// (σ = [`NEAR_SURFACE_SIGMA`]), clamped to the box.
    Mixed,
}

/// Draws a batch of points with their exact signed distances.
pub fn sample_sdf(
    target: &AnalyticSdf,
    count: usize,
    strategy: SampleStrategy,
    rng: &mut ChaCha8Rng,
) -> SampleBatch {
    let (lo, hi) = target.bbox();
    let mut coords = Vec::with_capacity(count * 3);
    let mut values = Vec::with_capacity(count);
    let near_surface = match strategy {
        SampleStrategy::Uniform => 0,
        SampleStrategy::Mixed => count / 2,
    };
    for i in 0..count {
        let p = if i < near_surface {
            let s = target.surface_point(rng);
            [
                (s[0] + NEAR_SURFACE_SIGMA * gaussian(rng)).clamp(lo[0], hi[0]),
                (s[1] + NEAR_SURFACE_SIGMA * gaussian(rng)).clamp(lo[1], hi[1]),
                (s[2] + NEAR_SURFACE_SIGMA * gaussian(rng)).clamp(lo[2], hi[2]),
            ]
        } else {
            [
                rng.gen_range(lo[0]..hi[0]),
                rng.gen_range(lo[1]..hi[1]),
                rng.gen_range(lo[2]..hi[2]),
            ]
        };
        coords.extend_from_slice(&p);
        values.push(target.distance(p));
    }
    SampleBatch::new(
        Matrix::from_vec(count, 3, coords).expect("finite"),
        Matrix::from_vec(count, 1, values).expect("finite"),
    )
    .expect("row counts equal")
}

/// Evaluates a scalar network over a lattice in bounded-memory chunks.
pub fn eval_on_grid(mlp: &Mlp, resolution: usize, bbox: ([f64; 3], [f64; 3])) -> Result<ScalarGrid> {
    ensure!(
        mlp.input_dim() == 3 && mlp.output_dim() == 1,
        "lattice evaluation needs a 3-in/1-out network, got dims {:?}",
        mlp.dims()
    );
    let (lo, hi) = bbox;
    let n = resolution;
    let mut values = Vec::with_capacity(n * n * n);
    let mut pending = Vec::with_capacity(EVAL_CHUNK * 3);
    let flush = |pending: &mut Vec<f64>, values: &mut Vec<f64>| -> Result<()> {
        if pending.is_empty() {
            return Ok(());
        }
        let rows = pending.len() / 3;
        let batch = Matrix::from_vec(rows, 3, std::mem::take(pending))?;
        let out = mlp.predict(&batch)?;
        values.extend_from_slice(out.data());
        Ok(())
    };
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                for (a, i) in [ix, iy, iz].into_iter().enumerate() {
                    pending.push(lo[a] + (hi[a] - lo[a]) * i as f64 / (n - 1) as f64);
                }
                if pending.len() >= EVAL_CHUNK * 3 {
                    flush(&mut pending, &mut values)?;
                }
            }
        }
    }
    flush(&mut pending, &mut values)?;
    ScalarGrid::new([n; 3], lo, hi, values)
}

#[derive(Debug)]
pub struct SdfFit {
    pub mlp: Mlp,
    pub grid: ScalarGrid,
    pub log: TrainLog,
}

/// Trains a network on sampled signed distances with plain regression loss
/// and evaluates it on a lattice.
pub fn fit_sdf(
    target: &AnalyticSdf,
    spec: &NetworkSpec,
    scheme: &InitScheme,
    settings: &TrainSettings,
    strategy: SampleStrategy,
    eval_resolution: usize,
) -> Result<SdfFit> {
    ensure!(
        eval_resolution >= 2,
        "evaluation resolution must be >= 2, got {eval_resolution}"
    );
    ensure!(
        spec.encoder.is_none(),
        "positional encoding for the sdf task is applied per batch; \
         encoder-equipped fits are handled by the image pipeline only"
    );
    let mut mlp = spec.build(3, 1, scheme)?;
    let batch_size = settings.batch_override.unwrap_or(DEFAULT_SDF_BATCH);
    let mut state = settings.adam_state(&mlp)?;
    let cfg = settings.train_config(false);
    let mut rng = sampling_rng(scheme.seed);
    let log = train(
        &mut mlp,
        |_| sample_sdf(target, batch_size, strategy, &mut rng),
        &cfg,
        &mut state,
    )
    .map_err(Error::from)?;
    let grid = eval_on_grid(&mlp, eval_resolution, target.bbox())?;
    Ok(SdfFit { mlp, grid, log })
}

#[derive(Debug)]
pub struct SdfEvaluation {
    pub iou: f64,
    /// Symmetric Chamfer between surface samples of the extracted mesh and
    /// the analytic surface; absent when the predicted mesh is empty.
    pub chamfer: Option<f64>,
    pub mesh: TriMesh,
}

/// Compares a predicted lattice against the analytic target: occupancy IoU
/// on the same lattice plus Chamfer between surface samples.
pub fn evaluate_sdf_grid(
    grid: &ScalarGrid,
    target: &AnalyticSdf,
    surface_samples: usize,
    seed: u64,
) -> Result<SdfEvaluation> {
    let reference = ScalarGrid::from_fn(grid.dims(), grid.bbox().0, grid.bbox().1, |p| {
        target.distance(p)
    })?;
    let iou_value = iou(grid, &reference, 0.0)?;
    let mesh = marching_cubes(grid, 0.0)?;
    let chamfer_value = if mesh.is_empty() || surface_samples == 0 {
        None
    } else {
        let mut rng = sampling_rng(seed ^ 0xC4A3_F00D);
        let pred_points = mesh.sample_surface(surface_samples, &mut rng)?;
        let true_points: Vec<[f64; 3]> = (0..surface_samples)
            .map(|_| target.surface_point(&mut rng))
            .collect();
        Some(chamfer(&pred_points, &true_points)?)
    };
    Ok(SdfEvaluation {
        iou: iou_value,
        chamfer: chamfer_value,
        mesh,
    })
}
