//! Frequency-domain diagnostics for variable-periodic networks.
//!
//! The variable-periodic unit sin((|x|+1)x) splits its domain into
//! sub-functions separated by the roots of (|x|+1)x = nπ; the constants and
//! boundaries here quantify how much faster each sub-function oscillates
//! than a plain sine. `neuron_frequency_map` measures what the first layer
//! of a trained (or freshly initialized) network actually encodes.

use crate::error::{ensure, Result};
use crate::net::Mlp;

/// Positive root of (x+1)·x = nπ: the boundary between sub-function n−1 and
/// n of the variable-periodic unit.
pub fn subfunction_boundary(n: usize) -> Result<f64> {
    ensure!(n >= 1, "sub-function index must be >= 1, got {n}");
    let npi = n as f64 * std::f64::consts::PI;
    Ok(((4.0 * npi + 1.0).sqrt() - 1.0) / 2.0)
}

/// Frequency-scale constants of the first two sub-functions.
///
/// The first constant is the frequency ratio between the first sub-function
/// and a plain sine over the same input range; the second is the ratio
/// between the second and first sub-functions.
pub fn frequency_scale_constants() -> (f64, f64) {
    let pi = std::f64::consts::PI;
    let r1 = (4.0 * pi + 1.0).sqrt();
    let r3 = (12.0 * pi + 1.0).sqrt();
    let c1 = 2.0 * pi / (r1 - 1.0);
    let c2 = (r1 - 1.0) / (r3 - r1);
    (c1, c2)
}

/// Instantaneous angular frequency of sin(ω₀(|g|+1)g) with respect to g.
pub fn finer_instantaneous_frequency(omega0: f64, g: f64) -> f64 {
    omega0 * (2.0 * g.abs() + 1.0)
}

/// Regular evaluation grid for [`neuron_frequency_map`].
#[derive(Debug, Clone, Copy)]
pub enum CoordGrid {
    Line {
        start: f64,
        end: f64,
        samples: usize,
    },
    Plane {
        start: f64,
        end: f64,
        samples_per_axis: usize,
    },
}

impl CoordGrid {
    pub fn line(start: f64, end: f64, samples: usize) -> Self {
        CoordGrid::Line {
            start,
            end,
            samples,
        }
    }

    fn input_dim(&self) -> usize {
        match self {
            CoordGrid::Line { .. } => 1,
            CoordGrid::Plane { .. } => 2,
        }
    }
}

/// First-layer response of one neuron over the grid, with a
/// dominant-frequency estimate in cycles per unit length.
#[derive(Debug, Clone)]
pub struct NeuronFrequency {
    pub neuron: usize,
    pub cycles_per_unit: f64,
    pub trace: Vec<f64>,
}

/// Evaluates every first-layer neuron over a regular grid and estimates its
/// dominant frequency by zero-crossing counting (crossings per unit length,
/// divided by two).
pub fn neuron_frequency_map(mlp: &Mlp, grid: &CoordGrid) -> Result<Vec<NeuronFrequency>> {
    ensure!(
        mlp.dims()[0] == grid.input_dim(),
        "grid dimension {} does not match network input dimension {}",
        grid.input_dim(),
        mlp.dims()[0]
    );
    let (weights, biases) = mlp.layer(0);
    let act = mlp.hidden_activation();
    let neurons = weights.rows();

    match *grid {
        CoordGrid::Line {
            start,
            end,
            samples,
        } => {
            ensure!(samples >= 4, "grid needs at least 4 points, got {samples}");
            ensure!(end > start, "grid end must exceed start");
            let xs: Vec<f64> = (0..samples)
                .map(|i| start + (end - start) * i as f64 / (samples - 1) as f64)
                .collect();
            let length = end - start;
            let mut out = Vec::with_capacity(neurons);
            for j in 0..neurons {
                let w = weights.get(j, 0);
                let b = biases[j];
                let trace: Vec<f64> = xs.iter().map(|&x| act.activate(w * x + b)).collect();
                let crossings = zero_crossings(&trace);
                out.push(NeuronFrequency {
                    neuron: j,
                    cycles_per_unit: crossings as f64 / (2.0 * length),
                    trace,
                });
            }
            Ok(out)
        }
        CoordGrid::Plane {
            start,
            end,
            samples_per_axis,
        } => {
            ensure!(
                samples_per_axis >= 4,
                "grid needs at least 4 points per axis, got {samples_per_axis}"
            );
            ensure!(end > start, "grid end must exceed start");
            let n = samples_per_axis;
            let xs: Vec<f64> = (0..n)
                .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
                .collect();
            let length = end - start;
            let mut out = Vec::with_capacity(neurons);
            for j in 0..neurons {
                let wx = weights.get(j, 0);
                let wy = weights.get(j, 1);
                let b = biases[j];
                // Row-major trace, y outer.
                let mut trace = Vec::with_capacity(n * n);
                for &y in &xs {
                    for &x in &xs {
                        trace.push(act.activate(wx * x + wy * y + b));
                    }
                }
                // Crossings along each row (x) and each column (y), averaged,
                // combined as a spatial-frequency magnitude.
                let mut cx = 0usize;
                let mut cy = 0usize;
                for r in 0..n {
                    cx += zero_crossings(&trace[r * n..(r + 1) * n]);
                    let col: Vec<f64> = (0..n).map(|i| trace[i * n + r]).collect();
                    cy += zero_crossings(&col);
                }
                let fx = cx as f64 / n as f64 / (2.0 * length);
                let fy = cy as f64 / n as f64 / (2.0 * length);
                out.push(NeuronFrequency {
                    neuron: j,
                    cycles_per_unit: fx.hypot(fy),
                    trace,
                });
            }
            Ok(out)
        }
    }
}

/// Sign flips over the trace; exact zeros extend the previous sign.
fn zero_crossings(trace: &[f64]) -> usize {
    let mut count = 0;
    let mut prev = 0.0f64;
    for &v in trace {
        if v == 0.0 {
            continue;
        }
        if prev != 0.0 && v.signum() != prev.signum() {
            count += 1;
        }
        prev = v;
    }
    count
}

/// Spread (max − min) of the dominant-frequency estimates.
pub fn frequency_spread(map: &[NeuronFrequency]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for nf in map {
        lo = lo.min(nf.cycles_per_unit);
        hi = hi.max(nf.cycles_per_unit);
    }
    if map.is_empty() {
        0.0
    } else {
        hi - lo
    }
}
