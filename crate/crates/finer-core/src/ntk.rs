//! Neural tangent kernel laboratory.
//!
//! Two routes to the kernel K(x_i, x_j) = ⟨∇_θ f(x_i), ∇_θ f(x_j)⟩:
//! an empirical Gram matrix of autodiff gradients for any scalar-output
//! network, and a closed-form Monte-Carlo average over initialization draws
//! for the one-hidden-layer variable-periodic network. The closed form's
//! hidden-parameter block is the scale/sign product
//! c_k²·ω₀²·(2|g_k(x_i)|+1)(2|g_k(x_j)|+1)·cos(ω₀(|g_k(x_i)|+1)g_k(x_i))·
//! cos(ω₀(|g_k(x_j)|+1)g_k(x_j))·(x_i·x_j + 1); the last-layer weight and
//! output-bias gradients contribute sin·sin terms and a constant 1, so the
//! two routes agree entrywise on the same parameter draw.
//!
//! Growing the bias range k inflates the scale term on the diagonal while
//! the sign term keeps decorrelating off-diagonal entries, which is what the
//! diagonal-energy statistic and the eigenvalue counts quantify.

use rayon::prelude::*;

use crate::activation::Activation;
use crate::error::{ensure, Result};
use crate::init::InitScheme;
use crate::linalg::{dot, sym_eigen, Matrix};
use crate::net::Mlp;

/// Coordinate-count cap for the empirical route (Gram assembly is N·P).
pub const EMPIRICAL_COORD_CAP: usize = 2048;

/// Sentinel reported when the off-diagonal mean is exactly zero.
pub const DIAGONAL_ENERGY_CAP: f64 = 1e18;

/// Default eigenvalue-count thresholds.
pub const DEFAULT_THRESHOLDS: [f64; 4] = [1e-2, 1e-1, 1.0, 1e1];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Empirical,
    AnalyticMc { ensemble: usize },
}

#[derive(Debug, Clone)]
pub struct KernelMatrix {
    kernel: Matrix,
    coords: Matrix,
    provenance: Provenance,
}

impl KernelMatrix {
    pub fn new(kernel: Matrix, coords: Matrix, provenance: Provenance) -> Result<Self> {
        ensure!(
            kernel.rows() == kernel.cols(),
            "kernel must be square, got {}x{}",
            kernel.rows(),
            kernel.cols()
        );
        ensure!(
            kernel.rows() == coords.rows(),
            "kernel is {}x{} but there are {} coordinates",
            kernel.rows(),
            kernel.rows(),
            coords.rows()
        );
        let scale = kernel.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..kernel.rows() {
            for j in (i + 1)..kernel.cols() {
                let d = (kernel.get(i, j) - kernel.get(j, i)).abs();
                ensure!(d <= 1e-9 * scale, "kernel asymmetry {d:.3e} at ({i}, {j})");
            }
        }
        Ok(KernelMatrix {
            kernel,
            coords,
            provenance,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.kernel
    }

    pub fn coords(&self) -> &Matrix {
        &self.coords
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn size(&self) -> usize {
        self.kernel.rows()
    }

    /// Ratio of the mean diagonal entry to the mean absolute off-diagonal
    /// entry; capped when the off-diagonal mean is exactly zero. Invariant
    /// under K → cK for c > 0.
    pub fn diagonal_energy(&self) -> f64 {
        let n = self.kernel.rows();
        if n <= 1 {
            return DIAGONAL_ENERGY_CAP;
        }
        let mut diag = 0.0;
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    diag += self.kernel.get(i, j);
                } else {
                    off += self.kernel.get(i, j).abs();
                }
            }
        }
        let diag_mean = diag / n as f64;
        let off_mean = off / (n * (n - 1)) as f64;
        if off_mean == 0.0 {
            return DIAGONAL_ENERGY_CAP;
        }
        (diag_mean / off_mean).min(DIAGONAL_ENERGY_CAP)
    }

    /// Kernel entries as CSV, one row per line.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut out = String::new();
        for i in 0..self.kernel.rows() {
            let row: Vec<String> = self.kernel.row(i).iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Min-max normalized grayscale heatmap, row-major.
    pub fn write_heatmap_png(&self, path: &std::path::Path) -> Result<()> {
        let n = self.kernel.rows();
        let data = self.kernel.data();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let span = if hi > lo { hi - lo } else { 1.0 };
        let bytes: Vec<u8> = data
            .iter()
            .map(|&v| (255.0 * (v - lo) / span).round() as u8)
            .collect();
        image::GrayImage::from_raw(n as u32, n as u32, bytes)
            .expect("buffer sized by construction")
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| crate::error::Error::Format(format!("writing {path:?}: {e}")))
    }
}

/// Gram matrix G·Gᵀ of per-coordinate gradient rows; exactly symmetric by
/// mirroring the lower triangle.
fn gram(g: &Matrix) -> Matrix {
    let n = g.rows();
    let p = g.cols();
    let mut rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..=i)
                .map(|j| dot(g.row(i), g.row(j), p))
                .collect::<Vec<f64>>()
        })
        .collect();
    let mut k = Matrix::zeros(n, n);
    for i in (0..n).rev() {
        let row = std::mem::take(&mut rows[i]);
        for (j, v) in row.into_iter().enumerate() {
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    k
}

/// Empirical NTK of a scalar-output network at its current parameters:
/// K[i][j] is the inner product of the full parameter gradients at
/// coordinates i and j.
pub fn empirical_ntk(mlp: &Mlp, coords: &Matrix) -> Result<KernelMatrix> {
    ensure!(
        mlp.output_dim() == 1,
        "empirical ntk needs a scalar-output network, got output dim {}",
        mlp.output_dim()
    );
    ensure!(
        coords.cols() == mlp.input_dim(),
        "coordinates are {}-dimensional, network expects {}",
        coords.cols(),
        mlp.input_dim()
    );
    let n = coords.rows();
    ensure!(
        n >= 1 && n <= EMPIRICAL_COORD_CAP,
        "coordinate count {n} outside 1..={EMPIRICAL_COORD_CAP}"
    );
    let grad_rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let point = Matrix::from_vec(1, coords.cols(), coords.row(i).to_vec())
                .expect("finite coordinate row");
            let cache = mlp.forward(&point)?;
            let ones = Matrix::from_vec(1, 1, vec![1.0]).expect("finite");
            let grads = mlp.backward(&cache, &ones, false)?;
            Ok(grads.flatten())
        })
        .collect::<Result<Vec<_>>>()?;
    let p = mlp.param_count();
    let mut g = Matrix::zeros(n, p);
    for (i, row) in grad_rows.into_iter().enumerate() {
        g.row_mut(i).copy_from_slice(&row);
    }
    KernelMatrix::new(gram(&g), coords.clone(), Provenance::Empirical)
}

/// Closed-form kernel entry for a one-hidden-layer variable-periodic network
/// at fixed parameters: hidden-parameter scale·sign block (weights and
/// biases), last-layer weight block (sin·sin), plus 1 for the output bias.
pub fn finer_kernel_entry(mlp: &Mlp, xi: f64, xj: f64) -> Result<f64> {
    let omega0 = match mlp.hidden_activation() {
        Activation::Finer { omega0 } => omega0,
        other => {
            return Err(crate::error::Error::Contract(format!(
                "closed-form kernel is defined for the finer family, got {}",
                other.name()
            )))
        }
    };
    ensure!(
        mlp.num_layers() == 2 && mlp.input_dim() == 1 && mlp.output_dim() == 1,
        "closed-form kernel needs a 1-in/1-out single-hidden-layer network, got dims {:?}",
        mlp.dims()
    );
    let (w1, b1) = mlp.layer(0);
    let (w2, _) = mlp.layer(1);
    let hidden = w1.rows();
    let mut acc = 0.0;
    for k in 0..hidden {
        let c = w2.get(0, k);
        let gi = w1.get(k, 0) * xi + b1[k];
        let gj = w1.get(k, 0) * xj + b1[k];
        let phase_i = omega0 * (gi.abs() + 1.0) * gi;
        let phase_j = omega0 * (gj.abs() + 1.0) * gj;
        let scale = (2.0 * gi.abs() + 1.0) * (2.0 * gj.abs() + 1.0) * omega0 * omega0;
        let sign = phase_i.cos() * phase_j.cos();
        acc += c * c * scale * sign * (xi * xj + 1.0) + phase_i.sin() * phase_j.sin();
    }
    Ok(acc + 1.0)
}

/// Monte-Carlo estimate of the expected closed-form kernel over `ensemble`
/// initialization draws of a [1, hidden, 1] variable-periodic network.
pub fn analytic_ntk_mc(
    hidden: usize,
    omega0: f64,
    scheme: &InitScheme,
    coords: &[f64],
    ensemble: usize,
) -> Result<KernelMatrix> {
    ensure!(ensemble >= 1, "ensemble size must be >= 1, got {ensemble}");
    ensure!(hidden >= 1, "hidden width must be >= 1");
    ensure!(!coords.is_empty(), "kernel needs at least one coordinate");
    let n = coords.len();
    let member_kernels: Vec<Matrix> = (0..ensemble)
        .into_par_iter()
        .map(|e| {
            let mlp = Mlp::init(
                &[1, hidden, 1],
                Activation::finer(omega0),
                &scheme.member(e as u64),
            )?;
            let mut k = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = finer_kernel_entry(&mlp, coords[i], coords[j])?;
                    k.set(i, j, v);
                    k.set(j, i, v);
                }
            }
            Ok(k)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut mean = Matrix::zeros(n, n);
    for k in &member_kernels {
        for (m, v) in mean.data_mut().iter_mut().zip(k.data()) {
            *m += v;
        }
    }
    for m in mean.data_mut() {
        *m /= ensemble as f64;
    }
    let coord_matrix = Matrix::from_vec(n, 1, coords.to_vec())?;
    KernelMatrix::new(mean, coord_matrix, Provenance::AnalyticMc { ensemble })
}

/// Eigen-spectrum summary of a kernel.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// (threshold, number of eigenvalues strictly above it).
    pub counts_above: Vec<(f64, usize)>,
    pub diagonal_energy: f64,
}

impl SpectrumReport {
    pub fn count_above(&self, threshold: f64) -> usize {
        self.eigenvalues.iter().filter(|&&v| v > threshold).count()
    }

    /// CSV dump: `index,eigenvalue` rows.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut out = String::from("index,eigenvalue\n");
        for (i, v) in self.eigenvalues.iter().enumerate() {
            out.push_str(&format!("{i},{v:e}\n"));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

pub fn spectrum(kernel: &KernelMatrix, thresholds: &[f64]) -> Result<SpectrumReport> {
    let eig = sym_eigen(kernel.matrix())?;
    let eigenvalues = eig.values.as_slice().to_vec();
    let counts_above = thresholds
        .iter()
        .map(|&t| (t, eigenvalues.iter().filter(|&&v| v > t).count()))
        .collect();
    Ok(SpectrumReport {
        eigenvalues,
        counts_above,
        diagonal_energy: kernel.diagonal_energy(),
    })
}
