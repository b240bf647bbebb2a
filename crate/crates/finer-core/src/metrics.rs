//! Image-quality metrics over [0,1]-valued buffers.

use crate::error::{ensure, Result};

/// Reported PSNR when the MSE is exactly zero.
pub const PSNR_CAP_DB: f64 = 100.0;

/// SSIM window size (Gaussian, σ = 1.5) and stabilizers, the standard
/// constants with dynamic range 1.
pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

/// PSNR in decibels with MAX = 1. Both buffers are clamped to [0,1] before
/// comparison; identical buffers report the 100 dB cap.
pub fn psnr_slices(pred: &[f64], target: &[f64]) -> Result<f64> {
    ensure!(
        pred.len() == target.len() && !pred.is_empty(),
        "psnr: buffers must be non-empty and equal length ({} vs {})",
        pred.len(),
        target.len()
    );
    let mut se = 0.0;
    for (p, t) in pred.iter().zip(target) {
        let d = p.clamp(0.0, 1.0) - t.clamp(0.0, 1.0);
        se += d * d;
    }
    let mse = se / pred.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB))
}

/// Luminance weights for RGB → gray conversion.
pub fn luminance(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

fn gaussian_window() -> [f64; SSIM_WINDOW * SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW * SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for y in 0..SSIM_WINDOW {
        for x in 0..SSIM_WINDOW {
            let dx = x as f64 - c;
            let dy = y as f64 - c;
            let v = (-(dx * dx + dy * dy) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            w[y * SSIM_WINDOW + x] = v;
            sum += v;
        }
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Mean SSIM between two grayscale buffers over all valid (fully interior)
/// window positions.
pub fn ssim_gray(a: &[f64], b: &[f64], width: usize, height: usize) -> Result<f64> {
    ensure!(
        a.len() == width * height && b.len() == width * height,
        "ssim: buffer length does not match {width}x{height}"
    );
    ensure!(
        width >= SSIM_WINDOW && height >= SSIM_WINDOW,
        "ssim: image {width}x{height} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"
    );
    let win = gaussian_window();
    let half = SSIM_WINDOW / 2;
    let mut total = 0.0;
    let mut count = 0usize;
    for cy in half..height - half {
        for cx in half..width - half {
            let (mut mu_a, mut mu_b) = (0.0, 0.0);
            for wy in 0..SSIM_WINDOW {
                let row = (cy + wy - half) * width + cx - half;
                for wx in 0..SSIM_WINDOW {
                    let w = win[wy * SSIM_WINDOW + wx];
                    mu_a += w * a[row + wx];
                    mu_b += w * b[row + wx];
                }
            }
            let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
            for wy in 0..SSIM_WINDOW {
                let row = (cy + wy - half) * width + cx - half;
                for wx in 0..SSIM_WINDOW {
                    let w = win[wy * SSIM_WINDOW + wx];
                    let da = a[row + wx] - mu_a;
                    let db = b[row + wx] - mu_b;
                    var_a += w * da * da;
                    var_b += w * db * db;
                    cov += w * da * db;
                }
            }
            let s = ((2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2));
            total += s;
            count += 1;
        }
    }
    Ok(total / count as f64)
}
