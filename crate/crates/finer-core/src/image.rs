//! 2D image fitting: targets, batching, rendering, metrics and the
//! end-to-end pipeline.
//!
//! Pixel centers map to [−1,1]² (pixel (ix, iy) sits at
//! (−1 + 2(ix+0.5)/w, −1 + 2(iy+0.5)/h)); rows are stored y-outer,
//! channel-interleaved, values in [0,1].

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::encoding::PositionalEncoder;
use crate::error::{ensure, Error, Result};
use crate::fitting::{NetworkSpec, TrainSettings};
use crate::init::InitScheme;
use crate::linalg::Matrix;
use crate::metrics::{psnr_slices, ssim_gray};
use crate::net::Mlp;
use crate::optim::{train, TrainLog};
use crate::sample::SampleBatch;

/// Full-batch cutoff: images up to this many pixels train on every pixel
/// per iteration; larger images fall back to random minibatches.
pub const FULL_BATCH_PIXEL_LIMIT: usize = 256 * 256;

/// Minibatch size used above the full-batch cutoff.
pub const DEFAULT_IMAGE_MINIBATCH: usize = 16384;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageTarget {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageTarget {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        ensure!(
            channels == 1 || channels == 3,
            "channels must be 1 or 3, got {channels}"
        );
        ensure!(
            data.len() == width * height * channels,
            "pixel buffer length {} does not match {width}x{height}x{channels}",
            data.len()
        );
        ensure!(
            data.iter().all(|v| (0.0..=1.0).contains(v)),
            "pixel values must lie in [0,1]"
        );
        Ok(ImageTarget {
            width,
            height,
            channels,
            data,
        })
    }

    /// Loads an 8-bit PNG, PPM (P6) or PGM (P5) file; grayscale stays
    /// single-channel, everything else converts to RGB.
    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|e| Error::Format(format!("{path:?}: {e}")))?;
        let target = match img {
            image::DynamicImage::ImageLuma8(gray) => {
                let (w, h) = (gray.width() as usize, gray.height() as usize);
                let data = gray.into_raw().iter().map(|&v| v as f64 / 255.0).collect();
                ImageTarget::new(w, h, 1, data)?
            }
            other => {
                let rgb = other.to_rgb8();
                let (w, h) = (rgb.width() as usize, rgb.height() as usize);
                let data = rgb.into_raw().iter().map(|&v| v as f64 / 255.0).collect();
                ImageTarget::new(w, h, 3, data)?
            }
        };
        Ok(target)
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        let (w, h) = (self.width as u32, self.height as u32);
        let result = if self.channels == 1 {
            image::GrayImage::from_raw(w, h, bytes)
                .expect("buffer sized by construction")
                .save_with_format(path, image::ImageFormat::Png)
        } else {
            image::RgbImage::from_raw(w, h, bytes)
                .expect("buffer sized by construction")
                .save_with_format(path, image::ImageFormat::Png)
        };
        result.map_err(|e| Error::Format(format!("writing {path:?}: {e}")))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn pixel_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            -1.0 + 2.0 * (ix as f64 + 0.5) / self.width as f64,
            -1.0 + 2.0 * (iy as f64 + 0.5) / self.height as f64,
        ]
    }

    /// All pixel-center coordinates, y outer, one row per pixel.
    pub fn full_coords(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.pixel_count() * 2);
        for iy in 0..self.height {
            for ix in 0..self.width {
                let c = self.pixel_center(ix, iy);
                data.push(c[0]);
                data.push(c[1]);
            }
        }
        Matrix::from_vec(self.pixel_count(), 2, data).expect("finite by construction")
    }

    /// All pixel attributes in the same order as [`ImageTarget::full_coords`].
    pub fn full_targets(&self) -> Matrix {
        Matrix::from_vec(self.pixel_count(), self.channels, self.data.clone())
            .expect("finite by construction")
    }

    /// Grayscale view (luminance weights for RGB).
    pub fn to_gray(&self) -> Vec<f64> {
        if self.channels == 1 {
            return self.data.clone();
        }
        self.data
            .chunks(3)
            .map(|px| crate::metrics::luminance(px[0], px[1], px[2]))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    /// Every pixel exactly once, in raster order.
    Full,
    /// Uniform pixels with replacement.
    Random(usize),
}

pub use crate::sample::sampling_rng;

pub fn image_batch(img: &ImageTarget, mode: BatchMode, rng: &mut ChaCha8Rng) -> SampleBatch {
    match mode {
        BatchMode::Full => SampleBatch::new(img.full_coords(), img.full_targets())
            .expect("row counts equal by construction"),
        BatchMode::Random(b) => {
            let mut coords = Vec::with_capacity(b * 2);
            let mut targets = Vec::with_capacity(b * img.channels);
            for _ in 0..b {
                let idx = rng.gen_range(0..img.pixel_count());
                let (ix, iy) = (idx % img.width, idx / img.width);
                let c = img.pixel_center(ix, iy);
                coords.push(c[0]);
                coords.push(c[1]);
                let px = &img.data[idx * img.channels..(idx + 1) * img.channels];
                targets.extend_from_slice(px);
            }
            SampleBatch::new(
                Matrix::from_vec(b, 2, coords).expect("finite"),
                Matrix::from_vec(b, img.channels, targets).expect("finite"),
            )
            .expect("row counts equal")
        }
    }
}

/// PSNR between two images of identical shape.
pub fn psnr(pred: &ImageTarget, target: &ImageTarget) -> Result<f64> {
    ensure_same_shape(pred, target)?;
    psnr_slices(&pred.data, &target.data)
}

/// Mean SSIM between two images of identical shape (RGB converts to
/// luminance first).
pub fn ssim(pred: &ImageTarget, target: &ImageTarget) -> Result<f64> {
    ensure_same_shape(pred, target)?;
    ssim_gray(
        &pred.to_gray(),
        &target.to_gray(),
        pred.width,
        pred.height,
    )
}

fn ensure_same_shape(a: &ImageTarget, b: &ImageTarget) -> Result<()> {
    ensure!(
        a.width == b.width && a.height == b.height && a.channels == b.channels,
        "image shapes differ: {}x{}x{} vs {}x{}x{}",
        a.width,
        a.height,
        a.channels,
        b.width,
        b.height,
        b.channels
    );
    Ok(())
}

#[derive(Debug)]
pub struct ImageFit {
    pub mlp: Mlp,
    pub encoder: Option<PositionalEncoder>,
    pub psnr: f64,
    pub ssim: f64,
    /// Unclamped mean squared error of the final network over the full grid.
    pub final_full_mse: f64,
    pub recon: ImageTarget,
    pub log: TrainLog,
}

/// Fits an image with L2/L1 regression on pixel samples and reports metrics
/// on the full grid.
pub fn fit_image(
    img: &ImageTarget,
    spec: &NetworkSpec,
    scheme: &InitScheme,
    settings: &TrainSettings,
) -> Result<ImageFit> {
    let mut mlp = spec.build(2, img.channels, scheme)?;
    let encoder = spec.encoder;
    let pixels = img.pixel_count();
    let batch_size = match settings.batch_override {
        Some(b) => b.min(pixels),
        None if pixels <= FULL_BATCH_PIXEL_LIMIT => pixels,
        None => DEFAULT_IMAGE_MINIBATCH,
    };
    let full_batch = batch_size >= pixels;

    let mut state = settings.adam_state(&mlp)?;
    let cfg = settings.train_config(full_batch);
    let log = if full_batch {
        let mut batch = image_batch(img, BatchMode::Full, &mut sampling_rng(scheme.seed));
        if let Some(pe) = &encoder {
            batch.coords = pe.encode_batch(&batch.coords)?;
        }
        train(&mut mlp, |_| batch.clone(), &cfg, &mut state)
    } else {
        let mut rng = sampling_rng(scheme.seed);
        train(
            &mut mlp,
            |_| {
                let mut b = image_batch(img, BatchMode::Random(batch_size), &mut rng);
                if let Some(pe) = &encoder {
                    b.coords = pe.encode_batch(&b.coords).expect("finite coords");
                }
                b
            },
            &cfg,
            &mut state,
        )
    }
    .map_err(Error::from)?;

    let (recon, final_full_mse) = render_with_mse(&mlp, encoder.as_ref(), img)?;
    Ok(ImageFit {
        psnr: psnr(&recon, img)?,
        ssim: ssim(&recon, img)?,
        final_full_mse,
        recon,
        log,
        mlp,
        encoder,
    })
}

/// Evaluates the network on every pixel center of a w×h grid and clamps to
/// an image.
pub fn render_image(
    mlp: &Mlp,
    encoder: Option<&PositionalEncoder>,
    width: usize,
    height: usize,
) -> Result<ImageTarget> {
    let reference = ImageTarget {
        width,
        height,
        channels: mlp.output_dim(),
        data: vec![0.0; width * height * mlp.output_dim()],
    };
    let (img, _) = render_with_mse(mlp, encoder, &reference)?;
    Ok(img)
}

fn render_with_mse(
    mlp: &Mlp,
    encoder: Option<&PositionalEncoder>,
    target: &ImageTarget,
) -> Result<(ImageTarget, f64)> {
    let mut coords = target.full_coords();
    if let Some(pe) = encoder {
        coords = pe.encode_batch(&coords)?;
    }
    let raw = mlp.predict(&coords)?;
    ensure!(
        raw.cols() == target.channels,
        "network output dim {} does not match image channels {}",
        raw.cols(),
        target.channels
    );
    let mut se = 0.0;
    for (o, t) in raw.data().iter().zip(&target.data) {
        let d = o - t;
        se += d * d;
    }
    let mse = se / raw.data().len() as f64;
    let clamped: Vec<f64> = raw.data().iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let img = ImageTarget::new(target.width, target.height, target.channels, clamped)?;
    Ok((img, mse))
}
