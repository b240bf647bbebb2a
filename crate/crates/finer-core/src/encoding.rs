//! Fourier-feature positional encoding, the front end of the PEMLP
//! baseline: each coordinate dimension x expands to
//! [sin(2⁰πx), cos(2⁰πx), …, sin(2^{L−1}πx), cos(2^{L−1}πx)], with the raw
//! input optionally prepended.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionalEncoder {
    pub num_bands: usize,
    pub include_input: bool,
}

impl PositionalEncoder {
    pub fn new(num_bands: usize, include_input: bool) -> Self {
        PositionalEncoder {
            num_bands,
            include_input,
        }
    }

    pub fn output_dim(&self, input_dim: usize) -> usize {
        input_dim * 2 * self.num_bands + if self.include_input { input_dim } else { 0 }
    }

    pub fn encode_point(&self, x: &[f64], out: &mut Vec<f64>) {
        if self.include_input {
            out.extend_from_slice(x);
        }
        for &xd in x {
            let mut freq = std::f64::consts::PI;
            for _ in 0..self.num_bands {
                let arg = freq * xd;
                out.push(arg.sin());
                out.push(arg.cos());
                freq *= 2.0;
            }
        }
    }

    pub fn encode_batch(&self, coords: &Matrix) -> Result<Matrix> {
        let d_out = self.output_dim(coords.cols());
        let mut data = Vec::with_capacity(coords.rows() * d_out);
        for i in 0..coords.rows() {
            self.encode_point(coords.row(i), &mut data);
        }
        Matrix::from_vec(coords.rows(), d_out, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input() {
        let pe = PositionalEncoder::new(3, false);
        let mut out = Vec::new();
        pe.encode_point(&[0.0], &mut out);
        assert_eq!(out, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn half_coordinate_single_band() {
        let pe = PositionalEncoder::new(1, false);
        let mut out = Vec::new();
        pe.encode_point(&[0.5], &mut out);
        assert!((out[0] - 1.0).abs() < 1e-15); // sin(π/2)
        assert!(out[1].abs() < 1e-15); // cos(π/2)
    }

    #[test]
    fn output_dim_formula() {
        for d_in in 1..=3 {
            for bands in 0..=8 {
                for include in [false, true] {
                    let pe = PositionalEncoder::new(bands, include);
                    let coords = Matrix::zeros(2, d_in);
                    let enc = pe.encode_batch(&coords).unwrap();
                    assert_eq!(enc.cols(), pe.output_dim(d_in));
                    assert_eq!(
                        enc.cols(),
                        d_in * 2 * bands + if include { d_in } else { 0 }
                    );
                }
            }
        }
    }

    #[test]
    fn include_input_prepends() {
        let pe = PositionalEncoder::new(1, true);
        let mut out = Vec::new();
        pe.encode_point(&[0.25, -0.5], &mut out);
        assert_eq!(out[0], 0.25);
        assert_eq!(out[1], -0.5);
        assert_eq!(out.len(), 6);
    }
}
