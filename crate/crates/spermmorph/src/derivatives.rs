//! Discrete Gaussian partial-derivative kernels and the five derivative
//! fields r_x, r_y, r_xx, r_xy, r_yy obtained by separable convolution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MorphError, Result};
use crate::raster::ScalarImage;

/// Gaussian smoothing scale and kernel half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    /// Standard deviation in pixels, > 0.
    pub sigma: f64,
    /// Kernel half-width in pixels, at least ceil(3*sigma).
    pub radius: usize,
}

impl GaussianSpec {
    /// Spec with the default truncation radius ceil(3*sigma).
    pub fn new(sigma: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(MorphError::InvalidSigma(sigma));
        }
        let radius = ((3.0 * sigma).ceil() as usize).max(1);
        Ok(Self { sigma, radius })
    }
}

/// Continuous 1-D Gaussian g(x) = exp(-x²/2σ²) / (σ√(2π)).
pub fn gaussian(x: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    (-(x * x) / (2.0 * s2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Continuous first derivative g'(x) = -x/σ² · g(x).
pub fn gaussian_d1(x: f64, sigma: f64) -> f64 {
    -x / (sigma * sigma) * gaussian(x, sigma)
}

/// Continuous second derivative g''(x) = (x² - σ²)/σ⁴ · g(x).
pub fn gaussian_d2(x: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    (x * x - s2) / (s2 * s2) * gaussian(x, sigma)
}

/// Sampled 1-D Gaussian derivative kernel of the given order.
///
/// Order 0 is renormalized to unit sum; order 1 is odd-symmetric by
/// construction; order 2 has its residual DC component removed so a
/// constant signal maps exactly to zero.
pub fn gaussian_kernel_1d(spec: GaussianSpec, order: u8) -> Result<Vec<f64>> {
    if !spec.sigma.is_finite() || spec.sigma <= 0.0 {
        return Err(MorphError::InvalidSigma(spec.sigma));
    }
    let r = spec.radius as i64;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| {
            let x = i as f64;
            match order {
                0 => gaussian(x, spec.sigma),
                1 => gaussian_d1(x, spec.sigma),
                2 => gaussian_d2(x, spec.sigma),
                _ => f64::NAN,
            }
        })
        .collect();
    match order {
        0 => {
            let sum: f64 = k.iter().sum();
            for v in &mut k {
                *v /= sum;
            }
        }
        1 => {
            // rescale so a unit ramp convolves to exactly 1 despite truncation
            let moment: f64 = k
                .iter()
                .enumerate()
                .map(|(i, &v)| (i as f64 - r as f64) * v)
                .sum();
            let scale = -1.0 / moment;
            for v in &mut k {
                *v *= scale;
            }
        }
        2 => {
            let mean: f64 = k.iter().sum::<f64>() / k.len() as f64;
            for v in &mut k {
                *v -= mean;
            }
            // rescale so x²/2 convolves to exactly 1
            let moment: f64 = k
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let x = i as f64 - r as f64;
                    0.5 * x * x * v
                })
                .sum();
            let scale = 1.0 / moment;
            for v in &mut k {
                *v *= scale;
            }
        }
        other => return Err(MorphError::InvalidOrder(other)),
    }
    Ok(k)
}

/// The five Gaussian derivative rasters of one image.
#[derive(Debug, Clone)]
pub struct DerivativeFields {
    pub width: u32,
    pub height: u32,
    pub sigma: f64,
    pub rx: Vec<f64>,
    pub ry: Vec<f64>,
    pub rxx: Vec<f64>,
    pub rxy: Vec<f64>,
    pub ryy: Vec<f64>,
}

impl DerivativeFields {
    #[inline]
    fn idx(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    /// Gradient (r_x, r_y) at an integer pixel.
    #[inline]
    pub fn gradient(&self, x: u32, y: u32) -> (f64, f64) {
        let i = self.idx(x, y);
        (self.rx[i], self.ry[i])
    }

    /// Hessian entries (r_xx, r_xy, r_yy) at an integer pixel.
    #[inline]
    pub fn hessian(&self, x: u32, y: u32) -> (f64, f64, f64) {
        let i = self.idx(x, y);
        (self.rxx[i], self.rxy[i], self.ryy[i])
    }

    /// Bilinearly interpolated gradient at a sub-pixel position.
    pub fn gradient_at(&self, x: f64, y: f64) -> (f64, f64) {
        (
            bilinear(&self.rx, self.width, self.height, x, y),
            bilinear(&self.ry, self.width, self.height, x, y),
        )
    }

    /// Bilinearly interpolated Hessian entries at a sub-pixel position.
    pub fn hessian_at(&self, x: f64, y: f64) -> (f64, f64, f64) {
        (
            bilinear(&self.rxx, self.width, self.height, x, y),
            bilinear(&self.rxy, self.width, self.height, x, y),
            bilinear(&self.ryy, self.width, self.height, x, y),
        )
    }

    /// Bilinearly interpolated gradient magnitude at a sub-pixel position.
    pub fn gradient_magnitude_at(&self, x: f64, y: f64) -> f64 {
        let (gx, gy) = self.gradient_at(x, y);
        (gx * gx + gy * gy).sqrt()
    }

    pub fn in_interior(&self, x: f64, y: f64, margin: f64) -> bool {
        x >= margin && y >= margin && x <= self.width as f64 - 1.0 - margin
            && y <= self.height as f64 - 1.0 - margin
    }
}

#[inline]
fn bilinear(data: &[f64], width: u32, height: u32, x: f64, y: f64) -> f64 {
    let xc = x.clamp(0.0, width as f64 - 1.0);
    let yc = y.clamp(0.0, height as f64 - 1.0);
    let x0 = xc.floor() as usize;
    let y0 = yc.floor() as usize;
    let x1 = (x0 + 1).min(width as usize - 1);
    let y1 = (y0 + 1).min(height as usize - 1);
    let fx = xc - x0 as f64;
    let fy = yc - y0 as f64;
    let w = width as usize;
    let v00 = data[y0 * w + x0];
    let v10 = data[y0 * w + x1];
    let v01 = data[y1 * w + x0];
    let v11 = data[y1 * w + x1];
    v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy + v11 * fx * fy
}

/// Reflect an index into [0, n) (reflect-101: -1 -> 1, n -> n-2).
#[inline]
fn reflect(i: i64, n: i64) -> usize {
    let mut i = i;
    // two folds suffice for kernel radii well below the image size
    while i < 0 || i >= n {
        if i < 0 {
            i = -i;
        }
        if i >= n {
            i = 2 * (n - 1) - i;
        }
    }
    i as usize
}

/// Convolve rows (horizontal) with the kernel, reflecting at borders.
fn convolve_rows(src: &[f64], width: usize, _height: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as i64;
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| {
            let src_row = &src[y * width..(y + 1) * width];
            for (x, o) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                // true convolution: sample at x - (ki - r)
                for (ki, &kv) in kernel.iter().enumerate() {
                    let sx = reflect(x as i64 - (ki as i64 - r), width as i64);
                    acc += src_row[sx] * kv;
                }
                *o = acc;
            }
        });
    out
}

/// Convolve columns (vertical) with the kernel, reflecting at borders.
fn convolve_cols(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as i64;
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| {
            for (x, o) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (ki, &kv) in kernel.iter().enumerate() {
                    let sy = reflect(y as i64 - (ki as i64 - r), height as i64);
                    acc += src[sy * width + x] * kv;
                }
                *o = acc;
            }
        });
    out
}

/// All five Gaussian derivative fields of an image.
pub fn derivative_fields(img: &ScalarImage, spec: GaussianSpec) -> Result<DerivativeFields> {
    let (w, h) = (img.width as usize, img.height as usize);
    let ksize = 2 * spec.radius + 1;
    if w < ksize || h < ksize {
        return Err(MorphError::ImageTooSmall(img.width, img.height, spec.radius));
    }
    let g0 = gaussian_kernel_1d(spec, 0)?;
    let g1 = gaussian_kernel_1d(spec, 1)?;
    let g2 = gaussian_kernel_1d(spec, 2)?;

    let conv = |kx: &[f64], ky: &[f64]| -> Vec<f64> {
        let tmp = convolve_rows(&img.values, w, h, kx);
        convolve_cols(&tmp, w, h, ky)
    };

    Ok(DerivativeFields {
        width: img.width,
        height: img.height,
        sigma: spec.sigma,
        rx: conv(&g1, &g0),
        ry: conv(&g0, &g1),
        rxx: conv(&g2, &g0),
        rxy: conv(&g1, &g1),
        ryy: conv(&g0, &g2),
    })
}
