//! Two-layer scattering transform with a Morlet filter bank.
//!
//! All convolutions are periodic and computed by pointwise products in the
//! 2-D DFT domain. A path `p` produces one channel
//!
//! ```text
//! order 0:  X ⋆ φ
//! order 1:  |X ⋆ ψ(j1,l1)| ⋆ φ
//! order 2:  ||X ⋆ ψ(j1,l1)| ⋆ ψ(j2,l2)| ⋆ φ      with j2 > j1
//! ```
//!
//! subsampled once by `2^J` at the end. Subsampling is done in the Fourier
//! domain by folding the low-passed spectrum onto the coarse grid, which is
//! exactly equivalent to keeping every `2^J`-th sample of the full-resolution
//! output.
//!
//! The Morlet filters follow the usual small-image configuration: Gaussian
//! width `0.8·2^j`, center frequency `3π/(4·2^j)`, slant `4/L`, orientations
//! `θ_l = π·l/L`, and a Gaussian low-pass of width `0.8·2^(J-1)`. Filters are
//! built in space on a 5×5 periodic tiling and transformed; since each
//! spatial filter is Hermitian around the origin its DFT is real, so only
//! the real frequency response is stored.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::datasets::{Image, ImageSet};
use crate::error::{Error, Result};
use crate::features::{Domain, FeatureMatrix};

/// Scattering path, identifying one output channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Path {
    Order0,
    Order1 { j1: usize, l1: usize },
    Order2 { j1: usize, l1: usize, j2: usize, l2: usize },
}

impl Path {
    pub fn order(&self) -> usize {
        match self {
            Path::Order0 => 0,
            Path::Order1 { .. } => 1,
            Path::Order2 { .. } => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FilterBank {
    size: usize,
    scales: usize,
    rotations: usize,
    /// Frequency responses, indexed `j * L + l`, each `size²` row-major.
    psi: Vec<Vec<f64>>,
    phi: Vec<f64>,
}

/// Spatial Gabor filter periodized over a 5×5 tiling of the canvas.
fn gabor_2d(size: usize, sigma: f64, theta: f64, xi: f64, slant: f64) -> Vec<Complex64> {
    let (sin, cos) = theta.sin_cos();
    // R · diag(1, slant²) · R⁻¹ / (2σ²)
    let s2 = slant * slant;
    let denom = 2.0 * sigma * sigma;
    let c00 = (cos * cos + s2 * sin * sin) / denom;
    let c01 = (cos * sin - s2 * sin * cos) / denom;
    let c11 = (sin * sin + s2 * cos * cos) / denom;
    let m = size as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); size * size];
    for ex in -2i32..=2 {
        for ey in -2i32..=2 {
            for r in 0..size {
                let x = r as f64 + f64::from(ex) * m;
                for c in 0..size {
                    let y = c as f64 + f64::from(ey) * m;
                    let re = -(c00 * x * x + 2.0 * c01 * x * y + c11 * y * y);
                    let im = xi * (x * cos + y * sin);
                    out[r * size + c] += Complex64::from_polar(re.exp(), im);
                }
            }
        }
    }
    let norm = 2.0 * PI * sigma * sigma / slant;
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// Gabor filter minus the scaled Gaussian envelope that cancels its mean.
fn morlet_2d(size: usize, sigma: f64, theta: f64, xi: f64, slant: f64) -> Vec<Complex64> {
    let wave = gabor_2d(size, sigma, theta, xi, slant);
    let envelope = gabor_2d(size, sigma, theta, 0.0, slant);
    let k = wave.iter().sum::<Complex64>() / envelope.iter().sum::<Complex64>();
    wave.iter().zip(&envelope).map(|(w, e)| w - k * e).collect()
}

impl FilterBank {
    pub fn new(size: usize, scales: usize, rotations: usize) -> Result<Self> {
        if size == 0 || !size.is_power_of_two() {
            return Err(Error::Parameter(format!("canvas size {size} is not a power of two")));
        }
        if scales == 0 || rotations == 0 {
            return Err(Error::Parameter(format!(
                "need J >= 1 and L >= 1, got J={scales}, L={rotations}"
            )));
        }
        if scales >= usize::BITS as usize || (1usize << scales) > size {
            return Err(Error::Parameter(format!("2^J = 2^{scales} exceeds canvas size {size}")));
        }
        let fft = Fft2::new(size);
        let mut scratch = vec![Complex64::new(0.0, 0.0); size * size];
        let mut to_freq = |mut spatial: Vec<Complex64>| {
            fft.forward(&mut spatial, &mut scratch);
            spatial.into_iter().map(|c| c.re).collect::<Vec<f64>>()
        };
        let slant = 4.0 / rotations as f64;
        let mut psi = Vec::with_capacity(scales * rotations);
        for j in 0..scales {
            let scale = f64::from(1u32 << j);
            for l in 0..rotations {
                let theta = PI * l as f64 / rotations as f64;
                psi.push(to_freq(morlet_2d(size, 0.8 * scale, theta, 0.75 * PI / scale, slant)));
            }
        }
        let phi_sigma = 0.8 * f64::from(1u32 << (scales - 1));
        let mut phi = to_freq(gabor_2d(size, phi_sigma, 0.0, 0.0, 1.0));
        let dc = phi[0];
        for v in &mut phi {
            *v /= dc;
        }
        Ok(Self {
            size,
            scales,
            rotations,
            psi,
            phi,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of dyadic scales `J`.
    pub fn scales(&self) -> usize {
        self.scales
    }

    /// Rotations per scale `L`.
    pub fn rotations(&self) -> usize {
        self.rotations
    }

    pub fn n_wavelets(&self) -> usize {
        self.psi.len()
    }

    /// Frequency response of the wavelet at scale `j`, rotation `l`.
    pub fn psi(&self, j: usize, l: usize) -> &[f64] {
        &self.psi[j * self.rotations + l]
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Side of each output channel, `size / 2^J`.
    pub fn output_side(&self) -> usize {
        self.size >> self.scales
    }

    /// Channel paths in output order.
    pub fn paths(&self) -> Vec<Path> {
        let (jj, ll) = (self.scales, self.rotations);
        let mut paths = vec![Path::Order0];
        for j1 in 0..jj {
            for l1 in 0..ll {
                paths.push(Path::Order1 { j1, l1 });
            }
        }
        for j1 in 0..jj {
            for l1 in 0..ll {
                for j2 in j1 + 1..jj {
                    for l2 in 0..ll {
                        paths.push(Path::Order2 { j1, l1, j2, l2 });
                    }
                }
            }
        }
        paths
    }

    pub fn n_channels(&self) -> usize {
        let (j, l) = (self.scales, self.rotations);
        1 + j * l + l * l * j * (j - 1) / 2
    }

    /// Total coefficient count `D`.
    pub fn output_dim(&self) -> usize {
        self.n_channels() * self.output_side() * self.output_side()
    }
}

/// Square 2-D FFT by rows, transpose, rows, transpose.
struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn transpose(&self, src: &[Complex64], dst: &mut [Complex64]) {
        let n = self.n;
        for r in 0..n {
            for c in 0..n {
                dst[c * n + r] = src[r * n + c];
            }
        }
    }

    fn run(&self, plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        plan.process(buf);
        self.transpose(buf, scratch);
        plan.process(scratch);
        self.transpose(scratch, buf);
    }

    fn forward(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.run(&self.forward, buf, scratch);
    }

    /// Unnormalized inverse transform.
    fn inverse(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.run(&self.inverse, buf, scratch);
    }
}

/// Coefficients of one image, channels concatenated in [`FilterBank::paths`]
/// order, each a row-major `side × side` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringVector {
    coefficients: Vec<f64>,
    channel_len: usize,
}

impl ScatteringVector {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn n_channels(&self) -> usize {
        self.coefficients.len() / self.channel_len
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.coefficients[c * self.channel_len..(c + 1) * self.channel_len]
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }
}

/// Per-thread FFT plans and buffers for one filter bank.
struct Workspace<'a> {
    bank: &'a FilterBank,
    full: Fft2,
    coarse: Fft2,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
    fold: Vec<Complex64>,
    fold_scratch: Vec<Complex64>,
}

impl<'a> Workspace<'a> {
    fn new(bank: &'a FilterBank) -> Self {
        let n2 = bank.size * bank.size;
        let m = bank.output_side();
        Self {
            bank,
            full: Fft2::new(bank.size),
            coarse: Fft2::new(m),
            buf: vec![Complex64::new(0.0, 0.0); n2],
            scratch: vec![Complex64::new(0.0, 0.0); n2],
            fold: vec![Complex64::new(0.0, 0.0); m * m],
            fold_scratch: vec![Complex64::new(0.0, 0.0); m * m],
        }
    }

    /// Low-pass `spectrum` with φ and append the subsampled channel to `out`.
    fn average(&mut self, spectrum: &[Complex64], out: &mut Vec<f64>) {
        let n = self.bank.size;
        let m = self.bank.output_side();
        let phi = &self.bank.phi;
        self.fold.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for r in 0..n {
            let fr = (r % m) * m;
            for c in 0..n {
                let k = r * n + c;
                self.fold[fr + c % m] += spectrum[k] * phi[k];
            }
        }
        self.coarse.inverse(&mut self.fold, &mut self.fold_scratch);
        let norm = (n * n) as f64;
        out.extend(self.fold.iter().map(|v| v.re / norm));
    }

    /// Spectrum of `|IDFT(spectrum · psi)|`.
    fn modulus_spectrum(&mut self, spectrum: &[Complex64], psi: &[f64]) -> Vec<Complex64> {
        let norm = (self.bank.size * self.bank.size) as f64;
        for ((b, s), p) in self.buf.iter_mut().zip(spectrum).zip(psi) {
            *b = s * *p;
        }
        self.full.inverse(&mut self.buf, &mut self.scratch);
        for b in &mut self.buf {
            *b = Complex64::new(b.norm() / norm, 0.0);
        }
        self.full.forward(&mut self.buf, &mut self.scratch);
        self.buf.clone()
    }

    fn transform(&mut self, pixels: &[f64]) -> Vec<f64> {
        let bank = self.bank;
        let mut out = Vec::with_capacity(bank.output_dim());
        let mut x_hat: Vec<Complex64> = pixels.iter().map(|&p| Complex64::new(p, 0.0)).collect();
        self.full.forward(&mut x_hat, &mut self.scratch);
        self.average(&x_hat, &mut out);

        let (jj, ll) = (bank.scales, bank.rotations);
        let mut first = Vec::with_capacity(jj * ll);
        for j1 in 0..jj {
            for l1 in 0..ll {
                let u1 = self.modulus_spectrum(&x_hat, bank.psi(j1, l1));
                self.average(&u1, &mut out);
                first.push(u1);
            }
        }
        for j1 in 0..jj {
            for l1 in 0..ll {
                let u1 = &first[j1 * ll + l1];
                for j2 in j1 + 1..jj {
                    for l2 in 0..ll {
                        let u2 = self.modulus_spectrum(u1, bank.psi(j2, l2));
                        self.average(&u2, &mut out);
                    }
                }
            }
        }
        out
    }
}

fn check_shape(image: &Image, bank: &FilterBank) -> Result<()> {
    if image.height() != bank.size || image.width() != bank.size {
        return Err(Error::Dimension(format!(
            "image is {}x{}, filter bank expects {}x{}",
            image.height(),
            image.width(),
            bank.size,
            bank.size
        )));
    }
    Ok(())
}

pub fn scatter_image(image: &Image, bank: &FilterBank) -> Result<ScatteringVector> {
    check_shape(image, bank)?;
    let side = bank.output_side();
    Ok(ScatteringVector {
        coefficients: Workspace::new(bank).transform(image.pixels()),
        channel_len: side * side,
    })
}

/// Scatters every image; column `i` of the result is image `i`'s transform.
pub fn scatter_dataset(set: &ImageSet, bank: &FilterBank) -> Result<FeatureMatrix> {
    let dim = bank.output_dim();
    if set.is_empty() {
        return Ok(FeatureMatrix::empty(dim, Domain::Scattering));
    }
    for image in set.images() {
        check_shape(image, bank)?;
    }
    let rows: Vec<Vec<f64>> = set
        .images()
        .par_iter()
        .map_init(|| Workspace::new(bank), |ws, im| ws.transform(im.pixels()))
        .collect();
    let mut samples = Array2::zeros((rows.len(), dim));
    for (mut dst, src) in samples.rows_mut().into_iter().zip(rows) {
        dst.assign(&ndarray::Array1::from(src));
    }
    FeatureMatrix::from_samples(samples, Domain::Scattering)
}
