//! Square images, synthetic test features, Gaussian noise and SNR bookkeeping.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// An `n x n` real image stored row-major, indexed `[x1][x2]`, unit sampling step.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    n: usize,
    data: Vec<f64>,
}

pub(crate) fn check_side(n: usize) -> Result<()> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::invalid(format!(
            "image side must be a power of two >= 8, got {n}"
        )));
    }
    Ok(())
}

impl Image {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        check_side(n)?;
        if data.len() != n * n {
            return Err(Error::shape(format!(
                "expected {} samples for side {n}, got {}",
                n * n,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Image { n, data })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        check_side(n)?;
        Ok(Image {
            n,
            data: vec![0.0; n * n],
        })
    }

    /// Build from `f(x1, x2)`.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        check_side(n)?;
        let mut data = Vec::with_capacity(n * n);
        for x1 in 0..n {
            for x2 in 0..n {
                data.push(f(x1, x2));
            }
        }
        Image::new(n, data)
    }

    /// Internal constructor for buffers already known to be well formed.
    pub(crate) fn from_raw(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Image { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x1: usize, x2: usize) -> f64 {
        self.data[x1 * self.n + x2]
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &Image) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Image {
        Image::from_raw(self.n, self.data.iter().map(|v| c * v).collect())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Image, b: f64) -> Result<Image> {
        if self.n != other.n {
            return Err(Error::shape(format!(
                "image sides differ: {} vs {}",
                self.n, other.n
            )));
        }
        Ok(Image::from_raw(
            self.n,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        ))
    }

    /// Circular shift: `out[x] = self[x - shift]` (indices mod n).
    pub fn circshift(&self, s1: isize, s2: isize) -> Image {
        let n = self.n as isize;
        let mut out = vec![0.0; self.data.len()];
        for x1 in 0..n {
            let src1 = (x1 - s1).rem_euclid(n);
            for x2 in 0..n {
                let src2 = (x2 - s2).rem_euclid(n);
                out[(x1 * n + x2) as usize] = self.data[(src1 * n + src2) as usize];
            }
        }
        Image::from_raw(self.n, out)
    }
}

/// Standard deviation and seed of additive white Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("noise sigma must be > 0, got {sigma}")));
        }
        Ok(NoiseSpec { sigma, seed })
    }
}

/// Plane-wave texture `a cos(2 pi f0 (cos(phi0) x1 + sin(phi0) x2))`.
pub fn make_oscillation(a: f64, f0: f64, phi0: f64, n: usize) -> Result<Image> {
    if !(f0 > 0.0 && f0 < 0.5) {
        return Err(Error::invalid(format!(
            "oscillation frequency must lie in (0, 1/2), got {f0}"
        )));
    }
    let (f1, f2) = (f0 * phi0.cos(), f0 * phi0.sin());
    Image::from_fn(n, |x1, x2| {
        a * (2.0 * PI * (f1 * x1 as f64 + f2 * x2 as f64)).cos()
    })
}

/// Straight ridge along `cos(theta) x1 + sin(theta) x2 = c` with a Gaussian
/// cross-section of the given width standing in for a line impulse.
pub fn make_edge(theta: f64, c: f64, amp: f64, width: f64, n: usize) -> Result<Image> {
    if !(theta > 0.0 && theta <= PI / 2.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "edge orientation must lie in (0, pi/2], got {theta}"
        )));
    }
    if !(width >= 0.5) {
        return Err(Error::invalid(format!("edge width must be >= 0.5, got {width}")));
    }
    let (ct, st) = (theta.cos(), theta.sin());
    let inv = 1.0 / (2.0 * width * width);
    Image::from_fn(n, |x1, x2| {
        let d = ct * x1 as f64 + st * x2 as f64 - c;
        amp * (-d * d * inv).exp()
    })
}

/// Piecewise-smooth test image: a tilted ramp background with three discs of
/// constant offset and one smooth Gaussian bump.
pub fn make_blobs(amp: f64, n: usize) -> Result<Image> {
    let s = n as f64;
    let discs = [
        (0.30 * s, 0.35 * s, 0.14 * s, 1.0),
        (0.65 * s, 0.60 * s, 0.20 * s, -0.7),
        (0.25 * s, 0.75 * s, 0.09 * s, 0.5),
    ];
    let bump = (0.72 * s, 0.22 * s, 0.06 * s);
    Image::from_fn(n, |x1, x2| {
        let (p, q) = (x1 as f64, x2 as f64);
        let mut v = 0.25 * (p + 0.5 * q) / s;
        for &(c1, c2, r, h) in &discs {
            if (p - c1).powi(2) + (q - c2).powi(2) <= r * r {
                v += h;
            }
        }
        let d2 = (p - bump.0).powi(2) + (q - bump.1).powi(2);
        v += 0.8 * (-d2 / (2.0 * bump.2 * bump.2)).exp();
        amp * v
    })
}

/// `Y = q + eps`, eps i.i.d. N(0, sigma^2), deterministic in `spec.seed`.
pub fn add_noise(img: &Image, spec: &NoiseSpec) -> Image {
    let mut noise = vec![0.0; img.data.len()];
    rng::fill_normal(&mut rng::rng_from_seed(spec.seed), spec.sigma, &mut noise);
    for (e, q) in noise.iter_mut().zip(&img.data) {
        *e += q;
    }
    Image::from_raw(img.n, noise)
}

/// Pure white-noise image.
pub fn white_noise(n: usize, spec: &NoiseSpec) -> Result<Image> {
    Ok(add_noise(&Image::zeros(n)?, spec))
}

/// `sqrt(sum(q^2) / (N^2 sigma^2))`.
pub fn snr(q: &Image, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
    }
    let n2 = (q.n * q.n) as f64;
    Ok((q.energy() / (n2 * sigma * sigma)).sqrt())
}

/// Noise level giving `snr(q, sigma) == target`.
pub fn sigma_for_snr(q: &Image, target: f64) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::invalid(format!("target SNR must be > 0, got {target}")));
    }
    let e = q.energy();
    if e == 0.0 {
        return Err(Error::invalid("cannot calibrate noise against a zero image"));
    }
    let n2 = (q.n * q.n) as f64;
    Ok((e / n2).sqrt() / target)
}
