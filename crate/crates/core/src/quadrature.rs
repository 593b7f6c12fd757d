//! Riesz and hypercomplex quadrature components built by DFT-domain filtering.
//!
//! DFT convention: forward unnormalized, inverse carries `1/n^2`. DFT index
//! `u_m > n/2` stands for the signed frequency `u_m - n`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Image;

/// Forward/inverse 2-D FFT plans for one side length.
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn run(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        plan.process(buf);
        transpose(buf, n);
        plan.process(buf);
        transpose(buf, n);
    }

    pub fn forward(&self, img: &Image) -> Vec<Complex64> {
        assert_eq!(img.n(), self.n);
        let mut buf: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.run(&mut buf, &self.forward);
        buf
    }

    /// Inverse transform including the `1/n^2` factor.
    pub fn inverse(&self, spec: &[Complex64]) -> Vec<Complex64> {
        let mut buf = spec.to_vec();
        self.run(&mut buf, &self.inverse);
        let scale = 1.0 / (self.n * self.n) as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in r + 1..n {
            buf.swap(r * n + c, c * n + r);
        }
    }
}

pub fn dft2(img: &Image) -> Vec<Complex64> {
    Fft2::new(img.n()).forward(img)
}

pub fn idft2(n: usize, spec: &[Complex64]) -> Vec<Complex64> {
    Fft2::new(n).inverse(spec)
}

/// Frequency response `V_D(u)` on the `n x n` DFT grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFilter {
    pub n: usize,
    pub values: Vec<Complex64>,
}

impl SpectralFilter {
    pub fn at(&self, u1: usize, u2: usize) -> Complex64 {
        self.values[u1 * self.n + u2]
    }

    /// Largest violation of `V(-u) = conj(V(u))`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for u1 in 0..n {
            for u2 in 0..n {
                let m = self.at((n - u1) % n, (n - u2) % n);
                worst = worst.max((m - self.at(u1, u2).conj()).norm());
            }
        }
        worst
    }

    pub fn product(&self, other: &SpectralFilter) -> SpectralFilter {
        SpectralFilter {
            n: self.n,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        }
    }
}

fn signed(u: usize, n: usize) -> f64 {
    if u > n / 2 {
        u as f64 - n as f64
    } else {
        u as f64
    }
}

fn check_even(n: usize) -> Result<()> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::invalid(format!("filter side must be even, got {n}")));
    }
    Ok(())
}

/// Riesz response `-i f_l / |f|`, zero at DC and on the Nyquist rows/columns.
pub fn riesz_filter(n: usize, l: usize) -> Result<SpectralFilter> {
    check_even(n)?;
    if !(1..=2).contains(&l) {
        return Err(Error::invalid(format!("Riesz component must be 1 or 2, got {l}")));
    }
    let half = n / 2;
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    for u1 in 0..n {
        for u2 in 0..n {
            if u1 == half || u2 == half || (u1 == 0 && u2 == 0) {
                continue;
            }
            let (f1, f2) = (signed(u1, n), signed(u2, n));
            let fl = if l == 1 { f1 } else { f2 };
            values[u1 * n + u2] = Complex64::new(0.0, -fl / f1.hypot(f2));
        }
    }
    Ok(SpectralFilter { n, values })
}

fn partial_hilbert(u: usize, n: usize) -> Complex64 {
    let half = n / 2;
    if u == 0 || u == half {
        Complex64::new(0.0, 0.0)
    } else if u < half {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::new(0.0, 1.0)
    }
}

/// Hypercomplex responses: partial Hilbert along x1 (`l = 1`), along x2
/// (`l = 2`), and their product (`l = 3`).
pub fn hct_filter(n: usize, l: usize) -> Result<SpectralFilter> {
    check_even(n)?;
    let mut values = Vec::with_capacity(n * n);
    for u1 in 0..n {
        for u2 in 0..n {
            values.push(match l {
                1 => partial_hilbert(u1, n),
                2 => partial_hilbert(u2, n),
                3 => partial_hilbert(u1, n) * partial_hilbert(u2, n),
                _ => {
                    return Err(Error::invalid(format!(
                        "hypercomplex component must be 1, 2 or 3, got {l}"
                    )))
                }
            });
        }
    }
    Ok(SpectralFilter { n, values })
}

/// Which family of quadrature components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Riesz,
    Hypercomplex,
}

impl Family {
    /// Number of added components `L`.
    pub fn components(self) -> usize {
        match self {
            Family::Riesz => 2,
            Family::Hypercomplex => 3,
        }
    }

    /// Energy constant `C_L`.
    pub fn energy_constant(self) -> f64 {
        match self {
            Family::Riesz => 1.0,
            Family::Hypercomplex => 3.0,
        }
    }

    pub fn filters(self, n: usize) -> Result<Vec<SpectralFilter>> {
        (1..=self.components())
            .map(|l| match self {
                Family::Riesz => riesz_filter(n, l),
                Family::Hypercomplex => hct_filter(n, l),
            })
            .collect()
    }

    /// True where the summed response `sum_l |V_l|^2` equals `C_L`.
    pub fn in_band(self, n: usize, u1: usize, u2: usize) -> bool {
        let half = n / 2;
        match self {
            Family::Riesz => !(u1 == half || u2 == half || (u1 == 0 && u2 == 0)),
            Family::Hypercomplex => !(u1 == 0 || u1 == half || u2 == 0 || u2 == half),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Riesz => "riesz",
            Family::Hypercomplex => "hct",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "riesz" | "r" => Ok(Family::Riesz),
            "hct" | "hypercomplex" | "h" => Ok(Family::Hypercomplex),
            other => Err(Error::invalid(format!(
                "unknown family '{other}' (expected riesz or hct)"
            ))),
        }
    }
}

/// The image followed by its `L` quadrature components.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSet {
    pub family: Family,
    pub components: Vec<Image>,
    pub energy_constant: f64,
}

const RESIDUE_FAIL: f64 = 1e-6;

/// Real images `idft2(dft2(img) * V_l)` for each filter.
pub fn apply_filters(img: &Image, filters: &[SpectralFilter], fft: &Fft2) -> Result<Vec<Image>> {
    let n = img.n();
    let spec = fft.forward(img);
    let scale = img.max_abs().max(1.0);
    filters
        .iter()
        .map(|v| {
            if v.n != n {
                return Err(Error::shape(format!("filter side {} vs image side {n}", v.n)));
            }
            let prod: Vec<Complex64> = spec.iter().zip(&v.values).map(|(a, b)| a * b).collect();
            let back = fft.inverse(&prod);
            let residue = back.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
            if residue > RESIDUE_FAIL * scale {
                return Err(Error::Numerical(format!(
                    "filtered image has imaginary residue {residue:e}; filter is not Hermitian"
                )));
            }
            Ok(Image::from_raw(n, back.iter().map(|c| c.re).collect()))
        })
        .collect()
}

pub fn quadrature_set(img: &Image, family: Family) -> Result<QuadratureSet> {
    let fft = Fft2::new(img.n());
    quadrature_set_with(img, family, &fft)
}

pub fn quadrature_set_with(img: &Image, family: Family, fft: &Fft2) -> Result<QuadratureSet> {
    let filters = family.filters(img.n())?;
    let mut components = vec![img.clone()];
    components.extend(apply_filters(img, &filters, fft)?);
    Ok(QuadratureSet {
        family,
        components,
        energy_constant: family.energy_constant(),
    })
}

/// Remove the spectral content where the family's filters do not carry the
/// full energy constant (DC and Nyquist lines).
pub fn band_limit(img: &Image, family: Family) -> Image {
    let n = img.n();
    let fft = Fft2::new(n);
    let mut spec = fft.forward(img);
    for u1 in 0..n {
        for u2 in 0..n {
            if !family.in_band(n, u1, u2) {
                spec[u1 * n + u2] = Complex64::new(0.0, 0.0);
            }
        }
    }
    Image::from_raw(n, fft.inverse(&spec).iter().map(|c| c.re).collect())
}
