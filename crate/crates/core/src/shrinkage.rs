//! Joint-magnitude hard thresholding and the cycle-spun denoising pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Image;
use crate::par;
use crate::quadrature::{apply_filters, hct_filter, Family, Fft2};
use crate::wavelet::{dwt2, filter_bank, idwt2, Pyramid};

/// Thresholding strategy.
///
/// * `C` plain hard thresholding of the observed coefficient.
/// * `A` analytic: the observed image plus its double partial Hilbert transform.
/// * `R` Riesz: the observed image plus both Riesz transforms.
/// * `H` hypercomplex: the observed image plus all three hypercomplex transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "c")]
    C,
    #[serde(rename = "a")]
    A,
    #[serde(rename = "r")]
    R,
    #[serde(rename = "h")]
    H,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::C, Method::A, Method::R, Method::H];

    /// Energy constant of the added components (`0` for plain thresholding).
    pub fn energy_constant(self) -> f64 {
        match self {
            Method::C => 0.0,
            Method::A => 1.0,
            Method::R => Family::Riesz.energy_constant(),
            Method::H => Family::Hypercomplex.energy_constant(),
        }
    }

    /// The observed image followed by the components this method thresholds on.
    pub fn components(self, img: &Image, fft: &Fft2) -> Result<Vec<Image>> {
        let n = img.n();
        let filters = match self {
            Method::C => Vec::new(),
            Method::A => vec![hct_filter(n, 3)?],
            Method::R => Family::Riesz.filters(n)?,
            Method::H => Family::Hypercomplex.filters(n)?,
        };
        let mut out = vec![img.clone()];
        if !filters.is_empty() {
            out.extend(apply_filters(img, &filters, fft)?);
        }
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::C => "c",
            Method::A => "a",
            Method::R => "r",
            Method::H => "h",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "c" => Ok(Method::C),
            "a" => Ok(Method::A),
            "r" => Ok(Method::R),
            "h" => Ok(Method::H),
            other => Err(Error::invalid(format!(
                "unknown method '{other}' (expected c, a, r or h)"
            ))),
        }
    }
}

/// `M^2 = (1/(C+1)) * sum_l W_l^2` at each index, laid out like a [`Pyramid`].
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudePyramid {
    squared: Pyramid,
    energy_constant: f64,
}

impl MagnitudePyramid {
    pub fn squared(&self) -> &Pyramid {
        &self.squared
    }

    pub fn energy_constant(&self) -> f64 {
        self.energy_constant
    }
}

pub fn magnitude(pyramids: &[Pyramid], energy_constant: f64) -> Result<MagnitudePyramid> {
    let first = pyramids
        .first()
        .ok_or_else(|| Error::invalid("magnitude needs at least one pyramid"))?;
    if pyramids.iter().any(|p| !p.same_shape(first)) {
        return Err(Error::shape("component pyramids differ in side or depth"));
    }
    let norm = 1.0 / (energy_constant + 1.0);
    let mut squared = Pyramid::zeros(first.n(), first.levels())?;
    for p in pyramids {
        for (m, w) in squared.detail_values_mut().zip(p.detail_values()) {
            *m += w * w;
        }
        for (m, w) in squared.scaling_mut().iter_mut().zip(p.scaling()) {
            *m += w * w;
        }
    }
    squared.detail_values_mut().for_each(|m| *m *= norm);
    squared.scaling_mut().iter_mut().for_each(|m| *m *= norm);
    Ok(MagnitudePyramid {
        squared,
        energy_constant,
    })
}

/// Universal `lambda^2` for `K` coefficients.
pub fn universal_threshold(method: Method, k: usize) -> Result<f64> {
    if k < 16 {
        return Err(Error::invalid(format!(
            "universal threshold needs K >= 16, got {k}"
        )));
    }
    let lk = (k as f64).ln();
    Ok(match method {
        Method::H => 2.0 * lk + 2.0 * lk.ln(),
        Method::C | Method::A | Method::R => 2.0 * lk,
    })
}

/// Median absolute deviation of the finest diagonal subband over 0.6745.
pub fn estimate_sigma(pyr: &Pyramid) -> f64 {
    let mut v: Vec<f64> = pyr.detail(1, 1).iter().map(|x| x.abs()).collect();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    let median = if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    };
    median / 0.6745
}

/// Keep/kill outcome counts over detail coefficients.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KeepCount {
    pub kept: usize,
    pub total: usize,
}

impl KeepCount {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.kept as f64 / self.total as f64
        }
    }
}

/// Zero every detail coefficient whose magnitude falls below
/// `sigma^2 lambda^2 / (C+1)`. The level-`J` scaling block passes through.
pub fn hard_threshold(
    pyr_y: &Pyramid,
    mag: &MagnitudePyramid,
    sigma: f64,
    lambda_sq: f64,
) -> Result<(Pyramid, KeepCount)> {
    if !pyr_y.same_shape(&mag.squared) {
        return Err(Error::shape("magnitude pyramid does not match observed pyramid"));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
    }
    // C + 1 is a power of two for every method, so scaling M^2 back up is exact
    let dof = mag.energy_constant + 1.0;
    let bar = sigma * sigma * lambda_sq;
    let mut out = pyr_y.clone();
    let mut count = KeepCount::default();
    for (w, m) in out.detail_values_mut().zip(mag.squared.detail_values()) {
        count.total += 1;
        if m * dof >= bar {
            count.kept += 1;
        } else {
            *w = 0.0;
        }
    }
    Ok((out, count))
}

/// Noise level handed to the thresholding rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaChoice {
    Known(f64),
    Auto,
}

/// Threshold `lambda^2` in noise-variance units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaChoice {
    Universal,
    Explicit(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseConfig {
    pub method: Method,
    pub wavelet: String,
    pub levels: usize,
    pub sigma: SigmaChoice,
    pub lambda: LambdaChoice,
    /// Cycle-spin grid side `S`; `S x S` circular shifts are averaged.
    pub spins: usize,
    /// Recorded for provenance; denoising itself draws no random numbers.
    pub seed: u64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig {
            method: Method::H,
            wavelet: "la8".into(),
            levels: 3,
            sigma: SigmaChoice::Auto,
            lambda: LambdaChoice::Universal,
            spins: 8,
            seed: 0,
        }
    }
}

impl DenoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.spins == 0 {
            return Err(Error::invalid("spins must be >= 1"));
        }
        if self.levels == 0 {
            return Err(Error::invalid("levels must be >= 1"));
        }
        if let SigmaChoice::Known(s) = self.sigma {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::invalid(format!("sigma must be > 0, got {s}")));
            }
        }
        if let LambdaChoice::Explicit(l) = self.lambda {
            if !(l >= 0.0) {
                return Err(Error::invalid(format!("lambda^2 must be >= 0, got {l}")));
            }
        }
        Ok(())
    }
}

/// Denoised image plus the resolved parameters of the run.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseOutput {
    pub image: Image,
    pub sigma: f64,
    pub lambda_sq: f64,
    /// Fraction of detail coefficients kept, pooled over all spins.
    pub kept_fraction: f64,
}

/// Circular shifts averaged by cycle spinning: a uniform grid over one
/// period `2^J` when `S <= 2^J`, unit steps otherwise.
pub fn spin_offsets(spins: usize, levels: usize) -> Vec<usize> {
    let period = 1usize << levels;
    (0..spins)
        .map(|k| if spins <= period { k * period / spins } else { k })
        .collect()
}

pub fn denoise(y: &Image, cfg: &DenoiseConfig) -> Result<DenoiseOutput> {
    cfg.validate()?;
    let n = y.n();
    let fp = filter_bank(&cfg.wavelet)?;
    let fft = Fft2::new(n);
    let components = cfg.method.components(y, &fft)?;
    let c = cfg.method.energy_constant();

    let sigma = match cfg.sigma {
        SigmaChoice::Known(s) => s,
        SigmaChoice::Auto => estimate_sigma(&dwt2(y, &fp, cfg.levels)?),
    };
    if !(sigma > 0.0) {
        return Err(Error::Numerical(format!(
            "estimated noise level is {sigma}; cannot threshold"
        )));
    }
    let lambda_sq = match cfg.lambda {
        LambdaChoice::Universal => universal_threshold(cfg.method, n * n)?,
        LambdaChoice::Explicit(l) => l,
    };

    let offsets = spin_offsets(cfg.spins, cfg.levels);
    let shifts: Vec<(usize, usize)> = offsets
        .iter()
        .flat_map(|&a| offsets.iter().map(move |&b| (a, b)))
        .collect();

    let spin = |i: usize| -> Result<(Image, KeepCount)> {
        let (d1, d2) = (shifts[i].0 as isize, shifts[i].1 as isize);
        let pyramids = components
            .iter()
            .map(|img| dwt2(&img.circshift(d1, d2), &fp, cfg.levels))
            .collect::<Result<Vec<_>>>()?;
        let mag = magnitude(&pyramids, c)?;
        let (kept, count) = hard_threshold(&pyramids[0], &mag, sigma, lambda_sq)?;
        Ok((idwt2(&kept, &fp)?.circshift(-d1, -d2), count))
    };
    let results = par::map_indexed(shifts.len(), spin);

    // fixed-order reduction keeps the average independent of scheduling
    let mut acc = vec![0.0; n * n];
    let mut count = KeepCount::default();
    for r in results {
        let (img, kc) = r?;
        for (a, v) in acc.iter_mut().zip(img.data()) {
            *a += v;
        }
        count.kept += kc.kept;
        count.total += kc.total;
    }
    let inv = 1.0 / shifts.len() as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    Ok(DenoiseOutput {
        image: Image::new(n, acc)?,
        sigma,
        lambda_sq,
        kept_fraction: count.fraction(),
    })
}
