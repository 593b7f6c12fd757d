//! Paired Monte Carlo denoising experiments and error metrics.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{add_noise, make_blobs, make_edge, make_oscillation, sigma_for_snr, snr, Image, NoiseSpec};
use crate::io::{read_image, ImageFormat};
use crate::par;
use crate::rng::derive_seed;
use crate::shrinkage::{denoise, DenoiseConfig, LambdaChoice, Method, SigmaChoice};

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::shape(format!("images of side {} and {}", a.n(), b.n())));
    }
    let s: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum();
    Ok(s / a.data().len() as f64)
}

/// `10 log10(peak^2 / mse)`; identical images give `+inf`.
pub fn psnr(estimate: &Image, truth: &Image, peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::invalid(format!("peak must be > 0, got {peak}")));
    }
    let m = mse(estimate, truth)?;
    Ok(if m == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / m).log10()
    })
}

/// Where the clean image comes from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ImageSource {
    /// `builtin:NAME?key=val&key=val`.
    Builtin {
        name: String,
        params: BTreeMap<String, f64>,
    },
    File(PathBuf),
}

impl ImageSource {
    pub fn parse(spec: &str) -> Result<ImageSource> {
        let Some(rest) = spec.strip_prefix("builtin:") else {
            return Ok(ImageSource::File(PathBuf::from(spec)));
        };
        let (name, query) = rest.split_once('?').unwrap_or((rest, ""));
        let mut params = BTreeMap::new();
        for kv in query.split('&').filter(|s| !s.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("builtin parameter '{kv}' is not key=value")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::invalid(format!("builtin parameter {k}={v} is not a number")))?;
            params.insert(k.to_string(), v);
        }
        Ok(ImageSource::Builtin {
            name: name.to_string(),
            params,
        })
    }

    /// Short label used in result tables.
    pub fn label(&self) -> String {
        match self {
            ImageSource::Builtin { name, .. } => name.clone(),
            ImageSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
        }
    }

    /// Load the clean image and its natural PSNR peak.
    pub fn load(&self) -> Result<(Image, f64)> {
        match self {
            ImageSource::File(p) => {
                let (img, fmt) = read_image(p)?;
                let peak = match fmt {
                    ImageFormat::Pgm => 255.0,
                    ImageFormat::Raw => img.max_abs(),
                };
                Ok((img, peak))
            }
            ImageSource::Builtin { name, params } => {
                let img = builtin(name, params)?;
                let peak = img.max_abs();
                Ok((img, peak))
            }
        }
    }
}

fn take(params: &BTreeMap<String, f64>, allowed: &[&str], key: &str, default: f64) -> Result<f64> {
    if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::invalid(format!(
            "unknown builtin parameter '{bad}' (allowed: {})",
            allowed.join(", ")
        )));
    }
    Ok(params.get(key).copied().unwrap_or(default))
}

fn side(params: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<usize> {
    let n = take(params, allowed, "n", 256.0)?;
    if n.fract() != 0.0 || n < 8.0 {
        return Err(Error::invalid(format!("builtin side must be an integer >= 8, got {n}")));
    }
    Ok(n as usize)
}

/// Synthetic test images: `oscillation`, `ridge`, `blobs` and `composite`
/// (an oscillation plus a ridge over a smooth periodic background of
/// amplitude `bg`, which carries most of the energy as in natural images).
pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<Image> {
    const OSC: &[&str] = &["n", "a", "f0", "phi0"];
    const RIDGE: &[&str] = &["n", "theta", "c", "amp", "width"];
    const BLOBS: &[&str] = &["n", "amp"];
    const COMP: &[&str] = &["n", "a", "f0", "phi0", "theta", "c", "amp", "width", "bg"];
    match name {
        "oscillation" => {
            let n = side(params, OSC)?;
            make_oscillation(
                take(params, OSC, "a", 1.0)?,
                take(params, OSC, "f0", 0.125)?,
                take(params, OSC, "phi0", PI / 6.0)?,
                n,
            )
        }
        "ridge" => {
            let n = side(params, RIDGE)?;
            make_edge(
                take(params, RIDGE, "theta", PI / 3.0)?,
                take(params, RIDGE, "c", 0.5 * n as f64)?,
                take(params, RIDGE, "amp", 1.0)?,
                take(params, RIDGE, "width", 1.0)?,
                n,
            )
        }
        "blobs" => {
            let n = side(params, BLOBS)?;
            make_blobs(take(params, BLOBS, "amp", 1.0)?, n)
        }
        "composite" => {
            let n = side(params, COMP)?;
            let osc = make_oscillation(
                take(params, COMP, "a", 1.0)?,
                take(params, COMP, "f0", 0.2)?,
                take(params, COMP, "phi0", 0.5)?,
                n,
            )?;
            let ridge = make_edge(
                take(params, COMP, "theta", PI / 3.0)?,
                take(params, COMP, "c", 0.5 * n as f64)?,
                take(params, COMP, "amp", 2.0)?,
                take(params, COMP, "width", 1.0)?,
                n,
            )?;
            let bg = take(params, COMP, "bg", 6.0)?;
            let w = 2.0 * PI / n as f64;
            let background = Image::from_fn(n, |x1, x2| bg * (w * x1 as f64).cos() * (w * x2 as f64).cos())?;
            osc.combine(1.0, &ridge, 1.0)?.combine(1.0, &background, 1.0)
        }
        other => Err(Error::invalid(format!(
            "unknown builtin image '{other}' (expected oscillation, ridge, blobs or composite)"
        ))),
    }
}

/// Noise level of one experimental arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NoiseLevel {
    Snr(f64),
    Sigma(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub image: ImageSource,
    pub noise: Vec<NoiseLevel>,
    pub methods: Vec<Method>,
    pub reps: usize,
    pub seed: u64,
    pub wavelet: String,
    pub levels: usize,
    pub spins: usize,
    pub lambda: LambdaChoice,
    /// PSNR peak; defaults to 255 for PGM input and `max |q|` otherwise.
    pub peak: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(image: ImageSource, snrs: &[f64], methods: Vec<Method>, reps: usize, seed: u64) -> Self {
        ExperimentConfig {
            image,
            noise: snrs.iter().map(|&s| NoiseLevel::Snr(s)).collect(),
            methods,
            reps,
            seed,
            wavelet: "la8".into(),
            levels: 3,
            spins: 8,
            lambda: LambdaChoice::Universal,
            peak: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("reps must be >= 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("at least one method is required"));
        }
        if self.noise.is_empty() {
            return Err(Error::invalid("at least one noise level is required"));
        }
        for lvl in &self.noise {
            let v = match lvl {
                NoiseLevel::Snr(v) | NoiseLevel::Sigma(v) => *v,
            };
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("noise levels must be > 0, got {v}")));
            }
        }
        if let Some(p) = self.peak {
            if !(p > 0.0) {
                return Err(Error::invalid(format!("peak must be > 0, got {p}")));
            }
        }
        Ok(())
    }
}

/// Error of one method on one noisy replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepRecord {
    pub level: usize,
    pub rep: usize,
    pub method: Method,
    pub mse: f64,
    pub psnr: f64,
}

/// Aggregate over replications for one `(method, noise level)` arm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub image: String,
    pub method: String,
    pub snr: f64,
    pub rep_count: usize,
    pub mean_mse: f64,
    pub sd_mse: f64,
    pub mean_psnr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub image: String,
    /// Achieved SNR and noise standard deviation of each noise level.
    pub levels: Vec<(f64, f64)>,
    pub rows: Vec<ResultRow>,
    pub records: Vec<RepRecord>,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

impl ResultTable {
    pub fn row(&self, method: Method, level: usize) -> Option<&ResultRow> {
        let snr = self.levels.get(level)?.0;
        let name = method.to_string();
        self.rows.iter().find(|r| r.method == name && r.snr == snr)
    }

    /// Mean and sample sd over replications of `mse(a) - mse(b)` at one level.
    pub fn paired_difference(&self, a: Method, b: Method, level: usize) -> (f64, f64) {
        let pick = |m: Method| {
            let mut v: Vec<(usize, f64)> = self
                .records
                .iter()
                .filter(|r| r.method == m && r.level == level)
                .map(|r| (r.rep, r.mse))
                .collect();
            v.sort_by_key(|x| x.0);
            v
        };
        let (xa, xb) = (pick(a), pick(b));
        let d: Vec<f64> = xa.iter().zip(&xb).map(|(p, q)| p.1 - q.1).collect();
        mean_sd(&d)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Every method sees the same noise field on a given replication (common
/// random numbers), scaled to each noise level.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let (truth, natural_peak) = cfg.image.load()?;
    let peak = cfg.peak.unwrap_or(natural_peak);
    if !(peak > 0.0) {
        return Err(Error::invalid("clean image is identically zero; supply a peak"));
    }
    let mut levels = Vec::with_capacity(cfg.noise.len());
    for lvl in &cfg.noise {
        let sigma = match *lvl {
            NoiseLevel::Snr(s) => sigma_for_snr(&truth, s)?,
            NoiseLevel::Sigma(s) => s,
        };
        levels.push((snr(&truth, sigma)?, sigma));
    }

    let jobs: Vec<(usize, usize)> = (0..levels.len())
        .flat_map(|l| (0..cfg.reps).map(move |r| (l, r)))
        .collect();
    let results = par::map_indexed(jobs.len(), |i| -> Result<Vec<RepRecord>> {
        let (level, rep) = jobs[i];
        let sigma = levels[level].1;
        let noisy = add_noise(&truth, &NoiseSpec::new(sigma, derive_seed(cfg.seed, rep as u64))?);
        cfg.methods
            .iter()
            .map(|&method| {
                let dc = DenoiseConfig {
                    method,
                    wavelet: cfg.wavelet.clone(),
                    levels: cfg.levels,
                    sigma: SigmaChoice::Known(sigma),
                    lambda: cfg.lambda,
                    spins: cfg.spins,
                    seed: cfg.seed,
                };
                let est = denoise(&noisy, &dc)?.image;
                Ok(RepRecord {
                    level,
                    rep,
                    method,
                    mse: mse(&est, &truth)?,
                    psnr: psnr(&est, &truth, peak)?,
                })
            })
            .collect()
    });
    let mut records = Vec::with_capacity(jobs.len() * cfg.methods.len());
    for r in results {
        records.extend(r?);
    }

    let image = cfg.image.label();
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        for (level, &(achieved, _)) in levels.iter().enumerate() {
            let sel: Vec<&RepRecord> = records
                .iter()
                .filter(|r| r.method == method && r.level == level)
                .collect();
            let mses: Vec<f64> = sel.iter().map(|r| r.mse).collect();
            let (mean_mse, sd_mse) = mean_sd(&mses);
            let mean_psnr = sel.iter().map(|r| r.psnr).sum::<f64>() / sel.len() as f64;
            rows.push(ResultRow {
                image: image.clone(),
                method: method.to_string(),
                snr: achieved,
                rep_count: sel.len(),
                mean_mse,
                sd_mse,
                mean_psnr,
            });
        }
    }
    Ok(ResultTable {
        image,
        levels,
        rows,
        records,
    })
}
