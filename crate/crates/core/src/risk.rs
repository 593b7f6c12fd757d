//! Standardized risk of one thresholded coefficient: exact cubature, closed
//! forms without signal, and a Monte Carlo oracle.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise_stats::riesz_variance_constants;
use crate::par;
use crate::quad::{integrate, QuadConfig};
use crate::rng::{derive_seed, rng_from_seed, standard_normal};
use crate::special::{dawson, gamma_ur, norm_cdf, norm_pdf, norm_sf};

/// Absolute accuracy demanded of [`risk`].
pub const RISK_TOL: f64 = 1e-4;

/// Thresholding rule as seen by a single coefficient. `R1` and `R2` are the
/// Riesz rule in the symmetric (`u = 1, 4`) and oriented (`u = 2, 3`)
/// subbands, which differ in how the quadrature variance is split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskMethod {
    C,
    A,
    R1,
    R2,
    H,
}

impl RiskMethod {
    pub const ALL: [RiskMethod; 5] = [
        RiskMethod::C,
        RiskMethod::A,
        RiskMethod::R1,
        RiskMethod::R2,
        RiskMethod::H,
    ];

    /// Length of the mean vector.
    pub fn dimension(self) -> usize {
        match self {
            RiskMethod::C => 1,
            RiskMethod::A => 2,
            RiskMethod::R1 | RiskMethod::R2 => 3,
            RiskMethod::H => 4,
        }
    }

    /// Universal threshold `lambda` (not squared) for `K` coefficients.
    pub fn universal_lambda(self, k: usize) -> Result<f64> {
        if k < 16 {
            return Err(Error::invalid(format!(
                "universal threshold needs K >= 16, got {k}"
            )));
        }
        let lk = (k as f64).ln();
        let l2 = match self {
            RiskMethod::H => 2.0 * lk + 2.0 * lk.ln(),
            _ => 2.0 * lk,
        };
        Ok(l2.sqrt())
    }
}

impl fmt::Display for RiskMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RiskMethod::C => "c",
            RiskMethod::A => "a",
            RiskMethod::R1 => "r1",
            RiskMethod::R2 => "r2",
            RiskMethod::H => "h",
        })
    }
}

impl FromStr for RiskMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "c" => Ok(RiskMethod::C),
            "a" => Ok(RiskMethod::A),
            "r1" => Ok(RiskMethod::R1),
            "r2" => Ok(RiskMethod::R2),
            "h" => Ok(RiskMethod::H),
            other => Err(Error::invalid(format!(
                "unknown risk method '{other}' (expected c, a, r1, r2 or h)"
            ))),
        }
    }
}

/// Mean vector and threshold, both in noise-standard-deviation units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskSpec {
    pub method: RiskMethod,
    pub theta: Vec<f64>,
    pub lambda: f64,
    /// Variance of the first quadrature component for `r2`; the second gets
    /// the complement. Ignored by the other methods.
    pub split: f64,
}

impl RiskSpec {
    pub fn new(method: RiskMethod, theta: Vec<f64>, lambda: f64) -> Result<Self> {
        let split = match method {
            RiskMethod::R2 => riesz_variance_constants().get(2),
            _ => 0.5,
        };
        let spec = RiskSpec {
            method,
            theta,
            lambda,
            split,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Override the `r2` variance split.
    pub fn with_split(mut self, a: f64) -> Result<Self> {
        self.split = a;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.theta.len() != self.method.dimension() {
            return Err(Error::invalid(format!(
                "method {} needs {} mean components, got {}",
                self.method,
                self.method.dimension(),
                self.theta.len()
            )));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("mean components must be finite"));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::invalid(format!("variance split must lie in (0, 1), got {}", self.split)));
        }
        Ok(())
    }

    /// Component standard deviations.
    pub fn scales(&self) -> Vec<f64> {
        match self.method {
            RiskMethod::C => vec![1.0],
            RiskMethod::A => vec![1.0, 1.0],
            RiskMethod::R1 => vec![1.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            RiskMethod::R2 => vec![1.0, self.split.sqrt(), (1.0 - self.split).sqrt()],
            RiskMethod::H => vec![1.0; 4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub value: f64,
    pub abs_err: f64,
}

/// `P(|theta + s Z| < rho)` for scalar `Z`, without cancellation in the tails.
fn interval_prob(rho: f64, theta: f64, s: f64) -> f64 {
    let hi = (rho - theta) / s;
    let lo = (-rho - theta) / s;
    let p = if lo > 0.0 {
        norm_sf(lo) - norm_sf(hi)
    } else {
        norm_cdf(hi) - norm_cdf(lo)
    };
    p.clamp(0.0, 1.0)
}

/// `P(|m + Z| < rho)` for a standard normal `Z` in three dimensions and `|m| = delta`.
fn ball3_prob(rho: f64, delta: f64) -> f64 {
    let base = interval_prob(rho, delta, 1.0);
    let corr = if delta < 1e-4 {
        2.0 * rho * norm_pdf(rho) * (1.0 + (rho * rho - 3.0) * delta * delta / 6.0)
    } else {
        (norm_pdf(rho - delta) - norm_pdf(rho + delta)) / delta
    };
    (base - corr).clamp(0.0, 1.0)
}

fn inner_config() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-11,
        rel_tol: 1e-12,
        max_intervals: 400,
    }
}

/// Probability that the trailing components stay inside radius `rho`, with
/// the quadrature error of that probability.
fn trailing_prob(spec: &RiskSpec, rho: f64) -> (f64, f64) {
    let t = &spec.theta;
    match spec.method {
        RiskMethod::C => (1.0, 0.0),
        RiskMethod::A => (interval_prob(rho, t[1], 1.0), 0.0),
        RiskMethod::H => {
            let delta = (t[1] * t[1] + t[2] * t[2] + t[3] * t[3]).sqrt();
            (ball3_prob(rho, delta), 0.0)
        }
        RiskMethod::R1 | RiskMethod::R2 => {
            if rho <= 0.0 {
                return (0.0, 0.0);
            }
            let s = spec.scales();
            let (s2, s3) = (s[1], s[2]);
            // x = rho sin(u) covers the chord of the disc smoothly
            let est = integrate(
                |u| {
                    let x = rho * u.sin();
                    let c = rho * u.cos();
                    norm_pdf((x - t[1]) / s2) / s2 * interval_prob(c, t[2], s3) * c
                },
                -FRAC_PI_2,
                FRAC_PI_2,
                &inner_config(),
            );
            (est.value.clamp(0.0, 1.0), est.abs_err)
        }
    }
}

/// `1 + int_{kill region} (theta_1^2 - w_1^2) * density`, evaluated by an
/// adaptive outer integral over the first component with the remaining
/// components integrated inside.
pub fn risk(spec: &RiskSpec) -> Result<RiskEstimate> {
    spec.validate()?;
    let lam = spec.lambda;
    if lam == 0.0 {
        return Ok(RiskEstimate {
            value: 1.0,
            abs_err: 0.0,
        });
    }
    let t1 = spec.theta[0];
    let mut inner_err: f64 = 0.0;
    let cfg = QuadConfig {
        abs_tol: 1e-9,
        rel_tol: 1e-12,
        max_intervals: 1000,
    };
    // v = lambda sin(t) is the observed first coefficient inside the ball
    let outer = integrate(
        |t| {
            let v = lam * t.sin();
            let rho = lam * t.cos();
            let w = v - t1;
            let (p, e) = trailing_prob(spec, rho);
            inner_err = inner_err.max(e);
            (t1 * t1 - w * w) * norm_pdf(w) * p * rho
        },
        -FRAC_PI_2,
        FRAC_PI_2,
        &cfg,
    );
    // |int (theta^2 - w^2) phi(w) dw| <= theta^2 + 1 bounds the inner-error leverage
    let abs_err = outer.abs_err + inner_err * (t1 * t1 + 1.0);
    let value = 1.0 + outer.value;
    if !value.is_finite() || abs_err > RISK_TOL {
        return Err(Error::Numerical(format!(
            "risk cubature for {} did not converge: value {value} with error estimate {abs_err:e}",
            spec.method
        )));
    }
    Ok(RiskEstimate { value, abs_err })
}

/// Closed-form risk with no signal present.
pub fn risk_zero(method: RiskMethod, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    let l2 = lambda * lambda;
    let e = (-0.5 * l2).exp();
    Ok(match method {
        // P(chi^2_3 > lambda^2); the pattern continues as chi^2_4 and chi^2_6 below
        RiskMethod::C => gamma_ur(1.5, 0.5 * l2),
        RiskMethod::A => e * (1.0 + 0.5 * l2),
        RiskMethod::H => e * (1.0 + 0.5 * l2 + l2 * l2 / 8.0),
        RiskMethod::R1 => {
            gamma_ur(0.5, 0.5 * l2)
                + 2.0 * norm_pdf(lambda) * (2.0 * lambda - SQRT_2 * dawson(lambda / SQRT_2))
        }
        RiskMethod::R2 => {
            return Err(Error::invalid(
                "no closed form for r2 without signal; evaluate it with risk()",
            ))
        }
    })
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
}

const MC_CHUNK: usize = 1 << 16;

/// Draw `W = theta + s Z`, keep `W_1` iff `|W|^2 >= lambda^2`, and average
/// the squared error of the first component.
pub fn risk_mc(spec: &RiskSpec, nsamples: usize, seed: u64) -> Result<McEstimate> {
    spec.validate()?;
    if nsamples < 10_000 {
        return Err(Error::invalid(format!(
            "risk_mc needs at least 10^4 samples, got {nsamples}"
        )));
    }
    let scales = spec.scales();
    let l2 = spec.lambda * spec.lambda;
    let chunks = nsamples.div_ceil(MC_CHUNK);
    let parts = par::map_indexed(chunks, |c| {
        let m = MC_CHUNK.min(nsamples - c * MC_CHUNK);
        let mut rng = rng_from_seed(derive_seed(seed, c as u64));
        let (mut s, mut ss) = (0.0, 0.0);
        for _ in 0..m {
            let mut e = 0.0;
            let mut w1 = 0.0;
            for (l, (&t, &sd)) in spec.theta.iter().zip(&scales).enumerate() {
                let w = t + sd * standard_normal(&mut rng);
                if l == 0 {
                    w1 = w;
                }
                e += w * w;
            }
            let est = if e >= l2 { w1 } else { 0.0 };
            let loss = (est - spec.theta[0]).powi(2);
            s += loss;
            ss += loss * loss;
        }
        (s, ss)
    });
    let (s, ss) = parts
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let m = nsamples as f64;
    let mean = s / m;
    let var = (ss - m * mean * mean) / (m - 1.0);
    Ok(McEstimate {
        value: mean,
        stderr: (var.max(0.0) / m).sqrt(),
    })
}

/// How `|theta|` is spread over the components in each of the
/// four standard comparison set-ups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Profile {
    /// Plain against analytic: `theta_1 = |theta| cos(pi/4)`, second component
    /// `|theta| sin(pi/4)`.
    Fig2a,
    /// Quadrature means matched to the observed mean.
    Fig2b,
    /// Quadrature means zero (Riesz) or half of them zero (hypercomplex).
    Fig2c,
    /// Energy tilted towards the quadrature components by `3 pi / 8`.
    Fig2d,
    /// `theta = |theta| * direction`.
    Custom(Vec<f64>),
}

impl Profile {
    pub fn name(&self) -> &'static str {
        match self {
            Profile::Fig2a => "fig2a",
            Profile::Fig2b => "fig2b",
            Profile::Fig2c => "fig2c",
            Profile::Fig2d => "fig2d",
            Profile::Custom(_) => "custom",
        }
    }

    pub fn parse(name: &str) -> Result<Profile> {
        match name.trim() {
            "fig2a" => Ok(Profile::Fig2a),
            "fig2b" => Ok(Profile::Fig2b),
            "fig2c" => Ok(Profile::Fig2c),
            "fig2d" => Ok(Profile::Fig2d),
            other => Err(Error::invalid(format!(
                "unknown profile '{other}' (expected fig2a, fig2b, fig2c, fig2d or custom)"
            ))),
        }
    }

    /// Mean vector for `method` at magnitude `abs`.
    pub fn theta(&self, method: RiskMethod, abs: f64) -> Result<Vec<f64>> {
        let r2 = SQRT_2;
        let t = abs;
        let (c8, s8) = ((3.0 * PI / 8.0).cos(), (3.0 * PI / 8.0).sin());
        let v = match (self, method) {
            (Profile::Custom(dir), _) => {
                if dir.len() != method.dimension() {
                    return Err(Error::invalid(format!(
                        "custom direction has {} components, method {} needs {}",
                        dir.len(),
                        method,
                        method.dimension()
                    )));
                }
                dir.iter().map(|d| d * t).collect()
            }
            (Profile::Fig2a, RiskMethod::C) => vec![t * FRAC_PI_4.cos()],
            (Profile::Fig2a, RiskMethod::A) => vec![t * FRAC_PI_4.cos(), t * FRAC_PI_4.sin()],
            (Profile::Fig2a, _) => {
                return Err(Error::invalid(format!(
                    "profile fig2a compares methods c and a only, not {method}"
                )))
            }
            (Profile::Fig2b, RiskMethod::C) => vec![t / r2],
            (Profile::Fig2b, RiskMethod::A) => vec![t / r2, t / r2],
            (Profile::Fig2b, RiskMethod::R1 | RiskMethod::R2) => vec![t / r2, t / 2.0, t / 2.0],
            (Profile::Fig2b, RiskMethod::H) => vec![t / r2; 4],
            (Profile::Fig2c, RiskMethod::C) => vec![t / r2],
            (Profile::Fig2c, RiskMethod::A) => vec![t / r2, 0.0],
            (Profile::Fig2c, RiskMethod::R1 | RiskMethod::R2) => vec![t / r2, 0.0, 0.0],
            (Profile::Fig2c, RiskMethod::H) => vec![t / r2, t / r2, 0.0, 0.0],
            (Profile::Fig2d, RiskMethod::C) => vec![t * c8],
            (Profile::Fig2d, RiskMethod::A) => vec![t * c8, t * s8],
            (Profile::Fig2d, RiskMethod::R1 | RiskMethod::R2) => {
                vec![t * c8, t * s8 / r2, t * s8 / r2]
            }
            (Profile::Fig2d, RiskMethod::H) => vec![t * c8, t * c8, t * s8, t * s8],
        };
        Ok(v)
    }
}

/// One evaluated point of a risk curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskPoint {
    pub method: String,
    pub profile: String,
    pub theta_abs: f64,
    pub lambda: f64,
    pub risk: f64,
    /// `closed`, `cubature` or `mc`.
    pub source: String,
    /// Cubature error estimate or Monte Carlo standard error.
    pub err: f64,
}

fn point(method: RiskMethod, profile: &Profile, abs: f64, lambda: f64, risk: f64, source: &str, err: f64) -> RiskPoint {
    RiskPoint {
        method: method.to_string(),
        profile: profile.name().to_string(),
        theta_abs: abs,
        lambda,
        risk,
        source: source.to_string(),
        err,
    }
}

/// Cubature risk over a grid of `|theta|` values.
pub fn risk_curve(method: RiskMethod, profile: &Profile, lambda: f64, grid: &[f64]) -> Result<Vec<RiskPoint>> {
    par::map_indexed(grid.len(), |i| {
        let abs = grid[i];
        let spec = RiskSpec::new(method, profile.theta(method, abs)?, lambda)?;
        let est = risk(&spec)?;
        Ok(point(method, profile, abs, lambda, est.value, "cubature", est.abs_err))
    })
    .into_iter()
    .collect()
}

/// Monte Carlo counterpart of [`risk_curve`]; grid point `i` uses sub-seed `i`.
pub fn risk_curve_mc(
    method: RiskMethod,
    profile: &Profile,
    lambda: f64,
    grid: &[f64],
    nsamples: usize,
    seed: u64,
) -> Result<Vec<RiskPoint>> {
    let mut out = Vec::with_capacity(grid.len());
    for (i, &abs) in grid.iter().enumerate() {
        let spec = RiskSpec::new(method, profile.theta(method, abs)?, lambda)?;
        let est = risk_mc(&spec, nsamples, derive_seed(seed, i as u64))?;
        out.push(point(method, profile, abs, lambda, est.value, "mc", est.stderr));
    }
    Ok(out)
}

/// Closed-form rows for the grid points at `|theta| = 0`.
pub fn risk_curve_closed(method: RiskMethod, profile: &Profile, lambda: f64, grid: &[f64]) -> Result<Vec<RiskPoint>> {
    if method == RiskMethod::R2 {
        return Ok(Vec::new());
    }
    let r0 = risk_zero(method, lambda)?;
    Ok(grid
        .iter()
        .filter(|&&a| a == 0.0)
        .map(|&a| point(method, profile, a, lambda, r0, "closed", 0.0))
        .collect())
}

pub fn write_risk_csv<W: Write>(points: &[RiskPoint], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for p in points {
        wr.serialize(p)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use crate::special::gamma_lr;
    use proptest::prelude::*;

    fn spec(m: RiskMethod, theta: Vec<f64>, l: f64) -> RiskSpec {
        RiskSpec::new(m, theta, l).unwrap()
    }

    fn zeros(m: RiskMethod) -> Vec<f64> {
        vec![0.0; m.dimension()]
    }

    #[test]
    fn zero_threshold_is_unit_risk() {
        for m in RiskMethod::ALL {
            let t: Vec<f64> = (0..m.dimension()).map(|i| 0.7 * i as f64 - 0.3).collect();
            assert_eq!(risk(&spec(m, t, 0.0)).unwrap().value, 1.0);
            if m != RiskMethod::R2 {
                assert_eq!(risk_zero(m, 0.0).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        // E[Z^2; |Z| >= 2] = 2 (2 phi(2) + 1 - Phi(2))
        let direct = 2.0 * (2.0 * norm_pdf(2.0) + norm_sf(2.0));
        assert!((risk_zero(RiskMethod::C, 2.0).unwrap() - direct).abs() < 1e-10);
        assert!((risk_zero(RiskMethod::C, 2.0).unwrap() - (1.0 - gamma_lr(1.5, 2.0))).abs() < 1e-12);
        let h = risk_zero(RiskMethod::H, 2f64.sqrt()).unwrap();
        assert!((h - (-1.0f64).exp() * 2.5).abs() < 1e-14);
        assert!((h - 0.9197).abs() < 1e-4);
        assert!(risk_zero(RiskMethod::R2, 1.0).is_err());
        assert!(risk_zero(RiskMethod::C, -1.0).is_err());
        // independent reference values for the symmetric Riesz subbands
        let r1 = [(0.5, 0.997_063_210_411_560_9), (1.0, 0.934_443_068_255_863_5), (2.0, 0.408_320_846_596_461_7), (3.0, 0.052_397_064_988_391_65)];
        for (l, want) in r1 {
            assert!((risk_zero(RiskMethod::R1, l).unwrap() - want).abs() < 1e-10, "lambda {l}");
        }
    }

    #[test]
    fn cubature_matches_closed_forms() {
        for m in [RiskMethod::C, RiskMethod::A, RiskMethod::R1, RiskMethod::H] {
            for l in [0.5, 1.0, 2.0, 3.0, 5.0] {
                let q = risk(&spec(m, zeros(m), l)).unwrap();
                let c = risk_zero(m, l).unwrap();
                assert!((q.value - c).abs() < 1e-6, "{m} lambda {l}: {} vs {c}", q.value);
            }
        }
    }

    #[test]
    fn ball3_matches_direct_integral() {
        for (rho, delta) in [(1.0, 0.0), (2.0, 0.5), (3.0, 2.5), (0.3, 4.0), (2.0, 5e-5)] {
            let direct = integrate(
                |x: f64| norm_pdf(x - delta) * (1.0 - (-(rho * rho - x * x) / 2.0).exp()),
                -rho,
                rho,
                &QuadConfig::with_tol(1e-14, 1e-13),
            );
            assert!((ball3_prob(rho, delta) - direct.value).abs() < 1e-9, "{rho} {delta}: {} vs {}", ball3_prob(rho, delta), direct.value);
        }
    }

    #[test]
    fn monte_carlo_agrees() {
        let cases = [
            (RiskMethod::C, vec![1.5]),
            (RiskMethod::A, vec![2.0, -1.0]),
            (RiskMethod::R1, vec![2.0, 1.0, 1.0]),
            (RiskMethod::R2, vec![1.0, 2.0, 0.0]),
            (RiskMethod::H, vec![2.5, 2.5, 0.5, 0.0]),
        ];
        for (i, (m, t)) in cases.into_iter().enumerate() {
            let s = spec(m, t, 3.0);
            let q = risk(&s).unwrap().value;
            let mc = risk_mc(&s, 200_000, i as u64).unwrap();
            assert!((q - mc.value).abs() < 3.5 * mc.stderr, "{m}: {q} vs {} ± {}", mc.value, mc.stderr);
        }
        let mc = risk_mc(&spec(RiskMethod::H, zeros(RiskMethod::H), 0.0), 50_000, 1).unwrap();
        assert!((mc.value - 1.0).abs() < 3.0 * mc.stderr);
        assert!(risk_mc(&spec(RiskMethod::C, vec![0.0], 1.0), 100, 0).is_err());
    }

    #[test]
    fn large_mean_regime() {
        let l = RiskMethod::C.universal_lambda(65536).unwrap();
        // theta = 5 sits just above lambda ~ 4.71, so the kill branch still carries weight
        let s = spec(RiskMethod::C, vec![5.0], l);
        let r = risk(&s).unwrap().value;
        let direct = 1.0 + integrate(
            |w: f64| (25.0 - w * w) * norm_pdf(w),
            -l - 5.0,
            l - 5.0,
            &QuadConfig::with_tol(1e-13, 1e-12),
        )
        .value;
        assert!((r - direct).abs() < 1e-8, "{r} vs {direct}");
        let mc = risk_mc(&s, 200_000, 17).unwrap();
        assert!((r - mc.value).abs() < 3.5 * mc.stderr);
        let r = risk(&spec(RiskMethod::C, vec![12.0], l)).unwrap().value;
        assert!((r - 1.0).abs() < 1e-6, "{r}");
    }

    #[test]
    fn huge_threshold_is_squared_bias() {
        for m in RiskMethod::ALL {
            for t1 in [0.0, 1.0, 3.0] {
                let mut t = zeros(m);
                t[0] = t1;
                let r = risk(&spec(m, t, 20.0)).unwrap().value;
                assert!((r - t1 * t1).abs() < 1e-3, "{m} {t1}: {r}");
            }
        }
    }

    #[test]
    fn asymptote_of_plain_rule() {
        let l = 6.0f64;
        let scaled = risk_zero(RiskMethod::C, l).unwrap() * (0.5 * l * l).exp();
        let lead = (2.0 / PI).sqrt() * l;
        assert!((scaled / lead - 1.0).abs() < 0.1);
    }

    #[test]
    fn profiles() {
        let t = Profile::Fig2b.theta(RiskMethod::R1, 2.0).unwrap();
        assert!((t[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!(((t[1] * t[1] + t[2] * t[2]).sqrt() - t[0]).abs() < 1e-15);
        assert_eq!(Profile::Fig2c.theta(RiskMethod::H, 2.0).unwrap()[2], 0.0);
        assert!(Profile::Fig2a.theta(RiskMethod::H, 1.0).is_err());
        assert!(Profile::Custom(vec![1.0]).theta(RiskMethod::A, 1.0).is_err());
        assert!(Profile::parse("fig9").is_err());
        for m in [RiskMethod::C, RiskMethod::A, RiskMethod::R1, RiskMethod::H] {
            let curve = risk_curve(m, &Profile::Fig2b, 2.0, &[0.0]).unwrap();
            assert!((curve[0].risk - risk_zero(m, 2.0).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn csv_schema() {
        let pts = risk_curve(RiskMethod::C, &Profile::Fig2b, 1.0, &[0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_risk_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("method,profile,theta_abs,lambda,risk,source,err\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn invalid_specs() {
        assert!(RiskSpec::new(RiskMethod::H, vec![0.0; 3], 1.0).is_err());
        assert!(RiskSpec::new(RiskMethod::C, vec![0.0], -1.0).is_err());
        assert!(RiskSpec::new(RiskMethod::R2, vec![0.0; 3], 1.0).unwrap().with_split(1.2).is_err());
        assert!("r3".parse::<RiskMethod>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn sign_flips_leave_risk_unchanged(
            t in proptest::collection::vec(-3.0f64..3.0, 4),
            flips in proptest::collection::vec(any::<bool>(), 4),
            l in 0.5f64..5.0,
            mi in 0usize..5,
        ) {
            let m = RiskMethod::ALL[mi];
            let d = m.dimension();
            let base: Vec<f64> = t[..d].to_vec();
            let flipped: Vec<f64> = base.iter().zip(&flips).map(|(v, &f)| if f { -v } else { *v }).collect();
            let a = risk(&spec(m, base, l)).unwrap().value;
            let b = risk(&spec(m, flipped, l)).unwrap().value;
            prop_assert!((a - b).abs() < 1e-6);
            prop_assert!(a >= 0.0);
        }
    }
}
