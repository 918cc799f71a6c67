//! Unconditional Gaussian random fields at arbitrary locations.
//!
//! The covariance matrix over the observation points is built from a
//! semivariogram model and factored once; each draw is `L g` for a vector of
//! standard normals `g` from a seeded stream, standardized to mean 0 and
//! sample standard deviation 1.
//!
//! Normals come from a ChaCha20 stream keyed by `(master_seed, stream)` and
//! are produced by inverting the normal CDF on a 53-bit uniform, so a given
//! stream yields the same values regardless of which thread draws it.

use nalgebra::{Cholesky, DMatrix};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::covariogram::{
    covariogram_from_pairs, default_bins, select_bandwidth, BandwidthEstimate, BinnedPairs,
};
use crate::error::{Error, Result};
use crate::geo::PointSet;

pub const DEFAULT_MASTER_SEED: u64 = 1908;
pub const DEFAULT_MATERN_NU: f64 = 1.5;
pub const DEFAULT_PARTIAL_SILL: f64 = 0.025;
pub const DEFAULT_MAX_POINTS: usize = 12_000;

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Exponential,
    Gaussian,
    Matern { nu: f64 },
    Spherical,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Gaussian => "gaussian",
            Family::Matern { .. } => "matern",
            Family::Spherical => "spherical",
        }
    }

    /// Parses a family name; `nu` applies to Matérn only.
    pub fn parse(name: &str, nu: f64) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "exponential" | "exp" => Ok(Family::Exponential),
            "gaussian" | "gau" => Ok(Family::Gaussian),
            "matern" | "mat" => Ok(Family::Matern { nu }),
            "spherical" | "sph" => Ok(Family::Spherical),
            other => Err(Error::invalid(format!(
                "unknown semivariogram family `{other}` (expected exponential|gaussian|matern|spherical)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemivariogramModel {
    pub family: Family,
    pub partial_sill: f64,
    /// Range parameter in km.
    pub range: f64,
    pub nugget: f64,
}

impl SemivariogramModel {
    pub fn new(family: Family, partial_sill: f64, range: f64, nugget: f64) -> Result<Self> {
        let m = SemivariogramModel {
            family,
            partial_sill,
            range,
            nugget,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn matern(nu: f64, range: f64) -> Result<Self> {
        Self::new(Family::Matern { nu }, DEFAULT_PARTIAL_SILL, range, 0.0)
    }

    pub fn with_range(&self, range: f64) -> Result<Self> {
        Self::new(self.family, self.partial_sill, range, self.nugget)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.partial_sill > 0.0) || !self.partial_sill.is_finite() {
            return Err(Error::invalid(format!(
                "partial sill must be > 0, got {}",
                self.partial_sill
            )));
        }
        if !(self.range >= 0.0) || !self.range.is_finite() {
            return Err(Error::invalid(format!(
                "range must be >= 0, got {}",
                self.range
            )));
        }
        if !(self.nugget >= 0.0) || !self.nugget.is_finite() {
            return Err(Error::invalid(format!(
                "nugget must be >= 0, got {}",
                self.nugget
            )));
        }
        if let Family::Matern { nu } = self.family {
            if !(nu > 0.0) || !nu.is_finite() {
                return Err(Error::invalid(format!("Matern nu must be > 0, got {nu}")));
            }
        }
        Ok(())
    }

    /// Semivariogram `gamma(h)`, including the nugget jump for `h > 0`.
    pub fn semivariance(&self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        self.nugget + self.partial_sill * (1.0 - self.correlation(h))
    }

    /// `C(h) = C(0) - gamma(h)` with `C(0) = partial sill + nugget`.
    pub fn covariance(&self, h: f64) -> Result<f64> {
        self.validate()?;
        if !(h >= 0.0) {
            return Err(Error::invalid(format!("lag must be >= 0, got {h}")));
        }
        Ok(self.covariance_unchecked(h))
    }

    #[inline]
    fn covariance_unchecked(&self, h: f64) -> f64 {
        if h <= 0.0 {
            self.partial_sill + self.nugget
        } else {
            self.partial_sill * self.correlation(h)
        }
    }

    /// Correlation of the structured component at lag `h > 0`.
    fn correlation(&self, h: f64) -> f64 {
        if self.range == 0.0 {
            return 0.0;
        }
        let r = h / self.range;
        match self.family {
            Family::Exponential => (-r).exp(),
            Family::Gaussian => (-r * r).exp(),
            Family::Spherical => {
                if r >= 1.0 {
                    0.0
                } else {
                    1.0 - 1.5 * r + 0.5 * r * r * r
                }
            }
            Family::Matern { nu } => matern_correlation(nu, r),
        }
    }
}

/// `r^nu K_nu(r) / (2^(nu-1) Gamma(nu))`.
pub fn matern_correlation(nu: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 1.0;
    }
    if nu == 0.5 {
        return (-r).exp();
    }
    if nu == 1.5 {
        return (1.0 + r) * (-r).exp();
    }
    if nu == 2.5 {
        return (1.0 + r + r * r / 3.0) * (-r).exp();
    }
    let ln = nu * r.ln() + ln_bessel_k(nu, r) - (nu - 1.0) * std::f64::consts::LN_2 - ln_gamma(nu);
    ln.exp().min(1.0)
}

/// `ln K_nu(x)` for `x > 0` from `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt`.
///
/// The integrand is analytic and decays doubly exponentially, so the
/// trapezoid rule converges geometrically in the step size.
pub fn ln_bessel_k(nu: f64, x: f64) -> f64 {
    const STEP: f64 = 0.05;
    // Work with exp(x) K_nu(x) to avoid underflow at large x.
    let term = |t: f64| (-x * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    let mut sum = 0.5 * term(0.0);
    let mut k = 1usize;
    let mut prev = sum;
    loop {
        let t = k as f64 * STEP;
        let v = term(t);
        sum += v;
        if (v < prev && v <= 1e-18 * sum) || t > 60.0 {
            break;
        }
        prev = v;
        k += 1;
    }
    (sum * STEP).ln() - x
}

/// Key of an independent normal stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub master_seed: u64,
    pub stream: u64,
}

impl StreamId {
    pub fn new(master_seed: u64, stream: u64) -> Self {
        StreamId {
            master_seed,
            stream,
        }
    }
}

/// Standard normals by inverse CDF from a keyed ChaCha20 stream.
pub struct NormalStream {
    rng: ChaCha20Rng,
    normal: Normal,
}

impl NormalStream {
    pub fn new(id: StreamId) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(id.master_seed);
        rng.set_stream(id.stream);
        NormalStream {
            rng,
            normal: Normal::new(0.0, 1.0).expect("standard normal"),
        }
    }

    pub fn next_normal(&mut self) -> f64 {
        // Midpoint of a 53-bit grid keeps u strictly inside (0, 1).
        let u = ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        self.normal.inverse_cdf(u)
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.next_normal();
        }
    }
}

#[derive(Debug, Clone)]
pub struct FieldDraw {
    pub values: Vec<f64>,
    pub model: SemivariogramModel,
    pub seed: StreamId,
    pub standardized: bool,
}

#[derive(Debug, Clone)]
enum Factor {
    /// Uncorrelated field with this standard deviation.
    Diagonal(f64),
    Lower(DMatrix<f64>),
}

/// Factored covariance over a fixed point set, reusable across draws.
#[derive(Debug, Clone)]
pub struct FieldSimulator {
    model: SemivariogramModel,
    factor: Factor,
    n: usize,
    /// Diagonal jitter that made the factorization succeed.
    pub jitter: f64,
}

impl FieldSimulator {
    pub fn new(ps: &PointSet, model: SemivariogramModel) -> Result<Self> {
        Self::with_max_points(ps, model, DEFAULT_MAX_POINTS)
    }

    pub fn with_max_points(
        ps: &PointSet,
        model: SemivariogramModel,
        max_points: usize,
    ) -> Result<Self> {
        model.validate()?;
        let n = ps.len();
        if n > max_points {
            return Err(Error::invalid(format!(
                "{n} points exceeds the simulation limit of {max_points}"
            )));
        }
        if model.range == 0.0 {
            return Ok(FieldSimulator {
                model,
                factor: Factor::Diagonal((model.partial_sill + model.nugget).sqrt()),
                n,
                jitter: 0.0,
            });
        }
        let mut sigma = DMatrix::zeros(n, n);
        for j in 0..n {
            sigma[(j, j)] = model.covariance_unchecked(0.0);
            for i in (j + 1)..n {
                let c = model.covariance_unchecked(ps.dist(i, j));
                sigma[(i, j)] = c;
                sigma[(j, i)] = c;
            }
        }
        let mut rel = JITTER_START;
        loop {
            let jitter = rel * model.partial_sill;
            let mut m = sigma.clone();
            for k in 0..n {
                m[(k, k)] += jitter;
            }
            if let Some(ch) = Cholesky::new(m) {
                return Ok(FieldSimulator {
                    model,
                    factor: Factor::Lower(ch.unpack()),
                    n,
                    jitter,
                });
            }
            if rel >= JITTER_MAX {
                return Err(Error::NotPositiveDefinite { max_jitter: jitter });
            }
            rel *= 10.0;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn model(&self) -> &SemivariogramModel {
        &self.model
    }

    /// Correlated draw before standardization.
    pub fn draw_raw(&self, seed: StreamId) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        NormalStream::new(seed).fill(&mut g);
        match &self.factor {
            Factor::Diagonal(sd) => g.iter().map(|v| v * sd).collect(),
            Factor::Lower(l) => {
                let mut z = vec![0.0; self.n];
                for (j, &gj) in g.iter().enumerate() {
                    let col = l.column(j);
                    for i in j..self.n {
                        z[i] += col[i] * gj;
                    }
                }
                z
            }
        }
    }

    pub fn draw(&self, seed: StreamId) -> FieldDraw {
        let mut values = self.draw_raw(seed);
        standardize(&mut values);
        FieldDraw {
            values,
            model: self.model,
            seed,
            standardized: true,
        }
    }
}

/// Centre to mean 0 and scale to sample standard deviation 1.
pub fn standardize(values: &mut [f64]) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    for v in values.iter_mut() {
        *v -= mean;
    }
    let sd = (values.iter().map(|v| v * v).sum::<f64>() / (n - 1.0)).sqrt();
    if sd > 0.0 {
        for v in values.iter_mut() {
            *v /= sd;
        }
    }
}

pub fn draw_field(ps: &PointSet, model: SemivariogramModel, seed: StreamId) -> Result<FieldDraw> {
    Ok(FieldSimulator::new(ps, model)?.draw(seed))
}

/// Covariogram range of the raw field values under default bins.
pub fn empirical_range_check(fd: &FieldDraw, ps: &PointSet) -> Result<BandwidthEstimate> {
    let pairs = BinnedPairs::new(ps, default_bins(ps)?)?;
    range_from_pairs(&fd.values, &pairs)
}

pub fn range_from_pairs(values: &[f64], pairs: &BinnedPairs) -> Result<BandwidthEstimate> {
    select_bandwidth(&covariogram_from_pairs(values, pairs)?, 0.0)
}
