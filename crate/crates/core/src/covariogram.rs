//! Empirical covariogram of residuals and the covariogram-range bandwidth.
//!
//! Pairs are binned on equal-width lags `[b w, (b+1) w)` with the last bin
//! closed at the cutoff. Each bin holds the mean of `e_i e_j` over its pairs.
//! The selected bandwidth is the centre of the first non-empty bin where the
//! covariogram reaches the tolerance (for `eta = 0`, where it turns
//! non-positive).

use std::io::Write;

use crate::error::{Error, Result};
use crate::geo::{neighbors_within, NeighborList, PointSet};
use crate::regress::RegressionFit;

pub const DEFAULT_N_BINS: usize = 150;
pub const DEFAULT_CUTOFF_FRACTION: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSpec {
    pub cutoff: f64,
    pub n_bins: usize,
}

impl BinSpec {
    pub fn new(cutoff: f64, n_bins: usize) -> Result<Self> {
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::invalid(format!(
                "bin cutoff must be positive, got {cutoff}"
            )));
        }
        if n_bins < 2 || n_bins > u16::MAX as usize {
            return Err(Error::invalid(format!(
                "n_bins must be in [2, 65535], got {n_bins}"
            )));
        }
        Ok(BinSpec { cutoff, n_bins })
    }

    pub fn width(&self) -> f64 {
        self.cutoff / self.n_bins as f64
    }

    pub fn center(&self, b: usize) -> f64 {
        (b as f64 + 0.5) * self.width()
    }

    /// Bin of a distance, or `None` beyond the cutoff.
    #[inline]
    pub fn index(&self, d: f64) -> Option<usize> {
        if d > self.cutoff {
            return None;
        }
        Some(((d / self.width()).floor() as usize).min(self.n_bins - 1))
    }
}

/// Two thirds of the largest pairwise distance, split into 150 bins.
pub fn default_bins(ps: &PointSet) -> Result<BinSpec> {
    let diameter = ps.diameter();
    if !(diameter > 0.0) {
        return Err(Error::invalid("all points coincide; no lag structure"));
    }
    BinSpec::new(DEFAULT_CUTOFF_FRACTION * diameter, DEFAULT_N_BINS)
}

/// Pair list with precomputed bin indices, reusable across residual vectors.
#[derive(Debug, Clone)]
pub struct BinnedPairs {
    pub bins: BinSpec,
    n: usize,
    entries: Vec<(u32, u32, u16)>,
}

impl BinnedPairs {
    pub fn new(ps: &PointSet, bins: BinSpec) -> Result<Self> {
        let nl = neighbors_within(ps, bins.cutoff)?;
        Self::from_neighbors(&nl, bins)
    }

    /// Uses pairs of an existing list; its radius must reach the cutoff.
    pub fn from_neighbors(nl: &NeighborList, bins: BinSpec) -> Result<Self> {
        if nl.radius < bins.cutoff {
            return Err(Error::invalid(format!(
                "neighbor radius {} is below the bin cutoff {}",
                nl.radius, bins.cutoff
            )));
        }
        let entries = nl
            .pairs
            .iter()
            .filter_map(|p| bins.index(p.d).map(|b| (p.i, p.j, b as u16)))
            .collect();
        Ok(BinnedPairs {
            bins,
            n: nl.n,
            entries,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_pairs(&self) -> usize {
        self.entries.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Covariogram {
    pub bins: BinSpec,
    pub centers: Vec<f64>,
    /// Mean cross-product per bin; `None` for bins without pairs.
    pub chat: Vec<Option<f64>>,
    pub counts: Vec<usize>,
    /// Mean of the squared values (lag zero).
    pub c0: f64,
}

impl Covariogram {
    pub fn n_pairs(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Writes `h,chat,count` rows; empty bins carry `NaN`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "h,chat,count")?;
        for ((h, c), n) in self.centers.iter().zip(&self.chat).zip(&self.counts) {
            match c {
                Some(v) => writeln!(w, "{h},{v},{n}")?,
                None => writeln!(w, "{h},NaN,{n}")?,
            }
        }
        Ok(())
    }
}

pub fn empirical_covariogram(values: &[f64], ps: &PointSet, bins: BinSpec) -> Result<Covariogram> {
    if values.len() != ps.len() {
        return Err(Error::invalid(format!(
            "{} values for {} points",
            values.len(),
            ps.len()
        )));
    }
    let pairs = BinnedPairs::new(ps, bins)?;
    covariogram_from_pairs(values, &pairs)
}

/// Bin means accumulated in `(i, j)` order.
pub fn covariogram_from_pairs(values: &[f64], pairs: &BinnedPairs) -> Result<Covariogram> {
    if values.len() != pairs.n {
        return Err(Error::invalid(format!(
            "{} values for {} points",
            values.len(),
            pairs.n
        )));
    }
    let nb = pairs.bins.n_bins;
    let mut sums = vec![0.0; nb];
    let mut counts = vec![0usize; nb];
    for &(i, j, b) in &pairs.entries {
        sums[b as usize] += values[i as usize] * values[j as usize];
        counts[b as usize] += 1;
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::InsufficientPairs(format!(
            "no pairs within the {} km cutoff",
            pairs.bins.cutoff
        )));
    }
    let chat = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
        .collect();
    let c0 = values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64;
    Ok(Covariogram {
        bins: pairs.bins,
        centers: (0..nb).map(|b| pairs.bins.center(b)).collect(),
        chat,
        counts,
        c0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionStatus {
    /// A later bin met the tolerance.
    Crossed,
    /// No bin met it; the cutoff is returned.
    NoCrossingCapped,
    /// The first non-empty bin already met it.
    Immediate,
}

impl SelectionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionStatus::Crossed => "crossed",
            SelectionStatus::NoCrossingCapped => "no_crossing_capped",
            SelectionStatus::Immediate => "immediate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthEstimate {
    pub varsigma_hat: f64,
    pub bin_index: Option<usize>,
    pub eta: f64,
    pub status: SelectionStatus,
}

/// First non-empty bin with `|chat| <= eta`, or `chat <= 0` when `eta == 0`.
pub fn select_bandwidth(cg: &Covariogram, eta: f64) -> Result<BandwidthEstimate> {
    if !(eta >= 0.0) {
        return Err(Error::invalid(format!("eta must be >= 0, got {eta}")));
    }
    let mut seen_nonempty = false;
    for (b, c) in cg.chat.iter().enumerate() {
        let Some(c) = *c else { continue };
        let hit = if eta == 0.0 { c <= 0.0 } else { c.abs() <= eta };
        if hit {
            let status = if seen_nonempty {
                SelectionStatus::Crossed
            } else {
                SelectionStatus::Immediate
            };
            return Ok(BandwidthEstimate {
                varsigma_hat: cg.centers[b],
                bin_index: Some(b),
                eta,
                status,
            });
        }
        seen_nonempty = true;
    }
    if !seen_nonempty {
        return Err(Error::InsufficientPairs(
            "covariogram has no non-empty bins".into(),
        ));
    }
    Ok(BandwidthEstimate {
        varsigma_hat: cg.bins.cutoff,
        bin_index: None,
        eta,
        status: SelectionStatus::NoCrossingCapped,
    })
}

/// Covariogram of the fit's residuals followed by range selection.
pub fn select_bandwidth_for_fit(
    fit: &RegressionFit,
    ps: &PointSet,
    bins: Option<BinSpec>,
    eta: Option<f64>,
) -> Result<BandwidthEstimate> {
    let bins = match bins {
        Some(b) => b,
        None => default_bins(ps)?,
    };
    let cg = empirical_covariogram(fit.resid.as_slice(), ps, bins)?;
    select_bandwidth(&cg, eta.unwrap_or(0.0))
}
