//! Monte Carlo size experiments.
//!
//! Each iteration draws two independent standardized fields with the same
//! covariance model, regresses the first on the second (so the true slope is
//! zero), and records the slope t-statistic under every configured variance
//! estimator. Iteration `k` uses normal streams `2k` (outcome) and `2k + 1`
//! (regressor) of the master seed at every range level, so results do not
//! depend on scheduling and levels share common random numbers.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Deserialize;

use crate::covariogram::{
    covariogram_from_pairs, default_bins, select_bandwidth, BinSpec, BinnedPairs, SelectionStatus,
};
use crate::data::Table;
use crate::error::{Error, Result};
use crate::geo::{
    load_points, make_lattice, neighbors_within, random_points, BBox, ColumnSpec, Crs,
    NeighborList, PointSet,
};
use crate::kernels::KernelKind;
use crate::randfield::{
    range_from_pairs, Family, FieldSimulator, SemivariogramModel, StreamId, DEFAULT_MASTER_SEED,
    DEFAULT_MATERN_NU, DEFAULT_PARTIAL_SILL,
};
use crate::regress::{fit_ols, vcov_hc, Design, HcFlavor, RegressionFit};
use crate::shac::{se_curve, vcov_shac_from_pairs, ShacSpec};

/// Two-sided 5% critical value.
pub const CRITICAL_VALUE: f64 = 1.96;
pub const DEFAULT_ITERS: usize = 500;
/// Largest tolerated share of failed iterations per level.
pub const MAX_FAILURE_RATE: f64 = 0.01;
const SLOPE: usize = 1;

/// Default range levels: Matérn range 0 to 150 km in 16 steps.
///
/// On the desk lattice this takes the realized covariogram range from about
/// 100 km (no correlation) to about 600 km (extreme correlation).
pub fn default_range_levels() -> Vec<f64> {
    (0..16).map(|k| 10.0 * k as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleSpec {
    Lattice {
        cell_km: f64,
        bbox: BBox,
    },
    Random {
        n: usize,
        bbox: BBox,
        seed: u64,
    },
    File {
        path: PathBuf,
        columns: ColumnSpec,
        crs: Crs,
    },
}

impl SampleSpec {
    /// 40 x 25 lattice of 70 km cells (n = 1,000).
    pub fn desk_lattice() -> Self {
        SampleSpec::Lattice {
            cell_km: 70.0,
            bbox: BBox {
                xmin: 0.0,
                ymin: 0.0,
                xmax: 2800.0,
                ymax: 1750.0,
            },
        }
    }

    pub fn build(&self) -> Result<PointSet> {
        match self {
            SampleSpec::Lattice { cell_km, bbox } => make_lattice(*cell_km, *bbox),
            SampleSpec::Random { n, bbox, seed } => random_points(*n, *bbox, *seed),
            SampleSpec::File { path, columns, crs } => {
                load_points(&Table::from_path(path)?, columns, *crs)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorSpec {
    Hc0,
    Hc1,
    /// SHAC at the covariogram-range bandwidth.
    ShacAuto(KernelKind),
    /// SHAC at a fixed bandwidth in km.
    ShacFixed(KernelKind, f64),
}

impl EstimatorSpec {
    /// Column label used in reports.
    pub fn label(&self) -> String {
        match self {
            EstimatorSpec::Hc0 => "hc0".into(),
            EstimatorSpec::Hc1 => "hc1".into(),
            EstimatorSpec::ShacAuto(k) => format!("auto_{k}"),
            EstimatorSpec::ShacFixed(k, bw) => format!("fixed_{k}_{bw}"),
        }
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorSpec::Hc0 => f.write_str("hc0"),
            EstimatorSpec::Hc1 => f.write_str("hc1"),
            EstimatorSpec::ShacAuto(k) => write!(f, "auto:{k}"),
            EstimatorSpec::ShacFixed(k, bw) => write!(f, "fixed:{k}:{bw}"),
        }
    }
}

impl FromStr for EstimatorSpec {
    type Err = Error;

    /// `hc0`, `hc1`, `auto:<kernel>` or `fixed:<kernel>:<km>`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["hc0"] => Ok(EstimatorSpec::Hc0),
            ["hc1"] => Ok(EstimatorSpec::Hc1),
            ["auto", k] => Ok(EstimatorSpec::ShacAuto(k.parse()?)),
            ["fixed", k, bw] => {
                let bw: f64 = bw.parse().map_err(|_| {
                    Error::invalid(format!("bad bandwidth `{bw}` in estimator `{s}`"))
                })?;
                if !(bw > 0.0) || !bw.is_finite() {
                    return Err(Error::invalid(format!(
                        "fixed bandwidth must be positive in `{s}`"
                    )));
                }
                Ok(EstimatorSpec::ShacFixed(k.parse()?, bw))
            }
            _ => Err(Error::invalid(format!(
                "unknown estimator `{s}` (expected hc0 | hc1 | auto:<kernel> | fixed:<kernel>:<km>)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McCampaign {
    pub sample: SampleSpec,
    /// Base model; its range is replaced by each level.
    pub model: SemivariogramModel,
    pub range_levels: Vec<f64>,
    pub iters: usize,
    pub estimators: Vec<EstimatorSpec>,
    pub master_seed: u64,
    pub bins: Option<BinSpec>,
    pub eta: f64,
}

impl McCampaign {
    pub fn desk_default() -> Self {
        McCampaign {
            sample: SampleSpec::desk_lattice(),
            model: SemivariogramModel {
                family: Family::Matern {
                    nu: DEFAULT_MATERN_NU,
                },
                partial_sill: DEFAULT_PARTIAL_SILL,
                range: 0.0,
                nugget: 0.0,
            },
            range_levels: default_range_levels(),
            iters: DEFAULT_ITERS,
            estimators: vec![
                EstimatorSpec::Hc1,
                EstimatorSpec::ShacFixed(KernelKind::Epanechnikov, 25.0),
                EstimatorSpec::ShacFixed(KernelKind::Epanechnikov, 2500.0),
                EstimatorSpec::ShacAuto(KernelKind::Bartlett),
                EstimatorSpec::ShacAuto(KernelKind::Uniform),
                EstimatorSpec::ShacAuto(KernelKind::Epanechnikov),
            ],
            master_seed: DEFAULT_MASTER_SEED,
            bins: None,
            eta: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iters == 0 {
            return Err(Error::invalid("iters must be >= 1"));
        }
        if self.range_levels.is_empty() {
            return Err(Error::invalid("range_levels must not be empty"));
        }
        if self.estimators.is_empty() {
            return Err(Error::invalid("at least one estimator is required"));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::invalid("eta must be >= 0"));
        }
        for &r in &self.range_levels {
            self.model.with_range(r)?;
        }
        Ok(())
    }

    /// Parses the TOML campaign file.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let raw: RawCampaign =
            toml::from_str(s).map_err(|e| Error::invalid(format!("campaign config: {e}")))?;
        raw.into_campaign(None)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        let raw: RawCampaign =
            toml::from_str(&s).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        raw.into_campaign(path.parent())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCampaign {
    master_seed: Option<u64>,
    iters: Option<usize>,
    range_levels: Option<Vec<f64>>,
    estimators: Option<Vec<String>>,
    eta: Option<f64>,
    sample: Option<RawSample>,
    model: Option<RawModel>,
    bins: Option<RawBins>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSample {
    kind: String,
    cell_km: Option<f64>,
    bbox: Option<[f64; 4]>,
    n: Option<usize>,
    seed: Option<u64>,
    path: Option<PathBuf>,
    x: Option<String>,
    y: Option<String>,
    crs: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    family: Option<String>,
    nu: Option<f64>,
    partial_sill: Option<f64>,
    nugget: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBins {
    cutoff: f64,
    n_bins: usize,
}

fn parse_crs(s: &str) -> Result<Crs> {
    match s.to_ascii_lowercase().as_str() {
        "projected" | "km" => Ok(Crs::ProjectedKm),
        "lonlat" | "degrees" => Ok(Crs::LonLatDeg),
        other => Err(Error::invalid(format!(
            "unknown crs `{other}` (expected projected|lonlat)"
        ))),
    }
}

impl RawCampaign {
    fn into_campaign(self, base_dir: Option<&Path>) -> Result<McCampaign> {
        let mut c = McCampaign::desk_default();
        if let Some(v) = self.master_seed {
            c.master_seed = v;
        }
        if let Some(v) = self.iters {
            c.iters = v;
        }
        if let Some(v) = self.range_levels {
            c.range_levels = v;
        }
        if let Some(v) = self.estimators {
            c.estimators = v.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        if let Some(v) = self.eta {
            c.eta = v;
        }
        if let Some(s) = self.sample {
            let bbox = match s.bbox {
                Some([a, b, cc, d]) => Some(BBox::new(a, b, cc, d)?),
                None => None,
            };
            c.sample = match s.kind.as_str() {
                "lattice" => SampleSpec::Lattice {
                    cell_km: s.cell_km.unwrap_or(70.0),
                    bbox: bbox.unwrap_or(BBox {
                        xmin: 0.0,
                        ymin: 0.0,
                        xmax: 2800.0,
                        ymax: 1750.0,
                    }),
                },
                "random" => SampleSpec::Random {
                    n: s.n
                        .ok_or_else(|| Error::invalid("random sample needs `n`"))?,
                    bbox: bbox.unwrap_or_else(BBox::contiguous_us),
                    seed: s.seed.unwrap_or(c.master_seed),
                },
                "file" => {
                    let path = s
                        .path
                        .ok_or_else(|| Error::invalid("file sample needs `path`"))?;
                    let path = match base_dir {
                        Some(dir) if path.is_relative() => dir.join(path),
                        _ => path,
                    };
                    SampleSpec::File {
                        path,
                        columns: ColumnSpec::new(
                            s.x.unwrap_or_else(|| "x".into()),
                            s.y.unwrap_or_else(|| "y".into()),
                        ),
                        crs: parse_crs(s.crs.as_deref().unwrap_or("projected"))?,
                    }
                }
                other => {
                    return Err(Error::invalid(format!(
                        "unknown sample kind `{other}` (expected lattice|random|file)"
                    )))
                }
            };
        }
        if let Some(m) = self.model {
            let nu = m.nu.unwrap_or(DEFAULT_MATERN_NU);
            c.model = SemivariogramModel {
                family: Family::parse(m.family.as_deref().unwrap_or("matern"), nu)?,
                partial_sill: m.partial_sill.unwrap_or(DEFAULT_PARTIAL_SILL),
                range: 0.0,
                nugget: m.nugget.unwrap_or(0.0),
            };
        }
        if let Some(b) = self.bins {
            c.bins = Some(BinSpec::new(b.cutoff, b.n_bins)?);
        }
        c.validate()?;
        Ok(c)
    }
}

/// Point set with pair lists shared by all iterations of a campaign.
pub struct McContext {
    pub ps: PointSet,
    pub estimators: Vec<EstimatorSpec>,
    pub eta: f64,
    neighbors: NeighborList,
    binned: BinnedPairs,
}

impl McContext {
    pub fn new(
        ps: PointSet,
        estimators: Vec<EstimatorSpec>,
        bins: Option<BinSpec>,
        eta: f64,
    ) -> Result<Self> {
        let bins = match bins {
            Some(b) => b,
            None => default_bins(&ps)?,
        };
        let radius = estimators
            .iter()
            .filter_map(|e| match e {
                EstimatorSpec::ShacFixed(_, bw) => Some(*bw),
                _ => None,
            })
            .fold(bins.cutoff, f64::max);
        let neighbors = neighbors_within(&ps, radius)?;
        let binned = BinnedPairs::from_neighbors(&neighbors, bins)?;
        Ok(McContext {
            ps,
            estimators,
            eta,
            neighbors,
            binned,
        })
    }

    pub fn bins(&self) -> BinSpec {
        self.binned.bins
    }
}

/// Outcome of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Covariogram range of the outcome field.
    pub realized_range: f64,
    /// Selected bandwidth when an automatic estimator is configured.
    pub bandwidth: Option<f64>,
    pub bandwidth_status: Option<SelectionStatus>,
    /// Slope t-statistic per estimator, in campaign order.
    pub tstats: Vec<f64>,
}

fn slope_design(y: Vec<f64>, x: Vec<f64>) -> Result<Design> {
    Design::from_columns(y, vec![("x".into(), x)], true)
}

/// One draw pair and the estimator battery.
pub fn run_iteration(
    ctx: &McContext,
    sim: &FieldSimulator,
    master_seed: u64,
    k: usize,
) -> Result<IterationRecord> {
    let y = sim.draw(StreamId::new(master_seed, 2 * k as u64));
    let x = sim.draw(StreamId::new(master_seed, 2 * k as u64 + 1));
    let realized_range = range_from_pairs(&y.values, &ctx.binned)?.varsigma_hat;
    let fit = fit_ols(&slope_design(y.values, x.values)?)?;
    let (tstats, bw) = estimator_tstats(ctx, &fit)?;
    Ok(IterationRecord {
        iteration: k,
        realized_range,
        bandwidth: bw.map(|b| b.0),
        bandwidth_status: bw.map(|b| b.1),
        tstats,
    })
}

/// Selected bandwidth and how it was reached.
type AutoBandwidth = (f64, SelectionStatus);

fn estimator_tstats(
    ctx: &McContext,
    fit: &RegressionFit,
) -> Result<(Vec<f64>, Option<AutoBandwidth>)> {
    let needs_auto = ctx
        .estimators
        .iter()
        .any(|e| matches!(e, EstimatorSpec::ShacAuto(_)));
    let auto = if needs_auto {
        let cg = covariogram_from_pairs(fit.resid.as_slice(), &ctx.binned)?;
        let est = select_bandwidth(&cg, ctx.eta)?;
        Some((est.varsigma_hat, est.status))
    } else {
        None
    };
    let mut out = Vec::with_capacity(ctx.estimators.len());
    for e in &ctx.estimators {
        let v = match *e {
            EstimatorSpec::Hc0 => vcov_hc(fit, HcFlavor::Hc0),
            EstimatorSpec::Hc1 => vcov_hc(fit, HcFlavor::Hc1),
            EstimatorSpec::ShacAuto(kernel) => {
                let bw = auto.expect("auto bandwidth computed").0;
                vcov_shac_from_pairs(fit, &ctx.neighbors, ShacSpec::new(kernel, bw)?)?
            }
            EstimatorSpec::ShacFixed(kernel, bw) => {
                vcov_shac_from_pairs(fit, &ctx.neighbors, ShacSpec::new(kernel, bw)?)?
            }
        };
        out.push(v.tstat[SLOPE]);
    }
    Ok((out, auto))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub level: usize,
    pub range: f64,
    /// Successful iterations in iteration order.
    pub records: Vec<IterationRecord>,
    pub failed: usize,
    /// Rejection frequency per estimator, as a fraction.
    pub rates: Vec<f64>,
    pub mean_realized_range: f64,
    pub mean_bandwidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub estimators: Vec<EstimatorSpec>,
    pub levels: Vec<LevelResult>,
    pub n_points: usize,
}

fn rejection_rate(records: &[IterationRecord], idx: usize) -> f64 {
    let hits = records
        .iter()
        .filter(|r| r.tstats[idx].abs() > CRITICAL_VALUE)
        .count();
    hits as f64 / records.len() as f64
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    s / n as f64
}

/// Runs every level, `iters` iterations each, on a pool of `threads` workers.
pub fn run_campaign(c: &McCampaign, threads: usize) -> Result<McResult> {
    c.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Campaign(format!("thread pool: {e}")))?;
    pool.install(|| run_campaign_inner(c))
}

fn run_campaign_inner(c: &McCampaign) -> Result<McResult> {
    let ps = c.sample.build()?;
    let ctx = McContext::new(ps, c.estimators.clone(), c.bins, c.eta)?;
    let mut levels = Vec::with_capacity(c.range_levels.len());
    for (level, &range) in c.range_levels.iter().enumerate() {
        let model = c.model.with_range(range)?;
        let outcomes: Vec<Result<IterationRecord>> = match FieldSimulator::new(&ctx.ps, model) {
            Ok(sim) => (0..c.iters)
                .into_par_iter()
                .map(|k| run_iteration(&ctx, &sim, c.master_seed, k))
                .collect(),
            Err(e) => {
                return Err(Error::Campaign(format!(
                    "level {level} (range {range} km): {e}"
                )));
            }
        };
        let failed = outcomes.iter().filter(|o| o.is_err()).count();
        if failed as f64 > MAX_FAILURE_RATE * c.iters as f64 || failed == c.iters {
            let first = outcomes
                .into_iter()
                .find_map(|o| o.err())
                .expect("a failure");
            return Err(Error::Campaign(format!(
                "level {level} (range {range} km): {failed} of {} iterations failed; first error: {first}",
                c.iters
            )));
        }
        let records: Vec<IterationRecord> = outcomes.into_iter().filter_map(|o| o.ok()).collect();
        let rates = (0..c.estimators.len())
            .map(|e| rejection_rate(&records, e))
            .collect();
        let mean_realized_range = mean(records.iter().map(|r| r.realized_range));
        let mean_bandwidth = records
            .first()
            .and_then(|r| r.bandwidth)
            .map(|_| mean(records.iter().filter_map(|r| r.bandwidth)));
        levels.push(LevelResult {
            level,
            range,
            records,
            failed,
            rates,
            mean_realized_range,
            mean_bandwidth,
        });
    }
    Ok(McResult {
        estimators: c.estimators.clone(),
        levels,
        n_points: ctx.ps.len(),
    })
}

impl McResult {
    pub fn rate(&self, level: usize, estimator: &EstimatorSpec) -> Option<f64> {
        let idx = self.estimators.iter().position(|e| e == estimator)?;
        self.levels.get(level).map(|l| l.rates[idx])
    }

    /// One row per iteration: level, range, iteration, ranges, bandwidth, t-statistics.
    pub fn write_ledger<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(
            w,
            "level,range_param,iteration,realized_range,bandwidth,bandwidth_status"
        )?;
        for e in &self.estimators {
            write!(w, ",t_{}", e.label())?;
        }
        writeln!(w)?;
        for l in &self.levels {
            for r in &l.records {
                write!(
                    w,
                    "{},{},{},{},",
                    l.level, l.range, r.iteration, r.realized_range
                )?;
                match (r.bandwidth, r.bandwidth_status) {
                    (Some(b), Some(s)) => write!(w, "{b},{}", s.as_str())?,
                    _ => write!(w, ",")?,
                }
                for t in &r.tstats {
                    write!(w, ",{t}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// One row per level with rejection frequencies in percent.
    pub fn write_summary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(
            w,
            "level,range_param,iterations,failed,mean_realized_range,mean_bandwidth"
        )?;
        for e in &self.estimators {
            write!(w, ",rate_{}", e.label())?;
        }
        writeln!(w)?;
        for l in &self.levels {
            write!(
                w,
                "{},{},{},{},{},",
                l.level,
                l.range,
                l.records.len(),
                l.failed,
                l.mean_realized_range
            )?;
            if let Some(b) = l.mean_bandwidth {
                write!(w, "{b}")?;
            }
            for r in &l.rates {
                write!(w, ",{}", 100.0 * r)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Plain-text table of rejection rates in percent, one row per level.
    pub fn format_table(&self) -> String {
        let mut s = format!("{:>5} {:>10} {:>10}", "level", "range_km", "realized");
        for e in &self.estimators {
            s.push_str(&format!(" {:>14}", e.label()));
        }
        s.push('\n');
        for l in &self.levels {
            s.push_str(&format!(
                "{:>5} {:>10.1} {:>10.1}",
                l.level, l.range, l.mean_realized_range
            ));
            for r in &l.rates {
                s.push_str(&format!(" {:>14.1}", 100.0 * r));
            }
            s.push('\n');
        }
        s
    }
}

/// SE-versus-bandwidth curve for a single seeded draw pair.
#[derive(Debug, Clone)]
pub struct InverseUCurve {
    pub bandwidths: Vec<f64>,
    /// Slope SE at each bandwidth; NaN where the variance was negative.
    pub se: Vec<f64>,
    pub hc0_se: f64,
    pub hc1_se: f64,
}

impl InverseUCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bandwidth,se,hc1_se")?;
        for (b, s) in self.bandwidths.iter().zip(&self.se) {
            writeln!(w, "{b},{s},{}", self.hc1_se)?;
        }
        Ok(())
    }

    /// Index of the largest SE.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, s) in self.se.iter().enumerate() {
            if *s > self.se[best] {
                best = k;
            }
        }
        best
    }
}

/// `n` evenly spaced bandwidths from 0 to half the sample diameter.
pub fn default_bandwidth_grid(ps: &PointSet, n: usize) -> Vec<f64> {
    let top = 0.5 * ps.diameter();
    (0..n)
        .map(|k| top * k as f64 / (n - 1).max(1) as f64)
        .collect()
}

/// Draws field pair `draw` (streams `2 draw`, `2 draw + 1`), fits, and traces the SE curve.
pub fn export_inverse_u(
    ps: &PointSet,
    model: SemivariogramModel,
    master_seed: u64,
    draw: u64,
    kernel: KernelKind,
    bandwidths: &[f64],
) -> Result<InverseUCurve> {
    let sim = FieldSimulator::new(ps, model)?;
    inverse_u_with(&sim, ps, master_seed, draw, kernel, bandwidths)
}

/// As [`export_inverse_u`] with an already factored simulator.
pub fn inverse_u_with(
    sim: &FieldSimulator,
    ps: &PointSet,
    master_seed: u64,
    draw: u64,
    kernel: KernelKind,
    bandwidths: &[f64],
) -> Result<InverseUCurve> {
    let y = sim.draw(StreamId::new(master_seed, 2 * draw));
    let x = sim.draw(StreamId::new(master_seed, 2 * draw + 1));
    let fit = fit_ols(&slope_design(y.values, x.values)?)?;
    let curve = se_curve(&fit, ps, kernel, bandwidths)?;
    Ok(InverseUCurve {
        bandwidths: bandwidths.to_vec(),
        se: curve.iter().map(|c| c.se[SLOPE]).collect(),
        hc0_se: vcov_hc(&fit, HcFlavor::Hc0).se[SLOPE],
        hc1_se: vcov_hc(&fit, HcFlavor::Hc1).se[SLOPE],
    })
}
