//! `shac`: spatial-HAC regression, covariograms, random fields and size experiments.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spatial_hac::covariogram::{
    default_bins, empirical_covariogram, select_bandwidth, BinSpec, Covariogram,
};
use spatial_hac::data::Table;
use spatial_hac::geo::{load_points, make_lattice, random_points, BBox, ColumnSpec, Crs, PointSet};
use spatial_hac::kernels::KernelKind;
use spatial_hac::mc::{default_bandwidth_grid, export_inverse_u, run_campaign, McCampaign};
use spatial_hac::moran::{build_weights, morans_i, WeightsScheme};
use spatial_hac::randfield::{
    Family, FieldSimulator, SemivariogramModel, StreamId, DEFAULT_MASTER_SEED, DEFAULT_MATERN_NU,
    DEFAULT_PARTIAL_SILL,
};
use spatial_hac::regress::{
    add_coordinate_controls, fit_ols, vcov_hc, Design, HcFlavor, RegressionFit,
};
use spatial_hac::shac::{vcov_shac, ShacSpec};
use spatial_hac::{Error, Result};

#[derive(Parser)]
#[command(
    name = "shac",
    version,
    about = "Conley spatial-HAC standard errors with covariogram-range bandwidths"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// OLS with HC1 and spatial-HAC standard errors side by side.
    Fit(FitArgs),
    /// Empirical residual covariogram and the selected bandwidth.
    Covariogram(CovariogramArgs),
    /// Simulate a standardized Gaussian random field.
    SimulateField(SimulateArgs),
    /// Global Moran's I of a column or of regression residuals.
    Moran(MoranArgs),
    /// Monte Carlo rejection-rate campaign.
    Mc(McArgs),
    /// Standard error of the slope as a function of the bandwidth for one simulated draw.
    InverseU(InverseUArgs),
}

#[derive(Args, Clone)]
struct Coords {
    /// Projected x coordinate column, in km.
    #[arg(long, requires = "coord_y", conflicts_with_all = ["lon", "lat"])]
    coord_x: Option<String>,
    /// Projected y coordinate column, in km.
    #[arg(long, requires = "coord_x")]
    coord_y: Option<String>,
    /// Longitude column, in degrees (great-circle distances).
    #[arg(long, requires = "lat")]
    lon: Option<String>,
    /// Latitude column, in degrees.
    #[arg(long, requires = "lon")]
    lat: Option<String>,
}

impl Coords {
    fn given(&self) -> bool {
        self.coord_x.is_some() || self.lon.is_some()
    }

    fn load(&self, table: &Table) -> Result<PointSet> {
        let (cols, crs) = match (&self.coord_x, &self.coord_y, &self.lon, &self.lat) {
            (Some(x), Some(y), _, _) => (ColumnSpec::new(x, y), Crs::ProjectedKm),
            (_, _, Some(lon), Some(lat)) => (ColumnSpec::new(lon, lat), Crs::LonLatDeg),
            _ => {
                return Err(input(
                    "coordinates required: --coord-x/--coord-y or --lon/--lat",
                ))
            }
        };
        load_points(table, &cols, crs)
    }
}

#[derive(Args, Clone)]
struct Model {
    /// Outcome column.
    #[arg(long)]
    outcome: Option<String>,
    /// Regressor columns, comma separated.
    #[arg(long, value_delimiter = ',')]
    regressors: Vec<String>,
    /// Fit without an intercept.
    #[arg(long)]
    no_intercept: bool,
    /// Add standardized coordinate polynomials of this degree (1 or 2) as controls.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    coord_controls: Option<u8>,
}

impl Model {
    fn fit(&self, table: &Table, ps: &PointSet) -> Result<RegressionFit> {
        let outcome = self
            .outcome
            .as_ref()
            .ok_or_else(|| input("--outcome is required"))?;
        let y = table.numeric_column(outcome)?;
        let regs = self
            .regressors
            .iter()
            .map(|r| Ok((r.clone(), table.numeric_column(r)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut d = Design::from_columns(y, regs, !self.no_intercept)?;
        if let Some(deg) = self.coord_controls {
            d = add_coordinate_controls(&d, ps, deg)?;
        }
        fit_ols(&d)
    }
}

#[derive(Args, Clone)]
struct Bins {
    /// Covariogram cutoff in km (default: two thirds of the sample diameter).
    #[arg(long, requires = "bins")]
    cutoff: Option<f64>,
    /// Number of covariogram bins (default 150).
    #[arg(long)]
    bins: Option<usize>,
    /// Covariance tolerance for the range selector; 0 selects the first sign crossing.
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
}

impl Bins {
    fn spec(&self, ps: &PointSet) -> Result<BinSpec> {
        let d = default_bins(ps)?;
        BinSpec::new(
            self.cutoff.unwrap_or(d.cutoff),
            self.bins.unwrap_or(d.n_bins),
        )
    }
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    coords: Coords,
    #[command(flatten)]
    model: Model,
    /// Kernel for the spatial-HAC column.
    #[arg(long, default_value = "epanechnikov")]
    kernel: KernelKind,
    /// Fixed bandwidth in km instead of the covariogram-range selection.
    #[arg(long)]
    bandwidth: Option<f64>,
    #[command(flatten)]
    bins: Bins,
}

#[derive(Args)]
struct CovariogramArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    coords: Coords,
    /// Precomputed residual column; otherwise residuals of --outcome on --regressors.
    #[arg(long, conflicts_with_all = ["outcome", "regressors"])]
    values: Option<String>,
    #[command(flatten)]
    model: Model,
    #[command(flatten)]
    bins: Bins,
    /// Write the covariogram CSV (h,chat,count) here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Sample {
    /// Simulate at the coordinates of this CSV instead of a generated sample.
    #[arg(long, conflicts_with_all = ["lattice", "random"])]
    input: Option<PathBuf>,
    #[command(flatten)]
    coords: Coords,
    /// Regular lattice with this cell size in km (the default sample is a 70 km lattice).
    #[arg(long, conflicts_with = "random")]
    lattice: Option<f64>,
    /// This many uniform random points.
    #[arg(long)]
    random: Option<usize>,
    /// Width of the generated sample's box, in km.
    #[arg(long, default_value_t = 2800.0)]
    width: f64,
    /// Height of the generated sample's box, in km.
    #[arg(long, default_value_t = 1750.0)]
    height: f64,
    /// Seed for --random point placement.
    #[arg(long, default_value_t = 7)]
    sample_seed: u64,
}

impl Sample {
    fn build(&self) -> Result<PointSet> {
        if let Some(path) = &self.input {
            return self.coords.load(&Table::from_path(path)?);
        }
        let bbox = BBox::sized(self.width, self.height)?;
        match self.random {
            Some(n) => random_points(n, bbox, self.sample_seed),
            None => make_lattice(self.lattice.unwrap_or(70.0), bbox),
        }
    }
}

#[derive(Args, Clone)]
struct FieldModel {
    /// Covariance family: matern | exponential | gaussian | spherical.
    #[arg(long, default_value = "matern")]
    family: String,
    /// Matérn smoothness.
    #[arg(long, default_value_t = DEFAULT_MATERN_NU)]
    nu: f64,
    /// Range parameter in km; 0 gives white noise.
    #[arg(long)]
    range: f64,
    /// Partial sill.
    #[arg(long, default_value_t = DEFAULT_PARTIAL_SILL)]
    sill: f64,
    /// Nugget variance.
    #[arg(long, default_value_t = 0.0)]
    nugget: f64,
}

impl FieldModel {
    fn build(&self) -> Result<SemivariogramModel> {
        SemivariogramModel::new(
            Family::parse(&self.family, self.nu)?,
            self.sill,
            self.range,
            self.nugget,
        )
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    sample: Sample,
    #[command(flatten)]
    model: FieldModel,
    /// Master seed.
    #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
    seed: u64,
    /// Stream number under the master seed.
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Output CSV (x,y,value); standard output if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MoranArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    coords: Coords,
    /// Column to test; otherwise residuals of --outcome on --regressors.
    #[arg(long, conflicts_with_all = ["outcome", "regressors"])]
    values: Option<String>,
    #[command(flatten)]
    model: Model,
    /// Distance-band weights with this radius in km.
    #[arg(long, conflicts_with = "knn")]
    band: Option<f64>,
    /// k-nearest-neighbour weights.
    #[arg(long)]
    knn: Option<usize>,
    /// Keep binary weights instead of row-normalizing.
    #[arg(long)]
    no_row_normalize: bool,
}

#[derive(Args)]
struct McArgs {
    /// Campaign TOML; the desk defaults are used if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Override the iterations per level.
    #[arg(long)]
    iters: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Per-iteration ledger CSV.
    #[arg(long)]
    ledger: Option<PathBuf>,
    /// Per-level summary CSV with rejection rates in percent.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct InverseUArgs {
    #[command(flatten)]
    sample: Sample,
    /// Covariance family: matern | exponential | gaussian | spherical.
    #[arg(long, default_value = "matern")]
    family: String,
    /// Matérn smoothness.
    #[arg(long, default_value_t = DEFAULT_MATERN_NU)]
    nu: f64,
    /// Range parameter in km.
    #[arg(long, default_value_t = 200.0)]
    range: f64,
    /// Kernel.
    #[arg(long, default_value = "epanechnikov")]
    kernel: KernelKind,
    /// Master seed.
    #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
    seed: u64,
    /// Draw number; uses streams 2 draw and 2 draw + 1.
    #[arg(long, default_value_t = 0)]
    draw: u64,
    /// Grid size from 0 to half the sample diameter.
    #[arg(long, default_value_t = 30)]
    points: usize,
    /// Output CSV (bandwidth,se,hc1_se); standard output if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn input(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

/// Formats with 6 significant digits, like C's `%g`.
fn g6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mant = trim_zeros(mant);
        return format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn residuals_or_values(
    table: &Table,
    ps: &PointSet,
    values: &Option<String>,
    model: &Model,
) -> Result<Vec<f64>> {
    match values {
        Some(col) => table.numeric_column(col),
        None => Ok(model.fit(table, ps)?.resid.as_slice().to_vec()),
    }
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let table = Table::from_path(&a.input)?;
    let ps = a.coords.load(&table)?;
    let fit = a.model.fit(&table, &ps)?;
    let hc1 = vcov_hc(&fit, HcFlavor::Hc1);
    let (bandwidth, how) = match a.bandwidth {
        Some(bw) => (bw, "fixed".to_string()),
        None => {
            let bins = a.bins.spec(&ps)?;
            let cg = empirical_covariogram(fit.resid.as_slice(), &ps, bins)?;
            let est = select_bandwidth(&cg, a.bins.eta)?;
            (est.varsigma_hat, format!("auto, {}", est.status.as_str()))
        }
    };
    let shac = vcov_shac(&fit, &ps, ShacSpec::new(a.kernel, bandwidth)?)?;

    let mut out = io::stdout().lock();
    let scale = fit.resid.iter().map(|e| e * e).sum::<f64>().sqrt();
    let ynorm = (&fit.resid + &fit.x * &fit.beta).norm();
    if scale <= 1e-12 * ynorm.max(f64::MIN_POSITIVE) {
        eprintln!("warning: degenerate fit, residuals are numerically zero; standard errors are not meaningful");
    }
    writeln!(out, "n = {}, p = {}, df = {}", fit.n(), fit.p(), fit.df)?;
    writeln!(
        out,
        "kernel = {}, bandwidth = {} km ({how})",
        a.kernel,
        g6(bandwidth)
    )?;
    writeln!(
        out,
        "{:<16} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "term", "estimate", "se_hc1", "t_hc1", "se_shac", "t_shac"
    )?;
    for k in 0..fit.p() {
        writeln!(
            out,
            "{:<16} {:>12} {:>12} {:>12} {:>12} {:>12}",
            fit.names[k],
            g6(fit.beta[k]),
            g6(hc1.se[k]),
            g6(hc1.tstat[k]),
            g6(shac.se[k]),
            g6(shac.tstat[k])
        )?;
    }
    for &k in &shac.negative_variance {
        eprintln!(
            "warning: negative spatial-HAC variance for `{}`; se reported as NaN",
            fit.names[k]
        );
    }
    Ok(())
}

fn cmd_covariogram(a: CovariogramArgs) -> Result<()> {
    let table = Table::from_path(&a.input)?;
    let ps = a.coords.load(&table)?;
    let values = residuals_or_values(&table, &ps, &a.values, &a.model)?;
    let bins = a.bins.spec(&ps)?;
    let cg: Covariogram = empirical_covariogram(&values, &ps, bins)?;
    let est = select_bandwidth(&cg, a.bins.eta)?;
    let mut w = output(&a.output)?;
    cg.write_csv(&mut w)?;
    w.flush()?;
    let line = format!(
        "bandwidth = {} km, status = {}, pairs = {}, cutoff = {} km, bins = {}",
        g6(est.varsigma_hat),
        est.status.as_str(),
        cg.n_pairs(),
        g6(bins.cutoff),
        bins.n_bins
    );
    if a.output.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let ps = a.sample.build()?;
    let sim = FieldSimulator::new(&ps, a.model.build()?)?;
    let fd = sim.draw(StreamId::new(a.seed, a.stream));
    let mut w = output(&a.output)?;
    writeln!(w, "x,y,value")?;
    for (c, v) in ps.coords().iter().zip(&fd.values) {
        writeln!(w, "{},{},{}", c[0], c[1], v)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_moran(a: MoranArgs) -> Result<()> {
    let table = Table::from_path(&a.input)?;
    let ps = a.coords.load(&table)?;
    let values = residuals_or_values(&table, &ps, &a.values, &a.model)?;
    let scheme = match (a.band, a.knn) {
        (Some(r), None) => WeightsScheme::DistanceBand(r),
        (None, Some(k)) => WeightsScheme::Knn(k),
        (None, None) => WeightsScheme::DistanceBand(200.0),
        _ => unreachable!("clap rejects --band with --knn"),
    };
    let w = build_weights(&ps, scheme, !a.no_row_normalize)?;
    if !w.isolates.is_empty() {
        eprintln!("warning: {} points have no neighbours", w.isolates.len());
    }
    let r = morans_i(&values, &w)?;
    println!("I = {}", g6(r.i));
    println!("E[I] = {}", g6(r.expected));
    println!("Var[I] = {}", g6(r.variance));
    println!("z = {}", g6(r.z));
    println!("p = {}", g6(r.p_value));
    Ok(())
}

fn cmd_mc(a: McArgs) -> Result<()> {
    let mut c = match &a.config {
        Some(p) => McCampaign::from_path(p)?,
        None => McCampaign::desk_default(),
    };
    if let Some(n) = a.iters {
        c.iters = n;
    }
    if let Some(s) = a.seed {
        c.master_seed = s;
    }
    if a.threads == 0 {
        return Err(input("--threads must be >= 1"));
    }
    c.validate()?;
    let res = run_campaign(&c, a.threads)?;
    if let Some(p) = &a.ledger {
        write_file(p, |w| res.write_ledger(w))?;
    }
    if let Some(p) = &a.summary {
        write_file(p, |w| res.write_summary(w))?;
    }
    println!(
        "n = {}, iterations per level = {}, master seed = {}",
        res.n_points, c.iters, c.master_seed
    );
    print!("{}", res.format_table());
    Ok(())
}

fn cmd_inverse_u(a: InverseUArgs) -> Result<()> {
    if a.points < 2 {
        return Err(input("--points must be >= 2"));
    }
    let ps = a.sample.build()?;
    let model = SemivariogramModel::new(
        Family::parse(&a.family, a.nu)?,
        DEFAULT_PARTIAL_SILL,
        a.range,
        0.0,
    )?;
    let grid = default_bandwidth_grid(&ps, a.points);
    let curve = export_inverse_u(&ps, model, a.seed, a.draw, a.kernel, &grid)?;
    let mut w = output(&a.output)?;
    curve.write_csv(&mut w)?;
    w.flush()?;
    let k = curve.argmax();
    let line = format!(
        "max se = {} at {} km; se at 0 = {}; se at {} km = {}; hc1 se = {}",
        g6(curve.se[k]),
        g6(curve.bandwidths[k]),
        g6(curve.se[0]),
        g6(*curve.bandwidths.last().unwrap()),
        g6(*curve.se.last().unwrap()),
        g6(curve.hc1_se)
    );
    if a.output.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Campaign(_) => 4,
        e if e.is_input_error() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Fit(a) => {
            if !a.coords.given() {
                Err(input(
                    "coordinates required: --coord-x/--coord-y or --lon/--lat",
                ))
            } else {
                cmd_fit(a)
            }
        }
        Command::Covariogram(a) => cmd_covariogram(a),
        Command::SimulateField(a) => cmd_simulate(a),
        Command::Moran(a) => cmd_moran(a),
        Command::Mc(a) => cmd_mc(a),
        Command::InverseU(a) => cmd_inverse_u(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
