//! OLS and heteroskedasticity-robust (HC0/HC1) variance estimators.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geo::PointSet;
use crate::kernels::KernelKind;

/// Singular values below this fraction of the largest mark rank deficiency.
pub const RANK_TOL: f64 = 1e-10;

/// Regressors, outcome and column labels.
#[derive(Debug, Clone)]
pub struct Design {
    x: DMatrix<f64>,
    y: DVector<f64>,
    names: Vec<String>,
}

impl Design {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, names: Vec<String>) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(Error::invalid(format!(
                "y has {} rows but X has {n}",
                y.len()
            )));
        }
        if names.len() != p {
            return Err(Error::invalid(format!(
                "{} names for {p} columns",
                names.len()
            )));
        }
        if p == 0 {
            return Err(Error::invalid("design has no columns"));
        }
        if n <= p {
            return Err(Error::invalid(format!("need n > p, got n = {n}, p = {p}")));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("design contains non-finite values"));
        }
        Ok(Design { x, y, names })
    }

    /// Builds a design from named regressor columns, optionally prepending an intercept.
    pub fn from_columns(
        y: Vec<f64>,
        regressors: Vec<(String, Vec<f64>)>,
        intercept: bool,
    ) -> Result<Self> {
        let n = y.len();
        let mut names = Vec::new();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        if intercept {
            names.push("(Intercept)".to_owned());
            cols.push(vec![1.0; n]);
        }
        for (name, col) in regressors {
            if col.len() != n {
                return Err(Error::invalid(format!(
                    "column `{name}` has {} rows, expected {n}",
                    col.len()
                )));
            }
            names.push(name);
            cols.push(col);
        }
        let p = cols.len();
        let x = DMatrix::from_fn(n, p, |i, j| cols[j][i]);
        Design::new(x, DVector::from_vec(y), names)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// Fitted OLS model with the pieces every sandwich estimator needs.
#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub beta: DVector<f64>,
    pub resid: DVector<f64>,
    pub xtx_inv: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub names: Vec<String>,
    pub df: usize,
}

impl RegressionFit {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Per-observation scores `resid_i * x_i`, row-major `n x p`.
    pub(crate) fn scores(&self) -> Vec<f64> {
        let (n, p) = self.x.shape();
        let mut s = Vec::with_capacity(n * p);
        for i in 0..n {
            for k in 0..p {
                s.push(self.resid[i] * self.x[(i, k)]);
            }
        }
        s
    }
}

/// Least squares via Householder QR; `(X'X)^-1` comes from the triangular factor.
pub fn fit_ols(d: &Design) -> Result<RegressionFit> {
    check_rank(d)?;
    let qr = d.x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * &d.y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularDesign {
            column: d.names[d.p() - 1].clone(),
        })?;
    let p = d.p();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::SingularDesign {
            column: d.names[p - 1].clone(),
        })?;
    let mut xtx_inv = &r_inv * r_inv.transpose();
    symmetrize(&mut xtx_inv);
    let resid = &d.y - &d.x * &beta;
    Ok(RegressionFit {
        beta,
        resid,
        xtx_inv,
        x: d.x.clone(),
        names: d.names.clone(),
        df: d.n() - p,
    })
}

fn rank_deficient(x: &DMatrix<f64>) -> bool {
    let sv = x.clone().singular_values();
    let max = sv.max();
    !(max > 0.0) || sv.min() < RANK_TOL * max
}

fn check_rank(d: &Design) -> Result<()> {
    if !rank_deficient(&d.x) {
        return Ok(());
    }
    for k in 1..=d.p() {
        if rank_deficient(&d.x.columns(0, k).into_owned()) {
            return Err(Error::SingularDesign {
                column: d.names[k - 1].clone(),
            });
        }
    }
    Err(Error::SingularDesign {
        column: d.names[d.p() - 1].clone(),
    })
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let p = m.nrows();
    for a in 0..p {
        for b in (a + 1)..p {
            let v = 0.5 * (m[(a, b)] + m[(b, a)]);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcFlavor {
    Hc0,
    Hc1,
}

/// Which estimator produced a [`VarianceEstimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorLabel {
    Hc0,
    Hc1,
    Shac { kernel: KernelKind, bandwidth: f64 },
}

impl fmt::Display for EstimatorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorLabel::Hc0 => f.write_str("hc0"),
            EstimatorLabel::Hc1 => f.write_str("hc1"),
            EstimatorLabel::Shac { kernel, bandwidth } => write!(f, "shac({kernel},{bandwidth})"),
        }
    }
}

/// Labelled `p x p` covariance of the coefficients with SEs and t-statistics.
#[derive(Debug, Clone)]
pub struct VarianceEstimate {
    pub label: EstimatorLabel,
    pub vcov: DMatrix<f64>,
    pub se: Vec<f64>,
    pub tstat: Vec<f64>,
    /// Coefficients whose variance came out negative; their SE is NaN.
    pub negative_variance: Vec<usize>,
}

impl VarianceEstimate {
    /// Sandwich `bread * meat * bread`, symmetrized, with SEs and t-statistics.
    pub(crate) fn from_sandwich(
        label: EstimatorLabel,
        fit: &RegressionFit,
        meat: &DMatrix<f64>,
        scale: f64,
    ) -> Self {
        let mut vcov = &fit.xtx_inv * meat * &fit.xtx_inv * scale;
        symmetrize(&mut vcov);
        let mut negative_variance = Vec::new();
        let se: Vec<f64> = (0..vcov.nrows())
            .map(|k| {
                let v = vcov[(k, k)];
                if v < 0.0 {
                    negative_variance.push(k);
                    f64::NAN
                } else {
                    v.sqrt()
                }
            })
            .collect();
        let tstat = se.iter().zip(fit.beta.iter()).map(|(s, b)| b / s).collect();
        VarianceEstimate {
            label,
            vcov,
            se,
            tstat,
            negative_variance,
        }
    }

    pub fn is_psd_diagonal(&self) -> bool {
        self.negative_variance.is_empty()
    }
}

/// `sum_i resid_i^2 x_i x_i'`.
pub fn hc0_meat(fit: &RegressionFit) -> DMatrix<f64> {
    let p = fit.p();
    let scores = fit.scores();
    let mut meat = DMatrix::zeros(p, p);
    for s in scores.chunks_exact(p) {
        for a in 0..p {
            for b in a..p {
                meat[(a, b)] += s[a] * s[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            meat[(a, b)] = meat[(b, a)];
        }
    }
    meat
}

pub fn vcov_hc(fit: &RegressionFit, flavor: HcFlavor) -> VarianceEstimate {
    let meat = hc0_meat(fit);
    match flavor {
        HcFlavor::Hc0 => VarianceEstimate::from_sandwich(EstimatorLabel::Hc0, fit, &meat, 1.0),
        HcFlavor::Hc1 => {
            let scale = fit.n() as f64 / fit.df as f64;
            VarianceEstimate::from_sandwich(EstimatorLabel::Hc1, fit, &meat, scale)
        }
    }
}

/// Appends standardized polynomial terms in the two coordinates (degree 1 or 2).
pub fn add_coordinate_controls(d: &Design, ps: &PointSet, degree: u8) -> Result<Design> {
    if !(1..=2).contains(&degree) {
        return Err(Error::invalid(format!(
            "coordinate degree must be 1 or 2, got {degree}"
        )));
    }
    if ps.len() != d.n() {
        return Err(Error::invalid(format!(
            "{} points for {} observations",
            ps.len(),
            d.n()
        )));
    }
    let standardize = |k: usize| -> Vec<f64> {
        let v: Vec<f64> = ps.coords().iter().map(|c| c[k]).collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        // A constant coordinate stays constant and fails the rank check later.
        let sd = if sd > 0.0 { sd } else { 1.0 };
        v.iter().map(|a| (a - mean) / sd).collect()
    };
    let z1 = standardize(0);
    let z2 = standardize(1);
    let mut extra: Vec<(String, Vec<f64>)> =
        vec![("coord1".into(), z1.clone()), ("coord2".into(), z2.clone())];
    if degree == 2 {
        extra.push(("coord1^2".into(), z1.iter().map(|a| a * a).collect()));
        extra.push(("coord2^2".into(), z2.iter().map(|a| a * a).collect()));
        extra.push((
            "coord1*coord2".into(),
            z1.iter().zip(&z2).map(|(a, b)| a * b).collect(),
        ));
    }
    let n = d.n();
    let p = d.p();
    let mut x = d.x.clone().resize_horizontally(p + extra.len(), 0.0);
    let mut names = d.names.clone();
    for (k, (name, col)) in extra.into_iter().enumerate() {
        for i in 0..n {
            x[(i, p + k)] = col[i];
        }
        names.push(name);
    }
    Design::new(x, d.y.clone(), names)
}
