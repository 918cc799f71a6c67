//! Spatial weights and global Moran's I.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::geo::{neighbors_within, PointSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightsScheme {
    /// Binary links for `0 < d <= radius` km.
    DistanceBand(f64),
    /// Each point links to its `k` nearest others; ties go to the lower index.
    Knn(usize),
}

/// Sparse `n x n` weights in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightsMatrix {
    pub scheme: WeightsScheme,
    pub row_normalized: bool,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    /// Rows without any neighbor.
    pub isolates: Vec<usize>,
}

impl WeightsMatrix {
    pub fn n(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// Non-zero entries `(j, w_ij)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, w)| w)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Fraction of off-diagonal entries that are non-zero.
    pub fn density(&self) -> f64 {
        let n = self.n() as f64;
        self.nnz() as f64 / (n * (n - 1.0))
    }

    fn from_rows(scheme: WeightsScheme, rows: Vec<Vec<(usize, f64)>>, row_normalize: bool) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut isolates = Vec::new();
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            if row.is_empty() {
                isolates.push(i);
            }
            let total: f64 = row.iter().map(|&(_, w)| w).sum();
            for (j, w) in row {
                cols.push(j);
                vals.push(if row_normalize { w / total } else { w });
            }
            row_ptr.push(cols.len());
        }
        WeightsMatrix {
            scheme,
            row_normalized: row_normalize,
            row_ptr,
            cols,
            vals,
            isolates,
        }
    }
}

pub fn build_weights(
    ps: &PointSet,
    scheme: WeightsScheme,
    row_normalize: bool,
) -> Result<WeightsMatrix> {
    let n = ps.len();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    match scheme {
        WeightsScheme::DistanceBand(radius) => {
            if !(radius > 0.0) {
                return Err(Error::invalid(format!(
                    "band radius must be positive, got {radius}"
                )));
            }
            for p in neighbors_within(ps, radius)?.pairs {
                if p.d > 0.0 {
                    rows[p.i as usize].push((p.j as usize, 1.0));
                    rows[p.j as usize].push((p.i as usize, 1.0));
                }
            }
        }
        WeightsScheme::Knn(k) => {
            if k == 0 || k >= n {
                return Err(Error::invalid(format!(
                    "knn needs 1 <= k < n, got k = {k}, n = {n}"
                )));
            }
            for (i, row) in rows.iter_mut().enumerate() {
                let mut cand: Vec<(f64, usize)> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (ps.dist(i, j), j))
                    .collect();
                cand.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                row.extend(cand[..k].iter().map(|&(_, j)| (j, 1.0)));
            }
        }
    }
    Ok(WeightsMatrix::from_rows(scheme, rows, row_normalize))
}

/// `[W x]_i = sum_j w_ij x_j`.
pub fn spatial_lag(w: &WeightsMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != w.n() {
        return Err(Error::invalid(format!(
            "vector of length {} for {} rows",
            x.len(),
            w.n()
        )));
    }
    Ok((0..w.n())
        .map(|i| w.row(i).map(|(j, wij)| wij * x[j]).sum())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoranResult {
    pub i: f64,
    pub expected: f64,
    /// Variance under the normality assumption.
    pub variance: f64,
    pub z: f64,
    /// Two-sided normal p-value.
    pub p_value: f64,
}

/// Moran's I on deviations from the mean, with normal-approximation inference.
///
/// The plain statistic is used; there is no correction for the residuals
/// having come from a regression projection.
pub fn morans_i(values: &[f64], w: &WeightsMatrix) -> Result<MoranResult> {
    let n = w.n();
    if values.len() != n {
        return Err(Error::invalid(format!(
            "{} values for {n} weight rows",
            values.len()
        )));
    }
    if n < 3 {
        return Err(Error::invalid("Moran's I needs at least 3 observations"));
    }
    let s0: f64 = w.vals.iter().sum();
    if !(s0 > 0.0) {
        return Err(Error::invalid("weights matrix has no positive entries"));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let z: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let m2: f64 = z.iter().map(|v| v * v).sum();
    if !(m2 > 0.0) {
        return Err(Error::UndefinedStatistic(
            "values have zero variance".into(),
        ));
    }
    let cross: f64 = (0..n)
        .map(|i| z[i] * w.row(i).map(|(j, wij)| wij * z[j]).sum::<f64>())
        .sum();
    let stat = nf / s0 * cross / m2;

    // S1 = 1/2 sum_ij (w_ij + w_ji)^2, S2 = sum_i (w_i. + w_.i)^2.
    let mut col_sums = vec![0.0; n];
    let mut s1 = 0.0;
    for i in 0..n {
        for (j, wij) in w.row(i) {
            col_sums[j] += wij;
            let wji = w.get(j, i);
            s1 += (wij + wji).powi(2);
        }
    }
    // Entries with w_ij = 0 but w_ji > 0 were missed above.
    for i in 0..n {
        for (j, wij) in w.row(i) {
            if w.get(j, i) == 0.0 {
                s1 += wij * wij;
            }
        }
    }
    s1 *= 0.5;
    let s2: f64 = (0..n)
        .map(|i| {
            let r: f64 = w.row(i).map(|(_, v)| v).sum();
            (r + col_sums[i]).powi(2)
        })
        .sum();

    let expected = -1.0 / (nf - 1.0);
    let e_i2 = (nf * nf * s1 - nf * s2 + 3.0 * s0 * s0) / (s0 * s0 * (nf * nf - 1.0));
    let variance = e_i2 - expected * expected;
    let zscore = (stat - expected) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p_value = 2.0 * (1.0 - normal.cdf(zscore.abs()));
    Ok(MoranResult {
        i: stat,
        expected,
        variance,
        z: zscore,
        p_value,
    })
}
