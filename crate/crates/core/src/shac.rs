//! Conley spatial HAC covariance with an isotropic distance kernel.
//!
//! The meat is
//!
//! ```text
//! Omega = sum_i e_i^2 x_i x_i' + sum_{i<j, d_ij <= bw} K(d_ij / bw) e_i e_j (x_i x_j' + x_j x_i')
//! ```
//!
//! Pairs come from a [`NeighborList`] in canonical `(i, j)` order. They are
//! summed in fixed-size blocks with compensated accumulation and the block
//! totals combined left to right, so the result does not depend on how many
//! threads ran the blocks.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geo::{neighbors_within, NeighborList, PointSet};
use crate::kernels::KernelKind;
use crate::regress::{hc0_meat, EstimatorLabel, RegressionFit, VarianceEstimate};

const BLOCK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShacSpec {
    pub kernel: KernelKind,
    /// Cutoff distance in km.
    pub bandwidth: f64,
}

impl ShacSpec {
    pub fn new(kernel: KernelKind, bandwidth: f64) -> Result<Self> {
        if !(bandwidth >= 0.0) || !bandwidth.is_finite() {
            return Err(Error::invalid(format!(
                "bandwidth must be finite and >= 0, got {bandwidth}"
            )));
        }
        Ok(ShacSpec { kernel, bandwidth })
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    #[inline]
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

fn check_aligned(fit: &RegressionFit, n: usize) -> Result<()> {
    if fit.n() != n {
        return Err(Error::invalid(format!(
            "fit has {} observations but the point set has {n}",
            fit.n()
        )));
    }
    Ok(())
}

/// Meat matrix from a precomputed neighbor list whose radius covers the bandwidth.
pub fn shac_meat_from_pairs(
    fit: &RegressionFit,
    neighbors: &NeighborList,
    spec: ShacSpec,
) -> Result<DMatrix<f64>> {
    check_aligned(fit, neighbors.n)?;
    if spec.bandwidth > neighbors.radius {
        return Err(Error::invalid(format!(
            "bandwidth {} exceeds neighbor radius {}",
            spec.bandwidth, neighbors.radius
        )));
    }
    let p = fit.p();
    let scores = fit.scores();
    let mut meat = hc0_meat(fit);
    if spec.bandwidth == 0.0 {
        return Ok(meat);
    }

    let n_upper = p * (p + 1) / 2;
    let bw = spec.bandwidth;
    let kernel = spec.kernel;
    let blocks: Vec<Vec<f64>> = neighbors
        .pairs
        .par_chunks(BLOCK)
        .map(|chunk| {
            let mut acc = vec![Compensated::default(); n_upper];
            for pr in chunk {
                if pr.d > bw {
                    continue;
                }
                let w = kernel.weight_unchecked(pr.d / bw);
                if w == 0.0 {
                    continue;
                }
                let si = &scores[pr.i as usize * p..pr.i as usize * p + p];
                let sj = &scores[pr.j as usize * p..pr.j as usize * p + p];
                let mut k = 0;
                for a in 0..p {
                    for b in a..p {
                        acc[k].add(w * (si[a] * sj[b] + sj[a] * si[b]));
                        k += 1;
                    }
                }
            }
            acc.iter().map(Compensated::value).collect()
        })
        .collect();

    let mut total = vec![Compensated::default(); n_upper];
    for block in &blocks {
        for (t, v) in total.iter_mut().zip(block) {
            t.add(*v);
        }
    }
    let mut k = 0;
    for a in 0..p {
        for b in a..p {
            meat[(a, b)] += total[k].value();
            if a != b {
                meat[(b, a)] = meat[(a, b)];
            }
            k += 1;
        }
    }
    Ok(meat)
}

pub fn shac_meat(fit: &RegressionFit, ps: &PointSet, spec: ShacSpec) -> Result<DMatrix<f64>> {
    check_aligned(fit, ps.len())?;
    let neighbors = neighbors_within(ps, spec.bandwidth)?;
    shac_meat_from_pairs(fit, &neighbors, spec)
}

pub fn vcov_shac_from_pairs(
    fit: &RegressionFit,
    neighbors: &NeighborList,
    spec: ShacSpec,
) -> Result<VarianceEstimate> {
    let meat = shac_meat_from_pairs(fit, neighbors, spec)?;
    let label = EstimatorLabel::Shac {
        kernel: spec.kernel,
        bandwidth: spec.bandwidth,
    };
    Ok(VarianceEstimate::from_sandwich(label, fit, &meat, 1.0))
}

/// Sandwich `(X'X)^-1 Omega (X'X)^-1`. Negative variances are reported, not clipped.
pub fn vcov_shac(fit: &RegressionFit, ps: &PointSet, spec: ShacSpec) -> Result<VarianceEstimate> {
    check_aligned(fit, ps.len())?;
    let neighbors = neighbors_within(ps, spec.bandwidth)?;
    vcov_shac_from_pairs(fit, &neighbors, spec)
}

/// Standard errors at one bandwidth of a curve.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub bandwidth: f64,
    pub se: Vec<f64>,
    pub negative_variance: Vec<usize>,
}

/// SEs across an ascending bandwidth grid, enumerating neighbors once at the largest.
pub fn se_curve(
    fit: &RegressionFit,
    ps: &PointSet,
    kernel: KernelKind,
    bandwidths: &[f64],
) -> Result<Vec<CurvePoint>> {
    check_aligned(fit, ps.len())?;
    if bandwidths.is_empty() {
        return Err(Error::invalid("bandwidth grid is empty"));
    }
    if bandwidths.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::invalid("bandwidth grid must be sorted ascending"));
    }
    let max = *bandwidths.last().unwrap();
    let neighbors = neighbors_within(ps, max)?;
    bandwidths
        .iter()
        .map(|&bw| {
            let v = vcov_shac_from_pairs(fit, &neighbors, ShacSpec::new(kernel, bw)?)?;
            Ok(CurvePoint {
                bandwidth: bw,
                se: v.se,
                negative_variance: v.negative_variance,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Crs;
    use crate::regress::{fit_ols, vcov_hc, Design, HcFlavor};

    fn toy() -> (RegressionFit, PointSet) {
        let ps = PointSet::new(
            vec![[0.0, 0.0], [10.0, 0.0], [0.0, 20.0], [30.0, 30.0]],
            Crs::ProjectedKm,
        )
        .unwrap();
        let d = Design::from_columns(
            vec![1.0, 3.0, 2.0, 7.0],
            vec![("x".into(), vec![0.5, 1.0, 2.5, 3.0])],
            true,
        )
        .unwrap();
        (fit_ols(&d).unwrap(), ps)
    }

    #[test]
    fn zero_bandwidth_is_hc0() {
        let (fit, ps) = toy();
        let v = vcov_shac(&fit, &ps, ShacSpec::new(KernelKind::Bartlett, 0.0).unwrap()).unwrap();
        let h = vcov_hc(&fit, HcFlavor::Hc0);
        assert_eq!(v.vcov, h.vcov);
    }

    #[test]
    fn below_min_distance_is_hc0() {
        let (fit, ps) = toy();
        let m = shac_meat(&fit, &ps, ShacSpec::new(KernelKind::Uniform, 9.99).unwrap()).unwrap();
        assert_eq!(m, hc0_meat(&fit));
    }

    #[test]
    fn uniform_wide_is_one_cluster() {
        let (fit, ps) = toy();
        let m = shac_meat(
            &fit,
            &ps,
            ShacSpec::new(KernelKind::Uniform, 100.0).unwrap(),
        )
        .unwrap();
        let scores = fit.scores();
        let g: Vec<f64> = (0..2)
            .map(|k| (0..4).map(|i| scores[i * 2 + k]).sum())
            .collect();
        for a in 0..2 {
            for b in 0..2 {
                let expected = g[a] * g[b];
                assert!((m[(a, b)] - expected).abs() < 1e-12 * (1.0 + m.amax()));
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let (fit, ps) = toy();
        assert!(ShacSpec::new(KernelKind::Bartlett, -1.0).is_err());
        let short = PointSet::new(vec![[0.0, 0.0], [1.0, 1.0]], Crs::ProjectedKm).unwrap();
        assert!(shac_meat(
            &fit,
            &short,
            ShacSpec::new(KernelKind::Bartlett, 5.0).unwrap()
        )
        .is_err());
        assert!(se_curve(&fit, &ps, KernelKind::Bartlett, &[10.0, 5.0]).is_err());
        let nl = neighbors_within(&ps, 10.0).unwrap();
        assert!(shac_meat_from_pairs(
            &fit,
            &nl,
            ShacSpec::new(KernelKind::Bartlett, 20.0).unwrap()
        )
        .is_err());
    }

    #[test]
    fn curve_starts_at_hc0() {
        let (fit, ps) = toy();
        let c = se_curve(&fit, &ps, KernelKind::Epanechnikov, &[0.0, 15.0, 50.0]).unwrap();
        let h = vcov_hc(&fit, HcFlavor::Hc0);
        assert_eq!(c[0].se, h.se);
        assert_eq!(c.len(), 3);
    }
}
