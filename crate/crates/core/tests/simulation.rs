//! Statistical properties checked on seeded simulations.

use spatial_hac::covariogram::{
    covariogram_from_pairs, default_bins, empirical_covariogram, select_bandwidth,
    select_bandwidth_for_fit, BinnedPairs, SelectionStatus,
};
use spatial_hac::geo::{make_lattice, random_points, BBox, PointSet};
use spatial_hac::kernels::KernelKind;
use spatial_hac::mc::SampleSpec;
use spatial_hac::moran::{build_weights, morans_i, WeightsScheme};
use spatial_hac::randfield::{
    empirical_range_check, range_from_pairs, Family, FieldSimulator, NormalStream,
    SemivariogramModel, StreamId,
};
use spatial_hac::regress::{fit_ols, vcov_hc, Design, HcFlavor};
use spatial_hac::shac::{se_curve, vcov_shac, ShacSpec};

fn desk() -> PointSet {
    SampleSpec::desk_lattice().build().unwrap()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut e = k;
        while e + 1 < idx.len() && v[idx[e + 1]] == v[idx[k]] {
            e += 1;
        }
        for &i in &idx[k..=e] {
            r[i] = (k + e) as f64 / 2.0;
        }
        k = e + 1;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&ranks(a), &ranks(b))
}

fn lattice_2000() -> PointSet {
    make_lattice(10.0, BBox::sized(500.0, 400.0).unwrap()).unwrap()
}

#[test]
fn iid_covariogram_within_clt_bound() {
    let ps = lattice_2000();
    assert_eq!(ps.len(), 2000);
    let mut s = NormalStream::new(StreamId::new(3, 0));
    let mut e = vec![0.0; ps.len()];
    s.fill(&mut e);
    let cg = empirical_covariogram(&e, &ps, default_bins(&ps).unwrap()).unwrap();
    let min_count = cg.counts.iter().copied().filter(|&c| c > 0).min().unwrap();
    let bound = 4.0 / (min_count as f64).sqrt();
    for c in cg.chat.iter().flatten() {
        assert!(c.abs() < bound, "{c} vs {bound}");
    }
}

#[test]
fn white_noise_bandwidth_keeps_se_near_hc0() {
    let ps = desk();
    let mut close = 0;
    for seed in 0..60 {
        let mut y = vec![0.0; ps.len()];
        let mut x = vec![0.0; ps.len()];
        NormalStream::new(StreamId::new(seed, 0)).fill(&mut y);
        NormalStream::new(StreamId::new(seed, 1)).fill(&mut x);
        let fit = fit_ols(&Design::from_columns(y, vec![("x".into(), x)], true).unwrap()).unwrap();
        let bins = default_bins(&ps).unwrap();
        let cg = empirical_covariogram(fit.resid.as_slice(), &ps, bins).unwrap();
        let est = select_bandwidth(&cg, 0.0).unwrap();
        // Most bins are empty on a lattice; count only occupied ones.
        let first_bins = est
            .bin_index
            .is_some_and(|b| cg.counts[..=b].iter().filter(|&&c| c > 0).count() <= 8);
        assert!(
            est.status == SelectionStatus::Immediate || first_bins,
            "seed {seed}: {est:?}"
        );
        let v = vcov_shac(
            &fit,
            &ps,
            ShacSpec::new(KernelKind::Epanechnikov, est.varsigma_hat).unwrap(),
        )
        .unwrap();
        let hc0 = vcov_hc(&fit, HcFlavor::Hc0);
        close += ((v.se[1] / hc0.se[1] - 1.0).abs() < 0.10) as usize;
    }
    assert!(close >= 57, "{close}/60 within 10% of HC0");
}

#[test]
fn selection_composition_matches_two_steps() {
    let ps = random_points(300, BBox::sized(400.0, 300.0).unwrap(), 1).unwrap();
    let mut y = vec![0.0; 300];
    NormalStream::new(StreamId::new(1, 0)).fill(&mut y);
    let x: Vec<f64> = (0..300).map(|i| (i as f64).sqrt()).collect();
    let fit = fit_ols(&Design::from_columns(y, vec![("x".into(), x)], true).unwrap()).unwrap();
    let bins = default_bins(&ps).unwrap();
    let manual = select_bandwidth(
        &empirical_covariogram(fit.resid.as_slice(), &ps, bins).unwrap(),
        0.0,
    )
    .unwrap();
    assert_eq!(
        select_bandwidth_for_fit(&fit, &ps, None, None).unwrap(),
        manual
    );
}

#[test]
fn pure_nugget_field_is_white() {
    let ps = desk();
    let model = SemivariogramModel::matern(1.5, 0.0).unwrap();
    let sim = FieldSimulator::new(&ps, model).unwrap();
    let fd = sim.draw(StreamId::new(5, 0));
    // Row-major lattice of 40 columns: successive points are horizontal neighbours.
    let mut lagged = Vec::new();
    for (i, w) in fd.values.windows(2).enumerate() {
        if (i + 1) % 40 != 0 {
            lagged.push((w[0], w[1]));
        }
    }
    let (a, b): (Vec<f64>, Vec<f64>) = lagged.into_iter().unzip();
    assert!(pearson(&a, &b).abs() < 3.0 / (ps.len() as f64).sqrt());
    let est = empirical_range_check(&fd, &ps).unwrap();
    assert!(
        est.status == SelectionStatus::Immediate || est.varsigma_hat < 300.0,
        "{est:?}"
    );
}

#[test]
fn sill_does_not_change_standardized_draws() {
    let ps = random_points(400, BBox::sized(500.0, 500.0).unwrap(), 2).unwrap();
    let a = FieldSimulator::new(
        &ps,
        SemivariogramModel::new(Family::Matern { nu: 1.5 }, 0.025, 60.0, 0.0).unwrap(),
    )
    .unwrap()
    .draw(StreamId::new(1908, 4));
    let b = FieldSimulator::new(
        &ps,
        SemivariogramModel::new(Family::Matern { nu: 1.5 }, 1.0, 60.0, 0.0).unwrap(),
    )
    .unwrap()
    .draw(StreamId::new(1908, 4));
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn streams_are_independent_and_reproducible() {
    let ps = desk();
    let sim = FieldSimulator::new(&ps, SemivariogramModel::matern(1.5, 0.0).unwrap()).unwrap();
    let a = sim.draw(StreamId::new(1908, 0));
    let b = sim.draw(StreamId::new(1908, 1));
    assert_eq!(a.values, sim.draw(StreamId::new(1908, 0)).values);
    assert!(pearson(&a.values, &b.values).abs() < 3.0 / (ps.len() as f64).sqrt());
}

#[test]
fn realized_range_grows_with_model_range() {
    let ps = desk();
    let bins = default_bins(&ps).unwrap();
    let pairs = BinnedPairs::new(&ps, bins).unwrap();
    let levels: Vec<f64> = (0..16).map(|k| 10.0 * k as f64).collect();
    let mut xs = Vec::new();
    let mut means = Vec::new();
    for &r in &levels {
        let sim = FieldSimulator::new(&ps, SemivariogramModel::matern(1.5, r).unwrap()).unwrap();
        let mut tot = 0.0;
        for k in 0..20 {
            let fd = sim.draw(StreamId::new(1908, k));
            tot += range_from_pairs(&fd.values, &pairs).unwrap().varsigma_hat;
        }
        xs.push(r);
        means.push(tot / 20.0);
    }
    assert!(spearman(&xs, &means) > 0.8, "{means:?}");
}

#[test]
fn residual_bandwidth_tracks_field_range() {
    let ps = desk();
    let bins = default_bins(&ps).unwrap();
    let pairs = BinnedPairs::new(&ps, bins).unwrap();
    let levels: Vec<f64> = (0..16).map(|k| 10.0 * k as f64).collect();
    let mut means = Vec::new();
    for &r in &levels {
        let sim = FieldSimulator::new(&ps, SemivariogramModel::matern(1.5, r).unwrap()).unwrap();
        let mut tot = 0.0;
        for k in 0..10u64 {
            let y = sim.draw(StreamId::new(1908, 2 * k)).values;
            let x = sim.draw(StreamId::new(1908, 2 * k + 1)).values;
            let fit =
                fit_ols(&Design::from_columns(y, vec![("x".into(), x)], true).unwrap()).unwrap();
            let cg = covariogram_from_pairs(fit.resid.as_slice(), &pairs).unwrap();
            tot += select_bandwidth(&cg, 0.0).unwrap().varsigma_hat;
        }
        means.push(tot / 10.0);
    }
    assert!(spearman(&levels, &means) > 0.8, "{means:?}");
}

#[test]
fn selected_bandwidth_window_for_range_30() {
    let ps = desk();
    let pairs = BinnedPairs::new(&ps, default_bins(&ps).unwrap()).unwrap();
    let sim = FieldSimulator::new(&ps, SemivariogramModel::matern(1.5, 30.0).unwrap()).unwrap();
    let mut inside = 0;
    let mut all = Vec::new();
    for k in 0..200u64 {
        let y = sim.draw(StreamId::new(1908, 2 * k)).values;
        let x = sim.draw(StreamId::new(1908, 2 * k + 1)).values;
        let fit = fit_ols(&Design::from_columns(y, vec![("x".into(), x)], true).unwrap()).unwrap();
        let s = select_bandwidth(
            &covariogram_from_pairs(fit.resid.as_slice(), &pairs).unwrap(),
            0.0,
        )
        .unwrap()
        .varsigma_hat;
        all.push(s);
        if (100.0..=400.0).contains(&s) {
            inside += 1;
        }
    }
    all.sort_by(f64::total_cmp);
    assert!(
        inside >= 180,
        "{inside}/200 inside; quartiles {} {} {}",
        all[50],
        all[100],
        all[150]
    );
}

#[test]
fn moran_detects_smooth_fields_and_not_noise() {
    let ps = desk();
    let w = build_weights(&ps, WeightsScheme::DistanceBand(200.0), true).unwrap();
    assert!(w.density() < 0.10);
    let smooth = FieldSimulator::new(&ps, SemivariogramModel::matern(1.5, 100.0).unwrap()).unwrap();
    let white = FieldSimulator::new(&ps, SemivariogramModel::matern(1.5, 0.0).unwrap()).unwrap();
    let mut hits_smooth = 0;
    let mut hits_white = 0;
    for k in 0..200u64 {
        let a = morans_i(&smooth.draw(StreamId::new(1908, k)).values, &w).unwrap();
        let b = morans_i(&white.draw(StreamId::new(1908, k)).values, &w).unwrap();
        assert!(a.i.abs() <= 1.5 && b.i.abs() <= 1.5);
        hits_smooth += (a.z > 1.96) as usize;
        hits_white += (b.z > 1.96) as usize;
    }
    assert!(hits_smooth >= 190, "{hits_smooth}");
    assert!(hits_white <= 20, "{hits_white}");
}

#[test]
fn huge_uniform_bandwidth_falls_below_hc1() {
    let ps = desk();
    let sim = FieldSimulator::new(&ps, SemivariogramModel::matern(1.5, 60.0).unwrap()).unwrap();
    let y = sim.draw(StreamId::new(1908, 0)).values;
    let x = sim.draw(StreamId::new(1908, 1)).values;
    let fit = fit_ols(&Design::from_columns(y, vec![("x".into(), x)], true).unwrap()).unwrap();
    let curve = se_curve(&fit, &ps, KernelKind::Uniform, &[0.0, ps.diameter()]).unwrap();
    let hc1 = vcov_hc(&fit, HcFlavor::Hc1).se[1];
    assert!(curve[1].se[1].is_nan() || curve[1].se[1] < hc1);
}
