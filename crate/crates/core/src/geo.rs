//! Locations, distances and fixed-radius pair enumeration.
//!
//! All distances are kilometres. Projected coordinates are taken to already be
//! in km; geographic coordinates are (longitude, latitude) in degrees and use
//! the Haversine great-circle distance.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::Table;
use crate::error::{Error, Result};

/// IUGG mean Earth radius.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Above this many points the diameter comes from the convex hull.
const EXACT_DIAMETER_MAX_N: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Crs {
    ProjectedKm,
    LonLatDeg,
}

/// Observation locations with their coordinate system.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Vec<[f64; 2]>,
    crs: Crs,
}

impl PointSet {
    pub fn new(coords: Vec<[f64; 2]>, crs: Crs) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::invalid(format!(
                "a point set needs at least 2 points, got {}",
                coords.len()
            )));
        }
        for (k, c) in coords.iter().enumerate() {
            check_point(*c, crs).map_err(|msg| Error::invalid(format!("point {k}: {msg}")))?;
        }
        Ok(PointSet { coords, crs })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn crs(&self) -> Crs {
        self.crs
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        self.coords[i]
    }

    /// Distance between points `i` and `j` of this set.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        raw_distance(self.coords[i], self.coords[j], self.crs)
    }

    /// Returns the points reordered so that entry `k` is the old point `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(Error::invalid(
                "permutation length does not match point count",
            ));
        }
        PointSet::new(perm.iter().map(|&k| self.coords[k]).collect(), self.crs)
    }

    /// Largest pairwise distance; exact for moderate `n`, hull-based above that.
    pub fn diameter(&self) -> f64 {
        if self.len() <= EXACT_DIAMETER_MAX_N || self.crs == Crs::LonLatDeg {
            diameter_exact(self)
        } else {
            diameter_hull(self)
        }
    }
}

fn check_point(c: [f64; 2], crs: Crs) -> std::result::Result<(), String> {
    if !c[0].is_finite() || !c[1].is_finite() {
        return Err(format!("non-finite coordinate ({}, {})", c[0], c[1]));
    }
    if crs == Crs::LonLatDeg {
        if !(-180.0..=180.0).contains(&c[0]) {
            return Err(format!("longitude {} outside [-180, 180]", c[0]));
        }
        if !(-90.0..=90.0).contains(&c[1]) {
            return Err(format!("latitude {} outside [-90, 90]", c[1]));
        }
    }
    Ok(())
}

/// Distance in km between two points in the same coordinate system.
pub fn distance(a: [f64; 2], b: [f64; 2], crs: Crs) -> Result<f64> {
    check_point(a, crs).map_err(Error::InvalidInput)?;
    check_point(b, crs).map_err(Error::InvalidInput)?;
    Ok(raw_distance(a, b, crs))
}

#[inline]
fn raw_distance(a: [f64; 2], b: [f64; 2], crs: Crs) -> f64 {
    match crs {
        Crs::ProjectedKm => (a[0] - b[0]).hypot(a[1] - b[1]),
        Crs::LonLatDeg => haversine(a, b),
    }
}

fn haversine(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (lon1, lat1) = (a[0].to_radians(), a[1].to_radians());
    let (lon2, lat2) = (b[0].to_radians(), b[1].to_radians());
    let s_lat = ((lat2 - lat1) * 0.5).sin();
    let s_lon = ((lon2 - lon1) * 0.5).sin();
    let h = s_lat * s_lat + lat1.cos() * lat2.cos() * s_lon * s_lon;
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// One unordered pair `i < j` at distance `d` km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub i: u32,
    pub j: u32,
    pub d: f64,
}

/// All pairs within `radius`, sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub radius: f64,
    pub n: usize,
    pub pairs: Vec<Pair>,
}

impl NeighborList {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs with `d <= radius`, preserving the canonical order.
    pub fn within(&self, radius: f64) -> impl Iterator<Item = &Pair> + '_ {
        self.pairs.iter().filter(move |p| p.d <= radius)
    }
}

/// Enumerates every pair with distance at most `radius` using a uniform grid.
///
/// Points are embedded in 3-D (the plane, or Earth-centred coordinates for
/// lon/lat) so one grid covers both metrics; candidates are confirmed with the
/// exact distance.
pub fn neighbors_within(ps: &PointSet, radius: f64) -> Result<NeighborList> {
    if !(radius >= 0.0) {
        return Err(Error::invalid(format!("radius must be >= 0, got {radius}")));
    }
    let n = ps.len();
    if n > u32::MAX as usize {
        return Err(Error::invalid("too many points"));
    }
    let emb: Vec<[f64; 3]> = ps.coords.iter().map(|&c| embed(c, ps.crs)).collect();
    let search = match ps.crs {
        Crs::ProjectedKm => radius,
        Crs::LonLatDeg => {
            let half = (radius / (2.0 * EARTH_RADIUS_KM)).min(std::f64::consts::FRAC_PI_2);
            2.0 * EARTH_RADIUS_KM * half.sin()
        }
    };

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &emb {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let extent = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
    // Cell edge must be >= search radius; the floor bounds the cell count.
    let cell = (search.max(extent / 1024.0) * (1.0 + 1e-9)).max(1e-9);
    let key = |p: &[f64; 3]| -> [i64; 3] {
        [
            ((p[0] - lo[0]) / cell).floor() as i64,
            ((p[1] - lo[1]) / cell).floor() as i64,
            ((p[2] - lo[2]) / cell).floor() as i64,
        ]
    };

    let mut grid: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
    for (k, p) in emb.iter().enumerate() {
        grid.entry(key(p)).or_default().push(k as u32);
    }

    let per_point: Vec<Vec<Pair>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let c = key(&emb[i]);
            let mut out = Vec::new();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let Some(members) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else {
                            continue;
                        };
                        for &j in members {
                            if (j as usize) <= i {
                                continue;
                            }
                            let d = ps.dist(i, j as usize);
                            if d <= radius {
                                out.push(Pair { i: i as u32, j, d });
                            }
                        }
                    }
                }
            }
            out.sort_unstable_by_key(|p| p.j);
            out
        })
        .collect();

    Ok(NeighborList {
        radius,
        n,
        pairs: per_point.concat(),
    })
}

fn embed(c: [f64; 2], crs: Crs) -> [f64; 3] {
    match crs {
        Crs::ProjectedKm => [c[0], c[1], 0.0],
        Crs::LonLatDeg => {
            let (lon, lat) = (c[0].to_radians(), c[1].to_radians());
            [
                EARTH_RADIUS_KM * lat.cos() * lon.cos(),
                EARTH_RADIUS_KM * lat.cos() * lon.sin(),
                EARTH_RADIUS_KM * lat.sin(),
            ]
        }
    }
}

/// Axis-aligned rectangle in projected km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl BBox {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self> {
        let ok =
            [xmin, ymin, xmax, ymax].iter().all(|v| v.is_finite()) && xmax > xmin && ymax > ymin;
        if !ok {
            return Err(Error::invalid(format!(
                "degenerate bounding box [{xmin}, {xmax}] x [{ymin}, {ymax}]"
            )));
        }
        Ok(BBox {
            xmin,
            ymin,
            xmax,
            ymax,
        })
    }

    /// Rectangle of the given size anchored at the origin.
    pub fn sized(width: f64, height: f64) -> Result<Self> {
        Self::new(0.0, 0.0, width, height)
    }

    /// Rough extent of the contiguous United States in an equal-area projection.
    pub fn contiguous_us() -> Self {
        BBox {
            xmin: 0.0,
            ymin: 0.0,
            xmax: 4600.0,
            ymax: 2800.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }
}

/// Cell centres of a square grid covering `bbox`, row by row from the bottom.
pub fn make_lattice(cell_km: f64, bbox: BBox) -> Result<PointSet> {
    if !(cell_km > 0.0) || !cell_km.is_finite() {
        return Err(Error::invalid(format!(
            "cell size must be positive, got {cell_km}"
        )));
    }
    let bbox = BBox::new(bbox.xmin, bbox.ymin, bbox.xmax, bbox.ymax)?;
    let nx = (bbox.width() / cell_km).ceil().max(1.0) as usize;
    let ny = (bbox.height() / cell_km).ceil().max(1.0) as usize;
    let mut coords = Vec::with_capacity(nx * ny);
    for r in 0..ny {
        for c in 0..nx {
            coords.push([
                bbox.xmin + (c as f64 + 0.5) * cell_km,
                bbox.ymin + (r as f64 + 0.5) * cell_km,
            ]);
        }
    }
    if coords.len() < 2 {
        // A single cell still has to satisfy the point-set contract.
        return Ok(PointSet {
            coords,
            crs: Crs::ProjectedKm,
        });
    }
    PointSet::new(coords, Crs::ProjectedKm)
}

/// `n` points drawn uniformly inside `bbox` from a seeded stream.
pub fn random_points(n: usize, bbox: BBox, seed: u64) -> Result<PointSet> {
    let bbox = BBox::new(bbox.xmin, bbox.ymin, bbox.xmax, bbox.ymax)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n)
        .map(|_| {
            [
                rng.gen_range(bbox.xmin..bbox.xmax),
                rng.gen_range(bbox.ymin..bbox.ymax),
            ]
        })
        .collect();
    PointSet::new(coords, Crs::ProjectedKm)
}

/// Column names used to read coordinates from a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub first: String,
    pub second: String,
}

impl ColumnSpec {
    pub fn new(first: impl Into<String>, second: impl Into<String>) -> Self {
        ColumnSpec {
            first: first.into(),
            second: second.into(),
        }
    }
}

/// Reads coordinates from two numeric columns, keeping row order.
pub fn load_points(table: &Table, cols: &ColumnSpec, crs: Crs) -> Result<PointSet> {
    let a = table.numeric_column(&cols.first)?;
    let b = table.numeric_column(&cols.second)?;
    let coords: Vec<[f64; 2]> = a.into_iter().zip(b).map(|(a, b)| [a, b]).collect();
    for (k, c) in coords.iter().enumerate() {
        check_point(*c, crs).map_err(|msg| Error::Parse { row: k + 1, msg })?;
    }
    PointSet::new(coords, crs)
}

/// Maximum pairwise distance by full scan.
pub fn diameter_exact(ps: &PointSet) -> f64 {
    (0..ps.len())
        .into_par_iter()
        .map(|i| {
            ((i + 1)..ps.len())
                .map(|j| ps.dist(i, j))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Maximum pairwise distance over convex-hull vertices (projected points only).
pub fn diameter_hull(ps: &PointSet) -> f64 {
    let hull = convex_hull(ps.coords());
    let mut best: f64 = 0.0;
    for a in 0..hull.len() {
        for b in (a + 1)..hull.len() {
            best = best.max(raw_distance(hull[a], hull[b], Crs::ProjectedKm));
        }
    }
    best
}

// Andrew's monotone chain.
fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}
