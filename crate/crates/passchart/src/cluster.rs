//! Marker localization: K-means++ clustering, DBSCAN noise removal,
//! incompletion-count reconciliation, and the pixel-to-yard mapping.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{FieldCoordinate, FIELD_WIDTH_YARDS, HALF_WIDTH_YARDS, YARDS_BEHIND_LOS};
use crate::raster::PixelMask;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("{points} points cannot form {k} clusters")]
    TooFewPoints { points: usize, k: usize },
    #[error("chart anomalous: {0}")]
    ChartAnomalous(String),
}

/// Result of a K-means partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub centers: Vec<[f64; 2]>,
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    /// Per-cluster sum of squared distances to the cluster center.
    pub within_variance: Vec<f64>,
}

impl ClusterResult {
    pub fn total_variance(&self) -> f64 {
        self.within_variance.iter().sum()
    }
}

fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

const MAX_LLOYD_ITERS: usize = 100;

/// K-means++ seeded Lloyd clustering. The first center is uniform over
/// the points; each subsequent center is sampled with probability
/// proportional to its squared distance from the nearest chosen center.
/// Lloyd iterations run to an assignment fixpoint. Deterministic for a
/// fixed seed.
pub fn kmeans_pp(points: &[[f64; 2]], k: usize, seed: u64) -> Result<ClusterResult, ClusterError> {
    if k == 0 {
        return Ok(ClusterResult {
            centers: Vec::new(),
            assignments: Vec::new(),
            within_variance: Vec::new(),
        });
    }
    if points.len() < k {
        return Err(ClusterError::TooFewPoints {
            points: points.len(),
            k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // ++ seeding.
    let mut centers: Vec<[f64; 2]> = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(*p, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            points[chosen]
        } else {
            // All remaining mass at distance zero; any point will do.
            points[rng.gen_range(0..points.len())]
        };
        centers.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(*p, next));
        }
    }

    // Lloyd iterations to an assignment fixpoint.
    let mut assignments = vec![0usize; points.len()];
    let mut prev_variance = f64::INFINITY;
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        let mut variance = 0.0;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(*p, *center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
            variance += best_d;
        }
        debug_assert!(
            variance <= prev_variance + 1e-9 * (1.0 + prev_variance.min(f64::MAX / 2.0)),
            "Lloyd variance increased: {prev_variance} -> {variance}"
        );
        prev_variance = variance;
        if !changed {
            break;
        }

        // Mean update, with empty-cluster repair: an empty cluster is
        // reseeded at the point farthest from its assigned center.
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            sums[assignments[i]][0] += p[0];
            sums[assignments[i]][1] += p[1];
            counts[assignments[i]] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
            } else {
                let far = points
                    .iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| {
                        sq_dist(**a, centers[assignments.iter().position(|_| true).unwrap_or(0)])
                            .partial_cmp(&sq_dist(**b, centers[0]))
                            .unwrap()
                    })
                    .map(|(i, _)| i);
                // Farthest point from its own assigned center.
                let far = points
                    .iter()
                    .enumerate()
                    .max_by(|(i, a), (j, b)| {
                        let da = sq_dist(**a, centers[assignments[*i]]);
                        let db = sq_dist(**b, centers[assignments[*j]]);
                        da.partial_cmp(&db).unwrap().then(j.cmp(i))
                    })
                    .map(|(i, _)| i)
                    .or(far)
                    .unwrap_or(0);
                centers[c] = points[far];
            }
        }
    }

    let mut within_variance = vec![0.0f64; k];
    for (i, p) in points.iter().enumerate() {
        within_variance[assignments[i]] += sq_dist(*p, centers[assignments[i]]);
    }
    Ok(ClusterResult {
        centers,
        assignments,
        within_variance,
    })
}

/// Cluster the lit pixels of a mask into `n` marker centers.
pub fn extract_simple(
    mask: &PixelMask,
    n: usize,
    seed: u64,
) -> Result<Vec<[f64; 2]>, ClusterError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let points = mask.points();
    match kmeans_pp(&points, n, seed) {
        Ok(res) => Ok(res.centers),
        Err(ClusterError::TooFewPoints { points, k }) => Err(ClusterError::ChartAnomalous(
            format!("expected {k} markers but the mask has only {points} lit pixels"),
        )),
        Err(e) => Err(e),
    }
}

/// Tuning for the split-marker detection in
/// [`reconcile_incompletions`].
#[derive(Debug, Clone, Copy)]
pub struct ReconcileConfig {
    /// Centers closer than this (pixels) are examined as a potential
    /// split of one marker.
    pub min_center_distance: f64,
    /// A cluster with within-variance below this fraction of the
    /// reference single-marker variance is treated as half of a split
    /// marker.
    pub variance_ratio: f64,
    /// Fallback reference variance when no well-separated cluster is
    /// available: the expected sum of squared deviations of a flat disc
    /// of the nominal marker radius.
    pub nominal_marker_variance: f64,
}

impl ReconcileConfig {
    pub fn for_marker_radius(radius_px: f64) -> Self {
        Self {
            min_center_distance: 1.5 * radius_px,
            variance_ratio: 0.45,
            // pi r^2 pixels at mean squared radius r^2/2.
            nominal_marker_variance: std::f64::consts::PI * radius_px.powi(4) / 2.0,
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Cluster incompletion pixels with K equal to the declared count, then
/// reconcile K downward while any pair of centers sits suspiciously
/// close with one cluster's variance far below that of a normal,
/// single-marker cluster — the signature of one marker split in two to
/// satisfy an overcounted K (passes thrown away or out of bounds are
/// counted in the metadata but not drawn). Returns the centers and the
/// adjusted incompletion count.
pub fn reconcile_incompletions(
    mask: &PixelMask,
    n_inc: usize,
    seed: u64,
    cfg: &ReconcileConfig,
) -> (Vec<[f64; 2]>, u32) {
    let points = mask.points();
    if points.is_empty() || n_inc == 0 {
        return (Vec::new(), 0);
    }
    let mut k = n_inc.min(points.len());
    loop {
        let res = kmeans_pp(&points, k, seed).expect("k bounded by point count");
        if k <= 1 {
            return (res.centers, k as u32);
        }

        // Distance from each center to its nearest sibling.
        let mut nearest = vec![f64::INFINITY; k];
        for i in 0..k {
            for j in i + 1..k {
                let d = sq_dist(res.centers[i], res.centers[j]).sqrt();
                if d < nearest[i] {
                    nearest[i] = d;
                }
                if d < nearest[j] {
                    nearest[j] = d;
                }
            }
        }

        let mut well_separated: Vec<f64> = (0..k)
            .filter(|&i| nearest[i] >= cfg.min_center_distance)
            .map(|i| res.within_variance[i])
            .collect();
        let reference = if well_separated.is_empty() {
            cfg.nominal_marker_variance
        } else {
            median(&mut well_separated)
        };

        let split_detected = (0..k).any(|i| {
            nearest[i] < cfg.min_center_distance
                && res.within_variance[i] < cfg.variance_ratio * reference
        });
        if !split_detected {
            return (res.centers, k as u32);
        }
        k -= 1;
    }
}

/// DBSCAN parameters: neighborhood radius (pixels) and the minimum
/// neighborhood size for a core point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanParams {
    pub epsilon: f64,
    pub tau: usize,
}

/// DBSCAN output: clusters as index lists (largest first) plus noise.
#[derive(Debug, Clone, PartialEq)]
pub struct DbscanResult {
    pub clusters: Vec<Vec<usize>>,
    pub noise: Vec<usize>,
}

/// Density-based clustering. Core points (those with at least `tau`
/// neighbors within `epsilon`, self included) within `epsilon` of each
/// other merge into one cluster; non-core points within reach of a core
/// join the cluster of their nearest core; everything else is noise.
///
/// Border points are attached by nearest core (ties by coordinate), so
/// the clustering is a pure function of the point set — input order
/// never matters.
pub fn dbscan(points: &[[f64; 2]], params: &DbscanParams) -> DbscanResult {
    let n = points.len();
    if n == 0 {
        return DbscanResult {
            clusters: Vec::new(),
            noise: Vec::new(),
        };
    }
    let eps = params.epsilon;
    let eps2 = eps * eps;

    // Bucket grid with eps-sized cells; neighbors live in the 3x3 block.
    use std::collections::HashMap;
    let cell = |p: [f64; 2]| ((p[0] / eps).floor() as i64, (p[1] / eps).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(cell(*p)).or_default().push(i);
    }
    let neighbors = |i: usize| -> Vec<usize> {
        let (cx, cy) = cell(points[i]);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = grid.get(&(cx + dx, cy + dy)) {
                    for &j in bucket {
                        if sq_dist(points[i], points[j]) <= eps2 {
                            out.push(j);
                        }
                    }
                }
            }
        }
        out
    };

    let neighbor_lists: Vec<Vec<usize>> = (0..n).map(neighbors).collect();
    let core: Vec<bool> = neighbor_lists.iter().map(|nb| nb.len() >= params.tau).collect();

    // Union-find over core points.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        if !core[i] {
            continue;
        }
        for &j in &neighbor_lists[i] {
            if core[j] {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    // Attach border points to their nearest core neighbor.
    let mut membership: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        if core[i] {
            membership[i] = Some(find(&mut parent, i));
        } else {
            let best = neighbor_lists[i]
                .iter()
                .filter(|&&j| core[j])
                .min_by(|&&a, &&b| {
                    let da = sq_dist(points[i], points[a]);
                    let db = sq_dist(points[i], points[b]);
                    da.partial_cmp(&db)
                        .unwrap()
                        .then_with(|| cmp_point(points[a], points[b]))
                })
                .copied();
            membership[i] = best.map(|j| find(&mut parent, j));
        }
    }

    let mut by_root: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut noise = Vec::new();
    for i in 0..n {
        match membership[i] {
            Some(root) => by_root.entry(root).or_default().push(i),
            None => noise.push(i),
        }
    }
    let mut clusters: Vec<Vec<usize>> = by_root.into_values().collect();
    for c in clusters.iter_mut() {
        c.sort_by(|&a, &b| cmp_point(points[a], points[b]).then(a.cmp(&b)));
    }
    clusters.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then_with(|| cmp_point(points[a[0]], points[b[0]]))
    });
    DbscanResult { clusters, noise }
}

fn cmp_point(a: [f64; 2], b: [f64; 2]) -> std::cmp::Ordering {
    a[0].partial_cmp(&b[0])
        .unwrap()
        .then(a[1].partial_cmp(&b[1]).unwrap())
}

/// Shape screen for touchdown clusters: the major/minor spread ratio of
/// a marker disc is near 1, while line-of-scrimmage or trajectory
/// fragments are strongly elongated.
fn aspect_ratio(points: &[[f64; 2]]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 3 {
        return 1.0;
    }
    let (mut mx, mut my) = (0.0, 0.0);
    for p in points {
        mx += p[0];
        my += p[1];
    }
    mx /= n;
    my /= n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    sxx /= n;
    syy /= n;
    sxy /= n;
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let l1 = tr / 2.0 + disc;
    let l2 = (tr / 2.0 - disc).max(1e-9);
    (l1 / l2).sqrt()
}

/// Maximum spread ratio before a touchdown cluster is rejected as a
/// line fragment.
pub const TD_MAX_ASPECT: f64 = 3.0;

/// DBSCAN epsilon used for touchdown denoising (pixels).
pub const TD_EPSILON: f64 = 10.0;

/// Locate touchdown markers in a mask polluted by the scrimmage line
/// and trajectory pixels, which share the touchdown color: run DBSCAN
/// with `epsilon = 10` and `tau = n_td`, keep the `n_td` largest
/// clusters, screen them for line-like shapes, and K-means the
/// surviving pixels.
pub fn extract_touchdowns(
    mask: &PixelMask,
    n_td: usize,
    seed: u64,
) -> Result<Vec<[f64; 2]>, ClusterError> {
    if n_td == 0 {
        return Ok(Vec::new());
    }
    let points = mask.points();
    let result = dbscan(
        &points,
        &DbscanParams {
            epsilon: TD_EPSILON,
            tau: n_td,
        },
    );
    if result.clusters.len() < n_td {
        return Err(ClusterError::ChartAnomalous(format!(
            "found {} dense clusters for {} touchdowns",
            result.clusters.len(),
            n_td
        )));
    }
    let mut kept: Vec<[f64; 2]> = Vec::new();
    for cluster in result.clusters.iter().take(n_td) {
        let pts: Vec<[f64; 2]> = cluster.iter().map(|&i| points[i]).collect();
        let aspect = aspect_ratio(&pts);
        if aspect > TD_MAX_ASPECT {
            return Err(ClusterError::ChartAnomalous(format!(
                "touchdown cluster with line-like shape (spread ratio {aspect:.1})"
            )));
        }
        kept.extend(pts);
    }
    Ok(kmeans_pp(&kept, n_td, seed)?.centers)
}

/// Map rectified-image pixel centers to field coordinates: the bottom
/// row sits 10 yards behind the line of scrimmage, the top row at the
/// chart depth, and the horizontal extent spans the field width.
/// Out-of-bounds centers are clamped; the count of clamped centers is
/// returned alongside.
pub fn pixels_to_field(
    centers: &[[f64; 2]],
    rect_size: (u32, u32),
    depth_yards: u32,
) -> (Vec<FieldCoordinate>, usize) {
    let (w, h) = (rect_size.0 as f64, rect_size.1 as f64);
    let depth = depth_yards as f64;
    let mut clamped = 0;
    let coords = centers
        .iter()
        .map(|c| {
            let y = (c[0] / w - 0.5) * FIELD_WIDTH_YARDS;
            let x = (1.0 - c[1] / h) * depth - YARDS_BEHIND_LOS;
            let coord = FieldCoordinate::new(x, y);
            let max_x = depth - YARDS_BEHIND_LOS;
            if x < -YARDS_BEHIND_LOS || x > max_x || y.abs() > HALF_WIDTH_YARDS {
                clamped += 1;
                coord.clamped(depth)
            } else {
                coord
            }
        })
        .collect();
    (coords, clamped)
}

/// Inverse of [`pixels_to_field`] for a single coordinate; used by the
/// synthetic renderer so round trips are exact.
pub fn field_to_pixel(
    coord: FieldCoordinate,
    rect_size: (u32, u32),
    depth_yards: u32,
) -> [f64; 2] {
    let (w, h) = (rect_size.0 as f64, rect_size.1 as f64);
    let depth = depth_yards as f64;
    [
        (coord.y / FIELD_WIDTH_YARDS + 0.5) * w,
        (1.0 - (coord.x + YARDS_BEHIND_LOS) / depth) * h,
    ]
}
