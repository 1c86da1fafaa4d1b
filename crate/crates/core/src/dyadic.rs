//! Dyadic systems on the sampled boundary.
//!
//! Level `k` of a system is a greedy maximal `s^{-k} delta`-separated net of
//! boundary samples. Nets are nested (level `k + 1` starts from level `k`),
//! every net point is attached to the nearest coarser net point, and every
//! sample is attached to its nearest deepest net point. Cells at coarser levels
//! are unions of descendants, so partition and nesting hold by construction.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainKind, ModelDomain, SampleCloud};
use crate::scalar::{Real, C};

/// Boundary clouds up to this size get a full pairwise distance table.
pub const METRIC_CACHE_LIMIT: usize = 6000;

/// Quasi-metric between boundary samples, cached when the cloud is small.
pub struct BoundaryMetric<'a, T> {
    dom: &'a ModelDomain<T>,
    cloud: &'a SampleCloud<T>,
    table: Option<Vec<T>>,
}

impl<'a, T: Real> BoundaryMetric<'a, T> {
    pub fn new(dom: &'a ModelDomain<T>, cloud: &'a SampleCloud<T>) -> Self {
        let n = cloud.n_boundary();
        let table = (n <= METRIC_CACHE_LIMIT).then(|| {
            let rows: Vec<Vec<T>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let zi = cloud.boundary_point(i);
                    (0..n)
                        .map(|j| dom.quasi_metric_unchecked(zi, cloud.boundary_point(j)))
                        .collect()
                })
                .collect();
            rows.concat()
        });
        BoundaryMetric { dom, cloud, table }
    }

    pub fn len(&self) -> usize {
        self.cloud.n_boundary()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> T {
        match &self.table {
            Some(t) => t[i * self.len() + j],
            None => self
                .dom
                .quasi_metric_unchecked(self.cloud.boundary_point(i), self.cloud.boundary_point(j)),
        }
    }

    /// Distance from an arbitrary boundary point to sample `j`.
    #[inline]
    pub fn dist_to(&self, zeta: &[C<T>], j: usize) -> T {
        self.dom.quasi_metric_unchecked(zeta, self.cloud.boundary_point(j))
    }

    pub fn domain(&self) -> &ModelDomain<T> {
        self.dom
    }

    pub fn cloud(&self) -> &SampleCloud<T> {
        self.cloud
    }

    /// Largest distance between two samples.
    pub fn diameter(&self) -> T {
        let n = self.len();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.dist(i, j))
            .fold(T::zero(), T::max)
    }

    /// Median distance from a sample to its nearest neighbour.
    pub fn median_spacing(&self) -> T {
        let n = self.len();
        if n < 2 {
            return T::zero();
        }
        let mut nn: Vec<T> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| self.dist(i, j))
                    .fold(T::infinity(), T::min)
            })
            .collect();
        nn.sort_by(|a, b| a.partial_cmp(b).unwrap());
        nn[n / 2]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicCell {
    pub level: usize,
    pub index: usize,
    /// Boundary-sample index of the reference point.
    pub ref_point: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Sorted boundary-sample indices.
    pub members: Vec<u32>,
    pub surface_measure: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicSystem {
    pub s: f64,
    pub delta: f64,
    pub k_max: usize,
    pub seed: u64,
    pub levels: Vec<Vec<DyadicCell>>,
    /// `owner[k][i]`: index of the level-`k` cell containing sample `i`.
    pub owner: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjacentFamily {
    pub systems: Vec<DyadicSystem>,
}

/// Sandwich constants: every member lies within `upper * scale` of its
/// reference point, every sample within `lower * scale` is a member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichConstants {
    pub lower: f64,
    pub upper: f64,
    pub max_children: usize,
    pub children_per_level: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyReport {
    pub trials: usize,
    pub successes: usize,
    pub success_fraction: f64,
    /// Largest factor among successful trials.
    pub worst_factor: f64,
    /// Largest factor over all trials.
    pub max_factor: f64,
    pub factor_limit: f64,
}

impl DyadicSystem {
    pub fn scale(&self, k: usize) -> f64 {
        self.delta * self.s.powi(-(k as i32))
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Reference points of the deepest level.
    pub fn deepest_net(&self) -> Vec<usize> {
        self.levels[self.k_max].iter().map(|c| c.ref_point).collect()
    }

    /// Cell indices of the ancestors of deepest cell `c`, from level 0 down.
    pub fn ancestors(&self, deepest: usize) -> Vec<usize> {
        let mut out = vec![0; self.k_max + 1];
        let mut c = deepest;
        for k in (0..=self.k_max).rev() {
            out[k] = c;
            if k > 0 {
                c = self.levels[k][c].parent.expect("non-root cell has a parent");
            }
        }
        out
    }

    /// Exact check that every level partitions `0..n`.
    pub fn check_partition(&self, n: usize) -> bool {
        self.levels.iter().all(|cells| {
            let mut seen = vec![false; n];
            for c in cells {
                for &m in &c.members {
                    let m = m as usize;
                    if m >= n || seen[m] {
                        return false;
                    }
                    seen[m] = true;
                }
            }
            seen.into_iter().all(|b| b)
        })
    }

    /// Exact check that cells at adjacent levels are nested or disjoint, and
    /// that every child is contained in its recorded parent.
    pub fn check_nesting(&self) -> bool {
        for k in 1..self.levels.len() {
            for c in &self.levels[k] {
                let parent = match c.parent {
                    Some(p) => &self.levels[k - 1][p],
                    None => return false,
                };
                if !is_subset(&c.members, &parent.members) {
                    return false;
                }
                for other in &self.levels[k - 1] {
                    if other.index != parent.index && !is_disjoint(&c.members, &other.members) {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn sandwich<T: Real>(&self, metric: &BoundaryMetric<T>) -> SandwichConstants {
        let n = metric.len();
        let mut lower = f64::INFINITY;
        let mut upper = 0.0f64;
        let mut children_per_level = Vec::new();
        for (k, cells) in self.levels.iter().enumerate() {
            let scale = self.scale(k);
            let owner = &self.owner[k];
            for c in cells {
                for i in 0..n {
                    let d = metric.dist(c.ref_point, i).to_f64_lossy() / scale;
                    if owner[i] as usize == c.index {
                        upper = upper.max(d);
                    } else {
                        lower = lower.min(d);
                    }
                }
            }
            children_per_level.push(cells.iter().map(|c| c.children.len()).max().unwrap_or(0));
        }
        SandwichConstants {
            lower,
            upper,
            max_children: children_per_level.iter().copied().max().unwrap_or(0),
            children_per_level,
        }
    }
}

fn is_subset(a: &[u32], b: &[u32]) -> bool {
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
    }
    true
}

fn is_disjoint(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return false,
        }
    }
    true
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    perm
}

fn check_scale(s: f64, delta: f64) -> Result<()> {
    if !(s > 1.0) {
        return Err(Error::invalid("s", "must be > 1"));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid("delta", "must be positive"));
    }
    Ok(())
}

/// Extends `net` greedily, in `order`, by samples farther than `radius` from
/// every current net point.
fn extend_net<T: Real>(metric: &BoundaryMetric<T>, net: &mut Vec<usize>, order: &[usize], radius: f64) {
    let r = T::lit(radius);
    let mut in_net = vec![false; metric.len()];
    for &p in net.iter() {
        in_net[p] = true;
    }
    for &i in order {
        if in_net[i] {
            continue;
        }
        if net.iter().all(|&p| metric.dist(p, i) > r) {
            net.push(i);
            in_net[i] = true;
        }
    }
}

/// Greedy maximal `s^{-k} delta`-separated subset of the boundary samples,
/// scanned in the seed-determined order.
pub fn build_net<T: Real>(metric: &BoundaryMetric<T>, k: usize, s: f64, delta: f64, seed: u64) -> Result<Vec<usize>> {
    check_scale(s, delta)?;
    let order = permutation(metric.len(), seed);
    let mut net = Vec::new();
    extend_net(metric, &mut net, &order, delta * s.powi(-(k as i32)));
    Ok(net)
}

/// Nearest point of `candidates` to sample `i`, ties to the smaller sample index.
fn nearest_of<T: Real>(metric: &BoundaryMetric<T>, candidates: &[usize], i: usize) -> usize {
    let mut best = 0;
    let mut best_d = T::infinity();
    for (pos, &c) in candidates.iter().enumerate() {
        let d = metric.dist(c, i);
        if d < best_d || (d == best_d && c < candidates[best]) {
            best = pos;
            best_d = d;
        }
    }
    best
}

pub fn build_system<T: Real>(
    metric: &BoundaryMetric<T>,
    s: f64,
    delta: f64,
    k_max: usize,
    seed: u64,
) -> Result<DyadicSystem> {
    check_scale(s, delta)?;
    let n = metric.len();
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    let finest = delta * s.powi(-(k_max as i32));
    let resolution = metric.cloud().boundary_tolerance.to_f64_lossy();
    if finest <= resolution {
        return Err(Error::ResolutionExceeded { finest, resolution });
    }
    let order = permutation(n, seed);
    let mut nets: Vec<Vec<usize>> = Vec::with_capacity(k_max + 1);
    let mut net = Vec::new();
    for k in 0..=k_max {
        extend_net(metric, &mut net, &order, delta * s.powi(-(k as i32)));
        nets.push(net.clone());
    }

    // parent links between consecutive nets
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); k_max + 1];
    for k in 1..=k_max {
        parents[k] = nets[k].iter().map(|&p| nearest_of(metric, &nets[k - 1], p)).collect();
    }

    // sample ownership at the deepest level, then upwards through the parents
    let mut owner: Vec<Vec<u32>> = vec![Vec::new(); k_max + 1];
    owner[k_max] = (0..n).map(|i| nearest_of(metric, &nets[k_max], i) as u32).collect();
    for k in (0..k_max).rev() {
        owner[k] = owner[k + 1].iter().map(|&c| parents[k + 1][c as usize] as u32).collect();
    }

    let weights = &metric.cloud().boundary_weights;
    let mut levels = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut cells: Vec<DyadicCell> = nets[k]
            .iter()
            .enumerate()
            .map(|(j, &p)| DyadicCell {
                level: k,
                index: j,
                ref_point: p,
                parent: (k > 0).then(|| parents[k][j]),
                children: Vec::new(),
                members: Vec::new(),
                surface_measure: 0.0,
            })
            .collect();
        for (i, &c) in owner[k].iter().enumerate() {
            let cell = &mut cells[c as usize];
            cell.members.push(i as u32);
            cell.surface_measure += weights[i].to_f64_lossy();
        }
        levels.push(cells);
    }
    for k in 1..=k_max {
        for j in 0..levels[k].len() {
            let p = parents[k][j];
            levels[k - 1][p].children.push(j);
        }
    }
    Ok(DyadicSystem {
        s,
        delta,
        k_max,
        seed,
        levels,
        owner,
    })
}

/// `count` systems with seeds `base_seed .. base_seed + count`.
pub fn build_adjacent_family<T: Real>(
    metric: &BoundaryMetric<T>,
    s: f64,
    delta: f64,
    k_max: usize,
    count: usize,
    base_seed: u64,
) -> Result<AdjacentFamily> {
    if count == 0 {
        return Err(Error::invalid("systems", "must be >= 1"));
    }
    let systems = (0..count as u64)
        .into_par_iter()
        .map(|i| build_system(metric, s, delta, k_max, base_seed + i))
        .collect::<Result<Vec<_>>>()?;
    Ok(AdjacentFamily { systems })
}

/// Finds the deepest cell of a system containing an arbitrary boundary point:
/// the nearest deepest-level reference point, ties to the smaller index.
pub struct Locator<'a, T> {
    metric: &'a BoundaryMetric<'a, T>,
    net: Vec<usize>,
    /// `(angle, net position)` sorted by angle, used on the circle.
    angles: Option<Vec<(f64, usize)>>,
}

impl<'a, T: Real> Locator<'a, T> {
    pub fn new(system: &DyadicSystem, metric: &'a BoundaryMetric<'a, T>) -> Self {
        let net = system.deepest_net();
        let angles = (metric.domain().kind == DomainKind::Ball { n: 1 }).then(|| {
            let mut a: Vec<(f64, usize)> = net
                .iter()
                .enumerate()
                .map(|(pos, &p)| {
                    let z = metric.cloud().boundary_point(p)[0];
                    (z.im.to_f64_lossy().atan2(z.re.to_f64_lossy()), pos)
                })
                .collect();
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            a
        });
        Locator { metric, net, angles }
    }

    pub fn locate(&self, zeta: &[C<T>]) -> usize {
        match &self.angles {
            Some(a) => {
                let th = zeta[0].im.to_f64_lossy().atan2(zeta[0].re.to_f64_lossy());
                let pos = a.partition_point(|x| x.0 < th);
                let len = a.len();
                let mut best = a[pos % len].1;
                let mut best_d = self.metric.dist_to(zeta, self.net[best]);
                // the nearest point in angle is one of the two neighbours
                for cand in [a[(pos + len - 1) % len].1, a[(pos + 1) % len].1] {
                    let d = self.metric.dist_to(zeta, self.net[cand]);
                    if d < best_d || (d == best_d && self.net[cand] < self.net[best]) {
                        best = cand;
                        best_d = d;
                    }
                }
                best
            }
            None => {
                let mut best = 0;
                let mut best_d = T::infinity();
                for (pos, &p) in self.net.iter().enumerate() {
                    let d = self.metric.dist_to(zeta, p);
                    if d < best_d || (d == best_d && p < self.net[best]) {
                        best = pos;
                        best_d = d;
                    }
                }
                best
            }
        }
    }
}

/// Default acceptance factor for [`verify_adjacency`]: `s^Q`, the measure
/// ratio between consecutive levels, with `Q` the homogeneous dimension of
/// the boundary (`2n` on the sphere, at most 2 for the egg metric).
pub fn default_factor_limit<T: Real>(dom: &ModelDomain<T>, s: f64) -> f64 {
    let q = match dom.kind {
        DomainKind::Ball { n } => 2 * n,
        DomainKind::Egg { .. } => 2,
    };
    s.powi(q as i32)
}

/// Default radius range for [`verify_adjacency`]: from three times the
/// median sample spacing to slightly beyond the diameter.
pub fn default_radius_range<T: Real>(metric: &BoundaryMetric<T>) -> (f64, f64) {
    (3.0 * metric.median_spacing().to_f64_lossy(), 1.05 * metric.diameter().to_f64_lossy())
}

/// Samples random boundary balls `B(z, r)`, `z` a boundary sample and `r`
/// log-uniform in `[r_min, r_max]`, and looks in every system for cells
/// containing `z` that sit inside and around the ball. A trial succeeds when
/// both exist with measures within `factor_limit` of `mu(B(z, r))`.
pub fn verify_adjacency<T: Real>(
    family: &AdjacentFamily,
    metric: &BoundaryMetric<T>,
    trials: usize,
    r_range: (f64, f64),
    factor_limit: f64,
    seed: u64,
) -> AdjacencyReport {
    let n = metric.len();
    let weights: Vec<f64> = metric.cloud().boundary_weights.iter().map(|w| w.to_f64_lossy()).collect();
    let total: f64 = weights.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lr0, lr1) = (r_range.0.ln(), r_range.1.ln());
    let mut successes = 0;
    let mut worst = 1.0f64;
    let mut max_factor = 1.0f64;
    let mut dist = vec![0.0; n];
    for _ in 0..trials {
        let z = rng.gen_range(0..n);
        let r = rng.gen_range(lr0..=lr1).exp();
        let mut ball_measure = 0.0;
        let mut ball_count = 0usize;
        for (i, d) in dist.iter_mut().enumerate() {
            *d = metric.dist(z, i).to_f64_lossy();
            if *d < r {
                ball_measure += weights[i];
                ball_count += 1;
            }
        }
        // the whole boundary acts as a common root cell
        let mut inner = if ball_count == n { total } else { 0.0f64 };
        let mut outer = total;
        for sys in &family.systems {
            for k in 0..=sys.k_max {
                let cell = &sys.levels[k][sys.owner[k][z] as usize];
                let mut max_d = 0.0f64;
                let mut inside = 0usize;
                for &m in &cell.members {
                    let d = dist[m as usize];
                    max_d = max_d.max(d);
                    if d < r {
                        inside += 1;
                    }
                }
                if max_d < r {
                    inner = inner.max(cell.surface_measure);
                }
                if inside == ball_count {
                    outer = outer.min(cell.surface_measure);
                }
            }
        }
        let factor = if inner > 0.0 {
            (ball_measure / inner).max(outer / ball_measure)
        } else {
            f64::INFINITY
        };
        max_factor = max_factor.max(factor);
        if factor <= factor_limit {
            successes += 1;
            worst = worst.max(factor);
        }
    }
    AdjacencyReport {
        trials,
        successes,
        success_fraction: successes as f64 / trials.max(1) as f64,
        worst_factor: worst,
        max_factor,
        factor_limit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SampleCloud;

    fn disc_cloud(nb: usize) -> (ModelDomain<f64>, SampleCloud<f64>) {
        let dom = ModelDomain::<f64>::ball(1);
        let cloud = SampleCloud::sample(&dom, 50, nb, 11).unwrap();
        (dom, cloud)
    }

    #[test]
    fn wide_net_is_a_single_point() {
        let (dom, cloud) = disc_cloud(200);
        let metric = BoundaryMetric::new(&dom, &cloud);
        assert_eq!(build_net(&metric, 0, 8.0, 4.0, 3).unwrap().len(), 1);
    }

    #[test]
    fn net_is_separated_and_covering() {
        let (dom, cloud) = disc_cloud(400);
        let metric = BoundaryMetric::new(&dom, &cloud);
        let net = build_net(&metric, 1, 8.0, 2.0, 5).unwrap();
        let r = 0.25;
        for (a, &p) in net.iter().enumerate() {
            for &q in &net[a + 1..] {
                assert!(metric.dist(p, q) > r);
            }
        }
        for i in 0..metric.len() {
            assert!(net.iter().any(|&p| metric.dist(p, i) <= r));
        }
    }

    #[test]
    fn system_partitions_and_nests() {
        let (dom, cloud) = disc_cloud(500);
        let metric = BoundaryMetric::new(&dom, &cloud);
        let sys = build_system(&metric, 8.0, 0.8, 3, 1).unwrap();
        assert!(sys.check_partition(500));
        assert!(sys.check_nesting());
        let sw = sys.sandwich(&metric);
        assert!(sw.lower >= 0.1 && sw.upper <= 4.0, "{sw:?}");
    }

    #[test]
    fn resolution_is_enforced() {
        let (dom, cloud) = disc_cloud(50);
        let metric = BoundaryMetric::new(&dom, &cloud);
        let err = build_system(&metric, 8.0, 0.8, 20, 1).unwrap_err();
        assert!(matches!(err, Error::ResolutionExceeded { .. }));
    }

    #[test]
    fn locator_matches_sample_owner() {
        let (dom, cloud) = disc_cloud(300);
        let metric = BoundaryMetric::new(&dom, &cloud);
        let sys = build_system(&metric, 8.0, 0.8, 2, 9).unwrap();
        let loc = Locator::new(&sys, &metric);
        for i in 0..300 {
            assert_eq!(loc.locate(cloud.boundary_point(i)), sys.owner[2][i] as usize);
        }
    }

    #[test]
    fn huge_balls_always_succeed() {
        let (dom, cloud) = disc_cloud(200);
        let metric = BoundaryMetric::new(&dom, &cloud);
        let fam = build_adjacent_family(&metric, 8.0, 0.8, 2, 1, 0).unwrap();
        let rep = verify_adjacency(&fam, &metric, 50, (5.0, 6.0), 1.0 + 1e-12, 1);
        assert_eq!(rep.successes, 50);
    }

    #[test]
    fn subset_and_disjoint_helpers() {
        assert!(is_subset(&[1, 3], &[0, 1, 2, 3]));
        assert!(!is_subset(&[1, 4], &[0, 1, 2, 3]));
        assert!(is_disjoint(&[1, 3], &[0, 2, 4]));
        assert!(!is_disjoint(&[1, 3], &[3]));
    }
}
