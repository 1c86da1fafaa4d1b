//! Discretised Bergman projection on the ball, the positive operator `P+`,
//! the sparse tent operators `Q+`, the weighted dyadic maximal function and
//! the pointwise sparse-domination check.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{AdjacentFamily, BoundaryMetric};
use crate::error::{Error, Result};
use crate::geometry::{DomainKind, ModelDomain, SampleCloud};
use crate::scalar::{cnorm, Real, C};
use crate::tents::{TentLocator, TentSystem};

const DUMP_MAGIC: &[u8; 8] = b"BKMAT001";

fn ball_dim<T: Real>(dom: &ModelDomain<T>, operation: &'static str) -> Result<usize> {
    match dom.kind {
        DomainKind::Ball { n } => Ok(n),
        DomainKind::Egg { .. } => Err(Error::WrongDomainKind {
            operation,
            kind: dom.kind_name(),
        }),
    }
}

/// `n! / pi^n`.
fn kernel_constant(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product::<f64>() / std::f64::consts::PI.powi(n as i32)
}

/// Ball kernel from depths `a`, `b` and feet `zeta`, `eta`. Writing
/// `1 - <z, w>` as `(a + b - ab) + (1 - a)(1 - b)(1 - <zeta, eta>)` keeps full
/// relative accuracy when both points are close to the boundary and to each
/// other, and is exactly Hermitian in floating point.
#[inline]
pub(crate) fn ball_kernel_polar<T: Real>(cst: T, n: usize, a: T, zeta: &[C<T>], b: T, eta: &[C<T>]) -> C<T> {
    let mut half_sq = T::zero();
    let mut im = T::zero();
    for (x, y) in zeta.iter().zip(eta) {
        half_sq = half_sq + (x - y).norm_sqr();
        im = im + (x.im * y.re - x.re * y.im);
    }
    let rr = (T::one() - a) * (T::one() - b);
    let d = C::new(a + b - a * b + rr * half_sq * T::lit(0.5), -rr * im);
    d.inv().powi(n as i32 + 1) * cst
}

/// `K(z, w) = n!/pi^n (1 - <z, w>)^{-(n+1)}` on the unit ball.
pub fn bergman_kernel<T: Real>(dom: &ModelDomain<T>, z: &[C<T>], w: &[C<T>]) -> Result<C<T>> {
    let n = ball_dim(dom, "bergman_kernel")?;
    for v in [z, w] {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
    }
    let (a, zeta) = dom.nearest_boundary(z)?;
    let (b, eta) = dom.nearest_boundary(w)?;
    if cnorm(z) >= T::one() || cnorm(w) >= T::one() {
        return Err(Error::invalid("z, w", "must lie in the open ball"));
    }
    Ok(ball_kernel_polar(T::lit(kernel_constant(n)), n, a, &zeta, b, &eta))
}

/// `K(z_i, w)` for every interior sample, from the stored depths and feet so
/// samples within rounding of the sphere keep their accuracy.
pub fn kernel_column<T: Real>(dom: &ModelDomain<T>, cloud: &SampleCloud<T>, w: &[C<T>]) -> Result<Vec<C<T>>> {
    let n = ball_dim(dom, "kernel_column")?;
    if w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.len() });
    }
    if cnorm(w) >= T::one() {
        return Err(Error::invalid("w", "must lie in the open ball"));
    }
    let (b, eta) = dom.nearest_boundary(w)?;
    let cst = T::lit(kernel_constant(n));
    Ok((0..cloud.n_interior())
        .into_par_iter()
        .map(|i| ball_kernel_polar(cst, n, cloud.depth[i], cloud.foot(i), b, &eta))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Storage {
    /// All `M^2` entries held in memory.
    Dense,
    /// Entries recomputed inside every product.
    OnTheFly,
}

/// Kernel entries `K(z_i, w_j)` over the interior samples of a ball cloud,
/// with the quadrature weights bound to the columns.
#[derive(Clone, Debug)]
pub struct KernelMatrix<T> {
    n: usize,
    cst: T,
    depth: Vec<T>,
    feet: Vec<C<T>>,
    weights: Vec<T>,
    dense: Option<Vec<C<T>>>,
}

impl<T: Real> KernelMatrix<T> {
    pub fn new(dom: &ModelDomain<T>, cloud: &SampleCloud<T>, storage: Storage) -> Result<Self> {
        let n = ball_dim(dom, "kernel matrix")?;
        let mut km = KernelMatrix {
            n,
            cst: T::lit(kernel_constant(n)),
            depth: cloud.depth.clone(),
            feet: cloud.feet.clone(),
            weights: cloud.interior_weights.clone(),
            dense: None,
        };
        if storage == Storage::Dense {
            let m = km.len();
            let rows: Vec<Vec<C<T>>> = (0..m)
                .into_par_iter()
                .map(|i| (0..m).map(|j| km.entry(i, j)).collect())
                .collect();
            km.dense = Some(rows.concat());
        }
        Ok(km)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_dense(&self) -> bool {
        self.dense.is_some()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> C<T> {
        if let Some(d) = &self.dense {
            return d[i * self.len() + j];
        }
        let n = self.n;
        ball_kernel_polar(
            self.cst,
            n,
            self.depth[i],
            &self.feet[i * n..(i + 1) * n],
            self.depth[j],
            &self.feet[j * n..(j + 1) * n],
        )
    }

    /// Largest `|K_ij - conj K_ji| / |K_ij|`.
    pub fn hermitian_defect(&self) -> T {
        let m = self.len();
        let worst = (0..m)
            .into_par_iter()
            .map(|i| {
                (i..m)
                    .map(|j| {
                        let a = self.entry(i, j);
                        ((a - self.entry(j, i).conj()).norm() / a.norm()).to_f64_lossy()
                    })
                    .fold(0.0f64, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        T::lit(worst)
    }

    /// `Pf` at every sample.
    pub fn apply(&self, f: &[C<T>]) -> Vec<C<T>> {
        let rows: Vec<usize> = (0..self.len()).collect();
        self.apply_rows(&rows, f)
    }

    /// `Pf` at the listed samples only. Columns where `f` vanishes are
    /// skipped, so localized `f` are cheap even without a dense matrix.
    pub fn apply_rows(&self, rows: &[usize], f: &[C<T>]) -> Vec<C<T>> {
        let zero = C::new(T::zero(), T::zero());
        let support: Vec<(usize, C<T>)> = f
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != zero)
            .map(|(j, v)| (j, v * self.weights[j]))
            .collect();
        rows.par_iter()
            .map(|&i| support.iter().fold(zero, |acc, (j, fw)| acc + self.entry(i, *j) * fw))
            .collect()
    }

    /// `P+ f = sum_j |K_ij| f_j dV_j`.
    pub fn apply_abs(&self, f: &[T]) -> Vec<T> {
        let support: Vec<(usize, T)> = f
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != T::zero())
            .map(|(j, v)| (j, *v * self.weights[j]))
            .collect();
        (0..self.len())
            .into_par_iter()
            .map(|i| support.iter().fold(T::zero(), |acc, (j, fw)| acc + self.entry(i, *j).norm() * *fw))
            .collect()
    }

    /// Writes the matrix as `BKMAT001`, `u64` rows, `u64` cols, then the
    /// entries row-major as little-endian `f64` pairs `(re, im)`.
    pub fn dump(&self, path: &Path) -> Result<()> {
        let m = self.len();
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(m as u64).to_le_bytes())?;
        w.write_all(&(m as u64).to_le_bytes())?;
        for i in 0..m {
            for j in 0..m {
                let e = self.entry(i, j);
                w.write_all(&e.re.to_f64_lossy().to_le_bytes())?;
                w.write_all(&e.im.to_f64_lossy().to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a [`KernelMatrix::dump`] file: `(rows, cols, entries)`.
pub fn read_dump(path: &Path) -> Result<(usize, usize, Vec<C<f64>>)> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::Serde("not a kernel matrix dump".into()));
    }
    let mut u = [0u8; 8];
    r.read_exact(&mut u)?;
    let rows = u64::from_le_bytes(u) as usize;
    r.read_exact(&mut u)?;
    let cols = u64::from_le_bytes(u) as usize;
    let mut out = Vec::with_capacity(rows * cols);
    let mut buf = [0u8; 16];
    for _ in 0..rows * cols {
        r.read_exact(&mut buf)?;
        let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
        out.push(C::new(re, im));
    }
    Ok((rows, cols, out))
}

/// One tent as seen by a sparse operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseTent {
    pub members: Vec<u32>,
    pub volume: f64,
}

/// `Q+_0` (the global average) and the tent lists of the systems `Q+_l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseOperatorSpec {
    pub global: bool,
    pub systems: Vec<Vec<SparseTent>>,
}

impl SparseOperatorSpec {
    /// Every nonempty tent of every system, plus the global term if asked.
    pub fn from_tents(systems: &[TentSystem], global: bool) -> Self {
        SparseOperatorSpec {
            global,
            systems: systems
                .iter()
                .map(|ts| {
                    ts.tents
                        .iter()
                        .filter(|t| t.volume > 0.0)
                        .map(|t| SparseTent {
                            members: t.members.clone(),
                            volume: t.volume,
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn single_tent(members: Vec<u32>, volume: f64) -> Self {
        SparseOperatorSpec {
            global: false,
            systems: vec![vec![SparseTent { members, volume }]],
        }
    }

    /// The operator of system `l` alone.
    pub fn system(&self, l: usize) -> Self {
        SparseOperatorSpec {
            global: false,
            systems: vec![self.systems[l].clone()],
        }
    }
}

/// `Q+ f = [<f nu>_Omega] + sum_l sum_K 1_K <f nu>_K`, averages against `dV`.
pub fn apply_q_sparse<T: Real>(spec: &SparseOperatorSpec, cloud: &SampleCloud<T>, nu: &[T], f: &[T]) -> Vec<T> {
    let n = cloud.n_interior();
    let fnu: Vec<f64> = (0..n)
        .map(|i| (f[i] * nu[i] * cloud.interior_weights[i]).to_f64_lossy())
        .collect();
    let mut out = vec![0.0f64; n];
    if spec.global {
        let g = fnu.iter().sum::<f64>() / cloud.interior_volume().to_f64_lossy();
        out.iter_mut().for_each(|o| *o += g);
    }
    for tents in &spec.systems {
        for t in tents.iter().filter(|t| t.volume > 0.0) {
            let avg = t.members.iter().map(|&i| fnu[i as usize]).sum::<f64>() / t.volume;
            for &i in &t.members {
                out[i as usize] += avg;
            }
        }
    }
    out.into_iter().map(T::lit).collect()
}

/// `M f(z) = sup over tents K containing z of <|f|>_K` against `sigma dV`;
/// zero off the tents.
pub fn maximal<T: Real>(system: &TentSystem, cloud: &SampleCloud<T>, sigma: &[T], f: &[T]) -> Vec<T> {
    let n = cloud.n_interior();
    let sw: Vec<f64> = (0..n)
        .map(|i| (sigma[i] * cloud.interior_weights[i]).to_f64_lossy())
        .collect();
    let avg: Vec<f64> = system
        .tents
        .par_iter()
        .map(|t| {
            let (num, den) = t.members.iter().fold((0.0, 0.0), |(a, b), &i| {
                let i = i as usize;
                (a + f[i].abs().to_f64_lossy() * sw[i], b + sw[i])
            });
            if den > 0.0 {
                num / den
            } else {
                0.0
            }
        })
        .collect();
    (0..n)
        .map(|i| T::lit(system.tents_of(i).map(|t| avg[t]).fold(0.0, f64::max)))
        .collect()
}

/// Random pair pool for [`check_domination`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationConfig {
    pub clusters: usize,
    pub per_cluster: usize,
    pub pairs: usize,
    /// Cluster depths are log-uniform in this range. `None` uses
    /// `(Lambda(median boundary spacing), 0.45)`: shallower than that the
    /// dyadic cells are single samples and no longer resolve the pair.
    pub depth_range: Option<(f64, f64)>,
    /// Fraction of pairs drawn inside one cluster.
    pub same_cluster_fraction: f64,
    pub seed: u64,
}

impl Default for DominationConfig {
    fn default() -> Self {
        DominationConfig {
            clusters: 200,
            per_cluster: 10,
            pairs: 100_000,
            depth_range: None,
            same_cluster_fraction: 0.5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub pairs: usize,
    /// Pairs sharing a tent that holds no interior sample; left out.
    pub excluded_zero_volume: usize,
    /// Pairs sharing no tent in any system.
    pub only_global: usize,
    /// Largest ratio: the empirical domination constant.
    pub constant: f64,
    pub quantile_999: f64,
    pub mean_ratio: f64,
    pub worst_pair: Option<(Vec<[f64; 2]>, Vec<[f64; 2]>)>,
}

/// Points placed once in the tents of every system of a family.
pub struct PairPool<T> {
    pub points: Vec<Vec<C<T>>>,
    pub cluster: Vec<usize>,
    /// `chains[l][p]`: deepest tent level and cell chain of point `p` in system `l`.
    chains: Vec<Vec<(i32, Vec<u32>)>>,
    depth: Vec<T>,
    feet: Vec<Vec<C<T>>>,
}

impl<T: Real> PairPool<T> {
    /// Places explicit points.
    pub fn from_points(
        dom: &ModelDomain<T>,
        family: &AdjacentFamily,
        metric: &BoundaryMetric<T>,
        points: Vec<Vec<C<T>>>,
        cluster: Vec<usize>,
    ) -> Result<Self> {
        let mut depth = Vec::with_capacity(points.len());
        let mut feet = Vec::with_capacity(points.len());
        for z in &points {
            let (d, f) = dom.nearest_boundary(z)?;
            depth.push(d);
            feet.push(f);
        }
        let chains = family
            .systems
            .iter()
            .map(|sys| {
                let tl = TentLocator::new(dom, sys, metric);
                (0..points.len())
                    .into_par_iter()
                    .map(|p| tl.locate(depth[p].to_f64_lossy(), &feet[p]))
                    .collect()
            })
            .collect();
        Ok(PairPool {
            points,
            cluster,
            chains,
            depth,
            feet,
        })
    }

    /// Clusters around random boundary points: each cluster has a depth
    /// scale `t`, and its points sit at depth about `t` with feet spread over
    /// a boundary ball of radius `sqrt(t)` (complex tangential directions
    /// by `sqrt(t)`, the complex normal direction by `t`).
    pub fn clustered(
        dom: &ModelDomain<T>,
        family: &AdjacentFamily,
        metric: &BoundaryMetric<T>,
        config: &DominationConfig,
    ) -> Result<Self> {
        let n = ball_dim(dom, "domination pool")?;
        let (lo, hi) = match config.depth_range {
            Some(r) => r,
            None => (dom.tent_height(metric.median_spacing()).to_f64_lossy().min(0.2), 0.45),
        };
        if !(lo > 0.0 && hi > lo && hi < 1.0) {
            return Err(Error::invalid("depth_range", "need 0 < lo < hi < 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut points = Vec::new();
        let mut cluster = Vec::new();
        for c in 0..config.clusters {
            let centre = unit_vector(n, &mut rng);
            let t = rng.gen_range(lo.ln()..hi.ln()).exp();
            for _ in 0..config.per_cluster {
                let depth = (t * rng.gen_range(0.5..1.5)).min(0.99);
                let g = unit_vector(n, &mut rng);
                let dot: C<f64> = g.iter().zip(&centre).map(|(a, b)| a * b.conj()).sum();
                let scale = t.sqrt() * rng.gen::<f64>();
                let phase = C::from_polar(1.0, t * rng.sample::<f64, _>(StandardNormal));
                let mut foot: Vec<C<f64>> = centre
                    .iter()
                    .zip(&g)
                    .map(|(c, gj)| (c + (gj - c * dot) * scale) * phase)
                    .collect();
                let norm = cnorm(&foot);
                foot.iter_mut().for_each(|x| *x /= norm);
                points.push(foot.iter().map(|x| C::new(T::lit(x.re), T::lit(x.im)) * T::lit(1.0 - depth)).collect());
                cluster.push(c);
            }
        }
        Self::from_points(dom, family, metric, points, cluster)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `1/V(Omega) + sum over systems and shared tents of 1/V(K)`, or `None`
    /// if a shared tent has zero volume. Also returns whether any tent is shared.
    pub fn domination_sum(&self, tents: &[TentSystem], volume: f64, a: usize, b: usize) -> Option<(f64, bool)> {
        let mut sum = 1.0 / volume;
        let mut shared = false;
        for (ts, chain) in tents.iter().zip(&self.chains) {
            let (ta, ca) = &chain[a];
            let (tb, cb) = &chain[b];
            let top = (*ta).min(*tb);
            for k in 0..(top + 1).max(0) as usize {
                if ca[k] != cb[k] {
                    break;
                }
                let v = ts.tents[ts.tent_id(k, ca[k] as usize)].volume;
                if v <= 0.0 {
                    return None;
                }
                sum += 1.0 / v;
                shared = true;
            }
        }
        Some((sum, shared))
    }

    pub fn kernel(&self, n: usize, a: usize, b: usize) -> C<T> {
        ball_kernel_polar(T::lit(kernel_constant(n)), n, self.depth[a], &self.feet[a], self.depth[b], &self.feet[b])
    }
}

fn unit_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<C<f64>> {
    let v: Vec<C<f64>> = (0..n)
        .map(|_| C::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let r = cnorm(&v);
    v.into_iter().map(|x| x / r).collect()
}

/// Ratios `|K(z, w)| / (1/V(Omega) + sum_shared 1/V(K))` over random pairs of
/// the pool; the maximum is the empirical domination constant.
pub fn check_domination<T: Real>(
    dom: &ModelDomain<T>,
    cloud: &SampleCloud<T>,
    tents: &[TentSystem],
    pool: &PairPool<T>,
    pairs: usize,
    same_cluster_fraction: f64,
    seed: u64,
) -> Result<DominationReport> {
    let n = ball_dim(dom, "check_domination")?;
    if pool.len() < 2 {
        return Err(Error::invalid("pool", "needs at least two points"));
    }
    let volume = cloud.interior_volume().to_f64_lossy();
    let mut by_cluster: Vec<Vec<usize>> = Vec::new();
    for (p, &c) in pool.cluster.iter().enumerate() {
        if by_cluster.len() <= c {
            by_cluster.resize(c + 1, Vec::new());
        }
        by_cluster[c].push(p);
    }
    by_cluster.retain(|c| c.len() >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(pairs);
    let mut excluded = 0;
    let mut only_global = 0;
    let mut worst = (0.0f64, 0, 0);
    for _ in 0..pairs {
        let (a, b) = if !by_cluster.is_empty() && rng.gen::<f64>() < same_cluster_fraction {
            let c = &by_cluster[rng.gen_range(0..by_cluster.len())];
            let a = rng.gen_range(0..c.len());
            let b = (a + rng.gen_range(1..c.len())) % c.len();
            (c[a], c[b])
        } else {
            let a = rng.gen_range(0..pool.len());
            let b = (a + rng.gen_range(1..pool.len())) % pool.len();
            (a, b)
        };
        let Some((sum, shared)) = pool.domination_sum(tents, volume, a, b) else {
            excluded += 1;
            continue;
        };
        if !shared {
            only_global += 1;
        }
        let r = pool.kernel(n, a, b).norm().to_f64_lossy() / sum;
        if r > worst.0 {
            worst = (r, a, b);
        }
        ratios.push(r);
    }
    if ratios.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    ratios.sort_by(|x, y| x.total_cmp(y));
    let q = ratios[((ratios.len() as f64 * 0.999) as usize).min(ratios.len() - 1)];
    let pt = |p: usize| -> Vec<[f64; 2]> {
        pool.points[p]
            .iter()
            .map(|c| [c.re.to_f64_lossy(), c.im.to_f64_lossy()])
            .collect()
    };
    Ok(DominationReport {
        pairs: ratios.len(),
        excluded_zero_volume: excluded,
        only_global,
        constant: worst.0,
        quantile_999: q,
        mean_ratio: mean,
        worst_pair: Some((pt(worst.1), pt(worst.2))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::build_adjacent_family;
    use crate::tents::build_tents;

    /// `sum_alpha z^alpha conj(w)^alpha / ||z^alpha||^2` with
    /// `||z^alpha||^2 = pi^n alpha! / (n + |alpha|)!`, for n = 2.
    fn series_n2(z: &[C<f64>], w: &[C<f64>], degree: usize) -> C<f64> {
        let fact = |k: usize| (1..=k).map(|x| x as f64).product::<f64>();
        let mut s = C::new(0.0, 0.0);
        for a1 in 0..=degree {
            for a2 in 0..=(degree - a1) {
                let norm2 = std::f64::consts::PI.powi(2) * fact(a1) * fact(a2) / fact(2 + a1 + a2);
                s += (z[0] * w[0].conj()).powi(a1 as i32) * (z[1] * w[1].conj()).powi(a2 as i32) / norm2;
            }
        }
        s
    }

    #[test]
    fn kernel_at_origin_is_one_over_pi() {
        let dom = ModelDomain::<f64>::ball(1);
        let o = [C::new(0.0, 0.0)];
        let k = bergman_kernel(&dom, &o, &o).unwrap();
        assert!((k - C::new(1.0 / std::f64::consts::PI, 0.0)).norm() < 1e-15);
        let k = bergman_kernel(&dom, &[C::new(0.5, 0.0)], &o).unwrap();
        assert!((k.re - 1.0 / std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn kernel_matches_monomial_series_on_the_two_ball() {
        let dom = ModelDomain::<f64>::ball(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let mut pick = || {
                let v = unit_vector(2, &mut rng);
                let r = 0.7 * rng.gen::<f64>();
                v.into_iter().map(|x| x * r).collect::<Vec<_>>()
            };
            let (z, w) = (pick(), pick());
            let closed = bergman_kernel(&dom, &z, &w).unwrap();
            let series = series_n2(&z, &w, 60);
            assert!((closed - series).norm() < 1e-8, "{closed} {series}");
        }
    }

    #[test]
    fn kernel_is_rejected_on_the_egg() {
        let dom = ModelDomain::<f64>::egg(2);
        let z = [C::new(0.1, 0.0), C::new(0.1, 0.0)];
        assert!(matches!(bergman_kernel(&dom, &z, &z), Err(Error::WrongDomainKind { .. })));
    }

    #[test]
    fn projection_reproduces_constants_and_kills_conjugates() {
        let dom = ModelDomain::<f64>::ball(1);
        let cloud = SampleCloud::sample(&dom, 3000, 64, 1).unwrap();
        let km = KernelMatrix::new(&dom, &cloud, Storage::Dense).unwrap();
        assert_eq!(km.hermitian_defect(), 0.0);
        let m = km.len();
        let one = vec![C::new(1.0, 0.0); m];
        let p1 = km.apply(&one);
        let err = (p1.iter().map(|v| (v - 1.0).norm_sqr()).zip(&cloud.interior_weights).map(|(e, w)| e * w).sum::<f64>()
            / cloud.interior_volume())
        .sqrt();
        assert!(err < 0.01, "{err}");
        let zbar: Vec<C<f64>> = (0..m).map(|i| cloud.point(i)[0].conj()).collect();
        let pz = km.apply(&zbar);
        let num: f64 = pz.iter().zip(&cloud.interior_weights).map(|(v, w)| v.norm_sqr() * w).sum();
        let den: f64 = zbar.iter().zip(&cloud.interior_weights).map(|(v, w)| v.norm_sqr() * w).sum();
        assert!((num / den).sqrt() < 0.02, "{}", (num / den).sqrt());
        // P+ dominates |P|
        let f: Vec<f64> = (0..m).map(|i| 1.0 + cloud.point(i)[0].re).collect();
        let pf = km.apply(&f.iter().map(|x| C::new(*x, 0.0)).collect::<Vec<_>>());
        let ppf = km.apply_abs(&f);
        assert!(pf.iter().zip(&ppf).all(|(a, b)| a.norm() <= *b * (1.0 + 1e-12)));
    }

    #[test]
    fn on_the_fly_matches_dense_and_rows() {
        let dom = ModelDomain::<f64>::ball(2);
        let cloud = SampleCloud::sample(&dom, 300, 64, 2).unwrap();
        let dense = KernelMatrix::new(&dom, &cloud, Storage::Dense).unwrap();
        let lazy = KernelMatrix::new(&dom, &cloud, Storage::OnTheFly).unwrap();
        let f: Vec<C<f64>> = (0..dense.len()).map(|i| C::new((i % 7) as f64, -((i % 3) as f64))).collect();
        let a = dense.apply(&f);
        let b = lazy.apply(&f);
        assert_eq!(a, b);
        let rows = [3usize, 17, 200];
        let c = lazy.apply_rows(&rows, &f);
        for (k, &r) in rows.iter().enumerate() {
            assert_eq!(c[k], a[r]);
        }
    }

    #[test]
    fn dump_roundtrip() {
        let dom = ModelDomain::<f64>::ball(1);
        let cloud = SampleCloud::sample(&dom, 50, 16, 3).unwrap();
        let km = KernelMatrix::new(&dom, &cloud, Storage::OnTheFly).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k.bin");
        km.dump(&path).unwrap();
        let (r, c, e) = read_dump(&path).unwrap();
        assert_eq!((r, c), (km.len(), km.len()));
        assert_eq!(e[5 * c + 9], km.entry(5, 9));
        assert_eq!(std::fs::metadata(&path).unwrap().len() as usize, 24 + 16 * r * c);
    }

    fn tiny_family() -> (ModelDomain<f64>, SampleCloud<f64>) {
        let dom = ModelDomain::<f64>::ball(1);
        let cloud = SampleCloud::sample(&dom, 1500, 300, 5).unwrap();
        (dom, cloud)
    }

    #[test]
    fn sparse_operator_counts_tents_on_constants() {
        let (dom, cloud) = tiny_family();
        let metric = BoundaryMetric::new(&dom, &cloud);
        let fam = build_adjacent_family(&metric, 8.0, 0.8, 2, 2, 1).unwrap();
        let ts: Vec<_> = fam.systems.iter().map(|s| build_tents(&dom, s, &metric)).collect();
        let spec = SparseOperatorSpec::from_tents(&ts, false);
        let n = cloud.n_interior();
        let q = apply_q_sparse(&spec, &cloud, &vec![1.0; n], &vec![1.0; n]);
        for i in 0..n {
            let count: usize = ts.iter().map(|t| t.tents_of(i).count()).sum();
            assert!((q[i] - count as f64).abs() < 1e-9);
        }
        // a single tent gives its own average
        let t = &ts[0].tents[ts[0].tent_id(1, 2)];
        let single = SparseOperatorSpec::single_tent(t.members.clone(), t.volume);
        let f: Vec<f64> = (0..n).map(|i| cloud.depth[i]).collect();
        let q = apply_q_sparse(&single, &cloud, &vec![1.0; n], &f);
        let avg = crate::weights::average(&cloud, &f, Some(&t.members), None).unwrap();
        for &m in &t.members {
            assert!((q[m as usize] - avg).abs() < 1e-12);
        }
    }

    #[test]
    fn maximal_of_a_constant_is_the_constant_on_tents() {
        let (dom, cloud) = tiny_family();
        let metric = BoundaryMetric::new(&dom, &cloud);
        let fam = build_adjacent_family(&metric, 8.0, 0.8, 2, 1, 1).unwrap();
        let ts = build_tents(&dom, &fam.systems[0], &metric);
        let n = cloud.n_interior();
        let sigma: Vec<f64> = (0..n).map(|i| cloud.depth[i].sqrt()).collect();
        let m = maximal(&ts, &cloud, &sigma, &vec![2.5; n]);
        for i in 0..n {
            let expect = if ts.top_level[i] >= 0 { 2.5 } else { 0.0 };
            assert!((m[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn origin_pair_has_ratio_one_on_the_disc() {
        let (dom, cloud) = tiny_family();
        let metric = BoundaryMetric::new(&dom, &cloud);
        let fam = build_adjacent_family(&metric, 8.0, 0.8, 2, 2, 1).unwrap();
        let ts: Vec<_> = fam.systems.iter().map(|s| build_tents(&dom, s, &metric)).collect();
        let o = vec![C::new(0.0, 0.0)];
        let pool = PairPool::from_points(&dom, &fam, &metric, vec![o.clone(), o], vec![0, 0]).unwrap();
        let rep = check_domination(&dom, &cloud, &ts, &pool, 10, 1.0, 1).unwrap();
        assert!((rep.constant - 1.0).abs() < 1e-9, "{}", rep.constant);
        assert_eq!(rep.only_global, 10);
    }
}
