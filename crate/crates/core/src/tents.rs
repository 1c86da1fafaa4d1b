//! Dyadic tents and kubes over the cells of a [`DyadicSystem`].
//!
//! An interior sample lies in the level-`k` tent of a cell when its foot lies
//! in the cell and its depth is below the tent height of `s^{-k} delta`. The
//! tents containing a sample therefore form a chain from level 0 down to the
//! deepest level whose height exceeds its depth; the last tent of the chain is
//! the sample's kube.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{BoundaryMetric, DyadicSystem, Locator};
use crate::geometry::{ModelDomain, SampleCloud};
use crate::scalar::{Real, C};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tent {
    pub level: usize,
    /// Cell index within its level.
    pub cell: usize,
    /// Sorted interior-sample indices.
    pub members: Vec<u32>,
    pub volume: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kube {
    pub tent: usize,
    pub members: Vec<u32>,
    pub volume: f64,
    /// Point on the inward normal through the cell's reference point.
    pub center: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TentSystem {
    pub k_max: usize,
    /// First tent id of each level; tent `(k, j)` has id `offsets[k] + j`.
    pub offsets: Vec<usize>,
    pub tents: Vec<Tent>,
    pub kubes: Vec<Kube>,
    /// Samples in no tent: too deep, or outside the tubular neighbourhood.
    pub residual: Vec<u32>,
    pub residual_volume: f64,
    /// Deepest tent level of each sample, `-1` for residual samples.
    pub top_level: Vec<i32>,
    /// `chain[i * (k_max + 1) + k]`: level-`k` cell under sample `i`'s foot.
    pub chain: Vec<u32>,
}

/// Tent heights `Lambda(s^{-k} delta)`, capped by the tubular radius.
pub fn tent_heights<T: Real>(dom: &ModelDomain<T>, system: &DyadicSystem) -> Vec<f64> {
    (0..=system.k_max)
        .map(|k| {
            let h = dom.tent_height(T::lit(system.scale(k))).to_f64_lossy();
            h.min(dom.eps0.to_f64_lossy())
        })
        .collect()
}

impl TentSystem {
    pub fn tent_id(&self, level: usize, cell: usize) -> usize {
        self.offsets[level] + cell
    }

    pub fn n_interior(&self) -> usize {
        self.top_level.len()
    }

    /// Ids of the tents containing sample `i`, coarse to fine.
    pub fn tents_of(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let w = self.k_max + 1;
        let top = self.top_level[i];
        (0..(top + 1).max(0) as usize).map(move |k| self.offsets[k] + self.chain[i * w + k] as usize)
    }

    /// Kube id of sample `i`, or `None` for the residual.
    pub fn kube_of(&self, i: usize) -> Option<usize> {
        let top = self.top_level[i];
        (top >= 0).then(|| {
            let k = top as usize;
            self.offsets[k] + self.chain[i * (self.k_max + 1) + k] as usize
        })
    }

    /// Exact check: each tent at level `k + 1` lies inside the tent of its
    /// parent cell.
    pub fn check_nesting(&self, system: &DyadicSystem) -> bool {
        for k in 1..=self.k_max {
            for (j, cell) in system.levels[k].iter().enumerate() {
                let child = &self.tents[self.tent_id(k, j)];
                let parent = &self.tents[self.tent_id(k - 1, cell.parent.unwrap_or(0))];
                if !sorted_subset(&child.members, &parent.members) {
                    return false;
                }
            }
        }
        true
    }

    /// Exact check: kubes and the residual partition the interior samples.
    pub fn check_kube_partition(&self) -> bool {
        let n = self.n_interior();
        let mut seen = vec![0u8; n];
        for m in self.kubes.iter().flat_map(|k| &k.members).chain(&self.residual) {
            let m = *m as usize;
            if m >= n {
                return false;
            }
            seen[m] += 1;
        }
        seen.iter().all(|&c| c == 1)
    }

    /// Smallest `V(kube) / V(tent)` over tents with positive volume.
    pub fn kube_volume_ratio(&self) -> f64 {
        self.kubes
            .iter()
            .filter(|k| self.tents[k.tent].volume > 0.0)
            .map(|k| k.volume / self.tents[k.tent].volume)
            .fold(f64::INFINITY, f64::min)
    }
}

fn sorted_subset(a: &[u32], b: &[u32]) -> bool {
    let mut j = 0;
    a.iter().all(|&x| {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        j < b.len() && b[j] == x
    })
}

/// Builds the tents of one system and their kubes.
pub fn build_tents<T: Real>(
    dom: &ModelDomain<T>,
    system: &DyadicSystem,
    metric: &BoundaryMetric<T>,
) -> TentSystem {
    let cloud = metric.cloud();
    let n = cloud.n_interior();
    let w = system.k_max + 1;
    let tl = TentLocator::new(dom, system, metric);
    let heights = tl.heights.clone();

    let located: Vec<(i32, Vec<u32>)> = (0..n)
        .into_par_iter()
        .map(|i| tl.locate(cloud.depth[i].to_f64_lossy(), cloud.foot(i)))
        .collect();

    let mut offsets = Vec::with_capacity(w);
    let mut tents = Vec::new();
    for (k, cells) in system.levels.iter().enumerate() {
        offsets.push(tents.len());
        tents.extend((0..cells.len()).map(|j| Tent {
            level: k,
            cell: j,
            members: Vec::new(),
            volume: 0.0,
        }));
    }
    let mut top_level = Vec::with_capacity(n);
    let mut chain = Vec::with_capacity(n * w);
    let mut residual = Vec::new();
    let mut residual_volume = 0.0;
    let mut kube_members: Vec<Vec<u32>> = vec![Vec::new(); tents.len()];
    let mut kube_volume = vec![0.0; tents.len()];
    for (i, (top, anc)) in located.into_iter().enumerate() {
        let wi = cloud.interior_weights[i].to_f64_lossy();
        top_level.push(top);
        for k in 0..=top.max(-1) {
            let id = offsets[k as usize] + anc[k as usize] as usize;
            tents[id].members.push(i as u32);
            tents[id].volume += wi;
        }
        if top < 0 {
            residual.push(i as u32);
            residual_volume += wi;
        } else {
            let id = offsets[top as usize] + anc[top as usize] as usize;
            kube_members[id].push(i as u32);
            kube_volume[id] += wi;
        }
        chain.extend(anc);
    }

    let kubes = kube_members
        .into_iter()
        .zip(kube_volume)
        .enumerate()
        .map(|(id, (members, volume))| {
            let tent = &tents[id];
            let p = cloud.boundary_point(system.levels[tent.level][tent.cell].ref_point);
            Kube {
                tent: id,
                members,
                volume,
                center: kube_center(dom, p, 0.5 * heights[tent.level])
                    .iter()
                    .map(|c| [c.re.to_f64_lossy(), c.im.to_f64_lossy()])
                    .collect(),
            }
        })
        .collect();

    TentSystem {
        k_max: system.k_max,
        offsets,
        tents,
        kubes,
        residual,
        residual_volume,
        top_level,
        chain,
    }
}

/// Places arbitrary points (given by depth and foot) in the tents of one
/// system, with the same rule as the cloud samples.
pub struct TentLocator<'a, T> {
    system: &'a DyadicSystem,
    locator: Locator<'a, T>,
    pub heights: Vec<f64>,
    eps0: f64,
}

impl<'a, T: Real> TentLocator<'a, T> {
    pub fn new(dom: &ModelDomain<T>, system: &'a DyadicSystem, metric: &'a BoundaryMetric<'a, T>) -> Self {
        TentLocator {
            system,
            locator: Locator::new(system, metric),
            heights: tent_heights(dom, system),
            eps0: dom.eps0.to_f64_lossy(),
        }
    }

    /// Deepest tent level (`-1` outside every tent) and the cell chain.
    pub fn locate(&self, depth: f64, foot: &[C<T>]) -> (i32, Vec<u32>) {
        let w = self.system.k_max + 1;
        if depth >= self.eps0 {
            return (-1, vec![0; w]);
        }
        let top = self.heights.iter().take_while(|&&h| depth < h).count() as i32 - 1;
        if top < 0 {
            return (-1, vec![0; w]);
        }
        let deepest = self.locator.locate(foot);
        (top, self.system.ancestors(deepest).into_iter().map(|c| c as u32).collect())
    }
}

/// The point at distance `t` from `p` along the inward normal.
pub fn kube_center<T: Real>(dom: &ModelDomain<T>, p: &[C<T>], t: f64) -> Vec<C<T>> {
    let t = T::lit(t);
    let nu = dom.outward_normal(p);
    p.iter().zip(&nu).map(|(a, n)| a - n * t).collect()
}

/// Interior samples in the analytic tent `B#(zeta, r)`, as a membership mask.
pub fn analytic_tent_mask<T: Real>(dom: &ModelDomain<T>, cloud: &SampleCloud<T>, zeta: &[C<T>], r: T) -> Vec<bool> {
    (0..cloud.n_interior())
        .into_par_iter()
        .map(|i| dom.tent_contains(cloud.depth[i], cloud.foot(i), zeta, r))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TentAdjacencyReport {
    pub trials: usize,
    pub successes: usize,
    pub success_fraction: f64,
    pub worst_factor: f64,
    pub factor_limit: f64,
}

/// For random boundary samples `zeta` and radii `r`, looks for dyadic tents
/// over cells containing `zeta` with `K1 ⊆ B#(zeta, r) ⊆ K2` and volumes
/// within `factor_limit` of `V(B#(zeta, r))`. Trials whose analytic tent has no
/// samples are skipped.
pub fn verify_tent_adjacency<T: Real>(
    dom: &ModelDomain<T>,
    systems: &[DyadicSystem],
    tent_systems: &[TentSystem],
    metric: &BoundaryMetric<T>,
    trials: usize,
    r_range: (f64, f64),
    factor_limit: f64,
    seed: u64,
) -> TentAdjacencyReport {
    let cloud = metric.cloud();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lr0, lr1) = (r_range.0.ln(), r_range.1.ln());
    let weights: Vec<f64> = cloud.interior_weights.iter().map(|w| w.to_f64_lossy()).collect();
    let mut done = 0;
    let mut successes = 0;
    let mut worst = 1.0f64;
    let mut attempts = 0;
    while done < trials && attempts < 20 * trials {
        attempts += 1;
        let z = rng.gen_range(0..cloud.n_boundary());
        let r = rng.gen_range(lr0..=lr1).exp();
        let mask = analytic_tent_mask(dom, cloud, cloud.boundary_point(z), T::lit(r));
        let count = mask.iter().filter(|&&b| b).count();
        if count == 0 {
            continue;
        }
        done += 1;
        let vol: f64 = mask.iter().zip(&weights).filter(|(m, _)| **m).map(|(_, w)| w).sum();
        let mut inner = 0.0f64;
        let mut outer = f64::INFINITY;
        if r >= dom.delta_global.to_f64_lossy() {
            outer = vol;
        }
        for (sys, ts) in systems.iter().zip(tent_systems) {
            for k in 0..=sys.k_max {
                let tent = &ts.tents[ts.tent_id(k, sys.owner[k][z] as usize)];
                if tent.members.is_empty() {
                    continue;
                }
                let inside = tent.members.iter().filter(|&&m| mask[m as usize]).count();
                if inside == tent.members.len() {
                    inner = inner.max(tent.volume);
                }
                if inside == count {
                    outer = outer.min(tent.volume);
                }
            }
        }
        let factor = if inner > 0.0 { (vol / inner).max(outer / vol) } else { f64::INFINITY };
        if factor <= factor_limit {
            successes += 1;
            worst = worst.max(factor);
        }
    }
    TentAdjacencyReport {
        trials: done,
        successes,
        success_fraction: successes as f64 / done.max(1) as f64,
        worst_factor: worst,
        factor_limit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::build_system;

    fn setup(n: usize) -> (ModelDomain<f64>, SampleCloud<f64>) {
        let dom = ModelDomain::<f64>::ball(n);
        let cloud = SampleCloud::sample(&dom, 3000, 400, 2).unwrap();
        (dom, cloud)
    }

    #[test]
    fn kubes_partition_and_tents_nest() {
        for n in [1, 2] {
            let (dom, cloud) = setup(n);
            let metric = BoundaryMetric::new(&dom, &cloud);
            let sys = build_system(&metric, 8.0, 0.8, 3, 4).unwrap();
            let ts = build_tents(&dom, &sys, &metric);
            assert!(ts.check_kube_partition());
            assert!(ts.check_nesting(&sys));
            let total: f64 = ts.kubes.iter().map(|k| k.volume).sum::<f64>() + ts.residual_volume;
            assert!((total - cloud.interior_volume()).abs() < 1e-9);
        }
    }

    #[test]
    fn deep_samples_are_residual() {
        let (dom, cloud) = setup(1);
        let metric = BoundaryMetric::new(&dom, &cloud);
        let sys = build_system(&metric, 8.0, 0.6, 2, 4).unwrap();
        let ts = build_tents(&dom, &sys, &metric);
        for i in 0..cloud.n_interior() {
            if cloud.depth[i] >= 0.36 {
                assert_eq!(ts.top_level[i], -1);
                assert!(ts.kube_of(i).is_none());
            }
        }
    }

    #[test]
    fn deepest_kube_is_its_tent() {
        let (dom, cloud) = setup(1);
        let metric = BoundaryMetric::new(&dom, &cloud);
        let sys = build_system(&metric, 8.0, 0.8, 2, 4).unwrap();
        let ts = build_tents(&dom, &sys, &metric);
        for j in 0..sys.levels[2].len() {
            let id = ts.tent_id(2, j);
            assert_eq!(ts.kubes[id].members, ts.tents[id].members);
        }
    }

    #[test]
    fn kube_centers_project_to_reference_points() {
        let dom = ModelDomain::<f64>::egg(2);
        let p = [C::new(0.6, 0.0), C::new((0.64f64).powf(0.25), 0.0)];
        let c = kube_center(&dom, &p, 0.05);
        let back = dom.boundary_projection(&c).unwrap();
        assert!(crate::scalar::cdist(back.as_slice(), &p) < 1e-8);
    }
}
