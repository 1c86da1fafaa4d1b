//! Weights on the interior cloud, their duals, averages over tents, and the
//! characteristics `[sigma]_p` and `B_p(sigma)`.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainKind, ModelDomain, SampleCloud};
use crate::scalar::{cdist, Real, C};
use crate::tents::{analytic_tent_mask, TentSystem};

/// Positive weight sampled on the interior cloud.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Weight<T> {
    pub values: Vec<T>,
    pub description: String,
}

/// `sigma` together with `nu = sigma^{1/(1-p)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct WeightPair<T> {
    pub p: T,
    pub sigma: Weight<T>,
    pub nu: Weight<T>,
}

impl<T: Real> Weight<T> {
    pub fn new(values: Vec<T>, description: impl Into<String>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > T::zero())) {
            return Err(Error::invalid(
                "weight",
                format!("value at sample {i} is {} (must be positive and finite)", values[i]),
            ));
        }
        Ok(Weight {
            values,
            description: description.into(),
        })
    }

    pub fn constant(n: usize, c: T) -> Self {
        Weight {
            values: vec![c; n],
            description: format!("constant {c}"),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: T) -> Self {
        Weight {
            values: self.values.iter().map(|v| *v * c).collect(),
            description: format!("{} * {c}", self.description),
        }
    }

    /// Writes `index,value` rows with a header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["index", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([i.to_string(), format!("{:e}", v)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, description: impl Into<String>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut values = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let idx: usize = rec.get(0).unwrap_or("").parse().map_err(|_| Error::Serde(format!("bad index on row {row}")))?;
            if idx != values.len() {
                return Err(Error::Serde(format!("rows must be in index order (row {row})")));
            }
            let v: f64 = rec.get(1).unwrap_or("").parse().map_err(|_| Error::Serde(format!("bad value on row {row}")))?;
            values.push(T::lit(v));
        }
        Weight::new(values, description)
    }
}

impl<T: Real> WeightPair<T> {
    pub fn new(sigma: Weight<T>, p: T) -> Result<Self> {
        if !(p > T::one()) || !p.is_finite() {
            return Err(Error::invalid("p", "must lie in (1, inf)"));
        }
        let e = T::one() / (T::one() - p);
        let nu = Weight::new(
            sigma.values.iter().map(|s| s.powf(e)).collect(),
            format!("dual of {}", sigma.description),
        )?;
        Ok(WeightPair { p, sigma, nu })
    }

    pub fn conjugate_exponent(&self) -> T {
        self.p / (self.p - T::one())
    }

    /// The pair `(nu, p')`, whose own dual weight is `sigma` again.
    pub fn dual(&self) -> Result<Self> {
        WeightPair::new(self.nu.clone(), self.conjugate_exponent())
    }
}

/// `B_p` over analytic tents `B#(zeta, delta)` for every listed centre and
/// radius, together with the global product. A slow cross-check for the
/// dyadic scan in [`characteristic`].
pub fn bp_tent_grid<T: Real>(
    dom: &ModelDomain<T>,
    pair: &WeightPair<T>,
    cloud: &SampleCloud<T>,
    centres: &[Vec<C<T>>],
    radii: &[f64],
) -> Result<f64> {
    let p = pair.p;
    let product = |region: Option<&[u32]>| -> Result<f64> {
        let s = average(cloud, &pair.sigma.values, region, None)?;
        let n = average(cloud, &pair.nu.values, region, None)?;
        Ok((s * n.powf(p - T::one())).to_f64_lossy())
    };
    let mut best = product(None)?;
    for zeta in centres {
        for &r in radii {
            let mask = analytic_tent_mask(dom, cloud, zeta, T::lit(r));
            let region: Vec<u32> = (0..mask.len()).filter(|&i| mask[i]).map(|i| i as u32).collect();
            if !region.is_empty() {
                best = best.max(product(Some(&region))?);
            }
        }
    }
    Ok(best)
}

/// Power weight: `(1 - |z|^2)^alpha` on the ball, `(-rho)^alpha` on the egg.
pub fn power_weight<T: Real>(dom: &ModelDomain<T>, cloud: &SampleCloud<T>, alpha: T) -> Result<Weight<T>> {
    let values = (0..cloud.n_interior())
        .map(|i| {
            let z = cloud.point(i);
            let base = match dom.kind {
                DomainKind::Ball { .. } => {
                    // 1 - |z|^2 = t (2 - t) with t the exact depth
                    let t = cloud.depth[i];
                    t * (T::lit(2.0) - t)
                }
                DomainKind::Egg { .. } => -dom.defining_function(z),
            };
            base.powf(alpha)
        })
        .collect();
    Weight::new(values, format!("power alpha={alpha}"))
}

/// Power weight pair; logs a warning when `B_p` is expected to be infinite
/// (`alpha <= -1` or `alpha >= p - 1`). The pair is still constructed.
pub fn power_pair<T: Real>(dom: &ModelDomain<T>, cloud: &SampleCloud<T>, alpha: T, p: T) -> Result<WeightPair<T>> {
    if alpha <= -T::one() || alpha >= p - T::one() {
        log::warn!("power weight alpha={alpha} is not in B_p for p={p}; the characteristic is finite only on the cloud");
    }
    WeightPair::new(power_weight(dom, cloud, alpha)?, p)
}

/// Weight given by a closure of `(|z|, distance to the boundary)`.
pub fn custom_weight<T: Real>(
    cloud: &SampleCloud<T>,
    description: &str,
    f: impl Fn(T, T) -> T,
) -> Result<Weight<T>> {
    let values = (0..cloud.n_interior())
        .map(|i| f(crate::scalar::cnorm(cloud.point(i)), cloud.depth[i]))
        .collect();
    Weight::new(values, description)
}

/// `<|f|>` over `region` against `weight dV` (or `dV`).
pub fn average<T: Real>(
    cloud: &SampleCloud<T>,
    f: &[T],
    region: Option<&[u32]>,
    weight: Option<&Weight<T>>,
) -> Result<T> {
    let w = |i: usize| {
        let dv = cloud.interior_weights[i];
        weight.map_or(dv, |s| s.values[i] * dv)
    };
    let (num, den) = match region {
        Some(r) => r.iter().fold((T::zero(), T::zero()), |(a, b), &i| {
            let i = i as usize;
            (a + f[i].abs() * w(i), b + w(i))
        }),
        None => (0..cloud.n_interior()).fold((T::zero(), T::zero()), |(a, b), i| (a + f[i].abs() * w(i), b + w(i))),
    };
    if !(den > T::zero()) {
        return Err(Error::EmptyRegion);
    }
    Ok(num / den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub system: usize,
    pub tent: usize,
    pub level: usize,
    pub cell: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicReport {
    pub p: f64,
    /// `<sigma>_Omega <nu>_Omega^{p-1}`.
    pub global_product: f64,
    /// Supremum over tents of `<sigma>_K <nu>_K^{p-1}`.
    pub tent_sup: f64,
    pub witness: Option<Witness>,
    pub tent_exponent: f64,
    /// `[sigma]_p`.
    pub bracket: f64,
    /// `B_p(sigma)`.
    pub bp: f64,
    pub tents_scanned: usize,
    pub tents_skipped: usize,
}

/// `[sigma]_p = (<sigma><nu>^{p-1})^{1/p} + p p' (sup_K <sigma>_K <nu>_K^{p-1})^{max(1, 1/(p-1))}`
/// and `B_p = max(<sigma><nu>^{p-1}, sup_K ...)`, the supremum running over
/// the tents of every system. Tents without samples are skipped.
pub fn characteristic<T: Real>(
    pair: &WeightPair<T>,
    cloud: &SampleCloud<T>,
    systems: &[TentSystem],
) -> Result<CharacteristicReport> {
    let p = pair.p.to_f64_lossy();
    let pp = p / (p - 1.0);
    let dv: Vec<f64> = cloud.interior_weights.iter().map(|w| w.to_f64_lossy()).collect();
    let sigma: Vec<f64> = pair.sigma.values.iter().map(|w| w.to_f64_lossy()).collect();
    let nu: Vec<f64> = pair.nu.values.iter().map(|w| w.to_f64_lossy()).collect();
    if sigma.len() != dv.len() {
        return Err(Error::DimensionMismatch {
            expected: dv.len(),
            got: sigma.len(),
        });
    }
    let product = |members: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let (mut v, mut s, mut n) = (0.0, 0.0, 0.0);
        for i in members {
            v += dv[i];
            s += sigma[i] * dv[i];
            n += nu[i] * dv[i];
        }
        (v > 0.0).then(|| (s / v) * (n / v).powf(p - 1.0))
    };
    let global = product(&mut (0..dv.len())).ok_or(Error::EmptyRegion)?;

    let per_system: Vec<(f64, Option<Witness>, usize, usize)> = systems
        .par_iter()
        .enumerate()
        .map(|(si, ts)| {
            let mut best = 0.0f64;
            let mut witness = None;
            let (mut scanned, mut skipped) = (0, 0);
            for (id, tent) in ts.tents.iter().enumerate() {
                match product(&mut tent.members.iter().map(|&m| m as usize)) {
                    Some(v) => {
                        scanned += 1;
                        if v > best {
                            best = v;
                            witness = Some(Witness {
                                system: si,
                                tent: id,
                                level: tent.level,
                                cell: tent.cell,
                            });
                        }
                    }
                    None => skipped += 1,
                }
            }
            (best, witness, scanned, skipped)
        })
        .collect();
    let mut tent_sup = 0.0f64;
    let mut witness = None;
    let (mut scanned, mut skipped) = (0, 0);
    for (v, w, a, b) in per_system {
        scanned += a;
        skipped += b;
        if v > tent_sup {
            tent_sup = v;
            witness = w;
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} tents without samples were skipped in the characteristic scan");
    }
    let exponent = 1.0f64.max(1.0 / (p - 1.0));
    Ok(CharacteristicReport {
        p,
        global_product: global,
        tent_sup,
        witness,
        tent_exponent: exponent,
        bracket: global.powf(1.0 / p) + p * pp * tent_sup.powf(exponent),
        bp: global.max(tent_sup),
        tents_scanned: scanned,
        tents_skipped: skipped,
    })
}

/// Parameters of the sharp example weight
/// `sigma(w) = h(w)^{(p-1)(2+2n-2s)} / |w - w0|^{2n-2s}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpParams {
    pub p: f64,
    pub s: f64,
    /// Boundary point the weight concentrates at.
    pub z0: Vec<[f64; 2]>,
    /// Interior singular point.
    pub w0: Vec<[f64; 2]>,
    /// Lower end of the bisection range for `h`.
    pub h_floor: f64,
    /// Samples closer than this to `w0` are rejected.
    pub singular_radius: f64,
}

impl SharpParams {
    pub fn new(n: usize, p: f64, s: f64) -> Self {
        let mut z0 = vec![[0.0, 0.0]; n];
        z0[0] = [1.0, 0.0];
        SharpParams {
            p,
            s,
            z0,
            w0: vec![[0.0, 0.0]; n],
            h_floor: 1e-18,
            singular_radius: 0.0,
        }
    }
}

pub(crate) fn to_point<T: Real>(v: &[[f64; 2]]) -> Vec<C<T>> {
    v.iter().map(|c| C::new(T::lit(c[0]), T::lit(c[1]))).collect()
}

/// `h(w) = inf{delta : w in B#(z0, delta)}` by bisection on tent membership
/// over `[h_floor, delta_global]`, in log scale to the domain's relative
/// bisection tolerance. Values below the range clamp to `h_floor`.
pub fn tent_distance<T: Real>(
    dom: &ModelDomain<T>,
    cloud: &SampleCloud<T>,
    z0: &[C<T>],
    h_floor: T,
) -> Vec<T> {
    let top = dom.delta_global;
    let rel = dom.tol.bisection_rel;
    (0..cloud.n_interior())
        .into_par_iter()
        .map(|i| {
            let inside = |d: T| dom.tent_contains(cloud.depth[i], cloud.foot(i), z0, d);
            if inside(h_floor) {
                return h_floor;
            }
            let (mut lo, mut hi) = (h_floor.ln(), top.ln());
            while hi - lo > rel {
                let mid = T::lit(0.5) * (lo + hi);
                if inside(mid.exp()) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi.exp()
        })
        .collect()
}

/// The sharp example pair on the ball.
pub fn sharp_example_weight<T: Real>(
    dom: &ModelDomain<T>,
    cloud: &SampleCloud<T>,
    params: &SharpParams,
) -> Result<WeightPair<T>> {
    let n = match dom.kind {
        DomainKind::Ball { n } => n,
        DomainKind::Egg { .. } => {
            return Err(Error::WrongDomainKind {
                operation: "sharp_example_weight",
                kind: "egg",
            })
        }
    };
    let (p, s) = (params.p, params.s);
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::invalid("p", "the sharp example needs 1 < p <= 2"));
    }
    if !(s > 0.0 && s <= 0.5) {
        return Err(Error::invalid("s", "must lie in (0, 0.5]"));
    }
    let z0 = to_point::<T>(&params.z0);
    let w0 = to_point::<T>(&params.w0);
    if z0.len() != n || w0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: z0.len().min(w0.len()) });
    }
    let (depth_w0, _) = dom.nearest_boundary(&w0)?;
    if depth_w0 <= dom.eps0 {
        return Err(Error::invalid("w0", "must lie deeper than eps0"));
    }
    let h = tent_distance(dom, cloud, &z0, T::lit(params.h_floor));
    let e_h = T::lit((p - 1.0) * (2.0 + 2.0 * n as f64 - 2.0 * s));
    let e_l = T::lit(2.0 * n as f64 - 2.0 * s);
    let mut values = Vec::with_capacity(h.len());
    for (i, hi) in h.iter().enumerate() {
        let l = cdist(cloud.point(i), &w0);
        if l <= T::lit(params.singular_radius) {
            return Err(Error::SingularSample {
                index: i,
                distance: l.to_f64_lossy(),
            });
        }
        values.push(hi.powf(e_h) / l.powf(e_l));
    }
    let sigma = Weight::new(values, format!("sharp p={p} s={s}"))?;
    WeightPair::new(sigma, T::lit(p))
}

/// Writes a characteristic report as pretty JSON.
pub fn write_report_json<S: Serialize>(report: &S, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, report)?;
    f.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{build_adjacent_family, BoundaryMetric};
    use crate::tents::build_tents;

    fn disc() -> (ModelDomain<f64>, SampleCloud<f64>) {
        let dom = ModelDomain::<f64>::ball(1);
        let cloud = SampleCloud::sample(&dom, 1500, 300, 5).unwrap();
        (dom, cloud)
    }

    fn tents(dom: &ModelDomain<f64>, cloud: &SampleCloud<f64>) -> Vec<TentSystem> {
        let metric = BoundaryMetric::new(dom, cloud);
        let fam = build_adjacent_family(&metric, 8.0, 0.8, 2, 3, 1).unwrap();
        fam.systems.iter().map(|s| build_tents(dom, s, &metric)).collect()
    }

    #[test]
    fn constant_weight_bracket_is_one_plus_pp() {
        let (dom, cloud) = disc();
        let ts = tents(&dom, &cloud);
        for p in [1.5, 2.0, 3.0] {
            let pair = WeightPair::new(Weight::constant(cloud.n_interior(), 1.0), p).unwrap();
            let r = characteristic(&pair, &cloud, &ts).unwrap();
            let pp = p / (p - 1.0);
            assert!((r.bracket - (1.0 + p * pp)).abs() < 1e-9, "{r:?}");
            assert!((r.bp - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn average_of_constant_and_full_region() {
        let (_, cloud) = disc();
        let f = vec![3.0; cloud.n_interior()];
        assert!((average(&cloud, &f, Some(&[1, 5, 9]), None).unwrap() - 3.0).abs() < 1e-14);
        assert!(matches!(average(&cloud, &f, Some(&[]), None), Err(Error::EmptyRegion)));
    }

    #[test]
    fn sharp_exponents_and_tent_distance() {
        let dom = ModelDomain::<f64>::ball(1);
        let cloud = SampleCloud::sample(&dom, 800, 100, 5).unwrap();
        let params = SharpParams::new(1, 2.0, 0.1);
        let pair = sharp_example_weight(&dom, &cloud, &params).unwrap();
        let h = tent_distance(&dom, &cloud, &[C::new(1.0, 0.0)], params.h_floor);
        for i in 0..cloud.n_interior() {
            // closed form on the ball: max(d(foot, z0), sqrt(depth)), capped
            let d = dom.quasi_metric_unchecked(cloud.foot(i), &[C::new(1.0, 0.0)]);
            let mut want = d.max(cloud.depth[i].sqrt());
            if want >= 0.4 || cloud.depth[i] >= 0.5 {
                want = 0.4;
            }
            assert!((h[i] - want).abs() <= 1e-7 * want, "{} vs {}", h[i], want);
            let l = cloud.point(i)[0].norm();
            let expect = h[i].powf(3.8) / l.powf(1.8);
            assert!((pair.sigma.values[i] - expect).abs() <= 1e-12 * expect, "{i} {} {expect}", pair.sigma.values[i]);
        }
    }

    #[test]
    fn power_weight_bp_matches_analytic_tent_grid() {
        let dom = ModelDomain::<f64>::ball(1);
        let cloud = SampleCloud::sample(&dom, 4000, 1000, 2).unwrap();
        let ts = tents(&dom, &cloud);
        let pair = power_pair(&dom, &cloud, 0.5, 2.0).unwrap();
        let dyadic = characteristic(&pair, &cloud, &ts).unwrap().bp;
        let centres: Vec<Vec<C<f64>>> = (0..64)
            .map(|k| vec![C::from_polar(1.0, std::f64::consts::TAU * k as f64 / 64.0)])
            .collect();
        let radii: Vec<f64> = (0..12).map(|k| 0.38 * 0.8f64.powi(k)).collect();
        let grid = bp_tent_grid(&dom, &pair, &cloud, &centres, &radii).unwrap();
        assert!(dyadic.is_finite() && (dyadic / grid - 1.0).abs() < 0.1, "{dyadic} {grid}");
    }

    #[test]
    fn power_weight_centre_and_dual_exponent() {
        let dom = ModelDomain::<f64>::ball(1);
        let cloud = SampleCloud::from_parts(
            &dom,
            vec![C::new(0.0, 0.0), C::new(0.6, 0.0)],
            vec![1.0, 1.0],
            vec![C::new(1.0, 0.0)],
            vec![1.0],
            0,
        )
        .unwrap();
        let pair = power_pair(&dom, &cloud, 0.5, 3.0).unwrap();
        assert_eq!(pair.sigma.values[0], 1.0);
        let want = 0.64f64.powf(-0.25);
        assert!((pair.nu.values[1] - want).abs() < 1e-12 * want);
        let one = power_weight(&dom, &cloud, 0.0).unwrap();
        assert!(one.values.iter().all(|v| *v == 1.0));
    }

    fn sharp_cloud() -> (ModelDomain<f64>, SampleCloud<f64>) {
        let dom = ModelDomain::<f64>::ball(1);
        let cloud = SampleCloud::graded_disc(&dom, &crate::geometry::GradedDiscParams::default(), 256, 3).unwrap();
        (dom, cloud)
    }

    fn tent_average(dom: &ModelDomain<f64>, cloud: &SampleCloud<f64>, f: &[f64], delta: f64) -> f64 {
        let mask = analytic_tent_mask(dom, cloud, &[C::new(1.0, 0.0)], delta);
        let region: Vec<u32> = (0..mask.len()).filter(|&i| mask[i]).map(|i| i as u32).collect();
        average(cloud, f, Some(&region), None).unwrap()
    }

    #[test]
    fn sharp_sigma_average_scales_with_tent_radius() {
        // <sigma> over B#(z0, delta) ~ delta^{(p-1)(2n+2-2s)}
        let (dom, cloud) = sharp_cloud();
        let (p, s) = (2.0, 0.1);
        let pair = sharp_example_weight(&dom, &cloud, &SharpParams::new(1, p, s)).unwrap();
        let deltas = [0.02, 0.04, 0.08, 0.16];
        let avgs: Vec<f64> = deltas.iter().map(|d| tent_average(&dom, &cloud, &pair.sigma.values, *d)).collect();
        let lx: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
        let ly: Vec<f64> = avgs.iter().map(|a| a.ln()).collect();
        let mx = lx.iter().sum::<f64>() / 4.0;
        let my = ly.iter().sum::<f64>() / 4.0;
        let slope = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
            / lx.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
        let want = (p - 1.0) * (4.0 - 2.0 * s);
        assert!((slope - want).abs() < 0.2, "{slope} {want}");
    }

    #[test]
    fn halving_s_doubles_the_dual_average() {
        // <nu> over B#(z0, delta) ~ s^{-1} delta^{2s - 2n - 2} at fixed delta
        let (dom, cloud) = sharp_cloud();
        let delta = 0.3;
        let avg = |s: f64| {
            let pair = sharp_example_weight(&dom, &cloud, &SharpParams::new(1, 2.0, s)).unwrap();
            tent_average(&dom, &cloud, &pair.nu.values, delta)
        };
        let r = avg(0.025) / avg(0.05);
        assert!((r / 2.0 - 1.0).abs() < 0.25, "{r}");
    }

    #[test]
    fn csv_roundtrip() {
        let w = Weight::new(vec![1.0, 0.5, 1e-30], "t").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        w.write_csv(&path).unwrap();
        let back = Weight::<f64>::read_csv(&path, "t").unwrap();
        assert_eq!(back.values, w.values);
    }

    #[test]
    fn nonpositive_weights_are_rejected() {
        assert!(Weight::new(vec![1.0, 0.0], "z").is_err());
        assert!(Weight::new(vec![1.0, f64::NAN], "z").is_err());
    }
}
