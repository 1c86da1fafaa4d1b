//! Quadrature clouds on the interior and boundary of a model domain.
//!
//! Every interior sample carries its volume weight together with its distance
//! to the boundary and its nearest boundary point, so tent and weight code
//! never re-runs the projection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::domain::{egg_surface_density, DomainKind, ModelDomain};
use crate::error::{Error, Result};
use crate::quadrature::{composite_gauss, gauss_on, graded_breakpoints};
use crate::scalar::{cnorm, Real, C};

/// Finite quadrature discretisation of the interior and the boundary.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SampleCloud<T> {
    pub dim: usize,
    /// Interior points, `dim` coordinates per sample.
    pub interior: Vec<C<T>>,
    pub interior_weights: Vec<T>,
    /// Euclidean distance of each interior sample to the boundary.
    pub depth: Vec<T>,
    /// Nearest boundary point of each interior sample, `dim` per sample.
    pub feet: Vec<C<T>>,
    pub boundary: Vec<C<T>>,
    pub boundary_weights: Vec<T>,
    pub seed: u64,
    /// Largest `|rho|` of a boundary sample.
    pub boundary_tolerance: T,
    /// Relative error allowed between the weight sums and the exact measures.
    pub quadrature_tolerance: T,
    pub method: String,
}

/// Panel layout of a disc cloud refined towards one boundary point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradedDiscParams {
    /// Argument of the boundary point the cloud is refined towards.
    pub focus_angle: f64,
    /// Depth separating the shell zone from the inner zone.
    pub shell: f64,
    /// Geometric ratio between neighbouring panels.
    pub ratio: f64,
    /// Smallest depth and angular panel.
    pub min_scale: f64,
    pub max_panel: f64,
    pub max_angle_panel: f64,
    pub nodes_per_panel: usize,
    /// Uniform angles per inner ring.
    pub inner_angles: usize,
    /// Grade the inner rings towards the origin.
    pub grade_origin: bool,
}

impl Default for GradedDiscParams {
    fn default() -> Self {
        GradedDiscParams {
            focus_angle: 0.0,
            shell: 0.5,
            ratio: 0.2,
            min_scale: 1e-30,
            max_panel: 0.05,
            max_angle_panel: 0.1,
            nodes_per_panel: 3,
            inner_angles: 32,
            grade_origin: true,
        }
    }
}

impl<T: Real> SampleCloud<T> {
    /// Quasi-uniform interior and boundary quadrature, deterministic in `seed`.
    ///
    /// Ball: Gauss rings in `|z|^{2n}` times shifted sphere points, with ring
    /// populations growing like the inverse depth. Egg: rejection sampling with
    /// equal weights, boundary points weighted by the surface density.
    pub fn sample(dom: &ModelDomain<T>, n_interior: usize, n_boundary: usize, seed: u64) -> Result<Self> {
        if n_interior == 0 || n_boundary == 0 {
            return Err(Error::invalid("sample counts", "must be >= 1"));
        }
        dom.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (interior, interior_weights, method) = match dom.kind {
            DomainKind::Ball { n } => {
                let (pts, w) = ball_interior(n, n_interior, &mut rng);
                (pts, w, "ball-rings")
            }
            DomainKind::Egg { m } => {
                let (pts, w) = egg_interior(dom, m, n_interior, &mut rng);
                (pts, w, "egg-rejection")
            }
        };
        // separate stream: the boundary does not depend on the interior count
        let mut brng = ChaCha8Rng::seed_from_u64(seed);
        brng.set_stream(1);
        let (boundary, boundary_weights) = match dom.kind {
            DomainKind::Ball { n } => ball_boundary(n, n_boundary, &mut brng),
            DomainKind::Egg { m } => egg_boundary(m, n_boundary, &mut brng),
        };
        Self::assemble(dom, interior, interior_weights, boundary, boundary_weights, seed, method)
    }

    /// Disc cloud refined geometrically towards the boundary point at
    /// `params.focus_angle` and, optionally, towards the origin. Used where
    /// integrands are singular at a boundary point.
    pub fn graded_disc(
        dom: &ModelDomain<T>,
        params: &GradedDiscParams,
        n_boundary: usize,
        seed: u64,
    ) -> Result<Self> {
        if dom.kind != (DomainKind::Ball { n: 1 }) {
            return Err(Error::WrongDomainKind {
                operation: "graded_disc",
                kind: dom.kind_name(),
            });
        }
        if !(params.shell > 0.0 && params.shell < 1.0) {
            return Err(Error::invalid("shell", "must lie in (0, 1)"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let two_pi = std::f64::consts::TAU;
        let q = params.nodes_per_panel;
        let mut pts = Vec::new();
        let mut wts = Vec::new();

        let r_inner = 1.0 - params.shell;
        let rb = graded_breakpoints(
            0.0,
            r_inner,
            params.grade_origin,
            false,
            params.ratio,
            params.min_scale,
            params.max_panel,
        );
        let (rs, rw) = composite_gauss(&rb, q);
        let k = params.inner_angles.max(1);
        for (r, w) in rs.iter().zip(&rw) {
            let shift: f64 = rng.gen();
            for j in 0..k {
                let th = two_pi * (j as f64 + shift) / k as f64;
                pts.push(C::from_polar(T::lit(*r), T::lit(th)));
                wts.push(T::lit(w * r * two_pi / k as f64));
            }
        }

        let tb = graded_breakpoints(0.0, params.shell, true, false, params.ratio, params.min_scale, params.max_panel);
        let (ts, tw) = composite_gauss(&tb, q);
        let pi = std::f64::consts::PI;
        let mut angle_breaks: Vec<f64> = Vec::new();
        // two graded halves meeting at the focus
        let left = graded_breakpoints(-pi, 0.0, false, true, params.ratio, params.min_scale, params.max_angle_panel);
        let right = graded_breakpoints(0.0, pi, true, false, params.ratio, params.min_scale, params.max_angle_panel);
        angle_breaks.extend(&left);
        angle_breaks.extend(right.iter().skip(1));
        let (thetas, thw) = composite_gauss(&angle_breaks, q);
        let n_inner = wts.len();
        let mut shell_depth = Vec::with_capacity(ts.len() * thetas.len());
        for (t, wt) in ts.iter().zip(&tw) {
            let r = 1.0 - t;
            for (th, wa) in thetas.iter().zip(&thw) {
                pts.push(C::from_polar(T::lit(r), T::lit(params.focus_angle + th)));
                wts.push(T::lit(wt * r * wa));
                shell_depth.push((*t, params.focus_angle + th));
            }
        }

        // boundary nodes graded the same way, refined until there are at
        // least n_boundary of them
        let panel = params.max_angle_panel.min(two_pi * q as f64 / n_boundary.max(1) as f64);
        let mut bbreaks = graded_breakpoints(-pi, 0.0, false, true, params.ratio, params.min_scale, panel);
        let right = graded_breakpoints(0.0, pi, true, false, params.ratio, params.min_scale, panel);
        bbreaks.extend(right.iter().skip(1));
        let (bth, bw) = composite_gauss(&bbreaks, q);
        let boundary = bth.iter().map(|th| C::from_polar(T::one(), T::lit(params.focus_angle + th))).collect();
        let boundary_weights = bw.iter().map(|w| T::lit(*w)).collect();

        let mut cloud = Self::assemble(dom, pts, wts, boundary, boundary_weights, seed, "graded-disc")?;
        // 1 - r loses relative accuracy at the finest depths
        for (k, (t, th)) in shell_depth.into_iter().enumerate() {
            cloud.depth[n_inner + k] = T::lit(t);
            cloud.feet[n_inner + k] = C::from_polar(T::one(), T::lit(th));
        }
        Ok(cloud)
    }

    /// Builds a cloud from explicit samples, computing depths and feet.
    pub fn from_parts(
        dom: &ModelDomain<T>,
        interior: Vec<C<T>>,
        interior_weights: Vec<T>,
        boundary: Vec<C<T>>,
        boundary_weights: Vec<T>,
        seed: u64,
    ) -> Result<Self> {
        Self::assemble(dom, interior, interior_weights, boundary, boundary_weights, seed, "explicit")
    }

    fn assemble(
        dom: &ModelDomain<T>,
        interior: Vec<C<T>>,
        interior_weights: Vec<T>,
        boundary: Vec<C<T>>,
        boundary_weights: Vec<T>,
        seed: u64,
        method: &str,
    ) -> Result<Self> {
        let dim = dom.dim();
        if interior.len() != dim * interior_weights.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * interior_weights.len(),
                got: interior.len(),
            });
        }
        if boundary.len() != dim * boundary_weights.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * boundary_weights.len(),
                got: boundary.len(),
            });
        }
        let mut depth = Vec::with_capacity(interior_weights.len());
        let mut feet = Vec::with_capacity(interior.len());
        for z in interior.chunks(dim) {
            let (d, foot) = dom.nearest_boundary(z)?;
            depth.push(d);
            feet.extend(foot);
        }
        let mut tol = T::zero();
        for b in boundary.chunks(dim) {
            tol = tol.max(dom.defining_function(b).abs());
        }
        Ok(SampleCloud {
            dim,
            interior,
            interior_weights,
            depth,
            feet,
            boundary,
            boundary_weights,
            seed,
            boundary_tolerance: tol.max(dom.tol.boundary),
            quadrature_tolerance: T::lit(0.01),
            method: method.to_string(),
        })
    }

    pub fn n_interior(&self) -> usize {
        self.interior_weights.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary_weights.len()
    }

    pub fn point(&self, i: usize) -> &[C<T>] {
        &self.interior[i * self.dim..(i + 1) * self.dim]
    }

    pub fn foot(&self, i: usize) -> &[C<T>] {
        &self.feet[i * self.dim..(i + 1) * self.dim]
    }

    pub fn boundary_point(&self, i: usize) -> &[C<T>] {
        &self.boundary[i * self.dim..(i + 1) * self.dim]
    }

    pub fn interior_volume(&self) -> T {
        self.interior_weights.iter().copied().sum()
    }

    pub fn boundary_measure(&self) -> T {
        self.boundary_weights.iter().copied().sum()
    }

    /// Relative errors of the interior and boundary weight sums.
    pub fn measure_errors(&self, dom: &ModelDomain<T>) -> (T, T) {
        let v = dom.volume();
        let a = dom.surface_area();
        (
            ((self.interior_volume() - v) / v).abs(),
            ((self.boundary_measure() - a) / a).abs(),
        )
    }

    /// Index of the interior sample closest to `z`, with its distance.
    pub fn nearest_interior(&self, z: &[C<T>]) -> (usize, T) {
        let mut best = (0, T::infinity());
        for i in 0..self.n_interior() {
            let d = crate::scalar::cdist(self.point(i), z);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    /// Drops interior samples within `radius` of `centre`.
    pub fn exclude_ball(&self, centre: &[C<T>], radius: T) -> Self {
        let mut out = self.clone();
        out.interior.clear();
        out.interior_weights.clear();
        out.depth.clear();
        out.feet.clear();
        for i in 0..self.n_interior() {
            if crate::scalar::cdist(self.point(i), centre) > radius {
                out.interior.extend_from_slice(self.point(i));
                out.interior_weights.push(self.interior_weights[i]);
                out.depth.push(self.depth[i]);
                out.feet.extend_from_slice(self.foot(i));
            }
        }
        out
    }
}

impl<T: Real> ModelDomain<T> {
    /// Distance to the boundary and a nearest boundary point, without the
    /// tubular-neighbourhood restriction. The origin of the ball maps to
    /// `(1, 0, ..., 0)`.
    pub fn nearest_boundary(&self, z: &[C<T>]) -> Result<(T, Vec<C<T>>)> {
        match self.kind {
            DomainKind::Ball { n } => {
                if z.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: z.len() });
                }
                let r = cnorm(z);
                if r == T::zero() {
                    let mut foot = vec![C::new(T::zero(), T::zero()); n];
                    foot[0] = C::new(T::one(), T::zero());
                    return Ok((T::one(), foot));
                }
                Ok(((T::one() - r).abs(), z.iter().map(|c| c / r).collect()))
            }
            DomainKind::Egg { .. } => {
                let p = self.project_unchecked(z)?;
                Ok((p.distance, p.foot.0))
            }
        }
    }
}

/// Ring counts `max(min_count, ceil(kappa / t_i))` tuned so the total is
/// close to `target`.
fn ring_counts(depths: &[f64], target: usize, min_count: usize) -> Vec<usize> {
    let counts = |kappa: f64| -> Vec<usize> {
        depths
            .iter()
            .map(|t| min_count.max((kappa / t).ceil() as usize))
            .collect()
    };
    let total = |c: &[usize]| c.iter().sum::<usize>();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while total(&counts(hi)) < target {
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if total(&counts(mid)) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = counts(lo);
    let b = counts(hi);
    if target.abs_diff(total(&a)) <= target.abs_diff(total(&b)) {
        a
    } else {
        b
    }
}

fn ball_interior<T: Real>(n: usize, target: usize, rng: &mut ChaCha8Rng) -> (Vec<C<T>>, Vec<T>) {
    let min_count = if n == 1 { 8 } else { 24 };
    let mut n_rings = ((0.3 * (target as f64).sqrt()).round() as usize).max(1);
    while n_rings > 1 && n_rings * min_count > target {
        n_rings -= 1;
    }
    let min_count = min_count.min(target.max(1));
    let (u, wu) = gauss_on(0.0, 1.0, n_rings);
    let radii: Vec<f64> = u.iter().map(|u| u.powf(1.0 / (2 * n) as f64)).collect();
    let depths: Vec<f64> = radii.iter().map(|r| 1.0 - r).collect();
    let counts = ring_counts(&depths, target, min_count);
    let vol = ball_volume(n);
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    let mut dir = vec![C::new(0.0, 0.0); n];
    for ((r, w), &m) in radii.iter().zip(&wu).zip(&counts) {
        let seq = SpherePoints::new(n, rng);
        for i in 0..m {
            if n == 1 {
                // equispaced angles integrate trigonometric modes below m exactly
                dir[0] = C::from_polar(1.0, std::f64::consts::TAU * (i as f64 + seq.shift[0]) / m as f64);
            } else {
                seq.point(i, &mut dir);
            }
            pts.extend(dir.iter().map(|c| C::new(T::lit(c.re * r), T::lit(c.im * r))));
            wts.push(T::lit(vol * w / m as f64));
        }
    }
    (pts, wts)
}

fn ball_boundary<T: Real>(n: usize, count: usize, rng: &mut ChaCha8Rng) -> (Vec<C<T>>, Vec<T>) {
    let area = sphere_area(n);
    let seq = SpherePoints::new(n, rng);
    let mut dir = vec![C::new(0.0, 0.0); n];
    let mut pts = Vec::with_capacity(n * count);
    for i in 0..count {
        if n == 1 {
            let th = std::f64::consts::TAU * (i as f64 + seq.shift[0]) / count as f64;
            dir[0] = C::from_polar(1.0, th);
        } else {
            seq.point(i, &mut dir);
        }
        pts.extend(dir.iter().map(|c| C::new(T::lit(c.re), T::lit(c.im))));
    }
    (pts, vec![T::lit(area / count as f64); count])
}

fn egg_interior<T: Real>(dom: &ModelDomain<T>, m: u32, count: usize, rng: &mut ChaCha8Rng) -> (Vec<C<T>>, Vec<T>) {
    let vol = dom.volume();
    let mut pts = Vec::with_capacity(2 * count);
    while pts.len() < 2 * count {
        let x: [f64; 4] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let z = [C::new(x[0], x[1]), C::new(x[2], x[3])];
        if z[0].norm_sqr() + z[1].norm_sqr().powi(m as i32) < 1.0 {
            pts.extend(z.iter().map(|c| C::new(T::lit(c.re), T::lit(c.im))));
        }
    }
    (pts, vec![vol / T::from_usize_lossy(count); count])
}

fn egg_boundary<T: Real>(m: u32, count: usize, rng: &mut ChaCha8Rng) -> (Vec<C<T>>, Vec<T>) {
    let alpha = rd_alpha(3);
    let shift: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
    let mut pts = Vec::with_capacity(2 * count);
    let mut wts = Vec::with_capacity(count);
    let tau = std::f64::consts::TAU;
    for i in 0..count {
        let u: Vec<f64> = (0..3).map(|k| (shift[k] + alpha[k] * (i + 1) as f64).fract()).collect();
        let r = u[0];
        let a = (1.0 - r.powi(2 * m as i32)).max(0.0).sqrt();
        pts.push(C::from_polar(T::lit(a), T::lit(tau * u[1])));
        pts.push(C::from_polar(T::lit(r), T::lit(tau * u[2])));
        wts.push(T::lit(tau * tau * egg_surface_density(r, m) / count as f64));
    }
    (pts, wts)
}

pub(crate) fn ball_volume(n: usize) -> f64 {
    (1..=n).fold(1.0, |v, k| v * std::f64::consts::PI / k as f64)
}

pub(crate) fn sphere_area(n: usize) -> f64 {
    2.0 * n as f64 * ball_volume(n)
}

/// Additive recurrence constants of the `R_d` low-discrepancy sequence.
fn rd_alpha(d: usize) -> Vec<f64> {
    // generalised golden ratio: positive root of x^{d+1} = x + 1
    let mut g = 2.0f64;
    for _ in 0..64 {
        g = (1.0 + g).powf(1.0 / (d as f64 + 1.0));
    }
    (1..=d).map(|j| (1.0 / g.powi(j as i32)).fract()).collect()
}

/// Shifted `R_{2n-1}` points mapped to the unit sphere of `C^n`: the squared
/// moduli are Dirichlet(1, ..., 1) by stick breaking, phases are uniform.
struct SpherePoints {
    n: usize,
    alpha: Vec<f64>,
    shift: Vec<f64>,
}

impl SpherePoints {
    fn new(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let d = 2 * n - 1;
        SpherePoints {
            n,
            alpha: rd_alpha(d),
            shift: (0..d).map(|_| rng.gen()).collect(),
        }
    }

    fn point(&self, i: usize, out: &mut [C<f64>]) {
        let n = self.n;
        let u = |k: usize| (self.shift[k] + self.alpha[k] * (i + 1) as f64).fract();
        let mut rest = 1.0;
        for j in 0..n {
            let sq = if j + 1 == n {
                rest
            } else {
                let k = (n - 1 - j) as f64;
                let b = 1.0 - (1.0 - u(j)).powf(1.0 / k);
                let s = rest * b;
                rest -= s;
                s
            };
            let phase = std::f64::consts::TAU * u(n - 1 + j);
            out[j] = C::from_polar(sq.max(0.0).sqrt(), phase);
        }
    }
}

/// Monte Carlo volume of the tent `B#(q, delta)`, sampling a box in the
/// normal/tangent frame at `q` that encloses the tent. Returns the estimate
/// and the fraction of hits.
pub fn tent_volume_mc<T: Real>(
    dom: &ModelDomain<T>,
    q: &[C<T>],
    delta: T,
    samples: usize,
    seed: u64,
) -> Result<(T, T)> {
    let frame = dom.frame(q);
    let normal_half = delta + delta.max(dom.tent_height(delta));
    let tangent_half = match dom.kind {
        DomainKind::Ball { .. } => T::lit(1.5) * (delta + delta * delta),
        DomainKind::Egg { .. } => T::lit(1.5) * (dom.tau_scaling(q, delta, 2)? + delta),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    let n = dom.dim();
    let mut z = vec![C::new(T::zero(), T::zero()); n];
    let sym = |h: T, rng: &mut ChaCha8Rng| C::new(h * T::lit(rng.gen_range(-1.0..1.0)), h * T::lit(rng.gen_range(-1.0..1.0)));
    for _ in 0..samples {
        let a = sym(normal_half, &mut rng);
        z.copy_from_slice(q);
        for (zi, ni) in z.iter_mut().zip(&frame.normal) {
            *zi = *zi + ni * a;
        }
        for t in &frame.tangents {
            let b = sym(tangent_half, &mut rng);
            for (zi, ti) in z.iter_mut().zip(t) {
                *zi = *zi + ti * b;
            }
        }
        if dom.tent_membership(&z, q, delta)? {
            hits += 1;
        }
    }
    let four = T::lit(4.0);
    let box_vol = four * normal_half * normal_half * (four * tangent_half * tangent_half).powi(n as i32 - 1);
    let frac = T::from_usize_lossy(hits) / T::from_usize_lossy(samples);
    Ok((box_vol * frac, frac))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_weights_sum_to_volume() {
        for n in 1..=3 {
            let dom = ModelDomain::<f64>::ball(n);
            let cloud = SampleCloud::sample(&dom, 2000, 500, 7).unwrap();
            let (vi, vb) = cloud.measure_errors(&dom);
            assert!(vi < 1e-10 && vb < 1e-10, "n={n}: {vi} {vb}");
            assert!(cloud.n_interior().abs_diff(2000) < 100);
        }
    }

    #[test]
    fn sphere_points_lie_on_sphere_and_are_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq = SpherePoints::new(2, &mut rng);
        let mut out = vec![C::new(0.0, 0.0); 2];
        let mut mean_sq = 0.0;
        for i in 0..4000 {
            seq.point(i, &mut out);
            assert!((cnorm(&out) - 1.0).abs() < 1e-12);
            mean_sq += out[0].norm_sqr();
        }
        // |z1|^2 is uniform on [0,1] on S^3
        assert!((mean_sq / 4000.0 - 0.5).abs() < 5e-3);
    }

    #[test]
    fn egg_cloud_matches_volume_and_area() {
        let dom = ModelDomain::<f64>::egg(2);
        let cloud = SampleCloud::sample(&dom, 200, 4000, 3).unwrap();
        let (_, vb) = cloud.measure_errors(&dom);
        assert!(vb < 0.01, "{vb}");
        for i in 0..cloud.n_interior() {
            assert!(dom.contains(cloud.point(i)));
        }
    }

    #[test]
    fn graded_disc_integrates_area_and_singular_weight() {
        let dom = ModelDomain::<f64>::ball(1);
        let cloud = SampleCloud::graded_disc(&dom, &GradedDiscParams::default(), 256, 1).unwrap();
        let (vi, vb) = cloud.measure_errors(&dom);
        assert!(vi < 1e-10 && vb < 1e-12, "{vi} {vb}");
        // \int_D |1 - z|^{-1.5} dV from two refinements; |1 - z| from the
        // stored depth and foot, since 1 - |z| rounds away near the focus
        let f = |c: &SampleCloud<f64>| -> f64 {
            (0..c.n_interior())
                .map(|i| {
                    let (t, th) = (c.depth[i], c.foot(i)[0].arg());
                    let d2 = t * t + 4.0 * (1.0 - t) * (0.5 * th).sin().powi(2);
                    c.interior_weights[i] * d2.powf(-0.75)
                })
                .sum()
        };
        let coarse = f(&cloud);
        let fine_params = GradedDiscParams {
            nodes_per_panel: 5,
            ..GradedDiscParams::default()
        };
        let fine = f(&SampleCloud::graded_disc(&dom, &fine_params, 256, 1).unwrap());
        assert!(((coarse - fine) / fine).abs() < 1e-3, "{coarse} {fine}");
    }

    #[test]
    fn graded_disc_boundary_is_refined_at_the_focus() {
        let dom = ModelDomain::<f64>::ball(1);
        let cloud = SampleCloud::graded_disc(&dom, &GradedDiscParams::default(), 256, 1).unwrap();
        assert!(cloud.n_boundary() >= 256);
        let closest = (0..cloud.n_boundary())
            .map(|i| cloud.boundary_point(i)[0].arg().abs())
            .fold(f64::INFINITY, f64::min);
        assert!(closest < 1e-12, "{closest}");
        let finest = cloud.depth.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(finest > 0.0 && finest < 1e-28, "{finest}");
    }

    #[test]
    fn disc_tent_volume_scales_like_delta_to_the_fourth() {
        let dom = ModelDomain::<f64>::ball(1);
        let q = [C::new(1.0, 0.0)];
        let (v1, _) = tent_volume_mc(&dom, &q, 0.2, 20000, 1).unwrap();
        let (v2, _) = tent_volume_mc(&dom, &q, 0.1, 20000, 2).unwrap();
        let slope = (v1 / v2).log2();
        assert!((slope - 4.0).abs() < 0.2, "{slope}");
    }
}
