//! Model domains: the unit ball in `C^n` and the egg `|z1|^2 + |z2|^{2m} < 1`.
//!
//! A [`ModelDomain`] bundles the defining function, the nearest-point
//! projection onto the boundary, the boundary quasi-metric, the scaling
//! functions that size tents, and membership in the tents `B#(zeta, delta)`.
//! Every tolerance used by these operations is a field of [`Tolerances`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cdist, cnorm, hermitian_dot, Real, C};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainKind {
    /// Unit ball of complex dimension `n >= 1`; `n = 1` is the disc.
    Ball { n: usize },
    /// `{|z1|^2 + |z2|^{2m} < 1}` in `C^2`, `m >= 2`.
    Egg { m: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Tolerances<T> {
    /// Largest `|rho|` accepted for a boundary point.
    pub boundary: T,
    /// Residual tolerance of the nearest-point solver.
    pub solver: T,
    /// Relative tolerance for bisections on `delta` or `t`.
    pub bisection_rel: T,
    pub max_projection_steps: usize,
    /// Angular samples used to maximise `rho` over a circle in the egg frame.
    pub circle_samples: usize,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances {
            boundary: T::lit(1e-9),
            solver: T::lit(1e-10),
            bisection_rel: T::lit(1e-8),
            max_projection_steps: 100,
            circle_samples: 24,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ModelDomain<T> {
    pub kind: DomainKind,
    /// Radius of the tubular neighbourhood on which the projection is used.
    pub eps0: T,
    /// Tents with `delta >= delta_global` are the whole domain.
    pub delta_global: T,
    pub tol: Tolerances<T>,
}

/// Result of the nearest-point projection.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection<T> {
    pub foot: BoundaryPoint<T>,
    /// Euclidean distance from the point to the boundary.
    pub distance: T,
    pub inside: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BoundaryPoint<T>(pub Vec<C<T>>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct InteriorPoint<T>(pub Vec<C<T>>);

impl<T> BoundaryPoint<T> {
    pub fn as_slice(&self) -> &[C<T>] {
        &self.0
    }
}

impl<T> InteriorPoint<T> {
    pub fn as_slice(&self) -> &[C<T>] {
        &self.0
    }
}

/// Orthonormal complex frame at a boundary point: the unit normal followed
/// by an orthonormal basis of the complex tangent space.
#[derive(Clone, Debug)]
pub struct BoundaryFrame<T> {
    pub normal: Vec<C<T>>,
    pub tangents: Vec<Vec<C<T>>>,
}

impl<T: Real> ModelDomain<T> {
    pub fn ball(n: usize) -> Self {
        assert!(n >= 1, "ball dimension must be at least 1");
        ModelDomain {
            kind: DomainKind::Ball { n },
            eps0: T::lit(0.5),
            delta_global: T::lit(0.4),
            tol: Tolerances::default(),
        }
    }

    pub fn egg(m: u32) -> Self {
        assert!(m >= 2, "egg exponent must be at least 2");
        ModelDomain {
            kind: DomainKind::Egg { m },
            eps0: T::lit(0.2),
            delta_global: T::lit(0.4),
            tol: Tolerances::default(),
        }
    }

    pub fn with_eps0(mut self, eps0: T) -> Self {
        self.eps0 = eps0;
        self
    }

    pub fn with_delta_global(mut self, delta_global: T) -> Self {
        self.delta_global = delta_global;
        self
    }

    pub fn with_tolerances(mut self, tol: Tolerances<T>) -> Self {
        self.tol = tol;
        self
    }

    /// Checks the invariants on `eps0` and `delta_global`.
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DomainKind::Ball { n } if n == 0 => return Err(Error::invalid("n", "must be >= 1")),
            DomainKind::Egg { m } if m < 2 => return Err(Error::invalid("m", "must be >= 2")),
            _ => {}
        }
        if !(self.eps0 > T::zero()) {
            return Err(Error::invalid("eps0", "must be positive"));
        }
        if matches!(self.kind, DomainKind::Ball { .. }) && self.eps0 >= T::one() {
            return Err(Error::invalid("eps0", "must be < 1 for the ball"));
        }
        if !(self.delta_global > T::zero()) {
            return Err(Error::invalid("delta_global", "must be positive"));
        }
        Ok(())
    }

    /// Complex dimension of the ambient space.
    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Ball { n } => n,
            DomainKind::Egg { .. } => 2,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            DomainKind::Ball { .. } => "ball",
            DomainKind::Egg { .. } => "egg",
        }
    }

    pub fn is_ball(&self) -> bool {
        matches!(self.kind, DomainKind::Ball { .. })
    }

    fn check_dim(&self, z: &[C<T>]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    /// Defining function: negative exactly on the open domain.
    pub fn defining_function(&self, z: &[C<T>]) -> T {
        match self.kind {
            DomainKind::Ball { .. } => cnorm(z) - T::one(),
            DomainKind::Egg { m } => {
                z[0].norm_sqr() + z[1].norm_sqr().powi(m as i32) - T::one()
            }
        }
    }

    pub fn contains(&self, z: &[C<T>]) -> bool {
        self.defining_function(z) < T::zero()
    }

    /// Lebesgue volume of the domain.
    pub fn volume(&self) -> T {
        match self.kind {
            DomainKind::Ball { n } => {
                let mut v = T::one();
                for k in 1..=n {
                    v = v * T::PI() / T::from_usize_lossy(k);
                }
                v
            }
            DomainKind::Egg { m } => {
                let mf = T::lit(m as f64);
                T::PI() * T::PI() * mf / (mf + T::one())
            }
        }
    }

    /// Surface measure of the boundary.
    pub fn surface_area(&self) -> T {
        match self.kind {
            DomainKind::Ball { n } => {
                // |S^{2n-1}| = 2 pi^n / (n-1)!
                let mut v = T::lit(2.0);
                for _ in 0..n {
                    v = v * T::PI();
                }
                for k in 1..n {
                    v = v / T::from_usize_lossy(k);
                }
                v
            }
            DomainKind::Egg { m } => {
                let breaks = crate::quadrature::graded_breakpoints(
                    0.0, 1.0, false, true, 0.3, 1e-6, 0.05,
                );
                let (x, w) = crate::quadrature::composite_gauss(&breaks, 8);
                let total: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(r, w)| w * egg_surface_density(*r, m))
                    .sum();
                T::lit(4.0 * std::f64::consts::PI * std::f64::consts::PI * total)
            }
        }
    }

    /// Outer unit normal at a boundary point.
    pub fn outward_normal(&self, q: &[C<T>]) -> Vec<C<T>> {
        match self.kind {
            DomainKind::Ball { .. } => {
                let r = cnorm(q);
                q.iter().map(|c| c / r).collect()
            }
            DomainKind::Egg { m } => {
                let g2 = T::lit(m as f64) * q[1].norm_sqr().powi(m as i32 - 1);
                let v = [q[0], q[1] * g2];
                let r = cnorm(&v);
                v.iter().map(|c| c / r).collect()
            }
        }
    }

    /// Normal/tangent frame used for the normalising rotation at `q`.
    pub fn frame(&self, q: &[C<T>]) -> BoundaryFrame<T> {
        let normal = self.outward_normal(q);
        let tangents = complex_complement(&normal);
        BoundaryFrame { normal, tangents }
    }

    /// Nearest-point projection onto the boundary.
    pub fn project(&self, z: &[C<T>]) -> Result<Projection<T>> {
        self.check_dim(z)?;
        let proj = match self.kind {
            DomainKind::Ball { .. } => {
                let r = cnorm(z);
                if r == T::zero() {
                    return Err(Error::OutsideTubularNeighborhood {
                        distance: 1.0,
                        eps0: self.eps0.to_f64_lossy(),
                    });
                }
                Projection {
                    foot: BoundaryPoint(z.iter().map(|c| c / r).collect()),
                    distance: (T::one() - r).abs(),
                    inside: r < T::one(),
                }
            }
            DomainKind::Egg { m } => self.project_egg(z, m)?,
        };
        if proj.distance >= self.eps0 {
            return Err(Error::OutsideTubularNeighborhood {
                distance: proj.distance.to_f64_lossy(),
                eps0: self.eps0.to_f64_lossy(),
            });
        }
        Ok(proj)
    }

    /// Nearest boundary point without the tubular-neighbourhood check.
    pub fn project_unchecked(&self, z: &[C<T>]) -> Result<Projection<T>> {
        self.check_dim(z)?;
        match self.kind {
            DomainKind::Ball { .. } => {
                let (distance, foot) = self.nearest_boundary(z)?;
                Ok(Projection {
                    foot: BoundaryPoint(foot),
                    distance,
                    inside: self.contains(z),
                })
            }
            DomainKind::Egg { m } => self.project_egg(z, m),
        }
    }

    /// `pi(z)`: the unique nearest boundary point.
    pub fn boundary_projection(&self, z: &[C<T>]) -> Result<BoundaryPoint<T>> {
        self.project(z).map(|p| p.foot)
    }

    /// Euclidean distance to the boundary. Exact for the ball; for the egg it
    /// requires the projection and is only reliable inside the tubular shell.
    pub fn boundary_distance(&self, z: &[C<T>]) -> Result<T> {
        match self.kind {
            DomainKind::Ball { .. } => Ok((T::one() - cnorm(z)).abs()),
            DomainKind::Egg { m } => self.project_egg(z, m).map(|p| p.distance),
        }
    }

    fn project_egg(&self, z: &[C<T>], m: u32) -> Result<Projection<T>> {
        // Reinhardt symmetry: the nearest point keeps the arguments of z.
        let x = z[0].norm();
        let y = z[1].norm();
        let (a, b) = nearest_on_egg_curve(x, y, m, self.tol.solver, self.tol.max_projection_steps)?;
        let phase = |c: C<T>, r: T| if r > T::zero() { c / r } else { C::new(T::one(), T::zero()) };
        let foot = vec![phase(z[0], x) * a, phase(z[1], y) * b];
        let distance = cdist(z, &foot);
        let inside = self.defining_function(z) < T::zero();
        Ok(Projection {
            foot: BoundaryPoint(foot),
            distance,
            inside,
        })
    }

    fn check_boundary(&self, q: &[C<T>]) -> Result<()> {
        self.check_dim(q)?;
        let r = self.defining_function(q).abs();
        if r > self.tol.boundary {
            return Err(Error::NotOnBoundary {
                residual: r.to_f64_lossy(),
                tolerance: self.tol.boundary.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Boundary quasi-metric. Ball: `|1 - <zeta, eta>|^{1/2}`. Egg: the
    /// symmetrised polydisc distance `max(d5(zeta, eta), d5(eta, zeta))`.
    pub fn quasi_metric(&self, zeta: &[C<T>], eta: &[C<T>]) -> Result<T> {
        self.check_boundary(zeta)?;
        self.check_boundary(eta)?;
        Ok(self.quasi_metric_unchecked(zeta, eta))
    }

    /// [`quasi_metric`](Self::quasi_metric) without the boundary checks.
    pub fn quasi_metric_unchecked(&self, zeta: &[C<T>], eta: &[C<T>]) -> T {
        match self.kind {
            DomainKind::Ball { .. } => ball_gauge(zeta, eta).sqrt(),
            DomainKind::Egg { m } => {
                let a = self.egg_directed_distance(zeta, eta, m);
                let b = self.egg_directed_distance(eta, zeta, m);
                a.max(b)
            }
        }
    }

    /// `inf{delta : eta in D(zeta, delta)}` with `D` the polydisc of radii
    /// `(delta, tau2(zeta, delta))` in the normalised frame at `zeta`.
    /// Because `tau2` inverts the rise of `rho` along the tangent circle,
    /// the infimum is `max(|eta'_1|, rise(|eta'_2|))`.
    fn egg_directed_distance(&self, zeta: &[C<T>], eta: &[C<T>], m: u32) -> T {
        let frame = self.frame(zeta);
        let diff: Vec<C<T>> = eta.iter().zip(zeta).map(|(a, b)| a - b).collect();
        let w1 = hermitian_dot(&diff, &frame.normal).norm();
        let w2 = hermitian_dot(&diff, &frame.tangents[0]).norm();
        let rise = self.egg_rise(zeta, &frame.tangents[0], w2, m);
        w1.max(rise)
    }

    /// `max_{|s| = t} |rho(q + s e) - rho(q)|` over the circle of radius `t`
    /// in the complex direction `e`.
    pub(crate) fn egg_rise(&self, q: &[C<T>], e: &[C<T>], t: T, m: u32) -> T {
        if t == T::zero() {
            return T::zero();
        }
        let rho_q = egg_rho(q, m);
        let eval = |phi: T| {
            let s = C::from_polar(t, phi);
            let z = [q[0] + e[0] * s, q[1] + e[1] * s];
            (egg_rho(&z, m) - rho_q).abs()
        };
        let k = self.tol.circle_samples.max(4);
        let step = T::lit(2.0) * T::PI() / T::from_usize_lossy(k);
        let mut best = T::zero();
        let mut best_i = 0usize;
        for i in 0..k {
            let v = eval(step * T::from_usize_lossy(i));
            if v > best {
                best = v;
                best_i = i;
            }
        }
        // golden-section refinement in the bracket around the best sample
        let centre = step * T::from_usize_lossy(best_i);
        let (mut lo, mut hi) = (centre - step, centre + step);
        let g = T::lit(0.618_033_988_749_894_8);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let mut f1 = eval(x1);
        let mut f2 = eval(x2);
        for _ in 0..24 {
            if f1 > f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = eval(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = eval(x2);
            }
        }
        best.max(f1).max(f2)
    }

    /// `Lambda(q, delta) = delta^2` on the ball.
    pub fn lambda_scaling(&self, _q: &[C<T>], delta: T) -> Result<T> {
        match self.kind {
            DomainKind::Ball { .. } => {
                if !(delta > T::zero()) {
                    return Err(Error::invalid("delta", "must be positive"));
                }
                Ok(delta * delta)
            }
            DomainKind::Egg { .. } => Err(Error::WrongDomainKind {
                operation: "lambda_scaling",
                kind: "egg",
            }),
        }
    }

    /// Polydisc radii `tau_j(q, delta)` on the egg. `tau_1 = delta`; `tau_2`
    /// is the largest `t` with `|rho(q + s e) - rho(q)| <= delta` for all
    /// `|s| <= t`, found by bisection.
    pub fn tau_scaling(&self, q: &[C<T>], delta: T, j: usize) -> Result<T> {
        let m = match self.kind {
            DomainKind::Egg { m } => m,
            DomainKind::Ball { .. } => {
                return Err(Error::WrongDomainKind {
                    operation: "tau_scaling",
                    kind: "ball",
                })
            }
        };
        if !(delta > T::zero()) {
            return Err(Error::invalid("delta", "must be positive"));
        }
        match j {
            1 => Ok(delta),
            2 => {
                let frame = self.frame(q);
                let e = &frame.tangents[0];
                let rise = |t: T| self.egg_rise(q, e, t, m);
                let mut hi = T::one();
                let mut grow = 0;
                while rise(hi) < delta {
                    hi = hi * T::lit(2.0);
                    grow += 1;
                    if grow > 60 {
                        return Err(Error::BisectionFailure(
                            "could not bracket tau_2 from above".into(),
                        ));
                    }
                }
                let mut lo = T::zero();
                for _ in 0..400 {
                    if hi - lo <= self.tol.bisection_rel * hi {
                        return Ok(T::lit(0.5) * (lo + hi));
                    }
                    let mid = T::lit(0.5) * (lo + hi);
                    if rise(mid) <= delta {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Err(Error::BisectionFailure("tau_2 bisection did not reach tolerance".into()))
            }
            _ => Err(Error::invalid("j", "coordinate index must be 1 or 2")),
        }
    }

    /// Height of the tent over a boundary ball of radius `delta`:
    /// `Lambda = delta^2` on the ball, `delta` on the egg.
    pub fn tent_height(&self, delta: T) -> T {
        match self.kind {
            DomainKind::Ball { .. } => delta * delta,
            DomainKind::Egg { .. } => delta,
        }
    }

    /// Membership in the tent `B#(zeta, delta)` given the depth and foot of
    /// the point (as produced by [`project`](Self::project)).
    pub fn tent_contains(&self, depth: T, foot: &[C<T>], zeta: &[C<T>], delta: T) -> bool {
        if delta >= self.delta_global {
            return true;
        }
        if depth >= self.eps0 {
            return false;
        }
        depth <= self.tent_height(delta) && self.quasi_metric_unchecked(foot, zeta) < delta
    }

    /// Membership of an interior point in `B#(zeta, delta)`.
    pub fn tent_membership(&self, z: &[C<T>], zeta: &[C<T>], delta: T) -> Result<bool> {
        if !(delta > T::zero()) {
            return Err(Error::invalid("delta", "must be positive"));
        }
        self.check_dim(z)?;
        if !self.contains(z) {
            return Ok(false);
        }
        if delta >= self.delta_global {
            return Ok(true);
        }
        let depth = match self.boundary_distance(z) {
            Ok(d) => d,
            Err(Error::OutsideTubularNeighborhood { .. }) => return Ok(false),
            Err(e) => return Err(e),
        };
        if depth >= self.eps0 {
            return Ok(false);
        }
        let p = self.project(z)?;
        Ok(self.tent_contains(p.distance, p.foot.as_slice(), zeta, delta))
    }
}

/// `|1 - <zeta, eta>|` for unit vectors, evaluated as
/// `|(1/2)|zeta - eta|^2 - i Im<zeta, eta>|` to keep relative accuracy for
/// nearby points.
pub(crate) fn ball_gauge<T: Real>(zeta: &[C<T>], eta: &[C<T>]) -> T {
    let mut half_sq = T::zero();
    let mut im = T::zero();
    for (a, b) in zeta.iter().zip(eta) {
        half_sq = half_sq + (a - b).norm_sqr();
        im = im + (a.im * b.re - a.re * b.im);
    }
    half_sq = half_sq * T::lit(0.5);
    (half_sq * half_sq + im * im).sqrt()
}

pub(crate) fn egg_rho<T: Real>(z: &[C<T>], m: u32) -> T {
    z[0].norm_sqr() + z[1].norm_sqr().powi(m as i32) - T::one()
}

/// Surface density in the coordinates `(|z2|, arg z1, arg z2)`.
pub(crate) fn egg_surface_density(r: f64, m: u32) -> f64 {
    let mf = m as f64;
    r * (1.0 - r.powi(2 * m as i32) + mf * mf * r.powi(4 * m as i32 - 2)).sqrt()
}

/// Orthonormal basis of the Hermitian complement of a unit vector.
fn complex_complement<T: Real>(v: &[C<T>]) -> Vec<Vec<C<T>>> {
    let n = v.len();
    if n == 2 {
        return vec![vec![-v[1].conj(), v[0].conj()]];
    }
    let mut basis: Vec<Vec<C<T>>> = Vec::with_capacity(n.saturating_sub(1));
    let zero = C::new(T::zero(), T::zero());
    for k in 0..n {
        if basis.len() + 1 == n {
            break;
        }
        let mut e = vec![zero; n];
        e[k] = C::new(T::one(), T::zero());
        let proj = hermitian_dot(&e, v);
        for (x, y) in e.iter_mut().zip(v) {
            *x = *x - y * proj;
        }
        for b in &basis {
            let c = hermitian_dot(&e, b);
            for (x, y) in e.iter_mut().zip(b) {
                *x = *x - y * c;
            }
        }
        let norm = cnorm(&e);
        if norm > T::lit(1e-6) {
            basis.push(e.into_iter().map(|c| c / norm).collect());
        }
    }
    basis
}

/// Nearest point `(a, b)`, `a, b >= 0`, on the curve `a^2 + b^{2m} = 1` to
/// `(x, y)` in the closed first quadrant. A coarse scan along two
/// parametrisations seeds a Newton iteration on the Lagrange system.
fn nearest_on_egg_curve<T: Real>(x: T, y: T, m: u32, tol: T, max_steps: usize) -> Result<(T, T)> {
    let mi = m as i32;
    let mf = T::lit(m as f64);
    let two = T::lit(2.0);
    let dist2 = |a: T, b: T| (a - x) * (a - x) + (b - y) * (b - y);

    let scan = 128usize;
    let mut best = (T::one(), T::zero());
    let mut best_d = dist2(T::one(), T::zero());
    for i in 0..=scan {
        let u = T::from_usize_lossy(i) / T::from_usize_lossy(scan);
        let a1 = (T::one() - u.powi(2 * mi)).max(T::zero()).sqrt();
        let d1 = dist2(a1, u);
        if d1 < best_d {
            best_d = d1;
            best = (a1, u);
        }
        let b2 = (T::one() - u * u).max(T::zero()).powf(T::one() / (two * mf));
        let d2 = dist2(u, b2);
        if d2 < best_d {
            best_d = d2;
            best = (u, b2);
        }
    }

    let (mut a, mut b) = best;
    let mut lambda = if a > T::lit(1e-8) {
        (x - a) / (two * a)
    } else {
        let g = two * mf * b.powi(2 * mi - 1);
        (y - b) / g
    };
    for _ in 0..max_steps {
        let b_pow = b.powi(2 * mi - 1);
        let f1 = a - x + lambda * two * a;
        let f2 = b - y + lambda * two * mf * b_pow;
        let f3 = a * a + b.powi(2 * mi) - T::one();
        let res = f1.abs().max(f2.abs()).max(f3.abs());
        if res <= tol {
            if a < T::zero() || b < T::zero() {
                break;
            }
            return Ok((a, b));
        }
        // Jacobian
        let j11 = T::one() + two * lambda;
        let j13 = two * a;
        let j22 = if mi >= 1 {
            T::one() + lambda * two * mf * T::lit((2 * mi - 1) as f64) * b.powi(2 * mi - 2)
        } else {
            T::one()
        };
        let j23 = two * mf * b_pow;
        // Solve [[j11,0,j13],[0,j22,j23],[j13,j23,0]] d = -f by elimination.
        if j11 == T::zero() || j22 == T::zero() {
            break;
        }
        // d1 = (-f1 - j13 d3)/j11, d2 = (-f2 - j23 d3)/j22
        // j13 d1 + j23 d2 = -f3
        let denom = -(j13 * j13 / j11 + j23 * j23 / j22);
        if denom == T::zero() {
            break;
        }
        let d3 = (-f3 + j13 * f1 / j11 + j23 * f2 / j22) / denom;
        let d1 = (-f1 - j13 * d3) / j11;
        let d2 = (-f2 - j23 * d3) / j22;
        a = (a + d1).max(T::zero());
        b = (b + d2).max(T::zero());
        lambda = lambda + d3;
    }
    Err(Error::NoConvergence {
        iterations: max_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    #[test]
    fn defining_function_examples() {
        let ball = ModelDomain::<f64>::ball(2);
        assert_eq!(ball.defining_function(&[c(0.0, 0.0), c(0.0, 0.0)]), -1.0);
        let egg = ModelDomain::<f64>::egg(2);
        assert_eq!(egg.defining_function(&[c(1.0, 0.0), c(0.0, 0.0)]), 0.0);
        let v = egg.defining_function(&[c(0.5, 0.0), c(0.5, 0.0)]);
        assert!((v + 0.6875).abs() < 1e-15);
    }

    #[test]
    fn ball_projection_is_radial() {
        let disc = ModelDomain::<f64>::ball(1).with_eps0(0.75);
        let p = disc.boundary_projection(&[c(0.5, 0.0)]).unwrap();
        assert_eq!(p.0, vec![c(1.0, 0.0)]);
        // |z| = 0.5 sits exactly on the default shell radius
        let ball = ModelDomain::<f64>::ball(2).with_eps0(0.6);
        let p = ball.boundary_projection(&[c(0.3, 0.0), c(0.4, 0.0)]).unwrap();
        assert!((p.0[0].re - 0.6).abs() < 1e-15 && (p.0[1].re - 0.8).abs() < 1e-15);
    }

    #[test]
    fn projection_outside_shell_is_rejected() {
        let disc = ModelDomain::<f64>::ball(1);
        let err = disc.boundary_projection(&[c(0.4, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::OutsideTubularNeighborhood { .. }));
        let egg = ModelDomain::<f64>::egg(2);
        let err = egg.boundary_projection(&[c(0.1, 0.0), c(0.1, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::OutsideTubularNeighborhood { .. }));
    }

    #[test]
    fn metric_examples_on_ball() {
        let ball = ModelDomain::<f64>::ball(2);
        let e1 = [c(1.0, 0.0), c(0.0, 0.0)];
        let e2 = [c(0.0, 0.0), c(1.0, 0.0)];
        assert_eq!(ball.quasi_metric(&e1, &e1).unwrap(), 0.0);
        assert!((ball.quasi_metric(&e1, &e2).unwrap() - 1.0).abs() < 1e-15);
        let off = [c(0.9, 0.0), c(0.0, 0.0)];
        assert!(matches!(
            ball.quasi_metric(&e1, &off),
            Err(Error::NotOnBoundary { .. })
        ));
    }

    #[test]
    fn lambda_scaling_values() {
        let ball = ModelDomain::<f64>::ball(1);
        let q = [c(1.0, 0.0)];
        assert!((ball.lambda_scaling(&q, 0.1).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(ball.lambda_scaling(&q, 1.0).unwrap(), 1.0);
        assert_eq!(ball.lambda_scaling(&q, 0.25).unwrap(), 0.0625);
        let egg = ModelDomain::<f64>::egg(2);
        assert!(matches!(
            egg.lambda_scaling(&[c(1.0, 0.0), c(0.0, 0.0)], 0.1),
            Err(Error::WrongDomainKind { .. })
        ));
    }

    #[test]
    fn tau_scaling_root_solves() {
        let egg = ModelDomain::<f64>::egg(2);
        let q1 = [c(1.0, 0.0), c(0.0, 0.0)];
        let q2 = [c(0.0, 0.0), c(1.0, 0.0)];
        // rho changes by t^4 along z2 at (1,0) and by t^2 along z1 at (0,1)
        let t = egg.tau_scaling(&q1, 1e-4, 2).unwrap();
        assert!((t - 0.1).abs() < 1e-8, "{t}");
        let t = egg.tau_scaling(&q2, 1e-4, 2).unwrap();
        assert!((t - 0.01).abs() < 1e-9, "{t}");
        assert_eq!(egg.tau_scaling(&q1, 0.3, 1).unwrap(), 0.3);
        assert!(matches!(
            egg.tau_scaling(&q1, 0.3, 3),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn tent_membership_on_disc() {
        let disc = ModelDomain::<f64>::ball(1).with_delta_global(1.0);
        let zeta = [c(1.0, 0.0)];
        assert!(disc.tent_membership(&[c(0.9, 0.0)], &zeta, 0.5).unwrap());
        assert!(!disc.tent_membership(&[c(0.5, 0.0)], &zeta, 0.5).unwrap());
        // with the default threshold a tent of radius 0.5 is the whole disc
        let disc = ModelDomain::<f64>::ball(1);
        assert!(disc.tent_membership(&[c(0.5, 0.0)], &zeta, 0.5).unwrap());
        assert!(disc.tent_membership(&[c(0.0, 0.1)], &zeta, 0.4).unwrap());
    }

    #[test]
    fn egg_projection_converges_near_both_poles() {
        let egg = ModelDomain::<f64>::egg(2);
        for z in [
            [c(0.99, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.95)],
            [c(0.7, 0.2), c(0.55, -0.45)],
        ] {
            let p = egg.project(&z).unwrap();
            assert!(egg.defining_function(p.foot.as_slice()).abs() < 1e-9);
        }
    }

    #[test]
    fn egg_surface_area_matches_direct_quadrature() {
        let egg = ModelDomain::<f64>::egg(2);
        let (x, w) = crate::quadrature::gauss_on(0.0, 1.0, 200);
        let direct: f64 = x.iter().zip(&w).map(|(r, w)| w * egg_surface_density(*r, 2)).sum::<f64>()
            * 4.0
            * std::f64::consts::PI.powi(2);
        assert!((egg.surface_area() - direct).abs() < 1e-8 * direct);
    }
}
