//! Norm estimates and the quantitative experiments: the upper bound against
//! `[sigma]_p`, the sharp s-sweep, the lower bound through `B_p`, weak type
//! (1,1) for `P`, and the bounds for the dyadic maximal function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{build_adjacent_family, BoundaryMetric};
use crate::error::{Error, Result};
use crate::geometry::{DomainKind, GradedDiscParams, ModelDomain, SampleCloud};
use crate::operators::{kernel_column, maximal, KernelMatrix, Storage};
use crate::scalar::{cdist, cnorm, Real, C};
use crate::tents::{analytic_tent_mask, build_tents, TentSystem};
use crate::weights::{characteristic, power_pair, sharp_example_weight, SharpParams, Weight, WeightPair};

/// `(sum |f|^p sigma dV)^{1/p}`, with `sigma = 1` when absent.
pub fn weighted_norm<T: Real>(cloud: &SampleCloud<T>, f: &[C<T>], sigma: Option<&[T]>, p: T) -> T {
    let rows: Vec<usize> = (0..cloud.n_interior()).collect();
    weighted_norm_on(cloud, &rows, f, sigma, p)
}

/// The same norm restricted to `rows`; `f[k]` is the value at `rows[k]`.
pub fn weighted_norm_on<T: Real>(cloud: &SampleCloud<T>, rows: &[usize], f: &[C<T>], sigma: Option<&[T]>, p: T) -> T {
    let s: T = rows
        .iter()
        .zip(f)
        .map(|(&i, v)| {
            let w = cloud.interior_weights[i] * sigma.map_or(T::one(), |s| s[i]);
            v.norm().powf(p) * w
        })
        .sum();
    s.powf(T::one() / p)
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<LogLogFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("fit", "needs at least two (x, y) pairs"));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid("fit", "log-log fit needs positive finite data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("fit", "x values must not all coincide"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = lx.iter().zip(&ly).map(|(a, b)| b - (intercept + slope * a)).collect();
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(LogLogFit {
        slope,
        intercept,
        residuals,
        max_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub p: f64,
    pub weight: String,
    /// Best ratio found; a lower bound for the discrete operator norm.
    pub lower_bound: f64,
    /// `[sigma]_p`, when computed.
    pub upper_budget: Option<f64>,
    pub method: Vec<String>,
    pub iterations: usize,
    /// Rayleigh quotients of the power iteration, in order.
    pub rayleigh: Vec<f64>,
    pub primal_lower: f64,
    pub dual_lower: Option<f64>,
    pub best_candidate: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerOptions {
    pub max_iter: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            max_iter: 500,
            rel_tol: 1e-6,
            seed: 0,
        }
    }
}

/// `||P||` on `L^2(sigma)` by power iteration on `A*A`, where the adjoint
/// with respect to `sigma dV` is `A* g = sigma^{-1} P(sigma g)`.
pub fn estimate_norm_p2<T: Real>(km: &KernelMatrix<T>, sigma: &Weight<T>, opts: &PowerOptions) -> Result<NormEstimate> {
    let m = km.len();
    if sigma.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: sigma.len() });
    }
    let s = &sigma.values;
    let sw: Vec<T> = s.iter().zip(km.weights()).map(|(a, b)| *a * *b).collect();
    let norm2 = |f: &[C<T>]| -> T { f.iter().zip(&sw).map(|(v, w)| v.norm_sqr() * *w).sum() };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut f: Vec<C<T>> = (0..m)
        .map(|_| C::new(T::one() + T::lit(0.1 * (rng.gen::<f64>() - 0.5)), T::zero()))
        .collect();
    let mut rayleigh = Vec::new();
    for it in 0..opts.max_iter {
        let u = km.apply(&f);
        let r = (norm2(&u) / norm2(&f)).to_f64_lossy();
        let done = rayleigh.last().is_some_and(|prev: &f64| (r - prev).abs() <= opts.rel_tol * r);
        rayleigh.push(r);
        if done {
            let lower = r.sqrt();
            return Ok(NormEstimate {
                p: 2.0,
                weight: sigma.description.clone(),
                lower_bound: lower,
                upper_budget: None,
                method: vec!["power-iteration".into()],
                iterations: it + 1,
                rayleigh,
                primal_lower: lower,
                dual_lower: None,
                best_candidate: "power-iteration".into(),
            });
        }
        let su: Vec<C<T>> = u.iter().zip(s).map(|(v, w)| v * *w).collect();
        let g: Vec<C<T>> = km.apply(&su).iter().zip(s).map(|(v, w)| v / *w).collect();
        let ng = norm2(&g).sqrt();
        if !(ng > T::zero()) {
            return Err(Error::NoConvergence { iterations: it + 1 });
        }
        f = g.into_iter().map(|v| v / ng).collect();
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
    })
}

/// A named test function on the interior samples.
#[derive(Clone, Debug)]
pub struct Candidate<T> {
    pub label: String,
    pub values: Vec<C<T>>,
}

/// Constants, `w * 1_{B#(zeta, delta)}` over a grid of boundary points and
/// radii, and random smooth bumps near the boundary. For the primal problem
/// `w` is `nu`; for the dual problem it is `sigma`.
pub fn default_candidates<T: Real>(dom: &ModelDomain<T>, cloud: &SampleCloud<T>, w: &[T], seed: u64) -> Vec<Candidate<T>> {
    let m = cloud.n_interior();
    let n = cloud.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one = C::new(T::one(), T::zero());
    let zero = C::new(T::zero(), T::zero());
    let mut out = vec![Candidate {
        label: "constant".into(),
        values: vec![one; m],
    }];
    let dirs: Vec<Vec<C<T>>> = (0..8)
        .map(|k| {
            if n == 1 {
                vec![C::from_polar(T::one(), T::lit(std::f64::consts::TAU * k as f64 / 8.0))]
            } else {
                random_sphere_point(n, &mut rng)
            }
        })
        .collect();
    for (k, zeta) in dirs.iter().enumerate() {
        for delta in [0.05, 0.1, 0.2, 0.3] {
            let mask = analytic_tent_mask(dom, cloud, zeta, T::lit(delta));
            if !mask.iter().any(|&b| b) {
                continue;
            }
            out.push(Candidate {
                label: format!("tent dir={k} delta={delta}"),
                values: mask
                    .iter()
                    .zip(w)
                    .map(|(&b, wi)| if b { C::new(*wi, T::zero()) } else { zero })
                    .collect(),
            });
        }
    }
    for k in 0..8 {
        let t = (rng.gen_range(0.01f64.ln()..0.3f64.ln())).exp();
        let c: Vec<C<T>> = random_sphere_point::<T>(n, &mut rng)
            .into_iter()
            .map(|v| v * T::lit(1.0 - t))
            .collect();
        let r2 = T::lit(t * t);
        out.push(Candidate {
            label: format!("bump {k} t={t:.3}"),
            values: (0..m)
                .map(|i| {
                    let d = cdist(cloud.point(i), &c);
                    C::new((-(d * d) / r2).exp(), T::zero())
                })
                .collect(),
        });
    }
    out
}

fn random_sphere_point<T: Real>(n: usize, rng: &mut ChaCha8Rng) -> Vec<C<T>> {
    loop {
        let v: Vec<C<f64>> = (0..n)
            .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let r = cnorm(&v);
        if r > 0.1 && r <= 1.0 {
            return v.into_iter().map(|x| C::new(T::lit(x.re / r), T::lit(x.im / r))).collect();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralOptions {
    /// Boyd iterations applied to the best candidates.
    pub boyd_steps: usize,
    pub refine_top: usize,
}

impl Default for GeneralOptions {
    fn default() -> Self {
        GeneralOptions {
            boyd_steps: 8,
            refine_top: 3,
        }
    }
}

/// Best `||Pf||_{L^p(w)} / ||f||_{L^p(w)}` over the candidates, each of the
/// best `refine_top` refined by Boyd's fixed-point iteration
/// `f <- w_dual |P(w h)|^{p'-2} P(w h)` with `h = |Pf|^{p-2} Pf`.
/// Returns `(ratio, label, operator applications)`.
fn best_ratio<T: Real>(
    km: &KernelMatrix<T>,
    cloud: &SampleCloud<T>,
    w: &[T],
    w_dual: &[T],
    p: f64,
    candidates: &[Candidate<T>],
    opts: &GeneralOptions,
) -> (f64, String, usize) {
    let pt = T::lit(p);
    let pp = p / (p - 1.0);
    let ratio = |f: &[C<T>], pf: &[C<T>]| -> f64 {
        let nf = weighted_norm(cloud, f, Some(w), pt).to_f64_lossy();
        if nf > 0.0 {
            weighted_norm(cloud, pf, Some(w), pt).to_f64_lossy() / nf
        } else {
            0.0
        }
    };
    let mut scored: Vec<(f64, usize, Vec<C<T>>)> = candidates
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let pf = km.apply(&c.values);
            (ratio(&c.values, &pf), k, pf)
        })
        .collect();
    let mut applications = scored.len();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut best = (scored[0].0, candidates[scored[0].1].label.clone());
    let zero = C::new(T::zero(), T::zero());
    let dual_power = |v: C<T>, e: f64| if v == zero { zero } else { v * v.norm().powf(T::lit(e - 2.0)) };
    for (_, k, pf) in scored.into_iter().take(opts.refine_top) {
        let mut pf = pf;
        for step in 0..opts.boyd_steps {
            let h: Vec<C<T>> = pf.iter().zip(w).map(|(v, wi)| dual_power(*v, p) * *wi).collect();
            let g = km.apply(&h);
            let f: Vec<C<T>> = g.iter().zip(w_dual).map(|(v, wd)| dual_power(*v, pp) * *wd).collect();
            pf = km.apply(&f);
            applications += 2;
            let r = ratio(&f, &pf);
            if r > best.0 {
                best = (r, format!("{} + boyd {}", candidates[k].label, step + 1));
            }
        }
    }
    (best.0, best.1, applications)
}

/// Lower bound for `||P||_{L^p(sigma)}` from the candidate family, and from
/// the dual problem on `L^{p'}(nu)` when dual candidates are given (the two
/// norms coincide because `P` is self-adjoint).
pub fn estimate_norm_general_p<T: Real>(
    km: &KernelMatrix<T>,
    cloud: &SampleCloud<T>,
    pair: &WeightPair<T>,
    candidates: &[Candidate<T>],
    dual_candidates: &[Candidate<T>],
    opts: &GeneralOptions,
) -> Result<NormEstimate> {
    if candidates.is_empty() {
        return Err(Error::invalid("candidates", "need at least one test function"));
    }
    let p = pair.p.to_f64_lossy();
    let (primal, label, mut iters) = best_ratio(km, cloud, &pair.sigma.values, &pair.nu.values, p, candidates, opts);
    let mut method = vec!["candidates".to_string(), "boyd".to_string()];
    let (mut lower, mut best) = (primal, label);
    let mut dual_lower = None;
    if !dual_candidates.is_empty() {
        let pp = p / (p - 1.0);
        let (d, dl, it) = best_ratio(km, cloud, &pair.nu.values, &pair.sigma.values, pp, dual_candidates, opts);
        iters += it;
        method.push("dual".into());
        dual_lower = Some(d);
        if d > lower {
            lower = d;
            best = format!("dual: {dl}");
        }
    }
    Ok(NormEstimate {
        p,
        weight: pair.sigma.description.clone(),
        lower_bound: lower,
        upper_budget: None,
        method,
        iterations: iters,
        rayleigh: Vec::new(),
        primal_lower: primal,
        dual_lower,
        best_candidate: best,
    })
}

/// Default primal and dual candidate sets followed by
/// [`estimate_norm_general_p`].
pub fn norm_lower_bound<T: Real>(
    dom: &ModelDomain<T>,
    cloud: &SampleCloud<T>,
    km: &KernelMatrix<T>,
    pair: &WeightPair<T>,
    seed: u64,
    opts: &GeneralOptions,
) -> Result<NormEstimate> {
    let primal = default_candidates(dom, cloud, &pair.nu.values, seed);
    let dual = default_candidates(dom, cloud, &pair.sigma.values, seed ^ 0x5eed);
    estimate_norm_general_p(km, cloud, pair, &primal, &dual, opts)
}

/// Shared pieces of the sharp example: a disc cloud graded towards `z0 = 1`
/// and the origin, an adjacent family over its boundary, the tents, and the
/// rows `|z| < safe_radius` where `Pf` is evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpConfig {
    pub graded: GradedDiscParams,
    pub n_boundary: usize,
    pub dyadic_s: f64,
    pub dyadic_delta: f64,
    pub k_max: usize,
    pub systems: usize,
    pub seed: u64,
    /// Radius of the test-function tent `B#(z0, delta0)`.
    pub delta0: f64,
    pub safe_radius: f64,
}

impl Default for SharpConfig {
    fn default() -> Self {
        SharpConfig {
            graded: GradedDiscParams::default(),
            n_boundary: 512,
            dyadic_s: 8.0,
            dyadic_delta: 0.8,
            k_max: 6,
            systems: 5,
            seed: 0,
            delta0: 0.3,
            safe_radius: 0.5,
        }
    }
}

pub struct SharpSetup {
    pub config: SharpConfig,
    pub dom: ModelDomain<f64>,
    pub cloud: SampleCloud<f64>,
    pub tents: Vec<TentSystem>,
    pub km: KernelMatrix<f64>,
    pub safe_rows: Vec<usize>,
    pub test_mask: Vec<bool>,
}

impl SharpSetup {
    pub fn new(config: SharpConfig) -> Result<Self> {
        let dom = ModelDomain::<f64>::ball(1);
        if config.graded.focus_angle != 0.0 {
            return Err(Error::invalid("focus_angle", "the sharp example uses z0 = 1"));
        }
        let cloud = SampleCloud::graded_disc(&dom, &config.graded, config.n_boundary, config.seed)?;
        let metric = BoundaryMetric::new(&dom, &cloud);
        let family = build_adjacent_family(
            &metric,
            config.dyadic_s,
            config.dyadic_delta,
            config.k_max,
            config.systems,
            config.seed,
        )?;
        let tents = family.systems.iter().map(|s| build_tents(&dom, s, &metric)).collect();
        let km = KernelMatrix::new(&dom, &cloud, Storage::OnTheFly)?;
        let safe_rows = (0..cloud.n_interior())
            .filter(|&i| cnorm(cloud.point(i)) < config.safe_radius)
            .collect();
        let test_mask = analytic_tent_mask(&dom, &cloud, &[C::new(1.0, 0.0)], config.delta0);
        Ok(SharpSetup {
            config,
            dom,
            cloud,
            tents,
            km,
            safe_rows,
            test_mask,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpPoint {
    pub s: f64,
    pub p: f64,
    pub bracket: f64,
    pub bp: f64,
    /// `||f||_{L^p(sigma)}^p = int_{B#(z0, delta0)} nu dV`.
    pub f_norm_p: f64,
    /// `||Pf||_{L^p(sigma)}` over the safe rows.
    pub pf_norm: f64,
    /// `pf_norm / ||f||`: a lower bound for the norm of `P`.
    pub norm_lb: f64,
    /// `norm_lb / [sigma]_p`.
    pub ratio: f64,
}

/// Sharp pair at `(p, s)` and its test function `f = nu 1_{B#(z0, delta0)}`.
pub fn sharp_point(setup: &SharpSetup, p: f64, s: f64) -> Result<SharpPoint> {
    let cloud = &setup.cloud;
    let pair = sharp_example_weight(&setup.dom, cloud, &SharpParams::new(1, p, s))?;
    let ch = characteristic(&pair, cloud, &setup.tents)?;
    let nu = &pair.nu.values;
    let f_norm_p: f64 = (0..cloud.n_interior())
        .filter(|&i| setup.test_mask[i])
        .map(|i| nu[i] * cloud.interior_weights[i])
        .sum();
    let f: Vec<C<f64>> = (0..cloud.n_interior())
        .map(|i| C::new(if setup.test_mask[i] { nu[i] } else { 0.0 }, 0.0))
        .collect();
    let pf = setup.km.apply_rows(&setup.safe_rows, &f);
    let pf_norm = weighted_norm_on(cloud, &setup.safe_rows, &pf, Some(&pair.sigma.values), p);
    let norm_lb = pf_norm / f_norm_p.powf(1.0 / p);
    Ok(SharpPoint {
        s,
        p,
        bracket: ch.bracket,
        bp: ch.bp,
        f_norm_p,
        pf_norm,
        norm_lb,
        ratio: norm_lb / ch.bracket,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub p: f64,
    pub s_grid: Vec<f64>,
    pub points: Vec<SharpPoint>,
    pub bracket_fit: LogLogFit,
    pub f_norm_fit: LogLogFit,
    /// Slope of `delta0^{2s} / s` over the same grid, the leading behaviour
    /// of `||f||^p`.
    pub f_norm_expected_slope: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `max_ratio / min_ratio`.
    pub ratio_spread: f64,
}

/// Sharp example over `s_grid` (at least four values in `(0, 0.5]`).
pub fn run_sharp_sweep(setup: &SharpSetup, p: f64, s_grid: &[f64]) -> Result<SweepReport> {
    if s_grid.len() < 4 {
        return Err(Error::invalid("s_grid", "slopes need at least four grid points"));
    }
    let points: Vec<SharpPoint> = s_grid
        .par_iter()
        .map(|&s| sharp_point(setup, p, s))
        .collect::<Result<_>>()?;
    let bracket_fit = fit_loglog(s_grid, &points.iter().map(|q| q.bracket).collect::<Vec<_>>())?;
    let f_norm_fit = fit_loglog(s_grid, &points.iter().map(|q| q.f_norm_p).collect::<Vec<_>>())?;
    let d0 = setup.config.delta0;
    let expected: Vec<f64> = s_grid.iter().map(|s| d0.powf(2.0 * s) / s).collect();
    let f_norm_expected_slope = fit_loglog(s_grid, &expected)?.slope;
    let min_ratio = points.iter().map(|q| q.ratio).fold(f64::INFINITY, f64::min);
    let max_ratio = points.iter().map(|q| q.ratio).fold(0.0, f64::max);
    Ok(SweepReport {
        p,
        s_grid: s_grid.to_vec(),
        points,
        bracket_fit,
        f_norm_fit,
        f_norm_expected_slope,
        min_ratio,
        max_ratio,
        ratio_spread: max_ratio / min_ratio,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCheck {
    pub label: String,
    pub p: f64,
    pub bp: f64,
    /// `B_p^{1/(2p)}`.
    pub bp_root: f64,
    pub lower: f64,
    /// `bp_root / lower`: the constant needed for this weight.
    pub ratio: f64,
}

/// Both sides of `B_p(sigma)^{1/(2p)} <= C ||P||`, with `||P||` replaced by
/// a lower bound.
pub fn check_lower_bound<T: Real>(dom: &ModelDomain<T>, label: &str, p: f64, bp: f64, lower: f64) -> Result<LowerBoundCheck> {
    if !matches!(dom.kind, DomainKind::Ball { .. }) {
        return Err(Error::WrongDomainKind {
            operation: "check_lower_bound",
            kind: dom.kind_name(),
        });
    }
    let bp_root = bp.powf(1.0 / (2.0 * p));
    Ok(LowerBoundCheck {
        label: label.to_string(),
        p,
        bp,
        bp_root,
        lower,
        ratio: bp_root / lower,
    })
}

/// The weight family used for the upper and lower bound checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub interior: usize,
    pub boundary: usize,
    pub dyadic_s: f64,
    pub dyadic_delta: f64,
    pub k_max: usize,
    pub systems: usize,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub sharp_s: Vec<f64>,
    pub ps: Vec<f64>,
    pub sharp: SharpConfig,
    pub power: PowerOptions,
    pub general: GeneralOptions,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig {
            interior: 3000,
            boundary: 1000,
            dyadic_s: 8.0,
            dyadic_delta: 0.8,
            k_max: 4,
            systems: 5,
            seed: 0,
            alphas: vec![-0.5, 0.5],
            sharp_s: vec![0.4, 0.2, 0.1],
            ps: vec![4.0 / 3.0, 2.0],
            sharp: SharpConfig::default(),
            power: PowerOptions::default(),
            general: GeneralOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyEntry {
    pub label: String,
    pub p: f64,
    pub bracket: f64,
    pub bp: f64,
    pub lower: f64,
    /// `lower / [sigma]_p`.
    pub upper_ratio: f64,
    /// `B_p^{1/(2p)} / lower`.
    pub lower_ratio: f64,
    pub method: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub entries: Vec<FamilyEntry>,
    /// Smallest `C` with `lower <= C [sigma]_p` across the family.
    pub upper_constant: f64,
    /// Smallest `C` with `B_p^{1/(2p)} <= C lower` across the family.
    pub lower_constant: f64,
}

/// Constant and power weights on a disc ring cloud, the sharp weights on the
/// graded cloud, at every `p`.
pub fn run_weight_family(config: &FamilyConfig) -> Result<FamilyReport> {
    let dom = ModelDomain::<f64>::ball(1);
    let cloud = SampleCloud::sample(&dom, config.interior, config.boundary, config.seed)?;
    let metric = BoundaryMetric::new(&dom, &cloud);
    let family = build_adjacent_family(
        &metric,
        config.dyadic_s,
        config.dyadic_delta,
        config.k_max,
        config.systems,
        config.seed,
    )?;
    let tents: Vec<TentSystem> = family.systems.iter().map(|s| build_tents(&dom, s, &metric)).collect();
    let km = KernelMatrix::new(&dom, &cloud, Storage::Dense)?;
    let mut entries = Vec::new();
    let mut alphas = vec![0.0];
    alphas.extend(&config.alphas);
    for &p in &config.ps {
        for &alpha in &alphas {
            let pair = power_pair(&dom, &cloud, alpha, p)?;
            let ch = characteristic(&pair, &cloud, &tents)?;
            let mut est = norm_lower_bound(&dom, &cloud, &km, &pair, config.seed, &config.general)?;
            if (p - 2.0).abs() < 1e-12 {
                let pw = estimate_norm_p2(&km, &pair.sigma, &config.power)?;
                if pw.lower_bound > est.lower_bound {
                    est = pw;
                }
            }
            let label = if alpha == 0.0 { "one".to_string() } else { format!("power alpha={alpha}") };
            entries.push(entry(label, p, ch.bracket, ch.bp, est.lower_bound, est.best_candidate));
        }
    }
    if !config.sharp_s.is_empty() {
        let setup = SharpSetup::new(config.sharp.clone())?;
        for &p in &config.ps {
            for &s in &config.sharp_s {
                let q = sharp_point(&setup, p, s)?;
                entries.push(entry(format!("sharp s={s}"), p, q.bracket, q.bp, q.norm_lb, "sharp test function".into()));
            }
        }
    }
    let upper_constant = entries.iter().map(|e| e.upper_ratio).fold(0.0, f64::max);
    let lower_constant = entries.iter().map(|e| e.lower_ratio).fold(0.0, f64::max);
    Ok(FamilyReport {
        entries,
        upper_constant,
        lower_constant,
    })
}

fn entry(label: String, p: f64, bracket: f64, bp: f64, lower: f64, method: String) -> FamilyEntry {
    FamilyEntry {
        label,
        p,
        bracket,
        bp,
        lower,
        upper_ratio: lower / bracket,
        lower_ratio: bp.powf(1.0 / (2.0 * p)) / lower,
        method,
    }
}

/// `sup_lambda lambda V({|g| > lambda})` over the cloud.
pub fn weak_quasi_norm<T: Real>(cloud: &SampleCloud<T>, g: &[T]) -> f64 {
    let mut idx: Vec<usize> = (0..g.len()).collect();
    idx.sort_by(|&a, &b| g[b].abs().total_cmp_f(&g[a].abs()).then(a.cmp(&b)));
    let mut vol = 0.0;
    let mut best = 0.0f64;
    for &i in &idx {
        vol += cloud.interior_weights[i].to_f64_lossy();
        best = best.max(g[i].abs().to_f64_lossy() * vol);
    }
    best
}

trait TotalCmp {
    fn total_cmp_f(&self, other: &Self) -> std::cmp::Ordering;
}

impl<T: Real> TotalCmp for T {
    fn total_cmp_f(&self, other: &Self) -> std::cmp::Ordering {
        self.to_f64_lossy().total_cmp(&other.to_f64_lossy())
    }
}

/// `L^1`-normalized indicator of the Euclidean ball of radius `depth / 2`
/// around `(1 - depth) z0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub depth: f64,
    pub center: Vec<[f64; 2]>,
    pub radius: f64,
}

pub fn boundary_bumps(z0: &[[f64; 2]], depths: &[f64]) -> Vec<Bump> {
    depths
        .iter()
        .map(|&d| Bump {
            depth: d,
            center: z0.iter().map(|c| [c[0] * (1.0 - d), c[1] * (1.0 - d)]).collect(),
            radius: 0.5 * d,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakTypeCase {
    pub depth: f64,
    pub quasi_norm: f64,
    pub pf_l1: f64,
    pub f_l1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakTypeReport {
    pub cases: Vec<WeakTypeCase>,
    /// Largest `sup_lambda lambda V(|Pf| > lambda) / ||f||_1`.
    pub bound: f64,
    /// `||Pf||_1 / ||f||_1` increases strictly as the depth decreases.
    pub l1_monotone: bool,
}

/// Weak-type quotient for each bump. With `km` absent `Pf` is taken as
/// `K(., c)`, exact for an `L^1`-normalized ball indicator centred at `c` by
/// the mean value property; otherwise `Pf` is computed by quadrature.
pub fn check_weak_type<T: Real>(
    dom: &ModelDomain<T>,
    cloud: &SampleCloud<T>,
    bumps: &[Bump],
    km: Option<&KernelMatrix<T>>,
) -> Result<WeakTypeReport> {
    let m = cloud.n_interior();
    let mut cases = Vec::with_capacity(bumps.len());
    for b in bumps {
        let c: Vec<C<T>> = b.center.iter().map(|v| C::new(T::lit(v[0]), T::lit(v[1]))).collect();
        let pf: Vec<T> = match km {
            None => kernel_column(dom, cloud, &c)?.iter().map(|k| k.norm()).collect(),
            Some(km) => {
                let inside: Vec<bool> = (0..m).map(|i| cdist(cloud.point(i), &c) < T::lit(b.radius)).collect();
                let mass: T = (0..m).filter(|&i| inside[i]).map(|i| cloud.interior_weights[i]).sum();
                if !(mass > T::zero()) {
                    return Err(Error::EmptyRegion);
                }
                let f: Vec<C<T>> = inside
                    .iter()
                    .map(|&b| C::new(if b { T::one() / mass } else { T::zero() }, T::zero()))
                    .collect();
                km.apply(&f).iter().map(|v| v.norm()).collect()
            }
        };
        let pf_l1: f64 = pf.iter().zip(&cloud.interior_weights).map(|(v, w)| (*v * *w).to_f64_lossy()).sum();
        cases.push(WeakTypeCase {
            depth: b.depth,
            quasi_norm: weak_quasi_norm(cloud, &pf),
            pf_l1,
            f_l1: 1.0,
        });
    }
    let bound = cases.iter().map(|c| c.quasi_norm / c.f_l1).fold(0.0, f64::max);
    let mut by_depth: Vec<&WeakTypeCase> = cases.iter().collect();
    by_depth.sort_by(|a, b| b.depth.total_cmp(&a.depth));
    let l1_monotone = by_depth.windows(2).all(|w| w[1].pf_l1 / w[1].f_l1 > w[0].pf_l1 / w[0].f_l1);
    Ok(WeakTypeReport {
        cases,
        bound,
        l1_monotone,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalLp {
    pub p: f64,
    /// Largest `||Mf|| / ||f||` in `L^p(sigma)` over the test functions.
    pub ratio: f64,
    /// `p / (p - 1)`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalReport {
    pub functions: usize,
    pub lambdas: usize,
    /// Largest `lambda sigma({Mf > lambda}) / ||f||_{L^1(sigma)}`.
    pub weak_constant: f64,
    pub lp: Vec<MaximalLp>,
}

/// Weak (1,1) and `L^p` behaviour of the maximal function of one tent
/// system on random nonnegative test functions: tent indicators, heavy-tailed
/// noise and boundary bumps.
pub fn check_maximal<T: Real>(
    system: &TentSystem,
    cloud: &SampleCloud<T>,
    sigma: &[T],
    n_functions: usize,
    n_lambda: usize,
    ps: &[f64],
    seed: u64,
) -> MaximalReport {
    let m = cloud.n_interior();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nonempty: Vec<usize> = (0..system.tents.len()).filter(|&t| !system.tents[t].members.is_empty()).collect();
    let mut funcs: Vec<Vec<T>> = Vec::with_capacity(n_functions);
    for k in 0..n_functions {
        let f = match k % 3 {
            0 if !nonempty.is_empty() => {
                let t = &system.tents[nonempty[rng.gen_range(0..nonempty.len())]];
                let mut f = vec![T::zero(); m];
                for &i in &t.members {
                    f[i as usize] = T::one();
                }
                f
            }
            1 => (0..m).map(|_| T::lit(rng.gen::<f64>().powi(6))).collect(),
            _ => {
                let c = random_sphere_point::<T>(cloud.dim, &mut rng);
                let t = rng.gen_range(0.005..0.2);
                let centre: Vec<C<T>> = c.into_iter().map(|v| v * T::lit(1.0 - t)).collect();
                (0..m)
                    .map(|i| {
                        let d = cdist(cloud.point(i), &centre).to_f64_lossy();
                        T::lit((-(d * d) / (t * t)).exp())
                    })
                    .collect()
            }
        };
        funcs.push(f);
    }
    let sw: Vec<f64> = (0..m)
        .map(|i| (sigma[i] * cloud.interior_weights[i]).to_f64_lossy())
        .collect();
    let norm = |g: &[T], p: f64| -> f64 {
        g.iter().zip(&sw).map(|(v, w)| v.to_f64_lossy().abs().powf(p) * w).sum::<f64>().powf(1.0 / p)
    };
    let maxes: Vec<Vec<T>> = funcs.iter().map(|f| maximal(system, cloud, sigma, f)).collect();
    let mut weak = 0.0f64;
    for (f, mf) in funcs.iter().zip(&maxes) {
        let l1 = norm(f, 1.0);
        let top = mf.iter().map(|v| v.to_f64_lossy()).fold(0.0, f64::max);
        if !(l1 > 0.0 && top > 0.0) {
            continue;
        }
        for j in 0..n_lambda {
            let lambda = top * (1e-3f64).powf(1.0 - j as f64 / n_lambda.max(1) as f64);
            let level: f64 = mf.iter().zip(&sw).filter(|(v, _)| v.to_f64_lossy() > lambda).map(|(_, w)| w).sum();
            weak = weak.max(lambda * level / l1);
        }
    }
    let lp = ps
        .iter()
        .map(|&p| {
            let ratio = funcs
                .iter()
                .zip(&maxes)
                .map(|(f, mf)| {
                    let nf = norm(f, p);
                    if nf > 0.0 {
                        norm(mf, p) / nf
                    } else {
                        0.0
                    }
                })
                .fold(0.0, f64::max);
            MaximalLp {
                p,
                ratio,
                bound: p / (p - 1.0),
            }
        })
        .collect();
    MaximalReport {
        functions: funcs.len(),
        lambdas: n_lambda,
        weak_constant: weak,
        lp,
    }
}
