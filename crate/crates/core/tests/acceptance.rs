//! End-to-end checks, one line per criterion. Lines go straight to stderr so
//! they show up in ordinary `cargo test` output.

use std::io::Write;
use std::time::Instant;

use bergman_dyadic::dyadic::{
    build_adjacent_family, build_system, default_factor_limit, default_radius_range, verify_adjacency, BoundaryMetric,
};
use bergman_dyadic::experiments::{
    boundary_bumps, check_maximal, check_weak_type, estimate_norm_p2, run_sharp_sweep, run_weight_family, FamilyConfig,
    PowerOptions, SharpConfig, SharpSetup,
};
use bergman_dyadic::geometry::{tent_volume_mc, GradedDiscParams, ModelDomain, SampleCloud};
use bergman_dyadic::operators::{check_domination, DominationConfig, KernelMatrix, PairPool, Storage};
use bergman_dyadic::scalar::C;
use bergman_dyadic::tents::{build_tents, TentSystem};
use bergman_dyadic::weights::{power_pair, Weight};

// tolerances
const SANDWICH_RATIO: f64 = 100.0;
const DYADIC_SECONDS: f64 = 60.0;
const ADJACENCY_SUCCESS: f64 = 0.99;
const P_ONE_ERROR: f64 = 0.01;
const NORM_ONE_TOL: f64 = 0.05;
const DOMINATION_DRIFT: f64 = 0.25;
const SLOPE_TOL: f64 = 0.2;
const RATIO_SPREAD: f64 = 2.0;
const SWEEP_SECONDS: f64 = 600.0;
const LOWER_CONSTANT: f64 = 10.0;
const MAXIMAL_WEAK: f64 = 2.0 + 0.05;
const WEAK_SPREAD: f64 = 2.0;
const TAU_REL: f64 = 0.01;
const VOLUME_SLOPE_TOL: f64 = 0.2;

fn report(k: usize, pass: bool, detail: String) -> bool {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {k:>2}: {tag}  {detail}");
    pass
}

fn tents_of(dom: &ModelDomain<f64>, cloud: &SampleCloud<f64>, k_max: usize, systems: usize, seed: u64) -> Vec<TentSystem> {
    let metric = BoundaryMetric::new(dom, cloud);
    let fam = build_adjacent_family(&metric, 8.0, 0.8, k_max, systems, seed).unwrap();
    fam.systems.iter().map(|s| build_tents(dom, s, &metric)).collect()
}

fn dyadic_suite() -> bool {
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [1, 2] {
        let dom = ModelDomain::<f64>::ball(n);
        let cloud = SampleCloud::sample(&dom, 2000, 2000, 7).unwrap();
        let metric = BoundaryMetric::new(&dom, &cloud);
        let sys = build_system(&metric, 8.0, 0.8, 4, 7).unwrap();
        let ts = build_tents(&dom, &sys, &metric);
        let sw = sys.sandwich(&metric);
        let ratio = sw.upper / sw.lower;
        let exact = sys.check_partition(metric.len()) && sys.check_nesting() && ts.check_nesting(&sys) && ts.check_kube_partition();
        ok &= exact && ratio <= SANDWICH_RATIO;
        parts.push(format!("n={n} exact={exact} C/c={ratio:.2}"));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < DYADIC_SECONDS;
    report(1, ok, format!("{} time={secs:.1}s", parts.join(" ")))
}

fn adjacency() -> bool {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [1, 2] {
        let dom = ModelDomain::<f64>::ball(n);
        let cloud = SampleCloud::sample(&dom, 10, 2000, 3).unwrap();
        let metric = BoundaryMetric::new(&dom, &cloud);
        let limit = default_factor_limit(&dom, 8.0);
        let range = default_radius_range(&metric);
        let five = build_adjacent_family(&metric, 8.0, 0.8, 4, 5, 3).unwrap();
        let one = build_adjacent_family(&metric, 8.0, 0.8, 4, 1, 3).unwrap();
        let r5 = verify_adjacency(&five, &metric, 1000, range, limit, 11);
        let r1 = verify_adjacency(&one, &metric, 1000, range, limit, 11);
        ok &= r5.success_fraction >= ADJACENCY_SUCCESS;
        // at s^4 on the 3-sphere a single system already succeeds everywhere
        if n == 1 {
            ok &= r5.success_fraction > r1.success_fraction;
        }
        parts.push(format!(
            "n={n} F<={limit}: N=5 {:.3} N=1 {:.3}",
            r5.success_fraction, r1.success_fraction
        ));
    }
    report(2, ok, parts.join(" "))
}

fn projection_sanity() -> bool {
    let dom = ModelDomain::<f64>::ball(1);
    let cloud = SampleCloud::sample(&dom, 3000, 400, 5).unwrap();
    let km = KernelMatrix::new(&dom, &cloud, Storage::Dense).unwrap();
    let one = vec![C::new(1.0, 0.0); cloud.n_interior()];
    let p1 = km.apply(&one);
    let num: f64 = p1.iter().zip(&cloud.interior_weights).map(|(v, w)| (v - 1.0).norm_sqr() * w).sum();
    let err = (num / cloud.interior_volume()).sqrt();
    let est = estimate_norm_p2(&km, &Weight::constant(cloud.n_interior(), 1.0), &PowerOptions::default()).unwrap();
    let ok = err <= P_ONE_ERROR && (est.lower_bound - 1.0).abs() <= NORM_ONE_TOL;
    report(3, ok, format!("|P1-1|/|1|={err:.4} norm={:.4} iters={}", est.lower_bound, est.iterations))
}

fn domination_constant(interior: usize, k_max: usize) -> f64 {
    let dom = ModelDomain::<f64>::ball(2);
    let cloud = SampleCloud::sample(&dom, interior, 2000, 1).unwrap();
    let metric = BoundaryMetric::new(&dom, &cloud);
    let fam = build_adjacent_family(&metric, 8.0, 0.8, k_max, 5, 1).unwrap();
    let tents: Vec<TentSystem> = fam.systems.iter().map(|s| build_tents(&dom, s, &metric)).collect();
    let config = DominationConfig::default();
    let pool = PairPool::clustered(&dom, &fam, &metric, &config).unwrap();
    let rep = check_domination(&dom, &cloud, &tents, &pool, config.pairs, config.same_cluster_fraction, config.seed).unwrap();
    rep.constant
}

fn domination() -> bool {
    let base = domination_constant(3000, 4);
    let doubled = domination_constant(6000, 4);
    let k3 = domination_constant(3000, 3);
    let k5 = domination_constant(3000, 5);
    let drift = |a: f64, b: f64| (a - b).abs() / a.min(b);
    let ok = [base, doubled, k3, k5].iter().all(|c| c.is_finite())
        && drift(base, doubled) <= DOMINATION_DRIFT
        && drift(k3, k5) <= DOMINATION_DRIFT;
    report(4, ok, format!("C={base:.1} doubled M={doubled:.1} k_max=3: {k3:.1} k_max=5: {k5:.1}"))
}

fn family() -> (bool, bool) {
    let rep = run_weight_family(&FamilyConfig::default()).unwrap();
    let worst = rep
        .entries
        .iter()
        .max_by(|a, b| a.upper_ratio.total_cmp(&b.upper_ratio))
        .unwrap();
    let ok5 = rep.entries.iter().all(|e| e.lower.is_finite() && e.bracket.is_finite()) && rep.upper_constant.is_finite();
    let a = report(
        5,
        ok5,
        format!(
            "lower <= C [sigma]_p with C={:.3} over {} weights (tightest: {} p={:.3})",
            rep.upper_constant,
            rep.entries.len(),
            worst.label,
            worst.p
        ),
    );
    let b = report(
        7,
        rep.lower_constant <= LOWER_CONSTANT,
        format!("B_p^(1/2p) <= C lower with C={:.3}", rep.lower_constant),
    );
    (a, b)
}

fn sharpness() -> bool {
    let t = Instant::now();
    let setup = SharpSetup::new(SharpConfig::default()).unwrap();
    let rep = run_sharp_sweep(&setup, 2.0, &[0.4, 0.2, 0.1, 0.05]).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let ok = (rep.bracket_fit.slope + 1.0).abs() <= SLOPE_TOL
        && rep.min_ratio > 0.0
        && rep.ratio_spread <= RATIO_SPREAD
        && secs < SWEEP_SECONDS;
    report(
        6,
        ok,
        format!(
            "slope={:.3} c={:.4} spread={:.2} |f|^p slope={:.3} (leading term {:.3}) time={secs:.1}s",
            rep.bracket_fit.slope, rep.min_ratio, rep.ratio_spread, rep.f_norm_fit.slope, rep.f_norm_expected_slope
        ),
    )
}

fn maximal_bounds() -> bool {
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, alpha) in [(1, 0.5), (2, 0.0)] {
        let dom = ModelDomain::<f64>::ball(n);
        let cloud = SampleCloud::sample(&dom, 3000, 1000, 9).unwrap();
        let ts = tents_of(&dom, &cloud, 4, 1, 9);
        let pair = power_pair(&dom, &cloud, alpha, 2.0).unwrap();
        let rep = check_maximal(&ts[0], &cloud, &pair.sigma.values, 20, 20, &[1.25, 2.0, 4.0], 9);
        let c = rep.lp.iter().map(|l| l.ratio / l.bound).fold(0.0, f64::max);
        ok &= rep.weak_constant <= MAXIMAL_WEAK && c <= 1.0;
        parts.push(format!("n={n}: weak={:.3} Lp C={c:.3}", rep.weak_constant));
    }
    report(8, ok, parts.join(" "))
}

fn weak_type() -> bool {
    let dom = ModelDomain::<f64>::ball(1);
    let cloud = SampleCloud::graded_disc(&dom, &GradedDiscParams::default(), 256, 2).unwrap();
    let bumps = boundary_bumps(&[[1.0, 0.0]], &[0.1, 0.01, 0.001]);
    let rep = check_weak_type(&dom, &cloud, &bumps, None).unwrap();
    let q: Vec<f64> = rep.cases.iter().map(|c| c.quasi_norm).collect();
    let l1: Vec<f64> = rep.cases.iter().map(|c| c.pf_l1).collect();
    let spread = q.iter().cloned().fold(0.0, f64::max) / q.iter().cloned().fold(f64::INFINITY, f64::min);
    let ok = rep.l1_monotone && spread <= WEAK_SPREAD;
    report(
        9,
        ok,
        format!("quasi-norms={q:.3?} bound={:.3} |Pf|_1={l1:.3?}", rep.bound),
    )
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn egg_geometry() -> bool {
    let dom = ModelDomain::<f64>::egg(2);
    let east = [C::new(1.0, 0.0), C::new(0.0, 0.0)];
    let north = [C::new(0.0, 0.0), C::new(1.0, 0.0)];
    let mut worst = 0.0f64;
    for d in [1e-2, 1e-4, 1e-6] {
        let a = dom.tau_scaling(&east, d, 2).unwrap();
        let b = dom.tau_scaling(&north, d, 2).unwrap();
        worst = worst.max((a / d.powf(0.25) - 1.0).abs()).max((b / d.sqrt() - 1.0).abs());
    }
    let deltas = [0.1, 0.05, 0.025, 0.0125];
    let vol = |q: &[C<f64>], seed: u64| -> Vec<f64> {
        deltas
            .iter()
            .enumerate()
            .map(|(k, &d)| tent_volume_mc(&dom, q, d, 40_000, seed + k as u64).unwrap().0)
            .collect()
    };
    let s_east = slope(&deltas, &vol(&east, 1));
    let s_north = slope(&deltas, &vol(&north, 10));
    // volume ~ delta^2 tau_2^2: delta^{2.5} at (1,0), delta^3 at (0,1)
    let ok = worst <= TAU_REL && (s_east - 2.5).abs() <= VOLUME_SLOPE_TOL && (s_north - 3.0).abs() <= VOLUME_SLOPE_TOL;
    report(
        10,
        ok,
        format!("tau_2 max rel err={worst:.2e} volume slopes {s_east:.3} (2.5) {s_north:.3} (3.0)"),
    )
}

#[test]
fn acceptance() {
    let mut all = Vec::new();
    all.push(dyadic_suite());
    all.push(adjacency());
    all.push(projection_sanity());
    all.push(domination());
    let (c5, c7) = family();
    all.push(c5);
    all.push(sharpness());
    all.push(c7);
    all.push(maximal_bounds());
    all.push(weak_type());
    all.push(egg_geometry());
    let passed = all.iter().filter(|b| **b).count();
    let _ = writeln!(std::io::stderr(), "acceptance: {passed}/{} criteria pass", all.len());
    assert_eq!(passed, all.len());
}
