//! One function per subcommand. Each builds its pipeline from the resolved
//! configuration and returns a [`Report`]; nothing here depends on time or
//! thread count.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use bergman_dyadic::dyadic::{
    build_adjacent_family, default_factor_limit, default_radius_range, verify_adjacency, AdjacentFamily, BoundaryMetric,
};
use bergman_dyadic::experiments::{
    boundary_bumps, check_weak_type, estimate_norm_p2, norm_lower_bound, run_sharp_sweep, GeneralOptions, PowerOptions,
    SharpConfig, SharpSetup,
};
use bergman_dyadic::geometry::{GradedDiscParams, ModelDomain, SampleCloud};
use bergman_dyadic::operators::{check_domination, DominationConfig, KernelMatrix, PairPool, Storage};
use bergman_dyadic::tents::{build_tents, TentSystem};
use bergman_dyadic::weights::{self, power_pair, sharp_example_weight, SharpParams, Weight, WeightPair};

use crate::config::{DomainSpec, RunConfig, WeightSpec};
use crate::{CliError, VERSION};

/// Largest interior size for which the kernel matrix is stored.
const DENSE_LIMIT: usize = 5000;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub struct Report {
    pub result: Value,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Report {
    /// Writes `<out>/<command>.json` and the tables, then turns failed checks
    /// into an error.
    pub fn write(self, command: &str, config: &RunConfig) -> Result<(), CliError> {
        let dir = &config.out;
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let passed = self.checks.iter().all(|c| c.passed);
        let doc = json!({
            "version": VERSION,
            "command": command,
            "config": config,
            "result": self.result,
            "checks": self.checks,
            "passed": passed,
        });
        let path = dir.join(format!("{command}.json"));
        let text = serde_json::to_string_pretty(&doc).map_err(|e| io(&path, e))?;
        std::fs::write(&path, text + "\n").map_err(|e| io(&path, e))?;
        for t in &self.tables {
            let path = dir.join(&t.file);
            let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, e))?;
            w.write_record(&t.header).map_err(|e| io(&path, e))?;
            for r in &t.rows {
                w.write_record(r).map_err(|e| io(&path, e))?;
            }
            w.flush().map_err(|e| io(&path, e))?;
        }
        let failed: Vec<String> = self.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(CliError::Failed(failed))
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

struct Setup {
    dom: ModelDomain<f64>,
    cloud: SampleCloud<f64>,
}

impl Setup {
    fn new(config: &RunConfig) -> Result<Self, CliError> {
        let dom = config.domain.build();
        let cloud = SampleCloud::sample(&dom, config.interior, config.boundary, config.seed)?;
        Ok(Setup { dom, cloud })
    }

    fn family(&self, config: &RunConfig, systems: usize) -> Result<(AdjacentFamily, Vec<TentSystem>), CliError> {
        let metric = BoundaryMetric::new(&self.dom, &self.cloud);
        let fam = build_adjacent_family(&metric, config.s, config.delta, config.kmax, systems, config.seed)?;
        let tents = fam.systems.iter().map(|s| build_tents(&self.dom, s, &metric)).collect();
        Ok((fam, tents))
    }
}

fn require_ball(config: &RunConfig, command: &str) -> Result<usize, CliError> {
    match config.domain {
        DomainSpec::Ball { n } => Ok(n),
        DomainSpec::Egg { .. } => Err(CliError::Config {
            field: "domain",
            reason: format!("{command} needs the ball (no kernel on the egg)"),
        }),
    }
}

fn weight_pair(setup: &Setup, config: &RunConfig) -> Result<WeightPair<f64>, CliError> {
    let m = setup.cloud.n_interior();
    Ok(match config.weight {
        WeightSpec::One => WeightPair::new(Weight::constant(m, 1.0), config.p)?,
        WeightSpec::Power { alpha } => power_pair(&setup.dom, &setup.cloud, alpha, config.p)?,
        WeightSpec::Sharp { s } => {
            let n = require_ball(config, "the sharp weight")?;
            sharp_example_weight(&setup.dom, &setup.cloud, &SharpParams::new(n, config.p, s))?
        }
    })
}

pub fn dyadic(config: &RunConfig) -> Result<Report, CliError> {
    let setup = Setup::new(config)?;
    let (fam, tents) = setup.family(config, config.systems)?;
    let metric = BoundaryMetric::new(&setup.dom, &setup.cloud);
    let n = metric.len();
    let mut systems = Vec::new();
    let mut rows = Vec::new();
    let (mut partition, mut nesting, mut tent_nesting, mut kubes) = (true, true, true, true);
    for (l, (sys, ts)) in fam.systems.iter().zip(&tents).enumerate() {
        let p = sys.check_partition(n);
        let q = sys.check_nesting();
        let r = ts.check_nesting(sys);
        let k = ts.check_kube_partition();
        partition &= p;
        nesting &= q;
        tent_nesting &= r;
        kubes &= k;
        let sw = sys.sandwich(&metric);
        systems.push(json!({
            "system": l,
            "seed": sys.seed,
            "partition": p,
            "nesting": q,
            "tent_nesting": r,
            "kube_partition": k,
            "sandwich": to_value(&sw),
            "sandwich_ratio": sw.upper / sw.lower,
            "kube_volume_ratio": ts.kube_volume_ratio(),
        }));
        for (k, cells) in sys.levels.iter().enumerate() {
            let meas = cells.iter().map(|c| c.surface_measure);
            let lo = meas.clone().fold(f64::INFINITY, f64::min);
            let hi = meas.fold(0.0, f64::max);
            rows.push(vec![l.to_string(), k.to_string(), cells.len().to_string(), num(sys.scale(k)), num(lo), num(hi)]);
        }
    }
    let limit = default_factor_limit(&setup.dom, config.s);
    let range = default_radius_range(&metric);
    let adj = verify_adjacency(&fam, &metric, config.trials, range, limit, config.seed);
    let (single, _) = setup.family(config, 1)?;
    let adj1 = verify_adjacency(&single, &metric, config.trials, range, limit, config.seed);
    let result = json!({
        "boundary_samples": n,
        "systems": systems,
        "adjacency": to_value(&adj),
        "adjacency_single_system": to_value(&adj1),
    });
    let path = config.out.join("dyadic_family.json");
    std::fs::create_dir_all(&config.out).map_err(|e| io(&config.out, e))?;
    let text = serde_json::to_string(&fam).map_err(|e| io(&path, e))?;
    std::fs::write(&path, text).map_err(|e| io(&path, e))?;
    Ok(Report {
        result,
        checks: vec![
            check("partition", partition, "cells at every level partition the boundary samples".into()),
            check("nesting", nesting, "cells at different levels are nested or disjoint".into()),
            check("tent nesting", tent_nesting, "tents follow the cell tree".into()),
            check("kube partition", kubes, "kubes are disjoint and cover the tented samples".into()),
        ],
        tables: vec![Table {
            file: "dyadic_levels.csv".into(),
            header: vec!["system", "level", "cells", "scale", "min_measure", "max_measure"],
            rows,
        }],
    })
}

pub fn characteristic(config: &RunConfig) -> Result<Report, CliError> {
    let setup = Setup::new(config)?;
    let (_, tents) = setup.family(config, config.systems)?;
    let pair = weight_pair(&setup, config)?;
    let rep = weights::characteristic(&pair, &setup.cloud, &tents)?;
    let p = config.p;
    let mut checks = vec![check("bp at least one", rep.bp >= 1.0 - 1e-12, format!("B_p = {:?}", rep.bp))];
    if config.weight == WeightSpec::One {
        let want = 1.0 + p * p / (p - 1.0);
        checks.push(check(
            "constant weight",
            (rep.bracket - want).abs() <= 1e-9,
            format!("[1]_p = {:?}, expected 1 + pp' = {want:?}", rep.bracket),
        ));
    }
    let rows = (0..pair.sigma.len())
        .map(|i| vec![i.to_string(), num(pair.sigma.values[i]), num(pair.nu.values[i])])
        .collect();
    Ok(Report {
        result: json!({ "weight": pair.sigma.description, "characteristic": to_value(&rep) }),
        checks,
        tables: vec![Table {
            file: "characteristic_weight.csv".into(),
            header: vec!["index", "sigma", "nu"],
            rows,
        }],
    })
}

pub fn norm(config: &RunConfig) -> Result<Report, CliError> {
    require_ball(config, "norm")?;
    let setup = Setup::new(config)?;
    let (_, tents) = setup.family(config, config.systems)?;
    let pair = weight_pair(&setup, config)?;
    let ch = weights::characteristic(&pair, &setup.cloud, &tents)?;
    let storage = if setup.cloud.n_interior() <= DENSE_LIMIT { Storage::Dense } else { Storage::OnTheFly };
    let km = KernelMatrix::new(&setup.dom, &setup.cloud, storage)?;
    let general = norm_lower_bound(&setup.dom, &setup.cloud, &km, &pair, config.seed, &GeneralOptions::default())?;
    let mut rows = vec![vec!["candidates".to_string(), num(general.lower_bound)]];
    let mut best = general.clone();
    if (config.p - 2.0).abs() < 1e-12 {
        let opts = PowerOptions {
            seed: config.seed,
            ..PowerOptions::default()
        };
        let power = estimate_norm_p2(&km, &pair.sigma, &opts)?;
        rows.push(vec!["power-iteration".to_string(), num(power.lower_bound)]);
        if power.lower_bound > best.lower_bound {
            best = power;
        }
    }
    best.upper_budget = Some(ch.bracket);
    let lower = best.lower_bound;
    Ok(Report {
        result: json!({
            "weight": pair.sigma.description,
            "estimate": to_value(&best),
            "bracket": ch.bracket,
            "bp": ch.bp,
            "lower_over_bracket": lower / ch.bracket,
            "bp_root_over_lower": ch.bp.powf(1.0 / (2.0 * config.p)) / lower,
        }),
        checks: vec![check(
            "constants are fixed",
            lower >= 0.95,
            format!("lower bound {lower:?} (P fixes constants, so the norm is at least 1)"),
        )],
        tables: vec![Table {
            file: "norm_candidates.csv".into(),
            header: vec!["method", "lower_bound"],
            rows,
        }],
    })
}

pub fn sweep(config: &RunConfig) -> Result<Report, CliError> {
    if config.domain != (DomainSpec::Ball { n: 1 }) {
        return Err(CliError::Config {
            field: "domain",
            reason: "the sweep runs on the disc (ball:n=1)".into(),
        });
    }
    let setup = SharpSetup::new(SharpConfig {
        dyadic_s: config.s,
        dyadic_delta: config.delta,
        k_max: config.kmax,
        systems: config.systems,
        seed: config.seed,
        ..SharpConfig::default()
    })?;
    let rep = run_sharp_sweep(&setup, config.p, &config.s_grid)?;
    let rows = rep
        .points
        .iter()
        .map(|q| {
            [q.s, q.bracket, q.bp, q.f_norm_p, q.pf_norm, q.norm_lb, q.ratio]
                .iter()
                .map(|v| num(*v))
                .collect()
        })
        .collect();
    let slope = rep.bracket_fit.slope;
    Ok(Report {
        result: to_value(&rep),
        checks: vec![
            check("bracket slope", (slope + 1.0).abs() <= 0.2, format!("slope {slope:?}, expected -1 +- 0.2")),
            check(
                "ratio bounded below",
                rep.min_ratio > 0.0 && rep.ratio_spread <= 2.0,
                format!("min ratio {:?}, spread {:?} (at most 2)", rep.min_ratio, rep.ratio_spread),
            ),
        ],
        tables: vec![Table {
            file: "sweep.csv".into(),
            header: vec!["s", "bracket", "bp", "f_norm_p", "pf_norm", "norm_lb", "ratio"],
            rows,
        }],
    })
}

pub fn domination(config: &RunConfig) -> Result<Report, CliError> {
    require_ball(config, "domination")?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for interior in [config.interior, 2 * config.interior] {
        let c = RunConfig {
            interior,
            ..config.clone()
        };
        let setup = Setup::new(&c)?;
        let (fam, tents) = setup.family(&c, c.systems)?;
        let metric = BoundaryMetric::new(&setup.dom, &setup.cloud);
        let dc = DominationConfig {
            pairs: c.pairs,
            seed: c.seed,
            ..DominationConfig::default()
        };
        let pool = PairPool::clustered(&setup.dom, &fam, &metric, &dc)?;
        let rep = check_domination(&setup.dom, &setup.cloud, &tents, &pool, dc.pairs, dc.same_cluster_fraction, dc.seed)?;
        rows.push(vec![
            interior.to_string(),
            rep.pairs.to_string(),
            rep.excluded_zero_volume.to_string(),
            rep.only_global.to_string(),
            num(rep.constant),
            num(rep.quantile_999),
            num(rep.mean_ratio),
        ]);
        reports.push(rep);
    }
    let (a, b) = (reports[0].constant, reports[1].constant);
    let drift = (a - b).abs() / a.min(b);
    Ok(Report {
        result: json!({ "resolutions": to_value(&reports), "drift": drift }),
        checks: vec![check(
            "stable constant",
            a.is_finite() && b.is_finite() && drift <= 0.25,
            format!("constants {a:?} and {b:?}, relative change {drift:?} (at most 0.25)"),
        )],
        tables: vec![Table {
            file: "domination.csv".into(),
            header: vec!["interior", "pairs", "excluded_zero_volume", "only_global", "constant", "quantile_999", "mean_ratio"],
            rows,
        }],
    })
}

pub fn weaktype(config: &RunConfig) -> Result<Report, CliError> {
    let n = require_ball(config, "weaktype")?;
    let dom = config.domain.build();
    let cloud = if n == 1 {
        SampleCloud::graded_disc(&dom, &GradedDiscParams::default(), config.boundary, config.seed)?
    } else {
        SampleCloud::sample(&dom, config.interior, config.boundary, config.seed)?
    };
    let mut z0 = vec![[0.0, 0.0]; n];
    z0[0] = [1.0, 0.0];
    let rep = check_weak_type(&dom, &cloud, &boundary_bumps(&z0, &config.depths), None)?;
    let q: Vec<f64> = rep.cases.iter().map(|c| c.quasi_norm).collect();
    let spread = q.iter().cloned().fold(0.0, f64::max) / q.iter().cloned().fold(f64::INFINITY, f64::min);
    let rows = rep
        .cases
        .iter()
        .map(|c| vec![num(c.depth), num(c.quasi_norm), num(c.pf_l1), num(c.f_l1)])
        .collect();
    Ok(Report {
        result: json!({ "report": to_value(&rep), "quasi_norm_spread": spread }),
        checks: vec![
            check("l1 growth", rep.l1_monotone, "||Pf||_1 grows as the bumps approach the boundary".into()),
            check("weak bound", spread <= 2.0, format!("quasi-norm spread {spread:?} (at most 2)")),
        ],
        tables: vec![Table {
            file: "weaktype.csv".into(),
            header: vec!["depth", "quasi_norm", "pf_l1", "f_l1"],
            rows,
        }],
    })
}
