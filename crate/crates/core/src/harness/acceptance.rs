//! The acceptance suite: every criterion runs in isolation and reports
//! measured values against its target.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate_from_moments, par_moments, pz_empirical_check};
use crate::geometry::koch_alpha;
use crate::harness::config::{Experiment, ExperimentConfig, GeometryKind, Tier};
use crate::harness::fixture::{check_fixture, default_fixture_path};
use crate::harness::record::{rows_to_csv, Row};
use crate::harness::run::{
    decay_rows, decay_run, divergence_rows, divergence_run, geometry_rows, geometry_run,
    harmonic_rows, harmonic_run, kernel_run, occupation_rows, occupation_run, positivity_rows,
    positivity_run, pz_rows, series, PZ_THETA,
};
use crate::point::Point2;
use crate::quadrature::integrate;
use crate::stochastic::{sample_bridge, sample_path, transition_density, RngKey};

#[derive(Debug, Clone)]
pub struct AcceptanceOptions {
    pub tier: Tier,
    pub seed: u64,
    pub fixture: PathBuf,
    /// Criteria to run; all of them when `None`.
    pub only: Option<Vec<u32>>,
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        AcceptanceOptions {
            tier: Tier::Fast,
            seed: 1,
            fixture: default_fixture_path(),
            only: None,
        }
    }
}

/// One measured quantity against its target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub target: String,
    pub pass: bool,
}

fn check(label: impl Into<String>, measured: f64, target: impl Into<String>, pass: bool) -> Check {
    Check {
        label: label.into(),
        measured,
        target: target.into(),
        pass,
    }
}

fn within(label: impl Into<String>, measured: f64, center: f64, tol: f64) -> Check {
    check(
        label,
        measured,
        format!("{center} ± {tol}"),
        (measured - center).abs() <= tol,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub title: String,
    pub executed: bool,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub seconds: f64,
    #[serde(skip)]
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub tier: Tier,
    pub seed: u64,
    pub items: Vec<CriterionOutcome>,
}

impl AcceptanceReport {
    pub fn all_passed(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn failed_ids(&self) -> Vec<u32> {
        self.items.iter().filter(|i| !i.pass).map(|i| i.id).collect()
    }

    pub fn executed_fraction(&self) -> f64 {
        let n = self.items.iter().filter(|i| i.executed).count();
        n as f64 / self.items.len().max(1) as f64
    }

    /// One line per criterion.
    pub fn lines(&self) -> Vec<String> {
        self.items
            .iter()
            .map(|i| {
                let status = if i.pass { "PASS" } else { "FAIL" };
                let mut detail: Vec<String> = i
                    .checks
                    .iter()
                    .map(|c| {
                        let mark = if c.pass { "" } else { " [x]" };
                        format!("{} = {} (target {}){mark}", c.label, show(c.measured), c.target)
                    })
                    .collect();
                if let Some(e) = &i.error {
                    detail.push(format!("error: {e}"));
                }
                format!(
                    "criterion {:>2} {status} {} [{:.1} s]: {}",
                    i.id,
                    i.title,
                    i.seconds,
                    detail.join("; ")
                )
            })
            .collect()
    }

    /// Checks and per-item tables in long format; timings are left out so
    /// that identical runs give identical bytes.
    pub fn rows(&self) -> Vec<Row> {
        let mut rows = Vec::new();
        for i in &self.items {
            let s = format!("criterion {}", i.id);
            rows.push(Row::scalar(&s, "pass", i.pass as u8 as f64));
            rows.push(Row::scalar(&s, "executed", i.executed as u8 as f64));
            for c in &i.checks {
                rows.push(Row::scalar(&s, &c.label, c.measured));
                rows.push(Row::scalar(&s, &format!("{} pass", c.label), c.pass as u8 as f64));
            }
            for r in &i.rows {
                let mut r = r.clone();
                r.series = format!("{s}: {}", r.series);
                rows.push(r);
            }
        }
        rows
    }
}

/// Sample sizes of one tier.
#[derive(Debug, Clone, Copy)]
struct Sizes {
    sanity_paths: u64,
    kernel_paths: usize,
    occupation_paths: usize,
    pz_paths: usize,
    divergence_paths: usize,
    crossing_paths: usize,
    walks: usize,
}

impl Sizes {
    fn of(tier: Tier) -> Self {
        match tier {
            Tier::Full => Sizes {
                sanity_paths: 100_000,
                kernel_paths: 10_000,
                occupation_paths: 10_000,
                pz_paths: 2_000,
                divergence_paths: 2_000,
                crossing_paths: 1_000_000,
                walks: 20_000,
            },
            Tier::Fast => Sizes {
                sanity_paths: 100_000,
                kernel_paths: 2_000,
                occupation_paths: 2_000,
                pz_paths: 1_000,
                divergence_paths: 400,
                crossing_paths: 30_000,
                walks: 4_000,
            },
        }
    }
}

struct ItemOutput {
    checks: Vec<Check>,
    rows: Vec<Row>,
}

type ItemFn = fn(&Sizes, u64) -> Result<ItemOutput>;

const ITEMS: &[(u32, &str, ItemFn)] = &[
    (1, "kernel convention", kernel_convention),
    (2, "bridge correctness", bridge_correctness),
    (3, "constant-potential exactness", constant_potential),
    (4, "snowflake dimension", snowflake_dimension),
    (5, "occupation scaling", occupation_scaling),
    (6, "Paley-Zygmund uniformity", pz_uniformity),
    (7, "divergence growth", divergence_growth),
    (8, "separation dichotomy", separation_dichotomy),
    (9, "positivity criterion", positivity_criterion),
    (10, "harmonic exponent", harmonic_exponent),
];

const REPRODUCIBILITY_ID: u32 = 11;

fn config(experiment: Experiment, geometry: GeometryKind, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        geometry,
        seed,
        ..Default::default()
    }
}

fn kernel_convention(sz: &Sizes, seed: u64) -> Result<ItemOutput> {
    let key = RngKey::root(seed).child("kernel_convention", 0);
    let n = sz.sanity_paths;
    let (s1, s2) = par_moments(n, 1, |i, out| {
        // A one-step path has exactly the law of X_1.
        let p = sample_path(&key.child("path", i), Point2::ORIGIN, 1.0, 1).expect("valid grid");
        out[0] = (p.end() - p.start()).norm_sq();
    });
    let e = estimate_from_moments(s1[0], s2[0], n);
    let norm = integrate(
        |r| 2.0 * std::f64::consts::PI * r * transition_density(Point2::ORIGIN, Point2::new(r, 0.0), 1.0).unwrap(),
        0.0,
        60.0,
        1e-13,
        0.0,
    );
    let s = "convention";
    Ok(ItemOutput {
        checks: vec![
            check(
                "mean |X1-X0|^2",
                e.value,
                format!("4 ± 3 stderr ({:.4})", 3.0 * e.stderr),
                (e.value - 4.0).abs() <= 3.0 * e.stderr,
            ),
            check("density mass error", (norm - 1.0).abs(), "< 1e-6", (norm - 1.0).abs() < 1e-6),
        ],
        rows: vec![
            Row::scalar(s, "mean_sq_displacement", 0.0).estimate(&e),
            Row::scalar(s, "density_mass", norm),
        ],
    })
}

fn bridge_correctness(sz: &Sizes, seed: u64) -> Result<ItemOutput> {
    let key = RngKey::root(seed).child("bridge_correctness", 0);
    let n = sz.sanity_paths;
    let (x, y) = (Point2::ORIGIN, Point2::ORIGIN);
    let (s1, s2) = par_moments(n, 5, |i, out| {
        let b = sample_bridge(&key.child("bridge", i), x, y, 1.0, 2).expect("valid grid");
        let pts = &b.path.points;
        let m = pts[1];
        out[0] = m.x;
        out[1] = m.y;
        out[2] = m.x * m.x;
        out[3] = m.y * m.y;
        out[4] = (pts[0] != x || pts[2] != y) as u8 as f64;
    });
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let s = "bridge t=1 midpoint";
    for (k, c) in ["x", "y"].iter().enumerate() {
        let mean = estimate_from_moments(s1[k], s2[k], n);
        // Variance about the known mean 0; its stderr from the fourth moment.
        let var = estimate_from_moments(s1[k + 2], s2[k + 2], n);
        checks.push(check(
            format!("mid mean {c}"),
            mean.value,
            format!("0 ± 3 stderr ({:.4})", 3.0 * mean.stderr),
            mean.value.abs() <= 3.0 * mean.stderr,
        ));
        checks.push(check(
            format!("mid variance {c}"),
            var.value,
            format!("0.5 ± 3 stderr ({:.4})", 3.0 * var.stderr),
            (var.value - 0.5).abs() <= 3.0 * var.stderr,
        ));
        rows.push(Row::scalar(s, &format!("mean_{c}"), 0.0).estimate(&mean));
        rows.push(Row::scalar(s, &format!("variance_{c}"), 0.0).estimate(&var));
    }
    checks.push(check("inexact endpoints", s1[4], "0", s1[4] == 0.0));
    rows.push(Row::scalar(s, "inexact_endpoints", s1[4]));
    Ok(ItemOutput { checks, rows })
}

fn constant_potential(sz: &Sizes, seed: u64) -> Result<ItemOutput> {
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for c in [0.5, 2.0] {
        let mut cfg = config(Experiment::Kernel, GeometryKind::Line, seed);
        cfg.constant = Some(c);
        cfg.x = Some(Point2::ORIGIN);
        cfg.y = Some(Point2::new(0.6, 0.2));
        cfg.n_paths = sz.kernel_paths;
        cfg.n_steps = Some(64);
        cfg.validate()?;
        let p = transition_density(cfg.resolved_x(), cfg.resolved_y(), cfg.t)?;
        let want = (-c * cfg.t).exp() * p;
        let (_, e) = kernel_run(&cfg)?[0];
        let tol = 3.0 * e.stderr + 1e-14 * p;
        checks.push(check(
            format!("kernel c={c} / exact"),
            e.value / want,
            format!("1 ± {:.1e}", tol / want),
            (e.value - want).abs() <= tol,
        ));
        let s = series(&cfg);
        rows.push(Row::scalar(&s, "kernel", 0.0).estimate(&e));
        rows.push(Row::scalar(&s, "exact", want));
    }
    Ok(ItemOutput { checks, rows })
}

fn snowflake_dimension(_: &Sizes, seed: u64) -> Result<ItemOutput> {
    let mut cfg = config(Experiment::Geometry, GeometryKind::Koch, seed);
    cfg.level = Some(8);
    cfg.scale_lo = Some(3f64.powi(-7));
    cfg.scale_hi = Some(3f64.powi(-2));
    cfg.probe_centers = 0;
    cfg.validate()?;
    let g = geometry_run(&cfg)?;
    Ok(ItemOutput {
        checks: vec![within("alpha_hat", g.fit.alpha_hat, 1.2619, 0.05)],
        rows: geometry_rows(&series(&cfg), &g),
    })
}

fn occupation_scaling(sz: &Sizes, seed: u64) -> Result<ItemOutput> {
    let mut cfg = config(Experiment::Occupation, GeometryKind::Line, seed);
    cfg.n_paths = sz.occupation_paths;
    cfg.validate()?;
    let o = occupation_run(&cfg, true)?;
    let mut checks = vec![within("slope", o.slope.slope, 1.0, 0.15)];
    for (k, n) in o.stats.ns().enumerate() {
        let rel = o.mean[k].value / o.oracle[k];
        checks.push(within(format!("n={n} mean/oracle"), rel, 1.0, 0.1));
    }
    let worst = o
        .stats
        .mean_hat
        .iter()
        .zip(&o.stats.second_moment_hat)
        .map(|(m, s)| s / (m * m))
        .fold(0.0, f64::max);
    checks.push(check("max second/mean^2", worst, "< 50", worst < 50.0));
    Ok(ItemOutput {
        checks,
        rows: occupation_rows(&series(&cfg), &o),
    })
}

fn pz_uniformity(sz: &Sizes, seed: u64) -> Result<ItemOutput> {
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (geometry, n_max) in [(GeometryKind::Line, 5), (GeometryKind::Koch, 4)] {
        let mut cfg = config(Experiment::Pz, geometry, seed);
        cfg.n_paths = sz.pz_paths;
        cfg.n_max = n_max;
        cfg.validate()?;
        let o = occupation_run(&cfg, false)?;
        let recs = pz_empirical_check(&o.stats, PZ_THETA)?;
        for r in &recs {
            checks.push(check(
                format!("{geometry} n={} fraction", r.n),
                r.empirical_frac,
                ">= 0.05",
                r.empirical_frac >= 0.05,
            ));
        }
        let s = series(&cfg);
        rows.extend(occupation_rows(&s, &o));
        rows.extend(pz_rows(&s, &recs));
    }
    Ok(ItemOutput { checks, rows })
}

fn divergence_growth(sz: &Sizes, seed: u64) -> Result<ItemOutput> {
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let alpha = koch_alpha();
    for (geometry, beta, alpha) in [
        (GeometryKind::Line, 1.5, 1.0),
        (GeometryKind::Koch, 1.2, alpha),
        (GeometryKind::Line, 0.5, 1.0),
    ] {
        let mut cfg = config(Experiment::Divergence, geometry, seed);
        cfg.beta = beta;
        cfg.delta = 0.5;
        cfg.a_list = vec![4.0, 8.0, 16.0, 32.0, 64.0];
        cfg.n_paths = sz.divergence_paths;
        cfg.validate()?;
        let (pts, fit) = divergence_run(&cfg)?;
        let expected = beta + alpha - 2.0;
        let label = format!("{geometry} beta={beta} growth");
        checks.push(if expected > 0.0 {
            within(label, fit.slope, (expected * 1e4).round() / 1e4, 0.2)
        } else {
            check(label, fit.slope, "<= 0.1", fit.slope <= 0.1)
        });
        rows.extend(divergence_rows(&series(&cfg), &pts, &fit));
    }
    Ok(ItemOutput { checks, rows })
}

fn separation_dichotomy(sz: &Sizes, seed: u64) -> Result<ItemOutput> {
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (geometry, beta, supercritical) in [
        (GeometryKind::Line, 1.5, true),
        (GeometryKind::Koch, 1.0, true),
        (GeometryKind::Line, 0.5, false),
        (GeometryKind::Koch, 0.4, false),
    ] {
        let mut cfg = config(Experiment::Decay, geometry, seed);
        cfg.beta = beta;
        cfg.a_list = vec![4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
        cfg.n_paths = sz.crossing_paths;
        cfg.validate()?;
        let (pts, fit) = decay_run(&cfg)?;
        let sigma = -fit.slope;
        let (lo, hi) = (-fit.slope_ci95.1, -fit.slope_ci95.0);
        let tag = format!("{geometry} beta={beta}");
        if supercritical {
            checks.push(check(
                format!("{tag} sigma"),
                sigma,
                format!("> 0 with CI excluding 0 (CI [{lo:.4}, {hi:.4}])"),
                sigma > 0.0 && lo > 0.0,
            ));
        } else {
            checks.push(check(
                format!("{tag} sigma"),
                sigma,
                format!("CI contains 0 (CI [{lo:.4}, {hi:.4}])"),
                lo <= 0.0 && 0.0 <= hi,
            ));
            let top = &pts[pts.len() - 1].estimate;
            let next = &pts[pts.len() - 2].estimate;
            let positive = top.value > 0.0 && next.value > 0.0;
            let excl = top.ci_excludes_zero() && next.ci_excludes_zero();
            checks.push(check(
                format!("{tag} top masses CI excl 0"),
                top.value.min(next.value),
                "> 0 with CIs excluding 0",
                positive && excl,
            ));
            let rel = (top.value - next.value).abs() / top.value.max(next.value);
            checks.push(check(
                format!("{tag} top masses rel diff"),
                rel,
                "< 0.2",
                positive && rel < 0.2,
            ));
        }
        rows.extend(decay_rows(&series(&cfg), &pts, &fit));
    }
    Ok(ItemOutput { checks, rows })
}

fn positivity_criterion(_: &Sizes, seed: u64) -> Result<ItemOutput> {
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (geometry, beta, finite, mesh_levels) in [
        (GeometryKind::Line, 0.5, true, 5),
        (GeometryKind::Koch, 0.3, true, 4),
        (GeometryKind::Line, 1.0, false, 5),
        (GeometryKind::Koch, 0.8, false, 4),
    ] {
        let mut cfg = config(Experiment::Positivity, geometry, seed);
        cfg.beta = beta;
        cfg.half_width = 8.0;
        cfg.mesh_levels = mesh_levels;
        cfg.validate()?;
        let rep = positivity_run(&cfg)?;
        let want = if finite { "finite" } else { "diverging" };
        let last_ratio = rep.ratios.last().copied().unwrap_or(f64::NAN);
        checks.push(check(
            format!("{geometry} beta={beta} verdict {want}; last shell ratio"),
            last_ratio,
            want,
            rep.verdict.is_finite() == finite,
        ));
        rows.extend(positivity_rows(&series(&cfg), &rep));
    }
    Ok(ItemOutput { checks, rows })
}

fn harmonic_exponent(sz: &Sizes, seed: u64) -> Result<ItemOutput> {
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for geometry in [GeometryKind::Line, GeometryKind::Slit, GeometryKind::Koch] {
        let mut cfg = config(Experiment::Harmonic, geometry, seed);
        cfg.n_paths = sz.walks;
        if geometry == GeometryKind::Koch {
            cfg.distances = vec![0.1, 0.05, 0.025, 0.0125];
        }
        cfg.validate()?;
        let (fit, prof) = harmonic_run(&cfg)?;
        checks.push(match geometry {
            GeometryKind::Line => within("half-plane gamma", fit.slope, 1.0, 0.1),
            GeometryKind::Slit => within("slit gamma", fit.slope, 0.5, 0.1),
            GeometryKind::Koch => check("koch exterior gamma", fit.slope, ">= 0.4", fit.slope >= 0.4),
        });
        rows.extend(harmonic_rows(&series(&cfg), &fit, &prof));
    }
    Ok(ItemOutput { checks, rows })
}

fn run_item(f: ItemFn, sizes: &Sizes, seed: u64) -> (std::result::Result<ItemOutput, String>, f64) {
    let start = Instant::now();
    let out = match catch_unwind(AssertUnwindSafe(|| f(sizes, seed))) {
        Ok(Ok(o)) => Ok(o),
        Ok(Err(e)) => Err(e.to_string()),
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into())),
    };
    (out, start.elapsed().as_secs_f64())
}

fn outcome(id: u32, title: &str, res: std::result::Result<ItemOutput, String>, seconds: f64) -> CriterionOutcome {
    match res {
        Ok(o) => CriterionOutcome {
            id,
            title: title.to_owned(),
            executed: true,
            pass: !o.checks.is_empty() && o.checks.iter().all(|c| c.pass),
            checks: o.checks,
            error: None,
            seconds,
            rows: o.rows,
        },
        Err(e) => CriterionOutcome {
            id,
            title: title.to_owned(),
            executed: false,
            pass: false,
            checks: Vec::new(),
            error: Some(e),
            seconds,
            rows: Vec::new(),
        },
    }
}

/// Reference draws of the generator, then a replay of every selected item at
/// fast-tier sizes compared byte for byte.
fn reproducibility(
    opts: &AcceptanceOptions,
    first: &[CriterionOutcome],
    progress: &mut dyn FnMut(&str),
) -> std::result::Result<ItemOutput, String> {
    let mut checks = Vec::new();
    match check_fixture(&opts.fixture) {
        Ok(c) => checks.push(check(
            "rng fixture mismatches",
            c.mismatches.len() as f64,
            "0",
            c.ok(),
        )),
        Err(e) => {
            return Err(Error::Format {
                path: opts.fixture.clone(),
                message: format!("rng fixture unreadable: {e}"),
            }
            .to_string())
        }
    }
    let fast = Sizes::of(Tier::Fast);
    for (id, title, f) in ITEMS {
        let Some(prev) = first.iter().find(|o| o.id == *id) else {
            continue;
        };
        progress(&format!("criterion 11: replaying criterion {id}"));
        let reference = if opts.tier == Tier::Fast && prev.executed {
            Some(rows_to_csv(&prev.rows))
        } else {
            run_item(*f, &fast, opts.seed).0.ok().map(|o| rows_to_csv(&o.rows))
        };
        let replay = run_item(*f, &fast, opts.seed).0.ok().map(|o| rows_to_csv(&o.rows));
        let same = matches!((&reference, &replay), (Some(a), Some(b)) if a == b);
        checks.push(check(
            format!("criterion {id} ({title}) replay identical"),
            same as u8 as f64,
            "1",
            same,
        ));
    }
    Ok(ItemOutput {
        checks,
        rows: Vec::new(),
    })
}

pub fn acceptance_suite(tier: Tier) -> AcceptanceReport {
    acceptance_suite_with(&AcceptanceOptions {
        tier,
        ..Default::default()
    })
}

pub fn acceptance_suite_with(opts: &AcceptanceOptions) -> AcceptanceReport {
    acceptance_suite_reporting(opts, &mut |_| {})
}

/// Like [`acceptance_suite_with`], calling `progress` with one line as each
/// criterion finishes.
pub fn acceptance_suite_reporting(
    opts: &AcceptanceOptions,
    progress: &mut dyn FnMut(&str),
) -> AcceptanceReport {
    let wanted = |id: u32| opts.only.as_ref().is_none_or(|v| v.contains(&id));
    let sizes = Sizes::of(opts.tier);
    let mut items = Vec::new();
    for (id, title, f) in ITEMS {
        if !wanted(*id) {
            continue;
        }
        let (res, secs) = run_item(*f, &sizes, opts.seed);
        let o = outcome(*id, title, res, secs);
        progress(&single_line(&o));
        items.push(o);
    }
    if wanted(REPRODUCIBILITY_ID) {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(|| reproducibility(opts, &items, progress)))
            .unwrap_or_else(|_| Err("panic".into()));
        let o = outcome(REPRODUCIBILITY_ID, "reproducibility", res, start.elapsed().as_secs_f64());
        progress(&single_line(&o));
        items.push(o);
    }
    AcceptanceReport {
        tier: opts.tier,
        seed: opts.seed,
        items,
    }
}

fn show(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-3..1e6).contains(&a) {
        format!("{x:.6}")
    } else {
        format!("{x:.3e}")
    }
}

fn single_line(o: &CriterionOutcome) -> String {
    AcceptanceReport {
        tier: Tier::Fast,
        seed: 0,
        items: vec![o.clone()],
    }
    .lines()
    .remove(0)
}
