//! Dispatch from a configuration to the estimators, and result tables.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::estimators::{
    crossing_mass_estimate, crossing_mass_sweep, decay_rate_fit, divergence_sweep,
    harmonic_exponent_fit, kernel_bridge_estimate, occupation_mean_oracle, occupation_samples,
    pz_empirical_check, AccessRay, DivergencePoint, HarmonicPoint, OccupationStats, PzRecord,
    SweepPoint,
};
use crate::estimators::fit_medians;
use crate::geometry::{minkowski_fit, regularity_probe_with, PrefractalBoundary, RegularityReport};
use crate::harness::config::{Experiment, ExperimentConfig, GeometryKind};
use crate::harness::fixture::{default_fixture_path, fixture_hash};
use crate::harness::record::{Provenance, Row, RunMetadata, RunRecord};
use crate::potential::{convolve_potential_gamma, ConvolutionReport, PotentialSpec, Verdict};
use crate::stats::{weighted_line_fit, Estimate, FitResult};
use crate::stochastic::{transition_density, RngKey, GENERATOR_ID};

/// θ in the Paley-Zygmund check.
pub const PZ_THETA: f64 = 0.5;

pub(crate) fn rng_for(cfg: &ExperimentConfig) -> RngKey {
    RngKey::root(cfg.seed).child(cfg.experiment.name(), 0)
}

pub(crate) fn series(cfg: &ExperimentConfig) -> String {
    let mut s = cfg.geometry.to_string();
    if cfg.geometry == GeometryKind::Koch {
        if let Ok(l) = cfg.resolved_level() {
            s.push_str(&format!(" L={l}"));
        }
    }
    use Experiment::*;
    match cfg.experiment {
        Divergence | Crossing | Decay | Positivity => s.push_str(&format!(" beta={}", cfg.beta)),
        Kernel => match cfg.constant {
            Some(c) => s.push_str(&format!(" constant={c}")),
            None => s.push_str(&format!(" beta={}", cfg.beta)),
        },
        _ => {}
    }
    s
}

pub struct GeometryOutcome {
    pub boundary: PrefractalBoundary,
    pub fit: RegularityReport,
    pub probe: Option<RegularityReport>,
}

/// Box-counting fit and, when scales allow, the neighborhood volume probe.
pub fn geometry_run(cfg: &ExperimentConfig) -> Result<GeometryOutcome> {
    let boundary = cfg.boundary()?;
    let scales = cfg.resolved_scales();
    let fit = minkowski_fit(&boundary, scales)?;
    let probe_lo = (10.0 * boundary.resolution()).max(scales.0);
    let probe_hi = scales.1.min(1.0);
    let probe = if cfg.probe_centers > 0 && probe_lo <= probe_hi {
        let lo = 3f64.powi(-((1.0 / probe_lo).log(3.0) + 1e-9).floor() as i32);
        Some(regularity_probe_with(
            &boundary,
            cfg.probe_centers,
            (lo, probe_hi),
            cfg.probe_points,
            &rng_for(cfg).child("probe", 0),
        )?)
    } else {
        None
    };
    Ok(GeometryOutcome { boundary, fit, probe })
}

pub struct OccupationOutcome {
    pub stats: OccupationStats,
    pub mean: Vec<Estimate>,
    pub oracle: Vec<f64>,
    /// Slope of log Ê(Z_n) against n log a.
    pub slope: FitResult,
}

pub fn occupation_run(cfg: &ExperimentConfig, with_oracle: bool) -> Result<OccupationOutcome> {
    let boundary = cfg.boundary()?;
    let x0 = cfg.resolved_x();
    let stats = occupation_samples(
        &boundary,
        x0,
        cfg.delta,
        cfg.a,
        (cfg.n_min, cfg.n_max),
        cfg.n_paths,
        cfg.resolved_steps()?,
        &rng_for(cfg),
    )?;
    let mean: Vec<Estimate> = stats.samples.iter().map(|z| Estimate::from_samples(z)).collect();
    let mut oracle = Vec::new();
    if with_oracle {
        for n in stats.ns() {
            let width = cfg.a.powi(n as i32) * (1.0 - cfg.a);
            oracle.push(occupation_mean_oracle(&boundary, x0, cfg.delta, cfg.a, n, width / 4.0)?);
        }
    }
    let mut xy = Vec::new();
    for (n, m) in stats.ns().zip(&mean) {
        if m.value > 0.0 {
            xy.push((n as f64 * cfg.a.ln(), m.value.ln(), 1.0));
        }
    }
    let slope = weighted_line_fit(&xy)?;
    Ok(OccupationOutcome {
        stats,
        mean,
        oracle,
        slope,
    })
}

pub fn divergence_run(cfg: &ExperimentConfig) -> Result<(Vec<DivergencePoint>, FitResult)> {
    let boundary = cfg.boundary()?;
    let pts = divergence_sweep(
        &boundary,
        cfg.resolved_x(),
        cfg.delta,
        cfg.beta,
        &cfg.a_list,
        cfg.n_paths,
        &rng_for(cfg),
    )?;
    let fit = fit_medians(&pts)?;
    Ok((pts, fit))
}

fn base_potential(cfg: &ExperimentConfig) -> PotentialSpec {
    PotentialSpec::singular(cfg.beta).with_c_v(cfg.c_v)
}

pub fn crossing_run(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let boundary = cfg.boundary()?;
    let x = cfg.resolved_x();
    let ball = cfg.resolved_ball();
    let n_steps = cfg.resolved_steps()?;
    if let Some(c) = cfg.constant {
        let e = crossing_mass_estimate(
            x,
            ball,
            cfg.t,
            &PotentialSpec::constant(c),
            &boundary,
            cfg.n_paths,
            n_steps,
            &rng_for(cfg),
        )?;
        return Ok(vec![SweepPoint {
            a: f64::NAN,
            estimate: e,
            refinement: 0.0,
        }]);
    }
    crossing_mass_sweep(
        x,
        ball,
        cfg.t,
        &base_potential(cfg),
        &cfg.a_list,
        &boundary,
        cfg.n_paths,
        n_steps,
        &rng_for(cfg),
    )
}

/// Crossing masses and the fit of log mass against log A.
pub fn decay_run(cfg: &ExperimentConfig) -> Result<(Vec<SweepPoint>, FitResult)> {
    let pts = crossing_run(cfg)?;
    let masses: Vec<(f64, Estimate)> = pts.iter().map(|p| (p.a, p.estimate)).collect();
    let fit = decay_rate_fit(&masses)?;
    Ok((pts, fit))
}

/// Kernel estimates, one per truncation level (or one for a constant potential).
pub fn kernel_run(cfg: &ExperimentConfig) -> Result<Vec<(f64, Estimate)>> {
    let boundary = cfg.boundary()?;
    let (x, y) = (cfg.resolved_x(), cfg.resolved_y());
    let n_steps = cfg.resolved_steps()?;
    let rng = rng_for(cfg);
    let specs: Vec<(f64, PotentialSpec)> = match cfg.constant {
        Some(c) => vec![(f64::NAN, PotentialSpec::constant(c))],
        None => cfg
            .a_list
            .iter()
            .map(|&a| (a, base_potential(cfg).with_truncation(a)))
            .collect(),
    };
    specs
        .iter()
        .enumerate()
        .map(|(k, (a, spec))| {
            let e = kernel_bridge_estimate(
                x,
                y,
                cfg.t,
                spec,
                &boundary,
                cfg.n_paths,
                n_steps,
                &rng.child("level", k as u64),
            )?;
            Ok((*a, e))
        })
        .collect()
}

pub fn harmonic_run(cfg: &ExperimentConfig) -> Result<(FitResult, Vec<HarmonicPoint>)> {
    let domain = cfg.resolved_domain()?;
    let (o, d) = cfg.resolved_ray();
    harmonic_exponent_fit(
        &domain,
        cfg.resolved_ball(),
        &AccessRay::new(o, d),
        &cfg.distances,
        cfg.n_paths,
        cfg.eps,
        cfg.max_steps,
        &rng_for(cfg),
    )
}

pub fn positivity_run(cfg: &ExperimentConfig) -> Result<ConvolutionReport> {
    let boundary = cfg.boundary()?;
    convolve_potential_gamma(
        &base_potential(cfg),
        &boundary,
        cfg.resolved_x(),
        cfg.t,
        cfg.mesh_levels,
    )
}

fn fit_rows(s: &str, quantity: &str, fit: &FitResult, sign: f64) -> Vec<Row> {
    let (lo, hi) = if sign > 0.0 {
        fit.slope_ci95
    } else {
        (-fit.slope_ci95.1, -fit.slope_ci95.0)
    };
    let mut rows = vec![
        Row {
            stderr: Some(fit.slope_stderr),
            n: Some(fit.points.len()),
            ..Row::scalar(s, quantity, sign * fit.slope)
        },
        Row::scalar(s, &format!("{quantity}_ci_lo"), lo),
        Row::scalar(s, &format!("{quantity}_ci_hi"), hi),
    ];
    for &c in &fit.censored {
        rows.push(Row::at(s, "censored", "x", c, 1.0));
    }
    rows
}

pub(crate) fn occupation_rows(s: &str, o: &OccupationOutcome) -> Vec<Row> {
    let mut rows = Vec::new();
    for (k, n) in o.stats.ns().enumerate() {
        let nf = n as f64;
        rows.push(Row::at(s, "mean", "n", nf, 0.0).estimate(&o.mean[k]));
        rows.push(Row::at(s, "second_moment", "n", nf, o.stats.second_moment_hat[k]));
        rows.push(Row::at(s, "coarse_mean", "n", nf, o.stats.coarse_mean_hat[k]));
        rows.push(Row::at(s, "b_n", "n", nf, o.stats.b_n[k]));
        if let Some(q) = o.oracle.get(k) {
            rows.push(Row::at(s, "oracle_mean", "n", nf, *q));
        }
    }
    rows.extend(fit_rows(s, "slope", &o.slope, 1.0));
    rows
}

pub(crate) fn pz_rows(s: &str, recs: &[PzRecord]) -> Vec<Row> {
    let mut rows = Vec::new();
    for r in recs {
        let n = r.n as f64;
        rows.push(Row {
            stderr: Some(r.stderr),
            ..Row::at(s, "fraction_above_half_mean", "n", n, r.empirical_frac)
        });
        rows.push(Row::at(s, "pz_bound", "n", n, r.bound));
        rows.push(Row::at(s, "pz_pass", "n", n, r.pass as u8 as f64));
    }
    rows
}

pub(crate) fn divergence_rows(s: &str, pts: &[DivergencePoint], fit: &FitResult) -> Vec<Row> {
    let mut rows = Vec::new();
    for p in pts {
        rows.push(Row::at(s, "median", "A", p.a, p.median));
        rows.push(Row::at(s, "mean", "A", p.a, 0.0).estimate(&p.mean));
        rows.push(Row::at(s, "refinement", "A", p.a, p.refinement));
    }
    rows.extend(fit_rows(s, "growth_exponent", fit, 1.0));
    rows
}

pub(crate) fn sweep_rows(s: &str, pts: &[SweepPoint]) -> Vec<Row> {
    let mut rows = Vec::new();
    for p in pts {
        rows.push(Row::at(s, "crossing_mass", "A", p.a, 0.0).estimate(&p.estimate));
        rows.push(Row::at(s, "refinement", "A", p.a, p.refinement));
    }
    rows
}

pub(crate) fn decay_rows(s: &str, pts: &[SweepPoint], fit: &FitResult) -> Vec<Row> {
    let mut rows = sweep_rows(s, pts);
    rows.extend(fit_rows(s, "sigma", fit, -1.0));
    rows
}

pub(crate) fn harmonic_rows(s: &str, fit: &FitResult, prof: &[HarmonicPoint]) -> Vec<Row> {
    let mut rows = Vec::new();
    for p in prof {
        rows.push(Row::at(s, "h", "distance", p.distance, 0.0).estimate(&p.h));
        rows.push(Row::at(s, "timeouts", "distance", p.distance, p.timeouts as f64));
    }
    rows.extend(fit_rows(s, "gamma", fit, 1.0));
    rows
}

pub(crate) fn positivity_rows(s: &str, rep: &ConvolutionReport) -> Vec<Row> {
    let mut rows = vec![Row::scalar(s, "outer", rep.outer)];
    for (n, c) in rep.shells.iter().enumerate() {
        rows.push(Row::at(s, "shell", "n", n as f64, *c));
    }
    for (n, r) in rep.ratios.iter().enumerate() {
        rows.push(Row::at(s, "ratio", "n", (n + 1) as f64, *r));
    }
    for (n, e) in rep.extrapolated.iter().enumerate() {
        rows.push(Row::at(s, "extrapolated", "n", n as f64, *e));
    }
    match rep.verdict {
        Verdict::Finite { value } => {
            rows.push(Row::scalar(s, "finite", 1.0));
            rows.push(Row::scalar(s, "value", value));
        }
        Verdict::Diverging { growth_per_level } => {
            rows.push(Row::scalar(s, "finite", 0.0));
            rows.push(Row::scalar(s, "growth_per_level", growth_per_level));
        }
    }
    rows
}

pub(crate) fn geometry_rows(s: &str, g: &GeometryOutcome) -> Vec<Row> {
    let mut rows = vec![
        Row::scalar(s, "segments", g.boundary.segments().len() as f64),
        Row::scalar(s, "nominal_alpha", g.boundary.nominal_alpha()),
        Row::scalar(s, "alpha_hat", g.fit.alpha_hat),
        Row::scalar(s, "alpha_ci_lo", g.fit.alpha_ci.0),
        Row::scalar(s, "alpha_ci_hi", g.fit.alpha_ci.1),
    ];
    for r in &g.fit.rows {
        rows.push(Row::at(s, "box_count", "eps", r[0], r[1]));
    }
    if let Some(p) = &g.probe {
        if let Some(c1) = p.c1_hat {
            rows.push(Row::scalar(s, "c1_hat", c1));
        }
        if let Some(c2) = p.c2_hat {
            rows.push(Row::scalar(s, "c2_hat", c2));
        }
        rows.push(Row::scalar(s, "probe_samples", p.sample_count as f64));
    }
    rows
}

/// Validates `cfg` and computes its result table without touching the disk.
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    cfg.validate()?;
    let s = series(cfg);
    Ok(match cfg.experiment {
        Experiment::Geometry => geometry_rows(&s, &geometry_run(cfg)?),
        Experiment::Occupation => occupation_rows(&s, &occupation_run(cfg, true)?),
        Experiment::Pz => {
            let o = occupation_run(cfg, false)?;
            let mut rows = occupation_rows(&s, &o);
            rows.extend(pz_rows(&s, &pz_empirical_check(&o.stats, PZ_THETA)?));
            rows
        }
        Experiment::Divergence => {
            let (pts, fit) = divergence_run(cfg)?;
            divergence_rows(&s, &pts, &fit)
        }
        Experiment::Kernel => {
            let p = transition_density(cfg.resolved_x(), cfg.resolved_y(), cfg.t)?;
            let mut rows = vec![Row::scalar(&s, "free_density", p)];
            for (a, e) in kernel_run(cfg)? {
                let row = if a.is_nan() {
                    Row::scalar(&s, "kernel", 0.0)
                } else {
                    Row::at(&s, "kernel", "A", a, 0.0)
                };
                rows.push(row.estimate(&e));
            }
            rows
        }
        Experiment::Crossing => sweep_rows(&s, &crossing_run(cfg)?),
        Experiment::Decay => {
            let (pts, fit) = decay_run(cfg)?;
            decay_rows(&s, &pts, &fit)
        }
        Experiment::Harmonic => {
            let (fit, prof) = harmonic_run(cfg)?;
            harmonic_rows(&s, &fit, &prof)
        }
        Experiment::Positivity => positivity_rows(&s, &positivity_run(cfg)?),
        Experiment::Acceptance => {
            crate::harness::acceptance::acceptance_suite_with(&crate::harness::AcceptanceOptions {
                tier: cfg.tier,
                seed: cfg.seed,
                ..Default::default()
            })
            .rows()
        }
    })
}

pub fn provenance(seed: u64) -> Provenance {
    Provenance {
        seed,
        generator_id: GENERATOR_ID.to_owned(),
        fixture_sha256: fixture_hash(&default_fixture_path()),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        workers: rayon::current_num_threads(),
    }
}

/// Runs `cfg`, writes `<experiment>.csv` and `<experiment>.json` under
/// `cfg.out`, and returns the record.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let rows = execute(cfg)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    if cfg.experiment == Experiment::Geometry {
        let b = cfg.boundary()?;
        let path = cfg.out.join("boundary.csv");
        std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
        b.save_csv(&path)?;
        let back = PrefractalBoundary::load_csv(&path)?;
        if back.segments() != b.segments() {
            return Err(Error::Format {
                path,
                message: "boundary did not survive a write/read cycle".into(),
            });
        }
    }
    let mut rec = RunRecord {
        metadata: RunMetadata {
            config: cfg.clone(),
            provenance: provenance(cfg.seed),
            wall_time_s,
            csv_file: String::new(),
            rows: rows.len(),
        },
        rows,
        csv_path: Default::default(),
        json_path: Default::default(),
    };
    rec.write(&cfg.out, cfg.experiment.name())?;
    Ok(rec)
}
