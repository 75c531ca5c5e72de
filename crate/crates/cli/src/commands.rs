use bootperc::bounds;
use bootperc::certify::{
    audit_lemma_ab, extract_staircase, find_empty_rectangle, p_set, plant_rectangle, shape_center,
    verify_extremal, verify_lower_certificate,
};
use bootperc::engine::{evolve_until_fixation, percolation_time, ProcessParams};
use bootperc::format::site_set_to_hex;
use bootperc::lattice::{LatticeShape, Site, SiteSet};
use bootperc::oracle::{
    bad_counts, eta_from_bad_counts, exact_max_percolation_time, exact_percolation_polynomial,
};
use bootperc::sampler::{
    bernoulli_field, derive_seed, estimate_eta, estimate_pc, percolation_times, EstimateResult,
    TrialPlan,
};

use crate::config::{Command, ExperimentConfig};
use crate::output::Output;
use crate::RunError;

pub const TIMES_HEADER: &[&str] = &["d", "n", "r", "p", "trial", "seed", "T_or_never", "rho"];
pub const PERC_HEADER: &[&str] = &[
    "d", "n", "boundary", "r", "p", "trials", "perc_count", "point", "ci_low", "ci_high", "seed",
];
pub const ETA_HEADER: &[&str] = &[
    "d", "m", "p", "trials", "bad_count", "eta_hat", "ci_low", "ci_high", "seed",
];
pub const PC_HEADER: &[&str] = &[
    "d", "n", "boundary", "r", "trials", "tol", "pc", "bracket_low", "bracket_high", "probes", "seed",
];
pub const CERT_HEADER: &[&str] = &["kind", "d", "n", "boundary", "r", "t", "region", "verified", "T"];
pub const AUDIT_HEADER: &[&str] = &["m", "p", "trial_seed", "A", "B", "E", "counterexample_flag"];
pub const PATHS_HEADER: &[&str] = &["d", "n", "p", "trial", "seed", "t", "x", "path"];
pub const ORACLE_HEADER: &[&str] = &["d", "n", "boundary", "r", "p", "exact_probability", "max_time"];
pub const BOUNDS_HEADER: &[&str] = &[
    "formula_name", "d", "r", "n", "p", "t", "t_prime", "m", "delta", "lambda", "p0", "c", "b",
    "value", "clamped_value", "overflow_flag",
];

pub fn run(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    match cfg.command {
        Command::Simulate => simulate(cfg, out),
        Command::Sweep => sweep(cfg, out),
        Command::Eta => eta(cfg, out),
        Command::Pc => pc(cfg, out),
        Command::Certify => certify(cfg, out),
        Command::Audit => audit(cfg, out),
        Command::Oracle => oracle(cfg, out),
        Command::Path => path(cfg, out),
        Command::Bounds => bounds_table(cfg, out),
    }
}

fn never_or<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "never".to_string(), |x| x.to_string())
}

/// `T ln(1/(1-p)) / ln n`; zero when `T = 0`, empty when `T` is never.
pub fn rho(t: Option<u32>, p: f64, n: usize) -> String {
    match t {
        None => String::new(),
        Some(0) => "0".into(),
        Some(t) => (t as f64 * -(1.0 - p).ln() / (n as f64).ln()).to_string(),
    }
}

fn time_rows(plan: &TrialPlan, rows: &mut Vec<Vec<String>>) {
    let shape = plan.shape;
    for (k, t) in percolation_times(plan).into_iter().enumerate() {
        rows.push(vec![
            shape.d().to_string(),
            shape.n().to_string(),
            plan.r.to_string(),
            plan.p.to_string(),
            k.to_string(),
            plan.trial_seed(k).to_string(),
            never_or(t),
            rho(t, plan.p, shape.n()),
        ]);
    }
}

fn perc_row(plan: &TrialPlan, est: &EstimateResult, p: f64) -> Vec<String> {
    let shape = plan.shape;
    vec![
        shape.d().to_string(),
        shape.n().to_string(),
        shape.boundary().to_string(),
        plan.r.to_string(),
        p.to_string(),
        est.trials.to_string(),
        est.successes.to_string(),
        est.point.to_string(),
        est.ci_low.to_string(),
        est.ci_high.to_string(),
        plan.master_seed.to_string(),
    ]
}

fn simulate(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let shape = cfg.shapes()?[0];
    let p = cfg.ps()?[0];
    let plan = TrialPlan::new(shape, cfg.r(), p, cfg.trials, cfg.master_seed)?;
    let mut rows = Vec::new();
    time_rows(&plan, &mut rows);
    out.table("times.csv", TIMES_HEADER, &rows)?;
    let a0 = bernoulli_field(&shape, p, plan.trial_seed(0))?;
    let schedule = evolve_until_fixation(&a0, &ProcessParams::new(shape, cfg.r())?)?;
    out.raw_table("schedule.csv", shape.volume(), |f| schedule.write_csv(f))
}

fn sweep(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let mut rows = Vec::new();
    let mut perc = Vec::new();
    for shape in cfg.shapes()? {
        for p in cfg.ps()? {
            let plan = TrialPlan::new(shape, cfg.r(), p, cfg.trials, cfg.master_seed)?;
            let start = rows.len();
            time_rows(&plan, &mut rows);
            let hits = rows[start..].iter().filter(|r| r[6] != "never").count();
            perc.push(perc_row(&plan, &EstimateResult::from_counts(hits, cfg.trials), p));
        }
    }
    out.table("times.csv", TIMES_HEADER, &rows)?;
    out.table("perc.csv", PERC_HEADER, &perc)
}

fn eta(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let mut rows = Vec::new();
    for m in cfg.ms()? {
        for p in cfg.ps()? {
            let est = estimate_eta(m, cfg.d, p, cfg.trials, cfg.master_seed)?;
            rows.push(vec![
                cfg.d.to_string(),
                m.to_string(),
                p.to_string(),
                est.trials.to_string(),
                est.successes.to_string(),
                est.point.to_string(),
                est.ci_low.to_string(),
                est.ci_high.to_string(),
                cfg.master_seed.to_string(),
            ]);
        }
    }
    out.table("eta.csv", ETA_HEADER, &rows)
}

fn pc(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let mut rows = Vec::new();
    let mut perc = Vec::new();
    for shape in cfg.shapes()? {
        let est = estimate_pc(&shape, cfg.r(), cfg.trials, cfg.tol, cfg.master_seed)?;
        let plan = TrialPlan::new(shape, cfg.r(), 0.0, cfg.trials, cfg.master_seed)?;
        for probe in &est.probes {
            perc.push(perc_row(&plan, &probe.estimate, probe.p));
        }
        rows.push(vec![
            shape.d().to_string(),
            shape.n().to_string(),
            shape.boundary().to_string(),
            cfg.r().to_string(),
            cfg.trials.to_string(),
            cfg.tol.to_string(),
            est.pc.to_string(),
            est.bracket.0.to_string(),
            est.bracket.1.to_string(),
            est.probes.len().to_string(),
            cfg.master_seed.to_string(),
        ]);
    }
    out.table("pc.csv", PC_HEADER, &rows)?;
    out.table("perc.csv", PERC_HEADER, &perc)
}

/// Lower corner that centers the box in `[n]^d`.
fn centered_corner(shape: &LatticeShape, t: usize, axis: usize) -> Site {
    let n = shape.n() as i64;
    Site::new(
        (0..shape.d())
            .map(|i| {
                let len = if i == axis { 2 * t as i64 + 1 } else { 2 };
                ((n - len) / 2).max(0) + 1
            })
            .collect::<Vec<_>>(),
    )
}

fn internal_fault(out: &Output, cfg: &ExperimentConfig, tag: &str, a0: &SiteSet, msg: String) -> RunError {
    let config = toml::to_string(cfg).unwrap_or_default();
    let archived = out
        .archive(&format!("{tag}.config.toml"), &config)
        .and_then(|_| out.archive(&format!("{tag}.siteset"), &site_set_to_hex(a0)));
    match archived {
        Ok(path) => RunError::Internal(format!("{msg} (reproduction archived next to {})", path.display())),
        Err(e) => e,
    }
}

fn certify(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let r = cfg.r();
    let axis = cfg.axis - 1;
    let mut rows = Vec::new();
    for shape in cfg.shapes()? {
        let params = ProcessParams::new(shape, r)?;
        for t in cfg.ts()? {
            let corner = match &cfg.position {
                Some(pos) => Site::new(pos.clone()),
                None => centered_corner(&shape, t, axis),
            };
            let tag = format!("d{}_n{}_t{t}", shape.d(), shape.n());
            let a0 = plant_rectangle(&shape, r, t, &corner, axis)?;
            let Some(cert) = find_empty_rectangle(&a0, t) else {
                let msg = format!("planted box at {corner} was not found");
                return Err(internal_fault(out, cfg, &format!("rectangle_{tag}"), &a0, msg));
            };
            let verified = verify_lower_certificate(&a0, &params, &cert)?;
            let time = percolation_time(&a0, &params)?;
            if !verified {
                let msg = format!("certificate {} failed: T={}", cert.region, never_or(time));
                return Err(internal_fault(out, cfg, &format!("rectangle_{tag}"), &a0, msg));
            }
            rows.push(cert_row("rectangle", &shape, r, t, cert.region.to_string(), verified, time));

            let center = shape_center(&shape);
            let a0 = p_set(shape.d(), r, t, &center, &shape)?.complement();
            let verified = verify_extremal(shape.d(), r, t, &shape)?;
            let time = percolation_time(&a0, &params)?;
            if !verified {
                let msg = format!("center {center} infected by round {t} with P emptied");
                return Err(internal_fault(out, cfg, &format!("extremal_{tag}"), &a0, msg));
            }
            rows.push(cert_row("extremal", &shape, r, t, center.to_string(), verified, time));
        }
    }
    out.table("certificates.csv", CERT_HEADER, &rows)
}

fn cert_row(
    kind: &str,
    shape: &LatticeShape,
    r: usize,
    t: usize,
    region: String,
    verified: bool,
    time: Option<u32>,
) -> Vec<String> {
    vec![
        kind.into(),
        shape.d().to_string(),
        shape.n().to_string(),
        shape.boundary().to_string(),
        r.to_string(),
        t.to_string(),
        region,
        verified.to_string(),
        never_or(time),
    ]
}

fn audit(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let mut rows = Vec::new();
    let mut found = Vec::new();
    for m in cfg.ms()? {
        for p in cfg.ps()? {
            let outcome = audit_lemma_ab(m, p, cfg.trials, cfg.master_seed)?;
            for row in &outcome.rows {
                rows.push(vec![
                    m.to_string(),
                    p.to_string(),
                    row.trial_seed.to_string(),
                    row.a.to_string(),
                    row.b.to_string(),
                    row.e.to_string(),
                    row.is_counterexample().to_string(),
                ]);
            }
            for (trial, a0) in &outcome.counterexamples {
                let seed = derive_seed(cfg.master_seed, *trial as u64);
                let path = out.archive(&format!("counterexample_m{m}_p{p}_seed{seed}.siteset"), &site_set_to_hex(a0))?;
                found.push(path);
            }
        }
    }
    out.table("audit.csv", AUDIT_HEADER, &rows)?;
    if found.is_empty() {
        Ok(())
    } else {
        let config = toml::to_string(cfg).unwrap_or_default();
        out.archive("audit.config.toml", &config)?;
        Err(RunError::Internal(format!(
            "{} configurations with A and B but not E, archived under {}",
            found.len(),
            out.dir().join("archive").display()
        )))
    }
}

fn oracle(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let r = cfg.r();
    let ps = cfg.ps()?;
    let mut rows = Vec::new();
    for shape in cfg.shapes()? {
        let poly = exact_percolation_polynomial(&shape, r)?;
        let max_time = exact_max_percolation_time(&shape, r)?;
        let name = format!("polynomial_d{}_n{}_{}_r{r}.csv", shape.d(), shape.n(), shape.boundary());
        out.raw_table(&name, poly.counts.len(), |f| poly.write_csv(f))?;
        for &p in &ps {
            rows.push(vec![
                shape.d().to_string(),
                shape.n().to_string(),
                shape.boundary().to_string(),
                r.to_string(),
                p.to_string(),
                poly.eval(p).to_string(),
                max_time.to_string(),
            ]);
        }
    }
    out.table("oracle.csv", ORACLE_HEADER, &rows)?;
    if let Some(ms) = &cfg.m {
        let mut eta_rows = Vec::new();
        for m in ms.to_vec() {
            let counts = bad_counts(m, cfg.d)?;
            for &p in &ps {
                eta_rows.push(vec![
                    m.to_string(),
                    cfg.d.to_string(),
                    p.to_string(),
                    eta_from_bad_counts(&counts, p).to_string(),
                ]);
            }
        }
        out.table("eta_exact.csv", &["m", "d", "p", "eta_exact"], &eta_rows)?;
    }
    Ok(())
}

fn path(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let r = cfg.r();
    let ts = cfg.ts()?;
    let mut rows = Vec::new();
    for shape in cfg.shapes()? {
        let params = ProcessParams::new(shape, r)?;
        for p in cfg.ps()? {
            for trial in 0..cfg.trials {
                let seed = derive_seed(cfg.master_seed, trial as u64);
                let a0 = bernoulli_field(&shape, p, seed)?;
                let schedule = evolve_until_fixation(&a0, &params)?;
                for &t in &ts {
                    let Some(x) = (0..shape.volume())
                        .find(|&i| schedule.time(i).is_none_or(|s| s > t as u32))
                        .map(|i| shape.site_of(i))
                    else {
                        continue;
                    };
                    let steps = match extract_staircase(&a0, &x, t, &params) {
                        Ok(steps) => steps,
                        Err(bootperc::Error::Internal(msg)) => {
                            let tag = format!("path_n{}_trial{trial}_t{t}", shape.n());
                            return Err(internal_fault(out, cfg, &tag, &a0, msg));
                        }
                        Err(e) => return Err(e.into()),
                    };
                    let joined: Vec<String> = steps.iter().map(Site::to_string).collect();
                    rows.push(vec![
                        shape.d().to_string(),
                        shape.n().to_string(),
                        p.to_string(),
                        trial.to_string(),
                        seed.to_string(),
                        t.to_string(),
                        x.to_string(),
                        joined.join(" "),
                    ]);
                }
            }
        }
    }
    out.table("paths.csv", PATHS_HEADER, &rows)
}

/// Inputs of one bounds row; absent fields print as empty cells.
#[derive(Default, Clone, Copy)]
struct BoundInputs {
    n: Option<usize>,
    p: Option<f64>,
    t: Option<usize>,
    t_prime: Option<u64>,
    m: Option<usize>,
    delta: Option<f64>,
    lambda: Option<f64>,
    p0: Option<f64>,
    c: Option<f64>,
    b: Option<f64>,
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn bound_row(cfg: &ExperimentConfig, name: &str, i: BoundInputs, value: f64, probability: bool) -> Vec<String> {
    let clamped = if probability {
        value.clamp(0.0, 1.0)
    } else if value.is_finite() {
        value
    } else {
        f64::MAX
    };
    vec![
        name.into(),
        cfg.d.to_string(),
        cfg.r().to_string(),
        cell(i.n),
        cell(i.p),
        cell(i.t),
        cell(i.t_prime),
        cell(i.m),
        cell(i.delta),
        cell(i.lambda),
        cell(i.p0),
        cell(i.c),
        cell(i.b),
        value.to_string(),
        clamped.to_string(),
        (!value.is_finite()).to_string(),
    ]
}

fn bounds_table(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let d = cfg.d;
    let k = &cfg.constants;
    let ns = cfg.ns()?;
    let ps = cfg.ps()?;
    let ts = cfg.ts()?;
    let ms = cfg.m.as_ref().map(|m| m.to_vec()).unwrap_or_default();
    let tp = cfg.t_prime;
    let mut rows = Vec::new();
    for &t in &ts {
        let i = BoundInputs { t: Some(t), ..Default::default() };
        rows.push(bound_row(cfg, "p_count", i, bounds::p_count(d, cfg.r(), t) as f64, false));
    }
    for &p in &ps {
        let kp = BoundInputs {
            p: Some(p),
            lambda: Some(k.lambda),
            p0: Some(k.p0),
            ..Default::default()
        };
        rows.push(bound_row(cfg, "k_of_p", kp, bounds::k_of_p(p, d, k.lambda, k.p0), false));
        let lp = BoundInputs { delta: Some(k.delta), ..kp };
        rows.push(bound_row(cfg, "l_threshold", lp, bounds::l_threshold(p, k.delta, d, k.lambda, k.p0), false));
        rows.push(bound_row(
            cfg,
            "l_threshold_proof_form",
            lp,
            bounds::l_threshold_proof_form(p, k.delta, d, k.lambda, k.p0),
            false,
        ));
        for &m in &ms {
            let i = BoundInputs { p: Some(p), m: Some(m), b: Some(k.b), ..Default::default() };
            rows.push(bound_row(cfg, "eta_upper_bound", i, bounds::eta_upper_bound(m, d, p, k.b), true));
            rows.push(bound_row(cfg, "g_of_p", i, bounds::g_of_p(m, d, p, k.b), false));
        }
        for &t in &ts {
            let i = BoundInputs {
                p: Some(p),
                t: Some(t),
                t_prime: Some(tp),
                c: Some(k.c),
                ..Default::default()
            };
            rows.push(bound_row(cfg, "origin_tail_bound", i, bounds::origin_tail_bound(t as u64, tp, p, k.c), true));
        }
        for &n in &ns {
            let i = BoundInputs { n: Some(n), p: Some(p), ..Default::default() };
            let thr = bounds::lower_time_threshold(n, d, p).map_or(f64::INFINITY, |v| v as f64);
            rows.push(bound_row(cfg, "lower_time_threshold", i, thr, false));
            for &t in &ts {
                let i = BoundInputs { t: Some(t), ..i };
                rows.push(bound_row(cfg, "lower_tail_bound", i, bounds::lower_tail_bound(n, d, p, t), true));
                let i = BoundInputs { t_prime: Some(tp), ..i };
                rows.push(bound_row(
                    cfg,
                    "upper_tail_bound",
                    i,
                    bounds::upper_tail_bound(n, d, p, t as u64, tp),
                    true,
                ));
            }
        }
    }
    out.table("bounds.csv", BOUNDS_HEADER, &rows)
}
