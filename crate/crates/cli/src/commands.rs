use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use htq_core::limit_theory::closed_form_residual;
use htq_core::transform_lab::{
    arrival_variances, boundary_trend, identity_checks, residual_system_at, PerpKind,
};
use htq_core::{
    compare_to_limit, empirical_residual, random_frequencies, ssc_report, Boundary, Complex64,
    Frequency, FrequencyDomain, LimitLaw, MExponent, RngStream, StationaryEnsemble,
};
use serde::Serialize;

use crate::config::{parse_count, ConfigError, Experiment, SystemParams};
use crate::report::{EnsembleRef, Report, Row, Status};
use crate::svg::{line_chart, Series};

/// Stream id for the limit-law draws of a run; replicas use `0..replicas`.
const LIMIT_STREAM: u64 = 1 << 32;
const CLOSED_FORM_TOL: f64 = 1e-12;

pub fn domain(params: &SystemParams) -> FrequencyDomain {
    match params {
        SystemParams::Switch { n, .. } => FrequencyDomain::Switch { n: *n },
        SystemParams::ThreeQ { .. } => FrequencyDomain::ThreeQueue,
        SystemParams::NSys { .. } => FrequencyDomain::NSystem,
    }
}

/// Reads a JSON grid (array of frequencies, each an array of `[re, im]`) or
/// draws a random admissible one.
pub fn frequency_grid(exp: &Experiment) -> Result<Vec<Frequency>, ConfigError> {
    let dom = domain(&exp.params);
    let Some(path) = &exp.grid else {
        let mut rng = RngStream::new(exp.grid_seed, 0).rng();
        return Ok(random_frequencies(dom, exp.grid_points, &mut rng));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read grid {}: {e}", path.display())))?;
    let raw: Vec<Vec<[f64; 2]>> = serde_json::from_str(&text)
        .map_err(|e| ConfigError(format!("grid {}: {e}", path.display())))?;
    if raw.is_empty() {
        return Err(ConfigError(format!("grid {} is empty", path.display())));
    }
    raw.into_iter()
        .enumerate()
        .map(|(i, pts)| {
            let phi = pts.iter().map(|p| Complex64::new(p[0], p[1])).collect();
            Frequency::new(dom, phi).map_err(|e| ConfigError(format!("grid point {i}: {e}")))
        })
        .collect()
}

fn write_svg(path: &Path, svg: &str) -> anyhow::Result<()> {
    std::fs::write(path, svg).with_context(|| format!("writing {}", path.display()))
}

pub fn simulate(exp: &Experiment) -> anyhow::Result<bool> {
    for &eps in &exp.eps {
        for &seed in &exp.seeds {
            let e = exp.simulate(eps, seed)?;
            let (csv, _) = e.save(&exp.out_dir, &exp.stem(eps, seed))?;
            println!("{} rows={} hash={}", csv.display(), e.len(), e.meta.hash());
        }
    }
    Ok(true)
}

/// The limit law matching the configured system, if its hypotheses allow one.
fn limit_law(exp: &Experiment, e: &StationaryEnsemble) -> Option<LimitLaw> {
    match &exp.params {
        SystemParams::Switch { n, .. } => {
            let v = arrival_variances(e, exp.variance_at);
            let first = v[0];
            v.iter()
                .all(|&x| (x - first).abs() <= 1e-12)
                .then(|| LimitLaw::switch_symmetric(*n, first).ok())
                .flatten()
        }
        SystemParams::ThreeQ { .. } => {
            let v = arrival_variances(e, exp.variance_at);
            LimitLaw::three_queue([v[0], v[1], v[2]]).ok()
        }
        SystemParams::NSys {
            mu,
            gamma,
            boundary,
            ..
        } => LimitLaw::nsys(*boundary, *gamma, *mu).ok(),
    }
}

fn closed_form_row(
    exp: &Experiment,
    e: &StationaryEnsemble,
    grid: &[Frequency],
    eps: f64,
) -> anyhow::Result<Row> {
    let sys = residual_system_at(e, exp.variance_at)?;
    let applicable = match &exp.params {
        SystemParams::NSys { boundary, .. } => *boundary == Boundary::F3,
        _ => true,
    } && limit_law(exp, e).is_some_and(|l| l.hypothesis_holds());
    let worst = grid
        .iter()
        .map(|f| closed_form_residual(&sys, f).map(|r| r.norm()))
        .collect::<Result<Vec<_>, _>>();
    let id = "closed-form-functional-equation-max-residual";
    Ok(match (applicable, worst) {
        (true, Ok(w)) => {
            let w = w.into_iter().fold(0.0, f64::max);
            Row {
                id: id.into(),
                eps: Some(eps),
                seed: None,
                estimate: w,
                target: Some(0.0),
                std_error: None,
                z: None,
                tol: Some(CLOSED_FORM_TOL),
                status: if w < CLOSED_FORM_TOL {
                    Status::Pass
                } else {
                    Status::Fail
                },
            }
        }
        _ => Row::info(format!("{id}-not-applicable"), eps, None, f64::NAN, None),
    })
}

fn residual_rows(
    exp: &Experiment,
    e: &StationaryEnsemble,
    grid: &[Frequency],
    eps: f64,
    seed: u64,
) -> anyhow::Result<Vec<(usize, htq_core::transform_lab::ResidualEstimate)>> {
    let sys = residual_system_at(e, exp.variance_at)?;
    grid.iter()
        .enumerate()
        .map(|(i, f)| Ok((i, empirical_residual(e, f, eps, &sys, MExponent::Standard)?)))
        .collect::<anyhow::Result<Vec<_>>>()
        .with_context(|| format!("residuals at eps={eps}, seed={seed}"))
}

fn perp_name(k: PerpKind) -> &'static str {
    match k {
        PerpKind::Subspace => "subspace",
        PerpKind::Cone => "cone",
    }
}

pub fn verify(exp: &Experiment) -> anyhow::Result<bool> {
    let grid = frequency_grid(exp)?;
    let mut report = Report {
        command: "verify".into(),
        system: exp.system.as_str().into(),
        ensembles: Vec::new(),
        rows: Vec::new(),
    };
    let mut by_seed: Vec<Vec<StationaryEnsemble>> = vec![Vec::new(); exp.seeds.len()];
    let mut resid_series: Vec<Series> = (0..grid.len())
        .map(|i| Series {
            label: format!("point {i}"),
            points: Vec::new(),
        })
        .collect();
    let mut ssc_series = vec![Series {
        label: "E|q_perp|^2".into(),
        points: Vec::new(),
    }];
    for &eps in &exp.eps {
        let mut closed_done = false;
        for (si, &seed) in exp.seeds.iter().enumerate() {
            let e = exp.simulate(eps, seed)?;
            report.ensembles.push(EnsembleRef {
                eps,
                seed,
                n_samples: e.len(),
                hash: e.meta.hash(),
            });
            if !closed_done {
                report.rows.push(closed_form_row(exp, &e, &grid, eps)?);
                closed_done = true;
            }
            for c in identity_checks(&e)? {
                report.rows.push(Row::from_check(&c, Some(eps), Some(seed)));
            }
            let ssc = ssc_report(&e)?;
            for m in &ssc.rows {
                report.rows.push(Row::info(
                    format!("ssc-{}-moment-{}", perp_name(m.kind), m.order),
                    eps,
                    Some(seed),
                    m.value,
                    Some(m.std_error),
                ));
            }
            report.rows.push(Row::info(
                "ssc-mean-squared-norm",
                eps,
                Some(seed),
                ssc.mean_sq_norm.mean,
                Some(ssc.mean_sq_norm.se),
            ));
            if si == 0 {
                if let Some(m) = ssc.moment(ssc.primary_kind(), 2) {
                    ssc_series[0].points.push((eps, m.value));
                }
            }
            for (i, r) in residual_rows(exp, &e, &grid, eps, seed)? {
                report.rows.push(Row::info(
                    format!("functional-equation-residual-point-{i}"),
                    eps,
                    Some(seed),
                    r.value.norm(),
                    Some(r.std_error),
                ));
                if si == 0 {
                    resid_series[i].points.push((eps, r.value.norm()));
                }
            }
            if exp.compare_limit {
                if let Some(law) = limit_law(exp, &e) {
                    let mut rng = RngStream::new(seed, LIMIT_STREAM).rng();
                    let d = compare_to_limit(&e, eps, &law, exp.limit_samples, &mut rng)?;
                    for m in d.marginals.iter().chain(std::iter::once(&d.sum)) {
                        report.rows.push(Row::info(
                            format!("limit-ks-{}", m.label),
                            eps,
                            Some(seed),
                            m.ks,
                            None,
                        ));
                        report.rows.push(Row::info(
                            format!("limit-wasserstein1-{}", m.label),
                            eps,
                            Some(seed),
                            m.wasserstein1,
                            None,
                        ));
                        report.rows.push(Row {
                            target: Some(m.mean_law),
                            ..Row::info(
                                format!("limit-mean-{}", m.label),
                                eps,
                                Some(seed),
                                m.mean_ensemble,
                                None,
                            )
                        });
                    }
                }
            }
            by_seed[si].push(e);
        }
    }
    if matches!(exp.params, SystemParams::NSys { .. }) && exp.eps.len() >= 2 {
        for (si, ens) in by_seed.iter().enumerate() {
            let refs: Vec<&StationaryEnsemble> = ens.iter().collect();
            let c = boundary_trend(&refs)?;
            report
                .rows
                .push(Row::from_check(&c, None, Some(exp.seeds[si])));
        }
    }
    report.print();
    let stem = format!("verify_{}", exp.system.as_str());
    let (json, csv) = report.write(&exp.out_dir, &stem)?;
    println!("wrote {} and {}", json.display(), csv.display());
    if exp.svg {
        let sys = exp.system.as_str();
        write_svg(
            &exp.out_dir.join(format!("{stem}_residual.svg")),
            &line_chart(
                &format!("{sys}: |functional-equation residual|"),
                "ε",
                "|R|",
                &resid_series,
            ),
        )?;
        write_svg(
            &exp.out_dir.join(format!("{stem}_ssc.svg")),
            &line_chart(
                &format!("{sys}: collapse moment"),
                "ε",
                "E|q_perp|^2",
                &ssc_series,
            ),
        )?;
    }
    let fails = report.failures();
    if fails > 0 {
        eprintln!("{fails} check(s) failed");
    }
    Ok(fails == 0)
}

#[derive(Serialize)]
struct ResidualRecord {
    eps: f64,
    seed: u64,
    point: usize,
    re: f64,
    im: f64,
    abs: f64,
    std_error: f64,
    band: f64,
}

pub fn residual_grid(exp: &Experiment) -> anyhow::Result<bool> {
    let grid = frequency_grid(exp)?;
    std::fs::create_dir_all(&exp.out_dir)?;
    let stem = format!("residual_grid_{}", exp.system.as_str());
    let path = exp.out_dir.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
    let mut series: Vec<Series> = (0..grid.len())
        .map(|i| Series {
            label: format!("point {i}"),
            points: Vec::new(),
        })
        .collect();
    let mut table: Vec<Vec<(f64, f64)>> = vec![Vec::new(); grid.len()];
    for &eps in &exp.eps {
        for (si, &seed) in exp.seeds.iter().enumerate() {
            let e = exp.simulate(eps, seed)?;
            for (i, r) in residual_rows(exp, &e, &grid, eps, seed)? {
                w.serialize(ResidualRecord {
                    eps,
                    seed,
                    point: i,
                    re: r.value.re,
                    im: r.value.im,
                    abs: r.value.norm(),
                    std_error: r.std_error,
                    band: r.band,
                })?;
                if si == 0 {
                    series[i].points.push((eps, r.value.norm()));
                    table[i].push((r.value.norm(), r.band));
                }
            }
        }
    }
    w.flush()?;
    // Points whose |R| falls, within the combined bands, at every step of the
    // ε list (as given, largest ε first for a shrinking sweep).
    let falling = table
        .iter()
        .filter(|pts| {
            pts.windows(2)
                .all(|p| p[1].0 <= p[0].0 + p[0].1.hypot(p[1].1))
        })
        .count();
    println!(
        "{}: |R| non-increasing within bands at {falling}/{} points",
        path.display(),
        grid.len()
    );
    if exp.svg {
        write_svg(
            &exp.out_dir.join(format!("{stem}.svg")),
            &line_chart(
                &format!("{}: |functional-equation residual|", exp.system.as_str()),
                "ε",
                "|R|",
                &series,
            ),
        )?;
    }
    Ok(true)
}

#[derive(Serialize)]
struct SscRecord {
    eps: f64,
    seed: u64,
    quantity: String,
    order: u32,
    value: f64,
    std_error: f64,
}

pub fn ssc_scan(exp: &Experiment) -> anyhow::Result<bool> {
    std::fs::create_dir_all(&exp.out_dir)?;
    let stem = format!("ssc_{}", exp.system.as_str());
    let path = exp.out_dir.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
    let mut perp = Vec::new();
    let mut norm = Vec::new();
    for &eps in &exp.eps {
        for (si, &seed) in exp.seeds.iter().enumerate() {
            let e = exp.simulate(eps, seed)?;
            let r = ssc_report(&e)?;
            for m in &r.rows {
                w.serialize(SscRecord {
                    eps,
                    seed,
                    quantity: format!("perp-{}", perp_name(m.kind)),
                    order: m.order,
                    value: m.value,
                    std_error: m.std_error,
                })?;
            }
            w.serialize(SscRecord {
                eps,
                seed,
                quantity: "norm".into(),
                order: 2,
                value: r.mean_sq_norm.mean,
                std_error: r.mean_sq_norm.se,
            })?;
            if si == 0 {
                if let Some(m) = r.moment(r.primary_kind(), 2) {
                    perp.push((eps, m.value));
                }
                norm.push((eps, r.mean_sq_norm.mean));
            }
        }
    }
    w.flush()?;
    let spread = |v: &[(f64, f64)]| {
        let hi = v.iter().map(|p| p.1).fold(f64::MIN, f64::max);
        let lo = v.iter().map(|p| p.1).fold(f64::MAX, f64::min);
        hi / lo
    };
    println!(
        "{}: E|q_perp|^2 max/min = {:.3}, E|q|^2 max/min = {:.3}",
        path.display(),
        spread(&perp),
        spread(&norm)
    );
    if exp.svg {
        let sys = exp.system.as_str();
        write_svg(
            &exp.out_dir.join(format!("{stem}_perp.svg")),
            &line_chart(
                &format!("{sys}: collapse moment"),
                "ε",
                "E|q_perp|^2",
                &[Series {
                    label: "E|q_perp|^2".into(),
                    points: perp,
                }],
            ),
        )?;
        write_svg(
            &exp.out_dir.join(format!("{stem}_norm.svg")),
            &line_chart(
                &format!("{sys}: queue size"),
                "ε",
                "E|q|^2",
                &[Series {
                    label: "E|q|^2".into(),
                    points: norm,
                }],
            ),
        )?;
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LawName {
    Switch,
    Threeq,
    NsysF1,
    NsysF2,
    NsysF3,
}

#[derive(Clone, Debug, Args)]
pub struct LimitArgs {
    #[arg(long, value_enum)]
    pub law: LawName,
    /// Switch size.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Arrival variance: one value (switch) or `s1,s2,s3` (three-queue).
    #[arg(long)]
    pub sigma2: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// N-system service rates, used for the F3 hypothesis flag.
    #[arg(long, default_value = "1,1")]
    pub mu: String,
    #[arg(long, default_value = "1e6")]
    pub samples: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output CSV file.
    #[arg(long, short)]
    pub out: PathBuf,
}

fn floats(s: &str, field: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| ConfigError(format!("`{field}`: cannot parse {p:?}")))
        })
        .collect()
}

pub fn build_law(a: &LimitArgs) -> Result<LimitLaw, ConfigError> {
    let need_sigma = || {
        a.sigma2
            .as_deref()
            .ok_or_else(|| ConfigError("missing required field `sigma2`".into()))
    };
    let mu = floats(&a.mu, "mu")?;
    let mu: [f64; 2] = mu
        .try_into()
        .map_err(|_| ConfigError("`mu` needs 2 values".into()))?;
    let law = match a.law {
        LawName::Switch => {
            let s = floats(need_sigma()?, "sigma2")?;
            if s.len() != 1 {
                return Err(ConfigError(
                    "`sigma2` for the switch law is a single value".into(),
                ));
            }
            LimitLaw::switch_symmetric(a.n, s[0])
        }
        LawName::Threeq => {
            let s: [f64; 3] = floats(need_sigma()?, "sigma2")?.try_into().map_err(|_| {
                ConfigError("`sigma2` for the three-queue law needs 3 values".into())
            })?;
            LimitLaw::three_queue(s)
        }
        LawName::NsysF1 => LimitLaw::nsys(Boundary::F1, a.gamma, mu),
        LawName::NsysF2 => LimitLaw::nsys(Boundary::F2, a.gamma, mu),
        LawName::NsysF3 => LimitLaw::nsys(Boundary::F3, a.gamma, mu),
    };
    law.map_err(|e| ConfigError(e.to_string()))
}

pub fn limit_sample(a: &LimitArgs) -> anyhow::Result<bool> {
    let law = build_law(a)?;
    let n = parse_count(&a.samples, "samples")?;
    if !law.hypothesis_holds() {
        eprintln!("warning: the law's hypothesis does not hold for these parameters");
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(
        File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?,
    ));
    let dim = law.dim();
    w.write_record((1..=dim).map(|i| format!("x{i}")))?;
    let mut rng = RngStream::new(a.seed, 0).rng();
    let mut x = vec![0.0; dim];
    for _ in 0..n {
        law.sample_into(&mut rng, &mut x);
        w.write_record(x.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    println!(
        "{} rows={n} law={}",
        a.out.display(),
        serde_json::to_string(&law)?
    );
    Ok(true)
}
