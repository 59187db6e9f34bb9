//! Command runners: each consumes a validated manifest, writes its artifact
//! files into a per-manifest directory under `--out`, and returns the list
//! of declared checks.

use crate::manifest::{
    build_flux, CounterexampleManifest, DegeneracyManifest, F0Spec, InitialSpec, NdlocManifest,
    SolveManifest, TransportManifest,
};
use conslaw::degeneracy::{classical_nondegeneracy_check, degeneracy_report, solve_time_horizon};
use conslaw::kinetic::{check_defect_bounds, equilibrium_field, KineticField, KineticGrid};
use conslaw::longtime::{
    band_constants, band_control_check, decay_report, normalize_nonnegative,
    stationary_shear_residual, BandParams,
};
use conslaw::solver::{evolve, NumericalFlux, SchemeConfig};
use conslaw::torus::{lp_norm, mean, Interval, ScalarField, TorusGrid};
use conslaw::transport::{homogenization_experiment, HOMOGENIZATION_SLACK};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub enum CliError {
    /// Malformed input: exit code 2.
    BadInput(String),
    /// Filesystem trouble: exit code 2.
    Io(String),
    /// The experiment itself failed to run: exit code 1.
    Run(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        pass,
        detail,
    }
}

/// FNV-1a over the manifest bytes; one artifact directory per manifest.
pub fn manifest_hash(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{:016x}", hash)
}

pub struct RunOutput {
    pub dir: PathBuf,
    pub checks: Vec<CheckResult>,
}

fn prepare_dir(out: &Path, manifest_bytes: &[u8]) -> Result<PathBuf, CliError> {
    let dir = out.join(manifest_hash(manifest_bytes));
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("manifest.json"), manifest_bytes)?;
    Ok(dir)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let mut f = fs::File::create(dir.join(name))?;
    f.write_all(contents.as_bytes())?;
    if !contents.ends_with('\n') {
        f.write_all(b"\n")?;
    }
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Run(format!("serialization: {}", e)))?;
    write_file(dir, name, &body)
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    flux: Option<String>,
    checks: &'a [CheckResult],
}

fn write_summary(
    dir: &Path,
    command: &str,
    flux: Option<String>,
    checks: &[CheckResult],
) -> Result<(), CliError> {
    write_json(
        dir,
        "summary.json",
        &Summary {
            command,
            flux,
            checks,
        },
    )
}

fn initial_field(
    m: &SolveManifest,
    grid: TorusGrid,
) -> Result<ScalarField, CliError> {
    let spec = m.initial.clone().unwrap_or(InitialSpec::Sine {
        mean: 0.5,
        amplitude: 0.3,
        cycles: 1,
    });
    let field = match spec {
        InitialSpec::Sine {
            mean,
            amplitude,
            cycles,
        } => {
            let w = 2.0 * std::f64::consts::PI * cycles as f64;
            if grid.dim() == 1 {
                ScalarField::from_fn(grid, |[x, _]| mean + amplitude * (w * x).sin())
            } else {
                ScalarField::from_fn(grid, |[x, y]| mean + amplitude * (w * (x + y)).sin())
            }
        }
        InitialSpec::Random { lo, hi } => {
            if !(lo < hi) {
                return Err(CliError::BadInput(
                    "manifest key `initial`: random range needs lo < hi".into(),
                ));
            }
            let mut rng = StdRng::seed_from_u64(m.seed.unwrap_or(0));
            let values = (0..grid.cell_count())
                .map(|_| rng.gen_range(lo..hi))
                .collect();
            ScalarField::from_values(grid, values)
        }
        InitialSpec::Shock { left, right } => {
            ScalarField::from_fn(grid, |[x, _]| if x < 0.5 { left } else { right })
        }
        InitialSpec::Shear {
            mean,
            amplitude,
            p,
            q,
        } => {
            if grid.dim() != 2 {
                return Err(CliError::BadInput(
                    "manifest key `initial`: shear profiles need dim = 2".into(),
                ));
            }
            let w = 2.0 * std::f64::consts::PI;
            ScalarField::from_fn(grid, |[x, y]| {
                mean + amplitude * (w * (q as f64 * y - p as f64 * x)).sin()
            })
        }
    };
    field.map_err(|e| CliError::BadInput(format!("manifest key `initial`: {}", e)))
}

pub fn run_solve(m: &SolveManifest, out: &Path, bytes: &[u8]) -> Result<RunOutput, CliError> {
    let dir = prepare_dir(out, bytes)?;
    let flux = build_flux(&m.flux, m.alpha, m.c.as_deref(), m.dim)
        .map_err(|e| CliError::BadInput(e.to_string()))?;
    let grid = TorusGrid::new(m.dim, m.n).map_err(|e| CliError::BadInput(e.to_string()))?;
    let u0 = initial_field(m, grid)?;
    let scheme = match m.numerical_flux.as_deref() {
        Some("engquist_osher") => NumericalFlux::EngquistOsher,
        _ => NumericalFlux::Godunov,
    };
    let cfg = SchemeConfig::new(m.cfl, m.t_end, m.output_every.unwrap_or(64), scheme)
        .map_err(|e| CliError::BadInput(e.to_string()))?;
    let kgrid = KineticGrid::covering(&u0, m.xi_bins.unwrap_or(64))
        .map_err(|e| CliError::BadInput(e.to_string()))?;

    let (series, defect) =
        evolve(&u0, &flux, &cfg, kgrid).map_err(|e| CliError::Run(e.to_string()))?;
    let decay = decay_report(&series).map_err(|e| CliError::Run(e.to_string()))?;
    let bounds = check_defect_bounds(&defect, &u0).map_err(|e| CliError::Run(e.to_string()))?;

    let mut buf = Vec::new();
    u0.write_csv(&mut buf)?;
    write_file(&dir, "u0.csv", std::str::from_utf8(&buf).unwrap())?;
    buf.clear();
    series
        .snapshots
        .last()
        .expect("series has a final state")
        .write_csv(&mut buf)?;
    write_file(&dir, "u_final.csv", std::str::from_utf8(&buf).unwrap())?;
    buf.clear();
    series.write_scalars_csv(&mut buf)?;
    write_file(&dir, "series.csv", std::str::from_utf8(&buf).unwrap())?;
    buf.clear();
    defect.write_marginal_csv(&mut buf)?;
    write_file(&dir, "pi_marginal.csv", std::str::from_utf8(&buf).unwrap())?;
    write_file(&dir, "defect.json", &bounds.summary_json())?;
    write_json(&dir, "decay.json", &decay)?;

    let mut checks = Vec::new();
    let mass_drift = series
        .scalars
        .iter()
        .map(|s| (s.mass - series.scalars[0].mass).abs())
        .fold(0.0f64, f64::max);
    checks.push(check(
        "mass_conservation",
        mass_drift <= 1e-11,
        format!("max |mass(t) - mass(0)| = {}", mass_drift),
    ));
    checks.push(check(
        "monotone_decay",
        decay.monotone_violation <= 1e-12,
        format!("max increase of |u - u_bar|_L1 = {}", decay.monotone_violation),
    ));
    checks.push(check(
        "defect_bounds",
        bounds.pointwise.holds && bounds.integral.holds && bounds.profile.holds,
        format!(
            "slacks: pointwise {}, integral {}, profile {}",
            bounds.pointwise.slack, bounds.integral.slack, bounds.profile.slack
        ),
    ));

    if let Some(h) = &m.t1_from_epsilon {
        let e = Interval::new(h.e[0], h.e[1]).map_err(|e| CliError::BadInput(e.to_string()))?;
        let u0_l1 = lp_norm(&u0, 1.0).map_err(|e| CliError::Run(e.to_string()))?;
        match solve_time_horizon(h.epsilon, e, &flux, u0_l1, h.n_max, h.q) {
            Ok(horizon) => {
                write_json(&dir, "t1.json", &horizon)?;
                checks.push(check(
                    "time_horizon",
                    true,
                    format!("T1 = {} with sup = {}", horizon.t1, horizon.sup_value_at_t1),
                ));
            }
            Err(e) => {
                checks.push(check("time_horizon", false, e.to_string()));
            }
        }
    }

    write_summary(&dir, "solve", Some(flux.label().to_string()), &checks)?;
    Ok(RunOutput { dir, checks })
}

pub fn run_degeneracy(
    m: &DegeneracyManifest,
    out: &Path,
    bytes: &[u8],
) -> Result<RunOutput, CliError> {
    let dir = prepare_dir(out, bytes)?;
    let dim = if m.flux == "iso_burgers2d" {
        2
    } else if m.flux == "linear" {
        m.c.as_ref().map(|c| c.len()).unwrap_or(1)
    } else {
        1
    };
    let flux = build_flux(&m.flux, m.alpha, m.c.as_deref(), dim)
        .map_err(|e| CliError::BadInput(e.to_string()))?;
    let e = Interval::new(m.e[0], m.e[1]).map_err(|e| CliError::BadInput(e.to_string()))?;
    let report =
        degeneracy_report(m.t, e, &flux, m.n_max, m.q).map_err(|e| CliError::Run(e.to_string()))?;
    let classical = classical_nondegeneracy_check(e, &flux, m.q);
    write_file(&dir, "degeneracy.json", &report.to_json())?;

    #[derive(Serialize)]
    struct Verdict<'a> {
        verdict: &'a str,
        classical_nondegenerate: bool,
        sup_value: f64,
        band_length: f64,
    }
    write_json(
        &dir,
        "verdict.json",
        &Verdict {
            verdict: if classical { "non-degenerate" } else { "degenerate" },
            classical_nondegenerate: classical,
            sup_value: report.sup_value,
            band_length: e.length(),
        },
    )?;

    let in_range = report
        .modes
        .iter()
        .all(|mv| mv.value >= 0.0 && mv.value <= e.length() + 1e-12);
    let sup_is_max = report
        .modes
        .iter()
        .map(|mv| mv.value)
        .fold(0.0f64, f64::max)
        == report.sup_value;
    let checks = vec![check(
        "report_invariants",
        in_range && sup_is_max,
        format!("sup_value = {}", report.sup_value),
    )];
    write_summary(&dir, "degeneracy", Some(flux.label().to_string()), &checks)?;
    Ok(RunOutput { dir, checks })
}

pub fn run_transport(
    m: &TransportManifest,
    out: &Path,
    bytes: &[u8],
) -> Result<RunOutput, CliError> {
    let dir = prepare_dir(out, bytes)?;
    let flux = build_flux(&m.flux, m.alpha, m.c.as_deref(), 1)
        .map_err(|e| CliError::BadInput(e.to_string()))?;
    let grid = TorusGrid::new(1, m.n).map_err(|e| CliError::BadInput(e.to_string()))?;
    let kgrid = KineticGrid::new(m.e[0], m.e[1], m.bins)
        .map_err(|e| CliError::BadInput(e.to_string()))?;
    let e = Interval::new(m.e[0], m.e[1]).map_err(|e| CliError::BadInput(e.to_string()))?;

    let f0 = match &m.f0 {
        F0Spec::Cosine => KineticField::from_fn(grid, kgrid, |[x, _], _| {
            (2.0 * std::f64::consts::PI * x).cos()
        }),
        F0Spec::Random => {
            let mut rng = StdRng::seed_from_u64(m.seed.unwrap_or(0));
            let values = (0..grid.cell_count() * kgrid.bins())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            KineticField::from_values(grid, kgrid, values)
        }
        F0Spec::EquilibriumSine { mean, amplitude } => {
            let u = ScalarField::from_fn(grid, |[x, _]| {
                mean + amplitude * (2.0 * std::f64::consts::PI * x).sin()
            })
            .map_err(|e| CliError::BadInput(format!("manifest key `f0`: {}", e)))?;
            equilibrium_field(&u, kgrid)
        }
    }
    .map_err(|e| CliError::BadInput(format!("manifest key `f0`: {}", e)))?;

    let report = homogenization_experiment(&f0, e, m.t, &flux, m.steps, m.n_max, m.q)
        .map_err(|e| CliError::Run(e.to_string()))?;
    write_file(&dir, "transport.json", &report.to_json())?;

    let checks = vec![check(
        "homogenization_inequality",
        report.holds,
        format!(
            "lhs = {}, rhs = {}, slack = {} (allowance {}, snap {}, bin velocity error {})",
            report.lhs,
            report.rhs,
            report.slack,
            HOMOGENIZATION_SLACK,
            report.snap_distance,
            report.bin_velocity_error
        ),
    )];
    write_summary(&dir, "transport", Some(flux.label().to_string()), &checks)?;
    Ok(RunOutput { dir, checks })
}

pub fn run_ndloc(m: &NdlocManifest, out: &Path, bytes: &[u8]) -> Result<RunOutput, CliError> {
    let dir = prepare_dir(out, bytes)?;
    let grid = TorusGrid::new(1, m.n).map_err(|e| CliError::BadInput(e.to_string()))?;
    let mut rng = StdRng::seed_from_u64(m.seed.unwrap_or(0));

    let mut pairs = 0usize;
    let mut violations = 0usize;
    let mut band_bound_violations = 0usize;
    let mut min_slack = f64::INFINITY;
    let mut max_kappa_residual = 0.0f64;
    let mut max_shift = 0.0f64;
    for _ in 0..m.n_fields {
        let raw = ScalarField::from_values(
            grid,
            (0..grid.cell_count())
                .map(|_| rng.gen_range(-0.5 * m.r..0.5 * m.r))
                .collect(),
        )
        .map_err(|e| CliError::Run(e.to_string()))?;
        // Fields are shifted to be non-negative before the band experiment;
        // the shift is recorded.
        let (v, shift) = normalize_nonnegative(&raw);
        max_shift = max_shift.max(shift.abs());
        let r = m.r;
        let v_bar = mean(&v);
        let zeta = v_bar + m.e_frac * (r - v_bar);
        let params = BandParams {
            e_len: zeta - v_bar,
            v_bar,
            r,
        };
        let consts = band_constants(&params).map_err(|e| CliError::Run(e.to_string()))?;
        max_kappa_residual = max_kappa_residual
            .max((consts.kappa * consts.kappa - (params.e_len - consts.kappa) * v_bar).abs());
        for k in 1..=m.n_deltas {
            let delta = consts.delta0 * k as f64 / (m.n_deltas + 1) as f64;
            let e = Interval::new(v_bar, zeta).map_err(|e| CliError::Run(e.to_string()))?;
            let rep =
                band_control_check(&v, e, delta, r).map_err(|e| CliError::Run(e.to_string()))?;
            pairs += 1;
            if !rep.holds {
                violations += 1;
            }
            min_slack = min_slack.min(rep.rhs - rep.lhs);
            if rep.band_mean > rep.band.length() - rep.constants.c + 1e-12 {
                band_bound_violations += 1;
            }
        }
    }

    #[derive(Serialize)]
    struct NdlocReport {
        pairs: usize,
        violations: usize,
        band_bound_violations: usize,
        min_slack: f64,
        max_kappa_residual: f64,
        max_recorded_shift: f64,
    }
    write_json(
        &dir,
        "ndloc.json",
        &NdlocReport {
            pairs,
            violations,
            band_bound_violations,
            min_slack,
            max_kappa_residual,
            max_recorded_shift: max_shift,
        },
    )?;

    let checks = vec![
        check(
            "band_inequality",
            violations == 0,
            format!("{} of {} pairs violated; min slack {}", violations, pairs, min_slack),
        ),
        check(
            "kappa_residual",
            max_kappa_residual <= 1e-13,
            format!("max residual {}", max_kappa_residual),
        ),
        check(
            "band_mean_bound",
            band_bound_violations == 0,
            format!("{} violations", band_bound_violations),
        ),
    ];
    write_summary(&dir, "ndloc", None, &checks)?;
    Ok(RunOutput { dir, checks })
}

pub fn run_counterexample(
    m: &CounterexampleManifest,
    out: &Path,
    bytes: &[u8],
) -> Result<RunOutput, CliError> {
    let dir = prepare_dir(out, bytes)?;
    let (mean, amplitude) = (m.mean, m.amplitude);
    let report = stationary_shear_residual(
        m.alpha,
        |s| mean + amplitude * (2.0 * std::f64::consts::PI * s).sin(),
        m.n,
        m.levels,
        m.q_max,
    )
    .map_err(|e| CliError::Run(e.to_string()))?;
    write_json(&dir, "counterexample.json", &report)?;

    let mut checks = vec![check(
        "spectral_identity",
        report.spectral_residual < 1e-10,
        format!("sup |u (u_x + alpha u_y)| = {}", report.spectral_residual),
    )];
    if m.levels >= 2 {
        let ok = report.ratios.iter().all(|r| *r >= 1.7);
        checks.push(check(
            "first_order_ratios",
            ok,
            format!("ratios {:?}", report.ratios),
        ));
    }
    write_summary(&dir, "counterexample", None, &checks)?;
    Ok(RunOutput { dir, checks })
}
