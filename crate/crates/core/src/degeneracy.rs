//! Quantified non-degeneracy analyzer for x-independent fluxes on the torus.
//!
//! On `T^d` with `a` independent of `x` the flows are translations, so the
//! degeneracy functional over zero-mean test functions reduces exactly to a
//! supremum over Fourier modes `n != 0`. Per mode the time-averaged
//! correlation of two translated waves has the closed form
//! `|sin(pi T s) / (pi T s)|` with `s = n . [a(xi) - a(zeta)]`, and the
//! functional becomes
//!
//! `value(n) = sup_{zeta in E} \int_E |sin(pi T s)/(pi T s)| dxi`.
//!
//! A flux is non-degenerate on `E` when the supremum over modes tends to 0
//! as the averaging window `T` grows. The linear flux keeps `value = |E|`
//! for every mode and window; Burgers decays like `log T / T`.

use crate::flux::FluxModel;
use crate::sum::ExactSum;
use crate::torus::Interval;
use crate::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

/// Minimum quadrature resolution accepted by the analyzer.
pub const MIN_QUADRATURE_POINTS: usize = 16;

/// `|sin(pi T s)/(pi T s)|` with `s = n . [a(xi) - a(zeta)]`, value 1 at
/// `s = 0`. Always lies in `[0, 1]`.
pub fn sinc_kernel(n: &[i64], xi: f64, zeta: f64, t: f64, flux: &FluxModel) -> f64 {
    let a_xi = flux.velocity(xi);
    let a_zeta = flux.velocity(zeta);
    let s = phase(n, &a_xi, &a_zeta, flux.dim());
    sinc_abs(t, s)
}

/// Kernel evaluation on a precomputed phase `s`. The branch at `|s| < 1e-14`
/// realizes the removable singularity below double-precision resolution.
#[inline]
pub(crate) fn sinc_abs(t: f64, s: f64) -> f64 {
    let s = s.abs();
    if s < 1e-14 {
        return 1.0;
    }
    let x = PI * t * s;
    (x.sin() / x).abs().min(1.0)
}

fn phase(n: &[i64], a_xi: &[f64; 2], a_zeta: &[f64; 2], dim: usize) -> f64 {
    let mut s = 0.0;
    for (ax, &coeff) in n.iter().enumerate().take(dim) {
        s += coeff as f64 * (a_xi[ax] - a_zeta[ax]);
    }
    s
}

fn validate_mode(n: &[i64], flux: &FluxModel) -> Result<()> {
    if n.len() != flux.dim() {
        return Err(Error::DimensionMismatch {
            flux: flux.dim(),
            grid: n.len(),
        });
    }
    if n.iter().all(|&c| c == 0) {
        return Err(Error::ZeroMode);
    }
    Ok(())
}

/// Per-mode degeneracy value: outer supremum over `zeta` on a `q`-point
/// uniform grid of `E` including the endpoints, inner integral by the
/// composite midpoint rule with `q` points. Result lies in `[0, |E|]`.
pub fn degeneracy_mode_value(
    t: f64,
    e: Interval,
    n: &[i64],
    flux: &FluxModel,
    q: usize,
) -> Result<f64> {
    validate_mode(n, flux)?;
    if q < MIN_QUADRATURE_POINTS {
        return Err(Error::QuadratureTooCoarse {
            got: q,
            min: MIN_QUADRATURE_POINTS,
        });
    }
    let dim = flux.dim();
    let len = e.length();
    let h = len / q as f64;
    let midpoints: Vec<[f64; 2]> = (0..q)
        .map(|i| flux.velocity(e.lo() + (i as f64 + 0.5) * h))
        .collect();
    let zeta_step = len / (q - 1) as f64;
    let mut sup = 0.0f64;
    for j in 0..q {
        let zeta = if j + 1 == q {
            e.hi()
        } else {
            e.lo() + j as f64 * zeta_step
        };
        let a_zeta = flux.velocity(zeta);
        let mut acc = 0.0;
        for a_xi in &midpoints {
            acc += sinc_abs(t, phase(n, a_xi, &a_zeta, dim));
        }
        sup = sup.max(acc * h);
    }
    Ok(sup)
}

/// One mode entry of a [`DegeneracyReport`].
#[derive(Debug, Clone, Serialize)]
pub struct ModeValue {
    pub n: Vec<i64>,
    pub value: f64,
}

/// Truncated degeneracy functional: all nonzero modes with `|n|_inf <= n_max`.
///
/// The truncation parameters stay in the report so a reader can audit what
/// the supremum actually ranged over.
#[derive(Debug, Clone, Serialize)]
pub struct DegeneracyReport {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "E")]
    pub e: Interval,
    pub n_max: i64,
    pub q: usize,
    pub modes: Vec<ModeValue>,
    pub sup_value: f64,
}

impl DegeneracyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}

fn enumerate_modes(dim: usize, n_max: i64) -> Vec<Vec<i64>> {
    let mut modes = Vec::new();
    if dim == 1 {
        for n1 in -n_max..=n_max {
            if n1 != 0 {
                modes.push(vec![n1]);
            }
        }
    } else {
        for n1 in -n_max..=n_max {
            for n2 in -n_max..=n_max {
                if n1 != 0 || n2 != 0 {
                    modes.push(vec![n1, n2]);
                }
            }
        }
    }
    modes
}

fn is_canonical(n: &[i64]) -> bool {
    match n.iter().find(|&&c| c != 0) {
        Some(&c) => c > 0,
        None => false,
    }
}

fn mirror(n: &[i64]) -> Vec<i64> {
    n.iter().map(|&c| -c).collect()
}

/// Worker count for embarrassingly parallel mode evaluation, capped by the
/// `CONSLAW_THREADS` environment variable.
pub(crate) fn worker_count(jobs: usize) -> usize {
    let hw = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1);
    let cap = std::env::var("CONSLAW_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&w| w >= 1)
        .unwrap_or(hw);
    cap.min(jobs).max(1)
}

/// Evaluate the truncated functional for every nonzero mode with
/// `|n|_inf <= n_max`.
///
/// The kernel is even in `n`, so only canonical representatives are computed
/// and mirrored; per-mode results are bitwise independent of the evaluation
/// order and of the worker count.
pub fn degeneracy_report(
    t: f64,
    e: Interval,
    flux: &FluxModel,
    n_max: i64,
    q: usize,
) -> Result<DegeneracyReport> {
    if n_max < 1 {
        return Err(Error::BadConfig(format!("n_max {} must be >= 1", n_max)));
    }
    let modes = enumerate_modes(flux.dim(), n_max);
    let canonical: Vec<&Vec<i64>> = modes.iter().filter(|n| is_canonical(n)).collect();

    let workers = worker_count(canonical.len());
    let mut slots: Vec<Option<f64>> = vec![None; canonical.len()];
    if workers == 1 {
        for (i, n) in canonical.iter().enumerate() {
            slots[i] = Some(degeneracy_mode_value(t, e, n, flux, q)?);
        }
    } else {
        let results: Vec<Vec<(usize, Result<f64>)>> = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for w in 0..workers {
                let canonical = &canonical;
                handles.push(scope.spawn(move || {
                    let mut out = Vec::new();
                    for (i, n) in canonical.iter().enumerate() {
                        if i % workers == w {
                            out.push((i, degeneracy_mode_value(t, e, n, flux, q)));
                        }
                    }
                    out
                }));
            }
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for chunk in results {
            for (i, r) in chunk {
                slots[i] = Some(r?);
            }
        }
    }

    let mut entries: Vec<ModeValue> = Vec::with_capacity(modes.len());
    for (i, n) in canonical.iter().enumerate() {
        let value = slots[i].unwrap();
        entries.push(ModeValue {
            n: (*n).clone(),
            value,
        });
        entries.push(ModeValue {
            n: mirror(n),
            value,
        });
    }
    entries.sort_by(|a, b| a.n.cmp(&b.n));
    let sup_value = entries.iter().map(|m| m.value).fold(0.0, f64::max);
    Ok(DegeneracyReport {
        t,
        e,
        n_max,
        q,
        modes: entries,
        sup_value,
    })
}

/// Measure of the most resonant velocity set,
/// `sup_{alpha, beta} |{xi in E : |beta . a(xi) - alpha| <= gamma}|`,
/// brute-forced on `q`-point grids of `alpha in [-M-1, M+1]` and of the unit
/// sphere, with the set measured by midpoint counting on a `q`-point grid of
/// `E`. Non-decreasing in `gamma`; tends to 0 for non-degenerate fluxes and
/// sticks at `|E|` for linear ones.
pub fn resonant_set_measure(gamma: f64, e: Interval, flux: &FluxModel, q: usize) -> f64 {
    let dim = flux.dim();
    let len = e.length();
    let h = len / q as f64;
    let velocities: Vec<[f64; 2]> = (0..q)
        .map(|i| flux.velocity(e.lo() + (i as f64 + 0.5) * h))
        .collect();
    // M = sup |a| over E, probed on the grid plus endpoints.
    let m = velocities
        .iter()
        .map(|a| (a[0] * a[0] + a[1] * a[1]).sqrt())
        .fold(0.0f64, f64::max)
        .max(flux.velocity_norm(e.lo()))
        .max(flux.velocity_norm(e.hi()));

    let betas: Vec<[f64; 2]> = if dim == 1 {
        vec![[1.0, 0.0], [-1.0, 0.0]]
    } else {
        (0..q)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / q as f64;
                [th.cos(), th.sin()]
            })
            .collect()
    };

    let alpha_lo = -m - 1.0;
    let alpha_span = 2.0 * (m + 1.0);
    let mut best = 0usize;
    for beta in &betas {
        let dots: Vec<f64> = velocities
            .iter()
            .map(|a| beta[0] * a[0] + beta[1] * a[1])
            .collect();
        for j in 0..q {
            let alpha = alpha_lo + alpha_span * j as f64 / (q - 1) as f64;
            let count = dots.iter().filter(|&&d| (d - alpha).abs() <= gamma).count();
            best = best.max(count);
        }
    }
    best as f64 * h
}

/// Classical non-degeneracy test: for every sampled direction `nu` on the
/// unit sphere of `R^{d+1}`, the set `{xi in E : (1, a(xi)) . nu = 0}` must
/// have near-zero measure.
///
/// The root set is widened to `{ |(1, a(xi)) . nu| <= h L }` (`h` the grid
/// step on `E`, `L` the Lipschitz bound of `a`) and measured on a 16x
/// refined subgrid; the verdict is "non-degenerate" when every sampled
/// direction keeps the measure below 3 grid cells. Besides a uniform sweep
/// of the sphere, the sample set contains the eigenvectors of the Gram
/// matrix `\int_E V V^T dxi`, `V = (1, a)`; a null eigenvector is exactly a
/// direction annihilated on all of `E`.
pub fn classical_nondegeneracy_check(e: Interval, flux: &FluxModel, q: usize) -> bool {
    let dim = flux.dim();
    let len = e.length();
    let h = len / q as f64;
    let lip = flux.lipschitz_bound();
    let sup_norm = {
        let grid_sup = (0..q)
            .map(|i| flux.velocity_norm(e.lo() + (i as f64 + 0.5) * h))
            .fold(0.0f64, f64::max);
        grid_sup
            .max(flux.velocity_norm(e.lo()))
            .max(flux.velocity_norm(e.hi()))
    };
    // Absolute floor keeps exactly degenerate directions detectable when the
    // Lipschitz bound vanishes (linear flux).
    let thresh = h * lip + 1e-12 * (1.0 + sup_norm);

    let refine = 16;
    let sub = q * refine;
    let hs = len / sub as f64;
    let vectors: Vec<[f64; 3]> = (0..sub)
        .map(|i| {
            let a = flux.velocity(e.lo() + (i as f64 + 0.5) * hs);
            [1.0, a[0], a[1]]
        })
        .collect();

    let mut directions: Vec<[f64; 3]> = Vec::new();
    if dim == 1 {
        for k in 0..q {
            let th = 2.0 * PI * k as f64 / q as f64;
            directions.push([th.cos(), th.sin(), 0.0]);
        }
    } else {
        // Fibonacci sphere sweep.
        let count = 8 * q;
        let golden = PI * (3.0 - 5.0f64.sqrt());
        for k in 0..count {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let th = golden * k as f64;
            directions.push([r * th.cos(), r * th.sin(), z]);
        }
    }
    // Axis directions and Gram eigenvectors.
    directions.push([1.0, 0.0, 0.0]);
    directions.push([0.0, 1.0, 0.0]);
    if dim == 2 {
        directions.push([0.0, 0.0, 1.0]);
    }
    let gram_dim = dim + 1;
    let gram = gram_matrix(&vectors, gram_dim, hs);
    for v in symmetric_eigenvectors(&gram, gram_dim) {
        directions.push(v);
    }

    let limit = 3.0 * h;
    for nu in &directions {
        let norm = (nu[0] * nu[0] + nu[1] * nu[1] + nu[2] * nu[2]).sqrt();
        if norm < 1e-12 {
            continue;
        }
        let count = vectors
            .iter()
            .filter(|v| ((v[0] * nu[0] + v[1] * nu[1] + v[2] * nu[2]) / norm).abs() <= thresh)
            .count();
        if count as f64 * hs >= limit {
            return false;
        }
    }
    true
}

fn gram_matrix(vectors: &[[f64; 3]], dim: usize, weight: f64) -> [[f64; 3]; 3] {
    let mut g = [[0.0; 3]; 3];
    for v in vectors {
        for i in 0..dim {
            for j in 0..dim {
                g[i][j] += v[i] * v[j] * weight;
            }
        }
    }
    g
}

/// Eigenvectors of a symmetric matrix of order 2 or 3 by cyclic Jacobi
/// rotations. Accuracy at machine-precision level, which is plenty for
/// locating annihilated directions.
fn symmetric_eigenvectors(m: &[[f64; 3]; 3], dim: usize) -> Vec<[f64; 3]> {
    let mut a = *m;
    let mut v = [[0.0; 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..64 {
        let mut off = 0.0;
        for i in 0..dim {
            for j in (i + 1)..dim {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    (0..dim)
        .map(|col| {
            let mut out = [0.0; 3];
            for (r, row) in v.iter().enumerate().take(dim) {
                out[r] = row[col];
            }
            out
        })
        .collect()
}

/// Result of inverting the degeneracy functional for a time horizon.
#[derive(Debug, Clone, Serialize)]
pub struct TimeHorizon {
    pub epsilon: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    pub sup_value_at_t1: f64,
    pub target: f64,
    pub n_max: i64,
    pub q: usize,
}

/// Find `T1` with `sup_value(T1; E) * u0_l1 < epsilon^2` by doubling and
/// bisection on the truncated report. Fails when no horizon up to `2^40`
/// satisfies the target, which is the signature of a flux degenerate on `E`.
pub fn solve_time_horizon(
    epsilon: f64,
    e: Interval,
    flux: &FluxModel,
    u0_l1: f64,
    n_max: i64,
    q: usize,
) -> Result<TimeHorizon> {
    if !(epsilon > 0.0) {
        return Err(Error::HorizonSearch(format!(
            "epsilon {} must be positive",
            epsilon
        )));
    }
    let target = epsilon * epsilon;
    let eval = |t: f64| -> Result<f64> { Ok(degeneracy_report(t, e, flux, n_max, q)?.sup_value) };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut hi_val = eval(hi)?;
    let mut doubles = 0;
    while hi_val * u0_l1 >= target {
        lo = hi;
        hi *= 2.0;
        doubles += 1;
        if doubles > 40 {
            return Err(Error::HorizonSearch(format!(
                "no horizon below 2^40 reaches sup * |u0|_L1 < {} (flux degenerate on E?)",
                target
            )));
        }
        hi_val = eval(hi)?;
    }
    if lo == 0.0 {
        return Ok(TimeHorizon {
            epsilon,
            t1: hi,
            sup_value_at_t1: hi_val,
            target,
            n_max,
            q,
        });
    }
    for _ in 0..40 {
        if (hi - lo) <= 1e-3 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let v = eval(mid)?;
        if v * u0_l1 < target {
            hi = mid;
            hi_val = v;
        } else {
            lo = mid;
        }
    }
    Ok(TimeHorizon {
        epsilon,
        t1: hi,
        sup_value_at_t1: hi_val,
        target,
        n_max,
        q,
    })
}

/// Inner kernel integral at a fixed `zeta`, exactly rounded. Shared with
/// transport-side tests that compare against the mode functional.
pub fn kernel_row_integral(
    t: f64,
    e: Interval,
    n: &[i64],
    zeta: f64,
    flux: &FluxModel,
    q: usize,
) -> f64 {
    let h = e.length() / q as f64;
    let a_zeta = flux.velocity(zeta);
    let mut acc = ExactSum::new();
    for i in 0..q {
        let xi = e.lo() + (i as f64 + 0.5) * h;
        acc.add(sinc_abs(
            t,
            phase(n, &flux.velocity(xi), &a_zeta, flux.dim()),
        ));
    }
    acc.value() * h
}
