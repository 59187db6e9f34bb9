//! Long-time diagnostics: the band-localization inequality that converts
//! band-density homogenization into full `L^1` decay, decay reports for
//! solver runs, and the degenerate shear counterexample.

use crate::flux::FluxModel;
use crate::solver::{cfl_dt, step, NumericalFlux, SchemeConfig, TimeSeries};
use crate::spectral::spectral_derivative;
use crate::sum::ExactSum;
use crate::torus::{lp_distance, mean, Interval, ScalarField, TorusGrid};
use crate::{Error, Result};
use serde::Serialize;

/// Parameters of the band-localization bound: band length `|E|`, field mean
/// `v_bar`, and essential bound `R`, with `0 < v_bar` and
/// `v_bar + |E| < R`.
#[derive(Debug, Clone, Copy)]
pub struct BandParams {
    pub e_len: f64,
    pub v_bar: f64,
    pub r: f64,
}

impl BandParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_len > 0.0) {
            return Err(Error::BadBandParams(format!(
                "band length {} must be positive",
                self.e_len
            )));
        }
        if !(self.v_bar > 0.0 && self.v_bar < self.r) {
            return Err(Error::BadBandParams(format!(
                "mean {} must lie in (0, {})",
                self.v_bar, self.r
            )));
        }
        if !(self.v_bar + self.e_len < self.r) {
            return Err(Error::BadBandParams(format!(
                "band top {} must stay below R = {}",
                self.v_bar + self.e_len,
                self.r
            )));
        }
        Ok(())
    }
}

/// Constants of the band bound: `kappa` is the positive root of
/// `kappa^2 = (|E| - kappa) v_bar`, `c = |E| - kappa > 0`, and
/// `delta0 = min(|E|/4, c)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BandConstants {
    pub kappa: f64,
    pub c: f64,
    pub delta0: f64,
}

pub fn band_constants(p: &BandParams) -> Result<BandConstants> {
    p.validate()?;
    let kappa = 0.5 * (-p.v_bar + (p.v_bar * p.v_bar + 4.0 * p.e_len * p.v_bar).sqrt());
    let c = p.e_len - kappa;
    let delta0 = (p.e_len / 4.0).min(c);
    Ok(BandConstants { kappa, c, delta0 })
}

/// Outcome of one band-localization check.
#[derive(Debug, Clone, Serialize)]
pub struct BandCheckReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub delta: f64,
    pub band: Interval,
    pub snap_distance: f64,
    pub constants: BandConstants,
    /// Mean of the band density; stays below `|E| - c`.
    pub band_mean: f64,
    pub band_deviation: f64,
}

/// Check `|v - v_bar|_L1 <= delta + 8 (1 + R/delta) |v_E - v_E_bar|_L1` for
/// a non-negative field bounded by `R`, with the band `E = [v_bar, zeta]`
/// (the lower endpoint is snapped to the measured mean; the snap distance is
/// reported).
///
/// The band density is `v_E = (min(zeta, v) - v_bar)^+`, the velocity
/// integral of the equilibrium function over `E`.
pub fn band_control_check(
    v: &ScalarField,
    e: Interval,
    delta: f64,
    r: f64,
) -> Result<BandCheckReport> {
    if v.min() < 0.0 || v.max() > r {
        return Err(Error::BadBandParams(format!(
            "field range [{}, {}] not inside [0, {}]",
            v.min(),
            v.max(),
            r
        )));
    }
    let v_bar = mean(v);
    if !(v_bar > 0.0 && v_bar < r) {
        return Err(Error::MeanOutOfRange { mean: v_bar, r });
    }
    let zeta = e.hi();
    let snap_distance = (e.lo() - v_bar).abs();
    if !(zeta > v_bar) || !(zeta < r) {
        return Err(Error::BadBandParams(format!(
            "band top {} must lie in ({}, {})",
            zeta, v_bar, r
        )));
    }
    let band = Interval::new(v_bar, zeta)?;
    let params = BandParams {
        e_len: band.length(),
        v_bar,
        r,
    };
    let constants = band_constants(&params)?;
    if !(delta > 0.0 && delta < constants.delta0) {
        return Err(Error::DeltaOutOfRange {
            delta,
            delta0: constants.delta0,
        });
    }

    let v_e = v.map(|x| (x.min(zeta) - v_bar).max(0.0))?;
    let band_mean = mean(&v_e);
    let band_deviation = {
        let mut acc = ExactSum::new();
        for &x in v_e.values() {
            acc.add((x - band_mean).abs());
        }
        acc.value() * v.grid().cell_volume()
    };
    let lhs = {
        let mut acc = ExactSum::new();
        for &x in v.values() {
            acc.add((x - v_bar).abs());
        }
        acc.value() * v.grid().cell_volume()
    };
    let rhs = delta + 8.0 * (1.0 + r / delta) * band_deviation;
    Ok(BandCheckReport {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12 * (1.0 + rhs.abs()),
        delta,
        band,
        snap_distance,
        constants,
        band_mean,
        band_deviation,
    })
}

/// Shift a field to be non-negative, returning the shifted field and the
/// recorded shift (its minimum).
pub fn normalize_nonnegative(u: &ScalarField) -> (ScalarField, f64) {
    let shift = u.min();
    let shifted = u.map(|v| v - shift).expect("shift keeps values finite");
    (shifted, shift)
}

/// Long-time decay diagnostics of a solver run.
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    /// Largest increase of `|u(t) - u_bar|_L1` between consecutive
    /// snapshots (monotone schemes keep this at rounding level).
    pub monotone_violation: f64,
    /// Mean of the last tenth of the samples.
    pub limit_estimate: f64,
    /// Pairs `(t, l1(t) / l1(t/2))` at the available dyadic times.
    pub decade_ratios: Vec<(f64, f64)>,
    pub initial: f64,
    pub final_value: f64,
}

pub fn decay_report(ts: &TimeSeries) -> Result<DecayReport> {
    if ts.times.is_empty() {
        return Err(Error::EmptySeries);
    }
    let l1: Vec<f64> = ts.scalars.iter().map(|s| s.l1_to_mean).collect();
    let mut violation = 0.0f64;
    for w in l1.windows(2) {
        violation = violation.max(w[1] - w[0]);
    }
    let tail = (l1.len() / 10).max(1);
    let limit_estimate = l1[l1.len() - tail..].iter().sum::<f64>() / tail as f64;

    let mut decade_ratios = Vec::new();
    for (i, &t) in ts.times.iter().enumerate() {
        if t <= 0.0 {
            continue;
        }
        let target = t / 2.0;
        let j = nearest_time(&ts.times, target);
        if (ts.times[j] - target).abs() <= 0.05 * t && l1[j] > 1e-300 && ts.times[j] < t {
            decade_ratios.push((t, l1[i] / l1[j]));
        }
    }
    Ok(DecayReport {
        monotone_violation: violation.max(0.0),
        limit_estimate,
        decade_ratios,
        initial: l1[0],
        final_value: *l1.last().unwrap(),
    })
}

fn nearest_time(times: &[f64], target: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &t) in times.iter().enumerate() {
        let d = (t - target).abs();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Best rational approximation `p/q` of `alpha` with `q <= q_max`, by
/// continued fractions.
pub fn rational_approximation(alpha: f64, q_max: i64) -> (i64, i64) {
    let mut p_prev: i64 = 1;
    let mut q_prev: i64 = 0;
    let mut p: i64 = alpha.floor() as i64;
    let mut q: i64 = 1;
    let mut frac = alpha - alpha.floor();
    for _ in 0..64 {
        if frac.abs() < 1e-12 {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor() as i64;
        frac = inv - inv.floor();
        let p_next = a * p + p_prev;
        let q_next = a * q + q_prev;
        if q_next > q_max {
            break;
        }
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
    }
    (p, q)
}

/// Report of the degenerate shear experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ShearReport {
    pub alpha: f64,
    pub p: i64,
    pub q: i64,
    pub alpha_snapped: f64,
    /// `(cells per axis, one-step residual per unit time)` per level.
    pub residuals: Vec<(usize, f64)>,
    /// Consecutive residual ratios (coarse over fine).
    pub ratios: Vec<f64>,
    /// `sup |u (u_x + alpha u_y)|` by spectral differentiation.
    pub spectral_residual: f64,
}

/// Build the stationary shear profile `u(x, y) = U(q y - p x)` for the flux
/// `A(u) = u^2/2 (1, p/q)` and measure how far one scheme step moves it.
///
/// The winding must be rational for the profile to live on the torus, so
/// `alpha` is snapped to its best convergent with `q <= q_max` and the
/// profile is wound accordingly; the continuum solution is then exactly
/// stationary (`u u_x + alpha u u_y = 0`) and the one-step residual per unit
/// time is pure truncation error, first order in `h`.
pub fn stationary_shear_residual<F: Fn(f64) -> f64>(
    alpha: f64,
    profile: F,
    n0: usize,
    levels: usize,
    q_max: i64,
) -> Result<ShearReport> {
    if levels == 0 {
        return Err(Error::BadConfig("need at least one level".into()));
    }
    let (p, q) = rational_approximation(alpha, q_max);
    let alpha_snapped = p as f64 / q as f64;
    let flux = FluxModel::iso_burgers2d(alpha_snapped);
    let cfg = SchemeConfig::new(0.45, 1.0, 1, NumericalFlux::Godunov)?;

    let mut residuals = Vec::new();
    let mut finest: Option<ScalarField> = None;
    for level in 0..levels {
        let n = n0 << level;
        let grid = TorusGrid::new(2, n)?;
        let u = ScalarField::from_fn(grid, |[x, y]| {
            profile((q as f64 * y - p as f64 * x).rem_euclid(1.0))
        })?;
        let dt = cfl_dt(&u, &flux, &cfg);
        let dt = if dt.is_finite() { dt } else { 1.0 };
        let (next, _) = step(&u, &flux, dt, NumericalFlux::Godunov)?;
        let res = lp_distance(&next, &u, 1.0)? / dt;
        residuals.push((n, res));
        finest = Some(u);
    }
    let ratios = residuals
        .windows(2)
        .map(|w| {
            if w[1].1 == 0.0 {
                f64::INFINITY
            } else {
                w[0].1 / w[1].1
            }
        })
        .collect();

    let u = finest.expect("at least one level");
    let grid = u.grid();
    let ux = spectral_derivative(grid, u.values(), 0);
    let uy = spectral_derivative(grid, u.values(), 1);
    let spectral_residual = u
        .values()
        .iter()
        .zip(ux.iter().zip(&uy))
        .map(|(&uv, (&gx, &gy))| (uv * (gx + alpha_snapped * gy)).abs())
        .fold(0.0f64, f64::max);

    Ok(ShearReport {
        alpha,
        p,
        q,
        alpha_snapped,
        residuals,
        ratios,
        spectral_residual,
    })
}
