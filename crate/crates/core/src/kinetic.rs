//! Kinetic picture: equilibrium functions `chi_u`, kinetic fields on
//! `M x R_xi`, and the discrete entropy defect measure.
//!
//! The defect of a finite-volume run is reconstructed per step, cell and
//! velocity bin from the scheme's own data,
//!
//! `m = -[ d_t (u - xi)^+ + div( F(u_l v xi, u_r v xi) - A(xi) ) ]`,
//!
//! where `F` is the scheme's numerical flux evaluated at states truncated at
//! level `xi` (the discrete semi-Kruzhkov entropy flux) and `v` is the max.
//! Monotone schemes keep the bracket non-positive up to rounding; whatever
//! negative mass appears is clipped to zero and reported, so the measure is
//! non-negative by construction and the clipped amount quantifies how far
//! the discretization is from an exact entropy balance.

use crate::flux::FluxModel;
use crate::solver::{self, NumericalFlux};
use crate::sum::{exact_sum, ExactSum};
use crate::torus::{ScalarField, TorusGrid};
use crate::{Error, Result};
use serde::Serialize;
use std::io::{self, Write};

/// Signed indicator `chi_alpha(xi)`: 1 on `0 < xi < alpha`, -1 on
/// `alpha < xi < 0`, 0 elsewhere (including the boundary points, a
/// measure-zero convention fixed for determinism).
pub fn chi(alpha: f64, xi: f64) -> f64 {
    if 0.0 < xi && xi < alpha {
        1.0
    } else if alpha < xi && xi < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Uniform velocity grid `[xi_min, xi_max]` split into bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticGrid {
    xi_min: f64,
    xi_max: f64,
    bins: usize,
}

impl KineticGrid {
    pub fn new(xi_min: f64, xi_max: f64, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::TooFewBins(bins));
        }
        if !(xi_min < xi_max) || !xi_min.is_finite() || !xi_max.is_finite() {
            return Err(Error::EmptyInterval {
                lo: xi_min,
                hi: xi_max,
            });
        }
        Ok(Self {
            xi_min,
            xi_max,
            bins,
        })
    }

    /// Grid that covers the state range of `u` (and 0, so equilibrium
    /// functions of `u` are fully resolved).
    pub fn covering(u: &ScalarField, bins: usize) -> Result<Self> {
        let lo = u.min().min(0.0);
        let hi = u.max().max(0.0);
        let pad = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
        Self::new(lo - pad, hi + pad, bins)
    }

    pub fn xi_min(&self) -> f64 {
        self.xi_min
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn dxi(&self) -> f64 {
        (self.xi_max - self.xi_min) / self.bins as f64
    }

    /// Lower edge of bin `b`; `edge(bins)` is exactly `xi_max`.
    pub fn edge(&self, b: usize) -> f64 {
        if b == self.bins {
            self.xi_max
        } else {
            self.xi_min + b as f64 * self.dxi()
        }
    }

    pub fn midpoint(&self, b: usize) -> f64 {
        self.xi_min + (b as f64 + 0.5) * self.dxi()
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        self.xi_min <= lo && hi <= self.xi_max
    }
}

/// Function of (cell, velocity bin), stored bin-major so each bin's spatial
/// slice is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticField {
    grid: TorusGrid,
    kgrid: KineticGrid,
    values: Vec<f64>,
}

impl KineticField {
    pub fn from_values(grid: TorusGrid, kgrid: KineticGrid, values: Vec<f64>) -> Result<Self> {
        let want = grid.cell_count() * kgrid.bins();
        if values.len() != want {
            return Err(Error::FieldLength {
                got: values.len(),
                want,
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(Self {
            grid,
            kgrid,
            values,
        })
    }

    /// Sample `f(x, xi)` at cell centers and bin midpoints.
    pub fn from_fn<F: Fn([f64; 2], f64) -> f64>(
        grid: TorusGrid,
        kgrid: KineticGrid,
        f: F,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.cell_count() * kgrid.bins());
        for b in 0..kgrid.bins() {
            let xi = kgrid.midpoint(b);
            for idx in 0..grid.cell_count() {
                values.push(f(grid.cell_center(idx), xi));
            }
        }
        Self::from_values(grid, kgrid, values)
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn kgrid(&self) -> KineticGrid {
        self.kgrid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, cell: usize, bin: usize) -> f64 {
        self.values[bin * self.grid.cell_count() + cell]
    }

    /// Contiguous spatial slice of one velocity bin.
    pub fn slice(&self, bin: usize) -> &[f64] {
        let n = self.grid.cell_count();
        &self.values[bin * n..(bin + 1) * n]
    }

    pub(crate) fn slice_mut(&mut self, bin: usize) -> &mut [f64] {
        let n = self.grid.cell_count();
        &mut self.values[bin * n..(bin + 1) * n]
    }

    /// Bin-weighted velocity integral over bins `[lo_bin, hi_bin)` for one
    /// cell, exactly rounded.
    pub fn band_integral(&self, cell: usize, lo_bin: usize, hi_bin: usize) -> f64 {
        let dxi = self.kgrid.dxi();
        let mut acc = ExactSum::new();
        for b in lo_bin..hi_bin {
            acc.add(self.at(cell, b));
        }
        acc.value() * dxi
    }

    /// Full velocity integral per cell.
    pub fn xi_integral(&self, cell: usize) -> f64 {
        self.band_integral(cell, 0, self.kgrid.bins())
    }
}

/// Bin-averaged equilibrium function of `u`: per (cell, bin) the signed
/// fraction of the bin covered by `(0, u)`. With bin-edge aligned states the
/// values are exactly -1, 0 or 1 and the layer-cake identities are exact.
pub fn equilibrium_field(u: &ScalarField, kgrid: KineticGrid) -> Result<KineticField> {
    let lo_needed = u.min().min(0.0);
    let hi_needed = u.max().max(0.0);
    if !kgrid.covers(lo_needed, hi_needed) {
        return Err(Error::RangeViolation {
            kmin: kgrid.xi_min(),
            kmax: kgrid.xi_max(),
            lo: lo_needed,
            hi: hi_needed,
        });
    }
    let cells = u.grid().cell_count();
    let dxi = kgrid.dxi();
    let mut values = vec![0.0; cells * kgrid.bins()];
    for b in 0..kgrid.bins() {
        let (lo, hi) = (kgrid.edge(b), kgrid.edge(b + 1));
        let slice = &mut values[b * cells..(b + 1) * cells];
        for (cell, &uc) in u.values().iter().enumerate() {
            let pos = overlap(lo, hi, 0.0, uc.max(0.0));
            let neg = overlap(lo, hi, uc.min(0.0), 0.0);
            slice[cell] = (pos - neg) / dxi;
        }
    }
    KineticField::from_values(u.grid(), kgrid, values)
}

fn overlap(lo: f64, hi: f64, c: f64, d: f64) -> f64 {
    (hi.min(d) - lo.max(c)).max(0.0)
}

/// One step of a solver run, as consumed by the defect accumulator.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// Time at the start of the step.
    pub t: f64,
    pub dt: f64,
    pub before: ScalarField,
    pub after: ScalarField,
    /// Face fluxes of the conservative update.
    pub fluxes: solver::FaceFluxes,
}

/// Non-negative discrete measure on (step, cell, bin), stored with the cell
/// marginal taken (per step and bin) plus the clipped negative mass.
#[derive(Debug, Clone)]
pub struct DefectMeasure {
    kgrid: KineticGrid,
    spans: Vec<(f64, f64)>,
    per_step_bin: Vec<f64>,
    clip_per_step: Vec<f64>,
}

impl DefectMeasure {
    pub fn from_parts(
        kgrid: KineticGrid,
        spans: Vec<(f64, f64)>,
        per_step_bin: Vec<f64>,
        clip_per_step: Vec<f64>,
    ) -> Result<Self> {
        if per_step_bin.len() != spans.len() * kgrid.bins() || clip_per_step.len() != spans.len() {
            return Err(Error::FieldLength {
                got: per_step_bin.len(),
                want: spans.len() * kgrid.bins(),
            });
        }
        if per_step_bin.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::NonFinite(0));
        }
        Ok(Self {
            kgrid,
            spans,
            per_step_bin,
            clip_per_step,
        })
    }

    pub fn kgrid(&self) -> KineticGrid {
        self.kgrid
    }

    pub fn n_steps(&self) -> usize {
        self.spans.len()
    }

    pub fn spans(&self) -> &[(f64, f64)] {
        &self.spans
    }

    /// Mass accumulated in one (step, bin) slot.
    pub fn step_bin_mass(&self, step: usize, bin: usize) -> f64 {
        self.per_step_bin[step * self.kgrid.bins() + bin]
    }

    /// Velocity marginal of the measure: total mass per bin.
    pub fn xi_marginal_mass(&self) -> Vec<f64> {
        let bins = self.kgrid.bins();
        (0..bins)
            .map(|b| {
                exact_sum(
                    (0..self.spans.len()).map(|s| self.per_step_bin[s * bins + b]),
                )
            })
            .collect()
    }

    /// Velocity marginal as a density in `xi` (mass per bin over `dxi`).
    pub fn xi_marginal_density(&self) -> Vec<f64> {
        let dxi = self.kgrid.dxi();
        self.xi_marginal_mass().into_iter().map(|m| m / dxi).collect()
    }

    pub fn total_mass(&self) -> f64 {
        exact_sum(self.per_step_bin.iter().copied())
    }

    /// Total clipped (negative pre-clip) mass.
    pub fn clip_mass(&self) -> f64 {
        exact_sum(self.clip_per_step.iter().copied())
    }

    pub fn clip_per_step(&self) -> &[f64] {
        &self.clip_per_step
    }

    /// Merge consecutive steps in groups of `group`. The velocity marginal
    /// is unchanged by construction.
    pub fn merge_steps(&self, group: usize) -> Self {
        let group = group.max(1);
        let bins = self.kgrid.bins();
        let mut spans = Vec::new();
        let mut per_step_bin = Vec::new();
        let mut clip = Vec::new();
        let mut s = 0;
        while s < self.spans.len() {
            let e = (s + group).min(self.spans.len());
            let t0 = self.spans[s].0;
            let dt: f64 = self.spans[s..e].iter().map(|&(_, d)| d).sum();
            spans.push((t0, dt));
            for b in 0..bins {
                per_step_bin.push(exact_sum(
                    (s..e).map(|k| self.per_step_bin[k * bins + b]),
                ));
            }
            clip.push(exact_sum(self.clip_per_step[s..e].iter().copied()));
            s = e;
        }
        Self {
            kgrid: self.kgrid,
            spans,
            per_step_bin,
            clip_per_step: clip,
        }
    }

    /// Export the velocity marginal as CSV `xi,value` (density per bin
    /// midpoint).
    pub fn write_marginal_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "xi,value")?;
        for (b, d) in self.xi_marginal_density().iter().enumerate() {
            writeln!(w, "{},{}", self.kgrid.midpoint(b), d)?;
        }
        Ok(())
    }
}

/// Streaming builder for [`DefectMeasure`]; consumes consecutive solver steps.
pub struct DefectAccumulator {
    kgrid: KineticGrid,
    grid: TorusGrid,
    flux: FluxModel,
    scheme: NumericalFlux,
    expected_t: Option<f64>,
    spans: Vec<(f64, f64)>,
    per_step_bin: Vec<f64>,
    clip_per_step: Vec<f64>,
    face_buf: Vec<f64>,
    div_buf: Vec<f64>,
}

impl DefectAccumulator {
    pub fn new(
        kgrid: KineticGrid,
        grid: TorusGrid,
        flux: FluxModel,
        scheme: NumericalFlux,
    ) -> Result<Self> {
        if flux.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                flux: flux.dim(),
                grid: grid.dim(),
            });
        }
        let cells = grid.cell_count();
        Ok(Self {
            kgrid,
            grid,
            flux,
            scheme,
            expected_t: None,
            spans: Vec::new(),
            per_step_bin: Vec::new(),
            clip_per_step: Vec::new(),
            face_buf: vec![0.0; cells],
            div_buf: vec![0.0; cells],
        })
    }

    /// Add one step `before -> after` over `[t, t + dt]`.
    pub fn push_step(
        &mut self,
        t: f64,
        dt: f64,
        before: &ScalarField,
        after: &ScalarField,
    ) -> Result<()> {
        if let Some(expected) = self.expected_t {
            if (t - expected).abs() > 1e-9 * expected.abs().max(1.0) {
                return Err(Error::StreamGap { expected, got: t });
            }
        }
        self.expected_t = Some(t + dt);

        let cells = self.grid.cell_count();
        let vol = self.grid.cell_volume();
        let face_area = self.grid.cell_size().powi(self.grid.dim() as i32 - 1);
        let dxi = self.kgrid.dxi();
        let bins = self.kgrid.bins();
        let u = before.values();
        let v = after.values();

        let mut clip_total = 0.0;
        for b in 0..bins {
            let xi = self.kgrid.midpoint(b);
            // Divergence of the truncated-state numerical flux.
            self.div_buf.iter_mut().for_each(|d| *d = 0.0);
            for axis in 0..self.grid.dim() {
                let a_xi = self.flux.flux_component(xi, axis);
                for idx in 0..cells {
                    let nb = self.grid.neighbor(idx, axis);
                    let q = solver::face_flux_raw(
                        u[idx].max(xi),
                        u[nb].max(xi),
                        axis,
                        &self.flux,
                        self.scheme,
                    ) - a_xi;
                    self.face_buf[idx] = q;
                }
                for idx in 0..cells {
                    let back = self.grid.neighbor_back(idx, axis);
                    self.div_buf[idx] += self.face_buf[idx] - self.face_buf[back];
                }
            }
            let mut bin_mass = 0.0;
            for idx in 0..cells {
                let dterm = ((v[idx] - xi).max(0.0) - (u[idx] - xi).max(0.0)) * vol;
                let pre = -(dterm + dt * self.div_buf[idx] * face_area) * dxi;
                if pre < 0.0 {
                    clip_total -= pre;
                } else {
                    bin_mass += pre;
                }
            }
            self.per_step_bin.push(bin_mass);
        }
        self.spans.push((t, dt));
        self.clip_per_step.push(clip_total);
        Ok(())
    }

    pub fn finish(self) -> DefectMeasure {
        DefectMeasure {
            kgrid: self.kgrid,
            spans: self.spans,
            per_step_bin: self.per_step_bin,
            clip_per_step: self.clip_per_step,
        }
    }
}

/// Fold a recorded step stream into a defect measure. Steps must be
/// consecutive; a gap is rejected.
pub fn accumulate_defect(
    kgrid: KineticGrid,
    flux: &FluxModel,
    scheme: NumericalFlux,
    records: &[StepRecord],
) -> Result<DefectMeasure> {
    let grid = records
        .first()
        .map(|r| r.before.grid())
        .ok_or(Error::EmptySeries)?;
    let mut acc = DefectAccumulator::new(kgrid, grid, flux.clone(), scheme)?;
    for r in records {
        acc.push_step(r.t, r.dt, &r.before, &r.after)?;
    }
    Ok(acc.finish())
}

/// One bound of the defect report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundCheck {
    pub holds: bool,
    pub slack: f64,
}

/// Velocity marginal of a defect measure together with the three bounds it
/// must satisfy: the pointwise `L^inf` bound by the initial `L^1` mass, the
/// integral bound by half the squared `L^2` norm, and the pointwise profile
/// bound by the truncated initial mass.
#[derive(Debug, Clone, Serialize)]
pub struct DefectBoundsReport {
    pub xi: Vec<f64>,
    pub density: Vec<f64>,
    pub tolerance: f64,
    pub total_mass: f64,
    pub clip_mass: f64,
    pub pointwise: BoundCheck,
    pub integral: BoundCheck,
    pub profile: BoundCheck,
}

#[derive(Serialize)]
struct DefectSummary<'a> {
    total_mass: f64,
    clip_mass: f64,
    bounds: Bounds<'a>,
}

#[derive(Serialize)]
struct Bounds<'a> {
    pointwise: &'a BoundCheck,
    integral: &'a BoundCheck,
    profile: &'a BoundCheck,
}

impl DefectBoundsReport {
    pub fn all_hold(&self) -> bool {
        self.pointwise.holds && self.integral.holds && self.profile.holds
    }

    /// Summary JSON: `{total_mass, clip_mass, bounds:{pointwise, integral, profile}}`.
    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&DefectSummary {
            total_mass: self.total_mass,
            clip_mass: self.clip_mass,
            bounds: Bounds {
                pointwise: &self.pointwise,
                integral: &self.integral,
                profile: &self.profile,
            },
        })
        .expect("summary serialization")
    }
}

/// Project the measure onto the velocity variable and check the three
/// defect bounds against the initial datum of the same run.
///
/// The tolerance is `1e-8` plus one cell size, reflecting that the discrete
/// balance reproduces the continuum bounds only up to discretization error.
pub fn check_defect_bounds(m: &DefectMeasure, u0: &ScalarField) -> Result<DefectBoundsReport> {
    let bins = m.kgrid().bins();
    let density = m.xi_marginal_density();
    let xi: Vec<f64> = (0..bins).map(|b| m.kgrid().midpoint(b)).collect();
    let tolerance = 1e-8 + u0.grid().cell_size();

    let l1 = crate::torus::lp_norm(u0, 1.0)?;
    let l2 = crate::torus::lp_norm(u0, 2.0)?;
    let half_l2_sq = 0.5 * l2 * l2;
    let vol = u0.grid().cell_volume();

    let mut pointwise_slack = f64::INFINITY;
    let mut profile_slack = f64::INFINITY;
    for b in 0..bins {
        pointwise_slack = pointwise_slack.min(l1 - density[b]);
        let truncated =
            exact_sum(u0.values().iter().map(|&u| (u - xi[b]).max(0.0))) * vol;
        profile_slack = profile_slack.min(truncated - density[b]);
    }
    let integral_slack = half_l2_sq - m.total_mass();

    Ok(DefectBoundsReport {
        xi,
        density,
        tolerance,
        total_mass: m.total_mass(),
        clip_mass: m.clip_mass(),
        pointwise: BoundCheck {
            holds: pointwise_slack >= -tolerance,
            slack: pointwise_slack,
        },
        integral: BoundCheck {
            holds: integral_slack >= -tolerance,
            slack: integral_slack,
        },
        profile: BoundCheck {
            holds: profile_slack >= -tolerance,
            slack: profile_slack,
        },
    })
}
