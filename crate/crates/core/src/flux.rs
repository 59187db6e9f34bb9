//! Registry of x-independent fluxes `A: R -> R^d` with analytic derivatives
//! `a = A'` (the velocity field of the kinetic picture).
//!
//! Every builtin is separable per axis, so each axis carries its own scalar
//! flux. That is what the dimension-split finite-volume scheme and the
//! per-axis entropy fluxes rely on.

use crate::torus::Interval;
use crate::{Error, Result};

/// Scalar flux along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisFlux {
    /// `A(u) = k u^2 / 2`, `a(u) = k u`.
    Quadratic(f64),
    /// `A(u) = c u`, `a(u) = c`.
    Linear(f64),
    /// `A(u) = u^3 / 3`, `a(u) = u^2`.
    Cubic,
}

impl AxisFlux {
    pub fn flux(&self, u: f64) -> f64 {
        match self {
            AxisFlux::Quadratic(k) => 0.5 * k * u * u,
            AxisFlux::Linear(c) => c * u,
            AxisFlux::Cubic => u * u * u / 3.0,
        }
    }

    pub fn velocity(&self, u: f64) -> f64 {
        match self {
            AxisFlux::Quadratic(k) => k * u,
            AxisFlux::Linear(c) => *c,
            AxisFlux::Cubic => u * u,
        }
    }

    /// Interior critical point of the flux, if any. The builtins have at most
    /// one and it is known analytically, so the Godunov extremum never needs
    /// numerical root finding.
    pub fn critical_point(&self) -> Option<f64> {
        match self {
            AxisFlux::Quadratic(k) if *k != 0.0 => Some(0.0),
            _ => None,
        }
    }

    /// Largest |a| over a state interval.
    pub fn max_abs_velocity(&self, lo: f64, hi: f64) -> f64 {
        match self {
            AxisFlux::Quadratic(k) => k.abs() * lo.abs().max(hi.abs()),
            AxisFlux::Linear(c) => c.abs(),
            AxisFlux::Cubic => (lo * lo).max(hi * hi),
        }
    }

    /// Largest |a'| over a state interval.
    pub fn max_abs_velocity_derivative(&self, lo: f64, hi: f64) -> f64 {
        match self {
            AxisFlux::Quadratic(k) => k.abs(),
            AxisFlux::Linear(_) => 0.0,
            AxisFlux::Cubic => 2.0 * lo.abs().max(hi.abs()),
        }
    }
}

/// An x-independent flux on `T^d` with analytic metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxModel {
    label: String,
    dim: usize,
    axes: [AxisFlux; 2],
    range_hint: Interval,
    lipschitz_bound: f64,
}

impl FluxModel {
    fn build(label: String, dim: usize, axes: [AxisFlux; 2], range: Interval) -> Self {
        let lipschitz = lipschitz_on(&axes, dim, range);
        Self {
            label,
            dim,
            axes,
            range_hint: range,
            lipschitz_bound: lipschitz,
        }
    }

    /// Burgers flux in one dimension: `A = u^2/2`, `a = u`.
    pub fn burgers1d() -> Self {
        Self::build(
            "burgers1d".into(),
            1,
            [AxisFlux::Quadratic(1.0), AxisFlux::Linear(0.0)],
            Interval::new(-4.0, 4.0).unwrap(),
        )
    }

    /// Isotropic Burgers flux on `T^2`: `A = u^2/2 (1, alpha)`, `a = u (1, alpha)`.
    pub fn iso_burgers2d(alpha: f64) -> Self {
        Self::build(
            format!("iso_burgers2d({})", alpha),
            2,
            [AxisFlux::Quadratic(1.0), AxisFlux::Quadratic(alpha)],
            Interval::new(-4.0, 4.0).unwrap(),
        )
    }

    /// Linear flux `A = c u` with constant velocity `c` (degenerate).
    pub fn linear(c: &[f64]) -> Result<Self> {
        let dim = c.len();
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let c1 = if dim == 2 { c[1] } else { 0.0 };
        let label = if dim == 1 {
            format!("linear({})", c[0])
        } else {
            format!("linear({},{})", c[0], c[1])
        };
        Ok(Self::build(
            label,
            dim,
            [AxisFlux::Linear(c[0]), AxisFlux::Linear(c1)],
            Interval::new(-4.0, 4.0).unwrap(),
        ))
    }

    /// Cubic flux in one dimension: `A = u^3/3`, `a = u^2 >= 0`.
    pub fn cubic1d() -> Self {
        Self::build(
            "cubic1d".into(),
            1,
            [AxisFlux::Cubic, AxisFlux::Linear(0.0)],
            Interval::new(-2.0, 2.0).unwrap(),
        )
    }

    /// Parse a builtin by name: `burgers1d`, `cubic1d`, `linear(c)`,
    /// `linear(c1,c2)`, `iso_burgers2d(alpha)`.
    pub fn builtin(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, args) = match spec.find('(') {
            Some(open) => {
                if !spec.ends_with(')') {
                    return Err(Error::BadFluxArgs(spec.into()));
                }
                let inner = &spec[open + 1..spec.len() - 1];
                let args: std::result::Result<Vec<f64>, _> =
                    inner.split(',').map(|s| s.trim().parse::<f64>()).collect();
                (
                    &spec[..open],
                    args.map_err(|_| Error::BadFluxArgs(spec.into()))?,
                )
            }
            None => (spec, Vec::new()),
        };
        match (name, args.len()) {
            ("burgers1d", 0) => Ok(Self::burgers1d()),
            ("cubic1d", 0) => Ok(Self::cubic1d()),
            ("iso_burgers2d", 1) => Ok(Self::iso_burgers2d(args[0])),
            ("linear", 1 | 2) => Self::linear(&args),
            ("burgers1d" | "cubic1d" | "iso_burgers2d" | "linear", _) => {
                Err(Error::BadFluxArgs(spec.into()))
            }
            _ => Err(Error::UnknownFlux(spec.into())),
        }
    }

    /// Replace the validity range (and recompute the Lipschitz bound).
    pub fn with_range_hint(self, range: Interval) -> Self {
        Self::build(self.label, self.dim, self.axes, range)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn axis(&self, axis: usize) -> &AxisFlux {
        &self.axes[axis]
    }

    pub fn range_hint(&self) -> Interval {
        self.range_hint
    }

    /// `sup |a'|` over the validity range (Euclidean norm across axes).
    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    /// Flux vector `A(u)`; axes beyond `dim` are zero.
    pub fn flux(&self, u: f64) -> [f64; 2] {
        let mut out = [0.0; 2];
        for ax in 0..self.dim {
            out[ax] = self.axes[ax].flux(u);
        }
        out
    }

    /// Velocity vector `a(u) = A'(u)`.
    pub fn velocity(&self, u: f64) -> [f64; 2] {
        let mut out = [0.0; 2];
        for ax in 0..self.dim {
            out[ax] = self.axes[ax].velocity(u);
        }
        out
    }

    pub fn flux_component(&self, u: f64, axis: usize) -> f64 {
        self.axes[axis].flux(u)
    }

    pub fn velocity_component(&self, u: f64, axis: usize) -> f64 {
        self.axes[axis].velocity(u)
    }

    /// Euclidean norm of the velocity vector.
    pub fn velocity_norm(&self, u: f64) -> f64 {
        let a = self.velocity(u);
        (a[0] * a[0] + a[1] * a[1]).sqrt()
    }

    /// Largest per-axis |a| over a state interval (CFL bound).
    pub fn max_abs_velocity(&self, lo: f64, hi: f64) -> f64 {
        (0..self.dim)
            .map(|ax| self.axes[ax].max_abs_velocity(lo, hi))
            .fold(0.0, f64::max)
    }

    pub fn check_in_range(&self, u: f64) -> Result<()> {
        if self.range_hint.contains(u) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                value: u,
                lo: self.range_hint.lo(),
                hi: self.range_hint.hi(),
            })
        }
    }
}

fn lipschitz_on(axes: &[AxisFlux; 2], dim: usize, range: Interval) -> f64 {
    let mut sq = 0.0;
    for ax in axes.iter().take(dim) {
        let d = ax.max_abs_velocity_derivative(range.lo(), range.hi());
        sq += d * d;
    }
    sq.sqrt()
}
