//! Manifest schema: one JSON document per experiment with a top-level
//! `command` plus command-specific keys. Validation errors always name the
//! offending key.

use conslaw::flux::FluxModel;
use serde::Deserialize;

#[derive(Debug)]
pub struct SchemaError(pub String);

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn key_err(key: &str, msg: impl std::fmt::Display) -> SchemaError {
    SchemaError(format!("manifest key `{}`: {}", key, msg))
}

#[derive(Debug, Deserialize)]
struct CommandProbe {
    command: String,
}

/// Parsed manifest, one variant per subcommand.
#[derive(Debug)]
pub enum Manifest {
    Solve(SolveManifest),
    Degeneracy(DegeneracyManifest),
    Transport(TransportManifest),
    Ndloc(NdlocManifest),
    Counterexample(CounterexampleManifest),
}

impl Manifest {
    pub fn command(&self) -> &'static str {
        match self {
            Manifest::Solve(_) => "solve",
            Manifest::Degeneracy(_) => "degeneracy",
            Manifest::Transport(_) => "transport",
            Manifest::Ndloc(_) => "ndloc",
            Manifest::Counterexample(_) => "counterexample",
        }
    }

    /// Parse and validate a manifest document.
    pub fn parse(bytes: &[u8]) -> Result<Manifest, SchemaError> {
        let probe: CommandProbe = serde_json::from_slice(bytes)
            .map_err(|e| SchemaError(format!("manifest: {}", e)))?;
        let parsed = match probe.command.as_str() {
            "solve" => Manifest::Solve(from_slice(bytes)?),
            "degeneracy" => Manifest::Degeneracy(from_slice(bytes)?),
            "transport" => Manifest::Transport(from_slice(bytes)?),
            "ndloc" => Manifest::Ndloc(from_slice(bytes)?),
            "counterexample" => Manifest::Counterexample(from_slice(bytes)?),
            other => {
                return Err(key_err(
                    "command",
                    format!(
                        "unknown command `{}` (expected solve | degeneracy | transport | ndloc | counterexample)",
                        other
                    ),
                ))
            }
        };
        parsed.validate()?;
        Ok(parsed)
    }

    fn validate(&self) -> Result<(), SchemaError> {
        match self {
            Manifest::Solve(m) => m.validate(),
            Manifest::Degeneracy(m) => m.validate(),
            Manifest::Transport(m) => m.validate(),
            Manifest::Ndloc(m) => m.validate(),
            Manifest::Counterexample(m) => m.validate(),
        }
    }
}

fn from_slice<'a, T: Deserialize<'a>>(bytes: &'a [u8]) -> Result<T, SchemaError> {
    serde_json::from_slice(bytes).map_err(|e| SchemaError(format!("manifest: {}", e)))
}

fn expect_command(got: &str, want: &str) -> Result<(), SchemaError> {
    if got == want {
        Ok(())
    } else {
        Err(key_err(
            "command",
            format!("expected `{}`, got `{}`", want, got),
        ))
    }
}

/// Initial data for solver runs.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Sine {
        #[serde(default = "default_mean")]
        mean: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_cycles")]
        cycles: usize,
    },
    Random {
        lo: f64,
        hi: f64,
    },
    Shock {
        left: f64,
        right: f64,
    },
    /// Profile constant along the direction (1, p/q) on `T^2`.
    Shear {
        #[serde(default = "default_mean")]
        mean: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        p: i64,
        q: i64,
    },
}

fn default_mean() -> f64 {
    0.5
}

fn default_amplitude() -> f64 {
    0.3
}

fn default_cycles() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSpec {
    pub epsilon: f64,
    #[serde(rename = "E")]
    pub e: [f64; 2],
    pub n_max: i64,
    pub q: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveManifest {
    pub command: String,
    pub flux: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub c: Option<Vec<f64>>,
    pub dim: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub cfl: f64,
    pub t_end: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub xi_bins: Option<usize>,
    #[serde(default)]
    pub output_every: Option<usize>,
    #[serde(default)]
    pub numerical_flux: Option<String>,
    #[serde(default)]
    pub t1_from_epsilon: Option<HorizonSpec>,
}

impl SolveManifest {
    fn validate(&self) -> Result<(), SchemaError> {
        expect_command(&self.command, "solve")?;
        if self.dim != 1 && self.dim != 2 {
            return Err(key_err("dim", format!("expected 1 or 2, got {}", self.dim)));
        }
        if self.n < 2 {
            return Err(key_err("N", format!("expected at least 2, got {}", self.n)));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(key_err(
                "cfl",
                format!("expected a value in (0, 1), got {}", self.cfl),
            ));
        }
        if !(self.t_end > 0.0) {
            return Err(key_err(
                "t_end",
                format!("expected a positive time, got {}", self.t_end),
            ));
        }
        if let Some(bins) = self.xi_bins {
            if bins < 2 {
                return Err(key_err("xi_bins", format!("expected at least 2, got {}", bins)));
            }
        }
        if let Some(every) = self.output_every {
            if every == 0 {
                return Err(key_err("output_every", "expected at least 1, got 0"));
            }
        }
        if let Some(nf) = &self.numerical_flux {
            if nf != "godunov" && nf != "engquist_osher" {
                return Err(key_err(
                    "numerical_flux",
                    format!("expected `godunov` or `engquist_osher`, got `{}`", nf),
                ));
            }
        }
        if let Some(h) = &self.t1_from_epsilon {
            if !(h.epsilon > 0.0) {
                return Err(key_err("t1_from_epsilon.epsilon", "must be positive"));
            }
            if !(h.e[0] < h.e[1]) {
                return Err(key_err("t1_from_epsilon.E", "must be a nonempty interval"));
            }
            if h.n_max < 1 {
                return Err(key_err("t1_from_epsilon.n_max", "must be at least 1"));
            }
        }
        build_flux(&self.flux, self.alpha, self.c.as_deref(), self.dim).map(|_| ())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegeneracyManifest {
    pub command: String,
    pub flux: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub c: Option<Vec<f64>>,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "E")]
    pub e: [f64; 2],
    pub n_max: i64,
    pub q: usize,
}

impl DegeneracyManifest {
    fn validate(&self) -> Result<(), SchemaError> {
        expect_command(&self.command, "degeneracy")?;
        if !(self.t > 0.0) {
            return Err(key_err("T", format!("expected a positive window, got {}", self.t)));
        }
        if !(self.e[0] < self.e[1]) {
            return Err(key_err("E", "expected lo < hi"));
        }
        if self.n_max < 1 {
            return Err(key_err("n_max", format!("expected at least 1, got {}", self.n_max)));
        }
        if self.q < 16 {
            return Err(key_err("q", format!("expected at least 16, got {}", self.q)));
        }
        let dim = flux_dim(&self.flux, self.c.as_deref());
        build_flux(&self.flux, self.alpha, self.c.as_deref(), dim).map(|_| ())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum F0Spec {
    /// `cos(2 pi x)` on every bin of `E`.
    Cosine,
    /// Uniform random values per (cell, bin).
    Random,
    /// Equilibrium function of a sine field.
    EquilibriumSine {
        #[serde(default = "default_mean")]
        mean: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportManifest {
    pub command: String,
    pub flux: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub c: Option<Vec<f64>>,
    #[serde(rename = "N")]
    pub n: usize,
    pub bins: usize,
    #[serde(rename = "E")]
    pub e: [f64; 2],
    #[serde(rename = "T")]
    pub t: f64,
    pub steps: usize,
    pub n_max: i64,
    pub q: usize,
    pub f0: F0Spec,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl TransportManifest {
    fn validate(&self) -> Result<(), SchemaError> {
        expect_command(&self.command, "transport")?;
        if self.n < 2 {
            return Err(key_err("N", format!("expected at least 2, got {}", self.n)));
        }
        if self.bins < 2 {
            return Err(key_err("bins", format!("expected at least 2, got {}", self.bins)));
        }
        if !(self.e[0] < self.e[1]) {
            return Err(key_err("E", "expected lo < hi"));
        }
        if !(self.t > 0.0) {
            return Err(key_err("T", "expected a positive window"));
        }
        if self.steps < 16 {
            return Err(key_err("steps", format!("expected at least 16, got {}", self.steps)));
        }
        if self.n_max < 1 {
            return Err(key_err("n_max", "expected at least 1"));
        }
        if self.q < 16 {
            return Err(key_err("q", format!("expected at least 16, got {}", self.q)));
        }
        let dim = flux_dim(&self.flux, self.c.as_deref());
        if dim != 1 {
            return Err(key_err("flux", "transport experiments run on T^1 fluxes"));
        }
        build_flux(&self.flux, self.alpha, self.c.as_deref(), dim).map(|_| ())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NdlocManifest {
    pub command: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(default = "default_e_frac")]
    pub e_frac: f64,
    pub n_fields: usize,
    pub n_deltas: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_e_frac() -> f64 {
    0.5
}

impl NdlocManifest {
    fn validate(&self) -> Result<(), SchemaError> {
        expect_command(&self.command, "ndloc")?;
        if self.n < 2 {
            return Err(key_err("N", format!("expected at least 2, got {}", self.n)));
        }
        if !(self.r > 0.0) {
            return Err(key_err("R", "expected a positive bound"));
        }
        if !(self.e_frac > 0.0 && self.e_frac < 1.0) {
            return Err(key_err(
                "e_frac",
                format!("expected a value in (0, 1), got {}", self.e_frac),
            ));
        }
        if self.n_fields == 0 {
            return Err(key_err("n_fields", "expected at least 1"));
        }
        if self.n_deltas == 0 {
            return Err(key_err("n_deltas", "expected at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleManifest {
    pub command: String,
    pub alpha: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_q_max")]
    pub q_max: i64,
    #[serde(default = "default_mean")]
    pub mean: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_levels() -> usize {
    3
}

fn default_q_max() -> i64 {
    8
}

impl CounterexampleManifest {
    fn validate(&self) -> Result<(), SchemaError> {
        expect_command(&self.command, "counterexample")?;
        if self.n < 4 {
            return Err(key_err("N", format!("expected at least 4, got {}", self.n)));
        }
        if self.levels == 0 {
            return Err(key_err("levels", "expected at least 1"));
        }
        if self.q_max < 1 {
            return Err(key_err("q_max", "expected at least 1"));
        }
        Ok(())
    }
}

fn flux_dim(flux: &str, c: Option<&[f64]>) -> usize {
    match flux {
        "iso_burgers2d" => 2,
        "linear" => c.map(|c| c.len()).unwrap_or(1),
        _ => 1,
    }
}

/// Build the flux named by the manifest keys `flux`, `alpha`, `c`.
pub fn build_flux(
    flux: &str,
    alpha: Option<f64>,
    c: Option<&[f64]>,
    dim: usize,
) -> Result<FluxModel, SchemaError> {
    let model = match flux {
        "burgers1d" => FluxModel::burgers1d(),
        "cubic1d" => FluxModel::cubic1d(),
        "iso_burgers2d" => {
            let alpha = alpha.ok_or_else(|| key_err("alpha", "required for iso_burgers2d"))?;
            FluxModel::iso_burgers2d(alpha)
        }
        "linear" => {
            let c = c.ok_or_else(|| key_err("c", "required for linear flux"))?;
            FluxModel::linear(c).map_err(|e| key_err("c", e))?
        }
        other => {
            return Err(key_err(
                "flux",
                format!(
                    "unknown flux `{}` (expected burgers1d | cubic1d | iso_burgers2d | linear)",
                    other
                ),
            ))
        }
    };
    if model.dim() != dim {
        return Err(key_err(
            "dim",
            format!("flux `{}` lives on T^{}, manifest says {}", flux, model.dim(), dim),
        ));
    }
    Ok(model)
}
