//! Experiment configuration: a single JSON document with one optional
//! section per subcommand. Validation errors name the offending field.

use serde::Deserialize;

fn default_j() -> f64 {
    1.0
}
fn default_dt() -> f64 {
    0.1
}
fn default_h_grid() -> Vec<f64> {
    vec![0.5, 1.0, 1.05, 1.4]
}
fn default_g_grid() -> Vec<f64> {
    vec![0.0, 0.5, 0.9]
}
fn default_bond_caps() -> Vec<usize> {
    vec![128]
}
fn default_orders() -> Vec<u32> {
    vec![2]
}
fn default_true() -> bool {
    true
}
fn default_stride() -> usize {
    1
}
fn default_t_max() -> f64 {
    30.0
}
fn default_t_step() -> f64 {
    0.1
}
fn default_window_step() -> f64 {
    0.25
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub influence: Option<InfluenceConfig>,
    pub toy: Option<ToyConfig>,
    pub echo: Option<EchoConfig>,
    pub fit: Option<FitConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfluenceConfig {
    #[serde(default = "default_j")]
    pub j: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_h_grid")]
    pub h: Vec<f64>,
    #[serde(default = "default_g_grid")]
    pub g: Vec<f64>,
    pub n_t_max: usize,
    #[serde(default = "default_bond_caps")]
    pub bond_cap: Vec<usize>,
    /// Rényi orders to sample; order 2 uses the direct norm formula, higher
    /// orders go through compressed operator powers.
    #[serde(default = "default_orders")]
    pub renyi_orders: Vec<u32>,
    /// Relative-scaling pairs (n, m), n > m >= 1.
    #[serde(default)]
    pub delta_pairs: Vec<(u32, u32)>,
    /// Emit the maximal bipartition mutual information per time step.
    #[serde(default = "default_true")]
    pub bipartition_mutual_info: bool,
    /// Disjoint two-block mutual-information scans, evaluated at the final
    /// time step.
    #[serde(default)]
    pub disjoint_blocks: Vec<DisjointSpec>,
    /// Step stride for the higher-order quantities (orders > 2, delta
    /// pairs); 1 samples every step.
    #[serde(default = "default_stride")]
    pub higher_order_stride: usize,
    /// Bond cap for compressed operator powers; defaults to twice the state
    /// cap when absent.
    pub power_bond_cap: Option<usize>,
    /// Write one checkpoint per grid point at the final time step.
    #[serde(default)]
    pub checkpoints: bool,
    /// Trotter-robustness horizon: when set, every grid point is re-run at
    /// dt and dt/2 up to this physical time and |delta S2| rows are emitted
    /// at the shared sample times.
    pub trotter_compare: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisjointSpec {
    /// Block length in Trotter steps.
    pub t_l: usize,
    /// Separations 0..=delta_t_max are scanned.
    pub delta_t_max: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfig {
    pub models: Vec<ToySpec>,
    /// Relative-scaling pairs (n, m), n > m >= 2.
    pub pairs: Vec<(u32, u32)>,
    /// Forward-backward Rényi orders (integer n >= 2).
    #[serde(default)]
    pub forward_backward_orders: Vec<u32>,
    #[serde(default)]
    pub t_min: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_t_step")]
    pub t_step: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToySpec {
    /// "single", "double", or "triple".
    pub variant: String,
    pub gamma1: f64,
    pub alpha1: f64,
    pub gamma2: Option<f64>,
    pub alpha2: Option<f64>,
    pub r: Option<f64>,
    pub r_prime: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchoConfig {
    pub runs: Vec<EchoRun>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchoRun {
    pub l: usize,
    #[serde(default = "default_j")]
    pub j: f64,
    pub h: f64,
    pub g: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub bond_cap: usize,
    pub t_max: f64,
    /// Optional (t_min, t_max) window for the exponent fit; results go to
    /// the JSON summary.
    pub fit_window: Option<(f64, f64)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// CSV file produced by the other subcommands.
    pub input: String,
    /// Quantity column value to select.
    pub quantity: String,
    /// Restrict to one grid point when the CSV mixes several.
    pub h: Option<f64>,
    pub g: Option<f64>,
    /// Model kinds to fit: "power_law", "exponential", "logarithmic",
    /// "linear".
    pub models: Vec<String>,
    /// Window lower bounds run lower_min..=lower_max in steps of
    /// window_step.
    pub lower_min: f64,
    pub lower_max: f64,
    #[serde(default = "default_window_step")]
    pub window_step: f64,
    pub upper: f64,
    #[serde(default)]
    pub derivative_mode: bool,
}

fn require(ok: bool, field: &str, why: &str) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(format!("{field}: {why}"))
    }
}

impl InfluenceConfig {
    pub fn validate(&self) -> Result<(), String> {
        require(self.dt > 0.0, "influence.dt", "must be positive")?;
        require(!self.h.is_empty(), "influence.h", "grid must be non-empty")?;
        require(!self.g.is_empty(), "influence.g", "grid must be non-empty")?;
        require(self.n_t_max >= 1, "influence.n_t_max", "must be at least 1")?;
        require(
            !self.bond_cap.is_empty(),
            "influence.bond_cap",
            "grid must be non-empty",
        )?;
        require(
            self.bond_cap.iter().all(|&c| c >= 1),
            "influence.bond_cap",
            "caps must be at least 1",
        )?;
        require(
            self.renyi_orders.iter().all(|&n| n >= 2),
            "influence.renyi_orders",
            "orders must be at least 2",
        )?;
        require(
            self.delta_pairs.iter().all(|&(n, m)| n > m && m >= 1),
            "influence.delta_pairs",
            "pairs must satisfy n > m >= 1",
        )?;
        require(
            self.higher_order_stride >= 1,
            "influence.higher_order_stride",
            "must be at least 1",
        )?;
        if let Some(tc) = self.trotter_compare {
            require(tc > 0.0, "influence.trotter_compare", "must be positive")?;
        }
        for d in &self.disjoint_blocks {
            require(d.t_l >= 1, "influence.disjoint_blocks.t_l", "must be at least 1")?;
            require(
                2 * d.t_l + d.delta_t_max <= self.n_t_max,
                "influence.disjoint_blocks.delta_t_max",
                "blocks must fit inside n_t_max",
            )?;
        }
        Ok(())
    }
}

impl ToyConfig {
    pub fn validate(&self) -> Result<(), String> {
        require(!self.models.is_empty(), "toy.models", "must be non-empty")?;
        require(!self.pairs.is_empty(), "toy.pairs", "must be non-empty")?;
        require(
            self.pairs.iter().all(|&(n, m)| n > m && m >= 2),
            "toy.pairs",
            "pairs must satisfy n > m >= 2",
        )?;
        require(
            self.forward_backward_orders.iter().all(|&n| n >= 2),
            "toy.forward_backward_orders",
            "orders must be at least 2",
        )?;
        require(self.t_step > 0.0, "toy.t_step", "must be positive")?;
        require(self.t_max > self.t_min, "toy.t_max", "must exceed t_min")?;
        for m in &self.models {
            match m.variant.as_str() {
                "single" => {}
                "double" => {
                    require(
                        m.gamma2.is_some() && m.alpha2.is_some() && m.r.is_some(),
                        "toy.models",
                        "double variant needs gamma2, alpha2, r",
                    )?;
                }
                "triple" => {
                    require(
                        m.gamma2.is_some()
                            && m.alpha2.is_some()
                            && m.r.is_some()
                            && m.r_prime.is_some(),
                        "toy.models",
                        "triple variant needs gamma2, alpha2, r, r_prime",
                    )?;
                }
                other => {
                    return Err(format!(
                        "toy.models.variant: unknown variant \"{other}\" (expected single, double, or triple)"
                    ))
                }
            }
        }
        Ok(())
    }
}

impl EchoConfig {
    pub fn validate(&self) -> Result<(), String> {
        require(!self.runs.is_empty(), "echo.runs", "must be non-empty")?;
        for r in &self.runs {
            require(
                r.l >= 4 && r.l % 2 == 0,
                "echo.runs.l",
                "chain length must be even and at least 4",
            )?;
            require(r.dt > 0.0, "echo.runs.dt", "must be positive")?;
            require(r.bond_cap >= 1, "echo.runs.bond_cap", "must be at least 1")?;
            require(r.t_max > 0.0, "echo.runs.t_max", "must be positive")?;
        }
        Ok(())
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), String> {
        require(!self.models.is_empty(), "fit.models", "must be non-empty")?;
        for m in &self.models {
            require(
                matches!(
                    m.as_str(),
                    "power_law" | "exponential" | "logarithmic" | "linear"
                ),
                "fit.models",
                "unknown model kind",
            )?;
        }
        require(self.window_step > 0.0, "fit.window_step", "must be positive")?;
        require(
            self.lower_max >= self.lower_min,
            "fit.lower_max",
            "must be at least lower_min",
        )?;
        require(self.upper > self.lower_max, "fit.upper", "must exceed lower_max")?;
        Ok(())
    }
}
