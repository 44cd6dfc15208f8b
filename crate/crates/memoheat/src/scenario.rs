//! Scenario files: JSON descriptions of a solve/verify run.
//!
//! ```json
//! {
//!   "kernel": {"a": [1.0], "b": [0.0]},
//!   "N": 1,
//!   "xi": {"delta": 1},
//!   "grid": {"t_end": 10.0, "step": 1e-3},
//!   "eps": 1.0,
//!   "s": 0.0
//! }
//! ```
//!
//! The kernel is either a literal `{"a": [...], "b": [...]}` or a generator
//! `{"A":…, "p":…, "B":…, "q":…, "tail_tol":…}`; `xi` is `{"delta": m}`,
//! `{"decay_p": p}` or `{"values": [...]}`; forcing lists per-mode
//! damped-sinusoid terms or grid samples. Missing optional fields are
//! filled with defaults and echoed back in the run header.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kernel::{GeneratorRule, Kernel};
use crate::modes::{Forcing, Method, ModeForcing, PhaseKind, SinusoidTerm, TimeGrid};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelSpec {
    Literal { a: Vec<f64>, b: Vec<f64> },
    Generator(GeneratorRule),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XiSpec {
    /// ξₙ = value·δ_{n,m}
    Delta {
        delta: u32,
        #[serde(default = "one")]
        value: f64,
    },
    /// ξₙ = scale·n^{−p}
    Decay {
        decay_p: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Literal coefficients for n = 1..len; zero beyond.
    Values { values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermSpec {
    pub c: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub omega: f64,
    pub kind: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeForcingSpec {
    pub n: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ForcingSpec {
    #[serde(default)]
    pub modes: Vec<ModeForcingSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub t_end: f64,
    /// Optional; defaults to a mode-resolution-aware step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

/// Raw scenario file, prior to validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub kernel: KernelSpec,
    #[serde(rename = "N")]
    pub n_modes: u32,
    #[serde(default)]
    pub xi: Option<XiSpec>,
    #[serde(default)]
    pub forcing: Option<ForcingSpec>,
    pub grid: Option<GridSpec>,
    #[serde(default = "one")]
    pub eps: f64,
    #[serde(default)]
    pub s: f64,
    #[serde(default)]
    pub method: Option<String>,
    /// Forcing weight exponent γ̂ used by the strong-estimate checks.
    #[serde(default)]
    pub gamma_hat: f64,
}

/// A validated scenario with all defaults resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    kernel: Kernel,
    pub n_modes: u32,
    xi: Vec<f64>,
    forcing: Forcing,
    pub grid: TimeGrid,
    pub eps: f64,
    pub s: f64,
    pub method: Method,
    pub gamma_hat: f64,
    digest: String,
    echo: serde_json::Value,
}

impl Scenario {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// ξₙ for n = 1..N (zero outside).
    pub fn xi(&self, n: u32) -> f64 {
        if n >= 1 && n <= self.n_modes {
            self.xi[(n - 1) as usize]
        } else {
            0.0
        }
    }

    pub fn xi_seq(&self) -> &[f64] {
        &self.xi
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    /// Hex digest of the canonical scenario JSON; stamped into outputs.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    /// The validated scenario with defaults filled, for the run header.
    pub fn echo(&self) -> &serde_json::Value {
        &self.echo
    }

    /// Derived scenario with a different mode count (used by batch checks).
    pub fn with_n_modes(&self, n_modes: u32, file: &ScenarioFile) -> Result<Scenario> {
        let mut f = file.clone();
        f.n_modes = n_modes;
        Scenario::from_file(f)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Scenario> {
        if file.n_modes < 1 {
            return Err(Error::scenario("N", "must be at least 1"));
        }
        let kernel = match &file.kernel {
            KernelSpec::Literal { a, b } => Kernel::new(a.clone(), b.clone())?,
            KernelSpec::Generator(rule) => Kernel::from_generator(rule)?,
        };
        let grid_spec = file
            .grid
            .as_ref()
            .ok_or_else(|| Error::scenario("grid", "missing field"))?;
        if !(file.eps > 0.0) {
            return Err(Error::scenario("eps", "must be positive"));
        }
        let step = match grid_spec.step {
            Some(s) => s,
            None => {
                // fit the default step to an integer number of intervals
                let raw = TimeGrid::default_step(file.n_modes, kernel.wave_speed());
                let count = (grid_spec.t_end / raw).ceil().max(1.0);
                grid_spec.t_end / count
            }
        };
        let grid = match TimeGrid::new(grid_spec.t_end, step) {
            Ok(g) => g,
            Err(e) => return Err(Error::scenario("grid", e.to_string())),
        };
        let n = file.n_modes as usize;
        let xi = match &file.xi {
            None => vec![0.0; n],
            Some(XiSpec::Delta { delta, value }) => {
                if *delta < 1 || *delta > file.n_modes {
                    return Err(Error::scenario("xi", format!("delta index {delta} not in 1..=N")));
                }
                let mut v = vec![0.0; n];
                v[(*delta - 1) as usize] = *value;
                v
            }
            Some(XiSpec::Decay { decay_p, scale }) => (1..=n)
                .map(|i| scale * (i as f64).powf(-decay_p))
                .collect(),
            Some(XiSpec::Values { values }) => {
                if values.len() > n {
                    return Err(Error::scenario(
                        "xi",
                        format!("{} values for N = {}", values.len(), file.n_modes),
                    ));
                }
                let mut v = values.clone();
                v.resize(n, 0.0);
                v
            }
        };
        let mut forcing = Forcing::zero();
        if let Some(spec) = &file.forcing {
            for mode in &spec.modes {
                if mode.n < 1 || mode.n > file.n_modes {
                    return Err(Error::scenario(
                        "forcing",
                        format!("mode index {} not in 1..=N", mode.n),
                    ));
                }
                let rule = match (&mode.terms, &mode.samples) {
                    (Some(terms), None) => {
                        let mut out = Vec::with_capacity(terms.len());
                        for t in terms {
                            let phase = match t.kind.as_str() {
                                "cos" => PhaseKind::Cos,
                                "sin" => PhaseKind::Sin,
                                other => {
                                    return Err(Error::scenario(
                                        "forcing",
                                        format!("term kind must be cos|sin, got `{other}`"),
                                    ))
                                }
                            };
                            out.push(SinusoidTerm {
                                amplitude: t.c,
                                decay: t.lambda,
                                frequency: t.omega,
                                phase,
                            });
                        }
                        ModeForcing::Sinusoids(out)
                    }
                    (None, Some(samples)) => ModeForcing::Samples(samples.clone()),
                    _ => {
                        return Err(Error::scenario(
                            "forcing",
                            format!("mode {} must set exactly one of terms|samples", mode.n),
                        ))
                    }
                };
                forcing.set_mode(mode.n, rule);
            }
        }
        let method = match file.method.as_deref() {
            None | Some("ode") => Method::Ode,
            Some("volterra") => Method::Volterra,
            Some(other) => {
                return Err(Error::scenario(
                    "method",
                    format!("must be ode|volterra, got `{other}`"),
                ))
            }
        };

        // canonical echo with every default resolved
        let mut echo_file = file.clone();
        echo_file.grid = Some(GridSpec {
            t_end: grid.t_end(),
            step: Some(grid.step()),
        });
        echo_file.method = Some(
            match method {
                Method::Ode => "ode",
                Method::Volterra => "volterra",
            }
            .to_string(),
        );
        if echo_file.xi.is_none() {
            echo_file.xi = Some(XiSpec::Values { values: vec![0.0; n] });
        }
        if echo_file.forcing.is_none() {
            echo_file.forcing = Some(ForcingSpec::default());
        }
        let echo = serde_json::to_value(&echo_file).expect("echo serializes");
        let canonical = serde_json::to_string(&echo).expect("echo serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hex_prefix(&hasher.finalize(), 16);

        Ok(Scenario {
            kernel,
            n_modes: file.n_modes,
            xi,
            forcing,
            grid,
            eps: file.eps,
            s: file.s,
            method,
            gamma_hat: file.gamma_hat,
            digest,
            echo,
        })
    }
}

fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut s = String::with_capacity(chars);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
        if s.len() >= chars {
            break;
        }
    }
    s.truncate(chars);
    s
}

/// Reads a scenario file without validating it (batch checks re-derive
/// variants from the raw file).
pub fn load_scenario_file(path: &std::path::Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &std::path::Path) -> Result<Scenario> {
    Scenario::from_file(load_scenario_file(path)?)
}
