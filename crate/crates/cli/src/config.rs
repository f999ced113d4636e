//! Experiment configuration: a single JSON file describing the system, cone,
//! reduction, desirable set, grid, integration and sampling choices.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use viakernel_core::cone::{ConeSpec, ConvexCone};
use viakernel_core::dynamics::{ControlSet, ControlledSystem, Reduction, SamplingPlan};
use viakernel_core::flow::ControlPath;
use viakernel_core::systems::{decay_control, linear_system, single_integrator};
use viakernel_core::viability::{BoxConstraints, DesirableSet, KernelGridSpec};
use viakernel_core::wolbachia::{wolbachia_system, WolbachiaParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone: Option<ConeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub desirable: Option<DesirableSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<KernelGridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration: Option<IntegrationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// 2-D slices to export after a kernel run: pairs of dimensions plus the
    /// fixed indices of the remaining dimensions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slices: Vec<SliceSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemSpec {
    pub name: String,
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlSpec {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Finite(Vec<Vec<f64>>),
}

impl ControlSpec {
    fn build(&self) -> ControlSet {
        match self {
            ControlSpec::Box { lower, upper } => {
                ControlSet::Box { lower: lower.clone(), upper: upper.clone() }
            }
            ControlSpec::Finite(values) => ControlSet::Finite(values.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionSpec {
    Identity,
    Constant(Vec<f64>),
}

impl ReductionSpec {
    pub fn build(&self) -> Reduction {
        match self {
            ReductionSpec::Identity => Reduction::identity(),
            ReductionSpec::Constant(v) => Reduction::constant(v.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesirableSpec {
    pub state_lower: Vec<Option<f64>>,
    pub state_upper: Vec<Option<f64>>,
    pub control_lower: Vec<Option<f64>>,
    pub control_upper: Vec<Option<f64>>,
}

impl DesirableSpec {
    pub fn build(&self) -> DesirableSet {
        DesirableSet::from_boxes(
            BoxConstraints { lower: self.state_lower.clone(), upper: self.state_upper.clone() },
            BoxConstraints { lower: self.control_lower.clone(), upper: self.control_upper.clone() },
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegrationSpec {
    pub dt: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_max_iter() -> usize {
    500
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub state_lower: Vec<f64>,
    pub state_upper: Vec<f64>,
    #[serde(default = "default_sample_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_sample_count() -> usize {
    10_000
}

impl SamplingSpec {
    pub fn build(&self, seed_override: Option<u64>) -> SamplingPlan {
        SamplingPlan::new(self.state_lower.clone(), self.state_upper.clone())
            .with_count(self.count)
            .with_seed(seed_override.unwrap_or(self.seed))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSpec {
    Constant { value: Vec<f64>, dt: f64, segments: usize },
    BangBang { lo: Vec<f64>, hi: Vec<f64>, dt: f64, segments: usize },
    Values { dt: f64, values: Vec<Vec<f64>> },
}

impl PathSpec {
    pub fn build(&self, seed: u64) -> Result<ControlPath> {
        Ok(match self {
            PathSpec::Constant { value, dt, segments } => {
                ControlPath::constant(value.clone(), *dt, *segments)?
            }
            PathSpec::BangBang { lo, hi, dt, segments } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                ControlPath::random_bang_bang(&mut rng, lo, hi, *dt, *segments)?
            }
            PathSpec::Values { dt, values } => ControlPath::new(*dt, values.clone())?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceSpec {
    pub dims: [usize; 2],
    pub fixed: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Instantiate the system from the compiled-in registry.
    pub fn build_system(&self) -> Result<ControlledSystem> {
        let spec = &self.system;
        let sys = match spec.name.as_str() {
            "wolbachia" => {
                let params: WolbachiaParams = if spec.params.is_null() {
                    WolbachiaParams::preset_default()
                } else {
                    serde_json::from_value(spec.params.clone())
                        .context("wolbachia parameters")?
                };
                params.validate().map_err(|e| anyhow!(e.to_string()))?;
                wolbachia_system(&params)
            }
            "integrator" => {
                #[derive(Deserialize)]
                struct P {
                    #[serde(default = "one")]
                    dim: usize,
                }
                fn one() -> usize {
                    1
                }
                let p: P = serde_json::from_value(if spec.params.is_null() {
                    serde_json::json!({})
                } else {
                    spec.params.clone()
                })
                .context("integrator parameters")?;
                single_integrator(p.dim).with_unrestricted_domain()
            }
            "decay_control" => decay_control().with_unrestricted_domain(),
            "linear" => {
                #[derive(Deserialize)]
                struct P {
                    a: Vec<Vec<f64>>,
                    #[serde(default)]
                    b: Option<Vec<Vec<f64>>>,
                }
                let p: P =
                    serde_json::from_value(spec.params.clone()).context("linear parameters")?;
                linear_system(p.a, p.b).with_unrestricted_domain()
            }
            other => bail!("unknown system '{other}' (registry: wolbachia, integrator, decay_control, linear)"),
        };
        // Optional control-set override.
        Ok(match &spec.control {
            Some(control) => {
                let set = control.build();
                let inner = sys.clone();
                ControlledSystem::new(
                    sys.dim_state(),
                    set.dim(),
                    set,
                    move |x, u, out| inner.eval_into(x, u, out),
                )
                .with_state_domain({
                    let inner = sys.clone();
                    move |x: &[f64]| inner.in_domain(x)
                })
            }
            None => sys,
        })
    }

    pub fn build_cone(&self) -> Result<ConvexCone> {
        let spec = self.cone.as_ref().ok_or_else(|| anyhow!("config is missing 'cone'"))?;
        spec.build().map_err(|e| anyhow!(e.to_string()))
    }

    pub fn build_reduction(&self) -> Result<Reduction> {
        Ok(self
            .reduction
            .as_ref()
            .ok_or_else(|| anyhow!("config is missing 'reduction'"))?
            .build())
    }

    pub fn build_desirable(&self) -> Result<DesirableSet> {
        Ok(self
            .desirable
            .as_ref()
            .ok_or_else(|| anyhow!("config is missing 'desirable'"))?
            .build())
    }

    pub fn build_plan(&self, seed_override: Option<u64>) -> Result<SamplingPlan> {
        Ok(self
            .sampling
            .as_ref()
            .ok_or_else(|| anyhow!("config is missing 'sampling'"))?
            .build(seed_override))
    }

    pub fn grid_spec(&self) -> Result<&KernelGridSpec> {
        self.grid.as_ref().ok_or_else(|| anyhow!("config is missing 'grid'"))
    }

    pub fn integration(&self) -> Result<&IntegrationSpec> {
        self.integration.as_ref().ok_or_else(|| anyhow!("config is missing 'integration'"))
    }

    pub fn controls(&self) -> Result<&Vec<Vec<f64>>> {
        self.controls.as_ref().ok_or_else(|| anyhow!("config is missing 'controls'"))
    }

    pub fn build_path(&self, seed_override: Option<u64>) -> Result<ControlPath> {
        let seed = seed_override.or(self.seed).unwrap_or(0);
        self.path
            .as_ref()
            .ok_or_else(|| anyhow!("config is missing 'path'"))?
            .build(seed)
    }
}
