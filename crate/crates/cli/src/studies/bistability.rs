use super::Study;
use crate::config::{parse_at, check_list, Grid, RunConfig};
use crate::error::{RunError, Stage};
use crate::output::Artifact;
use magnon_ghz::steady_state::{self, CriticalPoint, SteadyParams, SwitchingPoint};
use magnon_ghz::units::deserialize_frequency;
use serde::{Deserialize, Serialize};

pub struct Bistability;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct Block {
    #[serde(deserialize_with = "deserialize_frequency")]
    pub gamma_m: f64,
    #[serde(deserialize_with = "deserialize_frequency")]
    pub kerr_k: f64,
    /// Ω_d in units of the critical drive.
    pub drive_ratios: Vec<f64>,
    pub delta_m: Grid,
}

#[derive(Serialize)]
struct Regime {
    drive_ratio: f64,
    drive_amp: f64,
    file: String,
    window: Option<(SwitchingPoint, SwitchingPoint)>,
    branches: usize,
}

#[derive(Serialize)]
struct Metadata {
    units: &'static str,
    critical: CriticalPoint,
    regimes: Vec<Regime>,
}

impl Study for Bistability {
    fn name(&self) -> &'static str {
        "bistability"
    }

    fn describe(&self) -> &'static str {
        "steady-state 𝒦 branches with stability labels, one CSV per drive"
    }

    fn run(&self, config: &RunConfig) -> Result<Vec<Artifact>, RunError> {
        let block: Block = parse_at("bistability", &config.block)?;
        check_list("bistability.drive_ratios", &block.drive_ratios)?;
        let grid = block.delta_m.values("bistability.delta_m")?;
        let critical = steady_state::critical_drive(block.gamma_m, block.kerr_k).stage("critical drive")?;
        let mut artifacts = Vec::new();
        let mut regimes = Vec::new();
        for &ratio in &block.drive_ratios {
            let template = SteadyParams {
                delta_m: 0.0,
                gamma_m: block.gamma_m,
                kerr_k: block.kerr_k,
                drive_amp: ratio * critical.omega_c,
            };
            template.validate().map_err(|e| RunError::Config(format!("bistability: {e}")))?;
            let sweep = steady_state::sweep(&template, &grid).stage("steady-state sweep")?;
            let file = format!("bistability_drive_{ratio}.csv");
            regimes.push(Regime {
                drive_ratio: ratio,
                drive_amp: template.drive_amp,
                file: file.clone(),
                window: steady_state::switching_points(&template).ok(),
                branches: sweep.branch_count,
            });
            artifacts.push(Artifact::csv(file, sweep.to_csv()));
        }
        artifacts.push(Artifact::json(
            "bistability.json",
            &Metadata { units: "rad/us", critical, regimes },
        ));
        Ok(artifacts)
    }
}
