use super::{fmt, Study};
use crate::config::{parse_at, Grid, RunConfig};
use crate::error::{RunError, Stage};
use crate::output::Artifact;
use magnon_ghz::steady_state::{self, SteadyParams, SweepRecord, SwitchingPoint};
use magnon_ghz::units::deserialize_frequency;
use serde::{Deserialize, Serialize};

pub struct Squeezing;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Block {
    #[serde(deserialize_with = "deserialize_frequency")]
    gamma_m: f64,
    #[serde(deserialize_with = "deserialize_frequency")]
    kerr_k: f64,
    drive_ratio: f64,
    delta_m: Grid,
}

#[derive(Serialize)]
struct Extreme {
    delta_m: f64,
    r: f64,
}

#[derive(Serialize)]
struct Metadata {
    units: &'static str,
    drive_amp: f64,
    window: Option<(SwitchingPoint, SwitchingPoint)>,
    r_max: Option<Extreme>,
    r_min: Option<Extreme>,
}

impl Study for Squeezing {
    fn name(&self) -> &'static str {
        "squeezing"
    }

    fn describe(&self) -> &'static str {
        "squeezing parameter r and coupling enhancement along the stable branches"
    }

    fn run(&self, config: &RunConfig) -> Result<Vec<Artifact>, RunError> {
        let block: Block = parse_at("squeezing", &config.block)?;
        let grid = block.delta_m.values("squeezing.delta_m")?;
        let critical = steady_state::critical_drive(block.gamma_m, block.kerr_k).stage("critical drive")?;
        let template = SteadyParams {
            delta_m: 0.0,
            gamma_m: block.gamma_m,
            kerr_k: block.kerr_k,
            drive_amp: block.drive_ratio * critical.omega_c,
        };
        template.validate().map_err(|e| RunError::Config(format!("squeezing: {e}")))?;
        let sweep = steady_state::sweep(&template, &grid).stage("steady-state sweep")?;
        let stable: Vec<_> = sweep.records.iter().filter(|rec| rec.stable && rec.r.is_some()).collect();

        let mut csv = String::from("delta_m,kappa,branch_id,r,enhancement\n");
        for rec in &stable {
            let r = rec.r.unwrap_or(f64::NAN);
            csv.push_str(&format!("{},{},{},{},{}\n", fmt(rec.delta_m), fmt(rec.kappa), rec.branch_id, fmt(r), fmt(r.exp())));
        }
        let r_of = |rec: &&SweepRecord| rec.r.unwrap_or(f64::NAN);
        let extreme = |rec: Option<&&SweepRecord>| rec.map(|rec| Extreme { delta_m: rec.delta_m, r: r_of(rec) });
        let r_max = extreme(stable.iter().max_by(|a, b| r_of(a).total_cmp(&r_of(b))));
        let r_min = extreme(stable.iter().min_by(|a, b| r_of(a).total_cmp(&r_of(b))));
        let meta = Metadata {
            units: "rad/us",
            drive_amp: template.drive_amp,
            window: steady_state::switching_points(&template).ok(),
            r_max,
            r_min,
        };
        Ok(vec![Artifact::csv("squeezing.csv", csv), Artifact::json("squeezing.json", &meta)])
    }
}
