use super::{ChiChoice, Study};
use crate::config::{parse_at, RunConfig};
use crate::error::{RunError, Stage};
use crate::output::Artifact;
use magnon_ghz::dynamics::Diagnostics;
use magnon_ghz::ghz::{self, GhzSummary, TraceOptions};
use magnon_ghz::hamiltonians::{self, EffectiveCouplings};
use serde::{Deserialize, Serialize};

pub struct Ghz;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct Block {
    pub r: Option<f64>,
    #[serde(default)]
    pub dissipative: bool,
    #[serde(default)]
    pub chi: ChiChoice,
    #[serde(default)]
    pub peak_order: usize,
    /// Trace length in units of the preparation time T.
    #[serde(default = "default_span")]
    pub span: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub stop_after_first_peak: bool,
}

fn default_span() -> f64 {
    1.5
}

fn default_points() -> usize {
    601
}

#[derive(Serialize)]
struct Report {
    #[serde(flatten)]
    summary: GhzSummary,
    prep_time: f64,
    couplings: EffectiveCouplings,
    truncation_flag: bool,
    diagnostics: Option<Diagnostics>,
}

impl Study for Ghz {
    fn name(&self) -> &'static str {
        "ghz"
    }

    fn describe(&self) -> &'static str {
        "GHZ fidelity trace in the squeezed frame, closed or with Lindblad dissipation"
    }

    fn run(&self, config: &RunConfig) -> Result<Vec<Artifact>, RunError> {
        let block: Block = parse_at("ghz", &config.block)?;
        if block.points < 3 || !(block.span > 0.0) {
            return Err(RunError::Config("ghz: need points ≥ 3 and span > 0".into()));
        }
        let system = config.system()?;
        let (p, r) = system.resolve(block.r)?;
        let (chi, chi_fitted) = block.chi.resolve(system, r)?;
        let couplings = hamiltonians::effective_couplings(&p, r, chi).stage("effective couplings")?;
        let grid = ghz::prep_grid(couplings.prep_time(), block.span, block.points);
        let options = TraceOptions {
            chi,
            peak_order: block.peak_order,
            evolve: config.tolerances,
            stop_after_first_peak: block.stop_after_first_peak,
        };
        let trace = ghz::fidelity_trace(&p, r, block.dissipative, &grid, &options).stage("fidelity trace")?;
        let peak = trace.peak().stage("locating the first peak")?;
        let report = Report {
            summary: GhzSummary {
                n: p.n_spins,
                r,
                dissipative: block.dissipative,
                chi_fitted,
                first_peak_time: peak.time,
                first_peak_fidelity: peak.fidelity,
            },
            prep_time: trace.prep_time,
            couplings: trace.couplings,
            truncation_flag: trace.truncation_flag,
            diagnostics: trace.diagnostics,
        };
        Ok(vec![Artifact::csv("ghz_trace.csv", trace.to_csv()), Artifact::json("ghz_summary.json", &report)])
    }
}
