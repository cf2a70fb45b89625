use super::{ChiChoice, Study};
use crate::config::{check_list, parse_at, RunConfig};
use crate::error::{RunError, Stage};
use crate::output::Artifact;
use magnon_ghz::broadening::{self, DetuningScheme, Protection, TableCell, TableSetup};
use magnon_ghz::ghz::TraceOptions;
use magnon_ghz::hamiltonians::{self, ChiVariant};
use magnon_ghz::units::{deserialize_frequency, FrequencyUnit};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

pub struct Broadening;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Block {
    #[serde(default = "default_spins")]
    n_spins: usize,
    #[serde(deserialize_with = "deserialize_frequency", default = "default_g")]
    g: f64,
    #[serde(default = "default_r_ref")]
    r_ref: f64,
    #[serde(default = "default_omega_ratio")]
    omega_m_tilde_ratio: f64,
    #[serde(default = "default_delta_ratio")]
    delta_q_ratio: f64,
    #[serde(deserialize_with = "deserialize_frequency", default)]
    gamma_m: f64,
    #[serde(deserialize_with = "deserialize_frequency", default)]
    gamma_q: f64,
    #[serde(default = "default_cutoff")]
    fock_cutoff: usize,
    #[serde(default)]
    dissipative: bool,
    r_values: Vec<f64>,
    delta_omega: DeltaOmegaList,
    #[serde(default = "default_scheme")]
    scheme: DetuningScheme,
    #[serde(default)]
    chi: ChiChoice,
}

/// Δω values share one unit; the default reads them as 10⁶ rad/s.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DeltaOmegaList {
    values: Vec<f64>,
    #[serde(default = "default_delta_unit")]
    unit: FrequencyUnit,
}

fn default_spins() -> usize {
    3
}
fn default_g() -> f64 {
    TAU * 1.38
}
fn default_r_ref() -> f64 {
    3.0
}
fn default_omega_ratio() -> f64 {
    10.0
}
fn default_delta_ratio() -> f64 {
    60.0
}
fn default_cutoff() -> usize {
    8
}
fn default_scheme() -> DetuningScheme {
    DetuningScheme::SymmetricLinear
}
fn default_delta_unit() -> FrequencyUnit {
    FrequencyUnit::RadPerUs
}

#[derive(Serialize)]
struct CellReport {
    #[serde(flatten)]
    cell: TableCell,
    protection: Protection,
}

#[derive(Serialize)]
struct Metadata {
    setup: TableSetup,
    scheme: DetuningScheme,
    delta_omega_unit: FrequencyUnit,
    cells: Vec<Vec<CellReport>>,
}

impl Study for Broadening {
    fn name(&self) -> &'static str {
        "broadening"
    }

    fn describe(&self) -> &'static str {
        "first-peak fidelity table over Δω and r for a detuning profile"
    }

    fn run(&self, config: &RunConfig) -> Result<Vec<Artifact>, RunError> {
        let block: Block = parse_at("broadening", &config.block)?;
        check_list("broadening.r_values", &block.r_values)?;
        check_list("broadening.delta_omega.values", &block.delta_omega.values)?;
        let unit = block.delta_omega.unit;
        let delta_omega: Vec<f64> = block.delta_omega.values.iter().map(|&w| unit.to_internal(w)).collect();
        let setup = TableSetup {
            n_spins: block.n_spins,
            g: block.g,
            r_ref: block.r_ref,
            omega_m_tilde_ratio: block.omega_m_tilde_ratio,
            delta_q_ratio: block.delta_q_ratio,
            gamma_m: block.gamma_m,
            gamma_q: block.gamma_q,
            fock_cutoff: block.fock_cutoff,
            dissipative: block.dissipative,
        };
        let chi = match block.chi {
            ChiChoice::MainText => ChiVariant::MainText,
            ChiChoice::Appendix => ChiVariant::Appendix,
            ChiChoice::Fitted => {
                return Err(RunError::Config("broadening.chi: use appendix or main_text".into()));
            }
        };
        let options = TraceOptions { chi, evolve: config.tolerances, ..TraceOptions::default() };
        let table = broadening::fidelity_table(&setup, &block.r_values, &delta_omega, &block.scheme, &options)
            .stage("fidelity table")?;
        let cells = table
            .cells
            .iter()
            .map(|row| {
                row.iter()
                    .map(|cell| {
                        let p = setup.params(cell.r);
                        let couplings = hamiltonians::effective_couplings(&p, cell.r, chi).stage("effective couplings")?;
                        let profile = broadening::detuning_profile(setup.n_spins, cell.delta_omega, &block.scheme)
                            .stage("detuning profile")?;
                        let protection =
                            broadening::protection_ratio(&p, &couplings, &profile).stage("protection ratio")?;
                        Ok(CellReport { cell: cell.clone(), protection })
                    })
                    .collect::<Result<Vec<_>, RunError>>()
            })
            .collect::<Result<Vec<_>, RunError>>()?;
        let meta = Metadata { setup, scheme: block.scheme, delta_omega_unit: unit, cells };
        Ok(vec![
            Artifact::csv("broadening_table.csv", table.to_csv(|w| unit.from_internal(w))),
            Artifact::json("broadening.json", &meta),
        ])
    }
}
