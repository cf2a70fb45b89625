use super::{fmt, ChiChoice, Study};
use crate::config::{check_list, parse_at, RunConfig};
use crate::error::{RunError, Stage};
use crate::output::Artifact;
use magnon_ghz::ghz::{self, TraceOptions};
use magnon_ghz::hamiltonians;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub struct GhzSweep;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Block {
    n_values: Vec<usize>,
    r_values: Vec<f64>,
    /// Defaults to the system's cutoff.
    cutoffs: Option<Vec<usize>>,
    #[serde(default)]
    dissipative: bool,
    #[serde(default)]
    chi: ChiChoice,
    #[serde(default = "default_points")]
    points: usize,
}

fn default_points() -> usize {
    301
}

#[derive(Clone, Serialize)]
struct Row {
    n: usize,
    r: f64,
    fock_cutoff: usize,
    prep_time: f64,
    /// `None` when the maximum sits on the edge of the peak window.
    first_peak_time: Option<f64>,
    first_peak_fidelity: Option<f64>,
    truncation_flag: bool,
}

#[derive(Serialize)]
struct Metadata {
    dissipative: bool,
    chi: ChiChoice,
    rows: Vec<Row>,
}

impl Study for GhzSweep {
    fn name(&self) -> &'static str {
        "ghz_sweep"
    }

    fn describe(&self) -> &'static str {
        "first-peak GHZ fidelity over N, r and Fock cutoff, run in parallel"
    }

    fn run(&self, config: &RunConfig) -> Result<Vec<Artifact>, RunError> {
        let block: Block = parse_at("ghz_sweep", &config.block)?;
        check_list("ghz_sweep.n_values", &block.n_values)?;
        check_list("ghz_sweep.r_values", &block.r_values)?;
        if block.points < 3 {
            return Err(RunError::Config("ghz_sweep.points: need at least 3".into()));
        }
        let system = config.system()?;
        let cutoffs = match &block.cutoffs {
            Some(c) => {
                check_list("ghz_sweep.cutoffs", c)?;
                c.clone()
            }
            None => vec![system.resolve(Some(block.r_values[0]))?.0.fock_cutoff],
        };
        let mut cases = Vec::new();
        for &n in &block.n_values {
            for &r in &block.r_values {
                for &cutoff in &cutoffs {
                    let spec = system.with_spins(n).with_cutoff(cutoff);
                    let (p, r) = spec.resolve(Some(r))?;
                    let (chi, _) = block.chi.resolve(&spec, r)?;
                    cases.push((p, r, chi));
                }
            }
        }
        let rows = cases
            .par_iter()
            .map(|(p, r, chi)| {
                let couplings = hamiltonians::effective_couplings(p, *r, *chi).stage("effective couplings")?;
                let grid = ghz::prep_grid(couplings.prep_time(), 1.5, block.points);
                let options = TraceOptions {
                    chi: *chi,
                    peak_order: 0,
                    evolve: config.tolerances,
                    stop_after_first_peak: true,
                };
                let trace = ghz::fidelity_trace(p, *r, block.dissipative, &grid, &options).stage("fidelity trace")?;
                let peak = trace.peak().ok();
                Ok(Row {
                    n: p.n_spins,
                    r: *r,
                    fock_cutoff: p.fock_cutoff,
                    prep_time: trace.prep_time,
                    first_peak_time: peak.map(|x| x.time),
                    first_peak_fidelity: peak.map(|x| x.fidelity),
                    truncation_flag: trace.truncation_flag,
                })
            })
            .collect::<Result<Vec<Row>, RunError>>()?;

        let opt = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), fmt);
        let mut csv = String::from("N,r,fock_cutoff,prep_time,first_peak_time,first_peak_fidelity,truncation_flag\n");
        for row in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                row.n,
                row.r,
                row.fock_cutoff,
                fmt(row.prep_time),
                opt(row.first_peak_time),
                opt(row.first_peak_fidelity),
                row.truncation_flag
            ));
        }
        let meta = Metadata { dissipative: block.dissipative, chi: block.chi, rows };
        Ok(vec![Artifact::csv("ghz_sweep.csv", csv), Artifact::json("ghz_sweep.json", &meta)])
    }
}
