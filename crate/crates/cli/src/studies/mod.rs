//! Study registry. Each study reads its own block from the run config and
//! returns its artifacts; nothing is written until it has succeeded.

use crate::config::{RunConfig, SystemSpec};
use crate::error::{RunError, Stage};
use crate::output::Artifact;
use magnon_ghz::ghz;
use magnon_ghz::hamiltonians::{ChiVariant, SystemParams};
use serde::{Deserialize, Serialize};

mod bistability;
mod broadening;
mod effective_check;
mod ghz_run;
mod ghz_sweep;
mod squeezing;

pub trait Study: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn run(&self, config: &RunConfig) -> Result<Vec<Artifact>, RunError>;
}

pub struct Registry {
    studies: Vec<Box<dyn Study>>,
}

impl Registry {
    pub fn new() -> Self {
        Registry {
            studies: vec![
                Box::new(bistability::Bistability),
                Box::new(squeezing::Squeezing),
                Box::new(ghz_run::Ghz),
                Box::new(ghz_sweep::GhzSweep),
                Box::new(broadening::Broadening),
                Box::new(effective_check::EffectiveCheck),
            ],
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.studies.iter().map(|s| s.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn Study> {
        self.studies.iter().find(|s| s.name() == name).map(|s| s.as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Study> {
        self.studies.iter().map(|s| s.as_ref())
    }
}

/// How χ is chosen for a GHZ run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiChoice {
    MainText,
    #[default]
    Appendix,
    /// Fitted on the two-spin version of the configured system.
    Fitted,
}

impl ChiChoice {
    pub fn resolve(self, system: &SystemSpec, r: f64) -> Result<(ChiVariant, Option<f64>), RunError> {
        Ok(match self {
            ChiChoice::MainText => (ChiVariant::MainText, None),
            ChiChoice::Appendix => (ChiVariant::Appendix, None),
            ChiChoice::Fitted => {
                let (pair, r) = system.with_spins(2).resolve(Some(r))?;
                let pair = SystemParams { gamma_m: 0.0, gamma_q: 0.0, ..pair };
                let fit = ghz::chi_fit(&pair, r).stage("fitting χ")?;
                (ChiVariant::Fitted(fit.chi), Some(fit.chi))
            }
        })
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_are_unique() {
        let registry = Registry::new();
        let mut names = registry.names();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 6);
        assert!(registry.get("ghz").is_some() && registry.get("nope").is_none());
    }
}
