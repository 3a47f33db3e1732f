//! The ten acceptance criteria as default experiment configurations.

use std::time::Duration;

use super::{run, Experiment, ExperimentConfig, Outcome};
use crate::error::Result;

#[derive(Clone, Copy, Debug)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub experiment: Experiment,
    pub budget: Duration,
}

const fn criterion(id: u8, name: &'static str, experiment: Experiment, secs: u64) -> Criterion {
    Criterion {
        id,
        name,
        experiment,
        budget: Duration::from_secs(secs),
    }
}

pub const CRITERIA: [Criterion; 10] = [
    criterion(1, "reproduction", Experiment::Reproduction, 10),
    criterion(2, "kernel localization", Experiment::KernelDecay, 10),
    criterion(3, "quadrature exactness", Experiment::QuadVerify, 60),
    criterion(4, "covering probability", Experiment::Covering, 30),
    criterion(5, "eignet closeness", Experiment::EignetCloseness, 60),
    criterion(6, "approximation rate", Experiment::ApproxRate, 10),
    criterion(7, "density estimation", Experiment::Density, 120),
    criterion(8, "local recovery", Experiment::LocalRecovery, 120),
    criterion(9, "smoothness profiling", Experiment::Smoothness, 180),
    criterion(10, "Mehler identity", Experiment::Mehler, 5),
];

impl Criterion {
    pub fn config(&self) -> ExperimentConfig {
        ExperimentConfig::new(self.experiment)
    }

    pub fn evaluate(&self) -> Result<Outcome> {
        run(&self.config())
    }
}
