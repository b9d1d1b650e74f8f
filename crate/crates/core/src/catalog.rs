//! Bundled example configurations.

use std::path::PathBuf;

use crate::config::{parse_config_str, ConfigError, LoadedConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExampleCatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub json: &'static str,
}

impl ExampleCatalogEntry {
    pub fn load(&self) -> Result<LoadedConfig, ConfigError> {
        parse_config_str(self.json, PathBuf::new())
    }
}

macro_rules! entry {
    ($name:literal, $description:literal) => {
        ExampleCatalogEntry {
            name: $name,
            description: $description,
            json: include_str!(concat!("../configs/", $name, ".json")),
        }
    };
}

const CATALOG: [ExampleCatalogEntry; 5] = [
    entry!(
        "su2_rigid_body",
        "free rigid body on SU(2), moments 1, 2, 3"
    ),
    entry!(
        "s3_t2_interval",
        "round S^3 under T^2, steady constant fiber velocity"
    ),
    entry!("t3_circle", "flat 3-torus over a circle, transported shear"),
    entry!(
        "berger_circle",
        "Fourier-perturbed SU(2) fibers over a circle, seeded random data"
    ),
    entry!(
        "boundary_interval",
        "SU(2) fibers over an interval with boundary orbits at both ends"
    ),
];

/// All bundled examples in their documented order.
pub fn list_examples() -> &'static [ExampleCatalogEntry] {
    &CATALOG
}

pub fn example(name: &str) -> Option<&'static ExampleCatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::build;

    #[test]
    fn every_entry_validates() {
        for e in list_examples() {
            let loaded = e.load().unwrap_or_else(|err| panic!("{}: {err}", e.name));
            assert_eq!(loaded.config.name.as_deref(), Some(e.name));
            let prepared = build(&loaded).unwrap_or_else(|err| panic!("{}: {err}", e.name));
            assert!(prepared.report.passed(), "{}:\n{}", e.name, prepared.report);
        }
    }

    #[test]
    fn t3_circle_is_a_256_node_circle() {
        let c = example("t3_circle").unwrap().load().unwrap().config;
        assert_eq!(c.kind(), crate::solver::ProblemKind::Circle);
        assert_eq!(c.solver.n, 256);
    }
}
