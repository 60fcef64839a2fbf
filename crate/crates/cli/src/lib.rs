//! Scenario-driven experiment runner behind the `leoiot` binary.
//!
//! [`run`] validates a [`Scenario`], executes one command and returns every
//! output file in memory together with a manifest; [`RunReport::write`]
//! puts them on disk. Output bytes depend only on the scenario (including
//! its seed), never on timing or thread count.

// `!(x > y)` checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiments;
pub mod scenario;
pub mod table;

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use experiments::SummaryRow;
pub use scenario::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Command {
    Preprocess,
    Generate,
    Modes,
    Traffic,
    Collision,
    Linkbudget,
    Visibility,
    EffectiveData,
    Lifetime,
    Report,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Preprocess,
        Command::Generate,
        Command::Modes,
        Command::Traffic,
        Command::Collision,
        Command::Linkbudget,
        Command::Visibility,
        Command::EffectiveData,
        Command::Lifetime,
        Command::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Preprocess => "preprocess",
            Command::Generate => "generate",
            Command::Modes => "modes",
            Command::Traffic => "traffic",
            Command::Collision => "collision",
            Command::Linkbudget => "linkbudget",
            Command::Visibility => "visibility",
            Command::EffectiveData => "effective-data",
            Command::Lifetime => "lifetime",
            Command::Report => "report",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub command: String,
    pub scenario: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub provenance: Provenance,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug)]
pub struct RunReport {
    pub manifest: Manifest,
    pub summary: Vec<SummaryRow>,
    /// Every emitted file, including the manifest, keyed by relative path.
    pub files: BTreeMap<String, Vec<u8>>,
    /// Rendered tables for the terminal.
    pub text: String,
}

impl RunReport {
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

fn dispatch(command: Command, sc: &Scenario) -> anyhow::Result<experiments::Outputs> {
    use experiments as e;
    match command {
        Command::Preprocess => e::preprocess_cmd(sc),
        Command::Generate => e::generate(sc),
        Command::Modes => e::modes(sc),
        Command::Traffic => e::traffic(sc),
        Command::Collision => e::collision(sc),
        Command::Linkbudget => e::linkbudget(sc),
        Command::Visibility => e::visibility(sc),
        Command::EffectiveData => e::effective(sc),
        Command::Lifetime => e::lifetime(sc),
        Command::Report => {
            use rayon::prelude::*;
            let mut jobs: Vec<fn(&Scenario) -> anyhow::Result<e::Outputs>> = vec![
                e::generate,
                e::modes,
                e::traffic,
                e::collision,
                e::linkbudget,
                e::visibility,
                e::effective,
                e::lifetime,
            ];
            if sc.data.input.is_some() {
                jobs.insert(0, e::preprocess_cmd);
            }
            // results come back in job order whatever the scheduling
            let parts = jobs.par_iter().map(|job| job(sc)).collect::<anyhow::Result<Vec<_>>>()?;
            let mut all = e::Outputs::default();
            for p in parts {
                all.merge(p);
            }
            Ok(all)
        }
    }
}

/// Runs `command` on a validated scenario and assembles the report.
pub fn run(command: Command, scenario: &Scenario) -> anyhow::Result<RunReport> {
    scenario.validate()?;
    let out = dispatch(command, scenario)?;

    let mut files = out.files;
    files.insert("scenario.json".into(), serde_json::to_vec_pretty(scenario)?);
    let mut summary_csv = table::Csv::new(&["experiment", "metric", "value"]);
    for r in &out.summary {
        summary_csv.row([&r.experiment, &r.metric, &r.value]);
    }
    files.insert("summary.csv".into(), summary_csv.finish());

    let manifest = Manifest {
        provenance: Provenance {
            command: command.name().into(),
            scenario: scenario.name.clone(),
            scenario_sha256: scenario.hash(),
            seed: scenario.seed,
            version: env!("CARGO_PKG_VERSION").into(),
        },
        files: files
            .iter()
            .map(|(path, bytes)| ManifestEntry {
                path: path.clone(),
                bytes: bytes.len(),
                sha256: hex::encode(Sha256::digest(bytes)),
            })
            .collect(),
    };
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest)?;
    manifest_bytes.push(b'\n');
    files.insert(MANIFEST_FILE.into(), manifest_bytes);

    let text = out.tables.iter().map(table::Table::render).collect::<Vec<_>>().join("\n");
    Ok(RunReport { manifest, summary: out.summary, files, text })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_every_file() {
        let r = run(Command::Linkbudget, &Scenario::default()).unwrap();
        let listed: Vec<&str> = r.manifest.files.iter().map(|e| e.path.as_str()).collect();
        for name in r.files.keys().filter(|k| *k != MANIFEST_FILE) {
            assert!(listed.contains(&name.as_str()), "{name} missing from manifest");
        }
        assert_eq!(listed.len() + 1, r.files.len());
    }

    #[test]
    fn invalid_scenario_is_rejected_before_running() {
        let mut sc = Scenario::default();
        sc.collision.target = 1.5;
        let err = run(Command::Collision, &sc).unwrap_err().to_string();
        assert!(err.starts_with("collision.target"), "{err}");
    }

    #[test]
    fn preprocess_without_input_fails() {
        let err = run(Command::Preprocess, &Scenario::default()).unwrap_err().to_string();
        assert!(err.starts_with("data.input"), "{err}");
    }
}
