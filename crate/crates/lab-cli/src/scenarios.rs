//! Built-in scenarios, shipped as TOML both on disk and embedded.

use crate::config::ExperimentConfig;

pub const SCENARIOS: &[(&str, &str)] = &[
    (
        "h1-singular-gamma03",
        include_str!("../scenarios/h1-singular-gamma03.toml"),
    ),
    ("h1-smooth", include_str!("../scenarios/h1-smooth.toml")),
    (
        "euclidean1-smooth",
        include_str!("../scenarios/euclidean1-smooth.toml"),
    ),
    ("h1-kernel", include_str!("../scenarios/h1-kernel.toml")),
    ("h1-krylov", include_str!("../scenarios/h1-krylov.toml")),
    (
        "h1-embedding",
        include_str!("../scenarios/h1-embedding.toml"),
    ),
    (
        "euclidean1-embedding",
        include_str!("../scenarios/euclidean1-embedding.toml"),
    ),
];

pub fn builtin(name: &str) -> Option<ExperimentConfig> {
    SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .and_then(|(_, text)| ExperimentConfig::from_toml(text).ok())
}

pub fn list() -> Vec<(String, String)> {
    SCENARIOS
        .iter()
        .filter_map(|(name, text)| {
            let cfg = ExperimentConfig::from_toml(text).ok()?;
            Some((
                name.to_string(),
                format!("{} on {}", cfg.experiment.as_str(), group_label(&cfg)),
            ))
        })
        .collect()
}

fn group_label(cfg: &ExperimentConfig) -> String {
    match &cfg.group {
        crate::config::GroupRef::Name { name } => name.clone(),
        crate::config::GroupRef::File { spec_path } => spec_path.display().to_string(),
    }
}
