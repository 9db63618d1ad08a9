//! Layered run configuration: built-in defaults, then an optional TOML
//! file, then `--set key=value` overrides, then `--seed`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use segloc::dataset::SyntheticSceneConfig;
use segloc::{AssociationConfig, EvaluationConfig, MergeConfig};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

/// Keys that may appear in a config file although the default leaves them
/// unset (and therefore absent from the serialized defaults).
const OPTIONAL_KEYS: [&str; 2] = ["association.size_gate_ratio", "dataset.column_mapping"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSection {
    /// Traverse file name under the data root, `{id}` replaced by the
    /// traverse identifier.
    pub file_pattern: String,
    /// Column-mapping file for tables whose headers differ from ours.
    pub column_mapping: Option<PathBuf>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            file_pattern: EvaluationConfig::default().file_pattern,
            column_mapping: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSection {
    pub seed: u64,
    pub perturb: bool,
    pub perturbation_translation_m: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        let d = EvaluationConfig::default();
        Self {
            seed: d.seed,
            perturb: d.perturb,
            perturbation_translation_m: d.perturbation_translation_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSection {
    #[serde(flatten)]
    pub scene: SyntheticSceneConfig,
    /// Spacing of frames in the generated traverses.
    pub frame_period_s: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            scene: SyntheticSceneConfig::default(),
            frame_period_s: 0.05,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub association: AssociationConfig,
    pub merge: MergeConfig,
    pub dataset: DatasetSection,
    pub eval: EvalSection,
    pub synth: SynthSection,
}

impl RunConfig {
    /// Resolves the layers in order and validates the result.
    pub fn resolve(file: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<Self> {
        let defaults = Value::try_from(RunConfig::default())?;
        let Value::Table(mut table) = defaults.clone() else {
            unreachable!("config serializes to a table")
        };
        let Value::Table(known) = defaults else { unreachable!() };

        if let Some(path) = file {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            let layer: Table = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
            check_keys(&layer, &known, "")?;
            merge(&mut table, layer);
        }
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .with_context(|| format!("override `{item}` is not of the form key=value"))?;
            let key = key.trim();
            let value = parse_value(raw.trim());
            let mut layer = Table::new();
            let mut path: Vec<&str> = key.split('.').collect();
            let leaf = path.pop().filter(|s| !s.is_empty()).with_context(|| format!("empty override key in `{item}`"))?;
            let mut node = Table::from_iter([(leaf.to_string(), value)]);
            for part in path.iter().rev() {
                node = Table::from_iter([(part.to_string(), Value::Table(node))]);
            }
            layer.extend(node);
            check_keys(&layer, &known, "")?;
            merge(&mut table, layer);
        }

        let mut config: RunConfig = Value::Table(table).try_into().context("invalid configuration")?;
        if let Some(seed) = seed {
            config.eval.seed = seed;
            config.synth.scene.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        self.association.validate()?;
        self.merge.validate()?;
        if let Err(e) = self.synth.scene.validate() {
            bail!("invalid synth config: {e}");
        }
        if !(self.synth.frame_period_s > 0.0) {
            bail!("invalid synth config: frame_period_s must be positive");
        }
        if !self.dataset.file_pattern.contains("{id}") {
            bail!("dataset.file_pattern must contain `{{id}}`");
        }
        Ok(())
    }

    pub fn evaluation(&self) -> EvaluationConfig {
        EvaluationConfig {
            association: self.association,
            merge: self.merge,
            seed: self.eval.seed,
            perturbation_translation_m: self.eval.perturbation_translation_m,
            perturb: self.eval.perturb,
            file_pattern: self.dataset.file_pattern.clone(),
            column_mapping: self.dataset.column_mapping.clone(),
        }
    }

    /// The resolved configuration as TOML, for embedding in reports.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Values are read as TOML literals; anything that does not parse is taken
/// as a bare string.
fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn check_keys(layer: &Table, known: &Table, prefix: &str) -> Result<()> {
    for (key, value) in layer {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match (known.get(key), value) {
            (Some(Value::Table(k)), Value::Table(v)) => check_keys(v, k, &path)?,
            (Some(Value::Table(_)), _) => bail!("config key `{path}` must be a table"),
            (Some(_), _) => {}
            (None, _) if OPTIONAL_KEYS.contains(&path.as_str()) => {}
            (None, _) => bail!("unknown config key `{path}`"),
        }
    }
    Ok(())
}

fn merge(base: &mut Table, layer: Table) {
    for (key, value) in layer {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(v)) => merge(b, v),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::resolve(None, &[], None).unwrap();
        assert_eq!(c, RunConfig::default());
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn layers_apply_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[association]\nepsilon_m = 0.2\nsize_gate_ratio = 1.5\n[synth]\nboulder_count = 50\n").unwrap();
        let c = RunConfig::resolve(Some(&path), &["association.epsilon_m=0.05".into()], Some(9)).unwrap();
        assert_eq!(c.association.epsilon_m, 0.05);
        assert_eq!(c.association.size_gate_ratio, Some(1.5));
        assert_eq!(c.synth.scene.boulder_count, 50);
        assert_eq!(c.synth.scene.seed, 9);
        assert_eq!(c.eval.seed, 9);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(RunConfig::resolve(None, &["association.epsilon=1".into()], None).is_err());
        assert!(RunConfig::resolve(None, &["association.epsilon_m=-1".into()], None).is_err());
        assert!(RunConfig::resolve(None, &["association.epsilon_m=abc".into()], None).is_err());
        assert!(RunConfig::resolve(None, &["novalue".into()], None).is_err());
    }
}
