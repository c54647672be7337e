//! TOML run configuration. Command-line flags override file values.

use std::path::PathBuf;

use clap::ValueEnum;
use editval::judge::{DemoSampling, ModelEndpoint};
use editval::metric::AggregateMode;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum JudgeKind {
    AlwaysValid,
    AlwaysInvalid,
    /// Lookup table of `{s1, s2, valid}` lines; verdict dumps work as-is.
    Table,
    /// Multi-turn chat pipeline over the configured turns.
    Pipeline,
    /// Remote pair classifier.
    Classifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FluencyKind {
    /// Add-one bigram model fit on `--lm-corpus`, or on the references.
    #[default]
    Bigram,
    /// `POST /logprobs` on a scoring service.
    Sidecar,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub metric: MetricSection,
    #[serde(default)]
    pub judge: JudgeSection,
    #[serde(default)]
    pub fluency: FluencySection,
    #[serde(default)]
    pub expand: ExpandSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub reclassify: Option<bool>,
    pub aggregate: Option<AggregateMode>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeSection {
    pub kind: Option<JudgeKind>,
    pub table: Option<PathBuf>,
    pub table_default: Option<bool>,
    pub classifier_url: Option<String>,
    pub cache: Option<PathBuf>,
    /// Demonstration pool for the first turn.
    pub memory: Option<PathBuf>,
    pub context_window: Option<bool>,
    pub demo_sampling: Option<DemoSampling>,
    #[serde(default)]
    pub turns: Vec<ModelEndpoint>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluencySection {
    pub provider: Option<FluencyKind>,
    pub corpus: Option<PathBuf>,
    pub url: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandSection {
    #[serde(default)]
    pub generators: Vec<ModelEndpoint>,
    pub cache: Option<PathBuf>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file() {
        let cfg = FileConfig::parse(
            r#"
seed = 7
[metric]
alpha = 0.5
aggregate = "sentence_mean"
[judge]
kind = "pipeline"
demo_sampling = "per-pair"
[[judge.turns]]
name = "t1"
model = "m"
url = "http://localhost:1/v1/chat/completions"
api_key_env = "JUDGE_TOKEN"
[fluency]
provider = "sidecar"
url = "http://localhost:2"
[[expand.generators]]
name = "g"
model = "m"
"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.metric.aggregate, Some(AggregateMode::SentenceMean));
        assert_eq!(cfg.judge.kind, Some(JudgeKind::Pipeline));
        assert_eq!(cfg.judge.turns[0].api_key_env.as_deref(), Some("JUDGE_TOKEN"));
        assert_eq!(cfg.fluency.provider, Some(FluencyKind::Sidecar));
        assert_eq!(cfg.expand.generators.len(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(FileConfig::parse("[metric]\nalpah = 1").is_err());
    }
}
