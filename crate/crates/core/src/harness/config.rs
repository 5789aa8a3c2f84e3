//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 0
//! mode = "unigram"          # coop | vpt | unigram
//! temperature = 0.07
//!
//! [generator]               # corpus generator, see GeneratorSpec
//! n_topics = 5
//! n_domains = 3
//!
//! [chc]
//! k_topics = 5
//! domains = 3
//! target_dim = 8
//!
//! [tasks]
//! k_way = 3
//! n_support = 16
//! n_query = 15
//! shift = "domain_shift"    # domain_shift | uniform
//!
//! [hyper]                   # see HyperParams
//! alpha = 0.5
//! total_tasks = 400
//!
//! [eval]
//! base_fraction = 0.6
//! test_fraction = 0.5
//! shots = 16
//! seeds = 5
//!
//! [ablation]                # at most one flag may be set
//! no_domain_shift = false
//! no_regulator = false
//! prompt_pretrain_baseline = false
//! ```
//!
//! Every section and key is optional; omitted values take their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chc::ChcParams;
use crate::clipette::{PromptLayout, DEFAULT_TEMPERATURE};
use crate::episodes::{GeneratorSpec, TaskConfig};
use crate::error::{Error, Result};
use crate::gram::HyperParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    /// Four textual prompt vectors.
    Coop,
    /// Four visual prompt vectors.
    Vpt,
    /// Two textual and two visual prompt vectors.
    Unigram,
}

impl PromptMode {
    pub fn layout(self, dim: usize) -> PromptLayout {
        let (n_text, n_visual) = match self {
            PromptMode::Coop => (4, 0),
            PromptMode::Vpt => (0, 4),
            PromptMode::Unigram => (2, 2),
        };
        PromptLayout { dim, n_text, n_visual }
    }

    pub fn name(self) -> &'static str {
        match self {
            PromptMode::Coop => "coop",
            PromptMode::Vpt => "vpt",
            PromptMode::Unigram => "unigram",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationFlags {
    pub no_domain_shift: bool,
    pub no_regulator: bool,
    pub prompt_pretrain_baseline: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSplit {
    /// Share of topics used as base classes.
    pub base_fraction: f64,
    /// Share of each base topic's pairs held out for base accuracy.
    pub test_fraction: f64,
    /// Few-shot examples per base class at test time.
    pub shots: usize,
    pub seeds: usize,
}

impl Default for EvalSplit {
    fn default() -> Self {
        Self {
            base_fraction: 0.6,
            test_fraction: 0.5,
            shots: 16,
            seeds: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub mode: PromptMode,
    pub temperature: f64,
    pub generator: GeneratorSpec,
    pub chc: ChcParams,
    pub tasks: TaskConfig,
    pub hyper: HyperParams,
    pub eval: EvalSplit,
    pub ablation: AblationFlags,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mode: PromptMode::Unigram,
            temperature: DEFAULT_TEMPERATURE,
            generator: GeneratorSpec::default(),
            chc: ChcParams::default(),
            tasks: TaskConfig::default(),
            hyper: HyperParams::default(),
            eval: EvalSplit::default(),
            ablation: AblationFlags::default(),
        }
    }
}

/// Training variants compared by the ablation grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    NoDomainShift,
    NoRegulator,
    PromptPretrainBaseline,
    /// Random prompts adapted at test time without any meta-training.
    NoMeta,
}

impl Variant {
    pub const GRID: [Variant; 4] = [
        Variant::Full,
        Variant::NoDomainShift,
        Variant::NoRegulator,
        Variant::PromptPretrainBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoDomainShift => "no_domain_shift",
            Variant::NoRegulator => "no_regulator",
            Variant::PromptPretrainBaseline => "prompt_pretrain_baseline",
            Variant::NoMeta => "no_meta",
        }
    }

    /// Whether the variant adapts with a learned regulator.
    pub fn uses_regulator(self) -> bool {
        matches!(self, Variant::Full | Variant::NoDomainShift)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Overrides the experiment seed and the generator seed together.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.generator.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.hyper.validate()?;
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!(
                "temperature {} must be positive",
                self.temperature
            )));
        }
        let e = &self.eval;
        if !(e.base_fraction > 0.0 && e.base_fraction < 1.0) {
            return Err(Error::Config(format!(
                "base_fraction {} outside (0, 1)",
                e.base_fraction
            )));
        }
        if !(e.test_fraction > 0.0 && e.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction {} outside (0, 1)",
                e.test_fraction
            )));
        }
        if e.shots == 0 || e.seeds == 0 {
            return Err(Error::Config("shots and seeds must be at least 1".into()));
        }
        if self.chc.k_topics == 0 || self.chc.domains == 0 || self.chc.target_dim == 0 {
            return Err(Error::Config("chc parameters must be at least 1".into()));
        }
        if self.chc.target_dim > self.generator.embed_dim {
            return Err(Error::Config(format!(
                "chc.target_dim {} exceeds embed_dim {}",
                self.chc.target_dim, self.generator.embed_dim
            )));
        }
        if self.tasks.k_way < 2 || self.tasks.n_support == 0 || self.tasks.n_query == 0 {
            return Err(Error::Config(
                "tasks need k_way >= 2 and non-empty support and query".into(),
            ));
        }
        let flags = [
            self.ablation.no_domain_shift,
            self.ablation.no_regulator,
            self.ablation.prompt_pretrain_baseline,
        ];
        if flags.iter().filter(|&&f| f).count() > 1 {
            return Err(Error::Config("at most one ablation flag may be set".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> PromptLayout {
        self.mode.layout(self.generator.embed_dim)
    }

    /// The variant selected by the ablation flags.
    pub fn variant(&self) -> Variant {
        let a = &self.ablation;
        if a.no_domain_shift {
            Variant::NoDomainShift
        } else if a.no_regulator {
            Variant::NoRegulator
        } else if a.prompt_pretrain_baseline {
            Variant::PromptPretrainBaseline
        } else {
            Variant::Full
        }
    }
}
