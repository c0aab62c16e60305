//! The composite score, weight profiles and the acceptance verdict.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codebleu::ComponentScores;

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CtsesError {
    #[error("profile {name:?} weights sum to {sum}, expected 1")]
    UnnormalizedProfile { name: String, sum: f64 },
    #[error("profile {name:?} has a negative or non-finite weight")]
    NegativeWeight { name: String },
    #[error("threshold {name} = {value} is outside [0, 1]")]
    ThresholdOutOfRange { name: &'static str, value: f64 },
    #[error("unknown profile {0:?}")]
    UnknownProfile(String),
}

/// Weights for CodeBLEU (`alpha`), METEOR (`beta`) and ROUGE-L (`gamma`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightProfile {
    pub name: String,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl WeightProfile {
    pub fn new(
        name: impl Into<String>,
        alpha: f64,
        beta: f64,
        gamma: f64,
    ) -> Result<Self, CtsesError> {
        let profile = Self {
            name: name.into(),
            alpha,
            beta,
            gamma,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<(), CtsesError> {
        let weights = [self.alpha, self.beta, self.gamma];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(CtsesError::NegativeWeight {
                name: self.name.clone(),
            });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(CtsesError::UnnormalizedProfile {
                name: self.name.clone(),
                sum,
            });
        }
        Ok(())
    }
}

/// Semantic-Prioritized, Readability-Aware and Uniform, in that order.
pub fn builtin_profiles() -> Vec<WeightProfile> {
    vec![
        WeightProfile {
            name: "ctses1".into(),
            alpha: 0.5,
            beta: 0.3,
            gamma: 0.2,
        },
        WeightProfile {
            name: "ctses2".into(),
            alpha: 0.4,
            beta: 0.3,
            gamma: 0.3,
        },
        WeightProfile {
            name: "uniform".into(),
            alpha: 1.0 / 3.0,
            beta: 1.0 / 3.0,
            gamma: 1.0 / 3.0,
        },
    ]
}

/// Looks a built-in profile up by name or by one of its descriptive aliases.
pub fn builtin_profile(name: &str) -> Result<WeightProfile, CtsesError> {
    let canonical = match name.to_ascii_lowercase().replace(['_', ' '], "-").as_str() {
        "ctses1" | "semantic-prioritized" | "semantic" => "ctses1",
        "ctses2" | "readability-aware" | "readability" => "ctses2",
        "uniform" | "baseline-avg" | "uniform-average" => "uniform",
        _ => return Err(CtsesError::UnknownProfile(name.to_string())),
    };
    Ok(builtin_profiles()
        .into_iter()
        .find(|p| p.name == canonical)
        .expect("canonical name is built in"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub accept_min: f64,
    pub codebleu_drift_min: f64,
    pub meteor_min: f64,
    pub rouge_min: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            accept_min: 0.50,
            codebleu_drift_min: 0.40,
            meteor_min: 0.50,
            rouge_min: 0.50,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<(), CtsesError> {
        for (name, value) in [
            ("accept_min", self.accept_min),
            ("codebleu_drift_min", self.codebleu_drift_min),
            ("meteor_min", self.meteor_min),
            ("rouge_min", self.rouge_min),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(CtsesError::ThresholdOutOfRange { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Warning {
    SemanticDrift,
    ReducedReadability,
    StructuralMisalignment,
}

impl Warning {
    pub fn as_str(self) -> &'static str {
        match self {
            Warning::SemanticDrift => "SemanticDrift",
            Warning::ReducedReadability => "ReducedReadability",
            Warning::StructuralMisalignment => "StructuralMisalignment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub ctses: f64,
    pub profile_name: String,
    pub accepted: bool,
    pub warnings: BTreeSet<Warning>,
    pub components: ComponentScores,
}

pub fn ctses_score(
    components: &ComponentScores,
    profile: &WeightProfile,
) -> Result<f64, CtsesError> {
    profile.validate()?;
    let score = profile.alpha * components.codebleu
        + profile.beta * components.meteor
        + profile.gamma * components.rouge_l;
    Ok(score.clamp(0.0, 1.0))
}

/// Warnings are advisory: they never change the score or the decision.
pub fn evaluate(
    components: &ComponentScores,
    profile: &WeightProfile,
    thresholds: &ThresholdConfig,
) -> Result<Verdict, CtsesError> {
    let ctses = ctses_score(components, profile)?;
    let mut warnings = BTreeSet::new();
    if components.codebleu < thresholds.codebleu_drift_min {
        warnings.insert(Warning::SemanticDrift);
    }
    if components.meteor < thresholds.meteor_min {
        warnings.insert(Warning::ReducedReadability);
    }
    if components.rouge_l < thresholds.rouge_min {
        warnings.insert(Warning::StructuralMisalignment);
    }
    Ok(Verdict {
        ctses,
        profile_name: profile.name.clone(),
        accepted: ctses >= thresholds.accept_min,
        warnings,
        components: components.clone(),
    })
}
