//! Decoder prompt assembly for each ablation configuration.
//!
//! Blueprints live in `templates/*.txt` and are embedded verbatim, trailing
//! spaces included. Rendering substitutes placeholders in a single pass, so
//! text coming from captions or facts is never re-expanded.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exemplars::ExemplarSet;
use crate::facts::FactSet;

/// Literal rendered in place of an empty fact or exemplar block.
pub const EMPTY_BLOCK: &str = "(none)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AblationId {
    /// Full payload.
    A1,
    /// Same prompt as A1; the safeguard size is forced to zero upstream.
    A2,
    /// No object anchor.
    A3,
    /// No exemplars.
    A4,
    /// No facts.
    A5,
    /// Keywords and object anchor only.
    A6,
    /// Large-vocabulary profile: keywords, facts, exemplars.
    B1,
    /// Large-vocabulary profile without exemplars.
    B2,
}

impl AblationId {
    pub const ALL: [AblationId; 8] = [
        AblationId::A1,
        AblationId::A2,
        AblationId::A3,
        AblationId::A4,
        AblationId::A5,
        AblationId::A6,
        AblationId::B1,
        AblationId::B2,
    ];

    pub fn blueprint(self) -> &'static str {
        match self {
            AblationId::A1 | AblationId::A2 => include_str!("../templates/a1.txt"),
            AblationId::A3 => include_str!("../templates/a3.txt"),
            AblationId::A4 => include_str!("../templates/a4.txt"),
            AblationId::A5 => include_str!("../templates/a5.txt"),
            AblationId::A6 => include_str!("../templates/a6.txt"),
            AblationId::B1 => include_str!("../templates/b1.txt"),
            AblationId::B2 => include_str!("../templates/b2.txt"),
        }
    }

    pub fn uses_object(self) -> bool {
        !matches!(self, AblationId::A3 | AblationId::B1 | AblationId::B2)
    }

    pub fn uses_facts(self) -> bool {
        !matches!(self, AblationId::A5 | AblationId::A6)
    }

    pub fn uses_exemplars(self) -> bool {
        !matches!(self, AblationId::A4 | AblationId::A6 | AblationId::B2)
    }

    /// Whether the priority safeguard is disabled for this configuration.
    pub fn disables_priority(self) -> bool {
        self == AblationId::A2
    }
}

impl fmt::Display for AblationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for AblationId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AblationId::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Domain(format!("unknown ablation id {s:?}")))
    }
}

/// Data streams available to the prompt. Fields a configuration does not use
/// must be `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PromptPayload {
    pub pruned_words: Vec<String>,
    pub facts: Option<FactSet>,
    pub exemplars: Option<ExemplarSet>,
    pub pred_obj: Option<String>,
    pub pred_conf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenderedPrompt {
    pub text: String,
    pub config: AblationId,
    pub byte_length: usize,
}

fn check_field(config: AblationId, field: &'static str, used: bool, present: bool) -> Result<()> {
    let problem = match (used, present) {
        (true, false) => "is required",
        (false, true) => "is not allowed",
        _ => return Ok(()),
    };
    Err(Error::Payload {
        config: config.to_string(),
        field,
        problem,
    })
}

fn lines_or_none(lines: Vec<String>) -> String {
    if lines.is_empty() {
        EMPTY_BLOCK.to_owned()
    } else {
        lines.join("\n")
    }
}

pub fn render(payload: &PromptPayload, config: AblationId) -> Result<RenderedPrompt> {
    check_field(
        config,
        "facts",
        config.uses_facts(),
        payload.facts.is_some(),
    )?;
    check_field(
        config,
        "exemplars",
        config.uses_exemplars(),
        payload.exemplars.is_some(),
    )?;
    check_field(
        config,
        "pred_obj",
        config.uses_object(),
        payload.pred_obj.is_some(),
    )?;
    check_field(
        config,
        "pred_conf",
        config.uses_object(),
        payload.pred_conf.is_some(),
    )?;
    if let Some(conf) = payload.pred_conf {
        if !(0.0..=1.0).contains(&conf) {
            return Err(Error::Payload {
                config: config.to_string(),
                field: "pred_conf",
                problem: "is outside [0, 1]",
            });
        }
    }

    let words = payload.pruned_words.join(", ");
    let facts = payload
        .facts
        .as_ref()
        .map(|f| lines_or_none(f.surfaces().map(|s| format!("- {s}")).collect()));
    let exemplars = payload.exemplars.as_ref().map(|e| {
        lines_or_none(
            e.items
                .iter()
                .enumerate()
                .map(|(i, x)| format!("{}. {}", i + 1, x.caption))
                .collect(),
        )
    });
    let conf = payload.pred_conf.map(|c| format!("{c:.2}"));

    let lookup = |name: &str| -> Option<&str> {
        match name {
            "prompt_words" | "words_str" => Some(&words),
            "relational_facts" | "facts_str" => facts.as_deref(),
            "retrieved_exemplars" | "exemplars_str" => exemplars.as_deref(),
            "pred_obj" => payload.pred_obj.as_deref(),
            "pred_conf" => conf.as_deref(),
            _ => None,
        }
    };

    let blueprint = config.blueprint();
    let mut text = String::with_capacity(blueprint.len() + 256);
    let mut rest = blueprint;
    while let Some(open) = rest.find('{') {
        text.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after
            .find('}')
            .and_then(|close| Some((close, lookup(&after[..close])?)))
        {
            Some((close, value)) => {
                text.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                text.push('{');
                rest = after;
            }
        }
    }
    text.push_str(rest);

    Ok(RenderedPrompt {
        byte_length: text.len(),
        text,
        config,
    })
}

/// Section headers (`[...]` lines other than the keyword list) in blueprint
/// order.
pub fn section_headers(config: AblationId) -> Vec<&'static str> {
    config
        .blueprint()
        .lines()
        .filter(|l| l.starts_with('[') && l.ends_with(']') && !l.starts_with("[{"))
        .collect()
}
