//! Candidate pool + model selection: draw ten random features, show them to
//! the model as three labelled groups, and keep the `complexity` it picks.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::feature::{Feature, FeatureElement, FeatureSet, SamplerConfig, ScenarioSampler};
use super::random::{feature_set_id, sample_feature_set_random, snapshot};
use super::strategy::SamplingStrategy;
use super::{SamplingError, CANDIDATE_COUNT};
use crate::backend::{Backend, BackendConfig, GenerationRequest};
use crate::extraction::CanonicalKey;
use crate::graph::KnowledgeGraph;
use crate::template::render;

const SELECTION_TEMPLATE: &str = "You will be provided with three groups of feature descriptions, with 10 items in each group. These features are essential elements for constructing a complex coding problem in a real-world scenario. Your task is to deeply understand the meaning of these features and their usage strategies in real coding scenarios, and then select {number} most appropriate elements, {number} from each group, such that the selected elements can generate a single, natural and realistic coding problem.

Feature descriptions include the following:
- Domain Knowledge: A specific piece of knowledge or understanding relevant to the field.
- Domain Skill: A specific skill or method used in the domain, along with its detailed usage.
- Coding Skill: A specific programming-related skill or technique, along with its detailed usage.

Guidelines:
- The domain knowledge and domain skill have already been paired; please do not separate them.
- The selected elements need to play distinct roles, thereby naturally leading to a complex question with a unified problem context.
- The selected elements should balance relevance and diversity.

Feature Descriptions:
{DK_DS_features}

{CS_features}

First provide a concise step-by-step thought process, then give the selected elements (only the label is needed) as the following format:

Step-by-Step Thought Process

Selected Elements:

{output_format}";

pub const SELECTION_OUTPUT_FORMAT: &str = "Domain Knowledge: <comma-separated labels>
Domain Skill: <the same labels as Domain Knowledge>
Coding Skill: <comma-separated labels>";

fn element_line(label: usize, el: Option<&FeatureElement>) -> String {
    match el {
        Some(el) => format!("{label}. {}: {}", el.name, el.usage),
        None => format!("{label}. NA"),
    }
}

pub fn render_selection_prompt(candidates: &[Feature], number: usize) -> String {
    let group = |title: &str, pick: &dyn Fn(&Feature) -> Option<&FeatureElement>| {
        let mut s = format!("{title}:\n");
        let lines: Vec<String> =
            candidates.iter().enumerate().map(|(i, f)| element_line(i + 1, pick(f))).collect();
        s.push_str(&lines.join("\n"));
        s
    };
    let knowledge = group("Domain Knowledge", &|f| Some(&f.knowledge));
    let skills = group("Domain Skill", &|f| f.skill.as_ref());
    let coding = group("Coding Skill", &|f| Some(&f.coding_skill));
    let dk_ds = format!("{knowledge}\n\n{skills}");
    let number = number.to_string();
    render(
        SELECTION_TEMPLATE,
        &[
            ("number", &number),
            ("DK_DS_features", &dk_ds),
            ("CS_features", &coding),
            ("output_format", SELECTION_OUTPUT_FORMAT),
        ],
    )
}

/// Labels chosen by the model, 1-based. `knowledge[i]` is paired with `coding[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub knowledge: Vec<usize>,
    pub coding: Vec<usize>,
}

fn labels(rest: &str) -> Vec<usize> {
    rest.split(|c: char| !c.is_ascii_digit()).filter(|t| !t.is_empty()).filter_map(|t| t.parse().ok()).collect()
}

fn check_labels(what: &str, found: &[usize], number: usize, pool: usize) -> Result<(), String> {
    if found.len() != number {
        return Err(format!("{what}: expected {number} labels, found {}", found.len()));
    }
    if let Some(bad) = found.iter().find(|&&l| l == 0 || l > pool) {
        return Err(format!("{what}: label {bad} outside 1..={pool}"));
    }
    if found.iter().collect::<BTreeSet<_>>().len() != found.len() {
        return Err(format!("{what}: repeated label"));
    }
    Ok(())
}

/// Reads the label lines following "Selected Elements". Domain skill labels,
/// when given, must match the knowledge labels since the two are paired.
pub fn parse_selection(text: &str, number: usize, pool: usize) -> Result<Selection, String> {
    let lower = text.to_lowercase();
    let start = lower.rfind("selected elements").map(|i| i + "selected elements".len()).unwrap_or(0);
    let mut knowledge = None;
    let mut skill = None;
    let mut coding = None;
    for line in text[start..].lines() {
        let clean = line.trim().trim_start_matches('#').trim().trim_start_matches("- ").replace("**", "");
        let lower = clean.to_lowercase();
        let slot = if lower.starts_with("domain knowledge") {
            &mut knowledge
        } else if lower.starts_with("domain skill") {
            &mut skill
        } else if lower.starts_with("coding skill") {
            &mut coding
        } else {
            continue;
        };
        let rest = clean.split_once(':').map(|(_, r)| r).unwrap_or("");
        if slot.is_none() {
            *slot = Some(labels(rest));
        }
    }
    let knowledge = knowledge.ok_or("no Domain Knowledge selection line")?;
    let coding = coding.ok_or("no Coding Skill selection line")?;
    check_labels("domain knowledge", &knowledge, number, pool)?;
    check_labels("coding skill", &coding, number, pool)?;
    if let Some(skill) = skill {
        let a: BTreeSet<_> = knowledge.iter().collect();
        let b: BTreeSet<_> = skill.iter().collect();
        if !skill.is_empty() && a != b {
            return Err("domain skill labels differ from domain knowledge labels".into());
        }
    }
    Ok(Selection { knowledge, coding })
}

pub struct LlmSelectionStrategy {
    backend: Arc<dyn Backend>,
    gen: BackendConfig,
}

impl LlmSelectionStrategy {
    pub fn new(backend: Arc<dyn Backend>, gen: BackendConfig) -> Self {
        LlmSelectionStrategy { backend, gen }
    }

    /// The candidate pool: independent random-strategy draws.
    pub fn candidates(sampler: &ScenarioSampler<'_>, rng: &mut ChaCha8Rng) -> Vec<Feature> {
        (0..CANDIDATE_COUNT).map(|_| sampler.sample_feature(rng)).collect()
    }

    fn assemble(candidates: &[Feature], sel: &Selection) -> Result<Vec<Feature>, String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (&k, &c) in sel.knowledge.iter().zip(&sel.coding) {
            let base = &candidates[k - 1];
            let coding = &candidates[c - 1];
            let mut provenance: Vec<_> =
                base.provenance.iter().filter(|t| t.role != super::ElementRole::CodingSkill).cloned().collect();
            provenance.extend(coding.provenance.iter().filter(|t| t.role == super::ElementRole::CodingSkill).cloned());
            let feature = Feature {
                knowledge: base.knowledge.clone(),
                skill: base.skill.clone(),
                coding_skill: coding.coding_skill.clone(),
                provenance,
            };
            if !seen.insert(feature.triple()) {
                return Err("selection repeats a (knowledge, skill, coding skill) triple".into());
            }
            out.push(feature);
        }
        Ok(out)
    }
}

impl SamplingStrategy for LlmSelectionStrategy {
    fn name(&self) -> &'static str {
        "llm"
    }

    fn sample_set(
        &self,
        g: &KnowledgeGraph,
        scenario: &CanonicalKey,
        cfg: &SamplerConfig,
        task: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<FeatureSet, SamplingError> {
        let sampler = ScenarioSampler::new(g, scenario, cfg.temperature)?;
        if sampler.distinct_triples() < cfg.complexity {
            return Err(SamplingError::InsufficientDiversity {
                scenario: scenario.clone(),
                wanted: cfg.complexity,
                available: sampler.distinct_triples(),
            });
        }
        let candidates = Self::candidates(&sampler, rng);
        let prompt = render_selection_prompt(&candidates, cfg.complexity);
        let req = GenerationRequest::user(&self.gen, prompt);
        for attempt in 1..=cfg.selection_attempts.max(1) {
            let outcome = self
                .backend
                .complete(&req)
                .map_err(|e| e.to_string())
                .and_then(|reply| parse_selection(&reply.text, cfg.complexity, candidates.len()))
                .and_then(|sel| Self::assemble(&candidates, &sel));
            match outcome {
                Ok(features) => {
                    return Ok(FeatureSet {
                        id: feature_set_id(task),
                        scenario: scenario.clone(),
                        scenario_name: g.node(scenario).map(|n| n.display_name.clone()).unwrap_or_default(),
                        features,
                        config: snapshot(cfg, task),
                        produced_by: "llm".into(),
                    });
                }
                Err(why) => log::debug!("{scenario}: selection attempt {attempt} rejected: {why}"),
            }
        }
        log::warn!("{scenario}: no usable selection after {} attempts; falling back to random", cfg.selection_attempts);
        let mut set = sample_feature_set_random(g, scenario, cfg, task, rng)?;
        set.produced_by = "random-fallback".into();
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_selection_block() {
        let text = "Step-by-Step Thought Process\nI like 4.\n\nSelected Elements:\n\n\
                    Domain Knowledge: 2, 5\nDomain Skill: 5, 2\nCoding Skill: 1, 10\n";
        let sel = parse_selection(text, 2, 10).unwrap();
        assert_eq!(sel.knowledge, vec![2, 5]);
        assert_eq!(sel.coding, vec![1, 10]);
    }

    #[test]
    fn rejects_bad_selections() {
        let base = "Selected Elements:\nDomain Knowledge: 2\nDomain Skill: 2\nCoding Skill: 3\n";
        assert!(parse_selection(base, 1, 10).is_ok());
        assert!(parse_selection(&base.replace("Knowledge: 2", "Knowledge: 11"), 1, 10).is_err());
        assert!(parse_selection(&base.replace("Skill: 2", "Skill: 4"), 1, 10).is_err());
        assert!(parse_selection(base, 2, 10).is_err());
        assert!(parse_selection("Selected Elements:\nDomain Knowledge: 1, 1\nCoding Skill: 1, 2", 2, 10).is_err());
        assert!(parse_selection("no labels here", 1, 10).is_err());
    }

    #[test]
    fn decorated_lines_are_accepted() {
        let text = "**Selected Elements:**\n- **Domain Knowledge**: [3]\n- **Coding Skill**: [7]";
        let sel = parse_selection(text, 1, 10).unwrap();
        assert_eq!((sel.knowledge, sel.coding), (vec![3], vec![7]));
    }
}
