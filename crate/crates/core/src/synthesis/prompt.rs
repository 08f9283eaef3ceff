use crate::sampling::{FeatureElement, FeatureSet};
use crate::template::render;

pub const SYNTHESIS_TEMPLATE: &str = "**You are a problem designer.** I will provide you with one or more features. Based on these, your task is to create a **single, cohesive real world coding problem** that integrates the provided features into a natural and practical context.

Each feature will include the following three traits:

- **Domain Knowledge**: A specific piece of knowledge or understanding relevant to the field.
- **Domain Skill**: A specific skill or method used in the domain, along with its detailed usage.
- **Coding Skill**: A specific programming-related skill or technique, along with its detailed usage.

**Important Guidelines:**
- First, identify a suitable real-world application scenario based on the given features. Then, develop a detailed programming problem of that scenario, ensuring it aligns with the features.
- **Do not mention the domain or coding skills explicitly** in the problem statement. Instead, **design the scenario in such a way that the solution naturally involves applying those skills**.
- The problem should be a **single, substantial task**, not a list of subtasks. The features should be **interconnected**, with one depending on or influencing another.
- If there is a **conflict between the provided features**, **resolve the conflict** by using only the most relevant or compatible parts of the features.
- The final output should be a **realistic, natural, and technically sound coding problem** that reflects a real-world scenario and integrates the given features in a meaningful way.
- If the question require the usage of datasets, provide schema and examples of the dataset.
- Do not generate any bonus or optional challenges.

**Features:**
{features}

First provide a concise step-by-step thought process, then generate the real world coding problem:

**Output Format:**
{output_format}
";

/// Marker separating the reasoning from the problem statement in replies.
pub const PROBLEM_DELIMITER: &str = "Real World Coding Problem";

pub const SYNTHESIS_OUTPUT_FORMAT: &str = "Step-by-Step Thought Process:
[Your concise thought process]

Real World Coding Problem:
[The complete problem statement]";

fn element(el: &FeatureElement) -> String {
    format!("{}: {}", el.name, el.usage)
}

/// One block per feature, numbered from 1.
pub fn render_features(fs: &FeatureSet) -> String {
    fs.features
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let skill = f.skill.as_ref().map(element).unwrap_or_else(|| "NA".into());
            format!(
                "Feature {}:\nDomain Knowledge: {}\nDomain Skill: {}\nCoding Skill: {}",
                i + 1,
                element(&f.knowledge),
                skill,
                element(&f.coding_skill)
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

pub fn render_synthesis_prompt(fs: &FeatureSet) -> String {
    let features = render_features(fs);
    render(SYNTHESIS_TEMPLATE, &[("features", &features), ("output_format", SYNTHESIS_OUTPUT_FORMAT)])
}

/// Number of `Feature k:` blocks in a rendered prompt.
pub fn count_feature_blocks(prompt: &str) -> usize {
    prompt
        .lines()
        .filter(|l| {
            l.strip_prefix("Feature ")
                .and_then(|r| r.strip_suffix(':'))
                .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
        })
        .count()
}

/// Splits a reply at the problem delimiter. Returns the problem text and
/// whether the delimiter was present; without it the whole reply is used.
pub fn split_reply(reply: &str) -> (String, bool) {
    let lower = reply.to_lowercase();
    let needle = PROBLEM_DELIMITER.to_lowercase();
    if let Some(pos) = lower.rfind(&needle) {
        let after = &reply[pos + needle.len()..];
        let after = after.trim_start_matches(['*', '#', ':', ' ', '\t']);
        let after = after.trim_start_matches(['*', ':']);
        let text = after.trim();
        if !text.is_empty() {
            return (text.to_string(), true);
        }
    }
    (reply.trim().to_string(), false)
}
