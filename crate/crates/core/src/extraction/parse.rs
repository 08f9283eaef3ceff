//! Line-oriented parser for extraction replies.
//!
//! Grammar (case-insensitive headers, optional `#`/`**` decoration):
//!
//! ```text
//! Application Scenario: [inline scenario]
//! <scenario line>
//! Domain Knowledge:
//! N. Name: Usage                      (1 to 3 entries)
//! Domain Skill:
//! N. Knowledge Name:                  (optional parent line)
//! N.M. Skill Name: Usage | NA         (or flat "N. Skill Name: Usage" / "N. NA")
//! Coding Skill: [NA]
//! Problem-solving and Design Thinking: [inline entry]
//! N. Name: Usage | NA
//! Tools and Frameworks:
//! ...
//! Algorithms and Data Structures:
//! ...
//! ```
//!
//! The first `": "` splits a name from its usage; later colons belong to the
//! usage. Unknown lines outside sections are ignored.

use super::{CodingCategory, CodingSkills, Element, ExtractedElements, ParseFailure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Scenario,
    Knowledge,
    Skill,
    Coding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Header {
    Scenario,
    Knowledge,
    Skill,
    Coding,
    Category(CodingCategory),
}

/// Removes `#` prefixes, bullets and `**` emphasis for header matching.
fn undecorate(line: &str) -> String {
    let t = line.trim().trim_start_matches('#').trim();
    let t = t.strip_prefix("- ").unwrap_or(t);
    t.replace("**", "").trim().to_string()
}

fn match_header(clean: &str, in_coding: bool) -> Option<(Header, String)> {
    let table: &[(&str, Header)] = &[
        ("application scenario", Header::Scenario),
        ("domain knowledge", Header::Knowledge),
        ("domain skills", Header::Skill),
        ("domain skill", Header::Skill),
        ("coding skills", Header::Coding),
        ("coding skill", Header::Coding),
    ];
    let categories: &[(&str, CodingCategory)] = &[
        ("problem-solving and design thinking", CodingCategory::ProblemSolving),
        ("problem solving and design thinking", CodingCategory::ProblemSolving),
        ("tools and frameworks", CodingCategory::ToolsFrameworks),
        ("algorithms and data structures", CodingCategory::AlgorithmsDataStructures),
    ];
    let split = |prefix: &str| -> Option<String> {
        // Prefixes are ASCII, so a case-insensitive byte match keeps offsets valid.
        let head = clean.get(..prefix.len())?;
        if !head.eq_ignore_ascii_case(prefix) {
            return None;
        }
        let tail = clean[prefix.len()..].trim_start();
        if tail.is_empty() {
            Some(String::new())
        } else {
            tail.strip_prefix(':').map(|t| t.trim().to_string())
        }
    };
    if in_coding {
        for (prefix, cat) in categories {
            if let Some(rest) = split(prefix) {
                return Some((Header::Category(*cat), rest));
            }
        }
    }
    for (prefix, header) in table {
        if let Some(rest) = split(prefix) {
            let inline_ok = matches!(header, Header::Scenario) || rest.is_empty() || is_na(&rest);
            if inline_ok {
                return Some((*header, rest));
            }
        }
    }
    None
}

fn is_na(s: &str) -> bool {
    let t = s.trim().trim_matches(|c| c == '"' || c == '\'' || c == '*' || c == '.').trim();
    t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("n/a")
}

/// Splits a leading `1.`, `1.1.`, `2)` or `-` marker from an entry.
fn split_numbering(line: &str) -> (Vec<usize>, &str) {
    let t = line.trim();
    if let Some(rest) = t.strip_prefix("- ").or_else(|| t.strip_prefix("* ")) {
        return (Vec::new(), rest.trim());
    }
    let bytes = t.as_bytes();
    let mut path = Vec::new();
    let mut i = 0;
    loop {
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == start || i >= bytes.len() {
            break;
        }
        let Ok(n) = t[start..i].parse::<usize>() else { break };
        if bytes[i] == b'.' || bytes[i] == b')' {
            path.push(n);
            i += 1;
            if i < bytes.len() && bytes[i].is_ascii_digit() {
                continue;
            }
            if i < bytes.len() && !bytes[i].is_ascii_whitespace() {
                // e.g. "3.5mm jack" is not numbering
                return (Vec::new(), t);
            }
            return (path, t[i..].trim());
        }
        break;
    }
    (Vec::new(), t)
}

enum Entry {
    Na,
    /// `Name:` with nothing after the colon.
    Label(String),
    Item(Element),
    Bare,
}

fn parse_entry(text: &str) -> Entry {
    let text = text.replace("**", "");
    let text = text.trim();
    if is_na(text) {
        return Entry::Na;
    }
    if let Some((name, usage)) = text.split_once(": ") {
        let usage = usage.trim();
        if usage.is_empty() {
            return Entry::Label(name.trim().to_string());
        }
        if is_na(usage) {
            return Entry::Na;
        }
        return Entry::Item(Element { name: name.trim().to_string(), usage: usage.to_string() });
    }
    if let Some(name) = text.strip_suffix(':') {
        return Entry::Label(name.trim().to_string());
    }
    Entry::Bare
}

fn canonical_eq(a: &str, b: &str) -> bool {
    a.split_whitespace().map(str::to_lowercase).eq(b.split_whitespace().map(str::to_lowercase))
}

fn failure(line: Option<usize>, text: Option<&str>, message: impl Into<String>) -> ParseFailure {
    ParseFailure { line, text: text.map(str::to_string), message: message.into() }
}

pub fn parse_extraction_output(doc_id: &str, text: &str) -> Result<ExtractedElements, ParseFailure> {
    let mut section = Section::Preamble;
    let mut seen = [false; 4];
    let mut scenario: Option<String> = None;
    let mut knowledge: Vec<(usize, Element)> = Vec::new();
    let mut skills: Vec<(usize, Option<Element>)> = Vec::new();
    let mut skill_parent: Option<usize> = None;
    let mut skill_cursor = 0usize;
    let mut coding = CodingSkills::default();
    let mut coding_filled = [false; 3];
    let mut category: Option<CodingCategory> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let clean = undecorate(raw);
        if clean.is_empty() {
            continue;
        }
        let (numbering, _) = split_numbering(&clean);
        if numbering.is_empty() {
            if let Some((header, inline)) = match_header(&clean, section == Section::Coding) {
                match header {
                    Header::Scenario => {
                        section = Section::Scenario;
                        seen[0] = true;
                        if !inline.is_empty() && scenario.is_none() {
                            scenario = Some(inline);
                        }
                    }
                    Header::Knowledge => {
                        section = Section::Knowledge;
                        seen[1] = true;
                    }
                    Header::Skill => {
                        section = Section::Skill;
                        seen[2] = true;
                    }
                    Header::Coding => {
                        section = Section::Coding;
                        seen[3] = true;
                        category = None;
                        if is_na(&inline) {
                            coding_filled = [true; 3];
                        }
                    }
                    Header::Category(cat) => {
                        category = Some(cat);
                        if !inline.is_empty() {
                            set_coding(&mut coding, &mut coding_filled, cat, parse_entry(&inline));
                        }
                    }
                }
                continue;
            }
        }

        match section {
            Section::Preamble => {}
            Section::Scenario => {
                if scenario.is_none() {
                    let (_, body) = split_numbering(&clean);
                    let body = body.trim_matches('"').trim();
                    if !body.is_empty() {
                        scenario = Some(body.to_string());
                    }
                }
            }
            Section::Knowledge => {
                let (_, body) = split_numbering(&clean);
                match parse_entry(body) {
                    Entry::Item(el) => {
                        if knowledge.len() == 3 {
                            return Err(failure(Some(line_no), Some(raw), "more than 3 domain knowledge entries"));
                        }
                        let pos = knowledge.len() + 1;
                        knowledge.push((pos, el));
                    }
                    Entry::Na => {}
                    Entry::Label(_) | Entry::Bare => {
                        return Err(failure(Some(line_no), Some(raw), "domain knowledge entry needs \"Name: Usage\""));
                    }
                }
            }
            Section::Skill => {
                let (path, body) = split_numbering(&clean);
                let entry = parse_entry(body);
                let position = match (&entry, path.len()) {
                    (_, n) if n >= 2 => path[0],
                    (Entry::Label(name), _) => {
                        let pos = match path.first() {
                            Some(&p) => p,
                            None => knowledge
                                .iter()
                                .find(|(_, k)| canonical_eq(&k.name, name))
                                .map(|(p, _)| *p)
                                .unwrap_or(skill_cursor + 1),
                        };
                        skill_parent = Some(pos);
                        skill_cursor = pos;
                        continue;
                    }
                    (_, 1) => {
                        skill_parent = None;
                        path[0]
                    }
                    (_, _) => match skill_parent {
                        Some(p) => p,
                        None => skill_cursor + 1,
                    },
                };
                skill_cursor = skill_cursor.max(position);
                let value = match entry {
                    Entry::Item(el) => Some(el),
                    Entry::Na => None,
                    Entry::Label(_) => unreachable!("labels handled above"),
                    Entry::Bare => {
                        return Err(failure(Some(line_no), Some(raw), "domain skill entry needs \"Name: Usage\" or NA"));
                    }
                };
                if !skills.iter().any(|(p, _)| *p == position) {
                    skills.push((position, value));
                }
            }
            Section::Coding => {
                let (_, body) = split_numbering(&clean);
                let entry = parse_entry(body);
                let cat = match category {
                    Some(c) => c,
                    None => {
                        if matches!(entry, Entry::Na) {
                            coding_filled = [true; 3];
                            continue;
                        }
                        match CodingCategory::ALL.iter().zip(coding_filled).find(|(_, f)| !f) {
                            Some((c, _)) => *c,
                            None => continue,
                        }
                    }
                };
                if let Entry::Bare = entry {
                    return Err(failure(Some(line_no), Some(raw), "coding skill entry needs \"Name: Usage\" or NA"));
                }
                set_coding(&mut coding, &mut coding_filled, cat, entry);
            }
        }
    }

    let names = ["Application Scenario", "Domain Knowledge", "Domain Skill", "Coding Skill"];
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(failure(None, None, format!("missing {:?} section", names[missing])));
    }
    let scenario = scenario
        .filter(|s| !s.trim().is_empty())
        .ok_or_else(|| failure(None, None, "application scenario is empty"))?;
    if knowledge.is_empty() {
        return Err(failure(None, None, "no domain knowledge entries"));
    }
    let aligned: Vec<Option<Element>> = (1..=knowledge.len())
        .map(|pos| skills.iter().find(|(p, _)| *p == pos).and_then(|(_, s)| s.clone()))
        .collect();

    let elements = ExtractedElements {
        doc_id: doc_id.to_string(),
        scenario: scenario.trim().to_string(),
        knowledge: knowledge.into_iter().map(|(_, k)| k).collect(),
        skills: aligned,
        coding_skills: coding,
    };
    elements.validate().map_err(|m| failure(None, None, m))?;
    Ok(elements)
}

fn set_coding(coding: &mut CodingSkills, filled: &mut [bool; 3], cat: CodingCategory, entry: Entry) {
    let slot = cat as usize;
    if filled[slot] {
        return;
    }
    match entry {
        Entry::Item(el) => {
            *coding.get_mut(cat) = Some(el);
            filled[slot] = true;
        }
        Entry::Na => filled[slot] = true,
        Entry::Label(_) | Entry::Bare => {}
    }
}
