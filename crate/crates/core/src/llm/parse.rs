use std::str::FromStr;

use thiserror::Error;

use crate::env::Action;
use crate::hints::{Hint, Subgoal};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prediction {
    pub reasoning: String,
    pub action: Action,
    pub subgoal: Subgoal,
}

impl Prediction {
    pub fn into_hint(self) -> Hint {
        let reasoning = self.reasoning;
        let hint = Hint::new(self.action, self.subgoal);
        if reasoning.is_empty() {
            hint
        } else {
            hint.with_reasoning(reasoning)
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ParseFailure {
    #[error("no Prediction( block in response")]
    NoBlock,
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("primitive_action `{0}` is not an integer in 0..=6")]
    BadAction(String),
    #[error("unknown subgoal `{0}`")]
    UnknownSubgoal(String),
}

const OPEN: &str = "Prediction(";

/// Extract the last `Prediction(...)` block from a model response.
pub fn parse_prediction(raw: &str) -> Result<Prediction, ParseFailure> {
    let start = raw.rfind(OPEN).ok_or(ParseFailure::NoBlock)?;
    let fields = scan_fields(&raw[start + OPEN.len()..]);
    let get = |name: &str| {
        fields
            .iter()
            .rev()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    };
    let action_text = get("primitive_action").ok_or(ParseFailure::MissingField("primitive_action"))?;
    let action = action_text
        .trim()
        .parse::<u8>()
        .ok()
        .and_then(Action::from_code)
        .ok_or_else(|| ParseFailure::BadAction(action_text.trim().to_string()))?;
    let subgoal_text = get("subgoal").ok_or(ParseFailure::MissingField("subgoal"))?;
    let subgoal_name = subgoal_text.trim().trim_start_matches("Subgoal.");
    let subgoal = Subgoal::from_str(subgoal_name)
        .map_err(|_| ParseFailure::UnknownSubgoal(subgoal_text.trim().to_string()))?;
    let reasoning = get("reasoning").unwrap_or("").trim().to_string();
    Ok(Prediction {
        reasoning,
        action,
        subgoal,
    })
}

fn closing_quote(open: char) -> Option<char> {
    match open {
        '"' => Some('"'),
        '\'' => Some('\''),
        '\u{201c}' => Some('\u{201d}'),
        '\u{2018}' => Some('\u{2019}'),
        _ => None,
    }
}

/// `name = value` pairs up to the closing parenthesis (or end of text).
/// Quoted values may contain commas, parentheses and escaped quotes.
fn scan_fields(body: &str) -> Vec<(String, String)> {
    let chars: Vec<char> = body.chars().collect();
    let mut fields = Vec::new();
    let mut i = 0;
    let skip = |i: &mut usize, pred: &dyn Fn(char) -> bool| {
        while *i < chars.len() && pred(chars[*i]) {
            *i += 1;
        }
    };
    loop {
        skip(&mut i, &|c| c.is_whitespace() || c == ',');
        if i >= chars.len() || chars[i] == ')' {
            break;
        }
        let name_start = i;
        skip(&mut i, &|c| c.is_alphanumeric() || c == '_');
        let name: String = chars[name_start..i].iter().collect();
        skip(&mut i, &|c| c.is_whitespace());
        if name.is_empty() || i >= chars.len() || !(chars[i] == '=' || chars[i] == ':') {
            // Not a field; resynchronise at the next separator.
            skip(&mut i, &|c| c != ',' && c != ')' && c != '\n');
            continue;
        }
        i += 1;
        skip(&mut i, &|c| c == ' ' || c == '\t');
        let value = match chars.get(i).copied().and_then(closing_quote) {
            Some(close) => {
                i += 1;
                let mut v = String::new();
                while i < chars.len() && chars[i] != close {
                    if chars[i] == '\\' && i + 1 < chars.len() {
                        i += 1;
                    }
                    v.push(chars[i]);
                    i += 1;
                }
                i += 1;
                v
            }
            None => {
                let start = i;
                skip(&mut i, &|c| c != ',' && c != ')' && c != '\n');
                chars[start..i].iter().collect()
            }
        };
        fields.push((name, value));
    }
    fields
}
