use std::fmt::Write;

use crate::encoders::{EncodedState, EncodingKind};
use crate::env::{Action, Mission};
use crate::hints::{ActionHistory, Subgoal};

/// Bumped whenever the prompt wording changes, so cached responses from an
/// older template are not reused.
pub const PROMPT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

pub fn system_message() -> String {
    let mut s = String::new();
    s.push_str(
        "You are guiding an agent in a 2D gridworld. Given the current state, the agent's \
         recent actions and its mission, suggest the single best next primitive action.\n\n",
    );
    s.push_str("Primitive actions:\n");
    for a in Action::ALL {
        let _ = writeln!(s, "{}: {}", a.code(), a.name());
    }
    s.push_str("\nSubgoals:\n");
    for g in Subgoal::ALL {
        let _ = writeln!(s, "{}: {}", g.name(), g.description());
    }
    s.push_str(
        "\nMoving forward into a wall or object does nothing. Pick up and toggle act on the \
         cell directly in front of the agent.\n\n\
         Think step by step about where the agent is, which way it faces and where the target \
         is, then answer with exactly one block of this form and nothing after it:\n\
         Prediction(\n  reasoning=\"<your step-by-step reasoning>\",\n  primitive_action=<integer 0-6>,\n  subgoal=<one subgoal name from the list>\n)\n",
    );
    s
}

fn state_text(encoded: &EncodedState) -> &str {
    // The grid encoding ends with its own MISSION line; the user message
    // carries the mission once, at the end.
    if encoded.kind == EncodingKind::AsciiGrid {
        if let Some(idx) = encoded.text.rfind("\nMISSION:") {
            return &encoded.text[..idx];
        }
    }
    &encoded.text
}

pub fn build_prompt(encoded: &EncodedState, history: &ActionHistory, mission: &Mission) -> Prompt {
    let mut user = String::new();
    let _ = writeln!(user, "Current state ({}):", encoded.kind.name());
    user.push_str(state_text(encoded));
    user.push_str("\n\nPrevious actions:");
    let lines = history.format_lines();
    if lines.is_empty() {
        user.push_str(" (none)\n");
    } else {
        user.push('\n');
        for l in lines {
            let _ = writeln!(user, "{l}");
        }
    }
    let _ = write!(user, "\nMISSION: {}", mission.text);
    Prompt {
        system: system_message(),
        user,
    }
}
