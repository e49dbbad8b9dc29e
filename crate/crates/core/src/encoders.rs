//! Text encodings of a world state for language-model prompts.
//!
//! Coordinates are `(x, y)` with `x` the column and `y` the row, origin at
//! the top-left corner, matching the row order of the ASCII grid. Every
//! encoding ends with the mission text.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::{GridObject, Mission, WorldState};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingKind {
    #[default]
    AsciiGrid,
    NaturalLanguage,
    TupleList,
    RelativeDescription,
}

impl EncodingKind {
    pub const ALL: [EncodingKind; 4] = [
        EncodingKind::AsciiGrid,
        EncodingKind::NaturalLanguage,
        EncodingKind::TupleList,
        EncodingKind::RelativeDescription,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EncodingKind::AsciiGrid => "ascii_grid",
            EncodingKind::NaturalLanguage => "natural_language",
            EncodingKind::TupleList => "tuple_list",
            EncodingKind::RelativeDescription => "relative_description",
        }
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EncodingKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EncodingKind::ALL
            .into_iter()
            .find(|k| k.name() == s || k.name().split('_').next() == Some(s))
            .ok_or_else(|| format!("unknown encoding `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedState {
    pub kind: EncodingKind,
    pub text: String,
    /// Symbol legend, in symbol-assignment order (ASCII grid only).
    pub legend: Vec<(char, String)>,
}

pub fn encode(kind: EncodingKind, state: &WorldState, mission: &Mission) -> EncodedState {
    match kind {
        EncodingKind::AsciiGrid => encode_ascii(state, mission),
        EncodingKind::NaturalLanguage => encode_natural(state, mission),
        EncodingKind::TupleList => encode_tuples(state, mission),
        EncodingKind::RelativeDescription => encode_relative(state, mission),
    }
}

/// Object description with door state, e.g. "blue door (closed)".
fn describe_with_state(obj: &GridObject) -> String {
    match obj.door_state {
        Some(s) => format!("{} ({})", obj.describe(), s.name()),
        None => obj.describe(),
    }
}

const RESERVED: [char; 6] = ['#', '.', '^', '>', 'v', '<'];

/// Symbol table for the object classes present in the grid.
///
/// A class is (kind, color, door state). A kind present in a single class
/// takes its uppercased initial; a kind present in several takes the
/// lowercased initial of each color. Collisions fall through to the next
/// unused letter, classes being assigned in (kind, color, state) name order.
fn symbol_table(state: &WorldState) -> Vec<(GridObject, char)> {
    let classes: BTreeSet<(&str, &str, &str, GridObject)> = state
        .objects()
        .map(|(_, _, o)| {
            (
                o.kind.name(),
                o.color.map(|c| c.name()).unwrap_or(""),
                o.door_state.map(|s| s.name()).unwrap_or(""),
                o,
            )
        })
        .collect();
    let mut per_kind: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &classes {
        *per_kind.entry(c.0).or_default() += 1;
    }
    let mut used: BTreeSet<char> = RESERVED.into_iter().collect();
    let mut table = Vec::with_capacity(classes.len());
    for (kind, color, _, obj) in classes {
        let candidate = if per_kind[kind] == 1 {
            kind.chars().next().unwrap().to_ascii_uppercase()
        } else {
            color.chars().next().unwrap_or('x').to_ascii_lowercase()
        };
        let symbol = next_free_letter(candidate, &used);
        used.insert(symbol);
        table.push((obj, symbol));
    }
    table
}

fn next_free_letter(candidate: char, used: &BTreeSet<char>) -> char {
    let (base, other) = if candidate.is_ascii_uppercase() {
        (b'A', b'a')
    } else {
        (b'a', b'A')
    };
    let start = candidate as u8 - base;
    (0..26)
        .map(|i| (base + (start + i) % 26) as char)
        .chain((0..26).map(|i| (other + (start + i) % 26) as char))
        .find(|c| !used.contains(c))
        .expect("fewer than 46 object classes")
}

/// 2D grid, one character per cell, followed by a legend and the mission.
pub fn encode_ascii(state: &WorldState, mission: &Mission) -> EncodedState {
    let table = symbol_table(state);
    let symbol_of = |o: &GridObject| table.iter().find(|(c, _)| c == o).map(|(_, s)| *s);
    let mut text = String::with_capacity((state.width as usize + 1) * state.height as usize + 64);
    for y in 0..state.height {
        for x in 0..state.width {
            let ch = if (x, y) == (state.agent.x, state.agent.y) {
                state.agent.dir.arrow()
            } else {
                let o = state.get(x, y);
                if o.is_wall() {
                    '#'
                } else if o.is_floor() {
                    '.'
                } else {
                    symbol_of(&o).unwrap()
                }
            };
            text.push(ch);
        }
        text.push('\n');
    }
    let legend: Vec<(char, String)> = table
        .iter()
        .map(|(o, s)| (*s, describe_with_state(o)))
        .collect();
    text.push_str("Legend:\n");
    for (s, meaning) in &legend {
        let _ = writeln!(text, "{s} = {meaning}");
    }
    if let Some(c) = state.carrying {
        let _ = writeln!(text, "Carrying: {}", c.describe());
    }
    let _ = write!(text, "MISSION: {}", mission.text);
    EncodedState {
        kind: EncodingKind::AsciiGrid,
        text,
        legend,
    }
}

/// "Agent is facing north. There is a red key at position (3,2). ..."
pub fn encode_natural(state: &WorldState, mission: &Mission) -> EncodedState {
    let mut text = format!("Agent is facing {}", state.agent.dir.name());
    if let Some(c) = state.carrying {
        let _ = write!(text, " and carrying a {}", c.describe());
    }
    text.push('.');
    for (x, y, o) in state.objects() {
        let _ = write!(text, " There is a {} at position ({x},{y}).", o.describe());
    }
    let _ = write!(text, " Mission: {}.", mission.text);
    EncodedState {
        kind: EncodingKind::NaturalLanguage,
        text,
        legend: Vec::new(),
    }
}

/// "Agent at (1,1) facing north. Objects: [('red' key, (3,2)), ...]. Mission: ..."
pub fn encode_tuples(state: &WorldState, mission: &Mission) -> EncodedState {
    let items: Vec<String> = state
        .objects()
        .map(|(x, y, o)| {
            let color = o.color.map(|c| c.name()).unwrap_or("");
            let door = o
                .door_state
                .map(|s| format!(" ({})", s.name()))
                .unwrap_or_default();
            format!("('{color}' {}{door}, ({x},{y}))", o.kind.name())
        })
        .collect();
    let mut text = format!(
        "Agent at ({},{}) facing {}. Objects: [{}].",
        state.agent.x,
        state.agent.y,
        state.agent.dir.name(),
        items.join(", ")
    );
    if let Some(c) = state.carrying {
        let _ = write!(text, " Carrying: '{}' {}.", c.color.map(|c| c.name()).unwrap_or(""), c.kind.name());
    }
    let _ = write!(text, " Mission: {}.", mission.text);
    EncodedState {
        kind: EncodingKind::TupleList,
        text,
        legend: Vec::new(),
    }
}

fn tiles(n: i32) -> String {
    if n == 1 {
        "1 tile".to_string()
    } else {
        format!("{n} tiles")
    }
}

/// Offset of `(x, y)` from the agent as (ahead, right) in the agent's frame.
pub fn relative_offset(state: &WorldState, x: u8, y: u8) -> (i32, i32) {
    let dx = x as i32 - state.agent.x as i32;
    let dy = y as i32 - state.agent.y as i32;
    let (fx, fy) = state.agent.dir.delta();
    let (rx, ry) = state.agent.dir.right().delta();
    (dx * fx + dy * fy, dx * rx + dy * ry)
}

/// One line per object with ahead/behind and left/right components and the
/// Manhattan distance.
pub fn encode_relative(state: &WorldState, mission: &Mission) -> EncodedState {
    let mut text = format!("You are facing {}.", state.agent.dir.name());
    for (x, y, o) in state.objects() {
        let (ahead, right) = relative_offset(state, x, y);
        let mut parts = Vec::with_capacity(2);
        match ahead {
            a if a > 0 => parts.push(format!("{} ahead", tiles(a))),
            a if a < 0 => parts.push(format!("{} behind", tiles(-a))),
            _ => {}
        }
        match right {
            r if r > 0 => parts.push(format!("{} to your right", tiles(r))),
            r if r < 0 => parts.push(format!("{} to your left", tiles(-r))),
            _ => {}
        }
        let _ = write!(
            text,
            "\n{}: {} ({} away)",
            describe_with_state(&o),
            parts.join(", "),
            tiles(ahead.abs() + right.abs())
        );
    }
    if let Some(c) = state.carrying {
        let _ = write!(text, "\nYou are carrying a {}.", c.describe());
    }
    let _ = write!(text, "\nMission: {}.", mission.text);
    EncodedState {
        kind: EncodingKind::RelativeDescription,
        text,
        legend: Vec::new(),
    }
}
