use serde::{Deserialize, Serialize};

use super::mission::Mission;
use super::types::{obs_code, GridObject};
use super::world::WorldState;

pub const VIEW_SIZE: usize = 7;

/// Egocentric partial view. `view[row][col]` holds a (kind, color, state)
/// triple; the agent sits at row 6, column 3, facing up.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub view: [[[u8; 3]; VIEW_SIZE]; VIEW_SIZE],
    pub mission_text: String,
    pub carrying: Option<GridObject>,
}

impl Observation {
    pub const AGENT_ROW: usize = VIEW_SIZE - 1;
    pub const AGENT_COL: usize = VIEW_SIZE / 2;
}

/// World coordinates of view cell `(row, col)`.
fn view_to_world(state: &WorldState, row: usize, col: usize) -> (i32, i32) {
    let forward = (Observation::AGENT_ROW - row) as i32;
    let right = col as i32 - Observation::AGENT_COL as i32;
    let (fx, fy) = state.agent.dir.delta();
    let (rx, ry) = state.agent.dir.right().delta();
    (
        state.agent.x as i32 + forward * fx + right * rx,
        state.agent.y as i32 + forward * fy + right * ry,
    )
}

/// MiniGrid visibility propagation: opaque cells stop vision behind them.
fn visibility(cells: &[[GridObject; VIEW_SIZE]; VIEW_SIZE]) -> [[bool; VIEW_SIZE]; VIEW_SIZE] {
    let mut mask = [[false; VIEW_SIZE]; VIEW_SIZE];
    mask[Observation::AGENT_ROW][Observation::AGENT_COL] = true;
    for j in (0..VIEW_SIZE).rev() {
        for i in 0..VIEW_SIZE - 1 {
            if !mask[j][i] || !cells[j][i].see_behind() {
                continue;
            }
            mask[j][i + 1] = true;
            if j > 0 {
                mask[j - 1][i + 1] = true;
                mask[j - 1][i] = true;
            }
        }
        for i in (1..VIEW_SIZE).rev() {
            if !mask[j][i] || !cells[j][i].see_behind() {
                continue;
            }
            mask[j][i - 1] = true;
            if j > 0 {
                mask[j - 1][i - 1] = true;
                mask[j - 1][i] = true;
            }
        }
    }
    mask
}

pub fn observe(state: &WorldState, mission: &Mission) -> Observation {
    let mut cells = [[GridObject::WALL; VIEW_SIZE]; VIEW_SIZE];
    for (row, line) in cells.iter_mut().enumerate() {
        for (col, cell) in line.iter_mut().enumerate() {
            let (x, y) = view_to_world(state, row, col);
            *cell = state.get_or_wall(x, y);
        }
    }
    cells[Observation::AGENT_ROW][Observation::AGENT_COL] = GridObject::FLOOR;
    let mask = visibility(&cells);

    let mut view = [[[obs_code::UNSEEN, 0, 0]; VIEW_SIZE]; VIEW_SIZE];
    for row in 0..VIEW_SIZE {
        for col in 0..VIEW_SIZE {
            if mask[row][col] {
                view[row][col] = cells[row][col].observation_triple();
            }
        }
    }
    Observation {
        view,
        mission_text: mission.text.clone(),
        carrying: state.carrying,
    }
}

/// World cells that `observe` reads and can see. Cells outside this set never
/// influence the observation.
pub fn visible_cells(state: &WorldState) -> Vec<(i32, i32)> {
    let mut cells = [[GridObject::WALL; VIEW_SIZE]; VIEW_SIZE];
    let mut coords = [[(0, 0); VIEW_SIZE]; VIEW_SIZE];
    for row in 0..VIEW_SIZE {
        for col in 0..VIEW_SIZE {
            let (x, y) = view_to_world(state, row, col);
            coords[row][col] = (x, y);
            cells[row][col] = state.get_or_wall(x, y);
        }
    }
    cells[Observation::AGENT_ROW][Observation::AGENT_COL] = GridObject::FLOOR;
    let mask = visibility(&cells);
    let mut out = Vec::new();
    for row in 0..VIEW_SIZE {
        for col in 0..VIEW_SIZE {
            if mask[row][col] {
                out.push(coords[row][col]);
            }
        }
    }
    out
}
