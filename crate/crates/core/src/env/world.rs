use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mission::{DoorGoal, Mission, Quadrant, RelativeSide, TaskKind};
use super::types::{Action, AgentPose, Color, Direction, DoorState, GridObject, ObjectKind};
use super::EnvError;
use crate::planner;
use crate::seeds::mix_seed;

/// Per-task environment settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub task: TaskKind,
    /// Side length including the surrounding wall.
    pub room_size: u8,
    /// Defaults to 64, or 8 × room_size for rooms larger than 8.
    pub max_steps: Option<u32>,
    /// PickupLoc object count; defaults to room_size - 2.
    pub num_objects: Option<u8>,
    pub door_goal: DoorGoal,
    /// Success reward is `1 - reward_decay * step_count / max_steps`.
    pub reward_decay: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            task: TaskKind::GoToObj,
            room_size: 8,
            max_steps: None,
            num_objects: None,
            door_goal: DoorGoal::Open,
            reward_decay: 0.9,
        }
    }
}

impl EnvConfig {
    pub fn new(task: TaskKind, room_size: u8) -> EnvConfig {
        EnvConfig {
            task,
            room_size,
            ..EnvConfig::default()
        }
    }

    pub fn effective_max_steps(&self) -> u32 {
        self.max_steps
            .unwrap_or_else(|| 64.max(8 * self.room_size as u32))
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if !(5..=16).contains(&self.room_size) {
            return Err(EnvError::Config(format!(
                "room_size must be within 5..=16, got {}",
                self.room_size
            )));
        }
        if self.effective_max_steps() == 0 {
            return Err(EnvError::Config("max_steps must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.reward_decay) {
            return Err(EnvError::Config("reward_decay must lie in [0, 1]".into()));
        }
        let interior = (self.room_size as usize - 2).pow(2);
        if let Some(n) = self.num_objects {
            if n == 0 || n as usize + 1 > interior {
                return Err(EnvError::Config(format!(
                    "num_objects {n} does not fit in the room"
                )));
            }
        }
        Ok(())
    }
}

/// Full simulator state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub width: u8,
    pub height: u8,
    /// Row-major cells; the agent's cell holds floor (or an open door).
    pub grid: Vec<GridObject>,
    pub agent: AgentPose,
    pub carrying: Option<GridObject>,
    pub step_count: u32,
    pub max_steps: u32,
    pub rng_seed: u64,
    pub reward_decay: f64,
    #[serde(default)]
    pub terminated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepResult {
    pub reward: f64,
    pub done: bool,
    pub success: bool,
}

impl WorldState {
    /// Empty walled room with the agent at `agent`.
    pub fn empty_room(width: u8, height: u8, agent: AgentPose, max_steps: u32) -> WorldState {
        let mut grid = vec![GridObject::FLOOR; width as usize * height as usize];
        for y in 0..height {
            for x in 0..width {
                if x == 0 || y == 0 || x == width - 1 || y == height - 1 {
                    grid[y as usize * width as usize + x as usize] = GridObject::WALL;
                }
            }
        }
        WorldState {
            width,
            height,
            grid,
            agent,
            carrying: None,
            step_count: 0,
            max_steps,
            rng_seed: 0,
            reward_decay: 0.9,
            terminated: false,
        }
    }

    #[inline]
    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && (x as u32) < self.width as u32 && (y as u32) < self.height as u32
    }

    #[inline]
    pub fn index(&self, x: u8, y: u8) -> usize {
        y as usize * self.width as usize + x as usize
    }

    #[inline]
    pub fn get(&self, x: u8, y: u8) -> GridObject {
        self.grid[self.index(x, y)]
    }

    /// Cell lookup where anything outside the grid reads as wall.
    #[inline]
    pub fn get_or_wall(&self, x: i32, y: i32) -> GridObject {
        if self.in_bounds(x, y) {
            self.get(x as u8, y as u8)
        } else {
            GridObject::WALL
        }
    }

    pub fn set(&mut self, x: u8, y: u8, obj: GridObject) {
        let i = self.index(x, y);
        self.grid[i] = obj;
    }

    pub fn front_cell(&self) -> GridObject {
        let (fx, fy) = self.agent.front();
        self.get_or_wall(fx, fy)
    }

    /// Every non-wall, non-floor cell in row-major order.
    pub fn objects(&self) -> impl Iterator<Item = (u8, u8, GridObject)> + '_ {
        self.grid.iter().enumerate().filter_map(move |(i, o)| {
            o.is_object().then(|| {
                (
                    (i % self.width as usize) as u8,
                    (i / self.width as usize) as u8,
                    *o,
                )
            })
        })
    }

    /// Cells strictly inside the border.
    pub fn interior_cells(&self) -> impl Iterator<Item = (u8, u8)> + '_ {
        (1..self.height - 1).flat_map(move |y| (1..self.width - 1).map(move |x| (x, y)))
    }

    pub fn remaining_steps(&self) -> u32 {
        self.max_steps.saturating_sub(self.step_count)
    }

    /// Advance one step. Inapplicable pickup/drop/toggle are no-ops.
    pub fn step(&mut self, mission: &Mission, action: Action) -> Result<StepResult, EnvError> {
        if self.terminated {
            return Err(EnvError::StepAfterDone);
        }
        self.step_count += 1;
        let (fx, fy) = self.agent.front();
        let front_in = self.in_bounds(fx, fy);
        match action {
            Action::TurnLeft => self.agent.dir = self.agent.dir.left(),
            Action::TurnRight => self.agent.dir = self.agent.dir.right(),
            Action::Forward => {
                if front_in && self.get(fx as u8, fy as u8).can_overlap() {
                    self.agent.x = fx as u8;
                    self.agent.y = fy as u8;
                }
            }
            Action::Pickup => {
                if front_in && self.carrying.is_none() {
                    let obj = self.get(fx as u8, fy as u8);
                    if obj.kind.is_carryable() {
                        self.carrying = Some(obj);
                        self.set(fx as u8, fy as u8, GridObject::FLOOR);
                    }
                }
            }
            Action::Drop => {
                if front_in {
                    if let Some(obj) = self.carrying {
                        if self.get(fx as u8, fy as u8).is_floor() {
                            self.set(fx as u8, fy as u8, obj);
                            self.carrying = None;
                        }
                    }
                }
            }
            Action::Toggle => {
                if front_in {
                    let mut obj = self.get(fx as u8, fy as u8);
                    if obj.kind == ObjectKind::Door {
                        obj.door_state = Some(match obj.door_state {
                            Some(DoorState::Open) => DoorState::Closed,
                            _ => DoorState::Open,
                        });
                        self.set(fx as u8, fy as u8, obj);
                    }
                }
            }
            Action::Done => {}
        }
        let success = is_success(self, mission);
        let reward = if success {
            1.0 - self.reward_decay * (self.step_count as f64 / self.max_steps as f64)
        } else {
            0.0
        };
        let done = success || self.step_count >= self.max_steps;
        self.terminated = done;
        Ok(StepResult {
            reward,
            done,
            success,
        })
    }
}

/// Whether `state` satisfies `mission`.
pub fn is_success(state: &WorldState, mission: &Mission) -> bool {
    let (tx, ty) = mission.target_pos;
    let target_cell = state.get_or_wall(tx as i32, ty as i32);
    let facing_target = state.agent.front() == (tx as i32, ty as i32)
        && target_cell.matches(mission.target_kind, mission.target_color);
    match mission.task {
        TaskKind::GoToObj => facing_target,
        TaskKind::OpenDoor => match mission.door_goal {
            DoorGoal::Open => {
                target_cell.matches(ObjectKind::Door, mission.target_color)
                    && target_cell.door_state == Some(DoorState::Open)
            }
            DoorGoal::GoTo => facing_target,
        },
        TaskKind::PickupLoc => {
            // The target only leaves its cell by being picked up.
            state
                .carrying
                .is_some_and(|c| c.matches(mission.target_kind, mission.target_color))
                && !target_cell.matches(mission.target_kind, mission.target_color)
        }
    }
}

/// Generate a solvable instance. Identical `(config, seed)` give identical
/// instances.
pub fn reset(config: &EnvConfig, seed: u64) -> Result<(WorldState, Mission), EnvError> {
    config.validate()?;
    for attempt in 0u64..1000 {
        let sub_seed = if attempt == 0 {
            seed
        } else {
            mix_seed(seed, attempt)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed);
        let Some((mut state, mission)) = generate(config, &mut rng) else {
            continue;
        };
        state.rng_seed = seed;
        // Instances that start solved would be won by any first action.
        if !is_success(&state, &mission) && planner::plan(&state, &mission).is_ok() {
            return Ok((state, mission));
        }
    }
    Err(EnvError::Generation(seed))
}

fn random_dir(rng: &mut ChaCha8Rng) -> Direction {
    Direction::from_code(rng.gen_range(0..4))
}

fn random_free_cell(state: &WorldState, rng: &mut ChaCha8Rng) -> (u8, u8) {
    let free: Vec<(u8, u8)> = state
        .interior_cells()
        .filter(|&(x, y)| state.get(x, y).is_floor() && (x, y) != (state.agent.x, state.agent.y))
        .collect();
    *free.choose(rng).expect("room has a free interior cell")
}

fn random_item(rng: &mut ChaCha8Rng) -> GridObject {
    let kind = *ObjectKind::CARRYABLE.choose(rng).unwrap();
    let color = *Color::ALL.choose(rng).unwrap();
    GridObject::item(kind, color)
}

fn generate(config: &EnvConfig, rng: &mut ChaCha8Rng) -> Option<(WorldState, Mission)> {
    let size = config.room_size;
    let max_steps = config.effective_max_steps();
    // Agent placed at a sentinel and moved once objects are down.
    let mut state = WorldState::empty_room(size, size, AgentPose::new(0, 0, Direction::East), max_steps);
    state.reward_decay = config.reward_decay;

    let mission = match config.task {
        TaskKind::GoToObj => {
            let obj = random_item(rng);
            let (x, y) = random_free_cell(&state, rng);
            state.set(x, y, obj);
            Mission::go_to(obj.kind, obj.color.unwrap(), (x, y))
        }
        TaskKind::OpenDoor => {
            let mut colors = Color::ALL.to_vec();
            colors.shuffle(rng);
            // One closed door per wall: north, east, south, west.
            let mut doors = Vec::with_capacity(4);
            for (i, side) in [Direction::North, Direction::East, Direction::South, Direction::West]
                .into_iter()
                .enumerate()
            {
                let along = rng.gen_range(1..size - 1);
                let pos = match side {
                    Direction::North => (along, 0),
                    Direction::South => (along, size - 1),
                    Direction::East => (size - 1, along),
                    Direction::West => (0, along),
                };
                state.set(pos.0, pos.1, GridObject::door(colors[i], DoorState::Closed));
                doors.push((side, pos, colors[i]));
            }
            let agent_pos = random_free_cell(&state, rng);
            let dir = random_dir(rng);
            state.agent = AgentPose::new(agent_pos.0, agent_pos.1, dir);
            let by_color = rng.gen_bool(0.5);
            let side = *RelativeSide::ALL.choose(rng).unwrap();
            let (_, pos, color) = if by_color {
                *doors.choose(rng).unwrap()
            } else {
                let world = side.world_direction(dir);
                *doors.iter().find(|d| d.0 == world).unwrap()
            };
            Mission::open_door(color, pos, (!by_color).then_some(side), config.door_goal)
        }
        TaskKind::PickupLoc => {
            let n = config.num_objects.unwrap_or(size - 2);
            let mut placed = Vec::with_capacity(n as usize);
            for _ in 0..n {
                let obj = random_item(rng);
                let (x, y) = random_free_cell(&state, rng);
                state.set(x, y, obj);
                placed.push((x, y, obj));
            }
            let &(tx, ty, target) = placed.choose(rng).unwrap();
            let quadrant = Quadrant::of(tx, ty, size, size);
            let ambiguous = placed.iter().any(|&(x, y, o)| {
                (x, y) != (tx, ty) && o == target && Quadrant::of(x, y, size, size) == quadrant
            });
            if ambiguous {
                return None;
            }
            Mission::pickup_loc(target.kind, target.color.unwrap(), (tx, ty), quadrant)
        }
    };

    if config.task != TaskKind::OpenDoor {
        let (x, y) = random_free_cell(&state, rng);
        state.agent = AgentPose::new(x, y, random_dir(rng));
    }
    Some((state, mission))
}
