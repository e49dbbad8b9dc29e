//! Exact shortest-plan oracle.
//!
//! Breadth-first search over a compact search state ([`PlanNode`]) that
//! carries everything an action can change: the agent pose, the carried
//! object, the open/closed state of every door and the positions of the
//! movable objects. Walls and door positions never move and are read from the
//! source state. Successors are expanded in ascending action code, so among
//! equal-length plans the lexicographically smallest action sequence wins.

use std::collections::{HashSet, VecDeque};

use thiserror::Error;

use crate::env::{
    is_success, Action, AgentPose, DoorGoal, GridObject, Mission, ObjectKind, TaskKind, WorldState,
};
use crate::hints::Subgoal;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("no plan reaches the mission within {budget} steps")]
    Unsolvable { budget: u32 },
}

/// Search-state key.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlanNode {
    pub pose: AgentPose,
    pub carrying: Option<GridObject>,
    /// Bit `i` set when door `i` (row-major order) is open.
    pub door_mask: u32,
    /// Movable objects still on the grid, sorted by position.
    pub movables: Vec<(u8, u8, GridObject)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    pub actions: Vec<Action>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

enum Cell {
    Blocked,
    Floor,
    Door(usize),
    Movable(usize),
}

struct Model<'a> {
    state: &'a WorldState,
    mission: &'a Mission,
    doors: Vec<(u8, u8, GridObject)>,
}

impl<'a> Model<'a> {
    fn new(state: &'a WorldState, mission: &'a Mission) -> (Model<'a>, PlanNode) {
        let mut doors = Vec::new();
        let mut movables = Vec::new();
        let mut door_mask = 0u32;
        for (x, y, obj) in state.objects() {
            if obj.kind == ObjectKind::Door {
                if obj.is_open_door() {
                    door_mask |= 1 << doors.len();
                }
                doors.push((x, y, obj));
            } else {
                movables.push((x, y, obj));
            }
        }
        debug_assert!(doors.len() <= 32);
        let root = PlanNode {
            pose: state.agent,
            carrying: state.carrying,
            door_mask,
            movables,
        };
        (
            Model {
                state,
                mission,
                doors,
            },
            root,
        )
    }

    fn cell(&self, node: &PlanNode, x: i32, y: i32) -> Cell {
        if !self.state.in_bounds(x, y) {
            return Cell::Blocked;
        }
        let (x, y) = (x as u8, y as u8);
        if let Some(i) = self.doors.iter().position(|d| d.0 == x && d.1 == y) {
            return Cell::Door(i);
        }
        if self.state.get(x, y).is_wall() {
            return Cell::Blocked;
        }
        match node.movables.iter().position(|m| m.0 == x && m.1 == y) {
            Some(i) => Cell::Movable(i),
            None => Cell::Floor,
        }
    }

    fn content_at(&self, node: &PlanNode, x: i32, y: i32) -> Option<GridObject> {
        match self.cell(node, x, y) {
            Cell::Door(i) => {
                let mut d = self.doors[i].2;
                d.door_state = Some(if node.door_mask & (1 << i) != 0 {
                    crate::env::DoorState::Open
                } else {
                    crate::env::DoorState::Closed
                });
                Some(d)
            }
            Cell::Movable(i) => Some(node.movables[i].2),
            _ => None,
        }
    }

    fn success(&self, node: &PlanNode) -> bool {
        let m = self.mission;
        let (tx, ty) = (m.target_pos.0 as i32, m.target_pos.1 as i32);
        let target = self.content_at(node, tx, ty);
        let target_matches = target.is_some_and(|o| o.matches(m.target_kind, m.target_color));
        let facing = node.pose.front() == (tx, ty) && target_matches;
        match m.task {
            TaskKind::GoToObj => facing,
            TaskKind::OpenDoor => match m.door_goal {
                DoorGoal::Open => target_matches && target.is_some_and(|o| o.is_open_door()),
                DoorGoal::GoTo => facing,
            },
            TaskKind::PickupLoc => {
                node.carrying
                    .is_some_and(|c| c.matches(m.target_kind, m.target_color))
                    && !target_matches
            }
        }
    }

    /// Successor under `action`, or `None` when the action changes nothing.
    fn successor(&self, node: &PlanNode, action: Action) -> Option<PlanNode> {
        let (fx, fy) = node.pose.front();
        match action {
            Action::TurnLeft | Action::TurnRight => {
                let mut next = node.clone();
                next.pose.dir = if action == Action::TurnLeft {
                    node.pose.dir.left()
                } else {
                    node.pose.dir.right()
                };
                Some(next)
            }
            Action::Forward => {
                let passable = match self.cell(node, fx, fy) {
                    Cell::Floor => true,
                    Cell::Door(i) => node.door_mask & (1 << i) != 0,
                    _ => false,
                };
                passable.then(|| {
                    let mut next = node.clone();
                    next.pose.x = fx as u8;
                    next.pose.y = fy as u8;
                    next
                })
            }
            Action::Pickup => match self.cell(node, fx, fy) {
                Cell::Movable(i) if node.carrying.is_none() && node.movables[i].2.kind.is_carryable() => {
                    let mut next = node.clone();
                    let (_, _, obj) = next.movables.remove(i);
                    next.carrying = Some(obj);
                    Some(next)
                }
                _ => None,
            },
            Action::Drop => match (self.cell(node, fx, fy), node.carrying) {
                (Cell::Floor, Some(obj)) => {
                    let mut next = node.clone();
                    next.carrying = None;
                    let entry = (fx as u8, fy as u8, obj);
                    let at = next
                        .movables
                        .partition_point(|m| (m.1, m.0) < (entry.1, entry.0));
                    next.movables.insert(at, entry);
                    Some(next)
                }
                _ => None,
            },
            Action::Toggle => match self.cell(node, fx, fy) {
                Cell::Door(i) => {
                    let mut next = node.clone();
                    next.door_mask ^= 1 << i;
                    Some(next)
                }
                _ => None,
            },
            Action::Done => None,
        }
    }
}

/// Minimal-length plan from `state` to mission success within the remaining
/// step budget.
pub fn plan(state: &WorldState, mission: &Mission) -> Result<Plan, PlanError> {
    plan_within(state, mission, state.remaining_steps())
}

/// Minimal-length plan of at most `budget` actions.
pub fn plan_within(state: &WorldState, mission: &Mission, budget: u32) -> Result<Plan, PlanError> {
    let (model, root) = Model::new(state, mission);
    // Success is judged after a step, so an achieved goal still costs one.
    if model.success(&root) {
        return match budget {
            0 => Err(PlanError::Unsolvable { budget }),
            _ => Ok(Plan { actions: vec![Action::Done] }),
        };
    }
    // (node, parent index, action taken from parent, depth)
    let mut nodes: Vec<(PlanNode, usize, Action, u32)> = vec![(root.clone(), usize::MAX, Action::Done, 0)];
    let mut seen: HashSet<PlanNode> = HashSet::new();
    seen.insert(root);
    let mut queue = VecDeque::from([0usize]);
    while let Some(idx) = queue.pop_front() {
        let depth = nodes[idx].3;
        if depth >= budget {
            continue;
        }
        for action in Action::ALL {
            let Some(next) = model.successor(&nodes[idx].0, action) else {
                continue;
            };
            if seen.contains(&next) {
                continue;
            }
            seen.insert(next.clone());
            let done = model.success(&next);
            nodes.push((next, idx, action, depth + 1));
            let child = nodes.len() - 1;
            if done {
                return Ok(Plan {
                    actions: backtrack(&nodes, child),
                });
            }
            queue.push_back(child);
        }
    }
    Err(PlanError::Unsolvable { budget })
}

fn backtrack(nodes: &[(PlanNode, usize, Action, u32)], mut idx: usize) -> Vec<Action> {
    let mut actions = Vec::new();
    while nodes[idx].1 != usize::MAX {
        actions.push(nodes[idx].2);
        idx = nodes[idx].1;
    }
    actions.reverse();
    actions
}

/// First action of the shortest plan, ignoring the step limit; `Done` once
/// the mission is achieved.
pub fn optimal_action(state: &WorldState, mission: &Mission) -> Result<Action, PlanError> {
    if is_success(state, mission) {
        return Ok(Action::Done);
    }
    Ok(plan_within(state, mission, u32::MAX)?.actions[0])
}

/// Ground-truth subgoal for the current mission progress.
pub fn optimal_subgoal(state: &WorldState, mission: &Mission) -> Subgoal {
    if is_success(state, mission) {
        return Subgoal::Done;
    }
    let (tx, ty) = mission.target_pos;
    let front = state.agent.front();
    let adjacent = front == (tx as i32, ty as i32);
    match mission.task {
        // Carrying anything here means carrying the wrong object.
        TaskKind::PickupLoc => match state.carrying {
            Some(_) => Subgoal::Drop,
            None if adjacent => Subgoal::Pickup,
            _ => Subgoal::GoNextTo,
        },
        TaskKind::OpenDoor if adjacent && mission.door_goal == DoorGoal::Open => {
            let cell = state.get(tx, ty);
            if cell.door_state == Some(crate::env::DoorState::Closed) {
                Subgoal::Open
            } else {
                Subgoal::GoNextTo
            }
        }
        _ => Subgoal::GoNextTo,
    }
}
