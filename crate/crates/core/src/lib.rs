//! Gridworld reinforcement learning with action hints delivered through the
//! observation.
//!
//! An agent is trained with PPO on observations augmented by a hint channel
//! (suggested action, subgoal and an availability flag). Hints come from an
//! exact planner, from an OpenAI-compatible language model endpoint, or from
//! deterministic stand-ins, and are issued every `k` steps. The agent is free
//! to follow or ignore them.

pub mod encoders;
pub mod env;
pub mod exec;
pub mod harness;
pub mod hints;
pub mod llm;
pub mod planner;
pub mod rl;
pub mod seeds;
