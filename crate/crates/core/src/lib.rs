//! Reinforcement learning for spoken-dialogue policy design.
//!
//! The crate covers the whole loop: a slot-filling dialogue machine with a
//! compact learning state, a simulated user and speech-recognition channel,
//! exploratory data collection, empirical MDP estimation, Q-value iteration,
//! redeployment of the greedy policy and its evaluation.

pub mod mdp;
pub mod domain;
pub mod sim;
pub mod space;
pub mod corpus;
pub mod stats;
pub mod harness;
pub mod chat;
