//! Simulation and exact analysis of score-based peer review.

pub mod config;
pub mod engine;
pub mod error;
pub mod exact;
pub mod harness;
pub mod normal;
pub mod planner;
pub mod quality;
pub mod report;
pub mod rules;
pub mod score;
pub mod strategy;
