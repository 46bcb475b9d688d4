//! Exact computations for rank-one cutting-and-stacking transformations.
//!
//! A [`dynseq::SpacerRule`] fixes the cut counts `r_n` and spacer counts
//! `s_{n,j}`; a [`tower::TowerModel`] turns it into heights and measures;
//! [`ergodic`] evaluates correlations and ergodic averages over a reference
//! column with exact rational arithmetic.

pub mod cli;
pub mod config;
pub mod dynseq;
pub mod ergodic;
pub mod error;
pub mod families;
pub mod num;
pub mod report;
pub mod rng;
pub mod tower;

pub use error::{Error, Result};
