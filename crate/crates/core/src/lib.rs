pub mod arboreal;
pub mod arith;
pub mod bounds;
pub mod error;
pub mod fiber;
pub mod scoreboard;
pub mod sequence;
pub mod stats;
