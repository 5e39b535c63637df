pub mod config;
pub mod geometry;
pub mod invariant;
pub mod io;
pub mod mpc;
pub mod numerics;
pub mod par;
pub mod pipeline;
pub mod pruning;
pub mod pwl;
pub mod solver;
