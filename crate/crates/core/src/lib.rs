pub mod action;
pub mod diffusion;
pub mod env;
pub mod frame;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod cli;
pub mod svg;
