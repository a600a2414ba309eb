pub mod check;
pub mod config;
pub mod runner;
pub mod tools;
