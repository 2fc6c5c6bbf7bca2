pub mod config;
pub mod render;
pub mod report;
pub mod suites;
