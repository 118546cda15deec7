pub mod cli;
pub mod dto;
pub mod report;
pub mod suites;
