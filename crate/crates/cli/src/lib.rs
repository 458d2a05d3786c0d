//! Problem files, analyses and reports behind the `ige` command.

pub mod commands;
pub mod locate;
pub mod problem;
pub mod report;
