//! Scenario configuration, the built-in scenarios, output writers and the
//! oracle suite behind the `porocouple` command-line tool.

pub mod config;
pub mod heterogeneity;
pub mod output;
pub mod scenarios;
pub mod suite;
