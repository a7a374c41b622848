//! IO, HTTP clients, run logs, the run store, the JSON service and the CLI
//! around [`counterframe_core`].
//!
//! Pipeline: [`dump`] parses a line-delimited forum dump, [`ingest`] scores
//! comment threads into event–sentiment pairs, [`batch`] runs sequential
//! counterfactual generation or ablation over the negative events into an
//! append-only [`runlog`], and [`report`] renders the evaluation tables.
//! [`service`] exposes prediction, generation and stored runs over HTTP.

pub mod assets;
pub mod batch;
pub mod cli;
pub mod config;
pub mod dump;
pub mod fixtures;
pub mod ingest;
pub mod pool;
pub mod remote;
pub mod report;
pub mod runlog;
pub mod service;
pub mod store;

pub use counterframe_core as core;
