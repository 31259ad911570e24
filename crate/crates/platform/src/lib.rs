//! Survey service, event store, exports and command-line workflows for
//! frontier preference studies.
//!
//! * [`config`] loads the study configuration.
//! * [`store`] is the append-only event log.
//! * [`service`] administers survey sessions over that log.
//! * [`http`] exposes the service as a JSON API.
//! * [`export`] writes and reads ballot and respondent files.
//! * [`results`] and [`pipeline`] turn respondents into result tables.
//! * [`synth`] drives the service with planted-preference respondents.

pub mod config;
pub mod export;
pub mod http;
pub mod pipeline;
pub mod results;
pub mod service;
pub mod store;
pub mod synth;
