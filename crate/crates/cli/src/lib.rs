//! Command-line runner and live HTTP service for the navigation pipeline.

pub mod service;
