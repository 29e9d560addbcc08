//! Catalog of machine-translation research, benchmarks and datasets for
//! African languages: record model, versioned store, read-side queries,
//! contribution and recommendation workflows, and bulk ingestion.

pub mod canonical;
pub mod catalog;
pub mod ingest;
pub mod query;
pub mod store;
pub mod views;
pub mod workflows;
