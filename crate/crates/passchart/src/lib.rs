//! Pass-chart data extraction and spatial completion-percentage modeling.
//!
//! The crate is organized around the extraction pipeline
//! (rectify → segment → cluster → field coordinates) and the analytics
//! layered on top of the extracted pass locations (kernel density
//! estimates, logistic tensor-product GAM surfaces, naive-Bayes
//! shrinkage, and the CPAE summary metric). A synthetic chart renderer
//! with known ground truth backs the test suite end to end.

pub mod analytics;
pub mod cluster;
pub mod ingest;
pub mod linkage;
pub mod model;
pub mod pipeline;
pub mod plot;
pub mod raster;
pub mod rectify;
pub mod segment;
pub mod synth;
