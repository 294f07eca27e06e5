//! Persistent formats: datasets, cost matrices, configs, fitted models,
//! and reports.

mod dataset;
mod documents;

pub use dataset::{load_dataset, save_dataset};
pub use documents::{
    load_config, load_cost_matrix, load_models, load_optimization, load_report, save_config,
    save_cost_matrix, save_models, save_optimization, write_report, DocumentHeader, ModelsDocument,
    ReportDocument, CONFIG_FORMAT, COSTS_FORMAT, DATASET_FORMAT, MODELS_FORMAT, REPORT_FORMAT,
};
