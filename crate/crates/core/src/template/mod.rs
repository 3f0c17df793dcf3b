//! Symbolic recurrence templates and their general closed forms.

mod build;
mod closed_form;
mod companion;
mod partitions;

pub use build::{build_template, ParamSpec, RecurrenceTemplate, RootSpec, ShapeTier, TemplateConfig};
pub use closed_form::ExpPoly;
pub use companion::companion_embedding;
pub use partitions::{int_partitions, IntegerPartition};

use crate::algebra::{MatrixError, SymbolError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("system size must be at least 1 (got {0})")]
    BadSize(u32),
    #[error("invalid partition `{0}`")]
    BadPartition(String),
    #[error("unknown shape tier `{0}` (expected un, up or fu)")]
    BadTier(String),
    #[error("{0}")]
    Dimension(String),
    #[error("parameter specification: {0}")]
    BadParam(String),
    #[error("companion embedding: {0}")]
    Companion(String),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}
