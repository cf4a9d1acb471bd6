//! Project data: building elements, schedule of values, progress snapshots
//! at two levels of detail, and the priced progress deltas that drive
//! payments.

mod model;
mod project;
mod valuation;

pub use model::{
    BillingPeriod, BuildingElement, DeltaItem, KeyKind, Lod, ProgressReading, ProgressSnapshot, ScopeSelector,
    SovEntry, WorkDelta, WorkScope,
};
pub use project::{
    DeltaOutcome, IngestedSnapshot, ItemKey, PaidItem, PaidState, ProductError, Project, ProjectDataset, ProjectInfo,
    Regression,
};
pub use valuation::{item_payment, valuation, FULL_BP};
