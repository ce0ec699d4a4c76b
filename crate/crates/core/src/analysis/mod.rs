//! Feasibility inequalities, the data-threshold table, and the
//! honest-vs-attacked statistical screen.

pub mod divergence;
pub mod exact;
pub mod feasibility;

pub use divergence::{
    compare_proportions, compare_statistics, DivergenceReport, MetricComparison, TestMethod,
    Verdict, DEFAULT_Z_STAR,
};
pub use feasibility::{
    check_cow_feasibility, check_dps_feasibility, data_threshold_bounds, table1_rows,
    DataThresholdBounds, FeasibilityEntry, FeasibilityReport, TABLE1_RATIOS,
};
