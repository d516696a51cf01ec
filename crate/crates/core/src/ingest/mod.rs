//! Tabular data to problem data: CSV loading, featurization, desired values, missing-entry
//! fill and skewed subsampling.

mod features;
mod skew;
mod table;

pub use features::{compute_desired, featurize, fill_missing, FeatureGroup, FeaturePlan};
pub use skew::{
    skew_probabilities, skewed_subsample, skewed_subsample_detailed, skewed_subsample_with_direction,
    SkewedSample, SKEW_STD,
};
pub use table::{load_csv, read_csv, Column, ColumnData, ColumnType, SampleTable, Schema};
