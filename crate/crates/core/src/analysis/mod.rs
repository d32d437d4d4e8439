//! Evaluation protocols: scores over episodes, gaze inversion and decrease
//! rates, mask heatmaps, object injection and the four-variant comparison.

mod compare;
mod eval;
mod heatmap;
pub mod image;
mod injection;

pub use compare::{compare_variants, compare_variants_with, TrainedAgent, VariantRow, VariantTable, EVAL_SEED_OFFSET};
pub use eval::{check_transform, decrease_rate, evaluate, random_baseline, EpisodeStats};
pub use heatmap::{index_file_name, observation_file_name, record_heatmaps, HeatmapFrame, HeatmapRun};
pub use injection::{
    full_gauge_injection, injection_response, low_fuel_frame, region_cells, InjectionFrame, InjectionReport,
    SURFACE_ACTION,
};
