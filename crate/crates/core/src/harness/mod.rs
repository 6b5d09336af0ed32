//! Batch orchestration: manifests, feature extraction over many scans,
//! synthetic patterns with known ground truth, experiments and reports.

pub mod experiment;
pub mod extract;
pub mod io;
pub mod manifest;
pub mod report;
pub mod synth;

pub use experiment::{
    load_features, run_experiment, write_experiment, ExperimentConfig, ExperimentOutcome,
};
pub use extract::{
    analyze_gray, extract, ErrorRecord, ExtractConfig, ExtractionReport, PatternAnalysis,
    SkipRecord,
};
pub use manifest::{DatasetManifest, ManifestRecord};
pub use report::{class_summaries, write_class_summaries};
pub use synth::{
    synth_generate, write_synth, ClassDistribution, PatternTruth, StainTruth, SynthPattern,
    SynthSpec,
};
