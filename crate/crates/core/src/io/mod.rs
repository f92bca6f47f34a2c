//! Readers and writers for volumes, landmarks, transforms, pipeline
//! configurations and reports. All writers are deterministic.

pub mod config;
pub mod landmarks;
pub mod metaimage;
pub mod report;
pub mod transform_file;

pub use config::{parse_config, preset_gamma, read_config};
pub use landmarks::{read_landmarks_dirlab, write_landmarks};
pub use metaimage::{
    read_field, read_header, read_labels, read_metaimage, read_scalar, write_field, write_labels, write_scalar,
    ElementType, Image, VolumeHeader,
};
pub use report::{
    read_json, read_profile_csv, write_json, write_profile_csv, write_tre_csv, DiceEntry, DiceSummary, LevelSummary,
    ProfileReport, RegistrationReport, StageSummary, TransformSummary, TreSummary, REPORT_SCHEMA_VERSION,
};
pub use transform_file::{read_transform, transform_from_json, transform_to_json, write_transform};
