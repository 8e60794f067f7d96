//! Deterministic generator of geometric mmWave / massive-MIMO channel
//! datasets.
//!
//! The pipeline runs scene → tracer → ray files → channel matrices →
//! dataset shards → beam-selection features and labels.

pub mod beams;
mod bytes;
pub mod channel;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod fsutil;
pub mod genparams;
pub mod geom;
pub mod hash;
pub mod kv;
pub mod rayio;
pub mod scene;
pub mod tracer;
pub mod validate;

pub use channel::{array_response, channel_matrix, channel_vector, ChannelBuilder, ChannelMatrix};
pub use dataset::{build_dataset, Dataset, DatasetIndex};
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use genparams::{parse_params, subcarrier_set, ParamSet};
pub use geom::Vec3;
pub use rayio::{read_rayfile, write_rayfile, RayFile, RayFileMeta};
pub use scene::{build_o1_scene, Scene, SceneConfig};
pub use tracer::{trace_paths, PathList, PathRecord, Tracer};
pub use validate::Violation;
