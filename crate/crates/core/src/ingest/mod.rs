//! Case-study data: schema-driven CSV ingest, transforms, group splits and
//! post-repair feature ranking.

mod load;
mod rank;
mod schema;

pub use load::{harrison_transform, load_csv, load_frame, median_split_sensitive, write_dataset_csv, Frame, Loaded};
pub use rank::{rank_features, FeatureRanking, RankedFeature};
pub use schema::{ColumnKind, ColumnSchema, DefaultKind, Schema, SensitiveRule, Transform, TransformSpec};
