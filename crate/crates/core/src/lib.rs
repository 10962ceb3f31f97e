//! Dataset construction, metrics and representational analyses for probing
//! taxonomic knowledge in language and vision-language models.

pub mod dataset;
pub mod dump;
pub mod lexicon;
pub mod metrics;
pub mod pipeline;
pub mod questgen;
pub mod repranalysis;
pub mod scene;
pub mod seed;
pub mod synthetic;
pub mod taxonomy;

pub use dump::{DumpManifest, DumpRole, EmbeddingDump, RowMeta};
pub use metrics::{InstanceResult, InstanceSet, MetricsReport};
pub use questgen::{Gold, QAInstance, Question, QuestionKind};
pub use scene::SceneGraph;
pub use taxonomy::Taxonomy;
pub use taxoprobe_stats as stats;
