//! Unsupervised unigram morphological segmentation.

mod affix;
mod model;
mod train;
mod viterbi;

pub use affix::{
    affix_presence_feature, discover_affixes, Affix, AffixClass, AffixPosition, AffixPresenceConfig,
    AffixThresholds,
};
pub use model::{SegmentModel, SegmentScorer, SegmentTable, DEFAULT_ALPHA, DEFAULT_MAX_SEGMENT_LEN};
pub use train::{train_segmenter, TrainConfig, BOS, EOS};
pub use viterbi::{viterbi_segment, Segmentation};
