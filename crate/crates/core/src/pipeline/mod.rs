//! The downstream tasks built on sentence similarity: alignment recovery,
//! word-budget corpus filtering, negative-set construction for the MLP classifier,
//! score-distribution export and hubness analysis.
//!
//! Ordering is deterministic everywhere: argmax ties go to the lowest index, and
//! sorting by score ranks the lower line index first among equal scores.

mod align;
mod filter;
mod hubness;
mod negsets;
mod scoredist;

pub use align::{
    align_from_matrix, align_recover, write_alignment_report, write_predictions, AlignmentAccumulator,
    AlignmentResult,
};
pub use filter::{filter_subsample, rank_by_score, select_top_n, write_selection, FilterSelection, ScoredPair};
pub use hubness::{
    find_hub_configuration, hubness_report, in_degrees, read_configuration, write_configuration,
    HubnessReport,
};
pub use negsets::{
    build_negative_sets, derangement, mismatched_pairs, negative_set_file_name, random_negative_set,
    NegativeSet, NegativeSetSpec,
};
pub use scoredist::{score_distribution_export, write_distribution_tsv};
