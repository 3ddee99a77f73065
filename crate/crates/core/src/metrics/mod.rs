//! Caption and entity-insertion metrics.

mod entity;
mod report;
mod text;

pub use entity::{
    consensus_degree, entity_precision_recall, match_entities, recall_per_tag_report,
    render_recall_table, EntityMatchResult, EntityMention, MatchRegime, PrecisionRecall,
    SampleEntities, TagRecallRow, TagScore,
};
pub use report::{
    evaluate, render_strategy_table, EntityScores, GroundTruthRecord, MetricReport, PerTagScore,
    RegimeScore, STRATEGY_COLUMNS,
};
pub use text::{
    bleu_n, cider, clipped_matches, corpus_bleu, lcs_len, rouge_l, BleuStats, CiderCorpus,
    ROUGE_BETA,
};
