//! Entity insertion precision and recall, and the rater-consensus degree.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::entities::EntityTag;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchRegime {
    /// Whole surface equal after lowercasing and whitespace normalization.
    Exact,
    /// At least one shared token.
    Partial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub surface: String,
    pub tag: EntityTag,
}

impl EntityMention {
    pub fn new(surface: &str, tag: EntityTag) -> Self {
        EntityMention {
            surface: surface.to_string(),
            tag,
        }
    }

    fn normalized(&self) -> String {
        self.surface
            .split_whitespace()
            .map(str::to_lowercase)
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn token_set(&self) -> HashSet<String> {
        self.surface.split_whitespace().map(str::to_lowercase).collect()
    }
}

/// Predicted and reference entities of one caption, each in caption order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleEntities {
    pub predicted: Vec<EntityMention>,
    pub ground_truth: Vec<EntityMention>,
}

/// Matched `(predicted, ground_truth)` index pairs of one sample.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityMatchResult {
    pub exact: Vec<(usize, usize)>,
    pub partial: Vec<(usize, usize)>,
}

fn greedy_pass(
    s: &SampleEntities,
    pairs: &mut Vec<(usize, usize)>,
    accept: impl Fn(&EntityMention, &EntityMention) -> bool,
) {
    let mut pred_used: HashSet<usize> = pairs.iter().map(|p| p.0).collect();
    let mut gt_used: HashSet<usize> = pairs.iter().map(|p| p.1).collect();
    for (i, p) in s.predicted.iter().enumerate() {
        if pred_used.contains(&i) {
            continue;
        }
        let hit = s
            .ground_truth
            .iter()
            .enumerate()
            .find(|(j, g)| !gt_used.contains(j) && g.tag == p.tag && accept(p, g));
        if let Some((j, _)) = hit {
            pred_used.insert(i);
            gt_used.insert(j);
            pairs.push((i, j));
        }
    }
}

/// Greedy one-to-one, tag-constrained matching in caption order. Partial
/// matching starts from the exact pairs, so every exact match is also a
/// partial one.
pub fn match_entities(s: &SampleEntities) -> EntityMatchResult {
    let mut exact = Vec::new();
    greedy_pass(s, &mut exact, |p, g| p.normalized() == g.normalized());
    let mut partial = exact.clone();
    greedy_pass(s, &mut partial, |p, g| !p.token_set().is_disjoint(&g.token_set()));
    exact.sort_unstable();
    partial.sort_unstable();
    EntityMatchResult { exact, partial }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TagScore {
    pub precision: f64,
    pub recall: f64,
    /// Reference entities of this tag.
    pub support: usize,
    pub true_positives: usize,
    pub predicted: usize,
}

/// Micro-averaged scores; a ratio with an empty denominator is 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub true_positives: usize,
    pub predicted: usize,
    pub ground_truth: usize,
    pub per_tag: BTreeMap<EntityTag, TagScore>,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn entity_precision_recall(samples: &[SampleEntities], regime: MatchRegime) -> PrecisionRecall {
    let mut tags: BTreeMap<EntityTag, (usize, usize, usize)> = BTreeMap::new();
    for s in samples {
        let m = match_entities(s);
        let pairs = match regime {
            MatchRegime::Exact => &m.exact,
            MatchRegime::Partial => &m.partial,
        };
        for p in &s.predicted {
            tags.entry(p.tag).or_default().1 += 1;
        }
        for g in &s.ground_truth {
            tags.entry(g.tag).or_default().2 += 1;
        }
        for &(i, _) in pairs {
            tags.entry(s.predicted[i].tag).or_default().0 += 1;
        }
    }
    let (tp, pred, gt) = tags
        .values()
        .fold((0, 0, 0), |a, t| (a.0 + t.0, a.1 + t.1, a.2 + t.2));
    let per_tag = tags
        .into_iter()
        .map(|(tag, (tp, pred, gt))| {
            (
                tag,
                TagScore {
                    precision: ratio(tp, pred),
                    recall: ratio(tp, gt),
                    support: gt,
                    true_positives: tp,
                    predicted: pred,
                },
            )
        })
        .collect();
    PrecisionRecall {
        precision: ratio(tp, pred),
        recall: ratio(tp, gt),
        true_positives: tp,
        predicted: pred,
        ground_truth: gt,
        per_tag,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TagRecallRow {
    pub tag: EntityTag,
    pub recall: f64,
    /// Reference entities of this tag among the evaluated captions.
    pub support: usize,
    /// Entities of this tag in the training captions.
    pub training_support: usize,
}

/// Per-tag recall next to training-set counts. Tags without reference
/// entities are left out.
pub fn recall_per_tag_report(
    scores: &PrecisionRecall,
    training_support: &BTreeMap<EntityTag, usize>,
) -> Vec<TagRecallRow> {
    scores
        .per_tag
        .iter()
        .filter(|(_, s)| s.support > 0)
        .map(|(&tag, s)| TagRecallRow {
            tag,
            recall: s.recall,
            support: s.support,
            training_support: training_support.get(&tag).copied().unwrap_or(0),
        })
        .collect()
}

pub fn render_recall_table(rows: &[TagRecallRow]) -> String {
    let mut out = format!("{:<8} {:>8} {:>8} {:>10}\n", "tag", "recall", "support", "train");
    for r in rows {
        out.push_str(&format!(
            "{:<8} {:>8.4} {:>8} {:>10}\n",
            r.tag.as_str(),
            r.recall,
            r.support,
            r.training_support
        ));
    }
    out
}

/// `1 - min/max` of two vote counts.
pub fn consensus_degree(votes_a: u64, votes_b: u64) -> Result<f64> {
    let (lo, hi) = (votes_a.min(votes_b), votes_a.max(votes_b));
    if hi == 0 {
        return Err(Error::Data("consensus is undefined when both vote counts are zero".into()));
    }
    Ok(1.0 - lo as f64 / hi as f64)
}
