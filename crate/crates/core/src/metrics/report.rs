//! Whole-corpus scoring of filled captions.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::entity::{entity_precision_recall, EntityMention, MatchRegime, SampleEntities};
use super::text::{corpus_bleu, rouge_l, CiderCorpus};
use crate::entities::EntityTag;
use crate::insertion::FilledRecord;
use crate::{Error, Result};

/// Reference caption and its entities, one JSONL line per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub id: String,
    pub caption: Vec<String>,
    pub entities: Vec<EntityMention>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RegimeScore {
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerTagScore {
    pub exact_precision: f64,
    pub exact_recall: f64,
    pub partial_precision: f64,
    pub partial_recall: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntityScores {
    pub exact: RegimeScore,
    pub partial: RegimeScore,
    pub per_tag: BTreeMap<EntityTag, PerTagScore>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_samples: usize,
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub rouge_l: f64,
    pub cider: f64,
    pub entity_pr: EntityScores,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Two-column `metric value` table followed by the per-tag scores.
    pub fn to_table(&self) -> String {
        let e = &self.entity_pr;
        let rows = [
            ("samples", self.n_samples as f64),
            ("Bleu-1", self.bleu1),
            ("Bleu-2", self.bleu2),
            ("Bleu-3", self.bleu3),
            ("Bleu-4", self.bleu4),
            ("Rouge-L", self.rouge_l),
            ("CIDEr", self.cider),
            ("exact P", e.exact.precision),
            ("exact R", e.exact.recall),
            ("partial P", e.partial.precision),
            ("partial R", e.partial.recall),
        ];
        let mut out = String::new();
        for (name, v) in rows {
            out.push_str(&format!("{name:<10} {v:>10.4}\n"));
        }
        if !e.per_tag.is_empty() {
            out.push_str(&format!(
                "\n{:<8} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
                "tag", "exact P", "exact R", "part P", "part R", "support"
            ));
            for (tag, s) in &e.per_tag {
                out.push_str(&format!(
                    "{:<8} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8}\n",
                    tag.as_str(),
                    s.exact_precision,
                    s.exact_recall,
                    s.partial_precision,
                    s.partial_recall,
                    s.support
                ));
            }
        }
        out
    }
}

pub const STRATEGY_COLUMNS: [&str; 10] = [
    "Bleu-1", "Bleu-2", "Bleu-3", "Bleu-4", "Rouge-L", "CIDEr", "exact P", "exact R", "partial P",
    "partial R",
];

/// One row per labelled report, with the caption and entity columns.
pub fn render_strategy_table<'a>(rows: impl IntoIterator<Item = (&'a str, &'a MetricReport)>) -> String {
    let mut out = format!("{:<10}", "strategy");
    for c in STRATEGY_COLUMNS {
        out.push_str(&format!(" {c:>9}"));
    }
    out.push('\n');
    for (name, r) in rows {
        let e = &r.entity_pr;
        out.push_str(&format!("{name:<10}"));
        for v in [
            r.bleu1,
            r.bleu2,
            r.bleu3,
            r.bleu4,
            r.rouge_l,
            r.cider,
            e.exact.precision,
            e.exact.recall,
            e.partial.precision,
            e.partial.recall,
        ] {
            out.push_str(&format!(" {v:>9.4}"));
        }
        out.push('\n');
    }
    out
}

fn lowercase(tokens: &[String]) -> Vec<String> {
    tokens.iter().map(|t| t.to_lowercase()).collect()
}

/// Scores predictions against references, paired by id in reference order.
/// Misses contribute no predicted entity.
pub fn evaluate(predictions: &[FilledRecord], ground_truth: &[GroundTruthRecord]) -> Result<MetricReport> {
    let by_id: HashMap<&str, &FilledRecord> = predictions.iter().map(|p| (p.id.as_str(), p)).collect();
    if by_id.len() != predictions.len() {
        return Err(Error::Data("predictions contain repeated ids".into()));
    }
    let mut candidates = Vec::with_capacity(ground_truth.len());
    let mut references = Vec::with_capacity(ground_truth.len());
    let mut entities = Vec::with_capacity(ground_truth.len());
    for gt in ground_truth {
        let pred = by_id
            .get(gt.id.as_str())
            .ok_or_else(|| Error::Data(format!("no prediction for sample `{}`", gt.id)))?;
        candidates.push(lowercase(&pred.filled));
        references.push(lowercase(&gt.caption));
        entities.push(SampleEntities {
            predicted: pred
                .provenance
                .iter()
                .filter_map(|p| p.surface.as_deref().map(|s| EntityMention::new(s, p.tag)))
                .collect(),
            ground_truth: gt.entities.clone(),
        });
    }
    if predictions.len() != ground_truth.len() {
        return Err(Error::Data(format!(
            "{} predictions for {} reference captions",
            predictions.len(),
            ground_truth.len()
        )));
    }

    let ref_sets: Vec<Vec<Vec<String>>> = references.iter().map(|r| vec![r.clone()]).collect();
    let [bleu1, bleu2, bleu3, bleu4] = corpus_bleu(&candidates, &ref_sets);
    let n = candidates.len().max(1) as f64;
    let rouge = candidates
        .iter()
        .zip(&references)
        .map(|(c, r)| rouge_l(c, r))
        .sum::<f64>()
        / n;
    let cider_corpus = CiderCorpus::new(&references)?;
    let cider = candidates
        .iter()
        .zip(&references)
        .map(|(c, r)| cider_corpus.score(c, r))
        .sum::<f64>()
        / n;

    let exact = entity_precision_recall(&entities, MatchRegime::Exact);
    let partial = entity_precision_recall(&entities, MatchRegime::Partial);
    let per_tag = exact
        .per_tag
        .iter()
        .map(|(tag, x)| {
            let p = partial.per_tag[tag];
            (
                *tag,
                PerTagScore {
                    exact_precision: x.precision,
                    exact_recall: x.recall,
                    partial_precision: p.precision,
                    partial_recall: p.recall,
                    support: x.support,
                },
            )
        })
        .collect();

    Ok(MetricReport {
        n_samples: candidates.len(),
        bleu1,
        bleu2,
        bleu3,
        bleu4,
        rouge_l: rouge,
        cider,
        entity_pr: EntityScores {
            exact: RegimeScore {
                precision: exact.precision,
                recall: exact.recall,
            },
            partial: RegimeScore {
                precision: partial.precision,
                recall: partial.recall,
            },
            per_tag,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entities::TemplateCaption;
    use crate::insertion::{FilledCaption, Provenance, Strategy};

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn record(id: &str, filled: &str, surface: Option<&str>) -> FilledRecord {
        FilledRecord::new(
            id,
            &TemplateCaption::from_strings(&["PERSON_", "runs"]),
            FilledCaption {
                tokens: toks(filled),
                provenance: vec![Provenance {
                    tag: EntityTag::Person,
                    strategy: Strategy::Ctx,
                    surface: surface.map(String::from),
                    sentence_index: surface.map(|_| 0),
                }],
            },
        )
    }

    fn gt(id: &str, caption: &str, person: &str) -> GroundTruthRecord {
        GroundTruthRecord {
            id: id.into(),
            caption: toks(caption),
            entities: vec![EntityMention::new(person, EntityTag::Person)],
        }
    }

    #[test]
    fn perfect_predictions_score_maximum() {
        let gts = [gt("a", "ann lee runs fast", "Ann Lee"), gt("b", "bo kim walks home", "Bo Kim")];
        let preds = [
            record("b", "Bo Kim walks home", Some("Bo Kim")),
            record("a", "Ann Lee runs fast", Some("Ann Lee")),
        ];
        let r = evaluate(&preds, &gts).unwrap();
        assert_eq!(r.n_samples, 2);
        assert!((r.bleu4 - 1.0).abs() < 1e-12);
        assert!((r.rouge_l - 1.0).abs() < 1e-12);
        assert!((r.cider - 10.0).abs() < 1e-9);
        assert_eq!(r.entity_pr.exact.recall, 1.0);
        let table = render_strategy_table([("CtxIns", &r)]);
        assert_eq!(table.lines().count(), 2);
        assert!(table.contains("partial R"));
    }

    #[test]
    fn misses_and_missing_ids() {
        let gts = [gt("a", "ann lee runs", "Ann Lee"), gt("b", "bo kim walks", "Bo Kim")];
        let preds = [record("a", "PERSON_ runs", None), record("b", "Kim walks", Some("Kim"))];
        let r = evaluate(&preds, &gts).unwrap();
        assert_eq!(r.entity_pr.exact.precision, 0.0);
        assert_eq!(r.entity_pr.partial.precision, 1.0);
        assert_eq!(r.entity_pr.partial.recall, 0.5);
        assert!(evaluate(&preds[..1], &gts).is_err());
    }
}
