//! N-gram caption metrics: corpus BLEU, ROUGE-L and CIDEr.

use std::collections::BTreeMap;

use crate::{Error, Result};

type Ngram<'a> = &'a [String];

fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<Ngram<'_>, usize> {
    let mut counts = BTreeMap::new();
    if n > 0 && tokens.len() >= n {
        for g in tokens.windows(n) {
            *counts.entry(g).or_default() += 1;
        }
    }
    counts
}

/// Clipped n-gram matches of `candidate` against `references`, and the
/// candidate's n-gram count.
pub fn clipped_matches(candidate: &[String], references: &[Vec<String>], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let mut max_ref: BTreeMap<Ngram<'_>, usize> = BTreeMap::new();
    for r in references {
        for (g, c) in ngram_counts(r, n) {
            let m = max_ref.entry(g).or_default();
            *m = (*m).max(c);
        }
    }
    let matches = cand
        .iter()
        .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
        .sum();
    (matches, candidate.len().saturating_sub(n - 1))
}

/// Running sufficient statistics for corpus BLEU up to order 4.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [usize; 4],
    pub totals: [usize; 4],
    pub candidate_len: usize,
    pub reference_len: usize,
}

impl BleuStats {
    /// Adds one candidate. The effective reference length is the one
    /// closest to the candidate's, the shorter on ties.
    pub fn add(&mut self, candidate: &[String], references: &[Vec<String>]) {
        for n in 1..=4 {
            let (m, t) = clipped_matches(candidate, references, n);
            self.matches[n - 1] += m;
            self.totals[n - 1] += t;
        }
        let c = candidate.len();
        let r = references
            .iter()
            .map(Vec::len)
            .min_by_key(|&r| (r.abs_diff(c), r))
            .unwrap_or(0);
        self.candidate_len += c;
        self.reference_len += r;
    }

    pub fn brevity_penalty(&self) -> f64 {
        let (c, r) = (self.candidate_len as f64, self.reference_len as f64);
        if c == 0.0 {
            0.0
        } else if c < r {
            (1.0 - r / c).exp()
        } else {
            1.0
        }
    }

    /// Brevity penalty times the geometric mean of orders `1..=n`.
    pub fn bleu(&self, n: usize) -> f64 {
        assert!((1..=4).contains(&n), "BLEU order must be 1..=4");
        let mut log_sum = 0.0;
        for k in 0..n {
            if self.matches[k] == 0 || self.totals[k] == 0 {
                return 0.0;
            }
            log_sum += (self.matches[k] as f64 / self.totals[k] as f64).ln();
        }
        self.brevity_penalty() * (log_sum / n as f64).exp()
    }
}

/// BLEU-n of one candidate.
pub fn bleu_n(candidate: &[String], references: &[Vec<String>], n: usize) -> f64 {
    let mut s = BleuStats::default();
    s.add(candidate, references);
    s.bleu(n)
}

/// Corpus BLEU-1..4 over aligned candidates and reference sets.
pub fn corpus_bleu(candidates: &[Vec<String>], references: &[Vec<Vec<String>>]) -> [f64; 4] {
    let mut s = BleuStats::default();
    for (c, r) in candidates.iter().zip(references) {
        s.add(c, r);
    }
    [1, 2, 3, 4].map(|n| s.bleu(n))
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub const ROUGE_BETA: f64 = 1.2;

/// LCS F-measure with recall weighted by `beta = 1.2`.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> f64 {
    let lcs = lcs_len(candidate, reference);
    if lcs == 0 {
        return 0.0;
    }
    let r = lcs as f64 / reference.len() as f64;
    let p = lcs as f64 / candidate.len() as f64;
    let b2 = ROUGE_BETA * ROUGE_BETA;
    (1.0 + b2) * r * p / (r + b2 * p)
}

/// Document frequencies of the reference corpus for CIDEr.
#[derive(Debug, Clone)]
pub struct CiderCorpus {
    df: [BTreeMap<Vec<String>, usize>; 4],
    n_refs: usize,
}

impl CiderCorpus {
    pub fn new(references: &[Vec<String>]) -> Result<Self> {
        if references.len() < 2 {
            return Err(Error::Data(format!(
                "CIDEr needs at least 2 references for document frequencies, got {}",
                references.len()
            )));
        }
        let mut df: [BTreeMap<Vec<String>, usize>; 4] = Default::default();
        for r in references {
            for (n, table) in df.iter_mut().enumerate() {
                for g in ngram_counts(r, n + 1).into_keys() {
                    *table.entry(g.to_vec()).or_default() += 1;
                }
            }
        }
        Ok(CiderCorpus {
            df,
            n_refs: references.len(),
        })
    }

    /// `ln(N / df)`, with unseen n-grams treated as occurring once.
    fn idf(&self, n: usize, g: Ngram<'_>) -> f64 {
        let df = self.df[n - 1].get(g).copied().unwrap_or(0).max(1);
        (self.n_refs as f64 / df as f64).ln()
    }

    fn vector<'a>(&self, tokens: &'a [String], n: usize) -> BTreeMap<Ngram<'a>, f64> {
        let counts = ngram_counts(tokens, n);
        let total: usize = counts.values().sum();
        counts
            .into_iter()
            .map(|(g, c)| (g, c as f64 / total as f64 * self.idf(n, g)))
            .collect()
    }

    /// Ten times the mean tf-idf cosine over orders 1..=4. Orders where
    /// neither side has an n-gram are left out of the mean; a zero vector
    /// on one side scores 0.
    pub fn score(&self, candidate: &[String], reference: &[String]) -> f64 {
        let mut sum = 0.0;
        let mut orders = 0;
        for n in 1..=4 {
            if candidate.len() < n && reference.len() < n {
                continue;
            }
            orders += 1;
            let c = self.vector(candidate, n);
            let r = self.vector(reference, n);
            let dot: f64 = c.iter().map(|(g, v)| v * r.get(g).copied().unwrap_or(0.0)).sum();
            let nc = c.values().map(|v| v * v).sum::<f64>().sqrt();
            let nr = r.values().map(|v| v * v).sum::<f64>().sqrt();
            if nc > 0.0 && nr > 0.0 {
                sum += dot / (nc * nr);
            }
        }
        if orders == 0 {
            0.0
        } else {
            10.0 * sum / orders as f64
        }
    }
}

/// Mean CIDEr of aligned candidates against single references, with
/// document frequencies taken from `corpus`.
pub fn cider(candidates: &[Vec<String>], references: &[Vec<String>], corpus: &[Vec<String>]) -> Result<f64> {
    let c = CiderCorpus::new(corpus)?;
    if candidates.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = candidates
        .iter()
        .zip(references)
        .map(|(cand, r)| c.score(cand, r))
        .sum();
    Ok(total / candidates.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn bleu_identity_and_clipping() {
        assert_eq!(bleu_n(&t("a b c"), &[t("a b c")], 1), 1.0);
        assert_eq!(clipped_matches(&t("the the the the"), &[t("the cat")], 1), (1, 4));
        assert_eq!(clipped_matches(&t("the the the the"), &[t("the the cat")], 1), (2, 4));
    }

    #[test]
    fn bleu_brevity_penalty() {
        let b = bleu_n(&t("a b"), &[t("a b c d")], 1);
        assert!((b - (1.0f64 - 2.0).exp()).abs() < 1e-12);
        assert_eq!(bleu_n(&[], &[t("a")], 1), 0.0);
    }

    #[test]
    fn rouge_cases() {
        assert_eq!(rouge_l(&t("a b c"), &t("a b c")), 1.0);
        assert_eq!(rouge_l(&t("a b"), &t("c d")), 0.0);
        assert_eq!(rouge_l(&[], &t("c d")), 0.0);
        let f = rouge_l(&t("a b c d"), &t("a c d"));
        let expected = 2.44 * 0.75 / (1.0 + 1.44 * 0.75);
        assert!((f - expected).abs() < 1e-12);
        assert!((f - 0.8798).abs() < 1e-4);
    }

    #[test]
    fn cider_identity_and_disjoint() {
        let refs = vec![t("a man rides a horse"), t("two dogs play in snow"), t("a red car parked")];
        let c = CiderCorpus::new(&refs).unwrap();
        assert!((c.score(&refs[1], &refs[1]) - 10.0).abs() < 1e-9);
        assert_eq!(c.score(&t("zebra yak"), &refs[0]), 0.0);
        assert!(CiderCorpus::new(&refs[..1]).is_err());
    }

    #[test]
    fn cider_hand_computed() {
        // df(x)=2, df(y)=1, df(z)=1 with N=3; only unigrams and bigrams exist.
        let refs = vec![t("x y"), t("x z"), t("w")];
        let c = CiderCorpus::new(&refs).unwrap();
        let ln = |v: f64| v.ln();
        let (ix, iy, iz) = (ln(1.5), ln(3.0), ln(3.0));
        // candidate "x z" vs reference "x y"
        let uni = (0.5 * ix * 0.5 * ix) / ((0.5 * ix).powi(2) + (0.5 * iz).powi(2)).sqrt()
            / ((0.5 * ix).powi(2) + (0.5 * iy).powi(2)).sqrt();
        let expected = 10.0 * (uni + 0.0) / 2.0;
        assert!((c.score(&t("x z"), &t("x y")) - expected).abs() < 1e-12);
    }
}
