//! Sentence-level article encodings.
//!
//! Every article becomes a fixed `M × D_w` matrix (`M` = 55 by default), one
//! row per sentence:
//!
//! - [`EncoderMethod::Avg`]: mean of the word vectors.
//! - [`EncoderMethod::Wavg`]: mean of word vectors weighted by the smoothed
//!   inverse frequency `a / (a + tf(w))`.
//! - [`EncoderMethod::Tbb`]: `Wavg` with the corpus' first principal
//!   component projected out of every row.
//!
//! Articles longer than `M` sentences keep their first `M - 1` sentences and
//! store the mean encoding of all remaining sentences in the last row.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::embeddings::{EmbeddingTable, FrequencyTable};
use crate::{Error, Result};

/// SIF smoothing constant used when none is configured.
pub const DEFAULT_SIF_A: f64 = 1e-3;

/// Number of sentence rows in an article encoding.
pub const MAX_SENTENCES: usize = 55;

const POWER_ITERATION_TOL: f64 = 1e-10;
const POWER_ITERATION_MAX: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderMethod {
    Avg,
    Wavg,
    Tbb,
}

impl FromStr for EncoderMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "avg" => Ok(EncoderMethod::Avg),
            "wavg" => Ok(EncoderMethod::Wavg),
            "tbb" => Ok(EncoderMethod::Tbb),
            _ => Err(Error::Usage(format!("unknown encoder method `{s}`"))),
        }
    }
}

impl fmt::Display for EncoderMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncoderMethod::Avg => "avg",
            EncoderMethod::Wavg => "wavg",
            EncoderMethod::Tbb => "tbb",
        })
    }
}

/// Encoder settings shared by every article of a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub method: EncoderMethod,
    pub sif_a: f64,
    pub max_sentences: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            method: EncoderMethod::Avg,
            sif_a: DEFAULT_SIF_A,
            max_sentences: MAX_SENTENCES,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sif_a > 0.0) {
            return Err(Error::Usage(format!("sif_a must be positive, got {}", self.sif_a)));
        }
        if self.max_sentences == 0 {
            return Err(Error::Usage("max_sentences must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArticleEncoding {
    pub matrix: Array2<f64>,
    pub n_real_sentences: usize,
}

impl ArticleEncoding {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Unit-norm first right singular vector of a sentence matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalComponent {
    pub dim: usize,
    pub values: Vec<f64>,
    pub fitted_on: String,
}

impl PrincipalComponent {
    pub fn vector(&self) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.values[..])
    }
}

/// Encodes one tokenized sentence. `Tbb` is treated as `Wavg` here; the
/// component removal happens in [`encode_article`].
pub fn encode_sentence<S: AsRef<str>>(
    sentence: &[S],
    method: EncoderMethod,
    sif_a: f64,
    table: &EmbeddingTable,
    freq: &FrequencyTable,
) -> Array1<f64> {
    let mut acc = Array1::zeros(table.dim());
    if sentence.is_empty() {
        return acc;
    }
    for tok in sentence {
        let tok = tok.as_ref();
        if let Some(v) = table.get(tok) {
            let w = match method {
                EncoderMethod::Avg => 1.0,
                EncoderMethod::Wavg | EncoderMethod::Tbb => freq.sif_weight(tok, sif_a),
            };
            acc.scaled_add(w, &ArrayView1::from(v));
        }
    }
    acc / sentence.len() as f64
}

/// Fits the dominant right singular vector of `rows` by power iteration on
/// the Gram matrix `XᵀX`. The sign makes the largest-magnitude entry positive.
pub fn fit_principal_component(rows: &Array2<f64>, fitted_on: &str) -> Result<PrincipalComponent> {
    let nonzero: Vec<usize> = rows
        .outer_iter()
        .enumerate()
        .filter(|(_, r)| r.iter().any(|&v| v != 0.0))
        .map(|(i, _)| i)
        .collect();
    if nonzero.is_empty() {
        return Err(Error::Degenerate("all sentence encodings are zero".into()));
    }
    if nonzero.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 nonzero sentence encodings, found {}",
            nonzero.len()
        )));
    }
    let dim = rows.ncols();
    let gram = rows.t().dot(rows);

    // Start from the longest row, nudged so it is unlikely to be orthogonal
    // to the dominant direction.
    let longest = nonzero
        .iter()
        .copied()
        .max_by(|&a, &b| {
            let na = rows.row(a).dot(&rows.row(a));
            let nb = rows.row(b).dot(&rows.row(b));
            na.total_cmp(&nb).then(b.cmp(&a))
        })
        .expect("nonzero rows exist");
    let mut v = rows.row(longest).to_owned();
    let scale = v.dot(&v).sqrt();
    for (j, x) in v.iter_mut().enumerate() {
        *x += 1e-3 * scale * (j + 1) as f64 / dim as f64;
    }
    v /= v.dot(&v).sqrt();

    for _ in 0..POWER_ITERATION_MAX {
        let mut next = gram.dot(&v);
        let norm = next.dot(&next).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Degenerate("power iteration collapsed".into()));
        }
        next /= norm;
        let diff = (&next - &v).mapv(|d| d * d).sum().sqrt();
        v = next;
        if diff < POWER_ITERATION_TOL {
            break;
        }
    }

    let pivot = v
        .iter()
        .copied()
        .reduce(|best, x| if x.abs() > best.abs() { x } else { best })
        .unwrap_or(0.0);
    if pivot < 0.0 {
        v.mapv_inplace(|x| -x);
    }
    Ok(PrincipalComponent {
        dim,
        values: v.to_vec(),
        fitted_on: fitted_on.to_string(),
    })
}

/// `v - (u·v) u`.
pub fn remove_component(v: ArrayView1<'_, f64>, pc: &PrincipalComponent) -> Array1<f64> {
    let u = pc.vector();
    let proj = u.dot(&v);
    &v - &(&u * proj)
}

/// Stacks the `Wavg` encodings of every sentence, the input for fitting the
/// principal component.
pub fn sentence_matrix<'a, S: AsRef<str> + 'a>(
    sentences: impl IntoIterator<Item = &'a [S]>,
    sif_a: f64,
    table: &EmbeddingTable,
    freq: &FrequencyTable,
) -> Array2<f64> {
    let rows: Vec<Array1<f64>> = sentences
        .into_iter()
        .map(|s| encode_sentence(s, EncoderMethod::Wavg, sif_a, table, freq))
        .collect();
    let mut m = Array2::zeros((rows.len(), table.dim()));
    for (mut dst, src) in m.outer_iter_mut().zip(&rows) {
        dst.assign(src);
    }
    m
}

/// Encodes an article's sentences into the fixed-size matrix.
pub fn encode_article<S: AsRef<str>>(
    sentences: &[Vec<S>],
    config: &EncoderConfig,
    table: &EmbeddingTable,
    freq: &FrequencyTable,
    pc: Option<&PrincipalComponent>,
) -> Result<ArticleEncoding> {
    config.validate()?;
    let rows = config.max_sentences;
    let dim = table.dim();
    let pc = match (config.method, pc) {
        (EncoderMethod::Tbb, None) => {
            return Err(Error::Usage("TBB encoding needs a fitted principal component".into()))
        }
        (EncoderMethod::Tbb, Some(pc)) if pc.dim != dim => {
            return Err(Error::Shape(format!(
                "principal component has dimension {}, embeddings {dim}",
                pc.dim
            )))
        }
        (EncoderMethod::Tbb, Some(pc)) => Some(pc),
        _ => None,
    };

    let encode = |s: &[S]| encode_sentence(s, config.method, config.sif_a, table, freq);
    let mut matrix = Array2::zeros((rows, dim));
    let n = sentences.len();
    if n <= rows {
        for (i, s) in sentences.iter().enumerate() {
            matrix.row_mut(i).assign(&encode(s));
        }
    } else {
        for (i, s) in sentences[..rows - 1].iter().enumerate() {
            matrix.row_mut(i).assign(&encode(s));
        }
        let mut tail = Array1::zeros(dim);
        for s in &sentences[rows - 1..] {
            tail += &encode(s);
        }
        tail /= (n - rows + 1) as f64;
        matrix.row_mut(rows - 1).assign(&tail);
    }

    if let Some(pc) = pc {
        for mut row in matrix.axis_iter_mut(Axis(0)) {
            if row.iter().any(|&v| v != 0.0) {
                let cleaned = remove_component(row.view(), pc);
                row.assign(&cleaned);
            }
        }
    }
    Ok(ArticleEncoding {
        matrix,
        n_real_sentences: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn table() -> EmbeddingTable {
        EmbeddingTable::parse_text("a 1 0 0\nb 0 1 0\nthe 0 0 1\n").unwrap()
    }

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn average_of_two_vectors() {
        let f = FrequencyTable::default();
        let e = encode_sentence(&toks(&["a", "b"]), EncoderMethod::Avg, 1e-3, &table(), &f);
        assert_eq!(e, array![0.5, 0.5, 0.0]);
    }

    #[test]
    fn missing_tokens_count_in_length() {
        let f = FrequencyTable::default();
        let e = encode_sentence(&toks(&["a", "zzz"]), EncoderMethod::Avg, 1e-3, &table(), &f);
        assert_eq!(e, array![0.5, 0.0, 0.0]);
        let empty: Vec<String> = vec![];
        assert_eq!(
            encode_sentence(&empty, EncoderMethod::Avg, 1e-3, &table(), &f),
            array![0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn sif_weight_of_frequent_word() {
        let arts = [toks(&["the", "a"])];
        let f = FrequencyTable::build(arts.iter().map(Vec::as_slice));
        assert_eq!(f.tf("the"), 0.5);
        let e = encode_sentence(&toks(&["the"]), EncoderMethod::Wavg, 1e-3, &table(), &f);
        assert!((e[2] - 0.0019960079840319).abs() < 1e-12);
    }

    #[test]
    fn wavg_tends_to_avg() {
        let arts = [toks(&["the", "a", "a", "b"])];
        let f = FrequencyTable::build(arts.iter().map(Vec::as_slice));
        let s = toks(&["the", "a", "b"]);
        let avg = encode_sentence(&s, EncoderMethod::Avg, 1e9, &table(), &f);
        let wavg = encode_sentence(&s, EncoderMethod::Wavg, 1e9, &table(), &f);
        let diff = (&avg - &wavg).mapv(f64::abs).fold(0.0f64, |m, &x| m.max(x));
        assert!(diff < 1e-9);
    }

    #[test]
    fn component_of_rank_one_rows() {
        let rows = array![[1.0, 2.0, -2.0], [1.0, 2.0, -2.0], [1.0, 2.0, -2.0]];
        let pc = fit_principal_component(&rows, "t").unwrap();
        // largest magnitude entry (2 vs -2: first wins) is positive
        let expect = [1.0 / 3.0, 2.0 / 3.0, -2.0 / 3.0];
        for (a, b) in pc.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{:?}", pc.values);
        }
    }

    #[test]
    fn component_axis_aligned() {
        let pc = fit_principal_component(&array![[2.0, 0.0], [-2.0, 0.0]], "t").unwrap();
        assert!((pc.values[0] - 1.0).abs() < 1e-12);
        assert!(pc.values[1].abs() < 1e-12);
    }

    #[test]
    fn component_errors() {
        assert!(matches!(
            fit_principal_component(&Array2::zeros((4, 3)), "t"),
            Err(Error::Degenerate(_))
        ));
        assert!(fit_principal_component(&array![[1.0, 0.0], [0.0, 0.0]], "t").is_err());
    }

    #[test]
    fn removing_components() {
        let pc = PrincipalComponent {
            dim: 2,
            values: vec![1.0, 0.0],
            fitted_on: "t".into(),
        };
        assert_eq!(remove_component(array![1.0, 1.0].view(), &pc), array![0.0, 1.0]);
        assert_eq!(remove_component(array![1.0, 0.0].view(), &pc), array![0.0, 0.0]);
        assert_eq!(remove_component(array![0.0, 3.0].view(), &pc), array![0.0, 3.0]);
    }

    #[test]
    fn padding_and_overflow() {
        let f = FrequencyTable::default();
        let cfg = EncoderConfig::default();
        let three = vec![toks(&["a"]), toks(&["b"]), toks(&["the"])];
        let enc = encode_article(&three, &cfg, &table(), &f, None).unwrap();
        assert_eq!(enc.matrix.dim(), (55, 3));
        assert_eq!(enc.n_real_sentences, 3);
        assert_eq!(enc.matrix.row(2), array![0.0, 0.0, 1.0]);
        assert!(enc.matrix.rows().into_iter().skip(3).all(|r| r.iter().all(|&v| v == 0.0)));

        // 60 sentences: the last row averages sentences 55..=60 (1-based)
        let mut sixty: Vec<Vec<String>> = (0..54).map(|_| toks(&["a"])).collect();
        sixty.extend([toks(&["b"]), toks(&["b"]), toks(&["the"]), toks(&["b"]), toks(&["b"]), toks(&["b"])]);
        let enc = encode_article(&sixty, &cfg, &table(), &f, None).unwrap();
        assert_eq!(enc.n_real_sentences, 60);
        let last = enc.matrix.row(54);
        assert!((last[0]).abs() < 1e-15);
        assert!((last[1] - 5.0 / 6.0).abs() < 1e-15);
        assert!((last[2] - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(enc.matrix.row(53), array![1.0, 0.0, 0.0]);

        let none: Vec<Vec<String>> = vec![];
        let enc = encode_article(&none, &cfg, &table(), &f, None).unwrap();
        assert_eq!(enc.n_real_sentences, 0);
        assert!(enc.matrix.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tbb_removes_shared_direction() {
        let f = FrequencyTable::default();
        let cfg = EncoderConfig {
            method: EncoderMethod::Tbb,
            ..Default::default()
        };
        let sentences = vec![toks(&["a", "b"]), toks(&["a", "b"]), toks(&["b", "a"])];
        let rows = sentence_matrix(sentences.iter().map(Vec::as_slice), cfg.sif_a, &table(), &f);
        let pc = fit_principal_component(&rows, "t").unwrap();
        let enc = encode_article(&sentences, &cfg, &table(), &f, Some(&pc)).unwrap();
        assert!(enc.matrix.iter().all(|v| v.abs() < 1e-12));
        assert!(encode_article(&sentences, &cfg, &table(), &f, None).is_err());
    }
}
