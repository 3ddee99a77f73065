use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Every size the decoder depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelDims {
    pub vocab: usize,
    /// Width of the learned input word embedding.
    pub embed: usize,
    /// Feature width of one image region.
    pub image_dim: usize,
    pub regions: usize,
    /// Width of one article sentence encoding (the word-vector dimension).
    pub article_dim: usize,
    /// Sentence rows in an article encoding.
    pub slots: usize,
    pub hidden: usize,
    pub image_att: usize,
    pub article_att: usize,
}

impl ModelDims {
    pub fn lstm_input(&self) -> usize {
        self.embed + self.image_dim + self.article_dim
    }

    pub(crate) fn as_u32s(&self) -> [u32; 9] {
        [
            self.vocab,
            self.embed,
            self.image_dim,
            self.regions,
            self.article_dim,
            self.slots,
            self.hidden,
            self.image_att,
            self.article_att,
        ]
        .map(|d| d as u32)
    }

    pub(crate) fn from_u32s(d: [u32; 9]) -> Self {
        let d = d.map(|x| x as usize);
        ModelDims {
            vocab: d[0],
            embed: d[1],
            image_dim: d[2],
            regions: d[3],
            article_dim: d[4],
            slots: d[5],
            hidden: d[6],
            image_att: d[7],
            article_att: d[8],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_u32s().contains(&0) {
            return Err(Error::Shape(format!("model dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// All decoder weights. Gradients use the same type.
///
/// The LSTM stacks its four gates as `[input; forget; cell; output]` blocks
/// of `hidden` rows. Both attentions are additive:
/// `score_i = v · tanh(F x_i + H h + b)` for feature rows `x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    /// `vocab × embed`
    pub word_embedding: Array2<f64>,
    /// `4·hidden × (embed + image_dim + article_dim)`
    pub lstm_input: Array2<f64>,
    /// `4·hidden × hidden`
    pub lstm_recurrent: Array2<f64>,
    pub lstm_bias: Array1<f64>,
    /// `image_att × image_dim`
    pub img_att_feature: Array2<f64>,
    /// `image_att × hidden`
    pub img_att_hidden: Array2<f64>,
    pub img_att_bias: Array1<f64>,
    pub img_att_score: Array1<f64>,
    /// `article_att × article_dim`
    pub art_att_feature: Array2<f64>,
    /// `article_att × hidden`
    pub art_att_hidden: Array2<f64>,
    pub art_att_bias: Array1<f64>,
    pub art_att_score: Array1<f64>,
    /// `vocab × hidden`
    pub output: Array2<f64>,
    pub output_bias: Array1<f64>,
}

pub const TENSOR_NAMES: [&str; 14] = [
    "word_embedding",
    "lstm_input",
    "lstm_recurrent",
    "lstm_bias",
    "img_att_feature",
    "img_att_hidden",
    "img_att_bias",
    "img_att_score",
    "art_att_feature",
    "art_att_hidden",
    "art_att_bias",
    "art_att_score",
    "output",
    "output_bias",
];

impl ModelParams {
    pub fn zeros(dims: ModelDims) -> Self {
        let d = dims;
        let g = 4 * d.hidden;
        ModelParams {
            dims,
            word_embedding: Array2::zeros((d.vocab, d.embed)),
            lstm_input: Array2::zeros((g, d.lstm_input())),
            lstm_recurrent: Array2::zeros((g, d.hidden)),
            lstm_bias: Array1::zeros(g),
            img_att_feature: Array2::zeros((d.image_att, d.image_dim)),
            img_att_hidden: Array2::zeros((d.image_att, d.hidden)),
            img_att_bias: Array1::zeros(d.image_att),
            img_att_score: Array1::zeros(d.image_att),
            art_att_feature: Array2::zeros((d.article_att, d.article_dim)),
            art_att_hidden: Array2::zeros((d.article_att, d.hidden)),
            art_att_bias: Array1::zeros(d.article_att),
            art_att_score: Array1::zeros(d.article_att),
            output: Array2::zeros((d.vocab, d.hidden)),
            output_bias: Array1::zeros(d.vocab),
        }
    }

    /// Uniform `[-scale, scale]` initialization with the forget-gate bias
    /// set to 1.
    pub fn init_uniform(dims: ModelDims, scale: f64, seed: u64) -> Self {
        let mut p = Self::zeros(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (_, t) in p.tensors_mut() {
            for x in t.iter_mut() {
                *x = rng.gen_range(-scale..=scale);
            }
        }
        let h = dims.hidden;
        p.lstm_bias
            .slice_mut(ndarray::s![h..2 * h])
            .fill(1.0);
        p
    }

    pub fn tensors(&self) -> [(&'static str, &[f64]); 14] {
        let s = slice_of;
        [
            (TENSOR_NAMES[0], s(&self.word_embedding)),
            (TENSOR_NAMES[1], s(&self.lstm_input)),
            (TENSOR_NAMES[2], s(&self.lstm_recurrent)),
            (TENSOR_NAMES[3], slice_of1(&self.lstm_bias)),
            (TENSOR_NAMES[4], s(&self.img_att_feature)),
            (TENSOR_NAMES[5], s(&self.img_att_hidden)),
            (TENSOR_NAMES[6], slice_of1(&self.img_att_bias)),
            (TENSOR_NAMES[7], slice_of1(&self.img_att_score)),
            (TENSOR_NAMES[8], s(&self.art_att_feature)),
            (TENSOR_NAMES[9], s(&self.art_att_hidden)),
            (TENSOR_NAMES[10], slice_of1(&self.art_att_bias)),
            (TENSOR_NAMES[11], slice_of1(&self.art_att_score)),
            (TENSOR_NAMES[12], s(&self.output)),
            (TENSOR_NAMES[13], slice_of1(&self.output_bias)),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut [f64]); 14] {
        [
            (TENSOR_NAMES[0], slice_mut(&mut self.word_embedding)),
            (TENSOR_NAMES[1], slice_mut(&mut self.lstm_input)),
            (TENSOR_NAMES[2], slice_mut(&mut self.lstm_recurrent)),
            (TENSOR_NAMES[3], slice_mut1(&mut self.lstm_bias)),
            (TENSOR_NAMES[4], slice_mut(&mut self.img_att_feature)),
            (TENSOR_NAMES[5], slice_mut(&mut self.img_att_hidden)),
            (TENSOR_NAMES[6], slice_mut1(&mut self.img_att_bias)),
            (TENSOR_NAMES[7], slice_mut1(&mut self.img_att_score)),
            (TENSOR_NAMES[8], slice_mut(&mut self.art_att_feature)),
            (TENSOR_NAMES[9], slice_mut(&mut self.art_att_hidden)),
            (TENSOR_NAMES[10], slice_mut1(&mut self.art_att_bias)),
            (TENSOR_NAMES[11], slice_mut1(&mut self.art_att_score)),
            (TENSOR_NAMES[12], slice_mut(&mut self.output)),
            (TENSOR_NAMES[13], slice_mut1(&mut self.output_bias)),
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn scaled_add(&mut self, scale: f64, other: &ModelParams) {
        for ((_, dst), (_, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, t) in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }
}

fn slice_of(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("parameters are contiguous")
}

fn slice_of1(a: &Array1<f64>) -> &[f64] {
    a.as_slice().expect("parameters are contiguous")
}

fn slice_mut(a: &mut Array2<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("parameters are contiguous")
}

fn slice_mut1(a: &mut Array1<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("parameters are contiguous")
}
