//! Greedy decoding with attention traces.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::model::{argmax, step};
use super::params::ModelParams;
use crate::embeddings::Vocabulary;
use crate::Result;

/// Image weights `alpha` and article-slot weights `beta` for every emitted
/// token, in emission order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttentionTrace {
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
}

impl AttentionTrace {
    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }
}

/// Greedy argmax decoding from `<start>` until `<end>` or `max_len` tokens.
/// The returned ids exclude both sentinels.
pub fn generate(
    params: &ModelParams,
    grid: &Array2<f64>,
    article: &Array2<f64>,
    max_len: usize,
) -> Result<(Vec<usize>, AttentionTrace)> {
    let prep = params.prepare(grid, article)?;
    let mut h = Array1::zeros(params.dims.hidden);
    let mut c = Array1::zeros(params.dims.hidden);
    let mut token = Vocabulary::START_ID;
    let mut out = Vec::new();
    let mut trace = AttentionTrace::default();
    while out.len() < max_len {
        let st = step(params, &prep, &h, &c, token, None);
        token = argmax(st.logits.view());
        if token == Vocabulary::END_ID {
            break;
        }
        out.push(token);
        trace.alpha.push(st.img.weights.to_vec());
        trace.beta.push(st.art.weights.to_vec());
        h = st.h;
        c = st.c;
    }
    Ok((out, trace))
}
