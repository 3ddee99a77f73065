//! Forward pass, reverse-mode gradients and single decoding steps.

use ndarray::linalg::general_mat_mul;
use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::ModelParams;
use crate::{Error, Result};

/// Recurrent state carried between decoding steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    pub h: Array1<f64>,
    pub c: Array1<f64>,
    pub t: usize,
}

impl DecoderState {
    pub fn zeros(hidden: usize) -> Self {
        DecoderState {
            h: Array1::zeros(hidden),
            c: Array1::zeros(hidden),
            t: 0,
        }
    }
}

/// Inverted dropout on the LSTM output: kept units are scaled by
/// `1 / (1 - p)` so inference needs no rescaling.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub p: f64,
    rng: ChaCha8Rng,
}

impl Dropout {
    pub fn new(p: f64, seed: u64) -> Self {
        Dropout {
            p,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn mask(&mut self, len: usize) -> Array1<f64> {
        let keep = 1.0 / (1.0 - self.p);
        Array1::from_shape_fn(len, |_| {
            if self.rng.gen::<f64>() < self.p {
                0.0
            } else {
                keep
            }
        })
    }
}

pub(crate) fn softmax(x: ArrayView1<'_, f64>) -> Array1<f64> {
    let max = x.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let mut e = x.mapv(|v| (v - max).exp());
    let sum = e.sum();
    e /= sum;
    e
}

fn log_softmax_at(x: ArrayView1<'_, f64>, i: usize) -> f64 {
    let max = x.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let lse = x.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    x[i] - max - lse
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn add_outer(target: &mut Array2<f64>, col: ArrayView1<'_, f64>, row: ArrayView1<'_, f64>) {
    general_mat_mul(
        1.0,
        &col.insert_axis(Axis(1)),
        &row.insert_axis(Axis(0)),
        1.0,
        target,
    );
}

/// Result of one additive attention over feature rows.
#[derive(Debug, Clone)]
pub(crate) struct Attended {
    /// `tanh(F x_i + H h + b)`, one row per feature row.
    pub e: Array2<f64>,
    pub weights: Array1<f64>,
    pub context: Array1<f64>,
}

struct AttentionWeights<'p> {
    hidden: &'p Array2<f64>,
    bias: &'p Array1<f64>,
    score: &'p Array1<f64>,
}

fn attend(
    features: ArrayView2<'_, f64>,
    projected: &Array2<f64>,
    w: &AttentionWeights<'_>,
    h_prev: &Array1<f64>,
) -> Attended {
    let q = w.hidden.dot(h_prev) + w.bias;
    let mut e = projected + &q;
    e.mapv_inplace(f64::tanh);
    let scores = e.dot(w.score);
    let weights = softmax(scores.view());
    let context = features.t().dot(&weights);
    Attended {
        e,
        weights,
        context,
    }
}

struct AttentionGrads<'g> {
    projected: &'g mut Array2<f64>,
    hidden: &'g mut Array2<f64>,
    bias: &'g mut Array1<f64>,
    score: &'g mut Array1<f64>,
}

fn attend_backward(
    features: ArrayView2<'_, f64>,
    att: &Attended,
    d_context: ArrayView1<'_, f64>,
    w: &AttentionWeights<'_>,
    h_prev: &Array1<f64>,
    grads: AttentionGrads<'_>,
    dh_prev: &mut Array1<f64>,
) {
    let d_weights = features.dot(&d_context);
    let mean = att.weights.dot(&d_weights);
    let d_scores = &att.weights * &(d_weights - mean);
    *grads.score += &att.e.t().dot(&d_scores);
    let mut d_pre = Array2::zeros(att.e.raw_dim());
    add_outer(&mut d_pre, d_scores.view(), w.score.view());
    d_pre.zip_mut_with(&att.e, |d, &e| *d *= 1.0 - e * e);
    *grads.projected += &d_pre;
    let dq = d_pre.sum_axis(Axis(0));
    add_outer(grads.hidden, dq.view(), h_prev.view());
    *grads.bias += &dq;
    *dh_prev += &w.hidden.t().dot(&dq);
}

/// Per-sample inputs with their attention projections precomputed.
pub(crate) struct Prepared<'a> {
    pub grid: ArrayView2<'a, f64>,
    pub article: ArrayView2<'a, f64>,
    img_proj: Array2<f64>,
    art_proj: Array2<f64>,
}

impl ModelParams {
    fn img_weights(&self) -> AttentionWeights<'_> {
        AttentionWeights {
            hidden: &self.img_att_hidden,
            bias: &self.img_att_bias,
            score: &self.img_att_score,
        }
    }

    fn art_weights(&self) -> AttentionWeights<'_> {
        AttentionWeights {
            hidden: &self.art_att_hidden,
            bias: &self.art_att_bias,
            score: &self.art_att_score,
        }
    }

    pub(crate) fn prepare<'a>(
        &self,
        grid: &'a Array2<f64>,
        article: &'a Array2<f64>,
    ) -> Result<Prepared<'a>> {
        let d = &self.dims;
        if grid.dim() != (d.regions, d.image_dim) {
            return Err(Error::Shape(format!(
                "image grid is {:?}, model expects ({}, {})",
                grid.dim(),
                d.regions,
                d.image_dim
            )));
        }
        if article.dim() != (d.slots, d.article_dim) {
            return Err(Error::Shape(format!(
                "article encoding is {:?}, model expects ({}, {})",
                article.dim(),
                d.slots,
                d.article_dim
            )));
        }
        Ok(Prepared {
            grid: grid.view(),
            article: article.view(),
            img_proj: grid.dot(&self.img_att_feature.t()),
            art_proj: article.dot(&self.art_att_feature.t()),
        })
    }
}

/// Everything one timestep needs for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    pub token: usize,
    pub h_prev: Array1<f64>,
    pub c_prev: Array1<f64>,
    pub img: Attended,
    pub art: Attended,
    pub z: Array1<f64>,
    /// Post-activation gates `[i; f; g; o]`.
    pub gates: Array1<f64>,
    pub tanh_c: Array1<f64>,
    pub c: Array1<f64>,
    pub h: Array1<f64>,
    pub mask: Option<Array1<f64>>,
    pub logits: Array1<f64>,
}

pub(crate) fn step(
    p: &ModelParams,
    prep: &Prepared<'_>,
    h_prev: &Array1<f64>,
    c_prev: &Array1<f64>,
    token: usize,
    dropout: Option<&mut Dropout>,
) -> StepCache {
    let hsz = p.dims.hidden;
    let x = p.word_embedding.row(token);
    let img = attend(prep.grid, &prep.img_proj, &p.img_weights(), h_prev);
    let art = attend(prep.article, &prep.art_proj, &p.art_weights(), h_prev);
    let z = concatenate![Axis(0), x, img.context, art.context];

    let mut gates = p.lstm_input.dot(&z) + p.lstm_recurrent.dot(h_prev) + &p.lstm_bias;
    gates
        .slice_mut(s![..2 * hsz])
        .mapv_inplace(sigmoid);
    gates
        .slice_mut(s![2 * hsz..3 * hsz])
        .mapv_inplace(f64::tanh);
    gates.slice_mut(s![3 * hsz..]).mapv_inplace(sigmoid);

    let (i, f, g, o) = (
        gates.slice(s![..hsz]),
        gates.slice(s![hsz..2 * hsz]),
        gates.slice(s![2 * hsz..3 * hsz]),
        gates.slice(s![3 * hsz..]),
    );
    let c = &f * c_prev + &i * &g;
    let tanh_c = c.mapv(f64::tanh);
    let h = &o * &tanh_c;

    let mask = dropout.map(|d| d.mask(hsz));
    let logits = match &mask {
        Some(m) => p.output.dot(&(&h * m)),
        None => p.output.dot(&h),
    } + &p.output_bias;

    StepCache {
        token,
        h_prev: h_prev.clone(),
        c_prev: c_prev.clone(),
        img,
        art,
        z,
        gates,
        tanh_c,
        c,
        h,
        mask,
        logits,
    }
}

/// Additive attention of the previous hidden state over image regions.
/// Returns the attended feature and the region weights.
pub fn image_attention(
    h_prev: &Array1<f64>,
    grid: &Array2<f64>,
    params: &ModelParams,
) -> (Array1<f64>, Array1<f64>) {
    let proj = grid.dot(&params.img_att_feature.t());
    let a = attend(grid.view(), &proj, &params.img_weights(), h_prev);
    (a.context, a.weights)
}

/// Attention of the previous hidden state over article sentence rows.
/// Returns the attended sentence feature and the slot weights.
pub fn article_attention(
    h_prev: &Array1<f64>,
    article: &Array2<f64>,
    params: &ModelParams,
) -> (Array1<f64>, Array1<f64>) {
    let proj = article.dot(&params.art_att_feature.t());
    let a = attend(article.view(), &proj, &params.art_weights(), h_prev);
    (a.context, a.weights)
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub logits: Array1<f64>,
    pub state: DecoderState,
    pub alpha: Array1<f64>,
    pub beta: Array1<f64>,
}

/// One decoder step from `state` given the previous token.
pub fn decode_step(
    params: &ModelParams,
    state: &DecoderState,
    prev_token: usize,
    grid: &Array2<f64>,
    article: &Array2<f64>,
    dropout: Option<&mut Dropout>,
) -> Result<StepOutput> {
    if prev_token >= params.dims.vocab {
        return Err(Error::Data(format!(
            "token id {prev_token} outside vocabulary of {}",
            params.dims.vocab
        )));
    }
    let prep = params.prepare(grid, article)?;
    let st = step(params, &prep, &state.h, &state.c, prev_token, dropout);
    Ok(StepOutput {
        logits: st.logits,
        state: DecoderState {
            h: st.h,
            c: st.c,
            t: state.t + 1,
        },
        alpha: st.img.weights,
        beta: st.art.weights,
    })
}

/// Cached activations of a teacher-forced pass.
pub struct ForwardCache<'a> {
    pub(crate) prep: Prepared<'a>,
    pub(crate) tokens: Vec<usize>,
    pub(crate) steps: Vec<StepCache>,
}

impl ForwardCache<'_> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Image attention weights at every step.
    pub fn alphas(&self) -> impl Iterator<Item = &Array1<f64>> {
        self.steps.iter().map(|s| &s.img.weights)
    }

    /// Article attention weights at every step.
    pub fn betas(&self) -> impl Iterator<Item = &Array1<f64>> {
        self.steps.iter().map(|s| &s.art.weights)
    }

    /// Count of steps whose argmax prediction equals the gold next token.
    pub fn correct_predictions(&self) -> usize {
        self.steps
            .iter()
            .zip(&self.tokens[1..])
            .filter(|(st, &gold)| argmax(st.logits.view()) == gold)
            .count()
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(x: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > x[best] {
            best = i;
        }
    }
    best
}

/// Teacher-forced cross-entropy of `tokens` (`<start> ... <end>`), averaged
/// over the predicted positions. The recurrent state starts at zero.
pub fn forward_loss<'a>(
    params: &ModelParams,
    tokens: &[usize],
    grid: &'a Array2<f64>,
    article: &'a Array2<f64>,
    mut dropout: Option<&mut Dropout>,
) -> Result<(f64, ForwardCache<'a>)> {
    if tokens.len() < 2 {
        return Err(Error::Data(format!(
            "a training sequence needs at least 2 tokens, got {}",
            tokens.len()
        )));
    }
    if let Some(&bad) = tokens.iter().find(|&&t| t >= params.dims.vocab) {
        return Err(Error::Data(format!(
            "token id {bad} outside vocabulary of {}",
            params.dims.vocab
        )));
    }
    let prep = params.prepare(grid, article)?;
    let hidden = params.dims.hidden;
    let mut h = Array1::zeros(hidden);
    let mut c = Array1::zeros(hidden);
    let mut steps = Vec::with_capacity(tokens.len() - 1);
    let mut total = 0.0;
    for t in 0..tokens.len() - 1 {
        let st = step(params, &prep, &h, &c, tokens[t], dropout.as_deref_mut());
        total -= log_softmax_at(st.logits.view(), tokens[t + 1]);
        h = st.h.clone();
        c = st.c.clone();
        steps.push(st);
    }
    let loss = total / steps.len() as f64;
    Ok((
        loss,
        ForwardCache {
            prep,
            tokens: tokens.to_vec(),
            steps,
        },
    ))
}

/// Exact gradient of the loss computed by [`forward_loss`] with respect to
/// every parameter, by backpropagation through time.
pub fn backward(params: &ModelParams, cache: &ForwardCache<'_>) -> ModelParams {
    let p = params;
    let hsz = p.dims.hidden;
    let (ed, id) = (p.dims.embed, p.dims.image_dim);
    let mut g = ModelParams::zeros(p.dims);
    let mut d_img_proj = Array2::zeros((p.dims.regions, p.dims.image_att));
    let mut d_art_proj = Array2::zeros((p.dims.slots, p.dims.article_att));
    let inv = 1.0 / cache.steps.len() as f64;
    let mut dh_next = Array1::<f64>::zeros(hsz);
    let mut dc_next = Array1::<f64>::zeros(hsz);

    for (t, st) in cache.steps.iter().enumerate().rev() {
        let gold = cache.tokens[t + 1];
        let mut d_logits = softmax(st.logits.view());
        d_logits *= inv;
        d_logits[gold] -= inv;

        let h_out = match &st.mask {
            Some(m) => &st.h * m,
            None => st.h.clone(),
        };
        add_outer(&mut g.output, d_logits.view(), h_out.view());
        g.output_bias += &d_logits;
        let mut dh = p.output.t().dot(&d_logits);
        if let Some(m) = &st.mask {
            dh *= m;
        }
        dh += &dh_next;

        let i = st.gates.slice(s![..hsz]);
        let f = st.gates.slice(s![hsz..2 * hsz]);
        let gg = st.gates.slice(s![2 * hsz..3 * hsz]);
        let o = st.gates.slice(s![3 * hsz..]);

        let d_o = &dh * &st.tanh_c;
        let dc = &dh * &o * &st.tanh_c.mapv(|v| 1.0 - v * v) + &dc_next;
        let d_i = &dc * &gg;
        let d_f = &dc * &st.c_prev;
        let d_g = &dc * &i;
        let dc_prev = &dc * &f;

        let mut da = Array1::zeros(4 * hsz);
        da.slice_mut(s![..hsz])
            .assign(&(&d_i * &i.mapv(|v| v * (1.0 - v))));
        da.slice_mut(s![hsz..2 * hsz])
            .assign(&(&d_f * &f.mapv(|v| v * (1.0 - v))));
        da.slice_mut(s![2 * hsz..3 * hsz])
            .assign(&(&d_g * &gg.mapv(|v| 1.0 - v * v)));
        da.slice_mut(s![3 * hsz..])
            .assign(&(&d_o * &o.mapv(|v| v * (1.0 - v))));

        add_outer(&mut g.lstm_input, da.view(), st.z.view());
        add_outer(&mut g.lstm_recurrent, da.view(), st.h_prev.view());
        g.lstm_bias += &da;

        let dz = p.lstm_input.t().dot(&da);
        let mut dh_prev = p.lstm_recurrent.t().dot(&da);

        let mut emb_row = g.word_embedding.row_mut(st.token);
        emb_row += &dz.slice(s![..ed]);

        attend_backward(
            cache.prep.grid,
            &st.img,
            dz.slice(s![ed..ed + id]),
            &p.img_weights(),
            &st.h_prev,
            AttentionGrads {
                projected: &mut d_img_proj,
                hidden: &mut g.img_att_hidden,
                bias: &mut g.img_att_bias,
                score: &mut g.img_att_score,
            },
            &mut dh_prev,
        );
        attend_backward(
            cache.prep.article,
            &st.art,
            dz.slice(s![ed + id..]),
            &p.art_weights(),
            &st.h_prev,
            AttentionGrads {
                projected: &mut d_art_proj,
                hidden: &mut g.art_att_hidden,
                bias: &mut g.art_att_bias,
                score: &mut g.art_att_score,
            },
            &mut dh_prev,
        );

        dh_next = dh_prev;
        dc_next = dc_prev;
    }

    g.img_att_feature = d_img_proj.t().dot(&cache.prep.grid);
    g.art_att_feature = d_art_proj.t().dot(&cache.prep.article);
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::captioner::params::ModelDims;
    use ndarray::array;

    pub(crate) fn toy_dims() -> ModelDims {
        ModelDims {
            vocab: 20,
            embed: 8,
            image_dim: 5,
            regions: 4,
            article_dim: 6,
            slots: 3,
            hidden: 16,
            image_att: 7,
            article_att: 5,
        }
    }

    fn toy_inputs(d: ModelDims, seed: u64) -> (Array2<f64>, Array2<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = Array2::from_shape_fn((d.regions, d.image_dim), |_| rng.gen_range(-1.0..1.0));
        let art = Array2::from_shape_fn((d.slots, d.article_dim), |_| rng.gen_range(-1.0..1.0));
        (grid, art)
    }

    #[test]
    fn zero_params_give_log_vocab() {
        let d = toy_dims();
        let p = ModelParams::zeros(d);
        let (grid, art) = toy_inputs(d, 1);
        let (loss, _) = forward_loss(&p, &[1, 5, 7, 2], &grid, &art, None).unwrap();
        assert!((loss - (d.vocab as f64).ln()).abs() < 1e-12);
        assert!(forward_loss(&p, &[1], &grid, &art, None).is_err());
        assert!(forward_loss(&p, &[1, 99], &grid, &art, None).is_err());
    }

    #[test]
    fn backward_matches_central_differences() {
        let d = toy_dims();
        let mut p = ModelParams::init_uniform(d, 0.5, 3);
        let (grid, art) = toy_inputs(d, 4);
        let tokens = [1, 4, 9, 4, 13, 2];
        let (_, cache) = forward_loss(&p, &tokens, &grid, &art, None).unwrap();
        let grads = backward(&p, &cache);
        let eps = 1e-5;
        let mut worst = 0.0f64;
        for k in 0..TENSOR_NAMES_LEN {
            let n = grads.tensors()[k].1.len();
            for i in 0..n {
                let orig = p.tensors()[k].1[i];
                p.tensors_mut()[k].1[i] = orig + eps;
                let lp = forward_loss(&p, &tokens, &grid, &art, None).unwrap().0;
                p.tensors_mut()[k].1[i] = orig - eps;
                let lm = forward_loss(&p, &tokens, &grid, &art, None).unwrap().0;
                p.tensors_mut()[k].1[i] = orig;
                let num = (lp - lm) / (2.0 * eps);
                let ana = grads.tensors()[k].1[i];
                let rel = (ana - num).abs() / ana.abs().max(num.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    const TENSOR_NAMES_LEN: usize = 14;

    #[test]
    fn attention_of_identical_rows_is_uniform() {
        let d = toy_dims();
        let p = ModelParams::init_uniform(d, 0.3, 9);
        let grid = Array2::from_shape_fn((d.regions, d.image_dim), |(_, j)| j as f64);
        let h = Array1::from_elem(d.hidden, 0.2);
        let (ctx, alpha) = image_attention(&h, &grid, &p);
        for a in &alpha {
            assert!((a - 0.25).abs() < 1e-12);
        }
        for (c, r) in ctx.iter().zip(grid.row(0)) {
            assert!((c - r).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_computed_two_region_attention() {
        let dims = ModelDims {
            vocab: 4,
            embed: 1,
            image_dim: 2,
            regions: 2,
            article_dim: 1,
            slots: 1,
            hidden: 1,
            image_att: 1,
            article_att: 1,
        };
        let mut p = ModelParams::zeros(dims);
        p.img_att_feature = array![[1.0, -1.0]];
        p.img_att_hidden = array![[0.5]];
        p.img_att_score = array![2.0];
        let grid = array![[1.0, 0.0], [0.0, 1.0]];
        let h = array![1.0];
        let s0 = 2.0 * (1.0f64 + 0.5).tanh();
        let s1 = 2.0 * (-1.0f64 + 0.5).tanh();
        let a0 = s0.exp() / (s0.exp() + s1.exp());
        let (ctx, alpha) = image_attention(&h, &grid, &p);
        assert!((alpha[0] - a0).abs() < 1e-12);
        assert!((ctx[1] - (1.0 - a0)).abs() < 1e-12);
    }

    #[test]
    fn inference_steps_are_deterministic() {
        let d = toy_dims();
        let p = ModelParams::init_uniform(d, 0.1, 2);
        let (grid, art) = toy_inputs(d, 5);
        let s = DecoderState::zeros(d.hidden);
        let a = decode_step(&p, &s, 1, &grid, &art, None).unwrap();
        let b = decode_step(&p, &s, 1, &grid, &art, None).unwrap();
        assert_eq!(a.logits, b.logits);
        assert_eq!(a.state, b.state);
        assert!(decode_step(&p, &s, d.vocab, &grid, &art, None).is_err());
        let zero = decode_step(&ModelParams::zeros(d), &s, 1, &grid, &art, None).unwrap();
        assert!(zero.logits.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn unused_embedding_rows_get_zero_gradient() {
        let d = toy_dims();
        let p = ModelParams::init_uniform(d, 0.1, 2);
        let (grid, art) = toy_inputs(d, 5);
        let (_, cache) = forward_loss(&p, &[1, 6, 2], &grid, &art, None).unwrap();
        let g = backward(&p, &cache);
        for (row, grad) in g.word_embedding.rows().into_iter().enumerate() {
            if row != 1 && row != 6 {
                assert!(grad.iter().all(|&v| v == 0.0));
            }
        }
    }
}
