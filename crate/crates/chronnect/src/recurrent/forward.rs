//! Forward passes: single recurrent step, unrolled sequences, bidirectional
//! combination, and the per-variant classifier head.
//!
//! Every forward keeps the intermediate activations needed by the matching
//! backward pass in a cache value; the backward consumes the cache by value,
//! so a cache can never be replayed against a different forward.

use crate::error::{Error, Result};
use crate::numerics::{sigmoid, softmax, tanh_act, Matrix};
use crate::recurrent::params::{BiLstmParams, HeadParams, LstmParams, ModelConfig, ModelParams};

/// Activations of one unrolled cell over T steps, each matrix T x H.
/// Row t of `h` is the hidden state after step t.
#[derive(Debug, Clone)]
pub struct LstmCache {
    pub i: Matrix,
    pub f: Matrix,
    pub o: Matrix,
    pub g: Matrix,
    pub c: Matrix,
    pub tanh_c: Matrix,
    pub h: Matrix,
}

/// Both directions' activations plus the combined per-step outputs.
/// The backward direction ran on `rev_input`, so its cache rows are in
/// reversed time; row r corresponds to step T-1-r.
#[derive(Debug, Clone)]
pub struct BiLstmCache {
    pub fwd: LstmCache,
    pub bwd: LstmCache,
    pub rev_input: Matrix,
    /// T x O in forward time order.
    pub y: Matrix,
}

pub(crate) enum BodyCache {
    FullBiLstm(BiLstmCache),
    FullLstm(LstmCache),
    BiLstmLast(BiLstmCache),
    Stacked(BiLstmCache, BiLstmCache),
}

/// Everything the backward pass needs from one classifier forward.
pub struct ModelCache {
    pub(crate) input: Matrix,
    /// Feature vector as seen by the dense head (after dropout, if any).
    pub(crate) head_input: Vec<f64>,
    pub(crate) mask: Option<Vec<f64>>,
    pub(crate) body: BodyCache,
}

fn check_dims(op: &'static str, x: usize, h_prev: usize, c_prev: usize, p: &LstmParams) -> Result<()> {
    if x != p.input_dim || h_prev != p.hidden_dim || c_prev != p.hidden_dim {
        return Err(Error::shape(
            op,
            format!(
                "x {} / h {} / c {} vs params D={} H={}",
                x, h_prev, c_prev, p.input_dim, p.hidden_dim
            ),
        ));
    }
    Ok(())
}

/// One cell update. Writes the step's gate activations into row `t` of the
/// cache and returns nothing; read h and c back from the cache.
fn step_into(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    p: &LstmParams,
    cache: &mut LstmCache,
    t: usize,
) {
    let h = p.hidden_dim;
    // Pre-activations: a_* = W_x* x + W_h* h_prev + b_*.
    let mut a_i = p.b_i.clone();
    p.w_xi.matvec_add(x, &mut a_i);
    p.w_hi.matvec_add(h_prev, &mut a_i);
    let mut a_f = p.b_f.clone();
    p.w_xf.matvec_add(x, &mut a_f);
    p.w_hf.matvec_add(h_prev, &mut a_f);
    let mut a_o = p.b_o.clone();
    p.w_xo.matvec_add(x, &mut a_o);
    p.w_ho.matvec_add(h_prev, &mut a_o);
    let mut a_g = p.b_c.clone();
    p.w_xc.matvec_add(x, &mut a_g);
    p.w_hc.matvec_add(h_prev, &mut a_g);

    for j in 0..h {
        let i_j = sigmoid(a_i[j]);
        let f_j = sigmoid(a_f[j]);
        let o_j = sigmoid(a_o[j]);
        let g_j = tanh_act(a_g[j]);
        let c_j = i_j * g_j + f_j * c_prev[j];
        let tc_j = tanh_act(c_j);
        cache.i.set(t, j, i_j);
        cache.f.set(t, j, f_j);
        cache.o.set(t, j, o_j);
        cache.g.set(t, j, g_j);
        cache.c.set(t, j, c_j);
        cache.tanh_c.set(t, j, tc_j);
        cache.h.set(t, j, o_j * tc_j);
    }
}

/// One cell update from explicit previous state: returns (h_t, c_t).
pub fn lstm_step(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    p: &LstmParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims("lstm_step", x.len(), h_prev.len(), c_prev.len(), p)?;
    let mut cache = LstmCache::empty(1, p.hidden_dim);
    step_into(x, h_prev, c_prev, p, &mut cache, 0);
    Ok((cache.h.row(0).to_vec(), cache.c.row(0).to_vec()))
}

impl LstmCache {
    fn empty(t: usize, h: usize) -> Self {
        LstmCache {
            i: Matrix::zeros(t, h),
            f: Matrix::zeros(t, h),
            o: Matrix::zeros(t, h),
            g: Matrix::zeros(t, h),
            c: Matrix::zeros(t, h),
            tanh_c: Matrix::zeros(t, h),
            h: Matrix::zeros(t, h),
        }
    }
}

/// Unrolls the cell over `seq` (T x D) from zero initial state. Row t of the
/// returned cache's `h` is the hidden state after consuming seq row t.
pub fn lstm_forward(seq: &Matrix, p: &LstmParams) -> Result<LstmCache> {
    if seq.rows() == 0 {
        return Err(Error::shape("lstm_forward", "empty sequence".to_string()));
    }
    check_dims("lstm_forward", seq.cols(), p.hidden_dim, p.hidden_dim, p)?;
    let t_len = seq.rows();
    let h = p.hidden_dim;
    let mut cache = LstmCache::empty(t_len, h);
    let zero_state = vec![0.0; h];
    for t in 0..t_len {
        // Split-borrow dance: previous row is read from a copy since the
        // cache is written in the same call.
        let (h_prev, c_prev) = if t == 0 {
            (zero_state.clone(), zero_state.clone())
        } else {
            (cache.h.row(t - 1).to_vec(), cache.c.row(t - 1).to_vec())
        };
        step_into(seq.row(t), &h_prev, &c_prev, p, &mut cache, t);
    }
    Ok(cache)
}

pub(crate) fn reverse_rows(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for r in 0..m.rows() {
        out.row_mut(r).copy_from_slice(m.row(m.rows() - 1 - r));
    }
    out
}

/// Bidirectional pass: runs one cell left-to-right and a second cell over the
/// reversed sequence, then combines per step:
/// y_t = w_fy * h_forward_t + w_by * h_backward_t + b_y (affine, no
/// nonlinearity on the combination).
pub fn bilstm_forward(seq: &Matrix, p: &BiLstmParams) -> Result<BiLstmCache> {
    let fwd = lstm_forward(seq, &p.forward)?;
    let rev_input = reverse_rows(seq);
    let bwd = lstm_forward(&rev_input, &p.backward)?;
    let t_len = seq.rows();
    let o_dim = p.output_dim();
    let mut y = Matrix::zeros(t_len, o_dim);
    for t in 0..t_len {
        let mut y_t = p.b_y.clone();
        p.w_fy.matvec_add(fwd.h.row(t), &mut y_t);
        // Backward cache row T-1-t is the backward hidden state for step t.
        p.w_by.matvec_add(bwd.h.row(t_len - 1 - t), &mut y_t);
        y.row_mut(t).copy_from_slice(&y_t);
    }
    Ok(BiLstmCache {
        fwd,
        bwd,
        rev_input,
        y,
    })
}

fn head_probs(head: &HeadParams, features: &[f64]) -> Vec<f64> {
    let mut logits = head.b_dense.clone();
    head.w_dense.matvec_add(features, &mut logits);
    softmax(&logits)
}

fn flatten_rows(m: &Matrix) -> Vec<f64> {
    m.values().to_vec()
}

/// Classifier forward for any variant.
///
/// `input` must be seq_len x input_dim. A dropout mask (same length as the
/// head's feature vector, entries 0 or 1/(1-rate)) is only legal in training;
/// its presence is what switches the head input to the masked features.
/// Returns class probabilities and the backward cache.
pub fn model_forward(
    config: &ModelConfig,
    params: &ModelParams,
    input: &Matrix,
    dropout_mask: Option<&[f64]>,
) -> Result<(Vec<f64>, ModelCache)> {
    config.validate()?;
    if params.variant() != config.variant {
        return Err(Error::Config(format!(
            "params are {} but config wants {}",
            params.variant(),
            config.variant
        )));
    }
    if input.rows() != config.seq_len || input.cols() != config.input_dim {
        return Err(Error::shape(
            "model_forward",
            format!(
                "input {}x{} vs config {}x{}",
                input.rows(),
                input.cols(),
                config.seq_len,
                config.input_dim
            ),
        ));
    }
    let (features, body) = match params {
        ModelParams::FullBiLstm { layer, .. } => {
            let cache = bilstm_forward(input, layer)?;
            (flatten_rows(&cache.y), BodyCache::FullBiLstm(cache))
        }
        ModelParams::FullLstm { layer, .. } => {
            let cache = lstm_forward(input, layer)?;
            (flatten_rows(&cache.h), BodyCache::FullLstm(cache))
        }
        ModelParams::BiLstmLast { layer, .. } => {
            let cache = bilstm_forward(input, layer)?;
            let last = cache.y.row(cache.y.rows() - 1).to_vec();
            (last, BodyCache::BiLstmLast(cache))
        }
        ModelParams::StackedFullBiLstm { layer1, layer2, .. } => {
            let cache1 = bilstm_forward(input, layer1)?;
            let cache2 = bilstm_forward(&cache1.y, layer2)?;
            (flatten_rows(&cache2.y), BodyCache::Stacked(cache1, cache2))
        }
    };
    debug_assert_eq!(features.len(), config.feature_dim());

    let (head_input, mask) = match dropout_mask {
        Some(m) => {
            if m.len() != features.len() {
                return Err(Error::shape(
                    "model_forward",
                    format!("dropout mask {} vs features {}", m.len(), features.len()),
                ));
            }
            let masked: Vec<f64> = features.iter().zip(m).map(|(v, s)| v * s).collect();
            (masked, Some(m.to_vec()))
        }
        None => (features, None),
    };

    let head = match params {
        ModelParams::FullBiLstm { head, .. }
        | ModelParams::FullLstm { head, .. }
        | ModelParams::BiLstmLast { head, .. }
        | ModelParams::StackedFullBiLstm { head, .. } => head,
    };
    let probs = head_probs(head, &head_input);
    Ok((
        probs,
        ModelCache {
            input: input.clone(),
            head_input,
            mask,
            body,
        },
    ))
}
