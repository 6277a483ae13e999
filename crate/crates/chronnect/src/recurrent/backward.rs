//! Backpropagation through time for every classifier variant.
//!
//! Gradients are accumulated into a `ModelParams` value of the same shape as
//! the parameters (so a batch sums naturally); callers zero the accumulator
//! when they want per-sample gradients.

use crate::error::{Error, Result};
use crate::numerics::{axpy, Matrix};
use crate::recurrent::forward::{reverse_rows, BiLstmCache, BodyCache, LstmCache, ModelCache};
use crate::recurrent::params::{BiLstmParams, LstmParams, ModelConfig, ModelParams};

/// Unrolled-cell backward. `input` and `dh_seq` are in the cache's own time
/// order. Returns the gradient with respect to the input sequence when
/// `want_dx` (needed when a layer feeds another layer below it).
fn lstm_backward(
    p: &LstmParams,
    input: &Matrix,
    cache: &LstmCache,
    dh_seq: &Matrix,
    want_dx: bool,
    grads: &mut LstmParams,
) -> Result<Option<Matrix>> {
    let t_len = cache.h.rows();
    let h = p.hidden_dim;
    if input.rows() != t_len || input.cols() != p.input_dim {
        return Err(Error::shape(
            "lstm_backward",
            format!("input {}x{}", input.rows(), input.cols()),
        ));
    }
    if dh_seq.rows() != t_len || dh_seq.cols() != h {
        return Err(Error::shape(
            "lstm_backward",
            format!("dh {}x{}", dh_seq.rows(), dh_seq.cols()),
        ));
    }
    let mut dx = want_dx.then(|| Matrix::zeros(t_len, p.input_dim));
    let zero_state = vec![0.0; h];
    // Gradients carried across the recurrence, from step t+1 back into t.
    let mut dh_carry = vec![0.0; h];
    let mut dc_carry = vec![0.0; h];
    let mut da_i = vec![0.0; h];
    let mut da_f = vec![0.0; h];
    let mut da_o = vec![0.0; h];
    let mut da_g = vec![0.0; h];
    for t in (0..t_len).rev() {
        let (h_prev, c_prev): (&[f64], &[f64]) = if t == 0 {
            (&zero_state, &zero_state)
        } else {
            (cache.h.row(t - 1), cache.c.row(t - 1))
        };
        for j in 0..h {
            let i_j = cache.i.get(t, j);
            let f_j = cache.f.get(t, j);
            let o_j = cache.o.get(t, j);
            let g_j = cache.g.get(t, j);
            let tc_j = cache.tanh_c.get(t, j);
            let dh_j = dh_seq.get(t, j) + dh_carry[j];
            let dc_j = dh_j * o_j * (1.0 - tc_j * tc_j) + dc_carry[j];
            // Pre-activation gradients through each gate's nonlinearity.
            da_i[j] = dc_j * g_j * i_j * (1.0 - i_j);
            da_f[j] = dc_j * c_prev[j] * f_j * (1.0 - f_j);
            da_o[j] = dh_j * tc_j * o_j * (1.0 - o_j);
            da_g[j] = dc_j * i_j * (1.0 - g_j * g_j);
            dc_carry[j] = dc_j * f_j;
        }
        let x_t = input.row(t);
        grads.w_xi.add_outer(&da_i, x_t);
        grads.w_xf.add_outer(&da_f, x_t);
        grads.w_xo.add_outer(&da_o, x_t);
        grads.w_xc.add_outer(&da_g, x_t);
        grads.w_hi.add_outer(&da_i, h_prev);
        grads.w_hf.add_outer(&da_f, h_prev);
        grads.w_ho.add_outer(&da_o, h_prev);
        grads.w_hc.add_outer(&da_g, h_prev);
        axpy(1.0, &da_i, &mut grads.b_i);
        axpy(1.0, &da_f, &mut grads.b_f);
        axpy(1.0, &da_o, &mut grads.b_o);
        axpy(1.0, &da_g, &mut grads.b_c);
        dh_carry.fill(0.0);
        p.w_hi.matvec_t_add(&da_i, &mut dh_carry);
        p.w_hf.matvec_t_add(&da_f, &mut dh_carry);
        p.w_ho.matvec_t_add(&da_o, &mut dh_carry);
        p.w_hc.matvec_t_add(&da_g, &mut dh_carry);
        if let Some(dx) = dx.as_mut() {
            let row = dx.row_mut(t);
            p.w_xi.matvec_t_add(&da_i, row);
            p.w_xf.matvec_t_add(&da_f, row);
            p.w_xo.matvec_t_add(&da_o, row);
            p.w_xc.matvec_t_add(&da_g, row);
        }
    }
    Ok(dx)
}

/// Bidirectional backward: splits the per-step output gradient into the two
/// directions through the output projections, then runs each cell's BPTT.
/// `input` is in forward time order; `dy_seq` is T x O.
fn bilstm_backward(
    p: &BiLstmParams,
    input: &Matrix,
    cache: &BiLstmCache,
    dy_seq: &Matrix,
    want_dx: bool,
    grads: &mut BiLstmParams,
) -> Result<Option<Matrix>> {
    let t_len = cache.y.rows();
    let h = p.forward.hidden_dim;
    if dy_seq.rows() != t_len || dy_seq.cols() != p.output_dim() {
        return Err(Error::shape(
            "bilstm_backward",
            format!("dy {}x{}", dy_seq.rows(), dy_seq.cols()),
        ));
    }
    let mut dh_fwd = Matrix::zeros(t_len, h);
    let mut dh_bwd_rev = Matrix::zeros(t_len, h);
    for t in 0..t_len {
        let dy_t = dy_seq.row(t);
        axpy(1.0, dy_t, &mut grads.b_y);
        grads.w_fy.add_outer(dy_t, cache.fwd.h.row(t));
        // Backward cache row T-1-t holds the backward state for step t.
        grads.w_by.add_outer(dy_t, cache.bwd.h.row(t_len - 1 - t));
        p.w_fy.matvec_t_add(dy_t, dh_fwd.row_mut(t));
        p.w_by.matvec_t_add(dy_t, dh_bwd_rev.row_mut(t_len - 1 - t));
    }
    let dx_f = lstm_backward(&p.forward, input, &cache.fwd, &dh_fwd, want_dx, &mut grads.forward)?;
    let dx_b_rev = lstm_backward(
        &p.backward,
        &cache.rev_input,
        &cache.bwd,
        &dh_bwd_rev,
        want_dx,
        &mut grads.backward,
    )?;
    Ok(match (dx_f, dx_b_rev) {
        (Some(mut f), Some(b_rev)) => {
            let b = reverse_rows(&b_rev);
            axpy(1.0, b.values(), f.values_mut());
            Some(f)
        }
        _ => None,
    })
}

/// Full-model backward from the logit gradient (softmax and loss already
/// folded in by the caller: dlogits_j = weight * (p_j - [j == label])).
///
/// Consumes the cache, so each forward can be differentiated exactly once.
/// Gradients are added onto `grads`.
pub fn model_backward(
    config: &ModelConfig,
    params: &ModelParams,
    cache: ModelCache,
    dlogits: &[f64],
    grads: &mut ModelParams,
) -> Result<()> {
    config.validate()?;
    if params.variant() != config.variant || grads.variant() != config.variant {
        return Err(Error::Config(
            "params/grads variant does not match config".to_string(),
        ));
    }
    if dlogits.len() != config.num_classes {
        return Err(Error::shape(
            "model_backward",
            format!("dlogits len {}", dlogits.len()),
        ));
    }

    let (head, grads_head) = match (params, &mut *grads) {
        (ModelParams::FullBiLstm { head, .. }, ModelParams::FullBiLstm { head: gh, .. })
        | (ModelParams::FullLstm { head, .. }, ModelParams::FullLstm { head: gh, .. })
        | (ModelParams::BiLstmLast { head, .. }, ModelParams::BiLstmLast { head: gh, .. })
        | (
            ModelParams::StackedFullBiLstm { head, .. },
            ModelParams::StackedFullBiLstm { head: gh, .. },
        ) => (head, gh),
        _ => unreachable!("variant equality checked above"),
    };
    grads_head.w_dense.add_outer(dlogits, &cache.head_input);
    axpy(1.0, dlogits, &mut grads_head.b_dense);
    let mut dfeat = vec![0.0; cache.head_input.len()];
    head.w_dense.matvec_t_add(dlogits, &mut dfeat);
    if let Some(mask) = &cache.mask {
        for (d, m) in dfeat.iter_mut().zip(mask) {
            *d *= m;
        }
    }

    let t_len = config.seq_len;
    let h = config.hidden_dim;
    match (params, grads, cache.body) {
        (
            ModelParams::FullBiLstm { layer, .. },
            ModelParams::FullBiLstm { layer: gl, .. },
            BodyCache::FullBiLstm(body),
        ) => {
            let dy = Matrix::new(t_len, h, dfeat)?;
            bilstm_backward(layer, &cache.input, &body, &dy, false, gl)?;
        }
        (
            ModelParams::FullLstm { layer, .. },
            ModelParams::FullLstm { layer: gl, .. },
            BodyCache::FullLstm(body),
        ) => {
            let dh = Matrix::new(t_len, h, dfeat)?;
            lstm_backward(layer, &cache.input, &body, &dh, false, gl)?;
        }
        (
            ModelParams::BiLstmLast { layer, .. },
            ModelParams::BiLstmLast { layer: gl, .. },
            BodyCache::BiLstmLast(body),
        ) => {
            let mut dy = Matrix::zeros(t_len, h);
            dy.row_mut(t_len - 1).copy_from_slice(&dfeat);
            bilstm_backward(layer, &cache.input, &body, &dy, false, gl)?;
        }
        (
            ModelParams::StackedFullBiLstm { layer1, layer2, .. },
            ModelParams::StackedFullBiLstm { layer1: gl1, layer2: gl2, .. },
            BodyCache::Stacked(body1, body2),
        ) => {
            let dy2 = Matrix::new(t_len, h, dfeat)?;
            let dy1 = bilstm_backward(layer2, &body1.y, &body2, &dy2, true, gl2)?
                .expect("want_dx requested");
            bilstm_backward(layer1, &cache.input, &body1, &dy1, false, gl1)?;
        }
        _ => {
            return Err(Error::Config(
                "cache body does not match model variant".to_string(),
            ))
        }
    }
    Ok(())
}
