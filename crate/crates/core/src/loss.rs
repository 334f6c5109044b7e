//! Two-level masked cross-entropy and backpropagation through time.
//!
//! Level one drops courses the student did not take in the predicted
//! semester. Level two keeps, for each taken course, only the group (letter
//! or Pass/NoPass) its grade belongs to. Everything masked contributes
//! exactly zero loss and exactly zero gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::encode::{EncodedSequence, GradeVector, MaskSelector, StepTarget};
use crate::error::{Error, Result};
use crate::linalg::nonzero_indices;
use crate::net::{
    cell_forward, forward_sequence, logits_from, output_layer_input, CellCache, Gate,
    HiddenState, Model, ModelParams,
};

/// Gradients share the parameter tree's shape.
pub type Gradients = ModelParams;

/// Position of the single 1 in `group`, or an error when the group is not one-hot.
fn one_hot_position(group: &[f64], course: usize) -> Result<usize> {
    let mut pos = None;
    for (j, v) in group.iter().enumerate() {
        if *v == 1.0 && pos.is_none() {
            pos = Some(j);
        } else if *v != 0.0 {
            return Err(Error::InconsistentLabel { course });
        }
    }
    pos.ok_or(Error::InconsistentLabel { course })
}

/// Loss of one predicted semester and, if requested, `∂loss/∂logits`
/// (softmax minus one-hot inside each selected group, zero elsewhere).
fn step_loss(probs: &GradeVector, target: &StepTarget, mut dlogits: Option<&mut [f64]>) -> Result<f64> {
    let (n, m) = (target.label.n(), target.label.m());
    if probs.values.len() != target.label.values.len() || target.mask.0.len() != n {
        return Err(Error::DimensionMismatch {
            what: "prediction/label",
            expected: target.label.values.len(),
            actual: probs.values.len(),
        });
    }
    let w = m + 2;
    let mut loss = 0.0;
    for (i, sel) in target.mask.0.iter().enumerate() {
        let slot = target.label.slot(i);
        let (range, group) = match sel {
            MaskSelector::None => {
                if slot.iter().any(|v| *v != 0.0) {
                    return Err(Error::InconsistentLabel { course: i });
                }
                continue;
            }
            MaskSelector::LetterGroup => {
                if slot[m..].iter().any(|v| *v != 0.0) {
                    return Err(Error::InconsistentLabel { course: i });
                }
                (i * w..i * w + m, &slot[..m])
            }
            MaskSelector::PassNoPassGroup => {
                if slot[..m].iter().any(|v| *v != 0.0) {
                    return Err(Error::InconsistentLabel { course: i });
                }
                (i * w + m..(i + 1) * w, &slot[m..])
            }
        };
        let pos = one_hot_position(group, i)?;
        let p = &probs.values[range.clone()];
        loss -= p[pos].ln();
        if let Some(d) = dlogits.as_deref_mut() {
            let d = &mut d[range];
            d.copy_from_slice(p);
            d[pos] -= 1.0;
        }
    }
    Ok(loss)
}

/// Natural-log cross entropy summed over steps and unmasked course groups.
pub fn masked_loss(predictions: &[GradeVector], targets: &[StepTarget]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            what: "prediction steps",
            expected: targets.len(),
            actual: predictions.len(),
        });
    }
    let mut loss = 0.0;
    for (p, t) in predictions.iter().zip(targets) {
        loss += step_loss(p, t, None)?;
    }
    Ok(loss)
}

/// `∂loss/∂logits` for one step given its group-softmaxed prediction.
pub fn logit_gradient(probs: &GradeVector, target: &StepTarget) -> Result<Vec<f64>> {
    let mut d = vec![0.0; probs.values.len()];
    step_loss(probs, target, Some(&mut d))?;
    Ok(d)
}

/// Loss of a batch evaluated through the plain forward pass (no dropout).
pub fn batch_loss(model: &Model, batch: &[EncodedSequence]) -> Result<f64> {
    let mut total = 0.0;
    for seq in batch {
        let preds = forward_sequence(model, &seq.inputs)?;
        total += masked_loss(&preds, &seq.targets)?;
    }
    Ok(total)
}

struct StepRecord {
    prev: HiddenState,
    cache: CellCache,
    /// Output-layer input after dropout.
    u: Vec<f64>,
    /// Inverted-dropout multipliers, when training.
    drop: Option<Vec<f64>>,
    dlogits: Vec<f64>,
}

/// Accumulates one sequence's gradient into `grads` and returns its loss.
fn sequence_backward(
    model: &Model,
    seq: &EncodedSequence,
    dropout: Option<(f64, u64)>,
    grads: &mut Gradients,
) -> Result<f64> {
    if seq.inputs.len() != seq.targets.len() {
        return Err(Error::DimensionMismatch {
            what: "sequence targets",
            expected: seq.inputs.len(),
            actual: seq.targets.len(),
        });
    }
    let d = model.dims.hidden;
    let params = &model.params;
    let mut rng = dropout.map(|(_, seed)| ChaCha8Rng::seed_from_u64(seed));
    let keep = dropout.map_or(1.0, |(rate, _)| 1.0 - rate);

    let mut loss = 0.0;
    let mut state = HiddenState::zeros(d);
    let mut steps = Vec::with_capacity(seq.len());
    for (input, target) in seq.inputs.iter().zip(&seq.targets) {
        if input.recurrent.len() != model.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "recurrent input",
                expected: model.input_dim(),
                actual: input.recurrent.len(),
            });
        }
        let (next, cache) = cell_forward(&params.lstm, &input.recurrent, &state);
        let mut u = output_layer_input(model, &next.h, input.side.as_deref())?;
        let drop = rng.as_mut().map(|rng| {
            u.iter_mut()
                .map(|v| {
                    let m = if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 };
                    *v *= m;
                    m
                })
                .collect::<Vec<f64>>()
        });
        let logits = logits_from(model, &u);
        let probs = crate::net::softmax_groups(&logits, model.dims.n, model.dims.m);
        let mut dlogits = vec![0.0; logits.len()];
        loss += step_loss(&probs, target, Some(&mut dlogits))?;
        steps.push(StepRecord {
            prev: std::mem::replace(&mut state, next),
            cache,
            u,
            drop,
            dlogits,
        });
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss"));
    }

    let mut dh_next = vec![0.0; d];
    let mut dc_next = vec![0.0; d];
    let (mut dz_f, mut dz_i, mut dz_c, mut dz_o) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    for (t, step) in steps.iter().enumerate().rev() {
        let input = &seq.inputs[t];
        let dl = &step.dlogits;

        grads.output.weight.add_outer(dl, &step.u);
        for (g, v) in grads.output.bias.iter_mut().zip(dl) {
            *g += v;
        }
        let mut du = vec![0.0; step.u.len()];
        params.output.weight.mul_transpose_acc(dl, &mut du);
        if let Some(mask) = &step.drop {
            for (g, m) in du.iter_mut().zip(mask) {
                *g *= m;
            }
        }
        if let (Some(branch_grad), Some(side)) = (grads.output.side.as_mut(), input.side.as_deref()) {
            let ds = &du[d..];
            branch_grad.weight.add_outer_sparse(ds, side, &nonzero_indices(side));
            for (g, v) in branch_grad.bias.iter_mut().zip(ds) {
                *g += v;
            }
        }

        let c = &step.cache;
        for j in 0..d {
            let dh = du[j] + dh_next[j];
            let dc = dh * c.o[j] * (1.0 - c.tanh_c[j] * c.tanh_c[j]) + dc_next[j];
            dz_o[j] = dh * c.tanh_c[j] * c.o[j] * (1.0 - c.o[j]);
            dz_f[j] = dc * step.prev.c[j] * c.f[j] * (1.0 - c.f[j]);
            dz_i[j] = dc * c.c_tilde[j] * c.i[j] * (1.0 - c.i[j]);
            dz_c[j] = dc * c.i[j] * (1.0 - c.c_tilde[j] * c.c_tilde[j]);
            dc_next[j] = dc * c.f[j];
        }

        dh_next.fill(0.0);
        let x = &input.recurrent;
        let lstm_grads = &mut grads.lstm;
        for (gate, grad, dz) in [
            (&params.lstm.forget, &mut lstm_grads.forget, &dz_f),
            (&params.lstm.input, &mut lstm_grads.input, &dz_i),
            (&params.lstm.candidate, &mut lstm_grads.candidate, &dz_c),
            (&params.lstm.output, &mut lstm_grads.output, &dz_o),
        ] {
            accumulate_gate(gate, grad, dz, x, &c.x_nz, &step.prev.h, &mut dh_next);
        }
    }
    Ok(loss)
}

fn accumulate_gate(
    gate: &Gate,
    grad: &mut Gate,
    dz: &[f64],
    x: &[f64],
    x_nz: &[usize],
    h_prev: &[f64],
    dh_prev: &mut [f64],
) {
    grad.w_input.add_outer_sparse(dz, x, x_nz);
    grad.w_hidden.add_outer(dz, h_prev);
    for (g, v) in grad.bias.iter_mut().zip(dz) {
        *g += v;
    }
    gate.w_hidden.mul_transpose_acc(dz, dh_prev);
}

fn check_finite(grads: &Gradients) -> Result<()> {
    for b in grads.blocks() {
        if b.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(b.name));
        }
    }
    Ok(())
}

/// Summed loss and gradients over a batch. `dropout_rate > 0` enables
/// inverted dropout on the output layer's input, with masks drawn from `rng`.
///
/// Sequences may be processed in parallel; their gradients are summed in
/// batch order, so results do not depend on the thread count.
pub fn backward_bptt<R: Rng>(
    model: &Model,
    batch: &[EncodedSequence],
    dropout_rate: f64,
    rng: &mut R,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    if !(0.0..1.0).contains(&dropout_rate) {
        return Err(Error::InvalidConfig(format!("dropout rate {dropout_rate} outside [0, 1)")));
    }
    let seeds: Vec<Option<(f64, u64)>> = batch
        .iter()
        .map(|_| (dropout_rate > 0.0).then(|| (dropout_rate, rng.gen())))
        .collect();
    let parts: Vec<Result<(f64, Gradients)>> = batch
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(seq, drop)| {
            let mut g = model.params.zeros_like();
            let loss = sequence_backward(model, seq, *drop, &mut g)?;
            Ok((loss, g))
        })
        .collect();

    let mut total = 0.0;
    let mut grads = model.params.zeros_like();
    for part in parts {
        let (loss, g) = part?;
        total += loss;
        grads.add_assign(&g);
    }
    check_finite(&grads)?;
    Ok((total, grads))
}

/// Loss and exact gradients without dropout.
pub fn gradients(model: &Model, batch: &[EncodedSequence]) -> Result<(f64, Gradients)> {
    backward_bptt(model, batch, 0.0, &mut rand::rngs::mock::StepRng::new(0, 0))
}

/// Largest relative error between `analytic` and central differences of the loss.
pub fn compare_with_finite_differences(
    model: &Model,
    batch: &[EncodedSequence],
    analytic: &Gradients,
    epsilon: f64,
) -> Result<f64> {
    let mut probe = model.clone();
    let analytic_values: Vec<f64> = analytic.blocks().iter().flat_map(|b| b.data.iter().copied()).collect();
    let total = analytic_values.len();
    let mut worst: f64 = 0.0;
    for flat in 0..total {
        let original = param_at(&probe.params, flat);
        set_param(&mut probe.params, flat, original + epsilon);
        let plus = batch_loss(&probe, batch)?;
        set_param(&mut probe.params, flat, original - epsilon);
        let minus = batch_loss(&probe, batch)?;
        set_param(&mut probe.params, flat, original);

        let numeric = (plus - minus) / (2.0 * epsilon);
        let a = analytic_values[flat];
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}

/// Max relative error of backpropagated gradients against central differences.
pub fn finite_diff_check(model: &Model, batch: &[EncodedSequence], epsilon: f64) -> Result<f64> {
    let (_, analytic) = gradients(model, batch)?;
    compare_with_finite_differences(model, batch, &analytic, epsilon)
}

fn param_at(params: &ModelParams, mut flat: usize) -> f64 {
    for b in params.blocks() {
        if flat < b.data.len() {
            return b.data[flat];
        }
        flat -= b.data.len();
    }
    panic!("parameter index out of range");
}

fn set_param(params: &mut ModelParams, flat: usize, value: f64) {
    let mut offset = 0;
    params.for_each_mut(|_, data| {
        if flat >= offset && flat < offset + data.len() {
            data[flat - offset] = value;
        }
        offset += data.len();
    });
}
