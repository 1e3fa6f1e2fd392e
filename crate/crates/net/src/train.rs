//! Batched training over in-memory samples.

use crate::adam::AdamState;
use crate::config::TrainConfig;
use crate::loss::total_loss;
use crate::model::Net;
use crate::params::Forward;
use crate::{NetError, Result};
use groupsod_tensor::Tensor;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One training sample in tensor form (`rgb [3,S,S]`, `depth [1,S,S]`,
/// `gt [1,S,S]` binary).
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub rgb: Tensor,
    pub depth: Tensor,
    pub gt: Tensor,
}

#[derive(Debug, Clone)]
pub struct EpochReport {
    pub epoch: usize,
    pub mean_loss: f64,
    pub lr: f64,
    pub batches: usize,
}

fn stack_gt(net: &Net, samples: &[&TrainSample]) -> Result<Tensor> {
    let s = net.config.input_size;
    let mut data = Vec::with_capacity(samples.len() * s * s);
    for sample in samples {
        if sample.gt.shape() != [1, s, s] {
            return Err(NetError::Input(format!(
                "gt shape {:?}, expected [1,{s},{s}]",
                sample.gt.shape()
            )));
        }
        data.extend_from_slice(sample.gt.data());
    }
    Tensor::new(vec![samples.len(), 1, s, s], data).map_err(Into::into)
}

/// Deterministic epoch order keyed by (seed, epoch).
fn epoch_order(len: usize, cfg: &TrainConfig, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    order.shuffle(&mut rng);
    order
}

/// One pass over the dataset: shuffled batches, forward, summed PPA loss,
/// backward, Adam. Aborts with a diagnostic if the loss goes non-finite.
pub fn train_epoch(
    net: &mut Net,
    adam: &mut AdamState,
    data: &[TrainSample],
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<EpochReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(NetError::Input("training set is empty".into()));
    }
    let lr = cfg.lr_at(epoch);
    let order = epoch_order(data.len(), cfg, epoch);
    let mut loss_sum = 0.0;
    let mut batches = 0usize;

    for chunk in order.chunks(cfg.batch_size) {
        let batch: Vec<&TrainSample> = chunk.iter().map(|&i| &data[i]).collect();
        let rgb: Vec<Tensor> = batch.iter().map(|s| s.rgb.clone()).collect();
        let depth: Vec<Tensor> = batch.iter().map(|s| s.depth.clone()).collect();
        let (rgb_b, depth_b) = net.batch_inputs(&rgb, &depth)?;
        let gt_b = stack_gt(net, &batch)?;

        let mut fw = Forward::new(&net.store, true);
        let heads = net.forward(&mut fw, rgb_b, depth_b)?;
        let loss = total_loss(&mut fw, &heads, &gt_b, net.config.ppa_window)?;
        let loss_value = fw.tape.value(loss).item();
        if !loss_value.is_finite() {
            let (node, op) = fw.tape.first_nonfinite().unwrap_or((0, groupsod_tensor::OpKind::Leaf));
            return Err(NetError::NonFiniteLoss { epoch, node, op });
        }
        fw.tape.backward(loss)?;
        let grads = fw.all_grads()?;
        drop(fw);
        adam.step(&mut net.store, &grads, lr)?;

        loss_sum += loss_value;
        batches += 1;
    }

    Ok(EpochReport {
        epoch,
        mean_loss: loss_sum / batches as f64,
        lr,
        batches,
    })
}

/// Mean absolute error of the exported map over the given samples.
pub fn eval_train_mae(net: &Net, data: &[TrainSample]) -> Result<f64> {
    if data.is_empty() {
        return Err(NetError::Input("no samples to evaluate".into()));
    }
    let mut total = 0.0;
    for sample in data {
        let pred = net.predict(sample.rgb.clone(), sample.depth.clone())?;
        let err: f64 = pred
            .data()
            .iter()
            .zip(sample.gt.data())
            .map(|(p, g)| (p - g).abs())
            .sum();
        total += err / sample.gt.numel() as f64;
    }
    Ok(total / data.len() as f64)
}
