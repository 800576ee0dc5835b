use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::params::MlpParams;
use crate::{Error, Result};

/// Activations kept from a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    h1: Array2<f64>,
    h2: Array2<f64>,
    mean: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// Per-row action mean in (-1, 1).
    pub mean: Array2<f64>,
    pub value: Array1<f64>,
    pub cache: ForwardCache,
}

/// Loss gradients with respect to the network outputs.
///
/// `d_log_std` is the direct gradient of the loss with respect to the
/// log-std parameters (they do not depend on the input).
#[derive(Debug, Clone, PartialEq)]
pub struct Upstream {
    pub d_mean: Array2<f64>,
    pub d_value: Array1<f64>,
    pub d_log_std: Array1<f64>,
}

impl Upstream {
    pub fn zeros(rows: usize, actions: usize) -> Self {
        Self {
            d_mean: Array2::zeros((rows, actions)),
            d_value: Array1::zeros(rows),
            d_log_std: Array1::zeros(actions),
        }
    }
}

fn relu_inplace(a: &mut Array2<f64>) {
    a.mapv_inplace(|v| v.max(0.0));
}

/// `h1 = relu(x·W1 + b1)`, `h2 = relu(h1·W2 + b2)`,
/// `mean = tanh(h2·W_pi + b_pi)`, `value = h2·W_v + b_v`.
pub fn forward(params: &MlpParams, obs: ArrayView2<'_, f64>) -> Result<ForwardOutput> {
    let input = params.w1.nrows();
    if obs.ncols() != input {
        return Err(Error::Shape(format!(
            "observation rows have length {}, network expects {input}",
            obs.ncols()
        )));
    }
    let mut h1 = obs.dot(&params.w1);
    h1 += &params.b1;
    relu_inplace(&mut h1);
    let mut h2 = h1.dot(&params.w2);
    h2 += &params.b2;
    relu_inplace(&mut h2);
    let mut mean = h2.dot(&params.w_pi);
    mean += &params.b_pi;
    mean.mapv_inplace(f64::tanh);
    let mut value2 = h2.dot(&params.w_v);
    value2 += &params.b_v;
    let value = value2.column(0).to_owned();
    Ok(ForwardOutput {
        mean: mean.clone(),
        value,
        cache: ForwardCache { h1, h2, mean },
    })
}

/// Reverse-mode gradients of a scalar loss for every parameter group.
pub fn backward(
    params: &MlpParams,
    cache: &ForwardCache,
    obs: ArrayView2<'_, f64>,
    upstream: &Upstream,
) -> Result<MlpParams> {
    let rows = obs.nrows();
    let shape = params.shape();
    if cache.h1.nrows() != rows
        || cache.h1.ncols() != shape.hidden1
        || cache.h2.ncols() != shape.hidden2
        || obs.ncols() != shape.input
    {
        return Err(Error::Usage(format!(
            "forward cache ({} rows, hidden {}x{}) does not match a batch of {rows}x{} for this network",
            cache.h1.nrows(),
            cache.h1.ncols(),
            cache.h2.ncols(),
            obs.ncols()
        )));
    }
    if upstream.d_mean.dim() != (rows, shape.actions)
        || upstream.d_value.len() != rows
        || upstream.d_log_std.len() != shape.actions
    {
        return Err(Error::Shape("upstream gradients do not match the batch".into()));
    }

    // tanh' = 1 - mean²
    let d_pre_pi = &upstream.d_mean * &cache.mean.mapv(|m| 1.0 - m * m);
    let d_v = upstream.d_value.view().insert_axis(Axis(1));

    let mut g = params.zeros_like();
    g.w_pi = cache.h2.t().dot(&d_pre_pi);
    g.b_pi = d_pre_pi.sum_axis(Axis(0));
    g.w_v = cache.h2.t().dot(&d_v);
    g.b_v = Array1::from_elem(1, upstream.d_value.sum());

    let mut dz2 = d_pre_pi.dot(&params.w_pi.t()) + d_v.dot(&params.w_v.t());
    ndarray::Zip::from(&mut dz2).and(&cache.h2).for_each(|d, &h| {
        if h <= 0.0 {
            *d = 0.0;
        }
    });
    g.w2 = cache.h1.t().dot(&dz2);
    g.b2 = dz2.sum_axis(Axis(0));

    let mut dz1 = dz2.dot(&params.w2.t());
    ndarray::Zip::from(&mut dz1).and(&cache.h1).for_each(|d, &h| {
        if h <= 0.0 {
            *d = 0.0;
        }
    });
    g.w1 = obs.t().dot(&dz1);
    g.b1 = dz1.sum_axis(Axis(0));
    g.log_std = upstream.d_log_std.clone();
    Ok(g)
}
