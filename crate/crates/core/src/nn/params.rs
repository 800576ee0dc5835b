use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Parameter groups in storage and checkpoint order.
pub const PARAM_NAMES: [&str; 9] = ["W1", "b1", "W2", "b2", "W_pi", "b_pi", "W_v", "b_v", "log_std"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    pub input: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub actions: usize,
}

impl Default for MlpShape {
    fn default() -> Self {
        Self {
            input: 2048,
            hidden1: 256,
            hidden2: 256,
            actions: 2,
        }
    }
}

impl MlpShape {
    /// Expected dimensions of each group, in [`PARAM_NAMES`] order.
    pub fn dims(&self) -> [Vec<usize>; 9] {
        let Self {
            input,
            hidden1,
            hidden2,
            actions,
        } = *self;
        [
            vec![input, hidden1],
            vec![hidden1],
            vec![hidden1, hidden2],
            vec![hidden2],
            vec![hidden2, actions],
            vec![actions],
            vec![hidden2, 1],
            vec![1],
            vec![actions],
        ]
    }

    pub fn n_params(&self) -> usize {
        self.dims().iter().map(|d| d.iter().product::<usize>()).sum()
    }
}

/// All trainable parameters. Gradients and Adam moments reuse this type.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w_pi: Array2<f64>,
    pub b_pi: Array1<f64>,
    pub w_v: Array2<f64>,
    pub b_v: Array1<f64>,
    /// State-independent log standard deviation of the action distribution.
    pub log_std: Array1<f64>,
}

fn glorot<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((fan_in, fan_out), || rng.gen_range(-bound..=bound))
}

impl MlpParams {
    pub fn zeros(shape: MlpShape) -> Self {
        let MlpShape {
            input,
            hidden1,
            hidden2,
            actions,
        } = shape;
        Self {
            w1: Array2::zeros((input, hidden1)),
            b1: Array1::zeros(hidden1),
            w2: Array2::zeros((hidden1, hidden2)),
            b2: Array1::zeros(hidden2),
            w_pi: Array2::zeros((hidden2, actions)),
            b_pi: Array1::zeros(actions),
            w_v: Array2::zeros((hidden2, 1)),
            b_v: Array1::zeros(1),
            log_std: Array1::zeros(actions),
        }
    }

    /// Uniform weights with bound `sqrt(6 / (fan_in + fan_out))`, zero biases, zero log-std.
    pub fn init(shape: MlpShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(shape);
        p.w1 = glorot(&mut rng, shape.input, shape.hidden1);
        p.w2 = glorot(&mut rng, shape.hidden1, shape.hidden2);
        p.w_pi = glorot(&mut rng, shape.hidden2, shape.actions);
        p.w_v = glorot(&mut rng, shape.hidden2, 1);
        p
    }

    pub fn shape(&self) -> MlpShape {
        MlpShape {
            input: self.w1.nrows(),
            hidden1: self.w1.ncols(),
            hidden2: self.w2.ncols(),
            actions: self.w_pi.ncols(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.shape())
    }

    /// Flat views of every group in [`PARAM_NAMES`] order.
    pub fn groups(&self) -> [(&'static str, &[f64]); 9] {
        fn s(a: Option<&[f64]>) -> &[f64] {
            a.expect("parameters are stored contiguously")
        }
        [
            (PARAM_NAMES[0], s(self.w1.as_slice())),
            (PARAM_NAMES[1], s(self.b1.as_slice())),
            (PARAM_NAMES[2], s(self.w2.as_slice())),
            (PARAM_NAMES[3], s(self.b2.as_slice())),
            (PARAM_NAMES[4], s(self.w_pi.as_slice())),
            (PARAM_NAMES[5], s(self.b_pi.as_slice())),
            (PARAM_NAMES[6], s(self.w_v.as_slice())),
            (PARAM_NAMES[7], s(self.b_v.as_slice())),
            (PARAM_NAMES[8], s(self.log_std.as_slice())),
        ]
    }

    pub fn groups_mut(&mut self) -> [(&'static str, &mut [f64]); 9] {
        fn s(a: Option<&mut [f64]>) -> &mut [f64] {
            a.expect("parameters are stored contiguously")
        }
        [
            (PARAM_NAMES[0], s(self.w1.as_slice_mut())),
            (PARAM_NAMES[1], s(self.b1.as_slice_mut())),
            (PARAM_NAMES[2], s(self.w2.as_slice_mut())),
            (PARAM_NAMES[3], s(self.b2.as_slice_mut())),
            (PARAM_NAMES[4], s(self.w_pi.as_slice_mut())),
            (PARAM_NAMES[5], s(self.b_pi.as_slice_mut())),
            (PARAM_NAMES[6], s(self.w_v.as_slice_mut())),
            (PARAM_NAMES[7], s(self.b_v.as_slice_mut())),
            (PARAM_NAMES[8], s(self.log_std.as_slice_mut())),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.groups().iter().all(|(_, g)| g.iter().all(|v| v.is_finite()))
    }
}
