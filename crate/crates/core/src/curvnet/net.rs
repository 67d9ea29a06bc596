use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use rand::Rng;

use super::layers::{
    conv_backward_cols, conv_forward_cols, fc_backward_raw, fc_forward_raw, im2col, pool_backward, pool_forward,
    relu_inplace, relu_mask, ConvDims,
};
use super::{CurvNetError, Loss, Tensor};

pub const INPUT_CHANNELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Small,
    Large,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Small => "small",
            Variant::Large => "large",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    pub variant: Variant,
    pub conv_channels: Vec<usize>,
    pub conv_kernels: Vec<usize>,
    pub embedding_dim: usize,
    /// `(height, width)`; the input always has 3 channels.
    pub input_size: (usize, usize),
    pub loss: Loss,
}

impl NetConfig {
    pub fn small() -> Self {
        NetConfig {
            variant: Variant::Small,
            conv_channels: vec![32, 64, 64],
            conv_kernels: vec![5, 3, 4],
            embedding_dim: 64,
            input_size: (60, 60),
            loss: Loss::DEFAULT_HUBER,
        }
    }

    pub fn large() -> Self {
        NetConfig {
            variant: Variant::Large,
            conv_channels: vec![32, 64, 128],
            conv_kernels: vec![5, 3, 3],
            embedding_dim: 128,
            input_size: (64, 64),
            loss: Loss::DEFAULT_HUBER,
        }
    }

    pub fn for_variant(variant: Variant) -> Self {
        match variant {
            Variant::Small => Self::small(),
            Variant::Large => Self::large(),
        }
    }

    pub fn with_loss(mut self, loss: Loss) -> Self {
        self.loss = loss;
        self
    }

    /// The layer stack must be exactly the one its variant names.
    pub fn validate(&self) -> Result<(), CurvNetError> {
        let reference = Self::for_variant(self.variant);
        if self.conv_channels != reference.conv_channels
            || self.conv_kernels != reference.conv_kernels
            || self.embedding_dim != reference.embedding_dim
            || self.input_size != reference.input_size
        {
            return Err(CurvNetError::Config("layer sizes do not match the variant"));
        }
        if let Loss::Huber { delta } = self.loss {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(CurvNetError::Config("huber delta must be positive"));
            }
        }
        Plan::new(self).map(|_| ())
    }
}

/// Parameter offsets and feature-map sizes derived from a config.
#[derive(Debug, Clone, PartialEq)]
struct Plan {
    convs: Vec<ConvStage>,
    flat: usize,
    fc1: (usize, usize),
    fc2: (usize, usize),
    total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ConvStage {
    dims: ConvDims,
    w_off: usize,
    b_off: usize,
}

impl ConvStage {
    fn pooled(&self) -> (usize, usize, usize) {
        (self.dims.out_c, self.dims.out_h() / 2, self.dims.out_w() / 2)
    }
}

impl Plan {
    fn new(cfg: &NetConfig) -> Result<Plan, CurvNetError> {
        if cfg.conv_channels.len() != cfg.conv_kernels.len() || cfg.conv_channels.is_empty() {
            return Err(CurvNetError::Config("conv channel and kernel lists differ in length"));
        }
        let (mut c, mut h, mut w) = (INPUT_CHANNELS, cfg.input_size.0, cfg.input_size.1);
        let mut off = 0;
        let mut convs = Vec::new();
        for (&oc, &k) in cfg.conv_channels.iter().zip(&cfg.conv_kernels) {
            if k == 0 || h < k || w < k || oc == 0 {
                return Err(CurvNetError::Config("feature map smaller than the kernel"));
            }
            let dims = ConvDims { in_c: c, in_h: h, in_w: w, out_c: oc, k };
            let w_off = off;
            let b_off = w_off + oc * dims.patch();
            off = b_off + oc;
            let stage = ConvStage { dims, w_off, b_off };
            (c, h, w) = stage.pooled();
            if h == 0 || w == 0 {
                return Err(CurvNetError::Config("feature map vanishes after pooling"));
            }
            convs.push(stage);
        }
        let flat = c * h * w;
        let e = cfg.embedding_dim;
        if e == 0 {
            return Err(CurvNetError::Config("embedding dimension must be positive"));
        }
        let fc1 = (off, off + e * flat);
        off = fc1.1 + e;
        let fc2 = (off, off + e);
        off = fc2.1 + 1;
        Ok(Plan { convs, flat, fc1, fc2, total: off })
    }
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    cols: Vec<Vec<f64>>,
    conv_out: Vec<Vec<f64>>,
    pooled: Vec<Vec<f64>>,
    argmax: Vec<Vec<usize>>,
    grad_a: Vec<f64>,
    grad_b: Vec<f64>,
    scratch: Vec<f64>,
    embedding: Vec<f64>,
    grad_embedding: Vec<f64>,
    grad_flat: Vec<f64>,
}

impl Workspace {
    fn new(plan: &Plan, embedding: usize) -> Self {
        let biggest = plan.convs.iter().map(|s| s.dims.out_len().max(s.dims.in_c * s.dims.in_h * s.dims.in_w)).max();
        let biggest = biggest.unwrap_or(0);
        Workspace {
            cols: plan.convs.iter().map(|s| vec![0.0; s.dims.cols_len()]).collect(),
            conv_out: plan.convs.iter().map(|s| vec![0.0; s.dims.out_len()]).collect(),
            pooled: plan
                .convs
                .iter()
                .map(|s| vec![0.0; s.dims.out_c * (s.dims.out_h() / 2) * (s.dims.out_w() / 2)])
                .collect(),
            argmax: plan
                .convs
                .iter()
                .map(|s| vec![0; s.dims.out_c * (s.dims.out_h() / 2) * (s.dims.out_w() / 2)])
                .collect(),
            grad_a: vec![0.0; biggest],
            grad_b: vec![0.0; biggest],
            scratch: vec![0.0; plan.convs.iter().map(|s| s.dims.cols_len()).max().unwrap_or(0)],
            embedding: vec![0.0; embedding],
            grad_embedding: vec![0.0; embedding],
            grad_flat: vec![0.0; plan.flat],
        }
    }
}

/// Three conv → ReLU → 2×2 max-pool stages, flatten, a ReLU embedding layer
/// and a scalar output. Parameters live in one flat vector in layer order
/// (each layer: weights, then biases).
#[derive(Debug, Clone, PartialEq)]
pub struct CurvNet {
    config: NetConfig,
    plan: Plan,
    params: Vec<f64>,
}

/// Number of trainable parameters the config implies.
pub fn parameter_count(config: &NetConfig) -> Result<usize, CurvNetError> {
    Ok(Plan::new(config)?.total)
}

/// Fresh network: He-uniform weights, zero biases.
pub fn build_net<R: Rng + ?Sized>(config: &NetConfig, rng: &mut R) -> Result<CurvNet, CurvNetError> {
    config.validate()?;
    let plan = Plan::new(config)?;
    let mut params = vec![0.0; plan.total];
    let mut fill = |range: core::ops::Range<usize>, fan_in: usize| {
        let limit = (6.0 / fan_in as f64).sqrt();
        for p in &mut params[range] {
            *p = rng.random_range(-limit..limit);
        }
    };
    for s in &plan.convs {
        fill(s.w_off..s.b_off, s.dims.patch());
    }
    fill(plan.fc1.0..plan.fc1.1, plan.flat);
    fill(plan.fc2.0..plan.fc2.1, config.embedding_dim);
    Ok(CurvNet { config: config.clone(), plan, params })
}

impl CurvNet {
    /// Network with the given parameters, e.g. read back from a model file.
    pub fn from_parameters(config: &NetConfig, params: Vec<f64>) -> Result<CurvNet, CurvNetError> {
        config.validate()?;
        let plan = Plan::new(config)?;
        if params.len() != plan.total {
            return Err(CurvNetError::Config("parameter count does not match the config"));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(CurvNetError::NonFinite);
        }
        Ok(CurvNet { config: config.clone(), plan, params })
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Size of the flattened feature vector fed to the embedding layer.
    pub fn flatten_len(&self) -> usize {
        self.plan.flat
    }

    /// `(channels, height, width)` after each conv+pool stage.
    pub fn feature_shapes(&self) -> Vec<(usize, usize, usize)> {
        self.plan.convs.iter().map(|s| s.pooled()).collect()
    }

    /// Range of the final layer's weights and bias within [`Self::parameters`].
    pub fn output_layer(&self) -> core::ops::Range<usize> {
        self.plan.fc2.0..self.plan.total
    }

    pub(crate) fn workspace(&self) -> Workspace {
        Workspace::new(&self.plan, self.config.embedding_dim)
    }

    fn check_input(&self, input: &Tensor) -> Result<(), CurvNetError> {
        let (h, w) = self.config.input_size;
        if input.shape[..] != [INPUT_CHANNELS, h, w] {
            return Err(CurvNetError::Shape("input does not match the network input size"));
        }
        Ok(())
    }

    pub fn forward(&self, input: &Tensor) -> Result<f64, CurvNetError> {
        self.check_input(input)?;
        let mut ws = self.workspace();
        Ok(self.forward_ws(&input.data, &mut ws))
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, input: &Tensor, target: f64) -> Result<(f64, Vec<f64>), CurvNetError> {
        self.check_input(input)?;
        let mut ws = self.workspace();
        let pred = self.forward_ws(&input.data, &mut ws);
        let (loss, dpred) = self.config.loss.eval(pred, target);
        let mut grads = vec![0.0; self.params.len()];
        self.backward_ws(&input.data, &mut ws, dpred, &mut grads);
        Ok((loss, grads))
    }

    pub(crate) fn forward_ws(&self, input: &[f64], ws: &mut Workspace) -> f64 {
        let p = &self.params;
        for (i, s) in self.plan.convs.iter().enumerate() {
            let src: &[f64] = if i == 0 { input } else { &ws.pooled[i - 1] };
            im2col(src, &s.dims, &mut ws.cols[i]);
            conv_forward_cols(
                &ws.cols[i],
                &p[s.w_off..s.b_off],
                &p[s.b_off..s.b_off + s.dims.out_c],
                &s.dims,
                &mut ws.conv_out[i],
            );
            relu_inplace(&mut ws.conv_out[i]);
            let d = &s.dims;
            pool_forward(&ws.conv_out[i], d.out_c, d.out_h(), d.out_w(), &mut ws.pooled[i], &mut ws.argmax[i]);
        }
        let flat = ws.pooled.last().map(|v| v.as_slice()).unwrap_or(input);
        let (w1, b1) = self.plan.fc1;
        fc_forward_raw(flat, &p[w1..b1], &p[b1..b1 + self.config.embedding_dim], &mut ws.embedding);
        relu_inplace(&mut ws.embedding);
        let (w2, b2) = self.plan.fc2;
        let mut out = [0.0];
        fc_forward_raw(&ws.embedding, &p[w2..b2], &p[b2..b2 + 1], &mut out);
        out[0]
    }

    /// Accumulates `dpred · d pred / d params` into `grads`.
    pub(crate) fn backward_ws(&self, input: &[f64], ws: &mut Workspace, dpred: f64, grads: &mut [f64]) {
        let p = &self.params;
        let e = self.config.embedding_dim;
        let (w2, b2) = self.plan.fc2;
        {
            let (gw, gb) = grads[w2..].split_at_mut(b2 - w2);
            fc_backward_raw(&ws.embedding, &p[w2..b2], &[dpred], gw, &mut gb[..1], Some(&mut ws.grad_embedding));
        }
        relu_mask(&ws.embedding, &mut ws.grad_embedding);
        let (w1, b1) = self.plan.fc1;
        let n = self.plan.convs.len();
        {
            let flat = ws.pooled.last().map(|v| v.as_slice()).unwrap_or(input);
            let (gw, gb) = grads[w1..].split_at_mut(b1 - w1);
            fc_backward_raw(flat, &p[w1..b1], &ws.grad_embedding, gw, &mut gb[..e], Some(&mut ws.grad_flat));
        }
        // grad_a holds the gradient w.r.t. the current stage's pooled output
        ws.grad_a[..self.plan.flat].copy_from_slice(&ws.grad_flat);
        for i in (0..n).rev() {
            let s = &self.plan.convs[i];
            let d = &s.dims;
            let out_len = d.out_len();
            pool_backward(&ws.grad_a[..ws.argmax[i].len()], &ws.argmax[i], &mut ws.grad_b[..out_len]);
            relu_mask(&ws.conv_out[i], &mut ws.grad_b[..out_len]);
            let (gw, gb) = grads[s.w_off..].split_at_mut(s.b_off - s.w_off);
            let in_len = d.in_c * d.in_h * d.in_w;
            let grad_in = if i > 0 { Some((&mut ws.grad_a[..in_len], &mut ws.scratch[..d.cols_len()])) } else { None };
            conv_backward_cols(
                &ws.cols[i],
                &p[s.w_off..s.b_off],
                &ws.grad_b[..out_len],
                d,
                gw,
                &mut gb[..d.out_c],
                grad_in,
            );
        }
    }
}
