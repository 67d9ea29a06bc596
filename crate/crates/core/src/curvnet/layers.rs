//! Layer kernels. The slice-level functions are what the network runs; the
//! [`Tensor`] wrappers check shapes and are the public, testable surface.

use alloc::vec;
use alloc::vec::Vec;

use super::{CurvNetError, Tensor};

/// Row-major `c = op(a)·op(b) + beta·c` with `op(a)` m×k and `op(b)` k×n.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(m: usize, k: usize, n: usize, a: &[f64], a_t: bool, b: &[f64], b_t: bool, c: &mut [f64], beta: f64) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the length assertion above covers every index the strides reach.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Geometry of one valid-padding, stride-1 convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConvDims {
    pub in_c: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_c: usize,
    pub k: usize,
}

impl ConvDims {
    pub fn out_h(&self) -> usize {
        self.in_h + 1 - self.k
    }

    pub fn out_w(&self) -> usize {
        self.in_w + 1 - self.k
    }

    pub fn patch(&self) -> usize {
        self.in_c * self.k * self.k
    }

    pub fn out_len(&self) -> usize {
        self.out_c * self.out_h() * self.out_w()
    }

    pub fn cols_len(&self) -> usize {
        self.patch() * self.out_h() * self.out_w()
    }
}

/// Unfold every k×k patch into a column: `cols` is `(c·k·k) × (oh·ow)`.
pub(crate) fn im2col(input: &[f64], d: &ConvDims, cols: &mut [f64]) {
    let (oh, ow) = (d.out_h(), d.out_w());
    let plane = oh * ow;
    for ci in 0..d.in_c {
        for ky in 0..d.k {
            for kx in 0..d.k {
                let row = (ci * d.k + ky) * d.k + kx;
                let dst = &mut cols[row * plane..(row + 1) * plane];
                for oy in 0..oh {
                    let src = (ci * d.in_h + oy + ky) * d.in_w + kx;
                    dst[oy * ow..(oy + 1) * ow].copy_from_slice(&input[src..src + ow]);
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-add columns back into an image.
pub(crate) fn col2im(cols: &[f64], d: &ConvDims, out: &mut [f64]) {
    let (oh, ow) = (d.out_h(), d.out_w());
    let plane = oh * ow;
    out.iter_mut().for_each(|v| *v = 0.0);
    for ci in 0..d.in_c {
        for ky in 0..d.k {
            for kx in 0..d.k {
                let row = (ci * d.k + ky) * d.k + kx;
                let src = &cols[row * plane..(row + 1) * plane];
                for oy in 0..oh {
                    let base = (ci * d.in_h + oy + ky) * d.in_w + kx;
                    for (o, s) in out[base..base + ow].iter_mut().zip(&src[oy * ow..(oy + 1) * ow]) {
                        *o += s;
                    }
                }
            }
        }
    }
}

/// `out = W·cols + b`, with `cols` already filled by [`im2col`].
pub(crate) fn conv_forward_cols(cols: &[f64], weights: &[f64], bias: &[f64], d: &ConvDims, out: &mut [f64]) {
    let plane = d.out_h() * d.out_w();
    gemm(d.out_c, d.patch(), plane, weights, false, cols, false, out, 0.0);
    for (o, b) in bias.iter().enumerate() {
        out[o * plane..(o + 1) * plane].iter_mut().for_each(|v| *v += b);
    }
}

/// Accumulates weight and bias gradients; writes the input gradient when
/// asked (`scratch` must hold `cols_len` values).
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward_cols(
    cols: &[f64],
    weights: &[f64],
    grad_out: &[f64],
    d: &ConvDims,
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    grad_in: Option<(&mut [f64], &mut [f64])>,
) {
    let plane = d.out_h() * d.out_w();
    gemm(d.out_c, plane, d.patch(), grad_out, false, cols, true, grad_w, 1.0);
    for (o, gb) in grad_b.iter_mut().enumerate() {
        *gb += grad_out[o * plane..(o + 1) * plane].iter().sum::<f64>();
    }
    if let Some((gin, scratch)) = grad_in {
        gemm(d.patch(), d.out_c, plane, weights, true, grad_out, false, scratch, 0.0);
        col2im(scratch, d, gin);
    }
}

/// 2×2 max pooling, stride 2; odd trailing rows/columns are dropped.
/// `argmax` receives the flat input index chosen for each output (the first
/// maximum in row-major order within the cell).
pub(crate) fn pool_forward(input: &[f64], c: usize, h: usize, w: usize, out: &mut [f64], argmax: &mut [usize]) {
    let (oh, ow) = (h / 2, w / 2);
    for ci in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = (ci * h + 2 * oy) * w + 2 * ox;
                for idx in [best + 1, best + w, best + w + 1] {
                    if input[idx] > input[best] {
                        best = idx;
                    }
                }
                let o = (ci * oh + oy) * ow + ox;
                out[o] = input[best];
                argmax[o] = best;
            }
        }
    }
}

pub(crate) fn pool_backward(grad_out: &[f64], argmax: &[usize], grad_in: &mut [f64]) {
    grad_in.iter_mut().for_each(|v| *v = 0.0);
    for (g, &i) in grad_out.iter().zip(argmax) {
        grad_in[i] += g;
    }
}

pub(crate) fn relu_inplace(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.max(0.0));
}

/// Zero the gradient wherever the forward output was not positive.
pub(crate) fn relu_mask(activated: &[f64], grad: &mut [f64]) {
    for (g, a) in grad.iter_mut().zip(activated) {
        if *a <= 0.0 {
            *g = 0.0;
        }
    }
}

/// `out = W·x + b` with `W` stored `(out × in)` row-major.
pub(crate) fn fc_forward_raw(x: &[f64], weights: &[f64], bias: &[f64], out: &mut [f64]) {
    let n_in = x.len();
    for (o, (y, b)) in out.iter_mut().zip(bias).enumerate() {
        *y = b + weights[o * n_in..(o + 1) * n_in].iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
    }
}

pub(crate) fn fc_backward_raw(
    x: &[f64],
    weights: &[f64],
    grad_out: &[f64],
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    grad_in: Option<&mut [f64]>,
) {
    let n_in = x.len();
    for (o, &g) in grad_out.iter().enumerate() {
        grad_b[o] += g;
        if g != 0.0 {
            for (gw, v) in grad_w[o * n_in..(o + 1) * n_in].iter_mut().zip(x) {
                *gw += g * v;
            }
        }
    }
    if let Some(gin) = grad_in {
        gin.iter_mut().for_each(|v| *v = 0.0);
        for (o, &g) in grad_out.iter().enumerate() {
            if g != 0.0 {
                for (gi, w) in gin.iter_mut().zip(&weights[o * n_in..(o + 1) * n_in]) {
                    *gi += g * w;
                }
            }
        }
    }
}

/// Gradients of a layer with respect to its input and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

fn conv_dims(input: &Tensor, weights: &Tensor) -> Result<ConvDims, CurvNetError> {
    let (c, h, w) = input.chw()?;
    let [oc, ic, kh, kw] = weights.shape[..] else {
        return Err(CurvNetError::Shape("conv weights must be (out, in, k, k)"));
    };
    if ic != c || kh != kw || kh == 0 {
        return Err(CurvNetError::Shape("conv weights do not fit the input"));
    }
    if h < kh || w < kw {
        return Err(CurvNetError::Shape("input smaller than the kernel"));
    }
    Ok(ConvDims { in_c: c, in_h: h, in_w: w, out_c: oc, k: kh })
}

/// Valid-padding, stride-1 cross-correlation.
pub fn conv2d_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor, CurvNetError> {
    let d = conv_dims(input, weights)?;
    if bias.len() != d.out_c {
        return Err(CurvNetError::Shape("conv bias length"));
    }
    let mut cols = vec![0.0; d.cols_len()];
    im2col(&input.data, &d, &mut cols);
    let mut out = vec![0.0; d.out_len()];
    conv_forward_cols(&cols, &weights.data, &bias.data, &d, &mut out);
    Ok(Tensor { shape: vec![d.out_c, d.out_h(), d.out_w()], data: out })
}

pub fn conv2d_backward(input: &Tensor, weights: &Tensor, grad_out: &Tensor) -> Result<LayerGrads, CurvNetError> {
    let d = conv_dims(input, weights)?;
    if grad_out.shape[..] != [d.out_c, d.out_h(), d.out_w()] {
        return Err(CurvNetError::Shape("conv output gradient shape"));
    }
    let mut cols = vec![0.0; d.cols_len()];
    im2col(&input.data, &d, &mut cols);
    let mut gw = vec![0.0; weights.len()];
    let mut gb = vec![0.0; d.out_c];
    let mut gin = vec![0.0; input.len()];
    let mut scratch = vec![0.0; d.cols_len()];
    conv_backward_cols(&cols, &weights.data, &grad_out.data, &d, &mut gw, &mut gb, Some((&mut gin, &mut scratch)));
    Ok(LayerGrads {
        input: Tensor { shape: input.shape.clone(), data: gin },
        weights: Tensor { shape: weights.shape.clone(), data: gw },
        bias: Tensor::vector(gb),
    })
}

/// Returns the pooled map and, per output, the flat input index it came from.
pub fn maxpool2x2_forward(input: &Tensor) -> Result<(Tensor, Vec<usize>), CurvNetError> {
    let (c, h, w) = input.chw()?;
    let len = c * (h / 2) * (w / 2);
    let mut out = vec![0.0; len];
    let mut argmax = vec![0; len];
    pool_forward(&input.data, c, h, w, &mut out, &mut argmax);
    Ok((Tensor { shape: vec![c, h / 2, w / 2], data: out }, argmax))
}

pub fn maxpool2x2_backward(grad_out: &Tensor, argmax: &[usize], input_shape: &[usize]) -> Result<Tensor, CurvNetError> {
    if grad_out.len() != argmax.len() {
        return Err(CurvNetError::Shape("pool gradient and argmax lengths differ"));
    }
    let len: usize = input_shape.iter().product();
    if argmax.iter().any(|&i| i >= len) {
        return Err(CurvNetError::Shape("argmax index outside the input"));
    }
    let mut gin = vec![0.0; len];
    pool_backward(&grad_out.data, argmax, &mut gin);
    Ok(Tensor { shape: input_shape.to_vec(), data: gin })
}

pub fn relu_forward(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    relu_inplace(&mut out.data);
    out
}

pub fn relu_backward(input: &Tensor, grad_out: &Tensor) -> Result<Tensor, CurvNetError> {
    if input.shape != grad_out.shape {
        return Err(CurvNetError::Shape("relu gradient shape"));
    }
    let data = input.data.iter().zip(&grad_out.data).map(|(x, g)| if *x > 0.0 { *g } else { 0.0 }).collect();
    Ok(Tensor { shape: input.shape.clone(), data })
}

fn fc_check(input: &Tensor, weights: &Tensor) -> Result<(usize, usize), CurvNetError> {
    let [n_out, n_in] = weights.shape[..] else {
        return Err(CurvNetError::Shape("fc weights must be (out, in)"));
    };
    if input.len() != n_in {
        return Err(CurvNetError::Shape("fc input length"));
    }
    Ok((n_out, n_in))
}

/// Fully connected layer on a vector (any input shape is read flat).
pub fn fc_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor, CurvNetError> {
    let (n_out, _) = fc_check(input, weights)?;
    if bias.len() != n_out {
        return Err(CurvNetError::Shape("fc bias length"));
    }
    let mut out = vec![0.0; n_out];
    fc_forward_raw(&input.data, &weights.data, &bias.data, &mut out);
    Ok(Tensor::vector(out))
}

pub fn fc_backward(input: &Tensor, weights: &Tensor, grad_out: &Tensor) -> Result<LayerGrads, CurvNetError> {
    let (n_out, _) = fc_check(input, weights)?;
    if grad_out.len() != n_out {
        return Err(CurvNetError::Shape("fc output gradient length"));
    }
    let mut gw = vec![0.0; weights.len()];
    let mut gb = vec![0.0; n_out];
    let mut gin = vec![0.0; input.len()];
    fc_backward_raw(&input.data, &weights.data, &grad_out.data, &mut gw, &mut gb, Some(&mut gin));
    Ok(LayerGrads {
        input: Tensor { shape: input.shape.clone(), data: gin },
        weights: Tensor { shape: weights.shape.clone(), data: gw },
        bias: Tensor::vector(gb),
    })
}
