use super::scalar::{gemm, MatRef};
use super::Scalar;
use crate::activations::{ActivationKind, ActivationSpec};
use crate::error::{Error, Result};

/// One stage of a [`super::Model`]. Shapes below are per sample; a batch
/// dimension is prepended at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// `[inputs] -> [outputs]`, weight `[outputs, inputs]`, bias `[outputs]`.
    Affine { inputs: usize, outputs: usize },
    /// `[c, h, w] -> [out_channels, h', w']`, weight `[out, in, k, k]`, bias `[out]`.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    /// Elementwise. PReLU carries one trainable slope, initialised from the `ActivationSpec`.
    Activation(ActivationSpec),
    Flatten,
    /// Non-overlapping `size x size` max pooling; trailing rows/columns that do
    /// not fill a window are dropped.
    MaxPool { size: usize },
}

impl Layer {
    pub fn conv3x3(in_channels: usize, out_channels: usize) -> Self {
        Layer::Conv2d {
            in_channels,
            out_channels,
            kernel: 3,
            stride: 1,
            padding: 1,
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let mismatch = |expected: Vec<usize>| Error::ShapeMismatch {
            expected,
            actual: input.to_vec(),
        };
        match *self {
            Layer::Affine { inputs, outputs } => {
                if input != [inputs] {
                    return Err(mismatch(vec![inputs]));
                }
                Ok(vec![outputs])
            }
            Layer::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => {
                let [c, h, w] = *input else {
                    return Err(mismatch(vec![in_channels, 0, 0]));
                };
                if c != in_channels || stride == 0 || kernel == 0 {
                    return Err(mismatch(vec![in_channels, h, w]));
                }
                let (oh, ow) = conv_out(h, w, kernel, stride, padding)
                    .ok_or_else(|| mismatch(vec![in_channels, kernel, kernel]))?;
                Ok(vec![out_channels, oh, ow])
            }
            Layer::Activation(_) => Ok(input.to_vec()),
            Layer::Flatten => Ok(vec![input.iter().product()]),
            Layer::MaxPool { size } => {
                let [c, h, w] = *input else {
                    return Err(mismatch(vec![0, size, size]));
                };
                if size == 0 || h < size || w < size {
                    return Err(mismatch(vec![c, size, size]));
                }
                Ok(vec![c, h / size, w / size])
            }
        }
    }

    /// Shapes of the parameter tensors, in declaration order.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            Layer::Affine { inputs, outputs } => vec![vec![outputs, inputs], vec![outputs]],
            Layer::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => vec![
                vec![out_channels, in_channels, kernel, kernel],
                vec![out_channels],
            ],
            Layer::Activation(spec) if spec.kind == ActivationKind::Prelu => vec![vec![1]],
            _ => Vec::new(),
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            Layer::Affine { .. } | Layer::Conv2d { .. } => &["weight", "bias"],
            Layer::Activation(spec) if spec.kind == ActivationKind::Prelu => &["slope"],
            _ => &[],
        }
    }

    pub(crate) fn fan_in(&self) -> usize {
        match *self {
            Layer::Affine { inputs, .. } => inputs,
            Layer::Conv2d {
                in_channels, kernel, ..
            } => in_channels * kernel * kernel,
            _ => 0,
        }
    }

    pub fn kind_name(&self) -> String {
        match self {
            Layer::Affine { inputs, outputs } => format!("affine({inputs}->{outputs})"),
            Layer::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
            } => format!("conv{kernel}x{kernel}({in_channels}->{out_channels}, s{stride}, p{padding})"),
            Layer::Activation(spec) => spec.to_string(),
            Layer::Flatten => "flatten".to_string(),
            Layer::MaxPool { size } => format!("maxpool{size}"),
        }
    }
}

fn conv_out(h: usize, w: usize, k: usize, s: usize, p: usize) -> Option<(usize, usize)> {
    let hp = h + 2 * p;
    let wp = w + 2 * p;
    if hp < k || wp < k {
        return None;
    }
    Some(((hp - k) / s + 1, (wp - k) / s + 1))
}

/// Geometry of one convolution, shared by forward and backward.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvGeometry {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub oh: usize,
    pub ow: usize,
}

impl ConvGeometry {
    pub(crate) fn new(in_shape: &[usize], k: usize, stride: usize, pad: usize) -> Self {
        let (c, h, w) = (in_shape[0], in_shape[1], in_shape[2]);
        let (oh, ow) = conv_out(h, w, k, stride, pad).expect("validated at model construction");
        ConvGeometry {
            c,
            h,
            w,
            k,
            stride,
            pad,
            oh,
            ow,
        }
    }

    pub(crate) fn patch_len(&self) -> usize {
        self.c * self.k * self.k
    }

    pub(crate) fn positions(&self) -> usize {
        self.oh * self.ow
    }

    /// Source pixel for patch row `(c, ki, kj)` at output `(oy, ox)`, if inside the image.
    #[inline]
    fn source(&self, ki: usize, kj: usize, oy: usize, ox: usize) -> Option<(usize, usize)> {
        let y = (oy * self.stride + ki).checked_sub(self.pad)?;
        let x = (ox * self.stride + kj).checked_sub(self.pad)?;
        (y < self.h && x < self.w).then_some((y, x))
    }

    /// Unfolds one image `[c, h, w]` into `cols` `[c*k*k, oh*ow]`.
    pub(crate) fn im2col<T: Scalar>(&self, image: &[T], cols: &mut [T]) {
        let p = self.positions();
        for c in 0..self.c {
            for ki in 0..self.k {
                for kj in 0..self.k {
                    let row = (c * self.k + ki) * self.k + kj;
                    let out = &mut cols[row * p..(row + 1) * p];
                    for oy in 0..self.oh {
                        for ox in 0..self.ow {
                            out[oy * self.ow + ox] = match self.source(ki, kj, oy, ox) {
                                Some((y, x)) => image[(c * self.h + y) * self.w + x],
                                None => T::zero(),
                            };
                        }
                    }
                }
            }
        }
    }

    /// Adjoint of [`Self::im2col`]: accumulates `cols` back into `image`.
    pub(crate) fn col2im<T: Scalar>(&self, cols: &[T], image: &mut [T]) {
        let p = self.positions();
        for c in 0..self.c {
            for ki in 0..self.k {
                for kj in 0..self.k {
                    let row = (c * self.k + ki) * self.k + kj;
                    let src = &cols[row * p..(row + 1) * p];
                    for oy in 0..self.oh {
                        for ox in 0..self.ow {
                            if let Some((y, x)) = self.source(ki, kj, oy, ox) {
                                let idx = (c * self.h + y) * self.w + x;
                                image[idx] = image[idx] + src[oy * self.ow + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// `y[b] = W x[b] + bias` for a batch of row vectors.
pub(crate) fn affine_forward<T: Scalar>(
    x: &[T],
    batch: usize,
    weight: &[T],
    bias: &[T],
    inputs: usize,
    outputs: usize,
) -> Vec<T> {
    let mut y = Vec::with_capacity(batch * outputs);
    for _ in 0..batch {
        y.extend_from_slice(bias);
    }
    gemm(
        T::one(),
        MatRef::row_major(x, batch, inputs),
        MatRef::row_major(weight, outputs, inputs).t(),
        T::one(),
        &mut y,
    );
    y
}

/// Returns `(dx, dW, db)`; `dx` is skipped when not needed.
pub(crate) fn affine_backward<T: Scalar>(
    x: &[T],
    dy: &[T],
    batch: usize,
    weight: &[T],
    inputs: usize,
    outputs: usize,
    need_dx: bool,
) -> (Option<Vec<T>>, Vec<T>, Vec<T>) {
    let mut dw = vec![T::zero(); outputs * inputs];
    gemm(
        T::one(),
        MatRef::row_major(dy, batch, outputs).t(),
        MatRef::row_major(x, batch, inputs),
        T::zero(),
        &mut dw,
    );
    let mut db = vec![T::zero(); outputs];
    for row in dy.chunks_exact(outputs) {
        for (acc, &g) in db.iter_mut().zip(row) {
            *acc = *acc + g;
        }
    }
    let dx = need_dx.then(|| {
        let mut dx = vec![T::zero(); batch * inputs];
        gemm(
            T::one(),
            MatRef::row_major(dy, batch, outputs),
            MatRef::row_major(weight, outputs, inputs),
            T::zero(),
            &mut dx,
        );
        dx
    });
    (dx, dw, db)
}

/// Forward convolution over a batch. Returns the output and the unfolded
/// columns of every sample, which backward reuses.
pub(crate) fn conv_forward<T: Scalar>(
    x: &[T],
    batch: usize,
    geo: &ConvGeometry,
    weight: &[T],
    bias: &[T],
    out_channels: usize,
) -> (Vec<T>, Vec<T>) {
    let in_len = geo.c * geo.h * geo.w;
    let kk = geo.patch_len();
    let p = geo.positions();
    let mut cols = vec![T::zero(); batch * kk * p];
    let mut y = vec![T::zero(); batch * out_channels * p];
    for b in 0..batch {
        let col = &mut cols[b * kk * p..(b + 1) * kk * p];
        geo.im2col(&x[b * in_len..(b + 1) * in_len], col);
        let out = &mut y[b * out_channels * p..(b + 1) * out_channels * p];
        for (oc, chunk) in out.chunks_exact_mut(p).enumerate() {
            chunk.fill(bias[oc]);
        }
        gemm(
            T::one(),
            MatRef::row_major(weight, out_channels, kk),
            MatRef::row_major(col, kk, p),
            T::one(),
            out,
        );
    }
    (y, cols)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward<T: Scalar>(
    cols: &[T],
    dy: &[T],
    batch: usize,
    geo: &ConvGeometry,
    weight: &[T],
    out_channels: usize,
    need_dx: bool,
) -> (Option<Vec<T>>, Vec<T>, Vec<T>) {
    let in_len = geo.c * geo.h * geo.w;
    let kk = geo.patch_len();
    let p = geo.positions();
    let mut dw = vec![T::zero(); out_channels * kk];
    let mut db = vec![T::zero(); out_channels];
    let mut dx = need_dx.then(|| vec![T::zero(); batch * in_len]);
    let mut dcols = vec![T::zero(); kk * p];
    for b in 0..batch {
        let g = &dy[b * out_channels * p..(b + 1) * out_channels * p];
        let col = &cols[b * kk * p..(b + 1) * kk * p];
        gemm(
            T::one(),
            MatRef::row_major(g, out_channels, p),
            MatRef::row_major(col, kk, p).t(),
            T::one(),
            &mut dw,
        );
        for (acc, chunk) in db.iter_mut().zip(g.chunks_exact(p)) {
            *acc = chunk.iter().fold(*acc, |s, &v| s + v);
        }
        if let Some(dx) = dx.as_mut() {
            gemm(
                T::one(),
                MatRef::row_major(weight, out_channels, kk).t(),
                MatRef::row_major(g, out_channels, p),
                T::zero(),
                &mut dcols,
            );
            geo.col2im(&dcols, &mut dx[b * in_len..(b + 1) * in_len]);
        }
    }
    (dx, dw, db)
}

/// Max pooling; returns the output and, per output element, the flat index of
/// the winning input element. Ties go to the first element in scan order.
pub(crate) fn maxpool_forward<T: Scalar>(
    x: &[T],
    batch: usize,
    in_shape: &[usize],
    size: usize,
) -> (Vec<T>, Vec<usize>) {
    let (c, h, w) = (in_shape[0], in_shape[1], in_shape[2]);
    let (oh, ow) = (h / size, w / size);
    let mut y = Vec::with_capacity(batch * c * oh * ow);
    let mut arg = Vec::with_capacity(y.capacity());
    for plane in 0..batch * c {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = base + (oy * size) * w + ox * size;
                for dy in 0..size {
                    for dx in 0..size {
                        let idx = base + (oy * size + dy) * w + ox * size + dx;
                        if x[idx] > x[best] {
                            best = idx;
                        }
                    }
                }
                y.push(x[best]);
                arg.push(best);
            }
        }
    }
    (y, arg)
}

pub(crate) fn maxpool_backward<T: Scalar>(dy: &[T], argmax: &[usize], input_len: usize) -> Vec<T> {
    let mut dx = vec![T::zero(); input_len];
    for (&g, &idx) in dy.iter().zip(argmax) {
        dx[idx] = dx[idx] + g;
    }
    dx
}
