use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layer::{self, ConvGeometry, Layer};
use super::{Scalar, Tensor};
use crate::activations::{self, ActivationKind, ActivationSpec};
use crate::error::{Error, Result};

/// Derivative used by activation layers during backward.
pub type DerivativeFn<'a> = &'a dyn Fn(&ActivationSpec, f64) -> f64;

/// Ordered layer stack with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    params: Vec<Vec<Tensor<T>>>,
}

/// Per-parameter gradients, laid out like [`Model::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub per_layer: Vec<Vec<Tensor<T>>>,
}

/// Whatever backward needs from the matching forward call.
#[derive(Debug, Clone)]
pub struct Cache<T> {
    batch: usize,
    layers: Vec<LayerCache<T>>,
}

#[derive(Debug, Clone)]
enum LayerCache<T> {
    Affine { input: Vec<T> },
    Conv { cols: Vec<T>, input_shape: Vec<usize> },
    Activation { input: Vec<T> },
    Flatten,
    MaxPool { argmax: Vec<usize>, input_len: usize },
}

impl<T: Scalar> Model<T> {
    /// Builds a model and initialises weights uniformly in `±1/sqrt(fan_in)`,
    /// biases at zero and PReLU slopes at the `ActivationSpec` `negative_slope`.
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer>, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = layers
            .iter()
            .map(|layer| init_params(layer, &mut rng))
            .collect();
        Model::from_parts(input_shape, layers, params)
    }

    /// Assembles a model from explicit parameters, validating every shape.
    pub fn from_parts(
        input_shape: Vec<usize>,
        layers: Vec<Layer>,
        params: Vec<Vec<Tensor<T>>>,
    ) -> Result<Self> {
        if params.len() != layers.len() {
            return Err(Error::CountMismatch {
                what: "parameter groups".into(),
                expected: layers.len(),
                found: params.len(),
            });
        }
        let mut shape = input_shape.clone();
        for (layer, group) in layers.iter().zip(&params) {
            if let Layer::Activation(spec) = layer {
                spec.validate()?;
            }
            shape = layer.output_shape(&shape)?;
            let expected = layer.param_shapes();
            let actual: Vec<Vec<usize>> = group.iter().map(|t| t.shape().to_vec()).collect();
            if expected != actual {
                return Err(Error::ShapeMismatch {
                    expected: expected.concat(),
                    actual: actual.concat(),
                });
            }
        }
        if shape.len() != 1 {
            return Err(Error::ShapeMismatch {
                expected: vec![shape.iter().product()],
                actual: shape,
            });
        }
        Ok(Model {
            input_shape,
            layers,
            params,
        })
    }

    /// Conv(3x3, 16) → act → pool2 → Conv(3x3, 32) → act → pool2 → flatten →
    /// Affine(128) → act → Affine(classes).
    pub fn smoke_cnn(
        channels: usize,
        height: usize,
        width: usize,
        classes: usize,
        activation: ActivationSpec,
        seed: u64,
    ) -> Result<Self> {
        let flat = 32 * (height / 2 / 2) * (width / 2 / 2);
        let layers = vec![
            Layer::conv3x3(channels, 16),
            Layer::Activation(activation),
            Layer::MaxPool { size: 2 },
            Layer::conv3x3(16, 32),
            Layer::Activation(activation),
            Layer::MaxPool { size: 2 },
            Layer::Flatten,
            Layer::Affine {
                inputs: flat,
                outputs: 128,
            },
            Layer::Activation(activation),
            Layer::Affine {
                inputs: 128,
                outputs: classes,
            },
        ];
        Model::new(vec![channels, height, width], layers, seed)
    }

    /// Fully connected network with an activation after every hidden layer.
    pub fn mlp(
        input_shape: Vec<usize>,
        hidden: &[usize],
        classes: usize,
        activation: ActivationSpec,
        seed: u64,
    ) -> Result<Self> {
        let mut layers = Vec::new();
        if input_shape.len() != 1 {
            layers.push(Layer::Flatten);
        }
        let mut width: usize = input_shape.iter().product();
        for &h in hidden {
            layers.push(Layer::Affine {
                inputs: width,
                outputs: h,
            });
            layers.push(Layer::Activation(activation));
            width = h;
        }
        layers.push(Layer::Affine {
            inputs: width,
            outputs: classes,
        });
        Model::new(input_shape, layers, seed)
    }

    /// Multinomial logistic regression: a single affine layer.
    pub fn logistic(input_shape: Vec<usize>, classes: usize, seed: u64) -> Result<Self> {
        Model::mlp(input_shape, &[], classes, ActivationSpec::new(ActivationKind::Relu), seed)
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn params(&self) -> &[Vec<Tensor<T>>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Vec<Tensor<T>>] {
        &mut self.params
    }

    pub fn num_classes(&self) -> usize {
        let mut shape = self.input_shape.clone();
        for layer in &self.layers {
            shape = layer.output_shape(&shape).expect("validated");
        }
        shape[0]
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().flatten().map(Tensor::len).sum()
    }

    /// Swaps every activation layer to `spec`, leaving all other layers and
    /// their parameters untouched. A PReLU target gets a fresh slope.
    pub fn replace_activations(&mut self, spec: ActivationSpec) -> Result<()> {
        spec.validate()?;
        for (layer, group) in self.layers.iter_mut().zip(&mut self.params) {
            if let Layer::Activation(old) = layer {
                *old = spec;
                *group = init_params(layer, &mut ChaCha8Rng::seed_from_u64(0));
            }
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> Model<U> {
        Model {
            input_shape: self.input_shape.clone(),
            layers: self.layers.clone(),
            params: self
                .params
                .iter()
                .map(|g| g.iter().map(Tensor::cast).collect())
                .collect(),
        }
    }

    fn check_batch(&self, batch: &Tensor<T>) -> Result<usize> {
        let shape = batch.shape();
        if shape.len() != self.input_shape.len() + 1 || shape[1..] != self.input_shape[..] {
            let mut expected = vec![shape.first().copied().unwrap_or(0)];
            expected.extend_from_slice(&self.input_shape);
            return Err(Error::ShapeMismatch {
                expected,
                actual: shape.to_vec(),
            });
        }
        batch.ensure_finite(|| "input batch".into())?;
        Ok(shape[0])
    }

    /// Forward pass returning logits `[batch, classes]` and the backward cache.
    pub fn forward(&self, batch: &Tensor<T>) -> Result<(Tensor<T>, Cache<T>)> {
        let (logits, cache) = self.run(batch, true)?;
        Ok((logits, cache.expect("cache requested")))
    }

    /// Forward pass without keeping intermediate values.
    pub fn predict(&self, batch: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.run(batch, false)?.0)
    }

    fn run(&self, batch: &Tensor<T>, keep: bool) -> Result<(Tensor<T>, Option<Cache<T>>)> {
        let n = self.check_batch(batch)?;
        let mut shape = self.input_shape.clone();
        let mut x = batch.data().to_vec();
        let mut caches = Vec::with_capacity(if keep { self.layers.len() } else { 0 });
        for (i, (layer, params)) in self.layers.iter().zip(&self.params).enumerate() {
            let out_shape = layer.output_shape(&shape)?;
            let (y, cache) = match *layer {
                Layer::Affine { inputs, outputs } => {
                    let y = layer::affine_forward(
                        &x,
                        n,
                        params[0].data(),
                        params[1].data(),
                        inputs,
                        outputs,
                    );
                    (y, LayerCache::Affine { input: x })
                }
                Layer::Conv2d {
                    out_channels,
                    kernel,
                    stride,
                    padding,
                    ..
                } => {
                    let geo = ConvGeometry::new(&shape, kernel, stride, padding);
                    let (y, cols) = layer::conv_forward(
                        &x,
                        n,
                        &geo,
                        params[0].data(),
                        params[1].data(),
                        out_channels,
                    );
                    let cols = if keep { cols } else { Vec::new() };
                    (
                        y,
                        LayerCache::Conv {
                            cols,
                            input_shape: shape.clone(),
                        },
                    )
                }
                Layer::Activation(spec) => {
                    let spec = effective_spec(spec, params);
                    let y = x
                        .iter()
                        .map(|&v| T::of(activations::eval(&spec, v.as_f64())))
                        .collect();
                    (y, LayerCache::Activation { input: x })
                }
                Layer::Flatten => (x, LayerCache::Flatten),
                Layer::MaxPool { size } => {
                    let input_len = x.len();
                    let (y, argmax) = layer::maxpool_forward(&x, n, &shape, size);
                    (y, LayerCache::MaxPool { argmax, input_len })
                }
            };
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::non_finite(format!(
                    "output of layer {i} ({})",
                    layer.kind_name()
                )));
            }
            if keep {
                caches.push(cache);
            }
            x = y;
            shape = out_shape;
        }
        let logits = Tensor::new(vec![n, shape[0]], x)?;
        let cache = keep.then_some(Cache {
            batch: n,
            layers: caches,
        });
        Ok((logits, cache))
    }

    /// Reverse pass from `dlogits` using the analytic activation derivatives.
    pub fn backward(&self, cache: &Cache<T>, dlogits: &Tensor<T>) -> Result<Gradients<T>> {
        self.backward_with(cache, dlogits, &activations::eval_derivative)
    }

    /// Reverse pass with a caller-supplied activation derivative.
    pub fn backward_with(
        &self,
        cache: &Cache<T>,
        dlogits: &Tensor<T>,
        derivative: DerivativeFn<'_>,
    ) -> Result<Gradients<T>> {
        let n = cache.batch;
        if cache.layers.len() != self.layers.len() || dlogits.shape() != [n, self.num_classes()] {
            return Err(Error::ShapeMismatch {
                expected: vec![n, self.num_classes()],
                actual: dlogits.shape().to_vec(),
            });
        }
        let mut per_layer: Vec<Vec<Tensor<T>>> = vec![Vec::new(); self.layers.len()];
        let mut g = dlogits.data().to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let params = &self.params[i];
            let need_dx = i > 0;
            let (dx, grads) = match (layer, &cache.layers[i]) {
                (&Layer::Affine { inputs, outputs }, LayerCache::Affine { input }) => {
                    let (dx, dw, db) = layer::affine_backward(
                        input,
                        &g,
                        n,
                        params[0].data(),
                        inputs,
                        outputs,
                        need_dx,
                    );
                    (
                        dx,
                        vec![
                            Tensor::new(vec![outputs, inputs], dw)?,
                            Tensor::new(vec![outputs], db)?,
                        ],
                    )
                }
                (
                    &Layer::Conv2d {
                        out_channels,
                        kernel,
                        stride,
                        padding,
                        ..
                    },
                    LayerCache::Conv { cols, input_shape },
                ) => {
                    let geo = ConvGeometry::new(input_shape, kernel, stride, padding);
                    let (dx, dw, db) = layer::conv_backward(
                        cols,
                        &g,
                        n,
                        &geo,
                        params[0].data(),
                        out_channels,
                        need_dx,
                    );
                    (
                        dx,
                        vec![
                            Tensor::new(params[0].shape().to_vec(), dw)?,
                            Tensor::new(vec![out_channels], db)?,
                        ],
                    )
                }
                (Layer::Activation(spec), LayerCache::Activation { input }) => {
                    let spec = effective_spec(*spec, params);
                    let dx = input
                        .iter()
                        .zip(&g)
                        .map(|(&x, &dy)| dy * T::of(derivative(&spec, x.as_f64())))
                        .collect();
                    let grads = if spec.kind == ActivationKind::Prelu {
                        let slope_grad = input
                            .iter()
                            .zip(&g)
                            .filter(|(x, _)| **x < T::zero())
                            .fold(T::zero(), |acc, (&x, &dy)| acc + dy * x);
                        vec![Tensor::new(vec![1], vec![slope_grad])?]
                    } else {
                        Vec::new()
                    };
                    (Some(dx), grads)
                }
                (Layer::Flatten, LayerCache::Flatten) => (Some(g.clone()), Vec::new()),
                (Layer::MaxPool { .. }, LayerCache::MaxPool { argmax, input_len }) => (
                    Some(layer::maxpool_backward(&g, argmax, *input_len)),
                    Vec::new(),
                ),
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "cache does not match layer {i}"
                    )))
                }
            };
            for (t, name) in grads.iter().zip(layer.param_names()) {
                t.ensure_finite(|| format!("gradient of layer {i} {name}"))?;
            }
            per_layer[i] = grads;
            if let Some(dx) = dx {
                if !dx.iter().all(|v| v.is_finite()) {
                    return Err(Error::non_finite(format!("input gradient of layer {i}")));
                }
                g = dx;
            }
        }
        Ok(Gradients { per_layer })
    }
}

/// PReLU reads its slope from the layer parameter, not the `ActivationSpec`.
fn effective_spec<T: Scalar>(spec: ActivationSpec, params: &[Tensor<T>]) -> ActivationSpec {
    match (spec.kind, params.first()) {
        (ActivationKind::Prelu, Some(slope)) => ActivationSpec {
            negative_slope: slope.data()[0].as_f64(),
            ..spec
        },
        _ => spec,
    }
}

fn init_params<T: Scalar>(layer: &Layer, rng: &mut ChaCha8Rng) -> Vec<Tensor<T>> {
    let shapes = layer.param_shapes();
    match layer {
        Layer::Affine { .. } | Layer::Conv2d { .. } => {
            let bound = 1.0 / (layer.fan_in() as f64).sqrt();
            let weight =
                Tensor::from_fn(shapes[0].clone(), |_| T::of(rng.random_range(-bound..bound)));
            let bias = Tensor::zeros(shapes[1].clone());
            vec![weight, bias]
        }
        Layer::Activation(spec) if spec.kind == ActivationKind::Prelu => {
            vec![Tensor::from_fn(vec![1], |_| T::of(spec.negative_slope))]
        }
        _ => Vec::new(),
    }
}

impl<T: Scalar> Cache<T> {
    /// True when both passes took the same branch at every non-smooth point:
    /// the sign of each input to a kinked activation and every max-pool winner.
    pub(crate) fn same_branches<U: Scalar>(&self, other: &Cache<U>, layers: &[Layer]) -> bool {
        self.layers
            .iter()
            .zip(&other.layers)
            .zip(layers)
            .all(|((a, b), layer)| match (a, b, layer) {
                (LayerCache::Activation { input: x }, LayerCache::Activation { input: y }, Layer::Activation(spec))
                    if !spec.kind.is_smooth() =>
                {
                    x.iter().zip(y).all(|(&u, &v)| (u < T::zero()) == (v < U::zero()))
                }
                (LayerCache::MaxPool { argmax: x, .. }, LayerCache::MaxPool { argmax: y, .. }, _) => x == y,
                _ => true,
            })
    }
}

impl<T: Scalar> Gradients<T> {
    pub fn iter(&self) -> impl Iterator<Item = &Tensor<T>> {
        self.per_layer.iter().flatten()
    }
}
