//! The predictor network: a small fully convolutional residual CNN mapping
//! an RGB appearance image to two sigmoid channels — per-pixel return
//! probability and per-pixel intensity.
//!
//! Architecture: 3×3 input conv + ReLU; `blocks` residual blocks
//! (conv → instance-norm → ReLU → conv → instance-norm, plus identity skip,
//! then ReLU); 3×3 output conv; sigmoid. The skip path bypasses the
//! normalization, so absolute colour information survives to the output —
//! without it the normalized trunk would see only contrast.
//!
//! Parameters live in one flat vector described by a [`Layout`] of named
//! segments; the optimizer, the finite-difference checker, and the weights
//! file all address parameters through the same layout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{
    conv3x3_forward, conv3x3_backward, instance_norm_forward, instance_norm_backward,
    relu_forward, relu_backward, sigmoid_forward, sigmoid_backward,
};
use super::ModelError;
use crate::io::{TensorData, WeightsFile};
use crate::types::{AppearanceImage, PredictorOutput, ValidationError};
use crate::{Real, Tensor};

/// Variance epsilon of the instance-norm denominators.
pub const NORM_EPS: f64 = 1e-5;

/// Smallest supported input side for [`RinetLite::predict`].
pub const MIN_IMAGE_SIDE: usize = 8;

/// Width and depth of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    /// Feature channels in the trunk.
    pub channels: usize,
    /// Number of residual blocks.
    pub blocks: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            channels: 8,
            blocks: 2,
        }
    }
}

impl ModelConfig {
    fn validate(&self) -> Result<(), ValidationError> {
        if self.channels == 0 || self.channels > 4096 {
            return Err(ValidationError::field(
                "ModelConfig",
                "channels",
                format!("must lie in 1..=4096, got {}", self.channels),
            ));
        }
        if self.blocks > 64 {
            return Err(ValidationError::field(
                "ModelConfig",
                "blocks",
                format!("must be at most 64, got {}", self.blocks),
            ));
        }
        Ok(())
    }
}

/// How a segment's values are produced at initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InitKind {
    /// Uniform in `[-k, k]`, `k = 1/sqrt(9 * fan_in)` (kernel taps times
    /// input channels).
    Uniform { fan_in: usize },
    /// Constant one (normalization scales).
    One,
    /// Constant zero (normalization shifts).
    Zero,
}

/// One named parameter segment of the flat vector.
#[derive(Debug, Clone)]
pub struct Segment {
    name: String,
    dims: Vec<usize>,
    offset: usize,
    len: usize,
    init: InitKind,
}

impl Segment {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Named map of the flat parameter vector. Segment order is the
/// initialization draw order and the serialization order.
#[derive(Debug, Clone)]
pub struct Layout {
    segments: Vec<Segment>,
    total: usize,
}

/// Indices of one residual block's segments within the layout.
#[derive(Debug, Clone, Copy)]
struct BlockIdx {
    conv1_w: usize,
    conv1_b: usize,
    norm1_g: usize,
    norm1_b: usize,
    conv2_w: usize,
    conv2_b: usize,
    norm2_g: usize,
    norm2_b: usize,
}

impl Layout {
    fn build(cfg: &ModelConfig) -> Self {
        let c = cfg.channels;
        let mut segments = Vec::new();
        let mut total = 0usize;
        let mut push = |name: String, dims: Vec<usize>, init: InitKind| {
            let len = dims.iter().product();
            segments.push(Segment {
                name,
                dims,
                offset: total,
                len,
                init,
            });
            total += len;
        };
        push(
            "conv_in.weight".into(),
            vec![c, 3, 3, 3],
            InitKind::Uniform { fan_in: 3 },
        );
        push("conv_in.bias".into(), vec![c], InitKind::Uniform { fan_in: 3 });
        for k in 1..=cfg.blocks {
            for half in ["conv1", "norm1", "conv2", "norm2"] {
                match half {
                    "conv1" | "conv2" => {
                        push(
                            format!("block{k}.{half}.weight"),
                            vec![c, c, 3, 3],
                            InitKind::Uniform { fan_in: c },
                        );
                        push(
                            format!("block{k}.{half}.bias"),
                            vec![c],
                            InitKind::Uniform { fan_in: c },
                        );
                    }
                    _ => {
                        push(format!("block{k}.{half}.weight"), vec![c], InitKind::One);
                        push(format!("block{k}.{half}.bias"), vec![c], InitKind::Zero);
                    }
                }
            }
        }
        push(
            "conv_out.weight".into(),
            vec![2, c, 3, 3],
            InitKind::Uniform { fan_in: c },
        );
        push("conv_out.bias".into(), vec![2], InitKind::Uniform { fan_in: c });
        Self { segments, total }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Total parameter count.
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    fn block(&self, k: usize) -> BlockIdx {
        let base = 2 + 8 * k;
        BlockIdx {
            conv1_w: base,
            conv1_b: base + 1,
            norm1_g: base + 2,
            norm1_b: base + 3,
            conv2_w: base + 4,
            conv2_b: base + 5,
            norm2_g: base + 6,
            norm2_b: base + 7,
        }
    }

    fn conv_out_w(&self) -> usize {
        self.segments.len() - 2
    }

    fn conv_out_b(&self) -> usize {
        self.segments.len() - 1
    }
}

/// Saved intermediate activations of one forward pass, consumed by
/// [`RinetLite::backward`].
pub struct Tape<S> {
    image: Tensor<S>,
    conv_in_pre: Tensor<S>,
    blocks: Vec<BlockTape<S>>,
    trunk_out: Tensor<S>,
    output: Tensor<S>,
}

impl<S> Tape<S> {
    /// The sigmoid output the tape was recorded for.
    pub fn output(&self) -> &Tensor<S> {
        &self.output
    }
}

struct BlockTape<S> {
    input: Tensor<S>,
    xhat1: Tensor<S>,
    invstd1: Vec<S>,
    norm1_out: Tensor<S>,
    relu1_out: Tensor<S>,
    xhat2: Tensor<S>,
    invstd2: Vec<S>,
    sum_pre: Tensor<S>,
}

/// The predictor network. See the module docs for the architecture.
#[derive(Debug, Clone)]
pub struct RinetLite<S> {
    cfg: ModelConfig,
    layout: Layout,
    params: Vec<S>,
}

impl<S: Real> RinetLite<S> {
    /// Seeded initialization: convolution weights and biases uniform in
    /// `[-k, k]` with `k = 1/sqrt(9 * fan_in)`, normalization scales 1 and
    /// shifts 0. Draws happen in layout order from one ChaCha8 stream, so a
    /// seed pins every parameter.
    pub fn new(cfg: ModelConfig, seed: u64) -> Result<Self, ValidationError> {
        cfg.validate()?;
        let layout = Layout::build(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(layout.len());
        for seg in layout.segments() {
            match seg.init {
                InitKind::Uniform { fan_in } => {
                    let k = 1.0 / ((9 * fan_in) as f64).sqrt();
                    for _ in 0..seg.len {
                        params.push(S::of(rng.gen_range(-k..k)));
                    }
                }
                InitKind::One => params.extend(std::iter::repeat_n(S::one(), seg.len)),
                InitKind::Zero => params.extend(std::iter::repeat_n(S::zero(), seg.len)),
            }
        }
        Ok(Self {
            cfg,
            layout,
            params,
        })
    }

    /// All-zero weights with identity normalization (scales 1, shifts 0);
    /// the output is exactly `sigmoid(0) = 0.5` everywhere.
    pub fn zeroed(cfg: ModelConfig) -> Result<Self, ValidationError> {
        cfg.validate()?;
        let layout = Layout::build(&cfg);
        let mut params = vec![S::zero(); layout.len()];
        for seg in layout.segments() {
            if seg.init == InitKind::One {
                params[seg.range()].fill(S::one());
            }
        }
        Ok(Self {
            cfg,
            layout,
            params,
        })
    }

    pub fn config(&self) -> ModelConfig {
        self.cfg
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[S] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [S] {
        &mut self.params
    }

    fn seg_slice(&self, idx: usize) -> &[S] {
        &self.params[self.layout.segments[idx].range()]
    }

    /// Runs the network on an appearance image and splits the two output
    /// channels into grids.
    pub fn predict(&self, image: &AppearanceImage<S>) -> Result<PredictorOutput<S>, ModelError> {
        if image.height() < MIN_IMAGE_SIDE || image.width() < MIN_IMAGE_SIDE {
            return Err(ModelError::ImageTooSmall {
                rows: image.height(),
                cols: image.width(),
            });
        }
        let out = self.forward(image.tensor());
        Ok(PredictorOutput::from_grids(out.channel_grid(0), out.channel_grid(1))
            .expect("sigmoid outputs always lie in [0, 1]"))
    }

    /// Forward pass without bookkeeping.
    pub fn forward(&self, input: &Tensor<S>) -> Tensor<S> {
        self.forward_impl(input, false).0
    }

    /// Forward pass that also records the activations backward needs.
    pub fn forward_with_tape(&self, input: &Tensor<S>) -> (Tensor<S>, Tape<S>) {
        let (out, tape) = self.forward_impl(input, true);
        (out, tape.expect("tape requested"))
    }

    fn forward_impl(&self, input: &Tensor<S>, want_tape: bool) -> (Tensor<S>, Option<Tape<S>>) {
        assert_eq!(input.channels(), 3, "predictor input must be RGB");
        let c = self.cfg.channels;
        let eps = S::of(NORM_EPS);

        let conv_in_pre = conv3x3_forward(input, self.seg_slice(0), self.seg_slice(1), c);
        let mut act = relu_forward(&conv_in_pre);

        let mut block_tapes = Vec::new();
        for k in 0..self.cfg.blocks {
            let idx = self.layout.block(k);
            let h1 = conv3x3_forward(&act, self.seg_slice(idx.conv1_w), self.seg_slice(idx.conv1_b), c);
            let (n1, xhat1, invstd1) = instance_norm_forward(
                &h1,
                self.seg_slice(idx.norm1_g),
                self.seg_slice(idx.norm1_b),
                eps,
            );
            let r1 = relu_forward(&n1);
            let h2 = conv3x3_forward(&r1, self.seg_slice(idx.conv2_w), self.seg_slice(idx.conv2_b), c);
            let (n2, xhat2, invstd2) = instance_norm_forward(
                &h2,
                self.seg_slice(idx.norm2_g),
                self.seg_slice(idx.norm2_b),
                eps,
            );
            let mut sum_pre = n2;
            for (dst, skip) in sum_pre.data_mut().iter_mut().zip(act.data()) {
                *dst = *dst + *skip;
            }
            let next = relu_forward(&sum_pre);
            if want_tape {
                block_tapes.push(BlockTape {
                    input: act,
                    xhat1,
                    invstd1,
                    norm1_out: n1,
                    relu1_out: r1,
                    xhat2,
                    invstd2,
                    sum_pre,
                });
            }
            act = next;
        }

        let logits = conv3x3_forward(
            &act,
            self.seg_slice(self.layout.conv_out_w()),
            self.seg_slice(self.layout.conv_out_b()),
            2,
        );
        let output = sigmoid_forward(&logits);
        let tape = want_tape.then(|| Tape {
            image: input.clone(),
            conv_in_pre,
            blocks: block_tapes,
            trunk_out: act,
            output: output.clone(),
        });
        (output, tape)
    }

    /// Reverse-mode pass: given the loss gradient with respect to the
    /// sigmoid output, accumulates parameter gradients (in layout order)
    /// into `grads`. Callers zero the buffer once per batch.
    pub fn backward(&self, tape: &Tape<S>, d_output: &Tensor<S>, grads: &mut [S]) {
        assert_eq!(grads.len(), self.layout.len(), "gradient buffer size");
        let c = self.cfg.channels;

        // Weight/scale segments always directly precede their bias/shift
        // partner, so each layer's pair of gradient slices comes from one
        // disjoint split of the flat buffer.
        fn pair_mut<T>(
            buf: &mut [T],
            a: std::ops::Range<usize>,
            b: std::ops::Range<usize>,
        ) -> (&mut [T], &mut [T]) {
            debug_assert!(a.end == b.start);
            let (left, right) = buf.split_at_mut(b.start);
            (&mut left[a], &mut right[..b.end - b.start])
        }
        let seg_range = |i: usize| self.layout.segments()[i].range();

        let d_logits = sigmoid_backward(d_output, &tape.output);
        let (out_w, out_b) = (self.layout.conv_out_w(), self.layout.conv_out_b());
        let mut d_act = {
            let (dw, db) = pair_mut(grads, seg_range(out_w), seg_range(out_b));
            conv3x3_backward(&tape.trunk_out, self.seg_slice(out_w), 2, &d_logits, dw, db, true)
                .expect("input gradient requested")
        };

        for k in (0..self.cfg.blocks).rev() {
            let bt = &tape.blocks[k];
            let idx = self.layout.block(k);

            let d_sum = relu_backward(&d_act, &bt.sum_pre);

            let d_h2 = {
                let (dg, db) = pair_mut(grads, seg_range(idx.norm2_g), seg_range(idx.norm2_b));
                instance_norm_backward(
                    &d_sum,
                    &bt.xhat2,
                    &bt.invstd2,
                    self.seg_slice(idx.norm2_g),
                    dg,
                    db,
                )
            };
            let d_r1 = {
                let (dw, db) = pair_mut(grads, seg_range(idx.conv2_w), seg_range(idx.conv2_b));
                conv3x3_backward(&bt.relu1_out, self.seg_slice(idx.conv2_w), c, &d_h2, dw, db, true)
                    .expect("input gradient requested")
            };
            let d_n1 = relu_backward(&d_r1, &bt.norm1_out);
            let d_h1 = {
                let (dg, db) = pair_mut(grads, seg_range(idx.norm1_g), seg_range(idx.norm1_b));
                instance_norm_backward(
                    &d_n1,
                    &bt.xhat1,
                    &bt.invstd1,
                    self.seg_slice(idx.norm1_g),
                    dg,
                    db,
                )
            };
            let mut d_in = {
                let (dw, db) = pair_mut(grads, seg_range(idx.conv1_w), seg_range(idx.conv1_b));
                conv3x3_backward(&bt.input, self.seg_slice(idx.conv1_w), c, &d_h1, dw, db, true)
                    .expect("input gradient requested")
            };
            // The identity skip adds the post-block gradient to the branch
            // gradient.
            for (dst, skip) in d_in.data_mut().iter_mut().zip(d_sum.data()) {
                *dst = *dst + *skip;
            }
            d_act = d_in;
        }

        let d_pre = relu_backward(&d_act, &tape.conv_in_pre);
        let (dw, db) = pair_mut(grads, seg_range(0), seg_range(1));
        conv3x3_backward(&tape.image, self.seg_slice(0), c, &d_pre, dw, db, false);
    }

    /// Serializes configuration and parameters. The file stores the width
    /// and depth under the reserved entry names `cfg.C` and `cfg.N`, then
    /// one tensor per layout segment.
    pub fn to_weights(&self) -> WeightsFile {
        let mut file = WeightsFile::new();
        file.push(
            "cfg.C",
            TensorData::scalar(self.cfg.channels as f32),
        )
        .expect("reserved name is valid and unique");
        file.push("cfg.N", TensorData::scalar(self.cfg.blocks as f32))
            .expect("reserved name is valid and unique");
        for seg in self.layout.segments() {
            let data: Vec<f32> = self.params[seg.range()]
                .iter()
                .map(|v| v.widen() as f32)
                .collect();
            file.push(
                seg.name(),
                TensorData::new(seg.dims().to_vec(), data).expect("segment dims match data"),
            )
            .expect("layout names are unique");
        }
        file
    }

    /// Rebuilds a model from a weights file, validating the reserved
    /// configuration entries, every segment's presence and shape, parameter
    /// finiteness, and the absence of stray entries.
    pub fn from_weights(file: &WeightsFile) -> Result<Self, ModelError> {
        let read_cfg = |name: &str| -> Result<usize, ModelError> {
            let t = file
                .get(name)
                .ok_or_else(|| ModelError::MissingTensor { name: name.into() })?;
            if t.dims() != [1] || !t.data()[0].is_finite() || t.data()[0] < 0.0 {
                return Err(ModelError::BadConfigTensor { name: name.into() });
            }
            let v = t.data()[0];
            if v.fract() != 0.0 {
                return Err(ModelError::BadConfigTensor { name: name.into() });
            }
            Ok(v as usize)
        };
        let cfg = ModelConfig {
            channels: read_cfg("cfg.C")?,
            blocks: read_cfg("cfg.N")?,
        };
        cfg.validate().map_err(|_| ModelError::BadConfigTensor {
            name: "cfg.C/cfg.N".into(),
        })?;
        let layout = Layout::build(&cfg);
        let mut params = vec![S::zero(); layout.len()];
        for seg in layout.segments() {
            let t = file.get(seg.name()).ok_or_else(|| ModelError::MissingTensor {
                name: seg.name().into(),
            })?;
            if t.dims() != seg.dims() {
                return Err(ModelError::ShapeMismatch {
                    name: seg.name().into(),
                    expected: seg.dims().to_vec(),
                    found: t.dims().to_vec(),
                });
            }
            for (dst, v) in params[seg.range()].iter_mut().zip(t.data()) {
                if !v.is_finite() {
                    return Err(ModelError::NonFiniteParameter {
                        name: seg.name().into(),
                    });
                }
                *dst = S::of(*v as f64);
            }
        }
        let expected = layout.len_entries();
        if file.entries().len() != expected {
            let known: Vec<&str> = layout.segments().iter().map(|s| s.name()).collect();
            let stray = file
                .entries()
                .iter()
                .map(|(n, _)| n.as_str())
                .find(|n| *n != "cfg.C" && *n != "cfg.N" && !known.contains(n))
                .unwrap_or("<duplicate>");
            return Err(ModelError::UnexpectedTensor { name: stray.into() });
        }
        Ok(Self {
            cfg,
            layout,
            params,
        })
    }
}

impl Layout {
    /// Number of weights-file entries a model with this layout produces
    /// (all segments plus the two reserved configuration scalars).
    fn len_entries(&self) -> usize {
        self.segments.len() + 2
    }
}
