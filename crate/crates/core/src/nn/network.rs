use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayD, ArrayView2, Axis, IxDyn};
use rand::Rng;

use super::activation::{sigmoid, ActivationKind};
use super::spec::{LayerSpec, NetworkSpec, OutputHead};
use crate::datasets::SampleShape;
use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::Tensor;

pub const SPEC_FILE: &str = "spec.json";
pub const WEIGHTS_FILE: &str = "weights.tnnt";

/// Rows per chunk when only the final output is needed.
const PREDICT_CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
struct ConvGeom {
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    s: usize,
    oh: usize,
    ow: usize,
    o: usize,
}

impl ConvGeom {
    fn patch(&self) -> usize {
        self.c * self.k * self.k
    }

    fn positions(&self) -> usize {
        self.oh * self.ow
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Layer {
    /// `w` is `in x out`.
    Dense { w: Array2<f64>, b: Array1<f64>, act: ActivationKind },
    /// `w` is `out_channels x (in_channels * k * k)`.
    Conv { w: Array2<f64>, b: Array1<f64>, act: ActivationKind, g: ConvGeom },
    Pool { size: usize, c: usize, h: usize, w: usize, oh: usize, ow: usize },
    Flatten,
    /// `w` is `in x classes`, or `in x 1` for the sigmoid head.
    Output { w: Array2<f64>, b: Array1<f64>, head: OutputHead },
}

enum Cache {
    Dense { z: Array2<f64> },
    Conv { cols: Array2<f64>, z: Array2<f64> },
    Pool { argmax: Vec<usize> },
    Flatten,
    Output,
}

/// Outputs of one forward pass: every non-output layer's output (post
/// activation for dense and conv layers) and the class probabilities.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub layers: Vec<Array2<f64>>,
    pub probabilities: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    layers: Vec<Layer>,
}

fn uniform(rng: &mut impl Rng, limit: f64, shape: (usize, usize)) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || rng.gen_range(-limit..limit))
}

fn init_limit(act: ActivationKind, fan_in: usize, fan_out: usize) -> f64 {
    if act.is_rectifier_like() {
        (6.0 / fan_in as f64).sqrt()
    } else {
        (6.0 / (fan_in + fan_out) as f64).sqrt()
    }
}

fn image_dims(shape: SampleShape) -> (usize, usize, usize) {
    match shape {
        SampleShape::Image { channels, height, width } => (channels, height, width),
        SampleShape::Flat(d) => (d, 1, 1),
    }
}

impl Network {
    /// Fresh network: He-uniform weights for rectifier-like and stacked-sine
    /// layers, Xavier-uniform for sigmoid/tanh layers and the output layer,
    /// zero biases; drawn from the `init` stream of `spec.init_seed`.
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        let shapes = spec.shapes()?;
        let mut rng = rng::stream(spec.init_seed, "init");
        let mut arrays = Vec::new();
        let mut prev = spec.input;
        for (layer, &out) in spec.layers.iter().zip(&shapes) {
            match *layer {
                LayerSpec::Dense { input, output, activation } => {
                    let limit = init_limit(activation, input, output);
                    arrays.push(uniform(&mut rng, limit, (input, output)).into_dyn());
                    arrays.push(ArrayD::zeros(IxDyn(&[output])));
                }
                LayerSpec::Conv { in_channels, out_channels, kernel, activation, .. } => {
                    let fan_in = in_channels * kernel * kernel;
                    let limit = init_limit(activation, fan_in, out_channels * kernel * kernel);
                    let w = uniform(&mut rng, limit, (out_channels, fan_in));
                    arrays.push(w.into_shape_with_order(IxDyn(&[out_channels, in_channels, kernel, kernel])).expect("sizes agree").into_dyn());
                    arrays.push(ArrayD::zeros(IxDyn(&[out_channels])));
                }
                LayerSpec::Output { classes, head } => {
                    let input = prev.features();
                    let width = if head == OutputHead::Sigmoid { 1 } else { classes };
                    let limit = init_limit(ActivationKind::Sigmoid, input, width);
                    arrays.push(uniform(&mut rng, limit, (input, width)).into_dyn());
                    arrays.push(ArrayD::zeros(IxDyn(&[width])));
                }
                LayerSpec::MaxPool { .. } | LayerSpec::Flatten => {}
            }
            prev = out;
        }
        Self::from_param_arrays(spec, arrays)
    }

    /// Builds a network from parameter arrays in [`Network::param_arrays`]
    /// order and shapes.
    pub fn from_param_arrays(spec: NetworkSpec, arrays: Vec<ArrayD<f64>>) -> Result<Self> {
        let shapes = spec.shapes()?;
        let expected = param_shapes(&spec, &shapes);
        if arrays.len() != expected.len() {
            return Err(Error::ShapeMismatch(format!("{} parameter arrays, spec needs {}", arrays.len(), expected.len())));
        }
        for (i, (a, e)) in arrays.iter().zip(&expected).enumerate() {
            if a.shape() != e.as_slice() {
                return Err(Error::ShapeMismatch(format!("parameter {i}: shape {:?}, spec needs {e:?}", a.shape())));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!("parameter {i} has non-finite entries")));
            }
        }
        let mut it = arrays.into_iter();
        let mut layers = Vec::with_capacity(spec.layers.len());
        let mut prev = spec.input;
        for (layer, &out) in spec.layers.iter().zip(&shapes) {
            let built = match *layer {
                LayerSpec::Dense { input, output, activation } => {
                    let (w, b) = take_pair(&mut it, input, output);
                    Layer::Dense { w, b, act: activation }
                }
                LayerSpec::Conv { in_channels, out_channels, kernel, stride, activation } => {
                    let (_, h, w_in) = image_dims(prev);
                    let (_, oh, ow) = image_dims(out);
                    let g = ConvGeom { c: in_channels, h, w: w_in, k: kernel, s: stride, oh, ow, o: out_channels };
                    let (w, b) = take_pair(&mut it, out_channels, g.patch());
                    Layer::Conv { w, b, act: activation, g }
                }
                LayerSpec::MaxPool { size } => {
                    let (c, h, w) = image_dims(prev);
                    let (_, oh, ow) = image_dims(out);
                    Layer::Pool { size, c, h, w, oh, ow }
                }
                LayerSpec::Flatten => Layer::Flatten,
                LayerSpec::Output { classes, head } => {
                    let width = if head == OutputHead::Sigmoid { 1 } else { classes };
                    let (w, b) = take_pair(&mut it, prev.features(), width);
                    Layer::Output { w, b, head }
                }
            };
            layers.push(built);
            prev = out;
        }
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn input_features(&self) -> usize {
        self.spec.input.features()
    }

    pub fn classes(&self) -> usize {
        self.spec.classes()
    }

    /// Weight then bias for each parametrized layer. Dense and output
    /// weights are `[in, out]`, conv weights `[out, in, k, k]`.
    pub fn param_arrays(&self) -> Vec<ArrayD<f64>> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Dense { w, b, .. } | Layer::Output { w, b, .. } => {
                    out.push(w.clone().into_dyn());
                    out.push(b.clone().into_dyn());
                }
                Layer::Conv { w, b, g, .. } => {
                    out.push(w.clone().into_shape_with_order(IxDyn(&[g.o, g.c, g.k, g.k])).expect("sizes agree"));
                    out.push(b.clone().into_dyn());
                }
                Layer::Pool { .. } | Layer::Flatten => {}
            }
        }
        out
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.layers {
            if let Layer::Dense { w, b, .. } | Layer::Conv { w, b, .. } | Layer::Output { w, b, .. } = layer {
                out.push(w.as_slice().expect("standard layout"));
                out.push(b.as_slice().expect("standard layout"));
            }
        }
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            if let Layer::Dense { w, b, .. } | Layer::Conv { w, b, .. } | Layer::Output { w, b, .. } = layer {
                out.push(w.as_slice_mut().expect("standard layout"));
                out.push(b.as_slice_mut().expect("standard layout"));
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_features() {
            return Err(Error::ShapeMismatch(format!(
                "batch has {} features, network expects {}",
                x.ncols(),
                self.input_features()
            )));
        }
        Ok(())
    }

    /// Full forward pass keeping every intermediate output.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<ForwardPass> {
        self.check_input(&x)?;
        let (mut outputs, _) = self.run(x, false);
        let probabilities = outputs.pop().expect("output layer present");
        Ok(ForwardPass { layers: outputs, probabilities })
    }

    /// Class probabilities only, computed in chunks.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let mut out = Array2::zeros((x.nrows(), self.classes()));
        for (i, chunk) in x.axis_chunks_iter(Axis(0), PREDICT_CHUNK).enumerate() {
            let start = i * PREDICT_CHUNK;
            let p = self.probabilities(chunk);
            out.slice_mut(ndarray::s![start..start + chunk.nrows(), ..]).assign(&p);
        }
        Ok(out)
    }

    /// Arg-max class per row (ties to the lowest class).
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.predict_proba(x)?))
    }

    fn probabilities(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut cur = x.as_standard_layout().into_owned();
        for layer in &self.layers {
            cur = apply(layer, cur.view(), None);
        }
        cur
    }

    fn run(&self, x: ArrayView2<f64>, keep_cache: bool) -> (Vec<Array2<f64>>, Vec<Cache>) {
        let mut outputs: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        let mut caches = Vec::new();
        let x = x.as_standard_layout().into_owned();
        for layer in &self.layers {
            let input = outputs.last().map_or(x.view(), |a| a.view());
            let mut cache = None;
            let out = apply(layer, input, if keep_cache { Some(&mut cache) } else { None });
            if let Some(c) = cache {
                caches.push(c);
            }
            outputs.push(out);
        }
        (outputs, caches)
    }

    /// Mean cross-entropy over the batch.
    pub fn loss(&self, x: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
        self.check_batch(&x, labels)?;
        let x = x.as_standard_layout().into_owned();
        let mut cur = x;
        let last = self.layers.len() - 1;
        for layer in &self.layers[..last] {
            cur = apply(layer, cur.view(), None);
        }
        let Layer::Output { w, b, head } = &self.layers[last] else { unreachable!("validated spec") };
        let logits = cur.dot(w) + b;
        Ok(cross_entropy(&logits, *head, labels))
    }

    fn check_batch(&self, x: &ArrayView2<f64>, labels: &[usize]) -> Result<()> {
        self.check_input(x)?;
        if labels.len() != x.nrows() {
            return Err(Error::ShapeMismatch(format!("{} rows but {} labels", x.nrows(), labels.len())));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= self.classes()) {
            return Err(Error::BadLabel { label: l, max: self.classes() - 1 });
        }
        Ok(())
    }

    /// Mean cross-entropy, its gradient in [`Network::param_slices`] order,
    /// and the number of correctly classified rows.
    pub fn loss_and_grad(&self, x: ArrayView2<f64>, labels: &[usize]) -> Result<(f64, Vec<Vec<f64>>, usize)> {
        self.check_batch(&x, labels)?;
        let n = x.nrows();
        let x_owned = x.as_standard_layout().into_owned();
        let (outputs, caches) = self.run(x_owned.view(), true);
        let last = self.layers.len() - 1;
        let Layer::Output { w, b, head } = &self.layers[last] else { unreachable!("validated spec") };
        let features = if last == 0 { x_owned.view() } else { outputs[last - 1].view() };
        let logits = features.dot(w) + b;
        let loss = cross_entropy(&logits, *head, labels);
        let probs = &outputs[last];
        let correct = argmax_rows(probs).iter().zip(labels).filter(|(p, l)| p == l).count();

        // d loss / d logits
        let mut dlogits = match head {
            OutputHead::Softmax => {
                let mut d = probs.clone();
                for (i, &l) in labels.iter().enumerate() {
                    d[[i, l]] -= 1.0;
                }
                d
            }
            OutputHead::Sigmoid => {
                let mut d = probs.column(1).to_owned().insert_axis(Axis(1));
                for (i, &l) in labels.iter().enumerate() {
                    d[[i, 0]] -= l as f64;
                }
                d
            }
        };
        dlogits /= n as f64;

        let mut grads: Vec<Vec<f64>> = Vec::new();
        let mut push = |gw: Array2<f64>, gb: Array1<f64>| {
            grads.push(gb.into_raw_vec_and_offset().0);
            grads.push(gw.as_standard_layout().into_owned().into_raw_vec_and_offset().0);
        };
        push(features.t().dot(&dlogits), dlogits.sum_axis(Axis(0)));
        let mut delta = dlogits.dot(&w.t());

        for i in (0..last).rev() {
            let input = if i == 0 { x_owned.view() } else { outputs[i - 1].view() };
            match (&self.layers[i], &caches[i]) {
                (Layer::Dense { w, act, .. }, Cache::Dense { z }) => {
                    let mut dz = delta;
                    ndarray::Zip::from(&mut dz).and(z).for_each(|d, &zv| *d *= act.grad(zv));
                    push(input.t().dot(&dz), dz.sum_axis(Axis(0)));
                    delta = if i > 0 { dz.dot(&w.t()) } else { Array2::zeros((0, 0)) };
                }
                (Layer::Conv { w, act, g, .. }, Cache::Conv { cols, z }) => {
                    // delta and z are N x (o * P); move to (N * P) x o.
                    let p = g.positions();
                    let mut dz_cols = Array2::<f64>::zeros((n * p, g.o));
                    {
                        let dzs = dz_cols.as_slice_mut().expect("fresh array");
                        let ds = delta.as_slice().expect("standard layout");
                        let zs = z.as_slice().expect("standard layout");
                        for s in 0..n {
                            for oc in 0..g.o {
                                for q in 0..p {
                                    let src = s * g.o * p + oc * p + q;
                                    dzs[(s * p + q) * g.o + oc] = ds[src] * act.grad(zs[src]);
                                }
                            }
                        }
                    }
                    let gw = dz_cols.t().dot(cols);
                    let gb = dz_cols.sum_axis(Axis(0));
                    push(gw, gb);
                    delta = if i > 0 {
                        let dcols = dz_cols.dot(w);
                        col2im(&dcols, g, n)
                    } else {
                        Array2::zeros((0, 0))
                    };
                }
                (Layer::Pool { c, h, w, .. }, Cache::Pool { argmax }) => {
                    let mut dx = Array2::<f64>::zeros((n, c * h * w));
                    let dxs = dx.as_slice_mut().expect("fresh array");
                    let ds = delta.as_slice().expect("standard layout");
                    let per = ds.len() / n.max(1);
                    for (j, &src) in argmax.iter().enumerate() {
                        let s = j / per;
                        dxs[s * c * h * w + src] += ds[j];
                    }
                    delta = dx;
                }
                (Layer::Flatten, Cache::Flatten) => {}
                _ => unreachable!("cache matches layer"),
            }
        }
        // Gradients were pushed output-first, bias before weight; restore
        // weight-then-bias order from the input side.
        grads.reverse();
        Ok((loss, grads, correct))
    }

    /// Saves `spec.json` and `weights.tnnt` into `dir`, creating it.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let spec = serde_json::to_string_pretty(&self.spec)?;
        fs::write(dir.join(SPEC_FILE), spec + "\n")?;
        let mut w = BufWriter::new(fs::File::create(dir.join(WEIGHTS_FILE))?);
        for a in self.param_arrays() {
            Tensor::from_f64(a.shape().to_vec(), a.iter().copied())?.write(&mut w)?;
        }
        std::io::Write::flush(&mut w)?;
        Ok(())
    }

    /// Loads a network saved by [`Network::save`]. Weights are stored as
    /// `f32`, so a reload rounds every parameter to single precision.
    pub fn load(dir: &Path) -> Result<Self> {
        let spec: NetworkSpec = serde_json::from_str(&fs::read_to_string(dir.join(SPEC_FILE))?)?;
        let tensors = Tensor::read_all(BufReader::new(fs::File::open(dir.join(WEIGHTS_FILE))?))?;
        Self::from_param_arrays(spec, tensors.iter().map(Tensor::to_array).collect())
    }
}

/// Next weight (reshaped to `rows x cols`) and bias from a checked list.
fn take_pair(it: &mut impl Iterator<Item = ArrayD<f64>>, rows: usize, cols: usize) -> (Array2<f64>, Array1<f64>) {
    let w = it.next().expect("counted").as_standard_layout().into_owned();
    let w = w.into_shape_with_order((rows, cols)).expect("checked");
    let b = it.next().expect("counted");
    let len = b.len();
    (w, b.into_shape_with_order(len).expect("checked"))
}

fn param_shapes(spec: &NetworkSpec, shapes: &[SampleShape]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut prev = spec.input;
    for (layer, &shape) in spec.layers.iter().zip(shapes) {
        match *layer {
            LayerSpec::Dense { input, output, .. } => {
                out.push(vec![input, output]);
                out.push(vec![output]);
            }
            LayerSpec::Conv { in_channels, out_channels, kernel, .. } => {
                out.push(vec![out_channels, in_channels, kernel, kernel]);
                out.push(vec![out_channels]);
            }
            LayerSpec::Output { classes, head } => {
                let width = if head == OutputHead::Sigmoid { 1 } else { classes };
                out.push(vec![prev.features(), width]);
                out.push(vec![width]);
            }
            LayerSpec::MaxPool { .. } | LayerSpec::Flatten => {}
        }
        prev = shape;
    }
    out
}

pub fn argmax_rows(probs: &Array2<f64>) -> Vec<usize> {
    probs
        .rows()
        .into_iter()
        .map(|r| {
            let mut best = 0;
            for (j, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn cross_entropy(logits: &Array2<f64>, head: OutputHead, labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    let total: f64 = match head {
        OutputHead::Softmax => logits
            .rows()
            .into_iter()
            .zip(labels)
            .map(|(r, &l)| {
                let m = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + r.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
                lse - r[l]
            })
            .sum(),
        OutputHead::Sigmoid => logits
            .column(0)
            .iter()
            .zip(labels)
            .map(|(&z, &l)| if l == 1 { softplus(-z) } else { softplus(z) })
            .sum(),
    };
    total / n
}

fn softmax_rows(mut logits: Array2<f64>) -> Array2<f64> {
    for mut r in logits.rows_mut() {
        let m = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        r.mapv_inplace(|v| (v - m).exp());
        let s = r.sum();
        r /= s;
    }
    logits
}

/// `(N * P) x (C * k * k)` patch matrix; row `s * P + i * ow + j`, column
/// `ch * k * k + ki * k + kj`.
fn im2col(x: &ArrayView2<f64>, g: &ConvGeom) -> Array2<f64> {
    let n = x.nrows();
    let (p, patch) = (g.positions(), g.patch());
    let mut cols = Array2::<f64>::zeros((n * p, patch));
    let cs = cols.as_slice_mut().expect("fresh array");
    let xs = x.as_slice().expect("standard layout");
    let sample = g.c * g.h * g.w;
    for s in 0..n {
        let xin = &xs[s * sample..(s + 1) * sample];
        for i in 0..g.oh {
            for j in 0..g.ow {
                let row = &mut cs[(s * p + i * g.ow + j) * patch..][..patch];
                let mut col = 0;
                for ch in 0..g.c {
                    for ki in 0..g.k {
                        let base = ch * g.h * g.w + (i * g.s + ki) * g.w + j * g.s;
                        row[col..col + g.k].copy_from_slice(&xin[base..base + g.k]);
                        col += g.k;
                    }
                }
            }
        }
    }
    cols
}

fn col2im(dcols: &Array2<f64>, g: &ConvGeom, n: usize) -> Array2<f64> {
    let (p, patch) = (g.positions(), g.patch());
    let sample = g.c * g.h * g.w;
    let mut dx = Array2::<f64>::zeros((n, sample));
    let dxs = dx.as_slice_mut().expect("fresh array");
    let ds = dcols.as_slice().expect("standard layout");
    for s in 0..n {
        let out = &mut dxs[s * sample..(s + 1) * sample];
        for i in 0..g.oh {
            for j in 0..g.ow {
                let row = &ds[(s * p + i * g.ow + j) * patch..][..patch];
                let mut col = 0;
                for ch in 0..g.c {
                    for ki in 0..g.k {
                        let base = ch * g.h * g.w + (i * g.s + ki) * g.w + j * g.s;
                        for kj in 0..g.k {
                            out[base + kj] += row[col + kj];
                        }
                        col += g.k;
                    }
                }
            }
        }
    }
    dx
}

fn apply(layer: &Layer, x: ArrayView2<f64>, cache: Option<&mut Option<Cache>>) -> Array2<f64> {
    let n = x.nrows();
    match layer {
        Layer::Dense { w, b, act } => {
            let z = x.dot(w) + b;
            let out = z.mapv(|v| act.eval(v));
            if let Some(c) = cache {
                *c = Some(Cache::Dense { z });
            }
            out
        }
        Layer::Conv { w, b, act, g } => {
            let x = x.as_standard_layout();
            let cols = im2col(&x.view(), g);
            let zc = cols.dot(&w.t());
            let p = g.positions();
            let mut z = Array2::<f64>::zeros((n, g.o * p));
            {
                let zs = z.as_slice_mut().expect("fresh array");
                let zcs = zc.as_slice().expect("fresh array");
                for s in 0..n {
                    for q in 0..p {
                        let src = &zcs[(s * p + q) * g.o..][..g.o];
                        for oc in 0..g.o {
                            zs[s * g.o * p + oc * p + q] = src[oc] + b[oc];
                        }
                    }
                }
            }
            let out = z.mapv(|v| act.eval(v));
            if let Some(c) = cache {
                *c = Some(Cache::Conv { cols, z });
            }
            out
        }
        Layer::Pool { size, c, h, w, oh, ow } => {
            let x = x.as_standard_layout();
            let xs = x.as_slice().expect("standard layout");
            let (sample, osample) = (c * h * w, c * oh * ow);
            let mut out = Array2::<f64>::zeros((n, osample));
            let os = out.as_slice_mut().expect("fresh array");
            let mut argmax = if cache.is_some() { vec![0usize; n * osample] } else { Vec::new() };
            for s in 0..n {
                for ch in 0..*c {
                    for i in 0..*oh {
                        for j in 0..*ow {
                            let mut best = ch * h * w + (i * size) * w + j * size;
                            for di in 0..*size {
                                for dj in 0..*size {
                                    let idx = ch * h * w + (i * size + di) * w + j * size + dj;
                                    if xs[s * sample + idx] > xs[s * sample + best] {
                                        best = idx;
                                    }
                                }
                            }
                            let o = s * osample + ch * oh * ow + i * ow + j;
                            os[o] = xs[s * sample + best];
                            if !argmax.is_empty() {
                                argmax[o] = best;
                            }
                        }
                    }
                }
            }
            if let Some(c) = cache {
                *c = Some(Cache::Pool { argmax });
            }
            out
        }
        Layer::Flatten => {
            if let Some(c) = cache {
                *c = Some(Cache::Flatten);
            }
            x.to_owned()
        }
        Layer::Output { w, b, head } => {
            let logits = x.dot(w) + b;
            if let Some(c) = cache {
                *c = Some(Cache::Output);
            }
            match head {
                OutputHead::Softmax => softmax_rows(logits),
                OutputHead::Sigmoid => {
                    let mut p = Array2::zeros((n, 2));
                    for (i, &z) in logits.column(0).iter().enumerate() {
                        let s = sigmoid(z);
                        p[[i, 0]] = 1.0 - s;
                        p[[i, 1]] = s;
                    }
                    p
                }
            }
        }
    }
}
