//! Small convolutional auto-encoder with hand-written reverse-mode gradients.
//!
//! Encoder: 1-D convolution over the 50-step, 2-channel trajectory, then two
//! dense layers down to the latent code. Decoder: a dense layer, a 1-D
//! transposed convolution and a dense output layer back to 100 values.
//! Hidden layers use `tanh`; the latent and output layers are linear.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeArchitecture {
    pub seq_len: usize,
    pub channels: usize,
    pub conv_maps: usize,
    pub conv_kernel: usize,
    pub conv_stride: usize,
    pub conv_padding: usize,
    pub hidden: usize,
    pub latent: usize,
    /// The decoder's hidden layer is read as a one-channel sequence and
    /// upsampled into `deconv_maps` feature maps.
    pub deconv_maps: usize,
    pub deconv_kernel: usize,
    pub deconv_stride: usize,
}

impl Default for AeArchitecture {
    fn default() -> Self {
        Self {
            seq_len: 50,
            channels: 2,
            conv_maps: 2,
            conv_kernel: 5,
            conv_stride: 2,
            conv_padding: 2,
            hidden: 5,
            latent: 2,
            deconv_maps: 2,
            deconv_kernel: 5,
            deconv_stride: 5,
        }
    }
}

impl AeArchitecture {
    pub fn input_dim(&self) -> usize {
        self.seq_len * self.channels
    }

    pub fn conv_len(&self) -> usize {
        (self.seq_len + 2 * self.conv_padding - self.conv_kernel) / self.conv_stride + 1
    }

    pub fn deconv_len(&self) -> usize {
        (self.hidden - 1) * self.deconv_stride + self.deconv_kernel
    }

    /// Kernel taps `m0..m1` of convolution output `j` that fall inside the
    /// unpadded sequence, and the time step under tap `m0`.
    fn conv_taps(&self, j: usize) -> (usize, usize, usize) {
        let base = j * self.conv_stride;
        let m0 = self.conv_padding.saturating_sub(base);
        let m1 = self
            .conv_kernel
            .min((self.seq_len + self.conv_padding).saturating_sub(base));
        (m0, m1.max(m0), base + m0 - self.conv_padding)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.seq_len > 0
            && self.channels > 0
            && self.conv_maps > 0
            && self.conv_kernel > 0
            && self.conv_stride > 0
            && self.seq_len + 2 * self.conv_padding >= self.conv_kernel
            && self.hidden > 0
            && self.latent > 0
            && self.deconv_maps > 0
            && self.deconv_kernel > 0
            && self.deconv_stride > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "degenerate auto-encoder architecture {self:?}"
            )))
        }
    }

    pub fn layout(&self) -> Layout {
        let conv_out = self.conv_maps * self.conv_len();
        let deconv_out = self.deconv_maps * self.deconv_len();
        let mut at = 0;
        let mut take = |n: usize| {
            let start = at;
            at += n;
            start
        };
        let conv_w = take(self.conv_maps * self.channels * self.conv_kernel);
        let conv_b = take(self.conv_maps);
        let enc_w = take(self.hidden * conv_out);
        let enc_b = take(self.hidden);
        let lat_w = take(self.latent * self.hidden);
        let lat_b = take(self.latent);
        let dec_w = take(self.hidden * self.latent);
        let dec_b = take(self.hidden);
        let deconv_w = take(self.deconv_maps * self.deconv_kernel);
        let deconv_b = take(self.deconv_maps);
        let out_w = take(self.input_dim() * deconv_out);
        let out_b = take(self.input_dim());
        Layout {
            conv_w,
            conv_b,
            enc_w,
            enc_b,
            lat_w,
            lat_b,
            dec_w,
            dec_b,
            deconv_w,
            deconv_b,
            out_w,
            out_b,
            total: at,
            conv_out,
            deconv_out,
        }
    }

    /// Number of trainable parameters.
    pub fn param_count(&self) -> usize {
        self.layout().total
    }
}

/// Offsets of each parameter block in the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub conv_w: usize,
    pub conv_b: usize,
    pub enc_w: usize,
    pub enc_b: usize,
    pub lat_w: usize,
    pub lat_b: usize,
    pub dec_w: usize,
    pub dec_b: usize,
    pub deconv_w: usize,
    pub deconv_b: usize,
    pub out_w: usize,
    pub out_b: usize,
    pub total: usize,
    conv_out: usize,
    deconv_out: usize,
}

/// Per-sample activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct Activations {
    conv: Vec<f64>,
    enc: Vec<f64>,
    latent: Vec<f64>,
    dec: Vec<f64>,
    deconv: Vec<f64>,
    out: Vec<f64>,
}

impl Activations {
    pub fn latent(&self) -> &[f64] {
        &self.latent
    }

    pub fn latent_mut(&mut self) -> &mut [f64] {
        &mut self.latent
    }

    pub fn output(&self) -> &[f64] {
        &self.out
    }
}

/// Scratch buffers for the backward pass.
#[derive(Clone, Debug)]
struct Deltas {
    deconv: Vec<f64>,
    dec: Vec<f64>,
    latent: Vec<f64>,
    enc: Vec<f64>,
    conv: Vec<f64>,
}

const LOSS_CHUNK: usize = 64;

/// The auto-encoder network operating on standardized inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct AeNetwork {
    arch: AeArchitecture,
    layout: Layout,
    params: Vec<f64>,
}

impl AeNetwork {
    pub fn zeros(arch: AeArchitecture) -> Result<Self> {
        arch.validate()?;
        let layout = arch.layout();
        Ok(Self {
            params: vec![0.0; layout.total],
            layout,
            arch,
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn random<R: Rng + ?Sized>(arch: AeArchitecture, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        let a = net.arch.clone();
        let l = net.layout();
        let blocks = [
            (
                l.conv_w,
                l.conv_b,
                a.channels * a.conv_kernel,
                a.conv_maps * a.conv_kernel,
            ),
            (l.enc_w, l.enc_b, l.conv_out, a.hidden),
            (l.lat_w, l.lat_b, a.hidden, a.latent),
            (l.dec_w, l.dec_b, a.latent, a.hidden),
            (
                l.deconv_w,
                l.deconv_b,
                a.deconv_kernel,
                a.deconv_maps * a.deconv_kernel,
            ),
            (l.out_w, l.out_b, l.deconv_out, a.input_dim()),
        ];
        for (start, end, fan_in, fan_out) in blocks {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            for p in &mut net.params[start..end] {
                *p = dist.sample(rng);
            }
        }
        Ok(net)
    }

    pub fn from_params(arch: AeArchitecture, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        if params.len() != net.params.len() {
            return Err(Error::DimensionMismatch {
                expected: net.params.len(),
                got: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn architecture(&self) -> &AeArchitecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    fn layout(&self) -> Layout {
        self.layout
    }

    pub fn activations(&self) -> Activations {
        let l = self.layout();
        let a = &self.arch;
        Activations {
            conv: vec![0.0; l.conv_out],
            enc: vec![0.0; a.hidden],
            latent: vec![0.0; a.latent],
            dec: vec![0.0; a.hidden],
            deconv: vec![0.0; l.deconv_out],
            out: vec![0.0; a.input_dim()],
        }
    }

    fn deltas(&self) -> Deltas {
        let l = self.layout();
        let a = &self.arch;
        Deltas {
            deconv: vec![0.0; l.deconv_out],
            dec: vec![0.0; a.hidden],
            latent: vec![0.0; a.latent],
            enc: vec![0.0; a.hidden],
            conv: vec![0.0; l.conv_out],
        }
    }

    /// Encoder half only.
    pub fn encode_into(&self, x: &[f64], act: &mut Activations) {
        let a = &self.arch;
        let l = self.layout();
        let p = &self.params;
        let conv_len = a.conv_len();

        for o in 0..a.conv_maps {
            for j in 0..conv_len {
                let mut s = p[l.conv_b + o];
                let (m0, m1, t0) = a.conv_taps(j);
                for c in 0..a.channels {
                    let w = &p[l.conv_w + (o * a.channels + c) * a.conv_kernel..][m0..m1];
                    for (k, wm) in w.iter().enumerate() {
                        s += wm * x[(t0 + k) * a.channels + c];
                    }
                }
                act.conv[o * conv_len + j] = s.tanh();
            }
        }
        dense(
            &p[l.enc_w..l.enc_b],
            &p[l.enc_b..l.lat_w],
            &act.conv,
            &mut act.enc,
        );
        act.enc.iter_mut().for_each(|v| *v = v.tanh());
        dense(
            &p[l.lat_w..l.lat_b],
            &p[l.lat_b..l.dec_w],
            &act.enc,
            &mut act.latent,
        );
    }

    /// Decoder half, reading `act.latent`.
    pub fn decode_into(&self, act: &mut Activations) {
        self.decode_hidden(act);
        let l = self.layout();
        let p = &self.params;
        dense(
            &p[l.out_w..l.out_b],
            &p[l.out_b..l.total],
            &act.deconv,
            &mut act.out,
        );
    }

    /// Decoder up to the transposed convolution.
    fn decode_hidden(&self, act: &mut Activations) {
        let a = &self.arch;
        let l = self.layout();
        let p = &self.params;
        let deconv_len = a.deconv_len();

        dense(
            &p[l.dec_w..l.dec_b],
            &p[l.dec_b..l.deconv_w],
            &act.latent,
            &mut act.dec,
        );
        act.dec.iter_mut().for_each(|v| *v = v.tanh());
        for o in 0..a.deconv_maps {
            let out = &mut act.deconv[o * deconv_len..(o + 1) * deconv_len];
            out.fill(p[l.deconv_b + o]);
            let w = &p[l.deconv_w + o * a.deconv_kernel..][..a.deconv_kernel];
            for (i, h) in act.dec.iter().enumerate() {
                let dst = &mut out[i * a.deconv_stride..][..a.deconv_kernel];
                for (d, wm) in dst.iter_mut().zip(w) {
                    *d += wm * h;
                }
            }
            out.iter_mut().for_each(|v| *v = v.tanh());
        }
    }

    pub fn forward_into(&self, x: &[f64], act: &mut Activations) {
        self.encode_into(x, act);
        self.decode_into(act);
    }

    /// Returns `(latent, reconstruction)`.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_input(x)?;
        if !self.is_finite() {
            return Err(Error::NonFinite("auto-encoder parameters"));
        }
        let mut act = self.activations();
        self.forward_into(x, &mut act);
        Ok((act.latent, act.out))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arch.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.arch.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `0.5 * mean_b ||x_b - reconstruction(x_b)||^2`
    pub fn loss(&self, batch: &Dataset) -> f64 {
        let mut buffers = GradientBuffers::new(self);
        let rows: Vec<&[f64]> = batch.rows().collect();
        let total: f64 = rows
            .chunks(LOSS_CHUNK)
            .map(|c| buffers.squared_error(self, c))
            .sum();
        0.5 * total / batch.len().max(1) as f64
    }

    /// Exact gradient of [`AeNetwork::loss`] with respect to every parameter.
    /// Samples are accumulated in row order, so the sum is reproducible.
    pub fn gradients(&self, batch: &Dataset) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        self.check_input(batch.row(0))?;
        let mut grad = vec![0.0; self.params.len()];
        let mut trainer = GradientBuffers::new(self);
        let rows: Vec<&[f64]> = batch.rows().collect();
        let loss = trainer.accumulate(self, &rows, &mut grad);
        Ok((loss, grad))
    }
}

/// Reusable buffers for mini-batch gradient accumulation.
///
/// The output layer holds nearly all of the network's weights, so it is
/// evaluated for the whole mini-batch at once with matrix products; the
/// small layers below it run per sample.
pub(crate) struct GradientBuffers {
    acts: Vec<Activations>,
    delta: Deltas,
    hidden: Vec<f64>,
    out: Vec<f64>,
    d_hidden: Vec<f64>,
}

impl GradientBuffers {
    pub(crate) fn new(net: &AeNetwork) -> Self {
        Self {
            acts: Vec::new(),
            delta: net.deltas(),
            hidden: Vec::new(),
            out: Vec::new(),
            d_hidden: Vec::new(),
        }
    }

    /// Runs the forward pass over `rows`, leaving per-row activations in
    /// `acts` and the pre-bias output layer in `out`.
    fn forward_batch(&mut self, net: &AeNetwork, rows: &[&[f64]]) {
        let nh = net.layout.deconv_out;
        let no = net.arch.input_dim();
        let b = rows.len();
        while self.acts.len() < b {
            self.acts.push(net.activations());
        }
        self.hidden.resize(b * nh, 0.0);
        self.out.resize(b * no, 0.0);
        for (k, x) in rows.iter().enumerate() {
            let act = &mut self.acts[k];
            net.encode_into(x, act);
            net.decode_hidden(act);
            self.hidden[k * nh..(k + 1) * nh].copy_from_slice(&act.deconv);
        }
        let w = &net.params[net.layout.out_w..net.layout.out_b];
        // out (b x no) = hidden (b x nh) . W^T, with W stored [no][nh]
        unsafe {
            matrixmultiply::dgemm(
                b,
                nh,
                no,
                1.0,
                self.hidden.as_ptr(),
                nh as isize,
                1,
                w.as_ptr(),
                1,
                nh as isize,
                0.0,
                self.out.as_mut_ptr(),
                no as isize,
                1,
            );
        }
    }

    /// Sum over `rows` of the squared reconstruction error.
    pub(crate) fn squared_error(&mut self, net: &AeNetwork, rows: &[&[f64]]) -> f64 {
        self.forward_batch(net, rows);
        let no = net.arch.input_dim();
        let bias = &net.params[net.layout.out_b..net.layout.total];
        let mut sq = 0.0;
        for (k, x) in rows.iter().enumerate() {
            for ((o, b), t) in self.out[k * no..(k + 1) * no]
                .iter()
                .zip(bias)
                .zip(x.iter())
            {
                let r = o + b - t;
                sq += r * r;
            }
        }
        sq
    }

    /// Writes the gradient of the mean loss over `rows` into `grad` and
    /// returns that loss.
    pub(crate) fn accumulate(&mut self, net: &AeNetwork, rows: &[&[f64]], grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        if rows.is_empty() {
            return 0.0;
        }
        let l = net.layout;
        let nh = l.deconv_out;
        let no = net.arch.input_dim();
        let b = rows.len();
        let scale = 1.0 / b as f64;
        self.forward_batch(net, rows);

        // residuals, scaled, overwrite the output buffer
        let bias = &net.params[l.out_b..l.total];
        let mut sq = 0.0;
        for (k, x) in rows.iter().enumerate() {
            for ((o, bi), t) in self.out[k * no..(k + 1) * no]
                .iter_mut()
                .zip(bias)
                .zip(x.iter())
            {
                let r = *o + bi - t;
                sq += r * r;
                *o = r * scale;
            }
        }
        let (head, gb) = grad.split_at_mut(l.out_b);
        for k in 0..b {
            for (g, d) in gb.iter_mut().zip(&self.out[k * no..(k + 1) * no]) {
                *g += d;
            }
        }
        let gw = &mut head[l.out_w..];
        let w = &net.params[l.out_w..l.out_b];
        self.d_hidden.resize(b * nh, 0.0);
        unsafe {
            // gW (no x nh) += D^T (no x b) . hidden (b x nh)
            matrixmultiply::dgemm(
                no,
                b,
                nh,
                1.0,
                self.out.as_ptr(),
                1,
                no as isize,
                self.hidden.as_ptr(),
                nh as isize,
                1,
                1.0,
                gw.as_mut_ptr(),
                nh as isize,
                1,
            );
            // dH (b x nh) = D (b x no) . W (no x nh)
            matrixmultiply::dgemm(
                b,
                no,
                nh,
                1.0,
                self.out.as_ptr(),
                no as isize,
                1,
                w.as_ptr(),
                nh as isize,
                1,
                0.0,
                self.d_hidden.as_mut_ptr(),
                nh as isize,
                1,
            );
        }
        for (k, x) in rows.iter().enumerate() {
            self.delta
                .deconv
                .copy_from_slice(&self.d_hidden[k * nh..(k + 1) * nh]);
            backprop_below_output(net, &self.acts[k], &mut self.delta, x, grad);
        }
        0.5 * sq * scale
    }
}

/// Backward pass from the transposed convolution down, for one sample whose
/// output-layer input gradient is already in `d.deconv`.
fn backprop_below_output(
    net: &AeNetwork,
    act: &Activations,
    d: &mut Deltas,
    x: &[f64],
    g: &mut [f64],
) {
    let a = &net.arch;
    let l = net.layout;
    let p = &net.params;
    tanh_backward(&mut d.deconv, &act.deconv);

    // transposed convolution
    let deconv_len = a.deconv_len();
    d.dec.fill(0.0);
    for o in 0..a.deconv_maps {
        let dz = &d.deconv[o * deconv_len..(o + 1) * deconv_len];
        g[l.deconv_b + o] += dz.iter().sum::<f64>();
        for (i, h) in act.dec.iter().enumerate() {
            let win = &dz[i * a.deconv_stride..][..a.deconv_kernel];
            let mut back = 0.0;
            for m in 0..a.deconv_kernel {
                g[l.deconv_w + o * a.deconv_kernel + m] += win[m] * h;
                back += p[l.deconv_w + o * a.deconv_kernel + m] * win[m];
            }
            d.dec[i] += back;
        }
    }
    tanh_backward(&mut d.dec, &act.dec);

    // decoder dense (input: latent)
    dense_backward(
        &p[l.dec_w..l.dec_b],
        &act.latent,
        &d.dec,
        &mut g[l.dec_w..l.deconv_w],
        a.latent,
        Some(&mut d.latent),
    );
    // latent dense (linear)
    dense_backward(
        &p[l.lat_w..l.lat_b],
        &act.enc,
        &d.latent,
        &mut g[l.lat_w..l.dec_w],
        a.hidden,
        Some(&mut d.enc),
    );
    tanh_backward(&mut d.enc, &act.enc);
    dense_backward(
        &p[l.enc_w..l.enc_b],
        &act.conv,
        &d.enc,
        &mut g[l.enc_w..l.lat_w],
        l.conv_out,
        Some(&mut d.conv),
    );
    tanh_backward(&mut d.conv, &act.conv);

    // convolution (input gradient not needed)
    let conv_len = a.conv_len();
    for o in 0..a.conv_maps {
        let dz = &d.conv[o * conv_len..(o + 1) * conv_len];
        g[l.conv_b + o] += dz.iter().sum::<f64>();
        for c in 0..a.channels {
            let gw = l.conv_w + (o * a.channels + c) * a.conv_kernel;
            for (j, dzj) in dz.iter().enumerate() {
                let (m0, m1, t0) = a.conv_taps(j);
                for (k, gm) in g[gw + m0..gw + m1].iter_mut().enumerate() {
                    *gm += dzj * x[(t0 + k) * a.channels + c];
                }
            }
        }
    }
}

/// `out = W . input + b` with `W` row-major `[out][in]`.
fn dense(w: &[f64], b: &[f64], input: &[f64], out: &mut [f64]) {
    let n = input.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w[i * n..(i + 1) * n];
        *o = b[i] + row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>();
    }
}

/// Gradient of a dense layer. `g` covers the weight block followed by the
/// bias block; `d_in` receives `W^T . d_out` when requested.
fn dense_backward(
    w: &[f64],
    input: &[f64],
    d_out: &[f64],
    g: &mut [f64],
    n_in: usize,
    d_in: Option<&mut Vec<f64>>,
) {
    let n_out = d_out.len();
    let (gw, gb) = g.split_at_mut(n_in * n_out);
    for (i, &di) in d_out.iter().enumerate() {
        gb[i] += di;
        for (gwj, xj) in gw[i * n_in..(i + 1) * n_in].iter_mut().zip(input) {
            *gwj += di * xj;
        }
    }
    if let Some(d_in) = d_in {
        d_in.fill(0.0);
        for (i, &di) in d_out.iter().enumerate() {
            for (dj, wj) in d_in.iter_mut().zip(&w[i * n_in..(i + 1) * n_in]) {
                *dj += wj * di;
            }
        }
    }
}

fn tanh_backward(delta: &mut [f64], activated: &[f64]) {
    for (d, a) in delta.iter_mut().zip(activated) {
        *d *= 1.0 - a * a;
    }
}
