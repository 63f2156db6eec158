//! Velocity fields: the gauge flow model, the plain baselines, and a fixed-step
//! ODE integrator for sampling.
//!
//! Gauge velocity at `(x, t)` with `z = [x; t]`:
//!
//! ```text
//! v(x, t) = v_theta(z) - alpha(t) * (sum_mu d^mu A_mu(z)) v_nu(z)
//! ```
//!
//! where `d = v_theta(z)` ([`ModelKind::GaugeDirTheta`]) or `d = v_nu(z)`
//! ([`ModelKind::GaugeDirNu`]). The base manifold is `R^N` with a trivial
//! bundle, so the projection onto the tangent space is the identity.
//! Gradients flow through `d` as well.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{check_len, Error, Result};
use crate::gauge::{decode_gauge_output, GaugeFieldValue, SkewBasis};
use crate::nn::{Mlp, MlpTrace};
use crate::rng::Prng;

pub const PLAIN_BASELINE_WIDTH: usize = 128;
pub const ALPHA_HIDDEN_WIDTH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    /// `[N+1, 128, 128, 128, N]`.
    PlainBaseline,
    /// `[N+1, w', w', w', N]` with the smallest `w'` whose parameter count
    /// reaches the gauge model's.
    PlainMatched,
    /// Gauge model with direction field `d = v_theta`.
    GaugeDirTheta,
    /// Gauge model with direction field `d = v_nu`.
    GaugeDirNu,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::PlainBaseline,
        ModelKind::PlainMatched,
        ModelKind::GaugeDirTheta,
        ModelKind::GaugeDirNu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::PlainBaseline => "plain-baseline",
            ModelKind::PlainMatched => "plain-matched",
            ModelKind::GaugeDirTheta => "gauge-theta",
            ModelKind::GaugeDirNu => "gauge-nu",
        }
    }

    pub fn is_gauge(self) -> bool {
        matches!(self, ModelKind::GaugeDirTheta | ModelKind::GaugeDirNu)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownModelKind(pub String);

impl fmt::Display for UnknownModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown model kind `{}` (expected plain-baseline, plain-matched, gauge-theta or gauge-nu)",
            self.0
        )
    }
}

impl core::error::Error for UnknownModelKind {}

impl FromStr for ModelKind {
    type Err = UnknownModelKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownModelKind(s.into()))
    }
}

/// Hidden width of every gauge sub-network: 32 above ten dimensions, else 64.
pub fn gauge_width(n_dim: usize) -> usize {
    if n_dim > 10 {
        32
    } else {
        64
    }
}

/// Layer dims of `v_theta`, `A`, `v_nu` and `alpha`, in that order.
pub fn gauge_network_dims(n_dim: usize) -> [Vec<usize>; 4] {
    let w = gauge_width(n_dim);
    let gauge_out = n_dim * n_dim * (n_dim - 1) / 2;
    [
        vec![n_dim + 1, w, w, n_dim],
        vec![n_dim + 1, w, w, gauge_out],
        vec![n_dim + 1, w, w, n_dim],
        vec![1, ALPHA_HIDDEN_WIDTH, 1],
    ]
}

pub fn plain_dims(n_dim: usize, width: usize) -> Vec<usize> {
    vec![n_dim + 1, width, width, width, n_dim]
}

pub fn gauge_param_count(n_dim: usize) -> usize {
    gauge_network_dims(n_dim).iter().map(|d| Mlp::param_count_for(d)).sum()
}

/// Smallest three-hidden-layer width whose count is at least the gauge model's.
pub fn matched_plain_width(n_dim: usize) -> usize {
    let target = gauge_param_count(n_dim);
    (1..)
        .find(|&w| Mlp::param_count_for(&plain_dims(n_dim, w)) >= target)
        .expect("parameter count grows without bound in the width")
}

fn plain_width(kind: ModelKind, n_dim: usize) -> usize {
    match kind {
        ModelKind::PlainMatched => matched_plain_width(n_dim),
        _ => PLAIN_BASELINE_WIDTH,
    }
}

/// Parameter count of a model without building it.
pub fn model_param_count(kind: ModelKind, n_dim: usize) -> usize {
    if kind.is_gauge() {
        gauge_param_count(n_dim)
    } else {
        Mlp::param_count_for(&plain_dims(n_dim, plain_width(kind, n_dim)))
    }
}

fn check_n_dim(n_dim: usize) -> Result<()> {
    if n_dim < 2 {
        Err(Error::InvalidArgument("model dimension must be at least 2"))
    } else {
        Ok(())
    }
}

fn network_input(x: &[f64], t: f64) -> Vec<f64> {
    let mut z = Vec::with_capacity(x.len() + 1);
    z.extend_from_slice(x);
    z.push(t);
    z
}

/// Anything that maps `(x, t)` to a velocity in `R^N`.
pub trait VelocityField {
    fn n_dim(&self) -> usize;
    fn velocity(&self, x: &[f64], t: f64) -> Result<Vec<f64>>;
}

/// A velocity field with parameters and a reverse pass.
///
/// Parameters are exposed as segments whose concatenation defines the flat
/// layout used by gradient buffers.
pub trait TrainableField: VelocityField {
    type Trace;

    fn param_count(&self) -> usize;

    fn forward(&self, x: &[f64], t: f64) -> Result<(Vec<f64>, Self::Trace)>;

    /// Adds the gradient of `<grad_v, velocity(x, t)>` into `grads`.
    fn backward_into(&self, trace: &Self::Trace, grad_v: &[f64], grads: &mut [f64]) -> Result<()>;

    fn param_segments(&self) -> Vec<&[f64]>;

    fn param_segments_mut(&mut self) -> Vec<&mut [f64]>;

    fn flat_params(&self) -> Vec<f64> {
        self.param_segments().concat()
    }

    fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        check_len("flat parameters", self.param_count(), params.len())?;
        let mut at = 0;
        for seg in self.param_segments_mut() {
            let len = seg.len();
            seg.copy_from_slice(&params[at..at + len]);
            at += len;
        }
        Ok(())
    }
}

/// Wraps a closure as a [`VelocityField`]; handy for analytic fields.
pub struct FnField<F> {
    n_dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64], f64) -> Vec<f64>,
{
    pub fn new(n_dim: usize, f: F) -> Self {
        FnField { n_dim, f }
    }
}

impl<F> VelocityField for FnField<F>
where
    F: Fn(&[f64], f64) -> Vec<f64>,
{
    fn n_dim(&self) -> usize {
        self.n_dim
    }

    fn velocity(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        check_len("point", self.n_dim, x.len())?;
        let v = (self.f)(x, t);
        check_len("velocity", self.n_dim, v.len())?;
        Ok(v)
    }
}

/// Single MLP on `[x; t]`.
#[derive(Debug, Clone)]
pub struct PlainFlowModel {
    n_dim: usize,
    kind: ModelKind,
    seed: u64,
    net: Mlp,
}

impl PlainFlowModel {
    /// Initializes the network from `Prng::new(seed)`.
    pub fn new(kind: ModelKind, n_dim: usize, seed: u64) -> Result<Self> {
        if kind.is_gauge() {
            return Err(Error::InvalidArgument("gauge kinds are built by GaugeFlowModel"));
        }
        check_n_dim(n_dim)?;
        let net = Mlp::init(&plain_dims(n_dim, plain_width(kind, n_dim)), &mut Prng::new(seed))?;
        Ok(PlainFlowModel { n_dim, kind, seed, net })
    }

    pub fn from_network(kind: ModelKind, n_dim: usize, seed: u64, net: Mlp) -> Result<Self> {
        if kind.is_gauge() {
            return Err(Error::InvalidArgument("gauge kinds are built by GaugeFlowModel"));
        }
        check_n_dim(n_dim)?;
        let expected = plain_dims(n_dim, plain_width(kind, n_dim));
        if net.dims() != expected.as_slice() {
            return Err(Error::InvalidArgument("network dims do not match the model kind"));
        }
        Ok(PlainFlowModel { n_dim, kind, seed, net })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }
}

impl VelocityField for PlainFlowModel {
    fn n_dim(&self) -> usize {
        self.n_dim
    }

    fn velocity(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        check_len("point", self.n_dim, x.len())?;
        self.net.eval(&network_input(x, t))
    }
}

impl TrainableField for PlainFlowModel {
    type Trace = MlpTrace;

    fn param_count(&self) -> usize {
        self.net.num_params()
    }

    fn forward(&self, x: &[f64], t: f64) -> Result<(Vec<f64>, MlpTrace)> {
        check_len("point", self.n_dim, x.len())?;
        self.net.forward(&network_input(x, t))
    }

    fn backward_into(&self, trace: &MlpTrace, grad_v: &[f64], grads: &mut [f64]) -> Result<()> {
        self.net.backward_into(trace, grad_v, grads).map(|_| ())
    }

    fn param_segments(&self) -> Vec<&[f64]> {
        vec![self.net.params()]
    }

    fn param_segments_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.net.params_mut()]
    }
}

/// The four learnable fields of a gauge flow model.
#[derive(Debug, Clone)]
pub struct GaugeFlowModel {
    n_dim: usize,
    variant: ModelKind,
    seed: u64,
    basis: SkewBasis,
    v_theta: Mlp,
    a_net: Mlp,
    v_nu: Mlp,
    alpha_net: Mlp,
}

/// Everything the gauge velocity is assembled from at one `(x, t)`.
#[derive(Debug, Clone)]
pub struct GaugeTerms {
    pub v_theta: Vec<f64>,
    /// Flat gauge-network output, `N` blocks of so(N) coefficients.
    pub gauge_coeffs: Vec<f64>,
    pub v_nu: Vec<f64>,
    pub alpha: f64,
    /// so(N) coefficients of `sum_mu d^mu A_mu`.
    pub contracted: Vec<f64>,
    /// `(sum_mu d^mu A_mu) v_nu`, before scaling by `-alpha`.
    pub correction: Vec<f64>,
    pub velocity: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GaugeTrace {
    terms: GaugeTerms,
    v_theta: MlpTrace,
    a_net: MlpTrace,
    v_nu: MlpTrace,
    alpha: MlpTrace,
}

impl GaugeTrace {
    pub fn terms(&self) -> &GaugeTerms {
        &self.terms
    }
}

pub const GAUGE_NETWORK_NAMES: [&str; 4] = ["v_theta", "a_net", "v_nu", "alpha_net"];

impl GaugeFlowModel {
    /// Sub-networks draw from `Prng::new(seed + i)` for `i = 0..4` in the
    /// order `v_theta`, `a_net`, `v_nu`, `alpha_net`.
    pub fn new(variant: ModelKind, n_dim: usize, seed: u64) -> Result<Self> {
        if !variant.is_gauge() {
            return Err(Error::InvalidArgument("plain kinds are built by PlainFlowModel"));
        }
        check_n_dim(n_dim)?;
        let dims = gauge_network_dims(n_dim);
        let mut nets = Vec::with_capacity(4);
        for (i, d) in dims.iter().enumerate() {
            nets.push(Mlp::init(d, &mut Prng::new(seed.wrapping_add(i as u64)))?);
        }
        let [v_theta, a_net, v_nu, alpha_net]: [Mlp; 4] = nets.try_into().expect("four networks");
        Self::from_networks(variant, n_dim, seed, [v_theta, a_net, v_nu, alpha_net])
    }

    pub fn from_networks(variant: ModelKind, n_dim: usize, seed: u64, nets: [Mlp; 4]) -> Result<Self> {
        if !variant.is_gauge() {
            return Err(Error::InvalidArgument("plain kinds are built by PlainFlowModel"));
        }
        check_n_dim(n_dim)?;
        for (net, dims) in nets.iter().zip(gauge_network_dims(n_dim).iter()) {
            if net.dims() != dims.as_slice() {
                return Err(Error::InvalidArgument(
                    "network dims do not match the gauge model layout",
                ));
            }
        }
        let [v_theta, a_net, v_nu, alpha_net] = nets;
        Ok(GaugeFlowModel {
            n_dim,
            variant,
            seed,
            basis: SkewBasis::new(n_dim)?,
            v_theta,
            a_net,
            v_nu,
            alpha_net,
        })
    }

    pub fn variant(&self) -> ModelKind {
        self.variant
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn width(&self) -> usize {
        gauge_width(self.n_dim)
    }

    pub fn basis(&self) -> &SkewBasis {
        &self.basis
    }

    pub fn v_theta(&self) -> &Mlp {
        &self.v_theta
    }

    pub fn a_net(&self) -> &Mlp {
        &self.a_net
    }

    pub fn v_nu(&self) -> &Mlp {
        &self.v_nu
    }

    pub fn alpha_net(&self) -> &Mlp {
        &self.alpha_net
    }

    pub fn v_theta_mut(&mut self) -> &mut Mlp {
        &mut self.v_theta
    }

    pub fn a_net_mut(&mut self) -> &mut Mlp {
        &mut self.a_net
    }

    pub fn v_nu_mut(&mut self) -> &mut Mlp {
        &mut self.v_nu
    }

    pub fn alpha_net_mut(&mut self) -> &mut Mlp {
        &mut self.alpha_net
    }

    pub fn networks(&self) -> [(&'static str, &Mlp); 4] {
        [
            (GAUGE_NETWORK_NAMES[0], &self.v_theta),
            (GAUGE_NETWORK_NAMES[1], &self.a_net),
            (GAUGE_NETWORK_NAMES[2], &self.v_nu),
            (GAUGE_NETWORK_NAMES[3], &self.alpha_net),
        ]
    }

    pub fn alpha(&self, t: f64) -> Result<f64> {
        Ok(self.alpha_net.eval(&[t])?[0])
    }

    /// Gauge field value `A(x, t)`.
    pub fn gauge_field(&self, x: &[f64], t: f64) -> Result<GaugeFieldValue> {
        check_len("point", self.n_dim, x.len())?;
        decode_gauge_output(&self.basis, &self.a_net.eval(&network_input(x, t))?)
    }

    fn assemble(&self, v_theta: Vec<f64>, gauge_coeffs: Vec<f64>, v_nu: Vec<f64>, alpha: f64) -> GaugeTerms {
        let n = self.n_dim;
        let dim_g = self.basis.len();
        let direction = match self.variant {
            ModelKind::GaugeDirTheta => &v_theta,
            _ => &v_nu,
        };
        let mut contracted = vec![0.0; dim_g];
        for (d_mu, block) in direction.iter().zip(gauge_coeffs.chunks_exact(dim_g)) {
            for (c, &a) in contracted.iter_mut().zip(block) {
                *c += d_mu * a;
            }
        }
        let mut correction = vec![0.0; n];
        self.basis.apply_coeffs_into(&contracted, &v_nu, &mut correction);
        let velocity = v_theta.iter().zip(&correction).map(|(&v, &w)| v - alpha * w).collect();
        GaugeTerms {
            v_theta,
            gauge_coeffs,
            v_nu,
            alpha,
            contracted,
            correction,
            velocity,
        }
    }

    /// Evaluates and returns every intermediate term.
    pub fn terms(&self, x: &[f64], t: f64) -> Result<GaugeTerms> {
        check_len("point", self.n_dim, x.len())?;
        let z = network_input(x, t);
        Ok(self.assemble(
            self.v_theta.eval(&z)?,
            self.a_net.eval(&z)?,
            self.v_nu.eval(&z)?,
            self.alpha_net.eval(&[t])?[0],
        ))
    }
}

impl VelocityField for GaugeFlowModel {
    fn n_dim(&self) -> usize {
        self.n_dim
    }

    fn velocity(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(self.terms(x, t)?.velocity)
    }
}

impl TrainableField for GaugeFlowModel {
    type Trace = GaugeTrace;

    fn param_count(&self) -> usize {
        self.networks().iter().map(|(_, n)| n.num_params()).sum()
    }

    fn forward(&self, x: &[f64], t: f64) -> Result<(Vec<f64>, GaugeTrace)> {
        check_len("point", self.n_dim, x.len())?;
        let z = network_input(x, t);
        let (v_theta, tr_theta) = self.v_theta.forward(&z)?;
        let (coeffs, tr_a) = self.a_net.forward(&z)?;
        let (v_nu, tr_nu) = self.v_nu.forward(&z)?;
        let (alpha, tr_alpha) = self.alpha_net.forward(&[t])?;
        let terms = self.assemble(v_theta, coeffs, v_nu, alpha[0]);
        let velocity = terms.velocity.clone();
        Ok((
            velocity,
            GaugeTrace {
                terms,
                v_theta: tr_theta,
                a_net: tr_a,
                v_nu: tr_nu,
                alpha: tr_alpha,
            },
        ))
    }

    fn backward_into(&self, trace: &GaugeTrace, grad_v: &[f64], grads: &mut [f64]) -> Result<()> {
        let n = self.n_dim;
        check_len("velocity gradient", n, grad_v.len())?;
        check_len("parameter gradient", self.param_count(), grads.len())?;
        let terms = &trace.terms;
        let dim_g = self.basis.len();

        // v = v_theta - alpha * w,  w = X(c) v_nu,  c = sum_mu d_mu C_mu
        let mut g_theta = grad_v.to_vec();
        let g_alpha = -grad_v.iter().zip(&terms.correction).map(|(g, w)| g * w).sum::<f64>();
        let g_w: Vec<f64> = grad_v.iter().map(|g| -terms.alpha * g).collect();

        let mut g_nu = vec![0.0; n];
        let mut g_c = vec![0.0; dim_g];
        for (p, &(a, b)) in self.basis.pairs().iter().enumerate() {
            let c = terms.contracted[p];
            g_c[p] = g_w[a] * terms.v_nu[b] - g_w[b] * terms.v_nu[a];
            g_nu[b] += c * g_w[a];
            g_nu[a] -= c * g_w[b];
        }

        let direction = match self.variant {
            ModelKind::GaugeDirTheta => &terms.v_theta,
            _ => &terms.v_nu,
        };
        let mut g_coeffs = vec![0.0; n * dim_g];
        let mut g_dir = vec![0.0; n];
        for mu in 0..n {
            let block = &terms.gauge_coeffs[mu * dim_g..(mu + 1) * dim_g];
            let g_block = &mut g_coeffs[mu * dim_g..(mu + 1) * dim_g];
            let mut acc = 0.0;
            for p in 0..dim_g {
                g_block[p] = direction[mu] * g_c[p];
                acc += block[p] * g_c[p];
            }
            g_dir[mu] = acc;
        }
        let target = match self.variant {
            ModelKind::GaugeDirTheta => &mut g_theta,
            _ => &mut g_nu,
        };
        for (g, d) in target.iter_mut().zip(&g_dir) {
            *g += d;
        }

        let sizes = [
            self.v_theta.num_params(),
            self.a_net.num_params(),
            self.v_nu.num_params(),
        ];
        let (gs_theta, rest) = grads.split_at_mut(sizes[0]);
        let (gs_a, rest) = rest.split_at_mut(sizes[1]);
        let (gs_nu, gs_alpha) = rest.split_at_mut(sizes[2]);
        self.v_theta.backward_into(&trace.v_theta, &g_theta, gs_theta)?;
        self.a_net.backward_into(&trace.a_net, &g_coeffs, gs_a)?;
        self.v_nu.backward_into(&trace.v_nu, &g_nu, gs_nu)?;
        self.alpha_net.backward_into(&trace.alpha, &[g_alpha], gs_alpha)?;
        Ok(())
    }

    fn param_segments(&self) -> Vec<&[f64]> {
        vec![
            self.v_theta.params(),
            self.a_net.params(),
            self.v_nu.params(),
            self.alpha_net.params(),
        ]
    }

    fn param_segments_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.v_theta.params_mut(),
            self.a_net.params_mut(),
            self.v_nu.params_mut(),
            self.alpha_net.params_mut(),
        ]
    }
}

/// Any of the four model kinds.
#[derive(Debug, Clone)]
pub enum FlowModel {
    Plain(PlainFlowModel),
    Gauge(GaugeFlowModel),
}

#[derive(Debug, Clone)]
pub enum FlowTrace {
    Plain(MlpTrace),
    Gauge(GaugeTrace),
}

impl FlowModel {
    pub fn build(kind: ModelKind, n_dim: usize, seed: u64) -> Result<Self> {
        if kind.is_gauge() {
            GaugeFlowModel::new(kind, n_dim, seed).map(FlowModel::Gauge)
        } else {
            PlainFlowModel::new(kind, n_dim, seed).map(FlowModel::Plain)
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            FlowModel::Plain(m) => m.kind(),
            FlowModel::Gauge(m) => m.variant(),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            FlowModel::Plain(m) => m.seed(),
            FlowModel::Gauge(m) => m.seed(),
        }
    }

    /// Named sub-networks in parameter order.
    pub fn networks(&self) -> Vec<(&'static str, &Mlp)> {
        match self {
            FlowModel::Plain(m) => vec![("net", m.net())],
            FlowModel::Gauge(m) => m.networks().to_vec(),
        }
    }

    pub fn as_gauge(&self) -> Option<&GaugeFlowModel> {
        match self {
            FlowModel::Gauge(m) => Some(m),
            FlowModel::Plain(_) => None,
        }
    }
}

/// Builds any model kind; see [`GaugeFlowModel::new`] for the seeding scheme.
pub fn build_model(kind: ModelKind, n_dim: usize, seed: u64) -> Result<FlowModel> {
    FlowModel::build(kind, n_dim, seed)
}

impl VelocityField for FlowModel {
    fn n_dim(&self) -> usize {
        match self {
            FlowModel::Plain(m) => m.n_dim(),
            FlowModel::Gauge(m) => m.n_dim(),
        }
    }

    fn velocity(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        match self {
            FlowModel::Plain(m) => m.velocity(x, t),
            FlowModel::Gauge(m) => m.velocity(x, t),
        }
    }
}

impl TrainableField for FlowModel {
    type Trace = FlowTrace;

    fn param_count(&self) -> usize {
        match self {
            FlowModel::Plain(m) => m.param_count(),
            FlowModel::Gauge(m) => m.param_count(),
        }
    }

    fn forward(&self, x: &[f64], t: f64) -> Result<(Vec<f64>, FlowTrace)> {
        match self {
            FlowModel::Plain(m) => m.forward(x, t).map(|(v, tr)| (v, FlowTrace::Plain(tr))),
            FlowModel::Gauge(m) => m.forward(x, t).map(|(v, tr)| (v, FlowTrace::Gauge(tr))),
        }
    }

    fn backward_into(&self, trace: &FlowTrace, grad_v: &[f64], grads: &mut [f64]) -> Result<()> {
        match (self, trace) {
            (FlowModel::Plain(m), FlowTrace::Plain(tr)) => m.backward_into(tr, grad_v, grads),
            (FlowModel::Gauge(m), FlowTrace::Gauge(tr)) => m.backward_into(tr, grad_v, grads),
            _ => Err(Error::StaleTrace),
        }
    }

    fn param_segments(&self) -> Vec<&[f64]> {
        match self {
            FlowModel::Plain(m) => m.param_segments(),
            FlowModel::Gauge(m) => m.param_segments(),
        }
    }

    fn param_segments_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            FlowModel::Plain(m) => m.param_segments_mut(),
            FlowModel::Gauge(m) => m.param_segments_mut(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Rk4,
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Integrator::Euler),
            "rk4" => Ok(Integrator::Rk4),
            _ => Err(Error::InvalidArgument("integrator must be euler or rk4")),
        }
    }
}

fn axpy(x: &[f64], a: f64, v: &[f64]) -> Vec<f64> {
    x.iter().zip(v).map(|(xi, vi)| xi + a * vi).collect()
}

/// Fixed-step integration of `dx/dt = v(x, t)` from `t = 0` to `t = 1`.
///
/// Returns the `steps + 1` states on the uniform grid `t_k = k / steps`.
pub fn integrate<F: VelocityField + ?Sized>(
    field: &F,
    x0: &[f64],
    steps: usize,
    method: Integrator,
) -> Result<Vec<Vec<f64>>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("integration needs at least one step"));
    }
    check_len("initial state", field.n_dim(), x0.len())?;
    let dt = 1.0 / steps as f64;
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(x0.to_vec());
    let mut x = x0.to_vec();
    for k in 0..steps {
        let t = k as f64 / steps as f64;
        x = match method {
            Integrator::Euler => axpy(&x, dt, &field.velocity(&x, t)?),
            Integrator::Rk4 => {
                let k1 = field.velocity(&x, t)?;
                let k2 = field.velocity(&axpy(&x, 0.5 * dt, &k1), t + 0.5 * dt)?;
                let k3 = field.velocity(&axpy(&x, 0.5 * dt, &k2), t + 0.5 * dt)?;
                let k4 = field.velocity(&axpy(&x, dt, &k3), (k + 1) as f64 / steps as f64)?;
                x.iter()
                    .enumerate()
                    .map(|(i, xi)| xi + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect()
            }
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "trajectory state",
                index: k + 1,
            });
        }
        trajectory.push(x.clone());
    }
    Ok(trajectory)
}

/// Pushes `count` standard-normal draws through the flow; returns the end
/// points row-major. Each start point takes `N` normals from `rng`.
pub fn sample_points<F: VelocityField + ?Sized>(
    field: &F,
    count: usize,
    steps: usize,
    method: Integrator,
    rng: &mut Prng,
) -> Result<Vec<f64>> {
    let n = field.n_dim();
    let mut out = Vec::with_capacity(count * n);
    let mut x0 = vec![0.0; n];
    for _ in 0..count {
        rng.fill_normal(&mut x0);
        let traj = integrate(field, &x0, steps, method)?;
        out.extend_from_slice(&traj[steps]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::dot;

    #[test]
    fn widths_follow_dimension_rule() {
        let m = GaugeFlowModel::new(ModelKind::GaugeDirTheta, 3, 0).unwrap();
        assert_eq!(m.width(), 64);
        assert_eq!(m.a_net().output_dim(), 9);
        assert_eq!(m.v_theta().dims(), &[4, 64, 64, 3]);
        let m = GaugeFlowModel::new(ModelKind::GaugeDirTheta, 16, 0).unwrap();
        assert_eq!(m.width(), 32);
        assert_eq!(gauge_width(10), 64);
        assert_eq!(gauge_width(11), 32);
    }

    #[test]
    fn build_rejects_small_dims_and_wrong_kinds() {
        assert!(build_model(ModelKind::GaugeDirNu, 1, 0).is_err());
        assert!(build_model(ModelKind::PlainBaseline, 1, 0).is_err());
        assert!(GaugeFlowModel::new(ModelKind::PlainBaseline, 3, 0).is_err());
        assert!(PlainFlowModel::new(ModelKind::GaugeDirNu, 3, 0).is_err());
    }

    #[test]
    fn build_is_deterministic_and_seeds_subnetworks_in_order() {
        let a = GaugeFlowModel::new(ModelKind::GaugeDirNu, 4, 77).unwrap();
        let b = GaugeFlowModel::new(ModelKind::GaugeDirNu, 4, 77).unwrap();
        assert_eq!(a.flat_params(), b.flat_params());
        let dims = gauge_network_dims(4);
        let expected_a = Mlp::init(&dims[1], &mut Prng::new(78)).unwrap();
        assert_eq!(a.a_net().params(), expected_a.params());
        let expected_alpha = Mlp::init(&dims[3], &mut Prng::new(80)).unwrap();
        assert_eq!(a.alpha_net().params(), expected_alpha.params());
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(model_param_count(ModelKind::GaugeDirTheta, 3), 14464);
        assert_eq!(model_param_count(ModelKind::PlainBaseline, 3), 34051);
        let m = build_model(ModelKind::GaugeDirNu, 3, 1).unwrap();
        assert_eq!(m.param_count(), 14464);
        let m = build_model(ModelKind::PlainBaseline, 3, 1).unwrap();
        assert_eq!(m.param_count(), 34051);
    }

    #[test]
    fn matched_width_is_minimal() {
        for n in 2..=32 {
            let w = matched_plain_width(n);
            let target = gauge_param_count(n);
            assert!(Mlp::param_count_for(&plain_dims(n, w)) >= target);
            assert!(w == 1 || Mlp::param_count_for(&plain_dims(n, w - 1)) < target);
            assert_eq!(
                model_param_count(ModelKind::PlainMatched, n),
                Mlp::param_count_for(&plain_dims(n, w))
            );
        }
    }

    #[test]
    fn zero_gauge_network_reduces_to_v_theta() {
        let mut m = GaugeFlowModel::new(ModelKind::GaugeDirTheta, 3, 5).unwrap();
        m.a_net_mut().params_mut().fill(0.0);
        let x = [0.3, -1.0, 2.0];
        let v = m.velocity(&x, 0.4).unwrap();
        assert_eq!(v, m.v_theta().eval(&[0.3, -1.0, 2.0, 0.4]).unwrap());
    }

    #[test]
    fn zero_alpha_reduces_to_v_theta() {
        let mut m = GaugeFlowModel::new(ModelKind::GaugeDirNu, 3, 5).unwrap();
        m.alpha_net_mut().params_mut().fill(0.0);
        let x = [0.3, -1.0, 2.0];
        assert_eq!(
            m.velocity(&x, 0.9).unwrap(),
            m.v_theta().eval(&[0.3, -1.0, 2.0, 0.9]).unwrap()
        );
    }

    #[test]
    fn correction_is_orthogonal_to_v_nu() {
        for kind in [ModelKind::GaugeDirTheta, ModelKind::GaugeDirNu] {
            let m = GaugeFlowModel::new(kind, 5, 9).unwrap();
            let mut rng = Prng::new(4);
            for _ in 0..20 {
                let mut x = [0.0; 5];
                rng.fill_normal(&mut x);
                let terms = m.terms(&x, rng.uniform()).unwrap();
                // The correction is compared directly: velocity - v_theta loses
                // digits to cancellation when the correction is small.
                let corr: Vec<f64> = terms.correction.iter().map(|w| -terms.alpha * w).collect();
                let norm = libm::sqrt(dot(&corr, &corr)) * libm::sqrt(dot(&terms.v_nu, &terms.v_nu));
                assert!(dot(&terms.v_nu, &corr).abs() / (norm + 1e-300) < 1e-10);
            }
        }
    }

    #[test]
    fn velocity_matches_dense_assembly() {
        use crate::gauge::{apply_fiber, contract_direction};
        let m = GaugeFlowModel::new(ModelKind::GaugeDirTheta, 4, 21).unwrap();
        let x = [0.5, -0.25, 1.0, 0.1];
        let t = 0.3;
        let z = [0.5, -0.25, 1.0, 0.1, 0.3];
        let vt = m.v_theta().eval(&z).unwrap();
        let vn = m.v_nu().eval(&z).unwrap();
        let a = m.gauge_field(&x, t).unwrap();
        let corr = apply_fiber(&contract_direction(&a, &vt).unwrap(), &vn).unwrap();
        let alpha = m.alpha(t).unwrap();
        let v = m.velocity(&x, t).unwrap();
        for i in 0..4 {
            assert!((v[i] - (vt[i] - alpha * corr[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_velocity_gradient_is_zero() {
        let m = build_model(ModelKind::GaugeDirNu, 3, 2).unwrap();
        let (_, tr) = m.forward(&[0.1, 0.2, 0.3], 0.5).unwrap();
        let mut g = vec![0.0; m.param_count()];
        m.backward_into(&tr, &[0.0; 3], &mut g).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_trace_is_rejected() {
        let plain = build_model(ModelKind::PlainBaseline, 3, 2).unwrap();
        let gauge = build_model(ModelKind::GaugeDirNu, 3, 2).unwrap();
        let (_, tr) = plain.forward(&[0.1, 0.2, 0.3], 0.5).unwrap();
        let mut g = vec![0.0; gauge.param_count()];
        assert_eq!(
            gauge.backward_into(&tr, &[1.0; 3], &mut g).unwrap_err(),
            Error::StaleTrace
        );
    }

    #[test]
    fn zero_field_trajectory_is_constant() {
        let mut m = build_model(ModelKind::PlainBaseline, 2, 0).unwrap();
        for seg in m.param_segments_mut() {
            seg.fill(0.0);
        }
        let traj = integrate(&m, &[1.5, -0.5], 8, Integrator::Rk4).unwrap();
        assert_eq!(traj.len(), 9);
        assert!(traj.iter().all(|x| x == &[1.5, -0.5]));
    }

    #[test]
    fn integrator_reports_non_finite_state() {
        let blowup = FnField::new(2, |x: &[f64], _| x.iter().map(|v| v * 1e200).collect());
        let err = integrate(&blowup, &[1e200, 0.0], 4, Integrator::Euler).unwrap_err();
        assert_eq!(
            err,
            Error::NonFinite {
                what: "trajectory state",
                index: 1
            }
        );
        assert!(integrate(&blowup, &[0.0, 0.0], 0, Integrator::Euler).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("gauge".parse::<ModelKind>().is_err());
    }
}
