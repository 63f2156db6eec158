//! Structural diagnostics of a trained gauge model.

use gaugeflow_core::gauge::{field_strength_at, DEFAULT_FD_STEP};
use gaugeflow_core::{FlowModel, GaugeFlowModel, Prng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ALPHA_TIMES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseOptions {
    pub probes: usize,
    pub seed: u64,
    /// Probe points are `scale * z`, `z` standard normal.
    pub scale: f64,
    pub fd_step: f64,
    pub full_matrices: bool,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            probes: 16,
            seed: 0,
            scale: 1.0,
            fd_step: DEFAULT_FD_STEP,
            full_matrices: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub model_kind: String,
    pub n_dim: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub summary: Summary,
    pub alpha: Vec<AlphaSample>,
    pub probes: Vec<Probe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max_skew_residual: f64,
    pub max_orthogonality_residual: f64,
    pub max_field_strength_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSample {
    pub t: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub x: Vec<f64>,
    pub t: f64,
    /// Largest `|A + A^T|` entry over the decoded components.
    pub skew_residual: f64,
    /// `|<v_nu, c>| / (|v_nu| |c|)` for the correction `c = M v_nu`; 0 when either vanishes.
    pub orthogonality_residual: f64,
    /// Frobenius norms of `F_{mu nu}`, `mu < nu`, in lexicographic order.
    pub field_strength_norms: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_strength: Option<Vec<FieldStrengthEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldStrengthEntry {
    pub mu: usize,
    pub nu: usize,
    /// Row-major `N x N`.
    pub matrix: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn cosine_residual(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().abs() / (na * nb)
}

pub fn diagnose(model: &FlowModel, opts: &DiagnoseOptions) -> Result<Diagnostics> {
    let gm = match model {
        FlowModel::Gauge(g) => g,
        FlowModel::Plain(p) => return Err(Error::UnsupportedKind(p.kind().name().to_string())),
    };
    diagnose_gauge(gm, opts)
}

pub fn diagnose_gauge(gm: &GaugeFlowModel, opts: &DiagnoseOptions) -> Result<Diagnostics> {
    if !(opts.fd_step > 0.0 && opts.fd_step.is_finite()) {
        return Err(Error::Config("finite-difference step must be positive".into()));
    }
    let n = gaugeflow_core::VelocityField::n_dim(gm);
    let mut rng = Prng::new(opts.seed);
    let mut probes = Vec::with_capacity(opts.probes);
    for _ in 0..opts.probes {
        let x: Vec<f64> = (0..n).map(|_| opts.scale * rng.normal()).collect();
        let t = rng.uniform();
        let terms = gm.terms(&x, t)?;
        let a = gm.gauge_field(&x, t)?;
        let f = field_strength_at(|y| gm.gauge_field(y, t), &x, opts.fd_step)?;
        let field_strength = opts.full_matrices.then(|| {
            (0..n)
                .flat_map(|mu| (mu + 1..n).map(move |nu| (mu, nu)))
                .map(|(mu, nu)| FieldStrengthEntry {
                    mu,
                    nu,
                    matrix: f.get(mu, nu).data().to_vec(),
                })
                .collect()
        });
        probes.push(Probe {
            skew_residual: a.max_skew_residual(),
            orthogonality_residual: cosine_residual(&terms.v_nu, &terms.correction),
            field_strength_norms: f.upper_norms(),
            field_strength,
            x,
            t,
        });
    }
    let fold = |get: fn(&Probe) -> f64| probes.iter().map(get).fold(0.0, f64::max);
    let summary = Summary {
        max_skew_residual: fold(|p| p.skew_residual),
        max_orthogonality_residual: fold(|p| p.orthogonality_residual),
        max_field_strength_norm: fold(|p| p.field_strength_norms.iter().copied().fold(0.0, f64::max)),
    };
    let alpha = ALPHA_TIMES
        .iter()
        .map(|&t| Ok(AlphaSample { t, alpha: gm.alpha(t)? }))
        .collect::<Result<_>>()?;
    Ok(Diagnostics {
        model_kind: gm.variant().name().to_string(),
        n_dim: n,
        seed: gm.seed(),
        fd_step: opts.fd_step,
        summary,
        alpha,
        probes,
    })
}
