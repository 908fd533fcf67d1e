//! Conformally flat forms of line elements and the null-cone embedding two
//! dimensions up.
//!
//! A metric is decomposed through a vielbein, `G = E^T eta E` with `eta` a
//! diagonal +-1 signature, and the flat coordinates `Zbar = E u` absorb the
//! frame. Along a unit-speed curve (`G du/ds du/ds = 1`) the line element
//! splits as
//!
//! ```text
//! ds^2 = eta dZbar dZbar
//!        + G [ Zbar Zbar d(E^-1)/ds d(E^-1)/ds
//!              + 2 Zbar E^-1 dZbar/ds d(E^-1)/ds ] ds^2,
//! ```
//!
//! which defines the conformal factor
//! `exp(-2 sigma) = 1 - [w^T G w + 2 w^T G v]` with `w = d(E^-1)/ds Zbar`
//! and `v = E^-1 dZbar/ds`, so that `G du du = exp(2 sigma) eta dZbar dZbar`.
//! The inverse-frame derivative is the one that appears: differentiating
//! `u = E^-1 Zbar` is what produced the bracket. Because the derivation
//! trades `G du du` for the arc length, `sigma` is a functional of the
//! curve, not a field, and the curve must be parameterized by arc length.
//!
//! The embedding sends a point to the null cone of a flat space with two
//! extra directions of signature `(+1, -1)`:
//!
//! ```text
//! y = exp(sigma) (Zbar, q - 1/4, q + 1/4),   q = eta Zbar Zbar = G u u,
//! ```
//!
//! so `eta_big y y = exp(2 sigma) (q + (q - 1/4)^2 - (q + 1/4)^2) = 0`
//! identically, and the three line elements
//! `G du du = exp(2 sigma) eta dZbar dZbar = eta_big dy dy` agree. Each
//! form carries a Hamiltonian (`Q = 1/2 G^-1 p p`,
//! `Hhat = 1/2 exp(2 sigma) eta phat phat`, `H = 1/2 eta_big pbig pbig`),
//! equal on momenta drawn consistently from one velocity.
//!
//! A constant-curvature rescaling is also provided:
//! `U = 1 + K/4 eta Zbar Zbar` with `exp(2 Phi) = U^-2`. As displayed, the
//! rescaled identity `exp(2 Phi) eta dZbar dZbar = exp(-2 sigma) G du du`
//! reduces to the conformal identity only when `U = 1` (zero curvature
//! parameter); `transformed_line_element_defect` evaluates both sides
//! honestly and reports the discrepancy, whatever `K` is.

use crate::error::{Error, Result};
use crate::numerics::{self};
use nalgebra::{DMatrix, DVector};
use std::io::Write as IoWrite;
use std::path::Path;
use std::sync::Arc;

/// Conditioning gate for frame inversions.
pub const FRAME_CONDITION_GATE: f64 = 1e10;
/// Conditioning gate for metric inversions.
pub const METRIC_CONDITION_GATE: f64 = 1e12;
/// Allowed deviation of `G du/ds du/ds` from one before a curve is rejected
/// as not unit-speed.
pub const UNIT_SPEED_TOLERANCE: f64 = 1e-6;

type FrameFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// A point-dependent invertible frame `E(u)` together with the diagonal
/// +-1 signature it squares to: the metric is `G(u) = E(u)^T eta E(u)`.
#[derive(Clone)]
pub struct VielbeinField {
    n: usize,
    signs: DMatrix<f64>,
    frame: Arc<FrameFn>,
}

impl std::fmt::Debug for VielbeinField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VielbeinField")
            .field("n", &self.n)
            .field("signs", &self.signs)
            .finish_non_exhaustive()
    }
}

impl VielbeinField {
    /// Frame given by an arbitrary closure.
    pub fn from_fn<F>(signs: &[i32], frame: F) -> Result<Self>
    where
        F: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        let signs = numerics::signature_matrix(signs)?;
        Ok(VielbeinField {
            n: signs.nrows(),
            signs,
            frame: Arc::new(frame),
        })
    }

    /// Constant identity frame: the metric is the signature itself.
    pub fn flat(signs: &[i32]) -> Result<Self> {
        let n = signs.len();
        Self::from_fn(signs, move |_| DMatrix::identity(n, n))
    }

    /// Constant frame.
    pub fn constant(signs: &[i32], e: DMatrix<f64>) -> Result<Self> {
        if e.nrows() != signs.len() || e.ncols() != signs.len() {
            return Err(Error::dim(
                "VielbeinField::constant",
                format!("{0}x{0} frame", signs.len()),
                format!("{}x{}", e.nrows(), e.ncols()),
            ));
        }
        Self::from_fn(signs, move |_| e.clone())
    }

    /// Diagonal frame `E_ii(u) = 1 + c_i u^i`, each axis stretched linearly
    /// by its own coordinate.
    pub fn diagonal_linear(signs: &[i32], coeffs: &[f64]) -> Result<Self> {
        let n = signs.len();
        if coeffs.len() != n {
            return Err(Error::dim(
                "VielbeinField::diagonal_linear",
                format!("{n} coefficients"),
                format!("{}", coeffs.len()),
            ));
        }
        let coeffs = coeffs.to_vec();
        Self::from_fn(signs, move |u| {
            DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    1.0 + coeffs[i] * u[i]
                } else {
                    0.0
                }
            })
        })
    }

    /// Conformal frame `E(u) = exp(w . u) I`.
    pub fn conformal_exponential(signs: &[i32], weights: &[f64]) -> Result<Self> {
        let n = signs.len();
        if weights.len() != n {
            return Err(Error::dim(
                "VielbeinField::conformal_exponential",
                format!("{n} weights"),
                format!("{}", weights.len()),
            ));
        }
        let weights = DVector::from_column_slice(weights);
        Self::from_fn(signs, move |u| {
            DMatrix::identity(n, n) * weights.dot(u).exp()
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// The diagonal +-1 matrix `eta`.
    pub fn signature(&self) -> &DMatrix<f64> {
        &self.signs
    }

    pub fn frame_at(&self, u: &DVector<f64>) -> DMatrix<f64> {
        (self.frame)(u)
    }

    /// Gated inverse of the frame.
    pub fn inverse_frame_at(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        let e = self.frame_at(u);
        let cond = numerics::condition_inf(&e);
        if !cond.is_finite() || cond > FRAME_CONDITION_GATE {
            return Err(Error::IllConditioned {
                what: "frame".into(),
                location: format!("point {:?}", u.as_slice()),
                cond,
                gate: FRAME_CONDITION_GATE,
            });
        }
        Ok(e.try_inverse().expect("finite condition"))
    }

    /// The reconstructed metric `G(u) = E^T eta E`.
    pub fn metric_at(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let e = self.frame_at(u);
        e.transpose() * &self.signs * e
    }

    /// Flat coordinates of a point, `Zbar = E(u) u`.
    pub fn zbar(&self, u: &DVector<f64>) -> DVector<f64> {
        self.frame_at(u) * u
    }

    /// Recovers `u = E^-1 Zbar` with the frame evaluated at `u_ref`.
    pub fn invert_zbar(&self, u_ref: &DVector<f64>, zbar: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.inverse_frame_at(u_ref)? * zbar)
    }

    /// Checks frame conditioning and metric symmetry at a point.
    pub fn validate_at(&self, u: &DVector<f64>) -> Result<()> {
        self.inverse_frame_at(u)?;
        let g = self.metric_at(u);
        let asym = (&g - g.transpose()).amax();
        let scale = g.amax().max(1.0);
        if asym > 1e-12 * scale {
            return Err(Error::InvalidInput(format!(
                "reconstructed metric asymmetry {asym:.3e} exceeds 1e-12 at the probed point"
            )));
        }
        Ok(())
    }
}

/// A curve sampled on a uniform grid of its arc length: parameter values,
/// points, and the exact velocities `du/ds` the generator supplied.
#[derive(Debug, Clone)]
pub struct CurveSample {
    s_values: Vec<f64>,
    u_points: Vec<DVector<f64>>,
    du_ds: Vec<DVector<f64>>,
}

impl CurveSample {
    pub fn new(
        s_values: Vec<f64>,
        u_points: Vec<DVector<f64>>,
        du_ds: Vec<DVector<f64>>,
    ) -> Result<Self> {
        if s_values.len() < 3 {
            return Err(Error::InvalidInput(
                "a curve sample needs at least 3 points".into(),
            ));
        }
        if u_points.len() != s_values.len() || du_ds.len() != s_values.len() {
            return Err(Error::dim(
                "CurveSample::new",
                format!("{} points and velocities", s_values.len()),
                format!("{} and {}", u_points.len(), du_ds.len()),
            ));
        }
        let step = numerics::uniform_grid_step(&s_values).ok_or_else(|| {
            Error::InvalidInput("curve parameter values must form a uniform grid".into())
        })?;
        if step <= 0.0 {
            return Err(Error::InvalidInput(
                "curve parameter values must increase".into(),
            ));
        }
        let dim = u_points[0].len();
        if dim == 0 || u_points.iter().any(|u| u.len() != dim)
            || du_ds.iter().any(|v| v.len() != dim)
        {
            return Err(Error::dim(
                "CurveSample::new",
                format!("vectors of length {dim}"),
                "a mismatched sample",
            ));
        }
        Ok(CurveSample {
            s_values,
            u_points,
            du_ds,
        })
    }

    pub fn len(&self) -> usize {
        self.s_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.u_points[0].len()
    }

    pub fn step(&self) -> f64 {
        numerics::uniform_grid_step(&self.s_values).expect("validated at construction")
    }

    pub fn s_values(&self) -> &[f64] {
        &self.s_values
    }

    pub fn u_points(&self) -> &[DVector<f64>] {
        &self.u_points
    }

    pub fn du_ds(&self) -> &[DVector<f64>] {
        &self.du_ds
    }

    /// Max relative defect between the stored velocities and centered
    /// differences of the points, over interior samples.
    pub fn derivative_defect(&self) -> f64 {
        let h = self.step();
        let mut worst = 0.0_f64;
        for i in 1..self.len() - 1 {
            let fd = (&self.u_points[i + 1] - &self.u_points[i - 1]) / (2.0 * h);
            let denom = self.du_ds[i].amax().max(1.0);
            worst = worst.max((fd - &self.du_ds[i]).amax() / denom);
        }
        worst
    }
}

/// Reparameterizes a smooth path by arc length of the vielbein metric and
/// samples it uniformly: solves `d lambda / ds = 1 / |path_rate|_G` from
/// `lambda0` over `s` in `[0, length]`. The path speed must stay real and
/// positive (spacelike throughout) or the build is rejected.
pub fn unit_speed_curve<P, V>(
    field: &VielbeinField,
    path: P,
    path_rate: V,
    lambda0: f64,
    length: f64,
    samples: usize,
) -> Result<CurveSample>
where
    P: Fn(f64) -> DVector<f64>,
    V: Fn(f64) -> DVector<f64>,
{
    if samples < 3 {
        return Err(Error::InvalidInput(
            "unit-speed sampling needs at least 3 samples".into(),
        ));
    }
    if length <= 0.0 {
        return Err(Error::InvalidInput("curve length must be positive".into()));
    }
    let speed_sq = |lambda: f64| -> f64 {
        let u = path(lambda);
        let rate = path_rate(lambda);
        (rate.transpose() * field.metric_at(&u) * rate)[(0, 0)]
    };
    let lambda_of_s = numerics::integrate(&lambda0, 0.0, length, samples - 1, |_, lambda| {
        1.0 / speed_sq(*lambda).sqrt()
    });
    let mut s_values = Vec::with_capacity(samples);
    let mut u_points = Vec::with_capacity(samples);
    let mut du_ds = Vec::with_capacity(samples);
    for (s, lambda) in lambda_of_s {
        let sq = if lambda.is_finite() {
            speed_sq(lambda)
        } else {
            f64::NAN
        };
        if !(sq > 1e-12) {
            return Err(Error::InvalidInput(format!(
                "path speed squared {sq:.3e} at s = {s}; unit-speed reparameterization undefined"
            )));
        }
        s_values.push(s);
        u_points.push(path(lambda));
        du_ds.push(path_rate(lambda) / sq.sqrt());
    }
    CurveSample::new(s_values, u_points, du_ds)
}

/// Conformal factor at one curve sample.
#[derive(Debug, Clone)]
pub struct SigmaSample {
    pub s: f64,
    pub sigma: f64,
    /// The positive quantity `exp(-2 sigma)` before taking the logarithm.
    pub bracket: f64,
}

/// Conformal factor along a whole curve, together with the largest relative
/// defect of `G du du = exp(2 sigma) eta dZbar dZbar` seen at interior
/// samples.
#[derive(Debug, Clone)]
pub struct SigmaCurve {
    pub samples: Vec<SigmaSample>,
    pub max_flatform_rel_err: f64,
}

impl SigmaCurve {
    pub fn sigma_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.sigma).collect()
    }
}

fn require_unit_speed(field: &VielbeinField, curve: &CurveSample) -> Result<()> {
    for i in 0..curve.len() {
        let u = &curve.u_points[i];
        let v = &curve.du_ds[i];
        let sq = (v.transpose() * field.metric_at(u) * v)[(0, 0)];
        if (sq - 1.0).abs() > UNIT_SPEED_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "curve speed squared {sq} at s = {} is not 1; the conformal factor is \
                 defined along unit-speed curves",
                curve.s_values[i]
            )));
        }
    }
    Ok(())
}

/// Computes the conformal factor along a unit-speed curve. The inverse
/// frame and the flat coordinates are differenced along the curve with
/// second-order stencils (one-sided at the ends); the bracket must stay
/// positive or the offending parameter value is reported.
pub fn sigma_along(field: &VielbeinField, curve: &CurveSample) -> Result<SigmaCurve> {
    if curve.dim() != field.dim() {
        return Err(Error::dim(
            "sigma_along",
            format!("curve in dimension {}", field.dim()),
            format!("{}", curve.dim()),
        ));
    }
    require_unit_speed(field, curve)?;
    let h = curve.step();
    let count = curve.len();
    let eta = field.signature();

    let mut inv_frames = Vec::with_capacity(count);
    let mut zbars = Vec::with_capacity(count);
    let mut metrics = Vec::with_capacity(count);
    for u in &curve.u_points {
        inv_frames.push(field.inverse_frame_at(u)?);
        zbars.push(field.zbar(u));
        metrics.push(field.metric_at(u));
    }
    let dinv = numerics::grid_derivative_all(&inv_frames, h);
    let dzbar = numerics::grid_derivative_all(&zbars, h);
    let du_fd = numerics::grid_derivative_all(&curve.u_points, h);

    let mut samples = Vec::with_capacity(count);
    let mut worst = 0.0_f64;
    for i in 0..count {
        let s = curve.s_values[i];
        let g = &metrics[i];
        let w = &dinv[i] * &zbars[i];
        let v = &inv_frames[i] * &dzbar[i];
        let bracket =
            1.0 - ((w.transpose() * g * &w)[(0, 0)] + 2.0 * (w.transpose() * g * &v)[(0, 0)]);
        if !(bracket > 0.0) {
            return Err(Error::SignatureBreakdown { s, value: bracket });
        }
        let sigma = -0.5 * bracket.ln();
        if i > 0 && i + 1 < count {
            // Both sides of the conformal identity from the same
            // differenced data, so a frame that is constant along the
            // curve cancels exactly.
            let du = &du_fd[i];
            let lhs = (du.transpose() * g * du)[(0, 0)];
            let rhs =
                (2.0 * sigma).exp() * (dzbar[i].transpose() * eta * &dzbar[i])[(0, 0)];
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        }
        samples.push(SigmaSample { s, sigma, bracket });
    }
    Ok(SigmaCurve {
        samples,
        max_flatform_rel_err: worst,
    })
}

/// Constant-curvature rescaling data at one point.
#[derive(Debug, Clone)]
pub struct CurvatureFactor {
    pub u_factor: f64,
    pub phi: f64,
    pub curvature_k: f64,
}

/// `U = 1 + K/4 eta Zbar Zbar` and `Phi = -ln|U|` (so `exp(2 Phi) = U^-2`).
pub fn constant_curvature_factor(
    zbar: &DVector<f64>,
    signs: &DMatrix<f64>,
    k: f64,
) -> Result<CurvatureFactor> {
    if signs.nrows() != zbar.len() || signs.ncols() != zbar.len() {
        return Err(Error::dim(
            "constant_curvature_factor",
            format!("{0}x{0} signature", zbar.len()),
            format!("{}x{}", signs.nrows(), signs.ncols()),
        ));
    }
    let q = (zbar.transpose() * signs * zbar)[(0, 0)];
    let u_factor = 1.0 + 0.25 * k * q;
    if u_factor.abs() < 1e-12 {
        return Err(Error::InvalidInput(format!(
            "constant-curvature factor vanishes (U = {u_factor:.3e}) at this point"
        )));
    }
    Ok(CurvatureFactor {
        u_factor,
        phi: -u_factor.abs().ln(),
        curvature_k: k,
    })
}

/// The enlarged diagonal signature `(eta, +1, -1)`.
pub fn big_signature(signs: &DMatrix<f64>) -> DMatrix<f64> {
    let n = signs.nrows();
    let mut big = DMatrix::zeros(n + 2, n + 2);
    big.view_mut((0, 0), (n, n)).copy_from(signs);
    big[(n, n)] = 1.0;
    big[(n + 1, n + 1)] = -1.0;
    big
}

/// One embedded point on the null cone of the enlarged flat space.
#[derive(Debug, Clone)]
pub struct EmbeddingPoint {
    pub y: DVector<f64>,
    pub big_signature: DMatrix<f64>,
}

impl EmbeddingPoint {
    /// `eta_big y y`; zero up to rounding for every embedded point.
    pub fn null_invariant(&self) -> f64 {
        (self.y.transpose() * &self.big_signature * &self.y)[(0, 0)]
    }
}

/// Embeds a point: `y = exp(sigma) (E u, q - 1/4, q + 1/4)` with
/// `q = G u u`.
pub fn embed(field: &VielbeinField, u: &DVector<f64>, sigma: f64) -> Result<EmbeddingPoint> {
    if u.len() != field.dim() {
        return Err(Error::dim(
            "embed",
            format!("point of dimension {}", field.dim()),
            format!("{}", u.len()),
        ));
    }
    if !sigma.is_finite() {
        return Err(Error::InvalidInput(format!(
            "conformal factor must be finite, got {sigma}"
        )));
    }
    let n = field.dim();
    let zbar = field.zbar(u);
    let q = (zbar.transpose() * field.signature() * &zbar)[(0, 0)];
    let scale = sigma.exp();
    let mut y = DVector::zeros(n + 2);
    y.rows_mut(0, n).copy_from(&(&zbar * scale));
    y[n] = scale * (q - 0.25);
    y[n + 1] = scale * (q + 0.25);
    Ok(EmbeddingPoint {
        y,
        big_signature: big_signature(field.signature()),
    })
}

/// Embeds every sample of a curve with its conformal factor.
pub fn embed_curve(
    field: &VielbeinField,
    curve: &CurveSample,
    sigmas: &[f64],
) -> Result<Vec<EmbeddingPoint>> {
    if sigmas.len() != curve.len() {
        return Err(Error::dim(
            "embed_curve",
            format!("{} conformal factors", curve.len()),
            format!("{}", sigmas.len()),
        ));
    }
    curve
        .u_points
        .iter()
        .zip(sigmas)
        .map(|(u, sigma)| embed(field, u, *sigma))
        .collect()
}

/// Largest relative discrepancies between the three expressions of the line
/// element along a curve: the metric form `G du du` against the conformally
/// flat form `exp(2 sigma) eta dZbar dZbar`, and against the embedded flat
/// form `eta_big dy dy`.
#[derive(Debug, Clone)]
pub struct ChainReport {
    pub max_rel_err_flatform: f64,
    pub max_rel_err_embedding: f64,
}

/// Chain comparison with the conformal factor computed by `sigma_along`.
pub fn line_element_chain(field: &VielbeinField, curve: &CurveSample) -> Result<ChainReport> {
    let sigma = sigma_along(field, curve)?;
    chain_report_with_sigma(field, curve, &sigma.sigma_values())
}

/// Chain comparison against caller-supplied conformal factors (used to
/// check that a wrong factor is loudly visible).
pub fn chain_report_with_sigma(
    field: &VielbeinField,
    curve: &CurveSample,
    sigmas: &[f64],
) -> Result<ChainReport> {
    let points = embed_curve(field, curve, sigmas)?;
    let h = curve.step();
    let eta = field.signature();
    let big = big_signature(eta);
    let zbars: Vec<DVector<f64>> = curve.u_points.iter().map(|u| field.zbar(u)).collect();
    let ys: Vec<DVector<f64>> = points.into_iter().map(|p| p.y).collect();
    let dzbar = numerics::grid_derivative_all(&zbars, h);
    let dy = numerics::grid_derivative_all(&ys, h);
    let du_fd = numerics::grid_derivative_all(&curve.u_points, h);
    let mut flat_err = 0.0_f64;
    let mut embed_err = 0.0_f64;
    for i in 1..curve.len() - 1 {
        let du = &du_fd[i];
        let base = (du.transpose() * field.metric_at(&curve.u_points[i]) * du)[(0, 0)];
        let flat = (2.0 * sigmas[i]).exp() * (dzbar[i].transpose() * eta * &dzbar[i])[(0, 0)];
        let embedded = (dy[i].transpose() * &big * &dy[i])[(0, 0)];
        let denom = base.abs().max(1.0);
        flat_err = flat_err.max((base - flat).abs() / denom);
        embed_err = embed_err.max((base - embedded).abs() / denom);
    }
    Ok(ChainReport {
        max_rel_err_flatform: flat_err,
        max_rel_err_embedding: embed_err,
    })
}

/// Evaluates both sides of the constant-curvature rescaled identity
/// `exp(2 Phi) eta dZbar dZbar = exp(-2 sigma) G du du` along a curve and
/// returns the largest relative discrepancy over interior samples. The two
/// sides agree (up to differencing error) exactly when `k = 0`; for other
/// `k` the left side carries the factor `U^-2` and the defect reports it.
pub fn transformed_line_element_defect(
    field: &VielbeinField,
    curve: &CurveSample,
    k: f64,
) -> Result<f64> {
    let sigma = sigma_along(field, curve)?;
    let h = curve.step();
    let eta = field.signature();
    let zbars: Vec<DVector<f64>> = curve.u_points.iter().map(|u| field.zbar(u)).collect();
    let dzbar = numerics::grid_derivative_all(&zbars, h);
    let du_fd = numerics::grid_derivative_all(&curve.u_points, h);
    let mut worst = 0.0_f64;
    for i in 1..curve.len() - 1 {
        let factor = constant_curvature_factor(&zbars[i], eta, k)?;
        let lhs = (2.0 * factor.phi).exp() * (dzbar[i].transpose() * eta * &dzbar[i])[(0, 0)];
        let du = &du_fd[i];
        let rhs = (-2.0 * sigma.samples[i].sigma).exp()
            * (du.transpose() * field.metric_at(&curve.u_points[i]) * du)[(0, 0)];
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    Ok(worst)
}

/// The three Hamiltonian values carried by one line element.
#[derive(Debug, Clone)]
pub struct HamiltonianTriple {
    pub q: f64,
    pub hhat: f64,
    pub h: f64,
}

/// Momenta expressing one physical velocity in the three coordinate
/// systems: curved (`p = G du/ds`), conformally flat
/// (`phat = eta dZbar/ds`), and embedded (`pbig = eta_big dy/ds`).
#[derive(Debug, Clone)]
pub struct MomentumTriple {
    pub p: DVector<f64>,
    pub phat: DVector<f64>,
    pub pbig: DVector<f64>,
}

/// Builds consistent momenta from one velocity: the embedded velocity is
/// assembled analytically as
/// `dy/ds = exp(sigma) [dsigma (Zbar, q - 1/4, q + 1/4) + (dZbar, dq, dq)]`
/// with `dq = 2 Zbar eta dZbar`.
pub fn consistent_momenta(
    metric: &DMatrix<f64>,
    du_ds: &DVector<f64>,
    zbar: &DVector<f64>,
    dzbar_ds: &DVector<f64>,
    sigma: f64,
    dsigma_ds: f64,
    signs: &DMatrix<f64>,
) -> MomentumTriple {
    let n = zbar.len();
    let q = (zbar.transpose() * signs * zbar)[(0, 0)];
    let dq = 2.0 * (zbar.transpose() * signs * dzbar_ds)[(0, 0)];
    let scale = sigma.exp();
    let mut ydot = DVector::zeros(n + 2);
    ydot.rows_mut(0, n)
        .copy_from(&((zbar * dsigma_ds + dzbar_ds) * scale));
    ydot[n] = scale * (dsigma_ds * (q - 0.25) + dq);
    ydot[n + 1] = scale * (dsigma_ds * (q + 0.25) + dq);
    MomentumTriple {
        p: metric * du_ds,
        phat: signs * dzbar_ds,
        pbig: big_signature(signs) * ydot,
    }
}

/// Consistent momenta for a constant frame: there `dZbar/ds = E du/ds`
/// exactly and the conformal factor is identically zero.
pub fn consistent_momenta_constant_frame(
    field: &VielbeinField,
    u: &DVector<f64>,
    du_ds: &DVector<f64>,
) -> MomentumTriple {
    let e = field.frame_at(u);
    consistent_momenta(
        &field.metric_at(u),
        du_ds,
        &(&e * u),
        &(&e * du_ds),
        0.0,
        0.0,
        field.signature(),
    )
}

/// Evaluates the three Hamiltonians on supplied momenta:
/// `Q = 1/2 p G^-1 p`, `Hhat = 1/2 exp(2 sigma) eta phat phat`,
/// `H = 1/2 eta_big pbig pbig` (the inverse of a diagonal +-1 signature is
/// itself).
pub fn three_hamiltonians(
    metric: &DMatrix<f64>,
    sigma: f64,
    signs: &DMatrix<f64>,
    momenta: &MomentumTriple,
) -> Result<HamiltonianTriple> {
    let n = signs.nrows();
    if metric.nrows() != n || metric.ncols() != n {
        return Err(Error::dim(
            "three_hamiltonians",
            format!("{n}x{n} metric"),
            format!("{}x{}", metric.nrows(), metric.ncols()),
        ));
    }
    if momenta.p.len() != n || momenta.phat.len() != n || momenta.pbig.len() != n + 2 {
        return Err(Error::dim(
            "three_hamiltonians",
            format!("momenta of lengths {n}, {n}, {}", n + 2),
            format!(
                "{}, {}, {}",
                momenta.p.len(),
                momenta.phat.len(),
                momenta.pbig.len()
            ),
        ));
    }
    let cond = numerics::condition_inf(metric);
    if !cond.is_finite() || cond > METRIC_CONDITION_GATE {
        return Err(Error::IllConditioned {
            what: "metric".into(),
            location: "three_hamiltonians".into(),
            cond,
            gate: METRIC_CONDITION_GATE,
        });
    }
    let g_inv = metric.clone().try_inverse().expect("finite condition");
    let q = 0.5 * (momenta.p.transpose() * g_inv * &momenta.p)[(0, 0)];
    let hhat =
        0.5 * (2.0 * sigma).exp() * (momenta.phat.transpose() * signs * &momenta.phat)[(0, 0)];
    let big = big_signature(signs);
    let h = 0.5 * (momenta.pbig.transpose() * big * &momenta.pbig)[(0, 0)];
    Ok(HamiltonianTriple { q, hhat, h })
}

/// Writes embedded points as CSV: header `s,y_0,...,null_invariant`, one
/// row per sample, 17 significant digits.
pub fn write_embedding_csv(
    path: &Path,
    s_values: &[f64],
    points: &[EmbeddingPoint],
) -> Result<()> {
    if s_values.len() != points.len() {
        return Err(Error::dim(
            "write_embedding_csv",
            format!("{} parameter values", points.len()),
            format!("{}", s_values.len()),
        ));
    }
    let len = match points.first() {
        Some(p) => p.y.len(),
        None => return Err(Error::InvalidInput("empty embedding".into())),
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "s")?;
    for i in 0..len {
        write!(out, ",y_{i}")?;
    }
    writeln!(out, ",null_invariant")?;
    for (s, p) in s_values.iter().zip(points) {
        write!(out, "{}", numerics::format_g17(*s))?;
        for i in 0..len {
            write!(out, ",{}", numerics::format_g17(p.y[i]))?;
        }
        writeln!(out, ",{}", numerics::format_g17(p.null_invariant()))?;
    }
    Ok(())
}
