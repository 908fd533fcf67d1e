//! Hessian ("Calabi") metrics built from convex scalar potentials, plus
//! curvature machinery for arbitrary supplied metric fields.
//!
//! A scalar potential `u` induces the metric `G_ij = d2(u^p)/dxi dxj` for a
//! positive integer power `p`. For such metrics the Christoffel symbols of
//! the first kind collapse to half the third derivatives of the potential,
//! `Gamma_ijm = (1/2) u_,ijm`, and the fully lowered curvature tensor equals
//! a bilinear combination of those symbols, which
//! [`hessian_curvature_check`] verifies numerically.
//!
//! Curvature follows the index convention
//! `R^a_{m s v} = d_v Gamma^a_{m s} - d_s Gamma^a_{m v}
//!  + Gamma^e_{m s} Gamma^a_{e v} - Gamma^e_{m v} Gamma^a_{s e}`,
//! antisymmetric in its last two slots. Under this convention the round
//! unit sphere has `R_{0110} / det G = +1` (Gaussian curvature one) and
//! Ricci trace `R_{mv} = sum_a R^a_{m a v} = -G_{mv}`.
//!
//! All derivatives are central finite differences with per-order steps from
//! [`crate::numerics`]; everything here is pure evaluation and can run in
//! parallel across sample points.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{
    self, fd_scale, fourth_central, hessian_central, third_central, Tensor3, Tensor4,
    STEP_FOURTH, STEP_SECOND, STEP_THIRD,
};

/// Condition-number gate for metric inverses.
pub const METRIC_CONDITION_GATE: f64 = 1e12;

/// Maximum component mismatch accepted by [`hessian_curvature_check`];
/// limited by the finite-difference stencils, not by the identity.
pub const CURVATURE_IDENTITY_TOLERANCE: f64 = 1e-4;

fn point_label(x: &DVector<f64>) -> String {
    let comps: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
    format!("x = [{}]", comps.join(", "))
}

fn require_dim(context: &str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::dim(
            context,
            format!("dimension {expected}"),
            format!("dimension {found}"),
        ));
    }
    Ok(())
}

/// A scalar field on `R^n`: the generating potential of a Hessian metric.
#[derive(Clone)]
pub struct ScalarPotential {
    dim: usize,
    kind: String,
    eval: Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>,
}

impl fmt::Debug for ScalarPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarPotential")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

impl ScalarPotential {
    /// Arbitrary smooth potential from a closure.
    pub fn from_fn<F>(dim: usize, kind: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        ScalarPotential {
            dim,
            kind: kind.into(),
            eval: Arc::new(eval),
        }
    }

    /// `u(x) = |x|^2 / 2`; its Hessian is the identity.
    pub fn half_square(dim: usize) -> Self {
        Self::from_fn(dim, "half-square", |x| 0.5 * x.dot(x))
    }

    /// `u(x) = sum_i (x^i)^4`; pure quartic, Hessian `diag(12 (x^i)^2)`.
    pub fn quartic_axes(dim: usize) -> Self {
        Self::from_fn(dim, "quartic-axes", |x| {
            x.iter().map(|v| v.powi(4)).sum::<f64>()
        })
    }

    /// `u(x) = |x|^2 / 2 + sum_i (x^i)^4`; convex everywhere, and its
    /// Hessian metric is diagonal and separable (hence flat).
    pub fn quartic_well(dim: usize) -> Self {
        Self::from_fn(dim, "quartic-well", |x| {
            0.5 * x.dot(x) + x.iter().map(|v| v.powi(4)).sum::<f64>()
        })
    }

    /// `u(x) = |x|^2 / 2 + eps (x^0)^2 (x^1)^2`: couples the first two axes,
    /// so the induced Hessian metric is genuinely curved. Convex on the unit
    /// box for moderate `eps`; positive-definiteness is still sampled, not
    /// proven. Requires `dim >= 2`.
    pub fn coupled_well(dim: usize, epsilon: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(
                "coupled-well potential needs at least two coordinates".into(),
            ));
        }
        Ok(Self::from_fn(dim, "coupled-well", move |x| {
            0.5 * x.dot(x) + epsilon * x[0].powi(2) * x[1].powi(2)
        }))
    }

    /// Named catalog used by scenario configs. `parameter` feeds entries
    /// that take one (the coupling strength of `coupled-well`); others
    /// ignore it.
    pub fn catalog(name: &str, dim: usize, parameter: f64) -> Result<Self> {
        match name {
            "half-square" => Ok(Self::half_square(dim)),
            "quartic-axes" => Ok(Self::quartic_axes(dim)),
            "quartic-well" => Ok(Self::quartic_well(dim)),
            "coupled-well" => Self::coupled_well(dim, parameter),
            other => Err(Error::InvalidInput(format!(
                "unknown potential '{other}'; the catalog has half-square, \
                 quartic-axes, quartic-well, coupled-well"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Catalog label (or the label given to [`ScalarPotential::from_fn`]).
    pub fn kind(&self) -> &str {
        &self.kind
    }

    /// Checked evaluation: dimension and finiteness.
    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        require_dim("potential argument", self.dim, x.len())?;
        let v = (self.eval)(x);
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!(
                "potential '{}' is non-finite at {}",
                self.kind,
                point_label(x)
            )));
        }
        Ok(v)
    }

    /// Unchecked evaluation closure of `u(x)^power`, for stencil probes.
    fn raw_power(&self, power: u32) -> impl Fn(&DVector<f64>) -> f64 + '_ {
        let eval = Arc::clone(&self.eval);
        move |x: &DVector<f64>| eval(x).powi(power as i32)
    }
}

/// A symmetric matrix field on `R^n`: a metric given either in closed form
/// or as the finite-difference Hessian of a potential.
#[derive(Clone)]
pub struct MetricField {
    dim: usize,
    eval: Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl MetricField {
    /// Metric from a closure returning an `n x n` matrix.
    pub fn from_fn<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        MetricField {
            dim,
            eval: Arc::new(eval),
        }
    }

    /// Constant metric. Rejects non-square or visibly asymmetric input.
    pub fn constant(g: DMatrix<f64>) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return Err(Error::dim(
                "constant metric",
                format!("{0}x{0}", g.nrows()),
                format!("{}x{}", g.nrows(), g.ncols()),
            ));
        }
        let defect = (&g - g.transpose()).amax();
        if defect > 1e-10 * g.amax().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "constant metric is asymmetric (defect {defect:.3e})"
            )));
        }
        let dim = g.nrows();
        Ok(Self::from_fn(dim, move |_| g.clone()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Checked evaluation: dimension, finiteness, symmetry.
    pub fn metric_at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        require_dim("metric argument", self.dim, x.len())?;
        let g = (self.eval)(x);
        if g.nrows() != self.dim || g.ncols() != self.dim {
            return Err(Error::dim(
                "metric value",
                format!("{0}x{0}", self.dim),
                format!("{}x{}", g.nrows(), g.ncols()),
            ));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "metric has non-finite entries at {}",
                point_label(x)
            )));
        }
        let defect = (&g - g.transpose()).amax();
        if defect > 1e-10 * g.amax().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "metric is asymmetric at {} (defect {defect:.3e})",
                point_label(x)
            )));
        }
        Ok(g)
    }

    /// Inverse metric behind the conditioning gate.
    pub fn inverse_at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let g = self.metric_at(x)?;
        gated_inverse(&g, &point_label(x))
    }

    /// Least eigenvalue > 0 at `x`? Convexity is sampled, never proven.
    pub fn is_positive_definite_at(&self, x: &DVector<f64>) -> Result<bool> {
        let g = self.metric_at(x)?;
        let eigs = g.symmetric_eigen().eigenvalues;
        Ok(eigs.iter().all(|&e| e > 0.0))
    }
}

fn gated_inverse(g: &DMatrix<f64>, location: &str) -> Result<DMatrix<f64>> {
    let cond = numerics::condition_inf(g);
    if !(cond <= METRIC_CONDITION_GATE) {
        return Err(Error::IllConditioned {
            what: "metric".into(),
            location: location.into(),
            cond,
            gate: METRIC_CONDITION_GATE,
        });
    }
    g.clone()
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned {
            what: "metric".into(),
            location: location.into(),
            cond: f64::INFINITY,
            gate: METRIC_CONDITION_GATE,
        })
}

/// `G_ij(x) = d2 (u^power) / dxi dxj` by the symmetric second-difference
/// stencil with step `3e-4 * max(1, |x|_inf)`. The result is symmetric by
/// construction; non-finite stencil values surface as domain errors from
/// [`MetricField::metric_at`].
pub fn hessian_metric(u: &ScalarPotential, power: u32) -> Result<MetricField> {
    if power == 0 {
        return Err(Error::InvalidInput(
            "hessian metric needs a positive power".into(),
        ));
    }
    let dim = u.dim();
    let u = u.clone();
    Ok(MetricField::from_fn(dim, move |x| {
        let w = u.raw_power(power);
        hessian_central(&w, x, STEP_SECOND * fd_scale(x))
    }))
}

/// Christoffel symbols of the first kind,
/// `Gamma_ijm = (d_i g_jm + d_j g_im - d_m g_ij) / 2`,
/// with the metric differenced at step `1e-3 * scale` (sized for metrics
/// that are themselves finite-difference Hessians). Symmetric in `(i, j)`
/// exactly, because the two symmetric terms are added commutatively.
pub fn christoffel_first(g: &MetricField, x: &DVector<f64>) -> Result<Tensor3> {
    let n = g.dim();
    require_dim("christoffel point", n, x.len())?;
    let h = STEP_THIRD * fd_scale(x);
    let mut dg: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        dg.push((g.metric_at(&xp)? - g.metric_at(&xm)?) / (2.0 * h));
    }
    let mut out = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for m in 0..n {
                let v = 0.5 * (dg[i][(j, m)] + dg[j][(i, m)] - dg[m][(i, j)]);
                out.set(i, j, m, v);
            }
        }
    }
    Ok(out)
}

/// Christoffel symbols of the second kind, `Gamma^a_ij = G^{am} Gamma_ijm`,
/// stored as `get(a, i, j)`.
pub fn christoffel_mixed(g: &MetricField, x: &DVector<f64>) -> Result<Tensor3> {
    let n = g.dim();
    let first = christoffel_first(g, x)?;
    let ginv = g.inverse_at(x)?;
    let mut out = Tensor3::zeros(n);
    for a in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                for m in 0..n {
                    v += ginv[(a, m)] * first.get(i, j, m);
                }
                out.set(a, i, j, v);
            }
        }
    }
    Ok(out)
}

fn assemble_curvature(gamma: &Tensor3, dgamma: &[Tensor3]) -> Tensor4 {
    let n = gamma.dim();
    let mut out = Tensor4::zeros(n);
    for a in 0..n {
        for m in 0..n {
            for s in 0..n {
                for v in 0..n {
                    let mut val = dgamma[v].get(a, m, s) - dgamma[s].get(a, m, v);
                    for e in 0..n {
                        val += gamma.get(e, m, s) * gamma.get(a, e, v)
                            - gamma.get(e, m, v) * gamma.get(a, e, s);
                    }
                    out.set(a, m, s, v, val);
                }
            }
        }
    }
    out
}

/// Mixed curvature tensor `R^a_{m s v}` (first index raised), computed by
/// centered differencing of the second-kind Christoffel symbols at step
/// `1e-3 * scale`. Intended for metrics given in closed form; Hessian
/// metrics built from potentials get the better-conditioned
/// [`hessian_curvature_check`] path.
pub fn riemann(g: &MetricField, x: &DVector<f64>) -> Result<Tensor4> {
    let n = g.dim();
    require_dim("curvature point", n, x.len())?;
    let gamma = christoffel_mixed(g, x)?;
    let h = STEP_THIRD * fd_scale(x);
    let mut dgamma: Vec<Tensor3> = Vec::with_capacity(n);
    for k in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        let gp = christoffel_mixed(g, &xp)?;
        let gm = christoffel_mixed(g, &xm)?;
        let mut d = Tensor3::zeros(n);
        for a in 0..n {
            for i in 0..n {
                for j in 0..n {
                    d.set(a, i, j, (gp.get(a, i, j) - gm.get(a, i, j)) / (2.0 * h));
                }
            }
        }
        dgamma.push(d);
    }
    Ok(assemble_curvature(&gamma, &dgamma))
}

/// Fully lowered curvature `R_{h m s v} = G_{h a} R^a_{m s v}`.
pub fn riemann_lowered(g: &MetricField, x: &DVector<f64>) -> Result<Tensor4> {
    let mixed = riemann(g, x)?;
    let gm = g.metric_at(x)?;
    Ok(lower_first_index(&mixed, &gm))
}

fn lower_first_index(mixed: &Tensor4, g: &DMatrix<f64>) -> Tensor4 {
    let n = mixed.dim();
    let mut out = Tensor4::zeros(n);
    for h in 0..n {
        for m in 0..n {
            for s in 0..n {
                for v in 0..n {
                    let mut val = 0.0;
                    for a in 0..n {
                        val += g[(h, a)] * mixed.get(a, m, s, v);
                    }
                    out.set(h, m, s, v, val);
                }
            }
        }
    }
    out
}

/// Ricci tensor `R_{m v} = sum_a R^a_{m a v}`. With this module's index
/// convention the round unit sphere comes out as `R = -G`.
pub fn ricci(g: &MetricField, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let mixed = riemann(g, x)?;
    let n = mixed.dim();
    Ok(DMatrix::from_fn(n, n, |m, v| {
        (0..n).map(|a| mixed.get(a, m, a, v)).sum()
    }))
}

/// Gaussian curvature of a two-dimensional metric:
/// `K = R_{0110} / det G` in this module's index convention.
pub fn gaussian_curvature(g: &MetricField, x: &DVector<f64>) -> Result<f64> {
    if g.dim() != 2 {
        return Err(Error::dim(
            "gaussian curvature metric",
            "dimension 2",
            format!("dimension {}", g.dim()),
        ));
    }
    let lowered = riemann_lowered(g, x)?;
    let gm = g.metric_at(x)?;
    let det = gm.determinant();
    if !(det.abs() > 1e-12) {
        return Err(Error::IllConditioned {
            what: "metric determinant".into(),
            location: point_label(x),
            cond: f64::INFINITY,
            gate: METRIC_CONDITION_GATE,
        });
    }
    Ok(lowered.get(0, 1, 1, 0) / det)
}

/// Christoffel symbols of the first kind for the Hessian metric of a
/// potential, taken directly from the potential:
/// `Gamma_ijm = (1/2) d3 u / dxi dxj dxm`. Totally symmetric by
/// construction (each sorted index triple is differenced once).
pub fn potential_christoffel_first(u: &ScalarPotential, x: &DVector<f64>) -> Result<Tensor3> {
    let n = u.dim();
    require_dim("christoffel point", n, x.len())?;
    let w = u.raw_power(1);
    let h = STEP_THIRD * fd_scale(x);
    let mut out = Tensor3::zeros(n);
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                let v = 0.5 * third_central(&w, x, i, j, k, h);
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "third-derivative stencil of '{}' is non-finite at {}",
                        u.kind(),
                        point_label(x)
                    )));
                }
                for (a, b, c) in [
                    (i, j, k),
                    (i, k, j),
                    (j, i, k),
                    (j, k, i),
                    (k, i, j),
                    (k, j, i),
                ] {
                    out.set(a, b, c, v);
                }
            }
        }
    }
    Ok(out)
}

/// Outcome of the Hessian-metric curvature identity check at one point.
#[derive(Debug, Clone)]
pub struct HessianCurvatureReport {
    /// Fully lowered curvature tensor assembled from the curvature formula,
    /// with every derivative taken from the potential's own stencils.
    pub lowered: Tensor4,
    /// The bilinear Christoffel form
    /// `G^{lm} (Gamma_{mvm'} Gamma_{hsl} - Gamma_{msm'} Gamma_{hvl})`
    /// that the lowered tensor must equal for Hessian metrics.
    pub product_form: Tensor4,
    /// First-kind Christoffel symbols `(1/2) d3u` used by both sides.
    pub christoffel: Tensor3,
    /// Inverse of the Hessian metric at the point.
    pub inverse_metric: DMatrix<f64>,
    /// `max |lowered - product_form|` over all components.
    pub max_abs_difference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Verifies that the curvature of the Hessian metric of `u` equals the
/// bilinear Christoffel form.
///
/// The lowered curvature is assembled from the full curvature formula, with
/// `d_v Gamma^a_{m s}` expanded through the inverse-metric product rule:
/// the fourth-derivative part (totally symmetric) and the derivative of the
/// inverse metric (built from `d_v G_{ab} = 2 Gamma_{abv}`). All derivative
/// sources are stencils of the potential itself, keeping both sides at
/// finite-difference accuracy rather than nested-difference noise.
///
/// Fails with a domain error when the Hessian metric is not
/// positive-definite at `x`, and a conditioning error when the metric
/// inverse exceeds the gate.
pub fn hessian_curvature_check(
    u: &ScalarPotential,
    x: &DVector<f64>,
) -> Result<HessianCurvatureReport> {
    let n = u.dim();
    require_dim("curvature point", n, x.len())?;
    let w = u.raw_power(1);
    let scale = fd_scale(x);

    let g = hessian_central(&w, x, STEP_SECOND * scale);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "Hessian stencil of '{}' is non-finite at {}",
            u.kind(),
            point_label(x)
        )));
    }
    let eigs = g.clone().symmetric_eigen().eigenvalues;
    if !eigs.iter().all(|&e| e > 0.0) {
        return Err(Error::InvalidInput(format!(
            "Hessian metric of '{}' is not positive-definite at {}",
            u.kind(),
            point_label(x)
        )));
    }
    let ginv = gated_inverse(&g, &point_label(x))?;

    let gamma = potential_christoffel_first(u, x)?;

    // Fourth derivatives d4 w, totally symmetric: difference each sorted
    // quadruple once and fan the value out to all permutations.
    let h4 = STEP_FOURTH * scale;
    let mut d4 = Tensor4::zeros(n);
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                for l in k..n {
                    let v = fourth_central(&w, x, i, j, k, l, h4);
                    if !v.is_finite() {
                        return Err(Error::InvalidInput(format!(
                            "fourth-derivative stencil of '{}' is non-finite at {}",
                            u.kind(),
                            point_label(x)
                        )));
                    }
                    let mut idx = [i, j, k, l];
                    // 24 permutations of four indices; duplicates just
                    // rewrite the same slot.
                    permutations4(&mut idx, &mut |p| d4.set(p[0], p[1], p[2], p[3], v));
                }
            }
        }
    }

    // d_v of the inverse metric via d_v G_ab = 2 Gamma_abv.
    let mut dginv: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    for v in 0..n {
        let dg = DMatrix::from_fn(n, n, |a, b| 2.0 * gamma.get(a, b, v));
        dginv.push(-(&ginv) * dg * &ginv);
    }

    // d_v Gamma^a_{m s} = G^{am'} (1/2) w_{m s m' v} + (d_v G^{am'}) Gamma_{m s m'}.
    let mut dgamma_mixed: Vec<Tensor3> = Vec::with_capacity(n);
    for v in 0..n {
        let mut d = Tensor3::zeros(n);
        for a in 0..n {
            for m in 0..n {
                for s in 0..n {
                    let mut val = 0.0;
                    for mp in 0..n {
                        val += ginv[(a, mp)] * 0.5 * d4.get(m, s, mp, v)
                            + dginv[v][(a, mp)] * gamma.get(m, s, mp);
                    }
                    d.set(a, m, s, val);
                }
            }
        }
        dgamma_mixed.push(d);
    }

    let mut gamma_mixed = Tensor3::zeros(n);
    for a in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut val = 0.0;
                for m in 0..n {
                    val += ginv[(a, m)] * gamma.get(i, j, m);
                }
                gamma_mixed.set(a, i, j, val);
            }
        }
    }

    let mixed = assemble_curvature(&gamma_mixed, &dgamma_mixed);
    let lowered = lower_first_index(&mixed, &g);

    let mut product_form = Tensor4::zeros(n);
    for h in 0..n {
        for m in 0..n {
            for s in 0..n {
                for v in 0..n {
                    let mut val = 0.0;
                    for l in 0..n {
                        for mm in 0..n {
                            val += ginv[(l, mm)]
                                * (gamma.get(m, v, mm) * gamma.get(h, s, l)
                                    - gamma.get(m, s, mm) * gamma.get(h, v, l));
                        }
                    }
                    product_form.set(h, m, s, v, val);
                }
            }
        }
    }

    let mut max_abs_difference = 0.0_f64;
    for h in 0..n {
        for m in 0..n {
            for s in 0..n {
                for v in 0..n {
                    let d = (lowered.get(h, m, s, v) - product_form.get(h, m, s, v)).abs();
                    max_abs_difference = max_abs_difference.max(d);
                }
            }
        }
    }

    Ok(HessianCurvatureReport {
        lowered,
        product_form,
        christoffel: gamma,
        inverse_metric: ginv,
        max_abs_difference,
        tolerance: CURVATURE_IDENTITY_TOLERANCE,
        pass: max_abs_difference <= CURVATURE_IDENTITY_TOLERANCE,
    })
}

fn permutations4(idx: &mut [usize; 4], out: &mut impl FnMut(&[usize; 4])) {
    // Heap's algorithm, fixed size four.
    fn heap(k: usize, idx: &mut [usize; 4], out: &mut impl FnMut(&[usize; 4])) {
        if k == 1 {
            out(idx);
            return;
        }
        for i in 0..k {
            heap(k - 1, idx, out);
            if k % 2 == 0 {
                idx.swap(i, k - 1);
            } else {
                idx.swap(0, k - 1);
            }
        }
    }
    heap(4, idx, out);
}

/// The geodesic energy integrand and its Legendre pair for a metric:
/// `L = G_ij v^i v^j` and `H = G^{ij} p_i p_j` with `p = G v`.
/// The two agree identically (`G^{ij} G_ik G_jl = G_kl`); contracting
/// parameter-derivatives of `p` instead of `p` itself would not reproduce
/// `L` and is not what this computes.
#[derive(Debug, Clone, Copy)]
pub struct LagrangianHamiltonian {
    pub lagrangian: f64,
    pub hamiltonian: f64,
    pub difference: f64,
}

/// Evaluates `L = v^T G v`, the momenta `p = G v`, and `H = p^T G^{-1} p`,
/// behind the metric conditioning gate.
pub fn calabi_lagrangian_hamiltonian(
    g: &MetricField,
    x: &DVector<f64>,
    velocity: &DVector<f64>,
) -> Result<LagrangianHamiltonian> {
    let n = g.dim();
    require_dim("velocity", n, velocity.len())?;
    let gm = g.metric_at(x)?;
    let ginv = gated_inverse(&gm, &point_label(x))?;
    let lagrangian = (velocity.transpose() * &gm * velocity)[(0, 0)];
    let p = &gm * velocity;
    let hamiltonian = (p.transpose() * ginv * &p)[(0, 0)];
    Ok(LagrangianHamiltonian {
        lagrangian,
        hamiltonian,
        difference: lagrangian - hamiltonian,
    })
}
