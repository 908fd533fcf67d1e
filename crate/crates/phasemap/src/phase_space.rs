//! Phase-space primitives: phase vectors, quadratic Hamiltonians with
//! optional linear and scalar terms, structure matrices for the flow
//! equation, parameter changes between the two evolution variables, and the
//! barred coefficient matrices that drive transport.
//!
//! A Hamiltonian here is `H(tau, xi) = 1/2 xi^T Hmat xi + Gvec . xi + Dscal`,
//! on a 2n-dimensional phase space `xi = (coordinates, momenta)`. The flow is
//! `dxi/dtau = C dH/dxi` for a structure matrix `C`; the canonical choice is
//! the symplectic unit `J = [[0, I], [-I, 0]]`.

use crate::error::{Error, Result};
use crate::numerics;
use nalgebra::{DMatrix, DVector};

type MatFn = Box<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;
type VecFn = Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>;
type ScalFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;
type StateMatFn = Box<dyn Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type StateMatGradFn = Box<dyn Fn(f64, &DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync>;
type StateVecGradFn = Box<dyn Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type StateScalGradFn = Box<dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync>;

/// A point of the 2n-dimensional phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    data: DVector<f64>,
}

impl PhaseVector {
    /// Wraps a vector whose length must be even and at least 2.
    pub fn new(data: DVector<f64>) -> Result<Self> {
        if data.len() < 2 || data.len() % 2 != 0 {
            return Err(Error::dim(
                "PhaseVector::new",
                "even length >= 2",
                format!("{}", data.len()),
            ));
        }
        Ok(PhaseVector { data })
    }

    pub fn from_parts(coords: &DVector<f64>, momenta: &DVector<f64>) -> Result<Self> {
        if coords.len() != momenta.len() {
            return Err(Error::dim(
                "PhaseVector::from_parts",
                format!("{} momenta", coords.len()),
                format!("{}", momenta.len()),
            ));
        }
        let mut v = DVector::zeros(2 * coords.len());
        v.rows_mut(0, coords.len()).copy_from(coords);
        v.rows_mut(coords.len(), momenta.len()).copy_from(momenta);
        PhaseVector::new(v)
    }

    /// Half-dimension n.
    pub fn half_dim(&self) -> usize {
        self.data.len() / 2
    }

    pub fn coordinates(&self) -> DVector<f64> {
        self.data.rows(0, self.half_dim()).into_owned()
    }

    pub fn momenta(&self) -> DVector<f64> {
        self.data.rows(self.half_dim(), self.half_dim()).into_owned()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.data
    }
}

/// Quadratic coefficient: either a function of the evolution parameter alone,
/// or a state-dependent value with an optional partial-derivative callback.
enum QuadCoeff {
    Tau(MatFn),
    State {
        value: StateMatFn,
        /// `grad(tau, xi)[l]` is the matrix of partials of the coefficient
        /// with respect to coordinate `l`. Absent means the caller never
        /// needs the derivative terms.
        grad: Option<StateMatGradFn>,
    },
}

/// Linear coefficient with optional state dependence (matrix of partials
/// indexed `(l, j) -> d g_j / d xi_l`).
enum LinCoeff {
    Tau(VecFn),
    State {
        value: Box<dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync>,
        grad: Option<StateVecGradFn>,
    },
}

/// Scalar term with optional state dependence (gradient vector).
enum ScalCoeff {
    Tau(ScalFn),
    State {
        value: Box<dyn Fn(f64, &DVector<f64>) -> f64 + Send + Sync>,
        grad: Option<StateScalGradFn>,
    },
}

/// `H(tau, xi) = 1/2 xi^T Hmat xi + Gvec . xi + Dscal`.
///
/// The quadratic coefficient must be symmetric at every evaluation point;
/// `validate_at` spot-checks this. Coefficients given as functions of the
/// evolution parameter only are "constant-coefficient": their state partials
/// are identically zero.
pub struct QuadraticHamiltonian {
    n: usize,
    hmat: QuadCoeff,
    gvec: LinCoeff,
    dscal: ScalCoeff,
}

impl QuadraticHamiltonian {
    /// Constant coefficients.
    pub fn constant(hmat: DMatrix<f64>, gvec: DVector<f64>, dscal: f64) -> Result<Self> {
        let dim = hmat.nrows();
        if dim % 2 != 0 || hmat.ncols() != dim || gvec.len() != dim {
            return Err(Error::dim(
                "QuadraticHamiltonian::constant",
                "square 2n x 2n matrix with matching linear term",
                format!("{}x{} and {}", hmat.nrows(), hmat.ncols(), gvec.len()),
            ));
        }
        Ok(QuadraticHamiltonian {
            n: dim / 2,
            hmat: QuadCoeff::Tau(Box::new(move |_| hmat.clone())),
            gvec: LinCoeff::Tau(Box::new(move |_| gvec.clone())),
            dscal: ScalCoeff::Tau(Box::new(move |_| dscal)),
        })
    }

    /// Pure quadratic form with constant coefficient matrix.
    pub fn pure_quadratic(hmat: DMatrix<f64>) -> Result<Self> {
        let dim = hmat.nrows();
        let g = DVector::zeros(dim);
        QuadraticHamiltonian::constant(hmat, g, 0.0)
    }

    /// Coefficients varying with the evolution parameter.
    pub fn from_tau_fns(
        n: usize,
        hmat: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        gvec: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static,
        dscal: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        QuadraticHamiltonian {
            n,
            hmat: QuadCoeff::Tau(Box::new(hmat)),
            gvec: LinCoeff::Tau(Box::new(gvec)),
            dscal: ScalCoeff::Tau(Box::new(dscal)),
        }
    }

    /// State-dependent quadratic coefficient. The gradient callback returns,
    /// for each coordinate index `l`, the matrix of partials of the
    /// coefficient with respect to that coordinate. Without a callback the
    /// derivative terms are unavailable and coefficient assembly refuses.
    pub fn with_state_quadratic(
        mut self,
        value: impl Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        grad: Option<StateMatGradFn>,
    ) -> Self {
        self.hmat = QuadCoeff::State {
            value: Box::new(value),
            grad,
        };
        self
    }

    /// State-dependent linear coefficient with optional partials
    /// (`grad(tau, xi)[(l, j)] = d g_j / d xi_l`).
    pub fn with_state_linear(
        mut self,
        value: impl Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        grad: Option<StateVecGradFn>,
    ) -> Self {
        self.gvec = LinCoeff::State {
            value: Box::new(value),
            grad,
        };
        self
    }

    /// State-dependent scalar term with optional gradient.
    pub fn with_state_scalar(
        mut self,
        value: impl Fn(f64, &DVector<f64>) -> f64 + Send + Sync + 'static,
        grad: Option<StateScalGradFn>,
    ) -> Self {
        self.dscal = ScalCoeff::State {
            value: Box::new(value),
            grad,
        };
        self
    }

    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// True when no coefficient carries state dependence.
    pub fn is_constant_coefficient(&self) -> bool {
        matches!(self.hmat, QuadCoeff::Tau(_))
            && matches!(self.gvec, LinCoeff::Tau(_))
            && matches!(self.dscal, ScalCoeff::Tau(_))
    }

    pub fn hmat_at(&self, tau: f64, xi: &DVector<f64>) -> DMatrix<f64> {
        match &self.hmat {
            QuadCoeff::Tau(f) => f(tau),
            QuadCoeff::State { value, .. } => value(tau, xi),
        }
    }

    pub fn gvec_at(&self, tau: f64, xi: &DVector<f64>) -> DVector<f64> {
        match &self.gvec {
            LinCoeff::Tau(f) => f(tau),
            LinCoeff::State { value, .. } => value(tau, xi),
        }
    }

    pub fn dscal_at(&self, tau: f64, xi: &DVector<f64>) -> f64 {
        match &self.dscal {
            ScalCoeff::Tau(f) => f(tau),
            ScalCoeff::State { value, .. } => value(tau, xi),
        }
    }

    /// Spot-checks symmetry of the quadratic coefficient at one point.
    pub fn validate_at(&self, tau: f64, xi: &DVector<f64>) -> Result<()> {
        let h = self.hmat_at(tau, xi);
        if h.nrows() != 2 * self.n || h.ncols() != 2 * self.n {
            return Err(Error::dim(
                "QuadraticHamiltonian::validate_at",
                format!("{0}x{0}", 2 * self.n),
                format!("{}x{}", h.nrows(), h.ncols()),
            ));
        }
        let asym = numerics::max_abs_diff(&h, &h.transpose());
        let scale = h.amax().max(1.0);
        if asym > 1e-12 * scale {
            return Err(Error::InvalidInput(format!(
                "quadratic coefficient not symmetric at tau = {tau}: asymmetry {asym:.3e}"
            )));
        }
        Ok(())
    }

    /// Value of the Hamiltonian at `(tau, xi)`.
    pub fn evaluate(&self, tau: f64, xi: &PhaseVector) -> Result<f64> {
        self.check_xi(xi)?;
        let v = xi.as_vector();
        let h = self.hmat_at(tau, v);
        let g = self.gvec_at(tau, v);
        Ok(0.5 * (v.transpose() * &h * v)[(0, 0)] + g.dot(v) + self.dscal_at(tau, v))
    }

    /// Phase-space gradient of the quadratic form: `Hmat xi + Gvec`, exact.
    pub fn gradient(&self, tau: f64, xi: &PhaseVector) -> Result<DVector<f64>> {
        self.check_xi(xi)?;
        let v = xi.as_vector();
        Ok(self.hmat_at(tau, v) * v + self.gvec_at(tau, v))
    }

    /// Right-hand side of the flow equation `dxi/dtau = C dH/dxi`.
    pub fn flow_rhs(&self, tau: f64, xi: &PhaseVector, c: &StructureMatrix) -> Result<DVector<f64>> {
        if c.dim() != self.dim() {
            return Err(Error::dim(
                "flow_rhs",
                format!("structure matrix of size {}", self.dim()),
                format!("{}", c.dim()),
            ));
        }
        Ok(c.matrix() * self.gradient(tau, xi)?)
    }

    fn check_xi(&self, xi: &PhaseVector) -> Result<()> {
        if xi.as_vector().len() != self.dim() {
            return Err(Error::dim(
                "QuadraticHamiltonian",
                format!("phase vector of length {}", self.dim()),
                format!("{}", xi.as_vector().len()),
            ));
        }
        Ok(())
    }

    fn quad_grad_at(&self, tau: f64, xi: &DVector<f64>) -> Result<Option<Vec<DMatrix<f64>>>> {
        match &self.hmat {
            QuadCoeff::Tau(_) => Ok(None),
            QuadCoeff::State { grad, .. } => match grad {
                Some(g) => Ok(Some(g(tau, xi))),
                None => Err(Error::MissingCapability(
                    "state-dependent quadratic coefficient needs its partial-derivative callback \
                     for coefficient assembly"
                        .into(),
                )),
            },
        }
    }

    fn lin_grad_at(&self, tau: f64, xi: &DVector<f64>) -> Result<Option<DMatrix<f64>>> {
        match &self.gvec {
            LinCoeff::Tau(_) => Ok(None),
            LinCoeff::State { grad, .. } => match grad {
                Some(g) => Ok(Some(g(tau, xi))),
                None => Err(Error::MissingCapability(
                    "state-dependent linear coefficient needs its partial-derivative callback"
                        .into(),
                )),
            },
        }
    }

    fn scal_grad_at(&self, tau: f64, xi: &DVector<f64>) -> Result<Option<DVector<f64>>> {
        match &self.dscal {
            ScalCoeff::Tau(_) => Ok(None),
            ScalCoeff::State { grad, .. } => match grad {
                Some(g) => Ok(Some(g(tau, xi))),
                None => Err(Error::MissingCapability(
                    "state-dependent scalar term needs its gradient callback".into(),
                )),
            },
        }
    }
}

/// Structure matrix of the flow equation. `symplectic(n)` builds the exact
/// antisymmetric unit; `general` wraps any square matrix of even size.
#[derive(Debug, Clone)]
pub struct StructureMatrix {
    mat: DMatrix<f64>,
}

impl StructureMatrix {
    /// `[[0, I], [-I, 0]]` with exact unit entries.
    pub fn symplectic(n: usize) -> Self {
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            m[(i, n + i)] = 1.0;
            m[(n + i, i)] = -1.0;
        }
        StructureMatrix { mat: m }
    }

    pub fn general(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() % 2 != 0 || mat.nrows() == 0 {
            return Err(Error::dim(
                "StructureMatrix::general",
                "square matrix of even size",
                format!("{}x{}", mat.nrows(), mat.ncols()),
            ));
        }
        Ok(StructureMatrix { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }
}

/// Smooth invertible change `t = t(tau)` between the source and target
/// evolution parameters, carried together with its derivative.
pub struct Reparameterization {
    t_of_tau: ScalFn,
    dt_dtau: ScalFn,
}

impl Reparameterization {
    pub fn new(
        t_of_tau: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dt_dtau: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Reparameterization {
            t_of_tau: Box::new(t_of_tau),
            dt_dtau: Box::new(dt_dtau),
        }
    }

    /// `t = tau`.
    pub fn identity() -> Self {
        Reparameterization::new(|tau| tau, |_| 1.0)
    }

    pub fn t(&self, tau: f64) -> f64 {
        (self.t_of_tau)(tau)
    }

    pub fn dt(&self, tau: f64) -> f64 {
        (self.dt_dtau)(tau)
    }

    /// Max relative mismatch between the supplied derivative and a centered
    /// difference of `t(tau)` over a sample grid.
    pub fn derivative_mismatch(&self, taus: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for &tau in taus {
            let h = 1e-6 * tau.abs().max(1.0);
            let fd = (self.t(tau + h) - self.t(tau - h)) / (2.0 * h);
            let d = self.dt(tau);
            let rel = (fd - d).abs() / d.abs().max(1.0);
            worst = worst.max(rel);
        }
        worst
    }
}

/// Side of a transport problem a Hamiltonian sits on. The target side's
/// matrix picks up the parameter-rate factor so that both sides share one
/// transport equation in the source parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

/// Barred coefficient matrices of the transport and drift equations.
///
/// For a single Hamiltonian, `zmat` is the unscaled coefficient matrix
/// (quadratic coefficient plus state-derivative corrections), `ybar` the same
/// matrix times `dt/dtau` when built for the target side, and `ebar`/`gbar`
/// the barred linear coefficient (linear term plus scalar-term gradient) in
/// its two roles. `merged` combines a source set and a target set into the
/// view the drift equation consumes.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub zmat: DMatrix<f64>,
    pub ybar: DMatrix<f64>,
    pub ebar: DVector<f64>,
    pub gbar: DVector<f64>,
}

impl CoefficientSet {
    /// Source `zmat`/`gbar` with target `ybar`/`ebar`.
    pub fn merged(source: &CoefficientSet, target: &CoefficientSet) -> CoefficientSet {
        CoefficientSet {
            zmat: source.zmat.clone(),
            ybar: target.ybar.clone(),
            ebar: target.ebar.clone(),
            gbar: source.gbar.clone(),
        }
    }
}

/// Assembles the barred coefficients of a Hamiltonian at `(tau, xi)`.
///
/// Row `l`, column `j` of the matrix is
/// `H_lj + 1/2 sum_i (dH_ij/dxi_l) xi_i + dG_j/dxi_l`,
/// and the barred linear coefficient is `G_j + dD/dxi_j`. State-independent
/// coefficients contribute no derivative terms, so for a constant pure
/// quadratic the matrix equals the quadratic coefficient exactly.
pub fn coefficient_set(
    h: &QuadraticHamiltonian,
    xi: &PhaseVector,
    tau: f64,
    rep: &Reparameterization,
    side: Side,
) -> Result<CoefficientSet> {
    if xi.as_vector().len() != h.dim() {
        return Err(Error::dim(
            "coefficient_set",
            format!("phase vector of length {}", h.dim()),
            format!("{}", xi.as_vector().len()),
        ));
    }
    let dim = h.dim();
    let v = xi.as_vector();
    let mut base = h.hmat_at(tau, v);

    if let Some(dh) = h.quad_grad_at(tau, v)? {
        if dh.len() != dim {
            return Err(Error::dim(
                "coefficient_set",
                format!("{dim} partial matrices"),
                format!("{}", dh.len()),
            ));
        }
        // 1/2 sum_i (dH_ij / dxi_l) xi_i added at row l, column j.
        for l in 0..dim {
            let contrib = dh[l].transpose() * v;
            for j in 0..dim {
                base[(l, j)] += 0.5 * contrib[j];
            }
        }
    }
    if let Some(dg) = h.lin_grad_at(tau, v)? {
        base += dg;
    }

    let mut linear = h.gvec_at(tau, v);
    if let Some(dd) = h.scal_grad_at(tau, v)? {
        linear += dd;
    }

    let ybar = match side {
        Side::Target => &base * rep.dt(tau),
        Side::Source => base.clone(),
    };

    Ok(CoefficientSet {
        zmat: base,
        ybar,
        ebar: linear.clone(),
        gbar: linear,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SplitMix64;

    fn random_hamiltonian(rng: &mut SplitMix64, n: usize) -> (QuadraticHamiltonian, DMatrix<f64>, DVector<f64>, f64) {
        let h = rng.symmetric(2 * n);
        let g = rng.vector(2 * n);
        let d = rng.signed_unit();
        (
            QuadraticHamiltonian::constant(h.clone(), g.clone(), d).unwrap(),
            h,
            g,
            d,
        )
    }

    #[test]
    fn evaluate_identity_quadratic() {
        // H = I, G = 0, D = 0, xi = (1, 2): value 1/2 (1 + 4) = 2.5.
        let h = QuadraticHamiltonian::pure_quadratic(DMatrix::identity(2, 2)).unwrap();
        let xi = PhaseVector::new(DVector::from_vec(vec![1.0, 2.0])).unwrap();
        assert_eq!(h.evaluate(0.0, &xi).unwrap(), 2.5);
    }

    #[test]
    fn evaluate_scalar_term_only() {
        let h = QuadraticHamiltonian::constant(
            DMatrix::zeros(2, 2),
            DVector::zeros(2),
            7.0,
        )
        .unwrap();
        let xi = PhaseVector::new(DVector::from_vec(vec![3.0, -1.0])).unwrap();
        assert_eq!(h.evaluate(0.5, &xi).unwrap(), 7.0);
    }

    #[test]
    fn evaluate_even_in_xi_without_linear_term() {
        let mut rng = SplitMix64::new(41);
        for _ in 0..50 {
            let hm = rng.symmetric(4);
            let h = QuadraticHamiltonian::pure_quadratic(hm).unwrap();
            let x = rng.vector(4);
            let plus = PhaseVector::new(x.clone()).unwrap();
            let minus = PhaseVector::new(-x).unwrap();
            let a = h.evaluate(0.0, &plus).unwrap();
            let b = h.evaluate(0.0, &minus).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let mut rng = SplitMix64::new(2024);
        for _ in 0..100 {
            let (h, _, _, _) = random_hamiltonian(&mut rng, 2);
            let x = rng.vector(4);
            let xi = PhaseVector::new(x.clone()).unwrap();
            let grad = h.gradient(0.3, &xi).unwrap();
            let step = 1e-5 * x.amax().max(1.0);
            let fd = numerics::grad_central(
                &|y: &DVector<f64>| {
                    h.evaluate(0.3, &PhaseVector::new(y.clone()).unwrap()).unwrap()
                },
                &x,
                step,
            );
            let err = (&grad - &fd).amax() / grad.amax().max(1.0);
            assert!(err < 1e-6, "relative gradient error {err}");
        }
    }

    #[test]
    fn gradient_pure_quadratic_identity() {
        let h = QuadraticHamiltonian::pure_quadratic(DMatrix::identity(2, 2)).unwrap();
        let xi = PhaseVector::new(DVector::from_vec(vec![0.3, -0.4])).unwrap();
        let g = h.gradient(0.0, &xi).unwrap();
        assert_eq!(g, DVector::from_vec(vec![0.3, -0.4]));
    }

    #[test]
    fn flow_rhs_swaps_blocks_under_symplectic_unit() {
        // H = I, G = 0: flow is (momenta, -coordinates).
        let h = QuadraticHamiltonian::pure_quadratic(DMatrix::identity(4, 4)).unwrap();
        let xi = PhaseVector::new(DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        let j = StructureMatrix::symplectic(2);
        let rhs = h.flow_rhs(0.0, &xi, &j).unwrap();
        assert_eq!(rhs, DVector::from_vec(vec![3.0, 4.0, -1.0, -2.0]));
    }

    #[test]
    fn flow_rhs_dimension_mismatch_rejected() {
        let h = QuadraticHamiltonian::pure_quadratic(DMatrix::identity(4, 4)).unwrap();
        let xi = PhaseVector::new(DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        let j = StructureMatrix::symplectic(3);
        assert!(h.flow_rhs(0.0, &xi, &j).is_err());
    }

    #[test]
    fn symplectic_unit_identities_exact() {
        let j = StructureMatrix::symplectic(3);
        let m = j.matrix();
        assert_eq!(m + m.transpose(), DMatrix::zeros(6, 6));
        assert_eq!(m * m, -DMatrix::identity(6, 6));
    }

    #[test]
    fn coefficient_set_constant_pure_quadratic() {
        let mut rng = SplitMix64::new(5);
        let hm = rng.symmetric(4);
        let h = QuadraticHamiltonian::pure_quadratic(hm.clone()).unwrap();
        let xi = PhaseVector::new(rng.vector(4)).unwrap();
        let rep = Reparameterization::identity();
        let set = coefficient_set(&h, &xi, 0.7, &rep, Side::Source).unwrap();
        assert_eq!(set.zmat, hm);
        assert_eq!(set.gbar, DVector::zeros(4));
        let asym = numerics::max_abs_diff(&set.zmat, &set.zmat.transpose());
        assert!(asym <= 1e-12 * set.zmat.amax().max(1.0));
    }

    #[test]
    fn coefficient_set_target_scales_by_parameter_rate() {
        let mut rng = SplitMix64::new(6);
        let qm = rng.symmetric(4);
        let q = QuadraticHamiltonian::pure_quadratic(qm.clone()).unwrap();
        let xi = PhaseVector::new(rng.vector(4)).unwrap();
        let rep = Reparameterization::new(|tau| 2.0 * tau, |_| 2.0);
        let set = coefficient_set(&q, &xi, 0.1, &rep, Side::Target).unwrap();
        assert!(numerics::max_abs_diff(&set.ybar, &(&qm * 2.0)) < 1e-15);
        assert_eq!(set.zmat, qm);
    }

    #[test]
    fn coefficient_set_state_dependent_matches_finite_difference() {
        // 2x2 quadratic coefficient with linear state dependence:
        // H(xi) = H0 + xi_0 H1 + xi_1 H2.
        let h0 = DMatrix::from_row_slice(2, 2, &[0.6, -0.2, -0.2, 1.1]);
        let h1 = DMatrix::from_row_slice(2, 2, &[0.3, 0.5, 0.5, -0.4]);
        let h2 = DMatrix::from_row_slice(2, 2, &[-0.7, 0.1, 0.1, 0.9]);
        let value = {
            let (h0, h1, h2) = (h0.clone(), h1.clone(), h2.clone());
            move |_tau: f64, xi: &DVector<f64>| &h0 + &h1 * xi[0] + &h2 * xi[1]
        };
        let grad = {
            let (h1, h2) = (h1.clone(), h2.clone());
            move |_tau: f64, _xi: &DVector<f64>| vec![h1.clone(), h2.clone()]
        };
        let ham = QuadraticHamiltonian::from_tau_fns(
            1,
            |_| DMatrix::zeros(2, 2),
            |_| DVector::zeros(2),
            |_| 0.0,
        )
        .with_state_quadratic(value.clone(), Some(Box::new(grad)));

        let x = DVector::from_vec(vec![0.4, -0.8]);
        let xi = PhaseVector::new(x.clone()).unwrap();
        let rep = Reparameterization::identity();
        let set = coefficient_set(&ham, &xi, 0.0, &rep, Side::Source).unwrap();

        // Independent assembly with finite-difference partials of the value.
        let fd_step = 1e-6;
        let mut want = value(0.0, &x);
        for l in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[l] += fd_step;
            xm[l] -= fd_step;
            let dh = (value(0.0, &xp) - value(0.0, &xm)) / (2.0 * fd_step);
            for j in 0..2 {
                let mut acc = 0.0;
                for i in 0..2 {
                    acc += dh[(i, j)] * x[i];
                }
                want[(l, j)] += 0.5 * acc;
            }
        }
        assert!(numerics::max_abs_diff(&set.zmat, &want) < 1e-7);
    }

    #[test]
    fn coefficient_set_missing_derivative_callback_is_rejected() {
        let ham = QuadraticHamiltonian::from_tau_fns(
            1,
            |_| DMatrix::zeros(2, 2),
            |_| DVector::zeros(2),
            |_| 0.0,
        )
        .with_state_quadratic(|_, xi| DMatrix::identity(2, 2) * xi[0], None);
        let xi = PhaseVector::new(DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let rep = Reparameterization::identity();
        let err = coefficient_set(&ham, &xi, 0.0, &rep, Side::Source).unwrap_err();
        assert!(matches!(err, Error::MissingCapability(_)));
    }

    #[test]
    fn scalar_gradient_feeds_barred_linear_term() {
        // D(xi) = xi_0: barred linear coefficient gains (1, 0).
        let ham = QuadraticHamiltonian::from_tau_fns(
            1,
            |_| DMatrix::zeros(2, 2),
            |_| DVector::from_vec(vec![2.0, 3.0]),
            |_| 0.0,
        )
        .with_state_scalar(
            |_, xi| xi[0],
            Some(Box::new(|_, _| DVector::from_vec(vec![1.0, 0.0]))),
        );
        let xi = PhaseVector::new(DVector::from_vec(vec![0.5, 0.5])).unwrap();
        let set = coefficient_set(&ham, &xi, 0.0, &Reparameterization::identity(), Side::Source)
            .unwrap();
        assert_eq!(set.gbar, DVector::from_vec(vec![3.0, 3.0]));
    }

    #[test]
    fn phase_vector_rejects_odd_length() {
        assert!(PhaseVector::new(DVector::from_vec(vec![1.0, 2.0, 3.0])).is_err());
        assert!(PhaseVector::new(DVector::from_vec(vec![])).is_err());
    }

    #[test]
    fn reparameterization_derivative_consistency() {
        let rep = Reparameterization::new(|tau| (2.0 * tau).sin(), |tau| 2.0 * (2.0 * tau).cos());
        let taus: Vec<f64> = (0..20).map(|k| k as f64 * 0.05).collect();
        assert!(rep.derivative_mismatch(&taus) < 1e-9);
    }
}
