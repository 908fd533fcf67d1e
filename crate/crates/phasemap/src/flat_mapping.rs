//! Closed-form transport between two free flows and its reduction to
//! physical coordinates through a conformal frame.
//!
//! When both Hamiltonians are free — only the momentum-momentum quadrant of
//! each coefficient matrix is nonzero — the transport equation integrates in
//! closed form. Writing `Y4` for the target quadrant, `Z4` for the source
//! quadrant, `t(tau)` for the parameter change with `t(0) = 0`, and `T3` for
//! an arbitrary constant seed, the map quadrants are
//!
//! ```text
//! T1 = Y4 T3 t            T2 = -Y4 T3 Z4 (t tau)
//! T3 = const              T4 = -T3 Z4 tau
//! ```
//!
//! Sources flow as `(y0 + Z4 p0 tau, p0)`; their images flow as target states
//! with constant momentum `T3 y0` for every source initial condition.
//!
//! When the flat space carries two auxiliary directions over an
//! n-dimensional physical space (a conformally flat geometry unfolded into
//! flat coordinates), positions and velocities drop back to physical
//! coordinates through `rho(t) = exp(-sigma) Einv`: positions via
//! `W1 = rho T1_rows`, `W2 = rho T2_rows`, velocities via the product rule
//! `W3 = drho T1_rows + rho (Y4 T3)_rows` and
//! `W4 = drho T2_rows + rho (Y4 T4)_rows`, and momenta by lowering with the
//! physical metric `exp(2 sigma) E^T E`.

use crate::error::{Error, Result};
use crate::numerics;
use crate::phase_space::{Reparameterization, StructureMatrix};
use crate::transport::{BlockMatrix, TransportSystem};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Closed-form transport between two free flows on a flat phase space of
/// dimension `2m`.
pub struct FreeTransport {
    m: usize,
    y4: DMatrix<f64>,
    z4: DMatrix<f64>,
    t3: DMatrix<f64>,
}

fn require_symmetric(name: &str, m: &DMatrix<f64>) -> Result<()> {
    let asym = numerics::max_abs_diff(m, &m.transpose());
    if asym > 1e-12 * m.amax().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "{name} must be symmetric (kinetic coefficient); asymmetry {asym:.3e}"
        )));
    }
    Ok(())
}

impl FreeTransport {
    /// `y4`/`z4` are the target and source kinetic coefficients (symmetric
    /// m x m), `t3` the constant seed quadrant.
    pub fn new(y4: DMatrix<f64>, z4: DMatrix<f64>, t3: DMatrix<f64>) -> Result<Self> {
        let m = y4.nrows();
        for (name, mat) in [("y4", &y4), ("z4", &z4), ("t3", &t3)] {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(Error::dim(
                    "FreeTransport::new",
                    format!("{m}x{m} {name}"),
                    format!("{}x{}", mat.nrows(), mat.ncols()),
                ));
            }
        }
        require_symmetric("y4", &y4)?;
        require_symmetric("z4", &z4)?;
        Ok(FreeTransport { m, y4, z4, t3 })
    }

    /// Flat-space dimension m (phase space is 2m).
    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn y4(&self) -> &DMatrix<f64> {
        &self.y4
    }

    pub fn z4(&self) -> &DMatrix<f64> {
        &self.z4
    }

    pub fn t3(&self) -> &DMatrix<f64> {
        &self.t3
    }

    /// The map at `tau` in quadrant form.
    pub fn map_at(&self, rep: &Reparameterization, tau: f64) -> BlockMatrix {
        let t = rep.t(tau);
        let y4t3 = &self.y4 * &self.t3;
        BlockMatrix::new(
            &y4t3 * t,
            -(&y4t3 * &self.z4) * (t * tau),
            self.t3.clone(),
            -(&self.t3 * &self.z4) * tau,
        )
        .expect("quadrants share one size by construction")
    }

    /// Analytic derivative of the map with respect to the source parameter.
    pub fn map_rate_at(&self, rep: &Reparameterization, tau: f64) -> BlockMatrix {
        let t = rep.t(tau);
        let dt = rep.dt(tau);
        let y4t3 = &self.y4 * &self.t3;
        BlockMatrix::new(
            &y4t3 * dt,
            -(&y4t3 * &self.z4) * (dt * tau + t),
            DMatrix::zeros(self.m, self.m),
            -(&self.t3 * &self.z4),
        )
        .expect("quadrants share one size by construction")
    }

    /// Pointwise defect of the closed form against the transport equation:
    /// `|dT - (J Ybar T - T J Z)|_inf` with the analytic derivative. Zero up
    /// to rounding at every `tau`.
    pub fn equation_defect(&self, rep: &Reparameterization, tau: f64) -> f64 {
        let t = self.map_at(rep, tau);
        let rate = self.map_rate_at(rep, tau);
        let ybar = self.ybar_blocks(rep, tau);
        let z = self.z_blocks();
        let want = crate::transport::t_rate_blocks(&t, &ybar, &z);
        numerics::max_abs_diff(&rate.to_dense(), &want.to_dense())
    }

    fn ybar_blocks(&self, rep: &Reparameterization, tau: f64) -> BlockMatrix {
        let mut b = BlockMatrix::zeros(self.m);
        b.b4 = &self.y4 * rep.dt(tau);
        b
    }

    fn z_blocks(&self) -> BlockMatrix {
        let mut b = BlockMatrix::zeros(self.m);
        b.b4 = self.z4.clone();
        b
    }

    /// The same problem as a general transport system, for integrators and
    /// grid residuals.
    pub fn transport_system(&self, rep: Reparameterization) -> TransportSystem {
        let rep = Arc::new(rep);
        let m = self.m;
        let y4 = self.y4.clone();
        let z4 = self.z4.clone();
        let j = StructureMatrix::symplectic(m);
        TransportSystem::new(
            j.clone(),
            j,
            move |tau| {
                let mut b = BlockMatrix::zeros(m);
                b.b4 = &y4 * rep.dt(tau);
                b.to_dense()
            },
            move |_| {
                let mut b = BlockMatrix::zeros(m);
                b.b4 = z4.clone();
                b.to_dense()
            },
        )
        .expect("structure matrices share one size by construction")
    }

    /// Source free flow from `(y0, p0)`: coordinates advance linearly,
    /// momenta stay put.
    pub fn source_flow(&self, y0: &DVector<f64>, p0: &DVector<f64>, tau: f64) -> (DVector<f64>, DVector<f64>) {
        (y0 + &self.z4 * p0 * tau, p0.clone())
    }

    /// Applies the map at `tau` to a flat phase point, returning the image
    /// `(coordinates, momenta)`.
    pub fn map_phase(
        &self,
        rep: &Reparameterization,
        tau: f64,
        y: &DVector<f64>,
        p: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check_len("map_phase", y)?;
        self.check_len("map_phase", p)?;
        let t = self.map_at(rep, tau);
        Ok((&t.b1 * y + &t.b2 * p, &t.b3 * y + &t.b4 * p))
    }

    /// Momentum of the image trajectory: constant in the evolution, equal to
    /// `T3 y0` for every source initial condition.
    pub fn image_momentum(&self, y0: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len("image_momentum", y0)?;
        Ok(&self.t3 * y0)
    }

    /// Coordinates of the image trajectory at target parameter `t`:
    /// `Y4 (T3 y0) t`.
    pub fn image_coordinates(&self, y0: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
        Ok(&self.y4 * self.image_momentum(y0)? * t)
    }

    fn check_len(&self, what: &str, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.m {
            return Err(Error::dim(
                what,
                format!("vector of length {}", self.m),
                format!("{}", v.len()),
            ));
        }
        Ok(())
    }
}

type MatOfT = Box<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;
type ScalOfT = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A conformal frame on the n physical coordinates, possibly varying with
/// the target parameter: vielbein `E(t)` and log conformal factor
/// `sigma(t)`. The physical metric is `exp(2 sigma) E^T E`.
pub struct ConformalFrame {
    n: usize,
    e: MatOfT,
    sigma: ScalOfT,
}

impl ConformalFrame {
    pub fn new(
        n: usize,
        e: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        sigma: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ConformalFrame {
            n,
            e: Box::new(e),
            sigma: Box::new(sigma),
        }
    }

    pub fn constant(e: DMatrix<f64>, sigma: f64) -> Self {
        let n = e.nrows();
        ConformalFrame::new(n, move |_| e.clone(), move |_| sigma)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn sigma(&self, t: f64) -> f64 {
        (self.sigma)(t)
    }

    pub fn vielbein(&self, t: f64) -> DMatrix<f64> {
        (self.e)(t)
    }

    /// `rho(t) = exp(-sigma) E^-1`, the drop from flat coordinates to
    /// physical ones.
    pub fn rho(&self, t: f64) -> Result<DMatrix<f64>> {
        let e = self.vielbein(t);
        if e.nrows() != self.n || e.ncols() != self.n {
            return Err(Error::dim(
                "ConformalFrame::rho",
                format!("{0}x{0} vielbein", self.n),
                format!("{}x{}", e.nrows(), e.ncols()),
            ));
        }
        let cond = numerics::condition_inf(&e);
        if !cond.is_finite() || cond > 1e12 {
            return Err(Error::IllConditioned {
                what: "vielbein".into(),
                location: format!("t = {t}"),
                cond,
                gate: 1e12,
            });
        }
        let einv = e.try_inverse().expect("finite condition implies invertible");
        Ok(einv * (-self.sigma(t)).exp())
    }

    /// Centered-difference derivative of `rho` in the target parameter.
    pub fn rho_rate(&self, t: f64) -> Result<DMatrix<f64>> {
        let h = 1e-6 * t.abs().max(1.0);
        Ok((self.rho(t + h)? - self.rho(t - h)?) / (2.0 * h))
    }

    /// Physical metric `exp(2 sigma) E^T E`.
    pub fn metric(&self, t: f64) -> DMatrix<f64> {
        let e = self.vielbein(t);
        e.transpose() * &e * (2.0 * self.sigma(t)).exp()
    }
}

/// How the frame-rate term of the velocity maps pairs with the map
/// quadrants. `ProductRule` is the plain derivative of the position maps:
/// the frame rate keeps quadrant 1 against the initial coordinates.
/// `CrossQuadrant` pairs the frame rate with quadrant 2 in both velocity
/// maps; the two coincide whenever the frame is constant in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityConvention {
    ProductRule,
    CrossQuadrant,
}

/// Position and velocity maps from the current flat source state `(y, p)` —
/// the source trajectory evaluated at the matching parameter — to physical
/// coordinates: `u = W1 y + W2 p`, `du/dt = W3 y + W4 p`. The `M` pieces are
/// kept for inspection: `W3 = M1 + M3`, `W4 = M2 + M4`, with `M1`/`M2`
/// carrying the frame rate and `M3`/`M4` the flat velocity.
#[derive(Debug, Clone)]
pub struct LoweredMaps {
    pub w1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
    pub w3: DMatrix<f64>,
    pub w4: DMatrix<f64>,
    pub m1: DMatrix<f64>,
    pub m2: DMatrix<f64>,
    pub m3: DMatrix<f64>,
    pub m4: DMatrix<f64>,
}

/// Builds the physical position and velocity maps at `tau`. The frame must
/// span exactly two fewer dimensions than the flat space (the two auxiliary
/// embedding directions are dropped).
pub fn lowered_maps(
    flat: &FreeTransport,
    frame: &ConformalFrame,
    rep: &Reparameterization,
    tau: f64,
    convention: VelocityConvention,
) -> Result<LoweredMaps> {
    let m = flat.dim();
    let n = frame.dim();
    if n + 2 != m {
        return Err(Error::dim(
            "lowered_maps",
            format!("frame of dimension {} (flat dimension minus 2)", m.saturating_sub(2)),
            format!("{n}"),
        ));
    }
    let t = rep.t(tau);
    let map = flat.map_at(rep, tau);
    let rho = frame.rho(t)?;
    let drho = frame.rho_rate(t)?;
    let rows = |mat: &DMatrix<f64>| mat.rows(0, n).into_owned();

    let t1_rows = rows(&map.b1);
    let t2_rows = rows(&map.b2);
    let v3_rows = rows(&(flat.y4() * &map.b3));
    let v4_rows = rows(&(flat.y4() * &map.b4));

    let w1 = &rho * &t1_rows;
    let w2 = &rho * &t2_rows;
    let m1 = match convention {
        VelocityConvention::ProductRule => &drho * &t1_rows,
        VelocityConvention::CrossQuadrant => &drho * &t2_rows,
    };
    let m2 = &drho * &t2_rows;
    let m3 = &rho * &v3_rows;
    let m4 = &rho * &v4_rows;
    Ok(LoweredMaps {
        w3: &m1 + &m3,
        w4: &m2 + &m4,
        w1,
        w2,
        m1,
        m2,
        m3,
        m4,
    })
}

/// Physical position, velocity and momentum of one mapped trajectory at a
/// fixed parameter value.
#[derive(Debug, Clone)]
pub struct PhysicalState {
    pub u: DVector<f64>,
    pub u_dot: DVector<f64>,
    pub p: DVector<f64>,
}

/// Applies lowered maps and the metric to the current flat source state.
pub fn physical_state(
    maps: &LoweredMaps,
    metric: &DMatrix<f64>,
    y: &DVector<f64>,
    p: &DVector<f64>,
) -> PhysicalState {
    let u = &maps.w1 * y + &maps.w2 * p;
    let u_dot = &maps.w3 * y + &maps.w4 * p;
    let p = metric * &u_dot;
    PhysicalState { u, u_dot, p }
}

/// Max-abs defect of the assembled momentum against the metric times the
/// centered-difference velocity of the physical position along one mapped
/// trajectory started from `(y0, p0)`:
/// `| G du/dt - G (W3 y + W4 p) |_inf`, with `(y, p)` the flowed source
/// state. The position derivative is taken in the source parameter and
/// converted by the parameter rate, so the rate must stay away from zero.
pub fn momentum_consistency(
    flat: &FreeTransport,
    frame: &ConformalFrame,
    rep: &Reparameterization,
    tau: f64,
    y0: &DVector<f64>,
    p0: &DVector<f64>,
    convention: VelocityConvention,
) -> Result<f64> {
    let dt = rep.dt(tau);
    if dt.abs() < 1e-9 {
        return Err(Error::InvalidInput(format!(
            "parameter rate {dt:.3e} too close to zero at tau = {tau} for a velocity check"
        )));
    }
    let position = |tau_s: f64| -> Result<DVector<f64>> {
        let maps = lowered_maps(flat, frame, rep, tau_s, convention)?;
        let (y, p) = flat.source_flow(y0, p0, tau_s);
        Ok(&maps.w1 * y + &maps.w2 * p)
    };
    let h = 1e-6 * tau.abs().max(1.0);
    let du_dtau = (position(tau + h)? - position(tau - h)?) / (2.0 * h);
    let du_dt = du_dtau / dt;

    let maps = lowered_maps(flat, frame, rep, tau, convention)?;
    let metric = frame.metric(rep.t(tau));
    let (y, p) = flat.source_flow(y0, p0, tau);
    let state = physical_state(&maps, &metric, &y, &p);
    Ok((&metric * du_dt - state.p).amax())
}

/// Outcome of comparing the three Hamiltonian values a single line element
/// carries (curved coordinates, conformally flat coordinates, and the
/// enlarged flat embedding).
#[derive(Debug, Clone)]
pub struct HamiltonianComparison {
    pub q: f64,
    pub hhat: f64,
    pub h: f64,
    pub max_pairwise: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks that the three Hamiltonian values computed from one consistent
/// physical state agree pairwise within `1e-10 * max(1, |h|)`, `h` being
/// the enlarged-flat value.
pub fn hamiltonian_equality_check(q: f64, hhat: f64, h: f64) -> HamiltonianComparison {
    let max_pairwise = (q - hhat)
        .abs()
        .max((q - h).abs())
        .max((hhat - h).abs());
    let tolerance = 1e-10 * h.abs().max(1.0);
    HamiltonianComparison {
        q,
        hhat,
        h,
        max_pairwise,
        tolerance,
        pass: max_pairwise <= tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SplitMix64;
    use crate::transport::transport_residual;

    fn sample_transport(rng: &mut SplitMix64, m: usize) -> FreeTransport {
        FreeTransport::new(
            rng.symmetric(m),
            rng.symmetric(m),
            rng.near_identity(m, 0.4),
        )
        .unwrap()
    }

    fn sine_rep() -> Reparameterization {
        Reparameterization::new(|tau| (2.0 * tau).sin(), |tau| 2.0 * (2.0 * tau).cos())
    }

    #[test]
    fn closed_form_satisfies_transport_equation_pointwise() {
        let mut rng = SplitMix64::new(11);
        for m in [2usize, 3, 4] {
            let flat = sample_transport(&mut rng, m);
            let rep = sine_rep();
            for k in 0..20 {
                let tau = -1.0 + 0.1 * k as f64;
                let defect = flat.equation_defect(&rep, tau);
                assert!(defect < 1e-12, "m={m} tau={tau} defect={defect}");
            }
        }
    }

    #[test]
    fn analytic_rate_matches_grid_derivative() {
        let mut rng = SplitMix64::new(12);
        let flat = sample_transport(&mut rng, 3);
        let rep = sine_rep();
        let h = 1e-3;
        let samples: Vec<(f64, DMatrix<f64>)> = (0..9)
            .map(|k| {
                let tau = 0.3 + h * k as f64;
                (tau, flat.map_at(&rep, tau).to_dense())
            })
            .collect();
        let values: Vec<DMatrix<f64>> = samples.iter().map(|(_, m)| m.clone()).collect();
        let mid = 4;
        let fd = numerics::grid_derivative(&values, h, mid).unwrap();
        let analytic = flat.map_rate_at(&rep, samples[mid].0).to_dense();
        assert!(numerics::max_abs_diff(&fd, &analytic) < 1e-9);
    }

    #[test]
    fn closed_form_matches_integrated_map() {
        let mut rng = SplitMix64::new(13);
        let flat = sample_transport(&mut rng, 2);
        let rep = sine_rep();
        let tau1 = 0.9;
        let t0 = flat.map_at(&rep, 0.0).to_dense();
        let sys = flat.transport_system(sine_rep());
        let traj = sys.integrate_map(&t0, 0.0, tau1, 400).unwrap();
        let want = flat.map_at(&rep, tau1).to_dense();
        assert!(numerics::max_abs_diff(&traj.last().unwrap().1, &want) < 1e-10);
        let res = transport_residual(&traj, |tau, t| sys.t_rate(tau, t)).unwrap();
        assert!(res < 1e-7, "grid residual {res}");
    }

    #[test]
    fn map_starts_in_lower_left_quadrant() {
        let mut rng = SplitMix64::new(14);
        let flat = sample_transport(&mut rng, 3);
        let rep = sine_rep();
        let t = flat.map_at(&rep, 0.0);
        assert_eq!(t.b1, DMatrix::zeros(3, 3));
        assert_eq!(t.b2, DMatrix::zeros(3, 3));
        assert_eq!(t.b4, DMatrix::zeros(3, 3));
        assert_eq!(t.b3, *flat.t3());
    }

    #[test]
    fn image_of_source_flow_is_target_flow() {
        let mut rng = SplitMix64::new(15);
        let flat = sample_transport(&mut rng, 3);
        let rep = sine_rep();
        let y0 = rng.vector(3);
        let p0 = rng.vector(3);
        let pbar = flat.image_momentum(&y0).unwrap();
        for k in 0..15 {
            let tau = -0.7 + 0.1 * k as f64;
            let (y, p) = flat.source_flow(&y0, &p0, tau);
            let (ybar, pbar_tau) = flat.map_phase(&rep, tau, &y, &p).unwrap();
            // Image momentum constant and independent of p0.
            assert!((&pbar_tau - &pbar).amax() < 1e-12, "tau={tau}");
            // Image coordinates follow the free target flow in t.
            let want = flat.image_coordinates(&y0, rep.t(tau)).unwrap();
            assert!((&ybar - &want).amax() < 1e-12, "tau={tau}");
        }
    }

    fn test_frame_constant() -> (ConformalFrame, DMatrix<f64>) {
        let e = DMatrix::from_row_slice(2, 2, &[1.1, 0.3, -0.2, 0.9]);
        (ConformalFrame::constant(e.clone(), 0.25), e)
    }

    #[test]
    fn frame_metric_and_rho_are_inverse_shaped() {
        let (frame, e) = test_frame_constant();
        let g = frame.metric(0.4);
        let want = e.transpose() * &e * (0.5_f64).exp();
        assert!(numerics::max_abs_diff(&g, &want) < 1e-14);
        // rho^-1 = exp(sigma) E, so (rho^-1)^T rho^-1 = metric.
        let rho = frame.rho(0.4).unwrap();
        let rho_inv = rho.try_inverse().unwrap();
        assert!(numerics::max_abs_diff(&(rho_inv.transpose() * &rho_inv), &g) < 1e-12);
    }

    #[test]
    fn constant_frame_zeroes_the_frame_rate_terms() {
        let mut rng = SplitMix64::new(16);
        let flat = sample_transport(&mut rng, 4);
        let (frame, _) = test_frame_constant();
        let rep = sine_rep();
        let a = lowered_maps(&flat, &frame, &rep, 0.4, VelocityConvention::ProductRule).unwrap();
        let b = lowered_maps(&flat, &frame, &rep, 0.4, VelocityConvention::CrossQuadrant).unwrap();
        assert_eq!(a.m1, DMatrix::zeros(2, 4));
        assert_eq!(a.m2, DMatrix::zeros(2, 4));
        assert!(numerics::max_abs_diff(&a.w3, &b.w3) < 1e-15);
        assert!(numerics::max_abs_diff(&a.w4, &b.w4) < 1e-15);
    }

    #[test]
    fn momentum_consistency_discriminates_conventions() {
        let mut rng = SplitMix64::new(17);
        let flat = sample_transport(&mut rng, 4);
        let e = DMatrix::from_row_slice(2, 2, &[1.1, 0.3, -0.2, 0.9]);
        let frame = ConformalFrame::new(2, move |_| e.clone(), |t| 0.2 + 0.3 * t);
        let rep = sine_rep();
        let y0 = rng.vector(4);
        let p0 = rng.vector(4);
        let tau = 0.4;
        let good = momentum_consistency(
            &flat, &frame, &rep, tau, &y0, &p0, VelocityConvention::ProductRule,
        )
        .unwrap();
        let bad = momentum_consistency(
            &flat, &frame, &rep, tau, &y0, &p0, VelocityConvention::CrossQuadrant,
        )
        .unwrap();
        assert!(good < 1e-7, "product rule defect {good}");
        assert!(bad > 1e-3, "cross-quadrant defect {bad}");
    }

    #[test]
    fn lowered_maps_rejects_wrong_frame_dimension() {
        let mut rng = SplitMix64::new(18);
        let flat = sample_transport(&mut rng, 4);
        let (frame3, _) = {
            let e = DMatrix::identity(3, 3);
            (ConformalFrame::constant(e, 0.0), ())
        };
        let rep = Reparameterization::identity();
        assert!(matches!(
            lowered_maps(&flat, &frame3, &rep, 0.1, VelocityConvention::ProductRule),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn singular_vielbein_is_gated() {
        let e = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let frame = ConformalFrame::constant(e, 0.0);
        assert!(matches!(frame.rho(0.0), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn asymmetric_kinetic_coefficient_rejected() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        let sym = DMatrix::identity(2, 2);
        assert!(FreeTransport::new(bad, sym.clone(), sym.clone()).is_err());
    }

    #[test]
    fn hamiltonian_comparison_accepts_equal_and_flags_perturbed() {
        assert!(hamiltonian_equality_check(0.0, 0.0, 0.0).pass);
        let v = 0.7315;
        assert!(hamiltonian_equality_check(v, v, v).pass);
        let tweaked = hamiltonian_equality_check(v, v + 1e-6, v);
        assert!(!tweaked.pass);
        assert!((tweaked.max_pairwise - 1e-6).abs() < 1e-12);
    }
}
