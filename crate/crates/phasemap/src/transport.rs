//! Transport of phase-space maps: the matrix equation
//! `dT/dtau = B Ybar T - T C Z` moving a linear map between two flows, its
//! affine extension with an offset vector, the reduced one-sided factor
//! equations, the fully coupled factor equations with drift and coupling
//! terms, and grid-based residual measurement.
//!
//! Matrices split into n x n quadrants `[[m1, m2], [m3, m4]]`. With the
//! canonical antisymmetric structure on both sides the quadrant form of the
//! transport equation reads
//!
//! ```text
//! dT1 = Y3 T1 + Y4 T3 + T2 Z1 - T1 Z3      dT2 = Y3 T2 + Y4 T4 + T2 Z2 - T1 Z4
//! dT3 = -Y1 T1 - Y2 T3 + T4 Z1 - T3 Z3     dT4 = -Y1 T2 - Y2 T4 + T4 Z2 - T3 Z4
//! ```
//!
//! and the reduced factors obey `dS = B Ybar S` and `dR = -R C Z`.

use crate::error::{Error, Result};
use crate::numerics::{self, RkState};
use crate::phase_space::StructureMatrix;
use nalgebra::{DMatrix, DVector};
use std::io::Write as _;
use std::path::Path;

/// A square matrix of even size carried as four equal quadrants
/// `[[b1, b2], [b3, b4]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    n: usize,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub b3: DMatrix<f64>,
    pub b4: DMatrix<f64>,
}

impl BlockMatrix {
    pub fn new(
        b1: DMatrix<f64>,
        b2: DMatrix<f64>,
        b3: DMatrix<f64>,
        b4: DMatrix<f64>,
    ) -> Result<Self> {
        let n = b1.nrows();
        for (name, b) in [("b1", &b1), ("b2", &b2), ("b3", &b3), ("b4", &b4)] {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::dim(
                    "BlockMatrix::new",
                    format!("{n}x{n} quadrant {name}"),
                    format!("{}x{}", b.nrows(), b.ncols()),
                ));
            }
        }
        Ok(BlockMatrix { n, b1, b2, b3, b4 })
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        let dim = m.nrows();
        if m.ncols() != dim || dim % 2 != 0 || dim == 0 {
            return Err(Error::dim(
                "BlockMatrix::from_dense",
                "square matrix of even size",
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        let n = dim / 2;
        Ok(BlockMatrix {
            n,
            b1: m.view((0, 0), (n, n)).into_owned(),
            b2: m.view((0, n), (n, n)).into_owned(),
            b3: m.view((n, 0), (n, n)).into_owned(),
            b4: m.view((n, n), (n, n)).into_owned(),
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.b1);
        m.view_mut((0, n), (n, n)).copy_from(&self.b2);
        m.view_mut((n, 0), (n, n)).copy_from(&self.b3);
        m.view_mut((n, n), (n, n)).copy_from(&self.b4);
        m
    }

    pub fn zeros(n: usize) -> Self {
        BlockMatrix {
            n,
            b1: DMatrix::zeros(n, n),
            b2: DMatrix::zeros(n, n),
            b3: DMatrix::zeros(n, n),
            b4: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        BlockMatrix {
            n,
            b1: DMatrix::identity(n, n),
            b2: DMatrix::zeros(n, n),
            b3: DMatrix::zeros(n, n),
            b4: DMatrix::identity(n, n),
        }
    }

    /// Quadrant size n (the full matrix is 2n x 2n).
    pub fn half_dim(&self) -> usize {
        self.n
    }

    /// Quadrant-wise product, equal to the dense product of the assemblies.
    pub fn mul(&self, other: &BlockMatrix) -> BlockMatrix {
        BlockMatrix {
            n: self.n,
            b1: &self.b1 * &other.b1 + &self.b2 * &other.b3,
            b2: &self.b1 * &other.b2 + &self.b2 * &other.b4,
            b3: &self.b3 * &other.b1 + &self.b4 * &other.b3,
            b4: &self.b3 * &other.b2 + &self.b4 * &other.b4,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.to_dense().amax()
    }
}

/// Quadrant form of `B Ybar T - T C Z` with the canonical antisymmetric
/// structure `[[0, I], [-I, 0]]` on both sides.
pub fn t_rate_blocks(t: &BlockMatrix, ybar: &BlockMatrix, z: &BlockMatrix) -> BlockMatrix {
    BlockMatrix {
        n: t.n,
        b1: &ybar.b3 * &t.b1 + &ybar.b4 * &t.b3 + &t.b2 * &z.b1 - &t.b1 * &z.b3,
        b2: &ybar.b3 * &t.b2 + &ybar.b4 * &t.b4 + &t.b2 * &z.b2 - &t.b1 * &z.b4,
        b3: -(&ybar.b1 * &t.b1) - &ybar.b2 * &t.b3 + &t.b4 * &z.b1 - &t.b3 * &z.b3,
        b4: -(&ybar.b1 * &t.b2) - &ybar.b2 * &t.b4 + &t.b4 * &z.b2 - &t.b3 * &z.b4,
    }
}

/// Quadrant form of the reduced left-factor equation `dS = J Ybar S`.
pub fn s_rate_blocks(s: &BlockMatrix, ybar: &BlockMatrix) -> BlockMatrix {
    BlockMatrix {
        n: s.n,
        b1: &ybar.b3 * &s.b1 + &ybar.b4 * &s.b3,
        b2: &ybar.b3 * &s.b2 + &ybar.b4 * &s.b4,
        b3: -(&ybar.b1 * &s.b1) - &ybar.b2 * &s.b3,
        b4: -(&ybar.b1 * &s.b2) - &ybar.b2 * &s.b4,
    }
}

/// Quadrant form of the reduced right-factor equation `dR = -R J Z`.
pub fn r_rate_blocks(r: &BlockMatrix, z: &BlockMatrix) -> BlockMatrix {
    BlockMatrix {
        n: r.n,
        b1: -(&r.b1 * &z.b3) + &r.b2 * &z.b1,
        b2: -(&r.b1 * &z.b4) + &r.b2 * &z.b2,
        b3: -(&r.b3 * &z.b3) + &r.b4 * &z.b1,
        b4: -(&r.b3 * &z.b4) + &r.b4 * &z.b2,
    }
}

/// Dense `B Ybar T - T C Z` for arbitrary structure matrices.
pub fn t_rate_dense(
    t: &DMatrix<f64>,
    b: &DMatrix<f64>,
    ybar: &DMatrix<f64>,
    c: &DMatrix<f64>,
    z: &DMatrix<f64>,
) -> DMatrix<f64> {
    b * ybar * t - t * c * z
}

/// Coupled left-factor equation `dS = B Ybar S + D + S A F`.
pub fn s_full_rate(
    s: &DMatrix<f64>,
    b: &DMatrix<f64>,
    ybar: &DMatrix<f64>,
    d: &DMatrix<f64>,
    a: &DMatrix<f64>,
    f: &DMatrix<f64>,
) -> DMatrix<f64> {
    b * ybar * s + d + s * a * f
}

/// Coupled right-factor equation `dR = -R C Z + E + G A R`.
pub fn r_full_rate(
    r: &DMatrix<f64>,
    c: &DMatrix<f64>,
    z: &DMatrix<f64>,
    e: &DMatrix<f64>,
    g: &DMatrix<f64>,
    a: &DMatrix<f64>,
) -> DMatrix<f64> {
    -(r * c * z) + e + g * a * r
}

/// Quadrant-wise triple product `(S A) R`, the composed map of a
/// left-factor / core / right-factor splitting.
pub fn compose_t(s: &BlockMatrix, a: &BlockMatrix, r: &BlockMatrix) -> BlockMatrix {
    s.mul(a).mul(r)
}

/// Offset-vector equation of the affine map `x -> T x + rho`:
/// `drho = B (Ybar rho + ebar) - T C gbar`. `ybar` and `ebar` are the
/// target-side barred coefficients (already carrying the parameter-rate
/// factor), `gbar` the source-side barred linear coefficient.
pub fn offset_rate(
    rho: &DVector<f64>,
    t: &DMatrix<f64>,
    b: &DMatrix<f64>,
    ybar: &DMatrix<f64>,
    ebar: &DVector<f64>,
    c: &DMatrix<f64>,
    gbar: &DVector<f64>,
) -> DVector<f64> {
    b * (ybar * rho + ebar) - t * c * gbar
}

type MatOfTau = Box<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;
type VecOfTau = Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// The data of one transport problem: structure matrices for both sides and
/// the barred coefficients as functions of the source parameter. The target
/// coefficients must already carry the parameter-rate factor.
pub struct TransportSystem {
    b: StructureMatrix,
    c: StructureMatrix,
    ybar: MatOfTau,
    z: MatOfTau,
    ebar: Option<VecOfTau>,
    gbar: Option<VecOfTau>,
}

impl TransportSystem {
    pub fn new(
        b: StructureMatrix,
        c: StructureMatrix,
        ybar: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        z: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if b.dim() != c.dim() {
            return Err(Error::dim(
                "TransportSystem::new",
                format!("matching structure matrices ({})", b.dim()),
                format!("{}", c.dim()),
            ));
        }
        Ok(TransportSystem {
            b,
            c,
            ybar: Box::new(ybar),
            z: Box::new(z),
            ebar: None,
            gbar: None,
        })
    }

    /// Adds the linear-coefficient drifts needed by the affine offset.
    pub fn with_drift(
        mut self,
        ebar: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static,
        gbar: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        self.ebar = Some(Box::new(ebar));
        self.gbar = Some(Box::new(gbar));
        self
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn ybar_at(&self, tau: f64) -> DMatrix<f64> {
        (self.ybar)(tau)
    }

    pub fn z_at(&self, tau: f64) -> DMatrix<f64> {
        (self.z)(tau)
    }

    /// Dense transport rate at `tau`.
    pub fn t_rate(&self, tau: f64, t: &DMatrix<f64>) -> DMatrix<f64> {
        t_rate_dense(t, self.b.matrix(), &self.ybar_at(tau), self.c.matrix(), &self.z_at(tau))
    }

    /// Integrates the linear transport map from `t0` over `[tau0, tau1]`,
    /// returning the whole uniform-grid trajectory.
    pub fn integrate_map(
        &self,
        t0: &DMatrix<f64>,
        tau0: f64,
        tau1: f64,
        steps: usize,
    ) -> Result<Vec<(f64, DMatrix<f64>)>> {
        self.check_square(t0, "integrate_map")?;
        Ok(numerics::integrate(t0, tau0, tau1, steps, |tau, t| {
            self.t_rate(tau, t)
        }))
    }

    /// Integrates the affine map `(T, rho)` jointly. Requires drifts.
    pub fn integrate_affine(
        &self,
        t0: &DMatrix<f64>,
        rho0: &DVector<f64>,
        tau0: f64,
        tau1: f64,
        steps: usize,
    ) -> Result<Vec<(f64, AffineMap)>> {
        self.check_square(t0, "integrate_affine")?;
        if rho0.len() != self.dim() {
            return Err(Error::dim(
                "integrate_affine",
                format!("offset of length {}", self.dim()),
                format!("{}", rho0.len()),
            ));
        }
        let (ebar, gbar) = match (&self.ebar, &self.gbar) {
            (Some(e), Some(g)) => (e, g),
            _ => {
                return Err(Error::MissingCapability(
                    "affine transport needs both linear-coefficient drifts; use with_drift".into(),
                ))
            }
        };
        let state0 = (t0.clone(), rho0.clone());
        let traj = numerics::integrate(&state0, tau0, tau1, steps, |tau, (t, rho)| {
            let ybar = self.ybar_at(tau);
            (
                t_rate_dense(t, self.b.matrix(), &ybar, self.c.matrix(), &self.z_at(tau)),
                offset_rate(rho, t, self.b.matrix(), &ybar, &ebar(tau), self.c.matrix(), &gbar(tau)),
            )
        });
        Ok(traj
            .into_iter()
            .map(|(tau, (linear, offset))| (tau, AffineMap { linear, offset }))
            .collect())
    }

    fn check_square(&self, t0: &DMatrix<f64>, what: &str) -> Result<()> {
        if t0.nrows() != self.dim() || t0.ncols() != self.dim() {
            return Err(Error::dim(
                what,
                format!("{0}x{0} map", self.dim()),
                format!("{}x{}", t0.nrows(), t0.ncols()),
            ));
        }
        Ok(())
    }
}

/// An affine phase-space map `x -> linear x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub linear: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineMap {
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.linear * x + &self.offset
    }
}

/// Max-abs defect of a sampled matrix trajectory against a rate function:
/// the five-point grid derivative minus `rate(tau_i, M_i)`, maximized over
/// the interior samples where the five-point stencil fits. The grid must be
/// uniform; fewer than five samples yields `None`.
pub fn transport_residual<F>(samples: &[(f64, DMatrix<f64>)], rate: F) -> Option<f64>
where
    F: Fn(f64, &DMatrix<f64>) -> DMatrix<f64>,
{
    if samples.len() < 5 {
        return None;
    }
    let taus: Vec<f64> = samples.iter().map(|(tau, _)| *tau).collect();
    let h = numerics::uniform_grid_step(&taus)?;
    let values: Vec<DMatrix<f64>> = samples.iter().map(|(_, m)| m.clone()).collect();
    let mut worst = 0.0_f64;
    for i in 2..samples.len() - 2 {
        let deriv = numerics::grid_derivative(&values, h, i)?;
        let defect = deriv - rate(samples[i].0, &samples[i].1);
        worst = worst.max(defect.amax());
    }
    Some(worst)
}

/// Writes a matrix trajectory as CSV: header `tau,m_0_0,...` (row-major
/// entries), one row per sample, 17-significant-digit values.
pub fn write_matrix_trajectory_csv(
    path: &Path,
    samples: &[(f64, DMatrix<f64>)],
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let (rows, cols) = match samples.first() {
        Some((_, m)) => (m.nrows(), m.ncols()),
        None => return Err(Error::InvalidInput("empty trajectory".into())),
    };
    write!(out, "tau")?;
    for i in 0..rows {
        for j in 0..cols {
            write!(out, ",m_{i}_{j}")?;
        }
    }
    writeln!(out)?;
    for (tau, m) in samples {
        write!(out, "{}", numerics::format_g17(*tau))?;
        for i in 0..rows {
            for j in 0..cols {
                write!(out, ",{}", numerics::format_g17(m[(i, j)]))?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes a phase-trajectory CSV: header `tau,x_0,...`, one row per sample.
pub fn write_vector_trajectory_csv(
    path: &Path,
    samples: &[(f64, DVector<f64>)],
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let len = match samples.first() {
        Some((_, v)) => v.len(),
        None => return Err(Error::InvalidInput("empty trajectory".into())),
    };
    write!(out, "tau")?;
    for i in 0..len {
        write!(out, ",x_{i}")?;
    }
    writeln!(out)?;
    for (tau, v) in samples {
        write!(out, "{}", numerics::format_g17(*tau))?;
        for i in 0..len {
            write!(out, ",{}", numerics::format_g17(v[i]))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

impl RkState for BlockMatrix {
    fn add_scaled(&self, parts: &[(f64, &Self)]) -> Self {
        let mut out = self.clone();
        for (c, p) in parts {
            out.b1.zip_apply(&p.b1, |o, x| *o += c * x);
            out.b2.zip_apply(&p.b2, |o, x| *o += c * x);
            out.b3.zip_apply(&p.b3, |o, x| *o += c * x);
            out.b4.zip_apply(&p.b4, |o, x| *o += c * x);
        }
        out
    }
    fn max_abs(&self) -> f64 {
        BlockMatrix::max_abs(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SplitMix64;

    fn random_block(rng: &mut SplitMix64, n: usize) -> BlockMatrix {
        BlockMatrix::from_dense(&rng.matrix(2 * n, 2 * n)).unwrap()
    }

    #[test]
    fn block_round_trip() {
        let mut rng = SplitMix64::new(1);
        let m = rng.matrix(6, 6);
        let b = BlockMatrix::from_dense(&m).unwrap();
        assert_eq!(b.to_dense(), m);
        assert_eq!(b.half_dim(), 3);
    }

    #[test]
    fn block_product_matches_dense() {
        let mut rng = SplitMix64::new(2);
        for n in [1usize, 2, 3] {
            let a = random_block(&mut rng, n);
            let b = random_block(&mut rng, n);
            let dense = a.to_dense() * b.to_dense();
            assert!(numerics::max_abs_diff(&a.mul(&b).to_dense(), &dense) < 1e-13);
        }
    }

    #[test]
    fn quadrant_transport_rate_matches_dense_product() {
        let mut rng = SplitMix64::new(3);
        for n in [1usize, 2, 3] {
            let t = random_block(&mut rng, n);
            let ybar = random_block(&mut rng, n);
            let z = random_block(&mut rng, n);
            let j = StructureMatrix::symplectic(n);
            let dense = t_rate_dense(
                &t.to_dense(),
                j.matrix(),
                &ybar.to_dense(),
                j.matrix(),
                &z.to_dense(),
            );
            let blocks = t_rate_blocks(&t, &ybar, &z).to_dense();
            assert!(numerics::max_abs_diff(&blocks, &dense) < 1e-13, "n={n}");
        }
    }

    #[test]
    fn quadrant_factor_rates_match_dense_products() {
        let mut rng = SplitMix64::new(4);
        for n in [1usize, 2, 3] {
            let s = random_block(&mut rng, n);
            let r = random_block(&mut rng, n);
            let ybar = random_block(&mut rng, n);
            let z = random_block(&mut rng, n);
            let j = StructureMatrix::symplectic(n).matrix().clone();
            let s_dense = &j * ybar.to_dense() * s.to_dense();
            let r_dense = -(r.to_dense() * &j * z.to_dense());
            assert!(numerics::max_abs_diff(&s_rate_blocks(&s, &ybar).to_dense(), &s_dense) < 1e-13);
            assert!(numerics::max_abs_diff(&r_rate_blocks(&r, &z).to_dense(), &r_dense) < 1e-13);
        }
    }

    #[test]
    fn coupled_rates_reduce_when_couplings_vanish() {
        let mut rng = SplitMix64::new(5);
        let n = 2;
        let s = rng.matrix(2 * n, 2 * n);
        let r = rng.matrix(2 * n, 2 * n);
        let ybar = rng.matrix(2 * n, 2 * n);
        let z = rng.matrix(2 * n, 2 * n);
        let a = rng.matrix(2 * n, 2 * n);
        let zero = DMatrix::zeros(2 * n, 2 * n);
        let j = StructureMatrix::symplectic(n).matrix().clone();
        let s_full = s_full_rate(&s, &j, &ybar, &zero, &a, &zero);
        let r_full = r_full_rate(&r, &j, &z, &zero, &zero, &a);
        let s_red = s_rate_blocks(&BlockMatrix::from_dense(&s).unwrap(), &BlockMatrix::from_dense(&ybar).unwrap());
        let r_red = r_rate_blocks(&BlockMatrix::from_dense(&r).unwrap(), &BlockMatrix::from_dense(&z).unwrap());
        assert!(numerics::max_abs_diff(&s_full, &s_red.to_dense()) < 1e-13);
        assert!(numerics::max_abs_diff(&r_full, &r_red.to_dense()) < 1e-13);
    }

    #[test]
    fn composed_triple_product_matches_dense() {
        let mut rng = SplitMix64::new(6);
        for n in [1usize, 2, 3] {
            let s = random_block(&mut rng, n);
            let a = random_block(&mut rng, n);
            let r = random_block(&mut rng, n);
            let dense = s.to_dense() * a.to_dense() * r.to_dense();
            assert!(numerics::max_abs_diff(&compose_t(&s, &a, &r).to_dense(), &dense) < 1e-13);
        }
    }

    #[test]
    fn constant_coefficient_transport_matches_exponential_solution() {
        // dT = M T - T N with constant M = J Ybar, N = J Z has the closed
        // solution exp(tau M) T0 exp(-tau N).
        let mut rng = SplitMix64::new(7);
        let n = 1;
        let ybar = rng.matrix(2, 2);
        let z = rng.matrix(2, 2);
        let t0 = rng.near_identity(2, 0.3);
        let j = StructureMatrix::symplectic(n);
        let sys = TransportSystem::new(
            j.clone(),
            j.clone(),
            {
                let ybar = ybar.clone();
                move |_| ybar.clone()
            },
            {
                let z = z.clone();
                move |_| z.clone()
            },
        )
        .unwrap();
        let tau1 = 0.8;
        let traj = sys.integrate_map(&t0, 0.0, tau1, 400).unwrap();
        let m = j.matrix() * &ybar;
        let nn = j.matrix() * &z;
        let want = (m * tau1).exp() * &t0 * (-(nn * tau1)).exp();
        let got = &traj.last().unwrap().1;
        assert!(numerics::max_abs_diff(got, &want) < 1e-10);
    }

    #[test]
    fn residual_small_on_integrated_trajectory_and_detects_corruption() {
        let mut rng = SplitMix64::new(8);
        let ybar = rng.matrix(4, 4);
        let z = rng.matrix(4, 4);
        let j = StructureMatrix::symplectic(2);
        let sys = TransportSystem::new(
            j.clone(),
            j,
            {
                let ybar = ybar.clone();
                move |tau: f64| &ybar * (2.0 * tau).sin()
            },
            {
                let z = z.clone();
                move |_| z.clone()
            },
        )
        .unwrap();
        let t0 = DMatrix::identity(4, 4);
        let mut traj = sys.integrate_map(&t0, 0.0, 1.0, 400).unwrap();
        let res = transport_residual(&traj, |tau, t| sys.t_rate(tau, t)).unwrap();
        assert!(res < 1e-8, "residual {res}");
        // Halving the step cuts the defect roughly 16x (everything is
        // fourth order); accept a generous band around that.
        let fine = sys.integrate_map(&t0, 0.0, 1.0, 800).unwrap();
        let res_fine = transport_residual(&fine, |tau, t| sys.t_rate(tau, t)).unwrap();
        let ratio = res / res_fine;
        assert!((6.0..40.0).contains(&ratio), "ratio {ratio}");
        // A corrupted sample shows up at working-precision scale.
        let mid = traj.len() / 2;
        traj[mid].1[(0, 0)] += 1e-3;
        let bad = transport_residual(&traj, |tau, t| sys.t_rate(tau, t)).unwrap();
        assert!(bad > 1e-2, "corruption visible: {bad}");
    }

    #[test]
    fn residual_rejects_nonuniform_grid() {
        let m = DMatrix::identity(2, 2);
        let samples = vec![
            (0.0, m.clone()),
            (0.1, m.clone()),
            (0.2, m.clone()),
            (0.35, m.clone()),
            (0.4, m),
        ];
        assert!(transport_residual(&samples, |_, t| t.clone()).is_none());
    }

    #[test]
    fn affine_map_tracks_both_flows() {
        // Source flow dx = J (Z x + gbar); target flow in its own parameter
        // dy/dt = J (Q y + e), with t = 2 tau. The affine pair (T, rho)
        // started at (I, 0) must map source states onto target states.
        let mut rng = SplitMix64::new(9);
        let n = 1;
        let j = StructureMatrix::symplectic(n);
        let z = rng.symmetric(2);
        let q = rng.symmetric(2);
        let gb = rng.vector(2);
        let eb = rng.vector(2);
        let rate = 2.0;
        let sys = TransportSystem::new(
            j.clone(),
            j.clone(),
            {
                let q = q.clone();
                move |_| &q * rate
            },
            {
                let z = z.clone();
                move |_| z.clone()
            },
        )
        .unwrap()
        .with_drift(
            {
                let eb = eb.clone();
                move |_| &eb * rate
            },
            {
                let gb = gb.clone();
                move |_| gb.clone()
            },
        );
        let x0 = rng.vector(2);
        let tau1 = 0.7;
        let steps = 400;
        let maps = sys
            .integrate_affine(&DMatrix::identity(2, 2), &DVector::zeros(2), 0.0, tau1, steps)
            .unwrap();
        let jm = j.matrix().clone();
        let x_traj = numerics::integrate(&x0, 0.0, tau1, steps, |_, x: &DVector<f64>| {
            &jm * (&z * x + &gb)
        });
        // Target trajectory in tau: dy/dtau = rate * J (Q y + e).
        let y_traj = numerics::integrate(&x0, 0.0, tau1, steps, |_, y: &DVector<f64>| {
            &jm * (&q * y + &eb) * rate
        });
        for k in [steps / 2, steps] {
            let mapped = maps[k].1.apply(&x_traj[k].1);
            let err = (&mapped - &y_traj[k].1).amax();
            assert!(err < 1e-9, "k={k} err={err}");
        }
    }

    #[test]
    fn affine_transport_without_drift_is_rejected() {
        let j = StructureMatrix::symplectic(1);
        let sys = TransportSystem::new(
            j.clone(),
            j,
            |_| DMatrix::zeros(2, 2),
            |_| DMatrix::zeros(2, 2),
        )
        .unwrap();
        let err = sys
            .integrate_affine(&DMatrix::identity(2, 2), &DVector::zeros(2), 0.0, 1.0, 10)
            .unwrap_err();
        assert!(matches!(err, Error::MissingCapability(_)));
    }

    #[test]
    fn csv_output_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let samples = vec![
            (0.0, DMatrix::from_row_slice(1, 2, &[1.0, 2.0])),
            (0.5, DMatrix::from_row_slice(1, 2, &[3.0, 4.5])),
        ];
        write_matrix_trajectory_csv(&path, &samples).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let want = "tau,m_0_0,m_0_1\n\
             0.0000000000000000e0,1.0000000000000000e0,2.0000000000000000e0\n\
             5.0000000000000000e-1,3.0000000000000000e0,4.5000000000000000e0\n";
        assert_eq!(text, want);
    }
}
