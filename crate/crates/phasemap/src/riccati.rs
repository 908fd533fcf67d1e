//! The matrix Riccati balance behind factored transport maps, and an
//! infinite family of exact factored solutions over flat signature
//! structures.
//!
//! A factored map `T = S A R` whose factors obey the coupled equations
//! `dS = B Ybar S + D + S A F` and `dR = -R C Z + E + G A R` reproduces the
//! transport equation exactly when the compatibility combination
//!
//! ```text
//! S dA R + D A R + S A E + S [A (F+G) A] R = 0
//! ```
//!
//! vanishes; with invertible factors this is the Riccati balance
//! `dA + S^-1 D A + A E R^-1 + A (F+G) A = 0`.
//!
//! The family lives over free flows with signature kinetic quadrants `Y4`
//! and `Z4` (diagonal, entries +-1) and a parameter change `t(tau)`. Its
//! factors are rank-n products
//!
//! ```text
//! S = [[Y4 S3 t, Y4 S4 t], [S3, S4]] = U_t [S3, S4]
//! R = [[R1, -R1 Z4 tau], [R3, -R3 Z4 tau]] = [[R1],[R3]] V_tau
//! ```
//!
//! with constant quadrants, so `S` and `R` are singular 2n x 2n matrices at
//! every `tau` — the Riccati balance's inversions are refused by the
//! conditioning gate, while the compatibility combination remains directly
//! checkable. The core `A(tau)` carries the freedom: two constructions
//! ("first" and "second") each solve two quadrants in terms of two arbitrary
//! matrix functions and the running integrals of two more. Writing
//! `W(tau) = [S3, S4] A [[R1],[R3]]`, the composed map is
//! `T = U_t W V_tau`, compatibility is exactly `dW = 0`, and for the first
//! construction `dW = f R1 + g R3` while for the second
//! `dW = (S3 R1^-1 l + S4 R1^-1 m) R1`. Draws whose integrand pairs satisfy
//! the corresponding constraint are exact members, and then `W` freezes at
//! `S3 (V1 R1 + V2 R3)` (first) or `(S3 U1 + S4 U2) R1` (second). The
//! drifts simplify to `D = -S A F` and `E = -G A R`, which keeps the factor
//! equations exact for arbitrary `F`, `G`.

use crate::error::{Error, Result};
use crate::numerics::{self, SplitMix64};
use crate::phase_space::Reparameterization;
use nalgebra::DMatrix;
use std::sync::Arc;

/// Conditioning gate for every inversion in this module.
pub const CONDITION_GATE: f64 = 1e12;

/// Matrix-valued polynomial in one variable, `sum_k coeffs[k] tau^k`.
/// Integrals and derivatives are exact coefficient operations.
#[derive(Debug, Clone)]
pub struct MatrixPolynomial {
    rows: usize,
    cols: usize,
    coeffs: Vec<DMatrix<f64>>,
}

impl MatrixPolynomial {
    pub fn new(coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = coeffs.first().ok_or_else(|| {
            Error::InvalidInput("polynomial needs at least one coefficient".into())
        })?;
        let (rows, cols) = (first.nrows(), first.ncols());
        for (k, c) in coeffs.iter().enumerate() {
            if c.nrows() != rows || c.ncols() != cols {
                return Err(Error::dim(
                    "MatrixPolynomial::new",
                    format!("{rows}x{cols} coefficient"),
                    format!("{}x{} at degree {k}", c.nrows(), c.ncols()),
                ));
            }
        }
        Ok(MatrixPolynomial { rows, cols, coeffs })
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        MatrixPolynomial {
            rows,
            cols,
            coeffs: vec![DMatrix::zeros(rows, cols)],
        }
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        MatrixPolynomial {
            rows: m.nrows(),
            cols: m.ncols(),
            coeffs: vec![m],
        }
    }

    /// Uniform draws in [-1, 1] for every coefficient entry.
    pub fn random(rng: &mut SplitMix64, rows: usize, cols: usize, degree: usize) -> Self {
        MatrixPolynomial {
            rows,
            cols,
            coeffs: (0..=degree).map(|_| rng.matrix(rows, cols)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficient(&self, k: usize) -> Option<&DMatrix<f64>> {
        self.coeffs.get(k)
    }

    pub fn value(&self, tau: f64) -> DMatrix<f64> {
        let mut acc = self.coeffs[self.coeffs.len() - 1].clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = acc * tau + c;
        }
        acc
    }

    pub fn derivative(&self) -> MatrixPolynomial {
        if self.coeffs.len() == 1 {
            return MatrixPolynomial::zero(self.rows, self.cols);
        }
        MatrixPolynomial {
            rows: self.rows,
            cols: self.cols,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        }
    }

    /// The antiderivative that vanishes at `a`.
    pub fn integral_from(&self, a: f64) -> MatrixPolynomial {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(DMatrix::zeros(self.rows, self.cols));
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / (k + 1) as f64);
        }
        let mut out = MatrixPolynomial {
            rows: self.rows,
            cols: self.cols,
            coeffs,
        };
        let at_a = out.value(a);
        out.coeffs[0] -= at_a;
        out
    }

    pub fn mul_left(&self, m: &DMatrix<f64>) -> Result<MatrixPolynomial> {
        if m.ncols() != self.rows {
            return Err(Error::dim(
                "MatrixPolynomial::mul_left",
                format!("factor with {} columns", self.rows),
                format!("{}", m.ncols()),
            ));
        }
        Ok(MatrixPolynomial {
            rows: m.nrows(),
            cols: self.cols,
            coeffs: self.coeffs.iter().map(|c| m * c).collect(),
        })
    }

    pub fn mul_right(&self, m: &DMatrix<f64>) -> Result<MatrixPolynomial> {
        if m.nrows() != self.cols {
            return Err(Error::dim(
                "MatrixPolynomial::mul_right",
                format!("factor with {} rows", self.cols),
                format!("{}", m.nrows()),
            ));
        }
        Ok(MatrixPolynomial {
            rows: self.rows,
            cols: m.ncols(),
            coeffs: self.coeffs.iter().map(|c| c * m).collect(),
        })
    }

    pub fn scale(&self, c: f64) -> MatrixPolynomial {
        MatrixPolynomial {
            rows: self.rows,
            cols: self.cols,
            coeffs: self.coeffs.iter().map(|m| m * c).collect(),
        }
    }

    pub fn add(&self, other: &MatrixPolynomial) -> Result<MatrixPolynomial> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dim(
                "MatrixPolynomial::add",
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = DMatrix::zeros(self.rows, self.cols);
        let coeffs = (0..len)
            .map(|k| {
                self.coeffs.get(k).unwrap_or(&zero) + other.coeffs.get(k).unwrap_or(&zero)
            })
            .collect();
        Ok(MatrixPolynomial {
            rows: self.rows,
            cols: self.cols,
            coeffs,
        })
    }

    pub fn add_constant(&self, m: &DMatrix<f64>) -> Result<MatrixPolynomial> {
        self.add(&MatrixPolynomial::constant(m.clone()))
    }

    /// Assembles a 2n x 2n polynomial from four n x n quadrant polynomials.
    pub fn from_quadrants(
        q1: &MatrixPolynomial,
        q2: &MatrixPolynomial,
        q3: &MatrixPolynomial,
        q4: &MatrixPolynomial,
    ) -> Result<MatrixPolynomial> {
        let n = q1.rows;
        for (name, q) in [("q1", q1), ("q2", q2), ("q3", q3), ("q4", q4)] {
            if q.rows != n || q.cols != n {
                return Err(Error::dim(
                    "MatrixPolynomial::from_quadrants",
                    format!("{n}x{n} quadrant {name}"),
                    format!("{}x{}", q.rows, q.cols),
                ));
            }
        }
        let len = [q1, q2, q3, q4]
            .iter()
            .map(|q| q.coeffs.len())
            .max()
            .unwrap();
        let zero = DMatrix::zeros(n, n);
        let coeffs = (0..len)
            .map(|k| {
                let mut c = DMatrix::zeros(2 * n, 2 * n);
                c.view_mut((0, 0), (n, n))
                    .copy_from(q1.coeffs.get(k).unwrap_or(&zero));
                c.view_mut((0, n), (n, n))
                    .copy_from(q2.coeffs.get(k).unwrap_or(&zero));
                c.view_mut((n, 0), (n, n))
                    .copy_from(q3.coeffs.get(k).unwrap_or(&zero));
                c.view_mut((n, n), (n, n))
                    .copy_from(q4.coeffs.get(k).unwrap_or(&zero));
                c
            })
            .collect();
        Ok(MatrixPolynomial {
            rows: 2 * n,
            cols: 2 * n,
            coeffs,
        })
    }
}

/// Which two core quadrants the construction solves for: `First` derives
/// quadrants 1 and 2 from arbitrary quadrants 3 and 4 (integrands `f`, `g`,
/// constants `V1`, `V2`, inverting the constant `S3`); `Second` derives
/// quadrants 1 and 3 from arbitrary quadrants 2 and 4 (integrands `l`, `m`,
/// constants `U1`, `U2`, inverting the constant `R1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyVariant {
    First,
    Second,
}

/// Data of one family draw. The constant factor quadrants `s3`, `s4`,
/// `r1`, `r3` and the closed-form seed `t3` are always present; the
/// remaining slots belong to one construction or the other. `fblocks` and
/// `gblocks` are the arbitrary coupling matrices of the factor equations
/// (2n x 2n). `lower_limit` is the base point of all running integrals.
#[derive(Debug, Clone)]
pub struct RiccatiFamilyParams {
    pub t3: DMatrix<f64>,
    pub s3: DMatrix<f64>,
    pub s4: DMatrix<f64>,
    pub r1: DMatrix<f64>,
    pub r3: DMatrix<f64>,
    pub v1: Option<DMatrix<f64>>,
    pub v2: Option<DMatrix<f64>>,
    pub u1: Option<DMatrix<f64>>,
    pub u2: Option<DMatrix<f64>>,
    pub f: Option<MatrixPolynomial>,
    pub g: Option<MatrixPolynomial>,
    pub l: Option<MatrixPolynomial>,
    pub m: Option<MatrixPolynomial>,
    pub a3fun: Option<MatrixPolynomial>,
    pub a4fun: Option<MatrixPolynomial>,
    pub a2fun: Option<MatrixPolynomial>,
    pub fblocks: MatrixPolynomial,
    pub gblocks: MatrixPolynomial,
    pub lower_limit: f64,
}

impl RiccatiFamilyParams {
    /// Checks shapes and the invertibility of `s3` and `r1`, which both
    /// constructions rely on.
    pub fn validate(&self) -> Result<usize> {
        let n = self.s3.nrows();
        let square = |name: &str, m: &DMatrix<f64>| -> Result<()> {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::dim(
                    "RiccatiFamilyParams",
                    format!("{n}x{n} {name}"),
                    format!("{}x{}", m.nrows(), m.ncols()),
                ));
            }
            Ok(())
        };
        square("t3", &self.t3)?;
        square("s3", &self.s3)?;
        square("s4", &self.s4)?;
        square("r1", &self.r1)?;
        square("r3", &self.r3)?;
        for (name, opt) in [
            ("v1", &self.v1),
            ("v2", &self.v2),
            ("u1", &self.u1),
            ("u2", &self.u2),
        ] {
            if let Some(m) = opt {
                square(name, m)?;
            }
        }
        for (name, opt) in [
            ("f", &self.f),
            ("g", &self.g),
            ("l", &self.l),
            ("m", &self.m),
            ("a3fun", &self.a3fun),
            ("a4fun", &self.a4fun),
            ("a2fun", &self.a2fun),
        ] {
            if let Some(p) = opt {
                if p.rows() != n || p.cols() != n {
                    return Err(Error::dim(
                        "RiccatiFamilyParams",
                        format!("{n}x{n} polynomial {name}"),
                        format!("{}x{}", p.rows(), p.cols()),
                    ));
                }
            }
        }
        for (name, p) in [("fblocks", &self.fblocks), ("gblocks", &self.gblocks)] {
            if p.rows() != 2 * n || p.cols() != 2 * n {
                return Err(Error::dim(
                    "RiccatiFamilyParams",
                    format!("{0}x{0} polynomial {name}", 2 * n),
                    format!("{}x{}", p.rows(), p.cols()),
                ));
            }
        }
        for (name, m) in [("s3", &self.s3), ("r1", &self.r1)] {
            let cond = numerics::condition_inf(m);
            if !cond.is_finite() || cond > CONDITION_GATE {
                return Err(Error::IllConditioned {
                    what: format!("constant factor quadrant {name}"),
                    location: "family parameters".into(),
                    cond,
                    gate: CONDITION_GATE,
                });
            }
        }
        Ok(n)
    }
}

/// One exact factored solution: evaluators for the factors, core, drifts and
/// couplings, all functions of the source parameter.
pub struct FamilyMember {
    n: usize,
    y4: DMatrix<f64>,
    z4: DMatrix<f64>,
    rep: Arc<Reparameterization>,
    shat: DMatrix<f64>,
    rhat: DMatrix<f64>,
    a: MatrixPolynomial,
    fblocks: MatrixPolynomial,
    gblocks: MatrixPolynomial,
    t3: DMatrix<f64>,
    seed: DMatrix<f64>,
    variant: FamilyVariant,
}

/// Builds a family member. `y4` and `z4` must be exact +-1 signature
/// matrices; the construction named by `variant` must have all of its
/// parameter slots populated.
pub fn build_family(
    params: &RiccatiFamilyParams,
    variant: FamilyVariant,
    y4: &DMatrix<f64>,
    z4: &DMatrix<f64>,
    rep: Reparameterization,
) -> Result<FamilyMember> {
    let n = params.validate()?;
    for (name, m) in [("y4", y4), ("z4", z4)] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::dim(
                "build_family",
                format!("{n}x{n} {name}"),
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        if !numerics::is_signature(m) {
            return Err(Error::InvalidInput(format!(
                "{name} must be a diagonal +-1 signature matrix"
            )));
        }
    }

    let missing = |what: &str| {
        Error::InvalidInput(format!(
            "construction {variant:?} needs parameter slot {what}"
        ))
    };
    let a0 = params.lower_limit;
    let (a1, a2, a3, a4) = match variant {
        FamilyVariant::First => {
            let v1 = params.v1.as_ref().ok_or_else(|| missing("v1"))?;
            let v2 = params.v2.as_ref().ok_or_else(|| missing("v2"))?;
            let f = params.f.as_ref().ok_or_else(|| missing("f"))?;
            let g = params.g.as_ref().ok_or_else(|| missing("g"))?;
            let a3 = params.a3fun.as_ref().ok_or_else(|| missing("a3fun"))?;
            let a4 = params.a4fun.as_ref().ok_or_else(|| missing("a4fun"))?;
            let s3_inv = params
                .s3
                .clone()
                .try_inverse()
                .expect("validated as invertible");
            let s3_inv_s4 = &s3_inv * &params.s4;
            // quadrant1 = -S3^-1 S4 A3 + S3^-1 (int f) + V1, and likewise
            // quadrant2 from A4, g, V2.
            let a1 = a3
                .mul_left(&s3_inv_s4)?
                .scale(-1.0)
                .add(&f.integral_from(a0).mul_left(&s3_inv)?)?
                .add_constant(v1)?;
            let a2 = a4
                .mul_left(&s3_inv_s4)?
                .scale(-1.0)
                .add(&g.integral_from(a0).mul_left(&s3_inv)?)?
                .add_constant(v2)?;
            (a1, a2, a3.clone(), a4.clone())
        }
        FamilyVariant::Second => {
            let u1 = params.u1.as_ref().ok_or_else(|| missing("u1"))?;
            let u2 = params.u2.as_ref().ok_or_else(|| missing("u2"))?;
            let l = params.l.as_ref().ok_or_else(|| missing("l"))?;
            let m = params.m.as_ref().ok_or_else(|| missing("m"))?;
            let a2 = params.a2fun.as_ref().ok_or_else(|| missing("a2fun"))?;
            let a4 = params.a4fun.as_ref().ok_or_else(|| missing("a4fun"))?;
            let r1_inv = params
                .r1
                .clone()
                .try_inverse()
                .expect("validated as invertible");
            let r3_r1_inv = &params.r3 * &r1_inv;
            // quadrant1 = -A2 R3 R1^-1 + R1^-1 (int l) + U1, and likewise
            // quadrant3 from A4, m, U2.
            let a1 = a2
                .mul_right(&r3_r1_inv)?
                .scale(-1.0)
                .add(&l.integral_from(a0).mul_left(&r1_inv)?)?
                .add_constant(u1)?;
            let a3 = a4
                .mul_right(&r3_r1_inv)?
                .scale(-1.0)
                .add(&m.integral_from(a0).mul_left(&r1_inv)?)?
                .add_constant(u2)?;
            (a1, a2.clone(), a3, a4.clone())
        }
    };
    let a = MatrixPolynomial::from_quadrants(&a1, &a2, &a3, &a4)?;

    let mut shat = DMatrix::zeros(n, 2 * n);
    shat.view_mut((0, 0), (n, n)).copy_from(&params.s3);
    shat.view_mut((0, n), (n, n)).copy_from(&params.s4);
    let mut rhat = DMatrix::zeros(2 * n, n);
    rhat.view_mut((0, 0), (n, n)).copy_from(&params.r1);
    rhat.view_mut((n, 0), (n, n)).copy_from(&params.r3);

    let seed = match variant {
        FamilyVariant::First => {
            let v1 = params.v1.as_ref().unwrap();
            let v2 = params.v2.as_ref().unwrap();
            &params.s3 * (v1 * &params.r1 + v2 * &params.r3)
        }
        FamilyVariant::Second => {
            let u1 = params.u1.as_ref().unwrap();
            let u2 = params.u2.as_ref().unwrap();
            (&params.s3 * u1 + &params.s4 * u2) * &params.r1
        }
    };

    Ok(FamilyMember {
        n,
        y4: y4.clone(),
        z4: z4.clone(),
        rep: Arc::new(rep),
        shat,
        rhat,
        a,
        fblocks: params.fblocks.clone(),
        gblocks: params.gblocks.clone(),
        t3: params.t3.clone(),
        seed,
        variant,
    })
}

impl FamilyMember {
    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn variant(&self) -> FamilyVariant {
        self.variant
    }

    /// The constant the composed map's `W` combination freezes at when the
    /// integrand constraint holds.
    pub fn derived_seed(&self) -> &DMatrix<f64> {
        &self.seed
    }

    /// The seed supplied in the parameters (the closed-form comparison
    /// target).
    pub fn declared_seed(&self) -> &DMatrix<f64> {
        &self.t3
    }

    /// Left lift `U_t = [[Y4 t], [I]]`.
    fn u_t(&self, tau: f64) -> DMatrix<f64> {
        let n = self.n;
        let mut u = DMatrix::zeros(2 * n, n);
        u.view_mut((0, 0), (n, n)).copy_from(&(&self.y4 * self.rep.t(tau)));
        u.view_mut((n, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
        u
    }

    /// Right lift `V_tau = [I, -Z4 tau]`.
    fn v_tau(&self, tau: f64) -> DMatrix<f64> {
        let n = self.n;
        let mut v = DMatrix::zeros(n, 2 * n);
        v.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
        v.view_mut((0, n), (n, n)).copy_from(&(-(&self.z4) * tau));
        v
    }

    pub fn s_at(&self, tau: f64) -> DMatrix<f64> {
        self.u_t(tau) * &self.shat
    }

    pub fn r_at(&self, tau: f64) -> DMatrix<f64> {
        &self.rhat * self.v_tau(tau)
    }

    pub fn a_at(&self, tau: f64) -> DMatrix<f64> {
        self.a.value(tau)
    }

    /// Analytic derivative of the core.
    pub fn a_dot_at(&self, tau: f64) -> DMatrix<f64> {
        self.a.derivative().value(tau)
    }

    pub fn f_at(&self, tau: f64) -> DMatrix<f64> {
        self.fblocks.value(tau)
    }

    pub fn g_at(&self, tau: f64) -> DMatrix<f64> {
        self.gblocks.value(tau)
    }

    /// Left drift `D = -S A F`, in the rank-n shape `U_t (-Shat A F)`.
    pub fn d_at(&self, tau: f64) -> DMatrix<f64> {
        self.u_t(tau) * (-(&self.shat) * self.a_at(tau) * self.f_at(tau))
    }

    /// Right drift `E = -G A R`, in the rank-n shape `(-G A Rhat) V_tau`.
    pub fn e_at(&self, tau: f64) -> DMatrix<f64> {
        (-self.g_at(tau) * self.a_at(tau) * &self.rhat) * self.v_tau(tau)
    }

    /// The composed map `S A R` at `tau`.
    pub fn composed_at(&self, tau: f64) -> DMatrix<f64> {
        self.s_at(tau) * self.a_at(tau) * self.r_at(tau)
    }

    /// The closed-form map `U_t seed V_tau` built from the declared seed.
    pub fn closed_form_at(&self, tau: f64) -> DMatrix<f64> {
        self.u_t(tau) * &self.t3 * self.v_tau(tau)
    }

    /// Max-abs defect of the integrand constraint over the given parameter
    /// values: `f R1 + g R3` (first construction) or
    /// `S3 R1^-1 l + S4 R1^-1 m` (second, up to the trailing `R1` factor the
    /// two forms agree on vanishing). Members have this at rounding level;
    /// arbitrary draws do not, and their `W` then drifts.
    pub fn constraint_defect(&self, taus: &[f64]) -> f64 {
        // dW = Shat dA Rhat in both constructions.
        let a_dot = self.a.derivative();
        taus.iter()
            .map(|tau| (&self.shat * a_dot.value(*tau) * &self.rhat).amax())
            .fold(0.0_f64, f64::max)
    }

    /// A copy with a constant fault added to the core's first quadrant.
    pub fn with_core_fault(&self, delta: &DMatrix<f64>) -> Result<FamilyMember> {
        if delta.nrows() != self.n || delta.ncols() != self.n {
            return Err(Error::dim(
                "with_core_fault",
                format!("{0}x{0} fault", self.n),
                format!("{}x{}", delta.nrows(), delta.ncols()),
            ));
        }
        let mut embedded = DMatrix::zeros(2 * self.n, 2 * self.n);
        embedded.view_mut((0, 0), (self.n, self.n)).copy_from(delta);
        let mut member = FamilyMember {
            n: self.n,
            y4: self.y4.clone(),
            z4: self.z4.clone(),
            rep: Arc::clone(&self.rep),
            shat: self.shat.clone(),
            rhat: self.rhat.clone(),
            a: self.a.clone(),
            fblocks: self.fblocks.clone(),
            gblocks: self.gblocks.clone(),
            t3: self.t3.clone(),
            seed: self.seed.clone(),
            variant: self.variant,
        };
        member.a = member.a.add_constant(&embedded)?;
        Ok(member)
    }

    /// Uniform samples of the core on a grid.
    pub fn core_samples(&self, taus: &[f64]) -> Vec<(f64, DMatrix<f64>)> {
        taus.iter().map(|tau| (*tau, self.a.value(*tau))).collect()
    }
}

fn check_grid(a_samples: &[(f64, DMatrix<f64>)]) -> Result<f64> {
    let taus: Vec<f64> = a_samples.iter().map(|(tau, _)| *tau).collect();
    numerics::uniform_grid_step(&taus).ok_or_else(|| {
        Error::InvalidInput("core samples must sit on a uniform grid of 2+ points".into())
    })
}

/// Max-abs of the compatibility combination
/// `S dA R + D A R + S A E + S [A (F+G) A] R` over the interior grid
/// points, with `dA` by centered differences of the sampled core.
pub fn compatibility_residual<S, R, D, E, FF, GG>(
    a_samples: &[(f64, DMatrix<f64>)],
    s: S,
    r: R,
    d: D,
    e: E,
    f: FF,
    g: GG,
) -> Result<f64>
where
    S: Fn(f64) -> DMatrix<f64>,
    R: Fn(f64) -> DMatrix<f64>,
    D: Fn(f64) -> DMatrix<f64>,
    E: Fn(f64) -> DMatrix<f64>,
    FF: Fn(f64) -> DMatrix<f64>,
    GG: Fn(f64) -> DMatrix<f64>,
{
    let h = check_grid(a_samples)?;
    let values: Vec<DMatrix<f64>> = a_samples.iter().map(|(_, a)| a.clone()).collect();
    let mut worst = 0.0_f64;
    for i in 1..a_samples.len() - 1 {
        let (tau, a) = (&a_samples[i].0, &a_samples[i].1);
        let a_dot = numerics::grid_derivative(&values, h, i)
            .expect("interior index has neighbors");
        let (s_m, r_m) = (s(*tau), r(*tau));
        let coupling = f(*tau) + g(*tau);
        let term = &s_m * &a_dot * &r_m
            + d(*tau) * a * &r_m
            + &s_m * a * e(*tau)
            + &s_m * (a * coupling * a) * &r_m;
        worst = worst.max(term.amax());
    }
    Ok(worst)
}

/// Max-abs of the Riccati balance `dA + S^-1 D A + A E R^-1 + A (F+G) A`
/// over the interior grid points, with `dA` by centered differences.
/// Inversions are gated: condition estimates above `CONDITION_GATE` refuse
/// with an error naming the parameter value.
pub fn riccati_residual<S, R, D, E, FF, GG>(
    a_samples: &[(f64, DMatrix<f64>)],
    s: S,
    r: R,
    d: D,
    e: E,
    f: FF,
    g: GG,
) -> Result<f64>
where
    S: Fn(f64) -> DMatrix<f64>,
    R: Fn(f64) -> DMatrix<f64>,
    D: Fn(f64) -> DMatrix<f64>,
    E: Fn(f64) -> DMatrix<f64>,
    FF: Fn(f64) -> DMatrix<f64>,
    GG: Fn(f64) -> DMatrix<f64>,
{
    let h = check_grid(a_samples)?;
    let values: Vec<DMatrix<f64>> = a_samples.iter().map(|(_, a)| a.clone()).collect();
    let gated_inverse = |m: &DMatrix<f64>, name: &str, tau: f64| -> Result<DMatrix<f64>> {
        let cond = numerics::condition_inf(m);
        if !cond.is_finite() || cond > CONDITION_GATE {
            return Err(Error::IllConditioned {
                what: name.into(),
                location: format!("tau = {tau}"),
                cond,
                gate: CONDITION_GATE,
            });
        }
        Ok(m.clone().try_inverse().expect("finite condition"))
    };
    let mut worst = 0.0_f64;
    for i in 1..a_samples.len() - 1 {
        let (tau, a) = (a_samples[i].0, &a_samples[i].1);
        let a_dot = numerics::grid_derivative(&values, h, i)
            .expect("interior index has neighbors");
        let s_inv = gated_inverse(&s(tau), "left factor", tau)?;
        let r_inv = gated_inverse(&r(tau), "right factor", tau)?;
        let coupling = f(tau) + g(tau);
        let term = a_dot + s_inv * d(tau) * a + a * e(tau) * r_inv + a * coupling * a;
        worst = worst.max(term.amax());
    }
    Ok(worst)
}

/// Outcome of the Riccati balance on a member: either a residual value, or
/// a refusal because a factor failed the conditioning gate (the family's
/// factors are singular by construction, so members always refuse).
#[derive(Debug, Clone)]
pub enum GatedResidual {
    Value(f64),
    Refused { what: String, cond: f64, gate: f64 },
}

/// Residuals of one member against its closed form on a uniform grid.
#[derive(Debug, Clone)]
pub struct MemberReport {
    /// Max-abs mismatch of `S A R` against `U_t t3 V_tau`, relative to
    /// `max(1, scale)` with `scale` the largest closed-form entry seen.
    pub max_t_mismatch: f64,
    pub compat_residual: f64,
    pub core_balance: GatedResidual,
}

/// Evaluates the three member checks on `taus` (uniform, 5+ points).
pub fn verify_member(member: &FamilyMember, taus: &[f64]) -> Result<MemberReport> {
    if taus.len() < 5 {
        return Err(Error::InvalidInput(
            "member verification needs at least 5 grid points".into(),
        ));
    }
    let mut mismatch = 0.0_f64;
    let mut scale = 1.0_f64;
    for &tau in taus {
        let closed = member.closed_form_at(tau);
        mismatch = mismatch.max(numerics::max_abs_diff(&member.composed_at(tau), &closed));
        scale = scale.max(closed.amax());
    }
    let a_samples = member.core_samples(taus);
    let compat = compatibility_residual(
        &a_samples,
        |tau| member.s_at(tau),
        |tau| member.r_at(tau),
        |tau| member.d_at(tau),
        |tau| member.e_at(tau),
        |tau| member.f_at(tau),
        |tau| member.g_at(tau),
    )?;
    let core_balance = match riccati_residual(
        &a_samples,
        |tau| member.s_at(tau),
        |tau| member.r_at(tau),
        |tau| member.d_at(tau),
        |tau| member.e_at(tau),
        |tau| member.f_at(tau),
        |tau| member.g_at(tau),
    ) {
        Ok(v) => GatedResidual::Value(v),
        Err(Error::IllConditioned {
            what, cond, gate, ..
        }) => GatedResidual::Refused { what, cond, gate },
        Err(other) => return Err(other),
    };
    Ok(MemberReport {
        max_t_mismatch: mismatch / scale,
        compat_residual: compat,
        core_balance,
    })
}

/// Random +-1 signature matrix.
pub fn sample_signature(rng: &mut SplitMix64, n: usize) -> DMatrix<f64> {
    let signs: Vec<i32> = (0..n)
        .map(|_| if rng.uniform() < 0.5 { -1 } else { 1 })
        .collect();
    numerics::signature_matrix(&signs).expect("entries are +-1")
}

/// Draws a parameter set whose integrand pair satisfies the membership
/// constraint exactly: the free slots are drawn uniformly and the
/// constrained integrand is solved coefficient by coefficient (`f` from `g`
/// in the first construction, `l` from `m` in the second). The declared
/// seed `t3` is set to the value `W` freezes at, so the closed-form
/// comparison is meaningful.
pub fn sample_member_params(
    rng: &mut SplitMix64,
    n: usize,
    degree: usize,
    variant: FamilyVariant,
) -> RiccatiFamilyParams {
    let s3 = rng.near_identity(n, 0.3);
    let s4 = rng.matrix(n, n);
    let r1 = rng.near_identity(n, 0.3);
    let r3 = rng.matrix(n, n);
    let mut params = RiccatiFamilyParams {
        t3: DMatrix::zeros(n, n),
        s3: s3.clone(),
        s4: s4.clone(),
        r1: r1.clone(),
        r3: r3.clone(),
        v1: None,
        v2: None,
        u1: None,
        u2: None,
        f: None,
        g: None,
        l: None,
        m: None,
        a3fun: None,
        a4fun: None,
        a2fun: None,
        fblocks: MatrixPolynomial::random(rng, 2 * n, 2 * n, 1),
        gblocks: MatrixPolynomial::random(rng, 2 * n, 2 * n, 1),
        lower_limit: 0.0,
    };
    match variant {
        FamilyVariant::First => {
            let v1 = rng.matrix(n, n);
            let v2 = rng.matrix(n, n);
            let g = MatrixPolynomial::random(rng, n, n, degree);
            // f R1 + g R3 = 0 coefficient-wise: f_k = -g_k R3 R1^-1.
            let r1_inv = r1.clone().try_inverse().expect("near identity");
            let f = g.mul_right(&(&r3 * &r1_inv)).unwrap().scale(-1.0);
            params.t3 = &s3 * (&v1 * &r1 + &v2 * &r3);
            params.v1 = Some(v1);
            params.v2 = Some(v2);
            params.f = Some(f);
            params.g = Some(g);
            params.a3fun = Some(MatrixPolynomial::random(rng, n, n, degree));
            params.a4fun = Some(MatrixPolynomial::random(rng, n, n, degree));
        }
        FamilyVariant::Second => {
            let u1 = rng.matrix(n, n);
            let u2 = rng.matrix(n, n);
            let m = MatrixPolynomial::random(rng, n, n, degree);
            // S3 R1^-1 l + S4 R1^-1 m = 0: l_k = -R1 S3^-1 S4 R1^-1 m_k.
            let r1_inv = r1.clone().try_inverse().expect("near identity");
            let s3_inv = s3.clone().try_inverse().expect("near identity");
            let carrier = -(&r1 * &s3_inv * &s4 * &r1_inv);
            let l = m.mul_left(&carrier).unwrap();
            params.t3 = (&s3 * &u1 + &s4 * &u2) * &r1;
            params.u1 = Some(u1);
            params.u2 = Some(u2);
            params.l = Some(l);
            params.m = Some(m);
            params.a2fun = Some(MatrixPolynomial::random(rng, n, n, degree));
            params.a4fun = Some(MatrixPolynomial::random(rng, n, n, degree));
        }
    }
    params
}
