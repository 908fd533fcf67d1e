//! Named verification scenarios: each one exercises a slice of the library
//! against its analytic contracts and produces a deterministic [`Report`].
//!
//! A scenario run is a pure function of its configuration: the same config
//! produces byte-identical JSON reports. Numeric trouble inside a check
//! (divergence, a conditioning gate refusing, a rejected sample point)
//! never panics and never aborts the run — it lands as a failing check in
//! the report. Only configuration problems (unknown names, bad shapes)
//! surface as errors.

pub mod config;
pub mod report;

pub use config::{
    MatrixSpec, ResolvedConfig, ScenarioConfig, ScenarioName, ScenarioParameters,
};
pub use report::{Check, CheckMode, Json, Report};

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::calabi::{
    calabi_lagrangian_hamiltonian, gaussian_curvature, hessian_curvature_check,
    hessian_metric, riemann, riemann_lowered, MetricField, ScalarPotential,
};
use crate::conformal_embed::{
    consistent_momenta_constant_frame, embed, line_element_chain, three_hamiltonians,
    unit_speed_curve, VielbeinField, UNIT_SPEED_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::flat_mapping::{
    hamiltonian_equality_check, momentum_consistency, ConformalFrame, FreeTransport,
    VelocityConvention,
};
use crate::numerics::{self, SplitMix64};
use crate::phase_space::StructureMatrix;
use crate::riccati::{
    build_family, sample_member_params, sample_signature, verify_member, FamilyVariant,
    GatedResidual, MatrixPolynomial, RiccatiFamilyParams,
};
use crate::transport::{self, BlockMatrix};

/// Runs the scenario described by `config` and returns its report.
pub fn run(config: &ScenarioConfig) -> Result<Report> {
    let resolved = config.resolve()?;
    let start = std::time::Instant::now();
    let mut report = match resolved.name {
        ScenarioName::FlatMapVerify => flat_map_verify(&resolved)?,
        ScenarioName::RiccatiFamily => riccati_family(&resolved)?,
        ScenarioName::EmbedCheck => embed_check(&resolved)?,
        ScenarioName::CalabiCurvature => calabi_curvature(&resolved)?,
        ScenarioName::ReductionCheck => reduction_check(&resolved)?,
    };
    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Shared part of the config echo.
fn base_echo(cfg: &ResolvedConfig) -> Json {
    let mut echo = Json::object();
    echo.push("n", Json::Int(cfg.n as i64));
    echo.push("seed", Json::UInt(cfg.seed));
    echo.push("steps", Json::Int(cfg.steps as i64));
    echo
}

fn signs_json(signs: &[i32]) -> Json {
    Json::Array(signs.iter().map(|s| Json::Int(*s as i64)).collect())
}

/// Builds a check from a measurement that may have failed to produce a
/// number: `None` becomes an unambiguous failing check.
fn measured(name: &str, tolerance: f64, mode: CheckMode, value: Option<f64>) -> Check {
    match (value, mode) {
        (Some(v), CheckMode::AtMost) => Check::at_most(name, v, tolerance),
        (Some(v), CheckMode::AtLeast) => Check::at_least(name, v, tolerance),
        (None, mode) => Check::failed(name, tolerance, mode),
    }
}

fn uniform_taus(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| i as f64 / (count - 1) as f64)
        .collect()
}

/// Default parameter-change (amplitude, frequency) for the map scenario:
/// lively enough that the fixed-step oracle's truncation error sits well
/// above rounding, so step-halving shows clean fourth-order scaling.
const FLAT_MAP_REP: (f64, f64) = (0.15, 6.0);

/// Default parameter-change for the family scenarios: gentle, keeping the
/// polynomial family data well scaled over the unit interval.
const FAMILY_REP: (f64, f64) = (0.4, 2.0);

// ---------------------------------------------------------------------------
// flat-map-verify
// ---------------------------------------------------------------------------

/// Checks the closed-form transport map against its matrix equation, an
/// independent fixed-step integrator, the three-Hamiltonian equality on
/// consistent data, and the two candidate velocity-map conventions.
fn flat_map_verify(cfg: &ResolvedConfig) -> Result<Report> {
    let n = cfg.n;
    if n < 3 {
        return Err(Error::Config(
            "flat-map-verify needs n >= 3: the physical frame drops two directions".into(),
        ));
    }
    let y4_signs = cfg.signature_or_default(&cfg.parameters.y4_signature, "y4_signature")?;
    let z4_signs = match &cfg.parameters.z4_signature {
        Some(_) => cfg.signature_or_default(&cfg.parameters.z4_signature, "z4_signature")?,
        None => {
            let mut s = vec![1; n];
            for k in n.saturating_sub(2)..n {
                s[k] = -1;
            }
            s
        }
    };
    let y4 = numerics::signature_matrix(&y4_signs)?;
    let z4 = numerics::signature_matrix(&z4_signs)?;
    let configured_t3 = match &cfg.parameters.t3 {
        Some(entries) => Some(entries.to_matrix("t3")?),
        None => None,
    };
    let draws = if configured_t3.is_some() {
        1
    } else {
        cfg.parameters.draws.unwrap_or(20)
    };
    let velocity_checks = cfg.parameters.velocity_checks.unwrap_or(20);
    let rep = cfg.reparameterization(FLAT_MAP_REP.0, FLAT_MAP_REP.1)?;
    let mut rng = SplitMix64::new(cfg.seed);
    let taus = uniform_taus(11);

    // Closed form vs. the matrix equation, across random seed quadrants.
    let mut transports = Vec::with_capacity(draws);
    let mut closed_residual = 0.0_f64;
    for _ in 0..draws {
        let t3 = match &configured_t3 {
            Some(t3) => t3.clone(),
            None => rng.matrix(n, n),
        };
        let flat = FreeTransport::new(y4.clone(), z4.clone(), t3)?;
        for &tau in &taus {
            closed_residual = closed_residual.max(flat.equation_defect(&rep, tau));
        }
        transports.push(flat);
    }

    // Independent oracle: integrate the transport equation and meet the
    // closed form at the endpoint. Halving the step count must scale the
    // endpoint error like a fourth-order method; that ratio is measured
    // between steps/2 and steps/4, where truncation still dominates the
    // rounding that the constant-rate quadrants accumulate linearly in the
    // step count and that owns the error at very fine steps.
    let flat0 = &transports[0];
    let system = flat0.transport_system(cfg.reparameterization(FLAT_MAP_REP.0, FLAT_MAP_REP.1)?);
    let t_start = flat0.map_at(&rep, 0.0).to_dense();
    let t_end = flat0.map_at(&rep, 1.0).to_dense();
    let endpoint_error = |steps: usize| -> Result<(f64, Vec<(f64, DMatrix<f64>)>)> {
        let samples = system.integrate_map(&t_start, 0.0, 1.0, steps)?;
        let last = samples.last().expect("integration keeps its initial sample");
        Ok((numerics::max_abs_diff(&last.1, &t_end), samples))
    };
    let ratio_pair = (|| -> Result<f64> {
        let (e_half, _) = endpoint_error((cfg.steps / 2).max(1))?;
        let (e_quarter, _) = endpoint_error((cfg.steps / 4).max(1))?;
        Ok(if e_half > 0.0 {
            e_quarter / e_half
        } else {
            f64::MAX
        })
    })();
    let (oracle_error, halving_ratio, trajectory) =
        match (endpoint_error(cfg.steps), ratio_pair) {
            (Ok((e_full, samples)), Ok(ratio)) => (Some(e_full), Some(ratio), Some(samples)),
            (Ok((e_full, samples)), Err(_)) => (Some(e_full), None, Some(samples)),
            (Err(_), _) => (None, None, None),
        };
    if let (Some(path), Some(samples)) = (&cfg.parameters.trajectory_csv, &trajectory) {
        transport::write_matrix_trajectory_csv(Path::new(path), samples)?;
    }

    // Three-Hamiltonian equality on consistent constant-frame data, and a
    // deliberate momentum perturbation that the equality check must flag.
    let m_phys = n - 2;
    let phys_signs: Vec<i32> = y4_signs[..m_phys].to_vec();
    let field = VielbeinField::constant(&phys_signs, rng.near_identity(m_phys, 0.2))?;
    let ham = (|| -> Result<(f64, f64, f64)> {
        let mut worst_rel = 0.0_f64;
        for _ in 0..velocity_checks {
            let u = rng.vector(m_phys);
            let du = rng.vector(m_phys);
            let momenta = consistent_momenta_constant_frame(&field, &u, &du);
            let triple =
                three_hamiltonians(&field.metric_at(&u), 0.0, field.signature(), &momenta)?;
            let cmp = hamiltonian_equality_check(triple.q, triple.hhat, triple.h);
            worst_rel = worst_rel.max(cmp.max_pairwise / triple.h.abs().max(1.0));
        }
        let u = rng.vector(m_phys);
        let du = DVector::from_element(m_phys, 1.0);
        let mut momenta = consistent_momenta_constant_frame(&field, &u, &du);
        for k in 0..m_phys {
            momenta.p[k] += 1e-6;
        }
        let triple = three_hamiltonians(&field.metric_at(&u), 0.0, field.signature(), &momenta)?;
        let cmp = hamiltonian_equality_check(triple.q, triple.hhat, triple.h);
        Ok((worst_rel, cmp.max_pairwise, cmp.tolerance))
    })()
    .ok();

    // The velocity-map ambiguity: differentiate the physical position in
    // time and compare against the momentum each convention produces. The
    // frame direction matrix is constant while the conformal factor moves,
    // so only the derivative-consistent convention can stay small.
    let e_const = rng.near_identity(m_phys, 0.2);
    let frame = ConformalFrame::new(m_phys, move |_| e_const.clone(), |t| 0.3 * t.sin());
    let states: Vec<(f64, DVector<f64>, DVector<f64>)> = (0..3)
        .map(|i| (0.3 + 0.4 * i as f64, rng.vector(n), rng.vector(n)))
        .collect();
    let convention_defect = |convention: VelocityConvention| -> Option<f64> {
        let mut worst = 0.0_f64;
        for (tau, y0, p0) in &states {
            match momentum_consistency(flat0, &frame, &rep, *tau, y0, p0, convention) {
                Ok(defect) => worst = worst.max(defect),
                Err(_) => return None,
            }
        }
        Some(worst)
    };
    let defect_product = convention_defect(VelocityConvention::ProductRule);
    let defect_cross = convention_defect(VelocityConvention::CrossQuadrant);

    let mut echo = base_echo(cfg);
    echo.push("draws", Json::Int(draws as i64));
    echo.push("velocity_checks", Json::Int(velocity_checks as i64));
    echo.push(
        "rep_amplitude",
        Json::Float(cfg.parameters.rep_amplitude.unwrap_or(FLAT_MAP_REP.0)),
    );
    echo.push(
        "rep_frequency",
        Json::Float(cfg.parameters.rep_frequency.unwrap_or(FLAT_MAP_REP.1)),
    );
    echo.push("y4_signature", signs_json(&y4_signs));
    echo.push("z4_signature", signs_json(&z4_signs));

    let perturbation_default = ham.map(|(_, _, tol)| tol).unwrap_or(1e-8);
    let checks = vec![
        Check::at_most(
            "closed_form_residual",
            closed_residual,
            cfg.tolerance("closed_form_residual", 1e-10),
        ),
        measured(
            "oracle_endpoint_error",
            cfg.tolerance("oracle_endpoint_error", 1e-8),
            CheckMode::AtMost,
            oracle_error,
        ),
        measured(
            "oracle_halving_ratio_min",
            cfg.tolerance("oracle_halving_ratio_min", 8.0),
            CheckMode::AtLeast,
            halving_ratio,
        ),
        measured(
            "oracle_halving_ratio_max",
            cfg.tolerance("oracle_halving_ratio_max", 32.0),
            CheckMode::AtMost,
            halving_ratio,
        ),
        measured(
            "hamiltonian_pairwise",
            cfg.tolerance("hamiltonian_pairwise", 1e-12),
            CheckMode::AtMost,
            ham.map(|(rel, _, _)| rel),
        ),
        measured(
            "perturbation_flagged",
            cfg.tolerance("perturbation_flagged", perturbation_default),
            CheckMode::AtLeast,
            ham.map(|(_, separation, _)| separation),
        ),
        measured(
            "hamilton_defect_product_rule",
            cfg.tolerance("hamilton_defect_product_rule", 1e-6),
            CheckMode::AtMost,
            defect_product,
        ),
        measured(
            "hamilton_defect_cross_quadrant",
            cfg.tolerance("hamilton_defect_cross_quadrant", 1e-6),
            CheckMode::AtLeast,
            defect_cross,
        ),
    ];
    Ok(Report::new(cfg.name.as_str(), echo, checks))
}

// ---------------------------------------------------------------------------
// riccati-family
// ---------------------------------------------------------------------------

/// Replaces every free slot of a sampled parameter set with zeros, keeping
/// the structural quadrants. The declared seed collapses to zero with them.
fn zero_member_functions(params: &mut RiccatiFamilyParams, n: usize) {
    params.t3 = DMatrix::zeros(n, n);
    for slot in [
        &mut params.v1,
        &mut params.v2,
        &mut params.u1,
        &mut params.u2,
    ] {
        if slot.is_some() {
            *slot = Some(DMatrix::zeros(n, n));
        }
    }
    for slot in [
        &mut params.f,
        &mut params.g,
        &mut params.l,
        &mut params.m,
        &mut params.a3fun,
        &mut params.a4fun,
        &mut params.a2fun,
    ] {
        if slot.is_some() {
            *slot = Some(MatrixPolynomial::zero(n, n));
        }
    }
    params.fblocks = MatrixPolynomial::zero(2 * n, 2 * n);
    params.gblocks = MatrixPolynomial::zero(2 * n, 2 * n);
}

fn configured_signature(
    cfg: &ResolvedConfig,
    given: &Option<Vec<i32>>,
    key: &str,
) -> Result<Option<DMatrix<f64>>> {
    match given {
        Some(_) => Ok(Some(numerics::signature_matrix(
            &cfg.signature_or_default(given, key)?,
        )?)),
        None => Ok(None),
    }
}

/// Draws random family members for the requested constructions and checks
/// the factorization against its closed form, the compatibility residual,
/// the seed consistency, the conditioning gate on the balance equation,
/// and the visibility of an injected core fault.
fn riccati_family(cfg: &ResolvedConfig) -> Result<Report> {
    let n = cfg.n;
    let draws = cfg.parameters.draws.unwrap_or(20);
    let degree = cfg.parameters.degree.unwrap_or(3);
    let zero_functions = cfg.parameters.zero_functions.unwrap_or(false);
    let variants: Vec<FamilyVariant> = match cfg.parameters.variant.as_deref() {
        None | Some("both") => vec![FamilyVariant::First, FamilyVariant::Second],
        Some("first") => vec![FamilyVariant::First],
        Some("second") => vec![FamilyVariant::Second],
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown variant '{other}'; expected first, second, or both"
            )))
        }
    };
    let configured_y4 = configured_signature(cfg, &cfg.parameters.y4_signature, "y4_signature")?;
    let configured_z4 = configured_signature(cfg, &cfg.parameters.z4_signature, "z4_signature")?;
    let mut rng = SplitMix64::new(cfg.seed);
    let taus = uniform_taus(11);
    let fault = DMatrix::<f64>::identity(n, n) * 1e-3;

    let mut t_mismatch = 0.0_f64;
    let mut compat = 0.0_f64;
    let mut seed_defect = 0.0_f64;
    let mut refused = 0_usize;
    let mut members = 0_usize;
    let mut fault_visibility = f64::INFINITY;
    let mut failed = false;

    'outer: for &variant in &variants {
        for _ in 0..draws {
            let y4 = configured_y4
                .clone()
                .unwrap_or_else(|| sample_signature(&mut rng, n));
            let z4 = configured_z4
                .clone()
                .unwrap_or_else(|| sample_signature(&mut rng, n));
            let mut params = sample_member_params(&mut rng, n, degree, variant);
            if zero_functions {
                zero_member_functions(&mut params, n);
            }
            let outcome = (|| -> Result<()> {
                let member =
                    build_family(&params, variant, &y4, &z4, cfg.reparameterization(FAMILY_REP.0, FAMILY_REP.1)?)?;
                let report = verify_member(&member, &taus)?;
                t_mismatch = t_mismatch.max(report.max_t_mismatch);
                compat = compat.max(report.compat_residual);
                if let GatedResidual::Refused { .. } = report.core_balance {
                    refused += 1;
                }
                seed_defect = seed_defect.max(numerics::max_abs_diff(
                    member.derived_seed(),
                    member.declared_seed(),
                ));
                let faulted = member.with_core_fault(&fault)?;
                let fault_report = verify_member(&faulted, &taus)?;
                fault_visibility = fault_visibility.min(fault_report.max_t_mismatch);
                members += 1;
                Ok(())
            })();
            if outcome.is_err() {
                failed = true;
                break 'outer;
            }
        }
    }

    let refusal_fraction = if members > 0 {
        refused as f64 / members as f64
    } else {
        0.0
    };
    let wrap = |value: f64| -> Option<f64> { (!failed).then_some(value) };

    let mut echo = base_echo(cfg);
    echo.push("draws", Json::Int(draws as i64));
    echo.push("degree", Json::Int(degree as i64));
    echo.push(
        "variant",
        Json::Str(
            cfg.parameters
                .variant
                .clone()
                .unwrap_or_else(|| "both".to_string()),
        ),
    );
    echo.push("zero_functions", Json::Bool(zero_functions));
    echo.push(
        "rep_amplitude",
        Json::Float(cfg.parameters.rep_amplitude.unwrap_or(FAMILY_REP.0)),
    );
    echo.push(
        "rep_frequency",
        Json::Float(cfg.parameters.rep_frequency.unwrap_or(FAMILY_REP.1)),
    );

    let checks = vec![
        measured(
            "transport_mismatch",
            cfg.tolerance("transport_mismatch", 1e-10),
            CheckMode::AtMost,
            wrap(t_mismatch),
        ),
        measured(
            "compatibility_residual",
            cfg.tolerance("compatibility_residual", 1e-8),
            CheckMode::AtMost,
            wrap(compat),
        ),
        measured(
            "seed_consistency",
            cfg.tolerance("seed_consistency", 1e-12),
            CheckMode::AtMost,
            wrap(seed_defect),
        ),
        measured(
            "balance_gate_refusals",
            cfg.tolerance("balance_gate_refusals", 1.0),
            CheckMode::AtLeast,
            wrap(refusal_fraction),
        ),
        measured(
            "fault_detection",
            cfg.tolerance("fault_detection", 1e-4),
            CheckMode::AtLeast,
            wrap(fault_visibility),
        ),
    ];
    Ok(Report::new(cfg.name.as_str(), echo, checks))
}

// ---------------------------------------------------------------------------
// embed-check
// ---------------------------------------------------------------------------

/// Sweeps random points through the vielbein catalog checking the null
/// invariant of the enlarged embedding, then walks a unit-speed curve and
/// compares the line-element expressions across coordinate systems,
/// including their refinement behaviour under step halving.
fn embed_check(cfg: &ResolvedConfig) -> Result<Report> {
    let n = cfg.n;
    let signs = cfg.signature_or_default(&cfg.parameters.signature, "signature")?;
    let points = cfg.parameters.points.unwrap_or(1000);
    let samples = cfg.parameters.samples.unwrap_or(401);
    let length = cfg.parameters.curve_length.unwrap_or(0.4);
    if samples < 3 {
        return Err(Error::Config("samples must be at least 3".into()));
    }
    if !(length > 0.0) {
        return Err(Error::Config("curve_length must be positive".into()));
    }
    let mut rng = SplitMix64::new(cfg.seed);

    let coeffs: Vec<f64> = (0..n).map(|i| 0.1 / (i as f64 + 1.0)).collect();
    let weights: Vec<f64> = (0..n)
        .map(|i| 0.05 * (i as f64 + 1.0) / n as f64)
        .collect();
    let catalog = vec![
        VielbeinField::flat(&signs)?,
        VielbeinField::constant(&signs, rng.near_identity(n, 0.2))?,
        VielbeinField::diagonal_linear(&signs, &coeffs)?,
        VielbeinField::conformal_exponential(&signs, &weights)?,
    ];

    let null_invariant = (|| -> Result<f64> {
        let mut worst = 0.0_f64;
        for i in 0..points {
            let field = &catalog[i % catalog.len()];
            let u = rng.vector(n) * 0.8;
            let sigma = 0.5 * rng.signed_unit();
            let point = embed(field, &u, sigma)?;
            let scale = point.y.norm_squared().max(1.0);
            worst = worst.max(point.null_invariant().abs() / scale);
        }
        Ok(worst)
    })()
    .ok();

    // The chain comparison runs on a positive line element so the arc
    // length is real: all-plus signature, gently varying diagonal frame.
    let chain = (|| -> Result<(f64, f64, f64, f64, f64)> {
        let plus: Vec<i32> = vec![1; n];
        let mut chain_coeffs = vec![0.0; n];
        chain_coeffs[0] = 0.1;
        if n > 1 {
            chain_coeffs[1] = 0.05;
        }
        let field = VielbeinField::diagonal_linear(&plus, &chain_coeffs)?;
        let base = rng.vector(n) * 0.3;
        let raw = rng.vector(n);
        let dir = &raw / raw.norm();
        let curve_at = |count: usize| {
            let base = base.clone();
            let dir_path = dir.clone();
            let dir_rate = dir.clone();
            unit_speed_curve(
                &field,
                move |lambda| &base + &dir_path * lambda,
                move |_| dir_rate.clone(),
                0.0,
                length,
                count,
            )
        };
        let coarse = curve_at(samples)?;
        let unit_defect = coarse.derivative_defect();
        let report = line_element_chain(&field, &coarse)?;
        let fine = curve_at(samples * 2 - 1)?;
        let refined = line_element_chain(&field, &fine)?;
        let ratio = |coarse_err: f64, fine_err: f64| {
            if fine_err > 0.0 {
                coarse_err / fine_err
            } else {
                f64::MAX
            }
        };
        let ratio_flatform = ratio(report.max_rel_err_flatform, refined.max_rel_err_flatform);
        let ratio_embedding =
            ratio(report.max_rel_err_embedding, refined.max_rel_err_embedding);
        Ok((
            unit_defect,
            report.max_rel_err_flatform,
            report.max_rel_err_embedding,
            ratio_flatform.min(ratio_embedding),
            ratio_flatform.max(ratio_embedding),
        ))
    })()
    .ok();

    let mut echo = base_echo(cfg);
    echo.push("points", Json::Int(points as i64));
    echo.push("samples", Json::Int(samples as i64));
    echo.push("curve_length", Json::Float(length));
    echo.push("signature", signs_json(&signs));

    let checks = vec![
        measured(
            "null_invariant_max",
            cfg.tolerance("null_invariant_max", 1e-10),
            CheckMode::AtMost,
            null_invariant,
        ),
        measured(
            "curve_unit_speed",
            cfg.tolerance("curve_unit_speed", UNIT_SPEED_TOLERANCE),
            CheckMode::AtMost,
            chain.map(|r| r.0),
        ),
        measured(
            "chain_flatform_max",
            cfg.tolerance("chain_flatform_max", 1e-5),
            CheckMode::AtMost,
            chain.map(|r| r.1),
        ),
        measured(
            "chain_embedding_max",
            cfg.tolerance("chain_embedding_max", 1e-5),
            CheckMode::AtMost,
            chain.map(|r| r.2),
        ),
        measured(
            "chain_ratio_min",
            cfg.tolerance("chain_ratio_min", 2.5),
            CheckMode::AtLeast,
            chain.map(|r| r.3),
        ),
        measured(
            "chain_ratio_max",
            cfg.tolerance("chain_ratio_max", 6.0),
            CheckMode::AtMost,
            chain.map(|r| r.4),
        ),
    ];
    Ok(Report::new(cfg.name.as_str(), echo, checks))
}

// ---------------------------------------------------------------------------
// calabi-curvature
// ---------------------------------------------------------------------------

/// Verifies the Hessian-metric toolchain: quadratic potentials give the
/// identity metric, flat metrics carry no curvature, the curvature product
/// identity holds across random convex points, the round sphere calibrates
/// the sign convention, and the Lagrangian equals the Hamiltonian.
fn calabi_curvature(cfg: &ResolvedConfig) -> Result<Report> {
    let n = cfg.n;
    let potential_name = cfg
        .parameters
        .potential
        .clone()
        .unwrap_or_else(|| "coupled-well".to_string());
    let epsilon = cfg.parameters.epsilon.unwrap_or(0.1);
    let points = cfg.parameters.points.unwrap_or(50);
    let half_width = cfg.parameters.box_half_width.unwrap_or(0.6);
    let velocity_checks = cfg.parameters.velocity_checks.unwrap_or(100);
    let expect_flat = cfg.parameters.expect_flat.unwrap_or(false);
    let potential = ScalarPotential::catalog(&potential_name, n, epsilon)
        .map_err(|e| Error::Config(format!("parameter 'potential': {e}")))?;
    let mut rng = SplitMix64::new(cfg.seed);

    let quadratic = (|| -> Result<f64> {
        let half = ScalarPotential::half_square(n);
        let gfield = hessian_metric(&half, 1)?;
        let identity = DMatrix::<f64>::identity(n, n);
        let mut worst = 0.0_f64;
        for _ in 0..5 {
            let x = rng.vector(n) * 0.8;
            worst = worst.max((gfield.metric_at(&x)? - &identity).amax());
        }
        Ok(worst)
    })()
    .ok();

    let flat_curvature = (|| -> Result<f64> {
        let constant =
            MetricField::constant(DMatrix::<f64>::identity(n, n) + rng.symmetric(n) * 0.2)?;
        let separable = MetricField::from_fn(n, |x: &DVector<f64>| {
            DMatrix::from_fn(x.len(), x.len(), |i, j| {
                if i == j {
                    x[i].exp()
                } else {
                    0.0
                }
            })
        });
        let mut worst = 0.0_f64;
        for _ in 0..3 {
            let x = rng.vector(n) * 0.5;
            worst = worst.max(riemann_lowered(&constant, &x)?.max_abs());
            worst = worst.max(riemann(&separable, &x)?.max_abs());
        }
        Ok(worst)
    })()
    .ok();

    let identity_outcome = (|| -> Result<(f64, f64)> {
        let mut worst_defect = 0.0_f64;
        let mut largest_component = 0.0_f64;
        for _ in 0..points {
            let x = rng.vector(n) * half_width;
            let report = hessian_curvature_check(&potential, &x)?;
            worst_defect = worst_defect.max(report.max_abs_difference);
            largest_component = largest_component.max(report.lowered.max_abs());
        }
        Ok((worst_defect, largest_component))
    })()
    .ok();

    let sphere_defect = (|| -> Result<f64> {
        let sphere = MetricField::from_fn(2, |x: &DVector<f64>| {
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, x[0].sin().powi(2)])
        });
        let x = DVector::from_row_slice(&[std::f64::consts::FRAC_PI_4, 0.3]);
        Ok((gaussian_curvature(&sphere, &x)? - 1.0).abs())
    })()
    .ok();

    let energy_equality = (|| -> Result<f64> {
        let mut worst = 0.0_f64;
        for _ in 0..velocity_checks {
            let s = rng.symmetric(n);
            let g = &s * &s + DMatrix::<f64>::identity(n, n) * 0.1;
            let field = MetricField::constant(g)?;
            let x = DVector::zeros(n);
            let v = rng.vector(n);
            let pair = calabi_lagrangian_hamiltonian(&field, &x, &v)?;
            worst = worst.max(pair.difference.abs() / pair.lagrangian.abs().max(1.0));
        }
        Ok(worst)
    })()
    .ok();

    let mut echo = base_echo(cfg);
    echo.push("potential", Json::Str(potential_name));
    echo.push("epsilon", Json::Float(epsilon));
    echo.push("points", Json::Int(points as i64));
    echo.push("box_half_width", Json::Float(half_width));
    echo.push("velocity_checks", Json::Int(velocity_checks as i64));
    echo.push("expect_flat", Json::Bool(expect_flat));

    let mut checks = vec![
        measured(
            "hessian_of_quadratic",
            cfg.tolerance("hessian_of_quadratic", 1e-8),
            CheckMode::AtMost,
            quadratic,
        ),
        measured(
            "flat_metric_curvature",
            cfg.tolerance("flat_metric_curvature", 1e-6),
            CheckMode::AtMost,
            flat_curvature,
        ),
        measured(
            "curvature_identity_max",
            cfg.tolerance("curvature_identity_max", 1e-4),
            CheckMode::AtMost,
            identity_outcome.map(|(defect, _)| defect),
        ),
    ];
    if expect_flat {
        checks.push(measured(
            "potential_curvature_max",
            cfg.tolerance("potential_curvature_max", 1e-6),
            CheckMode::AtMost,
            identity_outcome.map(|(_, largest)| largest),
        ));
    } else {
        checks.push(measured(
            "curvature_magnitude",
            cfg.tolerance("curvature_magnitude", 1e-4),
            CheckMode::AtLeast,
            identity_outcome.map(|(_, largest)| largest),
        ));
    }
    checks.push(measured(
        "sphere_gaussian_defect",
        cfg.tolerance("sphere_gaussian_defect", 1e-4),
        CheckMode::AtMost,
        sphere_defect,
    ));
    checks.push(measured(
        "lagrangian_hamiltonian_max",
        cfg.tolerance("lagrangian_hamiltonian_max", 1e-12),
        CheckMode::AtMost,
        energy_equality,
    ));
    Ok(Report::new(cfg.name.as_str(), echo, checks))
}

// ---------------------------------------------------------------------------
// reduction-check
// ---------------------------------------------------------------------------

/// Integrates the full transport-factor equations (with drift and coupling
/// terms) and the reduced ones (structure matrix times factor) from the
/// same initial data. On family members the extra terms cancel along the
/// trajectory, so the two integrations and the closed form must agree.
fn reduction_check(cfg: &ResolvedConfig) -> Result<Report> {
    let n = cfg.n;
    let draws = cfg.parameters.draws.unwrap_or(5);
    let degree = cfg.parameters.degree.unwrap_or(2);
    let configured_y4 = configured_signature(cfg, &cfg.parameters.y4_signature, "y4_signature")?;
    let configured_z4 = configured_signature(cfg, &cfg.parameters.z4_signature, "z4_signature")?;
    let mut rng = SplitMix64::new(cfg.seed);
    let jm = StructureMatrix::symplectic(n).matrix().clone();

    let mut s_defect = 0.0_f64;
    let mut r_defect = 0.0_f64;
    let mut closed_defect = 0.0_f64;
    let mut first_trajectory: Option<Vec<(f64, DMatrix<f64>)>> = None;
    let mut failed = false;

    for draw in 0..draws {
        let variant = if draw % 2 == 0 {
            FamilyVariant::First
        } else {
            FamilyVariant::Second
        };
        let y4 = configured_y4
            .clone()
            .unwrap_or_else(|| sample_signature(&mut rng, n));
        let z4 = configured_z4
            .clone()
            .unwrap_or_else(|| sample_signature(&mut rng, n));
        let params = sample_member_params(&mut rng, n, degree, variant);
        let outcome = (|| -> Result<()> {
            let member = build_family(
                &params,
                variant,
                &y4,
                &z4,
                cfg.reparameterization(FAMILY_REP.0, FAMILY_REP.1)?,
            )?;
            let rep = cfg.reparameterization(FAMILY_REP.0, FAMILY_REP.1)?;
            let ybar_at = |tau: f64| -> DMatrix<f64> {
                let mut b = BlockMatrix::zeros(n);
                b.b4 = &y4 * rep.dt(tau);
                b.to_dense()
            };
            let z_dense = {
                let mut b = BlockMatrix::zeros(n);
                b.b4 = z4.clone();
                b.to_dense()
            };

            let s0 = member.s_at(0.0);
            let s_full = numerics::integrate(&s0, 0.0, 1.0, cfg.steps, |tau, s| {
                transport::s_full_rate(
                    s,
                    &jm,
                    &ybar_at(tau),
                    &member.d_at(tau),
                    &member.a_at(tau),
                    &member.f_at(tau),
                )
            });
            let s_reduced = numerics::integrate(&s0, 0.0, 1.0, cfg.steps, |tau, s| {
                &jm * ybar_at(tau) * s
            });
            for ((tau, full), (_, reduced)) in s_full.iter().zip(&s_reduced) {
                s_defect = s_defect.max(numerics::max_abs_diff(full, reduced));
                closed_defect =
                    closed_defect.max(numerics::max_abs_diff(reduced, &member.s_at(*tau)));
            }

            let r0 = member.r_at(0.0);
            let r_full = numerics::integrate(&r0, 0.0, 1.0, cfg.steps, |tau, r| {
                transport::r_full_rate(
                    r,
                    &jm,
                    &z_dense,
                    &member.e_at(tau),
                    &member.g_at(tau),
                    &member.a_at(tau),
                )
            });
            let r_reduced = numerics::integrate(&r0, 0.0, 1.0, cfg.steps, |_, r| {
                -(r * &jm * &z_dense)
            });
            for ((tau, full), (_, reduced)) in r_full.iter().zip(&r_reduced) {
                r_defect = r_defect.max(numerics::max_abs_diff(full, reduced));
                closed_defect =
                    closed_defect.max(numerics::max_abs_diff(reduced, &member.r_at(*tau)));
            }

            if draw == 0 {
                first_trajectory = Some(s_full);
            }
            Ok(())
        })();
        if outcome.is_err() {
            failed = true;
            break;
        }
    }

    if let (Some(path), Some(samples)) = (&cfg.parameters.trajectory_csv, &first_trajectory) {
        transport::write_matrix_trajectory_csv(Path::new(path), samples)?;
    }

    let wrap = |value: f64| -> Option<f64> { (!failed).then_some(value) };

    let mut echo = base_echo(cfg);
    echo.push("draws", Json::Int(draws as i64));
    echo.push("degree", Json::Int(degree as i64));
    echo.push(
        "rep_amplitude",
        Json::Float(cfg.parameters.rep_amplitude.unwrap_or(FAMILY_REP.0)),
    );
    echo.push(
        "rep_frequency",
        Json::Float(cfg.parameters.rep_frequency.unwrap_or(FAMILY_REP.1)),
    );

    let checks = vec![
        measured(
            "s_reduction_defect",
            cfg.tolerance("s_reduction_defect", 1e-9),
            CheckMode::AtMost,
            wrap(s_defect),
        ),
        measured(
            "r_reduction_defect",
            cfg.tolerance("r_reduction_defect", 1e-9),
            CheckMode::AtMost,
            wrap(r_defect),
        ),
        measured(
            "closed_form_defect",
            cfg.tolerance("closed_form_defect", 1e-9),
            CheckMode::AtMost,
            wrap(closed_defect),
        ),
    ];
    Ok(Report::new(cfg.name.as_str(), echo, checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_defaults(name: ScenarioName) -> Report {
        let config = ScenarioConfig::defaults_for(name);
        run(&config).expect("default config is valid")
    }

    #[test]
    fn every_default_scenario_passes() {
        for name in ScenarioName::ALL {
            let report = run_defaults(name);
            assert!(
                report.overall_pass,
                "{} failed:\n{}",
                name.as_str(),
                report.to_text()
            );
        }
    }

    #[test]
    fn reports_are_byte_deterministic() {
        for name in ScenarioName::ALL {
            let config = ScenarioConfig::defaults_for(name);
            let first = run(&config).unwrap().to_json();
            let second = run(&config).unwrap().to_json();
            assert_eq!(first, second, "{} report drifted", name.as_str());
        }
    }

    #[test]
    fn tolerance_overrides_reach_the_checks() {
        let mut config = ScenarioConfig::defaults_for(ScenarioName::FlatMapVerify);
        let mut tolerances = std::collections::BTreeMap::new();
        tolerances.insert("closed_form_residual".to_string(), 1e-30);
        config.tolerances = Some(tolerances);
        let report = run(&config).unwrap();
        let check = report
            .checks
            .iter()
            .find(|c| c.name == "closed_form_residual")
            .unwrap();
        assert_eq!(check.tolerance, 1e-30);
        assert!(!check.pass);
        assert!(!report.overall_pass);
    }

    #[test]
    fn unknown_keys_and_names_are_rejected() {
        assert!(
            ScenarioConfig::from_json(r#"{"scenario": "flat-map-verify", "draws": 3}"#).is_err()
        );
        assert!(ScenarioConfig::from_json(r#"{"scenario": "warp-drive"}"#)
            .unwrap()
            .resolve()
            .is_err());
        let config = ScenarioConfig::from_json(
            r#"{"scenario": "flat-map-verify", "parameters": {"warp": 1}}"#,
        );
        assert!(config.is_err());
    }

    #[test]
    fn config_matrices_are_dimension_checked() {
        let config = ScenarioConfig::from_json(
            r#"{
                "scenario": "flat-map-verify",
                "n": 4,
                "parameters": {"t3": {"rows": 2, "cols": 2, "data": [1.0, 2.0, 3.0]}}
            }"#,
        )
        .unwrap();
        let err = run(&config).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "got {err:?}");
    }

    #[test]
    fn zeroed_family_functions_leave_exactly_zero_residuals() {
        let mut config = ScenarioConfig::defaults_for(ScenarioName::RiccatiFamily);
        config.n = Some(4);
        config.parameters = Some(ScenarioParameters {
            draws: Some(4),
            zero_functions: Some(true),
            ..ScenarioParameters::default()
        });
        let report = run(&config).unwrap();
        assert!(report.overall_pass, "{}", report.to_text());
        for name in [
            "transport_mismatch",
            "compatibility_residual",
            "seed_consistency",
        ] {
            let check = report.checks.iter().find(|c| c.name == name).unwrap();
            assert_eq!(check.value, 0.0, "{name} should vanish identically");
        }
        let fault = report
            .checks
            .iter()
            .find(|c| c.name == "fault_detection")
            .unwrap();
        assert!(fault.pass, "fault must stay visible on the zero member");
    }

    #[test]
    fn flat_potential_configuration_reports_vanishing_curvature() {
        let mut config = ScenarioConfig::defaults_for(ScenarioName::CalabiCurvature);
        config.parameters = Some(ScenarioParameters {
            potential: Some("quartic-well".to_string()),
            expect_flat: Some(true),
            points: Some(20),
            ..ScenarioParameters::default()
        });
        let report = run(&config).unwrap();
        assert!(report.overall_pass, "{}", report.to_text());
        assert!(report
            .checks
            .iter()
            .any(|c| c.name == "potential_curvature_max" && c.pass));
    }

    #[test]
    fn velocity_conventions_separate_and_the_product_rule_wins() {
        let report = run_defaults(ScenarioName::FlatMapVerify);
        let product = report
            .checks
            .iter()
            .find(|c| c.name == "hamilton_defect_product_rule")
            .unwrap();
        let cross = report
            .checks
            .iter()
            .find(|c| c.name == "hamilton_defect_cross_quadrant")
            .unwrap();
        assert!(product.pass && cross.pass);
        assert!(product.value < 1e-6 && cross.value > 1e-6);
    }
}
