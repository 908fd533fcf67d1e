//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values (visible with `--nocapture`); the harness result line
//! is the per-criterion verdict.

use nalgebra::{DMatrix, DVector};
use phasemap::calabi::{
    calabi_lagrangian_hamiltonian, hessian_curvature_check, hessian_metric, riemann,
    riemann_lowered, MetricField, ScalarPotential,
};
use phasemap::conformal_embed::{
    consistent_momenta_constant_frame, three_hamiltonians, VielbeinField,
};
use phasemap::flat_mapping::{
    hamiltonian_equality_check, momentum_consistency, ConformalFrame, FreeTransport,
    VelocityConvention,
};
use phasemap::numerics::{max_abs_diff, signature_matrix, SplitMix64};
use phasemap::phase_space::Reparameterization;
use phasemap::riccati::{
    build_family, sample_member_params, sample_signature, verify_member, FamilyVariant,
    GatedResidual,
};
use phasemap::scenario::{run, ScenarioConfig, ScenarioName};
use std::time::Instant;

fn reparam(a: f64, k: f64) -> Reparameterization {
    Reparameterization::new(
        move |tau| tau + a * (k * tau).sin(),
        move |tau| 1.0 + a * k * (k * tau).cos(),
    )
}

/// The two stated six-dimensional signatures.
fn stated_transport(t3: DMatrix<f64>) -> FreeTransport {
    let y4 = signature_matrix(&[1, 1, 1, 1, 1, -1]).unwrap();
    let z4 = signature_matrix(&[1, 1, 1, -1, 1, -1]).unwrap();
    FreeTransport::new(y4, z4, t3).unwrap()
}

fn check_value(report: &phasemap::scenario::Report, name: &str) -> f64 {
    let check = report
        .checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("report carries check '{name}'"));
    assert!(check.pass, "check '{name}' failed: {} vs {}", check.value, check.tolerance);
    check.value
}

#[test]
fn criterion_1_closed_form_transport() {
    let clock = Instant::now();
    let mut rng = SplitMix64::new(1);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let flat = stated_transport(rng.matrix(6, 6));
        let rep = reparam(0.15, 6.0);
        for i in 0..=10 {
            worst = worst.max(flat.equation_defect(&rep, i as f64 / 10.0));
        }
    }
    let elapsed = clock.elapsed();
    assert!(worst <= 1e-10, "closed-form residual {worst:.3e} > 1e-10");
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1 s");
    println!(
        "criterion 1 PASS: closed-form quadrant residual {worst:.3e} <= 1e-10 over 20 draws in {:.0} ms",
        elapsed.as_secs_f64() * 1e3
    );
}

#[test]
fn criterion_2_oracle_equivalence() {
    let mut rng = SplitMix64::new(2);
    let flat = stated_transport(rng.matrix(6, 6));
    let endpoint_error = |steps: usize| -> f64 {
        let rep = reparam(0.15, 6.0);
        let start = flat.map_at(&rep, 0.0).to_dense();
        let system = flat.transport_system(reparam(0.15, 6.0));
        let samples = system.integrate_map(&start, 0.0, 1.0, steps).unwrap();
        let exact = flat.map_at(&rep, 1.0).to_dense();
        max_abs_diff(&samples.last().unwrap().1, &exact)
    };
    let e1000 = endpoint_error(1000);
    assert!(e1000 <= 1e-8, "endpoint error {e1000:.3e} > 1e-8 at 1000 steps");
    // The halving ratio is measured between 500 and 250 steps, where
    // truncation still dominates; at finer steps the constant-rate
    // quadrants sit on a rounding floor near 1e-13 and the ratio loses
    // meaning.
    let (e500, e250) = (endpoint_error(500), endpoint_error(250));
    let ratio = e250 / e500;
    assert!(
        (8.0..=32.0).contains(&ratio),
        "halving ratio {ratio:.2} outside [8, 32] (errors {e250:.3e} / {e500:.3e})"
    );
    println!(
        "criterion 2 PASS: endpoint error {e1000:.3e} <= 1e-8 at 1000 steps; halving ratio {ratio:.2} in [8, 32]"
    );
}

#[test]
fn criterion_3_riccati_family() {
    let mut rng = SplitMix64::new(3);
    let taus: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let mut mismatch = 0.0_f64;
    let mut compat = 0.0_f64;
    let mut gated_value = 0.0_f64;
    let mut refusals = 0usize;
    let mut fault_margin = f64::INFINITY;
    for variant in [FamilyVariant::First, FamilyVariant::Second] {
        for draw in 0..20 {
            let params = sample_member_params(&mut rng, 6, 3, variant);
            let y4 = sample_signature(&mut rng, 6);
            let z4 = sample_signature(&mut rng, 6);
            let member = build_family(&params, variant, &y4, &z4, reparam(0.4, 2.0)).unwrap();
            let report = verify_member(&member, &taus).unwrap();
            mismatch = mismatch.max(report.max_t_mismatch);
            compat = compat.max(report.compat_residual);
            match report.core_balance {
                GatedResidual::Value(v) => gated_value = gated_value.max(v),
                GatedResidual::Refused { .. } => refusals += 1,
            }
            if draw == 0 {
                let mut delta = DMatrix::zeros(6, 6);
                delta[(0, 0)] = 1e-3;
                let faulted = member.with_core_fault(&delta).unwrap();
                let fr = verify_member(&faulted, &taus).unwrap();
                fault_margin = fault_margin.min(fr.max_t_mismatch);
            }
        }
    }
    assert!(mismatch <= 1e-10, "T = S A R mismatch {mismatch:.3e} > 1e-10");
    assert!(compat <= 1e-8, "compatibility residual {compat:.3e} > 1e-8");
    assert!(gated_value <= 1e-8, "gated residual {gated_value:.3e} > 1e-8");
    assert!(fault_margin >= 1e-4, "1e-3 core fault went unnoticed: {fault_margin:.3e}");
    println!(
        "criterion 3 PASS: 20 draws/variant at n = 6 — mismatch {mismatch:.3e}, compatibility {compat:.3e}, \
         balance gate refused {refusals}/40 (every member core is rank-deficient by construction), \
         fault visibility {fault_margin:.3e} >= 1e-4"
    );
}

#[test]
fn criterion_4_reduction_check() {
    let config = ScenarioConfig::defaults_for(ScenarioName::ReductionCheck);
    let report = run(&config).unwrap();
    let s = check_value(&report, "s_reduction_defect");
    let r = check_value(&report, "r_reduction_defect");
    let c = check_value(&report, "closed_form_defect");
    assert!(report.overall_pass);
    println!(
        "criterion 4 PASS: full vs reduced trajectories agree on [0, 1] — S {s:.3e}, R {r:.3e}, closed form {c:.3e}, all <= 1e-9"
    );
}

#[test]
fn criterion_5_embedding() {
    let config = ScenarioConfig::defaults_for(ScenarioName::EmbedCheck);
    let report = run(&config).unwrap();
    let null_max = check_value(&report, "null_invariant_max");
    let flat = check_value(&report, "chain_flatform_max");
    let embedded = check_value(&report, "chain_embedding_max");
    let ratio_min = check_value(&report, "chain_ratio_min");
    let ratio_max = check_value(&report, "chain_ratio_max");
    assert!(report.overall_pass);
    println!(
        "criterion 5 PASS: 1000 points over the vielbein catalog — scaled null invariant {null_max:.3e} <= 1e-10; \
         chain errors {flat:.3e} / {embedded:.3e} <= 1e-5 at step 1e-3, halving ratios in [{ratio_min:.2}, {ratio_max:.2}] (~4x)"
    );
}

#[test]
fn criterion_6_hamiltonian_equality() {
    let mut rng = SplitMix64::new(6);
    let mut worst = 0.0_f64;
    let mut flagged = true;
    for _ in 0..20 {
        let field = VielbeinField::constant(&[1, 1, 1, -1], rng.near_identity(4, 0.2)).unwrap();
        let u = rng.vector(4) * 0.7;
        let du = rng.vector(4);
        let momenta = consistent_momenta_constant_frame(&field, &u, &du);
        let metric = field.metric_at(&u);
        let triple = three_hamiltonians(&metric, 0.0, field.signature(), &momenta).unwrap();
        let cmp = hamiltonian_equality_check(triple.q, triple.hhat, triple.h);
        worst = worst.max(cmp.max_pairwise / triple.h.abs().max(1.0));
        assert!(cmp.pass);

        let mut bumped = momenta.clone();
        for entry in bumped.p.iter_mut() {
            *entry += 1e-6;
        }
        let t2 = three_hamiltonians(&metric, 0.0, field.signature(), &bumped).unwrap();
        let c2 = hamiltonian_equality_check(t2.q, t2.hhat, t2.h);
        flagged &= !c2.pass;
    }
    assert!(worst <= 1e-12, "pairwise difference {worst:.3e} > 1e-12");
    assert!(flagged, "a 1e-6 momentum perturbation slipped through");
    println!(
        "criterion 6 PASS: pairwise Hamiltonian differences {worst:.3e} <= 1e-12 on 20 consistent draws; 1e-6 perturbations flagged every time"
    );
}

#[test]
fn criterion_7_calabi() {
    let mut rng = SplitMix64::new(7);

    let half_square = ScalarPotential::half_square(2);
    let g = hessian_metric(&half_square, 1).unwrap();
    let mut hess_defect = 0.0_f64;
    for _ in 0..5 {
        let x = rng.vector(2) * 0.8;
        let gm = g.metric_at(&x).unwrap();
        hess_defect = hess_defect.max((gm - DMatrix::<f64>::identity(2, 2)).amax());
    }
    assert!(hess_defect <= 1e-8, "Hessian of 1/2 |x|^2 off identity by {hess_defect:.3e}");

    let constant = MetricField::constant(DMatrix::<f64>::identity(3, 3) + 0.2 * rng.symmetric(3)).unwrap();
    let separable = MetricField::from_fn(2, |x: &DVector<f64>| {
        DMatrix::from_diagonal(&DVector::from_vec(vec![x[0].exp(), x[1].exp()]))
    });
    let mut flat_curv = 0.0_f64;
    for _ in 0..3 {
        let x3 = rng.vector(3) * 0.5;
        let x2 = rng.vector(2) * 0.5;
        flat_curv = flat_curv.max(riemann_lowered(&constant, &x3).unwrap().max_abs());
        flat_curv = flat_curv.max(riemann(&separable, &x2).unwrap().max_abs());
    }
    assert!(flat_curv <= 1e-6, "flat metric curvature {flat_curv:.3e} > 1e-6");

    // Curvature identity at 50+ points spread over the convex potential
    // catalog.
    let catalog = [
        ScalarPotential::half_square(2),
        ScalarPotential::quartic_well(2),
        ScalarPotential::quartic_axes(2),
        ScalarPotential::coupled_well(2, 0.1).unwrap(),
    ];
    let mut identity_defect = 0.0_f64;
    let mut points = 0usize;
    for potential in &catalog {
        for _ in 0..13 {
            let x = rng.vector(2) * 0.6;
            let report = hessian_curvature_check(potential, &x).unwrap();
            assert!(report.pass);
            identity_defect = identity_defect.max(report.max_abs_difference);
            points += 1;
        }
    }
    assert!(identity_defect <= 1e-4, "curvature identity defect {identity_defect:.3e} > 1e-4");

    let mut lh_defect = 0.0_f64;
    for _ in 0..100 {
        let s = rng.symmetric(3);
        let metric = MetricField::constant(&s * &s + DMatrix::<f64>::identity(3, 3) * 0.1).unwrap();
        let lh = calabi_lagrangian_hamiltonian(&metric, &rng.vector(3), &rng.vector(3)).unwrap();
        lh_defect = lh_defect.max(lh.difference.abs() / lh.lagrangian.abs().max(1.0));
    }
    assert!(lh_defect <= 1e-12, "L vs H defect {lh_defect:.3e} > 1e-12");

    println!(
        "criterion 7 PASS: Hessian-of-quadratic {hess_defect:.3e} <= 1e-8; flat curvature {flat_curv:.3e} <= 1e-6; \
         curvature identity {identity_defect:.3e} <= 1e-4 at {points} convex-catalog points; L = H within {lh_defect:.3e} on 100 cases"
    );
}

#[test]
fn criterion_8_determinism() {
    let mut total = 0usize;
    for name in ScenarioName::ALL {
        let config = ScenarioConfig::defaults_for(name);
        let first = run(&config).unwrap().to_json();
        let second = run(&config).unwrap().to_json();
        assert_eq!(first, second, "scenario {} not byte-deterministic", name.as_str());
        total += first.len();
    }
    println!(
        "criterion 8 PASS: all five scenarios re-ran byte-identically ({total} JSON bytes compared)"
    );
}

#[test]
fn criterion_9_velocity_convention_resolution() {
    let mut rng = SplitMix64::new(9);
    let n = 4;
    let m = n + 2;
    let mut product_rule_worst = 0.0_f64;
    let mut cross_quadrant_best = f64::INFINITY;
    for _ in 0..5 {
        let flat = stated_transport(rng.matrix(m, m));
        let e = rng.near_identity(n, 0.2);
        let frame = ConformalFrame::new(n, move |_| e.clone(), |t| 0.3 * t.sin());
        let rep = reparam(0.15, 6.0);
        let y0 = rng.vector(m);
        let p0 = rng.vector(m);
        for tau in [0.3, 0.7, 1.1] {
            let product =
                momentum_consistency(&flat, &frame, &rep, tau, &y0, &p0, VelocityConvention::ProductRule)
                    .unwrap();
            let cross =
                momentum_consistency(&flat, &frame, &rep, tau, &y0, &p0, VelocityConvention::CrossQuadrant)
                    .unwrap();
            product_rule_worst = product_rule_worst.max(product);
            cross_quadrant_best = cross_quadrant_best.min(cross);
        }
    }
    // Exactly one candidate passes the 1e-6 oracle; the product-rule set is
    // the consistent one. The scenario report encodes the same verdict in
    // its check names (hamilton_defect_product_rule, at-most, passing;
    // hamilton_defect_cross_quadrant, at-least, passing).
    assert!(
        product_rule_worst <= 1e-6,
        "product-rule defect {product_rule_worst:.3e} > 1e-6"
    );
    assert!(
        cross_quadrant_best > 1e-6,
        "cross-quadrant defect {cross_quadrant_best:.3e} <= 1e-6: both candidates passed"
    );
    let report = run(&ScenarioConfig::defaults_for(ScenarioName::FlatMapVerify)).unwrap();
    check_value(&report, "hamilton_defect_product_rule");
    check_value(&report, "hamilton_defect_cross_quadrant");
    println!(
        "criterion 9 PASS: Hamilton-equation oracle — product rule {product_rule_worst:.3e} <= 1e-6, \
         cross-quadrant {cross_quadrant_best:.3e} > 1e-6; exactly one candidate survives and the report names the product rule"
    );
}
