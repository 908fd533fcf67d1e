//! Hessian metrics from convex potentials and their curvature identity.
//!
//! The Hessian of a convex potential is a Riemannian metric whose first-kind
//! Christoffel symbols are half the potential's third derivatives, making
//! the fully lowered curvature expressible as a bilinear form in the
//! Christoffels alone. This example verifies that identity on a coupled
//! convex potential, shows a separable potential is flat, recovers the unit
//! sphere's Gaussian curvature from a generic metric field, and confirms
//! the geodesic Lagrangian equals its Legendre-pair Hamiltonian.

use nalgebra::{DMatrix, DVector};
use phasemap::calabi::{
    calabi_lagrangian_hamiltonian, gaussian_curvature, hessian_curvature_check, hessian_metric,
    ricci, riemann_lowered, MetricField, ScalarPotential,
};
use phasemap::numerics::SplitMix64;

fn main() -> phasemap::Result<()> {
    let mut rng = SplitMix64::new(17);

    // Hessian of 1/2 |x|^2 is the identity everywhere.
    let half_square = ScalarPotential::half_square(2);
    let g = hessian_metric(&half_square, 1)?;
    let x = DVector::from_vec(vec![0.4, -0.3]);
    let defect = (g.metric_at(&x)? - DMatrix::<f64>::identity(2, 2)).amax();
    println!("Hessian of 1/2 |x|^2 vs identity: {defect:.3e}");
    assert!(defect <= 1e-8);

    // Curvature identity on a genuinely coupled convex potential.
    let coupled = ScalarPotential::coupled_well(2, 0.1)?;
    let mut worst = 0.0_f64;
    let mut magnitude = 0.0_f64;
    for _ in 0..10 {
        let p = rng.vector(2) * 0.6;
        let report = hessian_curvature_check(&coupled, &p)?;
        worst = worst.max(report.max_abs_difference);
        magnitude = magnitude.max(report.lowered.max_abs());
        assert!(report.pass);
    }
    println!("curvature identity defect over 10 points: {worst:.3e} (curvature magnitude {magnitude:.3e})");

    // A separable potential's Hessian metric is flat: the identity holds
    // with both sides zero.
    let separable = ScalarPotential::quartic_well(2);
    let mut flat_max = 0.0_f64;
    for _ in 0..5 {
        let p = rng.vector(2) * 0.6;
        let report = hessian_curvature_check(&separable, &p)?;
        flat_max = flat_max.max(report.lowered.max_abs());
    }
    println!("separable quartic-well curvature magnitude: {flat_max:.3e} (flat)");
    assert!(flat_max <= 1e-6);

    // The round unit sphere in coordinates (theta, phi): G = diag(1, sin^2
    // theta). Gaussian curvature must be +1 and the Ricci tensor -G for the
    // sign convention in use.
    let sphere = MetricField::from_fn(2, |x: &DVector<f64>| {
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, x[0].sin().powi(2)]))
    });
    let p = DVector::from_vec(vec![std::f64::consts::FRAC_PI_4, 0.3]);
    let k = gaussian_curvature(&sphere, &p)?;
    let ric = ricci(&sphere, &p)?;
    let ric_defect = (&ric + sphere.metric_at(&p)?).amax();
    println!("unit sphere: Gaussian curvature {k:+.9} (want +1), Ricci vs -G defect {ric_defect:.3e}");
    assert!((k - 1.0).abs() <= 1e-4);
    assert!(ric_defect <= 1e-4);

    // Flat constant metric has zero curvature tensor.
    let constant = MetricField::constant(DMatrix::<f64>::identity(3, 3) + 0.2 * rng.symmetric(3))?;
    let r = riemann_lowered(&constant, &(rng.vector(3) * 0.5))?;
    println!("constant-metric lowered curvature max: {:.3e}", r.max_abs());
    assert!(r.max_abs() <= 1e-6);

    // Geodesic Lagrangian and Hamiltonian agree identically.
    let mut worst_lh = 0.0_f64;
    for _ in 0..20 {
        let s = rng.symmetric(3);
        let metric = MetricField::constant(&s * &s + DMatrix::<f64>::identity(3, 3) * 0.1)?;
        let lh = calabi_lagrangian_hamiltonian(&metric, &rng.vector(3), &rng.vector(3))?;
        worst_lh = worst_lh.max(lh.difference.abs() / lh.lagrangian.abs().max(1.0));
    }
    println!("geodesic L vs H over 20 random metrics: {worst_lh:.3e}");
    assert!(worst_lh <= 1e-12);
    println!("all curvature properties verified.");
    Ok(())
}
