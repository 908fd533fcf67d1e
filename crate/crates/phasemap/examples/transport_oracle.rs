//! Fixed-step integration of the transport equation against the closed form.
//!
//! Integrates `dT/dtau = B Ybar T - T C Z` with classical fourth-order
//! Runge-Kutta from the closed form's initial value and compares the endpoint
//! at `tau = 1` with the analytic map. The endpoint error at each step count
//! and the ratio between successive halvings show the integrator's order —
//! until the error floor set by rounding takes over. Also writes the sampled
//! trajectory to CSV.

use phasemap::flat_mapping::FreeTransport;
use phasemap::numerics::{max_abs_diff, signature_matrix, SplitMix64};
use phasemap::phase_space::Reparameterization;
use std::path::Path;

fn reparam(a: f64, k: f64) -> Reparameterization {
    Reparameterization::new(
        move |tau| tau + a * (k * tau).sin(),
        move |tau| 1.0 + a * k * (k * tau).cos(),
    )
}

fn main() -> phasemap::Result<()> {
    let m = 6;
    let y4 = signature_matrix(&[1, 1, 1, 1, 1, -1])?;
    let z4 = signature_matrix(&[1, 1, 1, -1, 1, -1])?;
    let mut rng = SplitMix64::new(99);
    let flat = FreeTransport::new(y4, z4, rng.matrix(m, m))?;
    let (a, k) = (0.15, 6.0);

    println!("endpoint error of the RK4-integrated transport map vs the closed form:");
    println!("{:>8}  {:>14}  {:>8}", "steps", "error", "ratio");
    let mut previous: Option<f64> = None;
    let start = flat.map_at(&reparam(a, k), 0.0).to_dense();
    for steps in [125, 250, 500, 1000, 2000] {
        let system = flat.transport_system(reparam(a, k));
        let samples = system.integrate_map(&start, 0.0, 1.0, steps)?;
        let (_, endpoint) = samples.last().expect("integration produces samples");
        let exact = flat.map_at(&reparam(a, k), 1.0).to_dense();
        let err = max_abs_diff(endpoint, &exact);
        match previous {
            Some(p) => println!("{steps:>8}  {err:>14.6e}  {:>8.2}", p / err),
            None => println!("{steps:>8}  {err:>14.6e}  {:>8}", "-"),
        }
        previous = Some(err);
    }
    println!("(classical fourth order gives ratios near 16 until rounding");
    println!(" in the constant-rate quadrants sets a floor near 1e-13)");

    let system = flat.transport_system(reparam(a, k));
    let samples = system.integrate_map(&start, 0.0, 1.0, 1000)?;
    let path = Path::new("target/transport_oracle.csv");
    phasemap::transport::write_matrix_trajectory_csv(path, &samples)?;
    println!("wrote {} samples to {}", samples.len(), path.display());
    Ok(())
}
