//! Projected descent for the negative-energy minimizer inside the ball
//! `‖u‖ <= ρ`, for each builtin instance.

use schrodinger_poisson::energy::compute_constants;
use schrodinger_poisson::models::BUILTIN_NAMES;
use schrodinger_poisson::solvers::find_ball_minimizer;
use schrodinger_poisson::{builtin_instance, Grid3};

fn main() -> schrodinger_poisson::Result<()> {
    let grid = Grid3::new(12.0, 48)?;
    for name in BUILTIN_NAMES {
        let base = builtin_instance(name, grid, 1.5, 1.0)?;
        let c = compute_constants(&base)?;
        let instance = base.with_lambda(0.5 * c.lambda0)?;
        let r = find_ball_minimizer(&instance, 1e-6)?;
        println!(
            "{name:<20} c~ = {:+.9e}  ‖u‖ = {:.6} (rho = {:.4})  {} iterations  checks {}/{}",
            r.energy,
            r.h1_norm,
            c.rho,
            r.iterations,
            r.checks_passed(),
            r.checks.len()
        );
    }
    Ok(())
}
