//! Samples `J` on the sphere `‖u‖ = ρ` with random directions and compares
//! the minimum with the closed-form floor, below and above `λ₀`.

use schrodinger_poisson::energy::{compute_constants, mountain_pass_geometry_check};
use schrodinger_poisson::{builtin_instance, Grid3};

fn main() -> schrodinger_poisson::Result<()> {
    let grid = Grid3::new(12.0, 48)?;
    let base = builtin_instance("const_K_compact_f", grid, 1.5, 1.0)?;
    let lambda0 = compute_constants(&base)?.lambda0;
    for frac in [0.2, 0.5, 0.9] {
        let instance = base.with_lambda(frac * lambda0)?;
        let g = mountain_pass_geometry_check(&instance, 32, 11)?;
        println!(
            "lambda = {frac} lambda0: min J on sphere = {:.6e}, alpha_floor = {:.6e}, violations {}/{}",
            g.min_energy, g.alpha_floor, g.violations, g.samples
        );
    }
    Ok(())
}
