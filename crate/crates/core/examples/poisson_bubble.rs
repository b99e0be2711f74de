//! The Newtonian potential of `U⁵` for the Aubin–Talenti bubble is `U`
//! itself. Solves `-Δφ = U⁵` on three grids and reports the interior error
//! and the observed order of convergence.

use schrodinger_poisson::energy::Bubble;
use schrodinger_poisson::models::distance;
use schrodinger_poisson::nonlocal::solve_poisson;
use schrodinger_poisson::{builtin_instance, Grid3};

fn main() -> schrodinger_poisson::Result<()> {
    let half_width = 20.0;
    let mut last: Option<(f64, f64)> = None;
    for n in [48, 64, 96] {
        let grid = Grid3::new(half_width, n)?;
        let instance = builtin_instance("const_K_gaussian_f", grid, 1.5, 0.1)?;
        let bubble = Bubble::new(1.0, [0.0; 3]);
        let u = bubble.sample_full(grid);
        let sol = solve_poisson(&instance, &u)?;
        let mut err = 0.0f64;
        for (i, (&phi, &exact)) in sol.phi.values().iter().zip(u.values()).enumerate() {
            if distance(grid.point(i), [0.0; 3]) <= 0.5 * half_width {
                err = err.max((phi - exact).abs() / exact);
            }
        }
        let order = last.map(|(h, e)| (e / err).ln() / (h / grid.spacing()).ln());
        println!(
            "N = {n:>3}  h = {:.4}  max interior rel error = {err:.3e}  order = {}  relative residual = {:.1e}",
            grid.spacing(),
            order.map(|o| format!("{o:.2}")).unwrap_or_else(|| "-".into()),
            sol.relative_residual()
        );
        last = Some((grid.spacing(), err));
    }
    Ok(())
}
