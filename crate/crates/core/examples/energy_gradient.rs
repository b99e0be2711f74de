//! Evaluates `J` term by term on a random field and compares the `H¹`
//! gradient with central differences of `J` along random directions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use schrodinger_poisson::energy::Functional;
use schrodinger_poisson::field::{h1_inner, random_smooth_field};
use schrodinger_poisson::{builtin_instance, Grid3};

fn main() -> schrodinger_poisson::Result<()> {
    let grid = Grid3::new(12.0, 48)?;
    let instance = builtin_instance("bump_K_gaussian_f", grid, 1.5, 0.5)?;
    let functional = Functional::new(&instance);
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let u = random_smooth_field(grid, &mut rng, true).scale(2.0);
    let state = functional.state(&u)?;
    let e = state.energy;
    println!("J(u) = {:.9e}", e.total);
    println!("  (1/2)‖u‖²           = {:.9e}", e.quadratic);
    println!("  (1/10)∫Kφ|u|⁵      = {:.9e}", e.nonlocal);
    println!("  (λ/q)∫f|u|^q       = {:.9e}", e.concave);
    println!("‖∇J(u)‖ = {:.6e}\n", state.grad_norm);

    let tau = 1e-4;
    for k in 0..5 {
        let v = random_smooth_field(grid, &mut rng, false);
        let v = v.scale(1.0 / v.h1_norm());
        let plus = functional.evaluate(&u.axpy(tau, &v)?)?.total;
        let minus = functional.evaluate(&u.axpy(-tau, &v)?)?.total;
        let fd = (plus - minus) / (2.0 * tau);
        let exact = h1_inner(&state.gradient, &v)?;
        println!(
            "direction {k}: (g, v) = {exact:+.10e}  difference quotient = {fd:+.10e}  rel = {:.1e}",
            ((fd - exact) / exact).abs()
        );
    }
    Ok(())
}
