//! Truncated bubbles `v_ε` on a fine grid: the asymptotic orders of their
//! norms as `ε → 0`, and the ray maxima `max_t J(t v_ε)` against the level
//! bound below which compactness holds.

use schrodinger_poisson::energy::{bubble_estimates, compute_constants, level_bound_check};
use schrodinger_poisson::{builtin_instance, Grid3};

fn main() -> schrodinger_poisson::Result<()> {
    let grid = Grid3::new(2.4, 192)?;
    let scales = [0.4, 0.2, 0.1];
    for name in ["const_K_gaussian_f", "bump_K_gaussian_f"] {
        let base = builtin_instance(name, grid, 1.5, 1.0)?;
        let lambda0 = compute_constants(&base)?.lambda0;
        let instance = base.with_lambda(0.5 * lambda0)?;

        let est = bubble_estimates(&instance, &scales)?;
        println!("{name}");
        println!("  {:>6} {:>14} {:>12} {:>12}", "eps", "|∇v|²-S^1.5", "|v|²", "K defect");
        for r in &est.rows {
            println!("  {:>6} {:>14.6e} {:>12.6e} {:>12.6e}", r.epsilon, r.grad_excess, r.l2_sq, r.k_defect);
        }
        let k = est.slope_k.map(|s| format!("{s:.3}")).unwrap_or_else(|| "identically zero".into());
        println!(
            "  slopes: gradient {:.3}, L2 {:.3}, K defect {k} (beta = {})",
            est.slope_grad, est.slope_l2, est.beta
        );

        let level = level_bound_check(&instance, &scales)?;
        for r in &level.rows {
            println!(
                "  eps = {:<4} t_max = {:.4}  max J = {:.6}  max g = {:.6}",
                r.epsilon, r.t_max, r.max_value, r.g_max
            );
        }
        println!(
            "  level bound {:.6}: {}\n",
            level.level_bound,
            match level.achieving_epsilon {
                Some(e) => format!("attained at eps = {e}"),
                None => "not attained on this sweep".into(),
            }
        );
    }
    Ok(())
}
