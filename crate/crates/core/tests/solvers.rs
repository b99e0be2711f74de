use schrodinger_poisson::energy::{compute_constants, Bubble, EnergyBreakdown};
use schrodinger_poisson::solvers::{
    find_ball_minimizer, find_mountain_pass, least_energy_select, verify_solution, CriticalPointReport, Kind,
    MountainPassConfig,
};
use schrodinger_poisson::{builtin_instance, Error, Field, Grid3, ProblemInstance};

fn instance(n: usize, fraction: f64) -> ProblemInstance {
    let probe = builtin_instance("const_K_gaussian_f", Grid3::new(12.0, n).unwrap(), 1.5, 1.0).unwrap();
    let lambda0 = compute_constants(&probe).unwrap().lambda0;
    probe.with_lambda(fraction * lambda0).unwrap()
}

fn fake(kind: Kind, u: Field, energy: f64, h1_norm: f64) -> CriticalPointReport {
    CriticalPointReport {
        u,
        energy,
        breakdown: EnergyBreakdown { quadratic: 0.0, nonlocal: 0.0, concave: 0.0, total: energy },
        grad_norm: 0.0,
        h1_norm,
        kind,
        iterations: 1,
        converged: true,
        coercive_floor: -1.0,
        checks: Vec::new(),
        log: Vec::new(),
    }
}

fn check<'a>(checks: &'a [schrodinger_poisson::solvers::Check], name: &str) -> &'a schrodinger_poisson::solvers::Check {
    checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("no check named {name}"))
}

#[test]
fn selection_prefers_the_negative_minimizer() {
    let g = Grid3::new(4.0, 8).unwrap();
    let saddle = fake(Kind::Saddle, Field::zeros(g), 5.0, 3.0);
    let ball = fake(Kind::BallMin, Field::zeros(g), -0.1, 0.05);
    let best = least_energy_select(&[saddle.clone(), ball]).unwrap();
    assert_eq!(best.kind, Kind::LeastEnergy);
    assert_eq!(best.energy, -0.1);
    assert!(check(&best.checks, "negative_least_energy").passed);
    assert!(check(&best.checks, "coercivity_floor").passed);

    let single = least_energy_select(&[saddle]).unwrap();
    assert_eq!(single.energy, 5.0);
    assert!(single.checks.iter().all(|c| c.name != "negative_least_energy"));
}

#[test]
fn selection_breaks_ties_by_norm() {
    let g = Grid3::new(4.0, 8).unwrap();
    let a = fake(Kind::BallMin, Field::zeros(g), -0.2, 0.3);
    let b = fake(Kind::BallMin, Field::zeros(g), -0.2, 0.1);
    let c = fake(Kind::BallMin, Field::zeros(g), -0.1, 0.01);
    assert_eq!(least_energy_select(&[a, b, c]).unwrap().h1_norm, 0.1);
}

#[test]
fn selection_preconditions() {
    assert!(matches!(least_energy_select(&[]), Err(Error::Usage(_))));
    let mut r = fake(Kind::Saddle, Field::zeros(Grid3::new(4.0, 8).unwrap()), 1.0, 1.0);
    r.converged = false;
    assert!(matches!(least_energy_select(&[r]), Err(Error::Precondition(_))));
}

#[test]
fn verification_flags_zero_and_mixed_sign_fields() {
    let inst = instance(24, 0.5);
    let g = *inst.grid();
    let zero = verify_solution(&inst, &fake(Kind::Saddle, Field::zeros(g), 0.0, 0.0)).unwrap();
    assert!(!check(&zero.checks, "nontrivial").passed);
    assert!(!zero.passed());

    let mixed = Field::from_fn(g, |x| x[0] * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 4.0).exp());
    let norm = mixed.h1_norm();
    let v = verify_solution(&inst, &fake(Kind::BallMin, mixed, 0.0, norm)).unwrap();
    assert!(!check(&v.checks, "nonnegative").passed);
    assert!(!check(&v.checks, "positive_interior").passed);
}

#[test]
fn solvers_refuse_lambda_at_or_above_lambda0() {
    let inst = instance(24, 1.0);
    let err = find_mountain_pass(&inst, &MountainPassConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)), "{err}");
    assert!(matches!(find_ball_minimizer(&inst, 1e-6), Err(Error::Precondition(_))));
}

#[test]
fn mountain_pass_rejects_a_zero_seed() {
    let inst = instance(24, 0.5);
    let cfg = MountainPassConfig { seed_direction: Some(Field::zeros(*inst.grid())), ..Default::default() };
    assert!(matches!(find_mountain_pass(&inst, &cfg), Err(Error::Usage(_))));
}

#[test]
fn ball_minimizer_is_an_interior_negative_critical_point() {
    let inst = instance(32, 0.5);
    let rho = compute_constants(&inst).unwrap().rho;
    let r = find_ball_minimizer(&inst, 1e-6).unwrap();
    assert!(r.converged);
    assert_eq!(r.kind, Kind::BallMin);
    assert!(r.energy < 0.0 && r.h1_norm < rho);
    assert!(r.grad_norm <= 1e-6 * r.h1_norm.max(1.0));
    for name in ["negative_level", "interior", "monotone_descent", "projection_inactive_at_end"] {
        assert!(check(&r.checks, name).passed, "{name}: {}", check(&r.checks, name).detail);
    }
    assert!(verify_solution(&inst, &r).unwrap().strong_residual < 1e-4);
}

#[test]
fn mountain_pass_level_is_nonincreasing_in_lambda() {
    let inst = instance(32, 0.5);
    let lower = inst.with_lambda(0.9 * inst.lambda()).unwrap();
    let seed = Bubble::new(1.0, [0.0; 3]).sample(*inst.grid());
    let cfg = MountainPassConfig { seed_direction: Some(seed), ..Default::default() };
    let hi = find_mountain_pass(&inst, &cfg).unwrap();
    let lo = find_mountain_pass(&lower, &cfg).unwrap();
    assert!(hi.converged && lo.converged);
    assert!(lo.energy >= hi.energy - 1e-8, "c(0.9λ) = {} < c(λ) = {}", lo.energy, hi.energy);

    // ⟨J'(u), u⟩ = ‖u‖² - ∫Kφ|u|^5 - λ∫f|u|^q vanishes at the saddle
    let b = hi.breakdown;
    let nehari = 2.0 * b.quadratic - 10.0 * b.nonlocal - 1.5 * b.concave;
    assert!(nehari.abs() <= 1e-5 * 2.0 * b.quadratic, "Nehari residual {nehari}");
    assert!(check(&hi.checks, "path_in_gamma").passed);
    assert!(check(&hi.checks, "above_alpha_floor").passed);
}
