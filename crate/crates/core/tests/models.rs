use std::f64::consts::PI;

use proptest::prelude::*;
use schrodinger_poisson::models::{builtin_specs, distance, PotentialSpec, WeightSpec, BUILTIN_NAMES};
use schrodinger_poisson::{builtin_instance, Error, Field, Grid3, Potential, Weight};

fn grid(n: usize) -> Grid3 {
    Grid3::new(12.0, n).unwrap()
}

#[test]
fn constant_k_has_unit_sup() {
    let inst = builtin_instance("const_K_gaussian_f", grid(16), 1.5, 0.5).unwrap();
    assert_eq!(inst.potential().k_sup(), 1.0);
    assert!(inst.potential().is_constant());
}

#[test]
fn gaussian_weight_norm_matches_closed_form() {
    // |e^{-|x|^2}|_4 = (∫ e^{-4|x|^2})^{1/4} = (π/4)^{3/8}
    let exact = (PI / 4.0).powf(0.375);
    let inst = builtin_instance("const_K_gaussian_f", grid(64), 1.5, 0.5).unwrap();
    let got = inst.weight().norm_f();
    assert!((got - exact).abs() / exact < 1e-6, "{got} vs {exact}");
}

#[test]
fn weight_norm_converges_under_refinement() {
    let spec = WeightSpec::Gaussian { amplitude: 1.0, width: 1.0, center: [0.0; 3] };
    for (coarse, fine) in [(48, 96), (64, 128)] {
        let a = spec.realize(grid(coarse), 1.5).unwrap().norm_f();
        let b = spec.realize(grid(fine), 1.5).unwrap().norm_f();
        assert!((a - b).abs() / b < 1e-4, "N = {coarse} -> {fine}: {a} vs {b}");
    }
}

#[test]
fn lorentzian_k_passes_the_holder_check() {
    let g = grid(32);
    let inst = builtin_instance("bump_K_gaussian_f", g, 1.5, 0.5).unwrap();
    let pot = inst.potential();
    assert_eq!(pot.beta(), 2.0);
    assert_eq!(pot.x0(), [0.0; 3]);
    assert_eq!(pot.k_sup(), 1.0);
    // |1/(1+r²) - 1| = r²/(1+r²) <= r², brute force over the grid
    for (idx, &k) in pot.samples().values().iter().enumerate() {
        let r = distance(g.point(idx), pot.x0());
        if r < pot.holder_delta() {
            assert!((k - pot.k_sup()).abs() <= pot.holder_c() * r.powf(pot.beta()) + 1e-15);
        }
    }
}

#[test]
fn compact_weight_is_supported_in_the_unit_ball() {
    let g = grid(32);
    let inst = builtin_instance("const_K_compact_f", g, 1.5, 0.5).unwrap();
    for (idx, &f) in inst.weight().samples().values().iter().enumerate() {
        if distance(g.point(idx), [0.0; 3]) >= 1.0 {
            assert_eq!(f, 0.0);
        }
    }
    assert!(inst.weight().samples().max() > 0.0);
}

#[test]
fn every_builtin_constructs_on_a_shared_grid() {
    let g = grid(16);
    for name in BUILTIN_NAMES {
        let inst = builtin_instance(name, g, 1.3, 0.1).unwrap();
        assert_eq!(inst.name(), name);
        assert_eq!(inst.potential().samples().grid(), &g);
        assert_eq!(inst.weight().samples().grid(), &g);
        assert!(inst.weight().norm_f() > 0.0);
        assert!(inst.potential().samples().min() >= 0.0);
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    let g = grid(16);
    let invalid = |r: schrodinger_poisson::Result<_>| matches!(r, Err(Error::InvalidInstance(_)));
    assert!(invalid(builtin_instance("no_such_instance", g, 1.5, 0.5)));
    for q in [1.0, 2.0, 0.5, 2.5] {
        assert!(invalid(builtin_instance("const_K_gaussian_f", g, q, 0.5)), "q = {q}");
    }
    for lambda in [0.0, -1.0, f64::NAN] {
        assert!(invalid(builtin_instance("const_K_gaussian_f", g, 1.5, lambda)), "lambda = {lambda}");
    }
    assert!(builtin_specs("no_such_instance").is_err());
    assert!(PotentialSpec::Constant { value: 0.0 }.realize(g).is_err());
}

#[test]
fn weights_violating_positivity_are_rejected() {
    let g = grid(16);
    let negative = Field::from_fn(g, |x| (-distance(x, [0.0; 3]).powi(2)).exp() - 0.5);
    assert!(Weight::new(negative, 1.5).is_err());
    assert!(Weight::new(Field::zeros(g), 1.5).is_err());
}

#[test]
fn potentials_violating_the_holder_bound_are_rejected() {
    let g = grid(16);
    let k = Field::from_fn(g, |x| 1.0 / (1.0 + distance(x, [0.0; 3]).powi(2)));
    assert!(Potential::new(k.clone(), [0.0; 3], 2.0, 1.0, 1.0).is_ok());
    // C = 0.1 is too small for the Lorentzian near the peak
    assert!(Potential::new(k.clone(), [0.0; 3], 2.0, 0.1, 3.0).is_err());
    // x0 away from the maximum
    assert!(Potential::new(k, [3.0, 0.0, 0.0], 2.0, 1.0, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn valid_parameters_always_construct(q in 1.01f64..1.99, lambda in 1e-3f64..10.0, which in 0usize..3) {
        let inst = builtin_instance(BUILTIN_NAMES[which], grid(8), q, lambda).unwrap();
        prop_assert_eq!(inst.q(), q);
        prop_assert_eq!(inst.lambda(), lambda);
        prop_assert!(inst.weight().norm_f().is_finite() && inst.weight().norm_f() > 0.0);
    }
}
