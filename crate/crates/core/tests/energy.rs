use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stefan_core::energy::{
    caccioppoli_sides, neumann_energy_sides, phi_term, Cutoff, CutoffKind, EnergyReport, Sign, TruncationLevel, Variant,
};
use stefan_core::enthalpy::RegularizedEnthalpy;
use stefan_core::geometry::{DomainGrid, IntrinsicCylinder, ShapeSpec};
use stefan_core::solver::{BoundaryData, DataFunction, FluxModel, Problem, SolverConfig, SpaceTimeField};
use stefan_core::Error;

fn unit_interval(n: usize) -> Arc<DomainGrid> {
    Arc::new(DomainGrid::build(&ShapeSpec::Interval { a: 0.0, b: 1.0 }, 1.0 / n as f64).unwrap())
}

fn dirichlet(p: f64, eps: f64, g: DataFunction, initial: DataFunction) -> Problem {
    Problem::new(
        unit_interval(64),
        FluxModel::with_default_floor(p, 1.0).unwrap(),
        BoundaryData::dirichlet(g, initial),
        RegularizedEnthalpy::new(1.0, eps).unwrap(),
    )
    .unwrap()
}

fn mushy_run() -> (Problem, SpaceTimeField) {
    let g = DataFunction::Step { axis: 0, at: 0.5, below: 1.0, above: -0.05 };
    let pb = dirichlet(2.0, 0.05, g, DataFunction::Constant { value: -0.05 });
    let field = pb.solve(&SolverConfig { dt: 2e-3, ..SolverConfig::default() }, 0.1).unwrap();
    (pb, field)
}

fn space_time(sigma: f64) -> Cutoff {
    Cutoff::new(CutoffKind::SpaceTime, sigma).unwrap()
}

fn level(k: f64, sign: Sign) -> TruncationLevel {
    TruncationLevel { k, sign }
}

fn terms(r: &EnergyReport) -> [f64; 10] {
    [
        r.lhs_sup_term,
        r.lhs_grad_term,
        r.lhs_singular_term,
        r.rhs_grad_term,
        r.rhs_time_term,
        r.rhs_singular_term,
        r.rhs_initial_term,
        r.rhs_c2_term,
        r.lhs_total,
        r.rhs_total,
    ]
}

#[test]
fn constant_solution_above_level_is_degenerate() {
    let c = DataFunction::Constant { value: 0.7 };
    let pb = dirichlet(3.0, 0.1, c.clone(), c);
    let field = pb.solve(&SolverConfig { dt: 0.01, ..SolverConfig::default() }, 0.1).unwrap();
    let cyl = IntrinsicCylinder::backward([0.5, 0.0], 0.1, 0.25, 1.0, 3.0).unwrap();
    let r = caccioppoli_sides(&pb, &field, &level(0.9, Sign::Plus), &space_time(0.5), Variant::Plain, &cyl).unwrap();
    assert!(terms(&r).iter().all(|t| *t == 0.0), "{r:?}");
    assert!(r.degenerate);
    assert!(r.gamma_observed.is_nan());
    assert_eq!(r.omega, 0.0);
}

#[test]
fn singular_variant_sees_the_mushy_region() {
    let (pb, field) = mushy_run();
    let x = field.interface_position(field.n_steps() - 1).unwrap();
    let cyl = IntrinsicCylinder::backward([x, 0.0], 0.1, 0.2, 1.0, 2.0).unwrap();
    let r = caccioppoli_sides(&pb, &field, &level(0.02, Sign::Minus), &space_time(0.5), Variant::Singular, &cyl).unwrap();
    assert!(r.lhs_singular_term > 0.0, "{r:?}");
    assert!(r.rhs_singular_term > 0.0, "{r:?}");
    // the plain form drops it
    let plain = caccioppoli_sides(&pb, &field, &level(0.02, Sign::Minus), &space_time(0.5), Variant::Plain, &cyl).unwrap();
    assert_eq!(plain.lhs_singular_term, 0.0);
}

#[test]
fn restricted_variants_reject_bad_levels_and_cutoffs() {
    let (pb, field) = mushy_run();
    let cyl = IntrinsicCylinder::backward([0.5, 0.0], 0.1, 0.2, 1.0, 2.0).unwrap();
    let cut = space_time(0.5);
    let bad = [
        (level(-0.1, Sign::Plus), Variant::SignRestricted),
        (level(0.1, Sign::Minus), Variant::SignRestricted),
        (level(0.1, Sign::Plus), Variant::Singular),
        (level(-0.01, Sign::Minus), Variant::Singular),
    ];
    for (lv, v) in bad {
        let e = caccioppoli_sides(&pb, &field, &lv, &cut, v, &cyl).unwrap_err();
        assert!(matches!(e, Error::InadmissibleLevel(_)), "{lv:?} {v:?}: {e}");
    }
    let space_only = Cutoff::new(CutoffKind::SpaceOnly, 0.5).unwrap();
    for v in [Variant::SignRestricted, Variant::Singular, Variant::Plain] {
        let e = caccioppoli_sides(&pb, &field, &level(0.0, Sign::Minus), &space_only, v, &cyl).unwrap_err();
        assert!(matches!(e, Error::InvalidArgument(_)), "{v:?}: {e}");
    }
    assert!(caccioppoli_sides(&pb, &field, &level(-0.3, Sign::Plus), &space_only, Variant::General, &cyl).is_ok());
    let far = IntrinsicCylinder::backward([5.0, 0.0], 0.1, 0.2, 1.0, 2.0).unwrap();
    let e = caccioppoli_sides(&pb, &field, &level(0.0, Sign::Plus), &cut, Variant::General, &far).unwrap_err();
    assert!(matches!(e, Error::EmptyCylinder { .. }), "{e}");
}

#[test]
fn every_term_is_non_negative() {
    let (pb, field) = mushy_run();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let x = rng.gen_range(0.1..0.9);
        let r = rng.gen_range(0.05..0.3);
        let theta = rng.gen_range(0.5..2.0);
        let Ok(cyl) = IntrinsicCylinder::backward([x, 0.0], 0.1, r, theta, 2.0) else { continue };
        let lv = level(rng.gen_range(-0.2..1.0), if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus });
        let kind = if rng.gen_bool(0.5) { CutoffKind::SpaceOnly } else { CutoffKind::SpaceTime };
        let cut = Cutoff::new(kind, rng.gen_range(0.2..0.8)).unwrap();
        let rep = caccioppoli_sides(&pb, &field, &lv, &cut, Variant::General, &cyl).unwrap();
        assert!(terms(&rep).iter().all(|t| *t >= 0.0), "{rep:?}");
        assert!(rep.mu_minus <= rep.mu_plus);
    }
}

#[test]
fn empty_truncation_gives_zeros() {
    let (pb, field) = mushy_run();
    let cyl = IntrinsicCylinder::backward([0.5, 0.0], 0.1, 0.2, 1.0, 2.0).unwrap();
    let above = field.max_abs_u() + 1.0;
    for v in [Variant::General, Variant::SignRestricted, Variant::Plain] {
        let r = caccioppoli_sides(&pb, &field, &level(above, Sign::Plus), &space_time(0.5), v, &cyl).unwrap();
        assert!(terms(&r).iter().all(|t| *t == 0.0), "{v:?}: {r:?}");
        assert!(r.degenerate);
    }
}

#[test]
fn neumann_sides_carry_the_flux_bound() {
    let make = |psi: f64, c2: f64| {
        Problem::new(
            unit_interval(64),
            FluxModel::with_default_floor(2.0, 1.0).unwrap(),
            BoundaryData::neumann(
                DataFunction::Constant { value: psi },
                c2,
                DataFunction::LinearRamp { value: 0.2, gradient: [-0.5, 0.0], origin: [0.0, 0.0], rate: 0.0 },
            ),
            RegularizedEnthalpy::new(1.0, 0.05).unwrap(),
        )
        .unwrap()
    };
    let cyl = IntrinsicCylinder::backward([0.1, 0.0], 0.1, 0.2, 1.0, 2.0).unwrap();
    let lv = level(0.0, Sign::Plus);
    let cfg = SolverConfig { dt: 5e-3, ..SolverConfig::default() };

    let quiet = make(0.0, 0.0);
    let f = quiet.solve(&cfg, 0.1).unwrap();
    let r = neumann_energy_sides(&quiet, &f, &lv, &space_time(0.5), &cyl).unwrap();
    assert_eq!(r.rhs_c2_term, 0.0);
    assert!(r.lhs_total > 0.0);

    let loud = make(0.5, 0.5);
    let f = loud.solve(&cfg, 0.1).unwrap();
    let r = neumann_energy_sides(&loud, &f, &lv, &space_time(0.5), &cyl).unwrap();
    assert!(r.rhs_c2_term > 0.0);

    let (pb, field) = mushy_run();
    let e = neumann_energy_sides(&pb, &field, &lv, &space_time(0.5), &cyl).unwrap_err();
    assert!(matches!(e, Error::InvalidArgument(_)), "{e}");
    let p3 = dirichlet(3.0, 0.05, DataFunction::Constant { value: 0.0 }, DataFunction::Constant { value: 0.0 });
    let e = neumann_energy_sides(&p3, &field, &lv, &space_time(0.5), &cyl).unwrap_err();
    assert!(matches!(e, Error::WrongP(p) if p == 3.0), "{e}");
}

#[test]
fn latent_heat_term_vanishes_with_eps() {
    // a fixed profile crossing zero, read through enthalpies of shrinking width
    let grid = unit_interval(256);
    let mut field = SpaceTimeField::new(grid.clone());
    for n in 0..=20 {
        let u: Vec<f64> = (0..grid.len()).map(|c| grid.center(c)[0] - 0.5).collect();
        field.push(n as f64 * 0.01, u.clone(), u);
    }
    let cyl = IntrinsicCylinder::backward([0.5, 0.0], 0.2, 0.25, 1.0, 2.0).unwrap();
    let mut prev = f64::INFINITY;
    for eps in [0.2, 0.1, 0.05, 0.025, 0.0125] {
        let pb = dirichlet(2.0, eps, DataFunction::Constant { value: 0.0 }, DataFunction::Constant { value: 0.0 });
        let phi = phi_term(&field, &pb, &level(0.0, Sign::Plus), &space_time(0.5), &cyl).unwrap();
        // Ψ_0 ≤ ν ε, and the cube has length 2r
        assert!(phi.top <= eps * 0.5 + 1e-12, "eps {eps}: {phi:?}");
        assert!(phi.top < prev);
        assert!(phi.top > 0.0 && phi.interior >= 0.0 && phi.bottom >= 0.0);
        prev = phi.top;
    }
    // levels outside the band see nothing
    let pb = dirichlet(2.0, 0.01, DataFunction::Constant { value: 0.0 }, DataFunction::Constant { value: 0.0 });
    let phi = phi_term(&field, &pb, &level(0.1, Sign::Plus), &space_time(0.5), &cyl).unwrap();
    assert_eq!((phi.interior, phi.top, phi.bottom), (0.0, 0.0, 0.0));
}
