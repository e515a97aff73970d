use proptest::prelude::*;

use zdeform::config::{config_to_string, parse_config};
use zdeform::deformation::{
    analyze, imposed_pair_dominates, imposed_residuals, invmap, map, select_dominant, tune,
};
use zdeform::experiments::run_table1;
use zdeform::grid::{generate, linspace, GridSpec};
use zdeform::oracle::{build_state_model, simulate};
use zdeform::output::format_sig;
use zdeform::poly::{companion_matrix, solve_complex_linear};
use zdeform::reference::{params_from_pole_pair, params_from_real_poles, poles_of};
use zdeform::{
    CharacteristicForm, Complex64, ContinuousParams, ContinuousPoles, DampingVariant, DiscreteParams,
    PhysicalUnits, Polynomial,
};

const NYQUIST_CAP: f64 = 0.95 * std::f64::consts::PI;

fn forms() -> Vec<CharacteristicForm> {
    vec![
        CharacteristicForm::no_delay(),
        CharacteristicForm::unit_delay(),
        CharacteristicForm::real_damping(0.5, DampingVariant::Reconstructed).unwrap(),
        CharacteristicForm::real_damping(0.5, DampingVariant::AsPrinted).unwrap(),
    ]
}

fn form_strategy() -> impl Strategy<Value = CharacteristicForm> {
    (0..4usize, 0.05..2.0f64).prop_map(|(i, b0)| match i {
        0 => CharacteristicForm::no_delay(),
        1 => CharacteristicForm::unit_delay(),
        2 => CharacteristicForm::real_damping(b0, DampingVariant::Reconstructed).unwrap(),
        _ => CharacteristicForm::real_damping(b0, DampingVariant::AsPrinted).unwrap(),
    })
}

fn poly_strategy() -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-5.0..5.0f64, 1..7), 0.5..3.0f64, prop::bool::ANY).prop_map(|(mut c, lead, neg)| {
        c.push(if neg { -lead } else { lead });
        c
    })
}

/// Characteristic polynomial coefficients of `a`, lowest degree first, monic.
fn faddeev_leverrier(a: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    let eye = nalgebra::DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        m = a * &m + &eye * coeffs[n + 1 - k];
        let am = a * &m;
        coeffs[n - k] = -am.trace() / k as f64;
    }
    coeffs
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn roots_are_roots_and_closed_under_conjugation(c in poly_strategy()) {
        let p = Polynomial::new(c.clone());
        let roots = p.roots().unwrap();
        prop_assert_eq!(roots.len(), c.len() - 1);
        for z in &roots {
            let scale: f64 = c.iter().enumerate().map(|(i, a)| a.abs() * z.norm().powi(i as i32)).sum();
            prop_assert!(p.eval(*z).norm() <= 1e-9 * scale.max(1.0), "{z} residual {}", p.eval(*z).norm());
            let mirror = roots.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(mirror <= 1e-6 * z.norm().max(1.0), "{z} has no conjugate");
        }
    }

    #[test]
    fn complex_solve_has_zero_residual(
        a in (-3.0..3.0f64, -3.0..3.0f64),
        b in (-3.0..3.0f64, -3.0..3.0f64),
        c in (-3.0..3.0f64, -3.0..3.0f64),
    ) {
        let (a, b, c) = (Complex64::new(a.0, a.1), Complex64::new(b.0, b.1), Complex64::new(c.0, c.1));
        prop_assume!((a.re * b.im - a.im * b.re).abs() > 1e-3);
        let (x, y) = solve_complex_linear(a, b, c).unwrap();
        let res = a * x + b * y + c;
        prop_assert!(res.norm() <= 1e-12 * (1.0 + x.abs() + y.abs()) * 10.0);
    }

    #[test]
    fn poles_invert_to_parameters(k in 0.0..10.0f64, b in -4.0..6.0f64) {
        let c = ContinuousParams::new(k, b);
        let back = match poles_of(c) {
            ContinuousPoles::Underdamped { re, im } => params_from_pole_pair(Complex64::new(re, im)),
            ContinuousPoles::Critical(s) => params_from_pole_pair(Complex64::new(s, 0.0)),
            ContinuousPoles::Overdamped(s1, s2) => params_from_real_poles(s1, s2),
        };
        let tol = 1e-12 * (1.0 + k.abs() + b * b);
        prop_assert!((back.k - k).abs() <= tol && (back.b - b).abs() <= tol, "{back:?}");
    }

    #[test]
    fn invmap_places_imposed_roots(f in form_strategy(), theta in 0.01..NYQUIST_CAP, b in -0.5..2.0f64) {
        let c = ContinuousParams::new(theta * theta + b * b / 4.0, b);
        let d = invmap(&f, c).unwrap();
        let res = imposed_residuals(&f, c, d).unwrap();
        prop_assert!(res[0] <= 1e-11 && res[1] <= 1e-11, "{res:?}");
        if imposed_pair_dominates(&f, c, d).unwrap() {
            let (back, _) = map(&f, d).unwrap();
            let rel = (back.k - c.k).hypot(back.b - c.b) / c.k.hypot(c.b);
            prop_assert!(rel <= 1e-9, "{c:?} -> {d:?} -> {back:?}");
        }
    }

    #[test]
    fn overdamped_targets_round_trip(f in form_strategy(), s1 in -2.0..-0.05f64, gap in 0.05..2.0f64) {
        let s2 = s1 - gap;
        let c = params_from_real_poles(s1, s2);
        let d = invmap(&f, c).unwrap();
        let res = imposed_residuals(&f, c, d).unwrap();
        prop_assert!(res[0] <= 1e-11 && res[1] <= 1e-11, "{res:?}");
        if imposed_pair_dominates(&f, c, d).unwrap() {
            let (back, _) = map(&f, d).unwrap();
            let rel = (back.k - c.k).hypot(back.b - c.b) / c.k.hypot(c.b);
            prop_assert!(rel <= 1e-8, "{c:?} -> {back:?}");
        }
    }

    #[test]
    fn companion_reproduces_polynomial(f in form_strategy(), big_k in -1.0..4.0f64, big_b in -1.0..2.0f64) {
        let poly = f.assemble(DiscreteParams::new(big_k, big_b));
        let lead = poly.leading().unwrap();
        let monic: Vec<f64> = poly.coeffs().iter().map(|c| c / lead).collect();
        let charpoly = faddeev_leverrier(&companion_matrix(&poly));
        let scale = monic.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        for (a, b) in charpoly.iter().zip(&monic) {
            prop_assert!((a - b).abs() <= 1e-12 * scale, "{charpoly:?} vs {monic:?}");
        }
    }

    #[test]
    fn simulation_obeys_recurrence(f in form_strategy(), big_k in 0.0..1.0f64, big_b in 0.0..1.0f64) {
        let d = DiscreteParams::new(big_k, big_b);
        let poly = f.assemble(d);
        let n = poly.degree().unwrap();
        let lead = poly.leading().unwrap();
        let tr = simulate(&build_state_model(&f, d).unwrap(), 40).unwrap();
        let x = &tr.samples;
        for t in 0..x.len() - n {
            let s: f64 = (0..=n).map(|i| poly.coeffs()[i] / lead * x[t + i]).sum();
            let scale = x[t..=t + n].iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            prop_assert!(s.abs() <= 1e-12 * scale * 10.0, "t={t}: {s}");
        }
    }

    #[test]
    fn dominant_selection_is_permutation_invariant(
        re in -1.5..1.5f64, im in 0.01..1.5f64, r in -1.5..1.5f64, seed in 0..6usize,
    ) {
        let mut roots = vec![Complex64::new(re, im), Complex64::new(re, -im), Complex64::new(r, 0.0)];
        roots.rotate_left(seed % 3);
        if seed >= 3 { roots.reverse(); }
        let a = select_dominant(&roots);
        let b = select_dominant(&[Complex64::new(re, im), Complex64::new(re, -im), Complex64::new(r, 0.0)]);
        prop_assert_eq!(a.dominant, b.dominant);
        prop_assert_eq!(a.stable, b.stable);
    }

    #[test]
    fn tuned_stiffness_maps_back(k in 0.001..9.5f64) {
        let big_k = tune(k, PhysicalUnits::default()).unwrap();
        let (c, _) = map(&CharacteristicForm::no_delay(), DiscreteParams::new(big_k, 0.0)).unwrap();
        prop_assert!((c.k - k).abs() <= 1e-10 * k.max(1.0) && c.b.abs() <= 1e-10);
    }

    #[test]
    fn tuning_is_unit_consistent(k in 1.0..1e4f64, m in 0.01..10.0f64, t in 1e-4..1e-2f64) {
        let u = PhysicalUnits::new(m, t).unwrap();
        prop_assume!(t * (k / m).sqrt() < std::f64::consts::PI);
        let physical = tune(k, u).unwrap();
        let normalized = tune(u.normalize_stiffness(k), PhysicalUnits::default()).unwrap();
        prop_assert!((u.normalize_stiffness(physical) - normalized).abs() <= 1e-12 * normalized.max(1e-300) + 1e-15);
    }

    #[test]
    fn virtual_assembly_is_stiffer(k in 1e-3..2.4f64) {
        let r = run_table1(k, PhysicalUnits::default()).unwrap();
        prop_assert!((r.omega_i - r.omega_ii).abs() <= 1e-12);
        prop_assert!(r.detuning_iv > 0.0);
        for w in [r.omega_i, r.omega_ii, r.omega_iii, r.omega_iv, r.omega_v] {
            prop_assert!(w > 0.0 && w < std::f64::consts::PI);
        }
    }

    #[test]
    fn config_text_round_trips_exactly(p in poly_strategy(), q in poly_strategy(), r in poly_strategy()) {
        let form = CharacteristicForm {
            name: "random".into(),
            p: Polynomial::new(p),
            q: Polynomial::new(q),
            r: Polynomial::new(r),
            ..CharacteristicForm::no_delay()
        };
        let back = parse_config(&config_to_string(&form)).unwrap();
        prop_assert_eq!(back.p, form.p);
        prop_assert_eq!(back.q, form.q);
        prop_assert_eq!(back.r, form.r);
    }

    #[test]
    fn nine_digit_formatting_is_faithful(x in prop::num::f64::NORMAL) {
        let back: f64 = format_sig(x, 9).parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-9 * x.abs(), "{x} -> {back}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grid_nodes_are_consistent(
        form in form_strategy(),
        k_lo in 0.02..0.5f64, k_hi in 0.6..3.0f64, nk in 2..6usize,
        b_lo in -0.2..0.3f64, b_hi in 0.4..1.2f64, nb in 2..6usize,
    ) {
        let mut spec = GridSpec::defaults(form.clone());
        spec.k_values = linspace(k_lo, k_hi, nk);
        spec.b_values = linspace(b_lo, b_hi, nb);
        spec.samples_per_curve = 16;
        let grid = generate(&spec).unwrap();
        prop_assert_eq!(grid.nodes.len(), nk);
        prop_assert!(grid.nodes.iter().all(|row| row.len() == nb));
        for node in grid.nodes.iter().flatten() {
            let (Some(big_k), Some(big_b)) = (node.stiffness, node.damping) else {
                prop_assert!(!node.representable && node.note.is_some());
                continue;
            };
            let d = DiscreteParams::new(big_k, big_b);
            prop_assert_eq!(node.stable, analyze(&form, d).unwrap().stable);
            if node.representable {
                let (c, _) = map(&form, d).unwrap();
                let rel = (c.k - node.k).hypot(c.b - node.b) / node.k.hypot(node.b);
                prop_assert!(rel <= 1e-9, "{node:?} -> {c:?}");
                prop_assert!(node.metrics.is_some());
            }
        }
        for curve in grid.iso_k.iter().chain(&grid.iso_b) {
            for v in curve.vertices() {
                let c = ContinuousParams::new(v.k, v.b);
                let res = imposed_residuals(&form, c, DiscreteParams::new(v.stiffness, v.damping)).unwrap();
                prop_assert!(res[0] <= 1e-11 && res[1] <= 1e-11);
            }
        }
        let thetas: Vec<f64> = grid.boundary.points.iter().map(|p| p.theta).collect();
        prop_assert!(thetas.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn builtin_forms_have_rigid_body_root() {
    for f in forms() {
        assert_rigid_body_root(&f);
    }
}

fn assert_rigid_body_root(f: &CharacteristicForm) {
    let rest = f.assemble(DiscreteParams::new(0.0, 0.0));
    assert!(rest.eval_real(1.0).abs() < 1e-12, "{}", f.name);
}
