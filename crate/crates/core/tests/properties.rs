use std::f64::consts::PI;

use blackstock::dynamics::{
    assemble_f, linear_acceleration, linearized_acceleration, nonlinear_acceleration,
};
use blackstock::energy::{energy_e, functionals, lyapunov_l};
use blackstock::inequality::{gronwall_verify, random_admissible, InequalityKind};
use blackstock::integrator::{simulate_with, SimulationOptions};
use blackstock::state::norm;
use blackstock::{
    GammaWeights, Grid, MediumParams, NormKind, Scheme, SimState, SpectralField, StepConfig,
    Stepper,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CASES: u32 = 48;

fn grid_1d() -> Grid {
    Grid::interval(PI, 8).unwrap()
}

fn grid_2d() -> Grid {
    Grid::new(vec![1.0, 2.5], vec![5, 6]).unwrap()
}

/// Coefficients that decay like `m^{-2}` so all norms stay moderate.
fn field(grid: Grid) -> impl Strategy<Value = SpectralField> {
    prop::collection::vec(-1.0..1.0f64, grid.len()).prop_map(move |mut c| {
        let modes = grid.modes();
        for (flat, x) in c.iter_mut().enumerate() {
            let (mut rest, mut size) = (flat, 1usize);
            for &n in modes.iter().rev() {
                size += (rest % n + 1) * (rest % n + 1);
                rest /= n;
            }
            *x /= size as f64;
        }
        SpectralField::from_vec(&grid, c).unwrap()
    })
}

fn state(grid: Grid) -> impl Strategy<Value = SimState> {
    (field(grid.clone()), field(grid)).prop_map(|(psi, v)| SimState::new(psi, v, 0.0).unwrap())
}

fn medium() -> impl Strategy<Value = MediumParams> {
    (0.2..3.0f64, 0.2..3.0f64, -2.0..2.0f64, -2.0..2.0f64)
        .prop_map(|(c, b, k, sigma)| MediumParams::new(c, b, k, sigma).unwrap())
}

fn linear_medium() -> impl Strategy<Value = MediumParams> {
    (0.2..3.0f64, 0.2..3.0f64).prop_map(|(c, b)| MediumParams::new(c, b, 0.0, 0.0).unwrap())
}

fn close(a: &SpectralField, b: &SpectralField, scale: f64) -> bool {
    a.max_abs_diff(b) <= 1e-11 * scale.max(1.0)
}

fn sup(f: &SpectralField) -> f64 {
    f.coeffs().iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn transform_round_trip(u in field(grid_2d())) {
        let g = u.grid().clone();
        let back = g.to_spectral(&g.to_physical(&u)).unwrap();
        prop_assert!(back.max_abs_diff(&u) <= 1e-12 * sup(&u).max(1e-300));
    }

    #[test]
    fn parseval(u in field(grid_2d())) {
        let g = u.grid().clone();
        let weight: f64 = g.extents().iter().zip(g.modes()).map(|(l, n)| l / (n + 1) as f64).product();
        let quad: f64 = g.to_physical(&u).iter().map(|x| x * x).sum::<f64>() * weight;
        prop_assert!((quad - u.dot(&u)).abs() <= 1e-12 * quad.max(1e-300));
    }

    #[test]
    fn product_is_bilinear_and_symmetric(
        a in field(grid_1d()), b in field(grid_1d()), c in field(grid_1d()), s in -3.0..3.0f64,
    ) {
        let g = grid_1d();
        let prod = |x: &SpectralField, y: &SpectralField| {
            g.dealiased_product(&g.padded(x), &g.padded(y)).unwrap()
        };
        let ab = prod(&a, &b);
        prop_assert!(close(&ab, &prod(&b, &a), 0.0));
        let lhs = prod(&a.plus_scaled(s, &c).unwrap(), &b);
        let rhs = ab.plus_scaled(s, &prod(&c, &b)).unwrap();
        prop_assert!(close(&lhs, &rhs, sup(&rhs)));
    }

    #[test]
    fn norms_are_homogeneous(u in field(grid_2d()), s in -5.0..5.0f64) {
        for kind in [NormKind::L2, NormKind::H1Semi, NormKind::H2Lap, NormKind::Linf, NormKind::L3, NormKind::L4] {
            let (a, b) = (norm(&u.scaled(s), kind), s.abs() * norm(&u, kind));
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300), "{kind:?}: {a} vs {b}");
        }
    }

    #[test]
    fn triangle_inequality(u in field(grid_2d()), w in field(grid_2d())) {
        let sum = u.plus_scaled(1.0, &w).unwrap();
        for kind in [NormKind::L2, NormKind::H1Semi, NormKind::H2Lap] {
            prop_assert!(norm(&sum, kind) <= (norm(&u, kind) + norm(&w, kind)) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn poincare(u in field(grid_2d())) {
        let g = u.grid().clone();
        let bound = norm(&u, NormKind::H1Semi) / g.lambda_min().abs().sqrt();
        prop_assert!(norm(&u, NormKind::L2) <= bound * (1.0 + 1e-14));
    }

    #[test]
    fn acceleration_decomposes(s in state(grid_2d()), p in medium()) {
        let full = nonlinear_acceleration(&s, &p).unwrap();
        let parts = linear_acceleration(&s, &p).plus_scaled(1.0, &assemble_f(&s, &p).unwrap()).unwrap();
        prop_assert!(close(&full, &parts, sup(&full)));
    }

    #[test]
    fn linearization_at_velocity_is_exact(s in state(grid_2d()), p in medium()) {
        let zero = SpectralField::zeros(s.grid());
        let lin = linearized_acceleration(&s, &s.v, &zero, &p).unwrap();
        let full = nonlinear_acceleration(&s, &p).unwrap();
        prop_assert!(close(&lin, &full, sup(&full)));
    }

    #[test]
    fn linear_acceleration_is_linear(
        a in state(grid_2d()), b in state(grid_2d()), s in -3.0..3.0f64, p in linear_medium(),
    ) {
        let combo = SimState::new(
            a.psi.plus_scaled(s, &b.psi).unwrap(),
            a.v.plus_scaled(s, &b.v).unwrap(),
            0.0,
        )
        .unwrap();
        let lhs = nonlinear_acceleration(&combo, &p).unwrap();
        let rhs = nonlinear_acceleration(&a, &p).unwrap()
            .plus_scaled(s, &nonlinear_acceleration(&b, &p).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, sup(&rhs)));
    }

    #[test]
    fn source_is_quadratic(s in state(grid_1d()), p in medium(), scale in -4.0..4.0f64) {
        let f = assemble_f(&s, &p).unwrap();
        let scaled = assemble_f(&s.scaled(scale), &p).unwrap();
        prop_assert!(close(&scaled, &f.scaled(scale * scale), sup(&scaled)));
    }

    #[test]
    fn energy_decomposes(s in state(grid_2d()), p in medium()) {
        let f = functionals(&s, &p);
        let e = f.e1 + f.e2 + s.v.grad_dot(&s.v);
        prop_assert!((energy_e(&s, &p) - e).abs() <= 1e-13 * e.max(1e-300));
        prop_assert!((lyapunov_l(&s, &p, &GammaWeights::zero()) - f.e1).abs() <= 1e-15 * f.e1.max(1e-300));
    }

    #[test]
    fn lyapunov_is_linear_in_weights(s in state(grid_1d()), p in medium(), g1 in 0.01..1.0f64, g2 in 0.01..1.0f64, g3 in 0.01..1.0f64) {
        let f = functionals(&s, &p);
        let g = GammaWeights::new(g1, g2, g3).unwrap();
        let expected = f.e1 + g1 * f.e2 + g2 * (f.f1 + f.f2) + g3 * f.f3;
        let l = lyapunov_l(&s, &p, &g);
        prop_assert!((l - expected).abs() <= 1e-12 * (f.e1 + f.e2 + f.f1.abs() + f.f2.abs() + f.f3.abs()));
    }

    #[test]
    fn ratios_are_scale_invariant(u in field(grid_1d()), s in prop_oneof![-50.0..-0.01f64, 0.01..50.0f64]) {
        prop_assume!(!u.is_zero());
        for kind in [InequalityKind::Agmon, InequalityKind::InterpolationL3, InequalityKind::InterpolationL4] {
            let (a, b) = (kind.ratio(&u).unwrap(), kind.ratio(&u.scaled(s)).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a, "{kind:?}: {a} vs {b}");
        }
    }

    #[test]
    fn zero_state_is_fixed_for_every_scheme(p in medium(), dt in 1e-4..0.5f64) {
        let zero = SimState::zeros(&grid_1d());
        for scheme in [Scheme::Imex1, Scheme::Imex2, Scheme::Picard] {
            let mut stepper = Stepper::new(StepConfig::new(dt, scheme).unwrap(), p).unwrap();
            let mut s = zero.clone();
            for _ in 0..3 {
                s = stepper.step(&s).unwrap();
            }
            prop_assert!(s.is_zero());
        }
    }

    #[test]
    fn linear_steps_never_grow_the_modal_energy(s in state(grid_1d()), p in linear_medium(), dt in 1e-4..10.0f64) {
        let lam = s.grid().eigenvalues().clone();
        let c2 = p.c * p.c;
        let modal = |x: &SimState| -> Vec<f64> {
            x.psi.coeffs().iter().zip(x.v.coeffs()).zip(&lam)
                .map(|((a, b), l)| b * b - c2 * l * a * a)
                .collect()
        };
        for scheme in [Scheme::Imex1, Scheme::Imex2, Scheme::Picard] {
            let mut stepper = Stepper::new(StepConfig::new(dt, scheme).unwrap(), p).unwrap();
            let mut cur = s.clone();
            for _ in 0..4 {
                let next = stepper.step(&cur).unwrap();
                for (before, after) in modal(&cur).iter().zip(modal(&next)) {
                    prop_assert!(after <= before * (1.0 + 1e-12) + 1e-300, "{scheme}: {after} > {before}");
                }
                cur = next;
            }
        }
    }

    #[test]
    fn dissipation_integral_is_nondecreasing(s in state(grid_1d()), p in medium()) {
        let small = s.scaled(0.05);
        let step = StepConfig::new(1e-2, Scheme::Imex2).unwrap();
        let series = simulate_with(&small, 1.0, &step, &p, &SimulationOptions::every(5)).unwrap();
        for w in series.samples.windows(2) {
            prop_assert!(w[1].d_cum >= w[0].d_cum);
        }
    }

    #[test]
    fn gronwall_corrected_bound_holds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_admissible(&mut rng);
        prop_assert!(g.admissible());
        let check = gronwall_verify(&g, 5.0, 1e-3, usize::MAX).unwrap();
        prop_assert!(check.ok_corrected, "{g:?}: growth {}", check.max_growth);
    }
}
