use num_complex::Complex64 as C64;
use proptest::prelude::*;

use rpca::automaton::{
    PhasedConfig, SiteConfig, decompose_orbits, micro_step_config, micro_step_config_inverse, single_orbit_eigenstate,
    trajectory,
};
use rpca::blocks::{build_block, diagonalize_block, eigenstate_field, energy_distribution};
use rpca::coarse::{
    Basis, coarse_in_momentum, coarse_momentum_fourier, coarse_position, coarse_position_fourier, density_from_field,
};
use rpca::linalg::unitarity_defect;
use rpca::model::{Eta, ModelSpec, generate_pattern};
use rpca::spectral::{
    TransitionSeries, coarse_momentum_distribution, delta_kernel, energy_stats_forward, to_momentum, to_position,
};
use rpca::wave::{DiracParams, WaveField, dirac_step, evolve, meso_evolve, plane_wave};

fn eta() -> impl Strategy<Value = Eta> {
    prop_oneof![Just(Eta::PlusOne), Just(Eta::MinusI)]
}

/// Small periodic models: `N̄_x ≤ 4`, `M_x ∈ {2, 4, 8}`, `M_t ≤ 5`.
fn small_model() -> impl Strategy<Value = ModelSpec> {
    (1usize..=4, prop_oneof![Just(2usize), Just(4), Just(8)], 1usize..=5, eta(), any::<u64>())
        .prop_flat_map(|(nb, mx, mt, eta, seed)| (Just((nb, mx, mt, eta, seed)), 0..=mx * mt))
        .prop_map(|((nb, mx, mt, eta, seed), n_tot)| {
            ModelSpec::new(nb * mx, mx, mt, eta, generate_pattern(mx, mt, n_tot, seed).unwrap(), "prop").unwrap()
        })
}

fn field(n: usize) -> impl Strategy<Value = WaveField> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * n).prop_filter_map("zero field", move |v| {
        let z: Vec<C64> = v.into_iter().map(|(a, b)| C64::new(a, b)).collect();
        WaveField::new(z[..n].to_vec(), z[n..].to_vec(), 0).ok()?.normalized().ok()
    })
}

fn model_and_field() -> impl Strategy<Value = (ModelSpec, WaveField)> {
    small_model().prop_flat_map(|spec| {
        let n = spec.n_sites();
        (Just(spec), field(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn patterns_distinct_and_in_range(mx in 1usize..20, mt in 1usize..20, frac in 0.0f64..=1.0, seed: u64) {
        let n_tot = ((mx * mt) as f64 * frac) as usize;
        let p = generate_pattern(mx, mt, n_tot, seed).unwrap();
        prop_assert_eq!(p.n_tot(), n_tot);
        let mut pts = p.points().to_vec();
        prop_assert!(pts.iter().all(|&(t, x)| t < mt && x < mx));
        pts.dedup();
        prop_assert_eq!(pts.len(), n_tot);
        prop_assert_eq!(p, generate_pattern(mx, mt, n_tot, seed).unwrap());
    }

    #[test]
    fn json_round_trip(spec in small_model()) {
        let back = ModelSpec::from_json(&spec.to_json()).unwrap();
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(back.to_json(), spec.to_json());
    }

    #[test]
    fn micro_step_is_a_bijection(spec in small_model(), t in 0u64..40) {
        let n = spec.n_sites();
        let mut hit = vec![false; 2 * n];
        for i in 0..2 * n {
            let c = PhasedConfig::new(SiteConfig::from_index(i), rpca::automaton::Phase::ONE);
            let d = micro_step_config(&spec, t, c);
            prop_assert!(!hit[d.config.index()]);
            hit[d.config.index()] = true;
            prop_assert_eq!(micro_step_config_inverse(&spec, t, d), c);
        }
    }

    #[test]
    fn orbits_partition_configurations(spec in small_model()) {
        let orbits = decompose_orbits(&spec);
        prop_assert_eq!(orbits.total_length(), 2 * spec.n_sites());
        let mut seen = vec![0u8; 2 * spec.n_sites()];
        for (id, o) in orbits.orbits.iter().enumerate() {
            for (j, m) in o.members.iter().enumerate() {
                seen[m.index()] += 1;
                prop_assert_eq!(orbits.locate(*m), (id, j));
            }
            if spec.eta() == Eta::PlusOne {
                prop_assert_eq!(o.net_phase.power(), 0);
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn sharp_states_follow_trajectories(spec in small_model(), start in 0usize..64, steps in 1u64..60) {
        let n = spec.n_sites();
        let c0 = SiteConfig::from_index(start % (2 * n));
        let mut f = WaveField::zeros(n);
        match c0.alpha.index() {
            0 => f.right_mut()[c0.x] = C64::new(1.0, 0.0),
            _ => f.left_mut()[c0.x] = C64::new(1.0, 0.0),
        }
        for c in trajectory(&spec, c0, steps) {
            evolve(&spec, &mut f, 1);
            prop_assert_eq!(f.get(c.x, c.alpha.index()).norm_sqr(), 1.0);
        }
    }

    #[test]
    fn single_orbit_states_are_eigenvectors(spec in small_model(), pick in 0usize..1000, k in -50i64..50) {
        let orbits = decompose_orbits(&spec);
        let m = pick % orbits.orbits.len();
        let n_m = orbits.orbits[m].len() as i64;
        let k = k.rem_euclid(n_m) - (n_m - 1) / 2;
        let (e, energy) = single_orbit_eigenstate(&orbits, m, k).unwrap();
        let phase = C64::from_polar(1.0, -energy * spec.m_t() as f64);
        let mut f = e;
        for _ in 0..8 {
            let mut expect = f.clone();
            expect.scale(phase);
            meso_evolve(&spec, &mut f, 1);
            prop_assert!(f.max_diff(&expect) <= 1e-12);
        }
    }

    #[test]
    fn evolution_is_linear_and_norm_preserving((spec, f) in model_and_field(), seed in 0u64..1000, steps in 0u64..300) {
        let g = WaveField::from_fn(spec.n_sites(), |x| {
            let a = ((x as u64 * 31 + seed) % 17) as f64 - 8.0;
            (C64::new(a, 1.0), C64::new(-1.0, a))
        });
        let (a, b) = (C64::new(0.3, -1.2), C64::new(-0.7, 0.4));
        let mut combo = f.clone();
        combo.scale(a);
        combo.add_scaled(b, &g);
        let (mut ef, mut eg) = (f.clone(), g.clone());
        evolve(&spec, &mut ef, steps);
        evolve(&spec, &mut eg, steps);
        evolve(&spec, &mut combo, steps);
        let mut expect = ef.clone();
        expect.scale(a);
        expect.add_scaled(b, &eg);
        prop_assert!(combo.max_diff(&expect) <= 1e-12);
        prop_assert!((ef.norm_sqr() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn dirac_step_unitary_and_real(n in 2usize..40, mass in 0.0f64..1.5, seed in 0u64..100) {
        let params = DiracParams::new(mass, false).unwrap();
        let mut f = WaveField::from_fn(n, |x| {
            let v = ((x as u64 * 7 + seed) % 11) as f64;
            (C64::new(v, 0.0), C64::new(1.0 - v, 0.0))
        }).normalized().unwrap();
        for _ in 0..30 {
            dirac_step(&params, &mut f);
        }
        prop_assert!((f.norm_sqr() - 1.0).abs() <= 1e-12);
        prop_assert!(f.right().iter().chain(f.left()).all(|z| z.im == 0.0));
    }

    #[test]
    fn fourier_parseval_and_round_trip(f in (1usize..70).prop_flat_map(field)) {
        let m = to_momentum(&f);
        prop_assert!((m.norm_sqr() - f.norm_sqr()).abs() <= 1e-12);
        prop_assert!(to_position(&m, 0).max_diff(&f) <= 1e-12);
    }

    #[test]
    fn coarse_momentum_is_conserved((spec, f) in model_and_field(), meso in 1u64..20) {
        let w0 = coarse_momentum_distribution(&f, &spec);
        let mut g = f;
        meso_evolve(&spec, &mut g, meso);
        let w = coarse_momentum_distribution(&g, &spec);
        for (a, b) in w.iter().zip(&w0) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn kernel_bounds(n_half in 0i64..40, dt in 1.0f64..20.0, omega in -3.0f64..3.0, energy in -3.0f64..3.0) {
        let series = TransitionSeries {
            offsets: (-n_half..=n_half).collect(),
            values: vec![C64::new(0.0, 0.0); (2 * n_half + 1) as usize],
            dt,
        };
        prop_assert_eq!(delta_kernel(energy, energy, &series), C64::new(1.0, 0.0));
        let d = delta_kernel(omega, energy, &series);
        prop_assert!(d.norm() <= 1.0 + 1e-12);
        prop_assert!(d.im.abs() <= 1e-12);
    }

    #[test]
    fn energy_moments_are_time_invariant((spec, f) in model_and_field(), meso in 1u64..12) {
        let s0 = energy_stats_forward(&spec, &f).unwrap();
        let mut g = f;
        meso_evolve(&spec, &mut g, meso);
        let s1 = energy_stats_forward(&spec, &g).unwrap();
        prop_assert!((s0.h_tilde_mean - s1.h_tilde_mean).abs() <= 1e-10);
        prop_assert!(s0.variance >= -1e-10);
    }

    #[test]
    fn coarse_graining_preserves_trace_and_hermiticity((spec, f) in model_and_field()) {
        let rho = density_from_field(&f, Basis::Position).unwrap();
        prop_assert!(rho.purity_defect() <= 1e-10);
        let bar = coarse_position(&rho, &spec).unwrap();
        let bar_q = coarse_momentum_fourier(&bar).unwrap();
        let hat = coarse_in_momentum(&density_from_field(&f, Basis::Momentum).unwrap(), &spec).unwrap();
        for cd in [&bar, &bar_q, &hat] {
            prop_assert!((cd.trace() - C64::new(1.0, 0.0)).norm() <= 1e-12);
            prop_assert!(cd.hermiticity_defect() <= 1e-12);
        }
        let back = coarse_position_fourier(&bar_q).unwrap();
        prop_assert!((&back.data - &bar.data).iter().map(|z| z.norm()).fold(0.0, f64::max) <= 1e-12);
        for a in 0..2 {
            for q in 0..spec.n_coarse() {
                prop_assert!((bar_q.get(a, q, a, q) - hat.get(a, q, a, q)).norm() <= 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn block_invariants(spec in small_model(), k_pick in 0i64..8) {
        let k_bar = k_pick % spec.n_coarse() as i64;
        let block = diagonalize_block(build_block(&spec, k_bar).unwrap()).unwrap();
        prop_assert!(unitarity_defect(&block.matrix) <= 1e-10);
        prop_assert!(block.leakage <= 1e-24, "leakage {}", block.leakage);
        let s = block.spectrum().unwrap();
        prop_assert_eq!(s.energies.len(), 2 * spec.m_x());
        let dt = spec.m_t() as f64;
        for (e, z) in s.energies.iter().zip(&s.eigenvalues) {
            prop_assert!((z.norm() - 1.0).abs() <= 1e-10);
            prop_assert!(*e > -std::f64::consts::PI / dt && *e <= std::f64::consts::PI / dt);
            prop_assert!((C64::from_polar(1.0, -e * dt) - z).norm() <= 1e-9);
        }
        prop_assert!(s.residual <= 1e-9);
    }

    #[test]
    fn block_eigenstates_evolve_by_phase(spec in small_model(), k_pick in 0i64..8, l_pick in 0usize..16) {
        let k_bar = k_pick % spec.n_coarse() as i64;
        let block = diagonalize_block(build_block(&spec, k_bar).unwrap()).unwrap();
        let lambda = l_pick % block.dim();
        let energy = block.spectrum().unwrap().energies[lambda];
        let psi = eigenstate_field(&block, lambda).unwrap();
        let phase = C64::from_polar(1.0, -energy * spec.m_t() as f64);
        let mut f = psi;
        for _ in 0..96 {
            let mut expect = f.clone();
            expect.scale(phase);
            meso_evolve(&spec, &mut f, 1);
            prop_assert!(f.max_diff(&expect) <= 1e-9);
        }
    }

    #[test]
    fn energy_distribution_is_conserved((spec, f) in model_and_field(), k_pick in 0i64..8, meso in 1u64..30) {
        let k_bar = k_pick % spec.n_coarse() as i64;
        let block = diagonalize_block(build_block(&spec, k_bar).unwrap()).unwrap();
        let d0 = energy_distribution(&block, &f).unwrap();
        let mut g = f;
        meso_evolve(&spec, &mut g, meso);
        let d1 = energy_distribution(&block, &g).unwrap();
        for (a, b) in d0.iter().zip(&d1) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}

#[test]
fn plane_wave_in_free_model_has_zero_variance() {
    let spec = ModelSpec::free(64, 8, 3, Eta::PlusOne).unwrap();
    let s = energy_stats_forward(&spec, &plane_wave(64, 3, 0.0)).unwrap();
    assert!(s.variance.abs() <= 1e-12);
}
