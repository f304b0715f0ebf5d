use std::sync::Arc;

use chi_dlog::chi::{chi_reference, prepare_chi, ChiHandle, PrepMode};
use chi_dlog::dlog::{run_dlog, DlogMode};
use chi_dlog::qstate::{QState, RegisterLayout};
use chi_dlog::transforms::{qft_apply, DivisionPermutation};
use chi_dlog::{cyclic_group_of_order, validate_group, Direction, FourierPath, Fourier, GroupSpec, SimOptions, State};
use num_complex::Complex64;
use proptest::prelude::*;

fn random_state(layout: RegisterLayout, raw: &[(f64, f64)]) -> State {
    let mut amps: Vec<Complex64> = raw.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
    amps[0] += 1.0;
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    QState::from_amplitudes(layout, amps).unwrap()
}

fn group(m: u64) -> Arc<GroupSpec> {
    Arc::new(cyclic_group_of_order(m).unwrap())
}

fn amps(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
}

fn joint_state() -> impl Strategy<Value = (u64, State)> {
    (1u64..=10).prop_flat_map(|m| {
        let d = m as usize;
        amps(d * d).prop_map(move |raw| {
            let spec = group(m);
            let layout = DivisionPermutation::d_alpha(&spec, spec.exponent(0)).unwrap().layout().unwrap();
            (m, random_state(layout, &raw))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fourier_round_trip_preserves_state(m in 1usize..=40, seed in any::<u64>()) {
        let raw: Vec<(f64, f64)> = (0..m).map(|i| {
            let t = (seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)) as f64 / u64::MAX as f64;
            (t - 0.5, 0.25 - t * t)
        }).collect();
        let state = random_state(RegisterLayout::exponent(m).unwrap(), &raw);
        for path in [FourierPath::Dense, FourierPath::Fast] {
            let mut s = state.clone();
            qft_apply(&mut s, 0, Direction::Forward, path).unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            qft_apply(&mut s, 0, Direction::Inverse, path).unwrap();
            prop_assert!(s.max_deviation(&state).unwrap() < 1e-12);
        }
    }

    #[test]
    fn dense_and_fast_fourier_agree(raw in amps(30), m in 1usize..=30) {
        let state = random_state(RegisterLayout::exponent(m).unwrap(), &raw[..m]);
        let mut a = state.clone();
        let mut b = state;
        qft_apply(&mut a, 0, Direction::Forward, FourierPath::Dense).unwrap();
        qft_apply(&mut b, 0, Direction::Forward, FourierPath::Fast).unwrap();
        prop_assert!(a.max_deviation(&b).unwrap() < 1e-12);
    }

    #[test]
    fn division_operators_preserve_norm_and_compose((m, state) in joint_state(), a in 0i64..40, b in 0i64..40) {
        let spec = group(m);
        let da = DivisionPermutation::d_alpha(&spec, spec.exponent(a)).unwrap();
        let db = DivisionPermutation::d_alpha(&spec, spec.exponent(b)).unwrap();
        let dab = DivisionPermutation::d_alpha(&spec, spec.exponent(a + b)).unwrap();
        let mut s = state.clone();
        da.apply(&mut s).unwrap();
        db.apply(&mut s).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let mut t = state.clone();
        dab.apply(&mut t).unwrap();
        prop_assert!(s.max_deviation(&t).unwrap() < 1e-15);
        // D^a D^{-a} = I
        let inv = DivisionPermutation::d_alpha(&spec, spec.exponent(-a)).unwrap();
        let mut u = state.clone();
        da.apply(&mut u).unwrap();
        inv.apply(&mut u).unwrap();
        prop_assert!(u.max_deviation(&state).unwrap() < 1e-15);
    }

    #[test]
    fn fidelity_is_symmetric_and_phase_blind((m, s) in joint_state(), raw in amps(100), theta in 0.0..6.3f64) {
        let d = (m * m) as usize;
        let t = random_state(s.layout().clone(), &raw[..d]);
        let f1 = s.fidelity(&t).unwrap();
        let f2 = t.fidelity(&s).unwrap();
        prop_assert!((f1 - f2).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f1));
        let rotated = s.scaled(Complex64::from_polar(1.0, theta));
        prop_assert!((s.fidelity(&rotated).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measurement_marginal_sums_to_one((_m, s) in joint_state()) {
        for reg in 0..2 {
            let total: f64 = s.marginal_distribution(reg).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exhaustive_dlog_is_exact(m in 1u64..=30, r in 0u64..1000) {
        let spec = group(m);
        let mut chi = ChiHandle::<f64>::reference(&spec, spec.exponent(1)).unwrap();
        let x = spec.gen_pow(r % m);
        let out = run_dlog(&spec, &mut chi, x, DlogMode::Exhaustive, &SimOptions::default()).unwrap();
        prop_assert_eq!(out.measured_p.value(), r % m);
        prop_assert!(out.success_probability > 1.0 - 1e-9);
    }
}

#[test]
fn fourier_matrix_is_unitary_f32() {
    for m in [1usize, 2, 7, 16, 31] {
        let f = chi_dlog::transforms::FourierSpec::<f32>::new(m, Direction::Forward);
        assert!(f.matrix().unitarity_defect() < 1e-5, "m={m}");
    }
    let f = Fourier::new(97, Direction::Inverse);
    assert!(f.matrix().unitarity_defect() < 1e-12);
}

#[test]
fn repeated_sampled_runs_on_prepared_chi() {
    let spec = Arc::new(validate_group(13, 2, true).unwrap());
    let opts = SimOptions::default();
    let (mut chi, _) = prepare_chi::<f64>(&spec, PrepMode::Sampled { seed: 5 }, &opts).unwrap();
    for i in 0..100u64 {
        let r = i * 7 % 12;
        let out = run_dlog(&spec, &mut chi, spec.gen_pow(r), DlogMode::Sampled { seed: i }, &opts).unwrap();
        assert_eq!(out.measured_p.value(), r);
    }
    let reference = chi_reference::<f64>(&spec, 1).unwrap();
    assert!(chi.state().fidelity(&reference).unwrap() >= 1.0 - 1e-7);
}

#[test]
fn sampled_preparation_attempts_are_geometric() {
    // m = 10: phi = 4, so E[attempts] = 2.5
    let spec = group(10);
    let opts = SimOptions::default();
    let runs = 400;
    let total: usize = (0..runs)
        .map(|seed| prepare_chi::<f64>(&spec, PrepMode::Sampled { seed }, &opts).unwrap().1.attempts)
        .sum();
    let mean = total as f64 / runs as f64;
    let p = 0.4f64;
    let sigma = ((1.0 - p) / (p * p) / runs as f64).sqrt();
    assert!((mean - 2.5).abs() < 4.0 * sigma, "mean {mean}");
}

#[test]
fn table_groups_run_end_to_end() {
    // Z/9 under addition, written multiplicatively, generated by 2
    let labels: Vec<u64> = (0..9).collect();
    let spec = Arc::new(GroupSpec::from_table(&labels, 0, 2, |a, b| (a + b) % 9).unwrap());
    let opts = SimOptions::default();
    let (mut chi, stats) = prepare_chi::<f64>(&spec, PrepMode::Exhaustive, &opts).unwrap();
    assert!((stats.acceptance_probability.unwrap() - 6.0 / 9.0).abs() < 1e-9);
    assert!(chi.to_dump().starts_with("chi m=9 power=1 n=0 g=2\n"));
    for &x in spec.elements() {
        let out = run_dlog(&spec, &mut chi, x, DlogMode::Exhaustive, &opts).unwrap();
        // 2 p = x mod 9
        assert_eq!(out.measured_p.value() * 2 % 9, x.label());
    }
}

#[test]
fn f32_state_runs_within_loose_tolerance() {
    let spec = Arc::new(validate_group(11, 2, true).unwrap());
    let opts = SimOptions::default();
    let (mut chi, _) = prepare_chi::<f32>(&spec, PrepMode::Sampled { seed: 3 }, &opts).unwrap();
    for r in 0..10 {
        let out = run_dlog(&spec, &mut chi, spec.gen_pow(r), DlogMode::Exhaustive, &opts).unwrap();
        assert_eq!(out.measured_p.value(), r);
        assert!(out.success_probability > 1.0 - 1e-4);
    }
}
