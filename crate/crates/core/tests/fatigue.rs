use microtensile::config::{bundled_config, BenchConfig, ProtocolConfig};
use microtensile::protocol::{fatigue_waveform, protocol_sweep, FatigueProtocol};
use microtensile::simulator::{
    goodman_equivalent_amplitude, run_fatigue, Bench, FatigueOptions, FatigueStatus, Stepping,
};
use proptest::prelude::*;

fn cu_bench() -> Bench {
    let cfg = BenchConfig::from_toml_str(bundled_config("cu-300nm-fatigue-d2.7").unwrap()).unwrap();
    cfg.bench(cfg.seed).unwrap()
}

fn life(bench: &Bench, p: &FatigueProtocol) -> u64 {
    let (o, _) = run_fatigue(bench, p, FatigueOptions { keep_record: false, ..Default::default() }).unwrap();
    match o.status {
        FatigueStatus::Failed(n) | FatigueStatus::Runout(n) => n,
    }
}

#[test]
fn life_falls_with_mean_and_amplitude() {
    let cfg = BenchConfig::from_toml_str(bundled_config("cu-300nm-trend-sweep").unwrap()).unwrap();
    let bench = cfg.bench(cfg.seed).unwrap();
    let ProtocolConfig::Sweep(sweep) = &cfg.protocol else {
        panic!("trend config is a sweep")
    };
    let plan = sweep.plan();
    assert!(plan.excluded.is_empty());
    let (nm, na) = (sweep.means.len(), sweep.amplitudes.len());
    let lives: Vec<u64> = plan.protocols.iter().map(|p| life(&bench, p)).collect();
    let at = |i: usize, j: usize| lives[i * na + j];
    for i in 0..nm {
        for j in 0..na {
            if i + 1 < nm {
                assert!(at(i + 1, j) <= at(i, j), "mean step at ({i},{j}): {lives:?}");
            }
            if j + 1 < na {
                assert!(at(i, j + 1) <= at(i, j), "amplitude step at ({i},{j}): {lives:?}");
            }
        }
    }
}

#[test]
fn miner_sum_at_failure_is_bracketed() {
    let bench = cu_bench();
    let plan = protocol_sweep(
        &[2.25e-6, 2.5e-6, 2.7e-6],
        &[0.36e-6, 0.5e-6],
        &FatigueProtocol::new(1e-6, 0.1e-6).unwrap(),
    );
    let mut failures = 0;
    for p in &plan.protocols {
        let (o, _) = run_fatigue(&bench, p, FatigueOptions::default()).unwrap();
        if let FatigueStatus::Failed(_) = o.status {
            failures += 1;
            assert!(o.damage >= 1.0, "{}", o.damage);
            assert!(o.damage <= 1.0 + o.last_cycle_damage * (1.0 + 1e-9), "{o:?}");
        }
    }
    assert!(failures >= 4);
}

#[test]
fn fatigue_runs_are_bit_identical() {
    let bench = cu_bench();
    let p = FatigueProtocol::from_half_amplitude(2.7e-6, 0.18e-6).unwrap();
    let a = run_fatigue(&bench, &p, FatigueOptions::default()).unwrap();
    let b = run_fatigue(&bench, &p, FatigueOptions::default()).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn goodman_without_mean_is_identity(a in 0.0..1e9f64, u in 1e6..1e10f64) {
        prop_assert_eq!(goodman_equivalent_amplitude(a, 0.0, u), Some(a));
    }

    #[test]
    fn shortcut_matches_cycle_by_cycle(d_um in 2.0..2.9f64, half_um in 0.2..0.5f64) {
        let mut bench = cu_bench();
        // a weaker film so that lives land within a few hundred cycles
        bench.material.fatigue_strength_coeff = 55e6;
        let p = FatigueProtocol {
            max_cycles: 300,
            samples_per_cycle: 16,
            ..FatigueProtocol::from_half_amplitude(d_um * 1e-6, half_um * 1e-6).unwrap()
        };
        let fast = FatigueOptions { stepping: Stepping::StabilizedShortcut, keep_record: false };
        let slow = FatigueOptions { stepping: Stepping::CycleByCycle, keep_record: false };
        let (a, _) = run_fatigue(&bench, &p, fast).unwrap();
        let (b, _) = run_fatigue(&bench, &p, slow).unwrap();
        prop_assert_eq!(a.status, b.status);
    }

    #[test]
    fn waveforms_are_tension_only_exact_and_continuous(
        d_um in 0.1..5.0f64,
        frac in 0.01..1.0f64,
        half_spc in 1usize..64,
        k in 0u64..1000,
    ) {
        let p = FatigueProtocol {
            samples_per_cycle: 2 * half_spc,
            ..FatigueProtocol::new(d_um * 1e-6, frac * 2.0 * d_um * 1e-6).unwrap()
        };
        let a = fatigue_waveform(&p, k).unwrap();
        let b = fatigue_waveform(&p, k + 1).unwrap();
        prop_assert!(a.iter().all(|w| w.u_act >= 0.0));
        prop_assert_eq!(a[0].u_act, p.trough());
        prop_assert_eq!(a[half_spc].u_act, p.peak());
        prop_assert_eq!(a.last().unwrap().u_act, b[0].u_act);
        prop_assert_eq!(a.last().unwrap().t, b[0].t);
    }
}

/// A 0.317% steady loop width cannot come out of this bench: a 0.36 um
/// peak-to-peak stroke over a 600 um gauge imposes at most 0.06% total
/// strain per cycle, and the film at 300 +/- 20 MPa stays elastic.
#[test]
#[ignore = "loop width 0.317% exceeds the 0.06% total strain range of a 0.36 um stroke on a 600 um gauge"]
fn steady_loop_width_at_300_mpa() {
    let bench = cu_bench();
    let p = FatigueProtocol::from_half_amplitude(2.7e-6, 0.18e-6).unwrap();
    let (o, _) = run_fatigue(&bench, &p, FatigueOptions::default()).unwrap();
    let width = o.steady_cycle_stats.delta_eps_pl;
    assert!((width / 0.00317 - 1.0).abs() < 0.1, "loop width {width}");
}
