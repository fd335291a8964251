use crate::bandit::{run_policy, GaussianArms, IidPolicy, PolicyConfig};
use crate::concentration::Alpha;
use crate::sim::{run_one, sweep, ExperimentConfig, PolicySpec};
use crate::unit::{GaussianUnits, UnitWorld, UnitWorldConfig};
use proptest::prelude::*;

fn iid_config(seed: u64, means: &str) -> ExperimentConfig {
    ExperimentConfig::parse(&format!("seed = {seed}\nmeans = {means}\nreplications = 1")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn run_one_is_a_function_of_its_inputs(seed in any::<u64>(), rep in 0u64..1000, idx in 0usize..8) {
        let cfg = iid_config(seed, "0, 1");
        for policy in &cfg.policies {
            let a = run_one(&cfg, policy, idx, rep).unwrap();
            let b = run_one(&cfg, policy, idx, rep).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn outcome_is_internally_consistent(seed in any::<u64>(), gap in 0.2f64..2.0) {
        let cfg = iid_config(seed, &format!("0, {gap}"));
        for policy in &cfg.policies {
            let o = run_one(&cfg, policy, 4, 0).unwrap();
            prop_assert!(o.decision_step.is_some() == o.chosen_arm.is_some());
            if let Some(t) = o.decision_step {
                prop_assert_eq!(t, o.steps);
                prop_assert!(t >= 2);
                prop_assert!(o.pseudo_regret >= 0.0 && o.pseudo_regret <= gap * t as f64);
                prop_assert_eq!(o.correct, o.chosen_arm == Some(1));
            }
        }
    }

    #[test]
    fn pulls_add_up_to_steps(seed in any::<u64>(), alpha in 1.01f64..50.0) {
        let mut policy = IidPolicy::new(PolicyConfig::ucb(Alpha::new(alpha).unwrap(), 1.0, 0.05)).unwrap();
        let mut arms = GaussianArms::new(&[0.0, 1.0], &[1.0, 1.0], &[seed, !seed]);
        let res = run_policy(&mut policy, &mut arms, 200_000, None).unwrap();
        prop_assert_eq!(res.pulls_per_arm.iter().sum::<u64>(), res.steps);
        let d = res.decision.unwrap();
        prop_assert_eq!(d.pulls_per_arm, res.pulls_per_arm);
    }

    #[test]
    fn unit_world_counts_units(seed in any::<u64>(), alpha in prop_oneof![Just(f64::INFINITY), 1.5f64..8.0]) {
        let cfg = UnitWorldConfig::ucb_mm(Alpha::new(alpha).unwrap(), [0.0, 1.0], 1.0, 1.0, 0.05);
        let src = GaussianUnits::new(&[0.0, 1.0], 1.0, 1.0, &[(seed, seed ^ 1), (seed ^ 2, seed ^ 3)]);
        let mut world = UnitWorld::new(cfg, src).unwrap();
        let d = world.run(None).unwrap().unwrap();
        prop_assert_eq!(d.total_units(), d.decision_step);
        let pops = world.populations();
        prop_assert_eq!([pops[0].num_units(), pops[1].num_units()], d.units);
        for p in pops {
            let expected: u64 = p.units().iter().map(|u| u.sample_count).sum();
            prop_assert_eq!(p.total_samples(), expected);
        }
    }
}

#[test]
fn etc_mm_rarely_stops_without_a_gap() {
    let delta = 0.1;
    let runs = 200;
    let stopped = (0..runs as u64)
        .filter(|&s| {
            let mut cfg = UnitWorldConfig::etc_mm([0.5, 0.5], 1.0, 1.0, delta);
            cfg.max_steps = 1000;
            let src = GaussianUnits::new(&[0.5, 0.5], 1.0, 1.0, &[(s, s + 7_000), (s + 14_000, s + 21_000)]);
            UnitWorld::new(cfg, src).unwrap().run(None).unwrap().is_some()
        })
        .count();
    let rate = stopped as f64 / runs as f64;
    let tol = delta + 3.0 * (delta * (1.0 - delta) / runs as f64).sqrt();
    assert!(rate <= tol, "false stops {rate}");
}

#[test]
fn common_random_numbers_do_not_shift_means() {
    let base = "seed = 5\nreplications = 400\nlog_inv_delta = 4, 8\npolicies = etc, ucb:2";
    let on = sweep(&ExperimentConfig::parse(&format!("{base}\ncrn = true")).unwrap(), None).unwrap();
    let off = sweep(&ExperimentConfig::parse(&format!("{base}\ncrn = false")).unwrap(), None).unwrap();
    for (a, b) in on.rows.iter().zip(&off.rows) {
        assert_eq!((&a.policy, a.log_inv_delta), (&b.policy, b.log_inv_delta));
        for (x, sx, y, sy) in [
            (a.mean_tau, a.se_tau, b.mean_tau, b.se_tau),
            (a.mean_regret, a.se_regret, b.mean_regret, b.se_regret),
        ] {
            let (x, sx, y, sy) = (x.unwrap(), sx.unwrap(), y.unwrap(), sy.unwrap());
            assert!((x - y).abs() <= 3.0 * (sx * sx + sy * sy).sqrt(), "{} {}: {x} vs {y}", a.policy, a.log_inv_delta);
        }
    }
}

#[test]
fn larger_alpha_decides_sooner_and_pays_more() {
    let cfg = ExperimentConfig::parse(
        "seed = 9\nreplications = 300\nlog_inv_delta = 6\npolicies = ucb:1.5, ucb:4, ucb:32",
    )
    .unwrap();
    let rows = sweep(&cfg, None).unwrap().rows;
    let tau: Vec<f64> = rows.iter().map(|r| r.mean_tau.unwrap()).collect();
    let regret: Vec<f64> = rows.iter().map(|r| r.mean_regret.unwrap()).collect();
    assert!(tau.windows(2).all(|w| w[1] < w[0]), "{tau:?}");
    assert!(regret.windows(2).all(|w| w[1] > w[0]), "{regret:?}");
}

#[test]
fn policy_strings_round_trip() {
    for s in ["etc", "ucb:1.5", "ucb:inf", "etc_prime", "etc_mm", "ucb_mm:2", "static_anytime", "static_fixed"] {
        let p: PolicySpec = s.parse().unwrap();
        assert_eq!(p.to_string().parse::<PolicySpec>().unwrap(), p);
    }
}
