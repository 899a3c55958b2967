use nsbandit::env::{preset_environment, EnvPreset};
use nsbandit::exact::{prob_suboptimal, ProbQuery};
use nsbandit::harness::{aggregate, RegretMode, RunTrajectory};
use nsbandit::hypergeometric::SeriesControl;
use nsbandit::policy::{DiscountedPosterior, DiscountedTs, Exp3Ix, Rexp3};
use nsbandit::rng::{sample_beta, BetaParams, RngStream};
use proptest::prelude::*;

fn step_strategy(k: usize) -> impl Strategy<Value = Vec<(usize, bool)>> {
    prop::collection::vec((0..k, any::<bool>()), 1..400)
}

proptest! {
    #[test]
    fn discounting_keeps_unplayed_means(gamma in 0.05f64..1.0, steps in step_strategy(3)) {
        let mut post = DiscountedPosterior::new(3, gamma, 1.0, 1.0).unwrap();
        let bound = 1.0 / (1.0 - gamma);
        for (arm, win) in steps {
            let before: Vec<_> = (0..3).map(|k| (post.evidence(k), post.evidence_mean(k), post.evidence_variance(k))).collect();
            post.update(arm, if win { 1.0 } else { 0.0 }).unwrap();
            for (k, (n, mean, var)) in before.into_iter().enumerate() {
                prop_assert!(post.evidence(k) <= gamma * n + 1.0 + 1e-12);
                prop_assert!(post.evidence(k) <= bound * (1.0 + 1e-12));
                prop_assert!(post.successes(k) >= 0.0 && post.failures(k) >= 0.0);
                if k == arm || mean.is_none() {
                    continue;
                }
                prop_assert_eq!(post.evidence_mean(k), mean);
                let (old, new) = (var.unwrap(), post.evidence_variance(k).unwrap());
                prop_assert!(new >= old);
                if old > 0.0 && n > 1e-8 {
                    prop_assert!(new > old, "variance {} -> {} at evidence {}", old, new, n);
                }
            }
        }
    }

    #[test]
    fn optimistic_scores_dominate_means(gamma in 0.1f64..=1.0, seed in any::<u64>(), steps in step_strategy(4)) {
        let post = DiscountedPosterior::new(4, gamma, 1.0, 1.0).unwrap();
        let mut policy = DiscountedTs::new(post, true);
        let mut rng = RngStream::new(seed);
        for (arm, win) in steps {
            policy.choose(&mut rng);
            for k in 0..4 {
                prop_assert!(policy.scores()[k] >= policy.posterior().mean(k));
            }
            policy.update(arm, if win { 1.0 } else { 0.0 }).unwrap();
        }
    }

    #[test]
    fn exponential_weights_stay_normalized(seed in any::<u64>(), rewards in prop::collection::vec(0.0f64..=1.0, 1..300)) {
        let mut rexp3 = Rexp3::new(5, 0.3, 17).unwrap();
        let mut ix = Exp3Ix::new(5, 0.05, 0.02).unwrap();
        let mut rng = RngStream::new(seed);
        for r in rewards {
            let a = rexp3.choose(&mut rng);
            prop_assert!((rexp3.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            rexp3.update(a, r).unwrap();
            let b = ix.choose(&mut rng);
            prop_assert!((ix.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            ix.update(b, r).unwrap();
        }
    }

    #[test]
    fn aggregation_ignores_run_order(
        runs in prop::collection::vec(prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 6), 2..12),
        rotation in 0usize..12,
    ) {
        let trajs: Vec<RunTrajectory> = runs
            .iter()
            .map(|steps| RunTrajectory {
                arms: vec![0; steps.len()],
                expected: steps.iter().map(|&(a, b)| a.min(b)).collect(),
                realized: steps.iter().map(|&(a, _)| a.round()).collect(),
                oracle: steps.iter().map(|&(a, b)| a.max(b)).collect(),
            })
            .collect();
        let mut shuffled = trajs.clone();
        shuffled.rotate_left(rotation % trajs.len());
        shuffled.swap(0, trajs.len() - 1);
        for mode in [RegretMode::Expected, RegretMode::Realized] {
            let a = aggregate(&trajs, mode).unwrap();
            let b = aggregate(&shuffled, mode).unwrap();
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&a.mean_cum_regret), bits(&b.mean_cum_regret));
            prop_assert_eq!(bits(&a.stderr), bits(&b.stderr));
            prop_assert_eq!(bits(&a.mean_inst_reward), bits(&b.mean_inst_reward));
        }
    }

    #[test]
    fn complementary_queries_sum_to_one(a1 in 0.6f64..20.0, b1 in 0.6f64..20.0, a2 in 0.6f64..20.0, b2 in 0.6f64..20.0) {
        let q = ProbQuery::new(a1, b1, a2, b2).unwrap();
        let ctl = SeriesControl::default();
        let p = prob_suboptimal(&q, &ctl).unwrap();
        let r = prob_suboptimal(&q.swapped(), &ctl).unwrap();
        prop_assert!((p + r - 1.0).abs() < 1e-8, "{:?}: {} + {}", q, p, r);
    }

    #[test]
    fn larger_alpha2_raises_probability(a1 in 0.6f64..15.0, b1 in 0.6f64..15.0, a2 in 0.6f64..15.0, b2 in 0.6f64..15.0) {
        let ctl = SeriesControl::default();
        let p = prob_suboptimal(&ProbQuery::new(a1, b1, a2, b2).unwrap(), &ctl).unwrap();
        let q = prob_suboptimal(&ProbQuery::new(a1, b1, a2 + 1.0, b2).unwrap(), &ctl).unwrap();
        prop_assert!(q > p || (p > 1.0 - 1e-9 && q >= p - 1e-12), "{} then {}", p, q);
    }

    #[test]
    fn schedules_are_bounded_periodic_and_dominated(k in 2usize..12, t in 1u64..20_000) {
        for preset in EnvPreset::ALL {
            let env = preset_environment(preset, k).unwrap();
            let cycle = env.cycle().unwrap();
            let means = env.means_at(t).unwrap();
            for (arm, &m) in means.iter().enumerate() {
                prop_assert!((0.0..=1.0).contains(&m));
                prop_assert_eq!(m, env.mean_at(arm, t + cycle).unwrap());
            }
            let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(env.oracle_mean(t).unwrap(), max);
            prop_assert_eq!(means[env.best_arm(t).unwrap()], max);
        }
    }
}

/// Regularized incomplete beta `I_x(2, 3)`.
fn beta23_cdf(x: f64) -> f64 {
    let y = 1.0 - x;
    6.0 * x * x * y * y + 4.0 * x.powi(3) * y + x.powi(4)
}

#[test]
fn beta_sampler_passes_ks() {
    let n = 100_000;
    let mut rng = RngStream::new(2024);
    let params = BetaParams::new(2.0, 3.0).unwrap();
    let mut draws: Vec<f64> = (0..n).map(|_| sample_beta(&mut rng, params)).collect();
    draws.sort_by(f64::total_cmp);
    let d = draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = beta23_cdf(x);
            (f - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - f)
        })
        .fold(0.0, f64::max);
    // Asymptotic critical value at significance 0.001.
    assert!(d < 1.9495 / (n as f64).sqrt(), "KS statistic {d}");
}

#[test]
fn abrupt_best_arm_switches_every_fifty_steps() {
    let env = preset_environment(EnvPreset::Abrupt, 4).unwrap();
    for t in 50..250 {
        let expected = (t / 50 - 1) as usize;
        assert_eq!(env.best_arm(t).unwrap(), expected, "t = {t}");
    }
}
