use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hintgrid::encoders::EncodingKind;
use hintgrid::env::{is_success, observe, reset, Action, EnvConfig, TaskKind};
use hintgrid::hints::{augment, ActionHistory, Hint, HintProvider, HintQuery, NoisyProvider, OracleProvider};
use hintgrid::planner;
use hintgrid::rl::{act, compute_gae, featurize, FeatureLayout, Input, PolicyNet, NUM_ACTIONS};

fn task() -> impl Strategy<Value = TaskKind> {
    prop_oneof![Just(TaskKind::GoToObj), Just(TaskKind::OpenDoor), Just(TaskKind::PickupLoc)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reset_and_step_are_deterministic(task in task(), room in 5u8..=8, seed: u64, actions in prop::collection::vec(0u8..7, 0..40)) {
        let cfg = EnvConfig::new(task, room);
        let (mut a, ma) = reset(&cfg, seed).unwrap();
        let (mut b, mb) = reset(&cfg, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&ma, &mb);
        prop_assert!(!is_success(&a, &ma));
        for code in actions {
            let act = Action::from_code(code).unwrap();
            let ra = a.step(&ma, act);
            let rb = b.step(&mb, act);
            prop_assert_eq!(ra.is_ok(), rb.is_ok());
            prop_assert_eq!(&a, &b);
            if ra.map(|r| r.done).unwrap_or(true) {
                break;
            }
        }
    }

    #[test]
    fn following_the_planner_succeeds(task in task(), room in 5u8..=8, seed: u64) {
        let (mut s, m) = reset(&EnvConfig::new(task, room), seed).unwrap();
        let plan = planner::plan(&s, &m).unwrap();
        let mut steps = 0;
        loop {
            let r = s.step(&m, planner::optimal_action(&s, &m).unwrap()).unwrap();
            steps += 1;
            if r.done {
                prop_assert!(r.success);
                break;
            }
        }
        prop_assert_eq!(steps, plan.len());
    }

    #[test]
    fn hint_channel_only_touches_hint_features(seed: u64, t in 1u32..50, k in 1u32..6, text: bool) {
        let cfg = EnvConfig::new(TaskKind::PickupLoc, 7);
        let (s, m) = reset(&cfg, seed).unwrap();
        let history = ActionHistory::new(5);
        let query = HintQuery::new(&s, &m, &history, EncodingKind::AsciiGrid, 0, t);
        let layout = FeatureLayout::new(text);
        let noisy = NoisyProvider::new(1.0, seed);
        let with = augment(observe(&s, &m), &query, k, &noisy).unwrap();
        let without = augment(observe(&s, &m), &query, k, &hintgrid::hints::NeutralProvider).unwrap();
        let fa = featurize(&with.observation, layout);
        let fb = featurize(&without.observation, layout);
        prop_assert_eq!(fa.dim, layout.dim());
        let hint_range = layout.hint_offset() as u32..=layout.availability_index() as u32;
        let outside = |f: &hintgrid::rl::FeatureVector| {
            f.active.iter().copied().filter(|i| !hint_range.contains(i)).collect::<Vec<_>>()
        };
        prop_assert_eq!(outside(&fa), outside(&fb));
        prop_assert!(fa.active.iter().all(|&i| (i as usize) < layout.dim()));
        if t % k != 0 {
            prop_assert_eq!(&fa, &fb);
        }
    }

    #[test]
    fn gae_returns_are_advantages_plus_values(
        steps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, any::<bool>()), 1..50),
        last in -1.0f64..1.0,
        lambda in 0.0f64..=1.0,
    ) {
        let rewards: Vec<f64> = steps.iter().map(|s| s.0).collect();
        let values: Vec<f64> = steps.iter().map(|s| s.1).collect();
        let dones: Vec<bool> = steps.iter().map(|s| s.2).collect();
        let (adv, ret) = compute_gae(&rewards, &values, &dones, last, 0.99, lambda).unwrap();
        for i in 0..rewards.len() {
            prop_assert!((ret[i] - adv[i] - values[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn oracle_provider_agrees_with_planner() {
    let (s, m) = reset(&EnvConfig::new(TaskKind::OpenDoor, 8), 5).unwrap();
    let history = ActionHistory::new(5);
    let q = HintQuery::new(&s, &m, &history, EncodingKind::NaturalLanguage, 0, 5);
    let hint: Hint = OracleProvider.get_hint(&q).unwrap();
    assert_eq!(hint.action, Some(planner::optimal_action(&s, &m).unwrap()));
}

#[test]
fn sampled_actions_follow_the_softmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut net = PolicyNet::new(6, [16, 16], &mut rng);
    // Larger weights make the distribution clearly non-uniform.
    for p in net.params_mut() {
        *p *= 4.0;
    }
    let x = [1.0, -0.5, 0.25, 0.0, 1.5, -1.0];
    let probs = net.forward(Input::Dense(&x)).probs();
    let n = 10_000;
    let mut counts = [0usize; NUM_ACTIONS];
    for _ in 0..n {
        counts[act(&net, Input::Dense(&x), &mut rng, false).action.code() as usize] += 1;
    }
    for a in 0..NUM_ACTIONS {
        let freq = counts[a] as f64 / n as f64;
        // four standard errors
        let tol = 4.0 * (probs[a] * (1.0 - probs[a]) / n as f64).sqrt() + 1e-3;
        assert!((freq - probs[a]).abs() < tol, "action {a}: {freq} vs {}", probs[a]);
    }
    let greedy = act(&net, Input::Dense(&x), &mut rng, true).action.code() as usize;
    let best = (0..NUM_ACTIONS).max_by(|&i, &j| probs[i].total_cmp(&probs[j])).unwrap();
    assert_eq!(greedy, best);
}
