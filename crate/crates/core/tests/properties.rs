mod common;

use proptest::prelude::*;

use tom_teach::belief::EnvBelief;
use tom_teach::demos::{apply_demonstration, build_demo_set, CostParams};
use tom_teach::gridworld::{
    generate_demonstration_env, generate_observation_env, layout_is_valid, reward, step_in_place, Action,
    CellContent, Color, ObjectKind, ReceptiveField,
};
use tom_teach::learner::{run_episode, LearnerSpec};
use tom_teach::teachers::{trace_teacher_beliefs, BehaviorModel, TeacherBelief};
use tom_teach::toy::{toy_teacher_trace, ToyLearnerBelief, ToyTeacherBelief};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn factored_belief_matches_joint_bayes(seed in any::<u64>()) {
        common::check_belief_vs_joint(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn astar_matches_pose_bfs(seed in any::<u64>()) {
        common::check_astar_vs_bfs(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn posterior_matches_sequential_bayes(seed in any::<u64>()) {
        common::check_two_hypothesis_trace(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn boltzmann_likelihoods_sum_to_one(seed in any::<u64>()) {
        common::check_boltzmann_normalized(seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn reward_is_zero_or_in_range(len in 0usize..=121, open in any::<bool>()) {
        let r = reward(len, open, 121);
        if open {
            prop_assert!((0.1 - 1e-12..=1.0).contains(&r));
        } else {
            prop_assert_eq!(r, 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn observation_envs_are_well_formed(seed in any::<u64>()) {
        let w = generate_observation_env(seed).unwrap();
        prop_assert_eq!((w.width(), w.height(), w.max_steps), (11, 11, 121));
        prop_assert!(layout_is_valid(&w));
        for c in w.coords().filter(|&c| w.is_border(c)) {
            prop_assert_eq!(w.get(c), CellContent::Wall);
        }
        for color in Color::ALL {
            let keys = w.cells().iter().filter(|c| c.object() == Some(ObjectKind::Key(color))).count();
            let doors = w.cells().iter().filter(|c| c.object() == Some(ObjectKind::Door(color))).count();
            prop_assert_eq!((keys, doors), (1, 1));
        }
    }

    #[test]
    fn agent_never_enters_blocking_cells(seed in any::<u64>(), actions in prop::collection::vec(0usize..5, 0..200)) {
        let mut w = generate_observation_env(seed).unwrap();
        for a in actions {
            step_in_place(&mut w, Action::ALL[a]);
            let here = w.get(w.agent.pos);
            prop_assert!(here.is_passable(), "agent on {:?}", here);
        }
    }

    #[test]
    fn teacher_beliefs_stay_normalized(seed in any::<u64>(), h in 0usize..12) {
        let w = generate_observation_env(seed).unwrap();
        let spec = LearnerSpec::all()[h];
        let (traj, _) = run_episode(&w, spec, EnvBelief::uniform_for(&w)).unwrap();
        let models = [BehaviorModel::Aligned, BehaviorModel::rational(0.5)];
        let traces = trace_teacher_beliefs(&TeacherBelief::uniform(), &models, &traj).unwrap();
        for trace in &traces {
            prop_assert_eq!(trace.len(), traj.len() + 1);
            for tb in trace {
                let sum: f64 = tb.weights().iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-9);
            }
        }
        // the aligned teacher never loses the true hypothesis
        let last = traces[0].last().unwrap();
        prop_assert!(last.weight(spec) > 0.0);
    }

    #[test]
    fn toy_teacher_beliefs_stay_normalized(presses in prop::collection::vec((0usize..20, any::<bool>()), 0..60)) {
        for step in toy_teacher_trace(&ToyTeacherBelief::default(), &presses, 20) {
            let sum: f64 = step.belief.weights.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            if step.zero_and_three_agree {
                prop_assert!(step.belief.weights[0] <= 0.5 + 1e-9 && step.belief.weights[3] <= 0.5 + 1e-9);
            }
        }
    }

    #[test]
    fn toy_learner_mass_sums_to_one(class in 0usize..4, reveals in prop::collection::vec((0usize..8, any::<bool>()), 0..8)) {
        // eight buttons keep the brute-force sum over configurations small
        let mut b = ToyLearnerBelief::prior(class, 8);
        for (button, musical) in reveals {
            b.reveal_lenient(button, musical);
            let total: f64 = (0u32..256).map(|s| b.probability(s)).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn demo_sets_are_well_formed(seed in any::<u64>()) {
        let w = generate_demonstration_env(seed).unwrap();
        prop_assert_eq!((w.width(), w.height(), w.max_steps), (33, 33, 544));
        prop_assert!(layout_is_valid(&w));
        let demos = build_demo_set(&w, seed).unwrap();
        prop_assert_eq!(demos.len(), 18);
        let longest = demos.demos.iter().map(|d| d.len()).max().unwrap();
        prop_assert_eq!(demos.l_max, longest);
        let cost = CostParams::new(0.6);
        for d in &demos.demos {
            let c = demos.cost(d.id, cost);
            prop_assert!((0.0..=0.6 + 1e-12).contains(&c));
            for rf in ReceptiveField::ALL {
                let b = apply_demonstration(&w, d, rf).unwrap();
                prop_assert!(b.normalization_error() < 1e-9);
            }
        }
    }
}
