use proptest::prelude::*;

use reverting::integral::{self, INCREMENT_BOUND};
use reverting::{clock, occasional, walk, RandomStream};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clock_trajectories_are_well_formed(seed in any::<u64>(), n in 1usize..300) {
        let t = clock::simulate_clock_recursive(n, &mut RandomStream::new(seed, 0)).unwrap();
        prop_assert!(t.check().is_ok());
        prop_assert_eq!(t.values[0], 0);
        for k in 1..n {
            prop_assert!(t.values[k] <= k as u64);
            prop_assert!(t.values[k] >= 1);
        }
    }

    #[test]
    fn martingale_increments_are_bounded(seed in any::<u64>(), n in 2usize..300) {
        let t = clock::simulate_clock_recursive(n, &mut RandomStream::new(seed, 1)).unwrap();
        let trace = integral::integrated_trace(&t).unwrap();
        let worst = integral::hoeffding_check(&trace).unwrap();
        prop_assert!(worst <= INCREMENT_BOUND);
    }

    #[test]
    fn occasional_traces_respect_gates(seed in any::<u64>(), n in 1usize..200, q in 0.05f64..1.0) {
        let t = occasional::simulate_occasional(n, q, &mut RandomStream::new(seed, 2)).unwrap();
        prop_assert!(t.check().is_ok());
        prop_assert_eq!(t.intervals().iter().sum::<usize>() <= n, true);
    }

    #[test]
    fn exact_pmfs_are_normalized(n in 1usize..=13, q in 0.01f64..=1.0, p in 0.0f64..=1.0) {
        for pmf in [
            clock::clock_pmf(n, 0.0).unwrap(),
            occasional::occasional_pmf(n, q, 0.0).unwrap(),
            walk::walk_pmf_simple(n, p).unwrap(),
        ] {
            prop_assert!(pmf.is_exact());
            prop_assert!((pmf.total_mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn occasional_martingale_identity(seed in any::<u64>(), q in 0.05f64..0.95, epochs in 1usize..30) {
        let tr = occasional::occasional_martingale_trace(epochs, q, &mut RandomStream::new(seed, 3), 1e-12).unwrap();
        prop_assert_eq!(tr.epochs.len(), epochs);
        prop_assert!(tr.epochs.windows(2).all(|w| w[1].reversion_time == w[0].reversion_time + w[1].interval));
    }
}
