use bosefluct::config::Config;
use bosefluct::experiments::{clt_run, lln_run, ExperimentConfig};
use bosefluct::functions::TestFunction;
use bosefluct_core::ot1d::DiscreteMeasure;
use proptest::prelude::*;

fn law() -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((-3.0..3.0f64, 0.05..1.0f64), 1..6).prop_map(|pairs| {
        let (a, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let s: f64 = w.iter().sum();
        DiscreteMeasure::new(&a, &w.iter().map(|x| x / s).collect::<Vec<_>>()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn w1_stays_inside_the_support_diameter(nu in law(), n in 1usize..40, seed in any::<u64>()) {
        let rec = lln_run(&ExperimentConfig::iid(nu.clone(), vec![n], 50, seed)).unwrap();
        let diam = nu.max_atom() - nu.min_atom();
        prop_assert!((rec.diameter - diam).abs() < 1e-12);
        for w in &rec.w1[0].1 {
            prop_assert!(*w >= 0.0 && *w <= diam + 1e-12);
        }
    }

    #[test]
    fn sample_second_moments_are_symmetric_psd(
        nu in law(),
        t in -2.0..2.0f64,
        x in prop::collection::vec(-1.0..1.0f64, 3),
        seed in any::<u64>(),
    ) {
        let mut cfg = ExperimentConfig::iid(nu, vec![12], 100, seed);
        cfg.functions = vec![TestFunction::Identity, TestFunction::Square, TestFunction::Indicator(t)];
        let rec = clt_run(&cfg).unwrap();
        let s = |j: usize, k: usize| rec.summary.iter().find(|r| r.j == j && r.k == k).unwrap().sigma_sample;
        let mut quad = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                prop_assert_eq!(s(j, k), s(k, j));
                quad += x[j] * s(j, k) * x[k];
            }
        }
        prop_assert!(quad >= -1e-9);
    }

    #[test]
    fn configuration_text_round_trips(
        v0 in 0.01..50.0f64,
        radius in 0.1..3.0f64,
        cutoff in 0.5..3.0f64,
        replicas in 100usize..5000,
        seed in any::<u64>(),
        t in -1.0..1.0f64,
    ) {
        let text = format!(
            "[potential]\nkind = soft-sphere\nv0 = {v0}\nradius = {radius}\n[lattice]\ncutoff = {cutoff}\n\
             [observable]\nkind = multiplication-cosine\namplitudes = 1, 0.5, 0\n\
             [experiment]\nn_grid = 2, 4, 8\nreplicas = {replicas}\nfunctions = identity, indicator:{t}\nseed = {seed}\n"
        );
        let once = Config::parse(&text).unwrap();
        let twice = Config::parse(&once.to_string()).unwrap();
        prop_assert_eq!(once.to_string(), twice.to_string());
        prop_assert_eq!(twice.experiment().unwrap().seed, seed);
        prop_assert_eq!(twice.potential().unwrap().v0, Some(v0));
    }
}
