//! Trace-based probabilistic runtime: primitive prior families, addressed
//! traces, and generic single-site Metropolis-Hastings / enumerative Gibbs
//! transitions, independent of any particular scene model.

mod chain;
mod dist;
mod model;
mod trace;

pub use chain::{
    gibbs_step, init_trace, mh_step, run_chain, ChainConfig, ChainDiagnostics, DiagRow,
    GibbsOutcome, StepKind, StepOutcome,
};
pub use dist::{Dist, Value};
pub use model::SceneModel;
pub use trace::{values_from_json, Address, AddressSpace, Choice, Trace, Values};

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Renderless model over small discrete sites with a likelihood table
    /// supplied as a closure; the workhorse for engine-level checks.
    struct TableModel<F: Fn(Values<'_>) -> f64> {
        space: AddressSpace,
        loglik: F,
    }

    impl<F: Fn(Values<'_>) -> f64> SceneModel for TableModel<F> {
        type Render = ();

        fn space(&self) -> &AddressSpace {
            &self.space
        }

        fn render(&self, _values: Values<'_>) {}

        fn log_likelihood(&self, _rendered: &(), values: Values<'_>) -> f64 {
            (self.loglik)(values)
        }
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn init_trace_is_deterministic_and_complete() {
        let model = TableModel {
            space: AddressSpace::new(vec![
                (Address::new("a"), Dist::Bernoulli { p: 0.5 }),
                (Address::new("b"), Dist::UniformDiscrete { lo: 0, hi: 4 }),
                (Address::new("c"), Dist::Gamma { shape: 1.0, rate: 1.0 }),
            ])
            .unwrap(),
            loglik: |_| 0.0,
        };
        let t1 = init_trace(&model, &mut rng(7)).unwrap();
        let t2 = init_trace(&model, &mut rng(7)).unwrap();
        assert_eq!(t1.choices().len(), 3);
        assert_eq!(t1.choices(), t2.choices());
        for c in t1.choices() {
            assert_eq!(c.log_prior, c.dist.log_density(&c.value));
        }
    }

    #[test]
    fn init_trace_rejects_non_finite_likelihood() {
        let model = TableModel {
            space: AddressSpace::new(vec![(
                Address::new("a"),
                Dist::Bernoulli { p: 0.5 },
            )])
            .unwrap(),
            loglik: |_| f64::NEG_INFINITY,
        };
        assert!(matches!(
            init_trace(&model, &mut rng(1)),
            Err(crate::Error::Model(_))
        ));
    }

    /// Likelihood ln(2) when the single site is 1, else 0: proposing 0 from
    /// 1 has acceptance probability exactly 1/2, proposing 1 from 0 clamps
    /// to 1.
    #[test]
    fn acceptance_probability_matches_likelihood_ratio() {
        let model = TableModel {
            space: AddressSpace::new(vec![(
                Address::new("x"),
                Dist::UniformDiscrete { lo: 0, hi: 1 },
            )])
            .unwrap(),
            loglik: |v| if v.int_at(0) == 1 { std::f64::consts::LN_2 } else { 0.0 },
        };
        let mut r = rng(11);
        let mut trace = init_trace(&model, &mut r).unwrap();
        let mut seen_down = false;
        let mut seen_up = false;
        for _ in 0..200 {
            let before = trace.value(0).as_int();
            let out = mh_step(&model, &mut trace, &mut r);
            let shortcut = out.delta_loglik.min(0.0).exp();
            assert!(
                (out.alpha_full - shortcut).abs() < 1e-10,
                "full ratio {} vs likelihood shortcut {shortcut}",
                out.alpha_full
            );
            match (before, out.proposed.as_int()) {
                (1, 0) => {
                    assert!((out.alpha_full - 0.5).abs() < 1e-12);
                    seen_down = true;
                }
                (0, 1) => {
                    assert_eq!(out.alpha_full, 1.0);
                    seen_up = true;
                }
                _ => assert_eq!(out.alpha_full, 1.0),
            }
        }
        assert!(seen_down && seen_up, "both proposal directions exercised");
    }

    #[test]
    fn rejected_proposal_leaves_trace_intact() {
        let model = TableModel {
            space: AddressSpace::new(vec![(
                Address::new("x"),
                Dist::UniformDiscrete { lo: 0, hi: 9 },
            )])
            .unwrap(),
            // Steep likelihood so rejections are common.
            loglik: |v| -10.0 * (v.int_at(0) as f64),
        };
        let mut r = rng(13);
        let mut trace = init_trace(&model, &mut r).unwrap();
        let mut saw_rejection = false;
        for _ in 0..300 {
            let before = trace.clone();
            let out = mh_step(&model, &mut trace, &mut r);
            if !out.accepted {
                saw_rejection = true;
                assert_eq!(before.choices(), trace.choices());
                assert_eq!(before.cached_loglik, trace.cached_loglik);
            }
        }
        assert!(saw_rejection);
    }

    #[test]
    fn gibbs_singleton_support_keeps_value() {
        let model = TableModel {
            space: AddressSpace::new(vec![(
                Address::new("only"),
                Dist::UniformDiscrete { lo: 5, hi: 5 },
            )])
            .unwrap(),
            loglik: |_| 0.0,
        };
        let mut r = rng(17);
        let mut trace = init_trace(&model, &mut r).unwrap();
        let out = gibbs_step(&model, &mut trace, &Address::new("only"), &mut r).unwrap();
        assert_eq!(out.chosen, Value::Int(5));
        assert_eq!(out.support_size, 1);
        assert_eq!(trace.value(0), &Value::Int(5));
    }

    /// Equal priors with likelihood ratio exp(L1 - L0) = 3 give a full
    /// conditional of (1/4, 3/4); sequential Gibbs updates of a single site
    /// are independent draws from it.
    #[test]
    fn gibbs_full_conditional_frequencies() {
        let model = TableModel {
            space: AddressSpace::new(vec![(
                Address::new("flag"),
                Dist::Bernoulli { p: 0.5 },
            )])
            .unwrap(),
            loglik: |v| if v.bool_at(0) { 3.0f64.ln() } else { 0.0 },
        };
        let mut r = rng(19);
        let mut trace = init_trace(&model, &mut r).unwrap();
        let n = 10_000;
        let mut ones = 0usize;
        for _ in 0..n {
            let out = gibbs_step(&model, &mut trace, &Address::new("flag"), &mut r).unwrap();
            if out.chosen.as_bool() {
                ones += 1;
            }
        }
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.75).abs() < 0.02, "frequency {freq}");
    }

    #[test]
    fn gibbs_never_selects_zero_mass_value() {
        let model = TableModel {
            space: AddressSpace::new(vec![(
                Address::new("x"),
                Dist::UniformDiscrete { lo: 0, hi: 2 },
            )])
            .unwrap(),
            loglik: |v| if v.int_at(0) == 1 { f64::NEG_INFINITY } else { 0.0 },
        };
        // The prior can land on the zero-mass value; scan seeds for a
        // finite-likelihood initial state.
        let (mut r, mut trace) = (0..)
            .find_map(|s| {
                let mut r = rng(23 + s);
                init_trace(&model, &mut r).ok().map(|t| (r, t))
            })
            .unwrap();
        for _ in 0..500 {
            let out = gibbs_step(&model, &mut trace, &Address::new("x"), &mut r).unwrap();
            assert_ne!(out.chosen, Value::Int(1));
        }
    }

    #[test]
    fn gibbs_rejects_non_enumerable_address() {
        let model = TableModel {
            space: AddressSpace::new(vec![(
                Address::new("x"),
                Dist::Gamma { shape: 1.0, rate: 1.0 },
            )])
            .unwrap(),
            loglik: |_| 0.0,
        };
        let mut r = rng(29);
        let mut trace = init_trace(&model, &mut r).unwrap();
        assert!(matches!(
            gibbs_step(&model, &mut trace, &Address::new("x"), &mut r),
            Err(crate::Error::Usage(_))
        ));
    }

    #[test]
    fn run_chain_rejects_zero_steps() {
        let model = TableModel {
            space: AddressSpace::new(vec![(
                Address::new("x"),
                Dist::Bernoulli { p: 0.5 },
            )])
            .unwrap(),
            loglik: |_| 0.0,
        };
        let mut config = ChainConfig::new(1, 0);
        config.steps = 0;
        assert!(matches!(
            run_chain(&model, &config),
            Err(crate::Error::Config(_))
        ));
    }

    #[test]
    fn run_chain_without_gibbs_uses_only_mh() {
        let model = TableModel {
            space: AddressSpace::new(vec![(
                Address::new("x"),
                Dist::UniformDiscrete { lo: 0, hi: 3 },
            )])
            .unwrap(),
            loglik: |_| 0.0,
        };
        let config = ChainConfig::new(500, 3)
            .with_gibbs_probability(0.0)
            .with_record_every(1);
        let (_, diag) = run_chain(&model, &config).unwrap();
        assert_eq!(diag.rows.len(), 500);
        assert!(diag
            .rows
            .iter()
            .all(|r| r.kind == StepKind::MetropolisHastings));

        let with_gibbs = ChainConfig::new(500, 3).with_record_every(1);
        let (_, diag) = run_chain(&model, &with_gibbs).unwrap();
        assert!(diag.rows.iter().any(|r| r.kind == StepKind::Gibbs));
    }

    #[test]
    fn diagnostics_row_count_and_determinism() {
        let model = TableModel {
            space: AddressSpace::new(vec![
                (Address::new("x"), Dist::UniformDiscrete { lo: 0, hi: 3 }),
                (Address::new("y"), Dist::UniformContinuous { lo: 0.0, hi: 1.0 }),
            ])
            .unwrap(),
            loglik: |v| -v.real_at(1),
        };
        let config = ChainConfig::new(257, 41).with_record_every(10);
        let (_, d1) = run_chain(&model, &config).unwrap();
        let (_, d2) = run_chain(&model, &config).unwrap();
        assert_eq!(d1.rows.len(), 25); // floor(257 / 10)
        assert_eq!(d1.to_csv(), d2.to_csv());
        assert!(d1.to_csv().starts_with("step,log_prior,log_likelihood,accepted,address\n"));
    }

    /// Two two-valued sites with an arbitrary likelihood table: the chain's
    /// occupancy over the 4 joint states must approach the exactly
    /// enumerated posterior.
    #[test]
    fn chain_matches_enumerated_posterior() {
        let table = [0.0f64, 1.2, -0.7, 0.4];
        let model = TableModel {
            space: AddressSpace::new(vec![
                (Address::new("a"), Dist::UniformDiscrete { lo: 0, hi: 1 }),
                (Address::new("b"), Dist::UniformDiscrete { lo: 0, hi: 1 }),
            ])
            .unwrap(),
            loglik: move |v| table[(v.int_at(0) * 2 + v.int_at(1)) as usize],
        };

        // Exact posterior by enumeration (uniform prior cancels).
        let z: f64 = table.iter().map(|l| l.exp()).sum();
        let exact: Vec<f64> = table.iter().map(|l| l.exp() / z).collect();

        let config = ChainConfig::new(40_000, 101).with_thin(1);
        let (samples, _) = run_chain(&model, &config).unwrap();
        let mut counts = [0usize; 4];
        for t in &samples {
            counts[(t.value(0).as_int() * 2 + t.value(1).as_int()) as usize] += 1;
        }
        let n = samples.len() as f64;
        let tv: f64 = exact
            .iter()
            .zip(counts.iter())
            .map(|(p, c)| (p - *c as f64 / n).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.05, "total variation {tv}");
    }
}
