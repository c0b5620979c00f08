//! The five primitive prior families used by the shipped scene models, with
//! exact log densities and seeded sampling.

use rand::Rng;
use rand_distr::Distribution as _;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

/// A sampled random choice: boolean, integer or real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
}

impl Value {
    pub fn as_bool(&self) -> bool {
        match self {
            Value::Bool(b) => *b,
            other => panic!("expected bool value, got {other:?}"),
        }
    }

    pub fn as_int(&self) -> i64 {
        match self {
            Value::Int(i) => *i,
            other => panic!("expected int value, got {other:?}"),
        }
    }

    pub fn as_real(&self) -> f64 {
        match self {
            Value::Real(x) => *x,
            other => panic!("expected real value, got {other:?}"),
        }
    }
}

/// One of the five primitive prior families.
///
/// `UniformDiscrete` bounds are inclusive on both ends, so the support of
/// `UniformDiscrete { lo: 0, hi: 35 }` has 36 values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Dist {
    Bernoulli { p: f64 },
    UniformDiscrete { lo: i64, hi: i64 },
    UniformContinuous { lo: f64, hi: f64 },
    ScaledBeta { scale: f64, a: f64, b: f64 },
    Gamma { shape: f64, rate: f64 },
}

impl Dist {
    /// Checks the family's parameter invariants.
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Dist::Bernoulli { p } => (0.0..=1.0).contains(&p),
            Dist::UniformDiscrete { lo, hi } => lo <= hi,
            Dist::UniformContinuous { lo, hi } => lo < hi && lo.is_finite() && hi.is_finite(),
            Dist::ScaledBeta { scale, a, b } => scale > 0.0 && a > 0.0 && b > 0.0,
            Dist::Gamma { shape, rate } => shape > 0.0 && rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid distribution {self:?}")))
        }
    }

    /// Draws one value from the prior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Value> {
        self.validate()?;
        Ok(match *self {
            Dist::Bernoulli { p } => Value::Bool(rng.gen::<f64>() < p),
            Dist::UniformDiscrete { lo, hi } => Value::Int(rng.gen_range(lo..=hi)),
            Dist::UniformContinuous { lo, hi } => Value::Real(rng.gen_range(lo..hi)),
            Dist::ScaledBeta { scale, a, b } => {
                let beta = rand_distr::Beta::new(a, b)
                    .map_err(|e| Error::Parameter(format!("beta: {e}")))?;
                Value::Real(scale * beta.sample(rng))
            }
            Dist::Gamma { shape, rate } => {
                let gamma = rand_distr::Gamma::new(shape, 1.0 / rate)
                    .map_err(|e| Error::Parameter(format!("gamma: {e}")))?;
                Value::Real(gamma.sample(rng))
            }
        })
    }

    /// Exact log density (or log mass) of `value`; `-inf` outside the
    /// support, never an error.
    pub fn log_density(&self, value: &Value) -> f64 {
        match (*self, value) {
            (Dist::Bernoulli { p }, Value::Bool(b)) => {
                let q = if *b { p } else { 1.0 - p };
                if q > 0.0 {
                    q.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            (Dist::UniformDiscrete { lo, hi }, Value::Int(i)) => {
                if (lo..=hi).contains(i) {
                    -(((hi - lo + 1) as f64).ln())
                } else {
                    f64::NEG_INFINITY
                }
            }
            (Dist::UniformContinuous { lo, hi }, Value::Real(x)) => {
                if (lo..=hi).contains(x) {
                    -((hi - lo).ln())
                } else {
                    f64::NEG_INFINITY
                }
            }
            (Dist::ScaledBeta { scale, a, b }, Value::Real(y)) => {
                if *y <= 0.0 || *y >= scale {
                    return f64::NEG_INFINITY;
                }
                let u = y / scale;
                let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
                (a - 1.0) * u.ln() + (b - 1.0) * (1.0 - u).ln() - ln_beta - scale.ln()
            }
            (Dist::Gamma { shape, rate }, Value::Real(x)) => {
                if *x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
            // A value of the wrong kind never lies in the support.
            _ => f64::NEG_INFINITY,
        }
    }

    /// True for the finite-support families eligible for enumerative Gibbs.
    pub fn is_enumerable(&self) -> bool {
        matches!(self, Dist::Bernoulli { .. } | Dist::UniformDiscrete { .. })
    }

    /// Full support of an enumerable family, in a fixed order.
    pub fn enumerate(&self) -> Result<Vec<Value>> {
        match *self {
            Dist::Bernoulli { .. } => Ok(vec![Value::Bool(false), Value::Bool(true)]),
            Dist::UniformDiscrete { lo, hi } => Ok((lo..=hi).map(Value::Int).collect()),
            _ => Err(Error::Usage(format!("{self:?} has no finite support"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn degenerate_bernoulli_always_true() {
        let mut r = rng(1);
        for _ in 0..50 {
            assert_eq!(
                Dist::Bernoulli { p: 1.0 }.sample(&mut r).unwrap(),
                Value::Bool(true)
            );
        }
    }

    #[test]
    fn singleton_uniform_discrete() {
        let mut r = rng(2);
        assert_eq!(
            Dist::UniformDiscrete { lo: 5, hi: 5 }.sample(&mut r).unwrap(),
            Value::Int(5)
        );
    }

    #[test]
    fn scaled_beta_monte_carlo_mean() {
        // Beta(1,2) has mean 1/3; scaled by 7 the mean is 7/3.
        let d = Dist::ScaledBeta { scale: 7.0, a: 1.0, b: 2.0 };
        let mut r = rng(3);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| d.sample(&mut r).unwrap().as_real())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 7.0 / 3.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn uniform_discrete_glyph_mass() {
        let d = Dist::UniformDiscrete { lo: 0, hi: 35 };
        let got = d.log_density(&Value::Int(17));
        assert!((got - (-(36f64).ln())).abs() < 1e-12);
        assert_eq!(d.log_density(&Value::Int(36)), f64::NEG_INFINITY);
    }

    #[test]
    fn gamma_unit_exponential() {
        let d = Dist::Gamma { shape: 1.0, rate: 1.0 };
        assert!((d.log_density(&Value::Real(2.5)) - (-2.5)).abs() < 1e-12);
        assert!((d.log_density(&Value::Real(1.0)) - (-1.0)).abs() < 1e-12);
        assert_eq!(d.log_density(&Value::Real(0.0)), f64::NEG_INFINITY);
        assert_eq!(d.log_density(&Value::Real(-1.0)), f64::NEG_INFINITY);
    }

    #[test]
    fn scaled_beta_density_near_zero() {
        // Beta(1,2) density is 2(1-u); substituting u = y/7 gives
        // (2/7)(1 - y/7), which tends to 2/7 as y -> 0+.
        let d = Dist::ScaledBeta { scale: 7.0, a: 1.0, b: 2.0 };
        let y = 1e-9f64;
        let expected = ((2.0 / 7.0) * (1.0 - y / 7.0)).ln();
        assert!((d.log_density(&Value::Real(y)) - expected).abs() < 1e-9);
        assert!((d.log_density(&Value::Real(y)) - (2.0f64 / 7.0).ln()).abs() < 1e-6);
        assert_eq!(d.log_density(&Value::Real(0.0)), f64::NEG_INFINITY);
        assert_eq!(d.log_density(&Value::Real(7.0)), f64::NEG_INFINITY);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut r = rng(4);
        assert!(Dist::Bernoulli { p: 1.5 }.sample(&mut r).is_err());
        assert!(Dist::UniformDiscrete { lo: 3, hi: 2 }.sample(&mut r).is_err());
        assert!(Dist::UniformContinuous { lo: 1.0, hi: 1.0 }.sample(&mut r).is_err());
        assert!(Dist::ScaledBeta { scale: 0.0, a: 1.0, b: 1.0 }.sample(&mut r).is_err());
        assert!(Dist::Gamma { shape: 0.0, rate: 1.0 }.sample(&mut r).is_err());
    }

    #[test]
    fn samples_stay_in_support() {
        let mut r = rng(5);
        let cases = [
            Dist::UniformDiscrete { lo: -3, hi: 4 },
            Dist::UniformContinuous { lo: -20.0, hi: 20.0 },
            Dist::ScaledBeta { scale: 7.0, a: 1.0, b: 2.0 },
            Dist::Gamma { shape: 1.0, rate: 1.0 },
        ];
        for d in cases {
            for _ in 0..500 {
                let v = d.sample(&mut r).unwrap();
                assert!(d.log_density(&v).is_finite(), "{d:?} produced {v:?}");
            }
        }
    }

    /// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
    fn ks_continuous(draws: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = draws.len() as f64;
        let mut d = 0.0f64;
        for (i, x) in draws.iter().enumerate() {
            let c = cdf(*x);
            d = d.max((i + 1) as f64 / n - c);
            d = d.max(c - i as f64 / n);
        }
        d
    }

    /// KS statistic against a step CDF, evaluated at the support points.
    fn ks_discrete(draws: &[f64], support: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
        let n = draws.len() as f64;
        let mut d = 0.0f64;
        for v in support {
            let ecdf = draws.iter().filter(|x| *x <= v).count() as f64 / n;
            d = d.max((ecdf - cdf(*v)).abs());
        }
        d
    }

    fn draw_as_f64<R: Rng>(d: &Dist, r: &mut R) -> f64 {
        match d.sample(r).unwrap() {
            Value::Bool(b) => b as i64 as f64,
            Value::Int(i) => i as f64,
            Value::Real(x) => x,
        }
    }

    #[test]
    fn ks_against_analytic_cdfs() {
        // Critical value at significance 1e-3: sqrt(ln(2/alpha)/2) / sqrt(n).
        let n = 10_000usize;
        let crit = ((2.0f64 / 1e-3).ln() / 2.0).sqrt() / (n as f64).sqrt();
        let mut r = rng(6);

        let continuous: Vec<(Dist, Box<dyn Fn(f64) -> f64>)> = vec![
            (
                Dist::UniformContinuous { lo: -20.0, hi: 20.0 },
                Box::new(|x| ((x + 20.0) / 40.0).clamp(0.0, 1.0)),
            ),
            (
                Dist::ScaledBeta { scale: 7.0, a: 1.0, b: 2.0 },
                Box::new(|x| statrs::function::beta::beta_reg(1.0, 2.0, (x / 7.0).clamp(0.0, 1.0))),
            ),
            (
                Dist::Gamma { shape: 1.0, rate: 1.0 },
                Box::new(|x| statrs::function::gamma::gamma_lr(1.0, x.max(1e-300))),
            ),
        ];
        for (d, cdf) in continuous {
            let mut draws: Vec<f64> = (0..n).map(|_| draw_as_f64(&d, &mut r)).collect();
            let stat = ks_continuous(&mut draws, cdf);
            assert!(stat < crit, "{d:?}: KS statistic {stat} >= {crit}");
        }

        let discrete: Vec<(Dist, Vec<f64>, Box<dyn Fn(f64) -> f64>)> = vec![
            (
                Dist::Bernoulli { p: 0.3 },
                vec![0.0, 1.0],
                Box::new(|x| if x < 0.0 { 0.0 } else if x < 1.0 { 0.7 } else { 1.0 }),
            ),
            (
                Dist::UniformDiscrete { lo: 0, hi: 9 },
                (0..10).map(|i| i as f64).collect(),
                Box::new(|x| ((x.floor() + 1.0) / 10.0).clamp(0.0, 1.0)),
            ),
        ];
        for (d, support, cdf) in discrete {
            let draws: Vec<f64> = (0..n).map(|_| draw_as_f64(&d, &mut r)).collect();
            let stat = ks_discrete(&draws, &support, cdf);
            assert!(stat < crit, "{d:?}: KS statistic {stat} >= {crit}");
        }
    }
}
