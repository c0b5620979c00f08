//! Single-site Metropolis-Hastings and enumerative Gibbs transitions, and
//! the chain runner that mixes them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dist::Value;
use super::model::SceneModel;
use super::trace::{Address, Choice, Trace};
use crate::{Error, Result};

/// Chain parameters. `thin` and `record_every` are counted in steps; the
/// chain keeps every `thin`-th trace and records a diagnostics row every
/// `record_every`-th step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainConfig {
    pub steps: usize,
    pub gibbs_probability: f64,
    pub seed: u64,
    pub thin: usize,
    pub record_every: usize,
}

impl ChainConfig {
    /// Defaults: 10% enumerative Gibbs, diagnostics every 10 steps, and a
    /// single retained sample (the final state).
    pub fn new(steps: usize, seed: u64) -> Self {
        ChainConfig {
            steps,
            gibbs_probability: 0.1,
            seed,
            thin: steps.max(1),
            record_every: 10,
        }
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn with_gibbs_probability(mut self, p: f64) -> Self {
        self.gibbs_probability = p;
        self
    }

    pub fn with_record_every(mut self, record_every: usize) -> Self {
        self.record_every = record_every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::Config("steps must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gibbs_probability) {
            return Err(Error::Config("gibbs_probability must lie in [0, 1]".into()));
        }
        if self.thin < 1 || self.record_every < 1 {
            return Err(Error::Config("thin and record_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Which transition produced a diagnostics row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    MetropolisHastings,
    Gibbs,
}

/// One recorded diagnostics row.
#[derive(Debug, Clone)]
pub struct DiagRow {
    pub step: usize,
    pub log_prior: f64,
    pub log_likelihood: f64,
    pub accepted: bool,
    pub address: Address,
    pub kind: StepKind,
}

/// Per-chain trajectory diagnostics; one row every `record_every` steps.
#[derive(Debug, Clone, Default)]
pub struct ChainDiagnostics {
    pub rows: Vec<DiagRow>,
}

impl ChainDiagnostics {
    /// CSV with header `step,log_prior,log_likelihood,accepted,address`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,log_prior,log_likelihood,accepted,address\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.step, row.log_prior, row.log_likelihood, row.accepted, row.address
            ));
        }
        out
    }
}

/// Outcome of one Metropolis-Hastings proposal.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub accepted: bool,
    pub site: usize,
    pub address: Address,
    pub previous: Value,
    pub proposed: Value,
    /// min(1, exp(log ratio)) with the ratio computed in full: likelihood,
    /// joint prior and both proposal densities.
    pub alpha_full: f64,
    /// Proposed minus current log likelihood, for the cancellation check.
    pub delta_loglik: f64,
}

/// Outcome of one enumerative Gibbs update.
#[derive(Debug, Clone)]
pub struct GibbsOutcome {
    pub site: usize,
    pub address: Address,
    pub chosen: Value,
    pub support_size: usize,
}

/// Samples every address from its prior and populates the caches.
pub fn init_trace<M: SceneModel, R: Rng + ?Sized>(
    model: &M,
    rng: &mut R,
) -> Result<Trace<M::Render>> {
    init_trace_impl(model, rng)
}

/// One single-site Metropolis-Hastings transition: a site chosen uniformly
/// from the K addresses, a fresh value resimulated from its prior, and an
/// accept/reject decision from the fully computed ratio
/// `P(data|render') P(prior') q_back / P(data|render) P(prior) q_fwd`.
/// Because proposals are prior resimulations the ratio collapses to the
/// likelihood ratio; the collapse is asserted by tests, not assumed here.
pub fn mh_step<M: SceneModel, R: Rng + ?Sized>(
    model: &M,
    trace: &mut Trace<M::Render>,
    rng: &mut R,
) -> StepOutcome {
    let space = model.space();
    let site = rng.gen_range(0..space.len());
    mh_step_at(model, trace, site, rng)
}

pub(crate) fn mh_step_at<M: SceneModel, R: Rng + ?Sized>(
    model: &M,
    trace: &mut Trace<M::Render>,
    site: usize,
    rng: &mut R,
) -> StepOutcome {
    let space = model.space();
    let dist = *space.dist(site);
    let previous = trace.choices()[site].clone();
    let proposed_value = dist
        .sample(rng)
        .expect("address space distributions are validated at construction");
    let proposed = Choice::new(proposed_value, dist);

    // Forward proposal density q(x -> x') is the prior at the proposed
    // value; the reverse density is the prior at the value being replaced.
    let log_q_fwd = proposed.log_prior;
    let log_q_back = previous.log_prior;

    let old_loglik = trace.cached_loglik;
    let old_log_prior = trace.log_prior();

    trace.choices_mut()[site] = proposed.clone();
    let new_render = model.render(trace.values());
    let new_loglik = model.log_likelihood(&new_render, trace.values());
    let new_log_prior = trace.log_prior();

    let log_num = new_loglik + new_log_prior + log_q_back;
    let log_den = old_loglik + old_log_prior + log_q_fwd;
    let alpha_full = if log_num == f64::NEG_INFINITY {
        0.0
    } else if log_den == f64::NEG_INFINITY {
        1.0
    } else {
        (log_num - log_den).min(0.0).exp()
    };

    let accepted = rng.gen::<f64>() < alpha_full;
    if accepted {
        trace.cached_render = new_render;
        trace.cached_loglik = new_loglik;
    } else {
        trace.choices_mut()[site] = previous.clone();
    }

    StepOutcome {
        accepted,
        site,
        address: space.address(site).clone(),
        previous: previous.value,
        proposed: proposed.value,
        alpha_full,
        delta_loglik: new_loglik - old_loglik,
    }
}

/// Enumerative (griddy) Gibbs update of one finite-support address: every
/// support value is scored by its log prior plus the re-rendered log
/// likelihood, and the new value is drawn from the exactly normalized full
/// conditional.
pub fn gibbs_step<M: SceneModel, R: Rng + ?Sized>(
    model: &M,
    trace: &mut Trace<M::Render>,
    address: &Address,
    rng: &mut R,
) -> Result<GibbsOutcome> {
    let site = model
        .space()
        .index_of(address)
        .ok_or_else(|| Error::Usage(format!("unknown address {address}")))?;
    gibbs_step_at(model, trace, site, rng)
}

pub(crate) fn gibbs_step_at<M: SceneModel, R: Rng + ?Sized>(
    model: &M,
    trace: &mut Trace<M::Render>,
    site: usize,
    rng: &mut R,
) -> Result<GibbsOutcome> {
    let space = model.space();
    let dist = *space.dist(site);
    if !dist.is_enumerable() {
        return Err(Error::Usage(format!(
            "address {} is not enumerable",
            space.address(site)
        )));
    }
    let support = dist.enumerate()?;

    let mut scores = Vec::with_capacity(support.len());
    for v in &support {
        trace.choices_mut()[site] = Choice::new(*v, dist);
        let render = model.render(trace.values());
        let loglik = model.log_likelihood(&render, trace.values());
        scores.push(loglik + trace.choices()[site].log_prior);
    }

    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Model(format!(
            "full conditional at {} has no support",
            space.address(site)
        )));
    }
    let weights: Vec<f64> = scores
        .iter()
        .map(|s| if s.is_finite() { (s - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();

    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = support.len() - 1;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc && *w > 0.0 {
            chosen = i;
            break;
        }
    }
    // Guard the top edge: never land on a zero-mass value.
    while weights[chosen] == 0.0 {
        chosen -= 1;
    }

    trace.choices_mut()[site] = Choice::new(support[chosen], dist);
    let render = model.render(trace.values());
    let loglik = model.log_likelihood(&render, trace.values());
    trace.cached_render = render;
    trace.cached_loglik = loglik;

    Ok(GibbsOutcome {
        site,
        address: space.address(site).clone(),
        chosen: support[chosen],
        support_size: support.len(),
    })
}

/// Runs one chain: at each step an enumerative Gibbs update of a uniformly
/// chosen enumerable address with probability `gibbs_probability`, otherwise
/// a single-site Metropolis-Hastings transition. Deterministic for a fixed
/// (model, config) pair.
pub fn run_chain<M: SceneModel>(
    model: &M,
    config: &ChainConfig,
) -> Result<(Vec<Trace<M::Render>>, ChainDiagnostics)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = init_trace_impl(model, &mut rng)?;

    let space = model.space();
    let mut samples = Vec::new();
    let mut diagnostics = ChainDiagnostics::default();

    for step in 1..=config.steps {
        let use_gibbs =
            rng.gen::<f64>() < config.gibbs_probability && !space.enumerable().is_empty();
        let (accepted, address, kind) = if use_gibbs {
            let pick = rng.gen_range(0..space.enumerable().len());
            let site = space.enumerable()[pick];
            let out = gibbs_step_at(model, &mut trace, site, &mut rng)?;
            (true, out.address, StepKind::Gibbs)
        } else {
            let out = mh_step(model, &mut trace, &mut rng);
            (out.accepted, out.address, StepKind::MetropolisHastings)
        };

        if step % config.record_every == 0 {
            diagnostics.rows.push(DiagRow {
                step,
                log_prior: trace.log_prior(),
                log_likelihood: trace.cached_loglik,
                accepted,
                address,
                kind,
            });
        }
        if step % config.thin == 0 {
            samples.push(trace.clone());
        }
    }

    Ok((samples, diagnostics))
}

fn init_trace_impl<M: SceneModel, R: Rng + ?Sized>(
    model: &M,
    rng: &mut R,
) -> Result<Trace<M::Render>> {
    let space = model.space();
    let mut choices = Vec::with_capacity(space.len());
    for (_, dist) in space.iter() {
        let value = dist.sample(rng)?;
        choices.push(Choice::new(value, *dist));
    }
    let values = super::trace::Values::from(choices.as_slice());
    let render = model.render(values);
    let loglik = model.log_likelihood(&render, values);
    if !loglik.is_finite() {
        return Err(Error::Model(format!(
            "likelihood of a prior sample is {loglik}; models must score every prior draw finitely"
        )));
    }
    Ok(Trace::from_parts(choices, render, loglik))
}
