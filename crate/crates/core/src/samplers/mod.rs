//! Single-step MCMC kernels over `{0..C}^N` with Metropolis–Hastings
//! correction, and an acceptance-rate tuner.
//!
//! Each chain owns a [`ChainState`] (position, cached energy, cached
//! log-ratio sweep, RNG stream, counters). Kernels are dispatched on
//! [`SamplerKind`] by [`step`].
//!
//! Energy evaluations are charged per step by a fixed convention: one unit
//! per energy `f(·)` and one per full log-ratio sweep (exact or gradient) that
//! a memoryless implementation would compute. See
//! [`SamplerConfig::evals_per_step`].

mod baseline;
mod factorized;
mod local;
mod mh;
mod tune;

pub use baseline::{step_block_gibbs, step_hamming_ball, step_rwm};
pub use factorized::{proposal_rows, step_dlmc, step_dlmcf, step_dmala};
pub use local::{step_gwg, step_pas, MoveLaw};
pub use mh::{acceptance_probability, mh_accept};
pub use tune::{tune, TuneReport, TuneStatus, TUNE_WINDOW};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::WeightFunction;
use crate::error::{Error, Result};
use crate::model::{fill_log_ratios, EnergyModel, LogRatioTable, RatioSource, ENUMERATION_CAP};
use crate::state::State;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Rwm,
    BlockGibbs,
    HammingBall,
    Gwg,
    Pas,
    Dmala,
    Dlmcf,
    Dlmc,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 8] = [
        SamplerKind::Rwm,
        SamplerKind::BlockGibbs,
        SamplerKind::HammingBall,
        SamplerKind::Gwg,
        SamplerKind::Pas,
        SamplerKind::Dmala,
        SamplerKind::Dlmcf,
        SamplerKind::Dlmc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Rwm => "rwm",
            SamplerKind::BlockGibbs => "block_gibbs",
            SamplerKind::HammingBall => "hamming_ball",
            SamplerKind::Gwg => "gwg",
            SamplerKind::Pas => "pas",
            SamplerKind::Dmala => "dmala",
            SamplerKind::Dlmcf => "dlmcf",
            SamplerKind::Dlmc => "dlmc",
        }
    }

    /// Kinds whose proposal is built from `g` of the log-ratios.
    pub fn uses_weight(self) -> bool {
        matches!(
            self,
            SamplerKind::Gwg | SamplerKind::Pas | SamplerKind::Dmala | SamplerKind::Dlmcf | SamplerKind::Dlmc
        )
    }

    pub fn uses_step(self) -> bool {
        matches!(self, SamplerKind::Dmala | SamplerKind::Dlmcf | SamplerKind::Dlmc)
    }

    pub fn uses_flips(self) -> bool {
        matches!(self, SamplerKind::Rwm | SamplerKind::Pas)
    }

    pub fn uses_block(self) -> bool {
        matches!(self, SamplerKind::BlockGibbs | SamplerKind::HammingBall)
    }
}

/// Sampler choice and hyperparameters. Unused fields are ignored; missing
/// ones fall back to per-kind defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    #[serde(default)]
    pub weight: WeightFunction,
    /// `h` for dlmc / dlmcf, `α` for dmala.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Flipped sites for rwm, path length for pas.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flips: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<usize>,
    #[serde(default)]
    pub ratio_source: RatioSource,
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind) -> Self {
        Self {
            kind,
            weight: WeightFunction::default(),
            step: None,
            flips: None,
            block_size: None,
            ratio_source: RatioSource::default(),
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = Some(step);
        self
    }

    pub fn with_flips(mut self, flips: usize) -> Self {
        self.flips = Some(flips);
        self
    }

    pub fn with_block_size(mut self, block_size: usize) -> Self {
        self.block_size = Some(block_size);
        self
    }

    pub fn with_weight(mut self, weight: WeightFunction) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_ratio_source(mut self, source: RatioSource) -> Self {
        self.ratio_source = source;
        self
    }

    pub fn step(&self) -> f64 {
        self.step.unwrap_or(match self.kind {
            SamplerKind::Dmala => 1.0,
            SamplerKind::Dlmcf => 0.5,
            _ => 1.0,
        })
    }

    pub fn flips(&self) -> usize {
        self.flips.unwrap_or(1)
    }

    pub fn block_size(&self) -> usize {
        self.block_size.unwrap_or(match self.kind {
            SamplerKind::HammingBall => 10,
            _ => 2,
        })
    }

    /// The tuned hyperparameter, if the kind has one.
    pub fn tunable_value(&self) -> Option<f64> {
        match self.kind {
            k if k.uses_step() => Some(self.step()),
            k if k.uses_flips() => Some(self.flips() as f64),
            _ => None,
        }
    }

    /// Every problem with the configuration; empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let name = self.kind.name();
        if let Some(s) = self.step {
            if !(s > 0.0) || !s.is_finite() {
                out.push(format!("{name}: step must be positive and finite, got {s}"));
            }
        }
        if self.flips == Some(0) {
            out.push(format!("{name}: flips must be at least 1"));
        }
        if self.block_size == Some(0) {
            out.push(format!("{name}: block_size must be at least 1"));
        }
        out
    }

    /// Violations that depend on the model's shape.
    pub fn violations_for(&self, dim: usize, n_categories: usize) -> Vec<String> {
        let mut out = self.violations();
        if self.kind == SamplerKind::BlockGibbs {
            let b = self.block_size().min(dim) as u32;
            if (n_categories as u128).pow(b) > ENUMERATION_CAP as u128 {
                out.push(format!(
                    "block_gibbs: {n_categories}^{b} block configurations exceed {ENUMERATION_CAP}"
                ));
            }
        }
        out
    }

    /// Evaluations charged per step on a model with `n_categories` categories.
    ///
    /// * rwm: 2 energies
    /// * gwg, dmala, dlmcf, dlmc: sweeps at `x` and `y` plus 2 energies = 4
    /// * pas with path length `L`: `L + 1` sweeps plus 2 energies
    /// * block_gibbs with block `b`: `C^b` energies
    /// * hamming_ball with block `b`: `1 + b(C − 1)` energies (the ball)
    pub fn evals_per_step(&self, dim: usize, n_categories: usize) -> u64 {
        let c = n_categories as u64;
        match self.kind {
            SamplerKind::Rwm => 2,
            SamplerKind::Gwg | SamplerKind::Dmala | SamplerKind::Dlmcf | SamplerKind::Dlmc => 4,
            SamplerKind::Pas => self.flips() as u64 + 3,
            SamplerKind::BlockGibbs => c.pow(self.block_size().min(dim) as u32),
            SamplerKind::HammingBall => 1 + self.block_size().min(dim) as u64 * (c - 1),
        }
    }

    /// Short label, e.g. `dlmc[sqrt]`.
    pub fn label(&self) -> String {
        if self.kind.uses_weight() {
            format!("{}[{}]", self.kind.name(), self.weight.name())
        } else {
            self.kind.name().to_string()
        }
    }
}

/// Per-chain counters and trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub steps: u64,
    pub accepted: u64,
    pub energy_evals: u64,
    /// Proposal rows whose Euler diagonal was clamped (dlmcf only).
    pub clamp_events: u64,
    /// `f(x_t)` after each step.
    pub trace: Vec<f64>,
    /// Tuned hyperparameter after each adaptation step.
    pub hyper_history: Vec<f64>,
    pub seed: u64,
}

impl RunRecord {
    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps as f64
        }
    }
}

/// Result of one kernel application.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    /// MH acceptance probability of the proposal.
    pub accept_prob: f64,
}

/// Mutable state of one chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    x: State,
    log_pi_x: f64,
    rng: ChaCha8Rng,
    pub record: RunRecord,
    sweep: Option<(RatioSource, LogRatioTable)>,
}

impl ChainState {
    pub fn new<M: EnergyModel + ?Sized>(model: &M, x0: State, seed: u64) -> Result<Self> {
        model.check_state(&x0)?;
        let log_pi_x = -model.energy_of(x0.values());
        if !log_pi_x.is_finite() {
            return Err(Error::Domain(format!("start state has energy {}", -log_pi_x)));
        }
        Ok(Self {
            x: x0,
            log_pi_x,
            rng: ChaCha8Rng::seed_from_u64(seed),
            record: RunRecord {
                seed,
                ..RunRecord::default()
            },
            sweep: None,
        })
    }

    /// Starts from a uniformly random state drawn from the chain's own stream.
    pub fn random<M: EnergyModel + ?Sized>(model: &M, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = State::random(model.dim(), model.n_categories(), &mut rng);
        let mut chain = Self::new(model, x0, seed)?;
        chain.rng = rng;
        Ok(chain)
    }

    pub fn x(&self) -> &State {
        &self.x
    }

    /// `log π(x)` up to the normalizer, i.e. `−f(x)`.
    pub fn log_pi_x(&self) -> f64 {
        self.log_pi_x
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Clears counters and trace, keeping position, cache and RNG.
    pub fn reset_record(&mut self) {
        self.record = RunRecord {
            seed: self.record.seed,
            ..RunRecord::default()
        };
    }

    fn take_sweep<M: EnergyModel + ?Sized>(&mut self, model: &M, source: RatioSource) -> LogRatioTable {
        match self.sweep.take() {
            Some((s, table)) if s == source => table,
            _ => sweep_at(model, &self.x, source),
        }
    }

    fn move_to(&mut self, y: State, log_pi_y: f64, sweep: Option<(RatioSource, LogRatioTable)>) {
        self.x = y;
        self.log_pi_x = log_pi_y;
        self.sweep = sweep;
    }
}

fn sweep_at<M: EnergyModel + ?Sized>(model: &M, x: &State, source: RatioSource) -> LogRatioTable {
    let mut table = LogRatioTable::zeros(model.dim(), model.n_categories());
    fill_log_ratios(model, x.values(), source, &mut table);
    table
}

/// Applies one step of `config`'s kernel and updates the chain's record.
pub fn step<M: EnergyModel + ?Sized>(
    chain: &mut ChainState,
    model: &M,
    config: &SamplerConfig,
) -> Result<StepOutcome> {
    let outcome = match config.kind {
        SamplerKind::Rwm => step_rwm(chain, model, config)?,
        SamplerKind::BlockGibbs => step_block_gibbs(chain, model, config)?,
        SamplerKind::HammingBall => step_hamming_ball(chain, model, config)?,
        SamplerKind::Gwg => step_gwg(chain, model, config)?,
        SamplerKind::Pas => step_pas(chain, model, config)?,
        SamplerKind::Dmala => step_dmala(chain, model, config)?,
        SamplerKind::Dlmcf => step_dlmcf(chain, model, config)?,
        SamplerKind::Dlmc => step_dlmc(chain, model, config)?,
    };
    let r = &mut chain.record;
    r.steps += 1;
    r.accepted += outcome.accepted as u64;
    r.energy_evals += config.evals_per_step(model.dim(), model.n_categories());
    r.trace.push(-chain.log_pi_x);
    Ok(outcome)
}

/// Runs `steps` steps, calling `observe` with the state after each.
pub fn run_chain<M: EnergyModel + ?Sized>(
    chain: &mut ChainState,
    model: &M,
    config: &SamplerConfig,
    steps: u64,
    mut observe: impl FnMut(&State),
) -> Result<()> {
    let problems = config.violations_for(model.dim(), model.n_categories());
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    for _ in 0..steps {
        step(chain, model, config)?;
        observe(&chain.x);
    }
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bernoulli, IsingPotts};

    #[test]
    fn config_json_defaults() {
        let c: SamplerConfig = serde_json::from_str(r#"{"kind": "dlmc", "step": 2.0}"#).unwrap();
        assert_eq!(c.kind, SamplerKind::Dlmc);
        assert_eq!(c.weight, WeightFunction::Sqrt);
        assert_eq!(c.step(), 2.0);
        assert_eq!(c.ratio_source, RatioSource::Gradient);
        let c: SamplerConfig = serde_json::from_str(r#"{"kind": "hamming_ball"}"#).unwrap();
        assert_eq!(c.block_size(), 10);
        assert!(serde_json::from_str::<SamplerConfig>(r#"{"kind": "dlmc", "stepp": 1}"#).is_err());
        let back: SamplerConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn violations_are_listed() {
        let c = SamplerConfig {
            step: Some(-1.0),
            flips: Some(0),
            block_size: Some(0),
            ..SamplerConfig::new(SamplerKind::Pas)
        };
        assert_eq!(c.violations().len(), 3);
        let bg = SamplerConfig::new(SamplerKind::BlockGibbs).with_block_size(17);
        assert!(bg.violations_for(100, 2).len() == 1);
        assert!(bg.violations_for(10, 2).is_empty());
    }

    #[test]
    fn eval_accounting() {
        let m = IsingPotts::new(2, 3, 3, vec![0.1; 18], 0.3).unwrap();
        for kind in SamplerKind::ALL {
            let config = SamplerConfig::new(kind).with_flips(2).with_block_size(2);
            let mut chain = ChainState::random(&m, 1).unwrap();
            run_chain(&mut chain, &m, &config, 25, |_| {}).unwrap();
            let per = match kind {
                SamplerKind::Rwm => 2,
                SamplerKind::Pas => 5,
                SamplerKind::BlockGibbs => 9,
                SamplerKind::HammingBall => 5,
                _ => 4,
            };
            assert_eq!(chain.record.energy_evals, 25 * per, "{kind:?}");
            assert_eq!(chain.record.steps, 25);
            assert_eq!(chain.record.trace.len(), 25);
            assert!(chain.record.accepted <= 25);
        }
    }

    #[test]
    fn log_pi_tracks_state() {
        let m = Bernoulli::new(5, 3, (0..15).map(|i| (i as f64).sin()).collect()).unwrap();
        for kind in SamplerKind::ALL {
            let mut chain = ChainState::random(&m, 7).unwrap();
            let config = SamplerConfig::new(kind);
            run_chain(&mut chain, &m, &config, 200, |_| {}).unwrap();
            assert!((chain.log_pi_x() + m.energy_of(chain.x().values())).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let m = IsingPotts::new(3, 3, 2, vec![0.2; 18], 0.4).unwrap();
        for kind in SamplerKind::ALL {
            let config = SamplerConfig::new(kind);
            let run = |seed| {
                let mut chain = ChainState::random(&m, seed).unwrap();
                run_chain(&mut chain, &m, &config, 300, |_| {}).unwrap();
                chain.record
            };
            assert_eq!(run(3), run(3));
            assert_ne!(run(3).trace, run(4).trace);
        }
    }

    #[test]
    fn uniform_target_accepts_everything() {
        let m = Bernoulli::new(6, 3, vec![0.0; 18]).unwrap();
        for kind in SamplerKind::ALL {
            let config = SamplerConfig::new(kind).with_flips(3).with_step(2.0);
            let mut chain = ChainState::random(&m, 11).unwrap();
            run_chain(&mut chain, &m, &config, 500, |_| {}).unwrap();
            assert_eq!(chain.record.accepted, 500, "{kind:?}");
        }
    }
}
