//! The optimization loop: propose a pair, record the preference and both
//! constraint values, refit the surrogates.
//!
//! Random draws and refits are keyed by the iteration index, so the state
//! after `n` iterations depends only on the configuration and the recorded
//! history. [`Engine::replay`] relies on this to rebuild an engine from a log.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::acquisition::{feasibility_factors, maximize_pair, AcqConfig, AcqPolicy};
use crate::error::{Error, Result};
use crate::gp::{fit_gp, GpFitConfig, GpModel};
use crate::pref::{fit_pref_model, PrefFitConfig, PrefModel, PreferenceDataset};
use crate::rng::{derive_seed, stream_rng, streams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// EUBOC with a warm-started constraint surrogate.
    Euboc,
    /// EUBOC whose constraint surrogate starts empty.
    EubocCold,
    /// Unconstrained EUBO.
    Eubo,
    /// EUBO where a feasible candidate automatically beats an infeasible one.
    EuboCons,
    /// Two independent uniform points per iteration.
    Random,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::Euboc,
        Policy::EubocCold,
        Policy::Eubo,
        Policy::EuboCons,
        Policy::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Euboc => "euboc",
            Policy::EubocCold => "euboc-cold",
            Policy::Eubo => "eubo",
            Policy::EuboCons => "eubo-cons",
            Policy::Random => "random",
        }
    }

    /// Whether the policy keeps a constraint surrogate.
    pub fn models_constraint(self) -> bool {
        matches!(self, Policy::Euboc | Policy::EubocCold)
    }

    pub fn warm_starts(self) -> bool {
        self == Policy::Euboc
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == key)
            .ok_or_else(|| Error::invalid(format!("unknown policy {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    I,
    J,
}

/// `Some(I)` if only `x_i` is feasible, `Some(J)` if only `x_j` is.
pub fn auto_win_rule(c_i: f64, c_j: f64, lambda: f64) -> Option<Winner> {
    match (c_i >= lambda, c_j >= lambda) {
        (true, false) => Some(Winner::I),
        (false, true) => Some(Winner::J),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub n: usize,
    pub x_i: Vec<f64>,
    pub x_j: Vec<f64>,
    pub winner: Winner,
    pub c_i: f64,
    pub c_j: f64,
    pub auto_won: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl WarmStart {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub records: Vec<HistoryRecord>,
    pub warm_start: WarmStart,
}

impl History {
    /// One JSON object per iteration, newline-terminated.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn parse_json_lines(text: &str) -> Result<Vec<HistoryRecord>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                serde_json::from_str(l)
                    .map_err(|e| Error::invalid(format!("history line {}: {e}", i + 1)))
            })
            .collect()
    }
}

fn sample_unit(rng: &mut crate::rng::Rng, dims: usize) -> Vec<f64> {
    (0..dims).map(|_| rng.random::<f64>()).collect()
}

/// Sample `n_points` uniformly from the unit box and evaluate the constraint
/// there. A non-finite value aborts with the offending point.
pub fn sample_warm_start<F>(mut constraint: F, dims: usize, n_points: usize, seed: u64) -> Result<WarmStart>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut rng = stream_rng(seed, streams::WARM_START, 0);
    let mut ws = WarmStart::default();
    for _ in 0..n_points {
        let x = sample_unit(&mut rng, dims);
        let c = constraint(&x);
        if !c.is_finite() {
            return Err(Error::Evaluation { point: x, value: c });
        }
        ws.points.push(x);
        ws.values.push(c);
    }
    Ok(ws)
}

/// Warm-start sample plus the constraint surrogate trained on it; with
/// `n_points = 0` the model is the prior.
pub fn warm_start<F>(
    constraint: F,
    dims: usize,
    n_points: usize,
    cfg: &GpFitConfig,
    seed: u64,
) -> Result<(WarmStart, GpModel)>
where
    F: FnMut(&[f64]) -> f64,
{
    let ws = sample_warm_start(constraint, dims, n_points, seed)?;
    let model = fit_gp(
        ws.points.clone(),
        ws.values.clone(),
        dims,
        cfg,
        derive_seed(seed, streams::CONSTRAINT_FIT, 0),
    )?;
    Ok((ws, model))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub dims: usize,
    pub policy: Policy,
    pub lambda: f64,
    pub seed: u64,
    pub sigma_cmp: f64,
    pub num_restarts: usize,
    pub raw_samples: usize,
    pub sigma_floor: f64,
    pub pref_fit: PrefFitConfig,
    pub constraint_fit: GpFitConfig,
}

impl EngineConfig {
    pub fn new(dims: usize, policy: Policy, lambda: f64, seed: u64) -> Self {
        let acq = AcqConfig::default();
        Self {
            dims,
            policy,
            lambda,
            seed,
            sigma_cmp: 1.0,
            num_restarts: acq.num_restarts,
            raw_samples: acq.raw_samples,
            sigma_floor: acq.sigma_floor,
            pref_fit: PrefFitConfig::default(),
            constraint_fit: GpFitConfig::default(),
        }
    }

    fn acq(&self, iteration: usize) -> AcqConfig {
        AcqConfig {
            lambda: self.lambda,
            num_restarts: self.num_restarts,
            raw_samples: self.raw_samples,
            sigma_floor: self.sigma_floor,
            seed: derive_seed(self.seed, streams::PROPOSAL, iteration as u64),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 {
            return Err(Error::invalid("dims must be at least 1"));
        }
        if !self.lambda.is_finite() {
            return Err(Error::invalid("lambda must be finite"));
        }
        if !(self.sigma_cmp.is_finite() && self.sigma_cmp > 0.0) {
            return Err(Error::invalid("sigma_cmp must be positive"));
        }
        self.acq(0).validate()
    }
}

/// Everything needed to rebuild an engine exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSnapshot {
    pub config: EngineConfig,
    pub history: History,
    pub pending: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub struct Engine {
    cfg: EngineConfig,
    dataset: PreferenceDataset,
    objective: PrefModel,
    constraint: Option<GpModel>,
    history: History,
    pending: Option<(Vec<f64>, Vec<f64>)>,
    constraint_queries: usize,
}

impl Engine {
    /// Start a run. The warm-start sample is used only by [`Policy::Euboc`].
    pub fn new(cfg: EngineConfig, warm: WarmStart) -> Result<Self> {
        cfg.validate()?;
        let warm = if cfg.policy.warm_starts() {
            warm
        } else {
            WarmStart::default()
        };
        let dataset = PreferenceDataset::new(cfg.dims, cfg.sigma_cmp)?;
        let mut engine = Self {
            objective: fit_pref_model(&dataset, &cfg.pref_fit, 0)?,
            dataset,
            constraint: None,
            history: History {
                records: Vec::new(),
                warm_start: warm,
            },
            pending: None,
            constraint_queries: 0,
            cfg,
        };
        engine.refit_constraint()?;
        Ok(engine)
    }

    /// Sample the warm start from `constraint` (when the policy uses one)
    /// and start a run.
    pub fn with_warm_start<F>(cfg: EngineConfig, constraint: F, warm_points: usize) -> Result<Self>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = if cfg.policy.warm_starts() { warm_points } else { 0 };
        let ws = sample_warm_start(constraint, cfg.dims, n, cfg.seed)?;
        Self::new(cfg, ws)
    }

    /// Rebuild the state reached after `records`, fitting the surrogates once.
    pub fn replay(cfg: EngineConfig, warm: WarmStart, records: &[HistoryRecord]) -> Result<Self> {
        let mut engine = Self::new(cfg, warm)?;
        for (k, r) in records.iter().enumerate() {
            if r.n != k + 1 {
                return Err(Error::invalid(format!("record {} has iteration {}", k + 1, r.n)));
            }
            engine.ingest(r.clone())?;
        }
        if !records.is_empty() {
            engine.refit()?;
        }
        Ok(engine)
    }

    pub fn snapshot(&self) -> EngineSnapshot {
        EngineSnapshot {
            config: self.cfg.clone(),
            history: self.history.clone(),
            pending: self.pending.clone(),
        }
    }

    pub fn restore(snapshot: EngineSnapshot) -> Result<Self> {
        let mut engine = Self::replay(
            snapshot.config,
            snapshot.history.warm_start,
            &snapshot.history.records,
        )?;
        if let Some((xi, xj)) = &snapshot.pending {
            if xi.len() != engine.cfg.dims || xj.len() != engine.cfg.dims {
                return Err(Error::invalid("pending pair has the wrong dimension"));
            }
        }
        engine.pending = snapshot.pending;
        Ok(engine)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn policy(&self) -> Policy {
        self.cfg.policy
    }

    /// Completed iterations.
    pub fn iteration(&self) -> usize {
        self.history.records.len()
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn dataset(&self) -> &PreferenceDataset {
        &self.dataset
    }

    pub fn objective(&self) -> &PrefModel {
        &self.objective
    }

    pub fn constraint(&self) -> Option<&GpModel> {
        self.constraint.as_ref()
    }

    pub fn pending(&self) -> Option<&(Vec<f64>, Vec<f64>)> {
        self.pending.as_ref()
    }

    /// Constraint-surrogate evaluations made so far.
    pub fn constraint_queries(&self) -> usize {
        self.constraint_queries
    }

    /// The uniform pair used when there is nothing to optimize, keyed by the
    /// seed and the iteration only.
    pub fn random_pair(&self) -> (Vec<f64>, Vec<f64>) {
        let mut rng = stream_rng(self.cfg.seed, streams::RANDOM_PAIR, self.iteration() as u64 + 1);
        let xi = sample_unit(&mut rng, self.cfg.dims);
        let xj = sample_unit(&mut rng, self.cfg.dims);
        (xi, xj)
    }

    /// The pair to compare next. Asking again before feedback returns the
    /// same pair.
    pub fn propose_pair(&mut self) -> Result<(Vec<f64>, Vec<f64>)> {
        if let Some(p) = &self.pending {
            return Ok(p.clone());
        }
        let no_comparisons = self.dataset.comparisons().is_empty();
        let informed_start = self.cfg.policy.warm_starts()
            && self.constraint.as_ref().is_some_and(|c| !c.is_empty());
        let pair = match self.cfg.policy {
            Policy::Random => self.random_pair(),
            _ if no_comparisons && !informed_start => self.random_pair(),
            policy => {
                let acq_policy = if policy.models_constraint() {
                    AcqPolicy::Euboc
                } else {
                    AcqPolicy::Eubo
                };
                let cfg = self.cfg.acq(self.iteration() + 1);
                let prop = maximize_pair(&self.objective, self.constraint.as_ref(), &cfg, acq_policy)?;
                self.constraint_queries += prop.constraint_queries;
                (prop.xi, prop.xj)
            }
        };
        self.pending = Some(pair.clone());
        Ok(pair)
    }

    /// Marginal probability that `x` is feasible under the constraint
    /// surrogate, or `None` for policies without one.
    pub fn feasibility(&mut self, x: &[f64]) -> Option<f64> {
        let model = self.constraint.as_ref()?;
        self.constraint_queries += 1;
        Some(feasibility_factors(model, &[x.to_vec()], self.cfg.lambda)[0])
    }

    /// Record the outcome for the pending pair and refit. Under
    /// [`Policy::EuboCons`] the auto-win rule overrides `winner` whenever
    /// exactly one candidate is feasible.
    pub fn apply_feedback(&mut self, winner: Winner, c_i: f64, c_j: f64) -> Result<HistoryRecord> {
        let (x_i, x_j) = self
            .pending
            .clone()
            .ok_or_else(|| Error::State("no pair is pending".into()))?;
        for (x, c) in [(&x_i, c_i), (&x_j, c_j)] {
            if !c.is_finite() {
                return Err(Error::Evaluation { point: x.clone(), value: c });
            }
        }
        let auto = match self.cfg.policy {
            Policy::EuboCons => auto_win_rule(c_i, c_j, self.cfg.lambda),
            _ => None,
        };
        let record = HistoryRecord {
            n: self.iteration() + 1,
            x_i,
            x_j,
            winner: auto.unwrap_or(winner),
            c_i,
            c_j,
            auto_won: auto.is_some(),
        };
        let mut next = self.clone();
        next.ingest(record.clone())?;
        next.refit()?;
        next.pending = None;
        *self = next;
        Ok(record)
    }

    /// One full iteration against callable stand-ins for the constraint and
    /// the chooser. `choose` is not consulted when the auto-win rule decides.
    pub fn step<C, O>(&mut self, mut constraint: C, mut choose: O) -> Result<HistoryRecord>
    where
        C: FnMut(&[f64]) -> f64,
        O: FnMut(&[f64], &[f64]) -> Winner,
    {
        let (xi, xj) = self.propose_pair()?;
        let (ci, cj) = (constraint(&xi), constraint(&xj));
        let auto = match self.cfg.policy {
            Policy::EuboCons if ci.is_finite() && cj.is_finite() => {
                auto_win_rule(ci, cj, self.cfg.lambda)
            }
            _ => None,
        };
        let winner = auto.unwrap_or_else(|| choose(&xi, &xj));
        self.apply_feedback(winner, ci, cj)
    }

    /// Best observed feasible point by posterior mean, with that mean.
    pub fn incumbent(&self) -> Option<(Vec<f64>, f64)> {
        let mut best: Option<(Vec<f64>, f64)> = None;
        for r in &self.history.records {
            for (x, c) in [(&r.x_i, r.c_i), (&r.x_j, r.c_j)] {
                if c < self.cfg.lambda {
                    continue;
                }
                let m = self.objective.mean(x);
                if best.as_ref().is_none_or(|(_, b)| m > *b) {
                    best = Some((x.clone(), m));
                }
            }
        }
        best
    }

    fn ingest(&mut self, r: HistoryRecord) -> Result<()> {
        let (w, l) = match r.winner {
            Winner::I => (&r.x_i, &r.x_j),
            Winner::J => (&r.x_j, &r.x_i),
        };
        self.dataset.add_preference(w, l)?;
        self.history.records.push(r);
        Ok(())
    }

    fn refit(&mut self) -> Result<()> {
        let n = self.iteration() as u64;
        self.objective = fit_pref_model(
            &self.dataset,
            &self.cfg.pref_fit,
            derive_seed(self.cfg.seed, streams::OBJECTIVE_FIT, n),
        )?;
        self.refit_constraint()
    }

    fn refit_constraint(&mut self) -> Result<()> {
        if !self.cfg.policy.models_constraint() {
            self.constraint = None;
            return Ok(());
        }
        let ws = &self.history.warm_start;
        let mut inputs = ws.points.clone();
        let mut targets = ws.values.clone();
        for r in &self.history.records {
            inputs.push(r.x_i.clone());
            targets.push(r.c_i);
            inputs.push(r.x_j.clone());
            targets.push(r.c_j);
        }
        let n = self.iteration() as u64;
        self.constraint = Some(fit_gp(
            inputs,
            targets,
            self.cfg.dims,
            &self.cfg.constraint_fit,
            derive_seed(self.cfg.seed, streams::CONSTRAINT_FIT, n),
        )?);
        Ok(())
    }
}
