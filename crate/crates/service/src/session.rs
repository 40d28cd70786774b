//! One interactive optimization session and its wire payloads.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use cpbo_core::acquisition::feasibility_factors;
use cpbo_core::engine::EngineSnapshot;
use cpbo_core::{Engine, EngineConfig, HistoryRecord, Policy, Winner};
use serde::{Deserialize, Serialize};

use crate::constraint::Registry;
use crate::error::ApiError;
use crate::space::DesignSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Active,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub params: BTreeMap<String, f64>,
    /// Surrogate probability that the candidate meets the constraint;
    /// absent for policies without a constraint surrogate.
    pub feasibility_probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPayload {
    pub session_id: String,
    pub nonce: String,
    /// 1-based index of this comparison.
    pub n: usize,
    pub budget: usize,
    pub render_template: String,
    pub candidates: [Candidate; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceResponse {
    pub session_id: String,
    pub status: Status,
    /// Comparisons recorded so far.
    pub recorded: usize,
    pub auto_won: bool,
    pub pair: Option<PairPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestDesign {
    pub params: BTreeMap<String, f64>,
    pub render_template: String,
    pub posterior_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestPayload {
    pub session_id: String,
    pub status: Status,
    pub best: Option<BestDesign>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    #[serde(flatten)]
    pub record: HistoryRecord,
    pub params_i: BTreeMap<String, f64>,
    pub params_j: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryPayload {
    pub session_id: String,
    pub status: Status,
    pub budget: usize,
    pub records: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub nonce: String,
    pub winner: Winner,
    pub response: ChoiceResponse,
}

/// Everything about a session except the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub id: String,
    pub design_space: DesignSpace,
    pub lambda: f64,
    pub budget: usize,
    pub warm_points: usize,
    pub status: Status,
    pub created_at: u64,
    pub updated_at: u64,
    /// Nonce of the pending pair.
    pub nonce: Option<String>,
    /// The most recent accepted choice, replayed on duplicate submission.
    pub last_answer: Option<Answer>,
}

/// On-disk form of a session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionFile {
    #[serde(flatten)]
    pub meta: SessionMeta,
    pub engine: EngineSnapshot,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub meta: SessionMeta,
    pub engine: Engine,
}

#[derive(Debug, Clone)]
pub struct NewSession {
    pub design_space: DesignSpace,
    pub budget: usize,
    pub warm_points: usize,
    pub seed: u64,
    pub policy: Policy,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn new_nonce() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

impl Session {
    /// Warm-start the engine and draw the first pair.
    pub fn create(id: String, req: NewSession, registry: &Registry) -> Result<Self, ApiError> {
        let lambda = req.design_space.validate(registry)?;
        if req.budget == 0 {
            return Err(ApiError::bad_request("budget must be at least 1"));
        }
        let constraint = registry
            .get(&req.design_space.constraint.id)
            .expect("validated above")
            .eval
            .clone();
        let space = req.design_space.clone();
        let cfg = EngineConfig::new(space.dims(), req.policy, lambda, req.seed);
        let eval = |u: &[f64]| constraint(&space.to_native(u));
        let mut engine = Engine::with_warm_start(cfg, eval, req.warm_points)?;
        engine.propose_pair()?;
        let t = now();
        Ok(Self {
            meta: SessionMeta {
                id,
                design_space: req.design_space,
                lambda,
                budget: req.budget,
                warm_points: req.warm_points,
                status: Status::Active,
                created_at: t,
                updated_at: t,
                nonce: Some(new_nonce()),
                last_answer: None,
            },
            engine,
        })
    }

    pub fn to_file(&self) -> SessionFile {
        SessionFile {
            meta: self.meta.clone(),
            engine: self.engine.snapshot(),
        }
    }

    pub fn from_file(file: SessionFile) -> Result<Self, ApiError> {
        Ok(Self {
            engine: Engine::restore(file.engine)?,
            meta: file.meta,
        })
    }

    pub fn id(&self) -> &str {
        &self.meta.id
    }

    /// Feasibility probabilities of unit-box points under the current
    /// constraint surrogate.
    pub fn feasibility(&self, points: &[Vec<f64>]) -> Vec<Option<f64>> {
        match self.engine.constraint() {
            Some(model) => feasibility_factors(model, points, self.meta.lambda)
                .into_iter()
                .map(Some)
                .collect(),
            None => vec![None; points.len()],
        }
    }

    fn params(&self, u: &[f64]) -> BTreeMap<String, f64> {
        let space = &self.meta.design_space;
        space.to_map(&space.to_native(u))
    }

    pub fn pair(&self) -> Result<PairPayload, ApiError> {
        if self.meta.status == Status::Completed {
            return Err(ApiError::conflict("session is completed"));
        }
        let (nonce, (xi, xj)) = match (&self.meta.nonce, self.engine.pending()) {
            (Some(n), Some(p)) => (n.clone(), p.clone()),
            _ => return Err(ApiError::internal("active session has no pending pair")),
        };
        let probs = self.feasibility(&[xi.clone(), xj.clone()]);
        Ok(PairPayload {
            session_id: self.meta.id.clone(),
            nonce,
            n: self.engine.iteration() + 1,
            budget: self.meta.budget,
            render_template: self.meta.design_space.render_template.clone(),
            candidates: [
                Candidate { params: self.params(&xi), feasibility_probability: probs[0] },
                Candidate { params: self.params(&xj), feasibility_probability: probs[1] },
            ],
        })
    }

    /// Apply a choice to a copy of the session. The caller commits the
    /// returned session once it has been persisted.
    pub fn submit(
        &self,
        nonce: &str,
        winner: Winner,
        registry: &Registry,
    ) -> Result<(Option<Session>, ChoiceResponse), ApiError> {
        if let Some(prev) = &self.meta.last_answer {
            if prev.nonce == nonce {
                return if prev.winner == winner {
                    Ok((None, prev.response.clone()))
                } else {
                    Err(ApiError::conflict("this pair was already answered with the other winner"))
                };
            }
        }
        if self.meta.status == Status::Completed {
            return Err(ApiError::conflict("session is completed"));
        }
        if self.meta.nonce.as_deref() != Some(nonce) {
            return Err(ApiError::conflict("nonce does not match the pending pair"));
        }
        let constraint = registry
            .get(&self.meta.design_space.constraint.id)
            .ok_or_else(|| ApiError::internal("session constraint is no longer registered"))?;
        let (xi, xj) = self
            .engine
            .pending()
            .cloned()
            .ok_or_else(|| ApiError::internal("active session has no pending pair"))?;
        let space = &self.meta.design_space;
        let c_i = (constraint.eval)(&space.to_native(&xi));
        let c_j = (constraint.eval)(&space.to_native(&xj));

        let mut next = self.clone();
        let record = next.engine.apply_feedback(winner, c_i, c_j)?;
        let recorded = next.engine.iteration();
        if recorded >= next.meta.budget {
            next.meta.status = Status::Completed;
            next.meta.nonce = None;
        } else {
            next.engine.propose_pair()?;
            next.meta.nonce = Some(new_nonce());
        }
        let response = ChoiceResponse {
            session_id: next.meta.id.clone(),
            status: next.meta.status,
            recorded,
            auto_won: record.auto_won,
            pair: match next.meta.status {
                Status::Active => Some(next.pair()?),
                Status::Completed => None,
            },
        };
        next.meta.updated_at = now();
        next.meta.last_answer = Some(Answer {
            nonce: nonce.to_string(),
            winner,
            response: response.clone(),
        });
        Ok((Some(next), response))
    }

    pub fn best(&self) -> BestPayload {
        BestPayload {
            session_id: self.meta.id.clone(),
            status: self.meta.status,
            best: self.engine.incumbent().map(|(x, m)| BestDesign {
                params: self.params(&x),
                render_template: self.meta.design_space.render_template.clone(),
                posterior_mean: m,
            }),
        }
    }

    pub fn history(&self) -> HistoryPayload {
        HistoryPayload {
            session_id: self.meta.id.clone(),
            status: self.meta.status,
            budget: self.meta.budget,
            records: self
                .engine
                .history()
                .records
                .iter()
                .map(|r| HistoryEntry {
                    params_i: self.params(&r.x_i),
                    params_j: self.params(&r.x_j),
                    record: r.clone(),
                })
                .collect(),
        }
    }
}
