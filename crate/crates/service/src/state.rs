//! Service state as a fold over the event log.
//!
//! Every mutation is first validated into an [`Event`]; [`State::apply`] then
//! folds it in without further checks, so replaying the log from the initial
//! corpus reproduces the state exactly.

use std::collections::{BTreeMap, BTreeSet};

use mwekit_core::consistency::{
    apply_decisions, audit, ConsistencyCandidate, Decision,
};
use mwekit_core::model::UNCLEAR_FLAG;
use mwekit_core::{Corpus, MweInstance, MweSource, Sentence};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ServiceConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("missing or unknown bearer token")]
    Unauthorized,
    #[error("{0}")]
    Forbidden(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{message}")]
    Conflict { code: &'static str, message: String },
    #[error("{0}")]
    Unprocessable(String),
    #[error("{0}")]
    Gone(String),
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Unauthorized => "unauthorized",
            ServiceError::Forbidden(_) => "forbidden",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Conflict { code, .. } => code,
            ServiceError::Unprocessable(_) => "invalid_annotation",
            ServiceError::Gone(_) => "stale_candidate",
            ServiceError::Internal(_) => "internal",
        }
    }
}

fn unprocessable(msg: impl Into<String>) -> ServiceError {
    ServiceError::Unprocessable(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Keep,
    Delete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictEntry {
    pub token_indices: Vec<usize>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Submitted {
        task_id: String,
        annotator: String,
        revision: u64,
        mwes: Vec<Vec<usize>>,
        unclear: bool,
    },
    Finalized {
        task_id: String,
        reviewer: String,
        verdicts: Vec<VerdictEntry>,
        added: Vec<Vec<usize>>,
        gold: Vec<Vec<usize>>,
        unclear: bool,
    },
    ConsistencyDecided {
        reviewer: String,
        candidate: ConsistencyCandidate,
        decision: Decision,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        idempotency_key: Option<String>,
    },
}

/// One line of `events.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    /// Seconds since the Unix epoch.
    pub at: u64,
    #[serde(flatten)]
    pub event: Event,
}

// ---- request payloads ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmissionRequest {
    pub schema_version: u32,
    /// Revision of this annotator's submission the client last saw; 0 if none.
    pub base_revision: u64,
    /// Checked token positions per row; empty rows are ignored.
    pub rows: Vec<Vec<usize>>,
    #[serde(default)]
    pub unclear: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalizeRequest {
    pub schema_version: u32,
    #[serde(default)]
    pub verdicts: Vec<VerdictEntry>,
    #[serde(default)]
    pub added: Vec<Vec<usize>>,
    /// Overrides the propagated unclear flag.
    #[serde(default)]
    pub unclear: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRequest {
    pub schema_version: u32,
    pub candidate_id: String,
    pub sentence_digest: String,
    pub decision: Decision,
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

fn check_schema(v: u32) -> Result<(), ServiceError> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(ServiceError::BadRequest(format!(
            "unsupported schema_version {v}, expected {SCHEMA_VERSION}"
        )))
    }
}

fn decode<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(format!("invalid JSON payload: {e}")))
}

pub fn decode_submission(body: &[u8]) -> Result<SubmissionRequest, ServiceError> {
    let req: SubmissionRequest = decode(body)?;
    check_schema(req.schema_version)?;
    Ok(req)
}

pub fn decode_finalize(body: &[u8]) -> Result<FinalizeRequest, ServiceError> {
    let req: FinalizeRequest = decode(body)?;
    check_schema(req.schema_version)?;
    Ok(req)
}

pub fn decode_decision(body: &[u8]) -> Result<DecisionRequest, ServiceError> {
    let req: DecisionRequest = decode(body)?;
    check_schema(req.schema_version)?;
    Ok(req)
}

/// Checks grid rows against a sentence of `len` tokens and returns the
/// distinct MWEs they encode, each sorted, in ascending order.
pub fn rows_to_mwes(rows: &[Vec<usize>], len: usize, limit: Option<usize>) -> Result<Vec<Vec<usize>>, ServiceError> {
    if let Some(limit) = limit {
        if rows.len() > limit {
            return Err(unprocessable(format!("{} rows submitted, at most {limit} allowed", rows.len())));
        }
    }
    let mut out = BTreeSet::new();
    for (r, row) in rows.iter().enumerate() {
        if row.is_empty() {
            continue;
        }
        if row.len() == 1 {
            return Err(unprocessable(format!("row {} has a single check; an MWE needs at least two words", r + 1)));
        }
        let mut sorted = row.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(unprocessable(format!("row {} checks a token twice", r + 1)));
        }
        if sorted[0] == 0 || sorted[sorted.len() - 1] > len {
            return Err(unprocessable(format!("row {} has a token index outside 1..={len}", r + 1)));
        }
        out.insert(sorted);
    }
    Ok(out.into_iter().collect())
}

/// Grid rows for stored MWEs, padded with empty rows up to `rows`.
pub fn mwes_to_rows(mwes: &[Vec<usize>], rows: usize) -> Vec<Vec<usize>> {
    let mut out = mwes.to_vec();
    while out.len() < rows {
        out.push(Vec::new());
    }
    out
}

// ---- views ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenView {
    pub index: usize,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatorStatus {
    pub annotator: String,
    /// 0 until the first submission.
    pub revision: u64,
    pub submitted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task_id: String,
    pub text: String,
    pub annotators: Vec<AnnotatorStatus>,
    pub finalized: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskList {
    pub schema_version: u32,
    pub tasks: Vec<TaskSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnAnnotation {
    pub revision: u64,
    pub rows: Vec<Vec<usize>>,
    pub unclear: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskView {
    pub schema_version: u32,
    pub task_id: String,
    pub tokens: Vec<TokenView>,
    pub rows: usize,
    pub annotators: Vec<AnnotatorStatus>,
    pub finalized: bool,
    /// The caller's own annotation, for annotators.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annotation: Option<OwnAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionReceipt {
    pub schema_version: u32,
    pub task_id: String,
    pub annotator: String,
    pub revision: u64,
    pub mwes: Vec<Vec<usize>>,
    pub unclear: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewMwe {
    pub token_indices: Vec<usize>,
    pub surface: String,
    pub annotators: Vec<String>,
    /// Marked by only one annotator.
    pub highlight: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalView {
    pub reviewer: String,
    pub at: u64,
    pub gold: Vec<Vec<usize>>,
    pub unclear: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub schema_version: u32,
    pub task_id: String,
    pub tokens: Vec<TokenView>,
    pub annotators: Vec<String>,
    /// Set when either annotator flagged the sentence.
    pub unclear: bool,
    pub mwes: Vec<ReviewMwe>,
    pub finalized: Option<FinalView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalizeReceipt {
    pub schema_version: u32,
    pub task_id: String,
    pub gold: Vec<Vec<usize>>,
    pub unclear: bool,
    pub corpus_revision: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionLogEntry {
    pub candidate_id: String,
    pub decision: Decision,
    pub reviewer: String,
    pub at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyQueue {
    pub schema_version: u32,
    pub corpus_revision: u64,
    pub candidates: Vec<ConsistencyCandidate>,
    pub decisions: Vec<DecisionLogEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionReceipt {
    pub schema_version: u32,
    pub candidate_id: String,
    pub decision: Decision,
    pub corpus_revision: u64,
}

// ---- state ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
struct StoredSubmission {
    revision: u64,
    mwes: Vec<Vec<usize>>,
    unclear: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct State {
    #[serde(skip)]
    config: ServiceConfig,
    assignments: BTreeMap<String, [String; 2]>,
    #[serde(skip)]
    corpus: Corpus,
    corpus_revision: u64,
    /// task id -> annotator -> submission
    submissions: BTreeMap<String, BTreeMap<String, StoredSubmission>>,
    finalized: BTreeMap<String, FinalView>,
    /// `id@digest` of rejected candidates.
    rejected: BTreeSet<String>,
    decisions: Vec<DecisionLogEntry>,
    idempotency: BTreeMap<String, DecisionReceipt>,
    seq: u64,
}

fn rejection_key(c: &ConsistencyCandidate) -> String {
    format!("{}@{}", c.id, c.sentence_digest)
}

fn tokens_of(s: &Sentence) -> Vec<TokenView> {
    s.tokens()
        .iter()
        .map(|t| TokenView {
            index: t.index,
            surface: t.surface.clone(),
        })
        .collect()
}

fn surface(s: &Sentence, ix: &[usize]) -> String {
    ix.iter()
        .filter_map(|&i| s.token(i))
        .map(|t| t.surface.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

impl State {
    pub fn new(config: ServiceConfig, corpus: Corpus) -> Self {
        State {
            assignments: config.assign(&corpus),
            config,
            corpus,
            corpus_revision: 0,
            submissions: BTreeMap::new(),
            finalized: BTreeMap::new(),
            rejected: BTreeSet::new(),
            decisions: Vec::new(),
            idempotency: BTreeMap::new(),
            seq: 0,
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn corpus_revision(&self) -> u64 {
        self.corpus_revision
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    /// Deterministic JSON rendering of everything except the corpus, which is
    /// captured by the CUPT snapshot.
    pub fn dump(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serializes")
    }

    fn sentence(&self, task_id: &str) -> Result<&Sentence, ServiceError> {
        self.corpus
            .get(task_id)
            .ok_or_else(|| ServiceError::NotFound(format!("no task {task_id:?}")))
    }

    fn pair(&self, task_id: &str) -> Result<&[String; 2], ServiceError> {
        self.assignments
            .get(task_id)
            .ok_or_else(|| ServiceError::NotFound(format!("no task {task_id:?}")))
    }

    fn statuses(&self, task_id: &str) -> Vec<AnnotatorStatus> {
        let subs = self.submissions.get(task_id);
        self.assignments[task_id]
            .iter()
            .map(|a| {
                let rev = subs.and_then(|m| m.get(a)).map_or(0, |s| s.revision);
                AnnotatorStatus {
                    annotator: a.clone(),
                    revision: rev,
                    submitted: rev > 0,
                }
            })
            .collect()
    }

    /// Tasks visible to a user: their own assignments, or all for reviewers.
    pub fn list_tasks(&self, annotator: Option<&str>) -> TaskList {
        let tasks = self
            .corpus
            .sentences()
            .iter()
            .filter(|s| annotator.is_none_or(|a| self.assignments[s.id()].iter().any(|x| x == a)))
            .map(|s| TaskSummary {
                task_id: s.id().to_string(),
                text: s.text(),
                annotators: self.statuses(s.id()),
                finalized: self.finalized.contains_key(s.id()),
            })
            .collect();
        TaskList {
            schema_version: SCHEMA_VERSION,
            tasks,
        }
    }

    pub fn check_assigned(&self, task_id: &str, annotator: &str) -> Result<(), ServiceError> {
        if self.pair(task_id)?.iter().any(|a| a == annotator) {
            Ok(())
        } else {
            Err(ServiceError::Forbidden(format!("{annotator} is not assigned to task {task_id}")))
        }
    }

    pub fn task_view(&self, task_id: &str, annotator: Option<&str>) -> Result<TaskView, ServiceError> {
        let s = self.sentence(task_id)?;
        if let Some(a) = annotator {
            self.check_assigned(task_id, a)?;
        }
        let annotation = annotator.map(|a| {
            let sub = self.submissions.get(task_id).and_then(|m| m.get(a));
            OwnAnnotation {
                revision: sub.map_or(0, |s| s.revision),
                rows: mwes_to_rows(sub.map_or(&[][..], |s| &s.mwes), self.config.rows),
                unclear: sub.is_some_and(|s| s.unclear),
            }
        });
        Ok(TaskView {
            schema_version: SCHEMA_VERSION,
            task_id: task_id.to_string(),
            tokens: tokens_of(s),
            rows: self.config.rows,
            annotators: self.statuses(task_id),
            finalized: self.finalized.contains_key(task_id),
            annotation,
        })
    }

    pub fn prepare_submission(
        &self,
        task_id: &str,
        annotator: &str,
        req: &SubmissionRequest,
    ) -> Result<Event, ServiceError> {
        let s = self.sentence(task_id)?;
        self.check_assigned(task_id, annotator)?;
        if self.finalized.contains_key(task_id) {
            return Err(ServiceError::Conflict {
                code: "finalized",
                message: format!("task {task_id} has already been finalized"),
            });
        }
        let current = self
            .submissions
            .get(task_id)
            .and_then(|m| m.get(annotator))
            .map_or(0, |s| s.revision);
        if req.base_revision != current {
            return Err(ServiceError::Conflict {
                code: "stale_revision",
                message: format!("base_revision {} is stale; current revision is {current}", req.base_revision),
            });
        }
        let mwes = rows_to_mwes(&req.rows, s.len(), Some(self.config.rows))?;
        Ok(Event::Submitted {
            task_id: task_id.to_string(),
            annotator: annotator.to_string(),
            revision: current + 1,
            mwes,
            unclear: req.unclear,
        })
    }

    pub fn receipt(&self, task_id: &str, annotator: &str) -> SubmissionReceipt {
        let sub = &self.submissions[task_id][annotator];
        SubmissionReceipt {
            schema_version: SCHEMA_VERSION,
            task_id: task_id.to_string(),
            annotator: annotator.to_string(),
            revision: sub.revision,
            mwes: sub.mwes.clone(),
            unclear: sub.unclear,
        }
    }

    /// Union of both annotators' MWEs with agreement flags.
    pub fn review(&self, task_id: &str) -> Result<ReviewItem, ServiceError> {
        let s = self.sentence(task_id)?;
        let pair = self.pair(task_id)?;
        let subs = self.submissions.get(task_id);
        let mut union: BTreeMap<&Vec<usize>, Vec<String>> = BTreeMap::new();
        let mut unclear = false;
        for a in pair {
            let sub = subs.and_then(|m| m.get(a)).ok_or_else(|| ServiceError::Conflict {
                code: "annotation_pending",
                message: format!("{a} has not submitted task {task_id}"),
            })?;
            unclear |= sub.unclear;
            for m in &sub.mwes {
                union.entry(m).or_default().push(a.clone());
            }
        }
        let mwes = union
            .into_iter()
            .map(|(ix, annotators)| ReviewMwe {
                token_indices: ix.clone(),
                surface: surface(s, ix),
                highlight: annotators.len() < 2,
                annotators,
            })
            .collect();
        Ok(ReviewItem {
            schema_version: SCHEMA_VERSION,
            task_id: task_id.to_string(),
            tokens: tokens_of(s),
            annotators: pair.to_vec(),
            unclear,
            mwes,
            finalized: self.finalized.get(task_id).cloned(),
        })
    }

    pub fn prepare_finalize(
        &self,
        task_id: &str,
        reviewer: &str,
        req: &FinalizeRequest,
    ) -> Result<Event, ServiceError> {
        let item = self.review(task_id)?;
        let s = self.sentence(task_id)?;
        let mut verdicts: BTreeMap<&Vec<usize>, Verdict> = BTreeMap::new();
        for v in &req.verdicts {
            if !item.mwes.iter().any(|m| m.token_indices == v.token_indices) {
                return Err(unprocessable(format!("verdict for {:?}, which no annotator marked", v.token_indices)));
            }
            if verdicts.insert(&v.token_indices, v.verdict).is_some_and(|prev| prev != v.verdict) {
                return Err(unprocessable(format!("conflicting verdicts for {:?}", v.token_indices)));
            }
        }
        if let Some(m) = item.mwes.iter().find(|m| m.highlight && !verdicts.contains_key(&m.token_indices)) {
            return Err(unprocessable(format!(
                "single-annotator MWE {:?} ({}) needs a keep or delete verdict",
                m.token_indices, m.surface
            )));
        }
        let added = rows_to_mwes(&req.added, s.len(), None)?;
        let mut gold: BTreeSet<Vec<usize>> = item
            .mwes
            .iter()
            .filter(|m| verdicts.get(&m.token_indices) != Some(&Verdict::Delete))
            .map(|m| m.token_indices.clone())
            .collect();
        gold.extend(added.iter().cloned());
        Ok(Event::Finalized {
            task_id: task_id.to_string(),
            reviewer: reviewer.to_string(),
            verdicts: req.verdicts.clone(),
            added,
            gold: gold.into_iter().collect(),
            unclear: req.unclear.unwrap_or(item.unclear),
        })
    }

    pub fn finalize_receipt(&self, task_id: &str) -> FinalizeReceipt {
        let f = &self.finalized[task_id];
        FinalizeReceipt {
            schema_version: SCHEMA_VERSION,
            task_id: task_id.to_string(),
            gold: f.gold.clone(),
            unclear: f.unclear,
            corpus_revision: self.corpus_revision,
        }
    }

    fn open_candidates(&self) -> Result<Vec<ConsistencyCandidate>, ServiceError> {
        let report = audit(&self.corpus, &self.config.match_config())
            .map_err(|e| ServiceError::Internal(format!("consistency search failed: {e}")))?;
        Ok(report
            .candidates
            .into_iter()
            .filter(|c| !self.rejected.contains(&rejection_key(c)))
            .collect())
    }

    pub fn consistency_queue(&self) -> Result<ConsistencyQueue, ServiceError> {
        Ok(ConsistencyQueue {
            schema_version: SCHEMA_VERSION,
            corpus_revision: self.corpus_revision,
            candidates: self.open_candidates()?,
            decisions: self.decisions.clone(),
        })
    }

    /// `Ok(Err(receipt))` replays an earlier decision with the same idempotency key.
    pub fn prepare_decision(
        &self,
        reviewer: &str,
        req: &DecisionRequest,
    ) -> Result<Result<Event, DecisionReceipt>, ServiceError> {
        if let Some(key) = &req.idempotency_key {
            if let Some(done) = self.idempotency.get(key) {
                if done.candidate_id == req.candidate_id && done.decision == req.decision {
                    return Ok(Err(done.clone()));
                }
                return Err(ServiceError::Conflict {
                    code: "idempotency_key_reused",
                    message: format!("idempotency key {key:?} was used for a different decision"),
                });
            }
        }
        let candidate = self
            .open_candidates()?
            .into_iter()
            .find(|c| c.id == req.candidate_id && c.sentence_digest == req.sentence_digest)
            .ok_or_else(|| {
                ServiceError::Gone(format!(
                    "candidate {} is no longer pending for this sentence content",
                    req.candidate_id
                ))
            })?;
        Ok(Ok(Event::ConsistencyDecided {
            reviewer: reviewer.to_string(),
            candidate,
            decision: req.decision,
            idempotency_key: req.idempotency_key.clone(),
        }))
    }

    pub fn decision_receipt(&self, candidate_id: &str, decision: Decision) -> DecisionReceipt {
        DecisionReceipt {
            schema_version: SCHEMA_VERSION,
            candidate_id: candidate_id.to_string(),
            decision,
            corpus_revision: self.corpus_revision,
        }
    }

    /// Folds one event in. Returns whether the gold corpus changed.
    pub fn apply(&mut self, record: &EventRecord) -> Result<bool, ServiceError> {
        self.seq = record.seq;
        match &record.event {
            Event::Submitted {
                task_id,
                annotator,
                revision,
                mwes,
                unclear,
            } => {
                self.submissions.entry(task_id.clone()).or_default().insert(
                    annotator.clone(),
                    StoredSubmission {
                        revision: *revision,
                        mwes: mwes.clone(),
                        unclear: *unclear,
                    },
                );
                Ok(false)
            }
            Event::Finalized {
                task_id,
                reviewer,
                gold,
                unclear,
                ..
            } => {
                self.finalized.insert(
                    task_id.clone(),
                    FinalView {
                        reviewer: reviewer.clone(),
                        at: record.at,
                        gold: gold.clone(),
                        unclear: *unclear,
                    },
                );
                let s = self.sentence(task_id)?;
                let updated = gold_sentence(s, gold, *unclear)?;
                self.replace(updated)
            }
            Event::ConsistencyDecided {
                reviewer,
                candidate,
                decision,
                idempotency_key,
            } => {
                self.decisions.push(DecisionLogEntry {
                    candidate_id: candidate.id.clone(),
                    decision: *decision,
                    reviewer: reviewer.clone(),
                    at: record.at,
                });
                let changed = match decision {
                    Decision::Rejected => {
                        self.rejected.insert(rejection_key(candidate));
                        false
                    }
                    Decision::Accepted => {
                        let updated = apply_decisions(&self.corpus, &[(candidate.clone(), *decision)])
                            .map_err(|e| ServiceError::Internal(e.to_string()))?;
                        let changed = updated != self.corpus;
                        if changed {
                            self.corpus = updated;
                            self.corpus_revision += 1;
                        }
                        changed
                    }
                };
                if let Some(key) = idempotency_key {
                    let receipt = self.decision_receipt(&candidate.id, *decision);
                    self.idempotency.insert(key.clone(), receipt);
                }
                Ok(changed)
            }
        }
    }

    fn replace(&mut self, s: Sentence) -> Result<bool, ServiceError> {
        if self.corpus.get(s.id()) == Some(&s) {
            return Ok(false);
        }
        self.corpus = self
            .corpus
            .replace_sentence(s)
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
        self.corpus_revision += 1;
        Ok(true)
    }
}

/// The sentence with its MWEs replaced by `gold`. Types already present on an
/// identical span are kept.
fn gold_sentence(s: &Sentence, gold: &[Vec<usize>], unclear: bool) -> Result<Sentence, ServiceError> {
    let internal = |e: mwekit_core::ModelError| ServiceError::Internal(e.to_string());
    let mwes = gold
        .iter()
        .map(|ix| {
            let ty = s
                .mwes()
                .iter()
                .find(|m| m.token_indices() == ix.as_slice())
                .and_then(MweInstance::mwe_type);
            MweInstance::new(ix.clone(), MweSource::Gold).map(|m| m.with_type(ty))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(internal)?;
    let mut out = s.clone().without_flags();
    for f in s.flags() {
        if f != UNCLEAR_FLAG {
            out = out.with_flag(f.clone()).map_err(internal)?;
        }
    }
    if unclear {
        out = out.with_flag(UNCLEAR_FLAG).map_err(internal)?;
    }
    out.with_mwes(mwes).map_err(internal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip() {
        let rows = vec![vec![5, 7], vec![], vec![3, 2], vec![2, 3]];
        let mwes = rows_to_mwes(&rows, 8, Some(9)).unwrap();
        assert_eq!(mwes, vec![vec![2, 3], vec![5, 7]]);
        let back = mwes_to_rows(&mwes, 9);
        assert_eq!(back.len(), 9);
        assert_eq!(rows_to_mwes(&back, 8, Some(9)).unwrap(), mwes);
    }

    #[test]
    fn bad_rows() {
        for rows in [vec![vec![4]], vec![vec![0, 1]], vec![vec![1, 9]], vec![vec![2, 2]]] {
            assert!(matches!(rows_to_mwes(&rows, 8, None), Err(ServiceError::Unprocessable(_))));
        }
        let too_many = vec![Vec::new(); 10];
        assert!(rows_to_mwes(&too_many, 8, Some(9)).is_err());
    }

    #[test]
    fn decode_checks_schema() {
        assert!(decode_submission(br#"{"schema_version":1,"base_revision":0,"rows":[[1,2]]}"#).is_ok());
        assert!(matches!(
            decode_submission(br#"{"schema_version":2,"base_revision":0,"rows":[]}"#),
            Err(ServiceError::BadRequest(_))
        ));
        assert!(decode_submission(b"[").is_err());
        assert!(decode_submission(br#"{"schema_version":1,"base_revision":0,"rows":[],"x":1}"#).is_err());
    }

    #[test]
    fn event_json_shape() {
        let rec = EventRecord {
            seq: 3,
            at: 10,
            event: Event::Submitted {
                task_id: "s1".into(),
                annotator: "a".into(),
                revision: 1,
                mwes: vec![vec![1, 2]],
                unclear: false,
            },
        };
        let line = serde_json::to_string(&rec).unwrap();
        assert!(line.starts_with(r#"{"seq":3,"at":10,"event":"submitted""#), "{line}");
        let back: EventRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, rec);
    }
}
