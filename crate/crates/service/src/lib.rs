//! Annotation service: two annotators per sentence, a review step that merges
//! their MWEs into gold, and a queue for adjudicating consistency candidates.
//!
//! State lives in an append-only event log; the gold corpus is a pure fold over
//! that log starting from `corpus.cupt`. Writes are serialized through one lock.

pub mod api;
pub mod config;
pub mod state;
pub mod store;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use mwekit_core::consistency::Decision;
use mwekit_core::cupt::to_cupt_string;

use crate::config::Role;
use crate::state::{
    DecisionReceipt, DecisionRequest, Event, EventRecord, FinalizeReceipt, FinalizeRequest, ServiceError, State,
    SubmissionReceipt, SubmissionRequest,
};
use crate::store::{Store, StoreError};

pub use api::router;

/// Seconds since the Unix epoch, recorded on every event.
pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

struct Inner {
    store: Store,
    state: State,
}

pub struct Service {
    inner: Mutex<Inner>,
    clock: Clock,
}

impl Service {
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        Self::open_with_clock(dir, system_clock())
    }

    pub fn open_with_clock(dir: &Path, clock: Clock) -> Result<Self, StoreError> {
        let (store, state) = Store::open(dir)?;
        Ok(Service {
            inner: Mutex::new(Inner { store, state }),
            clock,
        })
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn read<T>(&self, f: impl FnOnce(&State) -> T) -> T {
        f(&self.lock().state)
    }

    pub fn authenticate(&self, token: &str) -> Option<(String, Role)> {
        self.read(|s| s.config().authenticate(token))
    }

    /// Logs the event, folds it in, and refreshes the snapshot if gold changed.
    fn commit(&self, inner: &mut Inner, event: Event) -> Result<(), ServiceError> {
        let record = EventRecord {
            seq: inner.state.seq() + 1,
            at: (self.clock)(),
            event,
        };
        inner
            .store
            .append(&record)
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
        if inner.state.apply(&record)? {
            inner
                .store
                .write_snapshot(inner.state.corpus())
                .map_err(|e| ServiceError::Internal(e.to_string()))?;
        }
        Ok(())
    }

    pub fn submit(
        &self,
        task_id: &str,
        annotator: &str,
        req: &SubmissionRequest,
    ) -> Result<SubmissionReceipt, ServiceError> {
        let mut inner = self.lock();
        let event = inner.state.prepare_submission(task_id, annotator, req)?;
        self.commit(&mut inner, event)?;
        Ok(inner.state.receipt(task_id, annotator))
    }

    pub fn finalize(
        &self,
        task_id: &str,
        reviewer: &str,
        req: &FinalizeRequest,
    ) -> Result<FinalizeReceipt, ServiceError> {
        let mut inner = self.lock();
        let event = inner.state.prepare_finalize(task_id, reviewer, req)?;
        self.commit(&mut inner, event)?;
        Ok(inner.state.finalize_receipt(task_id))
    }

    pub fn decide(&self, reviewer: &str, req: &DecisionRequest) -> Result<DecisionReceipt, ServiceError> {
        let mut inner = self.lock();
        match inner.state.prepare_decision(reviewer, req)? {
            Err(earlier) => Ok(earlier),
            Ok(event) => {
                let (id, decision): (String, Decision) = match &event {
                    Event::ConsistencyDecided { candidate, decision, .. } => (candidate.id.clone(), *decision),
                    _ => unreachable!("prepare_decision yields decisions"),
                };
                self.commit(&mut inner, event)?;
                Ok(inner.state.decision_receipt(&id, decision))
            }
        }
    }

    /// Current gold corpus in CUPT form.
    pub fn snapshot(&self) -> String {
        self.read(|s| to_cupt_string(s.corpus()))
    }

    pub fn state_dump(&self) -> String {
        self.read(State::dump)
    }
}

/// Runs the service until Ctrl-C.
pub async fn serve(dir: &Path, addr: SocketAddr) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let service = Arc::new(Service::open(dir)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("annotation service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
