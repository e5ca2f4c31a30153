use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use embalign_core::{AnalysisConfig, AnalysisReport};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum JobStatus {
    Pending,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    fn can_become(self, next: JobStatus) -> bool {
        matches!(
            (self, next),
            (JobStatus::Pending, JobStatus::Running) | (JobStatus::Running, JobStatus::Done | JobStatus::Failed)
        )
    }
}

/// Finished job output. The report is kept in both forms so `/report`
/// serves exactly the bytes the command-line tool writes.
#[derive(Debug)]
pub enum JobOutcome {
    Done { report: AnalysisReport, canonical: String },
    Failed(String),
}

#[derive(Debug)]
pub struct Job {
    pub id: String,
    pub config: AnalysisConfig,
    pub timestamp: String,
    pub total: usize,
    completed: AtomicUsize,
    status: Mutex<JobStatus>,
    outcome: OnceLock<JobOutcome>,
}

#[derive(Debug, Serialize)]
pub struct Progress {
    pub completed: usize,
    pub total: usize,
}

/// Wire form of a job, as returned by `GET /api/analyses/{id}`.
#[derive(Debug, Serialize)]
pub struct JobView<'a> {
    pub id: &'a str,
    pub status: JobStatus,
    pub config: &'a AnalysisConfig,
    pub progress: Progress,
    pub result: Option<&'a AnalysisReport>,
    pub error: Option<&'a str>,
}

impl Job {
    pub fn new(id: String, config: AnalysisConfig, timestamp: String, total: usize) -> Self {
        Self {
            id,
            config,
            timestamp,
            total,
            completed: AtomicUsize::new(0),
            status: Mutex::new(JobStatus::Pending),
            outcome: OnceLock::new(),
        }
    }

    pub fn status(&self) -> JobStatus {
        *self.status.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Moves along Pending -> Running -> Done|Failed; other moves are ignored.
    fn advance(&self, next: JobStatus) -> bool {
        let mut status = self.status.lock().unwrap_or_else(|e| e.into_inner());
        if status.can_become(next) {
            *status = next;
            true
        } else {
            false
        }
    }

    pub fn start(&self) -> bool {
        self.advance(JobStatus::Running)
    }

    pub fn record_progress(&self, completed: usize) {
        self.completed.fetch_max(completed, Ordering::Relaxed);
    }

    pub fn finish(&self, outcome: JobOutcome) {
        let next = match outcome {
            JobOutcome::Done { .. } => JobStatus::Done,
            JobOutcome::Failed(_) => JobStatus::Failed,
        };
        let mut status = self.status.lock().unwrap_or_else(|e| e.into_inner());
        if status.can_become(next) && self.outcome.set(outcome).is_ok() {
            *status = next;
        }
    }

    pub fn outcome(&self) -> Option<&JobOutcome> {
        match self.status() {
            JobStatus::Done | JobStatus::Failed => self.outcome.get(),
            _ => None,
        }
    }

    pub fn view(&self) -> JobView<'_> {
        let status = self.status();
        let outcome = self.outcome();
        JobView {
            id: &self.id,
            status,
            config: &self.config,
            progress: Progress {
                completed: if status == JobStatus::Done { self.total } else { self.completed.load(Ordering::Relaxed) },
                total: self.total,
            },
            result: match outcome {
                Some(JobOutcome::Done { report, .. }) => Some(report),
                _ => None,
            },
            error: match outcome {
                Some(JobOutcome::Failed(e)) => Some(e),
                _ => None,
            },
        }
    }
}

#[derive(Debug, Default)]
pub struct JobRegistry {
    jobs: Mutex<BTreeMap<String, Arc<Job>>>,
    next: AtomicUsize,
}

impl JobRegistry {
    pub fn create(&self, config: AnalysisConfig, timestamp: String, total: usize) -> Arc<Job> {
        let n = self.next.fetch_add(1, Ordering::Relaxed) + 1;
        let job = Arc::new(Job::new(format!("job-{n}"), config, timestamp, total));
        self.jobs.lock().unwrap_or_else(|e| e.into_inner()).insert(job.id.clone(), Arc::clone(&job));
        job
    }

    pub fn get(&self, id: &str) -> Option<Arc<Job>> {
        self.jobs.lock().unwrap_or_else(|e| e.into_inner()).get(id).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_only_moves_forward() {
        let job = Job::new("j".into(), AnalysisConfig::default(), "t".into(), 3);
        assert_eq!(job.status(), JobStatus::Pending);
        job.finish(JobOutcome::Failed("early".into()));
        assert_eq!(job.status(), JobStatus::Pending, "Pending cannot jump to Failed");
        assert!(job.start());
        assert!(!job.start());
        job.record_progress(2);
        job.record_progress(1);
        assert_eq!(job.view().progress.completed, 2);
        job.finish(JobOutcome::Failed("boom".into()));
        assert_eq!(job.status(), JobStatus::Failed);
        assert_eq!(job.view().error, Some("boom"));
        job.finish(JobOutcome::Failed("again".into()));
        assert_eq!(job.view().error, Some("boom"));
    }

    #[test]
    fn ids_are_distinct() {
        let reg = JobRegistry::default();
        let a = reg.create(AnalysisConfig::default(), "t".into(), 0);
        let b = reg.create(AnalysisConfig::default(), "t".into(), 0);
        assert_ne!(a.id, b.id);
        assert_eq!(reg.get(&b.id).unwrap().id, b.id);
        assert!(reg.get("job-99").is_none());
    }
}
