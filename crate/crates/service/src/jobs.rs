//! Engine state and the single background executor that runs
//! initialization and scenario jobs in submission order.

use std::collections::HashMap;
use std::sync::mpsc;
use std::sync::{Arc, Mutex, RwLock};
use std::thread;

use accesswalk_core::export::{AccessibilityDocument, ReportDocument};
use accesswalk_core::{
    compute_field, evaluate_scenario, AccessibilityField, EvaluateOptions, RunOptions, Scenario,
    ScenarioDocument, StreetNetwork, WalkConfig,
};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Master seed is fixed for the lifetime of the process.
    pub walk: WalkConfig,
    pub run: RunOptions,
    /// Compute the full baseline field before running any scenario job.
    pub precompute: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct JobRecord {
    pub id: String,
    pub state: JobState,
    pub progress: f64,
    pub scenario: ScenarioDocument,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Path of the comparison once the job is done.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<String>,
}

/// Published output of a finished scenario job.
#[derive(Debug)]
pub struct JobResult {
    pub report: ReportDocument,
    pub field: AccessibilityDocument,
}

#[derive(Debug, Default)]
struct JobTable {
    records: HashMap<String, JobRecord>,
    results: HashMap<String, Arc<JobResult>>,
    next_id: u64,
}

#[derive(Debug, Clone)]
pub enum BaselineStatus {
    NotRequested,
    Pending,
    Ready(Arc<AccessibilityDocument>),
    Failed(String),
}

pub(crate) struct Shared {
    pub network: Arc<StreetNetwork>,
    pub config: ServiceConfig,
    initialized: RwLock<bool>,
    baseline_field: RwLock<Option<Arc<AccessibilityField>>>,
    baseline: RwLock<BaselineStatus>,
    jobs: Mutex<JobTable>,
}

impl Shared {
    pub fn initialized(&self) -> bool {
        *self.initialized.read().unwrap()
    }

    pub fn baseline(&self) -> BaselineStatus {
        self.baseline.read().unwrap().clone()
    }

    pub fn job(&self, id: &str) -> Option<JobRecord> {
        self.jobs.lock().unwrap().records.get(id).cloned()
    }

    pub fn result(&self, id: &str) -> Option<Arc<JobResult>> {
        self.jobs.lock().unwrap().results.get(id).cloned()
    }

    fn update<F: FnOnce(&mut JobRecord)>(&self, id: &str, f: F) {
        if let Some(rec) = self.jobs.lock().unwrap().records.get_mut(id) {
            f(rec);
        }
    }
}

enum Task {
    Initialize,
    Scenario { id: String, scenario: Scenario },
}

/// Handle to the engine: shared state plus the job queue.
#[derive(Clone)]
pub struct Engine {
    pub(crate) shared: Arc<Shared>,
    queue: mpsc::Sender<Task>,
}

#[derive(Debug, Serialize)]
pub struct Submission {
    pub job_id: String,
    pub state: JobState,
    /// Jobs queued or running ahead of this one.
    pub position: usize,
}

impl Engine {
    /// Starts the executor thread; initialization is its first task.
    pub fn start(network: StreetNetwork, config: ServiceConfig) -> Engine {
        let baseline = if config.precompute {
            BaselineStatus::Pending
        } else {
            BaselineStatus::NotRequested
        };
        let shared = Arc::new(Shared {
            network: Arc::new(network),
            config,
            initialized: RwLock::new(false),
            baseline_field: RwLock::new(None),
            baseline: RwLock::new(baseline),
            jobs: Mutex::new(JobTable::default()),
        });
        let (tx, rx) = mpsc::channel();
        let worker = Arc::clone(&shared);
        thread::Builder::new()
            .name("scenario-executor".into())
            .spawn(move || {
                for task in rx {
                    run_task(&worker, task);
                }
            })
            .expect("spawn executor thread");
        tx.send(Task::Initialize).expect("executor alive");
        Engine { shared, queue: tx }
    }

    pub fn network(&self) -> &StreetNetwork {
        &self.shared.network
    }

    /// Validates and queues a scenario. Validation errors are returned
    /// synchronously and nothing is queued.
    pub fn submit(&self, doc: ScenarioDocument) -> accesswalk_core::Result<Submission> {
        let scenario = Scenario::from_document(&self.shared.network, &doc)?;
        let (id, position) = {
            let mut jobs = self.shared.jobs.lock().unwrap();
            jobs.next_id += 1;
            let id = format!("job-{}", jobs.next_id);
            let position = jobs
                .records
                .values()
                .filter(|r| matches!(r.state, JobState::Queued | JobState::Running))
                .count();
            jobs.records.insert(
                id.clone(),
                JobRecord {
                    id: id.clone(),
                    state: JobState::Queued,
                    progress: 0.0,
                    scenario: scenario.to_document(&self.shared.network),
                    error: None,
                    result: None,
                },
            );
            (id, position)
        };
        self.queue
            .send(Task::Scenario {
                id: id.clone(),
                scenario,
            })
            .expect("executor alive");
        Ok(Submission {
            job_id: id,
            state: JobState::Queued,
            position,
        })
    }
}

fn run_task(shared: &Shared, task: Task) {
    match task {
        Task::Initialize => {
            if shared.config.precompute {
                let net = &shared.network;
                log::info!(
                    "precomputing baseline accessibility for {} nodes",
                    net.node_count()
                );
                let status =
                    match compute_field(net, &shared.config.walk, &shared.config.run, None, None) {
                        Ok(field) => {
                            let doc = AccessibilityDocument::new(net, &field);
                            *shared.baseline_field.write().unwrap() = Some(Arc::new(field));
                            BaselineStatus::Ready(Arc::new(doc))
                        }
                        Err(e) => {
                            log::error!("baseline precompute failed: {e}");
                            BaselineStatus::Failed(e.to_string())
                        }
                    };
                *shared.baseline.write().unwrap() = status;
            }
            *shared.initialized.write().unwrap() = true;
        }
        Task::Scenario { id, scenario } => run_scenario(shared, &id, &scenario),
    }
}

fn run_scenario(shared: &Shared, id: &str, scenario: &Scenario) {
    shared.update(id, |r| r.state = JobState::Running);
    let net = &shared.network;
    let baseline = shared.baseline_field.read().unwrap().clone();
    let options = EvaluateOptions {
        run: shared.config.run.clone(),
        full_recompute: false,
    };
    let progress = |done: usize, total: usize| {
        let fraction = if total == 0 {
            1.0
        } else {
            done as f64 / total as f64
        };
        shared.update(id, |r| r.progress = r.progress.max(fraction));
    };
    let outcome = evaluate_scenario(
        net,
        scenario,
        &shared.config.walk,
        &options,
        baseline.as_deref(),
        Some(&progress),
    );
    let mut jobs = shared.jobs.lock().unwrap();
    match outcome {
        Ok(out) => {
            let result = JobResult {
                report: ReportDocument::new(net, scenario, &shared.config.walk, &out.report),
                field: AccessibilityDocument::new(net, &out.enhanced),
            };
            jobs.results.insert(id.to_owned(), Arc::new(result));
            if let Some(r) = jobs.records.get_mut(id) {
                r.state = JobState::Done;
                r.progress = 1.0;
                r.result = Some(format!("/api/scenarios/{id}/comparison"));
            }
        }
        Err(e) => {
            if let Some(r) = jobs.records.get_mut(id) {
                r.state = JobState::Failed;
                r.error = Some(e.to_string());
            }
        }
    }
}
