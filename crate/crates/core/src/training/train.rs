use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Real;
use crate::cli::checkpoint::save_checkpoint;
use crate::envs::EnvSpec;
use crate::error::{Error, Result};
use crate::network::{init_weights, NetworkConfig, RecurrentState, Weights};

use super::hyper::Hyperparams;
use super::loss::a3c_loss;
use super::rollout::{collect_rollout, Actor};
use super::shared::{SharedParams, UpdateOutcome};

/// Steps taken by each worker in a thread's bucket.
type WorkerResult = Result<Vec<(usize, u64)>>;

pub const METRICS_HEADER: &str = "step,worker,episode_return,policy_loss,value_loss,entropy,grad_norm";

/// Environment variable capping the number of OS threads used by `train`.
pub const THREADS_ENV: &str = "MASKAC_THREADS";

/// One line of `metrics.csv`, emitted per completed rollout.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    /// Global step counter after the update.
    pub step: u64,
    pub worker: usize,
    /// Set when an episode ended inside the rollout.
    pub episode_return: Option<f64>,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// NaN when the update was skipped.
    pub grad_norm: f64,
}

impl MetricsRow {
    pub fn to_csv(&self) -> String {
        let ret = self.episode_return.map(|r| r.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.step, self.worker, ret, self.policy_loss, self.value_loss, self.entropy, self.grad_norm
        )
    }
}

pub struct TrainReport<T> {
    pub weights: Weights<T>,
    pub global_steps: u64,
    /// Environment steps contributed by each worker.
    pub worker_steps: Vec<u64>,
    pub skipped_updates: u64,
    /// Rows in the order they reached the metrics log.
    pub rows: Vec<MetricsRow>,
    pub checkpoints: Vec<PathBuf>,
    pub elapsed: Duration,
}

impl<T> TrainReport<T> {
    pub fn episode_returns(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.episode_return).collect()
    }

    pub fn steps_per_second(&self) -> f64 {
        self.global_steps as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }
}

/// Worker threads to use: `n_workers`, capped by `MASKAC_THREADS` when set.
pub fn thread_count(n_workers: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(n_workers);
    n_workers.min(cap).max(1)
}

pub fn worker_seed(seed: u64, worker: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (worker as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

pub fn checkpoint_name(step: u64) -> String {
    format!("ckpt_{step}.ma3c")
}

/// Trains from freshly initialised weights (initialisation seeded by `seed`).
pub fn train<T: Real>(
    cfg: &NetworkConfig,
    hyper: &Hyperparams,
    env_spec: &EnvSpec,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<TrainReport<T>> {
    let init = init_weights(cfg, seed)?;
    train_from(init, cfg, hyper, env_spec, seed, out_dir)
}

struct Worker<T> {
    id: usize,
    actor: Actor,
    state: RecurrentState<T>,
    rng: ChaCha8Rng,
    steps: u64,
}

enum Msg<T> {
    Row(MetricsRow),
    Checkpoint(u64, Weights<T>),
}

impl<T: Real> Worker<T> {
    fn new(id: usize, env_spec: &EnvSpec, cfg: &NetworkConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(worker_seed(seed, id));
        let actor = Actor::new(env_spec.build()?, rng.gen());
        Ok(Self {
            id,
            actor,
            state: RecurrentState::zeros(cfg),
            rng,
            steps: 0,
        })
    }

    /// sync → rollout → returns → loss → backward → shared update.
    fn iterate(
        &mut self,
        shared: &SharedParams<T>,
        cfg: &NetworkConfig,
        hyper: &Hyperparams,
    ) -> Result<(MetricsRow, Option<UpdateOutcome>, u64)> {
        let local = shared.sync_local();
        let state = std::mem::replace(&mut self.state, RecurrentState::zeros(cfg));
        let (mut rollout, next) = collect_rollout(&mut self.actor, &local, cfg, state, hyper.t_max, &mut self.rng)?;
        self.state = next;
        let n = rollout.len() as u64;
        self.steps += n;
        let (returns, advantages) = rollout.returns(hyper.gamma);
        let loss = a3c_loss(
            &mut rollout.graph,
            &rollout.steps,
            &returns,
            &advantages,
            hyper.entropy_coef,
            hyper.value_coef,
        )?;
        let g = &mut rollout.graph;
        let (pl, vl, ent) = (
            g.item(loss.policy).as_f64(),
            g.item(loss.value).as_f64(),
            g.item(loss.entropy).as_f64(),
        );
        let mut row = MetricsRow {
            step: 0,
            worker: self.id,
            episode_return: rollout.finished_episode.map(|(r, _)| r),
            policy_loss: pl,
            value_loss: vl,
            entropy: ent,
            grad_norm: f64::NAN,
        };
        if !g.item(loss.total).as_f64().is_finite() {
            let before = shared.record_skip(n);
            row.step = before;
            return Ok((row, None, n));
        }
        let grads = g.backward(loss.total)?;
        let flat = rollout.bound.gradients(&rollout.graph, &grads);
        let out = shared.apply_gradients(&flat, n, hyper)?;
        row.step = out.global_steps;
        if out.applied {
            row.grad_norm = out.grad_norm;
        }
        Ok((row, Some(out), n))
    }
}

fn crossed(interval: u64, before: u64, after: u64) -> bool {
    interval > 0 && before / interval < after / interval
}

fn run_thread<T: Real>(
    mut workers: Vec<Worker<T>>,
    shared: &SharedParams<T>,
    cfg: &NetworkConfig,
    hyper: &Hyperparams,
    tx: mpsc::Sender<Msg<T>>,
) -> Result<Vec<(usize, u64)>> {
    'outer: loop {
        for w in workers.iter_mut() {
            if shared.global_steps() >= hyper.total_steps {
                break 'outer;
            }
            let (row, _, n) = w.iterate(shared, cfg, hyper)?;
            let after = row.step;
            let snapshot = crossed(hyper.checkpoint_interval, after - n, after).then(|| shared.sync_local());
            // The receiver only disappears if the main thread failed; stop quietly.
            if tx.send(Msg::Row(row)).is_err() {
                break 'outer;
            }
            if let Some(s) = snapshot {
                let step = after / hyper.checkpoint_interval * hyper.checkpoint_interval;
                if tx.send(Msg::Checkpoint(step, s)).is_err() {
                    break 'outer;
                }
            }
        }
    }
    Ok(workers.iter().map(|w| (w.id, w.steps)).collect())
}

/// Runs asynchronous advantage actor-critic training until the global step
/// counter reaches `hyper.total_steps`.
///
/// With `out_dir` set, writes `metrics.csv`, a checkpoint at every
/// `checkpoint_interval` crossing and a final `ckpt_<global_steps>.ma3c`.
pub fn train_from<T: Real>(
    init: Weights<T>,
    cfg: &NetworkConfig,
    hyper: &Hyperparams,
    env_spec: &EnvSpec,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<TrainReport<T>> {
    hyper.validate()?;
    cfg.validate()?;
    init.validate(cfg)?;
    if env_spec.n_actions() != cfg.n_actions {
        return Err(Error::Config(format!(
            "network has {} actions but {} needs {}",
            cfg.n_actions,
            env_spec.kind,
            env_spec.n_actions()
        )));
    }
    let mut env_spec = env_spec.clone();
    env_spec.episode_cap = env_spec.episode_cap.min(hyper.episode_step_cap);
    env_spec.validate()?;

    let mut metrics = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
            let path = dir.join("metrics.csv");
            let f = File::create(&path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
            let mut w = BufWriter::new(f);
            writeln!(w, "{METRICS_HEADER}").map_err(|e| Error::io("writing metrics", e))?;
            Some(w)
        }
        None => None,
    };

    let threads = thread_count(hyper.n_workers);
    let mut buckets: Vec<Vec<Worker<T>>> = (0..threads).map(|_| Vec::new()).collect();
    for id in 0..hyper.n_workers {
        buckets[id % threads].push(Worker::new(id, &env_spec, cfg, seed)?);
    }

    let shared = SharedParams::new(init);
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut checkpoints = Vec::new();
    let (tx, rx) = mpsc::channel::<Msg<T>>();

    let results = std::thread::scope(|scope| -> Result<Vec<WorkerResult>> {
        let handles: Vec<_> = buckets
            .into_iter()
            .map(|ws| {
                let tx = tx.clone();
                let shared = &shared;
                scope.spawn(move || run_thread(ws, shared, cfg, hyper, tx))
            })
            .collect();
        drop(tx);
        let mut io_error = None;
        for msg in rx {
            if io_error.is_some() {
                continue;
            }
            let res = match msg {
                Msg::Row(row) => {
                    let r = match metrics.as_mut() {
                        Some(w) => writeln!(w, "{}", row.to_csv()).map_err(|e| Error::io("writing metrics", e)),
                        None => Ok(()),
                    };
                    rows.push(row);
                    r
                }
                Msg::Checkpoint(step, weights) => match out_dir {
                    Some(dir) => {
                        let path = dir.join(checkpoint_name(step));
                        let r = save_checkpoint(&weights, cfg, &path);
                        checkpoints.push(path);
                        r
                    }
                    None => Ok(()),
                },
            };
            if let Err(e) = res {
                io_error = Some(e);
            }
        }
        let joined = handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::InvalidArgument("worker thread panicked".into())))
            })
            .collect();
        match io_error {
            Some(e) => Err(e),
            None => Ok(joined),
        }
    })?;

    let mut worker_steps = vec![0u64; hyper.n_workers];
    for r in results {
        for (id, steps) in r? {
            worker_steps[id] = steps;
        }
    }

    let (_, weights) = shared.snapshot_versioned();
    let global_steps = shared.global_steps();
    if let Some(dir) = out_dir {
        if let Some(w) = metrics.as_mut() {
            w.flush().map_err(|e| Error::io("writing metrics", e))?;
        }
        let path = dir.join(checkpoint_name(global_steps));
        if !checkpoints.contains(&path) {
            save_checkpoint(&weights, cfg, &path)?;
            checkpoints.push(path);
        }
    }
    if !weights.is_finite() {
        return Err(Error::NonFinite("trained parameters".into()));
    }
    Ok(TrainReport {
        weights,
        global_steps,
        worker_steps,
        skipped_updates: shared.skipped_updates(),
        rows,
        checkpoints,
        elapsed: start.elapsed(),
    })
}
