//! Discrete-event DTAP world.
//!
//! Time advances in whole ticks. Each tick runs, in order:
//!
//! 1. delivery of every message with `deliver_at <= now`, in
//!    `(deliver_at, send sequence)` order;
//! 2. task arrivals at the generator agents;
//! 3. dispatch of every task received this tick (agents in ascending id);
//! 4. processing of delivered UPDATE messages (reward back-propagation);
//! 5. execution: servers pick up queued work FCFS and finish every task
//!    whose real-valued completion instant is `<= now`.
//!
//! Service durations are real-valued. A server that finishes at instant `c`
//! starts its next queued task at `max(c, enqueue tick)`, so no capacity is
//! lost to tick rounding; completions are finalised (and feedback sent) at
//! the first tick `>= c`.

use alloc::collections::{BTreeMap, BinaryHeap, VecDeque};
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::learner::{LearnerConfig, LearnerError, LearnerState};
use crate::metrics::ActionCounter;
use crate::policy::{sample, Policy};
use crate::topology::{ActionIndex, AgentId, Topology, LOCAL};

pub type Tick = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskId(pub u64);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("negative or non-finite arrival rate {0}")]
    BadArrivalRate(f64),
    #[error("service rate must be positive and finite, got {0}")]
    BadServiceRate(f64),
    #[error("generator {0} is not an agent of the topology")]
    UnknownGenerator(AgentId),
    #[error("task {0:?} is not live")]
    UnknownTask(TaskId),
    #[error("task {task:?} has no hop record {hop} at agent {agent}")]
    MissingHop { task: TaskId, hop: usize, agent: AgentId },
    #[error("task {0:?} has not completed")]
    NotCompleted(TaskId),
    #[error("learner config does not fit the topology: {0}")]
    Learner(#[from] LearnerError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopRecord {
    pub agent: AgentId,
    pub receipt_time: Tick,
    pub action_taken: ActionIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: TaskId,
    pub origin: AgentId,
    pub arrival_time: Tick,
    pub service_duration: f64,
    pub hop_trail: Vec<HopRecord>,
    pub enqueued_at: Option<Tick>,
    pub started_at: Option<f64>,
    pub completed_at: Option<f64>,
}

impl Task {
    pub fn new(id: TaskId, origin: AgentId, arrival_time: Tick, service_duration: f64) -> Self {
        Self {
            id,
            origin,
            arrival_time,
            service_duration,
            hop_trail: Vec::new(),
            enqueued_at: None,
            started_at: None,
            completed_at: None,
        }
    }
}

/// Total service time: completion instant minus system arrival.
pub fn task_tst(task: &Task) -> Result<f64, SimError> {
    task.completed_at
        .map(|c| c - task.arrival_time as f64)
        .ok_or(SimError::NotCompleted(task.id))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MessageKind {
    Request,
    /// `r`: time from the sender's receipt of the task to its completion.
    /// `hop`: index of the receiver's record in the task's hop trail.
    Update { r: f64, hop: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub kind: MessageKind,
    pub from: AgentId,
    pub to: AgentId,
    pub task: TaskId,
    pub sent_at: Tick,
    pub deliver_at: Tick,
    pub seq: u64,
}

impl Message {
    fn key(&self) -> (Tick, u64) {
        (self.deliver_at, self.seq)
    }
}

/// Min-heap adapter keyed on `(deliver_at, seq)`.
#[derive(Debug)]
struct InFlight(Message);

impl PartialEq for InFlight {
    fn eq(&self, other: &Self) -> bool {
        self.0.key() == other.0.key()
    }
}

impl Eq for InFlight {}

impl PartialOrd for InFlight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for InFlight {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.key().cmp(&self.0.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Queued {
    task: TaskId,
    enqueued_at: Tick,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Running {
    task: TaskId,
    start: f64,
    completion: f64,
}

#[derive(Debug, Clone)]
pub struct AgentRuntime {
    queue: VecDeque<Queued>,
    running: Option<Running>,
    busy_until: f64,
    pub learner: LearnerState,
    policy_rng: ChaCha8Rng,
    arrival_rng: ChaCha8Rng,
}

impl AgentRuntime {
    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_busy(&self) -> bool {
        self.running.is_some()
    }

    pub fn busy_until(&self) -> f64 {
        self.busy_until
    }

    pub fn policy(&self) -> &Policy {
        &self.learner.policy
    }
}

/// Per-task accounting at completion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Completion {
    pub task: TaskId,
    pub agent: AgentId,
    pub arrival_time: Tick,
    pub completion_time: f64,
    pub finalized_at: Tick,
    pub tst: f64,
    /// Sum of REQUEST link delays along the hop trail.
    pub routing_delay: f64,
    pub queue_wait: f64,
    pub service_duration: f64,
    pub hops: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimEvent {
    Arrived { task: TaskId, agent: AgentId, time: Tick, service_duration: f64 },
    Dispatched { task: TaskId, agent: AgentId, hop: usize, action: ActionIndex, time: Tick },
    Sent(Message),
    Started { task: TaskId, agent: AgentId, start: f64, completion: f64 },
    Completed(Completion),
    Observed { agent: AgentId, task: TaskId, hop: usize, action: ActionIndex, reward: f64, time: Tick },
}

/// Exact task-count bookkeeping at a tick boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Census {
    pub generated: u64,
    pub completed: u64,
    pub queued: u64,
    pub in_transit: u64,
    pub executing: u64,
}

impl Census {
    pub fn is_conserved(&self) -> bool {
        self.generated == self.completed + self.queued + self.in_transit + self.executing
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub generators: Vec<AgentId>,
    /// Tasks per tick per generator.
    pub arrival_rate: f64,
    /// Tasks per time unit per server.
    pub service_rate: f64,
    pub learner: LearnerConfig,
    /// Forces local execution once a task has been received this many
    /// times. Debugging aid; `None` means unlimited.
    pub hop_limit: Option<usize>,
    /// Keep every policy fixed.
    pub freeze_learning: bool,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(generators: Vec<AgentId>, arrival_rate: f64, service_rate: f64, learner: LearnerConfig, seed: u64) -> Self {
        Self {
            generators,
            arrival_rate,
            service_rate,
            learner,
            hop_limit: None,
            freeze_learning: false,
            seed,
        }
    }
}

fn agent_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn service_sampler(service_rate: f64) -> Result<Exp<f64>, SimError> {
    if !(service_rate.is_finite() && service_rate > 0.0) {
        return Err(SimError::BadServiceRate(service_rate));
    }
    Exp::new(service_rate).map_err(|_| SimError::BadServiceRate(service_rate))
}

fn arrivals_at<R: rand::Rng + ?Sized>(
    agent: AgentId,
    count_dist: Option<&Poisson<f64>>,
    service: &Exp<f64>,
    now: Tick,
    rng: &mut R,
    next_id: &mut u64,
    out: &mut Vec<Task>,
) {
    let Some(count_dist) = count_dist else {
        return;
    };
    let count = count_dist.sample(rng) as u64;
    for _ in 0..count {
        let duration = service.sample(rng).max(f64::MIN_POSITIVE);
        out.push(Task::new(TaskId(*next_id), agent, now, duration));
        *next_id += 1;
    }
}

fn count_distribution(rate: f64) -> Result<Option<Poisson<f64>>, SimError> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(SimError::BadArrivalRate(rate));
    }
    if rate == 0.0 {
        return Ok(None);
    }
    Poisson::new(rate)
        .map(Some)
        .map_err(|_| SimError::BadArrivalRate(rate))
}

/// One tick of arrivals: a Poisson(`rate`) count per generator, each task
/// with an Exponential(`service_rate`) service duration. Ids are assigned
/// from `next_id` upward.
pub fn generate_arrivals<R: rand::Rng + ?Sized>(
    generators: &[AgentId],
    rate: f64,
    service_rate: f64,
    now: Tick,
    rng: &mut R,
    next_id: &mut u64,
) -> Result<Vec<Task>, SimError> {
    let counts = count_distribution(rate)?;
    let service = service_sampler(service_rate)?;
    let mut out = Vec::new();
    for &g in generators {
        arrivals_at(g, counts.as_ref(), &service, now, rng, next_id, &mut out);
    }
    Ok(out)
}

pub struct World {
    topology: Topology,
    config: SimConfig,
    now: Tick,
    agents: Vec<AgentRuntime>,
    in_flight: BinaryHeap<InFlight>,
    seq: u64,
    tasks: BTreeMap<TaskId, Task>,
    next_task: u64,
    census: Census,
    counter: ActionCounter,
    arrival_counts: Option<Poisson<f64>>,
    service: Exp<f64>,
    inbox: Vec<Vec<TaskId>>,
    updates: Vec<Message>,
    arrivals: Vec<Task>,
    completions: Vec<Completion>,
    trace: Option<Vec<SimEvent>>,
}

impl World {
    pub fn new(topology: Topology, config: SimConfig) -> Result<Self, SimError> {
        let n = topology.num_agents();
        if let Some(&g) = config.generators.iter().find(|&&g| g >= n) {
            return Err(SimError::UnknownGenerator(g));
        }
        config.learner.validate(topology.max_actions())?;
        let arrival_counts = count_distribution(config.arrival_rate)?;
        let service = service_sampler(config.service_rate)?;

        let agents = (0..n)
            .map(|a| {
                Ok(AgentRuntime {
                    queue: VecDeque::new(),
                    running: None,
                    busy_until: 0.0,
                    learner: LearnerState::new(topology.num_actions(a), &config.learner)?,
                    policy_rng: agent_stream(config.seed, 2 * a as u64),
                    arrival_rng: agent_stream(config.seed, 2 * a as u64 + 1),
                })
            })
            .collect::<Result<Vec<_>, SimError>>()?;
        let counter = ActionCounter::new((0..n).map(|a| topology.num_actions(a)));

        Ok(Self {
            topology,
            config,
            now: 0,
            agents,
            in_flight: BinaryHeap::new(),
            seq: 0,
            tasks: BTreeMap::new(),
            next_task: 0,
            census: Census::default(),
            counter,
            arrival_counts,
            service,
            inbox: alloc::vec![Vec::new(); n],
            updates: Vec::new(),
            arrivals: Vec::new(),
            completions: Vec::new(),
            trace: None,
        })
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn agents(&self) -> &[AgentRuntime] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> &AgentRuntime {
        &self.agents[id]
    }

    pub fn policies(&self) -> impl Iterator<Item = &Policy> + '_ {
        self.agents.iter().map(|a| &a.learner.policy)
    }

    /// Replaces an agent's policy (and resets its learner around it).
    pub fn set_policy(&mut self, agent: AgentId, policy: Policy) -> Result<(), SimError> {
        let n = self.topology.num_actions(agent);
        if policy.len() != n {
            return Err(LearnerError::LengthMismatch {
                expected: n,
                got: policy.len(),
            }
            .into());
        }
        self.agents[agent].learner = LearnerState::with_policy(policy, &self.config.learner)?;
        Ok(())
    }

    pub fn census(&self) -> Census {
        self.census
    }

    pub fn action_counter(&self) -> &ActionCounter {
        &self.counter
    }

    pub fn action_counter_mut(&mut self) -> &mut ActionCounter {
        &mut self.counter
    }

    /// Live task lookup. Tasks are dropped once their feedback has reached
    /// the origin.
    pub fn task(&self, id: TaskId) -> Option<&Task> {
        self.tasks.get(&id)
    }

    pub fn live_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn messages_in_flight(&self) -> usize {
        self.in_flight.len()
    }

    /// Completions finalised during the last tick.
    pub fn completions(&self) -> &[Completion] {
        &self.completions
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<SimEvent> {
        self.trace.as_mut().map(core::mem::take).unwrap_or_default()
    }

    fn log(&mut self, event: SimEvent) {
        if let Some(trace) = self.trace.as_mut() {
            trace.push(event);
        }
    }

    fn send(&mut self, kind: MessageKind, from: AgentId, to: AgentId, task: TaskId) {
        let msg = Message {
            kind,
            from,
            to,
            task,
            sent_at: self.now,
            deliver_at: self.now + self.topology.delay(from, to),
            seq: self.seq,
        };
        self.seq += 1;
        if matches!(kind, MessageKind::Request) {
            self.census.in_transit += 1;
        }
        self.log(SimEvent::Sent(msg.clone()));
        self.in_flight.push(InFlight(msg));
    }

    fn observe(&mut self, agent: AgentId, task: TaskId, hop: usize, action: ActionIndex, reward: f64) -> Result<(), SimError> {
        self.log(SimEvent::Observed {
            agent,
            task,
            hop,
            action,
            reward,
            time: self.now,
        });
        if !self.config.freeze_learning {
            let cfg = self.config.learner;
            self.agents[agent].learner.observe(action, reward, &cfg)?;
        }
        Ok(())
    }

    /// Advances the clock by one tick.
    pub fn step(&mut self) -> Result<(), SimError> {
        self.now += 1;
        let now = self.now;
        self.completions.clear();

        // 1. deliveries
        while self.in_flight.peek().is_some_and(|m| m.0.deliver_at <= now) {
            let InFlight(msg) = self.in_flight.pop().expect("peeked");
            match msg.kind {
                MessageKind::Request => {
                    self.census.in_transit -= 1;
                    self.inbox[msg.to].push(msg.task);
                }
                MessageKind::Update { .. } => self.updates.push(msg),
            }
        }

        // 2. arrivals
        let mut arrivals = core::mem::take(&mut self.arrivals);
        for i in 0..self.config.generators.len() {
            let g = self.config.generators[i];
            arrivals_at(
                g,
                self.arrival_counts.as_ref(),
                &self.service,
                now,
                &mut self.agents[g].arrival_rng,
                &mut self.next_task,
                &mut arrivals,
            );
        }
        for task in arrivals.drain(..) {
            self.census.generated += 1;
            self.log(SimEvent::Arrived {
                task: task.id,
                agent: task.origin,
                time: now,
                service_duration: task.service_duration,
            });
            self.inbox[task.origin].push(task.id);
            self.tasks.insert(task.id, task);
        }
        self.arrivals = arrivals;

        // 3. dispatch
        for agent in 0..self.agents.len() {
            let mut received = core::mem::take(&mut self.inbox[agent]);
            for task in received.drain(..) {
                self.dispatch(agent, task)?;
            }
            self.inbox[agent] = received;
        }

        // 4. feedback
        let mut updates = core::mem::take(&mut self.updates);
        for msg in updates.drain(..) {
            self.deliver_update(&msg)?;
        }
        self.updates = updates;

        // 5. execution
        for agent in 0..self.agents.len() {
            self.advance(agent)?;
        }
        Ok(())
    }

    /// Decides what `agent` does with a task it received this tick.
    pub fn dispatch(&mut self, agent: AgentId, task: TaskId) -> Result<ActionIndex, SimError> {
        let now = self.now;
        let runtime = &mut self.agents[agent];
        let mut action = sample(&runtime.learner.policy, &mut runtime.policy_rng);
        let t = self.tasks.get_mut(&task).ok_or(SimError::UnknownTask(task))?;
        if self.config.hop_limit.is_some_and(|limit| t.hop_trail.len() + 1 >= limit) {
            action = LOCAL;
        }
        let hop = t.hop_trail.len();
        t.hop_trail.push(HopRecord {
            agent,
            receipt_time: now,
            action_taken: action,
        });
        self.counter.record(agent, action);
        self.log(SimEvent::Dispatched {
            task,
            agent,
            hop,
            action,
            time: now,
        });

        if action == LOCAL {
            if let Some(t) = self.tasks.get_mut(&task) {
                t.enqueued_at = Some(now);
            }
            self.agents[agent].queue.push_back(Queued {
                task,
                enqueued_at: now,
            });
            self.census.queued += 1;
        } else {
            let to = self.topology.target(agent, action);
            self.send(MessageKind::Request, agent, to, task);
        }
        Ok(action)
    }

    fn advance(&mut self, agent: AgentId) -> Result<(), SimError> {
        let now = self.now as f64;
        loop {
            if let Some(run) = self.agents[agent].running {
                if run.completion > now {
                    break;
                }
                self.agents[agent].running = None;
                self.census.executing -= 1;
                self.complete(agent, run)?;
            }
            let runtime = &mut self.agents[agent];
            let Some(next) = runtime.queue.pop_front() else {
                break;
            };
            let task = self.tasks.get_mut(&next.task).ok_or(SimError::UnknownTask(next.task))?;
            let start = runtime.busy_until.max(next.enqueued_at as f64);
            let completion = start + task.service_duration;
            task.started_at = Some(start);
            runtime.busy_until = completion;
            runtime.running = Some(Running {
                task: next.task,
                start,
                completion,
            });
            self.census.queued -= 1;
            self.census.executing += 1;
            self.log(SimEvent::Started {
                task: next.task,
                agent,
                start,
                completion,
            });
        }
        Ok(())
    }

    fn complete(&mut self, agent: AgentId, run: Running) -> Result<(), SimError> {
        let task = self.tasks.get_mut(&run.task).ok_or(SimError::UnknownTask(run.task))?;
        task.completed_at = Some(run.completion);
        let enqueued_at = task.enqueued_at.ok_or(SimError::UnknownTask(run.task))?;
        let completion = Completion {
            task: task.id,
            agent,
            arrival_time: task.arrival_time,
            completion_time: run.completion,
            finalized_at: self.now,
            tst: run.completion - task.arrival_time as f64,
            routing_delay: (enqueued_at - task.arrival_time) as f64,
            queue_wait: run.start - enqueued_at as f64,
            service_duration: task.service_duration,
            hops: task.hop_trail.len(),
        };
        self.census.completed += 1;
        self.completions.push(completion);
        self.log(SimEvent::Completed(completion));
        self.propagate_feedback(run.task, run.completion)
    }

    /// Starts reward back-propagation for a task that just completed at the
    /// last agent of its hop trail. The executor is rewarded at once; each
    /// upstream agent is reached by an UPDATE message.
    fn propagate_feedback(&mut self, task: TaskId, completion_time: f64) -> Result<(), SimError> {
        let t = self.tasks.get(&task).ok_or(SimError::UnknownTask(task))?;
        let hop = t.hop_trail.len().checked_sub(1).ok_or(SimError::MissingHop {
            task,
            hop: 0,
            agent: usize::MAX,
        })?;
        let record = t.hop_trail[hop];
        let r = completion_time - record.receipt_time as f64;
        let upstream = hop.checked_sub(1).map(|h| t.hop_trail[h].agent);

        self.observe(record.agent, task, hop, record.action_taken, -r)?;
        match upstream {
            Some(to) => self.send(MessageKind::Update { r, hop: hop - 1 }, record.agent, to, task),
            None => {
                self.tasks.remove(&task);
            }
        }
        Ok(())
    }

    fn deliver_update(&mut self, msg: &Message) -> Result<(), SimError> {
        let MessageKind::Update { r, hop } = msg.kind else {
            return Ok(());
        };
        let t = self.tasks.get(&msg.task).ok_or(SimError::UnknownTask(msg.task))?;
        let missing = SimError::MissingHop {
            task: msg.task,
            hop,
            agent: msg.to,
        };
        let record = *t.hop_trail.get(hop).ok_or(missing.clone())?;
        let next = t.hop_trail.get(hop + 1).ok_or(missing.clone())?;
        if record.agent != msg.to || next.agent != msg.from {
            return Err(missing);
        }
        let upstream = hop.checked_sub(1).map(|h| t.hop_trail[h].agent);

        let r_here = self.topology.delay(msg.to, msg.from) as f64 + r;
        self.observe(msg.to, msg.task, hop, record.action_taken, -r_here)?;
        match upstream {
            Some(to) => self.send(MessageKind::Update { r: r_here, hop: hop - 1 }, msg.to, to, msg.task),
            None => {
                self.tasks.remove(&msg.task);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::Algorithm;
    use crate::topology::build_grid;
    use alloc::vec;
    use rand::SeedableRng;

    fn frozen(generators: Vec<AgentId>, rate: f64) -> SimConfig {
        let mut c = SimConfig::new(generators, rate, 0.1, LearnerConfig::default(), 1);
        c.freeze_learning = true;
        c
    }

    #[test]
    fn empty_world_only_advances_clock() {
        let mut w = World::new(build_grid(3, 3, 2).unwrap(), frozen(vec![], 0.0)).unwrap();
        for _ in 0..100 {
            w.step().unwrap();
        }
        assert_eq!(w.now(), 100);
        assert_eq!(w.census(), Census::default());
        assert_eq!(w.messages_in_flight(), 0);
    }

    #[test]
    fn arrival_rate_zero_generates_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut id = 0;
        for t in 0..1000 {
            assert!(generate_arrivals(&[0, 1], 0.0, 0.1, t, &mut rng, &mut id).unwrap().is_empty());
        }
        assert_eq!(
            generate_arrivals(&[0], -1.0, 0.1, 0, &mut rng, &mut id),
            Err(SimError::BadArrivalRate(-1.0))
        );
    }

    #[test]
    fn local_dispatch_enqueues() {
        let mut w = World::new(build_grid(2, 2, 2).unwrap(), frozen(vec![0], 1.0)).unwrap();
        w.set_policy(0, Policy::deterministic(3, LOCAL).unwrap()).unwrap();
        w.enable_trace();
        w.step().unwrap();
        let census = w.census();
        assert_eq!(census.in_transit, 0);
        assert_eq!(census.queued + census.executing + census.completed, census.generated);
        assert!(!w.take_trace().iter().any(|e| matches!(e, SimEvent::Sent(_))));
    }

    #[test]
    fn forward_dispatch_sends_request() {
        let mut w = World::new(build_grid(2, 2, 2).unwrap(), frozen(vec![0], 0.0)).unwrap();
        w.set_policy(0, Policy::deterministic(3, 1).unwrap()).unwrap();
        w.enable_trace();
        w.now = 5;
        w.tasks.insert(TaskId(0), Task::new(TaskId(0), 0, 5, 1.0));
        w.census.generated += 1;
        assert_eq!(w.dispatch(0, TaskId(0)).unwrap(), 1);
        let sent: Vec<_> = w
            .take_trace()
            .into_iter()
            .filter_map(|e| match e {
                SimEvent::Sent(m) => Some(m),
                _ => None,
            })
            .collect();
        assert_eq!(sent.len(), 1);
        assert_eq!(sent[0].kind, MessageKind::Request);
        assert_eq!(sent[0].to, w.topology().neighbors(0)[0]);
        assert_eq!(sent[0].deliver_at, 7);
    }

    #[test]
    fn single_task_tst_is_service_duration() {
        let mut w = World::new(build_grid(1, 1, 2).unwrap(), frozen(vec![], 0.0)).unwrap();
        w.now = 3;
        w.tasks.insert(TaskId(9), Task::new(TaskId(9), 0, 3, 4.25));
        w.census.generated += 1;
        w.dispatch(0, TaskId(9)).unwrap();
        w.advance(0).unwrap();
        let mut done = None;
        while done.is_none() {
            w.step().unwrap();
            done = w.completions().first().copied();
        }
        let c = done.unwrap();
        assert_eq!(c.completion_time, 7.25);
        assert_eq!(c.tst, 4.25);
        assert_eq!(c.finalized_at, 8);
        assert_eq!(c.queue_wait, 0.0);
    }

    #[test]
    fn two_hop_feedback_timeline() {
        // A = 0 forwards to B = 1 (delay 2); B executes.
        let cfg = LearnerConfig {
            algorithm: Algorithm::Wpl,
            ..LearnerConfig::default()
        };
        let mut c = SimConfig::new(vec![], 0.0, 0.1, cfg, 3);
        c.freeze_learning = true;
        let t = build_grid(1, 2, 2).unwrap();
        let mut w = World::new(t, c).unwrap();
        w.set_policy(0, Policy::deterministic(2, 1).unwrap()).unwrap();
        w.set_policy(1, Policy::deterministic(2, LOCAL).unwrap()).unwrap();
        w.enable_trace();
        w.tasks.insert(TaskId(0), Task::new(TaskId(0), 0, 0, 10.0));
        w.census.generated += 1;
        w.dispatch(0, TaskId(0)).unwrap();
        for _ in 0..30 {
            w.step().unwrap();
        }
        let rewards: Vec<_> = w
            .take_trace()
            .into_iter()
            .filter_map(|e| match e {
                SimEvent::Observed { agent, reward, time, .. } => Some((agent, reward, time)),
                _ => None,
            })
            .collect();
        // B receives at 2, completes at 12
        assert_eq!(rewards, vec![(1, -10.0, 12), (0, -12.0, 14)]);
        assert_eq!(w.live_tasks(), 0);
    }

    #[test]
    fn invalid_generator_rejected() {
        assert!(matches!(
            World::new(build_grid(2, 2, 1).unwrap(), frozen(vec![4], 0.1)),
            Err(SimError::UnknownGenerator(4))
        ));
    }

    #[test]
    fn task_tst_requires_completion() {
        let t = Task::new(TaskId(1), 0, 0, 1.0);
        assert_eq!(task_tst(&t), Err(SimError::NotCompleted(TaskId(1))));
    }
}
