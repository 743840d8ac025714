//! Discrete-event dispatch of the training DAGs onto the simulated cluster.
//!
//! Each node runs one task at a time. Gain-ratio tasks only run where their
//! feature subset lives; a fragmented subset runs one unit per fragment and
//! the fragments ship partition statistics to the lowest-id host, which
//! finalises the result. Node-splitting tasks wait in one FIFO queue and go
//! to whichever idle node can start them first. Ties are broken by time,
//! then task id, then node id, so a run is fully deterministic.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::allocate::{AllocationPlan, SlaveNode};
use super::cost::{CostLedger, CostModel, Traffic};
use super::dag::TaskDag;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Cells held by the cluster for the run.
    Volume,
    /// A subset or fragment shipped to its node.
    Place,
    Start,
    Finish,
    Transfer,
    /// An idle node found the T_NS queue empty.
    Starved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub event: EventKind,
    pub time: f64,
    /// Receiving or executing node.
    pub node: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<usize>,
    #[serde(default)]
    pub bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic: Option<Traffic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<u64>,
}

impl TraceEvent {
    fn new(event: EventKind, time: f64, node: u32) -> Self {
        TraceEvent {
            event,
            time,
            node,
            task: None,
            tree: None,
            bytes: 0,
            from: None,
            traffic: None,
            subset: None,
            duration: None,
            cells: None,
        }
    }
}

/// Applies one event to a ledger. Used both while scheduling and on replay.
pub fn apply(ledger: &mut CostLedger, e: &TraceEvent) {
    match e.event {
        EventKind::Volume => ledger.data_volume_cells += e.cells.unwrap_or(0),
        EventKind::Place => {
            ledger.comm_bytes_allocation += e.bytes;
            ledger.busy_time.entry(e.node).or_insert(0.0);
        }
        EventKind::Start => {}
        EventKind::Finish => {
            *ledger.busy_time.entry(e.node).or_insert(0.0) += e.duration.unwrap_or(0.0);
            ledger.tasks_run += 1;
            ledger.makespan = ledger.makespan.max(e.time);
        }
        EventKind::Transfer => {
            ledger.add_training(e.traffic.unwrap_or(Traffic::FeatureData), e.bytes)
        }
        EventKind::Starved => ledger.starvation_polls += 1,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleTrace {
    pub events: Vec<TraceEvent>,
}

impl ScheduleTrace {
    pub fn replay(&self) -> CostLedger {
        let mut ledger = CostLedger::default();
        for e in &self.events {
            apply(&mut ledger, e);
        }
        ledger
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n").map_err(|e| Error::io("<trace>", e))?;
        }
        Ok(())
    }

    /// Reads events back, skipping blank lines and lines that are not
    /// events (such as a reproducibility header).
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut events = Vec::new();
        for line in input.lines() {
            let line = line.map_err(|e| Error::io("<trace>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value = serde_json::from_str(&line)?;
            if value.get("event").is_some() {
                events.push(serde_json::from_value(value)?);
            }
        }
        Ok(ScheduleTrace { events })
    }

    /// Nodes each task's units executed on, by global task id.
    pub fn task_nodes(&self) -> BTreeMap<usize, BTreeSet<u32>> {
        let mut out: BTreeMap<usize, BTreeSet<u32>> = BTreeMap::new();
        for e in self.events.iter().filter(|e| e.event == EventKind::Start) {
            if let Some(t) = e.task {
                out.entry(t).or_default().insert(e.node);
            }
        }
        out
    }
}

/// Maps global task ids back to `(dag index, task id)`.
#[derive(Clone, Debug)]
pub struct TaskIndex {
    offsets: Vec<usize>,
}

impl TaskIndex {
    pub fn new(dags: &[TaskDag]) -> Self {
        let mut offsets = Vec::with_capacity(dags.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for d in dags {
            acc += d.tasks.len();
            offsets.push(acc);
        }
        TaskIndex { offsets }
    }

    pub fn global(&self, dag: usize, task: usize) -> usize {
        self.offsets[dag] + task
    }

    pub fn local(&self, global: usize) -> (usize, usize) {
        let dag = self.offsets.partition_point(|&o| o <= global) - 1;
        (dag, global - self.offsets[dag])
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Non-negative times order like their bit patterns.
fn key(t: f64) -> u64 {
    debug_assert!(t >= 0.0);
    t.to_bits()
}

struct Task {
    dag: usize,
    local: usize,
    gain_ratio: bool,
    subset: Option<usize>,
    rows: u64,
    waiting_on: usize,
    deps: Vec<usize>,
    dependents: Vec<usize>,
    units: Vec<usize>,
    units_left: usize,
    /// When the result is available at `host`.
    finish: f64,
    host: u32,
}

struct Unit {
    task: usize,
    /// Fixed node for gain-ratio units.
    node: Option<u32>,
    rows: u64,
    /// Time the unit's output reaches its task's host.
    arrival: f64,
}

struct Sim<'a> {
    cost: &'a CostModel,
    tasks: Vec<Task>,
    units: Vec<Unit>,
    node_ids: Vec<u32>,
    free_at: Vec<f64>,
    local: Vec<BinaryHeap<Reverse<(u64, usize)>>>,
    cluster: BinaryHeap<Reverse<(u64, usize)>>,
    running: BinaryHeap<Reverse<(u64, usize)>>,
    merge_host: BTreeMap<usize, u32>,
    /// (parent T_NS, receiving node, child T_NS) already sent.
    broadcasts: BTreeSet<(usize, u32, usize)>,
    trace: ScheduleTrace,
    ledger: CostLedger,
    split_pending: usize,
}

impl Sim<'_> {
    fn emit(&mut self, e: TraceEvent) {
        apply(&mut self.ledger, &e);
        self.trace.events.push(e);
    }

    fn slot(&self, node: u32) -> usize {
        self.node_ids.binary_search(&node).expect("known node")
    }

    fn transfer(&mut self, time: f64, from: u32, to: u32, bytes: u64, kind: Traffic, task: usize) -> f64 {
        if from == to {
            return time;
        }
        let t = &self.tasks[task];
        let mut e = TraceEvent::new(EventKind::Transfer, time, to);
        e.from = Some(from);
        e.bytes = bytes;
        e.traffic = Some(kind);
        e.task = Some(task);
        e.tree = Some(t.dag);
        e.subset = t.subset;
        self.emit(e);
        time + self.cost.transfer_time(bytes)
    }

    fn start(&mut self, unit: usize, node: u32, start: f64) {
        let (task, rows) = (self.units[unit].task, self.units[unit].rows);
        let duration = self.cost.task_time(rows);
        let end = start + duration;
        let slot = self.slot(node);
        self.free_at[slot] = end;
        self.units[unit].node = Some(node);
        self.running.push(Reverse((key(end), unit)));
        let mut e = TraceEvent::new(EventKind::Start, start, node);
        e.task = Some(task);
        e.tree = Some(self.tasks[task].dag);
        e.subset = self.tasks[task].subset;
        self.emit(e);
    }

    /// Called once all dependencies of `task` have finished.
    fn release(&mut self, task: usize) {
        let deps = self.tasks[task].deps.clone();
        if !self.tasks[task].gain_ratio {
            let ready = deps.iter().map(|&d| self.tasks[d].finish).fold(0.0, f64::max);
            self.cluster.push(Reverse((key(ready), task)));
            return;
        }
        // the index list of the tree node this task scores
        let bytes = self.cost.index_bytes * self.tasks[task].rows;
        let child = self.tasks[task].dependents.first().copied().unwrap_or(task);
        for u in self.tasks[task].units.clone() {
            let host = self.units[u].node.expect("gain-ratio units are pinned");
            let mut ready = 0.0f64;
            for &d in &deps {
                let (finish, from) = (self.tasks[d].finish, self.tasks[d].host);
                let arrive = if from == host {
                    finish
                } else if self.broadcasts.insert((d, host, child)) {
                    self.transfer(finish, from, host, bytes, Traffic::SplitBroadcast, task)
                } else {
                    finish + self.cost.transfer_time(bytes)
                };
                ready = ready.max(arrive);
            }
            let slot = self.slot(host);
            self.local[slot].push(Reverse((key(ready), u)));
        }
    }

    fn finish_unit(&mut self, unit: usize, end: f64) {
        let task = self.units[unit].task;
        let node = self.units[unit].node.expect("started unit");
        let duration = self.cost.task_time(self.units[unit].rows);
        let mut e = TraceEvent::new(EventKind::Finish, end, node);
        e.task = Some(task);
        e.tree = Some(self.tasks[task].dag);
        e.subset = self.tasks[task].subset;
        e.duration = Some(duration);
        self.emit(e);

        let host = if self.tasks[task].gain_ratio {
            let merge = self.merge_host.get(&self.tasks[task].subset.unwrap()).copied();
            match merge {
                Some(m) if self.tasks[task].units.len() > 1 => m,
                _ => node,
            }
        } else {
            node
        };
        let bytes = self.cost.partition_stats_bytes();
        self.units[unit].arrival = self.transfer(end, node, host, bytes, Traffic::PartitionStats, task);

        let t = &mut self.tasks[task];
        t.units_left -= 1;
        if t.units_left > 0 {
            return;
        }
        let finish = t.units.iter().map(|&u| self.units[u].arrival).fold(0.0, f64::max);
        t.finish = finish;
        t.host = host;
        if !t.gain_ratio {
            self.split_pending -= 1;
        }
        for d in t.dependents.clone() {
            self.tasks[d].waiting_on -= 1;
            if self.tasks[d].waiting_on == 0 {
                self.release(d);
            }
        }
    }

    /// Earliest start of a T_NS on `node`, counting result records still in
    /// flight.
    fn split_start(&self, task: usize, node: u32, now: f64) -> f64 {
        self.tasks[task]
            .deps
            .iter()
            .map(|&d| {
                let t = &self.tasks[d];
                if t.host == node {
                    t.finish
                } else {
                    t.finish + self.cost.transfer_time(self.cost.result_record_bytes)
                }
            })
            .fold(now, f64::max)
    }
}

/// Runs every DAG on the cluster described by `plan` and `nodes`.
pub fn schedule(
    dags: &[TaskDag],
    plan: &AllocationPlan,
    nodes: &[SlaveNode],
    cost: &CostModel,
) -> Result<(ScheduleTrace, CostLedger)> {
    cost.validate()?;
    if nodes.is_empty() {
        return Err(Error::InvalidArgument("cluster has no nodes".into()));
    }
    let mut node_ids: Vec<u32> = nodes.iter().map(|n| n.node_id).collect();
    node_ids.sort_unstable();
    if node_ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("duplicate node id".into()));
    }
    for e in &plan.entries {
        if let Some(f) = e.fragments.iter().find(|f| node_ids.binary_search(&f.node_id).is_err()) {
            return Err(Error::InvalidArgument(format!(
                "subset {} placed on unknown node {}",
                e.subset, f.node_id
            )));
        }
    }

    let index = TaskIndex::new(dags);
    let mut tasks = Vec::with_capacity(index.len());
    let mut units = Vec::new();
    for (di, dag) in dags.iter().enumerate() {
        for t in &dag.tasks {
            let subset = t.feature();
            let mut task = Task {
                dag: di,
                local: t.task_id,
                gain_ratio: t.is_gain_ratio(),
                subset,
                rows: t.est_rows,
                waiting_on: t.deps.len(),
                deps: Vec::new(),
                dependents: Vec::new(),
                units: Vec::new(),
                units_left: 0,
                finish: 0.0,
                host: 0,
            };
            let gid = tasks.len();
            match subset {
                Some(s) => {
                    let entry = plan.entry(s).ok_or(Error::UnhostedSubset(s))?;
                    for f in &entry.fragments {
                        // the fragment's share of this node's rows, rounded up
                        let rows = if entry.rows == 0 {
                            0
                        } else {
                            (u128::from(t.est_rows) * u128::from(f.rows())).div_ceil(u128::from(entry.rows)) as u64
                        };
                        task.units.push(units.len());
                        units.push(Unit {
                            task: gid,
                            node: Some(f.node_id),
                            rows,
                            arrival: 0.0,
                        });
                    }
                }
                None => {
                    task.units.push(units.len());
                    units.push(Unit {
                        task: gid,
                        node: None,
                        rows: t.est_rows,
                        arrival: 0.0,
                    });
                }
            }
            task.units_left = task.units.len();
            tasks.push(task);
        }
        for &(from, to) in &dag.edges {
            if from >= dag.tasks.len() || to >= dag.tasks.len() {
                return Err(Error::MalformedTrace(format!("edge ({from}, {to}) out of range")));
            }
            let (from, to) = (index.global(di, from), index.global(di, to));
            tasks[from].dependents.push(to);
            tasks[to].deps.push(from);
        }
    }
    if let Some(t) = tasks.iter().find(|t| t.deps.len() != t.waiting_on) {
        return Err(Error::MalformedTrace(format!(
            "task {} of tree {} lists deps that its edges do not match",
            t.local, t.dag
        )));
    }
    let split_pending = tasks.iter().filter(|t| !t.gain_ratio).count();

    let n = node_ids.len();
    let mut sim = Sim {
        cost,
        tasks,
        units,
        node_ids,
        free_at: vec![0.0; n],
        local: vec![BinaryHeap::new(); n],
        cluster: BinaryHeap::new(),
        running: BinaryHeap::new(),
        merge_host: plan.entries.iter().map(|e| (e.subset, e.merge_host())).collect(),
        broadcasts: BTreeSet::new(),
        trace: ScheduleTrace::default(),
        ledger: CostLedger::default(),
        split_pending,
    };

    let rows = plan.entries.iter().map(|e| e.rows).max().unwrap_or(0);
    let mut vol = TraceEvent::new(EventKind::Volume, 0.0, sim.node_ids[0]);
    vol.cells = Some(plan.entries.iter().map(|e| 2 * e.rows).sum::<u64>() + dags.len() as u64 * rows);
    sim.emit(vol);
    for e in &plan.entries {
        for f in &e.fragments {
            let mut ev = TraceEvent::new(EventKind::Place, 0.0, f.node_id);
            ev.bytes = f.bytes;
            ev.subset = Some(e.subset);
            sim.emit(ev);
        }
    }

    for t in 0..sim.tasks.len() {
        if sim.tasks[t].waiting_on == 0 {
            sim.release(t);
        }
    }

    let mut now = 0.0f64;
    let mut done = 0usize;
    loop {
        // pinned gain-ratio units first
        for slot in 0..n {
            if sim.free_at[slot] > now {
                continue;
            }
            if let Some(&Reverse((ready, u))) = sim.local[slot].peek() {
                if f64::from_bits(ready) <= now {
                    sim.local[slot].pop();
                    let node = sim.node_ids[slot];
                    sim.start(u, node, now);
                }
            }
        }
        // then node splits onto whichever idle node can start soonest
        loop {
            let idle: Vec<u32> = (0..n)
                .filter(|&s| sim.free_at[s] <= now)
                .map(|s| sim.node_ids[s])
                .collect();
            if idle.is_empty() {
                break;
            }
            match sim.cluster.peek() {
                Some(&Reverse((ready, task))) if f64::from_bits(ready) <= now => {
                    sim.cluster.pop();
                    let (node, start) = idle
                        .iter()
                        .map(|&node| (node, sim.split_start(task, node, now)))
                        .fold(None, |best: Option<(u32, f64)>, c| match best {
                            Some(b) if b.1 <= c.1 => Some(b),
                            _ => Some(c),
                        })
                        .unwrap();
                    for d in sim.tasks[task].deps.clone() {
                        let (finish, from) = (sim.tasks[d].finish, sim.tasks[d].host);
                        let bytes = sim.cost.result_record_bytes;
                        sim.transfer(finish, from, node, bytes, Traffic::ResultRecord, task);
                    }
                    let unit = sim.tasks[task].units[0];
                    sim.start(unit, node, start);
                }
                _ => {
                    if sim.split_pending > 0 {
                        let node = idle[0];
                        sim.emit(TraceEvent::new(EventKind::Starved, now, node));
                    }
                    break;
                }
            }
        }

        let next_end = sim.running.peek().map(|r| r.0 .0);
        let next_ready = sim
            .local
            .iter()
            .filter_map(|h| h.peek().map(|r| r.0 .0))
            .chain(sim.cluster.peek().map(|r| r.0 .0))
            .filter(|&k| f64::from_bits(k) > now)
            .min();
        let Some(next) = next_end.into_iter().chain(next_ready).min() else {
            break;
        };
        now = f64::from_bits(next);
        while let Some(&Reverse((end, u))) = sim.running.peek() {
            if end != next {
                break;
            }
            sim.running.pop();
            sim.finish_unit(u, now);
            done += 1;
        }
    }

    if done != sim.units.len() {
        return Err(Error::MalformedTrace(format!(
            "{} of {} task units never became ready (dependency cycle?)",
            sim.units.len() - done,
            sim.units.len()
        )));
    }
    Ok((sim.trace, sim.ledger))
}
