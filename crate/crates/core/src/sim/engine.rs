use std::collections::{HashMap, VecDeque};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Exp1};

use super::events::{Event, EventQueue};
use super::stats::sort_samples;
use super::{Policy, SimConfig, SimCounts, SimResult};
use crate::error::Result;

const PROBE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy)]
struct Slot {
    batch: u64,
    copy: u16,
    seq: u64,
}

#[derive(Debug, Clone, Copy)]
struct PendingProbe {
    /// The probe waits for every slot with a smaller sequence number.
    seq_bound: u64,
    arrival: f64,
}

#[derive(Debug, Default)]
struct Server {
    /// FIFO queue; the front is in service while `busy`.
    queue: VecDeque<Slot>,
    busy: bool,
    epoch: u64,
    next_seq: u64,
    probes: VecDeque<PendingProbe>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CopyStatus {
    Waiting,
    Served,
    Removed,
}

#[derive(Debug, Clone, Copy)]
struct CopyState {
    server: u32,
    seq: u64,
    status: CopyStatus,
}

#[derive(Debug)]
struct Batch {
    arrival: f64,
    copies: Vec<CopyState>,
    /// Finished coded copies (MDS) or finished jobs (replication).
    progress: u32,
    job_done: Vec<bool>,
    done: bool,
    outstanding: u32,
    recorded: bool,
}

struct Engine<'a> {
    config: &'a SimConfig,
    rng: ChaCha8Rng,
    probe_rng: ChaCha8Rng,
    arrivals: Exp<f64>,
    servers: Vec<Server>,
    batches: HashMap<u64, Batch>,
    events: EventQueue,
    arrived: u64,
    counts: SimCounts,
    batch_samples: Vec<f64>,
    probe_samples: Vec<f64>,
}

/// Runs one simulation to completion: `horizon` batch arrivals, then until
/// every copy has been served or removed. Deterministic in `config.seed`.
pub fn run(config: &SimConfig) -> Result<SimResult> {
    if let Some(warning) = config.validate()? {
        log::warn!("{warning}");
    }
    let mut engine = Engine::new(config);
    engine.events.push(engine.arrivals.sample(&mut engine.rng), Event::BatchArrival)?;
    while let Some((t, event)) = engine.events.pop() {
        match event {
            Event::BatchArrival => engine.on_arrival(t)?,
            Event::ServiceCompletion { server, epoch } => engine.on_completion(t, server, epoch)?,
        }
    }
    Ok(engine.finish())
}

impl<'a> Engine<'a> {
    fn new(config: &'a SimConfig) -> Self {
        let k = config.params.k() as usize;
        let mut probe_rng = ChaCha8Rng::seed_from_u64(config.seed);
        probe_rng.set_stream(PROBE_STREAM);
        Self {
            config,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            probe_rng,
            arrivals: Exp::new(config.params.batch_rate()).expect("positive batch rate"),
            servers: (0..k).map(|_| Server::default()).collect(),
            batches: HashMap::new(),
            events: EventQueue::with_capacity_limit(64 * k + 1024),
            arrived: 0,
            counts: SimCounts::default(),
            batch_samples: Vec::new(),
            probe_samples: Vec::new(),
        }
    }

    fn on_arrival(&mut self, t: f64) -> Result<()> {
        let id = self.arrived;
        self.arrived += 1;
        self.counts.batches += 1;
        let past_warmup = id >= self.config.warmup;
        let recorded = past_warmup && (id - self.config.warmup).is_multiple_of(self.config.sample_every);
        if past_warmup && self.config.probe_rate > 0.0 && self.probe_rng.random::<f64>() < self.config.probe_rate {
            self.inject_probe(t);
        }

        let p = &self.config.params;
        let k = p.k() as usize;
        let placement: Vec<u32> = match self.config.policy {
            Policy::Mds => sample(&mut self.rng, k, (p.n() + p.m()) as usize)
                .iter()
                .map(|s| s as u32)
                .collect(),
            Policy::Replication => (0..p.n())
                .flat_map(|_| sample(&mut self.rng, k, p.d() as usize).into_iter().map(|s| s as u32))
                .collect(),
        };

        let mut copies = Vec::with_capacity(placement.len());
        for (copy, &server) in placement.iter().enumerate() {
            let seq = self.enqueue(t, server, id, copy as u16)?;
            copies.push(CopyState {
                server,
                seq,
                status: CopyStatus::Waiting,
            });
        }
        self.counts.copies_enqueued += copies.len() as u64;
        let job_done = match self.config.policy {
            Policy::Mds => Vec::new(),
            Policy::Replication => vec![false; p.n() as usize],
        };
        self.batches.insert(
            id,
            Batch {
                arrival: t,
                outstanding: copies.len() as u32,
                copies,
                progress: 0,
                job_done,
                done: false,
                recorded,
            },
        );

        if self.arrived < self.config.horizon {
            let next = t + self.arrivals.sample(&mut self.rng);
            self.events.push(next, Event::BatchArrival)?;
        }
        Ok(())
    }

    fn inject_probe(&mut self, t: f64) {
        self.counts.probes += 1;
        let server = &mut self.servers[self.probe_rng.random_range(0..self.config.params.k() as usize)];
        if server.queue.is_empty() {
            let service: f64 = Exp1.sample(&mut self.probe_rng);
            self.probe_samples.push(service);
        } else {
            server.probes.push_back(PendingProbe {
                seq_bound: server.next_seq,
                arrival: t,
            });
        }
    }

    fn enqueue(&mut self, t: f64, server: u32, batch: u64, copy: u16) -> Result<u64> {
        let s = &mut self.servers[server as usize];
        let seq = s.next_seq;
        s.next_seq += 1;
        s.queue.push_back(Slot { batch, copy, seq });
        if !s.busy {
            self.start_service(t, server)?;
        }
        Ok(seq)
    }

    fn start_service(&mut self, t: f64, server: u32) -> Result<()> {
        let s = &mut self.servers[server as usize];
        debug_assert!(!s.queue.is_empty());
        s.busy = true;
        s.epoch += 1;
        let epoch = s.epoch;
        let service: f64 = Exp1.sample(&mut self.rng);
        self.events.push(t + service, Event::ServiceCompletion { server, epoch })
    }

    fn on_completion(&mut self, t: f64, server: u32, epoch: u64) -> Result<()> {
        let s = &mut self.servers[server as usize];
        if !s.busy || s.epoch != epoch {
            self.counts.stale_events += 1;
            return Ok(());
        }
        let slot = s.queue.pop_front().expect("busy server has a copy in service");
        s.busy = false;
        self.counts.copies_served += 1;

        let removal = self.config.removal;
        let (n, d) = (self.config.params.n(), self.config.params.d());
        let batch = self.batches.get_mut(&slot.batch).expect("live batch");
        batch.copies[slot.copy as usize].status = CopyStatus::Served;
        batch.outstanding -= 1;

        let mut cancel: Vec<u16> = Vec::new();
        if !batch.done {
            match self.config.policy {
                Policy::Mds => {
                    batch.progress += 1;
                    if batch.progress == n {
                        batch.done = true;
                        if removal {
                            cancel.extend(waiting(&batch.copies, 0..batch.copies.len()));
                        }
                    }
                }
                Policy::Replication => {
                    let job = slot.copy as usize / d as usize;
                    if !batch.job_done[job] {
                        batch.job_done[job] = true;
                        batch.progress += 1;
                        if removal {
                            let range = job * d as usize..(job + 1) * d as usize;
                            cancel.extend(waiting(&batch.copies, range));
                        }
                        batch.done = batch.progress == n;
                    }
                }
            }
            if batch.done && batch.recorded {
                self.batch_samples.push(t - batch.arrival);
            }
        }

        for copy in cancel {
            self.remove_copy(t, slot.batch, copy)?;
        }
        if !self.servers[server as usize].queue.is_empty() {
            self.start_service(t, server)?;
        }
        self.resolve_probes(t, server);
        self.retire_if_drained(slot.batch);
        Ok(())
    }

    fn remove_copy(&mut self, t: f64, batch_id: u64, copy: u16) -> Result<()> {
        let batch = self.batches.get_mut(&batch_id).expect("live batch");
        let state = &mut batch.copies[copy as usize];
        debug_assert_eq!(state.status, CopyStatus::Waiting);
        state.status = CopyStatus::Removed;
        batch.outstanding -= 1;
        let (server, seq) = (state.server, state.seq);

        let s = &mut self.servers[server as usize];
        let pos = s
            .queue
            .binary_search_by_key(&seq, |slot| slot.seq)
            .expect("waiting copy is queued at its server");
        s.queue.remove(pos);
        self.counts.removals += 1;
        if pos == 0 && s.busy {
            s.busy = false;
            self.counts.preemptions += 1;
            if !s.queue.is_empty() {
                self.start_service(t, server)?;
            }
        }
        self.resolve_probes(t, server);
        Ok(())
    }

    fn resolve_probes(&mut self, t: f64, server: u32) {
        let s = &mut self.servers[server as usize];
        while let Some(probe) = s.probes.front() {
            let ahead_left = s.queue.front().is_none_or(|slot| slot.seq >= probe.seq_bound);
            if !ahead_left {
                break;
            }
            let service: f64 = Exp1.sample(&mut self.probe_rng);
            self.probe_samples.push(t - probe.arrival + service);
            s.probes.pop_front();
        }
    }

    fn retire_if_drained(&mut self, batch_id: u64) {
        if self.batches.get(&batch_id).is_some_and(|b| b.outstanding == 0) {
            self.batches.remove(&batch_id);
        }
    }

    fn finish(mut self) -> SimResult {
        debug_assert!(self.batches.is_empty(), "all batches drained");
        debug_assert_eq!(
            self.counts.copies_enqueued,
            self.counts.copies_served + self.counts.removals
        );
        self.counts.recorded_batches = self.batch_samples.len() as u64;
        sort_samples(&mut self.batch_samples);
        sort_samples(&mut self.probe_samples);
        SimResult {
            batch_completion_samples: self.batch_samples,
            probe_sojourn_samples: self.probe_samples,
            counts: self.counts,
            config: *self.config,
        }
    }
}

fn waiting(copies: &[CopyState], range: std::ops::Range<usize>) -> Vec<u16> {
    range
        .filter(|&c| copies[c].status == CopyStatus::Waiting)
        .map(|c| c as u16)
        .collect()
}
