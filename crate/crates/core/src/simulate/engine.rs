use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::estimators::PathAccumulator;
use super::{PacketRecord, SimParams};
use crate::error::{Error, Result};
use crate::model::{derive_rates, normalize_scheme, ServiceRate, SystemConfig};

const ROLE_EDGE: u64 = 0;
const ROLE_TX: u64 = 1;

fn role_generation(ue: usize) -> u64 {
    2 + 2 * ue as u64
}

fn role_local(ue: usize) -> u64 {
    3 + 2 * ue as u64
}

/// Independent stream for one (replication, role) pair of a master seed.
pub(crate) fn stream(seed: u64, replication: u64, role: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((replication << 32) | role);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Edge,
    Tx,
    Local(usize),
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Completion(Stage),
    Generation(usize),
}

impl Kind {
    fn priority(self) -> u8 {
        match self {
            Kind::Completion(_) => 0,
            Kind::Generation(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: Kind,
    seq: u64,
}

impl Event {
    fn key(&self) -> (f64, u8, u64) {
        (self.time, self.kind.priority(), self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
    }
}

/// One FCFS single-server queue; the head of `queue` is in service.
struct Server {
    rate: f64,
    rng: ChaCha8Rng,
    queue: VecDeque<PacketRecord>,
    max_len: usize,
}

impl Server {
    fn new(rate: f64, rng: ChaCha8Rng) -> Self {
        Self {
            rate,
            rng,
            queue: VecDeque::new(),
            max_len: 0,
        }
    }
}

/// Per-UE output of one replication.
pub(crate) struct UeOutput {
    pub acc: PathAccumulator,
    pub occupancy: Vec<u64>,
}

pub(crate) struct ReplicationOutput {
    pub ues: Vec<UeOutput>,
    pub max_edge: usize,
    pub max_tx: usize,
    pub max_local: Vec<usize>,
    pub sim_time: f64,
    pub delivered: Vec<u64>,
    pub diverged: bool,
}

struct Engine<'a, S: FnMut(&PacketRecord)> {
    params: &'a SimParams,
    now: f64,
    events: BinaryHeap<Reverse<Event>>,
    next_seq: u64,
    edge: Option<Server>,
    tx: Server,
    local: Vec<Option<Server>>,
    gen_rngs: Vec<ChaCha8Rng>,
    gen_rates: Vec<f64>,
    generated: Vec<u64>,
    delivered: Vec<u64>,
    pending: usize,
    edge_by_ue: Vec<u32>,
    ues: Vec<UeOutput>,
    diverged: bool,
    sink: S,
}

impl<S: FnMut(&PacketRecord)> Engine<'_, S> {
    fn schedule(&mut self, time: f64, kind: Kind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.events.push(Reverse(Event { time, kind, seq }));
    }

    fn server(&mut self, stage: Stage) -> &mut Server {
        match stage {
            Stage::Edge => self.edge.as_mut().expect("edge stage is finite"),
            Stage::Tx => &mut self.tx,
            Stage::Local(n) => self.local[n].as_mut().expect("local stage is finite"),
        }
    }

    /// Draw the service of the head packet of `stage` and schedule its completion.
    fn start_service(&mut self, stage: Stage) {
        let now = self.now;
        let server = self.server(stage);
        let unit: f64 = server.rng.sample(Exp1);
        let service = unit / server.rate;
        let head = server.queue.front_mut().expect("non-empty queue");
        let arrival = match stage {
            Stage::Edge => head.gen_time,
            Stage::Tx => head.edge_done,
            Stage::Local(_) => head.tx_done,
        };
        let wait = now - arrival;
        match stage {
            Stage::Edge => (head.wait_edge, head.service_edge) = (wait, service),
            Stage::Tx => (head.wait_tx, head.service_tx) = (wait, service),
            Stage::Local(_) => (head.wait_local, head.service_local) = (wait, service),
        }
        self.schedule(now + service, Kind::Completion(stage));
    }

    fn enqueue(&mut self, stage: Stage, rec: PacketRecord) {
        let cap = self.params.queue_cap;
        let server = self.server(stage);
        server.queue.push_back(rec);
        let len = server.queue.len();
        server.max_len = server.max_len.max(len);
        if len > cap {
            self.diverged = true;
        }
        if len == 1 {
            self.start_service(stage);
        }
    }

    fn arrive_edge(&mut self, rec: PacketRecord) -> Result<()> {
        if self.edge.is_some() {
            self.edge_by_ue[rec.ue] += 1;
            self.enqueue(Stage::Edge, rec);
            Ok(())
        } else {
            let mut rec = rec;
            rec.edge_done = rec.gen_time;
            self.arrive_tx(rec)
        }
    }

    fn arrive_tx(&mut self, rec: PacketRecord) -> Result<()> {
        self.enqueue(Stage::Tx, rec);
        Ok(())
    }

    fn arrive_local(&mut self, rec: PacketRecord) -> Result<()> {
        if self.local[rec.ue].is_some() {
            self.enqueue(Stage::Local(rec.ue), rec);
            Ok(())
        } else {
            let mut rec = rec;
            rec.local_done = rec.tx_done;
            self.deliver(rec)
        }
    }

    fn deliver(&mut self, rec: PacketRecord) -> Result<()> {
        let n = rec.ue;
        let target = self.params.packets_per_ue;
        let expected = self.ues[n].acc.next_seq();
        if rec.seq != expected {
            return Err(Error::DeliveryOrder {
                ue: n,
                expected,
                got: rec.seq,
            });
        }
        let retained = rec.seq >= self.params.warmup_packets_per_ue && rec.seq < target;
        self.ues[n].acc.push(&rec, retained);
        if rec.seq < target {
            self.delivered[n] += 1;
            if retained {
                (self.sink)(&rec);
            }
            if self.delivered[n] == target {
                self.pending -= 1;
            }
        }
        Ok(())
    }

    fn complete(&mut self, stage: Stage) -> Result<()> {
        let now = self.now;
        let mut rec = self
            .server(stage)
            .queue
            .pop_front()
            .expect("completion of an empty queue");
        if !self.server(stage).queue.is_empty() {
            self.start_service(stage);
        }
        match stage {
            Stage::Edge => {
                self.edge_by_ue[rec.ue] -= 1;
                rec.edge_done = now;
                self.arrive_tx(rec)
            }
            Stage::Tx => {
                rec.tx_done = now;
                self.arrive_local(rec)
            }
            Stage::Local(_) => {
                rec.local_done = now;
                self.deliver(rec)
            }
        }
    }

    fn generate(&mut self, n: usize) -> Result<()> {
        let now = self.now;
        let seq = self.generated[n];
        self.generated[n] += 1;

        // Occupancy seen by a post-warmup arrival that finds none of its own
        // UE's packets in the edge queue.
        if self.params.record_correlations && seq >= self.params.warmup_packets_per_ue {
            if let Some(edge) = &self.edge {
                if self.edge_by_ue[n] == 0 {
                    let k = edge.queue.len();
                    let hist = &mut self.ues[n].occupancy;
                    if hist.len() <= k {
                        hist.resize(k + 1, 0);
                    }
                    hist[k] += 1;
                }
            }
        }

        let gap: f64 = self.gen_rngs[n].sample(Exp1);
        let next = now + gap / self.gen_rates[n];
        self.schedule(next, Kind::Generation(n));

        self.arrive_edge(PacketRecord::generated(n, seq, now))
    }

    fn run(&mut self) -> Result<()> {
        for n in 0..self.gen_rates.len() {
            let gap: f64 = self.gen_rngs[n].sample(Exp1);
            self.schedule(gap / self.gen_rates[n], Kind::Generation(n));
        }
        while self.pending > 0 {
            let Reverse(ev) = self.events.pop().expect("generation events never run out");
            self.now = ev.time;
            match ev.kind {
                Kind::Generation(n) => self.generate(n)?,
                Kind::Completion(stage) => self.complete(stage)?,
            }
        }
        Ok(())
    }
}

/// Simulate one replication, passing every retained record to `sink` in
/// delivery order.
pub(crate) fn run_replication<S: FnMut(&PacketRecord)>(
    cfg: &SystemConfig,
    params: &SimParams,
    replication: u64,
    sink: S,
) -> Result<ReplicationOutput> {
    let cfg = normalize_scheme(cfg);
    let rates = derive_rates(&cfg);
    let n = cfg.num_ues();
    let seed = params.seed;
    let finite = |r: ServiceRate, role: u64| r.finite().map(|mu| Server::new(mu, stream(seed, replication, role)));

    let mut engine = Engine {
        params,
        now: 0.0,
        events: BinaryHeap::with_capacity(2 * n + 2),
        next_seq: 0,
        edge: finite(rates.eff_edge, ROLE_EDGE),
        tx: Server::new(cfg.tx_rate(), stream(seed, replication, ROLE_TX)),
        local: (0..n).map(|u| finite(rates.eff_local[u], role_local(u))).collect(),
        gen_rngs: (0..n).map(|u| stream(seed, replication, role_generation(u))).collect(),
        gen_rates: cfg.gen_rates().to_vec(),
        generated: vec![0; n],
        delivered: vec![0; n],
        pending: n,
        edge_by_ue: vec![0; n],
        ues: (0..n)
            .map(|_| UeOutput {
                acc: PathAccumulator::default(),
                occupancy: Vec::new(),
            })
            .collect(),
        diverged: false,
        sink,
    };
    engine.run()?;

    Ok(ReplicationOutput {
        max_edge: engine.edge.as_ref().map_or(0, |s| s.max_len),
        max_tx: engine.tx.max_len,
        max_local: engine.local.iter().map(|s| s.as_ref().map_or(0, |s| s.max_len)).collect(),
        sim_time: engine.now,
        delivered: engine.delivered,
        diverged: engine.diverged,
        ues: engine.ues,
    })
}
