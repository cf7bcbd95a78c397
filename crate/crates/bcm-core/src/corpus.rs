//! Small stock networks and run builders shared by tests, benches, and the
//! bundled scenario files.

use std::sync::Arc;

use crate::network::Network;
use crate::sim::{execute, ExternalInput, Run, Schedule};

/// Fork network: C fans out to A (fast channel) and B (slow channel), with
/// `lower(C->B) - upper(C->A) = 2`.
pub fn fork_net() -> Arc<Network> {
    Arc::new(Network::new(&["C", "A", "B"], &[("C", "A", 1, 3), ("C", "B", 5, 7)]).unwrap())
}

/// Two-fork zigzag network: C feeds A and D, E feeds D and B. No channel
/// D -> B, so B cannot observe the pattern.
pub fn zigzag_net() -> Arc<Network> {
    Arc::new(
        Network::new(
            &["C", "A", "D", "E", "B"],
            &[
                ("C", "A", 1, 2),
                ("C", "D", 6, 7),
                ("E", "D", 1, 2),
                ("E", "B", 3, 4),
            ],
        )
        .unwrap(),
    )
}

/// Zigzag network plus the D -> B report channel that makes the pattern
/// visible at B.
pub fn visible_zigzag_net() -> Arc<Network> {
    Arc::new(
        Network::new(
            &["C", "A", "D", "E", "B"],
            &[
                ("C", "A", 1, 2),
                ("C", "D", 6, 7),
                ("E", "D", 1, 2),
                ("E", "B", 3, 4),
                ("D", "B", 1, 2),
            ],
        )
        .unwrap(),
    )
}

/// Externals for the fork scenarios: a single go input to C at time 1.
pub fn go_externals(net: &Network) -> Vec<ExternalInput> {
    vec![ExternalInput {
        id: "go".into(),
        target: net.proc_id("C").unwrap(),
        time: 1,
    }]
}

/// Externals for the zigzag scenarios: go to C at 1, goE to E at 6. The E
/// timing admits both message orders at D within delivery windows.
pub fn zigzag_externals(net: &Network) -> Vec<ExternalInput> {
    vec![
        ExternalInput {
            id: "go".into(),
            target: net.proc_id("C").unwrap(),
            time: 1,
        },
        ExternalInput {
            id: "goE".into(),
            target: net.proc_id("E").unwrap(),
            time: 6,
        },
    ]
}

/// A zigzag-net run where C's message reaches D strictly before E's
/// (D@1 at 7, D@2 at 8), the configuration whose pattern weight is 6.
pub fn separated_zigzag_run(net: Arc<Network>, horizon: u32) -> Run {
    let externals = zigzag_externals(&net);
    let mut map = std::collections::BTreeMap::new();
    map.insert(
        (net.proc_id("C").unwrap(), 1, net.proc_id("D").unwrap()),
        7u32,
    );
    execute(net, &externals, &Schedule::Explicit(map), horizon).unwrap()
}

/// Splitmix64: a tiny deterministic generator so samplers stay seedable
/// without pulling a dependency into the library.
#[derive(Clone, Debug)]
pub struct Sampler {
    state: u64,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[lo, hi]`.
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.next_u64() % (hi - lo + 1)
    }

    pub fn chance(&mut self, numerator: u64, denominator: u64) -> bool {
        self.next_u64() % denominator < numerator
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[(self.next_u64() % items.len() as u64) as usize]
    }
}

const NAMES: [&str; 5] = ["A", "B", "C", "D", "E"];

/// A random desk-scale network: 2 to 5 processes, channel bounds in 1..=9,
/// at least one channel.
pub fn random_net(s: &mut Sampler) -> Arc<Network> {
    loop {
        let n = s.range(2, 5) as usize;
        let procs = &NAMES[..n];
        let mut chans = Vec::new();
        for src in 0..n {
            for dst in 0..n {
                if src != dst && s.chance(2, 5) {
                    let lower = s.range(1, 4) as u32;
                    let upper = s.range(lower as u64, (lower as u64 + 4).min(9)) as u32;
                    chans.push((procs[src], procs[dst], lower, upper));
                }
            }
        }
        if chans.is_empty() {
            continue;
        }
        return Arc::new(Network::new(procs, &chans).unwrap());
    }
}

/// One or two external inputs at small times, aimed at random processes.
pub fn random_externals(s: &mut Sampler, net: &Network) -> Vec<ExternalInput> {
    let count = s.range(1, 2);
    (0..count)
        .map(|k| ExternalInput {
            id: format!("go{k}"),
            target: crate::network::ProcId(s.range(0, net.proc_count() as u64 - 1) as u32),
            time: s.range(1, 3) as u32,
        })
        .collect()
}

/// A random run of the scenario: a forward simulation that samples each
/// delivery uniformly from its window (deliveries falling past the horizon
/// stay in transit).
pub fn random_run(
    s: &mut Sampler,
    net: Arc<Network>,
    externals: &[ExternalInput],
    horizon: u32,
) -> Run {
    use crate::network::ProcId;
    use crate::sim::{synthesize_run, Delivery, MessageInstance};
    use std::collections::BTreeMap;

    struct Pending {
        msg: MessageInstance,
        deliver_at: u32,
    }
    let mut line_len: Vec<u32> = vec![1; net.proc_count()];
    let mut pending: Vec<Pending> = Vec::new();
    let mut deliveries: Vec<Delivery> = Vec::new();
    for t in 1..=horizon {
        let mut touched: BTreeMap<ProcId, ()> = BTreeMap::new();
        for ext in externals.iter().filter(|e| e.time == t) {
            touched.insert(ext.target, ());
        }
        let mut rest = Vec::new();
        for p in pending {
            if p.deliver_at == t {
                deliveries.push(Delivery {
                    msg: p.msg,
                    deliver_time: t,
                });
                touched.insert(p.msg.dst, ());
            } else {
                rest.push(p);
            }
        }
        pending = rest;
        for &proc in touched.keys() {
            line_len[proc.index()] += 1;
            let index = line_len[proc.index()] - 1;
            for &dst in net.out_channels(proc) {
                let b = net.bounds(proc, dst).unwrap();
                let deliver_at = t + s.range(b.lower as u64, b.upper as u64) as u32;
                if deliver_at <= horizon {
                    pending.push(Pending {
                        msg: MessageInstance {
                            src: proc,
                            src_index: index,
                            dst,
                            send_time: t,
                        },
                        deliver_at,
                    });
                }
            }
        }
    }
    let run =
        synthesize_run(net, horizon, externals, &deliveries).expect("consistent by construction");
    debug_assert!(crate::sim::validate(&run).is_empty());
    run
}
