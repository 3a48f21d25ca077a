//! Scratch diagnostics for the window machine (not part of the suite).

use bbox_core::algorithms::WindowMachine;
use bbox_core::bits::BitString;
use bbox_core::layout::MuPlusOneLayout;
use bbox_core::model::{run_with_observer, GenerationProposal, HiddenInstance, Observer};
use bbox_core::reconstruct::region_value;
use bbox_core::rng::{stream, trial_seed, StreamKind};

struct LastState {
    members: Vec<BitString>,
    ranks: Vec<u32>,
    gens: u64,
}

impl Observer for LastState {
    fn on_generation(
        &mut self,
        t: u64,
        members: &[BitString],
        ranks: &[u32],
        _proposal: &GenerationProposal,
        _offspring_fitness: &[usize],
    ) {
        self.members = members.to_vec();
        self.ranks = ranks.to_vec();
        self.gens = t;
    }
}

struct Trace {
    l: MuPlusOneLayout,
    z: BitString,
    armed_at: Option<u64>,
    rows: u64,
}

impl Observer for Trace {
    fn on_generation(
        &mut self,
        t: u64,
        members: &[BitString],
        _ranks: &[u32],
        proposal: &GenerationProposal,
        offspring_fitness: &[usize],
    ) {
        let l = &self.l;
        let any_sample = members.iter().any(|m| m.get(l.live_flag));
        if self.armed_at.is_none() && any_sample {
            self.armed_at = Some(t);
        }
        let Some(start) = self.armed_at else { return };
        if t > start + 60 && self.rows > 0 {
            return;
        }
        self.rows += 1;
        if t > start + 60 {
            return;
        }
        let win = l.window(0);
        let o = &proposal.offspring[0];
        let pop: Vec<String> = members
            .iter()
            .map(|m| {
                format!(
                    "{}{}{}",
                    m.agreement(&self.z),
                    if m.get(l.live_flag) { "s" } else { "-" },
                    match l.ctr.read(m) {
                        Ok(v) => format!("c{v}"),
                        Err(_) => "cX".into(),
                    }
                )
            })
            .collect();
        println!(
            "  gen {t}: off fit={} win0={:04b} fs={} ctr={:?} zwin={:04b} | pop [{}]",
            offspring_fitness[0],
            region_value(o, win),
            o.get(l.live_flag) as u8,
            l.ctr.read(o),
            region_value(&self.z, win),
            pop.join(" ")
        );
    }
}

fn main() {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse().unwrap())
        .collect();
    let n = args.first().copied().unwrap_or(512);
    let mu = args.get(1).copied().unwrap_or(8);
    let trials = args.get(2).copied().unwrap_or(10) as u64;
    let algo = WindowMachine::new(n, mu).unwrap();
    let l = algo.layout().unwrap().clone();
    println!(
        "layout: k={} t={} windows={} ctr_width={}",
        l.k,
        l.t,
        l.windows,
        l.ctr.width()
    );

    let mut fails = 0;
    for trial in 0..trials {
        let seed = trial_seed(9300, trial);
        let mut rng = stream(seed, StreamKind::Instance, 0);
        let instance = HiddenInstance::random(n, &mut rng);
        let z = instance.target();
        let mut obs = LastState {
            members: vec![],
            ranks: vec![],
            gens: 0,
        };
        let record = run_with_observer(&algo, &instance, 40 * n as u64, seed, &mut obs);
        if record.success {
            println!(
                "trial {trial}: ok queries={} gens={}",
                record.queries, record.generations
            );
            continue;
        }
        fails += 1;
        println!(
            "trial {trial}: FAIL cause={:?} gens={}",
            record.failure_cause, record.generations
        );
        for (i, m) in obs.members.iter().enumerate() {
            let flags = (
                m.get(l.code_opt_flag) as u8,
                m.get(l.copied_flag) as u8,
                m.get(l.live_flag) as u8,
                m.get(l.finale_flag) as u8,
            );
            println!(
                "  slot {i}: rank {} fit {} flags(c,cp,s,f)={:?} ctr={:?}",
                obs.ranks[i],
                m.agreement(z),
                flags,
                l.ctr.read(m)
            );
        }
        if trial == 2 {
            println!("  --- trace of first 60 post-arm generations ---");
            let mut tr = Trace {
                l: l.clone(),
                z: z.clone(),
                armed_at: None,
                rows: 0,
            };
            run_with_observer(&algo, &instance, 40 * n as u64, seed, &mut tr);
        }
    }
    println!("fails: {fails}/{trials}");
}
