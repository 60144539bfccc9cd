//! Fixed workloads shared by the simulator benches.

use anonet_core::adversary::{line, random_connected_adversary, static_adversary};
use anonet_core::engine::TraceLevel;
use anonet_core::protocols::{anonymous_counting, dynamic_naming, individual_conversations};
use anonet_core::{run, DynamicSchedule, Mode, RunConfig, RunResult};

pub fn counting_on_line(n: usize) -> RunResult {
    let mut adv = static_adversary(line(n, true).unwrap()).unwrap();
    let config = RunConfig::new(Mode::Broadcast, 0).trace(TraceLevel::Off);
    run(&anonymous_counting(), &mut adv, &config).unwrap()
}

pub fn dynamic_naming_on_random(n: usize, seed: u64) -> RunResult {
    let mut adv = random_connected_adversary(n, seed);
    let config = RunConfig::new(Mode::OneToEach, seed).trace(TraceLevel::Off);
    run(&dynamic_naming(), &mut adv, &config).unwrap()
}

pub fn conversations_on_random(n: usize, seed: u64) -> RunResult {
    let mut adv = random_connected_adversary(n, seed);
    let config = RunConfig::new(Mode::OneToEach, seed).trace(TraceLevel::Off);
    run(&individual_conversations(), &mut adv, &config).unwrap()
}

pub fn random_schedule(n: usize, seed: u64) -> DynamicSchedule {
    random_connected_adversary(n, seed).schedule(2 * n)
}
