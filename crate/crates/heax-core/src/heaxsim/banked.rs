//! Conflict-free banked-memory NTT dataflow: schedule construction and a
//! functional, cycle-counting simulator.
//!
//! Polynomial coefficients are striped across `2 * nc` parallel memory
//! banks sharing one read and one write address; the row read across all
//! banks in a cycle is a memory element (ME). Stage classification follows
//! the butterfly distance `d = n / 2^(s+1)` against the doubled ME width:
//!
//! * Type 1 (`d >= 2 nc`): the two butterfly operands live in different
//!   MEs. Two MEs are fetched on consecutive cycles and both are
//!   transformed over the next two cycles, so the cores stay fully
//!   utilized. Operands stay aligned: core `l` always takes offset `l`
//!   within each fetched (undoubled) element.
//! * Type 2 (`d <= nc`): both operands fall inside one doubled ME. The
//!   boundary stage `d = nc` routes through the even/odd half registers;
//!   later stages select operands out of the staged element, and across
//!   all of them each core input draws from at most `log2 nc` distinct
//!   positions, which bounds the required multiplexer fan-in.
//!
//! The schedule reports ME addresses in undoubled units of `nc` words; the
//! simulator maps those onto doubled rows and enforces the one-read,
//! one-write-per-cycle port discipline.

use super::SimError;
use crate::modarith::{add_mod, mul_red, sub_mod};
use crate::ntt::NttTable;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StageKind {
    Type1,
    Type2,
}

/// Where a core input is routed from during a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MuxSource {
    /// Type 1: offset within the fetched undoubled element; identical for
    /// every stage, no per-stage multiplexing.
    Aligned { offset: usize },
    /// Boundary stage `d = nc`: position within the doubled element,
    /// served by the even/odd half registers.
    Register { position: usize },
    /// Type 2 proper (`d < nc`): position within the staged element,
    /// served by the switched multiplexers.
    Switched { position: usize },
}

/// One butterfly assignment for one core in one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoreAssignment {
    /// Global coefficient indices of the pair.
    pub input_a: usize,
    pub input_b: usize,
    pub a_source: MuxSource,
    pub b_source: MuxSource,
    /// Index into the bit-reversed twiddle table.
    pub twiddle: usize,
}

/// One step: one cycle of core work, `nc` butterflies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScheduleStep {
    pub stage: usize,
    pub step: usize,
    pub kind: StageKind,
    /// Undoubled ME addresses read (and written back in place).
    pub reads: Vec<usize>,
    pub writes: Vec<usize>,
    pub cores: Vec<CoreAssignment>,
}

/// A complete conflict-free schedule for one `(n, nc)` shape.
#[derive(Debug, Clone, Serialize)]
pub struct NttSchedule {
    pub n: usize,
    pub nc: usize,
    pub type1_stages: usize,
    pub steps: Vec<ScheduleStep>,
}

/// Builds the full schedule: every `(stage, coefficient)` pair is covered
/// exactly once, `n log n / (2 nc)` steps in total.
pub fn banked_ntt_schedule(n: usize, nc: usize) -> Result<NttSchedule, SimError> {
    if !n.is_power_of_two() || !nc.is_power_of_two() || nc < 1 || 2 * nc > n {
        return Err(SimError::InvalidCoreCount);
    }
    let log_n = n.trailing_zeros() as usize;
    let n_me = n / nc;
    let mut steps = Vec::with_capacity(n / (2 * nc) * log_n);

    for stage in 0..log_n {
        let dist = n >> (stage + 1);
        let blocks = 1usize << stage; // twiddle base for this stage
        let twiddle_of = |a_index: usize| blocks + (a_index >> (log_n - stage));
        let mut step_no = 0usize;

        if dist >= 2 * nc {
            // Type 1: undoubled elements `m` and `m + dist/nc` pair up.
            let d_me = dist / nc;
            for base in (0..n_me).step_by(2 * d_me) {
                for r in 0..d_me {
                    let m_lo = base + r;
                    let m_hi = m_lo + d_me;
                    let cores = (0..nc)
                        .map(|core| {
                            let input_a = m_lo * nc + core;
                            CoreAssignment {
                                input_a,
                                input_b: input_a + dist,
                                a_source: MuxSource::Aligned { offset: core },
                                b_source: MuxSource::Aligned { offset: core },
                                twiddle: twiddle_of(input_a),
                            }
                        })
                        .collect();
                    steps.push(ScheduleStep {
                        stage,
                        step: step_no,
                        kind: StageKind::Type1,
                        reads: vec![m_lo, m_hi],
                        writes: vec![m_lo, m_hi],
                        cores,
                    });
                    step_no += 1;
                }
            }
        } else {
            // Type 2: both operands inside one doubled element.
            let width = 2 * nc;
            for row in 0..n / width {
                let cores = (0..nc)
                    .map(|core| {
                        let (a_pos, a_source, b_source) = if dist == nc {
                            (
                                core,
                                MuxSource::Register { position: core },
                                MuxSource::Register {
                                    position: core + nc,
                                },
                            )
                        } else {
                            let pos = 2 * dist * (core / dist) + core % dist;
                            (
                                pos,
                                MuxSource::Switched { position: pos },
                                MuxSource::Switched {
                                    position: pos + dist,
                                },
                            )
                        };
                        let input_a = row * width + a_pos;
                        CoreAssignment {
                            input_a,
                            input_b: input_a + dist,
                            a_source,
                            b_source,
                            twiddle: twiddle_of(input_a),
                        }
                    })
                    .collect();
                steps.push(ScheduleStep {
                    stage,
                    step: step_no,
                    kind: StageKind::Type2,
                    reads: vec![2 * row, 2 * row + 1],
                    writes: vec![2 * row, 2 * row + 1],
                    cores,
                });
                step_no += 1;
            }
        }
    }

    Ok(NttSchedule {
        n,
        nc,
        type1_stages: log_n - nc.trailing_zeros() as usize - 1,
        steps,
    })
}

/// Distinct switched-multiplexer source positions per core input across all
/// Type-2 stages: `(a_fanin, b_fanin)` per core. Each is at most
/// `log2 nc`.
pub fn mux_fanin_per_input(schedule: &NttSchedule) -> Vec<(usize, usize)> {
    use std::collections::BTreeSet;
    let mut a_sets = vec![BTreeSet::new(); schedule.nc];
    let mut b_sets = vec![BTreeSet::new(); schedule.nc];
    for step in &schedule.steps {
        for (core, assign) in step.cores.iter().enumerate() {
            if let MuxSource::Switched { position } = assign.a_source {
                a_sets[core].insert(position);
            }
            if let MuxSource::Switched { position } = assign.b_source {
                b_sets[core].insert(position);
            }
        }
    }
    a_sets
        .into_iter()
        .zip(b_sets)
        .map(|(a, b)| (a.len(), b.len()))
        .collect()
}

/// Banked memory with doubled MEs: `2 * nc` banks sharing one read and one
/// write port. Issuing two row reads (or two row writes) in the same cycle
/// is a bank conflict.
struct BankedMemory {
    data: Vec<u64>,
    last_read: Option<u64>,
    last_write: Option<u64>,
}

impl BankedMemory {
    fn new(data: Vec<u64>) -> Self {
        BankedMemory {
            data,
            last_read: None,
            last_write: None,
        }
    }

    fn read_row(&mut self, cycle: u64) -> Result<(), SimError> {
        if self.last_read == Some(cycle) {
            return Err(SimError::BankConflict);
        }
        debug_assert!(self.last_read.is_none_or(|c| c < cycle));
        self.last_read = Some(cycle);
        Ok(())
    }

    fn write_row(&mut self, cycle: u64) -> Result<(), SimError> {
        if self.last_write == Some(cycle) {
            return Err(SimError::BankConflict);
        }
        debug_assert!(self.last_write.is_none_or(|c| c < cycle));
        self.last_write = Some(cycle);
        Ok(())
    }
}

/// Result of a banked-NTT run.
#[derive(Debug, Clone)]
pub struct SimReport {
    pub output: Vec<u64>,
    /// Core-work steps: exactly `n log n / (2 nc)`.
    pub steps: u64,
    /// Total cycles including per-stage fetch fill.
    pub cycles: u64,
}

/// Executes the schedule against the banked memory model. The output is
/// bit-identical to [`crate::ntt::ntt_forward`]; any double access to a
/// port in one cycle surfaces as a `BankConflict` (a scheduler bug).
pub fn simulate_banked_ntt(a: &[u64], table: &NttTable, nc: usize) -> Result<SimReport, SimError> {
    let n = table.degree();
    assert_eq!(a.len(), n);
    let schedule = banked_ntt_schedule(n, nc)?;
    let m = table.modulus();
    let mut mem = BankedMemory::new(a.to_vec());
    let mut cycle = 0u64;

    let run_cores = |data: &mut [u64], step: &ScheduleStep| {
        for assign in &step.cores {
            let w = table.twiddle(assign.twiddle);
            let u = data[assign.input_a];
            let v = mul_red(data[assign.input_b], w, m);
            data[assign.input_a] = add_mod(u, v, m);
            data[assign.input_b] = sub_mod(u, v, m);
        }
    };

    let mut i = 0usize;
    while i < schedule.steps.len() {
        let stage = schedule.steps[i].stage;
        let stage_end = schedule.steps[i..]
            .iter()
            .position(|s| s.stage != stage)
            .map_or(schedule.steps.len(), |p| i + p);
        match schedule.steps[i].kind {
            StageKind::Type1 => {
                // Pairs of steps share two doubled rows: fetch both over two
                // cycles, transform both, write back over the next two.
                for pair in schedule.steps[i..stage_end].chunks(2) {
                    mem.read_row(cycle)?;
                    mem.read_row(cycle + 1)?;
                    for step in pair {
                        run_cores(&mut mem.data, step);
                    }
                    mem.write_row(cycle + 2)?;
                    mem.write_row(cycle + 3)?;
                    cycle += 2;
                }
                cycle += 2;
            }
            StageKind::Type2 => {
                for step in &schedule.steps[i..stage_end] {
                    mem.read_row(cycle)?;
                    run_cores(&mut mem.data, step);
                    mem.write_row(cycle + 1)?;
                    cycle += 1;
                }
                cycle += 1;
            }
        }
        i = stage_end;
    }

    Ok(SimReport {
        output: mem.data,
        steps: schedule.steps.len() as u64,
        cycles: cycle,
    })
}
