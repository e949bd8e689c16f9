//! Analytical model of the HEAX accelerator: configuration derivation,
//! buffer sizing, cycle counts, throughput, FPGA resource usage, and DRAM
//! bandwidth for key-switch keys, plus a functional banked-memory NTT
//! dataflow simulator.
//!
//! The model is closed-form. A KeySwitch engine instance is the chain
//! `1×INTT0 → m0×NTT0 → (m0+1)×Dyadic → 2×INTT1 → 2×NTT1 → 2×MS`, with the
//! per-module core counts balanced so every stage sustains the throughput
//! of the initial INTT. A standalone MULT module (dyadic cores) rides along
//! for ciphertext multiplication.

mod banked;

pub use banked::{
    banked_ntt_schedule, mux_fanin_per_input, simulate_banked_ntt, CoreAssignment, MuxSource,
    NttSchedule, ScheduleStep, SimReport, StageKind,
};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("indivisible configuration")]
    IndivisibleConfiguration,
    #[error("invalid core count")]
    InvalidCoreCount,
    #[error("bank conflict")]
    BankConflict,
}

/// FPGA device selecting the shell overhead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Device {
    Arria10,
    Stratix10,
}

impl Device {
    pub fn parse(s: &str) -> Option<Device> {
        match s.to_ascii_lowercase().as_str() {
            "arria10" | "arria" | "a10" => Some(Device::Arria10),
            "stratix10" | "stratix" | "s10" => Some(Device::Stratix10),
            _ => None,
        }
    }
}

/// Per-core resource costs and pipeline depths, plus per-device shell
/// overheads.
#[derive(Debug, Clone, Serialize)]
pub struct CoreCosts {
    pub dyadic_dsp: u64,
    pub dyadic_reg: u64,
    pub dyadic_alm: u64,
    pub dyadic_stages: u64,
    pub ntt_dsp: u64,
    pub ntt_reg: u64,
    pub ntt_alm: u64,
    pub ntt_stages: u64,
    pub intt_dsp: u64,
    pub intt_reg: u64,
    pub intt_alm: u64,
    pub intt_stages: u64,
    pub shell_a10: ShellCosts,
    pub shell_s10: ShellCosts,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShellCosts {
    pub dsp: u64,
    pub reg: u64,
    pub alm: u64,
}

impl Default for CoreCosts {
    fn default() -> Self {
        CoreCosts {
            dyadic_dsp: 22,
            dyadic_reg: 4526,
            dyadic_alm: 1663,
            dyadic_stages: 23,
            ntt_dsp: 10,
            ntt_reg: 6297,
            ntt_alm: 2066,
            ntt_stages: 50,
            intt_dsp: 10,
            intt_reg: 5449,
            intt_alm: 2119,
            intt_stages: 49,
            shell_a10: ShellCosts {
                dsp: 1,
                reg: 79203,
                alm: 39222,
            },
            shell_s10: ShellCosts {
                dsp: 2,
                reg: 86984,
                alm: 45612,
            },
        }
    }
}

impl CoreCosts {
    pub fn shell(&self, device: Device) -> ShellCosts {
        match device {
            Device::Arria10 => self.shell_a10,
            Device::Stratix10 => self.shell_s10,
        }
    }
}

/// An architecture instance: HE shape, per-module core counts, module
/// instance counts, clock, and buffer depths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HeaxConfig {
    pub n: usize,
    pub k: usize,
    pub m0: usize,
    pub nc_intt0: usize,
    pub nc_ntt0: usize,
    pub nc_dyd: usize,
    pub nc_intt1: usize,
    pub nc_ntt1: usize,
    pub nc_ms: usize,
    pub mult_cores: usize,
    pub freq_hz: u64,
    pub f1: u64,
    pub f2: u64,
    pub intt0_modules: usize,
    pub ntt0_modules: usize,
    pub dyad_modules: usize,
    pub intt1_modules: usize,
    pub ntt1_modules: usize,
    pub ms_modules: usize,
}

/// Standalone MULT module core count shared by all reported builds.
pub const DEFAULT_MULT_CORES: usize = 16;

#[inline]
fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Derives a complete architecture instance from the HE shape, the INTT0
/// core count, the NTT0 module count `m0`, and the clock.
///
/// Per initial INTT the engine computes `k` forward NTTs, so
/// `nc_NTT0 = k * nc_INTT0 / m0`. The dyadic stage must keep up with two
/// key columns (`ceil(4 * nc_NTT0 / log n)` cores) and the modulus-switch
/// stage with two output polynomials (`ceil(2 * nc_NTT0 / log n)`); both
/// round up to the next power of two, which is what the reported builds
/// instantiate. `nc_INTT1 = ceil(nc_INTT0 / k)` and `nc_NTT1 = nc_INTT0`.
pub fn derive_config(
    n: usize,
    k: usize,
    nc_intt0: usize,
    m0: usize,
    freq_hz: u64,
) -> Result<HeaxConfig, SimError> {
    if !n.is_power_of_two() || n < 4 || k == 0 || nc_intt0 == 0 || m0 == 0 {
        return Err(SimError::IndivisibleConfiguration);
    }
    if (k * nc_intt0) % m0 != 0 {
        return Err(SimError::IndivisibleConfiguration);
    }
    let log_n = n.trailing_zeros() as usize;
    let nc_ntt0 = k * nc_intt0 / m0;
    let nc_dyd = ceil_div(4 * nc_ntt0, log_n).next_power_of_two();
    let nc_intt1 = ceil_div(nc_intt0, k);
    let nc_ntt1 = nc_intt0;
    let nc_ms = ceil_div(2 * nc_ntt0, log_n).next_power_of_two();
    let mut cfg = HeaxConfig {
        n,
        k,
        m0,
        nc_intt0,
        nc_ntt0,
        nc_dyd,
        nc_intt1,
        nc_ntt1,
        nc_ms,
        mult_cores: DEFAULT_MULT_CORES,
        freq_hz,
        f1: 0,
        f2: 0,
        intt0_modules: 1,
        ntt0_modules: m0,
        dyad_modules: m0 + 1,
        intt1_modules: 2,
        ntt1_modules: 2,
        ms_modules: 2,
    };
    let (f1, f2) = buffer_depths(&cfg);
    cfg.f1 = f1;
    cfg.f2 = f2;
    Ok(cfg)
}

/// Cycles for one NTT (or INTT) of size `n` on `nc` butterfly cores:
/// `n log n / (2 nc)`.
pub fn ntt_cycles(n: usize, nc: usize) -> u64 {
    assert!(n.is_power_of_two() && nc >= 1 && nc <= n / 2);
    (n as u64 * n.trailing_zeros() as u64) / (2 * nc as u64)
}

/// Cycles for a dyadic pass over `key_sets` operand sets: `key_sets * n / nc`.
pub fn dyadic_cycles(n: usize, nc: usize, key_sets: u64) -> u64 {
    assert!(n.is_power_of_two() && nc >= 1 && nc <= n);
    key_sets * (n / nc) as u64
}

/// Key-switch throughput: the pipeline initiation interval is the `k`
/// iterations of the initial INTT, `k * ntt_cycles(n, nc_INTT0)` cycles.
pub fn keyswitch_throughput(cfg: &HeaxConfig) -> u64 {
    let interval = cfg.k as u64 * ntt_cycles(cfg.n, cfg.nc_intt0);
    round_div_u64(cfg.freq_hz, interval)
}

/// MULT followed by relinearization sustains the KeySwitch rate: the MULT
/// module overlaps inside the key-switch pipeline.
pub fn mul_relin_throughput(cfg: &HeaxConfig) -> u64 {
    keyswitch_throughput(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LowLevelOp {
    Ntt,
    Intt,
    Dyadic,
}

/// Low-level operation throughput. Standalone NTT/INTT requests run on the
/// KeySwitch engine's forward-NTT modules (`nc_NTT0` cores); dyadic
/// multiplication runs on the MULT module.
pub fn lowlevel_throughput(cfg: &HeaxConfig, op: LowLevelOp) -> u64 {
    let cycles = match op {
        LowLevelOp::Ntt | LowLevelOp::Intt => ntt_cycles(cfg.n, cfg.nc_ntt0),
        LowLevelOp::Dyadic => dyadic_cycles(cfg.n, cfg.mult_cores, 1),
    };
    round_div_u64(cfg.freq_hz, cycles)
}

/// Aggregate NTT throughput of `modules` independent `nc`-core NTT modules.
pub fn aggregate_ntt_throughput(n: usize, modules: u64, nc: usize, freq_hz: u64) -> u64 {
    modules * round_div_u64(freq_hz, ntt_cycles(n, nc))
}

/// Input double-buffering depth `f1 = ceil(3 + nc_INTT0 / nc_NTT0)` and the
/// dyadic-output buffer depth
/// `f2 = ceil(1 + m0 * nc_INTT1 / nc_NTT1 + nc_INTT1 * log n / nc_MS)`,
/// both evaluated exactly over the rationals.
pub fn buffer_depths(cfg: &HeaxConfig) -> (u64, u64) {
    let f1 = ceil_div(3 * cfg.nc_ntt0 + cfg.nc_intt0, cfg.nc_ntt0) as u64;
    let log_n = cfg.n.trailing_zeros() as usize;
    let denom = cfg.nc_ntt1 * cfg.nc_ms;
    let numer = denom + cfg.m0 * cfg.nc_intt1 * cfg.nc_ms + cfg.nc_intt1 * log_n * cfg.nc_ntt1;
    let f2 = ceil_div(numer, denom) as u64;
    (f1, f2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResourceEstimate {
    pub dsp: u64,
    pub reg: u64,
    pub alm: u64,
}

/// Sums per-core costs over every instantiated core (the complete design:
/// KeySwitch engine plus the MULT module plus the device shell). MS cores
/// are costed as dyadic cores.
pub fn resource_estimate(cfg: &HeaxConfig, costs: &CoreCosts, device: Device) -> ResourceEstimate {
    let ntt_cores = (cfg.ntt0_modules * cfg.nc_ntt0 + cfg.ntt1_modules * cfg.nc_ntt1) as u64;
    let intt_cores = (cfg.intt0_modules * cfg.nc_intt0 + cfg.intt1_modules * cfg.nc_intt1) as u64;
    let dyadic_cores =
        (cfg.dyad_modules * cfg.nc_dyd + cfg.ms_modules * cfg.nc_ms + cfg.mult_cores) as u64;
    let shell = costs.shell(device);
    ResourceEstimate {
        dsp: costs.ntt_dsp * ntt_cores
            + costs.intt_dsp * intt_cores
            + costs.dyadic_dsp * dyadic_cores
            + shell.dsp,
        reg: costs.ntt_reg * ntt_cores
            + costs.intt_reg * intt_cores
            + costs.dyadic_reg * dyadic_cores
            + shell.reg,
        alm: costs.ntt_alm * ntt_cores
            + costs.intt_alm * intt_cores
            + costs.dyadic_alm * dyadic_cores
            + shell.alm,
    }
}

/// Fraction of BRAM width used when `beta` 54-bit words are packed into
/// 40-bit memory units: `beta * 54 / (ceil(beta * 54 / 40) * 40)`.
pub fn bram_pack_utilization(beta: u64) -> f64 {
    assert!(beta >= 1);
    let bits = beta * 54;
    let units = bits.div_ceil(40);
    bits as f64 / (units * 40) as f64
}

/// Total key-switch key volume streamed per operation: two key columns of
/// `k * (k + 1)` vectors of `n` 64-bit words.
pub fn ksk_size_bits(n: usize, k: usize) -> u64 {
    2 * (k as u64) * (k as u64 + 1) * n as u64 * 64
}

/// DRAM bandwidth (bytes per second) needed to stream key-switch keys at
/// the given operation rate.
pub fn ksk_bandwidth_required(n: usize, k: usize, keyswitch_ops_per_sec: u64) -> f64 {
    (ksk_size_bits(n, k) / 8) as f64 * keyswitch_ops_per_sec as f64
}

#[inline]
fn round_div_u64(num: u64, den: u64) -> u64 {
    (num + den / 2) / den
}

/// Cycle-level summary for one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct CycleReport {
    pub ntt_cycles: u64,
    pub intt_cycles: u64,
    pub mult_dyadic_cycles: u64,
    pub keyswitch_initiation_interval: u64,
}

/// Throughput summary (operations per second).
#[derive(Debug, Clone, Serialize)]
pub struct ThroughputReport {
    pub ntt: u64,
    pub intt: u64,
    pub dyadic_mult: u64,
    pub keyswitch: u64,
    pub mul_relin: u64,
}

/// Bandwidth summary for key-switch key streaming.
#[derive(Debug, Clone, Serialize)]
pub struct BandwidthReport {
    pub ksk_bits: u64,
    pub ksk_bytes_per_op: u64,
    pub required_bytes_per_sec: f64,
    pub required_gbps: f64,
}

/// The full machine-readable estimation document.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub config: HeaxConfig,
    pub cycles: CycleReport,
    pub throughput: ThroughputReport,
    pub resources: ResourceEstimate,
    pub bandwidth: BandwidthReport,
    pub device: Device,
}

/// Builds the complete report for a configuration on a device.
pub fn estimate(cfg: &HeaxConfig, costs: &CoreCosts, device: Device) -> EstimateReport {
    let ks = keyswitch_throughput(cfg);
    let bits = ksk_size_bits(cfg.n, cfg.k);
    EstimateReport {
        config: cfg.clone(),
        cycles: CycleReport {
            ntt_cycles: ntt_cycles(cfg.n, cfg.nc_ntt0),
            intt_cycles: ntt_cycles(cfg.n, cfg.nc_intt0),
            mult_dyadic_cycles: dyadic_cycles(cfg.n, cfg.mult_cores, 1),
            keyswitch_initiation_interval: cfg.k as u64 * ntt_cycles(cfg.n, cfg.nc_intt0),
        },
        throughput: ThroughputReport {
            ntt: lowlevel_throughput(cfg, LowLevelOp::Ntt),
            intt: lowlevel_throughput(cfg, LowLevelOp::Intt),
            dyadic_mult: lowlevel_throughput(cfg, LowLevelOp::Dyadic),
            keyswitch: ks,
            mul_relin: mul_relin_throughput(cfg),
        },
        resources: resource_estimate(cfg, costs, device),
        bandwidth: BandwidthReport {
            ksk_bits: bits,
            ksk_bytes_per_op: bits / 8,
            required_bytes_per_sec: ksk_bandwidth_required(cfg.n, cfg.k, ks),
            required_gbps: ksk_bandwidth_required(cfg.n, cfg.k, ks) / 1e9,
        },
        device,
    }
}

impl EstimateReport {
    /// Line-oriented `key=value` rendering.
    pub fn to_key_value_lines(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        push("device", format!("{:?}", self.device).to_lowercase());
        push("n", c.n.to_string());
        push("k", c.k.to_string());
        push("m0", c.m0.to_string());
        push("freq_hz", c.freq_hz.to_string());
        push("nc_intt0", c.nc_intt0.to_string());
        push("nc_ntt0", c.nc_ntt0.to_string());
        push("nc_dyd", c.nc_dyd.to_string());
        push("nc_intt1", c.nc_intt1.to_string());
        push("nc_ntt1", c.nc_ntt1.to_string());
        push("nc_ms", c.nc_ms.to_string());
        push("mult_cores", c.mult_cores.to_string());
        push("f1", c.f1.to_string());
        push("f2", c.f2.to_string());
        push("ntt_cycles", self.cycles.ntt_cycles.to_string());
        push("intt_cycles", self.cycles.intt_cycles.to_string());
        push(
            "mult_dyadic_cycles",
            self.cycles.mult_dyadic_cycles.to_string(),
        );
        push(
            "keyswitch_initiation_interval",
            self.cycles.keyswitch_initiation_interval.to_string(),
        );
        push("ntt_ops_per_sec", self.throughput.ntt.to_string());
        push("intt_ops_per_sec", self.throughput.intt.to_string());
        push(
            "dyadic_ops_per_sec",
            self.throughput.dyadic_mult.to_string(),
        );
        push(
            "keyswitch_ops_per_sec",
            self.throughput.keyswitch.to_string(),
        );
        push(
            "mul_relin_ops_per_sec",
            self.throughput.mul_relin.to_string(),
        );
        push("dsp", self.resources.dsp.to_string());
        push("reg", self.resources.reg.to_string());
        push("alm", self.resources.alm.to_string());
        push("ksk_bits", self.bandwidth.ksk_bits.to_string());
        push(
            "ksk_bytes_per_op",
            self.bandwidth.ksk_bytes_per_op.to_string(),
        );
        push(
            "ksk_bandwidth_bytes_per_sec",
            format!("{:.0}", self.bandwidth.required_bytes_per_sec),
        );
        push(
            "ksk_bandwidth_gbps",
            format!("{:.3}", self.bandwidth.required_gbps),
        );
        out
    }
}

/// The four reported builds: `(device, set, nc_intt0, m0, freq)`.
pub fn known_builds() -> Vec<(Device, crate::ckks::ParamSet, usize, usize, u64)> {
    use crate::ckks::ParamSet;
    vec![
        (Device::Arria10, ParamSet::A, 8, 2, 275_000_000),
        (Device::Stratix10, ParamSet::A, 16, 2, 300_000_000),
        (Device::Stratix10, ParamSet::B, 16, 4, 300_000_000),
        (Device::Stratix10, ParamSet::C, 8, 4, 300_000_000),
    ]
}

/// Looks up the reported build for a device/set pair.
pub fn known_build(device: Device, set: crate::ckks::ParamSet) -> Option<HeaxConfig> {
    known_builds()
        .into_iter()
        .find(|(d, s, _, _, _)| *d == device && *s == set)
        .map(|(_, s, nc, m0, freq)| {
            let (n, _, k) = s.shape();
            derive_config(n, k, nc, m0, freq).expect("known builds are divisible")
        })
}
