//! Word-level RNS-CKKS evaluation kernels together with an analytical and
//! functional model of the HEAX accelerator architecture.
//!
//! The crate is organized bottom-up:
//!
//! * [`modarith`] — word-level modular arithmetic with a configurable word
//!   size (Barrett reduction, Shoup multiplication, NTT-friendly prime and
//!   root generation).
//! * [`ntt`] — negacyclic number-theoretic transform over `Z_p^n`, twiddle
//!   tables, and a quadratic reference convolution used as a test oracle.
//! * [`rns`] — residue-number-system polynomials, CRT reconstruction, and
//!   gadget decomposition.
//! * [`ckks`] — the RNS-CKKS scheme operations: key generation, symmetric
//!   encryption, Add, Mul, Floor, KeySwitch, relinearization, rescaling and
//!   rotation.
//! * [`heaxsim`] — the accelerator model: configuration derivation, cycle
//!   and throughput estimation, resource usage, DRAM bandwidth, and a
//!   cycle-counting banked-memory NTT dataflow simulator.

pub mod ckks;
pub mod heaxsim;
pub mod modarith;
pub mod ntt;
pub mod rns;
