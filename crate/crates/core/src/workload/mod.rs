// SPDX-License-Identifier: Apache-2.0

//! Workload generators: fio-style microbenchmark jobs and an abstract OLTP
//! transaction mix.

mod fio;
mod oltp;

pub use fio::{fio_events, FioJob, FioMode, FioRequest, FioStream};
pub use oltp::{
    oltp_events, txn_rate_proxy, ObjectKind, OltpMix, OltpStream, TableSpec, TxnPlan, WalCursor, WritePattern,
};

/// Derives an independent stream seed from a base seed and a stream index
/// (splitmix64 finalizer).
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
