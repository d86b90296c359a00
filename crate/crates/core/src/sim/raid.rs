// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

/// Striping geometry of a RAID-0 array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaidLayout {
    pub members: usize,
    pub chunk_size: u64,
}

/// One piece of a logical range as it lands on a member device.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StripePiece {
    pub member: usize,
    pub offset: u64,
    pub size: u64,
}

/// Splits `[offset, offset + size)` at chunk boundaries and maps each piece
/// to its member device and member-relative offset.
pub fn raid0_map(layout: &RaidLayout, offset: u64, size: u64) -> Vec<StripePiece> {
    let chunk = layout.chunk_size;
    let n = layout.members as u64;
    let mut pieces = Vec::new();
    let mut pos = offset;
    let end = offset + size;
    while pos < end {
        let c = pos / chunk;
        let within = pos % chunk;
        let len = (chunk - within).min(end - pos);
        pieces.push(StripePiece {
            member: (c % n) as usize,
            offset: (c / n) * chunk + within,
            size: len,
        });
        pos += len;
    }
    pieces
}

/// Pieces grouped per member with member-contiguous neighbours joined, in
/// member order. Consecutive stripes of one member are adjacent on that
/// member, so a large logical command becomes at most one command per member
/// when it does not wrap around.
pub fn coalesce_pieces(mut pieces: Vec<StripePiece>) -> Vec<StripePiece> {
    pieces.sort_by_key(|p| (p.member, p.offset));
    let mut out: Vec<StripePiece> = Vec::with_capacity(pieces.len());
    for p in pieces {
        match out.last_mut() {
            Some(last) if last.member == p.member && last.offset + last.size == p.offset => last.size += p.size,
            _ => out.push(p),
        }
    }
    out
}
