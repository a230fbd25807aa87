//! Compact wire format for schedules.
//!
//! ```text
//! "ESCH"  version=1
//! table_len-1 : u8          (omitted along with everything below when
//! table       : formulas     the schedule has no slots)
//! slot_count  : u32 LE
//! stream      : items
//! ```
//!
//! The table lists each distinct formula once, in order of first
//! appearance. Slots without a formula refer to a table entry with a zero
//! term count. Each stream item is a table index, optionally followed by the
//! escape byte `0xFF` and a `u16` LE run length. The escape is written when
//! the run is longer than one, when the index itself is 255, or when the
//! next item's index is 255, so that a reader can always tell an escape from
//! the start of the next item by looking at a single byte.

use std::collections::BTreeMap;

use crate::error::CodecError;
use crate::formula::{DnfFormula, FilterId, Term};
use crate::schedule::Schedule;

pub const MAGIC: &[u8; 4] = b"ESCH";
pub const VERSION: u8 = 1;
const ESCAPE: u8 = 0xFF;
pub const MAX_TABLE: usize = 256;

pub fn encode_schedule(schedule: &Schedule) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::with_capacity(16 + schedule.slot_count());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    if schedule.slot_count() == 0 {
        return Ok(out);
    }
    let slot_count = u32::try_from(schedule.slot_count())
        .map_err(|_| CodecError::TooManyEntries(schedule.slot_count()))?;

    // runs of (formula, length) over all slots, gaps included
    let mut spans: Vec<(Option<&DnfFormula>, usize)> = Vec::new();
    let mut cursor = 0;
    for e in schedule.entries() {
        if e.start > cursor {
            spans.push((None, e.start - cursor));
        }
        spans.push((Some(&e.formula), e.len));
        cursor = e.start + e.len;
    }
    if cursor < schedule.slot_count() {
        spans.push((None, schedule.slot_count() - cursor));
    }
    let mut table: Vec<Option<&DnfFormula>> = Vec::new();
    let mut position: BTreeMap<Option<&DnfFormula>, usize> = BTreeMap::new();
    let mut runs: Vec<(usize, usize)> = Vec::with_capacity(spans.len());
    for (key, len) in spans {
        let idx = *position.entry(key).or_insert_with(|| {
            table.push(key);
            table.len() - 1
        });
        runs.push((idx, len));
    }
    if table.len() > MAX_TABLE {
        return Err(CodecError::Capacity(table.len()));
    }

    out.push((table.len() - 1) as u8);
    for f in &table {
        match f {
            Some(f) => f.write_to(&mut out)?,
            None => out.push(0),
        }
    }
    out.extend_from_slice(&slot_count.to_le_bytes());

    // split long runs, then write items
    let mut items: Vec<(u8, u16)> = Vec::with_capacity(runs.len());
    for (idx, mut len) in runs {
        while len > 0 {
            let chunk = len.min(u16::MAX as usize);
            items.push((idx as u8, chunk as u16));
            len -= chunk;
        }
    }
    for (k, &(idx, len)) in items.iter().enumerate() {
        out.push(idx);
        let next_is_escape_like = items.get(k + 1).is_some_and(|&(n, _)| n == ESCAPE);
        if len > 1 || idx == ESCAPE || next_is_escape_like {
            out.push(ESCAPE);
            out.extend_from_slice(&len.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn u8(&mut self) -> Result<u8, CodecError> {
        let b = *self.buf.get(self.pos).ok_or(CodecError::Truncated(self.pos))?;
        self.pos += 1;
        Ok(b)
    }

    fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_le_bytes([self.u8()?, self.u8()?]))
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        let mut b = [0u8; 4];
        for x in &mut b {
            *x = self.u8()?;
        }
        Ok(u32::from_le_bytes(b))
    }

    fn peek(&self) -> Option<u8> {
        self.buf.get(self.pos).copied()
    }

    fn formula(&mut self) -> Result<Option<DnfFormula>, CodecError> {
        let start = self.pos;
        let count = self.u8()?;
        if count == 0 {
            return Ok(None);
        }
        let mut terms = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let term_at = self.pos;
            let priority = self.u8()?;
            let n = self.u8()?;
            let mut ids = Vec::with_capacity(n as usize);
            for _ in 0..n {
                ids.push(FilterId(self.u16()?));
            }
            let term = Term::new(ids, priority)
                .map_err(|source| CodecError::Formula { offset: term_at, source })?;
            terms.push(term);
        }
        DnfFormula::new(terms)
            .map(Some)
            .map_err(|source| CodecError::Formula { offset: start, source })
    }
}

pub fn decode_schedule(bytes: &[u8]) -> Result<Schedule, CodecError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if bytes.len() < 4 {
        return Err(CodecError::Truncated(bytes.len()));
    }
    if &bytes[..4] != MAGIC {
        return Err(CodecError::BadMagic);
    }
    r.pos = 4;
    let version = r.u8()?;
    if version != VERSION {
        return Err(CodecError::UnsupportedVersion(version));
    }
    if r.peek().is_none() {
        return Ok(Schedule::empty(0));
    }
    let table_len = r.u8()? as usize + 1;
    let mut table = Vec::with_capacity(table_len);
    for _ in 0..table_len {
        table.push(r.formula()?);
    }
    let expected = r.u32()? as usize;
    let mut slots: Vec<Option<DnfFormula>> = Vec::with_capacity(expected.min(1 << 24));
    while slots.len() < expected {
        let at = r.pos;
        let idx = r.u8()?;
        let formula = table.get(idx as usize).ok_or(CodecError::BadIndex {
            offset: at,
            index: idx,
            table: table_len,
        })?;
        let run = if r.peek() == Some(ESCAPE) {
            r.pos += 1;
            let len_at = r.pos;
            let len = r.u16()?;
            if len == 0 {
                return Err(CodecError::ZeroRun(len_at));
            }
            len as usize
        } else {
            1
        };
        if slots.len() + run > expected {
            return Err(CodecError::CountMismatch { expected, actual: slots.len() + run });
        }
        slots.extend(std::iter::repeat(formula.clone()).take(run));
    }
    if r.pos != bytes.len() {
        return Err(CodecError::TrailingBytes(bytes.len() - r.pos));
    }
    Ok(Schedule::from_slots(slots))
}

/// Inline size divided by encoded size.
pub fn compression_ratio(schedule: &Schedule) -> Result<f64, CodecError> {
    let encoded = encode_schedule(schedule)?.len();
    Ok(schedule.naive_size() as f64 / encoded as f64)
}
