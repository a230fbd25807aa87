//! Per-satellite downlink queue.
//!
//! Images leave in transmit order (5, 4, 3, 2, compute, 1) and first in,
//! first out within a tier, where arrival order is the image sequence
//! number. An image that has started transmitting finishes before anything
//! else is considered.

use std::collections::{BTreeMap, BTreeSet};

use orbitprio_core::formula::Tier;
use serde::{Deserialize, Serialize};

/// Position of a tier in transmit order (0 goes first).
pub fn transmit_rank(t: Tier) -> u8 {
    5 - t.index() as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Queued {
    pub seq: u64,
    pub size: u64,
    pub tier: Tier,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InFlight {
    pub item: Queued,
    pub remaining: f64,
}

/// One finished transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Delivered {
    pub seq: u64,
    pub tier: Tier,
    pub started: f64,
    pub finished: f64,
}

/// Outcome of one transmit call.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransmitReport {
    pub delivered: Vec<Delivered>,
    /// Seconds the transmitter was busy.
    pub busy: f64,
    /// Images that started in this call, with the best tier still waiting
    /// at that instant.
    pub starts: Vec<(Queued, Option<Tier>)>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DownlinkQueue {
    order: BTreeSet<(u8, u64)>,
    items: BTreeMap<u64, Queued>,
    bytes: [u64; 6],
    in_flight: Option<InFlight>,
    started_at: f64,
}

impl DownlinkQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, item: Queued) {
        if self.items.insert(item.seq, item).is_some() {
            panic!("sequence {} queued twice", item.seq);
        }
        self.order.insert((transmit_rank(item.tier), item.seq));
        self.bytes[item.tier.index()] += item.size;
    }

    /// Moves a waiting image to `tier`. Returns false when the image is not
    /// waiting (already sent or in flight).
    pub fn retier(&mut self, seq: u64, tier: Tier) -> bool {
        let Some(item) = self.items.get_mut(&seq) else {
            return false;
        };
        self.order.remove(&(transmit_rank(item.tier), seq));
        self.bytes[item.tier.index()] -= item.size;
        item.tier = tier;
        self.order.insert((transmit_rank(tier), seq));
        self.bytes[tier.index()] += item.size;
        true
    }

    pub fn contains(&self, seq: u64) -> bool {
        self.items.contains_key(&seq)
    }

    pub fn tier_of(&self, seq: u64) -> Option<Tier> {
        self.items
            .get(&seq)
            .map(|i| i.tier)
            .or_else(|| self.in_flight.filter(|f| f.item.seq == seq).map(|f| f.item.tier))
    }

    pub fn waiting(&self) -> usize {
        self.items.len()
    }

    pub fn len(&self) -> usize {
        self.items.len() + usize::from(self.in_flight.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn in_flight(&self) -> Option<&InFlight> {
        self.in_flight.as_ref()
    }

    /// Waiting bytes in `tier`, not counting the image in flight.
    pub fn bytes_in(&self, tier: Tier) -> u64 {
        self.bytes[tier.index()]
    }

    /// Best waiting tier.
    pub fn top_tier(&self) -> Option<Tier> {
        self.order.first().map(|&(_, seq)| self.items[&seq].tier)
    }

    /// Tier and bytes deciding contention for a station: the in-flight
    /// image's tier counts since it must finish first.
    pub fn demand(&self) -> Option<(Tier, u64)> {
        let top = self.top_tier();
        let flight = self.in_flight.map(|f| f.item.tier);
        let tier = match (top, flight) {
            (Some(a), Some(b)) => a.max(b),
            (a, b) => a.or(b)?,
        };
        let mut bytes = self.bytes[tier.index()];
        if let Some(f) = self.in_flight.filter(|f| f.item.tier == tier) {
            bytes += f.remaining.ceil() as u64;
        }
        Some((tier, bytes))
    }

    /// Waiting images in transmit order.
    pub fn iter(&self) -> impl Iterator<Item = &Queued> {
        self.order.iter().map(|(_, seq)| &self.items[seq])
    }

    fn pop_next(&mut self) -> Option<Queued> {
        let (_, seq) = self.order.pop_first()?;
        let item = self.items.remove(&seq).expect("ordered item exists");
        self.bytes[item.tier.index()] -= item.size;
        Some(item)
    }

    /// Sends for `duration` seconds from `start` at `bandwidth` bytes/s.
    pub fn transmit(&mut self, start: f64, duration: f64, bandwidth: f64) -> TransmitReport {
        let mut report = TransmitReport::default();
        if bandwidth <= 0.0 || duration <= 0.0 {
            return report;
        }
        let mut now = start;
        let end = start + duration;
        loop {
            if self.in_flight.is_none() {
                let best_left = |q: &Self| q.top_tier();
                let Some(item) = self.pop_next() else { break };
                report.starts.push((item, best_left(self)));
                self.in_flight = Some(InFlight { item, remaining: item.size as f64 });
                self.started_at = now;
            }
            let f = self.in_flight.as_mut().expect("set above");
            let need = f.remaining / bandwidth;
            if now + need <= end + 1e-12 {
                now += need;
                report.delivered.push(Delivered {
                    seq: f.item.seq,
                    tier: f.item.tier,
                    started: self.started_at,
                    finished: now,
                });
                self.in_flight = None;
                if now >= end {
                    break;
                }
            } else {
                f.remaining -= (end - now) * bandwidth;
                now = end;
                break;
            }
        }
        report.busy = now - start;
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(seq: u64, tier: Tier) -> Queued {
        Queued { seq, size: 100, tier }
    }

    #[test]
    fn tier_order_then_fifo() {
        let mut dq = DownlinkQueue::new();
        dq.push(q(0, Tier::P1));
        dq.push(q(1, Tier::Compute));
        dq.push(q(2, Tier::P5));
        dq.push(q(3, Tier::P2));
        dq.push(q(4, Tier::P5));
        let r = dq.transmit(0.0, 10.0, 100.0);
        let seqs: Vec<u64> = r.delivered.iter().map(|d| d.seq).collect();
        assert_eq!(seqs, vec![2, 4, 3, 1, 0]);
        assert!((r.busy - 5.0).abs() < 1e-12);
        assert!((r.delivered[4].finished - 5.0).abs() < 1e-12);
    }

    #[test]
    fn in_flight_is_not_preempted() {
        let mut dq = DownlinkQueue::new();
        dq.push(q(0, Tier::P1));
        let r = dq.transmit(0.0, 0.5, 100.0);
        assert!(r.delivered.is_empty());
        dq.push(q(1, Tier::P5));
        assert_eq!(dq.demand(), Some((Tier::P5, 100)));
        let r = dq.transmit(0.5, 1.0, 100.0);
        assert_eq!(r.delivered[0].seq, 0);
        assert!((r.delivered[0].finished - 1.0).abs() < 1e-12);
        assert_eq!(r.delivered[0].started, 0.0);
    }

    #[test]
    fn retier_moves_bytes() {
        let mut dq = DownlinkQueue::new();
        dq.push(q(7, Tier::P1));
        assert!(dq.retier(7, Tier::P4));
        assert_eq!(dq.bytes_in(Tier::P1), 0);
        assert_eq!(dq.bytes_in(Tier::P4), 100);
        assert_eq!(dq.top_tier(), Some(Tier::P4));
        assert!(!dq.retier(8, Tier::P4));
    }
}
