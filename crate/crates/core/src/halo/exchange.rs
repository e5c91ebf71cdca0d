//! Counted blocking and non-blocking ghost exchange, plus the scalar
//! reductions built on the same transport.

use super::schedule::{CommSchedule, FieldShape};
use super::transport::Transport;
use crate::error::{Result, SaleError};
use crate::grid::Field;

/// High tag bit reserved for collectives so they never collide with halo tags.
const COLLECTIVE_TAG: u64 = 1 << 63;

/// Exchange accounting for one rank.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExchangeStats {
    /// Completed communication calls: halo rounds plus reductions.
    pub calls: u64,
    pub halo_rounds: u64,
    pub reductions: u64,
    /// Messages, elements and bytes sent, indexed by [`super::NeighborClass::index`].
    pub messages: [u64; 3],
    pub elements: [u64; 3],
    pub bytes: [u64; 3],
}

impl ExchangeStats {
    pub fn since(&self, earlier: &ExchangeStats) -> ExchangeStats {
        ExchangeStats {
            calls: self.calls - earlier.calls,
            halo_rounds: self.halo_rounds - earlier.halo_rounds,
            reductions: self.reductions - earlier.reductions,
            messages: std::array::from_fn(|c| self.messages[c] - earlier.messages[c]),
            elements: std::array::from_fn(|c| self.elements[c] - earlier.elements[c]),
            bytes: std::array::from_fn(|c| self.bytes[c] - earlier.bytes[c]),
        }
    }
}

/// A rank's transport together with its exchange counters.
pub struct Communicator {
    transport: Box<dyn Transport>,
    stats: ExchangeStats,
    collective_seq: u64,
}

impl Communicator {
    pub fn new(transport: Box<dyn Transport>) -> Self {
        Self { transport, stats: ExchangeStats::default(), collective_seq: 0 }
    }

    pub fn rank(&self) -> usize {
        self.transport.rank()
    }

    pub fn size(&self) -> usize {
        self.transport.size()
    }

    pub fn stats(&self) -> ExchangeStats {
        self.stats
    }

    pub fn transport_mut(&mut self) -> &mut dyn Transport {
        self.transport.as_mut()
    }

    /// Every rank's `values`, in rank order. Counted as one call.
    pub fn all_gather(&mut self, values: &[f64]) -> Result<Vec<Vec<f64>>> {
        let tag = COLLECTIVE_TAG | self.collective_seq;
        self.collective_seq += 1;
        let me = self.rank();
        let size = self.size();
        for dest in (0..size).filter(|d| *d != me) {
            self.transport.send(dest, tag, values.to_vec())?;
        }
        let mut out = Vec::with_capacity(size);
        for src in 0..size {
            if src == me {
                out.push(values.to_vec());
            } else {
                out.push(self.transport.recv(src, tag)?);
            }
        }
        self.stats.calls += 1;
        self.stats.reductions += 1;
        Ok(out)
    }

    /// Global minimum, folded in rank order.
    pub fn all_min(&mut self, value: f64) -> Result<f64> {
        let all = self.all_gather(&[value])?;
        Ok(all.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min))
    }

    pub fn all_max(&mut self, value: f64) -> Result<f64> {
        let all = self.all_gather(&[value])?;
        Ok(all.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Token for an in-flight non-blocking exchange.
#[derive(Debug)]
pub struct ExchangeHandle {
    field_tag: u32,
    sequence: u32,
    open: bool,
}

impl ExchangeHandle {
    pub fn is_open(&self) -> bool {
        self.open
    }
}

fn message_tag(field_tag: u32, sequence: u32) -> u64 {
    ((field_tag as u64) << 32) | sequence as u64
}

fn check_shape(field: &Field, schedule: &CommSchedule) -> Result<()> {
    if FieldShape::of(field) != schedule.shape {
        return Err(SaleError::Contract(format!(
            "schedule built for {:?} used on field {:?}",
            schedule.shape,
            FieldShape::of(field)
        )));
    }
    Ok(())
}

/// Start a non-blocking exchange. Boundary strips are copied into send
/// buffers now, so later writes to the interior do not affect what the
/// neighbors receive.
pub fn exchange_start(
    field: &mut Field,
    schedule: &CommSchedule,
    comm: &mut Communicator,
) -> Result<ExchangeHandle> {
    check_shape(field, schedule)?;
    if field.pending {
        return Err(SaleError::Contract(format!(
            "field {} already has an exchange in flight",
            field.tag()
        )));
    }
    let sequence = field.sequence;
    let tag = message_tag(field.tag(), sequence);
    let plane = field.plane();
    let comps = field.components();
    for m in &schedule.messages {
        let mut buf = Vec::with_capacity(m.send.count() * comps);
        let data = field.data();
        for c in 0..comps {
            m.send.for_each(|i, j, k| buf.push(data[c * plane + field.offset(i, j, k)]));
        }
        let n = buf.len() as u64;
        comm.transport.send(m.rank, tag, buf)?;
        let cls = m.class.index();
        comm.stats.messages[cls] += 1;
        comm.stats.elements[cls] += n;
        comm.stats.bytes[cls] += 8 * n;
    }
    field.pending = true;
    field.sequence = field.sequence.wrapping_add(1);
    Ok(ExchangeHandle { field_tag: field.tag(), sequence, open: true })
}

/// Complete a non-blocking exchange: receive every neighbor's strip into the
/// ghost frame.
pub fn exchange_finish(
    handle: &mut ExchangeHandle,
    field: &mut Field,
    schedule: &CommSchedule,
    comm: &mut Communicator,
) -> Result<()> {
    if !handle.open {
        return Err(SaleError::Contract("exchange handle already finished".into()));
    }
    if handle.field_tag != field.tag() || !field.pending {
        return Err(SaleError::Contract(format!(
            "handle for field {} finished on field {}",
            handle.field_tag,
            field.tag()
        )));
    }
    check_shape(field, schedule)?;
    let tag = message_tag(handle.field_tag, handle.sequence);
    let plane = field.plane();
    let comps = field.components();
    for m in &schedule.messages {
        let buf = comm.transport.recv(m.rank, tag)?;
        let expect = m.recv.count() * comps;
        if buf.len() != expect {
            return Err(SaleError::Transport {
                neighbor: m.rank,
                reason: format!("expected {expect} values, got {}", buf.len()),
            });
        }
        let mut it = buf.into_iter();
        for c in 0..comps {
            let base = c * plane;
            m.recv.for_each(|i, j, k| {
                let at = base + field.offset(i, j, k);
                field.data_mut()[at] = it.next().expect("length checked");
            });
        }
    }
    handle.open = false;
    field.pending = false;
    field.exchanges += 1;
    comm.stats.calls += 1;
    comm.stats.halo_rounds += 1;
    Ok(())
}

/// Exchange and wait.
pub fn exchange_blocking(
    field: &mut Field,
    schedule: &CommSchedule,
    comm: &mut Communicator,
) -> Result<()> {
    let mut h = exchange_start(field, schedule, comm)?;
    exchange_finish(&mut h, field, schedule, comm)
}

/// Bytes per class as `[face, edge, corner]` for one exchange of a field
/// with `components` entries per element.
pub fn class_bytes(schedule: &CommSchedule, components: usize) -> [u64; 3] {
    let mut out = [0u64; 3];
    for m in &schedule.messages {
        out[m.class.index()] += 8 * (m.elements() * components) as u64;
    }
    out
}

