//! MAC frames, the four-way RTS/CTS/DATA/ACK handshake schedule with
//! propagation-exact arrival intervals, and the fixed worst-case NAV
//! formulas the baseline policy uses.

use std::fmt;
use std::io::{self, Write};

use crate::scenario::{NodeId, ScenarioConfig};
use crate::time::Time;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FrameKind {
    Rts,
    Cts,
    Data,
    Ack,
}

impl FrameKind {
    /// RTS, CTS and ACK are control frames; DATA is the payload frame.
    pub fn is_control(self) -> bool {
        !matches!(self, FrameKind::Data)
    }

    pub fn duration(self, cfg: &ScenarioConfig) -> Time {
        if self.is_control() {
            cfg.control_frame_duration
        } else {
            cfg.data_frame_duration
        }
    }
}

impl fmt::Display for FrameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FrameKind::Rts => "RTS",
            FrameKind::Cts => "CTS",
            FrameKind::Data => "DATA",
            FrameKind::Ack => "ACK",
        };
        f.write_str(s)
    }
}

/// Half-open time interval [start, end). Two frames whose intervals merely
/// touch do not collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub start: Time,
    pub end: Time,
}

impl Interval {
    pub fn new(start: Time, end: Time) -> Interval {
        debug_assert!(start <= end);
        Interval { start, end }
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, t: Time) -> bool {
        self.start <= t && t < self.end
    }

    pub fn len(&self) -> Time {
        self.end - self.start
    }

    pub fn shifted(&self, by: Time) -> Interval {
        Interval::new(self.start + by, self.end + by)
    }
}

/// A frame in flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameKind,
    pub src: NodeId,
    pub dst: NodeId,
    pub tx_start: Time,
    pub tx_end: Time,
}

impl Frame {
    pub fn tx_interval(&self) -> Interval {
        Interval::new(self.tx_start, self.tx_end)
    }
}

/// A frame's arrival window at one listener.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reception {
    pub listener: NodeId,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledFrame {
    pub frame: Frame,
    /// Arrival windows at every node in range of the transmitter, ascending
    /// by listener id. The transmitter itself never appears.
    pub receptions: Vec<Reception>,
}

impl ScheduledFrame {
    pub fn reception_at(&self, listener: NodeId) -> Option<Interval> {
        self.receptions
            .iter()
            .find(|r| r.listener == listener)
            .map(|r| r.interval)
    }
}

/// Timing of one complete handshake between an initiator and the sink, with
/// zero turnaround: each reply starts the instant the previous frame has
/// fully arrived.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeSchedule {
    pub initiator: NodeId,
    /// RTS, CTS, DATA, ACK in handshake order.
    pub frames: Vec<ScheduledFrame>,
    /// When the sink stops transmitting or receiving: the end of its ACK
    /// transmission. Followers must keep their first bit off the sink until
    /// this instant.
    pub channel_busy_end_at_sink: Time,
    /// When the ACK has fully arrived back at the initiator and the exchange
    /// is over everywhere.
    pub complete_at: Time,
}

impl ExchangeSchedule {
    pub fn frame(&self, kind: FrameKind) -> &ScheduledFrame {
        self.frames
            .iter()
            .find(|sf| sf.frame.kind == kind)
            .expect("exchange holds all four frame kinds")
    }

    /// Serializes the schedule as `time,node,action,frame_kind,peer` rows.
    /// For tx rows the peer is the destination; for rx rows it is the
    /// transmitter.
    pub fn write_timeline_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time,node,action,frame_kind,peer")?;
        // (time, node, action rank, kind) gives a total, insertion-free order
        let mut rows: Vec<(Time, NodeId, u8, &'static str, FrameKind, NodeId)> = Vec::new();
        for sf in &self.frames {
            let f = &sf.frame;
            rows.push((f.tx_start, f.src, 2, "tx_start", f.kind, f.dst));
            rows.push((f.tx_end, f.src, 0, "tx_end", f.kind, f.dst));
            for r in &sf.receptions {
                rows.push((r.interval.start, r.listener, 3, "rx_start", f.kind, f.src));
                rows.push((r.interval.end, r.listener, 1, "rx_end", f.kind, f.src));
            }
        }
        rows.sort_by_key(|&(t, node, rank, _, kind, _)| (t, node, rank, kind));
        for (t, node, _, action, kind, peer) in rows {
            writeln!(w, "{t},{node},{action},{kind},{peer}")?;
        }
        Ok(())
    }
}

/// NAV a listener sets after overhearing an RTS, per the fixed worst-case
/// rule: three propagation crossings plus the CTS, DATA and ACK durations.
///
/// Inputs are real-valued seconds; the result is quantized to the
/// millisecond grid once, after the arithmetic.
pub fn baseline_nav_rts(prop_s: f64, cts_s: f64, data_s: f64, ack_s: f64) -> Time {
    Time::from_secs_f64(3.0 * prop_s + cts_s + data_s + ack_s)
}

/// NAV a listener sets after overhearing a CTS: two propagation crossings
/// plus the DATA and ACK durations.
pub fn baseline_nav_cts(prop_s: f64, data_s: f64, ack_s: f64) -> Time {
    Time::from_secs_f64(2.0 * prop_s + data_s + ack_s)
}

/// The (RTS-triggered, CTS-triggered) worst-case NAVs for a scenario, using
/// the maximum propagation delay the deployment allows.
pub fn baseline_navs(cfg: &ScenarioConfig) -> (Time, Time) {
    let prop = cfg.max_range / cfg.sound_speed;
    let ctrl = cfg.control_frame_duration.as_secs_f64();
    let data = cfg.data_frame_duration.as_secs_f64();
    (
        baseline_nav_rts(prop, ctrl, data, ctrl),
        baseline_nav_cts(prop, data, ctrl),
    )
}

/// Builds the four-frame handshake starting at `start`, with arrival windows
/// at every node in range of each transmitter.
pub fn build_exchange(
    initiator: NodeId,
    start: Time,
    cfg: &ScenarioConfig,
) -> Result<ExchangeSchedule> {
    if initiator.is_sink() {
        return Err(Error::InvalidScenario(
            "the sink cannot initiate an exchange with itself".into(),
        ));
    }
    let sink = NodeId::SINK;
    if !cfg.in_range(initiator, sink)? {
        return Err(Error::InvalidScenario(format!(
            "initiator {initiator} lies outside the sink's range"
        )));
    }
    let hop = cfg.delay_between(initiator, sink)?;
    let ctrl = cfg.control_frame_duration;
    let data = cfg.data_frame_duration;

    let rts_tx = start;
    let cts_tx = rts_tx + ctrl + hop; // RTS fully received at the sink
    let data_tx = cts_tx + ctrl + hop; // CTS fully received at the initiator
    let ack_tx = data_tx + data + hop; // DATA fully received at the sink

    let specs = [
        (FrameKind::Rts, initiator, sink, rts_tx, ctrl),
        (FrameKind::Cts, sink, initiator, cts_tx, ctrl),
        (FrameKind::Data, initiator, sink, data_tx, data),
        (FrameKind::Ack, sink, initiator, ack_tx, ctrl),
    ];

    let mut frames = Vec::with_capacity(4);
    for (kind, src, dst, tx_start, duration) in specs {
        let frame = Frame {
            kind,
            src,
            dst,
            tx_start,
            tx_end: tx_start + duration,
        };
        let mut receptions = Vec::new();
        for &listener in cfg.node_positions.keys() {
            if listener == src || !cfg.in_range(src, listener)? {
                continue;
            }
            let delay = cfg.delay_between(src, listener)?;
            receptions.push(Reception {
                listener,
                interval: frame.tx_interval().shifted(delay),
            });
        }
        frames.push(ScheduledFrame { frame, receptions });
    }

    let busy_end = ack_tx + ctrl;
    Ok(ExchangeSchedule {
        initiator,
        frames,
        channel_busy_end_at_sink: busy_end,
        complete_at: busy_end + hop,
    })
}
