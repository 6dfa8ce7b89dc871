//! Line-delimited event trace.
//!
//! One record per line, comma separated, fields in this order:
//! `time_ns,event,from,to,kind,size,source,h,depth`. `event` is one of
//! `BCAST`, `SEND`, `RECV`, `DELIVER`. For `BCAST` and `DELIVER`, `from` and
//! `to` are both the acting node, `kind` is `-` and `size` is the payload
//! length.

use std::fmt;

use crate::wire::{NodeId, SeqIndex};

use super::SimTime;

pub const TRACE_HEADER: &str = "time_ns,event,from,to,kind,size,source,h,depth";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    Bcast,
    Send,
    Recv,
    Deliver,
}

impl TraceEvent {
    pub fn name(self) -> &'static str {
        match self {
            TraceEvent::Bcast => "BCAST",
            TraceEvent::Send => "SEND",
            TraceEvent::Recv => "RECV",
            TraceEvent::Deliver => "DELIVER",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub event: TraceEvent,
    pub from: NodeId,
    pub to: NodeId,
    pub kind: &'static str,
    pub size: usize,
    pub source: NodeId,
    pub h: SeqIndex,
    pub depth: u32,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{},{},{}",
            self.time,
            self.event.name(),
            self.from,
            self.to,
            self.kind,
            self.size,
            self.source,
            self.h,
            self.depth
        )
    }
}

/// Renders records with the header line.
pub fn render(records: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 40 + TRACE_HEADER.len() + 1);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}
