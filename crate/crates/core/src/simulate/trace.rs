use std::io::{self, Write};

use super::PacketRecord;

pub const TRACE_HEADER: &str = "ue,seq,gen_time,edge_done,tx_done,local_done,\
wait_edge,wait_tx,wait_local,service_edge,service_tx,service_local";

/// Write records as comma-separated rows under [`TRACE_HEADER`].
///
/// Floats use the shortest representation that parses back to the same
/// value, so a trace reproduces the simulated path exactly.
pub fn write_trace<W: Write>(records: &[PacketRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.ue,
            r.seq,
            r.gen_time,
            r.edge_done,
            r.tx_done,
            r.local_done,
            r.wait_edge,
            r.wait_tx,
            r.wait_local,
            r.service_edge,
            r.service_tx,
            r.service_local
        )?;
    }
    out.flush()
}
