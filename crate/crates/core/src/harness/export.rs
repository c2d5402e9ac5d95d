use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Realization, Scenario, SCHEMA_LINE};
use crate::channel::{EffectiveChannel, TermSource, WaveformTag};
use crate::error::Result;

/// Per-path metadata of an exported channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    /// `direct` or `ris`.
    pub kind: &'static str,
    pub index: usize,
    pub delay: usize,
    pub doppler: f64,
    /// Column of the largest entry in row 0 of the path's `G`, i.e. the
    /// cyclic diagonal `col - row` the path occupies.
    pub offset: usize,
}

#[derive(Debug, Clone)]
pub struct ChannelExport {
    pub channel: EffectiveChannel,
    pub paths: Vec<PathRow>,
}

/// Channel of trial 0 under the first configured SIM mode, in the time
/// domain (`td`) or the configured waveform's domain.
pub fn export_channel(scn: &Scenario, domain: WaveformTag) -> Result<ChannelExport> {
    let mode = scn.config().sim_modes[0];
    let Realization { td, wf, .. } = scn.realize(0, mode)?;
    let channel = if domain == WaveformTag::Td { td } else { wf };
    let mut ris_index = 0;
    let paths = channel
        .terms
        .iter()
        .map(|t| {
            let row = t.g.row(0);
            let offset = (0..row.len())
                .max_by(|&a, &b| row[a].norm().total_cmp(&row[b].norm()))
                .unwrap_or(0);
            let (kind, index) = match t.source {
                TermSource::Direct(i) => ("direct", i),
                TermSource::Ris(_) => {
                    ris_index += 1;
                    ("ris", ris_index - 1)
                }
            };
            PathRow {
                kind,
                index,
                delay: t.delay_taps,
                doppler: t.doppler_norm,
                offset,
            }
        })
        .collect();
    Ok(ChannelExport { channel, paths })
}

/// `|H̄|` as a dense CSV, one matrix row per line.
pub fn write_magnitude_csv<W: Write>(channel: &EffectiveChannel, mut w: W) -> Result<()> {
    writeln!(w, "{SCHEMA_LINE}")?;
    for row in channel.hbar.row_iter() {
        let line: Vec<String> = row.iter().map(|z| format!("{:.6e}", z.norm())).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_path_csv<W: Write>(rows: &[PathRow], mut w: W) -> Result<()> {
    writeln!(w, "{SCHEMA_LINE}")?;
    writeln!(w, "kind,index,delay,doppler,offset")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.kind, r.index, r.delay, r.doppler, r.offset)?;
    }
    Ok(())
}
