use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BalanceMode, ChannelGraph};
use crate::error::{Error, Result};

/// One undirected channel of a snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub src: String,
    pub dst: String,
    pub capacity_sat: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opened_at: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotFormat {
    Csv,
    Json,
}

/// Parses snapshot text. A leading `[` selects JSON, anything else CSV.
pub fn parse_snapshot(text: &str) -> Result<Vec<EdgeRecord>> {
    if text.trim_start().starts_with('[') {
        parse_json(text)
    } else {
        parse_csv(text.as_bytes())
    }
}

fn parse_csv(input: impl Read) -> Result<Vec<EdgeRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    for required in ["src", "dst", "capacity_sat"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::Parse {
                line: 1,
                reason: format!("missing column `{required}`"),
            });
        }
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<EdgeRecord>() {
        match row {
            Ok(r) => out.push(r),
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(Error::Parse {
                    line,
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(out)
}

fn parse_json(text: &str) -> Result<Vec<EdgeRecord>> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line() as u64,
        reason: e.to_string(),
    })
}

/// Reads and builds a graph from a CSV or JSON snapshot file.
pub fn load_snapshot(path: impl AsRef<Path>, mode: BalanceMode) -> Result<ChannelGraph> {
    let text = std::fs::read_to_string(path)?;
    let records = parse_snapshot(&text)?;
    ChannelGraph::from_records(&records, mode)
}

/// Writes the graph's channels as snapshot CSV. Capacities are the funded
/// totals, so loading the output reproduces them.
pub fn write_snapshot(graph: &ChannelGraph, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["src", "dst", "capacity_sat", "opened_at", "lifetime"])?;
    for c in graph.channels() {
        w.write_record([
            graph.name(c.a).to_string(),
            graph.name(c.b).to_string(),
            c.capacity().to_string(),
            c.opened_at.to_string(),
            c.lifetime.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_agree() {
        let csv = "src,dst,capacity_sat\nA,B,1000\nB,C,2000\n";
        let json = r#"[{"src":"A","dst":"B","capacity_sat":1000},{"src":"B","dst":"C","capacity_sat":2000}]"#;
        assert_eq!(parse_snapshot(csv).unwrap(), parse_snapshot(json).unwrap());
    }

    #[test]
    fn optional_columns() {
        let csv = "src,dst,capacity_sat,opened_at,lifetime\nA,B,10,5,900\n";
        let r = &parse_snapshot(csv).unwrap()[0];
        assert_eq!((r.opened_at, r.lifetime), (Some(5), Some(900)));
    }

    #[test]
    fn malformed_row_names_line() {
        let csv = "src,dst,capacity_sat\nA,B,1000\nB,C,lots\n";
        match parse_snapshot(csv) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn round_trip_capacities() {
        let csv = "src,dst,capacity_sat\nA,B,1001\nC,B,7\n";
        let g =
            ChannelGraph::from_records(&parse_snapshot(csv).unwrap(), BalanceMode::Split).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&g, &mut buf).unwrap();
        let back = parse_snapshot(std::str::from_utf8(&buf).unwrap()).unwrap();
        let caps: Vec<u64> = back.iter().map(|r| r.capacity_sat).collect();
        assert_eq!(caps, vec![1001, 7]);
    }
}
