//! Flat-text Q-table snapshots.
//!
//! ```text
//! # dtr-qtable v1 config_hash=<hex> seed=<u64>
//! day_index,action_index,q_value
//! 1,0,120.5
//! ...
//! ```
//!
//! Values are written with Rust's shortest round-trip formatting, so a
//! save/load cycle is lossless. The `V` mirror is not stored; on load it is
//! rebuilt from the keep column.

use std::io::{BufRead, Write};

use super::{Action, ValueTable, MAX_DAYS};
use crate::error::{Error, Result};

const MAGIC: &str = "# dtr-qtable v1";
const COLUMNS: &str = "day_index,action_index,q_value";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnapshotHeader {
    pub config_hash: String,
    pub seed: u64,
}

pub fn write_snapshot<W: Write>(
    table: &ValueTable,
    header: &SnapshotHeader,
    mut out: W,
) -> Result<()> {
    writeln!(
        out,
        "{MAGIC} config_hash={} seed={}",
        header.config_hash, header.seed
    )?;
    writeln!(out, "{COLUMNS}")?;
    for (day, row) in table.rows() {
        for action in Action::ALL {
            writeln!(out, "{day},{},{}", action.index(), row[action.index()])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot<R: BufRead>(input: R) -> Result<(ValueTable, SnapshotHeader)> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Snapshot("empty snapshot".into()))?;
    let header = parse_header(&first)?;
    match lines.next().transpose()? {
        Some(l) if l.trim() == COLUMNS => {}
        other => {
            return Err(Error::Snapshot(format!(
                "expected column line {COLUMNS:?}, got {other:?}"
            )))
        }
    }

    let mut q: Vec<[Option<f64>; 3]> = vec![[None; 3]; MAX_DAYS];
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 3;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Snapshot(format!("line {lineno}: {msg}"));
        let mut fields = line.split(',');
        let (Some(d), Some(a), Some(v), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(bad("expected three fields"));
        };
        let day: usize = d.trim().parse().map_err(|_| bad("bad day index"))?;
        let action: usize = a.trim().parse().map_err(|_| bad("bad action index"))?;
        let value: f64 = v.trim().parse().map_err(|_| bad("bad q value"))?;
        if !(1..=MAX_DAYS).contains(&day) || action > 2 {
            return Err(bad("index out of range"));
        }
        if !value.is_finite() {
            return Err(bad("non-finite q value"));
        }
        let slot = &mut q[day - 1][action];
        if slot.is_some() {
            return Err(bad("duplicate entry"));
        }
        *slot = Some(value);
    }

    let rows = q
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let mut out = [0.0; 3];
            for (a, v) in row.into_iter().enumerate() {
                out[a] = v.ok_or_else(|| {
                    Error::Snapshot(format!("missing entry for day {}, action {a}", i + 1))
                })?;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((ValueTable::from_q(rows)?, header))
}

fn parse_header(line: &str) -> Result<SnapshotHeader> {
    let rest = line
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::Snapshot(format!("not a q-table snapshot: {line:?}")))?;
    let mut config_hash = None;
    let mut seed = None;
    for token in rest.split_whitespace() {
        match token.split_once('=') {
            Some(("config_hash", v)) => config_hash = Some(v.to_string()),
            Some(("seed", v)) => {
                seed = Some(
                    v.parse()
                        .map_err(|_| Error::Snapshot(format!("bad seed {v:?}")))?,
                );
            }
            _ => {}
        }
    }
    match (config_hash, seed) {
        (Some(config_hash), Some(seed)) => Ok(SnapshotHeader { config_hash, seed }),
        _ => Err(Error::Snapshot("header lacks config_hash or seed".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::init_state_values;

    fn header() -> SnapshotHeader {
        SnapshotHeader {
            config_hash: "abc123".into(),
            seed: 42,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let mut table = init_state_values(367706.0, &[11354.0, 11472.0, 11513.0]).unwrap();
        table.set_q(2, Action::Decrease, 0.1 + 0.2);
        table.set_q(31, Action::Increase, -1.0e-300);
        let mut buf = Vec::new();
        write_snapshot(&table, &header(), &mut buf).unwrap();
        let (back, h) = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(h, header());
        for (day, row) in table.rows() {
            assert_eq!(back.q_row(day), row);
            assert_eq!(back.v(day), row[Action::Keep.index()]);
        }
    }

    #[test]
    fn rejects_broken_files() {
        let mut buf = Vec::new();
        write_snapshot(&ValueTable::zeros(), &header(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();

        let truncated: String = text.lines().take(40).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            read_snapshot(truncated.as_bytes()),
            Err(Error::Snapshot(_))
        ));

        let dup = format!("{text}1,0,5\n");
        assert!(matches!(
            read_snapshot(dup.as_bytes()),
            Err(Error::Snapshot(_))
        ));

        let no_magic = text.replacen(MAGIC, "# something else", 1);
        assert!(read_snapshot(no_magic.as_bytes()).is_err());

        let nan = text.replacen("\n1,0,0\n", "\n1,0,NaN\n", 1);
        assert!(read_snapshot(nan.as_bytes()).is_err());
    }
}
