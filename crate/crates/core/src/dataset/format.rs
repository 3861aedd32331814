//! One JSON object per line, fields in a fixed order:
//!
//! ```text
//! {"id":"…","space":"oon/nb101","v":5,"ops":["input",…,"output"],"adj":[[dst,src],…],"perf":0.91432000000000002}
//! {"id":"…","space":"ooe/nb201","v":4,"edges":[[src,dst,slot,"op"],…],"perf":0.73119999999999996}
//! ```

use std::collections::HashMap;
use std::fmt::Write;
use std::sync::Arc;

use serde::Deserialize;

use super::{Dataset, EvalRecord};
use crate::archspace::{ArchDag, Edge, SpaceKind, SpaceSpec};
use crate::error::{Error, Result};

/// `%.17g`: seventeen significant digits, trailing zeros dropped, exact on
/// re-parse.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let s = format!("{:.16e}", x.abs());
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    let sign = if x < 0.0 { "-" } else { "" };
    if !(-4..17).contains(&exp) {
        let (first, rest) = digits.split_at(1);
        let dot = if rest.is_empty() { "" } else { "." };
        return format!("{sign}{first}{dot}{rest}e{exp}");
    }
    if exp < 0 {
        return format!("{sign}0.{}{digits}", "0".repeat((-exp - 1) as usize));
    }
    let int_len = exp as usize + 1;
    if digits.len() <= int_len {
        format!("{sign}{digits}{}", "0".repeat(int_len - digits.len()))
    } else {
        format!("{sign}{}.{}", &digits[..int_len], &digits[int_len..])
    }
}

fn quoted(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

pub fn record_line(r: &EvalRecord) -> String {
    let a = &r.arch;
    let space = a.space();
    let mut line = format!(
        "{{\"id\":{},\"space\":{},\"v\":{}",
        quoted(&r.id),
        quoted(&space.id),
        a.num_nodes()
    );
    match space.kind {
        SpaceKind::Oon => {
            let ops: Vec<String> = a
                .node_ops()
                .iter()
                .map(|&o| quoted(&space.op_vocab[o]))
                .collect();
            let adj: Vec<String> = a
                .adjacency_pairs()
                .iter()
                .map(|(d, s)| format!("[{d},{s}]"))
                .collect();
            write!(
                line,
                ",\"ops\":[{}],\"adj\":[{}]",
                ops.join(","),
                adj.join(",")
            )
            .unwrap();
        }
        SpaceKind::Ooe => {
            let edges: Vec<String> = a
                .edges()
                .iter()
                .map(|e| {
                    format!(
                        "[{},{},{},{}]",
                        e.src,
                        e.dst,
                        e.slot,
                        quoted(&space.op_vocab[e.op])
                    )
                })
                .collect();
            write!(line, ",\"edges\":[{}]", edges.join(",")).unwrap();
        }
    }
    write!(line, ",\"perf\":{}}}", format_float(r.perf)).unwrap();
    line
}

pub fn to_jsonl(ds: &Dataset) -> String {
    ds.records().iter().map(|r| record_line(r) + "\n").collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    id: String,
    space: String,
    v: usize,
    ops: Option<Vec<String>>,
    adj: Option<Vec<(usize, usize)>>,
    edges: Option<Vec<(usize, usize, usize, String)>>,
    perf: f64,
}

fn build(l: &Line, space: Arc<SpaceSpec>) -> Result<ArchDag> {
    match (space.kind, &l.ops, &l.adj, &l.edges) {
        (SpaceKind::Oon, Some(ops), Some(adj), None) => {
            if ops.len() != l.v {
                return Err(Error::InvalidArch(format!(
                    "{} ops for {} nodes",
                    ops.len(),
                    l.v
                )));
            }
            let ops: Vec<&str> = ops.iter().map(String::as_str).collect();
            let pairs: Vec<(usize, usize)> = adj.iter().map(|&(d, s)| (s, d)).collect();
            ArchDag::oon_named(space, &ops, &pairs)
        }
        (SpaceKind::Ooe, None, None, Some(edges)) => {
            let edges = edges
                .iter()
                .map(|(src, dst, slot, op)| {
                    let op = space
                        .op_index(op)
                        .ok_or_else(|| Error::InvalidArch(format!("unknown op `{op}`")))?;
                    Ok(Edge {
                        dst: *dst,
                        slot: *slot,
                        src: *src,
                        op,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ArchDag::ooe(space, l.v, edges)
        }
        (SpaceKind::Oon, ..) => Err(Error::InvalidArch(
            "OON records need `ops` and `adj` only".into(),
        )),
        (SpaceKind::Ooe, ..) => Err(Error::InvalidArch("OOE records need `edges` only".into())),
    }
}

/// Parses line records; blank lines are skipped.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut spaces: HashMap<String, Arc<SpaceSpec>> = HashMap::new();
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let l: Line = serde_json::from_str(raw).map_err(|e| Error::Parse {
            line: n,
            msg: e.to_string(),
        })?;
        let rec_err = |msg: String| Error::Record {
            line: n,
            id: l.id.clone(),
            msg,
        };
        let space = match spaces.get(&l.space) {
            Some(s) => s.clone(),
            None => {
                let s = SpaceSpec::by_id(&l.space).map_err(|e| rec_err(e.to_string()))?;
                spaces.insert(l.space.clone(), s.clone());
                s
            }
        };
        let arch = build(&l, space).map_err(|e| rec_err(e.to_string()))?;
        records.push(EvalRecord {
            id: l.id,
            arch,
            perf: l.perf,
        });
        lines.push(n);
    }
    Dataset::new(records).map_err(|e| match e {
        // report the file line, not the record index
        Error::Record { line, id, msg } => Error::Record {
            line: lines[line - 1],
            id,
            msg,
        },
        e => e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_float(0.91432), "0.91432000000000002");
        assert_eq!(format_float(0.5), "0.5");
        assert_eq!(format_float(1.0), "1");
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(123.25), "123.25");
        assert_eq!(format_float(1e-7), "9.9999999999999995e-8");
        assert_eq!(format_float(-0.001), "-0.001");
        assert_eq!(format_float(1e20), "1e20");
        assert_eq!(format_float(f64::NAN), "NaN");
        for x in [0.1, 0.7312, 1.0 / 3.0, 2.5e-300, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn oon_line_layout() {
        let space = SpaceSpec::by_id("oon/nb101").unwrap();
        let arch =
            ArchDag::oon_named(space, &["input", "conv3x3", "output"], &[(0, 1), (1, 2)]).unwrap();
        let r = EvalRecord {
            id: "x".into(),
            arch,
            perf: 0.25,
        };
        assert_eq!(
            record_line(&r),
            r#"{"id":"x","space":"oon/nb101","v":3,"ops":["input","conv3x3","output"],"adj":[[1,0],[2,1]],"perf":0.25}"#
        );
    }
}
