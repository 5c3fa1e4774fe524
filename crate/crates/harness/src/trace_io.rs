use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use synlik::engine::{ChainTrace, Stage, TraceRecord};
use thiserror::Error;

const FIXED: [&str; 5] = ["iter", "stage", "accepted", "block", "log_lik"];
const SAMPLING_PREFIX: &str = "y_";
const NO_BLOCK: &str = "-";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn parse_err(line: usize, message: impl Into<String>) -> TraceError {
    TraceError::Parse { line, message: message.into() }
}

/// Shortest text that reads back to the same bits; infinities use `inf`/`-inf`.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn write_trace_string(trace: &ChainTrace) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
    header.extend(trace.param_names.iter().cloned());
    header.extend(trace.param_names.iter().map(|n| format!("{SAMPLING_PREFIX}{n}")));
    out.push_str(&header.join("\t"));
    out.push('\n');
    for (i, r) in trace.records.iter().enumerate() {
        let block = r.block.map_or(NO_BLOCK.to_string(), |b| b.to_string());
        write!(out, "{i}\t{}\t{}\t{block}\t{}", r.stage, u8::from(r.accepted), format_f64(r.log_lik)).unwrap();
        for v in r.theta.iter().chain(&r.theta_sampling) {
            out.push('\t');
            out.push_str(&format_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn read_trace_str(text: &str) -> Result<ChainTrace, TraceError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let cols: Vec<&str> = header.split('\t').collect();
    if cols.len() < FIXED.len() || cols[..FIXED.len()] != FIXED {
        return Err(parse_err(1, format!("header must start with {}", FIXED.join(", "))));
    }
    let rest = &cols[FIXED.len()..];
    if rest.len() % 2 != 0 {
        return Err(parse_err(1, "expected matching natural and sampling columns"));
    }
    let d = rest.len() / 2;
    let names: Vec<String> = rest[..d].iter().map(|s| s.to_string()).collect();
    for (n, y) in names.iter().zip(&rest[d..]) {
        if y.strip_prefix(SAMPLING_PREFIX) != Some(n.as_str()) {
            return Err(parse_err(1, format!("column `{y}` should be `{SAMPLING_PREFIX}{n}`")));
        }
    }
    let mut records = Vec::new();
    for (line, text) in lines {
        if text.is_empty() {
            continue;
        }
        let f: Vec<&str> = text.split('\t').collect();
        if f.len() != cols.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", cols.len(), f.len())));
        }
        let num = |j: usize| -> Result<f64, TraceError> {
            f[j].parse::<f64>().map_err(|_| parse_err(line, format!("column `{}`: bad number `{}`", cols[j], f[j])))
        };
        let iter: usize = f[0].parse().map_err(|_| parse_err(line, format!("bad iteration `{}`", f[0])))?;
        if iter != records.len() {
            return Err(parse_err(line, format!("iteration {iter} out of sequence")));
        }
        let stage: Stage = f[1].parse().map_err(|e: synlik::Error| parse_err(line, e.to_string()))?;
        let accepted = match f[2] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(line, format!("accepted must be 0 or 1, got `{other}`"))),
        };
        let block = match f[3] {
            NO_BLOCK => None,
            b => Some(b.parse().map_err(|_| parse_err(line, format!("bad block `{b}`")))?),
        };
        let log_lik = num(4)?;
        let start = FIXED.len();
        let theta = (start..start + d).map(num).collect::<Result<_, _>>()?;
        let theta_sampling = (start + d..start + 2 * d).map(num).collect::<Result<_, _>>()?;
        records.push(TraceRecord { theta, theta_sampling, log_lik, accepted, stage, block });
    }
    Ok(ChainTrace { param_names: names, records })
}

pub fn write_trace(path: &Path, trace: &ChainTrace) -> Result<(), TraceError> {
    fs::write(path, write_trace_string(trace))
        .map_err(|source| TraceError::Io { path: path.display().to_string(), source })
}

pub fn read_trace(path: &Path) -> Result<ChainTrace, TraceError> {
    let text = fs::read_to_string(path).map_err(|source| TraceError::Io { path: path.display().to_string(), source })?;
    read_trace_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(i: usize) -> TraceRecord {
        TraceRecord {
            theta: vec![i as f64 * 0.1 + 1e-17, -(i as f64).sqrt()],
            theta_sampling: vec![(i as f64 + 0.3).ln(), std::f64::consts::PI * i as f64],
            log_lik: if i % 3 == 0 { f64::NEG_INFINITY } else { -1.0 / (i as f64 + 7.0) },
            accepted: i % 2 == 0,
            stage: Stage::ALL[i % 3],
            block: (i % 4 != 0).then_some(i % 5),
        }
    }

    fn trace(n: usize) -> ChainTrace {
        ChainTrace { param_names: vec!["a".into(), "b".into()], records: (0..n).map(record).collect() }
    }

    #[test]
    fn round_trip() {
        let t = trace(25);
        let back = read_trace_str(&write_trace_string(&t)).unwrap();
        assert_eq!(back, t);
        assert!(back.records.iter().zip(&t.records).all(|(a, b)| a.log_lik.to_bits() == b.log_lik.to_bits()));
    }

    #[test]
    fn empty_trace_is_header_only() {
        let text = write_trace_string(&trace(0));
        assert_eq!(text, "iter\tstage\taccepted\tblock\tlog_lik\ta\tb\ty_a\ty_b\n");
        assert_eq!(read_trace_str(&text).unwrap(), trace(0));
    }

    #[test]
    fn neg_infinity_sentinel() {
        let text = write_trace_string(&trace(1));
        assert!(text.lines().nth(1).unwrap().contains("\t-inf\t"));
        assert_eq!(read_trace_str(&text).unwrap().records[0].log_lik, f64::NEG_INFINITY);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let mut text = write_trace_string(&trace(4));
        text = text.replacen("adaptive", "sideways", 1);
        match read_trace_str(&text) {
            Err(TraceError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let short = "iter\tstage\taccepted\tblock\tlog_lik\ta\ty_a\n0\tasl\t1\t-\t-1.0\n";
        assert!(matches!(read_trace_str(short), Err(TraceError::Parse { line: 2, .. })));
        let bad_num = "iter\tstage\taccepted\tblock\tlog_lik\ta\ty_a\n0\tasl\t1\t-\tx\t1\t1\n";
        assert!(matches!(read_trace_str(bad_num), Err(TraceError::Parse { line: 2, .. })));
        assert!(matches!(read_trace_str("x\ty\n"), Err(TraceError::Parse { line: 1, .. })));
        assert!(matches!(read_trace_str(""), Err(TraceError::Parse { line: 1, .. })));
    }

    proptest! {
        #[test]
        fn floats_round_trip_bitwise(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            prop_assert_eq!(format_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
