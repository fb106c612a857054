//! OR-Library GAP text format.
//!
//! Whitespace-separated numbers: machine count `M`, job count `J`, the
//! `M × J` cost matrix (one row per machine), the `M × J` resource matrix,
//! then `M` capacities.

use super::gap::GapDualInstance;
use super::Metadata;
use crate::error::{Error, Result};

/// Reference objective values for the type-D instances, attached as
/// metadata only.
pub const KNOWN_OPTIMA: &[(&str, f64)] = &[
    ("d201600", 97821.35),
    ("d401600", 97105.0),
    ("d801600", 97034.0),
];

pub fn known_optimum(name: &str) -> Option<f64> {
    KNOWN_OPTIMA
        .iter()
        .find(|(n, _)| *n == name)
        .map(|&(_, v)| v)
}

struct Tokens<'a> {
    iter: Box<dyn Iterator<Item = (usize, usize, &'a str)> + 'a>,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let iter = text.lines().enumerate().flat_map(|(ln, line)| {
            line.split_whitespace()
                .enumerate()
                .map(move |(pos, tok)| (ln + 1, pos + 1, tok))
        });
        Tokens {
            iter: Box::new(iter),
            last_line: text.lines().count().max(1),
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, usize, &'a str)> {
        self.iter.next().ok_or_else(|| Error::Parse {
            line: self.last_line,
            offset: 0,
            message: format!("unexpected end of input while reading {what}"),
        })
    }

    fn number(&mut self, what: &str) -> Result<f64> {
        let (line, offset, tok) = self.next(what)?;
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::Parse {
                line,
                offset,
                message: format!("expected a number for {what}, found {tok:?}"),
            }),
        }
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let (line, offset, tok) = self.next(what)?;
        match tok.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(Error::Parse {
                line,
                offset,
                message: format!("expected a positive integer for {what}, found {tok:?}"),
            }),
        }
    }
}

/// Parses one instance. `name` selects a bundled reference value.
pub fn parse_gap_orlib(text: &str, name: Option<&str>) -> Result<GapDualInstance> {
    let mut tokens = Tokens::new(text);
    let machines = tokens.count("machine count")?;
    let jobs = tokens.count("job count")?;
    let mut costs = vec![vec![0.0; machines]; jobs];
    let mut times = vec![vec![0.0; machines]; jobs];
    for m in 0..machines {
        for row in costs.iter_mut() {
            row[m] = tokens.number("cost matrix")?;
        }
    }
    for m in 0..machines {
        for row in times.iter_mut() {
            row[m] = tokens.number("resource matrix")?;
        }
    }
    let mut capacities = Vec::with_capacity(machines);
    for _ in 0..machines {
        capacities.push(tokens.number("capacities")?);
    }
    if let Some((line, offset, tok)) = tokens.iter.next() {
        return Err(Error::Parse {
            line,
            offset,
            message: format!("trailing data {tok:?} after capacities"),
        });
    }
    let mut inst = GapDualInstance::new(costs, times, capacities).map_err(|e| Error::Parse {
        line: 0,
        offset: 0,
        message: e.to_string(),
    })?;
    if let Some(name) = name {
        inst.name = Some(name.to_string());
        inst.known_fstar = known_optimum(name);
        inst.metadata = Metadata::new(None, "OR-Library GAP file");
    }
    Ok(inst)
}

/// Writes an instance back in the same layout, one matrix row per line.
pub fn write_gap_orlib(inst: &GapDualInstance) -> String {
    let mut out = format!("{} {}\n", inst.machines, inst.jobs);
    for matrix in [&inst.costs, &inst.times] {
        for m in 0..inst.machines {
            let row: Vec<String> = matrix.iter().map(|r| fmt_num(r[m])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    let caps: Vec<String> = inst.capacities.iter().map(|&c| fmt_num(c)).collect();
    out.push_str(&caps.join(" "));
    out.push('\n');
    out
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let inst = parse_gap_orlib("2 2\n1 2\n3 4\n1 1\n1 1\n2 2\n", None).unwrap();
        assert_eq!(inst.machines, 2);
        assert_eq!(inst.jobs, 2);
        // machine-major on disk, job-major in memory
        assert_eq!(inst.costs, vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
        assert_eq!(inst.capacities, vec![2.0, 2.0]);
        assert_eq!(inst.known_fstar, None);
    }

    #[test]
    fn round_trip() {
        let inst = GapDualInstance::generate(3, 5, 2).unwrap();
        let text = write_gap_orlib(&inst);
        let back = parse_gap_orlib(&text, None).unwrap();
        assert_eq!(back.costs, inst.costs);
        assert_eq!(back.times, inst.times);
        assert_eq!(back.capacities, inst.capacities);
        assert_eq!(write_gap_orlib(&back), text);
    }

    #[test]
    fn named_instance_gets_reference_value() {
        let inst = parse_gap_orlib("1 1 5 2 3", Some("d201600")).unwrap();
        assert_eq!(inst.known_fstar, Some(97821.35));
        assert_eq!(inst.name.as_deref(), Some("d201600"));
    }

    #[test]
    fn truncated_file_reports_position() {
        let err = parse_gap_orlib("2 2\n1 2\n3 4\n1 1\n", None).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 4);
                assert!(message.contains("end of input"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_token_reports_line_and_offset() {
        let err = parse_gap_orlib("2 2\n1 x\n", None).unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 2,
                offset: 2,
                message: "expected a number for cost matrix, found \"x\"".into()
            }
        );
        assert!(matches!(
            parse_gap_orlib("0 3", None),
            Err(Error::Parse {
                line: 1,
                offset: 1,
                ..
            })
        ));
        assert!(matches!(
            parse_gap_orlib("1 1 5 2 3 9", None),
            Err(Error::Parse { offset: 6, .. })
        ));
    }
}
