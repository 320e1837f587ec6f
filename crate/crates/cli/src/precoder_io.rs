//! Plain-text precoder files: a header line `N_T K`, then one line per
//! antenna holding `K` interleaved `re im` pairs. Values are written with
//! the shortest representation that parses back to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex;
use smi_core::{CMat64, Precoder64};

use crate::error::CliError;

pub fn format_precoder(p: &Precoder64) -> String {
    let f = p.matrix();
    let mut out = format!("{} {}\n", f.nrows(), f.ncols());
    for r in 0..f.nrows() {
        let row: Vec<String> = (0..f.ncols())
            .map(|c| format!("{:?} {:?}", f[(r, c)].re, f[(r, c)].im))
            .collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    out
}

pub fn parse_precoder(text: &str) -> Result<Precoder64, String> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or("empty precoder file")?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| format!("line 1: bad dimension {t:?}"))
        })
        .collect::<Result<_, _>>()?;
    let [n, k] = dims[..] else {
        return Err("line 1: expected `N_T K`".into());
    };
    let mut f = CMat64::zeros(n, k);
    for r in 0..n {
        let (no, line) = lines
            .next()
            .ok_or_else(|| format!("expected {n} rows, found {r}"))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| format!("line {}: bad number {t:?}", no + 1))
            })
            .collect::<Result<_, _>>()?;
        if vals.len() != 2 * k {
            return Err(format!(
                "line {}: expected {} numbers, found {}",
                no + 1,
                2 * k,
                vals.len()
            ));
        }
        for c in 0..k {
            f[(r, c)] = Complex::new(vals[2 * c], vals[2 * c + 1]);
        }
    }
    if let Some((no, _)) = lines.next() {
        return Err(format!("line {}: trailing data", no + 1));
    }
    Ok(Precoder64::new(f))
}

pub fn read_precoder(path: &Path) -> Result<Precoder64, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_precoder(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let p = Precoder64::scaled_random(5, 3, 0.7, 11);
        let q = parse_precoder(&format_precoder(&p)).unwrap();
        for (a, b) in p.matrix().iter().zip(q.matrix().iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn malformed_files_rejected() {
        assert!(parse_precoder("").is_err());
        assert!(parse_precoder("2 1\n1 0\n").is_err());
        assert!(parse_precoder("1 1\n1 0 3\n").is_err());
        assert!(parse_precoder("1 1\n1 x\n").is_err());
        assert!(parse_precoder("1 1\n1 0\n2 0\n").is_err());
    }
}
