//! CSV emission. Floats are written with 17 significant digits so values
//! round-trip exactly; empty cells mark missing values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::runner::{BoundRow, DistributionRow, ResultRow};

pub trait CsvRecord {
    const HEADER: &'static [&'static str];
    fn write_fields(&self, out: &mut Vec<String>);
}

/// `x` in scientific notation with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

impl CsvRecord for ResultRow {
    const HEADER: &'static [&'static str] = &[
        "scenario_id",
        "t",
        "f_chichi",
        "f_gammagamma",
        "f_chigamma",
        "u_chigamma",
        "cfi_chi",
        "cfi_gamma",
        "ratio_chi",
        "ratio_gamma",
        "tail_population",
    ];

    fn write_fields(&self, out: &mut Vec<String>) {
        out.push(self.scenario_id.clone());
        out.push(format_float(self.t));
        for v in [
            self.f_chichi,
            self.f_gammagamma,
            self.f_chigamma,
            self.u_chigamma,
            self.cfi_chi,
            self.cfi_gamma,
            self.ratio_chi,
            self.ratio_gamma,
        ] {
            out.push(opt(v));
        }
        out.push(format_float(self.tail_population));
    }
}

impl CsvRecord for BoundRow {
    const HEADER: &'static [&'static str] = &[
        "scenario_id",
        "t",
        "m_repetitions",
        "scalar_bound",
        "var_bound_chi",
        "var_bound_gamma",
        "cov_chigamma",
    ];

    fn write_fields(&self, out: &mut Vec<String>) {
        out.push(self.scenario_id.clone());
        out.push(format_float(self.t));
        out.push(self.m_repetitions.to_string());
        for v in [
            self.scalar_bound,
            self.var_bound_chi,
            self.var_bound_gamma,
            self.cov_chigamma,
        ] {
            out.push(opt(v));
        }
    }
}

impl CsvRecord for DistributionRow {
    const HEADER: &'static [&'static str] = &["scenario_id", "t", "x", "p", "dp_chi", "dp_gamma"];

    fn write_fields(&self, out: &mut Vec<String>) {
        out.push(self.scenario_id.clone());
        for v in [self.t, self.x, self.p, self.dp_chi, self.dp_gamma] {
            out.push(format_float(v));
        }
    }
}

/// Header line plus one line per record, `\n`-terminated.
pub fn to_csv<R: CsvRecord>(rows: &[R]) -> String {
    let mut s = R::HEADER.join(",");
    s.push('\n');
    let mut fields = Vec::with_capacity(R::HEADER.len());
    for r in rows {
        fields.clear();
        r.write_fields(&mut fields);
        let _ = writeln!(s, "{}", fields.join(","));
    }
    s
}

/// Writes `rows` to `path`, creating parent directories.
pub fn write_csv<R: CsvRecord>(rows: &[R], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, to_csv(rows))?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    write_csv(rows, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ResultRow {
        ResultRow {
            scenario_id: "s".into(),
            t: 0.1,
            f_chichi: Some(1.0 / 3.0),
            f_gammagamma: None,
            f_chigamma: Some(-2.5e-300),
            u_chigamma: None,
            cfi_chi: None,
            cfi_gamma: None,
            ratio_chi: None,
            ratio_gamma: None,
            tail_population: 0.0,
        }
    }

    #[test]
    fn empty_rows_give_header_only() {
        let s = to_csv::<ResultRow>(&[]);
        assert_eq!(
            s,
            "scenario_id,t,f_chichi,f_gammagamma,f_chigamma,u_chigamma,cfi_chi,cfi_gamma,ratio_chi,ratio_gamma,tail_population\n"
        );
    }

    #[test]
    fn single_row_gives_two_lines() {
        let s = to_csv(&[row()]);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[1],
            "s,1.0000000000000001e-1,3.3333333333333331e-1,,-2.5000000000000000e-300,,,,,,0.0000000000000000e0"
        );
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-310, 6.02214076e23, -0.0] {
            let back: f64 = format_float(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn write_creates_directories() {
        let dir = std::env::temp_dir().join(format!("kerr-out-{}", std::process::id()));
        let path = dir.join("nested").join("r.csv");
        write_csv(&[row()], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), to_csv(&[row()]));
        fs::remove_dir_all(&dir).unwrap();
    }
}
