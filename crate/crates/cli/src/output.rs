//! CSV emission. One fixed column set covers every curve the runner
//! produces; inapplicable columns are left empty. The first line carries the
//! SHA-256 of the configuration for provenance, so byte-identical inputs
//! give byte-identical outputs.

use std::fmt::Write as _;

pub const CSV_HEADER: &str = "J,h,g,dt,bond_cap,T,quantity,n,m,t_l,delta_t,value,flag";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub j: f64,
    pub h: f64,
    pub g: f64,
    pub dt: f64,
    pub bond_cap: usize,
    /// Physical time of the sample.
    pub t: f64,
    pub quantity: String,
    pub n: Option<u32>,
    pub m: Option<u32>,
    pub t_l: Option<usize>,
    pub delta_t: Option<usize>,
    pub value: f64,
    /// True marks an unreliable sample (trace drift or discarded weight
    /// beyond threshold).
    pub flag: bool,
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Row {
    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:.17e},{}",
            self.j,
            self.h,
            self.g,
            self.dt,
            self.bond_cap,
            self.t,
            self.quantity,
            opt(self.n),
            opt(self.m),
            opt(self.t_l),
            opt(self.delta_t),
            self.value,
            self.flag as u8,
        )
    }
}

/// Render a full CSV document: provenance comment, header, rows.
pub fn render_csv(config_sha256: &str, rows: &[Row]) -> String {
    let mut out = String::new();
    writeln!(out, "# config_sha256={config_sha256}").unwrap();
    writeln!(out, "{CSV_HEADER}").unwrap();
    for r in rows {
        writeln!(out, "{}", r.to_csv()).unwrap();
    }
    out
}

/// Parse a CSV document written by [`render_csv`] back into rows, skipping
/// comment lines and the header.
pub fn parse_csv(text: &str) -> Result<Vec<Row>, String> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.is_empty() || line == CSV_HEADER {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(format!("line {}: expected 13 columns, got {}", ln + 1, fields.len()));
        }
        let num = |i: usize| -> Result<f64, String> {
            fields[i]
                .parse()
                .map_err(|_| format!("line {}: bad number \"{}\"", ln + 1, fields[i]))
        };
        let opt_num = |i: usize| -> Result<Option<u32>, String> {
            if fields[i].is_empty() {
                Ok(None)
            } else {
                fields[i]
                    .parse()
                    .map(Some)
                    .map_err(|_| format!("line {}: bad integer \"{}\"", ln + 1, fields[i]))
            }
        };
        rows.push(Row {
            j: num(0)?,
            h: num(1)?,
            g: num(2)?,
            dt: num(3)?,
            bond_cap: num(4)? as usize,
            t: num(5)?,
            quantity: fields[6].to_string(),
            n: opt_num(7)?,
            m: opt_num(8)?,
            t_l: opt_num(9)?.map(|x| x as usize),
            delta_t: opt_num(10)?.map(|x| x as usize),
            value: num(11)?,
            flag: fields[12] == "1",
        });
    }
    Ok(rows)
}
