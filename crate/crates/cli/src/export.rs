//! CSV output. Floats are written with `f64`'s `Debug` form: the shortest
//! decimal that parses back to the same bits, switching to exponent notation
//! for very large or small magnitudes. `parse(export(x)) == x` exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use eternal_profile::integrator::ProfileSolution;
use eternal_profile::phasespace::PhasePortrait;

pub const PROFILE_HEADER: &str = "xi,F,Fprime,f,fprime";
pub const PHASE_HEADER: &str = "eta,X,Y,Z,W";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x:?}"))
}

/// Render a profile as CSV text.
pub fn profile_csv(sol: &ProfileSolution) -> String {
    let p = &sol.params;
    let mut s = String::with_capacity(64 * (sol.len() + 8));
    let _ = writeln!(s, "# m={:?}", p.m);
    let _ = writeln!(s, "# q={:?}", p.q);
    let _ = writeln!(s, "# N={}", p.n);
    let _ = writeln!(s, "# beta={:?}", sol.exps.beta);
    let _ = writeln!(s, "# xi0={}", opt(sol.xi0));
    let _ = writeln!(s, "# classification={}", sol.classification);
    s.push_str(PROFILE_HEADER);
    s.push('\n');
    for i in 0..sol.len() {
        let _ = writeln!(
            s,
            "{:?},{:?},{:?},{:?},{:?}",
            sol.grid[i],
            sol.fm[i],
            sol.dfm[i],
            sol.f(i),
            sol.fprime(i)
        );
    }
    s
}

pub fn export_profile_csv(sol: &ProfileSolution, path: &Path) -> io::Result<()> {
    std::fs::write(path, profile_csv(sol))
}

pub fn phase_csv(portrait: &PhasePortrait) -> String {
    let p = &portrait.params;
    let mut s = String::new();
    let _ = writeln!(s, "# m={:?}", p.m);
    let _ = writeln!(s, "# q={:?}", p.q);
    let _ = writeln!(s, "# N={}", p.n);
    let _ = writeln!(s, "# beta={:?}", portrait.exps.beta);
    s.push_str(PHASE_HEADER);
    s.push('\n');
    for i in 0..portrait.len() {
        let _ = writeln!(
            s,
            "{:?},{:?},{:?},{:?},{:?}",
            portrait.eta_values[i],
            portrait.x_values[i],
            portrait.y_values[i],
            portrait.z_values[i],
            portrait.w_values[i]
        );
    }
    s
}

/// A CSV file read back: `#` preamble as key/value pairs, then the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub meta: BTreeMap<String, String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("csv line {line}: {msg}")]
pub struct CsvError {
    pub line: usize,
    pub msg: String,
}

pub fn parse_csv(text: &str) -> Result<CsvTable, CsvError> {
    let mut meta = BTreeMap::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let ln = idx + 1;
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        match &header {
            None => header = Some(line.split(',').map(|h| h.to_string()).collect()),
            Some(h) => {
                let row: Result<Vec<f64>, _> = line.split(',').map(|c| c.parse::<f64>()).collect();
                let row = row.map_err(|e| CsvError {
                    line: ln,
                    msg: e.to_string(),
                })?;
                if row.len() != h.len() {
                    return Err(CsvError {
                        line: ln,
                        msg: format!("expected {} fields, found {}", h.len(), row.len()),
                    });
                }
                rows.push(row);
            }
        }
    }
    Ok(CsvTable {
        meta,
        header: header.ok_or(CsvError {
            line: 0,
            msg: "no header".into(),
        })?,
        rows,
    })
}
