//! DIMACS CNF.
//!
//! Variables are 1-based in the file and 0-based in [`CnfFormula`]. A `%`
//! line ends the clause section, as in the SATLIB benchmark files.

use std::fmt::Write as _;

use crate::apps::sat::{CnfFormula, Literal};
use crate::apps::AppError;
use crate::harness::{parse_error, HarnessError};

pub fn parse_dimacs(text: &str) -> Result<CnfFormula, HarnessError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(parse_error(line_no, "second header"));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
                return Err(parse_error(line_no, "expected `p cnf <vars> <clauses>`"));
            }
            let n = fields[2].parse().map_err(|_| parse_error(line_no, "bad variable count"))?;
            let m = fields[3].parse().map_err(|_| parse_error(line_no, "bad clause count"))?;
            header = Some((n, m));
            continue;
        }
        let (n, _) = header.ok_or_else(|| parse_error(line_no, "clause before header"))?;
        for tok in line.split_whitespace() {
            let lit: i64 = tok.parse().map_err(|_| parse_error(line_no, format!("bad literal `{tok}`")))?;
            if lit == 0 {
                if current.is_empty() {
                    return Err(parse_error(line_no, "empty clause"));
                }
                check_clause(&current, clauses.len(), line_no)?;
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            let var = lit.unsigned_abs() as usize;
            if var > n {
                return Err(parse_error(line_no, format!("variable {var} exceeds declared {n}")));
            }
            current.push((var - 1, lit > 0));
        }
    }
    let (n, m) = header.ok_or_else(|| parse_error(last_line, "missing header"))?;
    if !current.is_empty() {
        return Err(parse_error(last_line, "last clause is not terminated by 0"));
    }
    if clauses.len() != m {
        return Err(parse_error(last_line, format!("header declares {m} clauses, found {}", clauses.len())));
    }
    Ok(CnfFormula::new(n, clauses)?)
}

fn check_clause(clause: &[Literal], index: usize, line: usize) -> Result<(), HarnessError> {
    let mut vars: Vec<usize> = clause.iter().map(|l| l.0).collect();
    vars.sort_unstable();
    if vars.windows(2).any(|w| w[0] == w[1]) {
        return Err(HarnessError::App(AppError::RepeatedVariable(index)).with_line(line));
    }
    Ok(())
}

impl HarnessError {
    fn with_line(self, line: usize) -> Self {
        parse_error(line, self.to_string())
    }
}

pub fn write_dimacs(cnf: &CnfFormula) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p cnf {} {}", cnf.num_vars(), cnf.num_clauses());
    for clause in cnf.clauses() {
        for &(x, pos) in clause {
            let lit = x as i64 + 1;
            let _ = write!(out, "{} ", if pos { lit } else { -lit });
        }
        out.push_str("0\n");
    }
    out
}
