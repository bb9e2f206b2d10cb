//! Line-oriented QUBO text format.
//!
//! ```text
//! p qubo <num_vars>
//! # timespan <T>
//! # operations <count>
//! # formulation penalties|rewards
//! # gap <ΔE>
//! # reference <energy>
//! # marker 0|1
//! # discrimination <K> <epsilon> <m_final>
//! # field <makespan> <h>
//! # var <id> op <i> t <t>
//! o <offset>
//! v <id> <coeff>
//! e <id1> <id2> <coeff>
//! ```
//!
//! Operation numbers `i` are 1-based. Coefficients are integers or `a/b`
//! rationals. Unrecognised comment lines are ignored by the parser.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use num_traits::Zero;
use thiserror::Error;

use super::{Coeff, Discrimination, Formulation, QuboProblem, VarMap};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("missing 'p qubo' header")]
    MissingHeader,
    #[error("missing '# {0}' metadata")]
    MissingMeta(&'static str),
    #[error("variable {0} has no '# var' entry")]
    UnmappedVar(usize),
}

impl QuboProblem {
    /// Serializes to the text format; `extra` lines are written as comments.
    pub fn to_text(&self, extra: &[String]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "p qubo {}", self.num_vars());
        let _ = writeln!(s, "# timespan {}", self.timespan);
        let _ = writeln!(s, "# operations {}", self.num_ops);
        let _ = writeln!(s, "# formulation {}", self.formulation);
        let _ = writeln!(s, "# gap {}", self.gap);
        let _ = writeln!(s, "# reference {}", self.reference);
        let _ = writeln!(s, "# marker {}", u8::from(self.infeasible_marker));
        if let Some(d) = &self.discrimination {
            let _ = writeln!(s, "# discrimination {} {} {}", d.k, d.epsilon, d.m_final);
            for (m, h) in &d.fields {
                let _ = writeln!(s, "# field {m} {h}");
            }
        }
        for (v, &(op, t)) in self.var_map.entries().iter().enumerate() {
            let _ = writeln!(s, "# var {v} op {} t {t}", op + 1);
        }
        for line in extra {
            let _ = writeln!(s, "# {line}");
        }
        let _ = writeln!(s, "o {}", self.offset);
        for (v, c) in self.linear.iter().enumerate() {
            if !c.is_zero() {
                let _ = writeln!(s, "v {v} {c}");
            }
        }
        for (&(u, v), c) in &self.quadratic {
            let _ = writeln!(s, "e {u} {v} {c}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<QuboProblem, ParseError> {
        let mut num_vars = None;
        let mut timespan = None;
        let mut num_ops = None;
        let mut formulation = Formulation::Penalties;
        let mut gap = None;
        let mut reference = Coeff::zero();
        let mut marker = false;
        let mut disc: Option<Discrimination> = None;
        let mut vars: BTreeMap<usize, (usize, u32)> = BTreeMap::new();
        let mut offset = Coeff::zero();
        let mut linear: BTreeMap<usize, Coeff> = BTreeMap::new();
        let mut quadratic = BTreeMap::new();

        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let err = |msg: &str| ParseError::Line {
                line,
                msg: msg.to_string(),
            };
            let toks: Vec<&str> = raw.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            match toks[0] {
                "p" => {
                    if toks.len() != 3 || toks[1] != "qubo" {
                        return Err(err("expected 'p qubo <n>'"));
                    }
                    num_vars = Some(parse::<usize>(toks[2]).ok_or_else(|| err("bad count"))?);
                }
                "#" if toks.len() >= 2 => match (toks[1], toks.len()) {
                    ("timespan", 3) => timespan = Some(parse(toks[2]).ok_or_else(|| err("bad T"))?),
                    ("operations", 3) => {
                        num_ops = Some(parse(toks[2]).ok_or_else(|| err("bad count"))?)
                    }
                    ("formulation", 3) => {
                        formulation = toks[2].parse().map_err(|e: String| err(&e))?
                    }
                    ("gap", 3) => gap = Some(coeff(toks[2]).ok_or_else(|| err("bad gap"))?),
                    ("reference", 3) => {
                        reference = coeff(toks[2]).ok_or_else(|| err("bad reference"))?
                    }
                    ("marker", 3) => marker = toks[2] == "1",
                    ("discrimination", 5) => {
                        disc = Some(Discrimination {
                            k: parse(toks[2]).ok_or_else(|| err("bad K"))?,
                            epsilon: coeff(toks[3]).ok_or_else(|| err("bad epsilon"))?,
                            m_final: parse(toks[4]).ok_or_else(|| err("bad m_final"))?,
                            fields: Vec::new(),
                        })
                    }
                    ("field", 4) => {
                        let d = disc.as_mut().ok_or_else(|| err("field before discrimination"))?;
                        d.fields.push((
                            parse(toks[2]).ok_or_else(|| err("bad makespan"))?,
                            coeff(toks[3]).ok_or_else(|| err("bad field"))?,
                        ));
                    }
                    ("var", 7) if toks[3] == "op" && toks[5] == "t" => {
                        let v: usize = parse(toks[2]).ok_or_else(|| err("bad var id"))?;
                        let op: usize = parse(toks[4]).ok_or_else(|| err("bad op"))?;
                        if op == 0 {
                            return Err(err("operation numbers are 1-based"));
                        }
                        let t: u32 = parse(toks[6]).ok_or_else(|| err("bad time"))?;
                        vars.insert(v, (op - 1, t));
                    }
                    _ => {}
                },
                "#" => {}
                "o" if toks.len() == 2 => offset = coeff(toks[1]).ok_or_else(|| err("bad offset"))?,
                "v" if toks.len() == 3 => {
                    let v = parse(toks[1]).ok_or_else(|| err("bad var id"))?;
                    linear.insert(v, coeff(toks[2]).ok_or_else(|| err("bad coefficient"))?);
                }
                "e" if toks.len() == 4 => {
                    let u: usize = parse(toks[1]).ok_or_else(|| err("bad var id"))?;
                    let v: usize = parse(toks[2]).ok_or_else(|| err("bad var id"))?;
                    if u == v {
                        return Err(err("quadratic term needs distinct endpoints"));
                    }
                    let c = coeff(toks[3]).ok_or_else(|| err("bad coefficient"))?;
                    *quadratic
                        .entry((u.min(v), u.max(v)))
                        .or_insert_with(Coeff::zero) += c;
                }
                _ => return Err(err("unrecognised line")),
            }
        }

        let n = num_vars.ok_or(ParseError::MissingHeader)?;
        let mut entries = Vec::with_capacity(n);
        for v in 0..n {
            entries.push(*vars.get(&v).ok_or(ParseError::UnmappedVar(v))?);
        }
        let mut dense = vec![Coeff::zero(); n];
        for (v, c) in linear {
            if v >= n {
                return Err(ParseError::UnmappedVar(v));
            }
            dense[v] = c;
        }
        if let Some(&(_, v)) = quadratic.keys().next_back() {
            if v >= n {
                return Err(ParseError::UnmappedVar(v));
            }
        }
        Ok(QuboProblem {
            timespan: timespan.ok_or(ParseError::MissingMeta("timespan"))?,
            num_ops: num_ops.ok_or(ParseError::MissingMeta("operations"))?,
            linear: dense,
            quadratic,
            offset,
            var_map: VarMap::from_entries(entries),
            gap: gap.ok_or(ParseError::MissingMeta("gap"))?,
            reference,
            formulation,
            discrimination: disc,
            infeasible_marker: marker,
        })
    }
}

fn parse<T: FromStr>(tok: &str) -> Option<T> {
    tok.parse().ok()
}

fn coeff(tok: &str) -> Option<Coeff> {
    Coeff::from_str(tok).ok()
}

/// Extracts the payload of `# <key> <payload>` comment lines.
pub fn comment_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| {
        l.strip_prefix("# ")
            .and_then(|rest| rest.strip_prefix(key))
            .and_then(|rest| rest.strip_prefix(' '))
    })
}
