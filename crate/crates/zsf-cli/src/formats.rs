//! Text formats: instances are "ZSF1 q n m" plus one row of canonical
//! residues per vector; solutions are "ZSFSOL1 m constraint" plus sorted
//! "index value" pairs. Serialization is canonical, so parse(serialize(x))
//! is the identity byte-for-byte.

use std::collections::BTreeSet;
use std::str::FromStr;

use num_bigint::BigUint;
use zsf::field::{Modulus, Residue};
use zsf::linalg::{FieldVec, VecFamily};
use zsf::problem::{CoeffMap, Constraint};

pub struct Instance {
    pub modulus: Modulus,
    pub family: VecFamily,
}

pub fn serialize_instance(family: &VecFamily) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "ZSF1 {} {} {}\n",
        family.modulus().q(),
        family.dim(),
        family.len()
    ));
    for v in family.vectors() {
        let row: Vec<String> = v.entries().iter().map(|e| e.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_instance(text: &str) -> Result<Instance, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty instance file")?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "ZSF1" {
        return Err("instance header must be 'ZSF1 q n m'".into());
    }
    let q = BigUint::from_str(parts[1]).map_err(|e| format!("bad q: {e}"))?;
    let n: usize = parts[2].parse().map_err(|e| format!("bad n: {e}"))?;
    let m: usize = parts[3].parse().map_err(|e| format!("bad m: {e}"))?;
    let modulus = Modulus::new(q).map_err(|e| e.to_string())?;
    let mut vectors = Vec::with_capacity(m);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entries: Result<Vec<Residue>, String> = line
            .split_whitespace()
            .map(|tok| {
                let v = BigUint::from_str(tok).map_err(|e| format!("row {i}: {e}"))?;
                if &v >= modulus.q() {
                    return Err(format!("row {i}: residue {v} not canonical"));
                }
                Ok(modulus.residue(&v))
            })
            .collect();
        let entries = entries?;
        if entries.len() != n {
            return Err(format!("row {i}: expected {n} entries, got {}", entries.len()));
        }
        vectors.push(FieldVec::new(entries));
    }
    if vectors.len() != m {
        return Err(format!("expected {m} vectors, got {}", vectors.len()));
    }
    let family = VecFamily::new(modulus.clone(), n, vectors).map_err(|e| e.to_string())?;
    Ok(Instance { modulus, family })
}

pub fn constraint_to_string(c: &Constraint) -> String {
    match c {
        Constraint::Binary => "binary".into(),
        Constraint::Ternary012 => "ternary012".into(),
        Constraint::Interval(s) => format!("interval:{s}"),
        Constraint::Explicit(set) => format!("explicit:{}", join_set(set)),
        Constraint::Forbidden(set) => format!("forbidden:{}", join_set(set)),
    }
}

fn join_set(set: &BTreeSet<Residue>) -> String {
    set.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
}

pub fn parse_constraint(m: &Modulus, text: &str) -> Result<Constraint, String> {
    let lower = text.trim();
    if lower == "binary" {
        return Ok(Constraint::Binary);
    }
    if lower == "ternary012" {
        return Ok(Constraint::Ternary012);
    }
    if let Some(rest) = lower.strip_prefix("interval:") {
        let s = BigUint::from_str(rest).map_err(|e| format!("bad interval bound: {e}"))?;
        return Ok(Constraint::Interval(s));
    }
    let parse_set = |rest: &str| -> Result<BTreeSet<Residue>, String> {
        rest.split(',')
            .map(|tok| {
                let v = BigUint::from_str(tok.trim()).map_err(|e| format!("bad value: {e}"))?;
                if &v >= m.q() {
                    return Err(format!("value {v} not canonical"));
                }
                Ok(m.residue(&v))
            })
            .collect()
    };
    if let Some(rest) = lower.strip_prefix("explicit:") {
        return Ok(Constraint::Explicit(parse_set(rest)?));
    }
    if let Some(rest) = lower.strip_prefix("forbidden:") {
        return Ok(Constraint::Forbidden(parse_set(rest)?));
    }
    Err(format!(
        "unknown constraint '{text}'; use binary, ternary012, interval:S, explicit:v1,v2,... or forbidden:v1,v2,..."
    ))
}

pub fn serialize_solution(m_count: usize, constraint: &Constraint, x: &CoeffMap) -> String {
    let mut out = format!("ZSFSOL1 {} {}\n", m_count, constraint_to_string(constraint));
    for (i, v) in x.iter() {
        out.push_str(&format!("{i} {v}\n"));
    }
    out
}

pub fn parse_solution(modulus: &Modulus, text: &str) -> Result<(usize, Constraint, CoeffMap), String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty solution file")?;
    let parts: Vec<&str> = header.splitn(3, ' ').collect();
    if parts.len() != 3 || parts[0] != "ZSFSOL1" {
        return Err("solution header must be 'ZSFSOL1 m constraint'".into());
    }
    let m_count: usize = parts[1].parse().map_err(|e| format!("bad m: {e}"))?;
    let constraint = parse_constraint(modulus, parts[2])?;
    let mut map = CoeffMap::new();
    let mut last: Option<usize> = None;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let idx: usize = it
            .next()
            .ok_or("missing index")?
            .parse()
            .map_err(|e| format!("bad index: {e}"))?;
        let val =
            BigUint::from_str(it.next().ok_or("missing value")?).map_err(|e| format!("bad value: {e}"))?;
        if it.next().is_some() {
            return Err("trailing tokens on solution line".into());
        }
        if val.bits() == 0 {
            return Err(format!("stored zero coefficient at index {idx}"));
        }
        if &val >= modulus.q() {
            return Err(format!("value {val} not canonical"));
        }
        if let Some(prev) = last {
            if idx <= prev {
                return Err("solution indices must be strictly increasing".into());
            }
        }
        last = Some(idx);
        map.insert(idx, modulus.residue(&val));
    }
    Ok((m_count, constraint, map))
}
