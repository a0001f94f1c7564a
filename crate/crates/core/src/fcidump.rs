//! FCIDUMP text format.
//!
//! Header: Fortran namelist `&FCI NORB=.., NELEC=.., MS2=.., ... &END` (or a
//! closing `/`), possibly spread over several lines. Body lines are
//! `value i j k l` with 1-based orbital indices in chemist notation:
//! `(ij|kl)` when all four are nonzero, `h_ij` when `k = l = 0`, the core
//! energy when all are zero. Lines `value i 0 0 0` (orbital energies) are
//! ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hamiltonian::IntegralSet;

fn header_value(header: &str, key: &str) -> Option<String> {
    let upper = header.to_ascii_uppercase();
    let mut from = 0;
    while let Some(pos) = upper[from..].find(key) {
        let start = from + pos;
        let before = upper[..start].chars().last();
        let rest = upper[start + key.len()..].trim_start();
        if before.is_none_or(|c| !c.is_ascii_alphanumeric()) {
            if let Some(rest) = rest.strip_prefix('=') {
                let v: String = rest.trim_start().chars().take_while(|c| c.is_ascii_digit() || *c == '-' || *c == '+').collect();
                return Some(v);
            }
        }
        from = start + key.len();
    }
    None
}

pub fn parse_fcidump(text: &str) -> Result<IntegralSet> {
    let mut header = String::new();
    let mut body_start = None;
    let mut lines = text.lines().enumerate();
    for (no, line) in lines.by_ref() {
        header.push_str(line);
        header.push(' ');
        let t = line.trim().to_ascii_uppercase();
        if t.contains("&END") || t == "/" || t.ends_with('/') {
            body_start = Some(no + 1);
            break;
        }
    }
    let Some(_) = body_start else {
        return Err(Error::Parse { line: 1, msg: "namelist header not terminated by &END or /".into() });
    };
    let int = |key: &str| -> Result<Option<i64>> {
        header_value(&header, key)
            .map(|v| v.parse::<i64>().map_err(|_| Error::Parse { line: 1, msg: format!("bad {key} value {v:?}") }))
            .transpose()
    };
    let m = int("NORB")?.ok_or(Error::Parse { line: 1, msg: "missing NORB".into() })?;
    if !(1..=64).contains(&m) {
        return Err(Error::Parse { line: 1, msg: format!("NORB = {m} out of range") });
    }
    let m = m as usize;
    let mut ints = IntegralSet::zeros(m);
    ints.n_electrons = int("NELEC")?.map(|n| n as usize);
    ints.ms2 = int("MS2")?;
    for (no, line) in lines {
        let line_no = no + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse { line: line_no, msg };
        let fields: Vec<&str> = t.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(bad(format!("expected `value i j k l`, got {t:?}")));
        }
        let value: f64 = fields[0].replace(['D', 'd'], "E").parse().map_err(|_| bad(format!("non-real integral value {:?}", fields[0])))?;
        let mut idx = [0usize; 4];
        for (k, f) in fields[1..].iter().enumerate() {
            idx[k] = f.parse().map_err(|_| bad(format!("bad orbital index {f:?}")))?;
            if idx[k] > m {
                return Err(bad(format!("orbital index {} exceeds NORB = {m}", idx[k])));
            }
        }
        match idx {
            [0, 0, 0, 0] => ints.e_core = value,
            [i, 0, 0, 0] if i > 0 => {}
            [i, j, 0, 0] if i > 0 && j > 0 => ints.set_h(i - 1, j - 1, value),
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => ints.set_g(i - 1, j - 1, k - 1, l - 1, value),
            _ => return Err(bad(format!("invalid index pattern {idx:?}"))),
        }
    }
    Ok(ints)
}

pub fn read_fcidump(path: impl AsRef<Path>) -> Result<IntegralSet> {
    parse_fcidump(&fs::read_to_string(path)?)
}

pub fn format_fcidump(ints: &IntegralSet) -> String {
    let m = ints.m;
    let mut s = String::new();
    let orbsym = vec!["1"; m].join(",");
    let _ = writeln!(
        s,
        " &FCI NORB={m},NELEC={},MS2={},\n  ORBSYM={orbsym},\n  ISYM=1,\n &END",
        ints.n_electrons.unwrap_or(0),
        ints.ms2.unwrap_or(0)
    );
    let mut line = |v: f64, i: usize, j: usize, k: usize, l: usize| {
        let _ = writeln!(s, "{v:e} {i} {j} {k} {l}");
    };
    for i in 0..m {
        for j in 0..=i {
            for k in 0..m {
                for l in 0..=k {
                    if i * (i + 1) / 2 + j < k * (k + 1) / 2 + l {
                        continue;
                    }
                    let v = ints.g(i, j, k, l);
                    if v != 0.0 {
                        line(v, i + 1, j + 1, k + 1, l + 1);
                    }
                }
            }
        }
    }
    for i in 0..m {
        for j in 0..=i {
            let v = ints.h[(i, j)];
            if v != 0.0 {
                line(v, i + 1, j + 1, 0, 0);
            }
        }
    }
    line(ints.e_core, 0, 0, 0, 0);
    s
}

pub fn write_fcidump(ints: &IntegralSet, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_fcidump(ints))?;
    Ok(())
}
