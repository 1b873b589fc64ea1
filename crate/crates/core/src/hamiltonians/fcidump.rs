//! FCIDUMP reader and writer.
//!
//! The accepted format is a `&FCI ... /` (or `&END`) namelist with NORB,
//! NELEC and MS2, followed by `value i j k l` lines with 1-based indices:
//! `i=j=k=l=0` is the core energy, `k=l=0` a one-electron integral, and all
//! indices positive a chemist-notation two-electron integral expanded with
//! 8-fold symmetry. Duplicate entries overwrite with last-wins. ORBSYM and
//! ISYM are parsed and ignored.

use std::io::{BufRead, Write};

use super::abinitio::AbInitioHamiltonian;
use crate::error::FcidumpError;

pub fn parse_fcidump<R: BufRead>(reader: R) -> Result<AbInitioHamiltonian, FcidumpError> {
    let mut lines = reader.lines().enumerate();

    // Accumulate the namelist until its terminator; anything after the
    // terminator on the same line is body content.
    let mut header = String::new();
    let mut pending_body: Vec<(usize, String)> = Vec::new();
    let mut terminated = false;
    for (idx, line) in &mut lines {
        let line = line?;
        let lineno = idx + 1;
        let upper = line.to_uppercase();
        if let Some(pos) = upper.find("&END").map(|p| (p, 4)).or_else(|| {
            // A '/' terminates the namelist unless it is part of &END.
            upper.find('/').map(|p| (p, 1))
        }) {
            let (cut, len) = pos;
            header.push(' ');
            header.push_str(&line[..cut]);
            let rest = line[cut + len..].trim();
            if !rest.is_empty() {
                pending_body.push((lineno, rest.to_string()));
            }
            terminated = true;
            break;
        }
        header.push(' ');
        header.push_str(&line);
    }
    if !terminated {
        return Err(FcidumpError::Namelist(
            "missing '/' or '&END' terminator".into(),
        ));
    }

    let (norb, nelec, ms2) = parse_namelist(&header)?;
    let mut h = AbInitioHamiltonian::empty(norb);
    h.nelec = nelec;
    h.ms2 = ms2;

    let mut handle = |lineno: usize, text: &str| -> Result<(), FcidumpError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Ok(());
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(FcidumpError::Parse {
                line: lineno,
                msg: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let value: f64 = fields[0]
            .replace(['D', 'd'], "E")
            .parse()
            .map_err(|_| FcidumpError::Parse {
                line: lineno,
                msg: format!("invalid value '{}'", fields[0]),
            })?;
        if !value.is_finite() {
            return Err(FcidumpError::Parse {
                line: lineno,
                msg: "non-finite value".into(),
            });
        }
        let mut idx = [0usize; 4];
        for (slot, f) in idx.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|_| FcidumpError::Parse {
                line: lineno,
                msg: format!("invalid index '{f}'"),
            })?;
        }
        if idx.iter().any(|&i| i > norb) {
            return Err(FcidumpError::Parse {
                line: lineno,
                msg: format!("index exceeds NORB={norb}"),
            });
        }
        let [i, j, k, l] = idx;
        if i == 0 && j == 0 && k == 0 && l == 0 {
            h.e_core = value;
        } else if k == 0 && l == 0 && i > 0 && j > 0 {
            h.h1[(i - 1, j - 1)] = value;
            h.h1[(j - 1, i - 1)] = value;
        } else if i > 0 && j > 0 && k > 0 && l > 0 {
            h.h2.set(i - 1, j - 1, k - 1, l - 1, value);
        } else {
            return Err(FcidumpError::Parse {
                line: lineno,
                msg: format!("unsupported index pattern {i} {j} {k} {l}"),
            });
        }
        Ok(())
    };

    for (lineno, text) in pending_body {
        handle(lineno, &text)?;
    }
    for (idx, line) in lines {
        let line = line?;
        handle(idx + 1, &line)?;
    }
    Ok(h)
}

fn parse_namelist(header: &str) -> Result<(usize, usize, i32), FcidumpError> {
    let cleaned = header.replace('=', " = ");
    let mut tokens = Vec::new();
    for piece in cleaned.split(|c: char| c == ',' || c.is_whitespace()) {
        let p = piece.trim();
        if !p.is_empty() {
            tokens.push(p.to_string());
        }
    }
    if tokens.is_empty() || !tokens[0].to_uppercase().starts_with("&FCI") {
        return Err(FcidumpError::Namelist("missing &FCI header".into()));
    }

    let mut norb: Option<usize> = None;
    let mut nelec: Option<usize> = None;
    let mut ms2: Option<i32> = None;
    let mut key: Option<String> = None;
    let mut i = 1;
    while i < tokens.len() {
        if i + 1 < tokens.len() && tokens[i + 1] == "=" {
            key = Some(tokens[i].to_uppercase());
            i += 2;
            continue;
        }
        let value = &tokens[i];
        match key.as_deref() {
            Some("NORB") => {
                norb = Some(value.parse().map_err(|_| {
                    FcidumpError::Namelist(format!("invalid NORB value '{value}'"))
                })?)
            }
            Some("NELEC") => {
                nelec = Some(value.parse().map_err(|_| {
                    FcidumpError::Namelist(format!("invalid NELEC value '{value}'"))
                })?)
            }
            Some("MS2") => {
                ms2 = Some(value.parse().map_err(|_| {
                    FcidumpError::Namelist(format!("invalid MS2 value '{value}'"))
                })?)
            }
            // ORBSYM, ISYM and any other keys are ignored; list values
            // simply continue the current key.
            Some(_) => {}
            None => {
                return Err(FcidumpError::Namelist(format!(
                    "stray token '{value}' before any key"
                )))
            }
        }
        i += 1;
    }
    let norb = norb.ok_or_else(|| FcidumpError::Namelist("missing NORB".into()))?;
    if norb == 0 || norb > crate::fock::MAX_SITES {
        return Err(FcidumpError::Namelist(format!("NORB={norb} out of range")));
    }
    let nelec = nelec.ok_or_else(|| FcidumpError::Namelist("missing NELEC".into()))?;
    let ms2 = ms2.ok_or_else(|| FcidumpError::Namelist("missing MS2".into()))?;
    Ok((norb, nelec, ms2))
}

/// Write `h` in the accepted FCIDUMP format.
///
/// Values are printed with 17 significant digits so that `parse(write(h))`
/// reproduces every stored integral bit-exactly.
pub fn write_fcidump<W: Write>(h: &AbInitioHamiltonian, mut w: W) -> std::io::Result<()> {
    writeln!(w, "&FCI NORB={},NELEC={},MS2={},", h.l, h.nelec, h.ms2)?;
    writeln!(w, "&END")?;
    for (i, j, k, l, v) in h.h2.canonical_entries() {
        if v != 0.0 {
            writeln!(w, "{:.16E} {} {} {} {}", v, i + 1, j + 1, k + 1, l + 1)?;
        }
    }
    for i in 0..h.l {
        for j in 0..=i {
            let v = h.h1[(i, j)];
            if v != 0.0 {
                writeln!(w, "{:.16E} {} {} 0 0", v, i + 1, j + 1)?;
            }
        }
    }
    writeln!(w, "{:.16E} 0 0 0 0", h.e_core)?;
    Ok(())
}
