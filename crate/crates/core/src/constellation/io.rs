//! Constellation files.
//!
//! JSON with header fields `format` (`"special"` or `"general"`), `T`, `M`,
//! `L`, and `elements`: `L` matrices, each a list of rows, each row a list
//! of `[re, im]` pairs. Numbers are written with 17 significant digits so a
//! write/read cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, UnitaryMatrix, C64};

use super::{Constellation, Form};

pub fn to_string(c: &Constellation) -> String {
    let mut s = String::new();
    let format = match c.form() {
        Form::Special => "special",
        Form::General => "general",
    };
    let _ = writeln!(s, "{{");
    let _ = writeln!(s, "  \"format\": \"{format}\",");
    let _ = writeln!(s, "  \"T\": {},", c.t());
    let _ = writeln!(s, "  \"M\": {},", c.m());
    let _ = writeln!(s, "  \"L\": {},", c.len());
    let _ = writeln!(s, "  \"elements\": [");
    for (k, e) in c.elements().iter().enumerate() {
        let _ = writeln!(s, "    [");
        for i in 0..e.rows() {
            let row: Vec<String> = (0..e.cols())
                .map(|j| {
                    let z = e[(i, j)];
                    format!("[{:.16e}, {:.16e}]", z.re, z.im)
                })
                .collect();
            let sep = if i + 1 < e.rows() { "," } else { "" };
            let _ = writeln!(s, "      [{}]{sep}", row.join(", "));
        }
        let sep = if k + 1 < c.len() { "," } else { "" };
        let _ = writeln!(s, "    ]{sep}");
    }
    let _ = writeln!(s, "  ]");
    let _ = writeln!(s, "}}");
    s
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| Error::validation(name, "missing field"))
}

fn positive(obj: &serde_json::Map<String, Value>, name: &str) -> Result<usize> {
    field(obj, name)?
        .as_u64()
        .filter(|&v| v > 0)
        .map(|v| v as usize)
        .ok_or_else(|| Error::validation(name, "expected a positive integer"))
}

fn parse_matrix(v: &Value, rows: usize, cols: usize, label: &str) -> Result<CMatrix> {
    let bad = |msg: String| Error::validation(label, msg);
    let rs = v.as_array().ok_or_else(|| bad("expected a list of rows".into()))?;
    if rs.len() != rows {
        return Err(bad(format!("expected {rows} rows, got {}", rs.len())));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, r) in rs.iter().enumerate() {
        let entries = r
            .as_array()
            .ok_or_else(|| bad(format!("row {i} is not a list")))?;
        if entries.len() != cols {
            return Err(bad(format!("row {i} has {} entries, expected {cols}", entries.len())));
        }
        for (j, z) in entries.iter().enumerate() {
            let pair = z
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| bad(format!("entry ({i}, {j}) is not an [re, im] pair")))?;
            let re = pair[0].as_f64();
            let im = pair[1].as_f64();
            match (re, im) {
                (Some(re), Some(im)) if re.is_finite() && im.is_finite() => {
                    data.push(C64::new(re, im))
                }
                _ => return Err(bad(format!("entry ({i}, {j}) is not a finite number pair"))),
            }
        }
    }
    CMatrix::from_vec(rows, cols, data)
}

pub fn from_str(text: &str) -> Result<Constellation> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| Error::Parse("top level must be an object".into()))?;
    let form = match field(obj, "format")?.as_str() {
        Some("special") => Form::Special,
        Some("general") => Form::General,
        _ => return Err(Error::validation("format", "expected \"special\" or \"general\"")),
    };
    let t = positive(obj, "T")?;
    let m = positive(obj, "M")?;
    let l = positive(obj, "L")?;
    let elements = field(obj, "elements")?
        .as_array()
        .ok_or_else(|| Error::validation("elements", "expected a list of matrices"))?;
    if elements.is_empty() {
        return Err(Error::validation("elements", "constellation has no elements"));
    }
    if elements.len() != l {
        return Err(Error::validation(
            "L",
            format!("header says {l} elements, file has {}", elements.len()),
        ));
    }
    match form {
        Form::Special => {
            if t != 2 * m {
                return Err(Error::validation("T", format!("special form needs T = 2M = {}", 2 * m)));
            }
            let us = elements
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let label = format!("elements[{k}]");
                    let mat = parse_matrix(v, m, m, &label)?;
                    UnitaryMatrix::new(mat).map_err(|e| Error::validation(label, e.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            Constellation::special(us)
        }
        Form::General => {
            if t < m {
                return Err(Error::validation("T", format!("T = {t} is smaller than M = {m}")));
            }
            let frames = elements
                .iter()
                .enumerate()
                .map(|(k, v)| parse_matrix(v, t, m, &format!("elements[{k}]")))
                .collect::<Result<Vec<_>>>()?;
            Constellation::general(frames)
        }
    }
}

pub fn read(path: &Path) -> Result<Constellation> {
    from_str(&std::fs::read_to_string(path)?)
}

pub fn write(path: &Path, c: &Constellation) -> Result<()> {
    std::fs::write(path, to_string(c))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::builtin;

    #[test]
    fn round_trip_is_bit_exact() {
        for name in ["sl2f5", "g214", "exact5db3"] {
            let c = builtin(name).unwrap();
            let back = from_str(&to_string(&c)).unwrap();
            assert_eq!(back, c, "{name}");
        }
        let g = builtin("optimal3dim2").unwrap().to_general();
        assert_eq!(from_str(&to_string(&g)).unwrap(), g);
    }

    #[test]
    fn non_unitary_element_is_named() {
        let text = r#"{"format":"special","T":2,"M":1,"L":2,
            "elements":[[[[1,0]]],[[[2,0]]]]}"#;
        match from_str(text) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "elements[1]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_malformed_inputs() {
        let empty = r#"{"format":"special","T":2,"M":1,"L":1,"elements":[]}"#;
        assert!(matches!(from_str(empty), Err(Error::Validation { ref field, .. }) if field == "elements"));
        let bad_format = r#"{"format":"odd","T":2,"M":1,"L":1,"elements":[]}"#;
        assert!(matches!(from_str(bad_format), Err(Error::Validation { ref field, .. }) if field == "format"));
        assert!(matches!(from_str("{"), Err(Error::Parse(_))));
        let missing_t = r#"{"format":"special","M":1,"L":1,"elements":[[[[1,0]]]]}"#;
        assert!(matches!(from_str(missing_t), Err(Error::Validation { ref field, .. }) if field == "T"));
    }
}
