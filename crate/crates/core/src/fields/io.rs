//! Field serialization: a flat CSV with a `#` metadata line, and a JSON form.
//!
//! ```text
//! # dim=2,nx=15,ny=15,lx=1,ly=1
//! value
//! 0.0123
//! ...
//! ```

use std::fmt::Write as _;

use super::{DiscreteField, FieldError, Grid};

pub fn to_csv(field: &DiscreteField) -> String {
    let g = field.grid();
    let [nx, ny] = g.n();
    let [lx, ly] = g.lengths();
    let mut s = String::new();
    let _ = writeln!(s, "# dim={},nx={},ny={},lx={},ly={}", g.dim(), nx, ny, lx, ly);
    s.push_str("value\n");
    for v in field.values() {
        let _ = writeln!(s, "{v:e}");
    }
    s
}

pub fn from_csv(text: &str) -> Result<DiscreteField, FieldError> {
    let mut lines = text.lines();
    let meta = lines
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or_else(|| FieldError::Parse("missing '# dim=...' metadata line".into()))?;
    let (mut dim, mut n, mut len) = (None, [1usize; 2], [1.0f64; 2]);
    for kv in meta.trim().split(',') {
        let (k, v) = kv.split_once('=').ok_or_else(|| FieldError::Parse(format!("bad metadata entry '{kv}'")))?;
        let bad = |_| FieldError::Parse(format!("bad value for '{k}': '{v}'"));
        match k.trim() {
            "dim" => dim = Some(v.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "nx" => n[0] = v.trim().parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "ny" => n[1] = v.trim().parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            "lx" => len[0] = v.trim().parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            "ly" => len[1] = v.trim().parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            other => return Err(FieldError::Parse(format!("unknown metadata key '{other}'"))),
        }
    }
    let dim = dim.ok_or_else(|| FieldError::Parse("metadata lacks dim".into()))?;
    let grid = Grid::new(dim, n, len)?;
    match lines.next() {
        Some(h) if h.trim() == "value" => {}
        _ => return Err(FieldError::Parse("expected 'value' header".into())),
    }
    let values = lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| l.trim().parse::<f64>().map_err(|e| FieldError::Parse(format!("row {}: {e}", i + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    DiscreteField::new(grid, values)
}

pub fn to_json(field: &DiscreteField) -> serde_json::Value {
    serde_json::to_value(field).expect("fields serialize")
}

pub fn from_json(value: &serde_json::Value) -> Result<DiscreteField, FieldError> {
    let raw: DiscreteField = serde_json::from_value(value.clone()).map_err(|e| FieldError::Parse(e.to_string()))?;
    let grid = Grid::new(raw.grid().dim(), raw.grid().n(), raw.grid().lengths())?;
    DiscreteField::new(grid, raw.into_values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_and_json_round_trip(vals in proptest::collection::vec(-1e6f64..1e6, 12), lx in 0.1f64..10.0) {
            let g = Grid::new_2d(4, 3, lx, 1.5).unwrap();
            let f = DiscreteField::new(g, vals).unwrap();
            prop_assert_eq!(&from_csv(&to_csv(&f)).unwrap(), &f);
            prop_assert_eq!(&from_json(&to_json(&f)).unwrap(), &f);
        }
    }

    #[test]
    fn rejects_wrong_length() {
        let text = "# dim=1,nx=4,ny=1,lx=1,ly=1\nvalue\n1\n2\n3\n";
        assert!(matches!(from_csv(text), Err(FieldError::LengthMismatch { .. })));
        assert!(from_csv("value\n1\n").is_err());
    }
}
