//! Plain-text point sets: one `x y` pair per line. Blank lines and lines
//! starting with `#` are ignored.

use alloc::string::String;
use core::fmt::Write;

use super::{PatternError, Point, PointSet};

pub fn parse_point_set(text: &str) -> Result<PointSet, PatternError> {
    let mut pts: alloc::vec::Vec<Point> = alloc::vec::Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let err = |reason| PatternError::Parse { line: i + 1, reason };
        let x = it.next().ok_or(err("missing x"))?.parse().map_err(|_| err("x is not an integer"))?;
        let y = it.next().ok_or(err("missing y"))?.parse().map_err(|_| err("y is not an integer"))?;
        if it.next().is_some() {
            return Err(err("more than two fields"));
        }
        pts.push((x, y));
    }
    Ok(PointSet::new(pts))
}

pub fn write_point_set(set: &PointSet) -> String {
    let mut out = String::new();
    for (x, y) in set.points() {
        let _ = writeln!(out, "{x} {y}");
    }
    out
}
