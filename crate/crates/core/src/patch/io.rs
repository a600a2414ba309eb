use std::io::{BufRead, Write};
use std::path::Path;

use super::Point;
use crate::error::{Error, Result};

pub const MARKER_HEADER: &str = "t,x,y,marker_index";

/// Marker positions at one snapshot time.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkerBlock {
    pub t: f64,
    pub markers: Vec<Point>,
}

pub fn write_marker_csv<W: Write>(mut w: W, blocks: &[MarkerBlock]) -> Result<()> {
    writeln!(w, "{MARKER_HEADER}")?;
    for b in blocks {
        for (k, p) in b.markers.iter().enumerate() {
            writeln!(w, "{},{},{},{}", b.t, p[0], p[1], k)?;
        }
    }
    Ok(())
}

pub fn read_marker_csv<R: BufRead>(r: R, origin: &Path) -> Result<Vec<MarkerBlock>> {
    let bad = |line: usize, message: String| Error::Format {
        path: origin.to_path_buf(),
        message: format!("line {line}: {message}"),
    };
    let mut lines = r.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == MARKER_HEADER => {}
        Some((_, Ok(h))) => {
            return Err(bad(
                1,
                format!("expected header '{MARKER_HEADER}', found '{h}'"),
            ))
        }
        Some((_, Err(e))) => return Err(e.into()),
        None => return Err(bad(1, "empty marker file".into())),
    }
    let mut blocks: Vec<MarkerBlock> = Vec::new();
    for (no, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad(no + 1, format!("expected 4 fields, found {}", f.len())));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| bad(no + 1, format!("'{s}': {e}")))
        };
        let t = num(f[0])?;
        let p = [num(f[1])?, num(f[2])?];
        let k: usize = f[3]
            .trim()
            .parse()
            .map_err(|e| bad(no + 1, format!("'{}': {e}", f[3])))?;
        if k == 0 {
            blocks.push(MarkerBlock {
                t,
                markers: Vec::new(),
            });
        }
        match blocks.last_mut() {
            Some(b) if b.t == t && b.markers.len() == k => b.markers.push(p),
            _ => return Err(bad(no + 1, format!("marker index {k} out of sequence"))),
        }
    }
    Ok(blocks)
}

pub fn save_marker_csv(path: &Path, blocks: &[MarkerBlock]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_marker_csv(std::io::BufWriter::new(f), blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let blocks = vec![
            MarkerBlock {
                t: 0.0,
                markers: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            },
            MarkerBlock {
                t: 0.5,
                markers: vec![[0.1, 0.0], [1.1, 0.25], [0.1, 1.0], [0.0, 0.5]],
            },
        ];
        let mut buf = Vec::new();
        write_marker_csv(&mut buf, &blocks).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x,y,marker_index\n"));
        let back = read_marker_csv(&buf[..], Path::new("m.csv")).unwrap();
        assert_eq!(back, blocks);
    }

    #[test]
    fn bad_header() {
        let err = read_marker_csv(&b"x,y\n"[..], Path::new("m.csv")).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }
}
