//! Point-set files.
//!
//! Text: one point per line, coordinates separated by commas or whitespace;
//! blank lines and lines starting with `#` are skipped.
//!
//! Binary: the 8-byte magic `HLATSET1`, then `d` and the point count as
//! little-endian u64, then `d` little-endian i64 per point.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{LatticeSet, Point};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"HLATSET1";

pub fn write_text<W: Write>(set: &LatticeSet, mut w: W) -> Result<()> {
    for p in set.iter() {
        writeln!(w, "{p}")?;
    }
    Ok(())
}

pub fn read_text<R: BufRead>(r: R) -> Result<LatticeSet> {
    let mut pts = Vec::new();
    for line in r.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        pts.push(t.parse::<Point>()?);
    }
    let dim = pts.first().map(|p| p.dim()).ok_or(Error::EmptySet)?;
    LatticeSet::from_points(dim, pts)
}

pub fn write_binary<W: Write>(set: &LatticeSet, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u64::<LittleEndian>(set.dim() as u64)?;
    w.write_u64::<LittleEndian>(set.len() as u64)?;
    for p in set.iter() {
        for &c in p.coords() {
            w.write_i64::<LittleEndian>(c)?;
        }
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<LatticeSet> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse("bad magic in binary point file".into()));
    }
    let dim = r.read_u64::<LittleEndian>()? as usize;
    let n = r.read_u64::<LittleEndian>()? as usize;
    let mut pts = Vec::with_capacity(n);
    let mut buf = vec![0i64; dim];
    for _ in 0..n {
        r.read_i64_into::<LittleEndian>(&mut buf)?;
        pts.push(Point::new(&buf));
    }
    LatticeSet::from_points(dim, pts)
}

/// Reads a set, choosing the format from the file contents.
pub fn load(path: impl AsRef<Path>) -> Result<LatticeSet> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        read_binary(&bytes[..])
    } else {
        read_text(&bytes[..])
    }
}

/// Writes binary when the extension is `.bin`, text otherwise.
pub fn save(set: &LatticeSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    if path.extension().is_some_and(|e| e == "bin") {
        write_binary(set, file)
    } else {
        write_text(set, file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn both_formats_round_trip(pts in proptest::collection::vec((any::<i64>(), any::<i64>(), any::<i64>()), 1..40)) {
            let set = LatticeSet::from_points(3, pts.iter().map(|&(a, b, c)| Point::from([a, b, c]))).unwrap();
            let mut text = Vec::new();
            write_text(&set, &mut text).unwrap();
            prop_assert_eq!(&read_text(&text[..]).unwrap(), &set);
            let mut bin = Vec::new();
            write_binary(&set, &mut bin).unwrap();
            prop_assert_eq!(bin.len(), 24 + 24 * set.len());
            prop_assert_eq!(&read_binary(&bin[..]).unwrap(), &set);
        }
    }

    #[test]
    fn text_skips_comments() {
        let s = read_text("# header\n1,2\n\n3 4\n".as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
    }
}
