//! Text feature files.
//!
//! ```text
//! LIPO-FEATURES v1 <frame_id> <n_points> <n_lines> <descriptor_bits>
//! P <x> <y> <orientation> <response> <hex descriptor>
//! L <sx> <sy> <ex> <ey> <hex descriptor>
//! ```
//!
//! Floats are written in shortest round-trip form, so save/load is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::descriptor::{Descriptor, DESCRIPTOR_BITS};
use crate::error::{Error, Result};
use crate::types::{FrameFeatures, KeyPoint, LineSegment};

const MAGIC: &str = "LIPO-FEATURES";
const VERSION: &str = "v1";

pub fn write_features(f: &FrameFeatures) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{MAGIC} {VERSION} {} {} {} {}",
        f.frame_id,
        f.points.len(),
        f.lines.len(),
        DESCRIPTOR_BITS
    )
    .expect("string write");
    for (kp, d) in &f.points {
        writeln!(
            out,
            "P {} {} {} {} {}",
            kp.x,
            kp.y,
            kp.orientation,
            kp.response,
            d.to_hex()
        )
        .expect("string write");
    }
    for (s, d) in &f.lines {
        writeln!(
            out,
            "L {} {} {} {} {}",
            s.start[0],
            s.start[1],
            s.end[0],
            s.end[1],
            d.to_hex()
        )
        .expect("string write");
    }
    out
}

pub fn save_features(f: &FrameFeatures, path: &Path) -> Result<()> {
    fs::write(path, write_features(f)).map_err(|e| Error::io(path, e))
}

pub fn load_features(path: &Path) -> Result<FrameFeatures> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_features(&text)
}

fn field<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} `{tok}`")))
}

fn descriptor(tok: Option<&str>, line: usize) -> Result<Descriptor> {
    let tok = tok.ok_or_else(|| Error::parse(line, "missing descriptor"))?;
    Descriptor::from_hex(tok).map_err(|e| Error::parse(line, e.to_string()))
}

pub fn parse_features(text: &str) -> Result<FrameFeatures> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty feature file"))?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some(MAGIC) {
        return Err(Error::parse(1, format!("expected `{MAGIC}` header")));
    }
    if tok.next() != Some(VERSION) {
        return Err(Error::parse(1, format!("unsupported version, expected {VERSION}")));
    }
    let frame_id: u64 = field(tok.next(), 1, "frame id")?;
    let n_points: usize = field(tok.next(), 1, "point count")?;
    let n_lines: usize = field(tok.next(), 1, "line count")?;
    let bits: usize = field(tok.next(), 1, "descriptor width")?;
    if tok.next().is_some() {
        return Err(Error::parse(1, "trailing tokens in header"));
    }
    if bits != DESCRIPTOR_BITS {
        return Err(Error::Format(format!(
            "descriptor width {bits} does not match configured width {DESCRIPTOR_BITS}"
        )));
    }

    let mut f = FrameFeatures::new(frame_id);
    f.points.reserve(n_points);
    f.lines.reserve(n_lines);
    for k in 0..n_points + n_lines {
        let (ln, text) = lines
            .next()
            .ok_or_else(|| Error::parse(k + 2, "unexpected end of file"))?;
        let mut tok = text.split_whitespace();
        let tag = tok.next();
        if k < n_points {
            if tag != Some("P") {
                return Err(Error::parse(ln, "expected point record `P`"));
            }
            let kp = KeyPoint {
                x: field(tok.next(), ln, "x")?,
                y: field(tok.next(), ln, "y")?,
                orientation: field(tok.next(), ln, "orientation")?,
                response: field(tok.next(), ln, "response")?,
            };
            f.points.push((kp, descriptor(tok.next(), ln)?));
        } else {
            if tag != Some("L") {
                return Err(Error::parse(ln, "expected line record `L`"));
            }
            let seg = LineSegment::new(
                [field(tok.next(), ln, "sx")?, field(tok.next(), ln, "sy")?],
                [field(tok.next(), ln, "ex")?, field(tok.next(), ln, "ey")?],
            );
            f.lines.push((seg, descriptor(tok.next(), ln)?));
        }
        if tok.next().is_some() {
            return Err(Error::parse(ln, "trailing tokens"));
        }
    }
    if let Some((ln, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(ln, format!("unexpected record `{extra}`")));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> FrameFeatures {
        let mut f = FrameFeatures::new(7);
        f.points.push((
            KeyPoint {
                x: 10.5,
                y: 3.25,
                orientation: 1.2345678,
                response: 99.0,
            },
            Descriptor::from_words([1, 2, 3, 4]),
        ));
        f.lines
            .push((LineSegment::new([0.1, 0.2], [30.3, 40.4]), Descriptor::ones()));
        f
    }

    #[test]
    fn header_only_file() {
        let f = parse_features("LIPO-FEATURES v1 3 0 0 256\n").unwrap();
        assert_eq!(f, FrameFeatures::new(3));
    }

    #[test]
    fn truncated_descriptor_is_parse_error() {
        let mut text = write_features(&sample());
        text = text.replace(&Descriptor::ones().to_hex(), "ffff");
        match parse_features(&text) {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("expected parse error on line 3, got {other:?}"),
        }
    }

    #[test]
    fn missing_record_is_parse_error() {
        let text = "LIPO-FEATURES v1 3 2 0 256\nP 1 2 0 1 ".to_string() + &"0".repeat(64) + "\n";
        assert!(matches!(parse_features(&text), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn wrong_width_is_format_error() {
        assert!(matches!(
            parse_features("LIPO-FEATURES v1 3 0 0 512\n"),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn save_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.feat"), dir.path().join("b.feat"));
        save_features(&sample(), &a).unwrap();
        save_features(&sample(), &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(load_features(&a).unwrap(), sample());
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("f.feat");
        assert!(matches!(save_features(&sample(), &path), Err(Error::Io { .. })));
    }

    proptest! {
        #[test]
        fn round_trip(
            id in any::<u64>(),
            pts in prop::collection::vec((any::<f32>(), any::<f32>(), 0f32..std::f32::consts::TAU, any::<f32>(), any::<[u64; 4]>()), 0..8),
            lns in prop::collection::vec((any::<[f32; 4]>(), any::<[u64; 4]>()), 0..8),
        ) {
            let pts: Vec<_> = pts.into_iter().filter(|p| p.0.is_finite() && p.1.is_finite() && p.3.is_finite()).collect();
            let lns: Vec<_> = lns.into_iter().filter(|l| l.0.iter().all(|v| v.is_finite())).collect();
            let f = FrameFeatures {
                frame_id: id,
                points: pts.into_iter().map(|(x, y, o, r, d)| (KeyPoint { x, y, orientation: o, response: r }, Descriptor::from_words(d))).collect(),
                lines: lns.into_iter().map(|(c, d)| (LineSegment::new([c[0], c[1]], [c[2], c[3]]), Descriptor::from_words(d))).collect(),
            };
            prop_assert_eq!(parse_features(&write_features(&f)).unwrap(), f);
        }
    }
}
