//! PQR reader and writer.
//!
//! Records are whitespace-delimited:
//! `ATOM serial name resName [chainID] resSeq x y z charge radius [extra...]`.
//! The chain identifier is optional. Lines that are not `ATOM`/`HETATM`
//! records are ignored.

use crate::{Charge, ChargeDistribution, Error, Result, Vector3};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Read a PQR file into a charge distribution labelled with the file stem.
pub fn load_pqr(path: impl AsRef<Path>) -> Result<ChargeDistribution> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_pqr(&text, path, &label)
}

/// Parse PQR text. `path` is only used in error messages.
pub fn parse_pqr(text: &str, path: &Path, label: &str) -> Result<ChargeDistribution> {
    let mut charges = Vec::new();
    let mut radii = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let Some(record) = tokens.first() else {
            continue;
        };
        if *record != "ATOM" && *record != "HETATM" {
            continue;
        }
        let fail = |message: String| Error::Parse {
            path: path.to_owned(),
            line: lineno + 1,
            message,
        };
        let fields = coordinate_fields(&tokens).ok_or_else(|| {
            fail(format!(
                "expected 'x y z charge radius' after residue number, found {} fields",
                tokens.len()
            ))
        })?;
        let mut values = [0.0; 5];
        const NAMES: [&str; 5] = ["x", "y", "z", "charge", "radius"];
        for (k, (tok, name)) in fields.iter().zip(NAMES).enumerate() {
            values[k] = tok
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| fail(format!("invalid {name} field '{tok}'")))?;
        }
        let [x, y, z, q, r] = values;
        charges.push(Charge::new(Vector3::new(x, y, z), q).map_err(|e| fail(e.to_string()))?);
        radii.push(r);
    }
    if charges.is_empty() {
        return Err(Error::EmptyInput(path.to_owned()));
    }
    ChargeDistribution::new(charges, label)?.with_radii(radii)
}

/// Locate the five `x y z charge radius` tokens of an ATOM/HETATM record.
fn coordinate_fields<'a>(tokens: &'a [&'a str]) -> Option<&'a [&'a str]> {
    // record serial name resName
    let mut idx = 4;
    // optional chain identifier: anything that is not a residue number
    if !looks_like_residue_number(tokens.get(idx)?) {
        idx += 1;
    }
    looks_like_residue_number(tokens.get(idx)?).then_some(())?;
    idx += 1;
    tokens.get(idx..idx + 5)
}

/// Integer residue number with an optional insertion code ("52", "52A", "-3").
fn looks_like_residue_number(tok: &str) -> bool {
    let digits = tok.strip_prefix('-').unwrap_or(tok);
    let n = digits.chars().take_while(|c| c.is_ascii_digit()).count();
    n > 0 && digits.len() - n <= 1 && !digits.contains('.')
}

/// Serialize to PQR with shortest round-trip float formatting.
pub fn write_pqr(dist: &ChargeDistribution) -> String {
    let mut out = String::new();
    for (i, c) in dist.charges().iter().enumerate() {
        let r = dist.radii().map_or(0.0, |r| r[i]);
        let p = c.position;
        let _ = writeln!(
            out,
            "ATOM {:>6} Q    CHG {:>5} {} {} {} {} {}",
            i + 1,
            i + 1,
            p.x,
            p.y,
            p.z,
            c.magnitude,
            r
        );
    }
    out.push_str("END\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<ChargeDistribution> {
        parse_pqr(text, Path::new("test.pqr"), "test")
    }

    #[test]
    fn single_record_without_chain() {
        let d = parse("ATOM 1 N X 1 0.0 0.0 0.0 -0.30 1.85\n").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.charges()[0].position, Vector3::zeros());
        assert_eq!(d.charges()[0].magnitude, -0.30);
        assert_eq!(d.radii().unwrap(), &[1.85]);
    }

    #[test]
    fn chain_and_insertion_code_and_trailing_fields() {
        let text = "REMARK something\n\
                    ATOM      1  N   ALA A   1      11.104   6.134  -6.504 -0.3000 1.8500\n\
                    HETATM    2  O   HOH B  52A     -1.0     2.0     3.5    0.4170 1.5200 O\n\
                    TER\nEND\n";
        let d = parse(text).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.charges()[0].position, Vector3::new(11.104, 6.134, -6.504));
        assert_eq!(d.charges()[1].magnitude, 0.417);
    }

    #[test]
    fn empty_file_is_error() {
        assert!(matches!(parse(""), Err(Error::EmptyInput(_))));
        assert!(matches!(
            parse("REMARK only\nEND\n"),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn bad_charge_names_line() {
        let err = parse("REMARK\nATOM 1 N X 1 0.0 0.0 0.0 abc 1.85\n").unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("charge"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_record_is_error() {
        assert!(matches!(
            parse("ATOM 1 N X 1 0.0 0.0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn load_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mol.pqr");
        fs::write(&path, "ATOM 1 N X 1 1.0 2.0 3.0 0.5 1.0\n").unwrap();
        let d = load_pqr(&path).unwrap();
        assert_eq!(d.label(), "mol");
        assert_eq!(d.net_charge(), 0.5);
    }

    proptest! {
        #[test]
        fn write_then_parse_round_trips(
            pts in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0, -2.0f64..2.0), 1..20)
        ) {
            let charges = pts.iter().map(|&(x, y, z, q)| Charge::at(x, y, z, q)).collect();
            let d = ChargeDistribution::new(charges, "rt").unwrap();
            let back = parse(&write_pqr(&d)).unwrap();
            prop_assert_eq!(back.len(), d.len());
            for (a, b) in d.charges().iter().zip(back.charges()) {
                prop_assert!((a.position - b.position).norm() <= 1e-12 * (1.0 + a.position.norm()));
                prop_assert!((a.magnitude - b.magnitude).abs() <= 1e-12 * (1.0 + a.magnitude.abs()));
            }
        }
    }
}
