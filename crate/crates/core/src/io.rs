//! Event files: a header line followed by one record per line, as JSON lines
//! or CSV.
//!
//! JSONL files start with `{"header": …}`; CSV files start with `# ` followed by
//! the header JSON, then the column names.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{EventFormat, RunConfig};
use crate::error::{Error, Result};
use crate::events::{EventRecord, ScatteredArm, Truth};

pub const FORMAT_VERSION: &str = "1.0.0";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventFileHeader {
    pub format_version: String,
    pub effective_config: RunConfig,
    /// First 8 bytes of SHA-256 over the serialized configuration, in hex.
    pub generator_digest: String,
}

impl EventFileHeader {
    /// The output path is dropped from the embedded config: where a file was
    /// written says nothing about its content, and keeping it would make the
    /// same run differ byte-wise depending on the file name.
    pub fn new(cfg: &RunConfig) -> Self {
        let mut cfg = cfg.clone();
        cfg.output.path = None;
        Self {
            format_version: FORMAT_VERSION.to_string(),
            generator_digest: generator_digest(&cfg),
            effective_config: cfg,
        }
    }
}

pub fn generator_digest(cfg: &RunConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    let hash = Sha256::digest(&bytes);
    let head = u64::from_be_bytes(hash[..8].try_into().expect("8 bytes"));
    format!("{head:016x}")
}

fn major(version: &str) -> &str {
    version.split('.').next().unwrap_or("")
}

pub fn check_version(found: &str) -> Result<()> {
    if major(found) != major(FORMAT_VERSION) {
        return Err(Error::VersionMismatch { found: found.into(), expected: FORMAT_VERSION.into() });
    }
    Ok(())
}

/// Formats with 9 significant digits: fixed notation for magnitudes in
/// `[1e-4, 1e9)`, scientific otherwise.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if !(1e-4..1e9).contains(&a) {
        return format!("{:.*e}", (DIGITS - 1) as usize, x);
    }
    let exp = a.log10().floor() as i32;
    let decimals = (DIGITS - 1 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit (9.9999999996 → 10.00000000)
    let digits = s.chars().filter(|c| c.is_ascii_digit()).collect::<String>();
    let significant = digits.trim_start_matches('0').len();
    if significant > DIGITS as usize && decimals > 0 {
        format!("{x:.*}", decimals - 1)
    } else {
        s
    }
}

pub const EVENT_CSV_COLUMNS: &str = "event_id,de_pre_a,de_pre_b,e_main_a,e_main_b,counter_a,counter_b,\
e_counter_a,e_counter_b,lost,truth_prescatter_theta,truth_prescatter_phi,truth_which_arm,truth_theta_a,truth_theta_b";

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: EventFileHeader,
}

/// Writes the header on construction and one line per record afterwards.
pub struct EventWriter<W: Write> {
    out: W,
    format: EventFormat,
    written: u64,
}

impl<W: Write> EventWriter<W> {
    pub fn new(mut out: W, format: EventFormat, header: &EventFileHeader) -> Result<Self> {
        let json = serde_json::to_string(&HeaderLine { header: header.clone() })?;
        match format {
            EventFormat::Jsonl => writeln!(out, "{json}")?,
            EventFormat::Csv => {
                writeln!(out, "# {json}")?;
                writeln!(out, "{EVENT_CSV_COLUMNS}")?;
            }
        }
        Ok(Self { out, format, written: 0 })
    }

    pub fn write(&mut self, rec: &EventRecord) -> std::io::Result<()> {
        match self.format {
            EventFormat::Jsonl => {
                serde_json::to_writer(&mut self.out, rec)?;
                writeln!(self.out)?;
            }
            EventFormat::Csv => writeln!(self.out, "{}", csv_row(rec))?,
        }
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

fn csv_row(r: &EventRecord) -> String {
    let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
    let t = r.truth.as_ref();
    let arm = t.and_then(|t| t.which_arm).map(|a| match a {
        ScatteredArm::A => "a",
        ScatteredArm::B => "b",
        ScatteredArm::Both => "both",
    });
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.event_id,
        fmt_sig(r.de_pre_a),
        fmt_sig(r.de_pre_b),
        fmt_sig(r.e_main_a),
        fmt_sig(r.e_main_b),
        r.counter_a,
        r.counter_b,
        fmt_sig(r.e_counter_a),
        fmt_sig(r.e_counter_b),
        r.lost as u8,
        opt(t.and_then(|t| t.prescatter_theta)),
        opt(t.and_then(|t| t.prescatter_phi)),
        arm.unwrap_or(""),
        opt(t.map(|t| t.theta_a)),
        opt(t.map(|t| t.theta_b)),
    )
}

fn parse_csv_row(line: &str, lineno: usize) -> Result<EventRecord> {
    let bad = |m: String| Error::Format { line: lineno, message: m };
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 15 {
        return Err(bad(format!("expected 15 columns, found {}", f.len())));
    }
    let num = |i: usize| f[i].parse::<f64>().map_err(|e| bad(format!("column {}: {e}", i + 1)));
    let int = |i: usize| f[i].parse::<u64>().map_err(|e| bad(format!("column {}: {e}", i + 1)));
    let opt = |i: usize| if f[i].is_empty() { Ok(None) } else { num(i).map(Some) };
    let which_arm = match f[12] {
        "" => None,
        "a" => Some(ScatteredArm::A),
        "b" => Some(ScatteredArm::B),
        "both" => Some(ScatteredArm::Both),
        other => return Err(bad(format!("unknown arm `{other}`"))),
    };
    let truth = match (opt(13)?, opt(14)?) {
        (Some(theta_a), Some(theta_b)) => Some(Truth {
            prescatter_theta: opt(10)?,
            prescatter_phi: opt(11)?,
            which_arm,
            theta_a,
            theta_b,
        }),
        _ => None,
    };
    Ok(EventRecord {
        event_id: int(0)?,
        de_pre_a: num(1)?,
        de_pre_b: num(2)?,
        e_main_a: num(3)?,
        e_main_b: num(4)?,
        counter_a: int(5)? as u32,
        counter_b: int(6)? as u32,
        e_counter_a: num(7)?,
        e_counter_b: num(8)?,
        lost: int(9)? != 0,
        truth,
    })
}

/// Reads an event file of either format; the version is checked on open.
pub struct EventReader<R: BufRead> {
    lines: std::io::Lines<R>,
    format: EventFormat,
    header: EventFileHeader,
    lineno: usize,
}

impl<R: BufRead> EventReader<R> {
    pub fn new(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let first = lines.next().ok_or(Error::Format { line: 1, message: "empty file".into() })??;
        let (format, json) = match first.strip_prefix("# ") {
            Some(rest) => (EventFormat::Csv, rest.to_string()),
            None => (EventFormat::Jsonl, first),
        };
        // check the version before the full schema so newer files fail cleanly
        let raw: serde_json::Value = serde_json::from_str(&json)
            .map_err(|e| Error::Format { line: 1, message: e.to_string() })?;
        let version = raw
            .pointer("/header/format_version")
            .and_then(|v| v.as_str())
            .ok_or(Error::Format { line: 1, message: "missing header.format_version".into() })?;
        check_version(version)?;
        let header: HeaderLine =
            serde_json::from_value(raw).map_err(|e| Error::Format { line: 1, message: e.to_string() })?;
        let mut lineno = 1;
        if format == EventFormat::Csv {
            let cols = lines.next().ok_or(Error::Format { line: 2, message: "missing column line".into() })??;
            lineno += 1;
            if cols.trim() != EVENT_CSV_COLUMNS {
                return Err(Error::Format { line: 2, message: "unexpected CSV columns".into() });
            }
        }
        Ok(Self { lines, format, header: header.header, lineno })
    }

    pub fn header(&self) -> &EventFileHeader {
        &self.header
    }

    pub fn format(&self) -> EventFormat {
        self.format
    }
}

impl<R: BufRead> Iterator for EventReader<R> {
    type Item = Result<EventRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.lineno += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(match self.format {
                EventFormat::Jsonl => serde_json::from_str(&line)
                    .map_err(|e| Error::Format { line: self.lineno, message: e.to_string() }),
                EventFormat::Csv => parse_csv_row(&line, self.lineno),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1.00000000");
        assert_eq!(fmt_sig(255.5), "255.500000");
        assert_eq!(fmt_sig(-0.123456789123), "-0.123456789");
        assert_eq!(fmt_sig(9.9999999996), "10.0000000");
        assert_eq!(fmt_sig(1.5e-7), "1.50000000e-7");
        assert_eq!(fmt_sig(2.0f64 / 3.0), "0.666666667");
    }

    fn sample() -> EventRecord {
        EventRecord {
            event_id: 7,
            de_pre_a: 45.25,
            de_pre_b: 0.0,
            e_main_a: 170.0,
            e_main_b: 255.5,
            counter_a: 3,
            counter_b: 12,
            e_counter_a: 295.75,
            e_counter_b: 255.5,
            lost: false,
            truth: Some(Truth {
                prescatter_theta: Some(0.5),
                prescatter_phi: Some(1.25),
                which_arm: Some(ScatteredArm::A),
                theta_a: 1.5,
                theta_b: 1.625,
            }),
        }
    }

    #[test]
    fn round_trip_both_formats() {
        let cfg = RunConfig::default().resolved().unwrap();
        let header = EventFileHeader::new(&cfg);
        for fmt in [EventFormat::Jsonl, EventFormat::Csv] {
            let mut w = EventWriter::new(Vec::new(), fmt, &header).unwrap();
            let mut lost = sample();
            lost.lost = true;
            lost.truth = None;
            w.write(&sample()).unwrap();
            w.write(&lost).unwrap();
            let bytes = w.finish().unwrap();
            let r = EventReader::new(bytes.as_slice()).unwrap();
            assert_eq!(r.format(), fmt);
            assert_eq!(r.header(), &header);
            let recs: Vec<_> = r.map(|x| x.unwrap()).collect();
            assert_eq!(recs, vec![sample(), lost]);
        }
    }

    #[test]
    fn major_version_checked() {
        let cfg = RunConfig::default().resolved().unwrap();
        let mut header = EventFileHeader::new(&cfg);
        header.format_version = "2.0.0".into();
        let bytes = EventWriter::new(Vec::new(), EventFormat::Jsonl, &header).unwrap().finish().unwrap();
        assert!(matches!(EventReader::new(bytes.as_slice()), Err(Error::VersionMismatch { .. })));
        header.format_version = "1.4.2".into();
        let bytes = EventWriter::new(Vec::new(), EventFormat::Jsonl, &header).unwrap().finish().unwrap();
        assert!(EventReader::new(bytes.as_slice()).is_ok());
    }

    #[test]
    fn digest_depends_on_config() {
        let a = RunConfig::default().resolved().unwrap();
        let mut b = a.clone();
        b.source.seed += 1;
        assert_eq!(generator_digest(&a), generator_digest(&a.clone()));
        assert_ne!(generator_digest(&a), generator_digest(&b));
        assert_eq!(generator_digest(&a).len(), 16);
    }
}
