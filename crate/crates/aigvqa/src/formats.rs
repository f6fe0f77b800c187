//! Readers and writers for the interchange files: ratings and MOS CSV,
//! win-rate CSV, JSON Lines records and rounded JSON reports.
//!
//! Every writer replaces its target atomically.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use aigvqa_core::pairstudy::WinRateRow;
use aigvqa_core::subjective::{MosRecord, RawRating};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::store::write_atomic;

pub const RATINGS_HEADER: [&str; 4] = ["subject_id", "video_id", "dimension", "score"];
pub const MOS_HEADER: [&str; 4] = ["video_id", "dimension", "mos", "rater_count"];
pub const WIN_RATE_HEADER: [&str; 7] = [
    "model_id",
    "dimension",
    "category",
    "wins",
    "losses",
    "ties",
    "win_rate",
];

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_csv<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let found = reader.headers().map_err(|e| Error::csv(path, e))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Data(format!(
            "{}: header {:?}, expected {}",
            path.display(),
            found.iter().collect::<Vec<_>>(),
            header.join(",")
        )));
    }
    reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| Error::csv(path, e))
}

fn csv_bytes<R: AsRef<[u8]>>(header: &[&str], rows: impl IntoIterator<Item = Vec<R>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn read_ratings_csv(path: &Path) -> Result<Vec<RawRating>> {
    read_csv(path, &RATINGS_HEADER)
}

/// Ratings as CSV rows, optionally without the header line (for appending).
pub fn ratings_csv_bytes(ratings: &[RawRating], with_header: bool) -> Vec<u8> {
    let rows = ratings.iter().map(|r| {
        vec![
            r.subject_id.clone(),
            r.video_id.clone(),
            r.dimension.to_string(),
            r.score.to_string(),
        ]
    });
    let bytes = csv_bytes(&RATINGS_HEADER, rows);
    if with_header {
        bytes
    } else {
        let skip = bytes.iter().position(|&b| b == b'\n').map_or(0, |i| i + 1);
        bytes[skip..].to_vec()
    }
}

pub fn write_ratings_csv(path: &Path, ratings: &[RawRating]) -> Result<()> {
    write_file(path, &ratings_csv_bytes(ratings, true))
}

pub fn read_mos_csv(path: &Path) -> Result<Vec<MosRecord>> {
    read_csv(path, &MOS_HEADER)
}

/// MOS values are printed with six decimals.
pub fn mos_csv_bytes(records: &[MosRecord]) -> Vec<u8> {
    let rows = records.iter().map(|r| {
        vec![
            r.video_id.clone(),
            r.dimension.to_string(),
            format!("{:.6}", r.mos),
            r.rater_count.to_string(),
        ]
    });
    csv_bytes(&MOS_HEADER, rows)
}

pub fn write_mos_csv(path: &Path, records: &[MosRecord]) -> Result<()> {
    write_file(path, &mos_csv_bytes(records))
}

pub fn win_rate_csv_bytes(rows: &[WinRateRow]) -> Vec<u8> {
    let rows = rows.iter().map(|r| {
        vec![
            r.model_id.clone(),
            r.dimension.to_string(),
            r.category.clone(),
            r.wins.to_string(),
            r.losses.to_string(),
            r.ties.to_string(),
            format!("{:.6}", r.win_rate),
        ]
    });
    csv_bytes(&WIN_RATE_HEADER, rows)
}

pub fn write_win_rate_csv(path: &Path, rows: &[WinRateRow]) -> Result<()> {
    write_file(path, &win_rate_csv_bytes(rows))
}

/// One JSON value per line; blank lines are skipped.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn jsonl_bytes<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("records serialize");
        out.push(b'\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_file(path, &jsonl_bytes(items))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        line: 0,
        source,
    })
}

pub fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// `value` as JSON with every non-integer number rounded to six decimals.
pub fn rounded_json<T: Serialize>(value: &T) -> serde_json::Value {
    fn walk(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Number(n) if n.is_f64() => {
                let x = round6(n.as_f64().unwrap());
                *v = serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number);
            }
            serde_json::Value::Array(items) => items.iter_mut().for_each(walk),
            serde_json::Value::Object(map) => map.values_mut().for_each(walk),
            _ => {}
        }
    }
    let mut v = serde_json::to_value(value).expect("reports serialize");
    walk(&mut v);
    v
}

/// Pretty JSON report with six-decimal numbers and a trailing newline.
pub fn report_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&rounded_json(value)).expect("reports serialize");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use aigvqa_core::Dimension;

    #[test]
    fn mos_csv_has_six_decimals() {
        let r = MosRecord {
            video_id: "v,1".into(),
            dimension: Dimension::Tv,
            mos: 38.21493620840,
            rater_count: 1,
        };
        let text = String::from_utf8(mos_csv_bytes(&[r])).unwrap();
        assert_eq!(text, "video_id,dimension,mos,rater_count\n\"v,1\",tv,38.214936,1\n");
    }

    #[test]
    fn ratings_without_header() {
        let r = RawRating {
            subject_id: "s".into(),
            video_id: "v".into(),
            dimension: Dimension::Static,
            score: 4,
        };
        assert_eq!(ratings_csv_bytes(std::slice::from_ref(&r), false), b"s,v,static,4\n");
        assert!(ratings_csv_bytes(&[r], true).starts_with(b"subject_id,video_id,dimension,score\n"));
    }

    #[test]
    fn rounding_leaves_integers_alone() {
        let v = rounded_json(&serde_json::json!({"a": 0.123456789, "b": [1, 2.0000004], "c": 7}));
        assert_eq!(v, serde_json::json!({"a": 0.123457, "b": [1, 2.0], "c": 7}));
    }

    #[test]
    fn csv_and_jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ratings: Vec<RawRating> = (0..6)
            .map(|i| RawRating {
                subject_id: format!("s{}", i % 2),
                video_id: format!("v{i}"),
                dimension: Dimension::ALL[i % 4],
                score: (i % 5 + 1) as u8,
            })
            .collect();
        let p = dir.path().join("r.csv");
        write_ratings_csv(&p, &ratings).unwrap();
        assert_eq!(read_ratings_csv(&p).unwrap(), ratings);
        let j = dir.path().join("r.jsonl");
        write_jsonl(&j, &ratings).unwrap();
        assert_eq!(read_jsonl::<RawRating>(&j).unwrap(), ratings);
    }

    #[test]
    fn wrong_header_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "a,b,c,d\n").unwrap();
        assert!(matches!(read_ratings_csv(&p), Err(Error::Data(_))));
        assert_eq!(
            read_ratings_csv(&dir.path().join("missing.csv"))
                .unwrap_err()
                .exit_code(),
            3
        );
    }
}
