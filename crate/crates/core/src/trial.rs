//! Raw-trial records and the CSV schema shared by model runs and human sessions.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::taxonomy::Category;

/// Exact header line of raw-trial CSV files.
pub const CSV_HEADER: &str = "experiment,subject_or_run,session,block,trial,image_id,condition,true_category,response,rt_ms,is_practice";

/// What was recorded for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Response {
    Category(Category),
    /// The response window expired without a click (`na`).
    NoResponse,
    /// The model adapter failed for this stimulus (`adapter_error`).
    AdapterError,
}

impl Response {
    pub fn category(self) -> Option<Category> {
        match self {
            Response::Category(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Response::Category(c) => f.write_str(c.name()),
            Response::NoResponse => f.write_str("na"),
            Response::AdapterError => f.write_str("adapter_error"),
        }
    }
}

impl FromStr for Response {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "na" => Ok(Response::NoResponse),
            "adapter_error" => Ok(Response::AdapterError),
            other => Ok(Response::Category(other.parse()?)),
        }
    }
}

impl Serialize for Response {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Response {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

mod rt_format {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<u32>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(ms) => s.serialize_u32(*ms),
            None => s.serialize_str("na"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u32>, D::Error> {
        let s = String::deserialize(d)?;
        if s == "na" {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(serde::de::Error::custom)
        }
    }
}

/// One row of a raw-trial CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRow {
    pub experiment: String,
    pub subject_or_run: String,
    pub session: u32,
    pub block: u32,
    pub trial: u32,
    pub image_id: String,
    pub condition: String,
    pub true_category: Category,
    pub response: Response,
    #[serde(with = "rt_format")]
    pub rt_ms: Option<u32>,
    pub is_practice: bool,
}

impl TrialRow {
    pub fn is_correct(&self) -> bool {
        self.response == Response::Category(self.true_category)
    }

    /// Main-experiment trial with a usable outcome (adapter failures are excluded).
    pub fn counts_for_analysis(&self) -> bool {
        !self.is_practice && self.response != Response::AdapterError
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[TrialRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn to_csv_string(rows: &[TrialRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Reads a raw-trial CSV, checking the header byte-for-byte.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<TrialRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::parse("trial csv", format!("unexpected header {:?}", header.join(","))));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(response: Response, rt: Option<u32>) -> TrialRow {
        TrialRow {
            experiment: "uniform_noise".into(),
            subject_or_run: "subject-01".into(),
            session: 1,
            block: 2,
            trial: 17,
            image_id: "n02084071_1.JPEG".into(),
            condition: "0.35".into(),
            true_category: Category::Dog,
            response,
            rt_ms: rt,
            is_practice: false,
        }
    }

    #[test]
    fn header_and_encoding_are_exact() {
        let rows = vec![row(Response::Category(Category::Cat), Some(812)), row(Response::NoResponse, None), row(Response::AdapterError, None)];
        let text = to_csv_string(&rows).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(lines.next().unwrap(), "uniform_noise,subject-01,1,2,17,n02084071_1.JPEG,0.35,dog,cat,812,false");
        assert_eq!(lines.next().unwrap(), "uniform_noise,subject-01,1,2,17,n02084071_1.JPEG,0.35,dog,na,na,false");
        assert_eq!(lines.next().unwrap(), "uniform_noise,subject-01,1,2,17,n02084071_1.JPEG,0.35,dog,adapter_error,na,false");
        assert_eq!(read_csv(text.as_bytes()).unwrap(), rows);
    }

    #[test]
    fn empty_output_still_has_header() {
        assert_eq!(to_csv_string(&[]).unwrap().trim_end(), CSV_HEADER);
        assert!(read_csv(to_csv_string(&[]).unwrap().as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
        let bad = format!("{CSV_HEADER}\nx,s,1,1,1,i,c,spoon,na,na,false\n");
        assert!(read_csv(bad.as_bytes()).is_err());
    }
}
