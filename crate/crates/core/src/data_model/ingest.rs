use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::{format_timestamp, parse_timestamp, BookingRecord};
use crate::{Error, Result};

/// Separator between shipment codes inside the `shc` cell.
pub const SHC_SEPARATOR: char = ';';

/// Column names used when reading booking CSV files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemaOptions {
    pub booking_id: String,
    pub booking_time: String,
    pub departure_time: String,
    pub origin: String,
    pub destination: String,
    pub agent: String,
    pub product: String,
    pub shc: String,
    pub pieces: String,
    pub bkvol: String,
    pub bkwt: String,
    pub rcsvol: String,
}

impl Default for SchemaOptions {
    fn default() -> Self {
        Self {
            booking_id: "booking_id".into(),
            booking_time: "booking_time".into(),
            departure_time: "departure_time".into(),
            origin: "origin".into(),
            destination: "destination".into(),
            agent: "agent".into(),
            product: "product".into(),
            shc: "shc".into(),
            pieces: "pieces".into(),
            bkvol: "bkvol".into(),
            bkwt: "bkwt".into(),
            rcsvol: "rcsvol".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    /// Booking time after departure time.
    TimeOrder,
    /// Negative or non-finite volume/weight, or fewer than one piece.
    InvalidNumeric,
    /// A required cell is empty.
    MissingField,
    /// Malformed row: bad field count, bad encoding, or a value that does not parse.
    Unparseable,
}

impl DropReason {
    pub const ALL: [DropReason; 4] = [
        DropReason::TimeOrder,
        DropReason::InvalidNumeric,
        DropReason::MissingField,
        DropReason::Unparseable,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub records_kept: usize,
    pub dropped: BTreeMap<DropReason, usize>,
}

impl Default for IngestReport {
    fn default() -> Self {
        Self {
            rows_read: 0,
            records_kept: 0,
            dropped: DropReason::ALL.iter().map(|r| (*r, 0)).collect(),
        }
    }
}

impl IngestReport {
    pub fn total_dropped(&self) -> usize {
        self.dropped.values().sum()
    }

    pub fn dropped_for(&self, reason: DropReason) -> usize {
        self.dropped.get(&reason).copied().unwrap_or(0)
    }

    fn drop_row(&mut self, reason: DropReason) {
        *self.dropped.entry(reason).or_insert(0) += 1;
    }
}

struct Columns {
    booking_id: Option<usize>,
    booking_time: usize,
    departure_time: usize,
    origin: Option<usize>,
    destination: Option<usize>,
    agent: Option<usize>,
    product: usize,
    shc: Option<usize>,
    pieces: Option<usize>,
    bkvol: usize,
    bkwt: Option<usize>,
    rcsvol: Option<usize>,
}

impl Columns {
    fn resolve(header: &csv::StringRecord, schema: &SchemaOptions) -> Result<Self> {
        let index: HashMap<&str, usize> = header
            .iter()
            .enumerate()
            .map(|(i, name)| (name.trim(), i))
            .collect();
        let optional = |name: &str| index.get(name).copied();
        let required = |name: &str| {
            index.get(name).copied().ok_or_else(|| {
                Error::InvalidInput(format!("required column `{name}` not found in header"))
            })
        };
        Ok(Self {
            booking_id: optional(&schema.booking_id),
            booking_time: required(&schema.booking_time)?,
            departure_time: required(&schema.departure_time)?,
            origin: optional(&schema.origin),
            destination: optional(&schema.destination),
            agent: optional(&schema.agent),
            product: required(&schema.product)?,
            shc: optional(&schema.shc),
            pieces: optional(&schema.pieces),
            bkvol: required(&schema.bkvol)?,
            bkwt: optional(&schema.bkwt),
            rcsvol: optional(&schema.rcsvol),
        })
    }

    fn parse(&self, row: &csv::StringRecord) -> std::result::Result<BookingRecord, DropReason> {
        let cell = |i: usize| row.get(i).map(str::trim).unwrap_or("");
        let opt_cell = |i: Option<usize>| i.map(cell).unwrap_or("");
        let required = |i: usize| match cell(i) {
            "" => Err(DropReason::MissingField),
            s => Ok(s),
        };

        let booking_time = required(self.booking_time)?;
        let departure_time = required(self.departure_time)?;
        let product = required(self.product)?;
        let bkvol = required(self.bkvol)?;

        let number = |s: &str| s.parse::<f64>().map_err(|_| DropReason::Unparseable);
        let optional_number = |s: &str| match s {
            "" => Ok(None),
            s => number(s).map(Some),
        };

        let pieces = match opt_cell(self.pieces) {
            "" => 1,
            s => {
                let n: i64 = s.parse().map_err(|_| DropReason::Unparseable)?;
                if n < 1 {
                    return Err(DropReason::InvalidNumeric);
                }
                u32::try_from(n).map_err(|_| DropReason::InvalidNumeric)?
            }
        };

        let record = BookingRecord {
            booking_id: opt_cell(self.booking_id).to_string(),
            booking_time: parse_timestamp(booking_time).ok_or(DropReason::Unparseable)?,
            departure_time: parse_timestamp(departure_time).ok_or(DropReason::Unparseable)?,
            origin: opt_cell(self.origin).to_string(),
            destination: opt_cell(self.destination).to_string(),
            agent: opt_cell(self.agent).to_string(),
            product_type: product.to_string(),
            shipment_codes: parse_codes(opt_cell(self.shc)),
            pieces,
            bkvol: number(bkvol)?,
            bkwt: optional_number(opt_cell(self.bkwt))?.unwrap_or(0.0),
            rcsvol: optional_number(opt_cell(self.rcsvol))?,
        };
        record.validate()?;
        Ok(record)
    }
}

fn parse_codes(s: &str) -> BTreeSet<String> {
    s.split(SHC_SEPARATOR)
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .map(str::to_string)
        .collect()
}

/// Reads booking records from a CSV file.
///
/// Rows that fail validation are dropped and counted in the report. Only an
/// unreadable file or a header lacking a required column is fatal.
pub fn ingest_csv(
    path: impl AsRef<Path>,
    schema: &SchemaOptions,
) -> Result<(Vec<BookingRecord>, IngestReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, schema).map_err(|e| match e {
        Error::Csv(err) if err.is_io_error() => {
            Error::InvalidInput(format!("{}: {err}", path.display()))
        }
        other => other,
    })
}

pub fn ingest_reader<R: Read>(
    reader: R,
    schema: &SchemaOptions,
) -> Result<(Vec<BookingRecord>, IngestReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let columns = Columns::resolve(&header, schema)?;

    let mut report = IngestReport::default();
    let mut records = Vec::new();
    let mut row = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {
                report.rows_read += 1;
                if row.len() != header.len() {
                    report.drop_row(DropReason::Unparseable);
                    continue;
                }
                match columns.parse(&row) {
                    Ok(record) => records.push(record),
                    Err(reason) => report.drop_row(reason),
                }
            }
            Err(err) if err.is_io_error() => return Err(err.into()),
            Err(_) => {
                report.rows_read += 1;
                report.drop_row(DropReason::Unparseable);
            }
        }
    }
    report.records_kept = records.len();
    Ok((records, report))
}

/// Writes records in the default schema. Output re-ingests to identical records.
pub fn write_records<W: Write>(writer: W, records: &[BookingRecord]) -> Result<()> {
    let schema = SchemaOptions::default();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        &schema.booking_id,
        &schema.booking_time,
        &schema.departure_time,
        &schema.origin,
        &schema.destination,
        &schema.agent,
        &schema.product,
        &schema.shc,
        &schema.pieces,
        &schema.bkvol,
        &schema.bkwt,
        &schema.rcsvol,
    ])?;
    for r in records {
        let codes: Vec<&str> = r.shipment_codes.iter().map(String::as_str).collect();
        w.write_record([
            r.booking_id.clone(),
            format_timestamp(r.booking_time),
            format_timestamp(r.departure_time),
            r.origin.clone(),
            r.destination.clone(),
            r.agent.clone(),
            r.product_type.clone(),
            codes.join(&SHC_SEPARATOR.to_string()),
            r.pieces.to_string(),
            r.bkvol.to_string(),
            r.bkwt.to_string(),
            r.rcsvol.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_csv(path: impl AsRef<Path>, records: &[BookingRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(std::io::BufWriter::new(file), records)
}
