//! Raw record tables: schemas, loading, validation and the user selection
//! filters (activity ratio and outlier trim).
//!
//! Tables are read from JSON-lines or CSV files with identical column names.
//! Rows that violate a record invariant are rejected with a logged reason;
//! only file-level problems (unreadable file, missing column, duplicate
//! primary key) abort a load. Every table handed out by this module is sorted
//! by primary key.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Users,
    Photos,
    Comments,
}

impl TableKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TableKind::Users => "users",
            TableKind::Photos => "photos",
            TableKind::Comments => "comments",
        }
    }
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    pub occupation: String,
    pub total_photos: u64,
    pub join_date: NaiveDate,
    pub following_count: u64,
    pub groups_count: u64,
    pub is_pro: bool,
    /// Photos uploaded during the collection month.
    pub photos_in_window: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoRecord {
    pub photo_id: String,
    pub user_id: String,
    pub upload_date: NaiveDate,
    pub last_update_date: NaiveDate,
    pub groups_count: u64,
    pub views: u64,
    pub favourites: u64,
    pub nima_technical: f64,
    pub nima_aesthetic: f64,
    pub kong_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentRecord {
    pub comment_id: String,
    pub photo_id: String,
    pub raw_text: String,
}

/// A calendar month, written `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CalendarMonth {
    pub year: i32,
    pub month: u32,
}

impl CalendarMonth {
    pub fn contains(&self, date: NaiveDate) -> bool {
        date.year() == self.year && date.month() == self.month
    }
}

impl fmt::Display for CalendarMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for CalendarMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("`{s}` is not a YYYY-MM month"));
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) {
            return Err(bad());
        }
        Ok(CalendarMonth { year, month })
    }
}

impl Serialize for CalendarMonth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CalendarMonth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnapshotConfig {
    /// Date against which "days since" features are measured.
    pub reference_date: NaiveDate,
    /// Collection month that `photos_in_window` refers to.
    pub window: CalendarMonth,
    /// Users whose window share of uploads reaches this ratio are dropped.
    pub activity_ratio_cutoff: f64,
    /// Fraction trimmed from each end of the total-photos distribution.
    pub trim_fraction: f64,
}

impl Default for SnapshotConfig {
    fn default() -> Self {
        SnapshotConfig {
            reference_date: NaiveDate::from_ymd_opt(2021, 12, 31).expect("valid date"),
            window: CalendarMonth { year: 2021, month: 12 },
            activity_ratio_cutoff: 0.20,
            trim_fraction: 0.05,
        }
    }
}

impl SnapshotConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.trim_fraction > 0.0 && self.trim_fraction < 0.5) {
            return Err(Error::Config(format!(
                "trim_fraction must lie in (0, 0.5), got {}",
                self.trim_fraction
            )));
        }
        if !(self.activity_ratio_cutoff > 0.0 && self.activity_ratio_cutoff <= 1.0) {
            return Err(Error::Config(format!(
                "activity_ratio_cutoff must lie in (0, 1], got {}",
                self.activity_ratio_cutoff
            )));
        }
        Ok(())
    }
}

/// Whole days from `date` to the reference date.
pub fn days_since(date: NaiveDate, cfg: &SnapshotConfig) -> Result<u64> {
    let days = (cfg.reference_date - date).num_days();
    if days < 0 {
        return Err(Error::DateAfterReference {
            date,
            reference: cfg.reference_date,
        });
    }
    Ok(days as u64)
}

/// A row that failed validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub table: TableKind,
    /// 1-based data row number in the source file, when the row came from one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub key: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table<T> {
    pub rows: Vec<T>,
    pub rejects: Vec<Reject>,
}

impl<T> Table<T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// One input row, independent of the file format it came from.
enum RawRow<'a> {
    Json(&'a serde_json::Map<String, Value>),
    Csv {
        index: &'a HashMap<String, usize>,
        record: &'a csv::StringRecord,
    },
}

enum Cell<'a> {
    Json(&'a Value),
    Text(&'a str),
}

impl<'a> RawRow<'a> {
    fn cell(&self, col: &str) -> Result<Cell<'a>, String> {
        let missing = || format!("missing field `{col}`");
        match self {
            RawRow::Json(map) => match map.get(col) {
                None | Some(Value::Null) => Err(missing()),
                Some(v) => Ok(Cell::Json(v)),
            },
            RawRow::Csv { index, record } => index
                .get(col)
                .and_then(|&i| record.get(i))
                .map(Cell::Text)
                .ok_or_else(missing),
        }
    }

    fn text(&self, col: &str) -> Result<String, String> {
        match self.cell(col)? {
            Cell::Json(Value::String(s)) => Ok(s.clone()),
            Cell::Json(Value::Number(n)) => Ok(n.to_string()),
            Cell::Json(_) => Err(format!("field `{col}` is not a string")),
            Cell::Text(s) => Ok(s.to_string()),
        }
    }

    fn optional_text(&self, col: &str) -> Result<String, String> {
        match self {
            RawRow::Json(map) if matches!(map.get(col), Some(Value::Null)) => Ok(String::new()),
            _ => self.text(col),
        }
    }

    fn count(&self, col: &str) -> Result<u64, String> {
        let value: f64 = match self.cell(col)? {
            Cell::Json(Value::Number(n)) => {
                if let Some(i) = n.as_i64() {
                    i as f64
                } else if let Some(u) = n.as_u64() {
                    return Ok(u);
                } else {
                    n.as_f64().unwrap_or(f64::NAN)
                }
            }
            Cell::Json(Value::String(s)) => parse_number(col, s)?,
            Cell::Json(_) => return Err(format!("field `{col}` is not a number")),
            Cell::Text(s) => parse_number(col, s)?,
        };
        if value < 0.0 {
            return Err("negative count".to_string());
        }
        if !value.is_finite() || value.fract() != 0.0 {
            return Err(format!("field `{col}` is not a whole count"));
        }
        Ok(value as u64)
    }

    fn real(&self, col: &str) -> Result<f64, String> {
        let value = match self.cell(col)? {
            Cell::Json(Value::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
            Cell::Json(Value::String(s)) => parse_number(col, s)?,
            Cell::Json(_) => return Err(format!("field `{col}` is not a number")),
            Cell::Text(s) => parse_number(col, s)?,
        };
        if !value.is_finite() {
            return Err(format!("field `{col}` is not finite"));
        }
        Ok(value)
    }

    fn flag(&self, col: &str) -> Result<bool, String> {
        let text = match self.cell(col)? {
            Cell::Json(Value::Bool(b)) => return Ok(*b),
            Cell::Json(Value::Number(n)) => n.to_string(),
            Cell::Json(Value::String(s)) => s.clone(),
            Cell::Json(_) => return Err(format!("field `{col}` is not a boolean")),
            Cell::Text(s) => s.to_string(),
        };
        match text.trim().to_ascii_lowercase().as_str() {
            "true" | "1" => Ok(true),
            "false" | "0" => Ok(false),
            _ => Err(format!("field `{col}` is not a boolean")),
        }
    }

    fn date(&self, col: &str) -> Result<NaiveDate, String> {
        let text = self.text(col)?;
        NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d")
            .map_err(|_| format!("field `{col}` is not a YYYY-MM-DD date"))
    }
}

fn parse_number(col: &str, s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("field `{col}` is not a number"))
}

/// A record type that can be loaded from and written to a table file.
pub trait Record: Sized + Clone + Serialize + Send + Sync {
    const KIND: TableKind;
    const COLUMNS: &'static [&'static str];

    fn key(&self) -> &str;

    #[doc(hidden)]
    fn from_row(row: &RawRowRef<'_>) -> Result<Self, String>;
}

/// Opaque handle passed to [`Record::from_row`].
pub struct RawRowRef<'a>(RawRow<'a>);

impl Record for UserRecord {
    const KIND: TableKind = TableKind::Users;
    const COLUMNS: &'static [&'static str] = &[
        "user_id",
        "occupation",
        "total_photos",
        "join_date",
        "following_count",
        "groups_count",
        "is_pro",
        "photos_in_window",
    ];

    fn key(&self) -> &str {
        &self.user_id
    }

    fn from_row(row: &RawRowRef<'_>) -> Result<Self, String> {
        let r = &row.0;
        let user = UserRecord {
            user_id: r.text("user_id")?,
            occupation: r.optional_text("occupation")?,
            total_photos: r.count("total_photos")?,
            join_date: r.date("join_date")?,
            following_count: r.count("following_count")?,
            groups_count: r.count("groups_count")?,
            is_pro: r.flag("is_pro")?,
            photos_in_window: r.count("photos_in_window")?,
        };
        if user.user_id.is_empty() {
            return Err("empty user_id".into());
        }
        if user.photos_in_window > user.total_photos {
            return Err("photos_in_window exceeds total_photos".into());
        }
        Ok(user)
    }
}

impl Record for PhotoRecord {
    const KIND: TableKind = TableKind::Photos;
    const COLUMNS: &'static [&'static str] = &[
        "photo_id",
        "user_id",
        "upload_date",
        "last_update_date",
        "groups_count",
        "views",
        "favourites",
        "nima_technical",
        "nima_aesthetic",
        "kong_score",
    ];

    fn key(&self) -> &str {
        &self.photo_id
    }

    fn from_row(row: &RawRowRef<'_>) -> Result<Self, String> {
        let r = &row.0;
        let photo = PhotoRecord {
            photo_id: r.text("photo_id")?,
            user_id: r.text("user_id")?,
            upload_date: r.date("upload_date")?,
            last_update_date: r.date("last_update_date")?,
            groups_count: r.count("groups_count")?,
            views: r.count("views")?,
            favourites: r.count("favourites")?,
            nima_technical: r.real("nima_technical")?,
            nima_aesthetic: r.real("nima_aesthetic")?,
            kong_score: r.real("kong_score")?,
        };
        if photo.photo_id.is_empty() {
            return Err("empty photo_id".into());
        }
        if photo.last_update_date < photo.upload_date {
            return Err("last_update_date precedes upload_date".into());
        }
        for (name, v) in [
            ("nima_technical", photo.nima_technical),
            ("nima_aesthetic", photo.nima_aesthetic),
        ] {
            if !(1.0..=10.0).contains(&v) {
                return Err(format!("{name} outside [1, 10]"));
            }
        }
        if !(0.0..=1.0).contains(&photo.kong_score) {
            return Err("kong_score outside [0, 1]".into());
        }
        Ok(photo)
    }
}

impl Record for CommentRecord {
    const KIND: TableKind = TableKind::Comments;
    const COLUMNS: &'static [&'static str] = &["comment_id", "photo_id", "raw_text"];

    fn key(&self) -> &str {
        &self.comment_id
    }

    fn from_row(row: &RawRowRef<'_>) -> Result<Self, String> {
        let r = &row.0;
        let comment = CommentRecord {
            comment_id: r.text("comment_id")?,
            photo_id: r.text("photo_id")?,
            raw_text: r.optional_text("raw_text")?,
        };
        if comment.comment_id.is_empty() {
            return Err("empty comment_id".into());
        }
        Ok(comment)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Loads a table from a `.csv` file or, for any other extension, JSON lines.
///
/// The returned rows are sorted by primary key. Rows violating a record
/// invariant land in `rejects` with their 1-based row number.
pub fn load_table<T: Record>(path: impl AsRef<Path>) -> Result<Table<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut rejects = Vec::new();
    let mut push = |line: usize, parsed: Result<T, String>| match parsed {
        Ok(rec) => rows.push(rec),
        Err(reason) => rejects.push(Reject {
            table: T::KIND,
            line: Some(line),
            key: None,
            reason,
        }),
    };

    if is_csv(path) {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(BufReader::new(file));
        let headers = reader.headers()?.clone();
        let index: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        if let Some(col) = T::COLUMNS.iter().find(|c| !index.contains_key(**c)) {
            return Err(Error::MissingColumn {
                path: path.to_path_buf(),
                column: col.to_string(),
            });
        }
        for (i, record) in reader.records().enumerate() {
            let line = i + 1;
            match record {
                Ok(record) => push(
                    line,
                    T::from_row(&RawRowRef(RawRow::Csv {
                        index: &index,
                        record: &record,
                    })),
                ),
                Err(e) => push(line, Err(format!("malformed csv row: {e}"))),
            }
        }
    } else {
        let mut checked_columns = false;
        let mut line = 0;
        for text in BufReader::new(file).lines() {
            let text = text.map_err(|e| Error::io(path, e))?;
            if text.trim().is_empty() {
                continue;
            }
            line += 1;
            let value: Value = match serde_json::from_str(&text) {
                Ok(v) => v,
                Err(e) => {
                    push(line, Err(format!("malformed json: {e}")));
                    continue;
                }
            };
            let Value::Object(map) = value else {
                push(line, Err("row is not a json object".into()));
                continue;
            };
            if !checked_columns {
                if let Some(col) = T::COLUMNS.iter().find(|c| !map.contains_key(**c)) {
                    return Err(Error::MissingColumn {
                        path: path.to_path_buf(),
                        column: col.to_string(),
                    });
                }
                checked_columns = true;
            }
            push(line, T::from_row(&RawRowRef(RawRow::Json(&map))));
        }
    }

    rows.sort_by(|a, b| a.key().cmp(b.key()));
    if let Some(w) = rows.windows(2).find(|w| w[0].key() == w[1].key()) {
        return Err(Error::DuplicateKey {
            path: path.to_path_buf(),
            kind: T::KIND.as_str(),
            key: w[0].key().to_string(),
        });
    }
    Ok(Table { rows, rejects })
}

/// Writes rows as CSV (for a `.csv` path) or JSON lines.
pub fn write_table<T: Record>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    if is_csv(path) {
        let mut w = csv::Writer::from_path(path)?;
        if rows.is_empty() {
            w.write_record(T::COLUMNS)?;
        }
        for row in rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    } else {
        write_jsonl(path, rows)
    }
}

/// Writes any serializable rows as JSON lines.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads JSON lines written by [`write_jsonl`]. Any malformed line is an error.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, text) in BufReader::new(file).lines().enumerate() {
        let text = text.map_err(|e| Error::io(path, e))?;
        if text.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", i + 1),
        })?);
    }
    Ok(out)
}

/// Keeps users whose share of uploads inside the collection window is below
/// the cutoff. Users without any uploads are removed.
pub fn filter_min_activity(users: &[UserRecord], cfg: &SnapshotConfig) -> Vec<UserRecord> {
    users
        .iter()
        .filter(|u| {
            u.total_photos > 0 && (u.photos_in_window as f64 / u.total_photos as f64) < cfg.activity_ratio_cutoff
        })
        .cloned()
        .collect()
}

/// Removes `floor(trim_fraction * n)` users from each end of the
/// total-photos ranking. Ties are ranked by `user_id`. Output is sorted by
/// `user_id`.
pub fn trim_outliers(users: &[UserRecord], cfg: &SnapshotConfig) -> Vec<UserRecord> {
    let n = users.len();
    let cut = (cfg.trim_fraction * n as f64).floor() as usize;
    let mut ranked: Vec<&UserRecord> = users.iter().collect();
    ranked.sort_by(|a, b| {
        a.total_photos
            .cmp(&b.total_photos)
            .then_with(|| a.user_id.cmp(&b.user_id))
    });
    let mut kept: Vec<UserRecord> = ranked[cut..n - cut].iter().map(|u| (*u).clone()).collect();
    kept.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    kept
}

/// Output of [`ingest`]: filtered, referentially consistent tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub users: Vec<UserRecord>,
    pub photos: Vec<PhotoRecord>,
    pub comments: Vec<CommentRecord>,
    pub rejects: Vec<Reject>,
    pub summary: IngestSummary,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub users_loaded: usize,
    pub users_after_activity_filter: usize,
    pub users_after_trim: usize,
    pub photos_loaded: usize,
    pub photos_retained: usize,
    pub comments_loaded: usize,
    pub comments_retained: usize,
    pub rejected_rows: usize,
}

/// Validates cross-table references and dates, applies the activity filter
/// and outlier trim, and drops photos and comments of removed users.
pub fn ingest(
    users: Table<UserRecord>,
    photos: Table<PhotoRecord>,
    comments: Table<CommentRecord>,
    cfg: &SnapshotConfig,
) -> Result<Ingested> {
    cfg.validate()?;
    let mut rejects: Vec<Reject> = users
        .rejects
        .into_iter()
        .chain(photos.rejects)
        .chain(comments.rejects)
        .collect();
    let mut summary = IngestSummary {
        users_loaded: users.rows.len(),
        photos_loaded: photos.rows.len(),
        comments_loaded: comments.rows.len(),
        ..Default::default()
    };
    let reject = |table, key: &str, reason: &str| Reject {
        table,
        line: None,
        key: Some(key.to_string()),
        reason: reason.to_string(),
    };

    let mut valid_users = Vec::with_capacity(users.rows.len());
    for u in users.rows {
        if u.join_date > cfg.reference_date {
            rejects.push(reject(TableKind::Users, &u.user_id, "join_date after reference_date"));
        } else {
            valid_users.push(u);
        }
    }
    let known_users: HashSet<&str> = valid_users.iter().map(|u| u.user_id.as_str()).collect();
    let mut valid_photos = Vec::with_capacity(photos.rows.len());
    for p in photos.rows {
        if !known_users.contains(p.user_id.as_str()) {
            rejects.push(reject(TableKind::Photos, &p.photo_id, "unknown user_id"));
        } else if p.last_update_date > cfg.reference_date {
            rejects.push(reject(TableKind::Photos, &p.photo_id, "date after reference_date"));
        } else {
            valid_photos.push(p);
        }
    }
    let known_photos: HashSet<&str> = valid_photos.iter().map(|p| p.photo_id.as_str()).collect();
    let mut valid_comments = Vec::with_capacity(comments.rows.len());
    for c in comments.rows {
        if known_photos.contains(c.photo_id.as_str()) {
            valid_comments.push(c);
        } else {
            rejects.push(reject(TableKind::Comments, &c.comment_id, "unknown photo_id"));
        }
    }

    let active = filter_min_activity(&valid_users, cfg);
    summary.users_after_activity_filter = active.len();
    let kept = trim_outliers(&active, cfg);
    summary.users_after_trim = kept.len();

    let kept_ids: HashSet<&str> = kept.iter().map(|u| u.user_id.as_str()).collect();
    valid_photos.retain(|p| kept_ids.contains(p.user_id.as_str()));
    let kept_photos: HashSet<&str> = valid_photos.iter().map(|p| p.photo_id.as_str()).collect();
    valid_comments.retain(|c| kept_photos.contains(c.photo_id.as_str()));
    summary.photos_retained = valid_photos.len();
    summary.comments_retained = valid_comments.len();
    summary.rejected_rows = rejects.len();

    Ok(Ingested {
        users: kept,
        photos: valid_photos,
        comments: valid_comments,
        rejects,
        summary,
    })
}

/// Groups rows by a foreign key, preserving input order within each group.
pub(crate) fn group_by<'a, T, F>(rows: &'a [T], key: F) -> BTreeMap<&'a str, Vec<&'a T>>
where
    F: Fn(&'a T) -> &'a str,
{
    let mut groups: BTreeMap<&str, Vec<&T>> = BTreeMap::new();
    for row in rows {
        groups.entry(key(row)).or_default().push(row);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn user(id: &str, total: u64, window: u64) -> UserRecord {
        UserRecord {
            user_id: id.to_string(),
            occupation: String::new(),
            total_photos: total,
            join_date: date("2015-01-01"),
            following_count: 0,
            groups_count: 0,
            is_pro: false,
            photos_in_window: window,
        }
    }

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    const USERS: &str = r#"{"user_id":"u2","occupation":"Photographer","total_photos":50,"join_date":"2010-05-01","following_count":3,"groups_count":1,"is_pro":true,"photos_in_window":4}
{"user_id":"u1","occupation":"","total_photos":10,"join_date":"2012-01-31","following_count":0,"groups_count":0,"is_pro":false,"photos_in_window":1}
{"user_id":"u3","occupation":null,"total_photos":7,"join_date":"2020-02-29","following_count":9,"groups_count":2,"is_pro":false,"photos_in_window":0}
"#;

    #[test]
    fn loads_well_formed_users_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "users.jsonl", USERS);
        let t = load_table::<UserRecord>(&path).unwrap();
        assert_eq!(t.len(), 3);
        assert!(t.rejects.is_empty());
        let ids: Vec<_> = t.rows.iter().map(|u| u.user_id.as_str()).collect();
        assert_eq!(ids, ["u1", "u2", "u3"]);
        assert_eq!(t.rows[2].occupation, "");
    }

    #[test]
    fn negative_count_is_rejected_with_reason() {
        let dir = tempfile::tempdir().unwrap();
        let body = "photo_id,user_id,upload_date,last_update_date,groups_count,views,favourites,nima_technical,nima_aesthetic,kong_score\n\
                    p1,u1,2021-01-01,2021-02-01,0,10,1,5.0,5.0,0.5\n\
                    p2,u1,2021-01-01,2021-02-01,0,-2,1,5.0,5.0,0.5\n";
        let path = write(dir.path(), "photos.csv", body);
        let t = load_table::<PhotoRecord>(&path).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.rejects.len(), 1);
        assert_eq!(t.rejects[0].line, Some(2));
        assert_eq!(t.rejects[0].reason, "negative count");
    }

    #[test]
    fn out_of_range_scores_and_dates_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = "photo_id,user_id,upload_date,last_update_date,groups_count,views,favourites,nima_technical,nima_aesthetic,kong_score\n\
                    p1,u1,2021-01-01,2021-02-01,0,10,1,0.5,5.0,0.5\n\
                    p2,u1,2021-03-01,2021-02-01,0,10,1,5.0,5.0,0.5\n\
                    p3,u1,2021-01-01,2021-02-01,0,10,1,5.0,5.0,1.5\n";
        let path = write(dir.path(), "photos.csv", body);
        let t = load_table::<PhotoRecord>(&path).unwrap();
        assert!(t.is_empty());
        let reasons: Vec<_> = t.rejects.iter().map(|r| r.reason.as_str()).collect();
        assert_eq!(
            reasons,
            [
                "nima_technical outside [1, 10]",
                "last_update_date precedes upload_date",
                "kong_score outside [0, 1]"
            ]
        );
    }

    #[test]
    fn duplicate_key_names_the_key() {
        let dir = tempfile::tempdir().unwrap();
        let body = "{\"comment_id\":\"c1\",\"photo_id\":\"p9\",\"raw_text\":\"a\"}\n\
                    {\"comment_id\":\"c1\",\"photo_id\":\"p9\",\"raw_text\":\"b\"}\n";
        let path = write(dir.path(), "comments.jsonl", body);
        let err = load_table::<CommentRecord>(&path).unwrap_err();
        assert!(matches!(&err, Error::DuplicateKey { key, .. } if key == "c1"), "{err}");
        assert!(err.to_string().contains("c1"));
    }

    #[test]
    fn missing_column_and_unreadable_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "c.csv", "comment_id,raw_text\nc1,x\n");
        let err = load_table::<CommentRecord>(&path).unwrap_err();
        assert!(matches!(err, Error::MissingColumn { ref column, .. } if column == "photo_id"));
        let err = load_table::<CommentRecord>(dir.path().join("nope.jsonl")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn round_trip_is_a_fixed_point() {
        let dir = tempfile::tempdir().unwrap();
        let src = write(dir.path(), "users.jsonl", USERS);
        let first = load_table::<UserRecord>(&src).unwrap();
        for name in ["again.jsonl", "again.csv"] {
            let out = dir.path().join(name);
            write_table(&out, &first.rows).unwrap();
            let second = load_table::<UserRecord>(&out).unwrap();
            assert_eq!(first.rows, second.rows, "{name}");
        }
    }

    #[test]
    fn activity_filter_cutoff_is_exclusive() {
        let cfg = SnapshotConfig::default();
        let users = vec![user("a", 100, 10), user("b", 100, 20), user("c", 0, 0)];
        let kept = filter_min_activity(&users, &cfg);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].user_id, "a");
    }

    #[test]
    fn trim_removes_both_tails() {
        let cfg = SnapshotConfig::default();
        let users: Vec<_> = (0..100)
            .map(|i| user(&format!("u{:03}", 99 - i), i as u64 + 1, 0))
            .collect();
        let kept = trim_outliers(&users, &cfg);
        assert_eq!(kept.len(), 90);
        let totals: Vec<u64> = kept.iter().map(|u| u.total_photos).collect();
        assert_eq!(*totals.iter().min().unwrap(), 6);
        assert_eq!(*totals.iter().max().unwrap(), 95);
    }

    #[test]
    fn trim_ties_break_by_user_id() {
        let cfg = SnapshotConfig {
            trim_fraction: 0.1,
            ..Default::default()
        };
        // floor(0.1 * 10) = 1 from each end; with identical totals the
        // ranking is by user_id, so u0 and u9 go.
        let users: Vec<_> = (0..10).rev().map(|i| user(&format!("u{i}"), 5, 0)).collect();
        let kept = trim_outliers(&users, &cfg);
        let ids: Vec<_> = kept.iter().map(|u| u.user_id.clone()).collect();
        assert_eq!(ids, (1..9).map(|i| format!("u{i}")).collect::<Vec<_>>());
        // Default 5%: floor(0.5) = 0, nothing removed.
        assert_eq!(trim_outliers(&users, &SnapshotConfig::default()).len(), 10);
        assert_eq!(trim_outliers(&users[..1], &cfg).len(), 1);
    }

    #[test]
    fn days_since_reference() {
        let cfg = SnapshotConfig::default();
        assert_eq!(days_since(date("2021-12-31"), &cfg).unwrap(), 0);
        assert_eq!(days_since(date("2021-12-01"), &cfg).unwrap(), 30);
        assert!(matches!(
            days_since(date("2022-01-01"), &cfg),
            Err(Error::DateAfterReference { .. })
        ));
    }

    #[test]
    fn snapshot_config_validation() {
        let mut cfg = SnapshotConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.trim_fraction = 0.5;
        assert!(cfg.validate().is_err());
        cfg.trim_fraction = 0.05;
        cfg.activity_ratio_cutoff = 0.0;
        assert!(cfg.validate().is_err());
        let parsed: SnapshotConfig = serde_json::from_str(r#"{"window":"2020-06","trim_fraction":0.1}"#).unwrap();
        assert_eq!(parsed.window.to_string(), "2020-06");
        assert_eq!(parsed.activity_ratio_cutoff, 0.20);
    }

    #[test]
    fn ingest_keeps_referential_integrity() {
        let cfg = SnapshotConfig::default();
        let users = Table {
            rows: vec![user("a", 10, 1), user("b", 10, 5)],
            rejects: vec![],
        };
        let photo = |id: &str, uid: &str| PhotoRecord {
            photo_id: id.into(),
            user_id: uid.into(),
            upload_date: date("2021-01-01"),
            last_update_date: date("2021-06-01"),
            groups_count: 0,
            views: 0,
            favourites: 0,
            nima_technical: 5.0,
            nima_aesthetic: 5.0,
            kong_score: 0.5,
        };
        let photos = Table {
            rows: vec![photo("p1", "a"), photo("p2", "b"), photo("p3", "zz")],
            rejects: vec![],
        };
        let comment = |id: &str, pid: &str| CommentRecord {
            comment_id: id.into(),
            photo_id: pid.into(),
            raw_text: "nice".into(),
        };
        let comments = Table {
            rows: vec![comment("c1", "p1"), comment("c2", "p2"), comment("c3", "p404")],
            rejects: vec![],
        };
        let out = ingest(users, photos, comments, &cfg).unwrap();
        assert_eq!(out.users.len(), 1);
        assert_eq!(out.photos.len(), 1);
        assert_eq!(out.comments.len(), 1);
        assert_eq!(out.comments[0].comment_id, "c1");
        let reasons: Vec<_> = out.rejects.iter().map(|r| r.reason.as_str()).collect();
        assert_eq!(reasons, ["unknown user_id", "unknown photo_id"]);
    }

    proptest::proptest! {
        #[test]
        fn trim_cardinality(n in 0usize..400, frac in 0.01f64..0.49) {
            let cfg = SnapshotConfig { trim_fraction: frac, ..Default::default() };
            let users: Vec<_> = (0..n).map(|i| user(&format!("u{i}"), (i * 7 % 13) as u64, 0)).collect();
            let kept = trim_outliers(&users, &cfg);
            let cut = (frac * n as f64).floor() as usize;
            proptest::prop_assert_eq!(kept.len(), n - 2 * cut);
        }
    }
}
