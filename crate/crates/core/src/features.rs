//! Per-user feature aggregation and feature-set assembly.
//!
//! Comment measures are first averaged per photo, then every photo-level
//! value is summarised per user as min, max and average. User-profile
//! columns are already per user and pass through unchanged.
//!
//! Column order is fixed: crowdsourced, then user, then photo family; within
//! a family, base features in declaration order, each followed by its
//! `min`, `max`, `avg` aggregates.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{days_since, group_by, CommentRecord, PhotoRecord, SnapshotConfig, UserRecord};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::textfeat::CommentFeatures;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Crowdsourced,
    User,
    Photo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Min,
    Max,
    Avg,
    Identity,
}

impl Aggregate {
    const SUMMARIES: [Aggregate; 3] = [Aggregate::Min, Aggregate::Max, Aggregate::Avg];

    fn suffix(self) -> Option<&'static str> {
        match self {
            Aggregate::Min => Some("min"),
            Aggregate::Max => Some("max"),
            Aggregate::Avg => Some("avg"),
            Aggregate::Identity => None,
        }
    }
}

pub const PHOTO_FEATURES: [&str; 6] = [
    "upload_days",
    "update_days",
    "photo_groups",
    "nima_technical",
    "nima_aesthetic",
    "kong_score",
];

pub const CROWDSOURCED_FEATURES: [&str; 9] = [
    "comments",
    "views",
    "favourites",
    "polarity",
    "subjectivity",
    "difficult_words",
    "reading_time",
    "entropy",
    "comment_length",
];

pub const USER_FEATURES: [&str; 5] = ["photos_number", "join_days", "following_count", "user_groups", "is_pro"];

/// Base features describing image quality.
pub const AESTHETIC_FEATURES: [&str; 3] = ["nima_technical", "nima_aesthetic", "kong_score"];
/// Base features describing social activity on a photo.
pub const SOCIAL_FEATURES: [&str; 2] = ["comments", "favourites"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub source: Family,
    pub base_feature: &'static str,
    pub aggregate: Aggregate,
}

impl ColumnSpec {
    pub fn name(&self) -> String {
        match self.aggregate.suffix() {
            Some(s) => format!("{}_{s}", self.base_feature),
            None => self.base_feature.to_string(),
        }
    }
}

pub fn family_columns(family: Family) -> Vec<ColumnSpec> {
    let summarised = |source, bases: &[&'static str]| -> Vec<ColumnSpec> {
        bases
            .iter()
            .flat_map(|&base_feature| {
                Aggregate::SUMMARIES.iter().map(move |&aggregate| ColumnSpec {
                    source,
                    base_feature,
                    aggregate,
                })
            })
            .collect()
    };
    match family {
        Family::Crowdsourced => summarised(Family::Crowdsourced, &CROWDSOURCED_FEATURES),
        Family::Photo => summarised(Family::Photo, &PHOTO_FEATURES),
        Family::User => USER_FEATURES
            .iter()
            .map(|&base_feature| ColumnSpec {
                source: Family::User,
                base_feature,
                aggregate: Aggregate::Identity,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureSet {
    Crowdsourced,
    User,
    Photo,
    CrowdsourcedUser,
    CrowdsourcedPhoto,
    UserPhoto,
    All,
    /// NIMA technical, NIMA aesthetic and Kong score summaries.
    AestheticTechnical,
    /// Comment and favourite count summaries.
    SocialActivity,
}

impl FeatureSet {
    /// The seven family combinations compared in the model grid.
    pub const GRID: [FeatureSet; 7] = [
        FeatureSet::Crowdsourced,
        FeatureSet::User,
        FeatureSet::Photo,
        FeatureSet::CrowdsourcedUser,
        FeatureSet::CrowdsourcedPhoto,
        FeatureSet::UserPhoto,
        FeatureSet::All,
    ];

    pub const ALL_SETS: [FeatureSet; 9] = [
        FeatureSet::Crowdsourced,
        FeatureSet::User,
        FeatureSet::Photo,
        FeatureSet::CrowdsourcedUser,
        FeatureSet::CrowdsourcedPhoto,
        FeatureSet::UserPhoto,
        FeatureSet::All,
        FeatureSet::AestheticTechnical,
        FeatureSet::SocialActivity,
    ];

    pub fn id(self) -> &'static str {
        match self {
            FeatureSet::Crowdsourced => "crowdsourced",
            FeatureSet::User => "user",
            FeatureSet::Photo => "photo",
            FeatureSet::CrowdsourcedUser => "crowdsourced+user",
            FeatureSet::CrowdsourcedPhoto => "crowdsourced+photo",
            FeatureSet::UserPhoto => "user+photo",
            FeatureSet::All => "all",
            FeatureSet::AestheticTechnical => "aesthetic+technical",
            FeatureSet::SocialActivity => "social-activity",
        }
    }

    /// Human-readable label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            FeatureSet::Crowdsourced => "Crowdsourced features",
            FeatureSet::User => "User features",
            FeatureSet::Photo => "Photo features",
            FeatureSet::CrowdsourcedUser => "Crowdsourced + user features",
            FeatureSet::CrowdsourcedPhoto => "Crowdsourced + photo features",
            FeatureSet::UserPhoto => "User + photo features",
            FeatureSet::All => "All features",
            FeatureSet::AestheticTechnical => "Aesthetics and technical features",
            FeatureSet::SocialActivity => "Social activity features",
        }
    }

    pub fn columns(self) -> Vec<ColumnSpec> {
        let families: &[Family] = match self {
            FeatureSet::Crowdsourced => &[Family::Crowdsourced],
            FeatureSet::User => &[Family::User],
            FeatureSet::Photo => &[Family::Photo],
            FeatureSet::CrowdsourcedUser => &[Family::Crowdsourced, Family::User],
            FeatureSet::CrowdsourcedPhoto => &[Family::Crowdsourced, Family::Photo],
            FeatureSet::UserPhoto => &[Family::User, Family::Photo],
            FeatureSet::All => &[Family::Crowdsourced, Family::User, Family::Photo],
            FeatureSet::AestheticTechnical => {
                return family_columns(Family::Photo)
                    .into_iter()
                    .filter(|c| AESTHETIC_FEATURES.contains(&c.base_feature))
                    .collect()
            }
            FeatureSet::SocialActivity => {
                return family_columns(Family::Crowdsourced)
                    .into_iter()
                    .filter(|c| SOCIAL_FEATURES.contains(&c.base_feature))
                    .collect()
            }
        };
        families.iter().flat_map(|&f| family_columns(f)).collect()
    }

    pub fn column_names(self) -> Vec<String> {
        self.columns().iter().map(ColumnSpec::name).collect()
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(' ', "");
        FeatureSet::ALL_SETS
            .into_iter()
            .find(|set| set.id() == norm)
            .ok_or_else(|| Error::UnknownFeatureSet(s.to_string()))
    }
}

impl Serialize for FeatureSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for FeatureSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-user summaries of the photo and crowdsourced families, in
/// [`family_columns`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct UserAggregate {
    pub photo_count: usize,
    pub photo: Vec<f64>,
    pub crowdsourced: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Aggregates {
    pub by_user: BTreeMap<String, UserAggregate>,
}

fn summarise(per_photo: &[Vec<f64>], width: usize) -> Vec<f64> {
    let n = per_photo.len() as f64;
    let mut out = Vec::with_capacity(width * 3);
    for j in 0..width {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for row in per_photo {
            let v = row[j];
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        let avg = (sum / n).clamp(min, max);
        out.extend([min, max, avg]);
    }
    out
}

/// Aggregates photo-level and comment-level measures per user.
///
/// `comments` supplies the raw comment count per photo; `comment_features`
/// holds measures for the comments that survived normalisation. A photo's
/// text measures are the mean over its retained comments, or zero when it
/// has none.
pub fn aggregate_users(
    photos: &[PhotoRecord],
    comments: &[CommentRecord],
    comment_features: &[CommentFeatures],
    cfg: &SnapshotConfig,
) -> Result<Aggregates> {
    let mut raw_counts: HashMap<&str, u64> = HashMap::new();
    for c in comments {
        *raw_counts.entry(c.photo_id.as_str()).or_default() += 1;
    }
    let mut feats_by_photo = group_by(comment_features, |f| f.photo_id.as_str());
    for feats in feats_by_photo.values_mut() {
        feats.sort_by(|a, b| a.comment_id.cmp(&b.comment_id));
    }

    let mut by_user = BTreeMap::new();
    for (user_id, mut user_photos) in group_by(photos, |p| p.user_id.as_str()) {
        user_photos.sort_by(|a, b| a.photo_id.cmp(&b.photo_id));
        let mut photo_rows = Vec::with_capacity(user_photos.len());
        let mut crowd_rows = Vec::with_capacity(user_photos.len());
        for p in user_photos {
            photo_rows.push(vec![
                days_since(p.upload_date, cfg)? as f64,
                days_since(p.last_update_date, cfg)? as f64,
                p.groups_count as f64,
                p.nima_technical,
                p.nima_aesthetic,
                p.kong_score,
            ]);
            let mut text = [0.0f64; 6];
            if let Some(feats) = feats_by_photo.get(p.photo_id.as_str()) {
                for f in feats {
                    text[0] += f.polarity;
                    text[1] += f.subjectivity;
                    text[2] += f64::from(f.difficult_words);
                    text[3] += f.reading_time_s;
                    text[4] += f.entropy_bits;
                    text[5] += f64::from(f.length_chars);
                }
                let n = feats.len() as f64;
                text.iter_mut().for_each(|v| *v /= n);
            }
            let mut row = vec![
                raw_counts.get(p.photo_id.as_str()).copied().unwrap_or(0) as f64,
                p.views as f64,
                p.favourites as f64,
            ];
            row.extend_from_slice(&text);
            crowd_rows.push(row);
        }
        by_user.insert(
            user_id.to_string(),
            UserAggregate {
                photo_count: photo_rows.len(),
                photo: summarise(&photo_rows, PHOTO_FEATURES.len()),
                crowdsourced: summarise(&crowd_rows, CROWDSOURCED_FEATURES.len()),
            },
        );
    }
    Ok(Aggregates { by_user })
}

/// Numeric per-user matrix for one feature set. Rows are sorted by user id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub feature_set: FeatureSet,
    pub column_names: Vec<String>,
    pub user_ids: Vec<String>,
    pub values: Matrix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixManifest {
    pub feature_set_id: FeatureSet,
    pub columns: Vec<String>,
    pub n_rows: usize,
}

fn user_values(u: &UserRecord, cfg: &SnapshotConfig) -> Result<Vec<f64>> {
    Ok(vec![
        u.total_photos as f64,
        days_since(u.join_date, cfg)? as f64,
        u.following_count as f64,
        u.groups_count as f64,
        if u.is_pro { 1.0 } else { 0.0 },
    ])
}

/// Builds the matrix for `set` from aggregates and the user table.
///
/// Users without photos have no aggregates and are left out with a warning.
pub fn assemble(
    set: FeatureSet,
    aggregates: &Aggregates,
    users: &[UserRecord],
    cfg: &SnapshotConfig,
) -> Result<FeatureMatrix> {
    let specs = set.columns();
    let photo_cols = family_columns(Family::Photo);
    let crowd_cols = family_columns(Family::Crowdsourced);
    let index_in = |cols: &[ColumnSpec], spec: &ColumnSpec| {
        cols.iter()
            .position(|c| c == spec)
            .expect("column belongs to its family")
    };

    let mut sorted: Vec<&UserRecord> = users.iter().collect();
    sorted.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    let mut user_ids = Vec::new();
    let mut data = Vec::new();
    let mut missing = 0usize;
    for u in sorted {
        let Some(agg) = aggregates.by_user.get(&u.user_id) else {
            missing += 1;
            continue;
        };
        let profile = user_values(u, cfg)?;
        for spec in &specs {
            let v = match spec.source {
                Family::User => {
                    profile[USER_FEATURES
                        .iter()
                        .position(|b| *b == spec.base_feature)
                        .expect("user feature")]
                }
                Family::Photo => agg.photo[index_in(&photo_cols, spec)],
                Family::Crowdsourced => agg.crowdsourced[index_in(&crowd_cols, spec)],
            };
            data.push(v);
        }
        user_ids.push(u.user_id.clone());
    }
    if missing > 0 {
        log::warn!("{missing} user(s) have no photos and are excluded from the `{set}` matrix");
    }
    let values = Matrix::new(user_ids.len(), specs.len(), data)?;
    Ok(FeatureMatrix {
        feature_set: set,
        column_names: specs.iter().map(ColumnSpec::name).collect(),
        user_ids,
        values,
    })
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.n_cols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Projects onto the columns of another feature set. Fails when a column
    /// is not present in this matrix.
    pub fn project(&self, set: FeatureSet) -> Result<FeatureMatrix> {
        let names = set.column_names();
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n).ok_or_else(|| {
                    Error::InvalidArgument(format!("column `{n}` not in the `{}` matrix", self.feature_set))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureMatrix {
            feature_set: set,
            column_names: names,
            user_ids: self.user_ids.clone(),
            values: self.values.select_columns(&idx),
        })
    }

    pub fn manifest(&self) -> MatrixManifest {
        MatrixManifest {
            feature_set_id: self.feature_set,
            columns: self.column_names.clone(),
            n_rows: self.n_rows(),
        }
    }

    /// Writes `user_id` plus one column per feature.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(std::iter::once("user_id").chain(self.column_names.iter().map(String::as_str)))?;
        for (i, uid) in self.user_ids.iter().enumerate() {
            let mut record = Vec::with_capacity(self.n_cols() + 1);
            record.push(uid.clone());
            record.extend(self.values.row(i).iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Writes the CSV plus a `manifest.json` next to it.
    pub fn write_with_manifest(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.write_csv(dir.join("features.csv"))?;
        let manifest = dir.join("manifest.json");
        let mut f = File::create(&manifest).map_err(|e| Error::io(&manifest, e))?;
        serde_json::to_writer_pretty(&mut f, &self.manifest())?;
        f.write_all(b"\n").map_err(|e| Error::io(&manifest, e))
    }

    /// Reads a matrix written by [`write_csv`](Self::write_csv). The feature
    /// set is taken from `manifest.json` in the same directory when present,
    /// otherwise inferred from the header.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Format {
                path: path.to_path_buf(),
                message: format!("{other:?}"),
            },
        })?;
        let headers = reader.headers()?.clone();
        if headers.get(0) != Some("user_id") {
            return Err(Error::MissingColumn {
                path: path.to_path_buf(),
                column: "user_id".into(),
            });
        }
        let column_names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut user_ids = Vec::new();
        let mut data = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            user_ids.push(record.get(0).unwrap_or_default().to_string());
            for cell in record.iter().skip(1) {
                let v: f64 = cell.parse().map_err(|_| Error::Format {
                    path: path.to_path_buf(),
                    message: format!("row {}: `{cell}` is not a number", i + 1),
                })?;
                data.push(v);
            }
        }
        let values = Matrix::new(user_ids.len(), column_names.len(), data).map_err(|_| Error::Format {
            path: path.to_path_buf(),
            message: "ragged rows".into(),
        })?;
        let manifest_path = path.with_file_name("manifest.json");
        let feature_set = if manifest_path.exists() {
            let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
            let m: MatrixManifest = serde_json::from_str(&text)?;
            if m.columns != column_names {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    message: "header does not match manifest.json".into(),
                });
            }
            m.feature_set_id
        } else {
            FeatureSet::ALL_SETS
                .into_iter()
                .find(|s| s.column_names() == column_names)
                .ok_or_else(|| Error::Format {
                    path: path.to_path_buf(),
                    message: "header matches no known feature set and no manifest.json is present".into(),
                })?
        };
        Ok(FeatureMatrix {
            feature_set,
            column_names,
            user_ids,
            values,
        })
    }
}

/// Column-wise z-scoring fitted on a subset of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    /// Fits population mean and standard deviation on `fit_rows` only.
    pub fn fit(x: &Matrix, fit_rows: &[usize]) -> Result<Standardizer> {
        if fit_rows.is_empty() {
            return Err(Error::EmptyInput("standardizer fit rows"));
        }
        let n = fit_rows.len() as f64;
        let d = x.n_cols();
        let mut mean = vec![0.0; d];
        for &i in fit_rows {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for &i in fit_rows {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let sd = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Standardizer { mean, sd })
    }

    pub fn fit_all(x: &Matrix) -> Result<Standardizer> {
        Self::fit(x, &(0..x.n_rows()).collect::<Vec<_>>())
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = Vec::with_capacity(x.n_rows() * x.n_cols());
        for row in x.rows() {
            out.extend(self.transform_row(row));
        }
        Matrix::new(x.n_rows(), x.n_cols(), out).expect("same shape")
    }
}

/// Standardizes `x` with statistics fitted on `fit_rows`.
pub fn standardize(x: &Matrix, fit_rows: &[usize]) -> Result<(Matrix, Standardizer)> {
    let s = Standardizer::fit(x, fit_rows)?;
    Ok((s.transform(x), s))
}
