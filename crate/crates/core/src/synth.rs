//! Deterministic synthetic users, photos and comments.
//!
//! Professionals get somewhat higher image scores, views, groups and
//! following counts, and wordier comments, so every pipeline step has signal
//! to find. The bundled sample under `data/sample/` is the output of
//! [`generate`] with [`SynthConfig::default`].

use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{write_table, CommentRecord, PhotoRecord, UserRecord};
use crate::error::{Error, Result};
use crate::learn::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_users: usize,
    pub pro_fraction: f64,
    pub seed: u64,
    pub reference_date: NaiveDate,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 200,
            pro_fraction: 0.25,
            seed: 2021,
            reference_date: NaiveDate::from_ymd_opt(2021, 12, 31).expect("valid date"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub users: Vec<UserRecord>,
    pub photos: Vec<PhotoRecord>,
    pub comments: Vec<CommentRecord>,
}

const PRO_OCCUPATIONS: &[&str] = &[
    "Professional photographer",
    "Freelance Photographer",
    "Fotógrafo",
    "fotografa di matrimoni",
    "Photographe indépendant",
    "Fotograf",
    "Wedding & portrait photography",
    "Valokuvaaja",
];

const OTHER_OCCUPATIONS: &[&str] = &[
    "",
    "",
    "",
    "Software engineer",
    "Teacher",
    "Student",
    "Nurse",
    "Retired",
    "Architect",
    "Graphic designer",
    "Accountant",
    "Ingeniero",
];

const CASUAL_COMMENTS: &[&str] = &[
    "Nice!",
    "wow",
    "Great shot 📷",
    "love it 😍",
    "❤️❤️",
    "cool pic",
    "so pretty",
    "Thanks for sharing",
    "the and of",
    "!!!",
    "see it here https://example.org/p/123",
    "Beautiful!",
];

const DETAILED_COMMENTS: &[&str] = &[
    "Excellent composition and beautiful light on the mountains",
    "Superb exposure, the bokeh is wonderful",
    "Remarkable perspective; the colours are perfectly balanced",
    "Fantastic atmosphere and incredible detail in the shadows",
    "Magnificent sunset, brilliant use of the foreground",
    "Terrible weather but a really stunning result",
    "Impressive sharpness and delightful tonality 👏",
    "Gorgeous portrait, natural expression and lovely background",
];

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn clamp_score(v: f64, lo: f64, hi: f64) -> f64 {
    round4(v.clamp(lo, hi))
}

fn date_between(rng: &mut ChaCha8Rng, from: NaiveDate, to: NaiveDate) -> NaiveDate {
    let span = (to - from).num_days().max(0);
    from + Duration::days(rng.gen_range(0..=span))
}

/// Builds the synthetic tables; user `i` draws from stream `(seed, i)`.
pub fn generate(cfg: &SynthConfig) -> Result<SyntheticData> {
    if cfg.n_users == 0 {
        return Err(Error::InvalidArgument("n_users must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.pro_fraction) {
        return Err(Error::InvalidArgument(format!(
            "pro_fraction must lie in [0, 1], got {}",
            cfg.pro_fraction
        )));
    }
    let normal = |m: f64, s: f64| Normal::new(m, s).expect("valid normal");
    let lognormal = |m: f64, s: f64| LogNormal::new(m, s).expect("valid lognormal");
    let earliest = NaiveDate::from_ymd_opt(2005, 1, 1).expect("valid date");
    let reference = cfg.reference_date;
    let n_pros = (cfg.pro_fraction * cfg.n_users as f64).round() as usize;
    let mut order: Vec<usize> = (0..cfg.n_users).collect();
    order.shuffle(&mut stream_rng(cfg.seed, u64::MAX));
    let mut professional = vec![false; cfg.n_users];
    for &i in &order[..n_pros] {
        professional[i] = true;
    }

    let mut users = Vec::with_capacity(cfg.n_users);
    let mut photos = Vec::new();
    let mut comments = Vec::new();
    for (i, &pro) in professional.iter().enumerate() {
        let mut rng = stream_rng(cfg.seed, i as u64);
        let user_id = format!("u{i:04}");
        let occupation = if pro {
            PRO_OCCUPATIONS.choose(&mut rng)
        } else {
            OTHER_OCCUPATIONS.choose(&mut rng)
        }
        .expect("non-empty list")
        .to_string();
        let total_photos = lognormal(if pro { 6.0 } else { 5.0 }, 1.0)
            .sample(&mut rng)
            .round()
            .max(1.0) as u64;
        // Roughly one user in ten uploads most of their photos in the window.
        let ratio: f64 = if rng.gen_bool(0.1) {
            rng.gen_range(0.2..0.9)
        } else {
            rng.gen_range(0.0..0.15)
        };
        let photos_in_window = ((ratio * total_photos as f64).floor() as u64).min(total_photos);
        let join_date = date_between(&mut rng, earliest, reference - Duration::days(60));
        let following_count = lognormal(if pro { 5.0 } else { 4.2 }, 1.0).sample(&mut rng).round() as u64;
        let user_groups = lognormal(if pro { 3.0 } else { 2.0 }, 1.0).sample(&mut rng).round() as u64;
        let is_pro = rng.gen_bool(if pro { 0.6 } else { 0.2 });
        users.push(UserRecord {
            user_id: user_id.clone(),
            occupation,
            total_photos,
            join_date,
            following_count,
            groups_count: user_groups,
            is_pro,
            photos_in_window,
        });

        let n_photos = rng.gen_range(3..=10);
        for p in 0..n_photos {
            let photo_id = format!("{user_id}-p{p:02}");
            let upload_date = date_between(&mut rng, join_date, reference);
            let last_update_date = date_between(&mut rng, upload_date, reference);
            let shift = if pro { 1.0 } else { 0.0 };
            photos.push(PhotoRecord {
                photo_id: photo_id.clone(),
                user_id: user_id.clone(),
                upload_date,
                last_update_date,
                groups_count: lognormal(1.0 + shift, 0.8).sample(&mut rng).round() as u64,
                views: lognormal(5.0 + 0.8 * shift, 1.0).sample(&mut rng).round() as u64,
                favourites: lognormal(1.5 + 0.5 * shift, 1.0).sample(&mut rng).round() as u64,
                nima_technical: clamp_score(normal(4.8 + 0.4 * shift, 0.5).sample(&mut rng), 1.0, 10.0),
                nima_aesthetic: clamp_score(normal(4.5 + 0.35 * shift, 0.5).sample(&mut rng), 1.0, 10.0),
                kong_score: clamp_score(normal(0.5 + 0.05 * shift, 0.1).sample(&mut rng), 0.0, 1.0),
            });
            let n_comments = rng.gen_range(0..=if pro { 4 } else { 3 });
            for c in 0..n_comments {
                let detailed = rng.gen_bool(if pro { 0.45 } else { 0.3 });
                let text = if detailed {
                    DETAILED_COMMENTS.choose(&mut rng)
                } else {
                    CASUAL_COMMENTS.choose(&mut rng)
                }
                .expect("non-empty list");
                comments.push(CommentRecord {
                    comment_id: format!("{photo_id}-c{c}"),
                    photo_id: photo_id.clone(),
                    raw_text: text.to_string(),
                });
            }
        }
    }
    Ok(SyntheticData {
        users,
        photos,
        comments,
    })
}

/// Writes `users.jsonl`, `photos.jsonl` and `comments.jsonl` into `dir`.
pub fn write_sample(data: &SyntheticData, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_table(dir.join("users.jsonl"), &data.users)?;
    write_table(dir.join("photos.jsonl"), &data.photos)?;
    write_table(dir.join("comments.jsonl"), &data.comments)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_consistent() {
        let cfg = SynthConfig::default();
        let a = generate(&cfg).unwrap();
        assert_eq!(a, generate(&cfg).unwrap());
        assert_eq!(a.users.len(), 200);
        for p in &a.photos {
            assert!(p.last_update_date >= p.upload_date && p.last_update_date <= cfg.reference_date);
            assert!((1.0..=10.0).contains(&p.nima_aesthetic) && (0.0..=1.0).contains(&p.kong_score));
        }
        for u in &a.users {
            assert!(u.photos_in_window <= u.total_photos);
        }
        let other = generate(&SynthConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, other);
    }
}
