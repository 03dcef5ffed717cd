//! Rating datasets: parsing, train/test splitting and the sparse user-item matrix.
//!
//! External user and item identifiers are opaque strings. Every dataset carries
//! the full identifier universe so that a train/test split shares one dense index
//! space; all downstream math works on the dense indices.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use indexmap::IndexSet;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DataError, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetKind {
    /// Tab-separated `user item rating timestamp`, integer ratings 1..=5.
    MovieLens,
    /// Whitespace-separated `user item rating`, ratings 0.5..=4.0 in half steps.
    FilmTrust,
}

impl DatasetKind {
    pub fn scale(self) -> RatingScale {
        match self {
            DatasetKind::MovieLens => RatingScale { min: 1.0, max: 5.0 },
            DatasetKind::FilmTrust => RatingScale { min: 0.5, max: 4.0 },
        }
    }

    pub fn load(self, path: impl AsRef<Path>) -> Result<RatingsDataset, DataError> {
        match self {
            DatasetKind::MovieLens => parse_movielens(path),
            DatasetKind::FilmTrust => parse_filmtrust(path),
        }
    }

    pub fn read(self, reader: impl BufRead) -> Result<RatingsDataset, DataError> {
        match self {
            DatasetKind::MovieLens => read_movielens(reader),
            DatasetKind::FilmTrust => read_filmtrust(reader),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::MovieLens => "movielens",
            DatasetKind::FilmTrust => "filmtrust",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "movielens" | "ml-100k" | "ml100k" => Ok(DatasetKind::MovieLens),
            "filmtrust" => Ok(DatasetKind::FilmTrust),
            other => Err(format!(
                "unknown dataset kind `{other}` (expected movielens or filmtrust)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl RatingScale {
    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }
}

/// A rating expressed with external identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingTriple {
    pub user: String,
    pub item: String,
    pub rating: f64,
}

/// A rating expressed with dense indices into the dataset's universe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct RatingsDataset {
    users: Arc<IndexSet<String>>,
    items: Arc<IndexSet<String>>,
    ratings: Vec<Rating>,
    scale: RatingScale,
}

impl RatingsDataset {
    /// Builds a dataset from triples, rejecting duplicates and out-of-scale values.
    pub fn from_triples(
        triples: impl IntoIterator<Item = RatingTriple>,
        scale: RatingScale,
    ) -> Result<Self, DataError> {
        let mut builder = Builder::new(scale);
        for (i, t) in triples.into_iter().enumerate() {
            builder.push(i + 1, t.user, t.item, t.rating)?;
        }
        Ok(builder.finish())
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn user_id(&self, index: usize) -> Option<&str> {
        self.users.get_index(index).map(String::as_str)
    }

    pub fn item_id(&self, index: usize) -> Option<&str> {
        self.items.get_index(index).map(String::as_str)
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.users.get_index_of(id)
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.items.get_index_of(id)
    }

    pub fn triples(&self) -> impl Iterator<Item = RatingTriple> + '_ {
        self.ratings.iter().map(|r| RatingTriple {
            user: self.users[r.user].clone(),
            item: self.items[r.item].clone(),
            rating: r.value,
        })
    }

    /// Writes the dataset back out in the line format of `kind`.
    ///
    /// MovieLens timestamps are not retained, so they are written as `0`.
    pub fn write(&self, kind: DatasetKind, mut out: impl Write) -> std::io::Result<()> {
        for r in &self.ratings {
            let (u, i) = (&self.users[r.user], &self.items[r.item]);
            match kind {
                DatasetKind::MovieLens => writeln!(out, "{u}\t{i}\t{}\t0", r.value)?,
                DatasetKind::FilmTrust => writeln!(out, "{u} {i} {}", r.value)?,
            }
        }
        Ok(())
    }

    fn with_ratings(&self, ratings: Vec<Rating>) -> Self {
        RatingsDataset {
            users: Arc::clone(&self.users),
            items: Arc::clone(&self.items),
            ratings,
            scale: self.scale,
        }
    }

    pub fn rating_matrix(&self) -> RatingMatrix {
        RatingMatrix::from_dataset(self)
    }
}

struct Builder {
    users: IndexSet<String>,
    items: IndexSet<String>,
    ratings: Vec<Rating>,
    seen: HashSet<(usize, usize)>,
    scale: RatingScale,
}

impl Builder {
    fn new(scale: RatingScale) -> Self {
        Builder {
            users: IndexSet::new(),
            items: IndexSet::new(),
            ratings: Vec::new(),
            seen: HashSet::new(),
            scale,
        }
    }

    fn push(
        &mut self,
        line: usize,
        user: String,
        item: String,
        value: f64,
    ) -> Result<(), DataError> {
        if user.is_empty() || item.is_empty() {
            return Err(DataError::Malformed {
                line,
                message: "empty user or item identifier".into(),
            });
        }
        if !(value > 0.0) || !self.scale.contains(value) {
            return Err(DataError::OutOfScale {
                line,
                value,
                min: self.scale.min,
                max: self.scale.max,
            });
        }
        let u = self.users.get_index_of(&user);
        let i = self.items.get_index_of(&item);
        if let (Some(u), Some(i)) = (u, i) {
            if self.seen.contains(&(u, i)) {
                return Err(DataError::Duplicate { line, user, item });
            }
        }
        let u = u.unwrap_or_else(|| self.users.insert_full(user).0);
        let i = i.unwrap_or_else(|| self.items.insert_full(item).0);
        self.seen.insert((u, i));
        self.ratings.push(Rating {
            user: u,
            item: i,
            value,
        });
        Ok(())
    }

    fn finish(self) -> RatingsDataset {
        RatingsDataset {
            users: Arc::new(self.users),
            items: Arc::new(self.items),
            ratings: self.ratings,
            scale: self.scale,
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, DataError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn parse_rating(field: &str, line: usize) -> Result<f64, DataError> {
    field.parse::<f64>().map_err(|_| DataError::Malformed {
        line,
        message: format!("rating `{field}` is not a number"),
    })
}

/// Parses a MovieLens-100K `u.data` style file.
pub fn parse_movielens(path: impl AsRef<Path>) -> Result<RatingsDataset, DataError> {
    let path = path.as_ref();
    read_movielens(open(path)?).map_err(|e| with_path(e, path))
}

pub fn read_movielens(reader: impl BufRead) -> Result<RatingsDataset, DataError> {
    let mut builder = Builder::new(DatasetKind::MovieLens.scale());
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| DataError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(DataError::Malformed {
                line: line_no,
                message: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let rating = parse_rating(fields[2], line_no)?;
        if fields[3].parse::<i64>().is_err() {
            return Err(DataError::Malformed {
                line: line_no,
                message: format!("timestamp `{}` is not an integer", fields[3]),
            });
        }
        builder.push(
            line_no,
            fields[0].to_string(),
            fields[1].to_string(),
            rating,
        )?;
    }
    Ok(builder.finish())
}

/// Parses a FilmTrust `ratings.txt` style file.
pub fn parse_filmtrust(path: impl AsRef<Path>) -> Result<RatingsDataset, DataError> {
    let path = path.as_ref();
    read_filmtrust(open(path)?).map_err(|e| with_path(e, path))
}

pub fn read_filmtrust(reader: impl BufRead) -> Result<RatingsDataset, DataError> {
    let scale = DatasetKind::FilmTrust.scale();
    let mut builder = Builder::new(scale);
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| DataError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 3 {
            return Err(DataError::Malformed {
                line: line_no,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let rating = parse_rating(fields[2], line_no)?;
        let doubled = rating * 2.0;
        if !scale.contains(rating) || (doubled - doubled.round()).abs() > 1e-9 {
            return Err(DataError::OffGrid {
                line: line_no,
                value: rating,
            });
        }
        builder.push(
            line_no,
            fields[0].to_string(),
            fields[1].to_string(),
            rating,
        )?;
    }
    Ok(builder.finish())
}

fn with_path(err: DataError, path: &Path) -> DataError {
    match err {
        DataError::Malformed { line, message } => DataError::Malformed {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

/// Uniform random partition of the ratings into train and test halves.
///
/// The train half gets `round(train_fraction * len)` ratings. Both halves keep
/// the full user/item universe of `ds` and preserve the original rating order.
pub fn split_train_test(
    ds: &RatingsDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(RatingsDataset, RatingsDataset)> {
    if ds.is_empty() {
        return Err(Error::Empty("cannot split an empty dataset"));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = ds.len();
    let n_train = (train_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut in_train = vec![false; n];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    let (train, test): (Vec<_>, Vec<_>) = ds.ratings.iter().zip(&in_train).partition(|(_, &t)| t);
    let strip = |v: Vec<(&Rating, &bool)>| v.into_iter().map(|(r, _)| *r).collect::<Vec<_>>();
    Ok((ds.with_ratings(strip(train)), ds.with_ratings(strip(test))))
}

/// Compressed sparse rows.
#[derive(Debug, Clone)]
struct SparseRows {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl SparseRows {
    fn build(rows: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut ptr = vec![0usize; rows + 1];
        for &(r, _, _) in &entries {
            ptr[r + 1] += 1;
        }
        for r in 0..rows {
            ptr[r + 1] += ptr[r];
        }
        let idx = entries.iter().map(|e| e.1).collect();
        let val = entries.iter().map(|e| e.2).collect();
        SparseRows { ptr, idx, val }
    }

    fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.ptr[r]..self.ptr[r + 1];
        (&self.idx[span.clone()], &self.val[span])
    }
}

/// Sparse user-item rating matrix; absent entries read as 0.
#[derive(Debug, Clone)]
pub struct RatingMatrix {
    by_user: SparseRows,
    by_item: SparseRows,
    user_means: Vec<f64>,
    global_mean: f64,
    scale: RatingScale,
}

impl RatingMatrix {
    pub fn from_dataset(ds: &RatingsDataset) -> Self {
        let (m, n) = (ds.num_users(), ds.num_items());
        let entries: Vec<_> = ds
            .ratings
            .iter()
            .map(|r| (r.user, r.item, r.value))
            .collect();
        let transposed = entries.iter().map(|&(u, i, v)| (i, u, v)).collect();
        let by_user = SparseRows::build(m, entries);
        let by_item = SparseRows::build(n, transposed);

        let global_mean = if ds.is_empty() {
            ds.scale.midpoint()
        } else {
            ds.ratings.iter().map(|r| r.value).sum::<f64>() / ds.len() as f64
        };
        let user_means = (0..m)
            .map(|u| {
                let (_, vals) = by_user.row(u);
                if vals.is_empty() {
                    global_mean
                } else {
                    vals.iter().sum::<f64>() / vals.len() as f64
                }
            })
            .collect();
        RatingMatrix {
            by_user,
            by_item,
            user_means,
            global_mean,
            scale: ds.scale,
        }
    }

    pub fn num_users(&self) -> usize {
        self.user_means.len()
    }

    pub fn num_items(&self) -> usize {
        self.by_item.ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.by_user.idx.len()
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    /// r_ui, or 0 when the user has not rated the item.
    pub fn get(&self, user: usize, item: usize) -> f64 {
        let (items, vals) = self.by_user.row(user);
        match items.binary_search(&item) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Items rated by `user` (sorted ascending) and the matching ratings.
    pub fn user_ratings(&self, user: usize) -> (&[usize], &[f64]) {
        self.by_user.row(user)
    }

    /// Users who rated `item` (sorted ascending) and the matching ratings.
    pub fn item_ratings(&self, item: usize) -> (&[usize], &[f64]) {
        self.by_item.row(item)
    }

    pub fn has_ratings(&self, user: usize) -> bool {
        self.by_user.ptr[user] != self.by_user.ptr[user + 1]
    }

    /// Mean of the user's ratings; the global mean for users with none.
    pub fn user_mean(&self, user: usize) -> f64 {
        self.user_means[user]
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }
}
