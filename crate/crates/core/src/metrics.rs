//! Set-level statistics for generated molecules and the discriminator
//! embedding projection.

use std::collections::BTreeSet;

use molgan_chem::{canonical_smiles, fingerprint, parse_and_check, tanimoto, Fingerprint};
use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use crate::bpe::Tokenizer;
use crate::gan::{Discriminator, PaddedBatch};
use crate::neural::rng::stream;
use crate::neural::{Matrix, ParamStore};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("diversity needs at least two molecules, got {0}")]
    TooFew(usize),
    #[error("not a valid molecule: {0}")]
    Invalid(String),
    #[error("covariance has rank {rank}, fewer than the {dims} requested components")]
    Degenerate { rank: usize, dims: usize },
    #[error("projection dimension must be 2 or 3, got {0}")]
    Dims(usize),
}

/// Fraction of strings that parse and pass the valence check. Duplicates
/// count once per occurrence.
pub fn validity_rate<S: AsRef<str>>(generated: &[S]) -> Result<f64, MetricsError> {
    if generated.is_empty() {
        return Err(MetricsError::Empty("generated set"));
    }
    let valid = generated.iter().filter(|s| molgan_chem::is_valid(s.as_ref())).count();
    Ok(valid as f64 / generated.len() as f64)
}

fn canonical_all<S: AsRef<str>>(valid: &[S]) -> Result<Vec<String>, MetricsError> {
    valid
        .iter()
        .map(|s| canonical_smiles(s.as_ref()).ok_or_else(|| MetricsError::Invalid(s.as_ref().to_string())))
        .collect()
}

/// Distinct canonical forms over the number of valid molecules.
pub fn uniqueness_rate<S: AsRef<str>>(valid: &[S]) -> Result<f64, MetricsError> {
    if valid.is_empty() {
        return Err(MetricsError::Empty("valid set"));
    }
    let distinct: BTreeSet<String> = canonical_all(valid)?.into_iter().collect();
    Ok(distinct.len() as f64 / valid.len() as f64)
}

/// Fraction of the unique canonical set absent from the training set.
pub fn novelty_rate(unique: &BTreeSet<String>, training: &BTreeSet<String>) -> Result<f64, MetricsError> {
    if unique.is_empty() {
        return Err(MetricsError::Empty("unique set"));
    }
    Ok(unique.difference(training).count() as f64 / unique.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diversity {
    pub value: f64,
    pub pairs: usize,
    pub exhaustive: bool,
}

/// `i < j` for the `k`-th pair in row-major order, given sorted `ks`.
fn unrank_sorted(ks: &mut [usize], n: usize) -> Vec<(usize, usize)> {
    ks.sort_unstable();
    let mut out = Vec::with_capacity(ks.len());
    let (mut i, mut row_start) = (0, 0);
    for &k in ks.iter() {
        while k >= row_start + (n - 1 - i) {
            row_start += n - 1 - i;
            i += 1;
        }
        out.push((i, i + 1 + (k - row_start)));
    }
    out
}

/// One minus the mean pairwise Tanimoto similarity of the fingerprints.
/// Above `max_pairs` pairs, a seeded sample of distinct pairs is used.
pub fn diversity_of(fps: &[Fingerprint], max_pairs: usize, seed: u64) -> Result<Diversity, MetricsError> {
    let n = fps.len();
    if n < 2 {
        return Err(MetricsError::TooFew(n));
    }
    let total = n * (n - 1) / 2;
    let pairs: Vec<(usize, usize)> = if total <= max_pairs {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    } else {
        let mut rng = stream(seed, "metrics/diversity", &[]);
        let mut ks = index::sample(&mut rng, total, max_pairs.max(1)).into_vec();
        unrank_sorted(&mut ks, n)
    };
    let sum: f64 = pairs.iter().map(|&(i, j)| tanimoto(&fps[i], &fps[j])).sum();
    Ok(Diversity { value: 1.0 - sum / pairs.len() as f64, pairs: pairs.len(), exhaustive: total <= max_pairs })
}

pub fn diversity<S: AsRef<str>>(valid: &[S], max_pairs: usize, seed: u64) -> Result<Diversity, MetricsError> {
    let fps = valid
        .iter()
        .map(|s| {
            parse_and_check(s.as_ref()).map(|(g, _)| fingerprint(&g)).map_err(|_| MetricsError::Invalid(s.as_ref().to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    diversity_of(&fps, max_pairs, seed)
}

/// Fractions are `None` when their denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub validity: f64,
    pub uniqueness: Option<f64>,
    pub novelty: Option<f64>,
    pub diversity: Option<f64>,
    pub n_generated: usize,
    pub n_valid: usize,
    pub n_unique: usize,
    pub n_novel: usize,
    pub diversity_pairs: usize,
    pub diversity_exhaustive: bool,
}

pub const DEFAULT_MAX_PAIRS: usize = 100_000;

pub fn metrics_report<S: AsRef<str>, T: AsRef<str>>(
    generated: &[S],
    training: &[T],
    max_pairs: usize,
    seed: u64,
) -> Result<MetricsReport, MetricsError> {
    if generated.is_empty() {
        return Err(MetricsError::Empty("generated set"));
    }
    let valid: Vec<&str> = generated.iter().map(|s| s.as_ref()).filter(|s| molgan_chem::is_valid(s)).collect();
    let canonical = canonical_all(&valid)?;
    let unique: BTreeSet<String> = canonical.iter().cloned().collect();
    let train: BTreeSet<String> = training.iter().filter_map(|s| canonical_smiles(s.as_ref())).collect();
    let n_novel = unique.difference(&train).count();
    let div = if valid.len() >= 2 { Some(diversity(&valid, max_pairs, seed)?) } else { None };
    Ok(MetricsReport {
        validity: valid.len() as f64 / generated.len() as f64,
        uniqueness: (!valid.is_empty()).then(|| unique.len() as f64 / valid.len() as f64),
        novelty: (!unique.is_empty()).then(|| n_novel as f64 / unique.len() as f64),
        diversity: div.map(|d| d.value),
        n_generated: generated.len(),
        n_valid: valid.len(),
        n_unique: unique.len(),
        n_novel,
        diversity_pairs: div.map_or(0, |d| d.pairs),
        diversity_exhaustive: div.is_some_and(|d| d.exhaustive),
    })
}

/// Principal axes of a row-per-sample data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit eigenvectors of the covariance, largest eigenvalue first.
    pub components: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
}

/// Sample covariance (n - 1 denominator) of the rows of `data`.
pub fn covariance(data: &Matrix) -> (Vec<f64>, Matrix) {
    let n = data.nrows();
    let mean = data.mean_axis(ndarray::Axis(0)).expect("non-empty data");
    let centered = data - &mean;
    let cov = centered.t().dot(&centered) / (n.max(2) - 1) as f64;
    (mean.to_vec(), cov)
}

/// Top `dims` eigenpairs of the covariance by power iteration with
/// deflation.
pub fn pca(data: &Matrix, dims: usize) -> Result<Pca, MetricsError> {
    if data.nrows() == 0 {
        return Err(MetricsError::Empty("embedding set"));
    }
    let d = data.ncols();
    let (mean, mut cov) = covariance(data);
    let trace: f64 = cov.diag().sum();
    // Relative to the spread, with a floor tied to the data's magnitude so
    // rounding noise around a constant cloud counts as zero.
    let magnitude = data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = (1e-10 * trace).max(1e-20 * magnitude * magnitude).max(f64::MIN_POSITIVE);
    let mut rng = stream(0, "metrics/pca", &[]);
    let mut components = Vec::new();
    let mut variances = Vec::new();
    for k in 0..dims {
        let mut v: ndarray::Array1<f64> = ndarray::Array1::from_shape_simple_fn(d, || rng.random_range(-1.0..1.0));
        v /= v.dot(&v).sqrt().max(f64::MIN_POSITIVE);
        let mut lambda = 0.0;
        for _ in 0..10_000 {
            let w = cov.dot(&v);
            let norm = w.dot(&w).sqrt();
            if norm <= tol {
                lambda = 0.0;
                break;
            }
            let next = w / norm;
            let delta = (&next - &v).mapv(f64::abs).sum();
            v = next;
            lambda = v.dot(&cov.dot(&v));
            if delta < 1e-13 {
                break;
            }
        }
        if lambda <= tol {
            return Err(MetricsError::Degenerate { rank: k, dims });
        }
        let outer = v.view().insert_axis(ndarray::Axis(1)).dot(&v.view().insert_axis(ndarray::Axis(0)));
        cov -= &(outer * lambda);
        components.push(v.to_vec());
        variances.push(lambda);
    }
    Ok(Pca { mean, components, variances })
}

impl Pca {
    pub fn project(&self, data: &Matrix) -> Matrix {
        let mean = ndarray::Array1::from(self.mean.clone());
        let basis = Matrix::from_shape_fn((self.mean.len(), self.components.len()), |(i, k)| self.components[k][i]);
        (data - &mean).dot(&basis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SetLabel {
    Generated,
    Trained,
}

impl SetLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SetLabel::Generated => "generated",
            SetLabel::Trained => "trained",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub labels: Vec<SetLabel>,
    pub coords: Matrix,
    pub variances: Vec<f64>,
}

pub const POOLING: &str = "mean-over-positions-bidirectional";

const EMBED_BATCH: usize = 256;

/// Mean-pooled discriminator states of every string, one row each.
pub fn discriminator_embeddings<S: AsRef<str>>(
    disc: &Discriminator,
    store: &ParamStore,
    tokenizer: &Tokenizer,
    smiles: &[S],
) -> Matrix {
    let width = 2 * disc.config.hidden_size;
    let mut out = Matrix::zeros((smiles.len(), width));
    for (c, chunk) in smiles.chunks(EMBED_BATCH).enumerate() {
        let seqs: Vec<Vec<u32>> = chunk.iter().map(|s| tokenizer.encode(s.as_ref()).ids).collect();
        let e = disc.embed_sequences(store, &PaddedBatch::from_vecs(&seqs));
        out.slice_mut(ndarray::s![c * EMBED_BATCH..c * EMBED_BATCH + chunk.len(), ..]).assign(&e);
    }
    out
}

/// Embeds both sets with the frozen discriminator and projects the pooled
/// embeddings onto their top `dims` principal components.
pub fn embed_and_project<S: AsRef<str>, T: AsRef<str>>(
    disc: &Discriminator,
    store: &ParamStore,
    tokenizer: &Tokenizer,
    generated: &[S],
    training: &[T],
    dims: usize,
) -> Result<Projection, MetricsError> {
    if !(2..=3).contains(&dims) {
        return Err(MetricsError::Dims(dims));
    }
    if generated.is_empty() {
        return Err(MetricsError::Empty("generated set"));
    }
    if training.is_empty() {
        return Err(MetricsError::Empty("training set"));
    }
    let g = discriminator_embeddings(disc, store, tokenizer, generated);
    let t = discriminator_embeddings(disc, store, tokenizer, training);
    let all = ndarray::concatenate(ndarray::Axis(0), &[g.view(), t.view()]).expect("equal widths");
    let p = pca(&all, dims)?;
    let mut labels = vec![SetLabel::Generated; generated.len()];
    labels.resize(generated.len() + training.len(), SetLabel::Trained);
    Ok(Projection { labels, coords: p.project(&all), variances: p.variances })
}

/// `label,x,y[,z]` rows after the given comment lines.
pub fn projection_csv(p: &Projection, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str(c);
        out.push('\n');
    }
    let axes = ["x", "y", "z"];
    out.push_str("label,");
    out.push_str(&axes[..p.coords.ncols()].join(","));
    out.push('\n');
    for (label, row) in p.labels.iter().zip(p.coords.rows()) {
        out.push_str(label.as_str());
        for v in row {
            out.push_str(&format!(",{v:.6}"));
        }
        out.push('\n');
    }
    out
}
