//! Global K-means over sparse article vectors.
//!
//! Points are sparse, centroids dense. Squared distances are evaluated as
//! `‖c‖² + Σ_{d ∈ nz(x)} ((x_d − c_d)² − c_d²)`, which touches only the
//! nonzeros of `x`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::textprep::DocVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KMethod {
    /// floor(√(m/2))
    Can,
    /// ceil(m·t/e)
    Kaufman,
    Fixed,
}

impl FromStr for KMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "can" => Ok(Self::Can),
            "kaufman" => Ok(Self::Kaufman),
            "fixed" => Ok(Self::Fixed),
            _ => Err(Error::InvalidParam(format!("unknown k method `{s}`"))),
        }
    }
}

impl std::fmt::Display for KMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Can => "can",
            Self::Kaufman => "kaufman",
            Self::Fixed => "fixed",
        })
    }
}

/// Number of clusters from `m` articles, `t` terms and `e` nonzero entries.
///
/// The Kaufman rule rounds up: at m=276,679, t=4,196, e=22,694,542 the ratio
/// is 51.16 and the published value is 52. The result is never below 1.
pub fn heuristic_k(method: KMethod, m: usize, t: usize, e: usize, fixed_value: Option<usize>) -> Result<usize> {
    let k = match method {
        KMethod::Can => {
            if m == 0 {
                return Err(Error::InvalidParam("can heuristic needs m > 0".into()));
            }
            // Integer square root of m/2, exact for any realistic m.
            let half = m as f64 / 2.0;
            let mut k = half.sqrt().floor() as usize;
            while ((k + 1) * (k + 1)) as f64 <= half {
                k += 1;
            }
            while k > 0 && (k * k) as f64 > half {
                k -= 1;
            }
            k
        }
        KMethod::Kaufman => {
            if m == 0 || t == 0 || e == 0 {
                return Err(Error::InvalidParam("kaufman heuristic needs m, t, e > 0".into()));
            }
            let num = m as u128 * t as u128;
            num.div_ceil(e as u128) as usize
        }
        KMethod::Fixed => {
            fixed_value.ok_or_else(|| Error::InvalidParam("fixed k method needs a value for k".into()))?
        }
    };
    Ok(k.max(1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iter: 300,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub article_ids: Vec<String>,
    /// Cluster of `article_ids[i]`.
    pub labels: Vec<u32>,
    /// K dense centroids of dimension `dim`. Empty when loaded from disk.
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after each assignment step, last entry is the final one.
    pub inertia_history: Vec<f64>,
    pub k: usize,
    pub seed: u64,
    pub dim: usize,
    pub iterations: usize,
}

impl ClusteringResult {
    pub fn assignment(&self) -> BTreeMap<&str, u32> {
        self.article_ids
            .iter()
            .map(String::as_str)
            .zip(self.labels.iter().copied())
            .collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Header line (`# k seed dim inertia`) followed by `article_id<TAB>cluster`.
    pub fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(
            out,
            "# k={} seed={} t={} inertia={:e}",
            self.k, self.seed, self.dim, self.inertia
        )?;
        for (id, label) in self.article_ids.iter().zip(&self.labels) {
            writeln!(out, "{id}\t{label}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let perr = |line: usize, reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| perr(1, "empty file".into()))?
            .map_err(|e| Error::io(path, e))?;
        let header = header
            .strip_prefix("# ")
            .ok_or_else(|| perr(1, "missing header".into()))?;
        let mut fields = BTreeMap::new();
        for kv in header.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| perr(1, format!("bad header entry `{kv}`")))?;
            fields.insert(k, v);
        }
        let get = |key: &str| {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| perr(1, format!("header lacks `{key}`")))
        };
        let k: usize = get("k")?.parse().map_err(|_| perr(1, "bad k".into()))?;
        let seed: u64 = get("seed")?.parse().map_err(|_| perr(1, "bad seed".into()))?;
        let dim: usize = get("t")?.parse().map_err(|_| perr(1, "bad t".into()))?;
        let inertia: f64 = get("inertia")?.parse().map_err(|_| perr(1, "bad inertia".into()))?;
        let mut article_ids = Vec::new();
        let mut labels = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let (id, label) = line
                .split_once('\t')
                .ok_or_else(|| perr(i + 2, "expected id<TAB>cluster".into()))?;
            let label: u32 = label
                .parse()
                .map_err(|_| perr(i + 2, format!("bad cluster id `{label}`")))?;
            if label as usize >= k {
                return Err(perr(i + 2, format!("cluster {label} >= k={k}")));
            }
            article_ids.push(id.to_string());
            labels.push(label);
        }
        Ok(Self {
            article_ids,
            labels,
            centroids: Vec::new(),
            inertia,
            inertia_history: vec![inertia],
            k,
            seed,
            dim,
            iterations: 0,
        })
    }
}

/// Squared Euclidean distance between sparse `x` and dense `c` with
/// precomputed `‖c‖²`.
fn sq_dist(x: &DocVector, c: &[f64], c_norm_sq: f64) -> f64 {
    let mut d = c_norm_sq;
    for &(j, w) in &x.entries {
        let cj = c[j as usize];
        d += (w - cj) * (w - cj) - cj * cj;
    }
    d.max(0.0)
}

fn nearest(x: &DocVector, centroids: &[Vec<f64>], norms: &[f64]) -> (u32, f64) {
    let mut best = (0u32, f64::INFINITY);
    for (k, (c, &n)) in centroids.iter().zip(norms).enumerate() {
        let d = sq_dist(x, c, n);
        if d < best.1 {
            best = (k as u32, d);
        }
    }
    best
}

fn dense(x: &DocVector, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for &(j, w) in &x.entries {
        v[j as usize] = w;
    }
    v
}

fn kmeans_plus_plus(vectors: &[DocVector], k: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = vectors.len();
    let nonzero: Vec<usize> = (0..n).filter(|&i| !vectors[i].is_zero()).collect();
    let first = nonzero[rng.random_range(0..nonzero.len())];
    let mut centroids = vec![dense(&vectors[first], dim)];
    let mut chosen = vec![false; n];
    chosen[first] = true;
    let mut closest: Vec<f64> = {
        let c = &centroids[0];
        let cn: f64 = c.iter().map(|v| v * v).sum();
        vectors.par_iter().map(|x| sq_dist(x, c, cn)).collect()
    };
    while centroids.len() < k {
        let next = match WeightedIndex::new(&closest) {
            Ok(dist) => dist.sample(rng),
            // Every point coincides with a centroid: fall back to any unused
            // nonzero vector.
            Err(_) => {
                let pool: Vec<usize> = nonzero.iter().copied().filter(|&i| !chosen[i]).collect();
                pool[rng.random_range(0..pool.len())]
            }
        };
        chosen[next] = true;
        let c = dense(&vectors[next], dim);
        let cn: f64 = c.iter().map(|v| v * v).sum();
        closest.par_iter_mut().zip(vectors.par_iter()).for_each(|(best, x)| {
            let d = sq_dist(x, &c, cn);
            if d < *best {
                *best = d;
            }
        });
        centroids.push(c);
    }
    centroids
}

fn assign(vectors: &[DocVector], centroids: &[Vec<f64>]) -> (Vec<u32>, Vec<f64>) {
    let norms: Vec<f64> = centroids.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    vectors.par_iter().map(|x| nearest(x, centroids, &norms)).unzip()
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Empty clusters are reseeded with the point farthest from its centroid.
/// Centroid sums run per cluster over members in input order, so results do
/// not depend on the thread count.
pub fn kmeans(vectors: &[DocVector], params: &KMeansParams) -> Result<ClusteringResult> {
    let KMeansParams { k, seed, max_iter, tol } = *params;
    if vectors.is_empty() {
        return Err(Error::Clustering("no vectors to cluster".into()));
    }
    if k == 0 {
        return Err(Error::Clustering("k must be >= 1".into()));
    }
    if max_iter == 0 {
        return Err(Error::Clustering("max_iter must be >= 1".into()));
    }
    let usable = vectors.iter().filter(|v| !v.is_zero()).count();
    if k > usable {
        return Err(Error::Clustering(format!("k={k} exceeds the {usable} nonzero vectors")));
    }
    let dim = vectors
        .iter()
        .flat_map(|v| v.entries.iter().map(|&(j, _)| j as usize + 1))
        .max()
        .unwrap_or(0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plus_plus(vectors, k, dim, &mut rng);
    let mut history = Vec::new();
    let mut iterations = 0;

    loop {
        let (mut labels, mut dists) = assign(vectors, &centroids);
        history.push(dists.iter().sum::<f64>());
        if iterations == max_iter {
            break;
        }
        iterations += 1;

        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            members[l as usize].push(i);
        }
        for empty in 0..k {
            if !members[empty].is_empty() {
                continue;
            }
            let far = (0..vectors.len())
                .filter(|&i| members[labels[i] as usize].len() > 1)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
            let Some(far) = far else { break };
            let old = labels[far] as usize;
            members[old].retain(|&i| i != far);
            members[empty].push(far);
            labels[far] = empty as u32;
            dists[far] = 0.0;
        }

        let updated: Vec<Vec<f64>> = members
            .par_iter()
            .zip(centroids.par_iter())
            .map(|(idx, old)| {
                if idx.is_empty() {
                    return old.clone();
                }
                let mut sum = vec![0.0; dim];
                for &i in idx {
                    for &(j, w) in &vectors[i].entries {
                        sum[j as usize] += w;
                    }
                }
                let n = idx.len() as f64;
                sum.iter_mut().for_each(|s| *s /= n);
                sum
            })
            .collect();
        let shift: f64 = updated
            .iter()
            .zip(&centroids)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)))
            .sum::<f64>()
            .sqrt();
        centroids = updated;
        log::debug!(
            "kmeans iter {iterations}: inertia {} shift {shift:e}",
            history.last().unwrap()
        );
        if shift <= tol {
            let (_, dists) = assign(vectors, &centroids);
            history.push(dists.iter().sum());
            break;
        }
    }

    let (labels, dists) = assign(vectors, &centroids);
    let inertia = dists.iter().sum();
    Ok(ClusteringResult {
        article_ids: vectors.iter().map(|v| v.article_id.clone()).collect(),
        labels,
        centroids,
        inertia,
        inertia_history: history,
        k,
        seed,
        dim,
        iterations,
    })
}
