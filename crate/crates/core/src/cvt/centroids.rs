use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::par;
use crate::qd::sq_dist;

const MAGIC: &[u8; 4] = b"CVTC";
const QUERY_BLOCK: usize = 64;
const CENTROID_BLOCK: usize = 2048;

/// Row-major `k x dim` matrix of centroids.
#[derive(Clone, Debug, PartialEq)]
pub struct CentroidSet {
    dim: usize,
    seed: u64,
    data: Vec<f64>,
    norms: Vec<f64>,
}

impl CentroidSet {
    pub fn new(dim: usize, data: Vec<f64>, seed: u64) -> Result<Self> {
        if dim == 0 || data.is_empty() || data.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("centroids"));
        }
        let norms = data
            .chunks_exact(dim)
            .map(|c| c.iter().map(|v| v * v).sum())
            .collect();
        Ok(Self {
            dim,
            seed,
            data,
            norms,
        })
    }

    pub fn k(&self) -> usize {
        self.norms.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Exact nearest centroid by linear scan; ties go to the lowest index.
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        debug_assert_eq!(x.len(), self.dim);
        let mut best = f64::INFINITY;
        let mut best_i = 0;
        for (i, c) in self.rows().enumerate() {
            let mut s = 0.0;
            let mut pruned = false;
            for (a, b) in c.chunks(8).zip(x.chunks(8)) {
                for (u, v) in a.iter().zip(b) {
                    s += (u - v) * (u - v);
                }
                if s > best {
                    pruned = true;
                    break;
                }
            }
            if !pruned && s < best {
                best = s;
                best_i = i;
            }
        }
        (best_i, best)
    }

    /// Nearest centroid (index, squared distance) for each row of the
    /// row-major `queries`, identical to calling [`nearest`](Self::nearest)
    /// on every row.
    ///
    /// Distances are first screened through `|x|^2 + |c|^2 - 2 x.c` computed
    /// with blocked matrix products, then every centroid that could be the
    /// nearest under that expansion's rounding error is rechecked exactly.
    pub fn nearest_many(&self, queries: &[f64]) -> Result<Vec<(usize, f64)>> {
        if queries.len() % self.dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: queries.len() % self.dim,
            });
        }
        let n = queries.len() / self.dim;
        let blocks: Vec<usize> = (0..n).step_by(QUERY_BLOCK).collect();
        let mut out = Vec::with_capacity(n);
        for start in blocks {
            let end = (start + QUERY_BLOCK).min(n);
            out.extend(self.nearest_block(&queries[start * self.dim..end * self.dim]));
        }
        Ok(out)
    }

    fn nearest_block(&self, q: &[f64]) -> Vec<(usize, f64)> {
        let d = self.dim;
        let m = q.len() / d;
        let qn: Vec<f64> = q
            .chunks_exact(d)
            .map(|r| r.iter().map(|v| v * v).sum())
            .collect();
        let cmax = self.norms.iter().cloned().fold(0.0, f64::max);
        let margin: Vec<f64> = qn
            .iter()
            .map(|&n| 4e-12 * (n + cmax) + f64::MIN_POSITIVE)
            .collect();

        let chunks: Vec<usize> = (0..self.k()).step_by(CENTROID_BLOCK).collect();
        // per chunk: for each query, the screened minimum and the candidates near it
        let screened = par::map(&chunks, |&c0| {
            let c1 = (c0 + CENTROID_BLOCK).min(self.k());
            let rows = c1 - c0;
            let mut g = vec![0.0; m * rows];
            // g (m x rows) = q (m x d) * C[c0..c1]^T (d x rows)
            unsafe {
                matrixmultiply::dgemm(
                    m,
                    d,
                    rows,
                    1.0,
                    q.as_ptr(),
                    d as isize,
                    1,
                    self.data[c0 * d..].as_ptr(),
                    1,
                    d as isize,
                    0.0,
                    g.as_mut_ptr(),
                    rows as isize,
                    1,
                );
            }
            let norms = &self.norms[c0..c1];
            let mut per_query = Vec::with_capacity(m);
            for (j, gj) in g.chunks_exact_mut(rows).enumerate() {
                let mut lo = f64::INFINITY;
                for (v, &cn) in gj.iter_mut().zip(norms) {
                    *v = qn[j] + cn - 2.0 * *v;
                    lo = lo.min(*v);
                }
                let cut = lo + 2.0 * margin[j];
                let cands: Vec<usize> = gj
                    .iter()
                    .enumerate()
                    .filter(|&(_, &v)| v <= cut)
                    .map(|(i, _)| c0 + i)
                    .collect();
                per_query.push((lo, cands));
            }
            per_query
        });

        (0..m)
            .map(|j| {
                let lo = screened
                    .iter()
                    .map(|s| s[j].0)
                    .fold(f64::INFINITY, f64::min);
                let x = &q[j * d..(j + 1) * d];
                let mut best = (0, f64::INFINITY);
                for s in &screened {
                    if s[j].0 > lo + 2.0 * margin[j] {
                        continue;
                    }
                    for &i in &s[j].1 {
                        let e = sq_dist(self.row(i), x);
                        if e < best.1 || (e == best.1 && i < best.0) {
                            best = (i, e);
                        }
                    }
                }
                best
            })
            .collect()
    }

    /// Binary format: magic `CVTC`, then `k`, `dim`, `seed` as little-endian
    /// u64, then the row-major values as little-endian f64.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        for v in [self.k() as u64, self.dim as u64, self.seed] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::Format {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("not a centroid file"));
        }
        let mut word = [0u8; 8];
        let mut header = [0u64; 3];
        for h in &mut header {
            r.read_exact(&mut word)?;
            *h = u64::from_le_bytes(word);
        }
        let [k, dim, seed] = header;
        let len = k.checked_mul(dim).ok_or_else(|| bad("header overflow"))? as usize;
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            r.read_exact(&mut word).map_err(|_| bad("truncated data"))?;
            data.push(f64::from_le_bytes(word));
        }
        if r.read(&mut word)? != 0 {
            return Err(bad("trailing bytes"));
        }
        Self::new(dim as usize, data, seed).map_err(|e| bad(&e.to_string()))
    }
}

/// `k` points drawn uniformly in the axis-aligned box `bounds`.
pub fn uniform_in_box<R: Rng + ?Sized>(bounds: &[(f64, f64)], k: usize, rng: &mut R) -> Vec<f64> {
    let mut data = Vec::with_capacity(k * bounds.len());
    for _ in 0..k {
        for &(lo, hi) in bounds {
            data.push(if hi > lo { rng.gen_range(lo..hi) } else { lo });
        }
    }
    data
}
