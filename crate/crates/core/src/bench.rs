//! Timing of the explicit spatio-temporal kernel against per-sample batched
//! convolution.
//!
//! Each method's output is checked against a reference before its timing is
//! kept. The naive method with `L = I` must match the batched one. When the
//! naive kernel is over the memory cap, the batched output is checked against
//! the factored convolution instead.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::gvsa::{
    graph_conv, graph_conv_factored, graph_variate_tensor, kron_apply_naive, temporal_path, MultivariateSignal,
    NodeFunction, SupportMatrix, DEFAULT_KRON_CAP,
};
use crate::linalg::{Matrix, Rng};
use crate::{Error, Result};

/// Largest allowed elementwise difference between methods, relative to
/// `max(1, max|output|)`.
pub const EQUIVALENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    NaiveKron,
    BatchedLowRank,
    BatchedLowRankParallel,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::NaiveKron => "NaiveKron",
            Method::BatchedLowRank => "BatchedLowRank",
            Method::BatchedLowRankParallel => "BatchedLowRankParallel",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Temporal {
    Identity,
    /// Path graph over samples. The batched method has no counterpart, so
    /// these runs are timed without an equivalence check.
    Path,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub batch: usize,
    pub nodes: usize,
    pub t_list: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub kind: NodeFunction,
    pub temporal: Temporal,
    /// Cap on `N·T` for the naive kernel.
    pub cap: usize,
    pub parallel: bool,
    /// Run only these methods; empty means both sequential methods.
    pub methods: Vec<Method>,
}

impl BenchConfig {
    pub fn new(batch: usize, nodes: usize, t_list: Vec<usize>) -> Self {
        Self {
            batch,
            nodes,
            t_list,
            repeats: 7,
            seed: 0,
            kind: NodeFunction::ic(),
            temporal: Temporal::Identity,
            cap: DEFAULT_KRON_CAP,
            parallel: false,
            methods: Vec::new(),
        }
    }

    fn wants(&self, m: Method) -> bool {
        match m {
            Method::BatchedLowRankParallel => self.parallel,
            _ => self.methods.is_empty() || self.methods.contains(&m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub method: Method,
    pub batch: usize,
    pub nodes: usize,
    pub samples: usize,
    pub median_seconds: f64,
    /// Bytes of kernel storage the method allocates for the whole batch.
    pub est_bytes: u64,
    /// Sum of every output entry.
    pub checksum: f64,
    /// Whether the output matched a reference method.
    pub verified: bool,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub config: BenchConfig,
    pub results: Vec<BenchResult>,
    /// Fitted log-log slope of time against `T`, per method with ≥ 2 timed points.
    pub exponents: Vec<(Method, f64)>,
}

/// `B·N²·T·8`: one `N×N` slice per sample.
pub fn batched_bytes(batch: usize, nodes: usize, samples: usize) -> u64 {
    (batch * nodes * nodes * samples * 8) as u64
}

/// `B·(N·T)²·8`: one dense kernel per batch item.
pub fn naive_bytes(batch: usize, nodes: usize, samples: usize) -> u64 {
    let nt = (nodes * samples) as u64;
    batch as u64 * nt * nt * 8
}

fn batched(inputs: &[(MultivariateSignal, SupportMatrix)], kind: NodeFunction) -> Result<Vec<Matrix>> {
    inputs
        .iter()
        .map(|(x, w)| graph_conv(x.values(), &graph_variate_tensor(x, w, kind, false, false)?))
        .collect()
}

fn batched_parallel(inputs: &[(MultivariateSignal, SupportMatrix)], kind: NodeFunction) -> Result<Vec<Matrix>> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(inputs.len().max(1));
    let chunk = inputs.len().div_ceil(workers).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = inputs
            .chunks(chunk)
            .map(|c| s.spawn(move || batched(c, kind)))
            .collect();
        let mut out = Vec::with_capacity(inputs.len());
        for h in handles {
            out.extend(h.join().expect("worker panicked")?);
        }
        Ok(out)
    })
}

fn naive(
    inputs: &[(MultivariateSignal, SupportMatrix)],
    kind: NodeFunction,
    temporal: &Matrix,
    cap: usize,
) -> Result<Vec<Matrix>> {
    inputs
        .iter()
        .map(|(x, w)| kron_apply_naive(x, w, kind, temporal, cap))
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// One discarded warmup, then the median of `repeats` runs.
fn time_it<F: FnMut() -> Result<Vec<Matrix>>>(repeats: usize, mut f: F) -> Result<(f64, Vec<Matrix>)> {
    let out = f()?;
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        std::hint::black_box(f()?);
        times.push(start.elapsed().as_secs_f64());
    }
    Ok((median(times), out))
}

fn checksum(out: &[Matrix]) -> f64 {
    out.iter().flat_map(|m| m.as_slice()).sum()
}

/// Whether two method outputs agree to [`EQUIVALENCE_TOL`].
pub fn outputs_match(a: &[Matrix], b: &[Matrix]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.shape() == y.shape() && x.max_abs_diff(y) <= EQUIVALENCE_TOL * x.max_abs().max(1.0))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchSummary> {
    if cfg.batch == 0 || cfg.nodes < 2 || cfg.t_list.is_empty() || cfg.repeats == 0 {
        return Err(Error::InvalidConfig(
            "benchmark needs B >= 1, N >= 2, some T and repeats >= 1".into(),
        ));
    }
    if cfg.t_list.contains(&0) {
        return Err(Error::InvalidConfig("every T must be positive".into()));
    }
    let mut results = Vec::new();
    for &t_len in &cfg.t_list {
        let mut rng = Rng::derived(cfg.seed, &format!("bench/{t_len}"));
        let inputs = (0..cfg.batch)
            .map(|_| {
                let x = MultivariateSignal::new(rng.normal_matrix(cfg.nodes, t_len))?;
                let w = rng.uniform_matrix(cfg.nodes, cfg.nodes, 0.0, 1.0).symmetrized()?;
                Ok((x, SupportMatrix::fixed(w)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let temporal = match cfg.temporal {
            Temporal::Identity => Matrix::identity(t_len),
            Temporal::Path => temporal_path(t_len),
        };

        let reference: Vec<Matrix> = batched(&inputs, cfg.kind)?;
        let factored = inputs
            .iter()
            .map(|(x, w)| graph_conv_factored(x, w, cfg.kind))
            .collect::<Result<Vec<_>>>()?;
        let batched_ok = outputs_match(&reference, &factored);

        let mut naive_ok = None;
        if cfg.wants(Method::NaiveKron) {
            let result = match naive(&inputs, cfg.kind, &temporal, cfg.cap) {
                Err(Error::MemoryBudgetExceeded { required, cap }) => BenchResult {
                    method: Method::NaiveKron,
                    batch: cfg.batch,
                    nodes: cfg.nodes,
                    samples: t_len,
                    median_seconds: f64::NAN,
                    est_bytes: naive_bytes(cfg.batch, cfg.nodes, t_len),
                    checksum: f64::NAN,
                    verified: false,
                    skipped: Some(format!("N*T = {required} exceeds cap {cap}")),
                },
                Err(e) => return Err(e),
                Ok(first) => {
                    let verified = cfg.temporal == Temporal::Identity && outputs_match(&first, &reference);
                    naive_ok = Some(verified);
                    if cfg.temporal == Temporal::Identity && !verified {
                        return Err(Error::Verification(format!(
                            "naive and batched outputs differ at T = {t_len}; timings rejected"
                        )));
                    }
                    let (secs, out) = time_it(cfg.repeats, || naive(&inputs, cfg.kind, &temporal, cfg.cap))?;
                    BenchResult {
                        method: Method::NaiveKron,
                        batch: cfg.batch,
                        nodes: cfg.nodes,
                        samples: t_len,
                        median_seconds: secs,
                        est_bytes: naive_bytes(cfg.batch, cfg.nodes, t_len),
                        checksum: checksum(&out),
                        verified,
                        skipped: None,
                    }
                }
            };
            results.push(result);
        }

        let verified = naive_ok.unwrap_or(false) || batched_ok;
        if !verified {
            return Err(Error::Verification(format!(
                "batched output failed its reference check at T = {t_len}; timings rejected"
            )));
        }
        for method in [Method::BatchedLowRank, Method::BatchedLowRankParallel] {
            if !cfg.wants(method) {
                continue;
            }
            let (secs, out) = if method == Method::BatchedLowRank {
                time_it(cfg.repeats, || batched(&inputs, cfg.kind))?
            } else {
                time_it(cfg.repeats, || batched_parallel(&inputs, cfg.kind))?
            };
            results.push(BenchResult {
                method,
                batch: cfg.batch,
                nodes: cfg.nodes,
                samples: t_len,
                median_seconds: secs,
                est_bytes: batched_bytes(cfg.batch, cfg.nodes, t_len),
                checksum: checksum(&out),
                verified: outputs_match(&out, &reference),
                skipped: None,
            });
        }
    }

    let mut exponents = Vec::new();
    for method in [
        Method::NaiveKron,
        Method::BatchedLowRank,
        Method::BatchedLowRankParallel,
    ] {
        let pts: Vec<(f64, f64)> = results
            .iter()
            .filter(|r| r.method == method && r.skipped.is_none())
            .map(|r| (r.samples as f64, r.median_seconds))
            .collect();
        if let Some(slope) = loglog_slope(&pts) {
            exponents.push((method, slope));
        }
    }
    Ok(BenchSummary {
        config: cfg.clone(),
        results,
        exponents,
    })
}

impl BenchSummary {
    pub fn exponent(&self, method: Method) -> Option<f64> {
        self.exponents.iter().find(|(m, _)| *m == method).map(|(_, e)| *e)
    }

    /// Columns `method,B,N,T,median_seconds,est_bytes,checksum,verified,exponent`.
    /// `median_seconds` and `exponent` are the only wall-clock dependent
    /// columns.
    pub fn to_csv(&self, header: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{header}");
        out.push_str("method,B,N,T,median_seconds,est_bytes,checksum,verified,exponent\n");
        for r in &self.results {
            let exp = self.exponent(r.method).map_or(String::new(), |e| e.to_string());
            let secs = if r.skipped.is_some() {
                String::new()
            } else {
                r.median_seconds.to_string()
            };
            let sum = if r.skipped.is_some() {
                String::new()
            } else {
                r.checksum.to_string()
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.method, r.batch, r.nodes, r.samples, secs, r.est_bytes, sum, r.verified, exp
            );
        }
        out
    }

    /// Log-log scatter of time against `T`, one colour per method.
    pub fn to_svg(&self) -> String {
        const W: f64 = 480.0;
        const H: f64 = 320.0;
        const PAD: f64 = 40.0;
        let pts: Vec<&BenchResult> = self
            .results
            .iter()
            .filter(|r| r.skipped.is_none() && r.median_seconds > 0.0)
            .collect();
        let mut svg = format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">"#);
        svg.push('\n');
        if !pts.is_empty() {
            let lx: Vec<f64> = pts.iter().map(|r| (r.samples as f64).ln()).collect();
            let ly: Vec<f64> = pts.iter().map(|r| r.median_seconds.ln()).collect();
            let (x0, x1) = (
                lx.iter().cloned().fold(f64::INFINITY, f64::min),
                lx.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            );
            let (y0, y1) = (
                ly.iter().cloned().fold(f64::INFINITY, f64::min),
                ly.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            );
            let sx = |v: f64| PAD + (v - x0) / (x1 - x0).max(1e-12) * (W - 2.0 * PAD);
            let sy = |v: f64| H - PAD - (v - y0) / (y1 - y0).max(1e-12) * (H - 2.0 * PAD);
            for (k, r) in pts.iter().enumerate() {
                let colour = match r.method {
                    Method::NaiveKron => "#c0392b",
                    Method::BatchedLowRank => "#2471a3",
                    Method::BatchedLowRankParallel => "#1e8449",
                };
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{colour}"><title>{} T={}</title></circle>"#,
                    sx(lx[k]),
                    sy(ly[k]),
                    r.method,
                    r.samples
                );
            }
        }
        svg.push_str("</svg>\n");
        svg
    }

    pub fn write_csv(&self, path: &Path, header: &str) -> Result<()> {
        std::fs::write(path, self.to_csv(header)).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_size_methods_agree() {
        let mut cfg = BenchConfig::new(2, 5, vec![8]);
        cfg.repeats = 1;
        let s = run_benchmark(&cfg).unwrap();
        assert_eq!(s.results.len(), 2);
        assert!(s.results.iter().all(|r| r.verified));
        let a = s.results[0].checksum;
        let b = s.results[1].checksum;
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn over_cap_skips_naive_only() {
        let mut cfg = BenchConfig::new(1, 4, vec![8]);
        cfg.repeats = 1;
        cfg.cap = 16;
        cfg.parallel = true;
        let s = run_benchmark(&cfg).unwrap();
        assert!(s.results[0].skipped.is_some());
        assert!(s.results[1].verified && s.results[2].verified);
    }

    #[test]
    fn path_temporal_is_timed_unverified() {
        let mut cfg = BenchConfig::new(1, 3, vec![4, 6]);
        cfg.repeats = 1;
        cfg.temporal = Temporal::Path;
        let s = run_benchmark(&cfg).unwrap();
        let naive: Vec<_> = s.results.iter().filter(|r| r.method == Method::NaiveKron).collect();
        assert!(naive.iter().all(|r| !r.verified && r.skipped.is_none()));
    }

    #[test]
    fn memory_estimates_scale_exactly() {
        for t in [4, 8, 16] {
            assert_eq!(batched_bytes(3, 5, 2 * t), 2 * batched_bytes(3, 5, t));
            assert_eq!(naive_bytes(3, 5, 2 * t), 4 * naive_bytes(3, 5, t));
        }
        assert_eq!(batched_bytes(8, 16, 64), 8 * 256 * 64 * 8);
        assert_eq!(naive_bytes(2, 16, 64), 2 * 1024 * 1024 * 8);
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0].iter().map(|&t: &f64| (t, 3.0 * t.powf(1.5))).collect();
        assert!((loglog_slope(&pts).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn csv_shape() {
        let mut cfg = BenchConfig::new(1, 3, vec![4, 8]);
        cfg.repeats = 1;
        let csv = run_benchmark(&cfg).unwrap().to_csv("#gvnn-kit v1");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2 + 4);
        assert!(lines[2].starts_with("NaiveKron,1,3,4,"));
    }
}
