//! Signal sources and the windowed forecasting dataset.

mod maps;

pub use maps::{
    hopfield_lyapunov, hopfield_network, simulate_coupled_lorenz, simulate_hopfield, simulate_macarthur,
    HopfieldParams, LorenzParams, MacArthurParams, MapConfig, MapKind,
};

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::gvsa::{zscore_across_nodes, MultivariateSignal};
use crate::linalg::Matrix;
use crate::{Error, Result, FORMAT_HEADER};

/// Reads a numeric CSV with rows as nodes and columns as samples, or the
/// reverse when `transpose` is set. Lines starting with `#` are skipped.
pub fn load_csv_signal(path: &Path, transpose: bool) -> Result<MultivariateSignal> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_signal(&text, transpose)
}

pub fn parse_csv_signal(text: &str, transpose: bool) -> Result<MultivariateSignal> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: r,
            col: 0,
            msg: e.to_string(),
        })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().map_err(|e| Error::Parse {
                    row: r,
                    col: c,
                    msg: format!("`{field}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::RaggedRows {
                    row: r,
                    expected: first.len(),
                    found: row.len(),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            row: 0,
            col: 0,
            msg: "no data rows".into(),
        });
    }
    let cols = rows[0].len();
    let m = Matrix::from_vec(rows.len(), cols, rows.concat())?;
    MultivariateSignal::new(if transpose { m.transpose() } else { m })
}

/// Shortest round-trip decimal formatting, so reading back is exact.
pub fn signal_to_csv(x: &Matrix, header: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{header}");
    for i in 0..x.rows() {
        let row: Vec<String> = x.row(i).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn write_csv_signal(path: &Path, x: &Matrix, header: Option<&str>) -> Result<()> {
    let text = signal_to_csv(x, header.unwrap_or(FORMAT_HEADER));
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Sliding windows over one signal. `inputs[k]` covers columns
/// `start_k .. start_k + T_w`, and `targets[k]` is column
/// `start_k + T_w − 1 + H`. Values are raw; normalization happens downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub inputs: Vec<Matrix>,
    pub targets: Vec<Vec<f64>>,
    pub starts: Vec<usize>,
    pub window: usize,
    pub horizon: usize,
    pub stride: usize,
    pub splits: Vec<Split>,
}

/// Sizes `(train, val, test)`: test is the last 20%, then val the last 20%
/// of what remains, each rounded so that train+val is `floor(0.8 n)`.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let trainval = n * 4 / 5;
    let train = trainval * 4 / 5;
    (train, trainval - train, n - trainval)
}

pub fn make_windows(x: &MultivariateSignal, window: usize, horizon: usize, stride: usize) -> Result<WindowedDataset> {
    if window == 0 || stride == 0 {
        return Err(Error::InvalidConfig("window and stride must be positive".into()));
    }
    let length = x.len();
    if length < window + horizon {
        return Err(Error::TooShort {
            length,
            window,
            horizon,
        });
    }
    let count = (length - window - horizon) / stride + 1;
    let (train, val, _) = split_sizes(count);
    let v = x.values();
    let mut ds = WindowedDataset {
        inputs: Vec::with_capacity(count),
        targets: Vec::with_capacity(count),
        starts: Vec::with_capacity(count),
        window,
        horizon,
        stride,
        splits: Vec::with_capacity(count),
    };
    for k in 0..count {
        let start = k * stride;
        ds.inputs.push(x.window(start, start + window).into_values());
        ds.targets.push(v.col(start + window - 1 + horizon));
        ds.starts.push(start);
        ds.splits.push(if k < train {
            Split::Train
        } else if k < train + val {
            Split::Val
        } else {
            Split::Test
        });
    }
    Ok(ds)
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.splits[k] == split).collect()
    }

    /// Last raw column covered by any input or target of `split`.
    pub fn last_column(&self, split: Split) -> Option<usize> {
        self.indices(split)
            .last()
            .map(|&k| self.starts[k] + self.window - 1 + self.horizon)
    }
}

/// Z-scores each sample (column) across channels.
pub fn zscore_per_sample(x: &Matrix) -> Matrix {
    zscore_across_nodes(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Rng;

    fn ramp(n: usize, t: usize) -> MultivariateSignal {
        MultivariateSignal::new(Matrix::from_fn(n, t, |i, j| (i * 100 + j) as f64)).unwrap()
    }

    #[test]
    fn csv_literal() {
        let x = parse_csv_signal("# hdr\n1,2,3\n4.5, -6 ,7e-1\n", false).unwrap();
        assert_eq!(x.values(), &Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.5, -6.0, 0.7]]));
    }

    #[test]
    fn csv_transpose_twice_is_identity() {
        let x = parse_csv_signal("1,2,3\n4,5,6\n", false).unwrap();
        let t = parse_csv_signal(&signal_to_csv(x.values(), "#"), true).unwrap();
        assert_eq!(t.values(), &x.values().transpose());
        let back = parse_csv_signal(&signal_to_csv(t.values(), "#"), true).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn csv_full_precision_round_trip() {
        let mut rng = Rng::new(3);
        let m = rng.normal_matrix(5, 40).scale(1e3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_csv_signal(&path, &m, None).unwrap();
        assert_eq!(load_csv_signal(&path, false).unwrap().values(), &m);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(
            parse_csv_signal("1,2\n3,x\n", false),
            Err(Error::Parse { row: 1, col: 1, .. })
        ));
        assert!(matches!(
            parse_csv_signal("1,2\n3,4,5\n", false),
            Err(Error::RaggedRows {
                row: 1,
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn window_count_and_targets() {
        let x = ramp(3, 10);
        let ds = make_windows(&x, 3, 1, 1).unwrap();
        assert_eq!(ds.len(), 7);
        for k in 0..ds.len() {
            let s = ds.starts[k];
            assert_eq!(ds.inputs[k], x.window(s, s + 3).into_values());
            assert_eq!(ds.targets[k], x.sample(s + 3));
        }
        assert_eq!(make_windows(&x, 3, 2, 3).unwrap().len(), 2);
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            make_windows(&ramp(2, 6), 3, 5, 1),
            Err(Error::TooShort {
                length: 6,
                window: 3,
                horizon: 5
            })
        ));
        assert_eq!(make_windows(&ramp(2, 8), 3, 5, 1).unwrap().len(), 1);
    }

    #[test]
    fn chronological_splits() {
        assert_eq!(split_sizes(100), (64, 16, 20));
        let ds = make_windows(&ramp(2, 103), 3, 1, 1).unwrap();
        assert_eq!(ds.len(), 100);
        let (tr, va, te) = (
            ds.indices(Split::Train),
            ds.indices(Split::Val),
            ds.indices(Split::Test),
        );
        assert_eq!((tr.len(), va.len(), te.len()), (64, 16, 20));
        assert!(tr.last() < va.first() && va.last() < te.first());
    }

    #[test]
    fn zscore_columns() {
        let m = Matrix::from_rows(&[&[2.0, 1.0], &[2.0, 3.0], &[2.0, 5.0]]);
        let z = zscore_per_sample(&m);
        assert_eq!(z.col(0), vec![0.0; 3]);
        let mut rng = Rng::new(8);
        let z = zscore_per_sample(&rng.normal_matrix(12, 30).scale(4.0));
        for t in 0..30 {
            let c = z.col(t);
            let mean = c.iter().sum::<f64>() / 12.0;
            let std = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 11.0).sqrt();
            assert!(mean.abs() < 1e-10 && (std - 1.0).abs() < 1e-3);
        }
        let again = zscore_per_sample(&z);
        assert!(again.max_abs_diff(&z) < 1e-4);
    }
}
