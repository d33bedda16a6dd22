// SPDX-License-Identifier: MIT OR Apache-2.0

//! Local binary encoding of ROI order relations.
//!
//! Each time column `d` of length m becomes 2(m − 1) comparison bits: for every
//! ROI i ≥ 2 a left bit `d_i ≤ d_{i−1}`, for 2 ≤ i ≤ m − 1 a right bit
//! `d_i ≤ d_{i+1}`, and a final wrap-around bit `d_m ≤ d_1`. Bits are grouped
//! six at a time (first bit most significant) into codes in [0, 63], and each
//! group row is histogrammed over time into 64 bins.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::bccpm::{extract_segments, ChangePointMask};
use crate::error::{Error, Result};
use crate::timeseries::{standardize_rows, RoiTimeSeries};

pub const BITS_PER_GROUP: usize = 6;
pub const CODE_COUNT: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCode {
    bits: Vec<bool>,
}

impl BinaryCode {
    pub fn new(bits: Vec<bool>) -> Self {
        BinaryCode { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Appends zero bits up to the next multiple of six.
    pub fn padded(mut self) -> Self {
        let rem = self.bits.len() % BITS_PER_GROUP;
        if rem != 0 {
            self.bits.resize(self.bits.len() + BITS_PER_GROUP - rem, false);
        }
        self
    }
}

pub fn encode_binary(column: &[f64]) -> Result<BinaryCode> {
    let m = column.len();
    if m < 2 {
        return Err(Error::Dimension(format!("encoding needs at least 2 ROIs, got {m}")));
    }
    let mut bits = Vec::with_capacity(2 * (m - 1));
    for i in 1..m {
        bits.push(column[i] <= column[i - 1]);
        if i + 1 < m {
            bits.push(column[i] <= column[i + 1]);
        }
    }
    bits.push(column[m - 1] <= column[0]);
    Ok(BinaryCode { bits })
}

pub fn bits_to_decimal(code: &BinaryCode) -> Result<Vec<u8>> {
    if !code.len().is_multiple_of(BITS_PER_GROUP) {
        return Err(Error::Grouping { len: code.len() });
    }
    Ok(code.bits.chunks(BITS_PER_GROUP).map(|g| g.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8)).collect())
}

/// Group codes, g rows by T_b columns, every entry in [0, 63].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupCodeMatrix {
    codes: DMatrix<u8>,
}

impl GroupCodeMatrix {
    pub fn group_count(&self) -> usize {
        self.codes.nrows()
    }

    pub fn len(&self) -> usize {
        self.codes.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &DMatrix<u8> {
        &self.codes
    }
}

/// Number of 6-bit groups for m ROIs after zero padding.
pub fn group_count(roi_count: usize) -> usize {
    (2 * roi_count.saturating_sub(1)).div_ceil(BITS_PER_GROUP)
}

pub fn encode_series(block: &RoiTimeSeries) -> Result<GroupCodeMatrix> {
    let m = block.roi_count();
    if m < 4 {
        return Err(Error::Dimension(format!("series encoding needs at least 4 ROIs, got {m}")));
    }
    let g = group_count(m);
    let mut codes = DMatrix::zeros(g, block.len());
    let mut column = vec![0.0; m];
    for (t, col) in block.values().column_iter().enumerate() {
        column.iter_mut().zip(col.iter()).for_each(|(d, &v)| *d = v);
        let decimals = bits_to_decimal(&encode_binary(&column)?.padded())?;
        codes.set_column(t, &DVector::from_vec(decimals));
    }
    Ok(GroupCodeMatrix { codes })
}

/// Per-group 64-bin code histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBinaryFeature {
    histograms: DMatrix<f64>,
    normalized: bool,
}

impl LocalBinaryFeature {
    pub fn histograms(&self) -> &DMatrix<f64> {
        &self.histograms
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    /// Row-major flattening, g·64 values.
    pub fn flatten(&self) -> Vec<f64> {
        self.histograms.transpose().iter().copied().collect()
    }
}

pub fn histogram_features(codes: &GroupCodeMatrix, normalized: bool) -> Result<LocalBinaryFeature> {
    if codes.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut histograms = DMatrix::zeros(codes.group_count(), CODE_COUNT);
    for (r, row) in codes.codes.row_iter().enumerate() {
        for &c in row.iter() {
            histograms[(r, c as usize)] += 1.0;
        }
    }
    if normalized {
        histograms /= codes.len() as f64;
    }
    Ok(LocalBinaryFeature { histograms, normalized })
}

/// Feature vector of one subject: every segment is z-scored per ROI, encoded and
/// histogrammed (normalized), then the g×64 matrices are averaged with weights
/// proportional to segment length and flattened row-major.
pub fn features_for_sample(series: &RoiTimeSeries, mask: &ChangePointMask) -> Result<Vec<f64>> {
    let segments = extract_segments(series, mask)?;
    let total = series.len() as f64;
    let mut acc = DMatrix::zeros(group_count(series.roi_count()), CODE_COUNT);
    for segment in &segments {
        let codes = encode_series(&standardize_rows(segment))?;
        let hist = histogram_features(&codes, true)?;
        acc += hist.histograms * (segment.len() as f64 / total);
    }
    Ok(LocalBinaryFeature { histograms: acc, normalized: true }.flatten())
}

/// Feature CSV: a header row, then one row per sample with the integer label
/// first and the g·64 histogram values after it. Columns are named `g{r}_c{code}`.
pub fn format_feature_csv(labels: &[i32], features: &DMatrix<f64>) -> Result<String> {
    if labels.len() != features.nrows() {
        return Err(Error::Dimension(format!("{} labels for {} feature rows", labels.len(), features.nrows())));
    }
    if !features.ncols().is_multiple_of(CODE_COUNT) {
        return Err(Error::Dimension(format!("feature width {} is not a multiple of {CODE_COUNT}", features.ncols())));
    }
    let mut out = String::from("label");
    for j in 0..features.ncols() {
        write!(out, ",g{}_c{}", j / CODE_COUNT + 1, j % CODE_COUNT).unwrap();
    }
    out.push('\n');
    for (label, row) in labels.iter().zip(features.row_iter()) {
        write!(out, "{label}").unwrap();
        for v in row.iter() {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Inverse of [`format_feature_csv`]; the header row is optional.
pub fn parse_feature_csv(text: &str) -> Result<(Vec<i32>, DMatrix<f64>)> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Spec(format!("malformed csv: {e}")))?;
        let file_row = i + 1;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let first = record.get(0).unwrap_or("");
        if i == 0 && first.parse::<i32>().is_err() {
            continue;
        }
        let label =
            first.parse::<i32>().map_err(|_| Error::Parse { row: file_row, col: 1, text: first.to_string() })?;
        let values = record
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, cell)| match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse { row: file_row, col: j + 1, text: cell.to_string() }),
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first_row) = rows.first() {
            if values.len() != first_row.len() {
                return Err(Error::Format { row: file_row, expected: first_row.len() + 1, found: values.len() + 1 });
            }
        }
        labels.push(label);
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let width = rows[0].len();
    Ok((labels, DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j])))
}

pub fn load_feature_csv(path: impl AsRef<Path>) -> Result<(Vec<i32>, DMatrix<f64>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_feature_csv(&text).map_err(|e| e.context(format!("reading {}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn feature_csv_round_trip() {
        let features = DMatrix::from_fn(3, 128, |i, j| (i * 128 + j) as f64 / 7.0);
        let labels = vec![1, -1, 0];
        let text = format_feature_csv(&labels, &features).unwrap();
        assert!(text.starts_with("label,g1_c0,g1_c1,"));
        assert!(text.lines().next().unwrap().ends_with(",g2_c63"));
        assert_eq!(parse_feature_csv(&text).unwrap(), (labels, features));
        assert!(format_feature_csv(&[1], &DMatrix::zeros(1, 10)).is_err());
        assert!(matches!(parse_feature_csv("label,a,b\n1,0.5,0.5\n-1,0.5\n"), Err(Error::Format { row: 3, .. })));
        assert!(matches!(parse_feature_csv("1,0.5,x\n"), Err(Error::Parse { row: 1, col: 3, .. })));
    }
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Table of pairwise comparisons indexed by ROI, independent of the
    // interleaving loop in `encode_binary`.
    fn comparison_table_oracle(d: &[f64]) -> Vec<bool> {
        let m = d.len();
        let le = |a: usize, b: usize| d[a] <= d[b];
        let mut out = vec![false; 2 * (m - 1)];
        for i in 2..=m {
            out[2 * (i - 1) - 2] = le(i - 1, i - 2);
        }
        for i in 2..m {
            out[2 * (i - 1) - 1] = le(i - 1, i);
        }
        out[2 * (m - 1) - 1] = le(m - 1, 0);
        out
    }

    fn bits(v: &[u8]) -> Vec<bool> {
        v.iter().map(|&b| b == 1).collect()
    }

    #[test]
    fn golden_four_roi_column() {
        let code = encode_binary(&[4.0, 2.0, 5.0, 1.0]).unwrap();
        assert_eq!(code.bits(), bits(&[1, 1, 0, 0, 1, 1]).as_slice());
        assert_eq!(code.bits(), comparison_table_oracle(&[4.0, 2.0, 5.0, 1.0]).as_slice());
        assert_eq!(bits_to_decimal(&code).unwrap(), vec![51]);
    }

    #[test]
    fn constant_and_increasing_columns() {
        let c = encode_binary(&[3.0; 7]).unwrap();
        assert_eq!(c.len(), 12);
        assert!(c.bits().iter().all(|&b| b));

        let inc: Vec<f64> = (0..7).map(f64::from).collect();
        let c = encode_binary(&inc).unwrap();
        let b = c.bits();
        // left bits at even positions, right bits at odd positions, wrap bit last
        for i in 0..5 {
            assert!(!b[2 * i]);
            assert!(b[2 * i + 1]);
        }
        assert!(!b[10]);
        assert!(!b[11]);
    }

    #[test]
    fn too_few_rois() {
        assert!(matches!(encode_binary(&[1.0]), Err(Error::Dimension(_))));
        let s = RoiTimeSeries::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert!(matches!(encode_series(&s), Err(Error::Dimension(_))));
    }

    #[test]
    fn grouping_extremes_and_errors() {
        assert_eq!(bits_to_decimal(&BinaryCode::new(vec![true; 6])).unwrap(), vec![63]);
        assert_eq!(bits_to_decimal(&BinaryCode::new(vec![false; 6])).unwrap(), vec![0]);
        assert_eq!(
            bits_to_decimal(&BinaryCode::new(bits(&[1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 1]))).unwrap(),
            vec![51, 1]
        );
        assert!(matches!(bits_to_decimal(&BinaryCode::new(vec![true; 8])), Err(Error::Grouping { len: 8 })));
        assert_eq!(BinaryCode::new(vec![true; 8]).padded().len(), 12);
    }

    #[test]
    fn single_column_block() {
        let s = RoiTimeSeries::from_rows(&[vec![4.0], vec![2.0], vec![5.0], vec![1.0]]).unwrap();
        let e = encode_series(&s).unwrap();
        assert_eq!(e.codes(), &DMatrix::from_element(1, 1, 51u8));
    }

    #[test]
    fn full_size_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = RoiTimeSeries::new(DMatrix::from_fn(358, 12, |_, _| rng.random::<f64>())).unwrap();
        let e = encode_series(&s).unwrap();
        assert_eq!((e.group_count(), e.len()), (119, 12));
        let o = histogram_features(&e, false).unwrap();
        assert_eq!(o.histograms().shape(), (119, 64));
        let f = features_for_sample(&s, &ChangePointMask::single_block(12)).unwrap();
        assert_eq!(f.len(), 7616);
    }

    #[test]
    fn identical_columns_give_identical_codes() {
        let col = [0.3, -1.0, 2.0, 0.1, 0.0];
        let s = RoiTimeSeries::new(DMatrix::from_fn(5, 6, |i, _| col[i])).unwrap();
        let e = encode_series(&s).unwrap();
        for t in 1..6 {
            assert_eq!(e.codes().column(t), e.codes().column(0));
        }
    }

    #[test]
    fn delta_histogram() {
        let s = RoiTimeSeries::new(DMatrix::from_fn(4, 10, |i, _| [4.0, 2.0, 5.0, 1.0][i])).unwrap();
        let o = histogram_features(&encode_series(&s).unwrap(), false).unwrap();
        assert_eq!(o.histograms()[(0, 51)], 10.0);
        assert_eq!(o.histograms().row(0).sum(), 10.0);
        let n = histogram_features(&encode_series(&s).unwrap(), true).unwrap();
        assert_eq!(n.histograms()[(0, 51)], 1.0);
    }

    #[test]
    fn segment_aggregation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let half = DMatrix::from_fn(6, 20, |_, _| rng.random::<f64>());
        let whole = RoiTimeSeries::new(half.clone()).unwrap();
        let single = features_for_sample(&whole, &ChangePointMask::single_block(20)).unwrap();
        let direct = histogram_features(&encode_series(&standardize_rows(&whole)).unwrap(), true).unwrap().flatten();
        assert_eq!(single, direct);

        let doubled = RoiTimeSeries::new(DMatrix::from_fn(6, 40, |i, j| half[(i, j % 20)])).unwrap();
        let two = features_for_sample(&doubled, &ChangePointMask::from_change_points(40, &[21]).unwrap()).unwrap();
        for (a, b) in two.iter().zip(&single) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn increasing_map(knots: &[(f64, f64)]) -> impl Fn(f64) -> f64 + '_ {
        move |x| {
            // piecewise-linear through sorted knots, extended linearly at the ends
            let k = knots.partition_point(|&(kx, _)| kx < x).clamp(1, knots.len() - 1);
            let (x0, y0) = knots[k - 1];
            let (x1, y1) = knots[k];
            y0 + (x - x0) * (y1 - y0) / (x1 - x0)
        }
    }

    #[test]
    fn monotone_transform_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let m = rng.random_range(2..30);
            let col: Vec<f64> = (0..m).map(|_| (rng.random_range(-5.0f64..5.0) * 4.0).round() / 4.0).collect();
            let mut xs: Vec<f64> = (0..6).map(|_| rng.random_range(-20.0..20.0)).collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let mut y = rng.random_range(-3.0..3.0);
            let knots: Vec<(f64, f64)> = xs
                .iter()
                .map(|&x| {
                    y += rng.random_range(0.01..5.0);
                    (x, y)
                })
                .collect();
            let f = increasing_map(&knots);
            let mapped: Vec<f64> = col.iter().map(|&v| f(v)).collect();
            assert_eq!(encode_binary(&col).unwrap(), encode_binary(&mapped).unwrap());
        }
    }

    proptest! {
        #[test]
        fn series_encoding_matches_columnwise_composition(
            data in proptest::collection::vec(-100.0f64..100.0, 200)
        ) {
            let s = RoiTimeSeries::new(DMatrix::from_vec(10, 20, data)).unwrap();
            let e = encode_series(&s).unwrap();
            for (t, col) in s.values().column_iter().enumerate() {
                let c: Vec<f64> = col.iter().copied().collect();
                let expected = bits_to_decimal(&encode_binary(&c).unwrap().padded()).unwrap();
                let got: Vec<u8> = e.codes().column(t).iter().copied().collect();
                prop_assert_eq!(got, expected);
            }
            prop_assert!(e.codes().iter().all(|&c| c < 64));
            let h = histogram_features(&e, false).unwrap();
            for row in h.histograms().row_iter() {
                prop_assert_eq!(row.sum(), 20.0);
            }
        }

        #[test]
        fn features_ignore_positive_rescaling(
            data in proptest::collection::vec(-10.0f64..10.0, 6 * 16),
            scale in 0.01f64..100.0,
        ) {
            let s = RoiTimeSeries::new(DMatrix::from_vec(6, 16, data)).unwrap();
            let mask = ChangePointMask::from_change_points(16, &[7]).unwrap();
            let a = features_for_sample(&s, &mask).unwrap();
            let b = features_for_sample(&s.scaled(scale), &mask).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
