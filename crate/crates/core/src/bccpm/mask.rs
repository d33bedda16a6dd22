// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::timeseries::RoiTimeSeries;

/// Binary change-point indicator over time. Bit 0 (time 1) is always set; every
/// set bit opens a new block.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChangePointMask {
    bits: Vec<bool>,
}

impl ChangePointMask {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        match bits.first() {
            Some(true) => Ok(ChangePointMask { bits }),
            Some(false) => Err(Error::Config("mask must start with a change point at t = 1".into())),
            None => Err(Error::EmptyInput),
        }
    }

    /// The mask with a single block covering all `len` time points.
    pub fn single_block(len: usize) -> Self {
        let mut bits = vec![false; len.max(1)];
        bits[0] = true;
        ChangePointMask { bits }
    }

    /// Builds a mask from 1-indexed change times; time 1 is added if absent.
    pub fn from_change_points(len: usize, change_points: &[usize]) -> Result<Self> {
        let mut mask = Self::single_block(len);
        for &c in change_points {
            if c == 0 || c > len {
                return Err(Error::Config(format!("change point {c} outside [1, {len}]")));
            }
            mask.bits[c - 1] = true;
        }
        Ok(mask)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// 1-indexed times of the set bits.
    pub fn change_points(&self) -> Vec<usize> {
        self.starts().into_iter().map(|s| s + 1).collect()
    }

    pub fn block_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// 0-based start columns of each block.
    pub(crate) fn starts(&self) -> Vec<usize> {
        self.bits.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect()
    }

    /// Half-open 0-based column ranges of each block.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        let starts = self.starts();
        starts.iter().enumerate().map(|(k, &s)| (s, starts.get(k + 1).copied().unwrap_or(self.bits.len()))).collect()
    }

    pub fn check_against(&self, series: &RoiTimeSeries) -> Result<()> {
        if self.len() != series.len() {
            return Err(Error::Dimension(format!(
                "mask length {} does not match series length {}",
                self.len(),
                series.len()
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct MaskJson {
    #[serde(rename = "T")]
    length: usize,
    change_points: Vec<usize>,
}

impl Serialize for ChangePointMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MaskJson { length: self.len(), change_points: self.change_points() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ChangePointMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = MaskJson::deserialize(deserializer)?;
        if raw.change_points.first() != Some(&1) {
            return Err(serde::de::Error::custom("change_points must start with 1"));
        }
        if raw.change_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(serde::de::Error::custom("change_points must be strictly increasing"));
        }
        ChangePointMask::from_change_points(raw.length, &raw.change_points).map_err(serde::de::Error::custom)
    }
}

/// Splits a series at the mask's change points. Concatenating the result gives
/// back the input.
pub fn extract_segments(series: &RoiTimeSeries, mask: &ChangePointMask) -> Result<Vec<RoiTimeSeries>> {
    mask.check_against(series)?;
    Ok(mask.blocks().into_iter().map(|(s, e)| series.columns(s, e)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn series(t: usize) -> RoiTimeSeries {
        RoiTimeSeries::new(DMatrix::from_fn(2, t, |i, j| (i * 100 + j) as f64)).unwrap()
    }

    #[test]
    fn single_block_is_identity() {
        let s = series(4);
        let segs = extract_segments(&s, &ChangePointMask::single_block(4)).unwrap();
        assert_eq!(segs, vec![s]);
    }

    #[test]
    fn split_in_half() {
        let s = series(4);
        let mask = ChangePointMask::new(vec![true, false, true, false]).unwrap();
        let segs = extract_segments(&s, &mask).unwrap();
        assert_eq!(segs.iter().map(|x| x.len()).collect::<Vec<_>>(), vec![2, 2]);
        assert_eq!(mask.change_points(), vec![1, 3]);
    }

    #[test]
    fn rejects_bad_masks() {
        assert!(ChangePointMask::new(vec![false, true]).is_err());
        assert!(extract_segments(&series(4), &ChangePointMask::single_block(5)).is_err());
        assert!(serde_json::from_str::<ChangePointMask>(r#"{"T":5,"change_points":[2]}"#).is_err());
        assert!(serde_json::from_str::<ChangePointMask>(r#"{"T":5,"change_points":[1,6]}"#).is_err());
    }

    #[test]
    fn json_layout() {
        let mask = ChangePointMask::from_change_points(200, &[1, 61]).unwrap();
        let text = serde_json::to_string(&mask).unwrap();
        assert_eq!(text, r#"{"T":200,"change_points":[1,61]}"#);
        assert_eq!(serde_json::from_str::<ChangePointMask>(&text).unwrap(), mask);
    }

    proptest! {
        #[test]
        fn segments_partition_the_series(rest in proptest::collection::vec(any::<bool>(), 0..30)) {
            let mut bits = vec![true];
            bits.extend(rest);
            let s = series(bits.len());
            let mask = ChangePointMask::new(bits).unwrap();
            let segs = extract_segments(&s, &mask).unwrap();
            prop_assert_eq!(segs.len(), mask.block_count());
            let cols: Vec<_> = segs.iter().flat_map(|g| g.values().column_iter().map(|c| c.into_owned()).collect::<Vec<_>>()).collect();
            let joined = DMatrix::from_columns(&cols);
            prop_assert_eq!(&joined, s.values());
        }
    }
}
