//! The data universe: points, datasets, weighted datasets, and the text
//! format used for dataset ingestion and synthetic-data output.
//!
//! All types here are immutable after construction and safe to share across
//! threads.

use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{dim_mismatch, Error, Result};

/// A single universe element. For boolean universes every coordinate is
/// 0.0/1.0; halfspace universes allow coordinates from a finite grid in
/// [-1, 1] (separator elements may carry off-grid threshold coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    coords: Vec<f64>,
}

impl DataPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        DataPoint { coords }
    }

    /// Boolean point from 0/1 bits.
    pub fn bits(bits: &[u8]) -> Self {
        DataPoint {
            coords: bits.iter().map(|&b| if b != 0 { 1.0 } else { 0.0 }).collect(),
        }
    }

    /// Boolean point of dimension `d` from the low `d` bits of `mask`
    /// (coordinate 0 = least significant bit).
    pub fn from_mask(mask: u32, d: usize) -> Self {
        DataPoint {
            coords: (0..d).map(|j| ((mask >> j) & 1) as f64).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coord(&self, j: usize) -> f64 {
        self.coords[j]
    }

    pub fn is_binary(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0 || c == 1.0)
    }

    /// Bitmask of a binary point, coordinate 0 in the least significant bit.
    pub fn mask(&self) -> Option<u32> {
        if self.dim() > 32 || !self.is_binary() {
            return None;
        }
        let mut m = 0u32;
        for (j, &c) in self.coords.iter().enumerate() {
            if c == 1.0 {
                m |= 1 << j;
            }
        }
        Some(m)
    }

    /// Append `d` complement coordinates (1 - x_j), turning monotone
    /// conjunctions/disjunctions/parities over 2d variables into their
    /// non-monotone counterparts over the original d.
    pub fn negation_doubled(&self) -> DataPoint {
        let mut coords = self.coords.clone();
        coords.extend(self.coords.iter().map(|&c| 1.0 - c));
        DataPoint { coords }
    }
}

impl fmt::Display for DataPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, c) in self.coords.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            if *c == c.trunc() && c.abs() < 1e9 {
                write!(f, "{}", *c as i64)?;
            } else {
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

/// A labelled example (x, y) over the extended universe X_A x {0,1}.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub attributes: DataPoint,
    pub label: u8,
}

impl LabeledPoint {
    pub fn new(attributes: DataPoint, label: u8) -> Result<Self> {
        if label > 1 {
            return Err(Error::Input(format!("label must be 0/1, got {label}")));
        }
        Ok(LabeledPoint { attributes, label })
    }

    /// Encode as a (d+1)-dimensional point with the label in the final
    /// coordinate, the representation loss-lifted classes evaluate on.
    pub fn into_point(self) -> DataPoint {
        let mut coords = self.attributes.coords;
        coords.push(self.label as f64);
        DataPoint { coords }
    }
}

/// An ordered, dimension-homogeneous, nonempty list of points.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<DataPoint>,
    dim: usize,
}

impl Dataset {
    pub fn new(points: Vec<DataPoint>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::Input("dataset must contain at least one record".into()))?;
        let dim = first.dim();
        for (i, p) in points.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::Input(format!(
                    "record {} has dimension {}, expected {dim}",
                    i + 1,
                    p.dim()
                )));
            }
        }
        Ok(Dataset { points, dim })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DataPoint> {
        self.points.iter()
    }

    /// The dataset with record `i` replaced by `p` (a neighboring dataset).
    pub fn with_record(&self, i: usize, p: DataPoint) -> Result<Dataset> {
        if i >= self.n() {
            return Err(Error::Input(format!("record index {i} out of range")));
        }
        if p.dim() != self.dim {
            return Err(dim_mismatch(self.dim, p.dim()));
        }
        let mut points = self.points.clone();
        points[i] = p;
        Ok(Dataset { points, dim: self.dim })
    }

    /// Parse the text format: one record per line, comma-separated values,
    /// `#` comment lines and blank lines ignored.
    pub fn parse<R: BufRead>(reader: R) -> Result<Dataset> {
        let points = parse_points(reader, None)?;
        Dataset::new(points)
    }

    /// Parse records with a trailing 0/1 label column (lifted classes). The
    /// label becomes the final coordinate of each point.
    pub fn parse_labeled<R: BufRead>(reader: R) -> Result<Dataset> {
        let points = parse_points(reader, Some(()))?;
        Dataset::new(points)
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for p in &self.points {
            writeln!(w, "{p}")?;
        }
        Ok(())
    }

    /// The negation-doubling preprocessing: append d complement coordinates
    /// to every record, so monotone classes over 2d variables subsume the
    /// non-monotone classes over the original d.
    pub fn negation_doubled(&self) -> Dataset {
        Dataset {
            points: self.points.iter().map(DataPoint::negation_doubled).collect(),
            dim: 2 * self.dim,
        }
    }

    /// n points over {0,1}^d with independent P(x_j = 1) = p_one.
    pub fn sample_binary<R: Rng>(d: usize, n: usize, p_one: f64, rng: &mut R) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::Input("n must be >= 1".into()));
        }
        let points = (0..n)
            .map(|_| DataPoint::new((0..d).map(|_| if rng.gen_bool(p_one) { 1.0 } else { 0.0 }).collect()))
            .collect();
        Dataset::new(points)
    }
}

fn parse_points<R: BufRead>(reader: R, labeled: Option<()>) -> Result<Vec<DataPoint>> {
    let mut points = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Input(format!("line {}: {e}", lineno + 1)))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut coords = Vec::new();
        for field in body.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("line {}: bad value {:?}", lineno + 1, field.trim())))?;
            coords.push(v);
        }
        if labeled.is_some() {
            let label = coords.pop().unwrap();
            if label != 0.0 && label != 1.0 {
                return Err(Error::Input(format!(
                    "line {}: label column must be 0/1, got {label}",
                    lineno + 1
                )));
            }
            coords.push(label);
        }
        points.push(DataPoint::new(coords));
    }
    Ok(points)
}

/// A weighted dataset, the oracle input format. May be empty (mechanisms
/// add separator entries to it), and weights are unrestricted finite reals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedDataset {
    entries: Vec<(DataPoint, f64)>,
}

impl WeightedDataset {
    pub fn new(entries: Vec<(DataPoint, f64)>) -> Result<Self> {
        let mut dim = None;
        for (i, (p, w)) in entries.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::Input(format!("entry {i}: weight must be finite")));
            }
            match dim {
                None => dim = Some(p.dim()),
                Some(d) if p.dim() != d => return Err(dim_mismatch(d, p.dim())),
                _ => {}
            }
        }
        Ok(WeightedDataset { entries })
    }

    pub fn from_dataset(s: &Dataset, weight: f64) -> WeightedDataset {
        WeightedDataset {
            entries: s.iter().map(|p| (p.clone(), weight)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(DataPoint, f64)] {
        &self.entries
    }

    pub fn push(&mut self, p: DataPoint, w: f64) {
        self.entries.push((p, w));
    }

    pub fn scale_weights(&mut self, factor: f64) {
        for (_, w) in &mut self.entries {
            *w *= factor;
        }
    }

    pub fn contains_point(&self, p: &DataPoint) -> bool {
        self.entries.iter().any(|(q, _)| q == p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn dataset_rejects_empty_and_ragged() {
        assert!(Dataset::new(vec![]).is_err());
        let ragged = vec![DataPoint::bits(&[1, 0]), DataPoint::bits(&[1])];
        assert!(Dataset::new(ragged).is_err());
    }

    #[test]
    fn parse_roundtrip_with_comments() {
        let text = "# header\n1,0,1\n\n0,1,0  # trailing\n";
        let ds = Dataset::parse(Cursor::new(text)).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.points()[1], DataPoint::bits(&[0, 1, 0]));
        let mut out = Vec::new();
        ds.write(&mut out).unwrap();
        let again = Dataset::parse(Cursor::new(out)).unwrap();
        assert_eq!(again, ds);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = Dataset::parse(Cursor::new("1,0\n1,x\n")).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn labeled_parse_appends_label_coordinate() {
        let ds = Dataset::parse_labeled(Cursor::new("1,0,1\n0,1,0\n")).unwrap();
        assert_eq!(ds.dim(), 3);
        assert_eq!(ds.points()[0].coord(2), 1.0);
        assert!(Dataset::parse_labeled(Cursor::new("1,0,2\n")).is_err());
    }

    #[test]
    fn mask_roundtrip() {
        let p = DataPoint::from_mask(0b101, 3);
        assert_eq!(p, DataPoint::bits(&[1, 0, 1]));
        assert_eq!(p.mask(), Some(0b101));
        assert_eq!(DataPoint::new(vec![0.5]).mask(), None);
    }

    #[test]
    fn negation_doubling() {
        let p = DataPoint::bits(&[1, 0]).negation_doubled();
        assert_eq!(p, DataPoint::bits(&[1, 0, 0, 1]));
    }
}
