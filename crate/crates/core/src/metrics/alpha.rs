//! Krippendorff's alpha for nominal binary ratings, coincidence-matrix form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Label;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlphaError {
    #[error("need at least 2 raters, got {0}")]
    TooFewRaters(usize),
    #[error("need at least 2 units with 2 or more ratings, got {0}")]
    TooFewPairableUnits(usize),
    #[error("all pairable ratings fall in one category; expected disagreement is 0")]
    DegenerateData,
    #[error("unit {unit} has {got} cells for {raters} raters")]
    Shape { unit: usize, got: usize, raters: usize },
}

/// Ratings indexed `[unit][rater]`; `None` is a missing rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingsMatrix {
    units: Vec<String>,
    raters: Vec<String>,
    cells: Vec<Vec<Option<Label>>>,
}

impl RatingsMatrix {
    pub fn new(units: Vec<String>, raters: Vec<String>, cells: Vec<Vec<Option<Label>>>) -> Result<Self, AlphaError> {
        if raters.len() < 2 {
            return Err(AlphaError::TooFewRaters(raters.len()));
        }
        if cells.len() != units.len() {
            return Err(AlphaError::Shape { unit: cells.len().min(units.len()), got: 0, raters: raters.len() });
        }
        if let Some((unit, row)) = cells.iter().enumerate().find(|(_, row)| row.len() != raters.len()) {
            return Err(AlphaError::Shape { unit, got: row.len(), raters: raters.len() });
        }
        Ok(Self { units, raters, cells })
    }

    /// Builds a matrix from per-rater columns with generated ids
    /// (`u0..`, `r0..`).
    pub fn from_columns(columns: &[Vec<Option<Label>>]) -> Result<Self, AlphaError> {
        let n_units = columns.first().map_or(0, Vec::len);
        if let Some((r, col)) = columns.iter().enumerate().find(|(_, c)| c.len() != n_units) {
            return Err(AlphaError::Shape { unit: r, got: col.len(), raters: n_units });
        }
        let cells = (0..n_units).map(|u| columns.iter().map(|c| c[u]).collect()).collect();
        Self::new(
            (0..n_units).map(|u| format!("u{u}")).collect(),
            (0..columns.len()).map(|r| format!("r{r}")).collect(),
            cells,
        )
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn raters(&self) -> &[String] {
        &self.raters
    }

    pub fn cells(&self) -> &[Vec<Option<Label>>] {
        &self.cells
    }
}

/// Coincidence matrix `o[c][k]` over pairable values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coincidences {
    pub o: [[f64; 2]; 2],
    pub pairable_units: usize,
}

impl Coincidences {
    pub fn marginals(&self) -> [f64; 2] {
        [self.o[0][0] + self.o[0][1], self.o[1][0] + self.o[1][1]]
    }

    pub fn total(&self) -> f64 {
        let [a, b] = self.marginals();
        a + b
    }
}

/// Each unit with `m >= 2` ratings adds its ordered pairs of ratings from
/// different raters, weighted `1 / (m - 1)`.
pub fn coincidences(ratings: &RatingsMatrix) -> Coincidences {
    let mut o = [[0.0; 2]; 2];
    let mut pairable_units = 0;
    for row in &ratings.cells {
        let mut n = [0u64; 2];
        for l in row.iter().flatten() {
            n[l.as_u8() as usize] += 1;
        }
        let m = n[0] + n[1];
        if m < 2 {
            continue;
        }
        pairable_units += 1;
        let w = 1.0 / (m - 1) as f64;
        for c in 0..2 {
            for k in 0..2 {
                let pairs = if c == k { n[c] * n[c].saturating_sub(1) } else { n[c] * n[k] };
                o[c][k] += pairs as f64 * w;
            }
        }
    }
    Coincidences { o, pairable_units }
}

/// `alpha = 1 - D_o / D_e`, with units of fewer than two ratings dropped.
pub fn krippendorff_alpha(ratings: &RatingsMatrix) -> Result<f64, AlphaError> {
    let co = coincidences(ratings);
    if co.pairable_units < 2 {
        return Err(AlphaError::TooFewPairableUnits(co.pairable_units));
    }
    let [n0, n1] = co.marginals();
    let n = n0 + n1;
    let observed = (co.o[0][1] + co.o[1][0]) / n;
    let expected = 2.0 * n0 * n1 / (n * (n - 1.0));
    if expected == 0.0 {
        return Err(AlphaError::DegenerateData);
    }
    Ok(1.0 - observed / expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[u8]) -> Vec<Option<Label>> {
        v.iter().map(|&x| Some(Label::from_u8(x).unwrap())).collect()
    }

    #[test]
    fn perfect_agreement() {
        let a = col(&[0, 1, 0, 1]);
        let m = RatingsMatrix::from_columns(&[a.clone(), a]).unwrap();
        assert_eq!(krippendorff_alpha(&m).unwrap(), 1.0);
    }

    #[test]
    fn worked_example() {
        let m = RatingsMatrix::from_columns(&[col(&[0, 0, 1, 1]), col(&[0, 1, 1, 1])]).unwrap();
        let co = coincidences(&m);
        assert_eq!(co.o, [[2.0, 1.0], [1.0, 4.0]]);
        assert_eq!(co.total(), 8.0);
        assert!((krippendorff_alpha(&m).unwrap() - 8.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_insufficient() {
        let m = RatingsMatrix::from_columns(&[col(&[1, 1, 1]), col(&[1, 1, 1])]).unwrap();
        assert_eq!(krippendorff_alpha(&m), Err(AlphaError::DegenerateData));

        let one_pairable = RatingsMatrix::from_columns(&[
            vec![Some(Label::Positive), None, Some(Label::Negative)],
            vec![Some(Label::Negative), Some(Label::Positive), None],
        ])
        .unwrap();
        assert_eq!(krippendorff_alpha(&one_pairable), Err(AlphaError::TooFewPairableUnits(1)));
        assert_eq!(RatingsMatrix::from_columns(&[col(&[1, 0])]).unwrap_err(), AlphaError::TooFewRaters(1));
    }

    #[test]
    fn systematic_disagreement_is_negative() {
        let m = RatingsMatrix::from_columns(&[col(&[0, 1, 0, 1]), col(&[1, 0, 1, 0])]).unwrap();
        assert!(krippendorff_alpha(&m).unwrap() < 0.0);
    }
}
