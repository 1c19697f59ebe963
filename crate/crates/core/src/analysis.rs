//! Descriptive analyses over ratings, demographics, and the latent space:
//! preference-by-age cross tabs, the neighborhood hotness statistic, and
//! 2-D exports of factor matrices for plotting.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, sym_eigen, Mat};
use crate::similarity::SimilarityGraph;
use crate::types::{RatingMatrix, RatingScale};

/// Age and group label of one subject; either side may be unknown.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Subject {
    pub age: Option<f64>,
    pub group: Option<u32>,
}

/// Demographics for the rater and item populations, indexed densely.
#[derive(Debug, Clone, PartialEq)]
pub struct DemographicTable {
    pub raters: Vec<Subject>,
    pub items: Vec<Subject>,
}

impl DemographicTable {
    pub fn new(raters: Vec<Subject>, items: Vec<Subject>) -> Self {
        DemographicTable { raters, items }
    }

    pub fn check_alignment(&self, ratings: &RatingMatrix) -> Result<()> {
        if self.raters.len() != ratings.num_raters() {
            return Err(Error::DimensionMismatch {
                expected: ratings.num_raters(),
                got: self.raters.len(),
                context: "rater demographics",
            });
        }
        if self.items.len() != ratings.num_items() {
            return Err(Error::DimensionMismatch {
                expected: ratings.num_items(),
                got: self.items.len(),
                context: "item demographics",
            });
        }
        Ok(())
    }
}

/// Fraction of positive binary ratings each item received; `None` for
/// items with no ratings.
pub fn item_hotness(ratings: &RatingMatrix) -> Result<Vec<Option<f64>>> {
    if ratings.scale() != RatingScale::Binary {
        return Err(Error::DegenerateInput { context: "hotness needs binary ratings" });
    }
    let mut positive = vec![0usize; ratings.num_items()];
    let mut total = vec![0usize; ratings.num_items()];
    for t in ratings.triplets() {
        total[t.item as usize] += 1;
        if t.value > 0.0 {
            positive[t.item as usize] += 1;
        }
    }
    Ok(total
        .iter()
        .zip(&positive)
        .map(|(&t, &p)| if t == 0 { None } else { Some(p as f64 / t as f64) })
        .collect())
}

/// Cross tabulation of positive-rating percentages by age bin.
#[derive(Debug, Clone, PartialEq)]
pub struct AgePreferenceTable {
    pub bin_edges: Vec<f64>,
    /// `positive_pct[i][j]`: percentage of positive ratings from rater bin
    /// `i` toward item bin `j`; `None` marks an empty cell.
    pub positive_pct: Vec<Vec<Option<f64>>>,
    pub counts: Vec<Vec<usize>>,
    /// Ratings whose rater or item age fell outside the binning.
    pub out_of_range: usize,
}

fn bin_of(age: f64, edges: &[f64]) -> Option<usize> {
    let last = edges.len() - 1;
    for i in 0..last {
        // half-open bins, except the last which includes its upper edge
        if age >= edges[i] && (age < edges[i + 1] || (i == last - 1 && age == edges[i + 1])) {
            return Some(i);
        }
    }
    None
}

/// Positive-rate percentage from each rater age bin toward each item age
/// bin. Every rated pair must have demographics; empty cells are marked
/// missing rather than zero.
pub fn preference_by_age(
    ratings: &RatingMatrix,
    demo: &DemographicTable,
    bin_edges: &[f64],
) -> Result<AgePreferenceTable> {
    if ratings.scale() != RatingScale::Binary {
        return Err(Error::DegenerateInput { context: "preference table needs binary ratings" });
    }
    demo.check_alignment(ratings)?;
    if bin_edges.len() < 2 || bin_edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid(alloc::string::String::from(
            "age bin edges must be strictly increasing with at least two entries",
        )));
    }
    let bins = bin_edges.len() - 1;
    let mut positive = vec![vec![0usize; bins]; bins];
    let mut counts = vec![vec![0usize; bins]; bins];
    let mut out_of_range = 0;

    for t in ratings.triplets() {
        let rater_age = demo.raters[t.rater as usize].age.ok_or(Error::DegenerateInput {
            context: "rating by a rater with unknown age",
        })?;
        let item_age = demo.items[t.item as usize].age.ok_or(Error::DegenerateInput {
            context: "rating toward an item with unknown age",
        })?;
        match (bin_of(rater_age, bin_edges), bin_of(item_age, bin_edges)) {
            (Some(i), Some(j)) => {
                counts[i][j] += 1;
                if t.value > 0.0 {
                    positive[i][j] += 1;
                }
            }
            _ => out_of_range += 1,
        }
    }

    let positive_pct = counts
        .iter()
        .zip(&positive)
        .map(|(crow, prow)| {
            crow.iter()
                .zip(prow)
                .map(|(&c, &p)| if c == 0 { None } else { Some(100.0 * p as f64 / c as f64) })
                .collect()
        })
        .collect();

    Ok(AgePreferenceTable { bin_edges: bin_edges.to_vec(), positive_pct, counts, out_of_range })
}

/// For each neighborhood size, the percentage of subjects whose
/// `n`-nearest-neighbor mean hotness strictly exceeds their own.
///
/// The graph decides the similarity space: build it from raw features or
/// from latent factors to get the two variants. Ties count as not hotter.
pub fn hotness_paradox_curve(
    hotness: &[f64],
    graph: &SimilarityGraph,
    sizes: &[usize],
) -> Result<Vec<f64>> {
    let n_subjects = hotness.len();
    if graph.num_items() != n_subjects {
        return Err(Error::DimensionMismatch {
            expected: n_subjects,
            got: graph.num_items(),
            context: "hotness paradox graph",
        });
    }
    let mut out = Vec::with_capacity(sizes.len());
    for &size in sizes {
        if size == 0 || size >= n_subjects {
            return Err(Error::Invalid(alloc::format!(
                "neighborhood size {size} must be in [1, {})",
                n_subjects
            )));
        }
        let mut hotter = 0usize;
        for subject in 0..n_subjects {
            let neighbors = graph.neighbors(subject);
            if neighbors.len() < size {
                return Err(Error::Invalid(alloc::format!(
                    "graph stores only {} neighbors for subject {subject}, need {size}",
                    neighbors.len()
                )));
            }
            let mean: f64 =
                neighbors[..size].iter().map(|&(g, _)| hotness[g]).sum::<f64>() / size as f64;
            if mean > hotness[subject] {
                hotter += 1;
            }
        }
        out.push(100.0 * hotter as f64 / n_subjects as f64);
    }
    Ok(out)
}

/// One exported point with its optional label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentPoint {
    pub x: f64,
    pub y: f64,
    pub label: Option<f64>,
}

/// Projects factor vectors (one per row) onto their first two principal
/// components, with the same sign convention as the feature PCA.
pub fn export_latent_2d(factors: &Mat, labels: Option<&[f64]>) -> Result<Vec<LatentPoint>> {
    let n = factors.rows();
    let d = factors.cols();
    if n < 3 {
        return Err(Error::NotEnoughData { context: "latent 2-D export", needed: 3, got: n });
    }
    if let Some(l) = labels {
        if l.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: l.len(),
                context: "latent export labels",
            });
        }
    }

    let mut mean = vec![0.0; d];
    for r in 0..n {
        for (m, x) in mean.iter_mut().zip(factors.row(r)) {
            *m += x / n as f64;
        }
    }
    let mut cov = Mat::zeros(d, d);
    for r in 0..n {
        let row = factors.row(r);
        for a in 0..d {
            let ca = row[a] - mean[a];
            for b in 0..d {
                let v = cov.get(a, b) + ca * (row[b] - mean[b]) / (n - 1) as f64;
                cov.set(a, b, v);
            }
        }
    }
    let (vals, vecs) = sym_eigen(&cov);
    if vals.iter().all(|&l| l.max(0.0) == 0.0) {
        return Err(Error::DegenerateInput { context: "rank-0 factor matrix" });
    }
    let take = 2.min(d);
    let mut basis = Mat::zeros(take, d);
    for c in 0..take {
        basis.row_mut(c).copy_from_slice(vecs.row(c));
    }
    crate::pca::fix_signs(&mut basis);

    let points = (0..n)
        .map(|r| {
            let centered: Vec<f64> =
                factors.row(r).iter().zip(&mean).map(|(x, m)| x - m).collect();
            LatentPoint {
                x: dot(basis.row(0), &centered),
                y: if take > 1 { dot(basis.row(1), &centered) } else { 0.0 },
                label: labels.map(|l| l[r]),
            }
        })
        .collect();
    Ok(points)
}
