//! Threshold-based neighbour retrieval by cosine similarity and calibration
//! of a model prediction with the neighbours' measured performance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    WeightedMean,
    Mean,
    Median,
}

impl Aggregation {
    pub fn name(self) -> &'static str {
        match self {
            Aggregation::WeightedMean => "weighted_mean",
            Aggregation::Mean => "mean",
            Aggregation::Median => "median",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    MinMaxOnTrain,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    pub threshold: f64,
    pub aggregation: Aggregation,
    pub normalize: Normalization,
}

impl SimilarityConfig {
    pub fn new(threshold: f64, aggregation: Aggregation, normalize: Normalization) -> Result<Self> {
        let c = SimilarityConfig {
            threshold,
            aggregation,
            normalize,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "similarity threshold {} outside [-1, 1]",
                self.threshold
            )));
        }
        Ok(())
    }
}

fn sq_norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum()
}

/// `sqrt(|a|²|b|²)` keeps `cos(a, a)` exactly 1.
fn cosine_from_parts(dot_ab: f64, sq_a: f64, sq_b: f64) -> f64 {
    (dot_ab / (sq_a * sq_b).sqrt()).clamp(-1.0, 1.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `a·b / (|a||b|)` clamped to [-1, 1].
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (na, nb) = (sq_norm(a), sq_norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(cosine_from_parts(dot(a, b), na, nb))
}

/// Per-feature min-max scaling fitted on training vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(train: &[Vec<f64>]) -> Result<Self> {
        let first = train.first().ok_or(Error::EmptyInput("normalisation training set"))?;
        let mut mins = first.clone();
        let mut maxs = first.clone();
        for row in train {
            if row.len() != mins.len() {
                return Err(Error::DimensionMismatch {
                    expected: mins.len(),
                    got: row.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                mins[j] = mins[j].min(*v);
                maxs[j] = maxs[j].max(*v);
            }
        }
        Ok(MinMaxScaler { mins, maxs })
    }

    /// Scales into [0, 1], clipping values outside the training range.
    /// Constant training features map to 0.5.
    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| {
                let span = self.maxs[j] - self.mins[j];
                if span > 0.0 {
                    ((v - self.mins[j]) / span).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            })
            .collect()
    }
}

/// Training vectors and the query scaled with training statistics only.
pub fn normalize_features(train: &[Vec<f64>], query: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let scaler = MinMaxScaler::fit(train)?;
    if query.len() != scaler.mins.len() {
        return Err(Error::DimensionMismatch {
            expected: scaler.mins.len(),
            got: query.len(),
        });
    }
    Ok((train.iter().map(|r| scaler.transform(r)).collect(), scaler.transform(query)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub train_index: usize,
    pub similarity: f64,
    pub performance: f64,
}

/// Neighbours sorted by similarity descending, ties by training index.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NeighborSet {
    pub entries: Vec<Neighbor>,
}

impl NeighborSet {
    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.train_index).collect()
    }
}

/// Training vectors prepared for repeated neighbour queries.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    scaler: Option<MinMaxScaler>,
    rows: Vec<Vec<f64>>,
    sq_norms: Vec<f64>,
    performances: Vec<f64>,
}

impl NeighborIndex {
    pub fn new(train: &[Vec<f64>], performances: &[f64], normalization: Normalization) -> Result<Self> {
        if train.len() != performances.len() {
            return Err(Error::DimensionMismatch {
                expected: train.len(),
                got: performances.len(),
            });
        }
        let scaler = match normalization {
            Normalization::MinMaxOnTrain => Some(MinMaxScaler::fit(train)?),
            Normalization::None => {
                if train.is_empty() {
                    return Err(Error::EmptyInput("neighbour training set"));
                }
                None
            }
        };
        let rows: Vec<Vec<f64>> = match &scaler {
            Some(s) => train.iter().map(|r| s.transform(r)).collect(),
            None => train.to_vec(),
        };
        let norms = rows.iter().map(|r| sq_norm(r)).collect();
        Ok(NeighborIndex {
            scaler,
            rows,
            sq_norms: norms,
            performances: performances.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Similarity of the query to every training row; `None` where either
    /// vector has zero norm after scaling.
    pub fn similarities(&self, query: &[f64]) -> Result<Vec<Option<f64>>> {
        let dim = self.rows[0].len();
        if query.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: query.len(),
            });
        }
        let q = match &self.scaler {
            Some(s) => s.transform(query),
            None => query.to_vec(),
        };
        let nq = sq_norm(&q);
        Ok(self
            .rows
            .iter()
            .zip(&self.sq_norms)
            .map(|(r, nr)| (nq > 0.0 && *nr > 0.0).then(|| cosine_from_parts(dot(r, &q), nq, *nr)))
            .collect())
    }

    /// Every training row with similarity at or above `threshold`.
    pub fn query(&self, query: &[f64], threshold: f64) -> Result<NeighborSet> {
        let mut entries: Vec<Neighbor> = self
            .similarities(query)?
            .into_iter()
            .enumerate()
            .filter_map(|(i, s)| {
                s.filter(|s| *s >= threshold).map(|similarity| Neighbor {
                    train_index: i,
                    similarity,
                    performance: self.performances[i],
                })
            })
            .collect();
        entries.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then(a.train_index.cmp(&b.train_index)));
        Ok(NeighborSet { entries })
    }
}

/// Neighbours of `query` among `train` rows paired with their performance.
pub fn find_neighbors(query: &[f64], train: &[(Vec<f64>, f64)], config: &SimilarityConfig) -> Result<NeighborSet> {
    let (x, p): (Vec<Vec<f64>>, Vec<f64>) = train.iter().cloned().unzip();
    NeighborIndex::new(&x, &p, config.normalize)?.query(query, config.threshold)
}

/// Aggregated neighbour performance. Weighted-mean weights are the
/// similarities clipped at 0, falling back to the plain mean if they sum to 0.
pub fn aggregate(neighbors: &NeighborSet, method: Aggregation) -> Result<f64> {
    if neighbors.is_empty() {
        return Err(Error::NoNeighbors);
    }
    let p: Vec<f64> = neighbors.entries.iter().map(|e| e.performance).collect();
    Ok(match method {
        Aggregation::Mean => stats::mean(&p),
        Aggregation::Median => stats::median(&p),
        Aggregation::WeightedMean => {
            let (num, den) = neighbors.entries.iter().fold((0.0, 0.0), |(n, d), e| {
                let w = e.similarity.max(0.0);
                (n + w * e.performance, d + w)
            });
            if den > 0.0 {
                num / den
            } else {
                stats::mean(&p)
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedPrediction {
    pub raw_prediction: f64,
    pub aggregated_neighbor_value: Option<f64>,
    #[serde(rename = "final")]
    pub final_prediction: f64,
    pub neighbor_count: usize,
}

/// Averages the model prediction with the aggregated neighbour value, or
/// keeps the model prediction when there are no neighbours.
pub fn calibrate(raw: f64, neighbors: &NeighborSet, method: Aggregation) -> CalibratedPrediction {
    match aggregate(neighbors, method) {
        Ok(agg) => CalibratedPrediction {
            raw_prediction: raw,
            aggregated_neighbor_value: Some(agg),
            final_prediction: (raw + agg) / 2.0,
            neighbor_count: neighbors.k(),
        },
        Err(_) => CalibratedPrediction {
            raw_prediction: raw,
            aggregated_neighbor_value: None,
            final_prediction: raw,
            neighbor_count: 0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pairs: &[(f64, f64)]) -> NeighborSet {
        NeighborSet {
            entries: pairs
                .iter()
                .enumerate()
                .map(|(i, &(similarity, performance))| Neighbor {
                    train_index: i,
                    similarity,
                    performance,
                })
                .collect(),
        }
    }

    #[test]
    fn cosine_basics() {
        assert_eq!(cosine_similarity(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[0.3, 0.7, 0.1], &[0.3, 0.7, 0.1]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        assert!((cosine_similarity(&[1.0, 2.0, 3.0], &[7.0, 14.0, 21.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 1.0], &[-1.0, -1.0]).unwrap(), -1.0);
        assert!(matches!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroNorm)));
        assert!(cosine_similarity(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn min_max_examples() {
        let train = vec![vec![0.0, 3.0], vec![10.0, 3.0]];
        let (_, q) = normalize_features(&train, &[5.0, 9.0]).unwrap();
        assert_eq!(q, vec![0.5, 0.5]);
        let (t, q) = normalize_features(&train, &[20.0, 3.0]).unwrap();
        assert_eq!(q, vec![1.0, 0.5]);
        assert_eq!(t, vec![vec![0.0, 0.5], vec![1.0, 0.5]]);
        assert!(normalize_features(&[], &[1.0]).is_err());
    }

    fn train() -> Vec<(Vec<f64>, f64)> {
        vec![
            (vec![1.0, 0.0, 0.0], 1.0),
            (vec![0.0, 1.0, 0.0], 2.0),
            (vec![0.0, 0.0, 1.0], 3.0),
            (vec![1.0, 1.0, 0.0], 4.0),
        ]
    }

    fn cfg(threshold: f64) -> SimilarityConfig {
        SimilarityConfig {
            threshold,
            aggregation: Aggregation::WeightedMean,
            normalize: Normalization::None,
        }
    }

    #[test]
    fn threshold_extremes() {
        let q = [0.3, 0.2, 0.1];
        assert_eq!(find_neighbors(&q, &train(), &cfg(-1.0)).unwrap().k(), 4);
        assert!(find_neighbors(&q, &train(), &cfg(1.0 + 1e-9)).unwrap().is_empty());
    }

    #[test]
    fn exact_duplicate_is_sole_high_neighbor() {
        let n = find_neighbors(&[0.0, 1.0, 0.0], &train(), &cfg(0.9999)).unwrap();
        assert_eq!(n.indices(), vec![1]);
        assert_eq!(n.entries[0].similarity, 1.0);
        assert_eq!(n.entries[0].performance, 2.0);
    }

    #[test]
    fn sorted_descending_ties_by_index() {
        // [1,1,0] is equally similar to the first two unit vectors
        let n = find_neighbors(&[1.0, 1.0, 0.0], &train(), &cfg(0.5)).unwrap();
        assert_eq!(n.indices(), vec![3, 0, 1]);
    }

    #[test]
    fn threshold_equality_included() {
        let n = find_neighbors(&[1.0, 0.0, 0.0], &train(), &cfg(0.0)).unwrap();
        assert_eq!(n.k(), 4);
        let s = n.entries.iter().find(|e| e.train_index == 1).unwrap().similarity;
        assert_eq!(s, 0.0);
    }

    #[test]
    fn zero_vectors_never_match() {
        let mut t = train();
        t.push((vec![0.0, 0.0, 0.0], 9.0));
        let n = find_neighbors(&[1.0, 0.0, 0.0], &t, &cfg(-1.0)).unwrap();
        assert!(!n.indices().contains(&4));
        assert!(find_neighbors(&[0.0; 3], &t, &cfg(-1.0)).unwrap().is_empty());
    }

    #[test]
    fn aggregation_examples() {
        for m in [Aggregation::WeightedMean, Aggregation::Mean, Aggregation::Median] {
            assert_eq!(aggregate(&set(&[(0.7, 4.5)]), m).unwrap(), 4.5);
        }
        assert_eq!(aggregate(&set(&[(0.5, 0.0), (1.0, 3.0)]), Aggregation::WeightedMean).unwrap(), 2.0);
        assert_eq!(
            aggregate(&set(&[(1.0, 1.0), (1.0, 2.0), (1.0, 100.0)]), Aggregation::Median).unwrap(),
            2.0
        );
        assert!(matches!(aggregate(&set(&[]), Aggregation::Mean), Err(Error::NoNeighbors)));
    }

    #[test]
    fn nonpositive_weights_fall_back_to_mean() {
        let s = set(&[(-0.5, 1.0), (0.0, 3.0)]);
        assert_eq!(aggregate(&s, Aggregation::WeightedMean).unwrap(), 2.0);
    }

    #[test]
    fn calibration_examples() {
        let c = calibrate(2.0, &set(&[]), Aggregation::WeightedMean);
        assert_eq!(c.final_prediction, 2.0);
        assert_eq!(c.neighbor_count, 0);
        assert_eq!(c.aggregated_neighbor_value, None);
        let c = calibrate(1.0, &set(&[(0.5, 0.0), (1.0, 3.0)]), Aggregation::WeightedMean);
        assert_eq!(c.aggregated_neighbor_value, Some(2.0));
        assert_eq!(c.final_prediction, 1.5);
        assert_eq!(c.neighbor_count, 2);
    }

    #[test]
    fn config_threshold_range() {
        assert!(SimilarityConfig::new(0.9, Aggregation::Mean, Normalization::None).is_ok());
        assert!(SimilarityConfig::new(1.1, Aggregation::Mean, Normalization::None).is_err());
    }

    #[test]
    fn serialized_names() {
        assert_eq!(serde_json::to_string(&Aggregation::WeightedMean).unwrap(), "\"weighted_mean\"");
        assert_eq!(
            serde_json::to_string(&Normalization::MinMaxOnTrain).unwrap(),
            "\"min_max_on_train\""
        );
        let c = calibrate(1.0, &set(&[]), Aggregation::Mean);
        assert!(serde_json::to_string(&c).unwrap().contains("\"final\":1.0"));
    }
}
