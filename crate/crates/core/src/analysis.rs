//! Per-neuron map layers (U-matrix, hits, component planes, target
//! statistics, reliability scores, ranks, classes) and ring-based sample
//! collection around a query's best-matching unit.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::data::Dataset;
use crate::error::{Result, SomError};
use crate::grid::{GridTopology, NeuronCoord};
use crate::som::SomModel;

/// One optional value per neuron. `None` marks a neuron without data.
#[derive(Debug, Clone, PartialEq)]
pub struct MapLayer {
    topo: GridTopology,
    values: Vec<Option<f64>>,
    label: String,
}

impl MapLayer {
    pub fn new(topo: GridTopology, values: Vec<Option<f64>>, label: impl Into<String>) -> Result<Self> {
        if values.len() != topo.len() {
            return Err(SomError::Shape {
                expected: topo.len(),
                actual: values.len(),
            });
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SomError::Input("map layer values must be finite".into()));
        }
        Ok(Self {
            topo,
            values,
            label: label.into(),
        })
    }

    fn dense(topo: GridTopology, values: Vec<f64>, label: &str) -> Self {
        Self {
            topo,
            values: values.into_iter().map(Some).collect(),
            label: label.to_string(),
        }
    }

    pub fn topology(&self) -> &GridTopology {
        &self.topo
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn get(&self, c: NeuronCoord) -> Result<Option<f64>> {
        Ok(self.values[self.topo.index(c)?])
    }

    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    /// `(min, max)` over present values.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.present().fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    /// `row,col,value` with an empty value for absent neurons.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "row,col,value")?;
        for (c, v) in self.topo.coords().zip(&self.values) {
            match v {
                Some(v) => writeln!(w, "{},{},{}", c.row, c.col, v)?,
                None => writeln!(w, "{},{},", c.row, c.col)?,
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parses [`MapLayer::write_csv`] output for a known topology.
    pub fn read_csv<R: Read>(topo: GridTopology, label: &str, r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut values = vec![None; topo.len()];
        let mut seen = vec![false; topo.len()];
        for (i, rec) in rdr.records().enumerate() {
            let bad = |msg: String| SomError::Input(format!("map layer csv row {}: {msg}", i + 1));
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() != 3 {
                return Err(bad(format!("expected 3 fields, got {}", rec.len())));
            }
            let row: usize = rec[0].parse().map_err(|_| bad(format!("bad row '{}'", &rec[0])))?;
            let col: usize = rec[1].parse().map_err(|_| bad(format!("bad col '{}'", &rec[1])))?;
            let idx = topo.index(NeuronCoord::new(row, col))?;
            if seen[idx] {
                return Err(bad(format!("duplicate cell ({row}, {col})")));
            }
            seen[idx] = true;
            values[idx] = match rec[2].trim() {
                "" => None,
                s => Some(s.parse().map_err(|_| bad(format!("bad value '{s}'")))?),
            };
        }
        if seen.iter().any(|s| !s) {
            return Err(SomError::Input("map layer csv does not cover every neuron".into()));
        }
        MapLayer::new(topo, values, label)
    }
}

/// Sample indices grouped by best-matching unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeuronBuffer {
    topo: GridTopology,
    buckets: Vec<Vec<usize>>,
    n_samples: usize,
}

impl NeuronBuffer {
    pub fn topology(&self) -> &GridTopology {
        &self.topo
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn samples(&self, c: NeuronCoord) -> Result<&[usize]> {
        Ok(&self.buckets[self.topo.index(c)?])
    }

    /// Buckets in row-major neuron order.
    pub fn buckets(&self) -> &[Vec<usize>] {
        &self.buckets
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_samples {
            return Err(SomError::Shape {
                expected: self.n_samples,
                actual: len,
            });
        }
        Ok(())
    }
}

pub fn assign(model: &SomModel, data: &Dataset) -> Result<NeuronBuffer> {
    let topo = *model.topology();
    let bmus = model.predict_bmus(data)?;
    let mut buckets = vec![Vec::new(); topo.len()];
    for (s, c) in bmus.into_iter().enumerate() {
        buckets[topo.index(c)?].push(s);
    }
    Ok(NeuronBuffer {
        topo,
        buckets,
        n_samples: data.len(),
    })
}

/// Mean feature-space distance from each neuron to its first-ring neighbors.
pub fn u_matrix(model: &SomModel) -> MapLayer {
    let topo = *model.topology();
    let metric = model.metric();
    let values = topo
        .coords()
        .enumerate()
        .map(|(i, c)| {
            let ring = topo.ring_unchecked(c, 1);
            if ring.is_empty() {
                return Some(0.0);
            }
            let w = model.neuron(i);
            let total: f64 = ring
                .iter()
                .map(|&q| metric.distance_unchecked(w, model.neuron(q.row * topo.cols() + q.col)))
                .sum();
            let mean = total / ring.len() as f64;
            // cosine against a zero weight vector is undefined
            mean.is_finite().then_some(mean)
        })
        .collect();
    MapLayer {
        topo,
        values,
        label: "umatrix".into(),
    }
}

pub fn hit_map(buffer: &NeuronBuffer) -> MapLayer {
    let counts = buffer.buckets.iter().map(|b| b.len() as f64).collect();
    MapLayer::dense(buffer.topo, counts, "hit")
}

pub fn component_plane(model: &SomModel, feature: usize) -> Result<MapLayer> {
    if feature >= model.dim() {
        return Err(SomError::IndexOutOfRange {
            index: feature,
            limit: model.dim(),
        });
    }
    let values = (0..model.n_neurons()).map(|i| model.neuron(i)[feature]).collect();
    Ok(MapLayer::dense(*model.topology(), values, &format!("component_{feature}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stat {
    Mean,
    /// Population standard deviation.
    Std,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt(), n)
}

pub fn metric_map(buffer: &NeuronBuffer, targets: &[f64], stat: Stat) -> Result<MapLayer> {
    buffer.check_len(targets.len())?;
    let values = buffer
        .buckets
        .iter()
        .map(|b| {
            if b.is_empty() {
                return None;
            }
            let (mean, std, _) = mean_std(b.iter().map(|&i| targets[i]));
            Some(match stat {
                Stat::Mean => mean,
                Stat::Std => std,
            })
        })
        .collect();
    let label = match stat {
        Stat::Mean => "metric_mean",
        Stat::Std => "metric_std",
    };
    MapLayer::new(buffer.topo, values, label)
}

/// Reliability score `(std / sqrt(n)) * ln(N / n)` per populated neuron.
/// Lower is better: tight targets on well-populated neurons.
pub fn score_map(buffer: &NeuronBuffer, targets: &[f64]) -> Result<MapLayer> {
    buffer.check_len(targets.len())?;
    let total = buffer.n_samples as f64;
    let values = buffer
        .buckets
        .iter()
        .map(|b| {
            if b.is_empty() {
                return None;
            }
            let (_, std, n) = mean_std(b.iter().map(|&i| targets[i]));
            let n = n as f64;
            Some(std / n.sqrt() * (total / n).ln())
        })
        .collect();
    MapLayer::new(buffer.topo, values, "score")
}

/// Competition ranks (1 = smallest) of the present values; ties share the
/// lower rank.
pub fn rank_map(layer: &MapLayer) -> MapLayer {
    let mut sorted: Vec<f64> = layer.present().collect();
    sorted.sort_by(f64::total_cmp);
    let values = layer
        .values
        .iter()
        .map(|v| v.map(|v| (sorted.partition_point(|&s| s < v) + 1) as f64))
        .collect();
    MapLayer {
        topo: layer.topo,
        values,
        label: "rank".into(),
    }
}

/// Modal label per neuron, ties to the smallest label.
pub fn classification_map(buffer: &NeuronBuffer, labels: &[usize]) -> Result<MapLayer> {
    buffer.check_len(labels.len())?;
    let values = buffer
        .buckets
        .iter()
        .map(|b| {
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for &i in b {
                *counts.entry(labels[i]).or_default() += 1;
            }
            // max_by keeps the last maximum; iterate labels descending so the
            // smallest label wins ties.
            counts
                .iter()
                .rev()
                .max_by_key(|(_, &n)| n)
                .map(|(&label, _)| label as f64)
        })
        .collect();
    MapLayer::new(buffer.topo, values, "classification")
}

/// Samples gathered around a query.
#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    pub bmu: NeuronCoord,
    /// Sample indices, nearest to the query first.
    pub indices: Vec<usize>,
    /// Query-to-sample distances under the model metric, aligned with `indices`.
    pub distances: Vec<f64>,
    /// Outermost ring order included.
    pub order: usize,
    /// Fewer than the requested number of samples were found within
    /// `max_order` rings.
    pub shortfall: bool,
}

pub const DEFAULT_MAX_ORDER: usize = 3;

/// Pools buffered samples ring by ring around the query's BMU (order 0 is
/// the BMU itself), stopping after the first ring that brings the pool to
/// `min_samples`. Whole rings are always taken.
pub fn collect_sample(
    model: &SomModel,
    buffer: &NeuronBuffer,
    data: &Dataset,
    query: &[f64],
    min_samples: usize,
    max_order: usize,
) -> Result<Collection> {
    if min_samples == 0 {
        return Err(SomError::Parameter("min_samples must be >= 1".into()));
    }
    buffer.check_len(data.len())?;
    if buffer.topo != *model.topology() {
        return Err(SomError::Input("buffer was built for a different grid".into()));
    }
    if query.len() != model.dim() {
        return Err(SomError::Shape {
            expected: model.dim(),
            actual: query.len(),
        });
    }
    model.check_data(data)?;
    let probe = Dataset::new(query.to_vec(), model.dim())?;
    model.check_data(&probe)?;

    let topo = *model.topology();
    let (bmu_idx, _) = model.bmu_index(query);
    let bmu = topo.coord_unchecked(bmu_idx);
    let mut pool: Vec<usize> = buffer.buckets[bmu_idx].clone();
    let mut order = 0;
    while pool.len() < min_samples && order < max_order {
        order += 1;
        for c in topo.ring_unchecked(bmu, order) {
            pool.extend_from_slice(&buffer.buckets[c.row * topo.cols() + c.col]);
        }
    }
    let metric = model.metric();
    let mut scored: Vec<(f64, usize)> = pool
        .into_iter()
        .map(|i| (metric.distance_unchecked(query, data.row(i)), i))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(Collection {
        bmu,
        shortfall: scored.len() < min_samples,
        indices: scored.iter().map(|s| s.1).collect(),
        distances: scored.iter().map(|s| s.0).collect(),
        order,
    })
}

impl Collection {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "rank,sample,distance,order,shortfall")?;
        for (rank, (i, d)) in self.indices.iter().zip(&self.distances).enumerate() {
            writeln!(w, "{},{},{},{},{}", rank + 1, i, d, self.order, self.shortfall)?;
        }
        Ok(())
    }
}

/// Compares two layers' presence patterns.
pub fn same_presence(a: &MapLayer, b: &MapLayer) -> bool {
    a.values.len() == b.values.len()
        && a.values.iter().zip(&b.values).all(|(x, y)| x.is_some() == y.is_some())
}
