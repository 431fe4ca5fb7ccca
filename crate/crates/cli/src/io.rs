//! File formats: the layered edge list, dense per-layer CSVs, covariate
//! tables, label tables and ELBO traces.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context, Result};
use hmpsbm::{CovariateMatrix, MultiplexNetwork};
use ndarray::{Array2, Array3};

/// Parses the edge-list format: a header line `L N`, then one
/// `layer source target` triple per line, all 0-based. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_network<R: Read>(reader: R) -> Result<MultiplexNetwork> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (index, line) in BufReader::new(reader).lines().enumerate() {
        let number = index + 1;
        let line = line.with_context(|| format!("line {number}: unreadable"))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        let parse = |s: &str| s.parse::<usize>().map_err(|_| anyhow!("line {number}: `{s}` is not a non-negative integer"));
        match header {
            None => {
                ensure!(fields.len() == 2, "line {number}: expected the header `L N`, found `{text}`");
                let (l, n) = (parse(fields[0])?, parse(fields[1])?);
                ensure!(l > 0 && n > 0, "line {number}: the network needs at least one layer and one node");
                header = Some((l, n));
            }
            Some((l, n)) => {
                ensure!(fields.len() == 3, "line {number}: expected `layer source target`, found `{text}`");
                let (layer, i, j) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                ensure!(layer < l, "line {number}: layer {layer} out of range (L = {l})");
                ensure!(i < n && j < n, "line {number}: node index out of range (N = {n})");
                ensure!(i != j, "line {number}: self-loop on node {i}");
                edges.push((layer, i, j));
            }
        }
    }
    let (l, n) = header.ok_or_else(|| anyhow!("network file is empty"))?;
    Ok(MultiplexNetwork::from_edges(l, n, edges)?)
}

pub fn read_network(path: &Path) -> Result<MultiplexNetwork> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    parse_network(file).with_context(|| format!("in {}", path.display()))
}

pub fn write_network_to<W: Write>(net: &MultiplexNetwork, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", net.num_layers(), net.num_nodes())?;
    for (l, i, j) in net.edges() {
        writeln!(out, "{l} {i} {j}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_network(net: &MultiplexNetwork, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_network_to(net, BufWriter::new(file))
}

/// One headerless `N × N` 0/1 CSV per layer, in layer order.
pub fn read_dense_layers(paths: &[impl AsRef<Path>]) -> Result<MultiplexNetwork> {
    ensure!(!paths.is_empty(), "no layer files given");
    let mut layers: Vec<Vec<Vec<u8>>> = Vec::with_capacity(paths.len());
    for path in paths {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .with_context(|| format!("cannot open {}", path.display()))?;
        let mut rows = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let record = record.with_context(|| format!("{}: row {}", path.display(), r + 1))?;
            let row = record
                .iter()
                .map(|cell| match cell {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(anyhow!("{}: row {}: `{other}` is not 0 or 1", path.display(), r + 1)),
                })
                .collect::<Result<Vec<u8>>>()?;
            rows.push(row);
        }
        layers.push(rows);
    }
    let n = layers[0].len();
    for (l, rows) in layers.iter().enumerate() {
        ensure!(rows.len() == n, "layer {l} has {} rows, expected {n}", rows.len());
        for (r, row) in rows.iter().enumerate() {
            ensure!(row.len() == n, "layer {l} row {} has {} columns, expected {n}", r + 1, row.len());
        }
    }
    let adjacency = Array3::from_shape_fn((layers.len(), n, n), |(l, i, j)| layers[l][i][j]);
    Ok(MultiplexNetwork::from_dense(&adjacency)?)
}

/// Transformations applied to covariates, in the order listed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct CovariateOptions {
    /// Natural logarithm of every column.
    pub log: bool,
    /// Centre every column and scale it to unit population standard deviation.
    pub zscore: bool,
    /// Append a column of ones.
    pub intercept: bool,
}

/// A covariate table together with what was done to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariates {
    pub matrix: CovariateMatrix<f64>,
    /// Column names, including `intercept` when one was appended.
    pub names: Vec<String>,
    /// Human-readable notes, one per transformation applied.
    pub transformations: Vec<String>,
}

/// Reads a CSV with a header row and numeric cells only.
pub fn parse_covariates<R: Read>(reader: R, options: CovariateOptions) -> Result<Covariates> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut names: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    ensure!(!names.is_empty(), "the covariate header is empty");
    let p = names.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let line = r + 2;
        let record = record.with_context(|| format!("line {line}"))?;
        ensure!(record.len() == p, "line {line}: {} cells, expected {p}", record.len());
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| anyhow!("line {line}, column `{}`: `{cell}` is not a number", names[c]))?;
            ensure!(v.is_finite(), "line {line}, column `{}`: value must be finite", names[c]);
            values.push(v);
        }
        rows += 1;
    }
    ensure!(rows > 0, "the covariate file has no rows");
    let mut x = Array2::from_shape_vec((rows, p), values)?;
    let mut transformations = Vec::new();
    if options.log {
        for (c, mut col) in x.columns_mut().into_iter().enumerate() {
            if let Some(bad) = col.iter().find(|&&v| v <= 0.0) {
                bail!("column `{}` has the non-positive value {bad}, so it cannot be log-transformed", names[c]);
            }
            col.mapv_inplace(f64::ln);
        }
        transformations.push(format!("log: {}", names.join(", ")));
    }
    if options.zscore {
        for (c, mut col) in x.columns_mut().into_iter().enumerate() {
            let mean = col.mean().unwrap();
            let sd = col.std(0.0);
            ensure!(sd > 0.0, "column `{}` is constant, so it cannot be standardized", names[c]);
            col.mapv_inplace(|v| (v - mean) / sd);
        }
        transformations.push(format!("zscore: {}", names.join(", ")));
    }
    let mut matrix = CovariateMatrix::new(x, false)?;
    if options.intercept {
        matrix = matrix.with_intercept();
        names.push("intercept".to_string());
        transformations.push("intercept appended".to_string());
    }
    Ok(Covariates { matrix, names, transformations })
}

pub fn read_covariates(path: &Path, options: CovariateOptions) -> Result<Covariates> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    parse_covariates(file, options).with_context(|| format!("in {}", path.display()))
}

pub fn write_covariates(names: &[String], values: &Array2<f64>, path: &Path) -> Result<()> {
    ensure!(names.len() == values.ncols(), "{} names for {} columns", names.len(), values.ncols());
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(names)?;
    for row in values.rows() {
        w.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Global and per-layer labels of every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    pub global: Vec<usize>,
    /// `L × N`.
    pub layer: Array2<usize>,
}

/// Writes `node,global,layer_0,…,layer_{L−1}`.
pub fn write_labels_to<W: Write>(labels: &Labels, out: W) -> Result<()> {
    let (l, n) = labels.layer.dim();
    ensure!(labels.global.len() == n, "label tables disagree on the number of nodes");
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["node".to_string(), "global".to_string()];
    header.extend((0..l).map(|k| format!("layer_{k}")));
    w.write_record(&header)?;
    for i in 0..n {
        let mut row = vec![i.to_string(), labels.global[i].to_string()];
        row.extend((0..l).map(|k| labels.layer[[k, i]].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_labels(labels: &Labels, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_labels_to(labels, BufWriter::new(file))
}

pub fn parse_labels<R: Read>(reader: R) -> Result<Labels> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = reader.headers()?.clone();
    ensure!(
        header.len() >= 3 && &header[0] == "node" && &header[1] == "global",
        "expected the header `node,global,layer_0,...`"
    );
    let l = header.len() - 2;
    let mut global = Vec::new();
    let mut layer_rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let line = r + 2;
        let record = record.with_context(|| format!("line {line}"))?;
        ensure!(record.len() == l + 2, "line {line}: {} cells, expected {}", record.len(), l + 2);
        let cells = record
            .iter()
            .map(|c| c.parse::<usize>().map_err(|_| anyhow!("line {line}: `{c}` is not a label")))
            .collect::<Result<Vec<_>>>()?;
        ensure!(cells[0] == r, "line {line}: nodes must be listed in order 0, 1, 2, ...");
        global.push(cells[1]);
        layer_rows.push(cells[2..].to_vec());
    }
    let n = global.len();
    ensure!(n > 0, "the label file has no rows");
    let layer = Array2::from_shape_fn((l, n), |(k, i)| layer_rows[i][k]);
    Ok(Labels { global, layer })
}

pub fn read_labels(path: &Path) -> Result<Labels> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    parse_labels(file).with_context(|| format!("in {}", path.display()))
}

/// Writes `iteration,elbo`; iteration 0 is the initial state.
pub fn write_elbo_trace(trace: &[f64], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(["iteration", "elbo"])?;
    for (t, v) in trace.iter().enumerate() {
        w.write_record([t.to_string(), format!("{v:?}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `iteration,seconds` for each sweep. Kept apart from the trace so
/// that the deterministic outputs stay byte-identical across reruns.
pub fn write_timing(seconds: &[f64], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(["iteration", "seconds"])?;
    for (t, s) in seconds.iter().enumerate() {
        w.write_record([(t + 1).to_string(), format!("{s:?}")])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_single_edge() {
        let net = parse_network("2 3\n0 0 1\n".as_bytes()).unwrap();
        assert_eq!((net.num_layers(), net.num_nodes()), (2, 3));
        assert_eq!(net.edges().collect::<Vec<_>>(), vec![(0, 0, 1)]);
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_network("2 3\n0 0 1\n0 1 1\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        let e = parse_network("1 3\n0 0 3\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = parse_network("1 3\n0 x 1\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn intercept_is_appended() {
        let c = parse_covariates("a,b\n1,2\n3,4\n5,6\n".as_bytes(), CovariateOptions { intercept: true, ..Default::default() })
            .unwrap();
        assert_eq!(c.matrix.values().dim(), (3, 3));
        assert_eq!(c.names, ["a", "b", "intercept"]);
        assert!(c.matrix.values().column(2).iter().all(|&v| v == 1.0));
    }
}
